"""
Parsing helpers for the `name:key=value,...` specs used on the command line.
"""
from typing import Dict, Tuple

from fgcalc.errors import UsageError

INVALID_NUMBER_MSG: str = "Cannot parse '{text}' as a number (expected re[+imi])."
INVALID_ASSIGNMENT_MSG: str = "Expected key=value, got '{text}'."


def parse_complex(text: str) -> complex:
    """Parse `re[+imi]`, e.g. `0.3`, `-0.2+0.5i`, `0.5i`."""
    cleaned = text.strip().replace(" ", "")
    if not cleaned:
        raise UsageError(INVALID_NUMBER_MSG.format(text=text))
    try:
        return complex(cleaned.replace("i", "j"))
    except ValueError as e:
        raise UsageError(INVALID_NUMBER_MSG.format(text=text)) from e


def parse_assignments(text: str) -> Dict[str, complex]:
    values: Dict[str, complex] = {}
    for chunk in filter(None, (part.strip() for part in text.split(","))):
        if "=" not in chunk:
            raise UsageError(INVALID_ASSIGNMENT_MSG.format(text=chunk))
        key, raw = chunk.split("=", 1)
        values[key.strip()] = parse_complex(raw)
    return values


def split_spec(text: str) -> Tuple[str, str]:
    """Split `name:rest` into its two halves; `rest` is empty when absent."""
    name, _, rest = text.strip().partition(":")
    return name.strip(), rest.strip()

