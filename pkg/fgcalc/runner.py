# runner.py

import csv
import os
from pathlib import Path
from typing import Callable, Dict, List, Literal, Optional, Union

from dotenv import load_dotenv
from loguru import logger
from mpmath import mp
from pydantic import BaseModel, Field

from fgcalc.cli import DEFAULT_MAX_ORDER, DEFAULT_NODES, DEFAULT_PARAMS, DEFAULT_SAMPLES, RunConfig
from fgcalc.errors import FGError
from fgcalc.fgdiff import fg_difference, fg_difference_recursive
from fgcalc.fgexpand import ExpansionReport, ExpansionSpec, expand
from fgcalc.fginv import InversionReport, build_pair, verify_pair
from fgcalc.fgkernel import (
    AntisymmetryReport,
    KernelReport,
    builtin_pairs,
    check_antisymmetry,
    check_kernel,
    pair_by_name,
)
from fgcalc.functions import parse_function
from fgcalc.identities import CorpusReport, run_corpus
from fgcalc.nodes import node_system

# Configure logger
logger.add("logs/fg.log", rotation="1 day", retention="7 days", level="DEBUG")

load_dotenv()

# Parameters the pair-dependent built-ins are checked at when no pair is named
KERNEL_CHECK_PARAMS: Dict[str, complex] = {"a": 0.2, "b": 0.1, "q": 0.4}
DOMAIN_EXIT_CODE: int = 3


# ========= Structured output definition =========
class DiffReport(BaseModel):
    type: Literal["diff"] = "diff"
    function: str = Field(..., description="Target function spec")
    pair: str = Field(..., description="Pair label")
    order: int = Field(..., description="Difference order n")
    value: complex = Field(..., description="n-th (f,g)-difference at b_0")
    method: str = Field(..., description="Evaluation route")
    condition: float = Field(..., description="sum |terms| / |sum|")
    precision: int = Field(..., description="Working digits used")
    passed: bool = Field(True, description="Differences have no pass criterion of their own")

    def format_message(self) -> str:
        return (
            f"D^{self.order} {self.function} on {self.pair}: {self.value} "
            f"({self.method}, condition {self.condition:.3g})"
        )


class InvertReport(BaseModel):
    type: Literal["invert"] = "invert"
    label: str = Field(..., description="Pair label")
    size: int = Field(..., description="Matrix dimension")
    precision: int = Field(..., description="Working digits the entries were built at")
    B: List[List[complex]] = Field(..., description="Lower triangle of B, row by row")
    Binv: List[List[complex]] = Field(..., description="Lower triangle of the inverse, row by row")
    verification: Optional[InversionReport] = Field(None, description="Present with --verify")

    @property
    def passed(self) -> bool:
        return self.verification is None or self.verification.passed

    def format_message(self) -> str:
        if self.verification is not None:
            return self.verification.format_message()
        return f"inversion {self.label} size {self.size} built at {self.precision} digits"


class KernelCheckReport(BaseModel):
    type: Literal["kernel_check"] = "kernel_check"
    kernels: List[KernelReport] = Field(..., description="Three-term identity, one per pair")
    antisymmetry: List[AntisymmetryReport] = Field(..., description="g(x,y) + g(y,x), one per pair")
    passed: bool = Field(..., description="Every kernel and every deciding antisymmetry check passed")

    def format_message(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        failed = [k.pair for k in self.kernels if not k.passed]
        suffix = f" (failed: {', '.join(failed)})" if failed else ""
        return f"[{verdict}] kernel check over {len(self.kernels)} pair(s){suffix}"


class RunOutput(BaseModel):
    command: str = Field(..., description="Subcommand that produced the report")
    exit_code: int = Field(..., description="Process exit status")
    report: Union[DiffReport, InvertReport, ExpansionReport, CorpusReport, KernelCheckReport] = Field(
        ..., discriminator="type"
    )


# ========= Subcommands =========
def run_diff(config: RunConfig) -> DiffReport:
    function = parse_function(config.function)
    pair = pair_by_name(config.pair)
    system = node_system(pair, config.nodes, config.params)
    compute = fg_difference_recursive if config.method == "recursive" else fg_difference
    result = compute(function.F, system, config.order)
    return DiffReport(
        function=config.function,
        pair=pair.label(),
        order=result.order,
        value=result.value,
        method=result.method,
        condition=result.condition_estimate,
        precision=result.precision,
    )


def _lower_triangle(matrix) -> List[List[complex]]:
    return [[complex(matrix[n][k]) for k in range(n + 1)] for n in range(matrix.shape[0])]


def run_invert(config: RunConfig) -> InvertReport:
    pair = pair_by_name(config.pair)
    tp = build_pair(node_system(pair, config.nodes, config.params), config.size)
    verification = None
    if config.verify:
        verification = verify_pair(tp) if config.tolerance is None else verify_pair(tp, config.tolerance)
    return InvertReport(
        label=pair.label(),
        size=tp.size,
        precision=tp.precision,
        B=_lower_triangle(tp.B),
        Binv=_lower_triangle(tp.Binv),
        verification=verification,
    )


def run_expand(config: RunConfig) -> ExpansionReport:
    function = parse_function(config.function)
    system = node_system(pair_by_name(config.pair), config.nodes, config.params)
    spec = ExpansionSpec(F=function.F, sys=system, max_order=config.max_order, eval_points=[config.probe])
    return expand(spec, config.probe)


def run_corpus_command(config: RunConfig) -> CorpusReport:
    return run_corpus(
        case_ids=config.cases or None,
        sweep=config.trials,
        seed=config.seed,
        workers=config.workers,
        overrides=config.overrides or None,
    )


def run_kernel_check(config: RunConfig) -> KernelCheckReport:
    pairs = [pair_by_name(config.pair)] if config.pair else builtin_pairs(KERNEL_CHECK_PARAMS)
    kernels = [check_kernel(pair, config.samples, config.seed, config.tolerance) for pair in pairs]
    antisymmetry = [check_antisymmetry(pair, seed=config.seed) for pair in pairs]
    passed = all(k.passed for k in kernels) and all(a.passed or a.informational for a in antisymmetry)
    return KernelCheckReport(kernels=kernels, antisymmetry=antisymmetry, passed=passed)


HANDLERS: Dict[str, Callable[[RunConfig], BaseModel]] = {
    "diff": run_diff,
    "invert": run_invert,
    "expand": run_expand,
    "corpus": run_corpus_command,
    "kernel-check": run_kernel_check,
}


# ========= Output =========
def _csv_rows(report: BaseModel) -> List[Dict[str, object]]:
    if isinstance(report, ExpansionReport):
        return [
            {
                "n": row.n,
                "re_G": row.coefficient.real,
                "im_G": row.coefficient.imag,
                "abs_lambda": "" if row.lambda_ratio is None else abs(row.lambda_ratio),
                "probe_error": row.probe_error,
                "interpolation_residual": row.interpolation_residual,
            }
            for row in report.rows
        ]
    if isinstance(report, CorpusReport):
        return [
            {
                "id": o.case.id,
                "anchor": o.case.anchor,
                "status": o.case.status,
                "relative_error": "" if o.case.relative_error is None else o.case.relative_error,
                "digits": o.case.digits,
                "interpretation_passed": "" if o.interpretation is None else o.interpretation.passed,
                "sweep_worst": "" if o.sweep is None else o.sweep.worst_relative_error,
                "passed": o.passed,
                "error": o.case.error or "",
            }
            for o in report.outcomes
        ]
    if isinstance(report, InvertReport):
        return [
            {
                "n": n,
                "k": k,
                "re_B": report.B[n][k].real,
                "im_B": report.B[n][k].imag,
                "re_Binv": report.Binv[n][k].real,
                "im_Binv": report.Binv[n][k].imag,
            }
            for n in range(report.size)
            for k in range(n + 1)
        ]
    if isinstance(report, KernelCheckReport):
        return [
            {"pair": k.pair, "max_residual": k.max_residual, "antisymmetry": a.max_residual, "passed": k.passed}
            for k, a in zip(report.kernels, report.antisymmetry)
        ]
    return [report.model_dump(include={"order", "value", "method", "condition", "precision"})]


def write_csv(report: BaseModel, path: str) -> None:
    rows = _csv_rows(report)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(rows[0]) if rows else [])
        writer.writeheader()
        writer.writerows(rows)
    logger.debug(f"Wrote {len(rows)} CSV rows to {path}")


def write_output(output: RunOutput, config: RunConfig) -> None:
    document = output.model_dump_json(indent=2)
    if config.json_path:
        Path(config.json_path).parent.mkdir(parents=True, exist_ok=True)
        Path(config.json_path).write_text(document + os.linesep, encoding="utf-8")
        logger.debug(f"Wrote JSON report to {config.json_path}")
    elif not config.csv_path:
        print(document)
    if config.csv_path:
        write_csv(output.report, config.csv_path)


def run(config: RunConfig) -> int:
    """Execute one subcommand and return its exit status.

    0 when every check passed, 1 when a numeric check failed, 2 for usage errors and
    3 for numeric-domain errors. Library errors never escape.
    """
    logger.debug(f"Running {config.subcommand} at {mp.dps} digits")
    try:
        report = HANDLERS[config.subcommand](config)
    except FGError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except ZeroDivisionError as e:
        logger.error(f"Division by zero during {config.subcommand}: {e}")
        return DOMAIN_EXIT_CODE

    exit_code = 0 if report.passed else 1
    if exit_code:
        logger.warning(report.format_message())
    else:
        logger.info(report.format_message())
    write_output(RunOutput(command=config.subcommand, exit_code=exit_code, report=report), config)
    return exit_code


# ========= Fire entry points =========
def corpus_command(case: Optional[str] = None, sweep: int = 0, seed: int = 0, workers: int = 1) -> int:
    """Verify one corpus case, or all of them, and return the exit status."""
    cases = [case] if case else []
    return run(RunConfig(subcommand="corpus", cases=cases, trials=sweep, seed=seed, workers=workers))


def kernel_check_command(pair: Optional[str] = None, samples: int = DEFAULT_SAMPLES, seed: int = 0) -> int:
    return run(RunConfig(subcommand="kernel-check", pair=pair, samples=samples, seed=seed))


def expand_command(
    function: str = "inv1mcx",
    pair: str = "onexy-diff",
    nodes: str = DEFAULT_NODES,
    params: str = DEFAULT_PARAMS,
    max_order: int = DEFAULT_MAX_ORDER,
    probe: complex = 0.1,
) -> int:
    config = RunConfig(
        subcommand="expand",
        function=function,
        pair=pair,
        nodes=nodes,
        params=params,
        max_order=max_order,
        probe=probe,
    )
    return run(config)


if __name__ == "__main__":
    from fire import Fire
    Fire({"run_corpus": corpus_command, "kernel_check": kernel_check_command, "expand": expand_command})
