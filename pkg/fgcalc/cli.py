"""
Command-line interface for the (f,g)-calculus verification runs.
"""
import sys
from typing import Dict, List, Literal, Optional, Sequence

import click
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

# ========= Defaults =========
DEFAULT_PAIR: str = "onexy-diff"
DEFAULT_NODES: str = "geometric:b=1,r=0.6"
DEFAULT_PARAMS: str = "geometric:b=0.3,r=0.4"
DEFAULT_FUNCTION: str = "inv1mcx"
DEFAULT_ORDER: int = 6
DEFAULT_SIZE: int = 12
DEFAULT_MAX_ORDER: int = 40
DEFAULT_PROBE: complex = 0.1
DEFAULT_SEED: int = 0
DEFAULT_SAMPLES: int = 1000

Subcommand = Literal["diff", "invert", "expand", "corpus", "kernel-check"]


class RunConfig(BaseModel):
    """Everything one `fg` invocation needs, validated before any numerics run."""

    model_config = ConfigDict(frozen=True)

    subcommand: Subcommand = Field(..., description="Which operation to run")
    pair: Optional[str] = Field(DEFAULT_PAIR, description="Pair spec; None checks every built-in pair")
    nodes: str = Field(DEFAULT_NODES, description="Node sequence b_n")
    params: str = Field(DEFAULT_PARAMS, description="Parameter sequence x_n")
    function: str = Field(DEFAULT_FUNCTION, description="Named target function")
    method: Literal["direct", "recursive"] = Field("direct", description="Difference route")
    order: int = Field(DEFAULT_ORDER, ge=0, description="Difference order")
    size: int = Field(DEFAULT_SIZE, ge=1, description="Inversion matrix dimension")
    max_order: int = Field(DEFAULT_MAX_ORDER, ge=0, description="Largest expansion order")
    probe: complex = Field(DEFAULT_PROBE, description="Expansion probe point")
    tolerance: Optional[float] = Field(None, gt=0, description="Override of the check threshold")
    seed: int = Field(DEFAULT_SEED, description="Random seed for sampling")
    trials: int = Field(0, ge=0, description="Sweep trials per corpus case")
    samples: int = Field(DEFAULT_SAMPLES, ge=1, description="Kernel-check sample count")
    cases: List[str] = Field(default_factory=list, description="Corpus case ids; empty means all")
    overrides: Dict[str, complex] = Field(default_factory=dict, description="Corpus parameter overrides")
    workers: int = Field(1, ge=1, description="Corpus worker processes")
    verify: bool = Field(False, description="Check the inversion and fail on deviation")
    json_path: Optional[str] = Field(None, description="Where to write the JSON report")
    csv_path: Optional[str] = Field(None, description="Where to write the CSV table")


# ========= Option validation =========
def _validate(parse, value):
    from fgcalc.errors import FGError

    if value is None:
        return None
    try:
        parse(value)
    except FGError as e:
        raise click.BadParameter(str(e))
    return value


def _pair_option(ctx, param, value):
    from fgcalc.fgkernel import pair_by_name

    return _validate(pair_by_name, value)


def _sequence_option(ctx, param, value):
    from fgcalc.nodes import parse_sequence

    return _validate(parse_sequence, value)


def _function_option(ctx, param, value):
    from fgcalc.functions import parse_function

    return _validate(parse_function, value)


def _complex_option(ctx, param, value):
    from fgcalc.errors import FGError
    from fgcalc.grammar import parse_complex

    try:
        return parse_complex(value)
    except FGError as e:
        raise click.BadParameter(str(e))


def _case_option(ctx, param, value):
    from fgcalc.identities import get_case

    return [_validate(get_case, case_id) for case_id in value]


def _overrides_option(ctx, param, value):
    from fgcalc.errors import FGError
    from fgcalc.grammar import parse_assignments

    overrides: Dict[str, complex] = {}
    try:
        for assignment in value:
            overrides.update(parse_assignments(assignment))
    except FGError as e:
        raise click.BadParameter(str(e))
    return overrides


def _submit(**fields) -> None:
    """Hand the parsed config to the runner, or stash it when only parsing."""
    ctx = click.get_current_context()
    config = RunConfig(subcommand=ctx.info_name, **fields)
    if ctx.obj is not None and ctx.obj.get("parse_only"):
        ctx.obj["config"] = config
        return
    # Lazy load the numerics only when a command actually runs
    from fgcalc.runner import run

    ctx.exit(run(config))


def system_options(command):
    command = click.option(
        "--params", default=DEFAULT_PARAMS, callback=_sequence_option, help="Parameter sequence x_n"
    )(command)
    command = click.option(
        "--nodes", default=DEFAULT_NODES, callback=_sequence_option, help="Node sequence b_n"
    )(command)
    command = click.option(
        "--pair", default=DEFAULT_PAIR, callback=_pair_option, help="Pair, e.g. bibasic:a=0.2,b=0.1"
    )(command)
    return command


def output_options(command):
    command = click.option("--csv", "csv_path", type=click.Path(dir_okay=False), help="Write a CSV table")(command)
    command = click.option(
        "--json", "json_path", type=click.Path(dir_okay=False), help="Write the JSON report"
    )(command)
    return command


# ========= Commands =========
@click.group()
def cli():
    """(f,g)-calculus toolkit: differences, inversion, expansions and the identity corpus."""
    pass


@cli.command()
@system_options
@click.option("--function", default=DEFAULT_FUNCTION, callback=_function_option, help="Target function F")
@click.option("--order", default=DEFAULT_ORDER, type=click.IntRange(min=0), help="Difference order n")
@click.option("--method", default="direct", type=click.Choice(["direct", "recursive"]), help="Evaluation route")
@output_options
def diff(**options):
    """Evaluate the n-th (f,g)-difference of a function at node b_0."""
    logger.info(f"Computing order-{options['order']} difference of {options['function']}...")
    _submit(**options)


@cli.command()
@system_options
@click.option("--size", default=DEFAULT_SIZE, type=click.IntRange(min=1), help="Matrix dimension")
@click.option("--tolerance", type=click.FloatRange(min=0, min_open=True), help="Deviation threshold")
@click.option("--verify", is_flag=True, help="Check B^-1 B = I and fail on deviation")
@output_options
def invert(**options):
    """Build the (f,g)-inversion matrix pair."""
    _submit(**options)


@cli.command()
@system_options
@click.option("--function", default=DEFAULT_FUNCTION, callback=_function_option, help="Target function F")
@click.option("--max-order", default=DEFAULT_MAX_ORDER, type=click.IntRange(min=0), help="Largest order")
@click.option("--probe", default=str(DEFAULT_PROBE), callback=_complex_option, help="Point compared with F")
@output_options
def expand(**options):
    """Expand a function in (f,g)-expansion form and diagnose convergence at the probe."""
    _submit(**options)


@cli.command()
@click.option("--case", "cases", multiple=True, callback=_case_option, help="Case id; repeat for several")
@click.option("--param", "overrides", multiple=True, callback=_overrides_option, help="Override, e.g. q=0.3")
@click.option("--sweep", "trials", default=0, type=click.IntRange(min=0), help="Seeded trials per case")
@click.option("--seed", default=DEFAULT_SEED, type=int, help="Sweep seed")
@click.option("--workers", default=1, type=click.IntRange(min=1), help="Worker processes")
@output_options
def corpus(**options):
    """Verify the identity corpus."""
    _submit(**options)


@cli.command("kernel-check")
@click.option("--pair", default=None, callback=_pair_option, help="Pair to check; all built-in pairs when omitted")
@click.option("--samples", default=DEFAULT_SAMPLES, type=click.IntRange(min=1), help="Random quadruples")
@click.option("--seed", default=DEFAULT_SEED, type=int, help="Sampling seed")
@click.option("--tolerance", type=click.FloatRange(min=0, min_open=True), help="Residual threshold")
@output_options
def kernel_check(**options):
    """Check the three-term kernel identity and antisymmetry of g."""
    _submit(**options)


def parse_args(argv: Sequence[str]) -> RunConfig:
    """Parse `fg` arguments into a RunConfig without running anything."""
    from fgcalc.errors import UsageError

    state = {"parse_only": True}
    try:
        cli.main(args=list(argv), prog_name="fg", standalone_mode=False, obj=state)
    except click.UsageError as e:
        raise UsageError(e.format_message()) from e
    if "config" not in state:
        raise UsageError("no subcommand given")
    return state["config"]


def main():
    """Entry point for the CLI."""
    try:
        cli()
    except Exception as e:
        logger.error(f"Error running fg: {e}")
        sys.exit(1)


if __name__ == "__main__":
    main()
