"""``wsawctl``: one subcommand per experiment.

Every subcommand builds an :class:`ExperimentConfig`, runs it and prints a
summary table. Failures print a single line
``error=<code-name> reason="<message>"`` on stderr and exit with:

===  ====================
0    success
1    unexpected failure
2    invalid configuration
3    budget exceeded
4    degenerate sampler
===  ====================
"""

from typing import Any, Callable, Dict, List, NoReturn, Optional, Tuple

import click
import structlog
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from wsawlab import __version__
from wsawlab.domain.errors import BudgetExceededError, DegenerateSamplerError, WsawError
from wsawlab.experiments import run_experiment
from wsawlab.experiments.base.config import ExperimentConfig
from wsawlab.experiments.base.manifest import CatalogLoader, load_run_config
from wsawlab.experiments.base.runner import RunRecord
from wsawlab.infrastructure.logging import configure_logging
from wsawlab.infrastructure.settings import get_settings

logger = structlog.get_logger()

EXIT_INTERNAL = 1
EXIT_INVALID = 2
EXIT_BUDGET = 3
EXIT_DEGENERATE = 4


def classify(exc: BaseException) -> Tuple[int, str, str]:
    """Exit code, code name and one-line reason for a failure."""
    if isinstance(exc, ValidationError):
        reason = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in exc.errors()
        )
        return EXIT_INVALID, "invalid-config", reason
    if isinstance(exc, BudgetExceededError):
        return EXIT_BUDGET, "budget-exceeded", str(exc)
    if isinstance(exc, DegenerateSamplerError):
        stats = " ".join(f"{k}={v}" for k, v in exc.statistics.items())
        return EXIT_DEGENERATE, "degenerate-sampler", f"{exc} {stats}".strip()
    if isinstance(exc, (WsawError, FileNotFoundError)):
        return EXIT_INVALID, "invalid-config", str(exc)
    return EXIT_INTERNAL, "internal", f"{type(exc).__name__}: {exc}"


def _fail(exc: BaseException) -> NoReturn:
    code, name, reason = classify(exc)
    reason = " ".join(reason.split()).replace('"', "'")
    click.echo(f'error={name} reason="{reason}"', err=True)
    raise SystemExit(code)


def _budget(value: str) -> Any:
    return int(value) if value.isdigit() else value


def _int_list(ctx: click.Context, param: click.Parameter, value: Optional[str]) -> Optional[List[int]]:
    if value is None:
        return None
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {value!r}")


def _float_list(ctx: click.Context, param: click.Parameter, value: Optional[str]) -> Optional[List[float]]:
    if value is None:
        return None
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {value!r}")


def _pairs(ctx: click.Context, param: click.Parameter, value: Optional[str]) -> Optional[List[List[int]]]:
    """Parse ``"25:20,25:40"`` into ``[[25, 20], [25, 40]]``."""
    if value is None:
        return None
    pairs = []
    for item in value.split(","):
        parts = item.strip().split(":")
        if len(parts) != 2:
            raise click.BadParameter(f"expected n:r, got {item!r}")
        try:
            pairs.append([int(parts[0]), int(parts[1])])
        except ValueError:
            raise click.BadParameter(f"expected integers in {item!r}")
    return pairs


def model_options(fn: Callable) -> Callable:
    """Flags shared by every experiment subcommand."""
    options = [
        click.option("--dim", "dim", type=int, default=2, show_default=True, help="Lattice dimension d"),
        click.option("--beta", type=float, default=0.0, show_default=True, help="Interaction strength"),
        click.option("--r", "r", type=int, default=None, help="Torus side (omit for Z^d)"),
        click.option("--n", "n", type=int, default=0, show_default=True, help="Walk length"),
        click.option("--seed", type=int, default=0, show_default=True, help="Master seed"),
        click.option("--budget", default="small", show_default=True, help="Preset name or integer node cap"),
        click.option("--out", "out", default=None, help="Output directory (default: WSAW_OUTPUT_DIR)"),
        click.option("--chains", type=int, default=None, help="Independent Metropolis chains"),
        click.option("--tours", type=int, default=None, help="PERM tours"),
        click.option("--grid", type=int, default=None, help="Time-grid points (tightness) or blocks (fdd)"),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def print_summary(record: RunRecord) -> None:
    console = Console()
    table = Table(title=f"{record.summary.experiment} -> {record.directory}")
    table.add_column("quantity")
    table.add_column("value", justify="right")
    table.add_column("std. error", justify="right")
    for key, est in record.summary.estimates.items():
        table.add_row(key, f"{est.mean:.10g}", f"{est.std_error:.3g}")
    for key, value in record.summary.values.items():
        shown = f"{value:.10g}" if isinstance(value, float) else str(value)
        table.add_row(key, shown, "")
    console.print(table)


def dispatch(command: str, common: Dict[str, Any], options: Dict[str, Any]) -> None:
    """Validate, run and report one experiment; never returns on failure."""
    settings = get_settings()
    merged = dict(options)
    for key in ("chains", "tours"):
        merged[key] = common.get(key)
    try:
        config = ExperimentConfig(
            command=command,
            params={"d": common["dim"], "beta": common["beta"], "r": common["r"], "n": common["n"]},
            seed=common["seed"],
            budget=_budget(common["budget"]),
            output_path=common["out"] or settings.output_dir,
            options={k: v for k, v in merged.items() if v is not None},
        )
        record = run_experiment(config, settings)
    except Exception as exc:
        logger.debug("command_failed", command=command, error_type=type(exc).__name__)
        _fail(exc)
    print_summary(record)


@click.group()
@click.version_option(__version__, prog_name="wsawctl")
def cli() -> None:
    """Weakly self-avoiding walk experiments."""
    configure_logging(get_settings())


@cli.command("enumerate")
@model_options
@click.option("--lift", is_flag=True, help="Torus partition function via lifted Z^d walks")
def enumerate_walks(lift: bool, **common: Any) -> None:
    """Exact enumeration of c_k, msd and endpoints for k <= n."""
    dispatch("enumerate", common, {"lift": lift})


@cli.command("lace-check")
@model_options
@click.option("--n-max", type=int, default=None, help="Longest walk checked (default: --n)")
@click.option("--betas", callback=_float_list, default=None, help="Comma-separated betas")
@click.option("--exact", is_flag=True, help="Rational arithmetic")
@click.option("--pi-n-max", type=int, default=None, help="Longest length of the |J| series")
@click.option("--z", type=float, default=None, help="Activity of the |J| series")
def lace_check(
    n_max: Optional[int],
    betas: Optional[List[float]],
    exact: bool,
    pi_n_max: Optional[int],
    z: Optional[float],
    **common: Any,
) -> None:
    """KJK residual sweep and |J| partial sums."""
    dispatch(
        "lace-check",
        common,
        {"n_max": n_max, "betas": betas, "exact": exact, "pi_n_max": pi_n_max, "z": z},
    )


@cli.command()
@model_options
def perm(**common: Any) -> None:
    """PERM estimates of c_k and msd for k <= n."""
    dispatch("perm", common, {})


@cli.command()
@model_options
@click.option("--sweeps", type=int, default=None, help="Sweeps per chain")
@click.option("--observable", "observables", multiple=True, help="Observable name (repeatable)")
def metropolis(sweeps: Optional[int], observables: Tuple[str, ...], **common: Any) -> None:
    """Fixed-length Metropolis sampling with a full trace."""
    dispatch("metropolis", common, {"sweeps": sweeps, "observables": list(observables) or None})


@cli.command()
@model_options
@click.option("--ns", callback=_int_list, default=None, help="Comma-separated lengths (default: --n)")
@click.option("--samples", type=int, default=None, help="Snapshots per length")
@click.option("--sweeps", type=int, default=None, help="Sweeps per chain")
@click.option("--horizon", type=float, default=None, help="Final time")
@click.option("--torus", is_flag=True, help="Sample on the torus at r = floor(n^0.4)")
def fdd(
    ns: Optional[List[int]],
    samples: Optional[int],
    sweeps: Optional[int],
    horizon: Optional[float],
    torus: bool,
    **common: Any,
) -> None:
    """Gaussian fdd deviation of rescaled increments."""
    dispatch(
        "fdd",
        common,
        {
            "ns": ns,
            "samples": samples,
            "sweeps": sweeps,
            "horizon": horizon,
            "torus": torus,
            "blocks": common.get("grid"),
        },
    )


@cli.command()
@model_options
@click.option("--ns", callback=_int_list, default=None, help="Comma-separated lengths (default: --n)")
@click.option("--samples", type=int, default=None, help="Snapshots per length")
@click.option("--sweeps", type=int, default=None, help="Sweeps per chain")
@click.option("--horizon", type=float, default=None, help="Time horizon")
def tightness(
    ns: Optional[List[int]],
    samples: Optional[int],
    sweeps: Optional[int],
    horizon: Optional[float],
    **common: Any,
) -> None:
    """Increment second moments over a time grid."""
    dispatch(
        "tightness",
        common,
        {"ns": ns, "samples": samples, "sweeps": sweeps, "horizon": horizon, "grid": common.get("grid")},
    )


@cli.command("dilute-ratio")
@model_options
@click.option("--pairs", callback=_pairs, default=None, help="Comma-separated n:r pairs")
@click.option("--exact-max", type=int, default=None, help="Longest length computed exactly")
@click.option("--envelope", type=float, default=None, help="Fixed constant C instead of a fitted one")
@click.option("--fit-pairs", callback=_pairs, default=None, help="n:r pairs C is fitted on")
def dilute_ratio(
    pairs: Optional[List[List[int]]],
    exact_max: Optional[int],
    envelope: Optional[float],
    fit_pairs: Optional[List[List[int]]],
    **common: Any,
) -> None:
    """c_n^T / c_n against the dilute correction shape."""
    dispatch(
        "dilute-ratio",
        common,
        {"pairs": pairs, "exact_max": exact_max, "envelope": envelope, "fit_pairs": fit_pairs},
    )


@cli.command()
@model_options
@click.option("--pairs", callback=_pairs, default=None, help="Comma-separated n:r pairs")
@click.option("--epsilon", type=float, default=None, help="Threshold on sup |w| / r")
@click.option("--samples", type=int, default=None, help="Snapshots per pair")
@click.option("--sweeps", type=int, default=None, help="Sweeps per chain")
def degenerate(
    pairs: Optional[List[List[int]]],
    epsilon: Optional[float],
    samples: Optional[int],
    sweeps: Optional[int],
    **common: Any,
) -> None:
    """Probability of reaching a fraction of the torus side."""
    dispatch(
        "degenerate",
        common,
        {"pairs": pairs, "epsilon": epsilon, "samples": samples, "sweeps": sweeps},
    )


@cli.command()
@model_options
@click.option("--z", type=float, default=None, help="Activity (default: z-fraction / mu_hat)")
@click.option("--z-fraction", type=float, default=None, help="Fraction of the estimated critical activity")
def plateau(z: Optional[float], z_fraction: Optional[float], **common: Any) -> None:
    """Torus two-point function beside the Z^d one."""
    dispatch("plateau", common, {"z": z, "z_fraction": z_fraction})


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(), help="Config or manifest YAML")
@click.option("--out", "out", default=None, help="Override the output directory")
def run(config_path: str, out: Optional[str]) -> None:
    """Re-run a configuration or a previous run's manifest."""
    try:
        config = load_run_config(config_path)
        if out is not None:
            config = config.model_copy(update={"output_path": out})
        record = run_experiment(config, get_settings())
    except Exception as exc:
        _fail(exc)
    print_summary(record)


@cli.command()
def catalog() -> None:
    """List experiments and their budget presets."""
    try:
        entries = CatalogLoader.load().experiments
    except Exception as exc:
        _fail(exc)
    table = Table(title="wsawlab experiments")
    table.add_column("name")
    table.add_column("version")
    table.add_column("budgets")
    table.add_column("outputs")
    for entry in entries:
        table.add_row(
            entry.name,
            entry.version,
            ", ".join(entry.budgets),
            ", ".join(out.name for out in entry.outputs),
        )
    Console().print(table)


if __name__ == "__main__":
    cli()
