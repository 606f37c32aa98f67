"""CLI interface for the ODIA downlink simulator."""

import functools
import logging
from typing import Dict, Optional, Sequence

import click

import src
from src.channel import ConfigurationError
from src.config import Config, ConfigFileError, load_config_file
from src.feedback import (
    CODEBOOK_KINDS,
    FeedbackError,
    build_codebook,
    check_codebook,
    load_codebook,
    save_codebook,
)
from src.file_handler import FileHandlerError, save_sweep_csv, write_curve_files
from src.harness import (
    PRESETS,
    HarnessError,
    build_preset,
    decay_experiment,
    eta_cdf_experiment,
    grid_search_se_odia,
    run_invariant_suite,
    run_sweeps,
    sweep_spec_from_mapping,
)
from src.metrics import MetricsError
from src.models import NetworkConfig

# Configure logging
logging.basicConfig(level=logging.INFO, format="%(message)s")

HANDLED_ERRORS = (
    HarnessError,
    ConfigurationError,
    ConfigFileError,
    FeedbackError,
    FileHandlerError,
    MetricsError,
    ValueError,
)


def common_options(command):
    """--seed, --drops, --out, --threads and --config for a subcommand."""
    options = [
        click.option("--seed", type=int, default=None, help="Master seed (env ODIA_SEED)."),
        click.option("--drops", type=click.IntRange(min=1), default=None,
                     help=f"Monte-Carlo drops per point (default {Config.DEFAULT_DROPS})."),
        click.option("--out", "out", type=click.Path(dir_okay=False), default=None,
                     help="Output file (default: generated name in ODIA_OUTPUT_DIR)."),
        click.option("--threads", type=click.IntRange(min=1), default=None,
                     help="Worker threads (env ODIA_THREADS)."),
        click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                     help="Plain-text key = value config file."),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def resolve_common(
    config_path: Optional[str],
    seed: Optional[int],
    drops: Optional[int],
    out: Optional[str],
    threads: Optional[int],
) -> Dict[str, object]:
    """Merge flags over config-file values over environment defaults."""
    values = load_config_file(config_path) if config_path else {}
    return {
        "values": values,
        "seed": seed if seed is not None else int(values.get("seed", Config.get_default_seed())),
        "drops": drops if drops is not None else int(values.get("drops", Config.DEFAULT_DROPS)),
        "out": out or values.get("output"),
        "threads": threads if threads is not None else int(values.get("threads", Config.get_threads())),
    }


def handle_errors(command):
    """Print handled errors as ``❌ Error: ...`` and exit 1."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except HANDLED_ERRORS as e:
            click.echo(f"❌ Error: {e}", err=True)
            click.get_current_context().exit(1)

    return wrapper


@click.group()
@click.version_option(version=src.__version__)
def main() -> None:
    """ODIA multi-cell downlink simulator.

    Runs seeded Monte-Carlo sweeps of opportunistic interference alignment
    and its baselines, and writes CSV results.
    """


@main.command()
@common_options
@handle_errors
def sweep(seed, drops, out, threads, config_path) -> None:
    """Run the sweep described by a config file."""
    if not config_path:
        raise click.UsageError("sweep needs --config")
    common = resolve_common(config_path, seed, drops, out, threads)

    values = dict(common["values"])
    values.update(seed=str(common["seed"]), drops=str(common["drops"]))
    spec = sweep_spec_from_mapping(values)

    click.echo(f"🚀 Sweeping {spec.scheme} over {spec.axis} ({len(spec.axis_values)} points)...")
    result = run_sweeps([spec], threads=common["threads"])
    filepath = save_sweep_csv(result, common["out"])
    click.echo(f"✅ Wrote {len(result.points)} rows to {filepath}")


@main.command()
@click.argument("name", type=click.Choice(PRESETS))
@click.option("--snr-db", type=float, default=3.0, show_default=True,
              help="Operating SNR for tab1-grid.")
@click.option("--n", "n_users", type=click.IntRange(min=2), default=20, show_default=True,
              help="Users per cell for tab1-grid.")
@common_options
@handle_errors
def preset(name, snr_db, n_users, seed, drops, out, threads, config_path) -> None:
    """Run a named figure or grid-search preset."""
    common = resolve_common(config_path, seed, drops, out, threads)

    if name == "tab1-grid":
        cfg = NetworkConfig(K=3, N=n_users, M=4, L=2, S=2, snr_db=snr_db, seed=common["seed"])
        result, best = grid_search_se_odia(cfg, common["drops"], threads=common["threads"])
        params = best.se_params
        click.echo(
            f"🏆 Best at SNR={snr_db:g} dB, N={n_users}: "
            f"(η_I, η_D, α) = ({params.eta_i:g}, {params.eta_d:g}, {params.alpha:g}), "
            f"sum-rate {best.sum_rate_mean:.3f} ± {best.sum_rate_sem:.3f}"
        )
    else:
        result = run_sweeps(build_preset(name, common["drops"], common["seed"]),
                            threads=common["threads"])

    filepath = save_sweep_csv(result, common["out"])
    click.echo(f"✅ Wrote {len(result.points)} rows to {filepath}")


def _network_options(command):
    options = [
        click.option("--k", "K", type=click.IntRange(min=2), default=3, show_default=True),
        click.option("--m", "M", type=click.IntRange(min=1), default=4, show_default=True),
        click.option("--l", "L", type=click.IntRange(min=1), default=2, show_default=True),
        click.option("--s", "S", type=click.IntRange(min=1), default=2, show_default=True),
    ]
    for option in reversed(options):
        command = option(command)
    return command


@main.command("eta-cdf")
@_network_options
@click.option("--samples", type=click.IntRange(min=1000), default=1_000_000, show_default=True,
              help="Leakage-metric samples to collect.")
@click.option("--n", "n_users", type=click.IntRange(min=1), default=1000, show_default=True,
              help="Users per cell per drop.")
@common_options
@handle_errors
def eta_cdf(K, M, L, S, samples, n_users, seed, drops, out, threads, config_path) -> None:
    """Estimate the small-value slope of the leakage-metric CDF."""
    common = resolve_common(config_path, seed, drops, out, threads)
    cfg = NetworkConfig(K=K, N=n_users, M=M, L=L, S=S, snr_db=20.0, seed=common["seed"])

    estimate = eta_cdf_experiment(cfg, samples, threads=common["threads"])
    click.echo(f"📈 CDF slope {estimate.slope:.4f} (R² {estimate.r_squared:.4f}); "
               f"expected {cfg.tail_exponent}")
    if common["out"]:
        _write_pairs(common["out"], "log_eta log_cdf", estimate.x, estimate.y)


@main.command()
@_network_options
@click.option("--snr-db", type=float, default=20.0, show_default=True)
@click.option("--scheme", type=click.Choice(("odia", "min_inr")), default="odia",
              show_default=True)
@click.option("--n-values", default="10,30,100,300,1000", show_default=True,
              help="Comma-separated user counts.")
@common_options
@handle_errors
def decay(K, M, L, S, snr_db, scheme, n_values, seed, drops, out, threads, config_path) -> None:
    """Estimate how fast sum-interference decays with the number of users."""
    common = resolve_common(config_path, seed, drops, out, threads)
    n_list = tuple(sorted(int(n) for n in n_values.split(",") if n.strip()))
    cfg = NetworkConfig(K=K, N=n_list[0], M=M, L=L, S=S, snr_db=snr_db, seed=common["seed"])

    estimate = decay_experiment(cfg, n_list, drops=common["drops"], scheme=scheme,
                                threads=common["threads"], output=common["out"])
    click.echo(f"📉 Decay rate {-estimate.slope:.4f} (R² {estimate.r_squared:.4f}); "
               f"ODIA expects 1/{cfg.tail_exponent} = {1.0 / max(cfg.tail_exponent, 1):.4f}")


@main.group()
def codebook() -> None:
    """Generate and check feedback codebooks."""


@codebook.command("gen")
@click.option("--s", "S", type=click.IntRange(min=1), required=True, help="Codeword dimension.")
@click.option("--n-f", "n_f", type=click.IntRange(min=1, max=16), required=True,
              help="Feedback bits.")
@click.option("--kind", type=click.Choice(CODEBOOK_KINDS), default="grassmannian",
              show_default=True)
@click.option("--iterations", type=click.IntRange(min=0), default=Config.GRASSMANNIAN_ITERATIONS,
              show_default=True, help="Lloyd iterations (grassmannian only).")
@common_options
@handle_errors
def codebook_gen(S, n_f, kind, iterations, seed, drops, out, threads, config_path) -> None:
    """Build a codebook and save it."""
    common = resolve_common(config_path, seed, drops, out, threads)
    if not common["out"]:
        raise click.UsageError("codebook gen needs --out")

    extra = {"iterations": iterations} if kind == "grassmannian" else {}
    cb = build_codebook(kind, S, n_f, seed=common["seed"], **extra)
    save_codebook(cb, common["out"])
    click.echo(f"✅ {kind} codebook S={S}, n_f={n_f}: min d² = {cb.min_chordal_sq:.6f}")


@codebook.command("check")
@click.argument("path", type=click.Path(dir_okay=False))
@handle_errors
def codebook_check(path) -> None:
    """Report a codebook's min chordal distance against the packing bound."""
    report = check_codebook(load_codebook(path))
    click.echo(f"min d²        = {report['min_chordal_sq']:.6f}")
    click.echo(f"bound         = {report['bound']:.6f}")
    click.echo(f"printed bound = {report['literal_bound']:.6f}")
    if report["compliant"]:
        click.echo("✅ Codebook respects the bound")
    else:
        click.echo("❌ Codebook exceeds the bound", err=True)
        click.get_current_context().exit(1)


@main.command()
@common_options
@handle_errors
def validate(seed, drops, out, threads, config_path) -> None:
    """Run the invariant suite on fresh drops."""
    common = resolve_common(config_path, seed, drops or 50, out, threads)
    checks = run_invariant_suite(drops=common["drops"], seed=common["seed"])

    for check in checks:
        marker = "✓" if check.passed else "✗"
        click.echo(f"  {marker} {check.name}: {check.detail}")

    failed = [c for c in checks if not c.passed]
    if failed:
        click.echo(f"❌ {len(failed)} of {len(checks)} checks failed", err=True)
        click.get_current_context().exit(1)
    click.echo(f"✅ All {len(checks)} checks passed")


@main.command()
@click.argument("csv_path", type=click.Path(dir_okay=False))
@click.argument("out_dir", type=click.Path(file_okay=False))
@click.option("--y", "y_column", default="sum_rate_mean", show_default=True,
              help="CSV column to plot against the swept axis.")
@handle_errors
def curves(csv_path, out_dir, y_column) -> None:
    """Split a sweep CSV into two-column curve files."""
    written = write_curve_files(csv_path, out_dir, y_column)
    click.echo(f"✅ Wrote {len(written)} curve files to {out_dir}")


def _write_pairs(path: str, header: str, x: Sequence[float], y: Sequence[float]) -> None:
    lines = [f"# {header}"] + [f"{a!r} {b!r}" for a, b in zip(map(float, x), map(float, y))]
    try:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write("\n".join(lines) + "\n")
    except OSError as e:
        raise FileHandlerError(f"Failed to write {path}: {e}") from e
    click.echo(f"💾 Saved {len(lines) - 1} points to {path}")


def cli_main(argv: Sequence[str]) -> int:
    """Run the CLI without exiting the interpreter.

    Returns:
        Exit code: 0 on success, 1 on failures, 2 on usage errors
    """
    try:
        result = main.main(args=list(argv), prog_name="odia-sim", standalone_mode=False)
    except click.UsageError as e:
        e.show()
        return 2
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.Abort:
        click.echo("❌ Cancelled.", err=True)
        return 1
    return result if isinstance(result, int) else 0


if __name__ == "__main__":
    main()
