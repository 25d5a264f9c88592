#!/usr/bin/env python3
"""Command-line entry point for pxe"""

import os
import sys
import time
from contextlib import contextmanager
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import click
import numpy as np
from rich.console import Console
from rich.table import Table

from . import __version__
from .analysis.estimators import estimate_sobolev_exponent, fact_a_exponent, product_regularity_check
from .analysis.inverse import InverseConfig, inverse_regularity_experiment
from .core.config import RunConfig
from .core.errors import ConfigError, MediumValidationError, PxeError, SolverError
from .core.logger import get_pxe_logger, log_system_info, logger, setup_logging
from .core.system import default_worker_count, get_runtime_info
from .core.utils import ensure_directory, write_csv, write_json
from .evolution.frequency_synthesis import (
    bundle_from_spec,
    solve_full,
    source_from_spec,
    tau_grid,
)
from .evolution.propagator import OperatorCache, PropagationTrace, convergence_study, evolve, mild_solve
from .medium.medium import Medium, ValidationReport, validate_assumption1
from .operators.generator import bootstrap_ledger
from .spectral.fieldio import read_fields, write_field, write_fields
from .spectral.lateral_grid import Field, LateralGrid, sobolev_spectrum
from .spectral.profiles import profile_from_spec

console = Console()

COMMANDS = ("simulate", "evolve", "analyze", "inverse", "bootstrap", "convergence", "validate")
VALIDATION_DEPTHS = 5
INTERNAL_ERROR_EXIT = 4


def resolve_workers(workers: Optional[int]) -> int:
    """--workers, then PXE_WORKERS, then the logical core count"""
    if workers is None:
        env = os.environ.get("PXE_WORKERS")
        if env:
            try:
                workers = int(env)
            except ValueError as e:
                raise ConfigError(f"PXE_WORKERS must be an integer, got '{env}'") from e
    if workers is None:
        workers = default_worker_count()
    if workers < 1:
        raise ConfigError(f"worker count must be >= 1, got {workers}")
    return workers


class PxeRunner:
    """One pipeline run writing into an output directory"""

    def __init__(self, cfg: RunConfig, out_dir: Path, workers: int = 1, skip_validate: bool = False):
        self.cfg = cfg
        self.out_dir = Path(out_dir)
        self.workers = workers
        self.skip_validate = skip_validate
        self.timings: Dict[str, float] = {}
        self.outputs: List[str] = []

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = time.perf_counter() - start

    def prepare(self) -> None:
        for sub in ("fields", "reports", "tables", "logs"):
            ensure_directory(self.out_dir / sub)
        get_pxe_logger().attach_file(self.out_dir / "logs")

    def _record(self, path: Path) -> Path:
        self.outputs.append(str(path.relative_to(self.out_dir)))
        return path

    def report(self, name: str, data: Any) -> Path:
        path = self._record(self.out_dir / "reports" / f"{name}.json")
        if not write_json(path, data):
            raise PxeError(f"could not write report {path}")
        return path

    def table(self, name: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
        path = self._record(self.out_dir / "tables" / f"{name}.csv")
        if not write_csv(path, header, rows):
            raise PxeError(f"could not write table {path}")
        return path

    def fields(self, name: str, records: Sequence[Field]) -> Path:
        path = self._record(self.out_dir / "fields" / f"{name}.pxfld")
        if not write_fields(path, records):
            raise PxeError(f"could not write fields {path}")
        return path

    # validation

    def validate(self, medium: Medium, grid: LateralGrid, taus: Sequence[float],
                 name: str = "validation") -> ValidationReport:
        """Check the medium's assumptions; failing clauses abort with exit code 2"""
        evo = self.cfg.evolution()
        thresholds = self.cfg.analysis().thresholds
        depths = np.linspace(0.0, evo.depth_end, VALIDATION_DEPTHS)
        with self.stage(name):
            report = validate_assumption1(
                medium, depths, taus, grid,
                tail_tol=thresholds.tail_tol,
                fit_range=self.cfg.analysis().fit_range,
                min_decades=thresholds.min_fit_decades,
                reciprocal_tol=thresholds.reciprocal_tol,
                exponent_tol=thresholds.exponent_tol,
            )
        self.report(name, report.to_dict())

        if report.failed:
            details = "; ".join(f"({k}) {report.clauses[k].message}" for k in report.failed)
            raise MediumValidationError(
                f"medium '{medium.name}' fails clause(s) {', '.join(report.failed)}: {details}"
            )
        for k in report.inconclusive:
            logger.warning(f"Medium clause ({k}) inconclusive: {report.clauses[k].message}")
        mismatched = [check for check in report.tail_checks if check.status == "fail"]
        if mismatched:
            first = mismatched[0]
            logger.warning(f"Reciprocal tail check fails at {len(mismatched)} (z, tau) sample(s), "
                           f"first at z={first.z:g}, tau={first.tau:g}: {first.message}")
        if report.passed:
            logger.info(f"Medium '{medium.name}' passes all assumption clauses")
        return report

    def _checked_medium(self, grid: LateralGrid, taus: Sequence[float]) -> Medium:
        medium = self.cfg.medium()
        if self.skip_validate:
            logger.warning("Skipping medium validation")
        else:
            self.validate(medium, grid, taus)
        return medium

    # pipelines

    def simulate(self) -> None:
        """Frequency-by-frequency solve and synthesis of u(z, t, x)"""
        grid = self.cfg.grid()
        evo = self.cfg.evolution()
        freq = self.cfg.frequency()
        taus = tau_grid(freq.samples, freq.tau_max)
        medium = self._checked_medium(grid, taus.tolist())

        rng = np.random.default_rng(self.cfg.seed)
        data = self.cfg.section("data")
        v0 = bundle_from_spec(grid, freq, data.get("initial"), rng)
        g = source_from_spec(grid, freq, data.get("source"), rng)

        with self.stage("solve"):
            solution = solve_full(medium, v0, g, evo, freq.z_values, self.workers, freq.filter, freq.parity)

        with self.stage("write"):
            for i, z in enumerate(solution.z_values):
                for m, frame in enumerate(solution.slices(z)):
                    path = self._record(self.out_dir / "fields" / f"u_z{i:03d}_t{m:03d}.pxfld")
                    if not write_field(path, frame):
                        raise PxeError(f"could not write fields {path}")
            manifest = solution.manifest()
            manifest["traces"] = [
                {"tau": t.tau, "iterations": t.total_iterations, "max_drift": t.max_drift()}
                for t in solution.traces
            ]
            self.report("space_time", manifest)

        console.print(f"[green]Synthesized {len(solution.times)} time slices at "
                      f"{len(solution.z_values)} depth(s)[/green]")

    def evolve(self, tau: Optional[float], z_from: float, z_to: Optional[float]) -> None:
        """Single-frequency trajectory on the macro mesh"""
        grid = self.cfg.grid()
        evo = self.cfg.evolution()
        tau = float(self.cfg.get("frequency.tau") if tau is None else tau)
        z_to = evo.depth_end if z_to is None else float(z_to)
        medium = self._checked_medium(grid, [tau])

        rng = np.random.default_rng(self.cfg.seed)
        data = self.cfg.section("data")
        v0 = Field(grid, profile_from_spec(grid, data.get("initial"), rng), z=z_from, tau=tau)
        source = source_from_spec(grid, self.cfg.frequency(), data.get("source"), rng)

        with self.stage("evolve"):
            if source is not None:
                if z_from != 0 or abs(z_to - evo.depth_end) > 1e-12 * evo.depth_end:
                    raise ConfigError("a nonzero source requires evolving over the full interval [0, Z]")
                trajectory, trace = mild_solve(medium, tau, v0, lambda z: source(z, tau), evo)
            else:
                trajectory, trace = self._homogeneous_trajectory(medium, tau, z_from, z_to, v0)

        self.fields("trajectory", trajectory)
        self.report("trace", trace.to_dict())
        self.table(
            "trace",
            ["z", "l2", "h2", "iterations", "frozen_at"],
            [[r.z, r.l2, r.h2, r.iterations, r.frozen_at] for r in trace.records],
        )
        console.print(f"[green]Evolved tau={tau:g} from z={z_from:g} to z={z_to:g}: "
                      f"{len(trace.records)} intervals, max L2 drift {trace.max_drift():.2e}[/green]")

    def _homogeneous_trajectory(self, medium: Medium, tau: float, z_from: float, z_to: float,
                                v0: Field) -> Tuple[List[Field], PropagationTrace]:
        evo = self.cfg.evolution()
        slack = 1e-9 * evo.macro_step
        stops = [z for z in evo.macro_nodes.tolist() if z_from + slack < z < z_to - slack] + [z_to]
        cache = OperatorCache(medium, tau, v0.grid, evo)
        trace = PropagationTrace(tau=tau, initial_l2=v0.l2_norm())
        trajectory = [v0]
        current, start = v0, z_from
        for stop in stops:
            current, segment = evolve(medium, tau, start, stop, current, evo, cache)
            trace.extend(segment)
            trajectory.append(current)
            start = stop
        return trajectory, trace

    def analyze(self, paths: Sequence[str], pairs: Sequence[Tuple[float, float]]) -> None:
        """Sobolev spectra and tail exponents of stored fields, plus product-rule checks"""
        analysis = self.cfg.analysis()
        thresholds = analysis.thresholds
        entries, rows = [], []
        with self.stage("fields"):
            for path in paths:
                for index, f in enumerate(read_fields(path)):
                    label = f"{Path(path).name}#{index}"
                    spectrum = sobolev_spectrum(f, analysis.s_values)
                    estimate = estimate_sobolev_exponent(
                        f, analysis.fit_range, thresholds.min_fit_decades, label=label
                    )
                    entries.append({
                        "field": label, "z": f.z, "tau": f.tau,
                        "sobolev": spectrum.to_list(), "tail": estimate.to_dict(),
                    })
                    rows.append([label, f.z, f.tau, estimate.slope, estimate.exponent, estimate.status]
                                + spectrum.norms)
        if paths:
            self.report("analysis", {"s_values": analysis.s_values, "fields": entries})
            self.table(
                "analysis",
                ["field", "z", "tau", "slope", "exponent", "status"] + [f"h{s:g}" for s in analysis.s_values],
                rows,
            )

        if pairs:
            grid = self.cfg.grid()
            eps = analysis.fact_a_r / 4.0
            reports = []
            with self.stage("product"):
                for s1, s2 in pairs:
                    check = product_regularity_check(
                        s1, s2, analysis.trials, grid,
                        base_seed=self.cfg.seed,
                        tolerance=thresholds.product_tol,
                        eps=eps,
                        required_fraction=thresholds.pass_fraction,
                        fit_range=analysis.fit_range,
                        min_decades=thresholds.min_fit_decades,
                        workers=self.workers,
                    )
                    reports.append(check.to_dict())
            self.report("product_check", {"eps": eps, "checks": reports})
            _print_checks(reports)

        if not paths and not pairs:
            raise ConfigError("analyze needs field files or --pair exponents")

    def inverse(self) -> None:
        """Rough-versus-smooth H^2 comparison"""
        icfg = InverseConfig.from_run_config(self.cfg)
        if self.skip_validate:
            logger.warning("Skipping medium validation")
        else:
            grid = LateralGrid(icfg.dimension, icfg.resolutions[0], icfg.length)
            for label, spec in (("smooth", icfg.smooth), ("rough", icfg.rough)):
                medium = self.cfg.medium(spec, grid.length)
                self.validate(medium, grid, [icfg.tau], name=f"validation_{label}")

        with self.stage("experiment"):
            report = inverse_regularity_experiment(icfg, workers=self.workers)
        self.report("inverse", report.to_dict())
        header, rows = report.table()
        self.table("inverse", header, rows)

        style = {"H2 preserved": "green", "H2 degraded": "red"}.get(report.decision, "yellow")
        console.print(f"[{style}]Inverse experiment: {report.decision}[/{style}] "
                      f"(C_base {', '.join(f'{b:.4g}' for b in report.baselines)})")

    def convergence(self, tau: Optional[float], n_list: Sequence[int]) -> None:
        """Self-convergence of the product evolution in the number of macro steps"""
        grid = self.cfg.grid()
        evo = self.cfg.evolution()
        tau = float(self.cfg.get("frequency.tau") if tau is None else tau)
        medium = self._checked_medium(grid, [tau])
        rng = np.random.default_rng(self.cfg.seed)
        v0 = Field(grid, profile_from_spec(grid, self.cfg.section("data").get("initial"), rng), tau=tau)
        with self.stage("study"):
            report = convergence_study(medium, tau, v0, evo, n_list)
        self.report("convergence", report.to_dict())
        self.table("convergence", ["n", "difference"], list(zip(report.n_values, report.differences)))
        console.print(f"[green]Observed order: {report.order_label}[/green]")

    def validate_only(self) -> None:
        freq = self.cfg.frequency()
        self.validate(self.cfg.medium(), self.cfg.grid(), tau_grid(freq.samples, freq.tau_max).tolist())

    def bootstrap(self, s: Any, r: Any, dimension: int) -> None:
        ledger = bootstrap_ledger(s, r, dimension)
        self.report("bootstrap", ledger.to_dict())
        _print_ledger(ledger.to_dict())

    def write_manifest(self, command: str, exit_code: int) -> None:
        runtime = get_runtime_info()
        manifest = {
            "command": command,
            "exit_code": exit_code,
            "config": self.cfg.to_dict(),
            "config_hash": self.cfg.config_hash(),
            "config_source": str(self.cfg.source) if self.cfg.source else None,
            "seed": self.cfg.seed,
            "workers": self.workers,
            "versions": {
                "pxe": __version__,
                "python": runtime.python,
                "numpy": runtime.numpy,
                "scipy": runtime.scipy,
                "click": click.__version__ if hasattr(click, "__version__") else None,
            },
            "runtime": runtime.to_dict(),
            "timings": self.timings,
            "outputs": self.outputs,
        }
        write_json(self.out_dir / "manifest.json", manifest)


def _print_ledger(data: Dict[str, Any]) -> None:
    table = Table(title=f"Bootstrap ledger s={data['s']}, r={data['r']} (d={data['dimension']})")
    table.add_column("claim")
    table.add_column("j", justify="right")
    table.add_column("exponent", justify="right")
    table.add_row("1", "", str(data["claim1"]))
    for step in data["claim2_steps"]:
        table.add_row("2", str(step["j"]), str(step["exponent"]))
    for step in data["claim3_steps"]:
        table.add_row("3", str(step["j"]), str(step["exponent"]))
    table.add_row("final", "", str(data["final"]))
    console.print(table)
    console.print(f"claim-2 steps: {data['claim2_step_count']}, claim-3 steps: {data['claim3_step_count']}")


def _print_checks(reports: Sequence[Dict[str, Any]]) -> None:
    table = Table(title="Product regularity")
    for column in ("s1", "s2", "predicted", "pass fraction", "result"):
        table.add_column(column)
    for r in reports:
        verdict = "[green]pass[/green]" if r["passed"] else "[red]fail[/red]"
        table.add_row(str(r["s1"]), str(r["s2"]), f"{r['predicted']:.3f}", f"{r['pass_fraction']:.0%}", verdict)
    console.print(table)


def _parse_rational(value: Any) -> Any:
    """Exact Fraction for decimal or p/q text, float otherwise"""
    if isinstance(value, (int, float, Fraction)):
        return value
    try:
        return Fraction(str(value).strip())
    except (ValueError, ZeroDivisionError) as e:
        raise ConfigError(f"Cannot parse rational value '{value}'") from e


def run(
    config_path: Optional[str] = None,
    command: str = "simulate",
    workers: Optional[int] = None,
    out_dir: Optional[str] = None,
    skip_validate: bool = False,
    overrides: Sequence[str] = (),
    debug: bool = False,
    **options: Any,
) -> int:
    """
    Execute one pipeline and return its exit code

    Args:
        config_path: JSON or YAML run file (defaults only when None)
        command: One of simulate, evolve, analyze, inverse, bootstrap, convergence, validate
        workers: Worker pool size (PXE_WORKERS, then the core count, when None)
        out_dir: Output directory overriding the config's out_dir
        skip_validate: Do not run the medium assumption checks
        overrides: key.path=value overrides
        debug: Debug logging on the console
        **options: Command-specific arguments

    Returns:
        0 success, 1 configuration error, 2 medium validation failure, 3 solver failure,
        4 unexpected internal error
    """
    setup_logging(debug)
    if command not in COMMANDS:
        logger.error(f"Unknown command '{command}'")
        return 1

    try:
        cfg = RunConfig.load(config_path) if config_path else RunConfig()
        cfg.apply_overrides(overrides)
        for key in ("n", "substeps"):
            if options.get(key) is not None:
                cfg.set(f"evolution.{key}", int(options[key]))
        target = Path(out_dir) if out_dir else cfg.out_dir
        runner = PxeRunner(cfg, target, resolve_workers(workers), skip_validate)
        runner.prepare()
    except PxeError as e:
        logger.error(f"Configuration error: {e}")
        return e.exit_code

    log_system_info()
    logger.info(f"Running '{command}' into {runner.out_dir} with {runner.workers} worker(s)")

    exit_code = 0
    try:
        with runner.stage("total"):
            if command == "simulate":
                runner.simulate()
            elif command == "evolve":
                runner.evolve(options.get("tau"), float(options.get("z_from") or 0.0), options.get("z_to"))
            elif command == "analyze":
                runner.analyze(options.get("paths") or (), options.get("pairs") or ())
            elif command == "inverse":
                runner.inverse()
            elif command == "bootstrap":
                runner.bootstrap(
                    _parse_rational(options.get("s", 0)),
                    _parse_rational(options.get("r", Fraction(1, 2))),
                    int(options.get("dimension") or 2),
                )
            elif command == "convergence":
                runner.convergence(options.get("tau"), options.get("n_list") or (8, 16, 32, 64))
            else:
                runner.validate_only()
    except MediumValidationError as e:
        logger.error(f"Medium validation failed: {e}")
        exit_code = e.exit_code
    except SolverError as e:
        logger.error(f"Solver failure: {e}")
        for tau, message in sorted(getattr(e, "failures", {}).items()):
            logger.error(f"  tau={tau:g}: {message}")
        exit_code = e.exit_code
    except PxeError as e:
        logger.error(f"{type(e).__name__}: {e}")
        exit_code = e.exit_code
    except ValueError as e:
        logger.error(f"Invalid input: {e}")
        exit_code = 1
    except Exception as e:
        logger.exception(f"Unexpected error in '{command}': {e}")
        exit_code = INTERNAL_ERROR_EXIT

    if exit_code in (0, 3):
        runner.write_manifest(command, exit_code)
    return exit_code


@click.group()
@click.version_option(__version__, prog_name="pxe")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="JSON or YAML run file")
@click.option("--workers", type=int, default=None, help="Worker pool size (env PXE_WORKERS)")
@click.option("--out-dir", type=click.Path(file_okay=False), default=None, help="Output directory")
@click.option("--skip-validate", is_flag=True, help="Skip the medium assumption checks")
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE", help="Override a config value")
@click.option("--debug", is_flag=True, help="Debug output on the console")
@click.pass_context
def cli(ctx: click.Context, config_path, workers, out_dir, skip_validate, overrides, debug):
    """pxe - paraxial evolution in rough lateral media"""
    ctx.obj = {
        "config_path": config_path,
        "workers": workers,
        "out_dir": out_dir,
        "skip_validate": skip_validate,
        "overrides": overrides,
        "debug": debug,
    }


def _finish(ctx: click.Context, command: str, **options: Any) -> None:
    ctx.exit(run(command=command, **ctx.obj, **options))


@cli.command()
@click.pass_context
def simulate(ctx):
    """Solve every sampled frequency and synthesize u(z, t, x)"""
    _finish(ctx, "simulate")


@cli.command("evolve")
@click.option("--tau", type=float, default=None, help="Frequency (default frequency.tau)")
@click.option("--z-from", type=float, default=0.0, show_default=True)
@click.option("--z-to", type=float, default=None, help="End depth (default Z)")
@click.option("--steps", "n", type=int, default=None, help="Macro steps n")
@click.option("--substeps", type=int, default=None, help="Micro steps per macro step")
@click.pass_context
def evolve_command(ctx, tau, z_from, z_to, n, substeps):
    """Single-frequency evolution with a per-interval trace"""
    _finish(ctx, "evolve", tau=tau, z_from=z_from, z_to=z_to, n=n, substeps=substeps)


@cli.command()
@click.argument("paths", nargs=-1, type=click.Path(exists=True, dir_okay=False))
@click.option("--pair", "pairs", type=(float, float), multiple=True, help="Product-rule exponents S1 S2")
@click.pass_context
def analyze(ctx, paths, pairs):
    """Regularity analysis of stored fields and product-rule checks"""
    _finish(ctx, "analyze", paths=paths, pairs=pairs)


@cli.command()
@click.pass_context
def inverse(ctx):
    """Compare H^2 control through a smooth and a rough medium"""
    _finish(ctx, "inverse")


@cli.command()
@click.option("--s", "s", default="0", show_default=True, help="Data exponent (decimal or p/q)")
@click.option("--r", "r", default="1/2", show_default=True, help="Coefficient exponent (decimal or p/q)")
@click.option("--dimension", type=click.IntRange(1, 2), default=2, show_default=True)
@click.pass_context
def bootstrap(ctx, s, r, dimension):
    """Exponent ledger of the elliptic regularity bootstrap"""
    _finish(ctx, "bootstrap", s=s, r=r, dimension=dimension)


@cli.command()
@click.option("--tau", type=float, default=None)
@click.option("--n", "n_list", type=int, multiple=True, help="Macro step counts (repeatable)")
@click.pass_context
def convergence(ctx, tau, n_list):
    """Self-convergence order of the product evolution"""
    _finish(ctx, "convergence", tau=tau, n_list=n_list)


@cli.command()
@click.pass_context
def validate(ctx):
    """Check the configured medium against the coefficient assumptions"""
    _finish(ctx, "validate")


@cli.command("fact-a")
@click.option("--s1", type=float, required=True)
@click.option("--s2", type=float, required=True)
@click.option("--eps", type=float, default=0.125, show_default=True)
def fact_a(s1, s2, eps):
    """Print the planar product-rule exponent"""
    try:
        console.print(f"{fact_a_exponent(s1, s2, eps):g}")
    except ValueError as e:
        console.print(f"[red]{e}[/red]")
        sys.exit(1)


def main():
    """Console script entry point"""
    cli(prog_name="pxe")


if __name__ == "__main__":
    main()
