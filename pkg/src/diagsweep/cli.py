"""Command-line driver.

Commands:

    solve        one problem in direct-ddm, gmres-ddm or global-direct mode
    convergence  refinement study against the semi-analytic radial reference
    decay        iterative-mode residual decay on a list of partitions
    pipeline     analytic and simulated multi-RHS timing report
    precond-study  GMRES iteration counts over a list of problem sizes

Every run reads an INI config (see `config`), applies DIAGSWEEP_* environment
overrides and --set flags, and writes its artifacts under --out.  All tables
carry the resolved config hash in a header comment; with --threads 1 the
artifacts are bit-for-bit reproducible for a fixed config and seed.

Exit codes: 0 success, 2 configuration error, 3 solver non-convergence,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config
from .ddm import build_global_operator, build_operators, diagonal_sweep_solve
from .errors import ConfigurationError, ModelError, SolverError
from .grid import ComplexField, Window, dump_field, write_pgm
from .krylov import gmres
from .media import point_shots
from .pipeline import average_time_recursive, simulate_pipeline
from .reference import radial_solution
from .subdomain import FactorizationCache, factorize

EXIT_CONFIG = 2
EXIT_NOCONV = 3
EXIT_IO = 4


def _interior_window(cfg: RunConfig, grid) -> Window:
    pml = cfg.getint("discretization", "pml_points")
    return Window(
        tuple(pml for _ in grid.counts), tuple(n - 1 - pml for n in grid.counts)
    )


def _build_problem(cfg: RunConfig, counts=None, partition_counts=None, source=None):
    grid = cfg.build_grid(counts)
    partition = cfg.build_partition(grid, partition_counts)
    profile = cfg.build_profile()
    model = cfg.build_model()
    operators = build_operators(partition, profile, model, cfg.omega)
    gop = build_global_operator(partition, profile, model, cfg.omega)
    return grid, partition, operators, gop


def _solve_once(cfg: RunConfig, f, partition, operators, gop, record_events=False):
    """Run the configured solver mode; returns (field, report dict, gmres report)."""
    mode = cfg.get("solver", "mode")
    cache = FactorizationCache()
    full = partition.grid.full_window()
    info = {"mode": mode, "config_sha256": cfg.sha256}
    krylov_report = None
    t0 = time.perf_counter()
    if mode == "global-direct":
        u = ComplexField(partition.grid, factorize(gop).solve(f))
        ddm_report = None
    elif mode == "direct-ddm":
        u, ddm_report = diagonal_sweep_solve(
            f, partition, operators, cache, record_events=record_events
        )
    elif mode == "gmres-ddm":
        def apply_m(v):
            du, _ = diagonal_sweep_solve(
                v, partition, operators, cache, warn_collar=False
            )
            return du.values

        values, krylov_report = gmres(
            lambda v: gop.apply(v, region=full),
            apply_m,
            f,
            tol=cfg.getfloat("solver", "tol"),
            restart=cfg.getint("solver", "restart"),
            max_iter=cfg.getint("solver", "max_iter"),
        )
        u = ComplexField(partition.grid, values)
        ddm_report = None
        info["n_iter"] = krylov_report.n_iter
        info["converged"] = krylov_report.converged
        info["final_residual"] = krylov_report.residuals[-1]
    else:
        raise ConfigurationError(f"unknown solver mode {mode!r}")
    info["wall_time"] = time.perf_counter() - t0
    info["residual"] = float(
        np.linalg.norm(gop.apply(u.values, region=full) - f) / np.linalg.norm(f)
    )
    return u, info, ddm_report, krylov_report


def _open_csv(path, cfg: RunConfig):
    fh = open(path, "w", newline="")
    fh.write(f"# config sha256: {cfg.sha256}\n")
    return fh


def cmd_solve(cfg: RunConfig, out: Path, rng) -> int:
    record_events = cfg.getbool("output", "event_log")
    grid, partition, operators, gop = _build_problem(cfg)
    f = cfg.build_source(grid, rng)
    u, info, ddm_report, krylov_report = _solve_once(
        cfg, f, partition, operators, gop, record_events
    )
    if cfg.getbool("output", "field_dump"):
        dump_field(u, out / "field.f64le")
    if cfg.getbool("output", "quicklook"):
        write_pgm(u, out / "quicklook.pgm")
    if krylov_report is not None and cfg.getbool("output", "residual_csv"):
        krylov_report.write_residual_csv(
            out / "residuals.csv", f"config sha256: {cfg.sha256}"
        )
    if ddm_report is not None and record_events:
        ddm_report.write_event_log(out / "events.jsonl")
    (out / "solve_report.json").write_text(json.dumps(info, indent=2))
    print(json.dumps(info))
    if krylov_report is not None and not krylov_report.converged:
        return EXIT_NOCONV
    return 0


def cmd_convergence(cfg: RunConfig, out: Path, rng) -> int:
    meshes = cfg.getlist("convergence", "meshes", int)
    if len(meshes) < 2:
        raise ConfigurationError("convergence study needs at least 2 meshes")
    if cfg.get("problem", "medium") != "constant":
        raise ConfigurationError("convergence study requires a constant medium")
    center = tuple(cfg.getlist("problem", "center", float))
    kappa = cfg.omega / cfg.getfloat("problem", "speed")
    rows = []
    for cells in meshes:
        grid, partition, operators, gop = _build_problem(cfg, (cells,) * cfg.dim)
        f = cfg.build_source(grid, rng)
        u, info, _, _ = _solve_once(cfg, f, partition, operators, gop)
        ref = radial_solution(grid, center, kappa)
        box = _interior_window(cfg, grid)
        sl = box.slices()
        diff = u.values[sl] - ref.values[sl]
        cell = float(np.prod(grid.spacing))
        l2 = np.sqrt(np.sum(np.abs(diff) ** 2) * cell)
        h1_sq = l2**2
        for axis, h in enumerate(grid.spacing):
            h1_sq += np.sum(np.abs(np.diff(diff, axis=axis) / h) ** 2) * cell
        rows.append((cells, min(grid.spacing), l2, np.sqrt(h1_sq)))
        print(f"mesh {cells}: L2 {l2:.3e} H1 {np.sqrt(h1_sq):.3e}")
    with _open_csv(out / "convergence.csv", cfg) as fh:
        writer = csv.writer(fh)
        writer.writerow(["mesh", "h", "l2_error", "l2_rate", "h1_error", "h1_rate"])
        for k, (cells, h, l2, h1) in enumerate(rows):
            if k == 0:
                r2 = rh = ""
            else:
                scale = np.log(rows[k - 1][1] / h)
                r2 = f"{np.log(rows[k - 1][2] / l2) / scale:.2f}"
                rh = f"{np.log(rows[k - 1][3] / h1) / scale:.2f}"
            writer.writerow([cells, f"{h:.6e}", f"{l2:.6e}", r2, f"{h1:.6e}", rh])
    return 0


def decay_history(cfg: RunConfig, counts, f=None, n_it=None):
    """Iterative-mode relative residual per iteration for one partition."""
    grid, partition, operators, gop = _build_problem(cfg, partition_counts=counts)
    if f is None:
        f = cfg.build_source(grid)
    cache = FactorizationCache()
    full = grid.full_window()
    u = np.zeros(grid.counts, dtype=np.complex128)
    norm_f = np.linalg.norm(f)
    history = []
    n_it = n_it or cfg.getint("decay", "iterations")
    for _ in range(n_it):
        r = f - gop.apply(u, region=full)
        history.append(float(np.linalg.norm(r) / norm_f))
        du, _ = diagonal_sweep_solve(r, partition, operators, cache, warn_collar=False)
        u += du.values
    return np.asarray(history)


def fit_decay_rate(history, skip: int, floor: float) -> float:
    """Least-squares slope of log10(residual) above the stagnation floor."""
    history = np.asarray(history)
    mask = history > floor
    k = np.arange(history.size)[mask][skip:]
    if k.size < 2:
        raise SolverError("too few iterations above the floor to fit a rate")
    return float(np.polyfit(k, np.log10(history[mask][skip:]), 1)[0])


def cmd_decay(cfg: RunConfig, out: Path, rng) -> int:
    partitions = cfg.decay_partitions()
    skip = cfg.getint("decay", "fit_skip")
    floor = cfg.getfloat("decay", "floor")
    report = {"config_sha256": cfg.sha256, "partitions": {}}
    if cfg.get("problem", "source") == "shots":
        report["shots"] = cfg.getpairs("problem", "shots")
    for counts in partitions:
        name = "x".join(map(str, counts))
        history = decay_history(cfg, counts)
        with _open_csv(out / f"decay_{name}.csv", cfg) as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "relative_residual"])
            for k, res in enumerate(history):
                writer.writerow([k, f"{res:.6e}"])
        rate = fit_decay_rate(history, skip, floor)
        report["partitions"][name] = {
            "rate_log10_per_iteration": rate,
            "final_residual": history[-1],
        }
        print(f"partition {name}: decay {rate:.3f} log10/iteration")
    rates = [p["rate_log10_per_iteration"] for p in report["partitions"].values()]
    if len(rates) >= 2:
        report["rate_ratio"] = rates[0] / rates[1]
    (out / "decay_report.json").write_text(json.dumps(report, indent=2))
    return 0


def cmd_pipeline(cfg: RunConfig, out: Path, rng) -> int:
    spec = cfg.pipeline_spec()
    schedule = simulate_pipeline(spec)
    report = {
        "config_sha256": cfg.sha256,
        "counts": list(spec.counts),
        "n_rhs": spec.n_rhs,
        "n_iter": spec.n_iter,
        "makespan": schedule.makespan,
        "avg_per_rhs": schedule.avg_per_rhs,
        "formula_avg": schedule.formula_avg,
        "formula_avg_recursive": average_time_recursive(spec),
        "simulation_vs_formula": schedule.avg_per_rhs / schedule.formula_avg - 1.0,
        "overhead_fraction": schedule.formula_avg
        / (spec.n_sweeps * spec.n_iter * spec.t0)
        - 1.0,
        "utilization_min": min(schedule.utilization),
        "utilization_max": max(schedule.utilization),
    }
    (out / "pipeline_report.json").write_text(json.dumps(report, indent=2))
    print(json.dumps(report))
    return 0


def cmd_precond_study(cfg: RunConfig, out: Path, rng) -> int:
    """GMRES iteration counts for a list of cells,NxM,frequency rows."""
    rows_spec = cfg.get("precond", "rows")
    results = []
    for token in rows_spec.split(";"):
        token = token.strip()
        if not token:
            continue
        try:
            cells_s, part_s, freq_s = (t.strip() for t in token.split(","))
            cells = int(cells_s)
            counts = tuple(int(t) for t in part_s.split("x"))
            freq = float(freq_s)
        except ValueError:
            raise ConfigurationError(f"bad precond row {token!r}") from None
        sub = RunConfig(
            {sec: dict(kv) for sec, kv in cfg.values.items()}, cfg.path
        )
        sub.values.setdefault("problem", {})["frequency"] = repr(freq)
        sub.values.setdefault("partition", {})["counts"] = ",".join(map(str, counts))
        sub.values.setdefault("discretization", {})["interior_cells"] = str(cells)
        sub.values.setdefault("solver", {})["mode"] = "gmres-ddm"
        grid, partition, operators, gop = _build_problem(sub, (cells,) * sub.dim)
        interior = sub.interior_extents()
        shots = [
            tuple(a + t * (b - a) for (a, b), t in zip(interior, frac))
            for frac in ((0.25, 0.25), (0.25, 0.75), (0.75, 0.25), (0.75, 0.75))
        ]
        f = point_shots(grid, shots, interior)
        u, info, _, krylov_report = _solve_once(sub, f, partition, operators, gop)
        results.append((cells, "x".join(map(str, counts)), freq, info["n_iter"],
                        info["converged"], info["wall_time"]))
        print(f"cells {cells} partition {part_s} freq {freq}: "
              f"n_iter {info['n_iter']} converged {info['converged']}")
    with _open_csv(out / "precond_study.csv", cfg) as fh:
        writer = csv.writer(fh)
        writer.writerow(["cells", "partition", "frequency", "n_iter", "converged",
                         "wall_time"])
        for row in results:
            writer.writerow(row)
    if any(not conv for *_, conv, _ in results):
        return EXIT_NOCONV
    return 0


_COMMANDS = {
    "solve": cmd_solve,
    "convergence": cmd_convergence,
    "decay": cmd_decay,
    "pipeline": cmd_pipeline,
    "precond-study": cmd_precond_study,
}


def _set_threads(n: int) -> None:
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        import os

        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(n)
        return
    threadpool_limits(limits=n)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diagsweep",
        description="Diagonal sweeping DDM solver for the Helmholtz equation",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", help="INI configuration file")
    parser.add_argument("--out", default="out", help="artifact directory")
    parser.add_argument("--seed", type=int, default=0, help="PRNG seed")
    parser.add_argument("--threads", type=int, default=1, help="thread cap")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override one config value (repeatable)",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = {}
        for item in args.overrides:
            if "=" not in item:
                raise ConfigurationError(f"--set needs SECTION.KEY=VALUE, got {item!r}")
            dotted, value = item.split("=", 1)
            overrides[dotted] = value
        cfg = load_config(args.config, overrides=overrides)
        _set_threads(args.threads)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        rng = np.random.default_rng(args.seed)
        return _COMMANDS[args.command](cfg, out, rng)
    except (ConfigurationError, ModelError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
