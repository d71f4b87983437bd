"""Command-line front end.

Exit codes: 0 success, 1 an acceptance band was violated under ``--check``,
2 invalid arguments or configuration, 3 the run itself failed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import SECTION_OF, ConfigError, RunConfig, load_config
from .core import DomainError, Grid
from .harness import (
    ConvergenceConfig,
    PathStudyConfig,
    StudyAborted,
    check_convergence,
    default_threads,
    run_convergence_study,
    run_domain_study,
    run_energy_study,
)
from .geometry import write_snapshots_csv
from .integrators import SolverConfig, StepError, make_stepper
from .modified import RecursionTable, table_for, write_coefficient_csv
from .noise import (
    NoiseSpec,
    increment_covariance,
    rho_variation_diagnostic,
    sample_fbm_path,
    sample_fbm_paths,
    write_path_csv,
)
from .systems import make_system

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_RUN = 0, 1, 2, 3


class Manifest:
    """``manifest.json`` is written before any data file and finalised at the end."""

    def __init__(self, out: Path, command: str, echo: dict, digest: str, seeds: dict):
        self.path = out / "manifest.json"
        self.start = time.perf_counter()
        self.data = {
            "command": command,
            "config": echo,
            "config_sha256": digest,
            "seeds": seeds,
            "versions": {"roughham": __version__, "numpy": np.__version__,
                         "python": platform.python_version()},
            "status": "running",
            "files": [],
        }
        self._flush()

    def add(self, name: str) -> Path:
        self.data["files"].append(name)
        self._flush()
        return self.path.parent / name

    def finish(self, status: str, **extra):
        self.data.update(status=status, wall_time_s=round(time.perf_counter() - self.start, 3),
                         **extra)
        self._flush()

    def _flush(self):
        self.path.write_text(json.dumps(self.data, indent=2, sort_keys=True) + "\n")


def _solver(cfg: RunConfig) -> SolverConfig:
    chk = cfg.values["check"]
    return SolverConfig(chk["solver_tol"], chk["solver_max_iter"])


def _report(lines: list[str]) -> int:
    for line in lines:
        print(f"CHECK FAILED: {line}", file=sys.stderr)
    if not lines:
        print("all checks passed")
    return EXIT_CHECK if lines else EXIT_OK


def cmd_convergence(cfg: RunConfig, args, out: Path) -> int:
    m = cfg.main
    conv = ConvergenceConfig(
        system=m["system"], system_params=cfg.system_params, method=m["method"],
        hurst=m["hurst"], n_tilde=m["n_tilde"], log2_steps=m["log2_steps"],
        log2_delta=m["log2_delta"], n_samples=m["samples"], seed=m["seed"], t_end=m["t_end"],
        z0=m["z0"], truncation_k=m["truncation_k"], reference=m["reference"],
        sup_norm=m["sup_norm"], chunk_size=m["chunk_size"], threads=args.threads,
        solver=_solver(cfg),
    )
    manifest = Manifest(out, cfg.command, cfg.echo(), cfg.digest(), {"base": conv.seed})
    report = run_convergence_study(conv)
    manifest.add("report.json").write_text(report.to_json() + "\n")
    report.write_csv(manifest.add("cells.csv"))
    for fit in report.fits:
        print(f"H={fit.hurst:g} N={fit.n_tilde}: slope {fit.slope:.3f} (fit residual {fit.residual:.3f})")
    status = EXIT_OK
    if args.check:
        chk = cfg.values["check"]
        status = _report(check_convergence(report, chk["order_model"],
                                           {2: chk["width_2"], 4: chk["width_4"]}))
    manifest.finish("complete", exit_code=status)
    return status


def _study_config(cfg: RunConfig, args) -> PathStudyConfig:
    m = cfg.main
    tildes = {"midpoint": m["n_tilde_midpoint"], "erk2": m["n_tilde_erk2"],
              "spark-kubo": m["n_tilde_spark_kubo"]}
    return PathStudyConfig(
        system=m["system"], system_params=cfg.system_params, methods=m["methods"],
        n_tilde={k: v for k, v in tildes.items() if v}, hurst=m["hurst"], t_end=m["t_end"],
        n_steps=m["n_steps"], delta=m["delta"], seed=m["seed"], z0=m["z0"],
        radius=m["radius"], n_vertices=m["n_vertices"], snapshots=m["snapshots"],
        solver=_solver(cfg),
    )


def cmd_energy(cfg: RunConfig, args, out: Path) -> int:
    study_cfg = _study_config(cfg, args)
    manifest = Manifest(out, cfg.command, cfg.echo(), cfg.digest(), {"path": study_cfg.seed})
    study = run_energy_study(study_cfg)
    labels = list(study.series)
    times = study.path.grid.times
    with open(manifest.add("energy.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "t"] + labels)
        for n, t in enumerate(times):
            writer.writerow([n, f"{t:.17g}"] + [f"{study.series[k][n]:.17g}" for k in labels])
    summary = {k: {"max": study.max(k), "mean": study.mean(k)} for k in labels}
    manifest.add("summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    for k in labels:
        print(f"{k}: max {summary[k]['max']:.3e} mean {summary[k]['mean']:.3e}")
    status = EXIT_OK
    if args.check:
        problems = []
        limit = cfg.values["check"]["energy_max"]
        if "midpoint" in summary and summary["midpoint"]["max"] > limit:
            problems.append(f"midpoint energy error {summary['midpoint']['max']:.3e} > {limit:g}")
        if {"spark-kubo", "erk2"} <= summary.keys() and \
                summary["spark-kubo"]["mean"] >= summary["erk2"]["mean"]:
            problems.append("spark-kubo mean energy error is not below erk2's")
        status = _report(problems)
    manifest.finish("complete", exit_code=status)
    return status


def cmd_domain(cfg: RunConfig, args, out: Path) -> int:
    study_cfg = _study_config(cfg, args)
    manifest = Manifest(out, cfg.command, cfg.echo(), cfg.digest(), {"path": study_cfg.seed})
    study = run_domain_study(study_cfg)
    areas = {}
    for label, snaps in study.snapshots.items():
        safe = label.replace("/", "_").replace("=", "")
        write_snapshots_csv(snaps, manifest.add(f"snapshots_{safe}.csv"))
        areas[label] = {str(step): area for step, _, area in snaps}
    manifest.add("areas.json").write_text(json.dumps(areas, indent=2, sort_keys=True) + "\n")
    for label in study.snapshots:
        a = study.areas(label)
        print(f"{label}: area {a[0]:.6f} -> {a[-1]:.6f}")
    status = EXIT_OK
    if args.check:
        rtol = cfg.values["check"]["area_rtol"]
        problems = []
        for label in ("midpoint", "spark-kubo"):
            if label in study.snapshots:
                a = study.areas(label)
                drift = float(np.max(np.abs(a - a[0])) / a[0])
                if drift > rtol:
                    problems.append(f"{label} area drift {drift:.3e} > {rtol:g}")
        if "erk2" in study.snapshots:
            a = study.areas("erk2")
            if not np.all(np.diff(a) > 0):
                problems.append("erk2 area is not strictly increasing across snapshots")
        status = _report(problems)
    manifest.finish("complete", exit_code=status)
    return status


def cmd_coeff_check(cfg: RunConfig, args, out: Path) -> int:
    m = cfg.main
    solver = _solver(cfg)
    sys_ = make_system(m["system"], **cfg.system_params)
    manifest = Manifest(out, cfg.command, cfg.echo(), cfg.digest(), {"points": m["seed"]})
    table = table_for(m["method"], sys_, solver)
    oracle = RecursionTable(m["method"], sys_, make_stepper(m["method"], sys_, solver),
                            table.order_cap)
    rng = np.random.default_rng(m["seed"])
    points = rng.uniform(-m["box"], m["box"], size=(m["points"], sys_.dim))
    worst = {}
    for y in points:
        for alpha in table.indices:
            err = float(np.max(np.abs(table.f(alpha, y) - oracle.f(alpha, y))))
            worst[str(alpha)] = max(worst.get(str(alpha), 0.0), err)
    write_coefficient_csv(table, points, manifest.add("coefficients.csv"))
    manifest.add("coeff_check.json").write_text(json.dumps(worst, indent=2, sort_keys=True) + "\n")
    overall = max(worst.values())
    print(f"{m['method']} on {sys_.label}: max table/oracle discrepancy {overall:.3e} "
          f"over {len(points)} points and {len(worst)} indices")
    status = EXIT_OK
    if args.check:
        tol = cfg.values["check"]["coeff_tol"]
        status = _report([f"alpha={a}: discrepancy {e:.3e} > {tol:g}"
                          for a, e in worst.items() if e > tol])
    manifest.finish("complete", exit_code=status)
    return status


def covariance_zscores(spec: NoiseSpec, grid: Grid, n_samples: int) -> np.ndarray:
    """Per-entry z-scores of the sample increment covariance against the exact kernel."""
    path = sample_fbm_paths(spec, grid, n_samples)
    x = path.increments[:, 1:]  # (n, d, samples)
    exact = increment_covariance(grid, spec.hurst)
    zs = []
    for l in range(spec.d):
        xl = x[:, l]
        prod = xl[:, None, :] * xl[None, :, :]
        est = prod.mean(axis=-1)
        se = prod.std(axis=-1, ddof=1) / np.sqrt(n_samples)
        zs.append((est - exact) / se)
    return np.stack(zs)


def cmd_noise_check(cfg: RunConfig, args, out: Path) -> int:
    m = cfg.main
    manifest = Manifest(out, cfg.command, cfg.echo(), cfg.digest(), {"base": m["seed"]})
    grid = Grid(m["t_end"], m["steps"])
    results = {}
    for hurst in m["hurst"]:
        spec = NoiseSpec(m["d"], hurst, m["seed"])
        z = covariance_zscores(spec, grid, m["samples"])
        results[f"{hurst:g}"] = {"max_abs_z": float(np.max(np.abs(z))),
                                 "rho_variation": rho_variation_diagnostic(spec, grid)}
        print(f"H={hurst:g}: max |z| = {results[f'{hurst:g}']['max_abs_z']:.2f}, "
              f"rho-variation diagnostic {results[f'{hurst:g}']['rho_variation']:.4f}")
    manifest.add("noise_check.json").write_text(json.dumps(results, indent=2, sort_keys=True) + "\n")
    status = EXIT_OK
    if args.check:
        bound = cfg.values["check"]["noise_z"]
        status = _report([f"H={h}: max |z| {r['max_abs_z']:.2f} > {bound:g}"
                          for h, r in results.items() if r["max_abs_z"] > bound])
    manifest.finish("complete", exit_code=status)
    return status


def cmd_sample_path(args, out: Path) -> int:
    spec = NoiseSpec(args.d, args.hurst, args.seed)
    grid = Grid(args.t_end, args.steps)
    echo = {"command": "sample-path", "values": {"hurst": args.hurst, "steps": args.steps,
                                                  "seed": args.seed, "d": args.d,
                                                  "t_end": args.t_end}}
    digest = hashlib.sha256(json.dumps(echo, sort_keys=True).encode()).hexdigest()
    manifest = Manifest(out, "sample-path", echo, digest, {"base": args.seed})
    write_path_csv(sample_fbm_path(spec, grid), manifest.add("path.csv"))
    manifest.finish("complete", exit_code=EXIT_OK)
    return EXIT_OK


COMMANDS = {
    "convergence": (cmd_convergence, "mean-square convergence against truncated modified flows"),
    "energy": (cmd_energy, "energy error of methods and modified flows on one path"),
    "domain": (cmd_domain, "phase-plane domain evolution and areas"),
    "coeff-check": (cmd_coeff_check, "closed-form coefficient tables vs extraction and recursion"),
    "noise-check": (cmd_noise_check, "fBm covariance and rho-variation diagnostics"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roughham",
        description="Modified equations and structure diagnostics for rough Hamiltonian systems.",
        epilog="Threads default to $ROUGHHAM_THREADS, else the machine's CPU count.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default="roughham-out", help="output directory (created if missing)")
        p.add_argument("--seed", type=int, help="base seed (overrides the config)")
        p.add_argument("--threads", type=int, help="worker threads for sample chunks")

    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="key=value file with [section] headers")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one setting; KEY may be section.key (repeatable)")
        p.add_argument("--samples", type=int, help="Monte-Carlo sample count (overrides the config)")
        p.add_argument("--check", action="store_true",
                       help="exit 1 if an acceptance band is violated")
        common(p)

    p = sub.add_parser("sample-path", help="write one driver path as CSV",
                       description="Write one exact fBm increment path as CSV.")
    p.add_argument("--hurst", type=float, default=0.5)
    p.add_argument("--steps", type=int, default=16)
    p.add_argument("--d", type=int, default=1, help="number of noise components")
    p.add_argument("--t-end", type=float, default=1.0)
    common(p)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    threads = args.threads if args.threads is not None else default_threads()
    if threads < 1:
        parser.error("--threads must be positive")
    args.threads = threads
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory {out}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "sample-path":
            args.seed = 0 if args.seed is None else args.seed
            return cmd_sample_path(args, out)
        overrides = list(args.set)
        main_section = SECTION_OF[args.command]
        if args.seed is not None:
            overrides.append(f"{main_section}.seed={args.seed}")
        if args.samples is not None:
            if main_section not in ("convergence", "noise"):
                parser.error(f"--samples does not apply to {args.command}")
            overrides.append(f"{main_section}.samples={args.samples}")
        cfg = load_config(args.command, args.config, overrides)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    handler = COMMANDS[args.command][0]
    try:
        return handler(cfg, args, out)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        _mark_failed(out, str(exc))
        return EXIT_CONFIG
    except (StepError, StudyAborted, np.linalg.LinAlgError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        _mark_failed(out, str(exc))
        return EXIT_RUN


def _mark_failed(out: Path, message: str) -> None:
    path = out / "manifest.json"
    try:
        data = json.loads(path.read_text())
    except (OSError, ValueError):
        return
    if data.get("status") == "running":
        data.update(status="failed", error=message)
        path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    sys.exit(main())
