"""Monte-Carlo experiment drivers: convergence orders, energy and domain studies."""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .core import DomainError, Grid, Trajectory
from .geometry import DomainPolygon, energy_error, evolve_domain, stepper_flow
from .integrators import DEFAULT_CONFIG, SolverConfig, StepError, integrate, make_stepper
from .modified import (
    modified_step,
    solve_truncated_modified,
    substeps,
    table_for,
)
from .noise import (
    DriverPath,
    NoiseSpec,
    coarsen_path,
    sample_fbm_path,
    sample_fbm_paths,
    truncate_path,
)
from .systems import HamiltonianSystem, kubo_exact, kubo_params, make_system

MAX_FAILED_FRACTION = 0.01


class StudyAborted(RuntimeError):
    pass


def default_threads() -> int:
    env = os.environ.get("ROUGHHAM_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# order regression


def estimate_order(h_list, err_list) -> tuple[float, float]:
    """OLS slope of ``log2 err`` against ``log2 h`` and the largest absolute residual."""
    h = np.asarray(h_list, dtype=float)
    err = np.asarray(err_list, dtype=float)
    if h.shape != err.shape:
        raise DomainError(f"{h.size} step sizes but {err.size} errors")
    if h.size < 3:
        raise DomainError(f"need at least 3 points for an order fit, got {h.size}")
    if np.any(h <= 0) or np.any(err <= 0) or not np.all(np.isfinite(err)):
        raise DomainError("step sizes and errors must be positive and finite")
    x, y = np.log2(h), np.log2(err)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.max(np.abs(y - (slope * x + intercept))))
    return float(slope), residual


def expected_slope(kind: str, hurst: float, n_tilde: int) -> float:
    """Reference orders: ``(N+1)H - 1`` for multiplicative noise, ``N H`` for additive noise."""
    if kind == "multiplicative":
        return (n_tilde + 1) * hurst - 1.0
    if kind == "additive":
        return n_tilde * hurst
    raise DomainError(f"unknown order model {kind!r}")


# ---------------------------------------------------------------------------
# convergence study


@dataclass(frozen=True)
class ConvergenceConfig:
    system: str = "example1"
    system_params: dict = field(default_factory=dict)
    method: str = "midpoint"
    hurst: tuple[float, ...] = (0.4, 0.45, 0.5)
    n_tilde: tuple[int, ...] = (2, 4)
    log2_steps: tuple[int, ...] = (4, 5, 6, 7, 8)
    log2_delta: int = 12
    n_samples: int = 200
    seed: int = 0
    t_end: float = 1.0
    z0: tuple[float, ...] = (1.0, 0.0)
    truncation_k: Optional[float] = None
    reference: str = "midpoint4"
    sup_norm: bool = False
    chunk_size: int = 200
    threads: int = 1
    solver: SolverConfig = DEFAULT_CONFIG

    def __post_init__(self):
        if self.n_samples < 2:
            raise DomainError(f"need at least 2 samples, got {self.n_samples}")
        if len(self.log2_steps) < 1 or min(self.log2_steps) < 0:
            raise DomainError("step exponents must be non-negative")
        if max(self.log2_steps) > self.log2_delta:
            raise DomainError("fine delta must not exceed the smallest macro step")
        if self.chunk_size < 1 or self.threads < 1:
            raise DomainError("chunk_size and threads must be positive")

    def steps(self) -> list[float]:
        return [self.t_end * 2.0 ** -i for i in self.log2_steps]

    @property
    def delta(self) -> float:
        return self.t_end * 2.0 ** -self.log2_delta


@dataclass
class CellResult:
    hurst: float
    n_tilde: int
    h: float
    mse: float
    rmse: float
    stderr: float
    n_ok: int
    n_failed: int


@dataclass
class OrderFit:
    hurst: float
    n_tilde: int
    slope: float
    residual: float


@dataclass
class ConvergenceReport:
    config: dict
    cells: list[CellResult]
    fits: list[OrderFit]
    failures: list[dict]

    def cell_table(self, hurst: float, n_tilde: int) -> list[CellResult]:
        return sorted((c for c in self.cells if c.hurst == hurst and c.n_tilde == n_tilde),
                      key=lambda c: -c.h)

    def fit(self, hurst: float, n_tilde: int) -> OrderFit:
        for f in self.fits:
            if f.hurst == hurst and f.n_tilde == n_tilde:
                return f
        raise KeyError((hurst, n_tilde))

    def to_json(self) -> str:
        return json.dumps(
            {"config": self.config, "cells": [asdict(c) for c in self.cells],
             "fits": [asdict(f) for f in self.fits], "failures": self.failures},
            indent=2, sort_keys=True)

    def write_csv(self, target: str | Path) -> None:
        with open(target, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["H", "n_tilde", "h", "mse", "rmse"])
            for c in self.cells:
                writer.writerow([f"{c.hurst:.17g}", c.n_tilde, f"{c.h:.17g}",
                                 f"{c.mse:.17g}", f"{c.rmse:.17g}"])


def _config_record(cfg: ConvergenceConfig) -> dict:
    rec = asdict(cfg)
    rec.pop("threads")  # execution detail; results do not depend on it
    return rec


def _cell_errors(cfg: ConvergenceConfig, sys: HamiltonianSystem, table, stepper,
                 path: DriverPath) -> np.ndarray:
    """Squared errors for one path batch, shape ``(n_tilde, batch)``."""
    z = np.asarray(cfg.z0, dtype=float).reshape((-1,) + (1,) * len(path.batch_shape))
    num = integrate(stepper, sys, z, path)
    out = []
    for n_tilde in cfg.n_tilde:
        ref = solve_truncated_modified(table, n_tilde, sys, z, path, cfg.delta, cfg.solver,
                                       cfg.reference)
        diff = num.states - ref.states
        sq = np.sum(diff**2, axis=1)
        out.append(np.max(sq, axis=0) if cfg.sup_norm else sq[-1])
    return np.stack(out)


def _chunk_errors(cfg, sys, table, stepper, hurst, start, count):
    """Squared errors of samples ``start..start+count`` at every step size.

    Shape ``(n_steps, n_tilde, count)``; failed cells are NaN and listed.
    """
    spec = NoiseSpec(sys.d, hurst, cfg.seed)
    finest = max(cfg.log2_steps)
    fine = sample_fbm_paths(spec, Grid(cfg.t_end, 2**finest), count, start)
    result = np.full((len(cfg.log2_steps), len(cfg.n_tilde), count), np.nan)
    failures = []
    for j, i in enumerate(cfg.log2_steps):
        path = coarsen_path(fine, 2 ** (finest - i))
        if cfg.truncation_k is not None:
            path = truncate_path(path, cfg.truncation_k)
        try:
            result[j] = _cell_errors(cfg, sys, table, stepper, path)
        except StepError:
            # isolate the offending samples
            for s in range(count):
                single = DriverPath(path.grid, path.increments[..., s:s + 1])
                try:
                    result[j, :, s] = _cell_errors(cfg, sys, table, stepper, single)[:, 0]
                except StepError as err:
                    failures.append({"hurst": hurst, "h": path.grid.h, "sample": start + s,
                                     "step": err.step_index, "message": str(err)})
    return result, failures


def run_convergence_study(cfg: ConvergenceConfig) -> ConvergenceReport:
    """Mean-square distance between the method and its truncated modified flow at ``t_end``."""
    sys = make_system(cfg.system, **cfg.system_params)
    for h in cfg.steps():
        substeps(h, cfg.delta)
    table = table_for(cfg.method, sys, cfg.solver)
    stepper = make_stepper(cfg.method, sys, cfg.solver)
    for n_tilde in cfg.n_tilde:
        if not 1 <= n_tilde <= table.order_cap:
            raise DomainError(f"truncation {n_tilde} outside 1..{table.order_cap} for {cfg.method}")

    cells, fits, failures = [], [], []
    starts = list(range(0, cfg.n_samples, cfg.chunk_size))
    for hurst in cfg.hurst:
        sq = np.full((len(cfg.log2_steps), len(cfg.n_tilde), cfg.n_samples), np.nan)

        def work(start, hurst=hurst):
            count = min(cfg.chunk_size, cfg.n_samples - start)
            return start, _chunk_errors(cfg, sys, table, stepper, hurst, start, count)

        if cfg.threads > 1:
            with ThreadPoolExecutor(cfg.threads) as pool:
                results = list(pool.map(work, starts))
        else:
            results = [work(s) for s in starts]
        for start, (chunk, fails) in results:
            sq[:, :, start:start + chunk.shape[2]] = chunk
            failures.extend(fails)

        n_failed_total = int(np.sum(np.isnan(sq)))
        if n_failed_total > MAX_FAILED_FRACTION * sq.size:
            raise StudyAborted(
                f"{n_failed_total} of {sq.size} cells failed at H={hurst}; first: "
                f"{failures[0]['message'] if failures else 'unknown'}")

        for k, n_tilde in enumerate(cfg.n_tilde):
            hs, errs = [], []
            for j, h in enumerate(cfg.steps()):
                vals = sq[j, k][np.isfinite(sq[j, k])]
                mse = float(np.mean(vals))
                rmse = math.sqrt(mse)
                se_mse = float(np.std(vals, ddof=1) / math.sqrt(vals.size))
                cells.append(CellResult(hurst, n_tilde, h, mse, rmse,
                                        se_mse / (2.0 * rmse) if rmse > 0 else 0.0,
                                        int(vals.size), int(cfg.n_samples - vals.size)))
                hs.append(h)
                errs.append(rmse)
            slope, resid = estimate_order(hs, errs)
            fits.append(OrderFit(hurst, n_tilde, slope, resid))
    return ConvergenceReport(_config_record(cfg), cells, fits, failures)


@dataclass(frozen=True)
class Band:
    center: float
    width: float

    def contains(self, x: float) -> bool:
        return abs(x - self.center) <= self.width


def check_convergence(report: ConvergenceReport, kind: str, widths: dict[int, float]) -> list[str]:
    """Band and truncation-dominance violations as human-readable lines (empty when all pass)."""
    problems = []
    for fit in report.fits:
        if fit.n_tilde not in widths:
            continue
        band = Band(expected_slope(kind, fit.hurst, fit.n_tilde), widths[fit.n_tilde])
        if not band.contains(fit.slope):
            problems.append(f"H={fit.hurst} N={fit.n_tilde}: slope {fit.slope:.3f} outside "
                            f"{band.center:.3f} +/- {band.width}")
    tildes = sorted({c.n_tilde for c in report.cells})
    if len(tildes) >= 2:
        lo, hi = tildes[0], tildes[-1]
        for hurst in sorted({c.hurst for c in report.cells}):
            for a, b in zip(report.cell_table(hurst, lo), report.cell_table(hurst, hi)):
                if b.rmse > a.rmse:
                    problems.append(f"H={hurst} h={a.h:g}: error for N={hi} ({b.rmse:.3e}) "
                                    f"exceeds N={lo} ({a.rmse:.3e})")
    return problems


# ---------------------------------------------------------------------------
# energy and domain studies on single paths


@dataclass(frozen=True)
class PathStudyConfig:
    system: str = "kubo"
    system_params: dict = field(default_factory=lambda: {"a": 1.0, "sigma": 1.0})
    methods: tuple[str, ...] = ("midpoint", "erk2", "spark-kubo")
    n_tilde: dict = field(default_factory=lambda: {"midpoint": (2, 4), "erk2": (2, 4),
                                                   "spark-kubo": (2, 3)})
    hurst: float = 0.5
    t_end: float = 50.0
    n_steps: int = 10 * 2**8
    delta: Optional[float] = None
    seed: int = 0
    z0: tuple[float, ...] = (1.0, 0.0)
    radius: float = 0.3
    n_vertices: int = 64
    snapshots: tuple[int, ...] = (0, 75, 100, 180)
    solver: SolverConfig = DEFAULT_CONFIG

    def grid(self) -> Grid:
        return Grid(self.t_end, self.n_steps)

    def substeps(self) -> int:
        if self.delta is None:
            return 1
        return substeps(self.grid().h, self.delta)

    def tildes(self, method: str) -> tuple[int, ...]:
        return tuple(self.n_tilde.get(method, ()))


def _study_path(cfg: PathStudyConfig, sys: HamiltonianSystem) -> DriverPath:
    return sample_fbm_path(NoiseSpec(sys.d, cfg.hurst, cfg.seed), cfg.grid())


@dataclass
class EnergyStudy:
    series: dict[str, np.ndarray]
    path: DriverPath

    def mean(self, label: str) -> float:
        return float(np.mean(self.series[label]))

    def max(self, label: str) -> float:
        return float(np.max(self.series[label]))


def _modified_trajectory(table, n_tilde, z, path, n_sub, solver) -> Trajectory:
    states = [np.asarray(z, dtype=float)]
    for n, row in enumerate(path.increments):
        try:
            states.append(modified_step(table, n_tilde, states[-1], row, n_sub, solver))
        except StepError as err:
            raise err.at_step(n) from err
    return Trajectory(path.grid, np.stack(states))


def run_energy_study(cfg: PathStudyConfig) -> EnergyStudy:
    """Energy drift of each method and its truncated modified flows on one shared path.

    Series labels are ``method`` and ``method/N=k``.
    """
    sys = make_system(cfg.system, **cfg.system_params)
    if sys.invariant is None:
        raise DomainError(f"system {sys.label!r} has no energy invariant")
    path = _study_path(cfg, sys)
    z = np.asarray(cfg.z0, dtype=float)
    series = {}
    for method in cfg.methods:
        traj = integrate(make_stepper(method, sys, cfg.solver), sys, z, path)
        series[method] = energy_error(traj, sys.invariant)
        if cfg.tildes(method):
            table = table_for(method, sys, cfg.solver)
            for n_tilde in cfg.tildes(method):
                mod = _modified_trajectory(table, n_tilde, z, path, cfg.substeps(), cfg.solver)
                series[f"{method}/N={n_tilde}"] = energy_error(mod, sys.invariant)
    return EnergyStudy(series, path)


@dataclass
class DomainStudy:
    snapshots: dict[str, list]
    path: DriverPath

    def areas(self, label: str) -> np.ndarray:
        return np.array([a for _, _, a in self.snapshots[label]])


def run_domain_study(cfg: PathStudyConfig) -> DomainStudy:
    """Evolve a circular domain under each method, its modified flows and (Kubo) the exact flow."""
    sys = make_system(cfg.system, **cfg.system_params)
    if sys.dim != 2:
        raise DomainError("domain studies need a two-dimensional phase space")
    path = _study_path(cfg, sys)
    poly = DomainPolygon.circle(cfg.z0, cfg.radius, cfg.n_vertices)
    n = cfg.grid().n_steps
    out = {}
    for method in cfg.methods:
        stepper = make_stepper(method, sys, cfg.solver)
        out[method] = evolve_domain(poly, stepper_flow(stepper, path), n, cfg.snapshots)
        if cfg.tildes(method):
            table = table_for(method, sys, cfg.solver)
            n_sub = cfg.substeps()
            for n_tilde in cfg.tildes(method):
                def flow(k, y, table=table, n_tilde=n_tilde):
                    return modified_step(table, n_tilde, y, path.increments[k], n_sub, cfg.solver)

                out[f"{method}/N={n_tilde}"] = evolve_domain(poly, flow, n, cfg.snapshots)
    if sys.label == "kubo":
        params = kubo_params(sys)
        sums = path.noise_sums()
        times = path.grid.times

        def exact(k, y):
            # rotate from t_k to t_{k+1}
            return kubo_exact(params, y, times[k + 1] - times[k],
                              sums[k + 1].sum() - sums[k].sum())

        out["exact"] = evolve_domain(poly, exact, n, cfg.snapshots)
    return DomainStudy(out, path)
