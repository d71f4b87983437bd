"""Gaussian driver increments: exact fBm sampling, coarsening and truncation."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .core import DomainError, Grid

MAX_CHOLESKY_STEPS = 2**14
CHOLESKY_JITTER = 1e-12


@dataclass(frozen=True)
class NoiseSpec:
    d: int
    hurst: float
    seed: int = 0

    def __post_init__(self):
        if self.d < 1:
            raise DomainError(f"need at least one noise component, got d={self.d}")
        if not 0.25 < self.hurst <= 0.5:
            raise DomainError(f"Hurst parameter must lie in (1/4, 1/2], got {self.hurst}")

    @property
    def rho(self) -> float:
        return 1.0 / (2.0 * self.hurst)


@dataclass(frozen=True)
class DriverPath:
    """Increments on a uniform grid.

    ``increments`` has shape ``(n_steps, d + 1, *batch)``; column 0 is the time
    increment ``h`` and columns ``1..d`` are the noise increments.
    """

    grid: Grid
    increments: np.ndarray

    def __post_init__(self):
        if self.increments.ndim < 2 or self.increments.shape[0] != self.grid.n_steps:
            raise DomainError(
                f"increments shape {self.increments.shape} does not match {self.grid}"
            )

    @property
    def d(self) -> int:
        return self.increments.shape[1] - 1

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.increments.shape[2:]

    def noise_sums(self) -> np.ndarray:
        """Cumulative noise values ``X^l_{t_n}``, shape ``(n_steps + 1, d, *batch)``."""
        zero = np.zeros((1,) + self.increments.shape[1:])[:, 1:]
        return np.concatenate([zero, np.cumsum(self.increments[:, 1:], axis=0)], axis=0)

    def sample(self, i: int) -> "DriverPath":
        """Select one sample of a batched path."""
        return DriverPath(self.grid, self.increments[..., i])


@dataclass(frozen=True)
class TruncatedPath(DriverPath):
    """Brownian increments clamped at ``A_h sqrt(h)``."""

    base: DriverPath | None = None
    threshold_k: float = 4.0

    @property
    def threshold(self) -> float:
        return truncation_threshold(self.grid.h, self.threshold_k)


def sample_seed(base_seed: int, index: int) -> int:
    """64-bit seed for sample ``index`` of a Monte-Carlo run, independent of run order."""
    ss = np.random.SeedSequence([int(base_seed) & (2**64 - 1), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def increment_covariance(grid: Grid, hurst: float) -> np.ndarray:
    """Covariance of fBm increments on ``grid``, shape ``(n_steps, n_steps)``."""
    t = grid.times
    two_h = 2.0 * hurst
    ti, tj = t[:-1, None], t[None, :-1]
    ti1, tj1 = t[1:, None], t[None, 1:]
    return 0.5 * (
        np.abs(tj1 - ti) ** two_h
        + np.abs(tj - ti1) ** two_h
        - np.abs(tj - ti) ** two_h
        - np.abs(tj1 - ti1) ** two_h
    )


@lru_cache(maxsize=32)
def _unit_cholesky(n_steps: int, hurst: float) -> np.ndarray:
    # factor on the unit-step grid; the h-grid factor is h**H times this by self-similarity
    cov = increment_covariance(Grid(float(n_steps), n_steps), hurst)
    try:
        factor = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        try:
            factor = np.linalg.cholesky(cov + CHOLESKY_JITTER * np.eye(n_steps))
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(
                f"fBm increment covariance not positive definite (n={n_steps}, H={hurst})"
            ) from exc
    factor.setflags(write=False)
    return factor


def fbm_cholesky(grid: Grid, hurst: float) -> np.ndarray:
    if hurst == 0.5:
        return math.sqrt(grid.h) * np.eye(grid.n_steps)
    return grid.h**hurst * _unit_cholesky(grid.n_steps, float(hurst))


def _check_grid(grid: Grid):
    if grid.n_steps > MAX_CHOLESKY_STEPS:
        raise DomainError(f"n_steps={grid.n_steps} exceeds dense Cholesky bound {MAX_CHOLESKY_STEPS}")


def _standard_normals(seed: int, d: int, n_steps: int) -> np.ndarray:
    return np.random.default_rng(seed).standard_normal((d, n_steps))


def _colour(spec: NoiseSpec, grid: Grid, z: np.ndarray) -> np.ndarray:
    """Map iid normals ``z`` of shape ``(d, n, *batch)`` to increments ``(n, d, *batch)``."""
    if spec.hurst == 0.5:
        noise = math.sqrt(grid.h) * z
    else:
        noise = np.einsum("ij,dj...->di...", fbm_cholesky(grid, spec.hurst), z)
    return np.moveaxis(noise, 0, 1)


def _with_time_column(grid: Grid, noise: np.ndarray) -> np.ndarray:
    time_col = np.full((noise.shape[0], 1) + noise.shape[2:], grid.h)
    return np.concatenate([time_col, noise], axis=1)


def sample_fbm_path(spec: NoiseSpec, grid: Grid) -> DriverPath:
    """Exact fBm increments for ``d`` independent components, seeded by ``spec.seed``."""
    _check_grid(grid)
    z = _standard_normals(spec.seed, spec.d, grid.n_steps)
    return DriverPath(grid, _with_time_column(grid, _colour(spec, grid, z)))


def sample_fbm_paths(spec: NoiseSpec, grid: Grid, n_samples: int, start: int = 0) -> DriverPath:
    """Batch of paths; sample ``i`` equals ``sample_fbm_path`` with seed ``sample_seed(spec.seed, i)``."""
    _check_grid(grid)
    z = np.stack(
        [
            _standard_normals(sample_seed(spec.seed, i), spec.d, grid.n_steps)
            for i in range(start, start + n_samples)
        ],
        axis=-1,
    )
    return DriverPath(grid, _with_time_column(grid, _colour(spec, grid, z)))


def coarsen_path(path: DriverPath, factor: int) -> DriverPath:
    """Sum blocks of ``factor`` consecutive increments.

    Power-of-two factors are summed as a pairwise tree, so coarsening by 2
    twice gives bit-for-bit the same path as coarsening by 4.
    """
    coarse = path.grid.coarsen(factor)
    inc = path.increments
    if factor & (factor - 1) == 0:
        summed = inc
        while summed.shape[0] > coarse.n_steps:
            summed = summed[0::2] + summed[1::2]
        summed = np.array(summed, copy=True)
    else:
        summed = inc.reshape((coarse.n_steps, factor) + inc.shape[1:]).sum(axis=1)
    summed[:, 0] = coarse.h
    return DriverPath(coarse, summed)


def truncation_threshold(h: float, k: float) -> float:
    if not 0 < h < 1:
        raise DomainError(f"truncation needs 0 < h < 1, got h={h}")
    if k <= 0:
        raise DomainError(f"threshold constant k must be positive, got {k}")
    return math.sqrt(k * abs(math.log(h)))


def truncate_path(path: DriverPath, k: float = 4.0) -> TruncatedPath:
    """Clamp standardized increments ``xi = dX / sqrt(h)`` to ``[-A_h, A_h]``."""
    h = path.grid.h
    a_h = truncation_threshold(h, k)
    sqrt_h = math.sqrt(h)
    inc = np.array(path.increments, dtype=float, copy=True)
    noise = inc[:, 1:]
    bound = a_h * sqrt_h
    # in-threshold increments are kept bit-for-bit so truncation is idempotent
    inc[:, 1:] = np.where(np.abs(noise) > bound, np.sign(noise) * bound, noise)
    base = path.base if isinstance(path, TruncatedPath) else path
    return TruncatedPath(path.grid, inc, base=base, threshold_k=k)


def rho_variation_diagnostic(spec: NoiseSpec, grid: Grid) -> float:
    """Heuristic lower bound on the 2D rho-variation constant over ``[0, t_end]``.

    Only the grid's own uniform dissection is used, so the value under-estimates
    the supremum over all dissections.
    """
    rho = spec.rho
    cov = increment_covariance(grid, spec.hurst)
    total = np.sum(np.abs(cov) ** rho) ** (1.0 / rho)
    return float(total / grid.t_end ** (1.0 / rho))


def write_path_csv(path: DriverPath, target: str | Path | io.TextIOBase) -> None:
    """Write header ``t,dX0,...,dXd`` and one row per step at 17 significant digits."""
    if path.increments.ndim != 2:
        raise DomainError("only single-sample paths can be exported")
    own = isinstance(target, (str, Path))
    fh = open(target, "w", newline="") if own else target
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t"] + [f"dX{l}" for l in range(path.d + 1)])
        times = path.grid.times[:-1]
        for t, row in zip(times, path.increments):
            writer.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in row])
    finally:
        if own:
            fh.close()


def read_path_csv(source: str | Path | io.TextIOBase, t_end: float | None = None) -> DriverPath:
    own = isinstance(source, (str, Path))
    fh = open(source, newline="") if own else source
    try:
        reader = csv.reader(fh)
        header = next(reader)
        if header[0] != "t" or any(col != f"dX{l}" for l, col in enumerate(header[1:])):
            raise DomainError(f"unexpected path CSV header {header}")
        rows = [[float(v) for v in line] for line in reader if line]
    finally:
        if own:
            fh.close()
    data = np.array(rows)
    inc = data[:, 1:]
    if t_end is None:
        t_end = float(len(rows) * inc[0, 0])
    return DriverPath(Grid(t_end, len(rows)), inc)
