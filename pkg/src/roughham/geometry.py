"""Structure-preservation diagnostics in phase space."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import DomainError, Trajectory
from .noise import DriverPath
from .systems import symplectic_matrix

FD_EPS = 1e-6

# a map that advances every column of a (2m, *batch) array over step n
DomainFlow = Callable[[int, np.ndarray], np.ndarray]


def jacobian_fd(step: Callable[[np.ndarray], np.ndarray], y, eps: float = FD_EPS) -> np.ndarray:
    """Central-difference Jacobian of ``step`` at ``y``; all columns in one batched call."""
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    shifts = eps * np.eye(n)
    probes = np.concatenate([y[:, None] + shifts, y[:, None] - shifts], axis=1)
    out = np.asarray(step(probes))
    return (out[:, :n] - out[:, n:]) / (2.0 * eps)


def symplectic_defect(jac) -> float:
    """``|| J^T JJ J - JJ ||_F`` with ``JJ = [[0, I], [-I, 0]]``."""
    jac = np.asarray(jac, dtype=float)
    if jac.ndim != 2 or jac.shape[0] != jac.shape[1] or jac.shape[0] % 2:
        raise DomainError(f"need a square matrix of even size, got shape {jac.shape}")
    big_j = symplectic_matrix(jac.shape[0] // 2)
    return float(np.linalg.norm(jac.T @ big_j @ jac - big_j))


@dataclass(frozen=True)
class DomainPolygon:
    """Closed polygon in the (P, Q) plane; ``vertices`` has shape ``(2, n)``."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[0] != 2 or v.shape[1] < 3:
            raise DomainError(f"polygon needs shape (2, n>=3), got {v.shape}")
        object.__setattr__(self, "vertices", v)

    @classmethod
    def from_points(cls, points: Iterable[Sequence[float]]) -> "DomainPolygon":
        return cls(np.asarray(list(points), dtype=float).T)

    @classmethod
    def circle(cls, center=(1.0, 0.0), radius: float = 0.3, n_vertices: int = 64) -> "DomainPolygon":
        theta = 2.0 * np.pi * np.arange(n_vertices) / n_vertices
        c = np.asarray(center, dtype=float)
        return cls(np.stack([c[0] + radius * np.cos(theta), c[1] + radius * np.sin(theta)]))

    @property
    def area(self) -> float:
        return polygon_area(self)


def polygon_area(poly: DomainPolygon) -> float:
    x, y = poly.vertices
    signed = 0.5 * (np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))
    return float(abs(signed))


def evolve_domain(poly: DomainPolygon, flow: DomainFlow, n_steps: int,
                  snapshot_steps: Iterable[int]) -> list[tuple[int, DomainPolygon, float]]:
    """Advance all vertices together with ``flow(n, states)`` and record snapshots.

    ``flow`` must use the same noise path for every vertex (e.g. a stepper
    applied to a batch with one shared increment row).
    """
    wanted = sorted(set(int(s) for s in snapshot_steps))
    if wanted and (wanted[0] < 0 or wanted[-1] > n_steps):
        raise DomainError(f"snapshot steps must lie in 0..{n_steps}")
    out = []
    state = poly.vertices
    if 0 in wanted:
        out.append((0, poly, polygon_area(poly)))
    for n in range(n_steps):
        if wanted and n + 1 > wanted[-1]:
            break
        state = flow(n, state)
        if n + 1 in wanted:
            snap = DomainPolygon(state)
            out.append((n + 1, snap, polygon_area(snap)))
    return out


def stepper_flow(stepper, path: DriverPath) -> DomainFlow:
    if path.increments.ndim != 2:
        raise DomainError("domain evolution needs a single shared path")
    return lambda n, y: stepper(y, path.increments[n])


def energy_error(traj: Trajectory, energy: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """``|E(y_n) - E(y_0)|`` at every node."""
    values = np.asarray(energy(np.moveaxis(traj.states, 0, -1)))
    return np.abs(values - values[..., :1])


def write_snapshots_csv(snapshots, target: str | Path) -> None:
    with open(target, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "vertex_index", "P", "Q", "area"])
        for step, poly, area in snapshots:
            for i, (p, q) in enumerate(poly.vertices.T):
                writer.writerow([step, i, f"{p:.17g}", f"{q:.17g}", f"{area:.17g}"])
