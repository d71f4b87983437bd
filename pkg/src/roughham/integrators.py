"""One-step maps for rough Hamiltonian systems and grid integration.

A stepper is a callable ``stepper(y, row) -> y_next`` where ``row`` holds the
increments ``(h, dX^1, ..., dX^d)`` of one step. Use :func:`make_stepper` to
bind a method to a system.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Callable

import numpy as np

from .core import DomainError, Trajectory, as_phase_point
from .noise import DriverPath
from .systems import HamiltonianSystem, KuboParams, kubo_params

Stepper = Callable[[np.ndarray, np.ndarray], np.ndarray]


class StepError(RuntimeError):
    """A one-step solve failed; carries fixed-point diagnostics."""

    def __init__(self, message: str, iterations: int = 0, residual: float = float("nan"),
                 step_index: int | None = None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual
        self.step_index = step_index

    def at_step(self, n: int) -> "StepError":
        return StepError(f"step {n}: {self}", self.iterations, self.residual, n)


@dataclass(frozen=True)
class SolverConfig:
    fp_tol: float = 1e-14
    fp_max_iter: int = 100

    def __post_init__(self):
        if not self.fp_tol > 0:
            raise DomainError(f"fp_tol must be positive, got {self.fp_tol}")
        if self.fp_max_iter < 1:
            raise DomainError(f"fp_max_iter must be >= 1, got {self.fp_max_iter}")


DEFAULT_CONFIG = SolverConfig()


def fixed_point(g: Callable[[np.ndarray], np.ndarray], x0: np.ndarray,
                cfg: SolverConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Iterate ``x <- g(x)`` until the max-norm update is below ``fp_tol``.

    Scaled by ``1 + |x|`` so the criterion stays attainable for large states.
    Raises :class:`StepError` when the update norm doubles between sweeps or
    the iteration budget runs out; no damping is attempted.
    """
    x = x0
    prev = np.inf
    for it in range(1, cfg.fp_max_iter + 1):
        x_new = g(x)
        upd = float(np.max(np.abs(x_new - x))) if np.size(x) else 0.0
        scale = 1.0 + float(np.max(np.abs(x_new))) if np.size(x) else 1.0
        if not np.isfinite(upd):
            raise StepError("fixed-point iteration produced non-finite values", it, upd)
        x = x_new
        if upd <= cfg.fp_tol * scale:
            return x
        if it > 1 and upd > 2.0 * prev and upd > 1e3 * cfg.fp_tol * scale:
            raise StepError(
                f"fixed-point iteration diverging (update {upd:.3e} after {prev:.3e}); "
                "step too large for contraction", it, upd)
        prev = upd
    raise StepError(f"fixed-point iteration did not converge in {cfg.fp_max_iter} sweeps "
                    f"(last update {upd:.3e})", cfg.fp_max_iter, upd)


def _check_row(sys: HamiltonianSystem, row) -> np.ndarray:
    row = np.asarray(row)
    if row.shape[0] != sys.d + 1:
        raise DomainError(f"increment row has {row.shape[0]} entries, expected {sys.d + 1}")
    return row


def _newton_midpoint(F, y: np.ndarray, cfg: SolverConfig) -> np.ndarray:
    # G(Y) = Y - y - F((y + Y)/2),  G'(Y) = I - DF(m)/2
    dim = y.shape[0]
    eye = np.eye(dim)
    Y = y.copy()
    upd = np.inf
    for it in range(1, cfg.fp_max_iter + 1):
        m = 0.5 * (y + Y)
        resid = Y - y - F.value(m)
        cols = [F.d1(m, np.broadcast_to(eye[:, j].reshape((dim,) + (1,) * (y.ndim - 1)), y.shape))
                for j in range(dim)]
        jac = np.moveaxis(eye.reshape((dim, dim) + (1,) * (y.ndim - 1)) - 0.5 * np.stack(cols, axis=1),
                          (0, 1), (-2, -1))
        try:
            step = np.linalg.solve(jac, np.moveaxis(resid, 0, -1)[..., None])[..., 0]
        except np.linalg.LinAlgError:
            raise StepError("midpoint Newton system is singular", it, upd) from None
        step = np.moveaxis(step, -1, 0)
        Y = Y - step
        upd = float(np.max(np.abs(step))) if np.size(step) else 0.0
        if not np.isfinite(upd):
            break
        if upd <= cfg.fp_tol * (1.0 + float(np.max(np.abs(Y)))):
            return Y
    raise StepError(f"midpoint Newton iteration did not converge (last update {upd:.3e})",
                    cfg.fp_max_iter, upd)


def step_midpoint(sys: HamiltonianSystem, y, row, cfg: SolverConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Implicit midpoint ``Y' = y + sum_l V_l((y + Y') / 2) row_l``.

    Plain fixed-point iteration from ``y``. When that fails to contract the
    step is retried with Newton's method, which also handles steps at the
    edge of the contraction regime (e.g. a quarter turn of a linear rotation).
    """
    y = as_phase_point(y, sys.dim)
    F = sys.combined(_check_row(sys, row))
    try:
        return fixed_point(lambda Y: y + F.value(0.5 * (y + Y)), y, cfg)
    except StepError as picard:
        try:
            return _newton_midpoint(F, np.asarray(y, dtype=float), cfg)
        except StepError:
            raise picard from None


def step_explicit_rk2(sys: HamiltonianSystem, y, row) -> np.ndarray:
    """Explicit two-stage scheme ``Y' = y + F(y + F(y) / 2)`` with ``F = sum_l row_l V_l``."""
    y = as_phase_point(y, sys.dim)
    F = sys.combined(_check_row(sys, row))
    return y + F.value(y + 0.5 * F.value(y))


def step_spark_kubo(params: KuboParams, y, row) -> np.ndarray:
    """Semi-implicit symplectic partitioned scheme for the Kubo oscillator.

    The implicit momentum equation is linear and solved in closed form.
    """
    y = as_phase_point(y, 2)
    h, s = row[0], row[1] + row[2]
    a, sig = params.a, params.sigma
    p, q = y[0], y[1]
    p1 = (p - a * q * h - sig * q * s) / (1.0 + sig**2 * h)
    q1 = q + a * p1 * h + sig**2 * q * h + sig * p1 * s
    return np.stack(np.broadcast_arrays(p1, q1))


@dataclass(frozen=True)
class Tableau:
    a: np.ndarray
    b: np.ndarray
    kappa: float = field(init=False)
    mu: float = field(init=False)

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if a.shape != (len(b), len(b)):
            raise DomainError(f"tableau shapes a{a.shape}, b{b.shape} are inconsistent")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise DomainError("tableau entries must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "kappa", float(np.max(np.sum(np.abs(a), axis=1))))
        object.__setattr__(self, "mu", float(np.sum(np.abs(b))))

    @property
    def s(self) -> int:
        return len(self.b)

    @property
    def explicit(self) -> bool:
        return bool(np.all(np.triu(self.a) == 0.0))


GAUSS1 = Tableau([[0.5]], [1.0])
EXPLICIT_MIDPOINT = Tableau([[0.0, 0.0], [0.5, 0.0]], [0.0, 1.0])


def load_tableau(path: str | Path) -> Tableau:
    """Plain-text tableau: first line ``s``, then ``s`` rows of ``a``, then the ``b`` row."""
    lines = [ln.split("#")[0].strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln]
    try:
        s = int(lines[0])
        a = [[float(v) for v in ln.replace(",", " ").split()] for ln in lines[1:1 + s]]
        b = [float(v) for v in lines[1 + s].replace(",", " ").split()]
    except (IndexError, ValueError) as exc:
        raise DomainError(f"malformed tableau file {path}: {exc}") from exc
    if len(lines) != s + 2:
        raise DomainError(f"tableau file {path} should have {s + 2} non-empty lines")
    return Tableau(a, b)


def step_general_srk(tab: Tableau, sys: HamiltonianSystem, y, row,
                     cfg: SolverConfig = DEFAULT_CONFIG) -> np.ndarray:
    """s-stage stochastic Runge--Kutta step driven by the increments in ``row``."""
    y = as_phase_point(y, sys.dim)
    F = sys.combined(_check_row(sys, row))
    s = tab.s
    if tab.explicit:
        k = []
        for i in range(s):
            stage = y + sum(tab.a[i, j] * k[j] for j in range(i))
            k.append(F.value(stage))
    else:
        def sweep(stages):
            k = [F.value(stages[j]) for j in range(s)]
            return np.stack([y + sum(tab.a[i, j] * k[j] for j in range(s)) for i in range(s)])

        stages = fixed_point(sweep, np.stack([y] * s), cfg)
        k = [F.value(stages[j]) for j in range(s)]
    return y + sum(tab.b[i] * k[i] for i in range(s))


METHODS = ("midpoint", "erk2", "spark-kubo")


def make_stepper(method: str, sys: HamiltonianSystem, cfg: SolverConfig = DEFAULT_CONFIG) -> Stepper:
    """Bind ``method`` ("midpoint", "erk2", "spark-kubo" or "srk:<file>") to ``sys``."""
    if method == "midpoint":
        return partial(step_midpoint, sys, cfg=cfg)
    if method == "erk2":
        return partial(step_explicit_rk2, sys)
    if method == "spark-kubo":
        return partial(step_spark_kubo, kubo_params(sys))
    if method.startswith("srk:"):
        return partial(step_general_srk, load_tableau(method[4:]), sys, cfg=cfg)
    raise DomainError(f"unknown method {method!r}")


def integrate(stepper: Stepper, sys: HamiltonianSystem, z, path: DriverPath) -> Trajectory:
    """Iterate the one-step map over every row of ``path``."""
    if path.d != sys.d:
        raise DomainError(f"path has {path.d} noise components, system has {sys.d}")
    z = as_phase_point(z, sys.dim)
    shape = np.broadcast_shapes(z.shape, (sys.dim,) + path.batch_shape)
    states = np.empty((path.grid.n_steps + 1,) + shape, dtype=np.result_type(z, path.increments))
    states[0] = z
    y = states[0]
    for n, row in enumerate(path.increments):
        try:
            y = stepper(y, row)
        except StepError as err:
            raise err.at_step(n) from err
        states[n + 1] = y
    return Trajectory(path.grid, states)
