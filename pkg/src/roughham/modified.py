"""Truncated stochastic modified equations.

A numerical one-step map expands as ``Y' = y + sum_alpha d_alpha(y) row^alpha``
with ``row = (h, dX^1, ..., dX^d)``. The modified equation on one macro-step is
the autonomous ODE

    y' = sum_{1 <= |alpha| <= N} f_alpha(y) row^alpha / h,

whose time-``h`` flow reproduces the one-step map. This module provides the
closed-form coefficient tables of the three catalogue methods, a numerical
route (coefficient extraction followed by the ``f``-from-``d`` recursion) that
serves as their oracle, and a reference solver for the truncated equation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from itertools import combinations_with_replacement
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .core import (
    DomainError,
    Grid,
    MultiIndex,
    Trajectory,
    as_phase_point,
    multi_indices_up_to,
    ordered_decompositions,
    unit_sequences,
)
from .integrators import DEFAULT_CONFIG, SolverConfig, Stepper, fixed_point
from .noise import DriverPath
from .systems import Field, HamiltonianSystem, KuboParams, kubo_params


class ExtractionError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# truncated Taylor jets


def _monomials(n: int, degree: int) -> list[tuple[int, ...]]:
    out = []
    for k in range(degree + 1):
        for combo in combinations_with_replacement(range(n), k):
            beta = [0] * n
            for j in combo:
                beta[j] += 1
            out.append(tuple(beta))
    return out


class Jet:
    """Truncated Taylor polynomial ``g(y + u) = sum_beta c_beta u^beta`` in ``u``.

    ``coeffs`` maps exponent tuples ``beta`` with ``|beta| <= degree`` to value
    arrays (vectors for vector fields, 0-d arrays for scalars).
    """

    __slots__ = ("n", "degree", "coeffs")

    def __init__(self, n: int, degree: int, coeffs: dict):
        self.n = n
        self.degree = degree
        self.coeffs = {b: c for b, c in coeffs.items() if sum(b) <= degree}

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[(0,) * self.n]

    def truncate(self, degree: int) -> "Jet":
        return Jet(self.n, min(degree, self.degree), self.coeffs)

    def __add__(self, other: "Jet") -> "Jet":
        deg = min(self.degree, other.degree)
        keys = set(self.coeffs) | set(other.coeffs)
        out = {}
        for b in keys:
            if sum(b) > deg:
                continue
            out[b] = self.coeffs.get(b, 0) + other.coeffs.get(b, 0)
        return Jet(self.n, deg, out)

    def __neg__(self) -> "Jet":
        return Jet(self.n, self.degree, {b: -c for b, c in self.coeffs.items()})

    def __sub__(self, other: "Jet") -> "Jet":
        return self + (-other)

    def scale(self, s) -> "Jet":
        return Jet(self.n, self.degree, {b: s * c for b, c in self.coeffs.items()})

    def partial(self, j: int) -> "Jet":
        out = {}
        for b, c in self.coeffs.items():
            if b[j]:
                lowered = b[:j] + (b[j] - 1,) + b[j + 1:]
                out[lowered] = b[j] * c
        return Jet(self.n, self.degree - 1, out)

    def component(self, i: int) -> "Jet":
        return Jet(self.n, self.degree, {b: c[i] for b, c in self.coeffs.items()})

    def times_scalar(self, s: "Jet") -> "Jet":
        """Product with a scalar jet, truncated at the smaller degree."""
        deg = min(self.degree, s.degree)
        out: dict = {}
        for b1, c1 in self.coeffs.items():
            d1 = sum(b1)
            for b2, c2 in s.coeffs.items():
                if d1 + sum(b2) > deg:
                    continue
                b = tuple(x + y for x, y in zip(b1, b2))
                out[b] = out.get(b, 0) + c1 * c2
        return Jet(self.n, deg, out)


def lie_derivative(direction: Jet, g: Jet) -> Jet:
    """``(D g)(y) = g'(y) direction(y)`` as a jet."""
    total = None
    for j in range(g.n):
        term = g.partial(j).times_scalar(direction.component(j))
        total = term if total is None else total + term
    return total


# ---------------------------------------------------------------------------
# coefficient tables


class CoefficientTable:
    """Evaluator of ``f_alpha`` for one (method, system) pair."""

    def __init__(self, label: str, system: HamiltonianSystem, order_cap: int):
        self.label = label
        self.system = system
        self.order_cap = order_cap

    @property
    def indices(self) -> list[MultiIndex]:
        return multi_indices_up_to(self.system.d, self.order_cap)

    def f(self, alpha: MultiIndex, y) -> np.ndarray:
        raise NotImplementedError

    def velocity(self, y, row, n_tilde: int) -> np.ndarray:
        """``sum_{|alpha| <= n_tilde} f_alpha(y) row^alpha / h``."""
        y = as_phase_point(y, self.system.dim)
        row = np.asarray(row)
        total = 0.0 * y
        for alpha in multi_indices_up_to(self.system.d, n_tilde):
            total = total + self.f(alpha, y) * alpha.monomial(row)
        return total / row[0]

    def _check_alpha(self, alpha: MultiIndex):
        if alpha.d != self.system.d:
            raise DomainError(f"index {alpha} has wrong length for d={self.system.d}")
        if not 1 <= alpha.order <= self.order_cap:
            raise DomainError(f"|alpha|={alpha.order} outside table range 1..{self.order_cap}")


def _leaf(slot):
    return ("V", slot)


def _d1(slot, child):
    return ("D1", slot, child)


def _d2(slot, c1, c2):
    return ("D2", slot, c1, c2)


def _eval_tree(tree, fields: dict[int, Field], y):
    kind = tree[0]
    if kind == "V":
        return fields[tree[1]].value(y)
    if kind == "D1":
        return fields[tree[1]].d1(y, _eval_tree(tree[2], fields, y))
    return fields[tree[1]].d2(y, _eval_tree(tree[2], fields, y), _eval_tree(tree[3], fields, y))


def _eval_shared(tree, local, memo: dict):
    """Evaluate an anonymous tree with one frozen field in every slot, reusing subtrees."""
    if tree in memo:
        return memo[tree]
    kind = tree[0]
    if kind == "V":
        out = local.value()
    elif kind == "D1":
        out = local.d1(_eval_shared(tree[2], local, memo))
    else:
        out = local.d2(_eval_shared(tree[2], local, memo), _eval_shared(tree[3], local, memo))
    memo[tree] = out
    return out


def _anonymous(tree):
    """Drop slot labels so equal-shaped subtrees share a cache entry."""
    if tree[0] == "V":
        return ("V", 0)
    return (tree[0], 0) + tuple(_anonymous(t) for t in tree[2:])


class ElementaryTable(CoefficientTable):
    """Coefficients written as sums of elementary differentials.

    ``grades[k]`` lists ``(coefficient, tree)`` pairs; slot ``j`` of a tree is
    filled with ``V_{l_j}`` and the result is summed over the ordered unit
    decompositions ``(l_1, ..., l_k)`` of ``alpha``. Grades not listed vanish.
    """

    def __init__(self, label, system, order_cap, grades: dict[int, list]):
        super().__init__(label, system, order_cap)
        self.grades = grades
        self._shared = {k: [(c, _anonymous(t)) for c, t in v] for k, v in grades.items()}

    def f(self, alpha: MultiIndex, y) -> np.ndarray:
        self._check_alpha(alpha)
        y = as_phase_point(y, self.system.dim)
        total = 0.0 * y
        for coef, tree in self.grades.get(alpha.order, ()):
            for seq in unit_sequences(alpha):
                fields = {j + 1: self.system.field(l) for j, l in enumerate(seq)}
                total = total + coef * _eval_tree(tree, fields, y)
        return total

    def velocity(self, y, row, n_tilde: int) -> np.ndarray:
        # summing over all alpha of one grade is the same tree with every slot
        # filled by the frozen field F = sum_l row_l V_l
        if n_tilde > self.order_cap or n_tilde < 1:
            raise DomainError(f"truncation {n_tilde} outside 1..{self.order_cap}")
        y = as_phase_point(y, self.system.dim)
        row = np.asarray(row)
        local = self.system.combined(row).at(y)
        memo: dict = {}
        total = 0.0 * y
        for k in range(1, n_tilde + 1):
            for coef, tree in self._shared.get(k, ()):
                total = total + coef * _eval_shared(tree, local, memo)
        return total / row[0]


MIDPOINT_GRADES = {
    1: [(1.0, _leaf(1))],
    3: [(-1.0 / 24.0, _d2(3, _leaf(2), _leaf(1))), (1.0 / 12.0, _d1(3, _d1(2, _leaf(1))))],
}

ERK2_GRADES = {
    1: [(1.0, _leaf(1))],
    3: [(-1.0 / 24.0, _d2(3, _leaf(2), _leaf(1))), (-1.0 / 6.0, _d1(3, _d1(2, _leaf(1))))],
    # the V'V''VV weight is 1/16: expanding Y = y + F(y + F/2) to fourth
    # order and matching the time-one flow leaves 5/48 - 2/48 of that term
    4: [
        (1.0 / 16.0, _d1(4, _d2(3, _leaf(2), _leaf(1)))),
        (1.0 / 8.0, _d1(4, _d1(3, _d1(2, _leaf(1))))),
    ],
}


def table_midpoint(sys: HamiltonianSystem) -> ElementaryTable:
    return ElementaryTable("midpoint", sys, 4, MIDPOINT_GRADES)


def table_erk2(sys: HamiltonianSystem) -> ElementaryTable:
    return ElementaryTable("erk2", sys, 4, ERK2_GRADES)


def spark_kubo_matrices(params: KuboParams) -> dict[MultiIndex, np.ndarray]:
    """Coefficient matrices ``M_alpha`` with ``f_alpha(y) = M_alpha y``, ``|alpha| <= 3``.

    The ``(1,2,0)``/``(1,0,2)`` entry follows from the fact that the scheme sees
    the noise only through ``dX^1 + dX^2``, which forces
    ``f_(1,1,1) = 2 f_(1,2,0)``.
    """
    a, s = params.a, params.sigma

    def rot(c):  # c * [[0, -1], [1, 0]]
        return np.array([[0.0, -c], [c, 0.0]])

    def refl(c, r):  # [[c, r], [-r, -c]]
        return np.array([[c, r], [-r, -c]])

    M = {
        (1, 0, 0): refl(-s**2, -a),
        (0, 1, 0): rot(s),
        (2, 0, 0): refl(s**4 / 2 + a**2 / 2, a * s**2),
        (0, 1, 1): refl(s**2, 0.0),
        (1, 1, 0): refl(a * s, s**3),
        (0, 2, 0): refl(s**2 / 2, 0.0),
        (3, 0, 0): refl(-(s**6) / 3 - 2 * a**2 * s**2 / 3, -5 * a * s**4 / 6 - a**3 / 6),
        (1, 1, 1): refl(-4 * s**4 / 3, -a * s**2),
        (1, 2, 0): refl(-2 * s**4 / 3, -a * s**2 / 2),
        (0, 2, 1): rot(s**3 / 2),
        (2, 1, 0): refl(-4 * a * s**3 / 3, -5 * s**5 / 6 - a**2 * s / 2),
        (0, 3, 0): rot(s**3 / 6),
    }
    full = {}
    for key, mat in M.items():
        full[MultiIndex(key)] = mat
        mirrored = (key[0], key[2], key[1])  # swap the two noise components
        full[MultiIndex(mirrored)] = mat
    return full


class MatrixTable(CoefficientTable):
    """Linear coefficients ``f_alpha(y) = M_alpha y``."""

    def __init__(self, label, system, order_cap, matrices: dict[MultiIndex, np.ndarray]):
        super().__init__(label, system, order_cap)
        self.matrices = matrices

    def f(self, alpha: MultiIndex, y) -> np.ndarray:
        self._check_alpha(alpha)
        y = as_phase_point(y, self.system.dim)
        mat = self.matrices.get(alpha)
        if mat is None:
            return 0.0 * y
        return np.tensordot(mat, y, axes=(1, 0))

    def velocity(self, y, row, n_tilde: int) -> np.ndarray:
        if n_tilde > self.order_cap or n_tilde < 1:
            raise DomainError(f"truncation {n_tilde} outside 1..{self.order_cap}")
        y = as_phase_point(y, self.system.dim)
        row = np.asarray(row)
        total = 0.0 * y
        for alpha, mat in self.matrices.items():
            if alpha.order <= n_tilde:
                total = total + np.tensordot(mat, y, axes=(1, 0)) * alpha.monomial(row)
        return total / row[0]


def table_spark_kubo(params: KuboParams, system: HamiltonianSystem | None = None) -> MatrixTable:
    from .systems import make_kubo

    system = system if system is not None else make_kubo(params)
    return MatrixTable("spark-kubo", system, 3, spark_kubo_matrices(params))


def table_for(method: str, sys: HamiltonianSystem, cfg: SolverConfig = DEFAULT_CONFIG,
              order_cap: int = 4) -> CoefficientTable:
    if method == "midpoint":
        return table_midpoint(sys)
    if method == "erk2":
        return table_erk2(sys)
    if method == "spark-kubo":
        return table_spark_kubo(kubo_params(sys), sys)
    from .integrators import make_stepper

    return RecursionTable(method, sys, make_stepper(method, sys, cfg), order_cap)


# ---------------------------------------------------------------------------
# numerical route: coefficient extraction and recursion


def extract_d_alpha(stepper: Stepper, sys: HamiltonianSystem, y, order_cap: int,
                    radius: float = 0.05, n_contour: int = 16,
                    seed: int = 20240531) -> dict[MultiIndex, Jet]:
    """Numerically expand the one-step map around ``(y, row = 0)``.

    The map is evaluated along random directions ``(c_row, c_u)`` at complex
    points ``t = radius * exp(2 pi i j / n_contour)``, i.e. at
    ``stepper(y + t c_u, t c_row)``. A discrete Cauchy integral gives the
    degree-``k`` homogeneous part of the joint Taylor expansion in
    ``(row, u)`` along every direction, and a least-squares fit over at least
    twice as many directions as unknowns recovers the monomial coefficients.

    Returns ``d_alpha`` as jets in the state offset ``u`` of degree
    ``order_cap - |alpha|``; ``jet.value`` is ``d_alpha(y)``.
    """
    if not 1 <= order_cap <= 6:
        raise DomainError(f"order_cap must be in 1..6, got {order_cap}")
    y = as_phase_point(y, sys.dim)
    if y.ndim != 1:
        raise DomainError("extraction works on a single phase point")
    nr, nu = sys.d + 1, sys.dim
    nvar = nr + nu
    unknowns = {
        k: [mono for mono in _monomials(nvar, k) if sum(mono) == k and sum(mono[:nr]) >= 1]
        for k in range(1, order_cap + 1)
    }
    n_dir = 2 * max(len(v) for v in unknowns.values()) + 8
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((n_dir, nvar))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)

    t = radius * np.exp(2j * np.pi * np.arange(n_contour) / n_contour)
    c_row, c_u = dirs[:, :nr], dirs[:, nr:]
    rows = (c_row[:, None, :] * t[None, :, None]).reshape(-1, nr).T
    offsets = (c_u[:, None, :] * t[None, :, None]).reshape(-1, nu).T
    starts = y[:, None] + offsets
    out = stepper(starts, rows) - starts
    values = out.reshape(nu, n_dir, n_contour)
    spectrum = np.fft.fft(values, axis=2) / n_contour

    real_input = not np.iscomplexobj(y)
    coeff: dict[tuple, np.ndarray] = {}
    for k in range(1, order_cap + 1):
        P = (spectrum[:, :, k] / radius**k).T  # (n_dir, nu)
        monos = unknowns[k]
        A = np.array([[np.prod(dirs[i] ** np.array(m)) for m in monos] for i in range(n_dir)])
        sol, *_ = np.linalg.lstsq(A, P, rcond=None)
        resid = np.linalg.norm(A @ sol - P)
        if resid > 1e-8 * np.linalg.norm(P) + 1e-10:
            raise ExtractionError(
                f"polynomial fit residual {resid:.3e} at degree {k}; the map is not "
                "smooth enough near zero increments or the contour radius is too large")
        for m, c in zip(monos, sol):
            coeff[m] = c.real if real_input else c

    d_map = {}
    for alpha in multi_indices_up_to(sys.d, order_cap):
        deg = order_cap - alpha.order
        jets = {}
        for beta in _monomials(nu, deg):
            jets[beta] = coeff[alpha.entries + beta]
        d_map[alpha] = Jet(nu, deg, jets)
    return d_map


def recursion_f_from_d(d_map: dict[MultiIndex, Jet], order_cap: int) -> dict[MultiIndex, Jet]:
    """Modified coefficients from the one-step expansion.

    ``f_alpha = d_alpha - sum_{i=2}^{|alpha|} 1/i! sum_{(k^1..k^i)} D_{k^1} ... D_{k^{i-1}} f_{k^i}``
    over ordered decompositions of ``alpha`` into ``i`` nonzero indices, with
    ``D_k g = g' f_k`` evaluated exactly on jets.
    """
    f: dict[MultiIndex, Jet] = {}
    ordered = sorted(d_map, key=MultiIndex.sort_key)
    for alpha in ordered:
        if alpha.order > order_cap:
            continue
        acc = d_map[alpha]
        for i in range(2, alpha.order + 1):
            weight = 1.0 / math.factorial(i)
            for parts in ordered_decompositions(alpha, i):
                try:
                    g = f[parts[-1]]
                    for k in reversed(parts[:-1]):
                        g = lie_derivative(f[k], g)
                except KeyError as exc:
                    raise DomainError(f"lower-order coefficient {exc.args[0]} missing") from None
                acc = acc - g.scale(weight)
        f[alpha] = acc.truncate(order_cap - alpha.order)
    missing = [a for a in multi_indices_up_to(ordered[0].d, order_cap) if a not in f]
    if missing:
        raise DomainError(f"d_map lacks entries for {', '.join(map(str, missing))}")
    return f


class RecursionTable(CoefficientTable):
    """Coefficients computed pointwise by extraction plus recursion (slow, for audits)."""

    def __init__(self, label, system, stepper: Stepper, order_cap: int = 4, **extract_kw):
        super().__init__(label, system, order_cap)
        self.stepper = stepper
        self.extract_kw = extract_kw
        self._cache: tuple | None = None

    def all_f(self, y) -> dict[MultiIndex, np.ndarray]:
        y = as_phase_point(y, self.system.dim)
        key = y.tobytes()
        if self._cache is None or self._cache[0] != key:
            d_map = extract_d_alpha(self.stepper, self.system, y, self.order_cap, **self.extract_kw)
            f = recursion_f_from_d(d_map, self.order_cap)
            self._cache = (key, {a: jet.value for a, jet in f.items()})
        return self._cache[1]

    def f(self, alpha: MultiIndex, y) -> np.ndarray:
        self._check_alpha(alpha)
        y = as_phase_point(y, self.system.dim)
        if y.ndim == 1:
            return self.all_f(y)[alpha]
        flat = y.reshape(y.shape[0], -1)
        cols = [self.all_f(flat[:, i])[alpha] for i in range(flat.shape[1])]
        return np.stack(cols, axis=1).reshape(y.shape)


# ---------------------------------------------------------------------------
# truncated modified flows


@dataclass(frozen=True)
class TruncationRule:
    """Fixed truncation number, or ``N = max(1, floor(h0 h^-(1/2 - eps)))``."""

    n_tilde: Optional[int] = None
    h0: Optional[float] = None
    epsilon: Optional[float] = None

    def __post_init__(self):
        if self.n_tilde is None:
            if self.h0 is None or self.epsilon is None:
                raise DomainError("give n_tilde or both h0 and epsilon")
        elif self.n_tilde < 1:
            raise DomainError(f"truncation number must be >= 1, got {self.n_tilde}")

    def resolve(self, h: float) -> int:
        if self.n_tilde is not None:
            return self.n_tilde
        return select_truncation_number(h, self.h0, self.epsilon)


def select_truncation_number(h: float, h0: float, epsilon: float) -> int:
    if not 0 < epsilon < 0.5:
        raise DomainError(f"epsilon must lie in (0, 1/2), got {epsilon}")
    if not 0 < h < 1:
        raise DomainError(f"h must lie in (0, 1), got {h}")
    if not h0 > 0:
        raise DomainError(f"h0 must be positive, got {h0}")
    raw = h0 * h ** (-(0.5 - epsilon))
    return max(1, math.floor(raw * (1 + 1e-12)))


def _as_rule(rule) -> TruncationRule:
    return rule if isinstance(rule, TruncationRule) else TruncationRule(n_tilde=int(rule))


def modified_velocity(table: CoefficientTable, rule, y, h: float, step_increments) -> np.ndarray:
    """Right-hand side of the truncated modified equation on one macro-step."""
    n_tilde = _as_rule(rule).resolve(h)
    if n_tilde > table.order_cap:
        raise DomainError(f"truncation {n_tilde} exceeds table order cap {table.order_cap}")
    row = np.asarray(step_increments)
    if not np.allclose(row[0], h):
        raise DomainError("first increment entry must equal h")
    return table.velocity(y, row, n_tilde)


def substeps(h: float, delta: float) -> int:
    k = round(h / delta)
    if k < 1 or abs(k * delta - h) > 1e-9 * h:
        raise DomainError(f"fine step {delta} does not divide macro step {h}")
    return k


_CBRT2 = 2.0 ** (1.0 / 3.0)
# symmetric triple jump: composing midpoint substeps with these weights gives order four
TRIPLE_JUMP = (1.0 / (2.0 - _CBRT2), -_CBRT2 / (2.0 - _CBRT2), 1.0 / (2.0 - _CBRT2))
REFERENCE_SCHEMES = {"midpoint": (1.0,), "midpoint4": TRIPLE_JUMP}


def modified_step(table: CoefficientTable, n_tilde: int, y, row, n_sub: int,
                  cfg: SolverConfig = DEFAULT_CONFIG, scheme: str = "midpoint") -> np.ndarray:
    """Advance one macro-step of the truncated modified flow with ``n_sub`` substeps.

    ``scheme="midpoint"`` is the plain implicit midpoint rule; ``"midpoint4"``
    composes three midpoint stages per substep, which keeps symplecticity and
    symmetry and raises the order to four.
    """
    try:
        weights = REFERENCE_SCHEMES[scheme]
    except KeyError:
        raise DomainError(f"unknown reference scheme {scheme!r}") from None
    row = np.asarray(row)
    fine = row[0] / n_sub

    def vel(x):
        return table.velocity(x, row, n_tilde)

    for _ in range(n_sub):
        for w in weights:
            y0, dt = y, w * fine
            guess = y0 + dt * vel(y0)
            y = fixed_point(lambda Y: y0 + dt * vel(0.5 * (y0 + Y)), guess, cfg)
    return y


def solve_truncated_modified(table: CoefficientTable, rule, sys: HamiltonianSystem, z,
                             path: DriverPath, delta: float,
                             cfg: SolverConfig = DEFAULT_CONFIG,
                             scheme: str = "midpoint") -> Trajectory:
    """Integrate the truncated modified equation at fine step ``delta``.

    Increments are frozen on each macro-step; returns the states at macro nodes.
    """
    from .integrators import StepError

    rule = _as_rule(rule)
    h = path.grid.h
    n_tilde = rule.resolve(h)
    if n_tilde > table.order_cap:
        raise DomainError(f"truncation {n_tilde} exceeds table order cap {table.order_cap}")
    k = substeps(h, delta)
    z = as_phase_point(z, sys.dim)
    shape = np.broadcast_shapes(z.shape, (sys.dim,) + path.batch_shape)
    states = np.empty((path.grid.n_steps + 1,) + shape)
    states[0] = z
    y = states[0]
    for n, row in enumerate(path.increments):
        try:
            y = modified_step(table, n_tilde, y, row, k, cfg, scheme)
        except StepError as err:
            raise err.at_step(n) from err
        states[n + 1] = y
    return Trajectory(path.grid, states)


def write_coefficient_csv(table: CoefficientTable, points: Iterable, target: str | Path) -> None:
    """Audit dump with columns ``alpha, y, f_value``; vectors are space-separated."""
    with open(target, "w", newline="") as fh:
        fh.write(f"# method={table.label} system={table.system.label} "
                 "decompositions=ordered\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["alpha", "y", "f_value"])
        for y in points:
            y = np.asarray(y, dtype=float)
            for alpha in table.indices:
                val = table.f(alpha, y)
                writer.writerow([
                    str(alpha),
                    " ".join(f"{v:.17g}" for v in y),
                    " ".join(f"{v:.17g}" for v in val),
                ])
