"""Hamiltonian systems with vector-field jets up to second order.

All callbacks take states of shape ``(2m, *batch)`` and broadcast over the
batch axes, so one call can evaluate many samples or polygon vertices.
Real and complex inputs are both accepted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import DomainError

FieldFn = Callable[[int, np.ndarray], np.ndarray]
DFieldFn = Callable[[int, np.ndarray, np.ndarray], np.ndarray]
D2FieldFn = Callable[[int, np.ndarray, np.ndarray, np.ndarray], np.ndarray]
HamFn = Callable[[int, np.ndarray], np.ndarray]


def symplectic_matrix(m: int) -> np.ndarray:
    """``J = [[0, I], [-I, 0]]``."""
    eye = np.eye(m)
    zero = np.zeros((m, m))
    return np.block([[zero, eye], [-eye, zero]])


@dataclass(frozen=True)
class KuboParams:
    a: float = 1.0
    sigma: float = 1.0


@dataclass(frozen=True)
class HamiltonianSystem:
    """Vector fields ``V_0..V_d`` with ``V_l = J^{-1} grad H_l``.

    ``eval_DV(l, y, v)`` is ``V_l'(y) v`` and ``eval_D2V(l, y, v, w)`` is the
    symmetric bilinear ``V_l''(y)(v, w)``.
    """

    dim: int
    d: int
    eval_V: FieldFn
    eval_DV: DFieldFn
    eval_D2V: D2FieldFn
    eval_H: Optional[HamFn] = None
    label: str = "custom"
    additive: bool = False
    params: dict = field(default_factory=dict)
    invariant: Optional[Callable[[np.ndarray], np.ndarray]] = None
    # optional fused evaluator of sum_l row_l V_l; must agree with the per-field sum
    fused: Optional[Callable[[np.ndarray], "Field"]] = None

    def __post_init__(self):
        if self.dim % 2:
            raise DomainError(f"state dimension must be even, got {self.dim}")

    @property
    def m(self) -> int:
        return self.dim // 2

    def field(self, l: int) -> "Field":
        return SingleField(self, l)

    def combined(self, row: np.ndarray) -> "Field":
        """The frozen field ``sum_l row[l] V_l`` of one macro-step."""
        if len(row) != self.d + 1:
            raise DomainError(f"increment row has {len(row)} entries, system needs {self.d + 1}")
        if self.fused is not None:
            return self.fused(row)
        return CombinedField(self, row)


class Field:
    """A vector field with first and second derivatives."""

    def value(self, y):
        raise NotImplementedError

    def d1(self, y, v):
        raise NotImplementedError

    def d2(self, y, v, w):
        raise NotImplementedError

    def at(self, y) -> "LocalField":
        """Jets frozen at ``y``; subclasses may share work between the three orders."""
        return LocalField(lambda: self.value(y), lambda v: self.d1(y, v),
                          lambda v, w: self.d2(y, v, w))


class LocalField:
    __slots__ = ("value", "d1", "d2")

    def __init__(self, value, d1, d2):
        self.value, self.d1, self.d2 = value, d1, d2


class SingleField(Field):
    def __init__(self, system: HamiltonianSystem, l: int):
        self.system, self.l = system, l

    def value(self, y):
        return self.system.eval_V(self.l, y)

    def d1(self, y, v):
        return self.system.eval_DV(self.l, y, v)

    def d2(self, y, v, w):
        return self.system.eval_D2V(self.l, y, v, w)


class CombinedField(Field):
    def __init__(self, system: HamiltonianSystem, row: np.ndarray):
        if len(row) != system.d + 1:
            raise DomainError(f"increment row has {len(row)} entries, system needs {system.d + 1}")
        self.system, self.row = system, row

    def _sum(self, fn, *args):
        return sum(self.row[l] * fn(l, *args) for l in range(self.system.d + 1))

    def value(self, y):
        return self._sum(self.system.eval_V, y)

    def d1(self, y, v):
        return self._sum(self.system.eval_DV, y, v)

    def d2(self, y, v, w):
        return self._sum(self.system.eval_D2V, y, v, w)


def _stack(p, q):
    if np.shape(p) != np.shape(q):
        p, q = np.broadcast_arrays(p, q)
    return np.array([p, q])


class _LambdaField(Field):
    def __init__(self, value, d1, d2, local=None):
        self.value, self.d1, self.d2 = value, d1, d2
        if local is not None:
            self.at = local


def make_example1() -> HamiltonianSystem:
    """``H0 = sin P cos Q``, ``H1 = cos P``, ``H2 = sin Q`` (multiplicative noise)."""
    sin, cos = np.sin, np.cos

    def V(l, y):
        p, q = y[0], y[1]
        if l == 0:
            return _stack(sin(p) * sin(q), cos(p) * cos(q))
        if l == 1:
            return _stack(0.0 * p, -sin(p))
        return _stack(-cos(q), 0.0 * q)

    def DV(l, y, v):
        p, q = y[0], y[1]
        vp, vq = v[0], v[1]
        if l == 0:
            return _stack(
                cos(p) * sin(q) * vp + sin(p) * cos(q) * vq,
                -sin(p) * cos(q) * vp - cos(p) * sin(q) * vq,
            )
        if l == 1:
            return _stack(0.0 * vp, -cos(p) * vp)
        return _stack(sin(q) * vq, 0.0 * vq)

    def D2V(l, y, v, w):
        p, q = y[0], y[1]
        vp, vq, wp, wq = v[0], v[1], w[0], w[1]
        if l == 0:
            diag = vp * wp + vq * wq
            cross = vp * wq + vq * wp
            return _stack(
                -sin(p) * sin(q) * diag + cos(p) * cos(q) * cross,
                -cos(p) * cos(q) * diag + sin(p) * sin(q) * cross,
            )
        if l == 1:
            return _stack(0.0 * vp, sin(p) * vp * wp)
        return _stack(cos(q) * vq * wq, 0.0 * vq)

    def H(l, y):
        p, q = y[0], y[1]
        return [sin(p) * cos(q), cos(p), sin(q)][l]

    def fused(row):
        h, x1, x2 = row[0], row[1], row[2]

        def value(y):
            p, q = y[0], y[1]
            return _stack(h * sin(p) * sin(q) - x2 * cos(q), h * cos(p) * cos(q) - x1 * sin(p))

        def d1(y, v):
            sp, cp, sq, cq = sin(y[0]), cos(y[0]), sin(y[1]), cos(y[1])
            vp, vq = v[0], v[1]
            return _stack(h * (cp * sq * vp + sp * cq * vq) + x2 * sq * vq,
                          -h * (sp * cq * vp + cp * sq * vq) - x1 * cp * vp)

        def d2(y, v, w):
            sp, cp, sq, cq = sin(y[0]), cos(y[0]), sin(y[1]), cos(y[1])
            vp, vq, wp, wq = v[0], v[1], w[0], w[1]
            diag = vp * wp + vq * wq
            cross = vp * wq + vq * wp
            return _stack(h * (-sp * sq * diag + cp * cq * cross) + x2 * cq * vq * wq,
                          h * (-cp * cq * diag + sp * sq * cross) + x1 * sp * vp * wp)

        def local(y):
            sp, cp, sq, cq = sin(y[0]), cos(y[0]), sin(y[1]), cos(y[1])

            def l_value():
                return _stack(h * sp * sq - x2 * cq, h * cp * cq - x1 * sp)

            def l_d1(v):
                vp, vq = v[0], v[1]
                return _stack(h * (cp * sq * vp + sp * cq * vq) + x2 * sq * vq,
                              -h * (sp * cq * vp + cp * sq * vq) - x1 * cp * vp)

            def l_d2(v, w):
                vp, vq, wp, wq = v[0], v[1], w[0], w[1]
                diag = vp * wp + vq * wq
                cross = vp * wq + vq * wp
                return _stack(h * (-sp * sq * diag + cp * cq * cross) + x2 * cq * vq * wq,
                              h * (-cp * cq * diag + sp * sq * cross) + x1 * sp * vp * wp)

            return LocalField(l_value, l_d1, l_d2)

        return _LambdaField(value, d1, d2, local)

    return HamiltonianSystem(2, 2, V, DV, D2V, H, label="example1", fused=fused)


def make_example2(sigma: float = 2.0) -> HamiltonianSystem:
    """Taylor--Green flow with additive noise of strength ``sqrt(2) sigma``."""
    c = math.sqrt(2.0) * sigma

    def V(l, y):
        p, q = y[0], y[1]
        if l == 0:
            return _stack(-np.sin(q), np.sin(p))
        zero = 0.0 * p
        return _stack(zero + c, zero) if l == 1 else _stack(zero, zero + c)

    def DV(l, y, v):
        if l == 0:
            return _stack(-np.cos(y[1]) * v[1], np.cos(y[0]) * v[0])
        return 0.0 * v

    def D2V(l, y, v, w):
        if l == 0:
            return _stack(np.sin(y[1]) * v[1] * w[1], -np.sin(y[0]) * v[0] * w[0])
        return 0.0 * v * w

    def H(l, y):
        p, q = y[0], y[1]
        if l == 0:
            return -np.cos(p) - np.cos(q)
        return -c * q if l == 1 else c * p

    def fused(row):
        h, shift = row[0], c * np.stack([row[1], row[2]])

        def value(y):
            v = _stack(-h * np.sin(y[1]), h * np.sin(y[0]))
            return v + shift.reshape(shift.shape + (1,) * (v.ndim - shift.ndim))

        def d1(y, v):
            return _stack(-h * np.cos(y[1]) * v[1], h * np.cos(y[0]) * v[0])

        def d2(y, v, w):
            return _stack(h * np.sin(y[1]) * v[1] * w[1], -h * np.sin(y[0]) * v[0] * w[0])

        def local(y):
            sp, cp, sq, cq = np.sin(y[0]), np.cos(y[0]), np.sin(y[1]), np.cos(y[1])
            base = _stack(-h * sq, h * sp)
            return LocalField(
                lambda: base + shift.reshape(shift.shape + (1,) * (base.ndim - shift.ndim)),
                lambda v: _stack(-h * cq * v[1], h * cp * v[0]),
                lambda v, w: _stack(h * sq * v[1] * w[1], -h * sp * v[0] * w[0]),
            )

        return _LambdaField(value, d1, d2, local)

    return HamiltonianSystem(
        2, 2, V, DV, D2V, H, label="taylor-green", additive=True, params={"sigma": sigma},
        fused=fused,
    )


def make_kubo(params: KuboParams = KuboParams()) -> HamiltonianSystem:
    """Kubo oscillator: every field is a multiple of the rotation generator."""
    coef = (params.a, params.sigma, params.sigma)

    def _angle(row):
        return coef[0] * row[0] + coef[1] * row[1] + coef[2] * row[2]

    def rot(y):
        return _stack(-y[1], y[0])

    def V(l, y):
        return coef[l] * rot(y)

    def DV(l, y, v):
        return coef[l] * rot(v)

    def D2V(l, y, v, w):
        return 0.0 * v * w

    def H(l, y):
        return 0.5 * coef[l] * (y[0] ** 2 + y[1] ** 2)

    def energy(y):
        return y[0] ** 2 + y[1] ** 2

    return HamiltonianSystem(
        2,
        2,
        V,
        DV,
        D2V,
        H,
        label="kubo",
        params={"a": params.a, "sigma": params.sigma},
        invariant=energy,
        fused=lambda row: _LambdaField(
            lambda y: _angle(row) * rot(y),
            lambda y, v: _angle(row) * rot(v),
            lambda y, v, w: 0.0 * v * w,
        ),
    )


def kubo_params(system: HamiltonianSystem) -> KuboParams:
    if system.label != "kubo":
        raise DomainError(f"system {system.label!r} is not the Kubo oscillator")
    return KuboParams(**system.params)


def kubo_exact(params: KuboParams, z, t, w_sum) -> np.ndarray:
    """Rotate ``z`` by ``a t + sigma (X^1_t + X^2_t)``."""
    z = np.asarray(z, dtype=float)
    angle = params.a * np.asarray(t) + params.sigma * np.asarray(w_sum)
    c, s = np.cos(angle), np.sin(angle)
    return _stack(z[0] * c - z[1] * s, z[1] * c + z[0] * s)


SYSTEMS = {
    "example1": lambda **kw: make_example1(),
    "taylor-green": lambda sigma=2.0, **kw: make_example2(sigma),
    "kubo": lambda a=1.0, sigma=1.0, **kw: make_kubo(KuboParams(a, sigma)),
}


def make_system(name: str, **params) -> HamiltonianSystem:
    try:
        factory = SYSTEMS[name]
    except KeyError:
        raise DomainError(f"unknown system {name!r}; choose from {sorted(SYSTEMS)}") from None
    return factory(**params)
