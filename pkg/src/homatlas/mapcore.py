"""Exact planar map primitives with unit-modulus Jacobian stages.

Every map in this package is a composition of primitive stages whose Jacobian
determinant is exactly +1 or -1 by construction (shears, a coordinate swap,
translations, a reciprocal diagonal stretch, a resonant-form saddle stage and
a cotangent lift of a polynomial coordinate change).  Composing stages can
therefore never drift away from area preservation: the determinant of the
composite is (-1)**(number of swaps) up to floating-point roundoff.

Points are plain ``(x, y)`` tuples of floats.  ``eval_map`` also accepts numpy
arrays for both coordinates and then evaluates the whole batch at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

from .exceptions import EscapeError

__all__ = [
    "ESCAPE_RADIUS",
    "VShear",
    "HShear",
    "Swap",
    "Translate",
    "Diagonal",
    "Moser",
    "Lift",
    "MapExpr",
    "eval_map",
    "jacobian",
    "iterate",
]

# Orbits whose coordinates exceed this are treated as escaped.
ESCAPE_RADIUS = 1.0e8


def _polyval(coeffs, t):
    return npoly.polyval(t, np.asarray(coeffs, dtype=float))


def _polyder(coeffs):
    c = np.asarray(coeffs, dtype=float)
    if c.size <= 1:
        return np.zeros(1)
    return npoly.polyder(c)


@dataclass(frozen=True)
class VShear:
    """(x, y) -> (x + g(y), y) with polynomial g.  det = +1."""

    g: tuple

    def apply(self, x, y):
        return x + _polyval(self.g, y), y

    def jac(self, x, y):
        gp = float(_polyval(_polyder(self.g), y))
        return np.array([[1.0, gp], [0.0, 1.0]])


@dataclass(frozen=True)
class HShear:
    """(x, y) -> (x, y + h(x)) with polynomial h.  det = +1."""

    h: tuple

    def apply(self, x, y):
        return x, y + _polyval(self.h, x)

    def jac(self, x, y):
        hp = float(_polyval(_polyder(self.h), x))
        return np.array([[1.0, 0.0], [hp, 1.0]])


@dataclass(frozen=True)
class Swap:
    """(x, y) -> (y, x).  det = -1; the only orientation-reversing stage."""

    def apply(self, x, y):
        return y, x

    def jac(self, x, y):
        return np.array([[0.0, 1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class Translate:
    """(x, y) -> (x + dx, y + dy).  det = +1."""

    dx: float
    dy: float

    def apply(self, x, y):
        return x + self.dx, y + self.dy

    def jac(self, x, y):
        return np.eye(2)


@dataclass(frozen=True)
class Diagonal:
    """(x, y) -> (lam*x, y/lam).  det = +1 for any lam != 0."""

    lam: float

    def apply(self, x, y):
        return self.lam * x, y / self.lam

    def jac(self, x, y):
        return np.array([[self.lam, 0.0], [0.0, 1.0 / self.lam]])


@dataclass(frozen=True)
class Moser:
    """Integrable saddle stage (x, y) -> (lam*x*B(xy), y/(lam*B(xy))).

    B(u) = 1 + beta[0]*u + beta[1]*u**2 + ... ; the product x*y is preserved
    exactly and the Jacobian determinant is identically +1.
    """

    lam: float
    beta: tuple = ()

    def _b_coeffs(self):
        return (1.0,) + tuple(self.beta)

    def bval(self, u):
        return _polyval(self._b_coeffs(), u)

    def bder(self, u):
        return _polyval(_polyder(self._b_coeffs()), u)

    def apply(self, x, y):
        u = x * y
        b = self.bval(u)
        if np.any(np.asarray(b) <= 1.0e-9):
            raise EscapeError("saddle stage factor left its positive domain")
        return self.lam * x * b, y / (self.lam * b)

    def jac(self, x, y):
        u = x * y
        b = float(self.bval(u))
        if b <= 1.0e-9:
            raise EscapeError("saddle stage factor left its positive domain")
        bp = float(self.bder(u))
        r = u * bp / b
        return np.array(
            [
                [self.lam * b * (1.0 + r), self.lam * b * x * x * bp / b],
                [-y * y * bp / (self.lam * b * b), (1.0 - r) / (self.lam * b)],
            ]
        )


@dataclass(frozen=True)
class Lift:
    """Cotangent lift (x, y) -> (P(x), y / P'(x)) of a polynomial change.

    The lift of any coordinate change x -> P(x) acts on the fibre by the
    reciprocal derivative, so the Jacobian determinant is identically +1.
    Evaluation requires P'(x) to stay away from zero.
    """

    p: tuple

    def apply(self, x, y):
        pp = _polyval(_polyder(self.p), x)
        if np.any(np.abs(np.asarray(pp)) < 1.0e-12):
            raise EscapeError("lift stage hit a critical point of P")
        return _polyval(self.p, x), y / pp

    def jac(self, x, y):
        dp = _polyder(self.p)
        pp = float(_polyval(dp, x))
        if abs(pp) < 1.0e-12:
            raise EscapeError("lift stage hit a critical point of P")
        ppp = float(_polyval(_polyder(dp), x))
        return np.array([[pp, 0.0], [-y * ppp / (pp * pp), 1.0 / pp]])


@dataclass(frozen=True)
class MapExpr:
    """An ordered composition of primitive stages, applied left to right."""

    stages: tuple = field(default_factory=tuple)

    @property
    def n_swaps(self):
        return sum(1 for s in self.stages if isinstance(s, Swap))

    @property
    def expected_det(self):
        """Structural determinant: (-1)**(number of swap stages)."""
        return -1.0 if self.n_swaps % 2 else 1.0

    def then(self, other):
        return MapExpr(self.stages + other.stages)


def _check_escape(x, y, stage_idx):
    size = np.abs(x) + np.abs(y)
    if np.any(~np.isfinite(size)) or np.any(size > ESCAPE_RADIUS):
        raise EscapeError("orbit escaped", stage=stage_idx)


def eval_map(expr: MapExpr, p):
    """Apply the composition to a point (or to arrays of coordinates)."""
    x, y = p
    for i, stage in enumerate(expr.stages):
        try:
            x, y = stage.apply(x, y)
        except EscapeError as err:
            if err.stage is None:
                err.stage = i
            raise
        _check_escape(x, y, i)
    return x, y


def jacobian(expr: MapExpr, p):
    """Exact chain-rule Jacobian of the composition at a point."""
    x, y = float(p[0]), float(p[1])
    jac = np.eye(2)
    for i, stage in enumerate(expr.stages):
        jac = stage.jac(x, y) @ jac
        x, y = stage.apply(x, y)
        _check_escape(x, y, i)
    return jac


def iterate(expr: MapExpr, p, n):
    """n-fold composition; raises EscapeError with the failing iterate index."""
    if n < 0:
        raise ValueError("iterate count must be nonnegative")
    x, y = p
    for j in range(n):
        try:
            x, y = eval_map(expr, (x, y))
        except EscapeError as err:
            raise EscapeError(
                f"orbit escaped at iterate {j}", stage=err.stage
            ) from err
    return x, y


def polish_pow(lam: float, k: int):
    """sign-correct |lam|**k via the log domain; stable for large k."""
    if k == 0:
        return 1.0
    s = -1.0 if (lam < 0 and k % 2) else 1.0
    return s * math.exp(k * math.log(abs(lam)))
