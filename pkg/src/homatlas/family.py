"""Model families with a quadratic homoclinic tangency.

A family couples a saddle map in integrable resonant form (the local map,
determinant +1) with a polynomial-stage global map of determinant -1 that
carries the outgoing homoclinic point (0, y_minus) to the incoming one
(x_plus, 0), tangentially to {y = 0} when the splitting parameter mu is 0.

Near (0, y_minus) the global map expands as

    xbar - x_plus = a x + b eta + e20 x^2 + e11 x eta + e02 eta^2 + ...
    ybar          = mu + c x + d eta^2 + f20 x^2 + f11 x eta
                    + f30 x^3 + f21 x^2 eta + f12 x eta^2 + f03 eta^3 + ...

with eta = y - y_minus.  The coefficients are extracted numerically by
Richardson-extrapolated central differences; determinant -1 forces b c = 1
and 2 a d - b f11 - 2 e02 c = 0, both of which are asserted at build time.

Two recipes are provided.  The fold recipe composes a swap, a product shear
and a cotangent lift, giving a = 0 and x-independent first component; the
shear-sandwich recipe conjugates the swap by shears on both sides and
reaches a != 0, f20 != 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numpy.polynomial import polynomial as npoly

from .exceptions import (
    ExtractionError,
    OrientationError,
    TangencyError,
    TargetUnreachableError,
)
from .mapcore import HShear, Lift, MapExpr, Moser, Swap, Translate, VShear, eval_map

__all__ = [
    "LocalMapParams",
    "GlobalMapSpec",
    "TaylorData",
    "FamilyHandle",
    "HenonLikeRecipe",
    "ShearSandwichRecipe",
    "build_family",
    "extract_taylor",
    "alpha_invariant",
    "s0_invariant",
    "tune_to",
]


@dataclass(frozen=True)
class LocalMapParams:
    """Saddle map x -> lam*x*B(xy), y -> y/(lam*B(xy)) with B(u)=1+sum beta_i u^i."""

    lam: float
    moser_coeffs: tuple = ()

    def __post_init__(self):
        if not 0.0 < abs(self.lam) < 1.0:
            raise ValueError("multiplier must satisfy 0 < |lam| < 1")

    def stage(self) -> Moser:
        return Moser(self.lam, tuple(self.moser_coeffs))

    def map_expr(self) -> MapExpr:
        return MapExpr((self.stage(),))


@dataclass(frozen=True)
class GlobalMapSpec:
    """The determinant -1 global map plus the marked homoclinic data."""

    x_plus: float
    y_minus: float
    mu: float
    stages: MapExpr
    n0: int = 1


@dataclass(frozen=True)
class TaylorData:
    a: float
    b: float
    c: float
    d: float
    e20: float
    e11: float
    e02: float
    f20: float
    f11: float
    f30: float
    f21: float
    f12: float
    f03: float


@dataclass(frozen=True)
class HenonLikeRecipe:
    """Global map xbar = x_plus + P(eta), ybar = mu + x/P'(eta) + Q(eta).

    P (with P(0)=0, P'(0)=b nonzero) shapes the first component; Q (with
    Q(0)=Q'(0)=0, Q''(0)=2d) carries the tangency.  The determinant is -1
    identically because xbar does not depend on x.  Realized as stages:
    shift eta = y - y_minus, swap, shear by the product Q*P', cotangent
    lift of P, then translate by (x_plus, mu).
    """

    p: tuple = (0.0, 1.0)
    q: tuple = (0.0, 0.0, 1.0)
    x_plus: float = 1.0
    y_minus: float = 1.0
    n0: int = 1

    def __post_init__(self):
        p = tuple(float(v) for v in self.p)
        q = tuple(float(v) for v in self.q)
        if abs(p[0]) > 1e-14:
            raise TangencyError("P must vanish at 0")
        if len(p) < 2 or abs(p[1]) < 1e-12:
            raise TangencyError("P'(0) must be nonzero")
        if abs(q[0]) > 1e-14 or (len(q) > 1 and abs(q[1]) > 1e-14):
            raise TangencyError("Q must vanish to second order at 0")
        if len(q) < 3 or abs(q[2]) < 1e-12:
            raise TangencyError("quadratic tangency needs Q''(0) != 0")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    def stages(self, mu: float) -> MapExpr:
        p_prime = npoly.polyder(np.asarray(self.p))
        h = tuple(npoly.polymul(np.asarray(self.q), p_prime))
        return MapExpr(
            (
                Translate(0.0, -self.y_minus),
                Swap(),
                HShear(h),
                Lift(self.p),
                Translate(self.x_plus, mu),
            )
        )


@dataclass(frozen=True)
class ShearSandwichRecipe:
    """Swap conjugated by unit-Jacobian shears; reaches a != 0 and f20 != 0.

    Composition (left to right): shift eta = y - y_minus; shear
    y += p1*x + p2*x^2; shear x += q1*y; swap; shear y += -q1*x + d*x^2
    + m3*x^3 (the linear part cancels the earlier q1 shear, which restores
    the tangency); shear x += w1*y + w2*y^2; translate by (x_plus, mu).
    """

    p1: float = 0.3
    p2: float = 0.1
    q1: float = 0.5
    d: float = 1.0
    m3: float = 0.0
    w1: float = 0.2
    w2: float = 0.0
    x_plus: float = 1.0
    y_minus: float = 1.0
    n0: int = 1

    def __post_init__(self):
        if abs(self.d) < 1e-12:
            raise TangencyError("quadratic tangency needs d != 0")

    def stages(self, mu: float) -> MapExpr:
        return MapExpr(
            (
                Translate(0.0, -self.y_minus),
                HShear((0.0, self.p1, self.p2)),
                VShear((0.0, self.q1)),
                Swap(),
                HShear((0.0, -self.q1, self.d, self.m3)),
                VShear((0.0, self.w1, self.w2)),
                Translate(self.x_plus, mu),
            )
        )


@dataclass(frozen=True)
class FamilyHandle:
    local: LocalMapParams
    recipe: object
    globalmap: GlobalMapSpec
    taylor: TaylorData
    alpha: float
    s0: float

    @property
    def lam(self) -> float:
        return self.local.lam

    @property
    def x_plus(self) -> float:
        return self.globalmap.x_plus

    @property
    def y_minus(self) -> float:
        return self.globalmap.y_minus

    @property
    def mu(self) -> float:
        return self.globalmap.mu

    @property
    def beta1(self) -> float:
        mc = self.local.moser_coeffs
        return mc[0] if mc else 0.0

    def global_expr(self) -> MapExpr:
        return self.globalmap.stages

    def with_mu(self, mu: float) -> "FamilyHandle":
        """Same family at a different splitting value; Taylor data is reused
        because mu enters the global map only through the final translation."""
        spec = replace(self.globalmap, mu=mu, stages=self.recipe.stages(mu))
        return replace(self, globalmap=spec)


# Central-difference weights on offsets -2..2, to be divided by h**order.
_STENCILS = {
    0: {0: 1.0},
    1: {-1: -0.5, 1: 0.5},
    2: {-1: 1.0, 0: -2.0, 1: 1.0},
    3: {-2: -0.5, -1: 1.0, 1: -1.0, 2: 0.5},
}

_ORDERS = [
    (0, 0), (1, 0), (0, 1),
    (2, 0), (1, 1), (0, 2),
    (3, 0), (2, 1), (1, 2), (0, 3),
]


def _jet_at_step(stages: MapExpr, x0: float, y0: float, h: float) -> dict:
    offs = np.arange(-2, 3)
    gx, gy = np.meshgrid(x0 + h * offs, y0 + h * offs, indexing="ij")
    fx, fy = eval_map(stages, (gx, gy))
    out = {}
    for m, n in _ORDERS:
        wx = _STENCILS[m]
        wy = _STENCILS[n]
        acc_f = 0.0
        acc_g = 0.0
        for i, wi in wx.items():
            for j, wj in wy.items():
                w = wi * wj
                acc_f += w * fx[i + 2, j + 2]
                acc_g += w * fy[i + 2, j + 2]
        scale = h ** (m + n)
        out[(m, n)] = (acc_f / scale, acc_g / scale)
    return out


def _richardson(seq):
    """Extrapolate three O(h^2) estimates at h, h/2, h/4; return value and
    the disagreement between the last two extrapolation levels."""
    a, b, c = seq
    r1 = (4.0 * b - a) / 3.0
    r2 = (4.0 * c - b) / 3.0
    r3 = (16.0 * r2 - r1) / 15.0
    return r3, abs(r3 - r2)


def extract_taylor(globalmap: GlobalMapSpec, h0: float = 0.05) -> TaylorData:
    """Expansion coefficients of the global map at (0, y_minus).

    Central finite differences at steps h0, h0/2, h0/4 combined by
    Richardson extrapolation; raises if the two finest extrapolation
    levels disagree beyond tolerance.
    """
    jets = [
        _jet_at_step(globalmap.stages, 0.0, globalmap.y_minus, h0 / 2**i)
        for i in range(3)
    ]
    deriv = {}
    for key in _ORDERS:
        fval, ferr = _richardson([jets[i][key][0] for i in range(3)])
        gval, gerr = _richardson([jets[i][key][1] for i in range(3)])
        tol = 1e-6 * max(1.0, abs(fval), abs(gval))
        if max(ferr, gerr) > tol:
            raise ExtractionError(
                f"ill-conditioned extraction at order {key}: "
                f"Richardson levels disagree by {max(ferr, gerr):.3e}"
            )
        deriv[key] = (fval, gval)

    f0, g0 = deriv[(0, 0)]
    if abs(f0 - globalmap.x_plus) > 1e-8 or abs(g0 - globalmap.mu) > 1e-8:
        raise TangencyError(
            "global map does not carry (0, y_minus) to (x_plus, mu)"
        )
    g_eta = deriv[(0, 1)][1]
    if abs(g_eta) > 1e-8:
        raise TangencyError(f"not a tangency: G_eta(0) = {g_eta:.3e}")
    d = deriv[(0, 2)][1] / 2.0
    if abs(d) < 1e-8:
        raise TangencyError("not a quadratic tangency: d = 0")

    return TaylorData(
        a=deriv[(1, 0)][0],
        b=deriv[(0, 1)][0],
        c=deriv[(1, 0)][1],
        d=d,
        e20=deriv[(2, 0)][0] / 2.0,
        e11=deriv[(1, 1)][0],
        e02=deriv[(0, 2)][0] / 2.0,
        f20=deriv[(2, 0)][1] / 2.0,
        f11=deriv[(1, 1)][1],
        f30=deriv[(3, 0)][1] / 6.0,
        f21=deriv[(2, 1)][1] / 2.0,
        f12=deriv[(1, 2)][1] / 2.0,
        f03=deriv[(0, 3)][1] / 6.0,
    )


def alpha_invariant(handle: FamilyHandle) -> float:
    """c*x_plus/y_minus - 1; zero at the global resonance."""
    t = handle.taylor
    return t.c * handle.x_plus / handle.y_minus - 1.0


def s0_invariant(handle: FamilyHandle) -> float:
    """d*x_plus*(a*c + f20*x_plus) - (f11*x_plus)**2/4."""
    t = handle.taylor
    xp = handle.x_plus
    return t.d * xp * (t.a * t.c + t.f20 * xp) - 0.25 * (t.f11 * xp) ** 2


def build_family(local: LocalMapParams, recipe, mu: float = 0.0,
                 h0: float = 0.05) -> FamilyHandle:
    """Assemble and audit a family from a local saddle and a global recipe.

    Checks at build time: the global composition is orientation-reversing,
    the marked point is carried to (x_plus, mu), the tangency is quadratic,
    and the extracted coefficients satisfy the two identities forced by
    determinant -1 (b*c = 1 and 2*a*d - b*f11 - 2*e02*c = 0).

    h0 is the base finite-difference step of the jet extraction; recipes
    with steep nonlinear terms need a smaller step to pass the
    consistency checks.
    """
    stages = recipe.stages(mu)
    if stages.n_swaps % 2 == 0:
        raise OrientationError("orientable global map: even number of swaps")
    spec = GlobalMapSpec(
        x_plus=recipe.x_plus,
        y_minus=recipe.y_minus,
        mu=mu,
        stages=stages,
        n0=recipe.n0,
    )
    t = extract_taylor(spec, h0=h0)
    if abs(t.b * t.c - 1.0) > 1e-10:
        raise ExtractionError(f"bc = {t.b * t.c!r}, expected 1")
    ident = 2.0 * t.a * t.d - t.b * t.f11 - 2.0 * t.e02 * t.c
    if abs(ident) > 1e-8:
        raise ExtractionError(
            f"determinant identity violated: 2ad - b*f11 - 2*e02*c = {ident:.3e}"
        )
    handle = FamilyHandle(
        local=local, recipe=recipe, globalmap=spec, taylor=t, alpha=0.0, s0=0.0
    )
    return replace(
        handle, alpha=alpha_invariant(handle), s0=s0_invariant(handle)
    )


def _secant(fun, x0: float, x1: float, target: float, tol: float, max_iter: int = 40):
    f0 = fun(x0) - target
    if abs(f0) <= tol:
        return x0
    f1 = fun(x1) - target
    for _ in range(max_iter):
        if abs(f1) <= tol:
            return x1
        denom = f1 - f0
        if denom == 0.0:
            break
        x2 = x1 - f1 * (x1 - x0) / denom
        x0, f0, x1 = x1, f1, x2
        f1 = fun(x1) - target
    raise TargetUnreachableError("target unreachable: secant did not converge")


def tune_to(
    handle: FamilyHandle,
    alpha_target: float | None = None,
    s0_target: float | None = None,
    tol: float = 1e-8,
    h0: float = 0.05,
) -> FamilyHandle:
    """Retune the recipe knobs so the extracted invariants hit the targets.

    The alpha knob is the linear coefficient b of P (so c = 1/b moves with
    it and bc = 1 stays an identity); the s0 knob is the quadratic
    coefficient of P.  Only the fold recipe exposes these knobs, and its
    reachable set is s0 <= 0.
    """
    if alpha_target is None and s0_target is None:
        return handle
    recipe = handle.recipe
    if not isinstance(recipe, HenonLikeRecipe):
        raise TargetUnreachableError(
            "target unreachable: this recipe exposes no tuning knobs"
        )
    mu = handle.mu
    local = handle.local

    if alpha_target is not None:
        # alpha = c*x_plus/y_minus - 1 with c = 1/P'(0) is linear in 1/b.
        c_needed = (1.0 + alpha_target) * recipe.y_minus / recipe.x_plus
        if abs(c_needed) < 1e-10:
            raise TargetUnreachableError("target unreachable: alpha = -1 needs c = 0")
        p = list(recipe.p)
        b_seed = 1.0 / c_needed

        def alpha_of(bval):
            p[1] = bval
            fam = build_family(local, replace(recipe, p=tuple(p)), mu, h0=h0)
            return fam.alpha

        b_star = _secant(alpha_of, b_seed, b_seed * (1.0 + 1e-3), alpha_target, tol)
        p[1] = b_star
        recipe = replace(recipe, p=tuple(p))

    if s0_target is not None:
        if s0_target > 1e-12:
            raise TargetUnreachableError(
                "target unreachable: this recipe realizes only s0 <= 0"
            )
        b = recipe.p[1]
        # s0 = -(f11*x_plus)^2/4 with f11 = -2 p2 / b^2; seed from inversion.
        p2_seed = b * b * math.sqrt(max(-s0_target, 0.0)) / recipe.x_plus
        p = list(recipe.p)
        if len(p) < 3:
            p.append(0.0)

        def s0_of(p2val):
            p[2] = p2val
            fam = build_family(local, replace(recipe, p=tuple(p)), mu, h0=h0)
            return fam.s0

        p2_star = _secant(s0_of, p2_seed, p2_seed + 1e-3, s0_target, tol)
        p[2] = p2_star
        recipe = replace(recipe, p=tuple(p))

    out = build_family(local, recipe, mu, h0=h0)
    if alpha_target is not None and abs(out.alpha - alpha_target) > 10 * tol:
        raise TargetUnreachableError("target unreachable: alpha residual too large")
    if s0_target is not None and abs(out.s0 - s0_target) > 10 * tol:
        raise TargetUnreachableError("target unreachable: s0 residual too large")
    return out
