"""Newton solvers for periodic orbits of the first-return map.

All Newton iterations run in the rescaled (X, Y) coordinates where the
map is O(1) and the Jacobians are well conditioned; located points are
mapped back through the affine chain for reporting, while residuals are
quoted in the rescaled coordinates themselves.  Seeds come from the
closed-form orbits of the limit map x' = y, y' = M + x - y^2: fixed
points at X = Y = +-sqrt(M), the 2-periodic orbit swapping (-s, s) and
(s, -s) with s = sqrt(M).

Bifurcation location works in the parameter M rather than mu, again for
conditioning.  A fixed point has multipliers (+1, -1) exactly when its
trace vanishes, because the product of its multipliers is -1; the
2-orbit has a double multiplier -1 when the trace of the second-iterate
derivative is -2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    BracketError,
    CollapsedOrbitError,
    CrossFormSolveError,
    EscapeError,
    NewtonDivergedError,
    NotEllipticError,
)
from .family import FamilyHandle
from .henon import StabilityClass, classify_from_trace
from .rescale import (
    build_chain,
    eval_rescaled,
    from_rescaled,
    mu_from_m,
    rescaled_jacobian,
    rescaled_return_map,
    rescaled_window,
    to_rescaled,
)
from .returnmap import ReturnMap, build_return_map, solve_y0, t0_pow_closed

__all__ = [
    "OrbitRecord",
    "BifurcationPoint",
    "seed_from_limit",
    "find_fixed_point",
    "find_two_periodic",
    "locate_bifurcation",
    "two_orbit_trace",
    "phase_of_elliptic",
]

_EVAL_ERRORS = (EscapeError, CrossFormSolveError)


def _strip_from_cross(family, k, p):
    """Entry coordinates (x0, y0) from a chain point (x0, y after k
    local steps)."""
    y0 = solve_y0(family.local, k, p[0], p[1])
    return (float(p[0]), float(y0))


def _cross_from_strip(family, k, p):
    _, yk = t0_pow_closed(family.local, p, k)
    return (float(p[0]), float(yk))


@dataclass(frozen=True)
class OrbitRecord:
    points: tuple
    period_label: int
    multipliers: tuple
    stability: StabilityClass
    residual: float
    mu_at: float


@dataclass(frozen=True)
class BifurcationPoint:
    kind: str
    mu: float
    k: int


def seed_from_limit(rm: ReturnMap, m: float, orbit: str):
    """Strip-coordinate seeds from the limit-map closed forms.

    orbit is "fp+" or "fp-" for the fixed points at (+-sqrt(M), same),
    or "two" for the pair (-sqrt(M), sqrt(M)), (sqrt(M), -sqrt(M)).
    """
    if m < 0:
        raise ValueError("limit orbits require m >= 0")
    root = math.sqrt(m)
    chain = build_chain(rm.family, rm.k)
    if orbit == "fp+":
        pts = [(root, root)]
    elif orbit == "fp-":
        pts = [(-root, -root)]
    elif orbit == "two":
        pts = [(-root, root), (root, -root)]
    else:
        raise ValueError(f"unknown orbit label {orbit!r}")
    return tuple(
        _strip_from_cross(rm.family, rm.k, from_rescaled(chain, p))
        for p in pts
    )


def _newton(fun_jac, z0, tol=1e-11, max_steps=50, window=None):
    """Damped Newton; returns the converged point or raises."""
    z = np.asarray(z0, dtype=float)
    try:
        f, jac = fun_jac(z)
    except _EVAL_ERRORS as exc:
        raise NewtonDivergedError("Newton diverged: seed escaped") from exc
    for _ in range(max_steps):
        norm = float(np.max(np.abs(f)))
        if norm < tol:
            return z
        if abs(np.linalg.det(jac)) < 1e-14 * max(1.0, norm):
            raise NewtonDivergedError(
                "singular Jacobian near a parabolic point"
            )
        step = np.linalg.solve(jac, f)
        alpha = 1.0
        while alpha >= 1.0 / 64.0:
            z_try = z - alpha * step
            if window is not None and np.max(np.abs(z_try[:2])) > window:
                alpha /= 2.0
                continue
            try:
                f_try, jac_try = fun_jac(z_try)
            except _EVAL_ERRORS:
                alpha /= 2.0
                continue
            if float(np.max(np.abs(f_try))) < (1.0 - 0.25 * alpha) * norm:
                z, f, jac = z_try, f_try, jac_try
                break
            alpha /= 2.0
        else:
            raise NewtonDivergedError("Newton diverged: no descent step")
    raise NewtonDivergedError("Newton diverged after 50 damped steps")


def _orbit_record(rm, chain, rescaled_pts, jac, residual):
    """Assemble the record from converged rescaled points.

    Multipliers are the eigenvalues of the accumulated derivative over
    one (or two) returns; at a converged orbit its determinant agrees
    with -1 (single round) or +1 (double round) to solver accuracy, so
    the multiplier product inherits the same sign.
    """
    family = rm.family
    pts = tuple(
        _strip_from_cross(family, rm.k, from_rescaled(chain, q))
        for q in rescaled_pts
    )
    period = (rm.k + family.globalmap.n0) * len(pts)
    eigs = np.linalg.eigvals(jac)
    if float(np.max(np.abs(eigs.imag))) < 1e-9 * float(np.max(np.abs(eigs))):
        mults = tuple(sorted(eigs.real, key=abs, reverse=True))
    else:
        mults = tuple(eigs)
    stability = classify_from_trace(
        float(np.trace(jac)), float(np.linalg.det(jac))
    )
    return OrbitRecord(
        points=pts,
        period_label=period,
        multipliers=mults,
        stability=stability,
        residual=residual,
        mu_at=family.mu,
    )


def find_fixed_point(rm: ReturnMap, seed) -> OrbitRecord:
    """Fixed point of the return map from a strip-coordinate seed.

    The multipliers are real with product -1, so the orbit is a saddle
    (or parabolic exactly at a bifurcation border), never elliptic.
    """
    rr = rescaled_return_map(rm)
    win = 1.5 * rescaled_window(rr) + 2.0

    def fun_jac(z):
        fx, fy = eval_rescaled(rr, z)
        jac = rescaled_jacobian(rr, z)
        return np.array([fx - z[0], fy - z[1]]), jac - np.eye(2)

    cross = _cross_from_strip(rm.family, rm.k, seed)
    z = _newton(fun_jac, to_rescaled(rr.chain, cross), window=win)
    f, _ = fun_jac(z)
    jac = rescaled_jacobian(rr, z)
    return _orbit_record(
        rm, rr.chain, [z], jac, float(np.max(np.abs(f)))
    )


def find_two_periodic(rm: ReturnMap, seed) -> OrbitRecord:
    """2-periodic orbit of the return map; rejects collapse onto a
    fixed point."""
    rr = rescaled_return_map(rm)
    win = 1.5 * rescaled_window(rr) + 2.0

    def fun_jac(z):
        mid = eval_rescaled(rr, z)
        out = eval_rescaled(rr, mid)
        jac = rescaled_jacobian(rr, mid) @ rescaled_jacobian(rr, z)
        return np.array([out[0] - z[0], out[1] - z[1]]), jac - np.eye(2)

    cross = _cross_from_strip(rm.family, rm.k, seed)
    z = _newton(fun_jac, to_rescaled(rr.chain, cross), window=win)
    mid = np.array(eval_rescaled(rr, z))
    if float(np.max(np.abs(mid - z))) < 1e-6:
        raise CollapsedOrbitError("collapsed to fixed point")
    f, _ = fun_jac(z)
    jac2 = rescaled_jacobian(rr, mid) @ rescaled_jacobian(rr, z)
    return _orbit_record(
        rm, rr.chain, [z, mid], jac2, float(np.max(np.abs(f)))
    )


def _rescaled_at(family: FamilyHandle, k: int, m: float):
    mu = mu_from_m(family, k, m)
    return rescaled_return_map(build_return_map(family.with_mu(mu), k))


def _fp_branch(rr, m):
    """Newton for the fixed point on the X = +sqrt(M) branch."""
    root = math.sqrt(max(m, 0.0)) + 1e-3

    def fun_jac(z):
        fx, fy = eval_rescaled(rr, z)
        return (
            np.array([fx - z[0], fy - z[1]]),
            rescaled_jacobian(rr, z) - np.eye(2),
        )

    return _newton(fun_jac, (root, root))


def _two_orbit_branch(rr, m):
    """Newton for the 2-orbit continued from the limit closed form."""
    root = math.sqrt(max(m, 1e-9))

    def fun_jac(z):
        mid = eval_rescaled(rr, z)
        out = eval_rescaled(rr, mid)
        jac = rescaled_jacobian(rr, mid) @ rescaled_jacobian(rr, z)
        return np.array([out[0] - z[0], out[1] - z[1]]), jac - np.eye(2)

    return _newton(fun_jac, (-root, root))


def _trace_components(family: FamilyHandle, k: int, kind: str):
    """Residual system for the bordered search in (X, Y, M)."""

    def components(z):
        x, y, m = z
        rr = _rescaled_at(family, k, m)
        if kind == "plus":
            fx, fy = eval_rescaled(rr, (x, y))
            tr = float(np.trace(rescaled_jacobian(rr, (x, y))))
            return np.array([fx - x, fy - y, tr])
        mid = eval_rescaled(rr, (x, y))
        out = eval_rescaled(rr, mid)
        jac2 = rescaled_jacobian(rr, mid) @ rescaled_jacobian(rr, (x, y))
        return np.array(
            [out[0] - x, out[1] - y, float(np.trace(jac2)) + 2.0]
        )

    return components


def locate_bifurcation(family: FamilyHandle, k: int, kind: str,
                       m_bracket=None) -> BifurcationPoint:
    """Parameter value where the return map changes stability type.

    kind "plus" targets the fixed-point border with multipliers
    (+1, -1); kind "minus" targets the 2-orbit's double multiplier -1.
    A bordered Newton in (X, Y, M) with the trace condition adjoined
    runs first; on failure (or a root escaping the bracket) a scan with
    bisection over M takes over.  For kind plus the trace on a branch
    only touches zero at the border, so the scan bisects orbit
    existence rather than a trace sign change.
    """
    if kind not in ("plus", "minus"):
        raise ValueError(f"unknown bifurcation kind {kind!r}")
    if m_bracket is None:
        m_bracket = (-0.5, 0.5) if kind == "plus" else (0.5, 1.5)
    target = 0.0 if kind == "plus" else 1.0
    seed_m = (
        target
        if m_bracket[0] <= target <= m_bracket[1]
        else 0.5 * (m_bracket[0] + m_bracket[1])
    )
    root = math.sqrt(max(seed_m, 0.0))
    seed = (
        np.array([root, root, seed_m])
        if kind == "plus"
        else np.array([-math.sqrt(max(seed_m, 0.25)),
                       math.sqrt(max(seed_m, 0.25)), seed_m])
    )
    components = _trace_components(family, k, kind)

    def fun_jac(z):
        f = components(z)
        jac = np.empty((3, 3))
        for j in range(3):
            h = 1e-6 * max(1.0, abs(z[j]))
            zp, zm = z.copy(), z.copy()
            zp[j] += h
            zm[j] -= h
            jac[:, j] = (components(zp) - components(zm)) / (2.0 * h)
        return f, jac

    try:
        z = _newton(fun_jac, seed, tol=1e-10)
        m_star = float(z[2])
        if m_bracket[0] <= m_star <= m_bracket[1]:
            return BifurcationPoint(
                kind=kind, mu=mu_from_m(family, k, m_star), k=k
            )
    except NewtonDivergedError:
        pass
    m_star = _bracket_scan(family, k, kind, m_bracket)
    return BifurcationPoint(kind=kind, mu=mu_from_m(family, k, m_star), k=k)


def two_orbit_trace(family: FamilyHandle, k: int, m: float) -> float:
    """Trace of the second-iterate derivative along the continued
    2-orbit branch, with the parameter given as rescaled M."""
    rr = _rescaled_at(family, k, m)
    z = _two_orbit_branch(rr, m)
    mid = eval_rescaled(rr, z)
    jac2 = rescaled_jacobian(rr, mid) @ rescaled_jacobian(rr, z)
    return float(np.trace(jac2))


def _scan_value(family, k, kind, m):
    """Scalar observable for the fallback scan.

    plus: +-1 existence flag for the fixed-point branch (the border is a
    fold, so existence flips sign there while the trace does not).
    minus: trace of the second-iterate derivative plus 2.
    """
    try:
        if kind == "plus":
            _fp_branch(_rescaled_at(family, k, m), m)
            return 1.0
        return two_orbit_trace(family, k, m) + 2.0
    except NewtonDivergedError:
        return -1.0 if kind == "plus" else None


def _bracket_scan(family, k, kind, m_bracket, n_scan=17):
    grid = np.linspace(m_bracket[0], m_bracket[1], n_scan)
    values = [_scan_value(family, k, kind, float(m)) for m in grid]
    lo = hi = vlo = None
    for i in range(n_scan - 1):
        va, vb = values[i], values[i + 1]
        if va is not None and vb is not None and va * vb <= 0.0:
            lo, hi, vlo = float(grid[i]), float(grid[i + 1]), va
            break
    if lo is None:
        raise BracketError(
            "bracket failed: no sign change of the border condition"
        )
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        vm = _scan_value(family, k, kind, mid)
        if vm is None:
            raise BracketError("bracket failed: orbit lost during bisection")
        if vm == 0.0 or hi - lo < 1e-13:
            break
        if vlo * vm <= 0.0:
            hi = mid
        else:
            lo, vlo = mid, vm
    return 0.5 * (lo + hi)


def phase_of_elliptic(record: OrbitRecord) -> float:
    """Rotation phase arccos(trace/2) of an elliptic record."""
    if record.stability.phase is None:
        raise NotEllipticError(
            f"orbit is {record.stability.tag}, not elliptic"
        )
    return record.stability.phase
