"""Analytics for the orientation-reversing conservative quadratic map.

The limit map of the rescaled first-return dynamics is

    xbar = y,   ybar = M + x - y**2

with Jacobian determinant -1 everywhere.  This module provides its fixed
points, the 2-periodic orbit and its stability, the first Birkhoff (twist)
coefficient of that orbit, a covering-relation horseshoe certificate for
large M, and the table of bifurcation values on the M axis, each re-derived
numerically instead of hard-coded.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .exceptions import NotEllipticError, ResonantParameterError
from .mapcore import HShear, MapExpr, Swap

__all__ = [
    "StabilityClass",
    "map_expr",
    "step",
    "fixed_points",
    "two_periodic_orbit",
    "classify_from_trace",
    "birkhoff_b1",
    "rotation_number_slope",
    "horseshoe_certificate",
    "bifurcation_values",
]


@dataclass(frozen=True)
class StabilityClass:
    tag: str
    phase: float | None = None


def map_expr(M: float) -> MapExpr:
    """The map as exact stages: swap then shear y += M - x**2."""
    return MapExpr((Swap(), HShear((M, 0.0, -1.0))))


def step(M: float, p):
    x, y = p
    # same summation order as the stage composition, so the two agree bitwise
    return y, x + (M - y * y)


def _jac(y):
    return np.array([[0.0, 1.0], [1.0, -2.0 * y]])


def fixed_points(M: float):
    """Fixed points with their multipliers; both are saddles for M > 0."""
    if M < 0.0:
        return []
    s = math.sqrt(M)
    out = []
    for x in ([-s, s] if M > 0.0 else [0.0]):
        root = math.sqrt(x * x + 1.0)
        out.append(((x, x), (-x + root, -x - root)))
    return out


def classify_from_trace(trace: float, det: float, tol: float = 1e-9) -> StabilityClass:
    """Stability tag from the trace of the relevant return derivative.

    det = -1 covers single-round orbits (always real multipliers of
    product -1); det = +1 covers second-iterate derivatives where elliptic
    behavior is possible.
    """
    if det < 0.0:
        if abs(trace) <= tol:
            return StabilityClass("parabolic-plus")
        return StabilityClass("saddle")
    if abs(trace) > 2.0 + tol:
        return StabilityClass("saddle")
    if trace >= 2.0 - tol:
        return StabilityClass("parabolic-plus")
    if trace <= -2.0 + tol:
        return StabilityClass("parabolic-minus")
    phase = math.acos(max(-1.0, min(1.0, trace / 2.0)))
    if abs(trace) <= tol:
        return StabilityClass("resonance-1:4", phase)
    if abs(trace + 1.0) <= tol:
        return StabilityClass("resonance-1:3", phase)
    if abs(trace + 0.5) <= tol:
        return StabilityClass("twistless", phase)
    return StabilityClass("elliptic-generic", phase)


def two_periodic_orbit(M: float):
    """The 2-periodic orbit (-s, s) <-> (s, -s), s = sqrt(M), for M > 0."""
    if M <= 0.0:
        raise ValueError("no real 2-periodic orbit for M <= 0")
    s = math.sqrt(M)
    p1 = (-s, s)
    p2 = (s, -s)
    d2 = _jac(p2[1]) @ _jac(p1[1])
    trace = float(np.trace(d2))
    return p1, p2, trace, classify_from_trace(trace, det=1.0)


def _elliptic_frame(M: float):
    """Complex eigenvalue, scaled eigenvector and dual row at the 2-orbit.

    The eigenvector for the multiplier with positive imaginary part is
    scaled so the real frame [Re v, -Im v] has determinant 1; that fixes
    the z-coordinate amplitude and makes the twist coefficient continuous
    in M away from the strong resonances.
    """
    s = math.sqrt(M)
    cosphi = 1.0 - 2.0 * M
    sinphi = math.sqrt(max(0.0, 1.0 - cosphi * cosphi))
    lam = complex(cosphi, sinphi)
    v = np.array([2.0 * s, 1.0 - lam], dtype=complex)
    det_t = v[0].real * (-v[1].imag) - (-v[0].imag) * v[1].real
    if det_t < 0.0:
        v = 1j * v
        det_t = -det_t
    v = v / math.sqrt(det_t)
    dd = v[0] * np.conj(v[1]) - np.conj(v[0]) * v[1]
    ell = np.array([np.conj(v[1]), -np.conj(v[0])]) / dd
    return lam, v, ell


def _pmul(p, q, max_deg=3):
    out = {}
    for (j1, k1), c1 in p.items():
        for (j2, k2), c2 in q.items():
            j, k = j1 + j2, k1 + k2
            if j + k <= max_deg:
                out[(j, k)] = out.get((j, k), 0.0) + c1 * c2
    return out


def _paxpy(out, poly, scale):
    for key, c in poly.items():
        out[key] = out.get(key, 0.0) + scale * c
    return out


def birkhoff_b1(M: float) -> float:
    """First Birkhoff coefficient of the elliptic 2-periodic orbit.

    Degree-3 complex normal form of the second-iterate map at (-s, s):
    after removing the non-resonant quadratic terms the resonant cubic
    coefficient c1 gives the twist as Im(conj(lam)*c1).  Undefined at the
    strong resonances M = 1/2 (lam**4 = 1) and M = 3/4 (lam**3 = 1).
    """
    if not 0.0 < M < 1.0:
        raise ValueError("elliptic 2-periodic orbit requires 0 < M < 1")
    if abs(M - 0.5) < 1e-9 or abs(M - 0.75) < 1e-9:
        raise ResonantParameterError(f"strong resonance at M = {M}")
    s = math.sqrt(M)
    lam, v, ell = _elliptic_frame(M)

    xi = {(1, 0): v[0], (0, 1): np.conj(v[0])}
    eta = {(1, 0): v[1], (0, 1): np.conj(v[1])}
    eta2 = _pmul(eta, eta)
    # second iterate around the orbit point, exact through cubic order:
    # xi' = xi - 2s eta - eta^2
    # eta' = 2s xi + (1-4s^2) eta - xi^2 + 4s xi eta - (2s+4s^2) eta^2
    #        + 2 xi eta^2 - 4s eta^3
    xi_new = {}
    _paxpy(xi_new, xi, 1.0)
    _paxpy(xi_new, eta, -2.0 * s)
    _paxpy(xi_new, eta2, -1.0)
    eta_new = {}
    _paxpy(eta_new, xi, 2.0 * s)
    _paxpy(eta_new, eta, 1.0 - 4.0 * s * s)
    _paxpy(eta_new, _pmul(xi, xi), -1.0)
    _paxpy(eta_new, _pmul(xi, eta), 4.0 * s)
    _paxpy(eta_new, eta2, -(2.0 * s + 4.0 * s * s))
    _paxpy(eta_new, _pmul(xi, eta2), 2.0)
    _paxpy(eta_new, _pmul(eta, eta2), -4.0 * s)

    znew = {}
    _paxpy(znew, xi_new, ell[0])
    _paxpy(znew, eta_new, ell[1])
    assert abs(znew.get((1, 0), 0.0) - lam) < 1e-10
    assert abs(znew.get((0, 1), 0.0)) < 1e-10

    a20 = znew.get((2, 0), 0.0)
    a11 = znew.get((1, 1), 0.0)
    a02 = znew.get((0, 2), 0.0)
    a21 = znew.get((2, 1), 0.0)
    lam2 = lam * lam
    c1 = (
        a21
        + 2.0 * a20 * a11 / (1.0 - lam)
        + abs(a11) ** 2 / (1.0 - np.conj(lam))
        + a11 * a20 / (lam2 - lam)
        + 2.0 * abs(a02) ** 2 / (lam2 - np.conj(lam))
    )
    return float((np.conj(lam) * c1).imag)


def rotation_number_slope(M: float, radii=(0.015, 0.025, 0.035, 0.045), n_steps: int = 20000):
    """Twist oracle: d(rotation number)/d(r^2) of the second-iterate map.

    Iterates points seeded at several radii in the z-frame of the elliptic
    2-orbit and measures the mean rotation per step from the unwrapped
    angle; a quadratic fit in r^2 (to absorb the next twist order) gives
    the same coefficient as birkhoff_b1, by an independent route.
    """
    if not 0.0 < M < 1.0:
        raise ValueError("requires 0 < M < 1")
    s = math.sqrt(M)
    lam, v, ell = _elliptic_frame(M)
    p1x, p1y = -s, s
    rates = []
    for r in radii:
        w = r * v + r * np.conj(v)
        x, y = p1x + w[0].real, p1y + w[1].real
        z_prev = complex(ell[0] * (x - p1x) + ell[1] * (y - p1y))
        total = 0.0
        for _ in range(n_steps):
            x, y = step(M, (x, y))
            x, y = step(M, (x, y))
            z = complex(ell[0] * (x - p1x) + ell[1] * (y - p1y))
            total += cmath.phase(z / z_prev)
            z_prev = z
        rates.append(total / n_steps)
    r2 = np.asarray(radii) ** 2
    coeffs = np.polyfit(r2, np.asarray(rates), 2)
    return float(coeffs[1])


def horseshoe_certificate(M: float, margin: float = 1e-9) -> bool:
    """Covering-relation certificate for a full 2-shift at large M.

    Two horizontal bands across the square Q = [-R, R]^2 at heights
    [y1, y2] and [-y2, -y1], with y1 = sqrt(M - 2R), y2 = sqrt(M + 2R),
    each containing one saddle fixed point.  The image of either band is a
    vertical strip spanning Q whose x-extent equals the band's y-extent,
    so strict edge inequalities certify that both bands cross both bands.
    Returns False when the inequalities cannot be met (never claims
    absence of a horseshoe).
    """
    lo = 1.0 + math.sqrt(max(0.0, 1.0 + M))
    hi = M / 2.0
    if not hi > lo:
        return False
    r = 0.5 * (lo + hi)
    y1sq = M - 2.0 * r
    if y1sq <= margin:
        return False
    y1 = math.sqrt(y1sq)
    y2 = math.sqrt(M + 2.0 * r)
    if not y2 < r - margin:
        return False
    def edge_image(h):
        # ybar = M + x - h**2 over x in [-r, r]; exact interval by monotonicity
        return M - r - h * h, M + r - h * h

    for band_lo, band_hi in [(y1, y2), (-y2, -y1)]:
        # image x-range of the band is its y-range; must stay inside Q
        if not (-r + margin < band_lo and band_hi < r - margin):
            return False
        # one edge must exit above both bands, the other below both
        iv_top = edge_image(band_hi)
        iv_bot = edge_image(band_lo)
        above = [iv[0] > y2 + margin for iv in (iv_top, iv_bot)]
        below = [iv[1] < -y2 - margin for iv in (iv_top, iv_bot)]
        if not ((above[0] and below[1]) or (below[0] and above[1])):
            return False
    return True


def _located_two_orbit_trace(M: float) -> float:
    """Trace of the second-iterate derivative at the Newton-located 2-orbit."""
    s = math.sqrt(M)
    p = np.array([-s, s])
    for _ in range(60):
        q = np.array(step(M, p))
        pp = np.array(step(M, q))
        res = pp - p
        d2 = _jac(q[1]) @ _jac(p[1])
        try:
            delta = np.linalg.solve(d2 - np.eye(2), -res)
        except np.linalg.LinAlgError:
            break
        p = p + delta
        if np.max(np.abs(delta)) < 1e-14:
            break
    q = np.array(step(M, p))
    return float(np.trace(_jac(q[1]) @ _jac(p[1])))


def bifurcation_values():
    """The distinguished M values, each recovered by root-finding.

    Fixed-point birth via the multiplier of the continued fixed point
    (parameterized by its coordinate so the root is two-sided); period
    doubling and the strong resonances via the located 2-orbit trace;
    the twistless value via the Birkhoff coefficient.
    """

    def fp_trace(sv):
        # fixed point of the M = s**2 map continued through s = 0
        x = sv
        for _ in range(40):
            gp = -2.0 * x
            if gp == 0.0:
                break
            delta = (sv * sv - x * x) / gp
            x = x - delta
            if abs(delta) < 1e-15:
                break
        return -2.0 * x

    s_birth = brentq(fp_trace, -0.3, 0.3, xtol=1e-13)
    out = {
        "fixed-point-birth": s_birth * s_birth,
        "period-doubling": brentq(
            lambda m: _located_two_orbit_trace(m) + 2.0, 0.5, 1.5, xtol=1e-13
        ),
        "resonance-1:4": brentq(
            lambda m: _located_two_orbit_trace(m), 0.25, 0.75, xtol=1e-13
        ),
        "resonance-1:3": brentq(
            lambda m: _located_two_orbit_trace(m) + 1.0, 0.6, 0.9, xtol=1e-13
        ),
        "twistless": brentq(birkhoff_b1, 0.55, 0.70, xtol=1e-10),
    }
    return out
