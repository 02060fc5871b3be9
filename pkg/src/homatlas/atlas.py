"""Sweep orchestration: cascades in mu, two-parameter strip maps in
(mu, alpha), and the global-resonance certificate.

Everything here composes the border locator and the 2-orbit solver over
grids.  Sweeps can fan out over a thread pool; results are merged in
grid order so reruns are bit-identical for a fixed grid.  Individual
solver failures are recorded as flagged partial results instead of
aborting a whole sweep.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .exceptions import (
    BracketError,
    CollapsedOrbitError,
    CrossFormSolveError,
    EscapeError,
    ExtractionError,
    NewtonDivergedError,
    PrecisionFloorError,
    ResonanceWindowError,
    StripWindowError,
    TangencyError,
    TargetUnreachableError,
)
from .family import FamilyHandle, tune_to
from .orbits import (
    find_two_periodic,
    locate_bifurcation,
    seed_from_limit,
    two_orbit_trace,
)
from .rescale import mu_from_m
from .returnmap import build_return_map

__all__ = [
    "ResonanceFlag",
    "CascadeRow",
    "CascadeResult",
    "StripBand",
    "StripMap2D",
    "CertRecord",
    "ResonanceCertificate",
    "run_cascade",
    "run_strip_atlas",
    "pairwise_intersections",
    "boundary_slope",
    "certify_global_resonance",
]

_SOLVER_ERRORS = (
    BracketError,
    CollapsedOrbitError,
    CrossFormSolveError,
    EscapeError,
    NewtonDivergedError,
    PrecisionFloorError,
    StripWindowError,
    TangencyError,
)

# trace targets of the second-iterate derivative where the rotation
# number passes a low-order resonance: cos(phi) = trace/2 hits 0 at the
# 1:4 resonance, -1/4 at the twistless value, -1/2 at the 1:3 resonance
_TRACE_TARGETS = (
    (0.0, "resonance-1:4"),
    (-0.5, "twistless"),
    (-1.0, "resonance-1:3"),
)


@dataclass(frozen=True)
class ResonanceFlag:
    tag: str
    mu: float


@dataclass(frozen=True)
class CascadeRow:
    k: int
    mu_plus: float | None
    mu_minus: float | None
    interval: tuple | None
    phi_curve: tuple
    flags: tuple
    monotone: bool
    error: str | None = None


@dataclass(frozen=True)
class CascadeResult:
    lam: float
    alpha: float
    s0: float
    rows: tuple


@dataclass(frozen=True)
class StripBand:
    k: int
    mu_plus: tuple
    mu_minus: tuple


@dataclass(frozen=True)
class StripMap2D:
    alphas: tuple
    k_values: tuple
    bands: tuple
    intersections: tuple
    axis_crossings: tuple
    failures: tuple


@dataclass(frozen=True)
class CertRecord:
    k: int
    cos_phi: float | None
    phase: float | None
    margin: float | None
    limit_error: float | None
    failure: str | None = None


@dataclass(frozen=True)
class ResonanceCertificate:
    s0: float
    k_range: tuple
    records: tuple
    intervals: tuple
    nesting: str
    flags: tuple
    verdict: str


def _cascade_row(family: FamilyHandle, k: int, n_phi: int = 25) -> CascadeRow:
    try:
        plus = locate_bifurcation(family, k, "plus")
        minus = locate_bifurcation(family, k, "minus")
        m_grid = np.linspace(0.02, 0.98, n_phi)
        traces = np.array(
            [two_orbit_trace(family, k, float(m)) for m in m_grid]
        )
        mus = np.array([mu_from_m(family, k, float(m)) for m in m_grid])
        phis = np.arccos(np.clip(traces / 2.0, -1.0, 1.0))
        curve = tuple(zip(mus.tolist(), phis.tolist()))
        flags = []
        for target, tag in _TRACE_TARGETS:
            g = traces - target
            for i in range(n_phi - 1):
                if g[i] == 0.0 or g[i] * g[i + 1] < 0.0:
                    m_star = brentq(
                        lambda m: two_orbit_trace(family, k, m) - target,
                        float(m_grid[i]),
                        float(m_grid[i + 1]),
                        xtol=1e-12,
                    )
                    flags.append(
                        ResonanceFlag(tag, mu_from_m(family, k, m_star))
                    )
                    break
        return CascadeRow(
            k=k,
            mu_plus=plus.mu,
            mu_minus=minus.mu,
            interval=tuple(sorted((plus.mu, minus.mu))),
            phi_curve=curve,
            flags=tuple(flags),
            monotone=bool(np.all(np.diff(traces) < 0.0)),
        )
    except _SOLVER_ERRORS as exc:
        return CascadeRow(
            k=k,
            mu_plus=None,
            mu_minus=None,
            interval=None,
            phi_curve=(),
            flags=(),
            monotone=False,
            error=f"{type(exc).__name__}: {exc}",
        )


def run_cascade(family: FamilyHandle, k_range, threads: int = 1):
    """Bifurcation intervals, phase curves, and resonance flags per k."""
    ks = tuple(int(k) for k in k_range)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = tuple(pool.map(lambda k: _cascade_row(family, k), ks))
    else:
        rows = tuple(_cascade_row(family, k) for k in ks)
    return CascadeResult(
        lam=family.lam, alpha=family.alpha, s0=family.s0, rows=rows
    )


def _band_interval(band: StripBand, i: int):
    a, b = band.mu_plus[i], band.mu_minus[i]
    if a is None or b is None:
        return None
    return (a, b) if a <= b else (b, a)


def _bands_overlap(alphas, b1, b2, alpha_min):
    for i, alpha in enumerate(alphas):
        if abs(alpha) < alpha_min:
            continue
        s1 = _band_interval(b1, i)
        s2 = _band_interval(b2, i)
        if s1 is None or s2 is None:
            continue
        if s1[0] <= s2[1] and s2[0] <= s1[1]:
            return True
    return False


def pairwise_intersections(atlas: StripMap2D, alpha_min: float = 0.0):
    """(k1, k2, overlap) over k-pairs, restricted to |alpha| >= alpha_min."""
    out = []
    for i, b1 in enumerate(atlas.bands):
        for b2 in atlas.bands[i + 1:]:
            out.append(
                (b1.k, b2.k, _bands_overlap(atlas.alphas, b1, b2, alpha_min))
            )
    return tuple(out)


def boundary_slope(atlas: StripMap2D, k: int, kind: str,
                   alpha_min: float = 0.0) -> float:
    """Least-squares slope of the mu(alpha) boundary polyline."""
    (band,) = [b for b in atlas.bands if b.k == k]
    values = band.mu_plus if kind == "plus" else band.mu_minus
    pts = [
        (a, m)
        for a, m in zip(atlas.alphas, values)
        if m is not None and abs(a) >= alpha_min
    ]
    if len(pts) < 2:
        raise ValueError(f"not enough boundary points for k={k} {kind}")
    arr = np.array(pts)
    return float(np.polyfit(arr[:, 0], arr[:, 1], 1)[0])


def run_strip_atlas(family_template: FamilyHandle, k_range,
                    alpha_range=None, eps: float = 0.05,
                    n_alpha: int = 41, threads: int = 1) -> StripMap2D:
    """Trace the border curves over an alpha-grid of tuned families.

    Each grid column retunes the family to the target alpha; each cell
    locates both borders.  Cell failures are flagged and leave holes in
    the polylines rather than aborting the sweep.
    """
    if alpha_range is None:
        alpha_range = (-eps, eps)
    alphas = tuple(
        float(a) for a in np.linspace(alpha_range[0], alpha_range[1],
                                      int(n_alpha))
    )
    k_values = tuple(int(k) for k in k_range)
    failures = []
    tuned = []
    for a in alphas:
        try:
            tuned.append(tune_to(family_template, alpha_target=a))
        except (TargetUnreachableError, ExtractionError) as exc:
            tuned.append(None)
            failures.append((None, a, "tune", f"{type(exc).__name__}: {exc}"))

    def cell(task):
        k, i = task
        fam = tuned[i]
        if fam is None:
            return (None, None, "family tuning failed")
        out = {}
        notes = []
        for kind in ("plus", "minus"):
            try:
                out[kind] = locate_bifurcation(fam, k, kind).mu
            except _SOLVER_ERRORS as exc:
                out[kind] = None
                notes.append(f"{kind}: {type(exc).__name__}")
        return (out["plus"], out["minus"], "; ".join(notes) or None)

    tasks = [(k, i) for k in k_values for i in range(len(alphas))]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cells = list(pool.map(cell, tasks))
    else:
        cells = [cell(t) for t in tasks]

    bands = []
    for j, k in enumerate(k_values):
        chunk = cells[j * len(alphas):(j + 1) * len(alphas)]
        for i, (_, _, note) in enumerate(chunk):
            if note is not None:
                failures.append((k, alphas[i], "locate", note))
        bands.append(
            StripBand(
                k=k,
                mu_plus=tuple(c[0] for c in chunk),
                mu_minus=tuple(c[1] for c in chunk),
            )
        )
    bands = tuple(bands)
    crossings = []
    for band in bands:
        hit = False
        for i in range(len(alphas)):
            span = _band_interval(band, i)
            if span is not None and span[0] <= 0.0 <= span[1]:
                hit = True
                break
        crossings.append((band.k, hit))
    atlas = StripMap2D(
        alphas=alphas,
        k_values=k_values,
        bands=bands,
        intersections=(),
        axis_crossings=tuple(crossings),
        failures=tuple(failures),
    )
    return StripMap2D(
        alphas=atlas.alphas,
        k_values=atlas.k_values,
        bands=atlas.bands,
        intersections=pairwise_intersections(atlas),
        axis_crossings=atlas.axis_crossings,
        failures=atlas.failures,
    )


# cos(phi) at the limit is 1 + 2*s0, so the strong resonances sit at
# s0 = -1/2 (1:4) and -3/4 (1:3) and the twist coefficient vanishes at
# s0 = -5/8.  The guard value -1/sqrt(2) is kept alongside -3/4 so
# families near either candidate are never silently certified.
_EXCEPTIONAL_S0 = (
    (-0.5, "limit-resonance-1:4"),
    (-0.625, "limit-twistless"),
    (-0.75, "limit-resonance-1:3"),
    (-math.sqrt(0.5), "limit-exceptional-candidate"),
)


def certify_global_resonance(family: FamilyHandle, k_range,
                             flag_tol: float = 1e-4) -> ResonanceCertificate:
    """Check for an elliptic 2-orbit at mu = 0 for every k in range.

    Requires s0 in (-1, 0).  Proximity of s0 to an exceptional value is
    flagged and downgrades the verdict from "certified" to "withheld";
    a missing or non-elliptic orbit at any k gives "incomplete".
    """
    s0 = family.s0
    if not (-1.0 < s0 < 0.0):
        raise ResonanceWindowError(
            f"s0 = {s0:.6g} not in resonance window (-1, 0)"
        )
    flags = tuple(
        tag for value, tag in _EXCEPTIONAL_S0 if abs(s0 - value) <= flag_tol
    )
    limit_cos = 1.0 + 2.0 * s0
    ks = tuple(int(k) for k in k_range)
    records = []
    intervals = []
    all_elliptic = True
    for k in ks:
        try:
            rm = build_return_map(family.with_mu(0.0), k)
            seed = seed_from_limit(rm, -s0, "two")[0]
            rec = find_two_periodic(rm, seed)
            if rec.stability.phase is None:
                all_elliptic = False
                records.append(
                    CertRecord(k, None, None, None, None,
                               f"orbit not elliptic: {rec.stability.tag}")
                )
            else:
                cos_phi = math.cos(rec.stability.phase)
                records.append(
                    CertRecord(
                        k=k,
                        cos_phi=cos_phi,
                        phase=rec.stability.phase,
                        margin=2.0 - abs(2.0 * cos_phi),
                        limit_error=abs(cos_phi - limit_cos),
                    )
                )
        except _SOLVER_ERRORS as exc:
            all_elliptic = False
            records.append(
                CertRecord(k, None, None, None, None,
                           f"{type(exc).__name__}: {exc}")
            )
        try:
            plus = locate_bifurcation(family, k, "plus")
            minus = locate_bifurcation(family, k, "minus")
            intervals.append((k,) + tuple(sorted((plus.mu, minus.mu))))
        except _SOLVER_ERRORS:
            intervals.append((k, None, None))
    nesting = _nesting_verdict(intervals)
    if not all_elliptic:
        verdict = "incomplete"
    elif flags:
        verdict = "withheld"
    else:
        verdict = "certified"
    return ResonanceCertificate(
        s0=s0,
        k_range=ks,
        records=tuple(records),
        intervals=tuple(intervals),
        nesting=nesting,
        flags=flags,
        verdict=verdict,
    )


def _nesting_verdict(intervals):
    spans = [(k, lo, hi) for k, lo, hi in intervals if lo is not None]
    if len(spans) < len(intervals):
        return "incomplete"
    for k, lo, hi in spans:
        if not (lo < 0.0 < hi):
            return f"mu=0 outside interval at k={k}"
    for (_, lo1, hi1), (k2, lo2, hi2) in zip(spans, spans[1:]):
        if not (lo1 < lo2 and hi2 < hi1):
            return f"nesting violated at k={k2}"
    return "nested"
