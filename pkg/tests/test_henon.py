import math

import numpy as np
import pytest

from homatlas.exceptions import ResonantParameterError
from homatlas.henon import (
    bifurcation_values,
    birkhoff_b1,
    classify_from_trace,
    fixed_points,
    horseshoe_certificate,
    map_expr,
    rotation_number_slope,
    step,
    two_periodic_orbit,
)
from homatlas.mapcore import eval_map, jacobian


def test_step_matches_stage_composition():
    rng = np.random.default_rng(3)
    for _ in range(20):
        M = rng.uniform(-1, 2)
        p = tuple(rng.uniform(-2, 2, size=2))
        assert eval_map(map_expr(M), p) == step(M, p)


def test_determinants():
    rng = np.random.default_rng(4)
    for _ in range(20):
        M = rng.uniform(-1, 2)
        p = tuple(rng.uniform(-2, 2, size=2))
        j = jacobian(map_expr(M), p)
        assert abs(np.linalg.det(j) + 1.0) < 1e-13
        q = eval_map(map_expr(M), p)
        j2 = jacobian(map_expr(M), q) @ j
        assert abs(np.linalg.det(j2) - 1.0) < 1e-12


def test_fixed_points_cases():
    assert fixed_points(-1.0) == []
    [(p, mults)] = fixed_points(0.0)
    assert p == (0.0, 0.0)
    assert sorted(mults) == [-1.0, 1.0]
    pts = fixed_points(0.25)
    assert [p for p, _ in pts] == [(-0.5, -0.5), (0.5, 0.5)]
    for p, (nu1, nu2) in pts:
        assert abs(nu1 * nu2 + 1.0) < 1e-12
        assert max(abs(nu1), abs(nu2)) > 1.0  # always a saddle
        img = step(0.25, p)
        assert abs(img[0] - p[0]) < 1e-12 and abs(img[1] - p[1]) < 1e-12


def test_two_periodic_orbit_quarter():
    p1, p2, trace, stab = two_periodic_orbit(0.25)
    assert p1 == (-0.5, 0.5)
    assert p2 == (0.5, -0.5)
    assert abs(trace - 1.0) < 1e-12
    assert stab.tag == "elliptic-generic"
    assert abs(stab.phase - math.pi / 3) < 1e-12
    # the two points exchange under the map and are fixed by its square
    assert np.allclose(step(0.25, p1), p2, atol=1e-12)
    assert np.allclose(step(0.25, p2), p1, atol=1e-12)


def test_two_periodic_orbit_resonances_and_doubling():
    _, _, trace, stab = two_periodic_orbit(0.5)
    assert abs(trace) < 1e-12
    assert stab.tag == "resonance-1:4"
    _, _, trace, stab = two_periodic_orbit(0.75)
    assert abs(trace + 1.0) < 1e-12
    assert stab.tag == "resonance-1:3"
    _, _, trace, stab = two_periodic_orbit(1.0)
    assert abs(trace + 2.0) < 1e-12
    assert stab.tag == "parabolic-minus"
    _, _, trace, stab = two_periodic_orbit(2.0)
    assert trace < -2.0
    assert stab.tag == "saddle"
    with pytest.raises(ValueError):
        two_periodic_orbit(0.0)


def test_classify_from_trace_reflecting_case():
    assert classify_from_trace(0.0, det=-1.0).tag == "parabolic-plus"
    assert classify_from_trace(1.5, det=-1.0).tag == "saddle"
    assert classify_from_trace(5.0, det=1.0).tag == "saddle"
    assert classify_from_trace(-0.5, det=1.0).tag == "twistless"


def test_phase_strictly_increasing_in_m():
    phases = []
    for M in np.linspace(0.05, 0.95, 19):
        stab = two_periodic_orbit(float(M))[3]
        phases.append(stab.phase)
    assert all(b > a for a, b in zip(phases, phases[1:]))


def test_birkhoff_b1_frozen_values():
    assert abs(birkhoff_b1(0.25) + 4.0) < 1e-9
    assert abs(birkhoff_b1(0.625)) < 1e-9


def test_birkhoff_b1_sign_change_across_twistless():
    assert birkhoff_b1(0.6) < 0.0
    assert birkhoff_b1(0.65) > 0.0


def test_birkhoff_b1_rejects_resonances():
    with pytest.raises(ResonantParameterError):
        birkhoff_b1(0.5)
    with pytest.raises(ResonantParameterError):
        birkhoff_b1(0.75)
    with pytest.raises(ValueError):
        birkhoff_b1(1.2)


def test_rotation_slope_oracle_agrees():
    # independent measurement of the twist from rotation number vs radius
    for M in (0.25, 0.6, 0.65):
        b1 = birkhoff_b1(M)
        slope = rotation_number_slope(M)
        assert slope * b1 > 0.0
        assert abs(slope - b1) < 0.15 * abs(b1)
    assert abs(rotation_number_slope(0.625)) < 0.05


def test_bifurcation_values_table():
    table = bifurcation_values()
    assert abs(table["fixed-point-birth"]) < 1e-9
    assert abs(table["period-doubling"] - 1.0) < 1e-9
    assert abs(table["resonance-1:4"] - 0.5) < 1e-9
    assert abs(table["resonance-1:3"] - 0.75) < 1e-9
    assert abs(table["twistless"] - 0.625) < 1e-6


def test_horseshoe_certificate_cases():
    for M in (9.5, 10.0, 12.0):
        assert horseshoe_certificate(M) is True
    for M in (-1.0, 0.5, 2.0):
        assert horseshoe_certificate(M) is False


def test_horseshoe_certificate_monotone_in_sampled_range():
    for M in np.arange(9.5, 14.0, 0.5):
        if horseshoe_certificate(float(M)):
            assert horseshoe_certificate(float(M) + 1.0)
