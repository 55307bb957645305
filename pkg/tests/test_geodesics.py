import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from herglotz import (
    BrokenRaySpec,
    GeodesicSpec,
    JumpTangency,
    OutOfDomain,
    WaveSpeed,
    alpha_prime_zeros,
    broken_ray,
    chebyshev_T,
    find_periodic_radii,
    geodesic_length,
    is_periodic,
    opening_angle,
    partial_angle,
    trace_geodesic,
    trace_ode_oracle,
    weight_H,
)
from herglotz.geodesics import weight_H_rho

R_EUC = np.arange(1, 10) / 10


def test_euclidean_closed_forms():
    w = WaveSpeed.constant(0.05)
    r = R_EUC[R_EUC > 0.05]
    assert np.max(np.abs(opening_angle(w, r) / (2 * np.arccos(r)) - 1)) <= 1e-8
    assert np.max(np.abs(geodesic_length(w, r) / (2 * np.sqrt(1 - r**2)) - 1)) <= 1e-8
    assert geodesic_length(w, 0.5) == pytest.approx(1.7320508, abs=1e-7)
    assert opening_angle(w, 0.5) == pytest.approx(2 * np.pi / 3, abs=1e-12)
    assert opening_angle(w, np.sqrt(0.5)) == pytest.approx(np.pi / 2, abs=1e-12)
    assert geodesic_length(w, 1.0) == 0.0 and opening_angle(w, 1.0) == 0.0


def test_tangent_tip_rejected(jump05):
    with pytest.raises(JumpTangency):
        geodesic_length(jump05, 0.5)


def test_jump_profile_matches_ode(jump05):
    for r0 in (0.3, 0.45, 0.7):
        o = trace_ode_oracle(jump05, GeodesicSpec(r0), step=1e-3)
        assert geodesic_length(jump05, r0) == pytest.approx(o.total_length, rel=1e-4)
        ang = o.theta[-1] - o.theta[0]
        assert opening_angle(jump05, r0) == pytest.approx(ang, rel=1e-4)


def test_linear_profile_matches_ode(linear):
    o = trace_ode_oracle(linear, GeodesicSpec(0.4), step=1e-3)
    assert opening_angle(linear, 0.4) == pytest.approx(o.theta[-1] - o.theta[0], abs=1e-5)
    assert o.meta["drift"] <= 1e-6


def test_weight_H(euclid, jump05, rng):
    assert weight_H(euclid, 1.0, 0.5) == pytest.approx(1 / np.sqrt(0.75), abs=1e-14)
    for w in (euclid, jump05):
        z = rng.uniform(0.21, 0.99, 100)
        r = z + rng.uniform(1e-3, 1.0, 100) * (1 - z)
        ok = ~np.isin(r, [0.5]) & ~np.isin(z, [0.5])
        assert np.max(np.abs(weight_H(w, r[ok], z[ok]) - weight_H_rho(w, r[ok], z[ok]))) <= 1e-12
    # one-sided values around the breakpoint
    below = weight_H(jump05, 0.5, 0.3)
    above = weight_H(jump05, 0.5 + 1e-9, 0.3)
    assert np.isfinite(below) and np.isfinite(above)
    assert below == pytest.approx(1 / 1.2 / np.sqrt(1 - (0.3 / 0.5) ** 2), rel=1e-12)
    with pytest.raises(OutOfDomain):
        weight_H(euclid, 0.5, 0.6)


def test_chebyshev_T(euclid, jump05, rng):
    assert chebyshev_T(euclid, 0, 0.9, 0.3) == 1.0
    assert chebyshev_T(euclid, 2, 1.0, 0.5) == pytest.approx(-0.5, abs=1e-12)
    r0 = rng.uniform(0.21, 0.9, 200)
    r = r0 + rng.uniform(0, 1, 200) * (1 - r0)
    r0 = r0[np.abs(r0 - 0.5) > 1e-6]
    r = r[: len(r0)]
    for k in (1, 3, 7):
        assert np.all(np.abs(chebyshev_T(jump05, k, r, r0)) <= 1)
    assert np.allclose(partial_angle(euclid, r, r0), np.arccos(r0 / r), atol=1e-12)


def test_trace_euclidean_chord(euclid):
    p = trace_geodesic(euclid, GeodesicSpec(0.5), 101)
    assert p.theta[0] == pytest.approx(-np.pi / 3, abs=1e-12)
    assert p.theta[-1] == pytest.approx(np.pi / 3, abs=1e-12)
    assert np.allclose(p.x, 0.5, atol=1e-12)
    assert np.max(np.abs(p.ang_mom - 0.5)) <= 1e-8
    assert p.r[50] == pytest.approx(0.5, abs=1e-12)
    text = p.to_csv()
    assert text.splitlines()[0] == "t,r,theta,x,y"


def test_trace_conservation_across_jump(jump05):
    for r0 in (0.3, 0.45):
        p = trace_geodesic(jump05, GeodesicSpec(r0), 2001)
        assert np.max(np.abs(p.speed2 - 1)) <= 1e-8
        assert np.max(np.abs(p.ang_mom - r0 / 1.2)) <= 1e-8
        o = trace_ode_oracle(jump05, GeodesicSpec(r0), step=1e-3)
        assert np.max(np.abs(np.interp(p.t, o.t, o.r) - p.r)) <= 1e-4
        assert np.max(np.abs(np.interp(p.t, o.t, o.theta) - p.theta)) <= 1e-4


def test_ode_oracle_straight_lines(euclid):
    o = trace_ode_oracle(euclid, GeodesicSpec(0.6, theta0=0.4), step=2e-3)
    x, y = o.r * np.cos(o.theta), o.r * np.sin(o.theta)
    # distance from the chord through the tip
    d = x * np.cos(0.4) + y * np.sin(0.4) - 0.6
    assert np.max(np.abs(d)) <= 1e-8


def test_ode_oracle_step_too_large(linear):
    from herglotz import StepTooLarge

    with pytest.raises(StepTooLarge):
        trace_ode_oracle(linear, GeodesicSpec(0.3), step=0.2, drift_tol=1e-12)


def test_broken_rays_close(euclid):
    tri = broken_ray(euclid, BrokenRaySpec(GeodesicSpec(0.5), 3), 201)
    assert abs(tri.x[-1] - tri.x[0]) + abs(tri.y[-1] - tri.y[0]) <= 1e-8
    sq = broken_ray(euclid, BrokenRaySpec(GeodesicSpec(np.cos(np.pi / 4)), 4), 201)
    assert abs(sq.x[-1] - sq.x[0]) + abs(sq.y[-1] - sq.y[0]) <= 1e-8
    one = broken_ray(euclid, BrokenRaySpec(GeodesicSpec(0.3), 1), 101)
    ref = trace_geodesic(euclid, GeodesicSpec(0.3), 101)
    assert np.array_equal(one.r, ref.r) and np.array_equal(one.theta, ref.theta)


def test_is_periodic(euclid):
    assert is_periodic(euclid, 0.5) == (1, 3)
    assert is_periodic(euclid, np.cos(np.pi / 4)) == (1, 4)
    assert is_periodic(euclid, 0.3) is None
    # eight printed digits put alpha 1.7e-9 away from pi/4, outside tol=1e-9
    assert is_periodic(euclid, 0.70710678) is None
    assert is_periodic(euclid, 0.70710678, tol=1e-8) == (1, 4)


def test_find_periodic_radii(euclid):
    found = find_periodic_radii(euclid, 4)
    rs = [r for r, _, _ in found]
    assert any(abs(r - 0.5) < 1e-8 for r in rs)
    assert any(abs(r - np.cos(np.pi / 4)) < 1e-8 for r in rs)
    found6 = find_periodic_radii(euclid, 6)
    amax = np.arccos(euclid.R) / np.pi
    expect = {(p, q) for q in range(1, 7) for p in range(1, q + 1)
              if np.gcd(p, q) == 1 and 0 < p / q < amax}
    assert len(found6) == len(expect)
    for r, p, q in found6:
        assert abs(opening_angle(euclid, r) / 2 - np.pi * p / q) <= 1e-9


def test_periodic_density(euclid):
    rs = np.array([r for r, _, _ in find_periodic_radii(euclid, 60)])
    rs = rs[(rs >= euclid.R + 0.05) & (rs <= 0.95)]
    assert np.max(np.diff(np.concatenate([[euclid.R + 0.05], rs, [0.95]]))) < 0.02


def test_periodic_broken_ray_closes(linear):
    for r, p, q in find_periodic_radii(linear, 5)[:4]:
        br = broken_ray(linear, BrokenRaySpec(GeodesicSpec(r), q), 401)
        assert np.hypot(br.x[-1] - br.x[0], br.y[-1] - br.y[0]) <= 1e-6


def test_alpha_prime_diagnostic(euclid):
    assert alpha_prime_zeros(euclid, 500) == []


@settings(max_examples=20, deadline=None)
@given(st.floats(0.7, 1.0), st.floats(-0.3, 0.3), st.floats(0.25, 0.95))
def test_quadrature_vs_ode_property(c0, c1, r0):
    assume(abs(r0 - 0.6) > 1e-6)
    w = WaveSpeed(0.2, [(0.2, 0.6, (c0 + 0.15, c1)), (0.6, 1.0, (c0, c1))])
    o = trace_ode_oracle(w, GeodesicSpec(r0), step=2e-3)
    assert geodesic_length(w, r0) == pytest.approx(o.total_length, rel=1e-4)
    assert opening_angle(w, r0) == pytest.approx(o.theta[-1] - o.theta[0], rel=1e-4)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.21, 0.98), st.floats(0.21, 0.98))
def test_monotone_tip_map(a, b):
    w = WaveSpeed(0.2, [(0.2, 1.0, (2.0, -1.0))])
    if abs(a - b) > 1e-9:
        assert (w.rho(a) < w.rho(b)) == (a < b)
