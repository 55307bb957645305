import warnings

import numpy as np
import pytest
from scipy.integrate import simpson

from herglotz import (
    AliasRisk,
    AttenuationProfile,
    BrokenRaySpec,
    DomainMismatch,
    FourierField,
    GeodesicSpec,
    GridFunction,
    JumpTangency,
    NotPeriodic,
    OutOfDomain,
    a0_invert,
    attenuation_E,
    attenuation_Lambda,
    broken_ray,
    broken_ray_average,
    brt_circle_average,
    fourier_decompose,
    geodesic_length,
    mode_forward,
    mode_forward_attenuated,
    pbrt_direct,
    pbrt_forward,
    planar_average,
    sinogram,
    trace_geodesic,
    xray_forward,
    xray_invert_modes,
)
from herglotz.funk import random_field
from herglotz.transforms import field_l2_norm, sinograms_from_csv, sinograms_to_csv

RR = np.linspace(0.2, 1.0, 801)
ONE = GridFunction(RR, np.ones_like(RR))


def poly_field(rng, kmax, deg=2, R=0.2):
    modes = {}
    for k in range(-kmax, kmax + 1):
        c = rng.normal(size=deg + 1) + 1j * rng.normal(size=deg + 1)
        modes[k] = np.polynomial.Polynomial(c)
    return FourierField(modes, R)


def path_integral(w, field, r0, theta0, n=20001, lam=None, orientation=1):
    p = trace_geodesic(w, GeodesicSpec(r0, theta0, orientation), n)
    vals = field.synthesize(p.r, [0.0])[:, 0] * 0
    for k, a in field.modes.items():
        vals = vals + a(p.r) * np.exp(1j * k * p.theta)
    if lam is None:
        return simpson(vals, x=p.t)
    lv = lam(p.r)
    cum = np.concatenate([[0], np.cumsum(0.5 * (lv[1:] + lv[:-1]) * np.diff(p.t))])
    return simpson(vals * np.exp(cum), x=p.t)


def rel_l2(rec, exact, R=0.2):
    num = den = 0.0
    for k, f in exact.items():
        a = rec.modes[k]
        num += simpson(np.abs(a.values - f(a.grid)) ** 2 * a.grid, x=a.grid)
        den += simpson(np.abs(f(a.grid)) ** 2 * a.grid, x=a.grid)
    return np.sqrt(num / den)


# --- Fourier decomposition ------------------------------------------------

def test_decompose_sin():
    r = np.linspace(0.2, 1, 11)
    F = fourier_decompose(lambda r, t: np.sin(t) + 0 * r, r, 4)
    assert np.allclose(F.modes[1].values, 1 / 2j, atol=1e-12)
    assert np.allclose(F.modes[-1].values, -1 / 2j, atol=1e-12)
    for k in (0, 2, -2, 3, 4):
        assert np.max(np.abs(F.modes[k].values)) <= 1e-12
    assert F.is_real()


def test_decompose_radial():
    r = np.linspace(0.2, 1, 11)
    F = fourier_decompose(lambda r, t: r**2 + 0 * t, r, 3)
    assert np.allclose(F.modes[0].values, r**2, atol=1e-14)
    assert max(np.max(np.abs(F.modes[k].values)) for k in F.modes if k) <= 1e-14


def test_parseval(rng):
    r = np.linspace(0.2, 1, 201)
    th = 2 * np.pi * np.arange(40) / 40
    f = poly_field(rng, 4, deg=3)
    S = f.synthesize(r, th)
    F = fourier_decompose(S, r, 8)
    assert abs(F.l2_norm() - field_l2_norm(S, r)) <= 1e-8
    back = F.synthesize(r, th)
    assert abs(field_l2_norm(back, r) - field_l2_norm(S, r)) <= 1e-8


def test_alias_warning_and_grid_check():
    r = np.linspace(0.2, 1, 5)
    th = 2 * np.pi * np.arange(16) / 16
    S = np.cos(4 * th)[None, :] * np.ones((5, 1))
    with pytest.warns(AliasRisk):
        fourier_decompose(S, r, 4)
    with pytest.raises(DomainMismatch):
        fourier_decompose(S, r, 5)


def test_fourier_field_csv_roundtrip(rng):
    r = np.linspace(0.2, 1, 9)
    F = FourierField({k: GridFunction(r, rng.normal(size=9) + 1j * rng.normal(size=9)) for k in (-1, 0, 2)}, 0.2)
    G = FourierField.from_csv(F.to_csv(header_comment="x"))
    for k in F.modes:
        assert np.array_equal(F.modes[k].values, G.modes[k].values)


# --- forward transforms ---------------------------------------------------

def test_mode_forward_examples(euclid, jump05):
    assert mode_forward(euclid, 0, ONE, 0.6) == pytest.approx(1.6, abs=1e-12)
    for w in (euclid, jump05):
        r0 = np.array([0.25, 0.4, 0.7, 0.9])
        assert np.allclose(mode_forward(w, 0, ONE, r0).values, geodesic_length(w, r0), atol=1e-13)
    ref = path_integral(euclid, FourierField({2: ONE}, 0.2), 0.5, 0.0)
    assert mode_forward(euclid, 2, ONE, 0.5) == pytest.approx(ref, abs=1e-5)


def test_mode_forward_default_grid_skips_jump(jump05):
    g = mode_forward(jump05, 1, ONE)
    assert 0.5 not in g.grid
    with pytest.raises(JumpTangency):
        mode_forward(jump05, 1, ONE, 0.5)


def test_attenuation_examples(euclid):
    zero = AttenuationProfile.constant(0.0)
    assert attenuation_E(euclid, zero, 0.6) == 1.0
    assert attenuation_Lambda(euclid, zero, 0.9, 0.6) == 1.0
    one = AttenuationProfile.constant(1.0)
    assert attenuation_E(euclid, one, 0.6) == pytest.approx(np.exp(0.8), rel=1e-12)
    assert attenuation_Lambda(euclid, one, 0.6 + 1e-9, 0.6) == pytest.approx(1.0, abs=1e-8)
    # Euclidean: int_{r0}^r H = sqrt(r^2 - r0^2)
    assert attenuation_Lambda(euclid, one, 0.9, 0.6) == pytest.approx(np.cosh(np.sqrt(0.81 - 0.36)), rel=1e-12)


def test_attenuation_profile_lipschitz_check():
    AttenuationProfile(lambda r: r / 2, 0.5)
    with pytest.raises(OutOfDomain):
        AttenuationProfile(lambda r: 3 * r, 1.0)
    assert AttenuationProfile(lambda r: np.sin(2 * r)).lipschitz == pytest.approx(2.0, rel=1e-3)


def test_attenuated_mode_forward(euclid, jump05):
    r0 = np.linspace(0.25, 0.95, 8)
    zero = AttenuationProfile.constant(0.0)
    for w in (euclid, jump05):
        for k in (0, 1, 3):
            a = mode_forward_attenuated(w, zero, k, ONE, r0).values
            b = mode_forward(w, k, ONE, r0).values
            assert np.max(np.abs(a - b)) <= 1e-12
    lam = AttenuationProfile.constant(0.7)
    pos = GridFunction(RR, 1 + RR)
    assert np.all(mode_forward_attenuated(euclid, lam, 0, pos, r0).values
                  >= mode_forward(euclid, 0, pos, r0).values)


def test_attenuated_path_oracle(euclid):
    lam = lambda r: r
    F = FourierField({0: ONE}, 0.2)
    Ip = path_integral(euclid, F, 0.5, 0.0, lam=lam)
    Im = path_integral(euclid, F, 0.5, 0.0, lam=lam, orientation=-1)
    E = attenuation_E(euclid, lam, 0.5)
    # growth weights exp(int_{-T}^t lam) on each orientation: I+ + I- = 2 E A^lam
    val = mode_forward_attenuated(euclid, lam, 0, ONE, 0.5)
    assert val == pytest.approx(((Ip + Im) / (2 * E)).real, abs=1e-4)
    total = xray_forward(euclid, F, GeodesicSpec(0.5), lam)
    assert total == pytest.approx(Ip + Im, abs=1e-4)


def test_xray_forward_examples(euclid, rng):
    F = FourierField({0: ONE}, 0.2)
    assert xray_forward(euclid, F, GeodesicSpec(0.5)) == pytest.approx(np.sqrt(3), abs=1e-10)
    f = poly_field(rng, 4)
    for r0, th in ((0.3, 0.2), (0.55, 2.0), (0.8, -1.0)):
        ref = path_integral(euclid, f, r0, th)
        assert abs(xray_forward(euclid, f, GeodesicSpec(r0, th)) - ref) <= 1e-4 * max(1, abs(ref))


def test_odd_field_symmetric_pair(euclid):
    # sin(k theta) integrated over a geodesic with its tip at theta0 = 0 vanishes
    F = FourierField({3: GridFunction(RR, RR / 2j), -3: GridFunction(RR, -RR / 2j)}, 0.2)
    assert abs(xray_forward(euclid, F, GeodesicSpec(0.4, 0.0))) <= 1e-14


def test_mode_factorization(jump05):
    for k in (-2, 0, 3):
        a = GridFunction(RR, np.cos(3 * RR) + 1j * RR)
        F = FourierField({k: a}, 0.2)
        for r0, th in ((0.3, 0.7), (0.8, 2.5)):
            lhs = xray_forward(jump05, F, GeodesicSpec(r0, th))
            rhs = np.exp(1j * k * th) * mode_forward(jump05, k, a, r0)
            assert abs(lhs - rhs) <= 1e-10


def test_rotation_equivariance(euclid, rng):
    r = np.linspace(0.2, 1, 101)
    F = FourierField({k: GridFunction(r, rng.normal(size=101) + 1j * rng.normal(size=101)) for k in range(-3, 4)}, 0.2)
    phi = 0.83
    S = sinogram(euclid, F, 64)
    Sr = sinogram(euclid, F.rotate(phi), 64)
    for k in S:
        assert np.max(np.abs(Sr[k].values - np.exp(-1j * k * phi) * S[k].values)) <= 1e-10
    g = xray_forward(euclid, F.rotate(phi), GeodesicSpec(0.4, 1.1))
    assert abs(g - xray_forward(euclid, F, GeodesicSpec(0.4, 1.1 - phi))) <= 1e-10


def test_sinogram_masks_gap(jump06):
    F = FourierField({0: ONE}, 0.2)
    s = sinogram(jump06, F, 128)[0]
    lo, hi = jump06.gaps[0]
    inside = (s.p >= lo) & (s.p < hi)
    assert np.any(inside) and np.array_equal(s.mask, inside)
    assert np.all(np.isnan(s.r0[s.mask])) and np.all(np.isfinite(s.values[s.valid]))
    text = sinograms_to_csv([s])
    back = sinograms_from_csv(jump06, text)[0]
    assert np.allclose(back.values, s.values[s.valid], atol=0)
    assert len(text.splitlines()) == 1 + s.valid.sum()


# --- inversion ------------------------------------------------------------

def test_roundtrip_euclidean():
    w = WaveSpeed_const()
    f = {2: lambda r: (1 - r) + 0j}
    F = FourierField({2: np.polynomial.Polynomial([1, -1])}, 0.2)
    rec = xray_invert_modes(w, sinogram(w, F, 256))
    assert rel_l2(rec, f) <= 1e-3


def WaveSpeed_const():
    from herglotz import WaveSpeed

    return WaveSpeed.constant(0.2)


def test_roundtrip_jump(jump06, rng):
    F = poly_field(rng, 4)
    rec = xray_invert_modes(jump06, sinogram(jump06, F, 256))
    assert rel_l2(rec, F.modes) <= 1e-2


def test_roundtrip_attenuated(jump06, rng):
    F = poly_field(rng, 2)
    lam = AttenuationProfile(lambda r: r / 2, 0.5)
    rec = xray_invert_modes(jump06, sinogram(jump06, F, 192, lam), lam)
    assert rel_l2(rec, F.modes) <= 1e-2


def test_support_property(euclid):
    a = lambda r: np.where(r <= 0.5, (0.5 - r) ** 2, 0.0)
    F = FourierField({0: a, 1: a}, 0.2)
    S = sinogram(euclid, F, 256)
    for s in S.values():
        far = s.valid & (s.r0 >= 0.55)
        assert np.max(np.abs(s.values[far])) <= 1e-8
    rec = xray_invert_modes(euclid, S)
    for k in (0, 1):
        m = rec.modes[k]
        assert np.max(np.abs(m.values[m.grid >= 0.55])) <= 1e-6


def test_layer_locality(jump06, rng):
    F = poly_field(rng, 1)
    bump = lambda r: np.where(r < 0.6, np.sin(8 * r), 0.0)
    G = FourierField({k: (lambda r, a=a: a(r) + bump(r)) for k, a in F.modes.items()}, 0.2)
    r1 = xray_invert_modes(jump06, sinogram(jump06, F, 128))
    r2 = xray_invert_modes(jump06, sinogram(jump06, G, 128))
    for k in F.modes:
        m = r1.modes[k].grid > 0.6  # the jump point itself belongs to the inner layer
        assert np.max(np.abs(r1.modes[k].values[m] - r2.modes[k].values[m])) <= 1e-8


def test_invert_rejects_mismatched_modes(euclid):
    F = FourierField({0: ONE, 1: ONE}, 0.2)
    S = sinogram(euclid, F, 32)
    S[1] = sinogram(euclid, F, 40)[1]
    with pytest.raises(DomainMismatch):
        xray_invert_modes(euclid, S)


# --- A_0 inversion and circle averages ------------------------------------

def test_a0_invert_euclidean(euclid):
    r = np.linspace(0.2, 1, 401)
    f = a0_invert(euclid, GridFunction(r, 2 * np.sqrt(1 - r**2)))
    m = (r >= 0.25) & (r <= 0.95)
    assert np.max(np.abs(f.values[m] - 1)) <= 1e-5


def test_a0_invert_linear_profile(linear):
    r = np.linspace(0.2, 1, 401)
    g = mode_forward(linear, 0, GridFunction(r, r), r)
    f = a0_invert(linear, g)
    assert np.max(np.abs(f.values - r)) <= 1e-4
    g2 = mode_forward(linear, 0, GridFunction(r, np.cos(2 * r)), r)
    both = a0_invert(linear, GridFunction(r, g.values + g2.values))
    assert np.max(np.abs(both.values - r - np.cos(2 * r))) <= 1e-5


def test_a0_invert_jump_profile(jump06):
    p = np.linspace(jump06.rho_lo[0], jump06.rho_hi[-1], 300)
    p = p[~jump06.in_gap(p)]
    r = jump06.rho_inverse(p[p > jump06.rho_lo[0]])
    g = mode_forward(jump06, 0, GridFunction(RR, 1 + RR), r)
    f = a0_invert(jump06, g)
    assert np.max(np.abs(f.values - 1 - f.grid)) <= 1e-3


def test_brt_circle_average(euclid):
    r = np.linspace(0.2, 0.99, 300)
    assert np.max(np.abs(brt_circle_average(euclid, list(zip(r, np.ones_like(r)))).values - 1)) <= 1e-5
    num = mode_forward(euclid, 0, GridFunction(RR, RR), r).values
    den = mode_forward(euclid, 0, ONE, r).values
    rec = brt_circle_average(euclid, GridFunction(r, num / den))
    m = r <= 0.95
    assert np.max(np.abs(rec.values - r)[m]) <= 1e-4


def test_broken_ray_average_kills_mode_one(euclid):
    F = FourierField({0: ONE, 1: GridFunction(RR, 0.3 * RR + 0j), -1: GridFunction(RR, 0.3 * RR + 0j)}, 0.2)
    for r0 in (0.5, np.cos(np.pi / 4)):
        assert broken_ray_average(euclid, F, r0, 0.4) == pytest.approx(1.0, abs=1e-12)
    # direct sampling along the closed broken ray
    br = broken_ray(euclid, BrokenRaySpec(GeodesicSpec(0.5, 0.4), 3), 3001)
    vals = 1 + 0.6 * br.r * np.cos(br.theta)
    assert simpson(vals, x=br.t) / br.t[-1] == pytest.approx(1.0, abs=1e-6)


# --- periodic broken rays and planar averages -----------------------------

def test_pbrt_divisibility(euclid):
    F2 = FourierField({2: ONE}, 0.2)
    assert abs(pbrt_forward(euclid, F2, 0.5)) <= 1e-12
    assert abs(pbrt_direct(euclid, F2, 0.5)) <= 1e-12
    F3 = FourierField({3: ONE}, 0.2)
    th = 0.3
    ref = 3 * np.exp(3j * th) * mode_forward(euclid, 3, ONE, 0.5)
    assert abs(pbrt_forward(euclid, F3, 0.5, th) - ref) <= 1e-12
    F0 = FourierField({0: GridFunction(RR, RR)}, 0.2)
    for r0, m in ((0.5, 3), (np.cos(np.pi / 4), 4)):
        assert pbrt_forward(euclid, F0, r0) == pytest.approx(m * mode_forward(euclid, 0, F0.modes[0], r0), abs=1e-12)
    with pytest.raises(NotPeriodic):
        pbrt_forward(euclid, F0, 0.3)


def test_pbrt_closed_form_vs_direct(linear, rng):
    from herglotz import find_periodic_radii

    F = FourierField({k: GridFunction(RR, rng.normal() + 1j * rng.normal() + RR) for k in range(-6, 7)}, 0.2)
    for r, p, q in find_periodic_radii(linear, 5):
        for th in (0.0, 1.3):
            assert abs(pbrt_forward(linear, F, r, th) - pbrt_direct(linear, F, r, th)) <= 1e-10


def test_planar_average_2d(euclid, jump05, rng):
    assert planar_average(euclid, FourierField({0: ONE}, 0.2), 0.6) == pytest.approx(1.6, abs=1e-12)
    F = poly_field(rng, 3)
    th = 2 * np.pi * np.arange(256) / 256
    for w in (euclid, jump05):
        avg = np.mean([xray_forward(w, F, GeodesicSpec(0.4, t)) for t in th])
        assert abs(planar_average(w, F, 0.4) - avg) <= 1e-6


def test_planar_average_odd_3d(euclid, rng):
    radii = np.linspace(0.2, 1, 81)
    odd = random_field(5, rng, parity=1, radii=radii)
    for _ in range(20):
        n = rng.normal(size=3)
        n /= np.linalg.norm(n)
        assert abs(planar_average(euclid, odd, rng.uniform(0.25, 0.95), n)) <= 1e-8


def test_planar_average_3d_constant(euclid):
    from herglotz import SphericalField

    radii = np.linspace(0.2, 1, 81)
    c = np.zeros((1, 1, len(radii)), dtype=complex)
    c[0, 0] = np.sqrt(4 * np.pi)  # f = 1
    f = SphericalField(c, radii)
    assert planar_average(euclid, f, 0.6, [0, 0, 1.0]) == pytest.approx(1.6, abs=1e-10)
