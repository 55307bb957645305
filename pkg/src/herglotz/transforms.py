"""Mode-wise ray transforms on the annulus and their layer-stripping inversion.

A field f(r, theta) = sum_k a_k(r) e^{ik theta} integrates along the geodesic
with tip (r0, theta0) to sum_k e^{ik theta0} A_k a_k(r0), where

    A_k a(x) = 2 int_x^1 a(r) cos(k w(r; x)) H(r; x) dr

and w(r; x) is the angle swept from the tip.  All radial integrals run in
t with rho(r) = rho(x) + t^2 on the shared ray quadrature.  In the turning
parameter y = rho(r) the transform becomes an Abel operator with exponent 1/2
and kernel

    K(x, y) = cos(k w) * 2 y / (c rho' sqrt(y + x)) * cosh(attenuation),

which is what the inversion hands to the Neumann solver, one segment of the
wave speed at a time from the outside in.
"""
import csv
from dataclasses import dataclass, field
from fractions import Fraction
import io
import warnings

import numpy as np
from numpy.polynomial import legendre as leg
from scipy.integrate import simpson

from . import abel
from ._errors import (
    AliasRisk,
    DomainMismatch,
    JumpTangency,
    NotPeriodic,
    OutOfDomain,
)
from .geodesics import RayQuadrature, geodesic_length, is_periodic, opening_angle
from .grid import GridFunction


# ---------------------------------------------------------------------------
# data carriers
# ---------------------------------------------------------------------------

def _as_fn(a):
    if callable(a):
        return a
    v = complex(a) if np.iscomplexobj(a) else float(a)
    return lambda r: np.full(np.shape(r), v)


class FourierField:
    """Angular Fourier modes a_k(r) of a field on the annulus R <= r <= 1."""

    def __init__(self, modes, R):
        self.modes = {int(k): (a if isinstance(a, GridFunction) else a) for k, a in modes.items()}
        self.R = float(R)

    @property
    def kmax(self):
        return max((abs(k) for k in self.modes), default=0)

    def mode(self, k):
        return self.modes.get(int(k))

    def __call__(self, r, theta):
        return self.synthesize(r, theta)

    def synthesize(self, r, theta):
        """Field values on the tensor grid r x theta, shape (len(r), len(theta))."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        out = np.zeros((len(r), len(theta)), dtype=complex)
        for k, a in self.modes.items():
            out += np.asarray(_as_fn(a)(r))[:, None] * np.exp(1j * k * theta)[None, :]
        return out

    def is_real(self, tol=1e-12):
        for k, a in self.modes.items():
            b = self.modes.get(-k)
            if b is None:
                return False
            va = np.asarray(a.values if isinstance(a, GridFunction) else a(np.linspace(self.R, 1, 64)))
            vb = np.asarray(b.values if isinstance(b, GridFunction) else b(np.linspace(self.R, 1, 64)))
            if np.max(np.abs(va - np.conj(vb)), initial=0.0) > tol:
                return False
        return True

    def l2_norm(self, r=None):
        """sqrt(2 pi sum_k int |a_k|^2 r dr), Simpson on r (default: the first mode's grid)."""
        if r is None:
            first = next(iter(self.modes.values()))
            r = first.grid if isinstance(first, GridFunction) else np.linspace(self.R, 1, 1001)
        r = np.asarray(r, dtype=float)
        tot = 0.0
        for a in self.modes.values():
            v = np.abs(np.asarray(_as_fn(a)(r))) ** 2
            tot += simpson(v * r, x=r)
        return float(np.sqrt(2 * np.pi * tot))

    def rotate(self, phi):
        """Field rotated by phi: a_k -> a_k e^{-ik phi}."""
        return FourierField({k: a.map(lambda v, k=k: v * np.exp(-1j * k * phi))
                             for k, a in self.modes.items()}, self.R)

    def to_csv(self, path=None, header_comment=None):
        buf = io.StringIO()
        if header_comment:
            buf.write(f"# {header_comment}\n")
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["k", "r", "re", "im"])
        for k in sorted(self.modes):
            a = self.modes[k]
            vals = np.asarray(a.values, dtype=complex)
            for r, v in zip(a.grid, vals):
                wr.writerow([k, repr(float(r)), repr(float(v.real)), repr(float(v.imag))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path_or_text, R=None):
        text = _read_text(path_or_text)
        rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
        body = np.array(rows[1:], dtype=float)
        modes = {}
        for k in np.unique(body[:, 0]).astype(int):
            b = body[body[:, 0] == k]
            modes[int(k)] = GridFunction(b[:, 1], b[:, 2] + 1j * b[:, 3])
        if R is None:
            R = min(m.lo for m in modes.values())
        return cls(modes, R)


def _read_text(path_or_text):
    s = str(path_or_text)
    if "\n" in s:
        return s
    with open(s) as fh:
        return fh.read()


@dataclass
class AttenuationProfile:
    """Radial attenuation lambda(r) with a declared Lipschitz bound."""

    lam: object
    lipschitz: float = None

    def __post_init__(self):
        if isinstance(self.lam, GridFunction):
            r, v = self.lam.grid, self.lam.values
        else:
            r = np.linspace(0.0, 1.0, 2001)
            v = np.asarray(_as_fn(self.lam)(r))
        q = float(np.max(np.abs(np.diff(v)) / np.diff(r), initial=0.0))
        if self.lipschitz is None:
            self.lipschitz = q
        elif q > self.lipschitz + 1e-9:
            raise OutOfDomain(f"sampled difference quotient {q:.6g} exceeds the bound {self.lipschitz:g}")

    def __call__(self, r):
        return np.asarray(_as_fn(self.lam)(r))

    @classmethod
    def constant(cls, value):
        return cls(float(value), 0.0)


@dataclass
class Sinogram:
    """Mode-k data on a tip grid uniform in rho; masked where rho is in a jump gap."""

    k: int
    p: np.ndarray
    r0: np.ndarray
    values: np.ndarray
    mask: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def valid(self):
        return ~self.mask

    def to_csv(self, path=None, header_comment=None):
        buf = io.StringIO()
        if header_comment:
            buf.write(f"# {header_comment}\n")
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["k", "r0", "re", "im"])
        for r, v in zip(self.r0[self.valid], np.asarray(self.values, dtype=complex)[self.valid]):
            wr.writerow([self.k, repr(float(r)), repr(float(v.real)), repr(float(v.imag))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def sinograms_to_csv(sinos, path=None, header_comment=None):
    parts = [s.to_csv(header_comment=header_comment if i == 0 else None) for i, s in enumerate(sinos)]
    # keep one header line
    lines = parts[0].splitlines(keepends=True)
    for p in parts[1:]:
        lines += p.splitlines(keepends=True)[1:]
    text = "".join(lines)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def sinograms_from_csv(w, path_or_text):
    """Per-mode Sinograms from (k, r0, re, im) rows; tips are re-derived from w."""
    text = _read_text(path_or_text)
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
    body = np.array(rows[1:], dtype=float)
    out = {}
    for k in np.unique(body[:, 0]).astype(int):
        b = body[body[:, 0] == k]
        o = np.argsort(b[:, 1])
        r0 = b[o, 1]
        out[int(k)] = Sinogram(int(k), w.tip_rho(r0), r0, b[o, 2] + 1j * b[o, 3],
                               np.zeros(len(r0), dtype=bool))
    return out


# ---------------------------------------------------------------------------
# Fourier decomposition
# ---------------------------------------------------------------------------

def fourier_decompose(samples, r, K_max, R=None):
    """Modes |k| <= K_max of samples f(r_i, theta_j), theta_j = 2 pi j / N.

    `samples` is an (len(r), N) array or a callable f(r, theta) on the tensor
    grid, in which case N = 4 K_max + 4.
    """
    r = np.asarray(r, dtype=float)
    if callable(samples):
        N = 4 * K_max + 4
        th = 2 * np.pi * np.arange(N) / N
        samples = samples(r[:, None], th[None, :])
    samples = np.asarray(samples)
    N = samples.shape[1]
    if N < 4 * K_max:
        raise DomainMismatch(f"need at least {4 * K_max} angles for K_max={K_max}, got {N}")
    th = 2 * np.pi * np.arange(N) / N
    modes = {}
    energy = {}
    for k in range(-K_max, K_max + 1):
        ak = (samples * np.exp(-1j * k * th)[None, :]).mean(axis=1)
        modes[k] = GridFunction(r, ak)
        energy[k] = float(np.sum(np.abs(ak) ** 2))
    tot = sum(energy.values())
    edge = energy[K_max] + (energy[-K_max] if K_max else 0.0)
    if K_max and tot > 0 and edge > 0.01 * tot:
        warnings.warn(f"{edge / tot:.1%} of the energy sits at |k| = K_max", AliasRisk)
    return FourierField(modes, r[0] if R is None else R)


def field_l2_norm(samples, r):
    """sqrt(int int |f|^2 r dr dtheta) from samples on r x uniform theta."""
    samples = np.asarray(samples)
    ang = 2 * np.pi * np.mean(np.abs(samples) ** 2, axis=1)
    return float(np.sqrt(simpson(ang * r, x=r)))


# ---------------------------------------------------------------------------
# forward transforms
# ---------------------------------------------------------------------------

def tip_grid(w, n=512):
    """Tip parameters uniform in rho on [rho(R+), rho(1)], with radii and gap mask."""
    p = np.linspace(w.rho_lo[0], w.rho_hi[-1], n)
    mask = w.in_gap(p)
    r0 = np.full(n, np.nan)
    r0[~mask] = _tip_radius(w, p[~mask])
    return p, r0, mask


def _tip_radius(w, p):
    p = np.asarray(p, dtype=float)
    out = np.empty_like(p)
    bottom = p <= w.rho_lo[0]
    out[bottom] = w.R
    if np.any(~bottom):
        out[~bottom] = w.rho_inverse(p[~bottom])
    return out


class _Rays:
    """Ray quadrature plus the k-independent factors shared by every mode."""

    def __init__(self, w, p0, lam=None):
        self.q = q = RayQuadrature(w, p0)
        self.omega = q.cumulative(q.om)
        if lam is None:
            self.Lam = 1.0
            self.E = np.ones(len(p0))
        else:
            d = q.eval_on_segments(lam) * q.h
            self.Lam = np.cosh(q.cumulative(d))
            self.E = np.exp(q.total(d))

    def apply(self, k, a, segments=None):
        q = self.q
        av = q.eval_on_segments(_as_fn(a))
        dens = av * np.cos(k * self.omega) * self.Lam * q.h
        if segments is not None:
            dens = np.where(np.isin(q.seg, segments), dens, 0.0)
        return 2 * q.total(dens)


def _tips_checked(w, r0):
    w.require_herglotz()
    r0 = np.atleast_1d(np.asarray(r0, dtype=float))
    return r0, w.tip_rho(r0)


def _default_tips(w, a):
    if isinstance(a, GridFunction):
        r0 = a.grid[(a.grid >= w.R) & (a.grid <= 1.0)]
    else:
        r0 = np.linspace(w.R, 1.0, 201)
    jb = [w.breaks[j] for j in w.jump_breaks]
    return r0[~np.isin(r0, jb)]


def mode_forward(w, k, a, r0=None):
    """A_k a on tip radii r0 (default: the grid of a without jump breakpoints)."""
    return mode_forward_attenuated(w, None, k, a, r0)


def mode_forward_attenuated(w, lam, k, a, r0=None):
    """A_k^lam a(x) = 2 int_x^1 a Lambda T_k H dr on tip radii r0; lam=None means none."""
    if r0 is None:
        r0 = _default_tips(w, a)
    scalar = np.ndim(r0) == 0
    r0, p0 = _tips_checked(w, r0)
    vals = _Rays(w, p0, lam).apply(k, a)
    if scalar:
        return vals[0]
    return GridFunction(r0, vals) if len(r0) > 1 else vals


def attenuation_Lambda(w, lam, r, r0):
    """cosh(int_{r0}^r lam H du)."""
    r, r0 = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(r0, dtype=float))
    if np.any(r < r0):
        raise OutOfDomain("need r >= r0")
    p0 = w.tip_rho(r0.ravel())
    q = RayQuadrature(w, p0, p_top=w.rho(r.ravel()))
    out = np.cosh(q.total(q.eval_on_segments(lam) * q.h)).reshape(r.shape)
    return out if out.ndim else float(out)


def attenuation_E(w, lam, r0):
    """exp(int_{r0}^1 lam H ds)."""
    scalar = np.ndim(r0) == 0
    _, p0 = _tips_checked(w, r0)
    out = _Rays(w, p0, lam).E
    return float(out[0]) if scalar else out


def xray_forward(w, field_, spec, lam=None):
    """Integral of the field along the geodesic of spec.

    Without attenuation this is sum_k e^{ik theta0} A_k a_k(r0).  With attenuation
    it is the sum over both orientations, 2 E(r0) sum_k e^{ik theta0} A_k^lam a_k(r0).
    """
    r0, p0 = _tips_checked(w, spec.r0)
    rays = _Rays(w, p0, lam)
    tot = 0.0 + 0.0j
    for k, a in field_.modes.items():
        tot += np.exp(1j * k * spec.theta0) * rays.apply(k, a)[0]
    if lam is not None:
        tot *= 2 * rays.E[0]
    return complex(tot)


def mode_sinogram(w, k, a, n=512, lam=None):
    """Sinogram of one mode on the uniform-rho tip grid (2 E A_k^lam a when attenuated)."""
    w.require_herglotz()
    p, r0, mask = tip_grid(w, n)
    vals = np.zeros(n, dtype=complex)
    rays = _Rays(w, p[~mask], lam)
    v = rays.apply(k, a)
    if lam is not None:
        v = v * 2 * rays.E
    vals[~mask] = v
    return Sinogram(int(k), p, r0, vals, mask, {"attenuated": lam is not None})


def sinogram(w, field_, n=512, lam=None):
    """Per-mode sinograms of a FourierField, keyed by k."""
    w.require_herglotz()
    p, r0, mask = tip_grid(w, n)
    rays = _Rays(w, p[~mask], lam)
    out = {}
    for k, a in sorted(field_.modes.items()):
        vals = np.zeros(n, dtype=complex)
        v = rays.apply(k, a)
        vals[~mask] = v * 2 * rays.E if lam is not None else v
        out[k] = Sinogram(k, p, r0, vals, mask.copy(), {"attenuated": lam is not None})
    return out


# ---------------------------------------------------------------------------
# inversion
# ---------------------------------------------------------------------------

class _LayerKernel:
    """k-independent pieces (H~, swept angle, Lambda) on one segment, memoised by input."""

    def __init__(self, w, j, lam=None, n_t=16):
        self.w, self.j, self.lam = w, j, lam
        self.t, self.wt = leg.leggauss(n_t)
        self._cache = {}

    def pieces(self, x, y):
        key = (x.shape, hash(x.tobytes()), hash(y.tobytes()))
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        w, j = self.w, self.j
        # diagonal factor 2 y / (c rho' sqrt(y + x)) at r = rho_j^-1(y)
        ry = w.rho_seg_inverse(j, y)
        H = 2 * y / (w.c_seg(j, ry) * w.drho_seg(j, ry) * np.sqrt(y + x))
        # swept angle and attenuation from tip x to y by Gauss-Legendre in t
        T = np.sqrt(np.maximum(y - x, 0.0))
        tt = 0.5 * T[..., None] * (1 + self.t)
        p = x[..., None] + tt**2
        s = w.rho_seg_inverse(j, p)
        dr = w.drho_seg(j, s)
        sq = np.sqrt(p + x[..., None])
        om = (2 * x[..., None] / (s * dr * sq)) @ self.wt * 0.5 * T
        if self.lam is None:
            Lam = 1.0
        else:
            hh = 2 * p / (w.c_seg(j, s) * dr * sq)
            Lam = np.cosh((self.lam(s) * hh) @ self.wt * 0.5 * T)
        out = (H * Lam, om)
        if len(self._cache) > 8:
            self._cache.clear()
        self._cache[key] = out
        return out

    def kernel(self, k, lo, hi):
        def K(x, y):
            HL, om = self.pieces(np.ascontiguousarray(x, dtype=float),
                                 np.ascontiguousarray(y, dtype=float))
            return np.cos(k * om) * HL
        ks = abel.KernelSpec(0.5, K, lo=lo, hi=hi)
        return ks


def xray_invert_modes(w, sinos, lam=None, tol=1e-10, max_iter=200):
    """Recover a_k for every mode by layer stripping.

    `sinos` maps k to Sinogram (or is a list of them).  Attenuated data, flagged
    by lam, are first divided by 2 E(r0).  Segments are handled from the
    outermost inwards; on each, the contributions of the already recovered outer
    segments are subtracted and the rest is an Abel equation in y = rho(r) solved
    by the Neumann layer iteration.
    """
    w.require_herglotz()
    if not isinstance(sinos, dict):
        sinos = {s.k: s for s in sinos}
    ks = sorted(sinos)
    first = sinos[ks[0]]
    valid = first.valid & np.isfinite(first.p)
    p_all = first.p[valid]
    data = {}
    for k in ks:
        s = sinos[k]
        if s.p.shape != first.p.shape or np.any(s.valid != first.valid):
            raise DomainMismatch("all modes must share one tip grid")
        data[k] = np.asarray(s.values, dtype=complex)[valid]
    if lam is not None:
        E = _Rays(w, p_all, lam).E
        data = {k: v / (2 * E) for k, v in data.items()}
    rec = {k: {} for k in ks}  # per segment GridFunction in y = rho
    meta = {k: [] for k in ks}
    for j in range(w.nseg - 1, -1, -1):
        lo, hi = w.rho_lo[j], w.rho_hi[j]
        sel = (p_all <= hi) & ((p_all > lo) if j > 0 else (p_all >= lo))
        if not np.any(sel):
            continue
        y = p_all[sel]
        hspace = np.diff(y).mean() if len(y) > 1 else hi - lo
        keep = y < hi - 0.25 * hspace
        y = y[keep]
        idx = np.nonzero(sel)[0][keep]
        y_full = np.append(y, hi)
        upper = list(range(j + 1, w.nseg))
        rays = _Rays(w, y, lam) if upper else None
        lk = _LayerKernel(w, j, lam)
        for k in ks:
            g = data[k][idx].copy()
            if upper:
                g = g - rays.apply(k, _piecewise(w, rec[k]), segments=upper)
            gk = GridFunction(y_full, np.append(g, 0.0))
            f = abel.invert_neumann(lk.kernel(k, y_full[0], hi), gk, tol=tol, max_iter=max_iter)
            rec[k][j] = f
            meta[k].append({"segment": j, **f.meta})
    modes = {}
    for k in ks:
        rs, vs = [], []
        for j in sorted(rec[k]):
            f = rec[k][j]
            rs.append(w.rho_seg_inverse(j, f.grid))
            vs.append(f.values)
        r = np.concatenate(rs)
        v = np.concatenate(vs)
        o = np.argsort(r, kind="stable")
        r, v = r[o], v[o]
        ok = np.concatenate([[True], np.diff(r) > 0])
        modes[k] = GridFunction(r[ok], v[ok], {"layers": meta[k]})
    return FourierField(modes, w.R)


def _piecewise(w, rec):
    """Callable a(s) assembled from per-segment recoveries in y = rho."""
    def a(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros(s.shape, dtype=complex)
        j = np.clip(np.searchsorted(w.breaks, s, side="left") - 1, 0, w.nseg - 1)
        for jj, f in rec.items():
            m = j == jj
            if np.any(m):
                out[m] = f(w.rho_seg(jj, s[m]))
        return out
    return a


def a0_invert(w, g, n_quad=64):
    """Invert A_0 on a wave speed without jumps.

    f(r) = -(c / (pi rho)) d/dx F(x) at x = r with
    F(x) = int_x^1 rho rho' (rho(z)^2 - rho(x)^2)^(-1/2) g(z) dz, computed in t
    with rho(z) = rho(x) + t^2 after factoring sqrt(rho(1) - rho(z)) out of g.
    Profiles with jumps go through the layer-stripping inversion at k = 0.
    """
    w.require_herglotz()
    if w.jump_breaks:
        p = w.tip_rho(g.grid)
        s = Sinogram(0, p, g.grid, np.asarray(g.values, dtype=complex), w.in_gap(p))
        out = xray_invert_modes(w, {0: s}).modes[0]
        return out.map(np.real) if np.isrealobj(g.values) else out
    top = w.rho_hi[-1]
    r = g.grid
    pr = w.tip_rho(r)
    inside = pr < top - 1e-14
    gt_vals = g.values[inside] / np.sqrt(top - pr[inside])
    gt_top = abel._extrapolate(r[inside][-5:], gt_vals[-5:], 1.0)
    gt = GridFunction(np.append(r[inside], 1.0), np.append(gt_vals, gt_top))
    # Gauss-Chebyshev (second kind) nodes on [-1, 1]: weight sqrt(1 - u^2)
    n = n_quad
    u = np.cos(np.arange(1, n + 1) * np.pi / (n + 1))
    wu = np.pi / (n + 1) * np.sin(np.arange(1, n + 1) * np.pi / (n + 1)) ** 2

    def F(x):
        x = np.asarray(x, dtype=float)
        p0 = w.tip_rho(np.clip(x, w.R, 1.0))
        T2 = top - p0
        p = p0[:, None] + T2[:, None] * u[None, :] ** 2
        z = _tip_radius(w, np.clip(p, w.rho_lo[0], top))
        val = 2 * p / np.sqrt(p + p0[:, None]) * gt(z)
        return 0.5 * T2 * (val @ wu)

    dF = abel._stencil_derivative(F, r, w.R, 1.0)
    f = -w.c(np.maximum(r, np.nextafter(w.R, 1))) / (np.pi * pr) * dF
    return GridFunction(r, f)


def brt_circle_average(w, a0_data):
    """a_0 from normalized broken-ray averages A_0 a_0 / A_0 1 on a radius grid."""
    if isinstance(a0_data, GridFunction):
        r, v = a0_data.grid, a0_data.values
    else:
        r, v = map(np.asarray, zip(*a0_data))
    r = np.asarray(r, dtype=float)
    L = np.where(r < 1.0, geodesic_length(w, np.minimum(r, 1.0)), 0.0)
    return a0_invert(w, GridFunction(r, np.asarray(v) * L))


# ---------------------------------------------------------------------------
# periodic broken rays and planar averages
# ---------------------------------------------------------------------------

def periodic_index(w, r0, q_max=50, tol=1e-9):
    """(m, p, q): smallest m with m alpha(r0) in pi N, from alpha = pi p / q."""
    pq = is_periodic(w, r0, q_max, tol)
    if pq is None:
        raise NotPeriodic(f"no p/q with q <= {q_max} matches alpha({r0})")
    p, q = pq
    return q, p, q


def pbrt_forward(w, field_, r0, theta0=0.0, q_max=50, tol=1e-9):
    """Integral over the closed broken ray: sum_k m [m | k] e^{ik theta0} A_k a_k(r0)."""
    m, _, _ = periodic_index(w, r0, q_max, tol)
    _, p0 = _tips_checked(w, r0)
    rays = _Rays(w, p0)
    tot = 0.0j
    for k, a in field_.modes.items():
        if k % m == 0:
            tot += m * np.exp(1j * k * theta0) * rays.apply(k, a)[0]
    return complex(tot)


def pbrt_direct(w, field_, r0, theta0=0.0, q_max=50, tol=1e-9):
    """The same integral as an explicit sum over the m reflected segments."""
    m, p, q = periodic_index(w, r0, q_max, tol)
    alpha = np.pi * p / q
    _, p0 = _tips_checked(w, r0)
    rays = _Rays(w, p0)
    tot = 0.0j
    for k, a in field_.modes.items():
        rot = np.exp(1j * k * (theta0 + 2 * np.arange(m) * alpha)).sum()
        tot += rot * rays.apply(k, a)[0]
    return complex(tot)


def broken_ray_average(w, field_, r0, theta0=0.0, q_max=50):
    """Mean of the field over the closed broken ray through the tip (r0, theta0)."""
    m, _, _ = periodic_index(w, r0, q_max)
    return pbrt_forward(w, field_, r0, theta0, q_max) / (m * geodesic_length(w, r0))


def planar_average(w, field_, r, normal=None, n_circle=256):
    """Average of geodesic integrals over geodesics of tip radius r in a plane.

    A FourierField (two dimensions) gives A_0 a_0(r).  A SphericalField with radial
    coefficients gives A_0 of the average over the great circle orthogonal to
    `normal`.
    """
    from .funk import SphericalField

    if isinstance(field_, FourierField):
        a0 = field_.mode(0)
        if a0 is None:
            return 0.0
        return mode_forward(w, 0, a0, r)
    if not isinstance(field_, SphericalField):
        raise DomainMismatch("expected a FourierField or a SphericalField")
    if normal is None:
        raise DomainMismatch("a plane normal is required for a spherical field")
    circ = field_.circle_profile(normal, n_circle)
    return mode_forward(w, 0, circ, r)
