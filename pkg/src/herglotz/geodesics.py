"""Geodesics and broken rays of the metric c(|x|)^-2 dx^2 on the annulus R < |x| <= 1.

A geodesic is labelled by its tip (closest point to the origin) at radius r0.
Its turning parameter p0 = rho(r0) = r0 / c(r0) equals the conserved angular
momentum.  Radial integrals along the ray are computed in t with
rho(s) = p0 + t^2, which removes the inverse square-root singularity at the
tip.  With p = rho(s), the arclength and angle densities in t are

    h(t)  = 2 p / (c(s) rho'(s) sqrt(p + p0)),
    om(t) = 2 p0 / (s rho'(s) sqrt(p + p0)),

so that half the length is int h dt and half the opening angle is int om dt.
"""
import csv
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
import io
import math

import numpy as np
from numpy.polynomial import legendre as leg

from ._errors import OutOfDomain, StepTooLarge


@lru_cache(maxsize=None)
def _panel_rule(order):
    """Gauss-Legendre nodes/weights plus the spectral cumulative-integration matrix."""
    x, w = leg.leggauss(order)
    V = leg.legvander(x, order - 1)
    Vinv = np.linalg.inv(V)
    # S[i, j] = int_{-1}^{x_i} l_j, l_j the Lagrange basis on the nodes
    icoef = leg.legint(np.eye(order), lbnd=-1, axis=0)  # (order+1, order)
    S = leg.legvander(x, order) @ icoef @ Vinv
    return x, w, Vinv, S


class RayQuadrature:
    """Panel quadrature along half-geodesics from tips p0 up to p_top (default rho(1)).

    Arrays have shape (M, N): M tips, N = nseg * panels * order nodes ordered from
    the tip outwards.  Nodes of segments the ray does not visit carry zero weight.
    """

    def __init__(self, w, p0, p_top=None, panels=4, order=16):
        self.w = w
        p0 = np.atleast_1d(np.asarray(p0, dtype=float))
        M = len(p0)
        p_top = np.full(M, w.rho_hi[-1]) if p_top is None else np.broadcast_to(
            np.asarray(p_top, dtype=float), (M,)).copy()
        self.p0, self.p_top = p0, p_top
        self.panels, self.order = panels, order
        xi, wi, _, _ = _panel_rule(order)
        nseg = w.nseg
        shape = (M, nseg, panels, order)
        t = np.zeros(shape)
        half = np.zeros((M, nseg, panels))
        s = np.zeros(shape)
        p = np.zeros(shape)
        c = np.ones(shape)
        dr = np.ones(shape)
        valid = np.zeros((M, nseg), dtype=bool)
        seg = np.broadcast_to(np.arange(nseg)[None, :, None, None], shape)
        for j in range(nseg):
            lo = np.maximum(w.rho_lo[j], p0)
            hi = np.minimum(w.rho_hi[j], p_top)
            ok = hi > lo
            valid[:, j] = ok
            tl = np.sqrt(np.maximum(lo - p0, 0.0))
            tu = np.where(ok, np.sqrt(np.maximum(hi - p0, 0.0)), tl)
            e = tl[:, None] + (tu - tl)[:, None] * np.linspace(0.0, 1.0, panels + 1)[None, :]
            hh = 0.5 * (e[:, 1:] - e[:, :-1])
            tt = 0.5 * (e[:, 1:] + e[:, :-1])[..., None] + hh[..., None] * xi
            pp = np.clip(p0[:, None, None] + tt**2, w.rho_lo[j], w.rho_hi[j])
            ss = w.rho_seg_inverse(j, pp)
            t[:, j], half[:, j], p[:, j], s[:, j] = tt, hh, pp, ss
            c[:, j] = w.c_seg(j, ss)
            dr[:, j] = w.drho_seg(j, ss)
        sq = np.sqrt(p + p0[:, None, None, None])
        self._shape = shape
        self.t = t.reshape(M, -1)
        self.p = p.reshape(M, -1)
        self.s = s.reshape(M, -1)
        self.c = c.reshape(M, -1)
        self.drho = dr.reshape(M, -1)
        self.seg = np.ascontiguousarray(seg).reshape(M, -1)
        self.half = half.reshape(M, -1)
        self.wt = (half[..., None] * wi).reshape(M, -1)
        self.valid = np.repeat(valid, panels * order, axis=1)
        self.h = (2 * p / (c * dr * sq)).reshape(M, -1)
        self.om = (2 * p0[:, None, None, None] / (s * dr * sq)).reshape(M, -1)

    def total(self, dens):
        return (self.wt * dens).sum(axis=-1)

    def cumulative(self, dens):
        """int_0^{t_node} dens dt at every node (spectral within panels)."""
        M = len(self.p0)
        _, wi, _, S = _panel_rule(self.order)
        d = np.asarray(dens).reshape(M, -1, self.order)
        hf = self.half.reshape(M, -1)
        local = np.einsum("mpj,ij->mpi", d, S) * hf[..., None]
        tot = (d * wi).sum(axis=-1) * hf
        off = np.concatenate([np.zeros((M, 1)), np.cumsum(tot, axis=1)[:, :-1]], axis=1)
        return (local + off[..., None]).reshape(M, -1)

    def eval_on_segments(self, fn):
        """Evaluate fn(s) at the nodes; fn may be a callable of s only."""
        return np.where(self.valid, fn(np.clip(self.s, self.w.R, 1.0)), 0.0)


def _tips(w, r0):
    w.require_herglotz()
    return w.tip_rho(np.atleast_1d(np.asarray(r0, dtype=float)))


def geodesic_length(w, r0):
    """Total length 2L(r0) of the geodesic with tip radius r0."""
    scalar = np.ndim(r0) == 0
    rays = RayQuadrature(w, _tips(w, r0))
    out = 2 * rays.total(rays.h)
    return float(out[0]) if scalar else out


def opening_angle(w, r0):
    """Angle 2 alpha(r0) between the boundary endpoints (on the universal cover)."""
    scalar = np.ndim(r0) == 0
    rays = RayQuadrature(w, _tips(w, r0))
    out = 2 * rays.total(rays.om)
    return float(out[0]) if scalar else out


def partial_angle(w, r, r0):
    """Angle swept from the tip at r0 out to radius r >= r0."""
    r, r0 = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(r0, dtype=float))
    if np.any(r < r0):
        raise OutOfDomain("need r >= r0")
    p0 = _tips(w, r0.ravel())
    rays = RayQuadrature(w, p0, p_top=w.rho(r.ravel()))
    return rays.total(rays.om).reshape(r.shape)


def weight_H(w, r, z):
    """c(r)^-1 (1 - (z c(r) / (r c(z)))^2)^(-1/2) for R < z < r <= 1."""
    r, z = np.asarray(r, dtype=float), np.asarray(z, dtype=float)
    if np.any(~(z > w.R)) or np.any(~(z < r)) or np.any(r > 1):
        raise OutOfDomain("need R < z < r <= 1")
    cr, cz = w.c(r), w.c(z)
    return 1.0 / cr / np.sqrt(1.0 - (z * cr / (r * cz)) ** 2)


def weight_H_rho(w, r, z):
    """The same weight written with turning parameters: rho_r / c(r) / sqrt(rho_r^2 - rho_z^2)."""
    r, z = np.asarray(r, dtype=float), np.asarray(z, dtype=float)
    if np.any(~(z > w.R)) or np.any(~(z < r)) or np.any(r > 1):
        raise OutOfDomain("need R < z < r <= 1")
    pr, pz = w.rho(r), w.rho(z)
    return pr / w.c(r) / np.sqrt(pr + pz) / np.sqrt(pr - pz)


def chebyshev_T(w, k, r, r0):
    """T_k(r; r0) = cos(k * angle swept from the tip r0 to radius r)."""
    return np.cos(k * partial_angle(w, r, r0))


# ---------------------------------------------------------------------------
# traced paths
# ---------------------------------------------------------------------------

@dataclass
class GeodesicSpec:
    r0: float
    theta0: float = 0.0
    orientation: int = 1


@dataclass
class BrokenRaySpec:
    base: GeodesicSpec
    n_segments: int = 1


@dataclass
class PathPolyline:
    t: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    total_length: float
    speed2: np.ndarray
    ang_mom: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def x(self):
        return self.r * np.cos(self.theta)

    @property
    def y(self):
        return self.r * np.sin(self.theta)

    def to_csv(self, path=None, header_comment=None):
        buf = io.StringIO()
        if header_comment:
            buf.write(f"# {header_comment}\n")
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["t", "r", "theta", "x", "y"])
        for row in zip(self.t, self.r, self.theta, self.x, self.y):
            wr.writerow([f"{v:.15g}" for v in row])
        if path is not None:
            with open(path, "w") as fh:
                fh.write(buf.getvalue())
        return buf.getvalue()


def _panel_coefs(vals, order):
    _, _, Vinv, _ = _panel_rule(order)
    return vals.reshape(-1, order) @ Vinv.T


def trace_geodesic(w, spec, n_samples=1001):
    """Polyline of the geodesic sampled at arclength-uniform points, boundary to boundary.

    The radius comes from inverting the arclength integral panel by panel and the
    angle from the cumulative angle integral; both use the same quadrature as
    geodesic_length and opening_angle.
    """
    p0 = _tips(w, spec.r0)
    rays = RayQuadrature(w, p0)
    order = rays.order
    keep = rays.half[0] > 0
    hc = _panel_coefs(rays.h[0], order)[keep]
    oc = _panel_coefs(rays.om[0], order)[keep]
    half = rays.half[0][keep]
    mid = rays.t[0].reshape(-1, order)[keep].mean(axis=1)  # nodes are symmetric
    segs = rays.seg[0].reshape(-1, order)[keep, 0]
    hint = leg.legint(hc, lbnd=-1, axis=1)
    oint = leg.legint(oc, lbnd=-1, axis=1)
    tot_h = hint.sum(axis=1) * half  # P_n(1) = 1
    tot_o = oint.sum(axis=1) * half
    end_h = np.cumsum(tot_h)
    off_h = end_h - tot_h
    off_o = np.cumsum(tot_o) - tot_o
    L = end_h[-1]

    def ev(x_, coefs):
        return (leg.legvander(x_, coefs.shape[1] - 1) * coefs).sum(axis=1)

    arc = np.linspace(0.0, 2 * L, n_samples)
    tau = arc - L
    target = np.clip(np.abs(tau), 0.0, L)
    k = np.minimum(np.searchsorted(end_h, target, side="left"), len(end_h) - 1)
    frac = np.where(tot_h[k] > 0, (target - off_h[k]) / tot_h[k], 0.0)
    xi = np.clip(2 * frac - 1, -1.0, 1.0)
    for _ in range(50):
        val = ev(xi, hint[k]) * half[k] + off_h[k]
        der = ev(xi, hc[k]) * half[k]
        step = (val - target) / der
        xi = np.clip(xi - step, -1.0, 1.0)
        if np.max(np.abs(step)) < 1e-15:
            break
    t = mid[k] + half[k] * xi
    om = ev(xi, oint[k]) * half[k] + off_o[k]
    hv = ev(xi, hc[k])
    ov = ev(xi, oc[k])
    p = p0[0] + t**2
    s = np.empty_like(t)
    c = np.empty_like(t)
    drho = np.empty_like(t)
    for j in np.unique(segs[k]):
        m = segs[k] == j
        s[m] = w.rho_seg_inverse(j, np.clip(p[m], w.rho_lo[j], w.rho_hi[j]))
        c[m] = w.c_seg(j, s[m])
        drho[m] = w.drho_seg(j, s[m])
    sgn = np.sign(tau) * spec.orientation
    theta = spec.theta0 + sgn * om
    rdot = (2 * t / drho) / hv
    thdot = ov / hv
    speed2 = (rdot**2 + (s * thdot) ** 2) / c**2
    ang = s**2 * thdot / c**2
    return PathPolyline(arc, s, theta, 2 * L, speed2, ang, {"rho0": float(p0[0])})


def trace_ode_oracle(w, spec, step=1e-3, drift_tol=1e-6):
    """Independent trace: RK4 on the Hamiltonian system with Snell refraction at jumps.

    State (x, y, px, py) with x' = c^2 p and p' = -|p|^2 c grad c.  Each step uses
    the polynomial of the segment it starts in; crossings of a breakpoint are
    located by bisection on the step length to 1e-12, then the tangential part of
    p is kept and the radial part is rescaled so that |p| = 1 / c on the far side.
    """
    r0 = float(spec.r0)
    w.require_herglotz()
    p0 = float(w.tip_rho(np.array([r0]))[0])
    j0 = int(np.clip(np.searchsorted(w.breaks, r0, side="left") - 1, 0, w.nseg - 1))

    def rhs(st, j):
        x, y, px, py = st
        r = math.hypot(x, y)
        cc = w.c_seg(j, r)
        g = -(px * px + py * py) * cc * w.dc_seg(j, r) / r
        return np.array([cc * cc * px, cc * cc * py, g * x, g * y])

    def rk4(st, h, j):
        k1 = rhs(st, j)
        k2 = rhs(st + 0.5 * h * k1, j)
        k3 = rhs(st + 0.5 * h * k2, j)
        k4 = rhs(st + h * k3, j)
        return st + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)

    def half_path(sense):
        th = spec.theta0
        c0 = w.c_seg(j0, r0)
        d = sense * spec.orientation
        st = np.array([r0 * math.cos(th), r0 * math.sin(th),
                       -d * math.sin(th) / c0, d * math.cos(th) / c0])
        j, tt = j0, 0.0
        out = [(0.0, st.copy(), j)]
        while True:
            top = w.breaks[j + 1]
            new = rk4(st, step, j)
            if math.hypot(new[0], new[1]) < top:
                st, tt = new, tt + step
                out.append((tt, st.copy(), j))
                continue
            lo, hi = 0.0, step
            while hi - lo > 1e-12:
                mid = 0.5 * (lo + hi)
                if math.hypot(*rk4(st, mid, j)[:2]) < top:
                    lo = mid
                else:
                    hi = mid
            st, tt = rk4(st, hi, j), tt + hi
            out.append((tt, st.copy(), j))
            if j == w.nseg - 1:
                break
            j += 1
            x, y, px, py = st
            r = math.hypot(x, y)
            ux, uy = x / r, y / r
            pr = px * ux + py * uy
            tx, ty = px - pr * ux, py - pr * uy
            cn = w.c_seg(j, top)
            prn = math.sqrt(max(1.0 / cn**2 - (tx * tx + ty * ty), 0.0))
            st = np.array([x, y, tx + prn * ux, ty + prn * uy])
            out.append((tt, st.copy(), j))
        return out

    fwd, bwd = half_path(1), half_path(-1)
    T = bwd[-1][0]
    pts = [(T - t_, s_, j_) for t_, s_, j_ in reversed(bwd)] + [(T + t_, s_, j_) for t_, s_, j_ in fwd[1:]]
    t = np.array([q[0] for q in pts])
    S = np.array([q[1] for q in pts])
    J = np.array([q[2] for q in pts])
    r = np.hypot(S[:, 0], S[:, 1])
    theta = np.unwrap(np.arctan2(S[:, 1], S[:, 0]))
    cc = np.array([w.c_seg(j, rr) for j, rr in zip(J, r)])
    speed2 = cc**2 * (S[:, 2] ** 2 + S[:, 3] ** 2)
    ang = np.abs(S[:, 0] * S[:, 3] - S[:, 1] * S[:, 2])
    drift = max(np.max(np.abs(speed2 - 1)), np.max(np.abs(ang - p0)))
    if drift > drift_tol:
        raise StepTooLarge(f"conserved-quantity drift {drift:.2e} exceeds {drift_tol:g}")
    return PathPolyline(t, r, theta, float(t[-1]), speed2, ang, {"rho0": p0, "drift": drift})


def broken_ray(w, spec, n_samples=1001):
    """n_segments copies of the base geodesic, each rotated by 2 alpha(r0) from the last."""
    base = trace_geodesic(w, spec.base, n_samples)
    two_alpha = opening_angle(w, spec.base.r0) * spec.base.orientation
    ts, rs, ths, sp, am = [], [], [], [], []
    for l in range(spec.n_segments):
        sl = slice(0 if l == 0 else 1, None)
        ts.append(base.t[sl] + l * base.total_length)
        rs.append(base.r[sl])
        ths.append(base.theta[sl] + l * two_alpha)
        sp.append(base.speed2[sl])
        am.append(base.ang_mom[sl])
    return PathPolyline(np.concatenate(ts), np.concatenate(rs), np.concatenate(ths),
                        spec.n_segments * base.total_length, np.concatenate(sp),
                        np.concatenate(am), dict(base.meta, n_segments=spec.n_segments))


# ---------------------------------------------------------------------------
# periodic orbits
# ---------------------------------------------------------------------------

def is_periodic(w, r0, q_max=50, tol=1e-9):
    """(p, q) in lowest terms with |alpha(r0) - pi p / q| < tol and q <= q_max, else None."""
    a = opening_angle(w, r0) / 2
    fr = Fraction(a / np.pi).limit_denominator(q_max)
    if fr.numerator > 0 and abs(a - np.pi * fr.numerator / fr.denominator) < tol:
        return fr.numerator, fr.denominator
    return None


def _tip_grid(w, n):
    """Per-segment tip radii avoiding jump breakpoints."""
    out = []
    for j in range(w.nseg):
        a, b = w.breaks[j], w.breaks[j + 1]
        lo = a + (b - a) * 1e-9
        hi = b - (b - a) * 1e-9 if (j + 1) in w.jump_breaks else b
        out.append(np.linspace(lo, hi, n))
    return out


def _fractions(q_max, lo, hi):
    """Reduced p/q with q <= q_max and lo < p/q < hi."""
    fr = set()
    for q in range(1, q_max + 1):
        for p in range(max(1, math.floor(lo * q)), math.ceil(hi * q) + 1):
            if lo < p / q < hi and math.gcd(p, q) == 1:
                fr.add((p, q))
    return sorted(fr, key=lambda pq: pq[0] / pq[1])


def find_periodic_radii(w, q_max=50, n_grid=2000, tol=1e-9):
    """All bracketed solutions of alpha(r) = pi p / q, q <= q_max, as sorted (r, p, q)."""
    w.require_herglotz()
    found = []
    for rr in _tip_grid(w, n_grid):
        al = opening_angle(w, rr) / 2
        fr = _fractions(q_max, al.min() / np.pi, al.max() / np.pi)
        if not fr:
            continue
        targ = np.array([np.pi * p / q for p, q in fr])
        d = al[None, :] - targ[:, None]
        fi, ii = np.nonzero(d[:, :-1] * d[:, 1:] <= 0)
        lo, hi = rr[ii].copy(), rr[ii + 1].copy()
        T = targ[fi]
        sgn = np.sign(al[ii + 1] - al[ii])
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            v = (opening_angle(w, mid) / 2 - T) * sgn
            hi = np.where(v > 0, mid, hi)
            lo = np.where(v > 0, lo, mid)
            if np.max(hi - lo) < 1e-15:
                break
        r = 0.5 * (lo + hi)
        err = np.abs(opening_angle(w, r) / 2 - T)
        for k in np.nonzero(err <= tol)[0]:
            found.append((float(r[k]), *fr[fi[k]]))
    found.sort()
    out = []
    for item in found:
        if out and abs(item[0] - out[-1][0]) < 1e-12 and item[1:] == out[-1][1:]:
            continue
        out.append(item)
    return out


def alpha_prime_zeros(w, n_grid=2000):
    """Radii where a finite-difference alpha'(r) changes sign (a conjugacy diagnostic)."""
    w.require_herglotz()
    out = []
    for rr in _tip_grid(w, n_grid):
        al = opening_angle(w, rr) / 2
        d = np.gradient(al, rr)
        k = np.nonzero(d[:-1] * d[1:] < 0)[0]
        out.extend((rr[k] - d[k] * (rr[k + 1] - rr[k]) / (d[k + 1] - d[k])).tolist())
    return out
