"""Piecewise-polynomial radial wave speeds and the turning parameter rho = r/c."""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ._errors import HerglotzViolation, JumpTangency, OutOfDomain, OutOfRange


@dataclass
class HerglotzReport:
    passed: bool
    min_herglotz_margin: float
    jump_violations: list = field(default_factory=list)
    notes: str = ""

    # "pass" is a keyword, keep a readable alias
    @property
    def ok(self):
        return self.passed


class WaveSpeed:
    """Radial speed c(r) on (R, 1], polynomial (degree <= 3) on each (a, b].

    Segments are given as (a, b, coeffs) with coeffs in increasing powers of r.
    The object is immutable after construction.
    """

    def __init__(self, R, segments):
        R = float(R)
        if not 0.0 < R < 1.0:
            raise OutOfDomain("R must lie in (0, 1)")
        segs = [(float(a), float(b), tuple(float(c) for c in co)) for a, b, co in segments]
        if not segs:
            raise ValueError("at least one segment is required")
        if abs(segs[0][0] - R) > 1e-14 or abs(segs[-1][1] - 1.0) > 1e-14:
            raise ValueError("segments must start at R and end at 1")
        for (a0, b0, _), (a1, b1, _) in zip(segs, segs[1:]):
            if abs(b0 - a1) > 1e-14:
                raise ValueError(f"segments must tile (R, 1]: gap or overlap at {b0}")
        coef = np.zeros((len(segs), 4))
        for j, (a, b, co) in enumerate(segs):
            if not a < b:
                raise ValueError("segment endpoints must increase")
            if not 1 <= len(co) <= 4:
                raise ValueError("coefficients must describe a polynomial of degree <= 3")
            coef[j, : len(co)] = co
        self.R = R
        self.breaks = np.array([R] + [b for _, b, _ in segs])
        self.breaks[-1] = 1.0
        self.coef = coef
        self.coef.setflags(write=False)
        self.breaks.setflags(write=False)
        for j in range(self.nseg):
            a, b = self.breaks[j], self.breaks[j + 1]
            rr = np.linspace(a, b, 2001)
            roots = self._real_roots(coef[j], a, b)
            if np.any(self.c_seg(j, rr) <= 0) or len(roots):
                raise OutOfDomain(f"c must be positive on segment {j}")

    # construction helpers
    @classmethod
    def constant(cls, R=0.2, c=1.0):
        return cls(R, [(R, 1.0, (c,))])

    @classmethod
    def layered(cls, R, breaks, coeffs):
        """Segments from interior break radii and one coefficient tuple per layer."""
        edges = [R] + list(breaks) + [1.0]
        return cls(R, [(edges[j], edges[j + 1], coeffs[j]) for j in range(len(coeffs))])

    @property
    def nseg(self):
        return len(self.coef)

    @property
    def segments(self):
        return [(self.breaks[j], self.breaks[j + 1], tuple(self.coef[j])) for j in range(self.nseg)]

    def __repr__(self):
        return f"WaveSpeed(R={self.R}, nseg={self.nseg})"

    # per-segment polynomial evaluation, valid for any r (analytic continuation)
    def c_seg(self, j, r):
        c0, c1, c2, c3 = self.coef[j]
        return c0 + r * (c1 + r * (c2 + r * c3))

    def dc_seg(self, j, r):
        _, c1, c2, c3 = self.coef[j]
        return c1 + r * (2 * c2 + 3 * r * c3)

    def rho_seg(self, j, r):
        return r / self.c_seg(j, r)

    def drho_seg(self, j, r):
        c = self.c_seg(j, r)
        return (c - r * self.dc_seg(j, r)) / c**2

    @staticmethod
    def _real_roots(co, a, b):
        co = np.asarray(co, dtype=float)
        # leading coefficients at round-off size only produce huge spurious roots
        p = np.polynomial.Polynomial(co).trim(1e-14 * max(np.max(np.abs(co)), 1e-300))
        if p.degree() < 1:
            return np.array([])
        rts = p.roots()
        rts = rts[np.abs(rts.imag) < 1e-12].real
        return rts[(rts > a) & (rts < b)]

    # segment lookup with the (a, b] convention
    def segment_of(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(~(r > self.R) | (r > 1.0)) or np.any(np.isnan(r)):
            raise OutOfDomain("r must lie in (R, 1]")
        return np.searchsorted(self.breaks, r, side="left") - 1

    def _per_segment(self, fn, r):
        r = np.asarray(r, dtype=float)
        j = self.segment_of(r)
        out = np.empty_like(r)
        for k in np.unique(j):
            m = j == k
            out[m] = fn(k, r[m])
        return out if out.ndim else float(out)

    def c(self, r):
        return self._per_segment(self.c_seg, r)

    def dc(self, r):
        return self._per_segment(self.dc_seg, r)

    def rho(self, r):
        return self._per_segment(self.rho_seg, r)

    def drho(self, r):
        return self._per_segment(self.drho_seg, r)

    # turning-parameter ranges
    @cached_property
    def rho_lo(self):
        """rho at the bottom of each segment (right limit at its left end)."""
        return np.array([self.rho_seg(j, self.breaks[j]) for j in range(self.nseg)])

    @cached_property
    def rho_hi(self):
        """rho at the top of each segment."""
        return np.array([self.rho_seg(j, self.breaks[j + 1]) for j in range(self.nseg)])

    @cached_property
    def jump_breaks(self):
        """Indices j (1..nseg-1) of interior breakpoints where c is discontinuous."""
        out = []
        for j in range(1, self.nseg):
            a = self.breaks[j]
            if abs(self.c_seg(j, a) - self.c_seg(j - 1, a)) > 1e-14:
                out.append(j)
        return out

    @property
    def gaps(self):
        """List of (rho(a), rho(a+)) jump gaps, one per jump breakpoint."""
        return [(self.rho_hi[j - 1], self.rho_lo[j]) for j in self.jump_breaks]

    def in_gap(self, p):
        """True where p lies in a closed-open gap [rho(a), rho(a+)) of a genuine jump."""
        p = np.asarray(p, dtype=float)
        m = np.zeros(p.shape, dtype=bool)
        for lo, hi in self.gaps:
            m |= (p >= lo) & (p < hi)
        return m

    def rho_seg_inverse(self, j, p, tol=1e-13):
        """Solve rho_j(r) = p on segment j by safeguarded Newton (vectorised)."""
        p = np.asarray(p, dtype=float)
        a, b = self.breaks[j], self.breaks[j + 1]
        lo_p, hi_p = self.rho_lo[j], self.rho_hi[j]
        lo = np.full(p.shape, a)
        hi = np.full(p.shape, b)
        frac = np.clip((p - lo_p) / (hi_p - lo_p), 0.0, 1.0) if hi_p > lo_p else 0.5
        r = a + (b - a) * frac
        for _ in range(100):
            f = self.rho_seg(j, r) - p
            lo = np.where(f < 0, r, lo)
            hi = np.where(f > 0, r, hi)
            d = self.drho_seg(j, r)
            with np.errstate(divide="ignore", invalid="ignore"):
                rn = r - f / d
            bad = ~((rn >= lo) & (rn <= hi)) | ~np.isfinite(rn)
            rn = np.where(bad, 0.5 * (lo + hi), rn)
            done = (np.abs(rn - r) <= tol * (b - a)) | (f == 0)
            rn = np.where(f == 0, r, rn)
            r = rn
            if np.all(done):
                break
        return r

    def rho_inverse(self, p):
        """Radius with rho(r) = p; raises inside jump gaps or outside the range."""
        p = np.asarray(p, dtype=float)
        if np.any(~(p > self.rho_lo[0]) | (p > self.rho_hi[-1] * (1 + 1e-15))):
            raise OutOfRange("p outside the attainable range (rho(R+), rho(1)]")
        for lo, hi in self.gaps:
            if np.any((p > lo) & (p < hi)):
                raise JumpTangency(f"p inside the jump gap ({lo:.6g}, {hi:.6g})")
        j = np.minimum(np.searchsorted(self.rho_hi, p, side="left"), self.nseg - 1)
        out = np.empty_like(p)
        for k in np.unique(j):
            m = j == k
            out[m] = self.rho_seg_inverse(k, p[m])
        return out if out.ndim else float(out)

    def check_tip(self, r0):
        """Validate tip radii: r0 in [R, 1] and not on a jump breakpoint."""
        r0 = np.asarray(r0, dtype=float)
        if np.any(~(r0 >= self.R) | (r0 > 1.0)):
            raise OutOfDomain("tip radius must lie in [R, 1]")
        for j in self.jump_breaks:
            if np.any(np.abs(r0 - self.breaks[j]) < 1e-14):
                raise JumpTangency(f"tip on the jump surface r={self.breaks[j]:g}")

    def tip_rho(self, r0):
        """rho at tip radii; a tip at R uses the right limit rho(R+)."""
        r0 = np.asarray(r0, dtype=float)
        self.check_tip(r0)
        j = np.clip(np.searchsorted(self.breaks, r0, side="left") - 1, 0, self.nseg - 1)
        out = np.empty_like(r0)
        for k in np.unique(j):
            m = j == k
            out[m] = self.rho_seg(k, r0[m])
        return out

    @cached_property
    def herglotz(self):
        return check_herglotz(self)

    def require_herglotz(self):
        if not self.herglotz.passed:
            raise HerglotzViolation(self.herglotz.notes or "Herglotz check failed")


def eval_c(w, r):
    return w.c(r)


def rho(w, r):
    return w.rho(r)


def rho_prime(w, r):
    return w.drho(r)


def rho_inverse(w, p):
    return w.rho_inverse(p)


def check_herglotz(w, grid_points=10_000):
    """Grid, endpoint and root checks of d/dr(r/c) > 0 and of the jump inequality."""
    if grid_points < 100:
        raise ValueError("grid_points must be at least 100")
    margins, notes = [], []
    for j in range(w.nseg):
        a, b = w.breaks[j], w.breaks[j + 1]
        rr = np.linspace(a, b, grid_points + 2)
        m = float(np.min(w.drho_seg(j, rr)))
        # numerator of rho' is c - r c', a polynomial; any interior root kills positivity
        num = w.coef[j] * (1 - np.arange(4))
        roots = WaveSpeed._real_roots(num, a, b)
        if len(roots):
            m = min(m, float(np.min(w.drho_seg(j, roots))))
            notes.append(f"rho' vanishes in segment {j} at r={roots[0]:.6g}")
        margins.append(m)
    jumps = []
    for j in range(1, w.nseg):
        a = w.breaks[j]
        d = float(w.c_seg(j, a) - w.c_seg(j - 1, a))
        if d > 1e-14:
            jumps.append((float(a), d))
            notes.append(f"c jumps up by {d:.6g} at r={a:g}")
    mm = float(min(margins))
    if mm <= 0 and not any("vanishes" in n for n in notes):
        notes.append("rho' is not positive somewhere")
    return HerglotzReport(mm > 0 and not jumps, mm, jumps, "; ".join(notes))
