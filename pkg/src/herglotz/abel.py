"""Generalized Abel transforms with an endpoint singularity, and their inversion.

The forward transform is

    I^a_K f(x) = int_x^hi (y - x)^(-a) K(x, y) f(y) dy,      0 <= a < 1,

and the three inversion routes are the classical formula for K = 1, the
factored formula for K(x, y) = a(x) b(y), and a layer-stripping Neumann
iteration for kernels that are Lipschitz near the diagonal.
"""
from dataclasses import dataclass, field
from functools import lru_cache
import warnings

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from ._errors import (
    ContractionFailure,
    DivisionByZero,
    DomainMismatch,
    NotConverged,
    OutOfDomain,
    QuadratureFailure,
)
from .grid import GridFunction


def c_alpha(alpha):
    """pi / sin(alpha pi), the value of J^alpha_1 off the diagonal."""
    if not 0.0 < alpha < 1.0:
        raise OutOfDomain("alpha must lie in (0, 1)")
    return np.pi / np.sin(alpha * np.pi)


@lru_cache(maxsize=None)
def _gl(n):
    return roots_legendre(n)


@lru_cache(maxsize=None)
def _gj(n, a, b):
    # weight (1 - v)^a (1 + v)^b on [-1, 1]; scipy divides by zero when a + b = -1
    with np.errstate(divide="ignore", invalid="ignore"):
        return roots_jacobi(n, a, b)


@lru_cache(maxsize=None)
def _jacobi_composite(a, b, panels=8, n=16):
    """Nodes/weights for int_0^1 u^a (1-u)^b phi(u) du with smooth phi.

    The first panel carries the u^a singularity in a Gauss-Jacobi rule, the last
    one the (1-u)^b singularity, and the middle panels are Gauss-Legendre.
    """
    edges = np.linspace(0.0, 1.0, panels + 1)
    us, ws = [], []
    for p in range(panels):
        lo, hi = edges[p], edges[p + 1]
        half = 0.5 * (hi - lo)
        if p == 0 and panels == 1:
            v, w = _gj(n, b, a)
            u = lo + half * (1 + v)
            us.append(u)
            ws.append(w * half ** (a + b + 1))
        elif p == 0:
            v, w = _gj(n, 0.0, a)
            u = lo + half * (1 + v)
            us.append(u)
            ws.append(w * half ** (a + 1) * (1 - u) ** b)
        elif p == panels - 1:
            v, w = _gj(n, b, 0.0)
            u = lo + half * (1 + v)
            us.append(u)
            ws.append(w * half ** (b + 1) * u**a)
        else:
            v, w = _gl(n)
            u = lo + half * (1 + v)
            us.append(u)
            ws.append(w * half * u**a * (1 - u) ** b)
    return np.concatenate(us), np.concatenate(ws)


def _as_callable(f):
    return f if callable(f) else (lambda y: np.full(np.shape(y), float(f)))


@dataclass
class KernelSpec:
    """Kernel K on {lo <= x <= y <= hi} with singularity exponent alpha.

    K must accept broadcastable numpy arrays (x, y).  The bounds are optional
    metadata; `from_callable` estimates them by sampling.
    """

    alpha: float
    K: object
    sup_K: float = np.inf
    lip1_K: float = np.inf
    diag_min: float = 0.0
    breakpoints: tuple = ()
    lo: float = 0.0
    hi: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise OutOfDomain("alpha must lie in [0, 1)")

    def __call__(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        out = np.asarray(self.K(x, y))
        return np.broadcast_to(out, x.shape) if out.shape != x.shape else out

    @classmethod
    def from_callable(cls, alpha, K, lo=0.0, hi=1.0, n=200, **kw):
        ks = cls(alpha, K, lo=lo, hi=hi, **kw)
        s = np.linspace(lo, hi, n)
        X, Y = np.meshgrid(s, s, indexing="ij")
        m = X <= Y
        vals = ks(X, Y)
        ks.sup_K = float(np.max(np.abs(vals[m])))
        dq = np.abs(np.diff(vals, axis=0)) / np.diff(s)[:, None]
        ks.lip1_K = float(np.max(dq[m[1:] & m[:-1]]))
        ks.diag_min = float(np.min(np.abs(ks(s, s))))
        return ks

    @classmethod
    def constant(cls, alpha, value=1.0, lo=0.0, hi=1.0):
        v = float(value)
        return cls(alpha, lambda x, y: np.full(np.shape(x), v), abs(v), 0.0, abs(v), lo=lo, hi=hi)


# ---------------------------------------------------------------------------
# forward transform
# ---------------------------------------------------------------------------

def abel_forward(k, f, x, hi=None, tol=1e-10, order=12, max_evals=20_000_000):
    """I^alpha_K f(x) by y = x + t^(1/(1-alpha)) and adaptive composite Gauss-Legendre.

    `f` is a GridFunction or any vectorised callable defined on [x, hi].
    Panels are split at the kernel's declared breakpoints.  I f(hi) = 0.
    """
    a = k.alpha
    hi = k.hi if hi is None else float(hi)
    scalar = np.ndim(x) == 0
    shape = np.shape(x)
    x = np.asarray(x, dtype=float).ravel()
    if np.any(x > hi + 1e-15) or np.any(x < k.lo - 1e-15):
        raise OutOfDomain("x must lie in [lo, hi]")
    f = _as_callable(f)
    beta = 1.0 / (1.0 - a)
    T = np.maximum(hi - x, 0.0) ** (1.0 - a)

    cuts = [np.full(x.shape, 0.0)]
    for b in k.breakpoints:
        cuts.append(np.where((x < b) & (b < hi), np.maximum(b - x, 0.0) ** (1.0 - a), T))
    cuts.append(T)
    edges = np.sort(np.stack(cuts, axis=1), axis=1)
    ix = np.repeat(np.arange(len(x)), edges.shape[1] - 1)
    ta = edges[:, :-1].ravel()
    tb = edges[:, 1:].ravel()
    keep = tb > ta
    ix, ta, tb = ix[keep], ta[keep], tb[keep]

    xi, wi = _gl(order)

    def quad(ii, lo_, hi_):
        half = 0.5 * (hi_ - lo_)
        t = (lo_ + hi_)[:, None] * 0.5 + half[:, None] * xi[None, :]
        xx = x[ii][:, None]
        y = np.minimum(xx + t**beta, hi)
        vals = beta * k(np.broadcast_to(xx, y.shape), y) * f(y)
        return (vals * wi).sum(axis=1) * half, (np.abs(vals) * wi).sum(axis=1) * half

    est, mag = quad(ix, ta, tb)
    S = np.zeros(len(x))
    np.add.at(S, ix, mag)
    total = np.zeros(len(x), dtype=est.dtype)
    evals = 0
    for _ in range(80):
        if len(ix) == 0:
            break
        m = 0.5 * (ta + tb)
        q1, _ = quad(ix, ta, m)
        q2, _ = quad(ix, m, tb)
        evals += 2 * order * len(ix)
        fine = q1 + q2
        err = np.abs(fine - est)
        with np.errstate(invalid="ignore", divide="ignore"):
            share = np.where(T[ix] > 0, (tb - ta) / T[ix], 1.0)
        # the absolute floor never drops below tol * S / 64 per panel, so panels
        # at an endpoint singularity of the integrand terminate
        ok = (err <= tol * np.abs(fine)) | (err <= tol * S[ix] * np.maximum(share, 1 / 64)) | (err <= 1e-300)
        if total.dtype != fine.dtype:
            total = total.astype(fine.dtype)
        np.add.at(total, ix[ok], fine[ok])
        nb = ~ok
        if evals > max_evals and np.any(nb):
            raise QuadratureFailure("abel_forward exceeded its evaluation budget")
        ix = np.concatenate([ix[nb], ix[nb]])
        ta, tb, m_ = ta[nb], tb[nb], m[nb]
        est = np.concatenate([q1[nb], q2[nb]])
        ta, tb = np.concatenate([ta, m_]), np.concatenate([m_, tb])
    else:
        raise QuadratureFailure("abel_forward did not converge")
    return total[0] if scalar else total.reshape(shape)


def compose_J(k, x, y, n=32, tol=1e-10):
    """J^alpha_K(x, y) = int_x^y (z-x)^(alpha-1) (y-z)^(-alpha) K(z, y) dz by Gauss-Jacobi."""
    a = k.alpha
    if not 0.0 < a < 1.0:
        raise OutOfDomain("compose_J needs alpha in (0, 1)")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x > y):
        raise OutOfDomain("compose_J needs x <= y")
    prev = None
    while n <= 512:
        v, w = _gj(n, -a, a - 1.0)
        z = x[..., None] + (y - x)[..., None] * 0.5 * (1.0 + v)
        val = (k(z, np.broadcast_to(y[..., None], z.shape)) * w).sum(axis=-1)
        if prev is not None and np.all(np.abs(val - prev) <= tol * np.maximum(1.0, np.abs(val))):
            return val
        prev, n = val, 2 * n
    raise QuadratureFailure("compose_J did not converge")


# ---------------------------------------------------------------------------
# inversion helpers
# ---------------------------------------------------------------------------

def _extrapolate(xs, ys, x0, deg=4):
    c = np.polyfit(xs - x0, ys, min(deg, len(xs) - 1))
    return np.polyval(c, 0.0)


def _smooth_factor(alpha, g, hi):
    """GridFunction of g(x) / (hi - x)^(1-alpha), with the value at hi extrapolated."""
    x = g.grid
    inside = x < hi - 1e-14 * max(1.0, abs(hi))
    xs = x[inside]
    vals = g.values[inside] / (hi - xs) ** (1.0 - alpha)
    top = _extrapolate(xs[-5:], vals[-5:], hi)
    return GridFunction(np.append(xs, hi), np.append(vals, top))


def _half_integral(alpha, gt, hi, xs):
    """I_1^(1-alpha) g at xs for g = (hi - y)^(1-alpha) gt(y)."""
    u, w = _jacobi_composite(alpha - 1.0, 1.0 - alpha)
    xs = np.asarray(xs, dtype=float)
    L = np.maximum(hi - xs, 0.0)
    y = xs[:, None] + L[:, None] * u[None, :]
    return L * (gt(y) * w).sum(axis=1)


def _stencil_derivative(F, x, lo, hi, refine=4):
    """4th-order derivative of F at nodes x using steps of a quarter local spacing.

    Centered 5-point stencils where they fit inside [lo, hi], one-sided otherwise.
    """
    x = np.asarray(x, dtype=float)
    dx = np.diff(x)
    h = np.empty_like(x)
    h[1:-1] = np.minimum(dx[:-1], dx[1:])
    h[0], h[-1] = dx[0], dx[-1]
    h = h / refine
    cen = (x - 2 * h >= lo) & (x + 2 * h <= hi)
    fwd = ~cen & (x - 2 * h < lo)
    bwd = ~cen & ~fwd
    offs = np.arange(-4, 5)
    pts = x[:, None] + h[:, None] * offs[None, :]
    need = np.zeros(pts.shape, dtype=bool)
    need[cen] |= np.isin(offs, [-2, -1, 1, 2])[None, :]
    need[fwd] |= np.isin(offs, [0, 1, 2, 3, 4])[None, :]
    need[bwd] |= np.isin(offs, [0, -1, -2, -3, -4])[None, :]
    vals = np.zeros(pts.shape, dtype=complex)
    vals[need] = F(pts[need])
    c = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
    f1 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
    out = np.zeros(len(x), dtype=complex)
    out[cen] = vals[cen][:, 2:7] @ c
    out[fwd] = vals[fwd][:, 4:9] @ f1
    out[bwd] = -(vals[bwd][:, 4::-1] @ f1)
    out /= h
    if not np.iscomplexobj(F(x[:1])):
        out = out.real
    return out


def _data_derivative(alpha, g, hi):
    """D I_1^(1-alpha) g at the nodes of g (D g itself when alpha = 0)."""
    if alpha == 0.0:
        return _stencil_derivative(g, g.grid, g.grid[0], hi), None
    gt = _smooth_factor(alpha, g, hi)

    def G(xs):
        return _half_integral(alpha, gt, hi, xs)

    return _stencil_derivative(G, g.grid, g.grid[0], hi), G


def _check_grid(g, hi):
    if not isinstance(g, GridFunction):
        raise DomainMismatch("data must be a GridFunction")
    if hi is not None and g.grid[-1] > hi + 1e-12:
        raise DomainMismatch("data grid extends beyond the upper limit")


def _composition_residual(alpha, G, f, hi):
    x = f.grid
    ca = c_alpha(alpha)
    ff = GridFunction(np.append(x, hi) if x[-1] < hi else x,
                      np.append(f.values, f.values[-1]) if x[-1] < hi else f.values)
    lhs = G(x)
    rhs = np.array([ca * ff.integrate(xi, hi) for xi in x])
    return float(np.max(np.abs(lhs - rhs)) / max(1.0, np.max(np.abs(lhs))))


def invert_classical(alpha, g, hi=None):
    """Recover f from g = I^alpha_1 f by f = -c_alpha^-1 D I_1^(1-alpha) g."""
    c_alpha(alpha)
    _check_grid(g, None)
    hi = g.grid[-1] if hi is None else float(hi)
    _check_grid(g, hi)
    dg, G = _data_derivative(alpha, g, hi)
    f = GridFunction(g.grid, -dg / c_alpha(alpha))
    res = _composition_residual(alpha, G, f, hi)
    f.meta["composition_residual"] = res
    if res > 1e-8:
        warnings.warn(f"composition identity residual {res:.2e} above 1e-8", RuntimeWarning)
    return f


def invert_factored(alpha, a, b, g, hi=None):
    """Recover f from g = I^alpha_K f with K(x, y) = a(x) b(y)."""
    x = g.grid
    av = np.asarray(_as_callable(a)(x))
    bv = np.asarray(_as_callable(b)(x))
    if np.min(np.abs(av)) < 1e-12 or np.min(np.abs(bv)) < 1e-12:
        raise DivisionByZero("kernel factor vanishes on the grid")
    h = invert_classical(alpha, GridFunction(x, g.values / av), hi)
    out = GridFunction(x, h.values / bv, h.meta)
    return out


def _volterra_weights(x):
    """W[i, j]: weights of a local-cubic rule for int_{x_i}^{x_-1} phi using nodes j >= i."""
    n = len(x)
    W = np.zeros((n, n))
    if n == 1:
        return W
    gx, gw = _gl(4)

    def interval_weights(m, start):
        idx = np.arange(start, min(start + 4, n))
        xa, xb = x[m], x[m + 1]
        t = 0.5 * (xa + xb) + 0.5 * (xb - xa) * gx
        # Lagrange basis on idx evaluated at t
        L = np.ones((len(idx), len(t)))
        for p, ip in enumerate(idx):
            for q, iq in enumerate(idx):
                if p != q:
                    L[p] *= (t - x[iq]) / (x[ip] - x[iq])
        return idx, L @ gw * 0.5 * (xb - xa)

    std = np.zeros((n - 1, n))
    first = np.zeros((n - 1, n))
    for m in range(n - 1):
        s = min(max(m - 1, 0), max(n - 4, 0))
        idx, w = interval_weights(m, s)
        std[m, idx] = w
        s1 = min(m, max(n - 4, 0))
        idx, w = interval_weights(m, s1)
        first[m, idx] = w
    # row i: first interval i uses a stencil starting at i, the rest are standard
    suffix = np.cumsum(std[::-1], axis=0)[::-1]
    for i in range(n - 1):
        if i > n - 4:
            # fewer than four nodes left above x_i: one interpolant on all of them
            idx = np.arange(i, n)
            for m in range(i, n - 1):
                xa, xb = x[m], x[m + 1]
                t = 0.5 * (xa + xb) + 0.5 * (xb - xa) * gx
                L = np.ones((len(idx), len(t)))
                for p, ip in enumerate(idx):
                    for q, iq in enumerate(idx):
                        if p != q:
                            L[p] *= (t - x[iq]) / (x[ip] - x[iq])
                W[i, idx] += L @ gw * 0.5 * (xb - xa)
            continue
        W[i] = first[i] + (suffix[i + 1] if i + 1 < n - 1 else 0.0)
    return W


def _dJ_matrix(k, x):
    """Matrix of d/dx J^alpha_K(x_i, x_j) for j >= i (J = K when alpha = 0)."""
    n = len(x)
    a = k.alpha
    iu, ju = np.triu_indices(n)
    xi, yj = x[iu], x[ju]
    J = np.zeros((n, n), dtype=complex)
    if a == 0.0:
        J[iu, ju] = k(xi, yj)
    else:
        v, w = _gj(24, -a, a - 1.0)
        z = xi[:, None] + (yj - xi)[:, None] * 0.5 * (1.0 + v)[None, :]
        J[iu, ju] = (k(z, np.broadcast_to(yj[:, None], z.shape)) * w).sum(axis=1)
    if np.isrealobj(k(x[:1], x[:1])):
        J = J.real
    dJ = np.zeros_like(J)
    m = min(5, n)
    for j in range(n):
        xs = x[: j + 1]
        cnt = min(m, j + 1)
        if cnt < 2:
            continue
        start = np.clip(np.arange(j + 1) - cnt // 2, 0, j + 1 - cnt)
        idx = start[:, None] + np.arange(cnt)[None, :]
        hsc = (x[j] - x[0]) / max(j, 1)
        d = (xs[idx] - xs[:, None]) / hsc
        A = d[:, None, :] ** np.arange(cnt)[None, :, None]
        rhs = np.zeros((j + 1, cnt, 1))
        rhs[:, 1, 0] = 1.0
        wts = np.linalg.solve(A, rhs)[..., 0] / hsc
        dJ[: j + 1, j] = (wts * J[idx, j]).sum(axis=1)
    # the first columns have too few nodes below the diagonal; extrapolate in y
    lead = min(4, n)
    src = np.arange(lead, min(lead + 5, n))
    if len(src) >= 2:
        for j in range(lead):
            for i in range(j + 1):
                c = np.polyfit(x[src] - x[j], dJ[i, src].real, len(src) - 1)
                val = np.polyval(c, 0.0)
                if np.iscomplexobj(dJ):
                    ci = np.polyfit(x[src] - x[j], dJ[i, src].imag, len(src) - 1)
                    val = val + 1j * np.polyval(ci, 0.0)
                dJ[i, j] = val
    return J, dJ


def invert_neumann(k, g, r_stop=None, hi=None, tol=1e-10, max_iter=200, min_width=1e-3):
    """Layer-stripping Neumann inversion of g = I^alpha_K f on [r_stop, hi].

    After applying I_1^(1-alpha) and differentiating, the equation reads

        D I_1^(1-alpha) g = -c_alpha K(x, x) f(x) + int_x^hi d_x J(x, y) f(y) dy,

    which is split as (E + F) f with E = -C c_alpha and C = K at the top of the
    current layer.  Layers are peeled from hi downwards; on each the iteration
    f <- E^-1 (D I g - F f) runs with the already recovered part of f frozen.
    """
    a = k.alpha
    _check_grid(g, None)
    hi = g.grid[-1] if hi is None else float(hi)
    _check_grid(g, hi)
    if r_stop is not None:
        keep = g.grid >= r_stop - 1e-14
        g = GridFunction(g.grid[keep], g.values[keep])
    x = g.grid
    n = len(x)
    ca = c_alpha(a) if a > 0 else 1.0
    dg, _ = _data_derivative(a, g, hi)
    kd = k(x, x)
    if np.min(np.abs(kd)) < 1e-14:
        raise ContractionFailure("kernel vanishes on the diagonal")
    _, dJ = _dJ_matrix(k, x)
    V = _volterra_weights(x) * dJ
    dtype = np.result_type(dg, V, kd)
    f = np.zeros(n, dtype=dtype)
    top = n - 1
    layers, iters = [], []
    absV = np.abs(V)
    while top >= 0:
        C = kd[top]
        bot = top
        # grow the layer while the contraction estimate stays below 1/2
        while bot > 0:
            b = bot - 1
            rows = slice(b, top + 1)
            est = (ca * np.abs(C - kd[rows]) + absV[rows, rows].sum(axis=1)) / (ca * abs(C))
            if np.max(est) > 0.5:
                break
            bot = b
        rows = slice(bot, top + 1)
        est = (ca * np.abs(C - kd[rows]) + absV[rows, rows].sum(axis=1)) / (ca * abs(C))
        if np.max(est) >= 1.0 or (bot > 0 and x[top] - x[bot] < min_width and top - bot < 4):
            raise ContractionFailure(
                f"no contracting layer of width >= {min_width} below x={x[top]:.6g}")
        E = -C * ca
        above = V[rows, top + 1:] @ f[top + 1:] if top + 1 < n else 0.0
        rhs = dg[rows] - above
        diag = ca * (C - kd[rows])
        VL = V[rows, rows]
        fl = rhs / E
        for it in range(1, max_iter + 1):
            new = (rhs - diag * fl - VL @ fl) / E
            delta = np.max(np.abs(new - fl))
            fl = new
            if delta <= tol * max(1.0, np.max(np.abs(fl))):
                break
        else:
            raise NotConverged(f"Neumann iteration did not converge on layer [{x[bot]:.4g}, {x[top]:.4g}]")
        f[rows] = fl
        layers.append((float(x[bot]), float(x[top])))
        iters.append(it)
        top = bot - 1
    if np.isrealobj(g.values) and np.iscomplexobj(f):
        f = f.real
    return GridFunction(x, f, {"layers": layers, "iterations": iters})


# ---------------------------------------------------------------------------
# differentiation formula
# ---------------------------------------------------------------------------

def abel_derivative(phi, alpha, x, phi_x=None, phi_y=None, h=1e-3, tol=1e-10):
    """Derivative of f(x) = int_x^1 (y^2 - x^2)^(-alpha) phi(x, y) dy.

    Uses f'(x) = int_x^1 (y^2 - x^2)^(-alpha) [phi_x + d_y((x/y) phi)] dy
                 - x (1 - x^2)^(-alpha) phi(x, 1).
    Partial derivatives come from the callbacks when given, else 5-point stencils.
    """
    if not 0.0 < x < 1.0:
        raise OutOfDomain("x must lie in (0, 1)")
    if not 0.0 <= alpha < 1.0:
        raise OutOfDomain("alpha must lie in [0, 1)")
    c5 = np.array([1.0, -8.0, 8.0, -1.0]) / (12.0 * h)
    if phi_x is None:
        def phi_x(xx, yy):
            return sum(c * phi(xx + s * h, yy) for c, s in zip(c5, (-2, -1, 1, 2)))
    if phi_y is None:
        def phi_y(xx, yy):
            return sum(c * phi(xx, yy + s * h) for c, s in zip(c5, (-2, -1, 1, 2)))

    def inner(y):
        xx = np.full_like(y, x)
        return (y + x) ** (-alpha) * (phi_x(xx, y) + (x / y) * phi_y(xx, y) - (x / y**2) * phi(xx, y))

    def rule(n, panels):
        edges = np.linspace(x, 1.0, panels + 1)
        half = 0.5 * (edges[1] - edges[0])
        v, w = _gj(n, 0.0, -alpha)
        y = edges[0] + half * (1 + v)
        total = (w * inner(y)).sum() * half ** (1 - alpha)
        gx, gw = _gl(n)
        for p in range(1, panels):
            y = 0.5 * (edges[p] + edges[p + 1]) + half * gx
            total += (gw * (y - x) ** (-alpha) * inner(y)).sum() * half
        return total

    prev = rule(16, 4)
    for n in (32, 64, 128):
        cur = rule(n, 4)
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            break
        prev = cur
    else:
        raise QuadratureFailure("abel_derivative quadrature did not converge")
    return cur - x * (1 - x**2) ** (-alpha) * phi(np.float64(x), np.float64(1.0))
