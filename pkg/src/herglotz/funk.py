"""Great-circle averages of band-limited functions on the unit sphere.

Fields are expansions sum_{l <= L, |m| <= l} f_lm Y_lm in complex orthonormal
spherical harmonics (scipy convention, Condon-Shortley phase).  A real field
has f_{l,-m} = (-1)^m conj(f_lm).  Coefficients may carry a trailing radial
axis, which turns the field into one on a spherical shell.
"""
import csv
import io

import numpy as np

from ._errors import DomainMismatch, IllConditioned, OutOfDomain, ProjectionResidual
from .grid import GridFunction


def _harmonics(L, xyz):
    """Y_lm at unit vectors xyz (..., 3) as an array (L+1, 2L+1, ...) indexed [l, m+L].

    Orthonormal associated Legendre functions by the standard three-term
    recursion in l for each m >= 0; negative orders from Y_{l,-m} = (-1)^m conj(Y_lm).
    """
    xyz = np.asarray(xyz, dtype=float)
    x = np.clip(xyz[..., 2], -1.0, 1.0)
    sx = np.sqrt(np.maximum(1.0 - x * x, 0.0))
    eip = np.exp(1j * np.arctan2(xyz[..., 1], xyz[..., 0]))
    Y = np.zeros((L + 1, 2 * L + 1) + x.shape, dtype=complex)
    pmm = np.full(x.shape, 1.0 / np.sqrt(4 * np.pi))
    phase = np.ones(x.shape, dtype=complex)
    for m in range(L + 1):
        if m > 0:
            pmm = -np.sqrt((2 * m + 1) / (2 * m)) * sx * pmm
            phase = phase * eip
        prev, cur = np.zeros_like(x), pmm
        for l in range(m, L + 1):
            if l > m:
                a = np.sqrt((4 * l * l - 1) / (l * l - m * m))
                b = np.sqrt(((l - 1) ** 2 - m * m) / (4 * (l - 1) ** 2 - 1))
                prev, cur = cur, a * (x * cur - b * prev)
            Y[l, L + m] = cur * phase
            if m > 0:
                Y[l, L - m] = (-1) ** m * np.conj(Y[l, L + m])
    return Y


def _valid_mask(L):
    l = np.arange(L + 1)[:, None]
    m = np.arange(-L, L + 1)[None, :]
    return np.abs(m) <= l


class SphericalField:
    """Band-limited field on S^2, optionally with radial coefficient profiles.

    coeffs has shape (L+1, 2L+1) or (L+1, 2L+1, nr) with entry [l, m+L];
    `radii` is required with the radial form.
    """

    def __init__(self, coeffs, radii=None):
        c = np.asarray(coeffs, dtype=complex)
        if c.ndim not in (2, 3) or c.shape[1] != 2 * c.shape[0] - 1:
            raise DomainMismatch("coefficients must have shape (L+1, 2L+1[, nr])")
        L = c.shape[0] - 1
        mask = _valid_mask(L)
        if np.any(np.abs(c[~mask]) > 0):
            raise DomainMismatch("coefficients with |m| > l must vanish")
        if (c.ndim == 3) != (radii is not None):
            raise DomainMismatch("radii go with 3-d coefficients and only then")
        if radii is not None:
            radii = np.asarray(radii, dtype=float)
            if len(radii) != c.shape[2]:
                raise DomainMismatch("one radius per coefficient column")
        self.coeffs = c
        self.radii = radii
        self.L = L

    @classmethod
    def zeros(cls, L, radii=None):
        shape = (L + 1, 2 * L + 1) + (() if radii is None else (len(radii),))
        return cls(np.zeros(shape, dtype=complex), radii)

    @classmethod
    def harmonic(cls, l, m, L=None, value=1.0):
        L = l if L is None else L
        c = np.zeros((L + 1, 2 * L + 1), dtype=complex)
        c[l, m + L] = value
        return cls(c)

    def coef(self, l, m):
        return self.coeffs[l, m + self.L]

    def __call__(self, xyz):
        """Values at unit vectors (..., 3); a trailing radial axis is kept if present."""
        xyz = np.asarray(xyz, dtype=float)
        Y = _harmonics(self.L, xyz)
        if self.radii is None:
            return np.einsum("lm,lm...->...", self.coeffs, Y)
        return np.einsum("lmr,lm...->...r", self.coeffs, Y)

    def is_real(self, tol=1e-12):
        L = self.L
        m = np.arange(-L, L + 1)
        sign = ((-1.0) ** np.abs(m))[None, :]
        flip = self.coeffs[:, ::-1]
        if self.coeffs.ndim == 3:
            sign = sign[..., None]
        return bool(np.max(np.abs(self.coeffs - sign * np.conj(flip))) <= tol)

    def degree_part(self, parity):
        """Copy keeping only even (parity=0) or odd (parity=1) degrees."""
        c = self.coeffs.copy()
        c[(np.arange(self.L + 1) % 2) != parity] = 0.0
        return SphericalField(c, self.radii)

    def norm(self):
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def circle_profile(self, normal, n=256):
        """Radial profile of the average over the great circle orthogonal to normal."""
        if self.radii is None:
            raise DomainMismatch("field has no radial coefficients")
        avg = _circle_average_harmonics(self.L, normal, n)
        return GridFunction(self.radii, np.einsum("lmr,lm->r", self.coeffs, avg))

    def to_csv(self, path=None, header_comment=None):
        buf = io.StringIO()
        if header_comment:
            buf.write(f"# {header_comment}\n")
        wr = csv.writer(buf, lineterminator="\n")
        mask = _valid_mask(self.L)
        if self.radii is None:
            wr.writerow(["l", "m", "re", "im"])
            for l, mi in zip(*np.nonzero(mask)):
                v = self.coeffs[l, mi]
                wr.writerow([l, mi - self.L, repr(float(v.real)), repr(float(v.imag))])
        else:
            wr.writerow(["l", "m", "r", "re", "im"])
            for l, mi in zip(*np.nonzero(mask)):
                for r, v in zip(self.radii, self.coeffs[l, mi]):
                    wr.writerow([l, mi - self.L, repr(float(r)), repr(float(v.real)), repr(float(v.imag))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _unit(normal):
    n = np.asarray(normal, dtype=float)
    nn = np.linalg.norm(n)
    if abs(nn - 1.0) > 1e-12:
        raise OutOfDomain("plane normal must be a unit vector")
    return n / nn


def _circle_frame(n):
    """Orthonormal u, v spanning the plane orthogonal to each unit normal n (..., 3)."""
    n = np.asarray(n, dtype=float)
    ref = np.where(np.abs(n[..., 2:3]) < 0.9, [0.0, 0.0, 1.0], [1.0, 0.0, 0.0])
    u = np.cross(n, ref)
    u /= np.linalg.norm(u, axis=-1, keepdims=True)
    v = np.cross(n, u)
    return u, v


def _circle_points(normals, n):
    u, v = _circle_frame(normals)
    t = 2 * np.pi * np.arange(n) / n
    return (np.cos(t)[:, None] * u[..., None, :] + np.sin(t)[:, None] * v[..., None, :])


def _circle_average_harmonics(L, normal, n=256):
    pts = _circle_points(_unit(normal), n)
    return _harmonics(L, pts).mean(axis=-1)


def great_circle_average(field, normal, n=256):
    """Average of the field over the great circle orthogonal to the unit normal."""
    pts = _circle_points(_unit(normal), n)
    vals = field(pts)
    return vals.mean(axis=0) if field.radii is not None else complex(np.mean(vals))


def normal_grid(L):
    """Gauss-Legendre in cos(theta) x uniform longitude, (2L+2)^2 nodes, weights sum 4 pi."""
    n = 2 * L + 2
    x, wx = np.polynomial.legendre.leggauss(n)
    phi = 2 * np.pi * np.arange(n) / n
    st = np.sqrt(1 - x**2)
    xyz = np.stack([st[:, None] * np.cos(phi)[None, :],
                    st[:, None] * np.sin(phi)[None, :],
                    np.broadcast_to(x[:, None], (n, n))], axis=-1).reshape(-1, 3)
    wts = (wx[:, None] * np.full(n, 2 * np.pi / n)[None, :]).reshape(-1)
    return xyz, wts


def project(values, xyz, wts, L, scale=0.0):
    """Coefficients up to degree L of samples on a quadrature grid, plus the residual ratio.

    The residual energy is measured against max(sample energy, scale).
    """
    Y = _harmonics(L, xyz)
    c = np.einsum("lmi,i,i...->lm...", np.conj(Y), wts, values)
    c[~_valid_mask(L)] = 0.0
    back = np.einsum("lm...,lmi->i...", c, Y)
    tot = np.einsum("i,i...->...", wts, np.abs(values) ** 2)
    res = np.einsum("i,i...->...", wts, np.abs(values - back) ** 2)
    den = np.maximum(tot, scale)
    ratio = float(np.max(res / np.maximum(den, 1e-300))) if np.max(den) > 0 else 0.0
    return c, ratio


def _average_on_grid(field, xyz, n=256):
    pts = _circle_points(xyz, n)  # (N, n, 3)
    vals = field(pts)
    return vals.mean(axis=1)


def funk_forward(field, n_circle=256, residual_tol=1e-8):
    """Great-circle averages as a field of the plane normal, re-projected on harmonics."""
    xyz, wts = normal_grid(field.L)
    vals = _average_on_grid(field, xyz, n_circle)
    # energy of the input sets the scale, so a vanishing output is not flagged
    scale = np.sum(np.abs(field.coeffs) ** 2, axis=(0, 1))
    c, ratio = project(vals, xyz, wts, field.L, scale)
    if ratio > residual_tol:
        raise ProjectionResidual(f"off-band energy ratio {ratio:.2e} above {residual_tol:g}")
    return SphericalField(c, field.radii)


def funk_eigenvalues(L, n_circle=256):
    """mu_l: average of Y_l0 over the equator divided by its value at the pole."""
    eq = _circle_average_harmonics(L, [0.0, 0.0, 1.0], n_circle)
    pole = _harmonics(L, np.array([0.0, 0.0, 1.0]))
    return (eq[:, L] / pole[:, L]).real


def funk_even_recover(transformed, n_circle=256, threshold=1e-12):
    """Divide even degrees by mu_l and zero the odd ones."""
    L = transformed.L
    mu = funk_eigenvalues(L, n_circle)
    even = np.arange(0, L + 1, 2)
    if np.any(np.abs(mu[even]) < threshold):
        bad = even[np.abs(mu[even]) < threshold]
        raise IllConditioned(f"eigenvalues vanish for degrees {bad.tolist()}")
    c = np.zeros_like(transformed.coeffs)
    for l in even:
        c[l] = transformed.coeffs[l] / mu[l]
    return SphericalField(c, transformed.radii)


def rotation_matrix(axis, angle):
    """Rodrigues rotation about a unit axis."""
    k = _unit(axis)
    Kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + np.sin(angle) * Kx + (1 - np.cos(angle)) * Kx @ Kx


def rotate(field, Q):
    """Field g(x) = f(Q^T x), computed by sampling and re-projection."""
    Q = np.asarray(Q, dtype=float)
    xyz, wts = normal_grid(field.L)
    vals = field(xyz @ Q)  # rows are Q^T x
    c, _ = project(vals, xyz, wts, field.L)
    return SphericalField(c, field.radii)


def random_field(L, rng, real=True, parity=None, radii=None):
    """Random coefficients, optionally real-valued and of one degree parity."""
    shape = (L + 1, 2 * L + 1) + (() if radii is None else (len(radii),))
    c = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    c[~_valid_mask(L)] = 0.0
    if parity is not None:
        c[(np.arange(L + 1) % 2) != parity] = 0.0
    if real:
        m = np.arange(-L, L + 1)
        sign = (-1.0) ** np.abs(m)
        if radii is not None:
            sign = sign[:, None]
        c = 0.5 * (c + sign * np.conj(c[:, ::-1]))
    return SphericalField(c, radii)
