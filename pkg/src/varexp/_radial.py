"""Geometry of radial profiles: spherical means of power kernels and
the fraction of a sphere covered by an off-center ball."""

from __future__ import annotations

import warnings

import numpy as np
from scipy import integrate
from scipy.special import betainc, hyp2f1

from .fields import sphere_area

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
_G4_X, _G4_W = np.polynomial.legendre.leggauss(4)


def _shell_nodes(domain, order=4):
    """Gauss-Legendre nodes (N, order) and weights carrying sigma rho^{n-1}."""
    x, w = (_G4_X, _G4_W) if order == 4 else np.polynomial.legendre.leggauss(order)
    edges = np.asarray(domain.edges)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (b - a) * x + 0.5 * (b + a)
    weights = 0.5 * (b - a) * w * sphere_area(domain.dimension) * nodes ** (domain.dimension - 1)
    return nodes, weights


def spherical_mean(n: int, lam, d, rho):
    """Mean of |x - y|^{-lam} over |y| = rho, for |x| = d.

    Uses the closed form max^{-lam} 2F1(lam/2, lam/2 - n/2 + 1; n/2; (min/max)^2).
    """
    lam = np.asarray(lam, dtype=float)
    d = np.asarray(d, dtype=float)
    rho = np.asarray(rho, dtype=float)
    big = np.maximum(d, rho)
    small = np.minimum(d, rho)
    z = (small / big) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        out = big ** (-lam) * hyp2f1(lam / 2, lam / 2 - n / 2 + 1, n / 2, z)
    return out


def cap_fraction(n: int, d, rho, r):
    """Fraction of the sphere |y| = rho lying in the open ball B(x, r), |x| = d > 0."""
    d = np.asarray(d, dtype=float)
    rho = np.asarray(rho, dtype=float)
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        c = (rho ** 2 + d ** 2 - r ** 2) / (2.0 * rho * d)
    c = np.clip(np.nan_to_num(c, nan=-1.0, posinf=1.0, neginf=-1.0), -1.0, 1.0)
    x = 0.5 * (1.0 - c)
    if n == 3:
        return x
    a = 0.5 * (n - 1)
    return betainc(a, a, x)


def _shell_integral(n, lam, d, a, b):
    """Integral of sigma rho^{n-1} m(d, rho) over [a, b] with the singular
    point rho = d treated as a breakpoint."""
    sigma = sphere_area(n)

    def g(rho):
        return sigma * rho ** (n - 1) * float(spherical_mean(n, lam, d, rho))

    pts = [d] if a < d < b else None
    with warnings.catch_warnings():
        # roundoff warnings near the integrable pole are expected for small alpha
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(g, a, b, points=pts, limit=200, epsabs=0.0, epsrel=1e-9)
    return val


_CACHE: dict = {}
_CACHE_SIZE = 16


def kernel_matrix(domain, d, alpha, near: int = 2) -> np.ndarray:
    """K[j, i] with (K @ f)[j] the Riesz potential at radius d[j] of the
    shell-wise constant profile f.

    ``alpha`` broadcasts to shape (len(d), N): use alpha[:, None] for the
    exponent taken at the evaluation point and alpha[None, :] for the
    exponent taken at the integration variable.
    """
    n = domain.dimension
    d = np.atleast_1d(np.asarray(d, dtype=float))
    edges = np.asarray(domain.edges)
    a, b = edges[:-1], edges[1:]
    N = domain.size
    alpha = np.broadcast_to(np.asarray(alpha, dtype=float), (d.size, N))
    key = (domain, d.tobytes(), np.ascontiguousarray(alpha).tobytes(), alpha.shape, near)
    if key in _CACHE:
        return _CACHE[key]
    lam = n - alpha
    nodes, wq = _shell_nodes(domain)
    K = np.einsum("jiq,iq->ji", spherical_mean(n, lam[..., None], d[:, None, None],
                                               nodes[None]), wq)
    sigma = sphere_area(n)
    home = np.clip(np.searchsorted(edges, d, side="right") - 1, 0, N - 1)
    for j, dj in enumerate(d):
        if dj == 0:
            K[j] = sigma * (b ** alpha[j] - a ** alpha[j]) / alpha[j]
            continue
        lo, hi = max(0, home[j] - near), min(N, home[j] + near + 1)
        for i in range(lo, hi):
            K[j, i] = _shell_integral(n, lam[j, i], dj, a[i], b[i])
    K.flags.writeable = False
    if len(_CACHE) >= _CACHE_SIZE:
        _CACHE.pop(next(iter(_CACHE)))
    _CACHE[key] = K
    return K


def radial_ball_mass(domain, density: np.ndarray, d: float, r) -> np.ndarray:
    """Mass of a shell-wise constant density in B(x, r) for |x| = d."""
    n = domain.dimension
    r = np.atleast_1d(np.asarray(r, dtype=float))
    edges = np.asarray(domain.edges)
    a, b = edges[:-1], edges[1:]
    if d == 0:
        return (domain.weights[None, :] * domain.shell_fraction_below(r[:, None])) @ density
    nodes, wq = _shell_nodes(domain)
    F = np.einsum("kiq,iq->ki", cap_fraction(n, d, nodes[None], r[:, None, None]), wq)
    mass = F @ density
    # shells containing a breakpoint of the cap fraction are integrated
    # piecewise over the part where the fraction is strictly between 0 and 1
    N = domain.size
    i1 = np.searchsorted(edges, np.abs(d - r), side="right") - 1
    i2 = np.searchsorted(edges, d + r, side="right") - 1
    k = np.arange(r.size)
    for idx, keep in ((i1, i1 >= 0), (i2, i2 != i1)):
        keep = keep & (idx >= 0) & (idx < N)
        kk, ii = k[keep], idx[keep]
        exact = _shell_cap_mass(n, d, r[kk], a[ii], b[ii])
        mass[kk] += density[ii] * (exact - F[kk, ii])
    return mass


def _shell_cap_mass(n, d, r, a, b):
    """Vectorized mass of the unit density on shells [a, b] inside B(x, r)."""
    sigma = sphere_area(n)
    top = np.clip(r - d, a, b)
    inside = np.where(r > d, sigma / n * (top ** n - a ** n), 0.0)
    lo, hi = np.maximum(a, np.abs(d - r)), np.minimum(b, d + r)
    hi = np.maximum(hi, lo)
    x = 0.5 * (hi - lo)[:, None] * _GL_X + 0.5 * (hi + lo)[:, None]
    w = 0.5 * (hi - lo)[:, None] * _GL_W * sigma * x ** (n - 1)
    return inside + np.sum(w * cap_fraction(n, d, x, r[:, None]), axis=1)
