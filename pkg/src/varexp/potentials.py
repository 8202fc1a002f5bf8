"""Maximal function, Riesz potentials, Wolff and Havin-Maz'ya potentials.

Lattice fields are treated as piecewise constant on cells and integrated by
the midpoint rule.  Radial profiles are integrated against the exact
spherical means of the kernel (see :mod:`varexp._radial`), so the only
discretization there is the shell-wise constant profile itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _radial
from .errors import GridError, SupercriticalExponentError, VarExpError
from .fields import (Domain, ExponentField, RadialDomain, ScalarField, ball_volume,
                     sphere_area)

CONVENTIONS = ("alpha-at-x", "alpha-at-y")
WOLFF_PER_DECADE = 512


@dataclass(frozen=True)
class RatioStats:
    """Summary of a family of ratios (one per sample point or case)."""

    min: float
    max: float
    mean: float
    values: np.ndarray = field(repr=False)
    trend: float | None = None

    @classmethod
    def of(cls, values, trend=None) -> "RatioStats":
        v = np.asarray(values, dtype=float)
        return cls(float(v.min()), float(v.max()), float(v.mean()), v, trend)

    def to_dict(self) -> dict:
        return {"min": self.min, "max": self.max, "mean": self.mean,
                "refinement_trend": self.trend, "values": self.values.tolist()}


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _as_exponent(a, domain) -> np.ndarray:
    """Per-cell samples of a field or a broadcast constant."""
    if isinstance(a, ScalarField):
        if a.domain != domain:
            raise VarExpError("exponent and field live on different domains")
        return np.asarray(a.values)
    return np.full(domain.size, float(a))


def _at_point(a, x) -> float:
    if isinstance(a, ScalarField):
        return float(np.ravel(a.evaluate(np.asarray(x, dtype=float)))[0])
    return float(a)


def _radius_of(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(abs(x)) if x.ndim == 0 else float(np.linalg.norm(x))


def _points(domain, points):
    if points is None:
        return domain.points
    if domain.is_radial:
        pts = np.asarray(points, dtype=float)
        return np.abs(pts) if pts.ndim <= 1 else np.linalg.norm(pts, axis=-1)
    return np.atleast_2d(np.asarray(points, dtype=float))


def log_radius_grid(r_min: float, r_max: float, per_decade: int = WOLFF_PER_DECADE):
    """Edges and geometric midpoints of a log-spaced radius grid."""
    if not 0 < r_min < r_max:
        raise GridError("radius grid needs 0 < r_min < r_max")
    k = max(2, int(math.ceil(per_decade * math.log10(r_max / r_min))))
    edges = np.geomspace(r_min, r_max, k + 1)
    return edges, np.sqrt(edges[:-1] * edges[1:])


# ---------------------------------------------------------------------------
# Riesz potentials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KernelSpec:
    """Riesz kernel |x - y|^{alpha - n} with alpha taken at x or at y.

    ``cutoff=None`` selects the default: two cell diameters on lattices and
    no cutoff on radial profiles (whose singular shell is integrated exactly).
    """

    alpha: object
    convention: str = "alpha-at-x"
    cutoff: float | None = None

    def __post_init__(self):
        if self.convention not in CONVENTIONS:
            raise VarExpError(f"unknown kernel convention {self.convention!r}")
        if self.cutoff is not None and self.cutoff < 0:
            raise VarExpError("kernel cutoff must be nonnegative")
        a = self.alpha.values if isinstance(self.alpha, ScalarField) else np.atleast_1d(self.alpha)
        if np.any(np.asarray(a) <= 0):
            raise VarExpError("alpha must be positive")

    def cutoff_for(self, domain) -> float:
        if self.cutoff is not None:
            return self.cutoff
        return 0.0 if domain.is_radial else 2.0 * domain.cell_diameter

    def _check_range(self, domain):
        a = _as_exponent(self.alpha, domain)
        if np.any(a >= domain.dimension):
            raise VarExpError("alpha must lie in (0, n)")


def excluded_ball_bound(f: ScalarField, k: KernelSpec, x=None) -> float:
    """Bound ||f||_inf sigma_n eps^alpha / alpha on the part of the potential
    removed by the cutoff ball."""
    eps = k.cutoff_for(f.domain)
    if eps == 0:
        return 0.0
    alpha = (_at_point(k.alpha, x) if x is not None and k.convention == "alpha-at-x"
             else float(np.min(_as_exponent(k.alpha, f.domain))))
    return float(np.max(np.abs(f.values))) * sphere_area(f.domain.dimension) * eps ** alpha / alpha


def _lattice_riesz(f, k, pts, local_correction=False, chunk=2048):
    dom = f.domain
    n = dom.dimension
    eps = k.cutoff_for(dom)
    g = np.abs(f.values)
    nz = g > 0
    ys, gw = dom.points[nz], (g * dom.weights)[nz]
    a_y = _as_exponent(k.alpha, dom)[nz]
    a_x = (np.array([_at_point(k.alpha, p) for p in pts]) if k.convention == "alpha-at-x"
           else None)
    out = np.zeros(len(pts))
    for s in range(0, len(pts), chunk):
        P = pts[s:s + chunk]
        dist = np.sqrt(((P[:, None, :] - ys[None, :, :]) ** 2).sum(-1))
        if eps == 0 and np.any(dist < 1e-12 * dom.cell_diameter):
            raise VarExpError("singular cell requires cutoff")
        expo = (a_x[s:s + chunk, None] if a_x is not None else a_y[None, :]) - n
        with np.errstate(divide="ignore"):
            kern = np.where(dist > eps, dist ** expo, 0.0)
        out[s:s + chunk] = kern @ gw
    if local_correction and eps > 0:
        fx = g[dom.nearest(pts)]
        ax = a_x if a_x is not None else np.array([_at_point(k.alpha, p) for p in pts])
        out += fx * sphere_area(n) * eps ** ax / ax
    return out


def _radial_matrix(domain, k, d):
    a_y = _as_exponent(k.alpha, domain)
    if k.convention == "alpha-at-x":
        a_x = np.array([_at_point(k.alpha, r) for r in d])
        alpha = a_x[:, None]
    else:
        alpha = a_y[None, :]
    return _radial.kernel_matrix(domain, d, alpha)


def riesz_values(f: ScalarField, k: KernelSpec, points=None, local_correction: bool = False):
    """Riesz potential of |f| at ``points`` (default: every sample point)."""
    k._check_range(f.domain)
    pts = _points(f.domain, points)
    if f.domain.is_radial:
        return _radial_matrix(f.domain, k, pts) @ np.abs(f.values)
    return _lattice_riesz(f, k, pts, local_correction)


def riesz(f: ScalarField, k: KernelSpec, x, local_correction: bool = False) -> float:
    """I_alpha |f| at one point.

    On lattices the cells with |x - y| <= eps are left out; set
    ``local_correction`` to add the excluded ball's contribution for a
    locally constant f.
    """
    if f.domain.is_radial:
        pts = np.array([_radius_of(x)])
    else:
        pts = np.atleast_2d(np.asarray(x, dtype=float))
    return float(riesz_values(f, k, pts, local_correction)[0])


def riesz_field(f: ScalarField, k: KernelSpec, local_correction: bool = False,
                name: str = "riesz") -> ScalarField:
    return ScalarField(f.domain, riesz_values(f, k, None, local_correction), name)


# ---------------------------------------------------------------------------
# maximal function
# ---------------------------------------------------------------------------


def _lattice_ball_counts(dom: Domain, x, radii) -> np.ndarray:
    """Number of centers of the infinite cell lattice inside the open balls B(x, r)."""
    h = dom.spacing
    t = (np.asarray(x, dtype=float) - np.array(dom.lower)) / h - 0.5

    def count_1d(t1, half):
        return np.maximum(np.ceil(t1 + half) - np.floor(t1 - half) - 1, 0)

    r = np.asarray(radii, dtype=float)
    if dom.dimension == 1:
        return count_1d(t[0], r / h[0])
    kmax = int(np.ceil(r.max() / h[1])) + 2
    rows = np.arange(np.floor(t[1]) - kmax, np.ceil(t[1]) + kmax + 1)
    dy = (rows - t[1]) * h[1]
    half2 = r[:, None] ** 2 - dy[None, :] ** 2
    half = np.sqrt(np.maximum(half2, 0.0)) / h[0]
    c = np.where(half2 > 0, count_1d(t[0], half), 0.0)
    return c.sum(axis=1)


def default_maximal_radii(domain, x=None, per_decade: int | None = None):
    """Log-spaced radii over (h, diam]: 512 per decade on lattices, 64 on radial profiles."""
    if domain.is_radial:
        per_decade = per_decade or 64
        d = _radius_of(x) if x is not None else domain.edges[1]
        r_lo = max(domain.edges[1] - domain.edges[0], 1e-3 * d) if d > 0 else domain.edges[1]
        return log_radius_grid(r_lo, domain.diameter, per_decade)[0]
    h = float(np.max(domain.spacing))
    return log_radius_grid(h * (1 + 1e-9), domain.diameter, per_decade or WOLFF_PER_DECADE)[0]


def ball_averages(f: ScalarField, x, radii) -> np.ndarray:
    """Averages of |f| over B(x, r) for each radius (f = 0 off the domain)."""
    radii = np.asarray(radii, dtype=float)
    if radii.size == 0:
        raise GridError("empty radius grid")
    dom = f.domain
    g = np.abs(f.values)
    if dom.is_radial:
        mass = _radial.radial_ball_mass(dom, g, _radius_of(x), radii)
        return mass / (ball_volume(dom.dimension) * radii ** dom.dimension)
    d = np.linalg.norm(dom.points - np.asarray(x, dtype=float), axis=1)
    order = np.argsort(d, kind="stable")
    cum = np.concatenate([[0.0], np.cumsum((g * dom.weights)[order])])
    mass = cum[np.searchsorted(d[order], radii, side="left")]
    return mass / (_lattice_ball_counts(dom, x, radii) * dom.cell_volume)


def maximal(f: ScalarField, x, radii=None) -> float:
    """Hardy-Littlewood maximal function of |f| at x over a radius grid."""
    radii = default_maximal_radii(f.domain, x) if radii is None else np.asarray(radii, float)
    return float(np.max(ball_averages(f, x, radii)))


def maximal_values(f: ScalarField, points=None, radii=None) -> np.ndarray:
    pts = _points(f.domain, points)
    return np.array([maximal(f, p, radii) for p in pts])


# ---------------------------------------------------------------------------
# measures and Wolff potentials
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MeasureSpec:
    """Nonnegative density (optional) plus point atoms ``(location, mass)``."""

    density: ScalarField | None = None
    atoms: tuple = ()
    domain: object = None

    def __post_init__(self):
        if self.density is None and self.domain is None:
            raise VarExpError("a measure needs a density or an explicit domain")
        if self.density is not None and np.any(self.density.values < 0):
            raise VarExpError("density must be nonnegative")
        atoms = tuple((np.atleast_1d(np.asarray(loc, dtype=float)), float(m))
                      for loc, m in self.atoms)
        if any(m <= 0 for _, m in atoms):
            raise VarExpError("atom masses must be positive")
        object.__setattr__(self, "atoms", atoms)
        if self.domain is None:
            object.__setattr__(self, "domain", self.density.domain)
        if self.domain.is_radial and any(np.any(loc != 0) for loc, _ in atoms):
            raise VarExpError("radial measures only carry atoms at the origin")

    @property
    def total_mass(self) -> float:
        dens = 0.0 if self.density is None else float(np.dot(self.density.values,
                                                             self.domain.weights))
        return dens + sum(m for _, m in self.atoms)


def ball_mass(mu: MeasureSpec, x, r) -> np.ndarray | float:
    """mu(B(x, r)) for the open ball; ``r`` may be an array."""
    scalar = np.ndim(r) == 0
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r <= 0):
        raise GridError("ball radius must be positive")
    dom = mu.domain
    out = np.zeros(r.size)
    if mu.density is not None:
        if dom.is_radial:
            out += _radial.radial_ball_mass(dom, mu.density.values, _radius_of(x), r)
        else:
            d = np.linalg.norm(dom.points - np.asarray(x, dtype=float), axis=1)
            order = np.argsort(d, kind="stable")
            cum = np.concatenate([[0.0], np.cumsum((mu.density.values * dom.weights)[order])])
            out += cum[np.searchsorted(d[order], r, side="left")]
    for loc, m in mu.atoms:
        dist = _radius_of(x) if dom.is_radial else float(np.linalg.norm(loc - np.asarray(x, float)))
        out += np.where(dist < r, m, 0.0)
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class WolffResult:
    """Value over the radius grid; ``divergent`` flags an integrand still
    growing as r decreases to the bottom of the grid."""

    value: float
    divergent: bool
    r_min: float

    def __float__(self):
        return self.value


def _default_r_min(domain) -> float:
    if domain.is_radial:
        if domain.edges[0] > 0:
            return domain.edges[0]
        return domain.edges[1] - domain.edges[0]
    return float(np.max(domain.spacing))


def wolff(mu: MeasureSpec, alpha, p, x, R: float, r_grid=None, r_min: float | None = None,
          per_decade: int = WOLFF_PER_DECADE) -> WolffResult:
    """Truncated Wolff potential with alpha and p frozen at x.

    ``r_grid`` are the edges of a log-spaced grid over [r_min, R]; the
    integrand is evaluated at geometric midpoints.
    """
    a, pp = _at_point(alpha, x), _at_point(p, x)
    if pp <= 1:
        raise VarExpError("Wolff potential needs p(x) > 1")
    n = mu.domain.dimension
    if r_grid is None:
        edges, mids = log_radius_grid(r_min or _default_r_min(mu.domain), R, per_decade)
    else:
        edges = np.asarray(r_grid, dtype=float)
        if edges.ndim != 1 or edges.size < 2 or edges[0] <= 0 or np.any(np.diff(edges) <= 0):
            raise GridError("r_grid must be positive and strictly increasing")
        mids = np.sqrt(edges[:-1] * edges[1:])
    m = ball_mass(mu, x, mids)
    integrand = (m / mids ** (n - a * pp)) ** (1.0 / (pp - 1.0))
    value = float(np.dot(integrand, np.diff(np.log(edges))))
    # refinement rule: growth by 2 or more over the bottom decade of the grid
    ten = np.searchsorted(mids, 10 * mids[0])
    div = bool(ten < mids.size and integrand[0] > 0
               and integrand[0] >= 2.0 * integrand[min(ten, mids.size - 1)])
    return WolffResult(value, div, float(edges[0]))


def wolff_values(mu: MeasureSpec, alpha, p, R: float, points=None,
                 per_decade: int = 64, r_min: float | None = None) -> np.ndarray:
    pts = _points(mu.domain, points)
    return np.array([wolff(mu, alpha, p, x, R, r_min=r_min, per_decade=per_decade).value
                     for x in pts])


def wolff_dirac_closed_form(n, alpha, p, d, R):
    """Wolff potential of a unit atom at the origin, evaluated at |x| = d < R."""
    g = (n - alpha * p) / (p - 1)
    return (p - 1) / (n - alpha * p) * (d ** (-g) - R ** (-g))


# ---------------------------------------------------------------------------
# Havin-Maz'ya potential
# ---------------------------------------------------------------------------


def havin_mazya_inner(f: ScalarField, alpha, p: ExponentField,
                      local_correction: bool = False) -> ScalarField:
    """The materialized inner potential (I_alpha f)^{1/(p-1)} on the grid."""
    if np.any(np.asarray(f.values) < 0):
        raise VarExpError("Havin-Maz'ya potential needs f >= 0")
    pv = _as_exponent(p, f.domain)
    if pv.min() <= 1:
        raise VarExpError("Havin-Maz'ya potential needs p- > 1")
    k = KernelSpec(alpha, "alpha-at-y")
    inner = riesz_values(f, k, None, local_correction)
    return ScalarField(f.domain, inner ** (1.0 / (pv - 1.0)), "inner")


def havin_mazya(f: ScalarField, alpha, p: ExponentField, points=None,
                local_correction: bool = False, inner: ScalarField | None = None):
    """I_alpha((I_alpha f)^{1/(p-1)}) at ``points`` (default: all samples)."""
    g = inner if inner is not None else havin_mazya_inner(f, alpha, p, local_correction)
    return riesz_values(g, KernelSpec(alpha, "alpha-at-y"), points, local_correction)


# ---------------------------------------------------------------------------
# comparison checks
# ---------------------------------------------------------------------------


def kernel_equivalence_check(f: ScalarField, alpha, points, local_correction=True) -> RatioStats:
    """Ratios of the alpha-at-x potential to the alpha-at-y potential."""
    kx = KernelSpec(alpha, "alpha-at-x")
    ky = KernelSpec(alpha, "alpha-at-y")
    a = riesz_values(f, kx, points, local_correction)
    b = riesz_values(f, ky, points, local_correction)
    ok = b > 0
    return RatioStats.of(a[ok] / b[ok])


def hedberg_check(f: ScalarField, p: ExponentField, alpha, points, radii=None,
                  local_correction: bool = True) -> RatioStats:
    """Ratios I_alpha f(x) / (M f(x))^{1 - alpha(x) p(x) / n} for ||f||_p <= 1."""
    from .spaces import luxemburg_norm

    dom = f.domain
    n = dom.dimension
    pts = _points(dom, points)
    a_pts = np.array([_at_point(alpha, x) for x in pts])
    p_pts = np.array([_at_point(p, x) for x in pts])
    ap = _as_exponent(alpha, dom) * _as_exponent(p, dom)
    if ap.max() >= n:
        raise SupercriticalExponentError("supercritical exponent: (alpha p)+ >= n")
    if luxemburg_norm(f, p).value > 1 + 1e-9:
        raise VarExpError("normalize input: Luxemburg norm exceeds 1")
    I = riesz_values(f, KernelSpec(alpha, "alpha-at-x"), pts, local_correction)
    M = np.array([maximal(f, x, radii) for x in pts])
    ok = M > 0
    return RatioStats.of(I[ok] / M[ok] ** (1.0 - a_pts[ok] * p_pts[ok] / n))


def wolff_vs_havin(f: ScalarField, alpha, p: ExponentField, points, R: float,
                   per_decade: int = 64) -> RatioStats:
    """Ratios W(x) / V(x) of the Wolff potential of f dx to the Havin-Maz'ya potential."""
    pts = _points(f.domain, points)
    mu = MeasureSpec(density=abs(f))
    W = wolff_values(mu, alpha, p, R, pts, per_decade)
    V = havin_mazya(abs(f), alpha, p, pts)
    ok = V > 0
    if np.any(W[~ok] > 0):
        raise VarExpError("Wolff potential positive where the Havin-Maz'ya potential vanishes")
    if not ok.any():
        return RatioStats.of([0.0])
    return RatioStats.of(W[ok] / V[ok])
