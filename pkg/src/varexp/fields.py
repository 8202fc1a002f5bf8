"""Domains, sampled scalar fields and variable exponents.

Two discretizations are supported:

* :class:`Domain` -- a uniform lattice of cells over a box or a ball in one or
  two dimensions.  Fields are sampled at cell centers and every integral is a
  midpoint sum.
* :class:`RadialDomain` -- spherical shells ``{a_i < |x| < b_i}`` in any
  dimension ``n >= 2``.  Radial functions are sampled at one radius per shell
  and integrated against the exact shell volumes.

Both expose ``points``, ``weights``, ``size``, ``dimension`` and ``measure`` so
that the modular and norm code in :mod:`varexp.spaces` is representation
agnostic.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.special import gamma

from .errors import SupercriticalExponentError, VarExpError

E = math.e


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2) / gamma(n / 2)


def ball_volume(n: int) -> float:
    """Lebesgue measure of the unit ball in R^n."""
    return sphere_area(n) / n


# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Domain:
    """Uniform cell lattice over an axis-aligned box or a ball.

    Cells whose centers fall outside the geometry, or within ``inner_cutoff``
    of ``singular_point``, are dropped.
    """

    kind: str
    lower: tuple
    upper: tuple
    resolution: int
    inner_cutoff: float = 0.0
    singular_point: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("box", "ball"):
            raise VarExpError(f"unknown domain kind {self.kind!r}")
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))
        if self.singular_point is not None:
            object.__setattr__(self, "singular_point", tuple(float(v) for v in self.singular_point))
        n = len(self.lower)
        if n not in (1, 2) or len(self.upper) != n:
            raise VarExpError("lattice domains support dimension 1 or 2")
        if int(self.resolution) < 1:
            raise VarExpError("resolution must be a positive integer")
        object.__setattr__(self, "resolution", int(self.resolution))
        if any(u <= l for l, u in zip(self.lower, self.upper)):
            raise VarExpError("box corners must satisfy lower < upper")
        if self.inner_cutoff < 0:
            raise VarExpError("inner_cutoff must be nonnegative")
        if self.size == 0:
            raise VarExpError("domain contains no cell centers")

    @classmethod
    def box(cls, lower, upper, resolution, inner_cutoff=0.0, singular_point=None):
        return cls("box", tuple(np.atleast_1d(lower)), tuple(np.atleast_1d(upper)),
                   resolution, inner_cutoff, singular_point)

    @classmethod
    def ball(cls, center, radius, resolution, inner_cutoff=0.0, singular_point=None):
        c = np.atleast_1d(np.asarray(center, dtype=float))
        return cls("ball", tuple(c - radius), tuple(c + radius), resolution,
                   inner_cutoff, singular_point)

    # geometry ------------------------------------------------------------
    @property
    def dimension(self) -> int:
        return len(self.lower)

    @property
    def is_radial(self) -> bool:
        return False

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (np.array(self.lower) + np.array(self.upper))

    @property
    def radius(self) -> float | None:
        if self.kind != "ball":
            return None
        return 0.5 * (self.upper[0] - self.lower[0])

    @property
    def spacing(self) -> np.ndarray:
        return (np.array(self.upper) - np.array(self.lower)) / self.resolution

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def cell_diameter(self) -> float:
        return float(np.linalg.norm(self.spacing))

    @property
    def diameter(self) -> float:
        if self.kind == "ball":
            return 2.0 * self.radius
        return float(np.linalg.norm(np.array(self.upper) - np.array(self.lower)))

    @property
    def marked_point(self) -> np.ndarray:
        if self.singular_point is not None:
            return np.array(self.singular_point)
        return self.center

    @cached_property
    def _full_centers(self) -> np.ndarray:
        h = self.spacing
        axes = [self.lower[k] + (np.arange(self.resolution) + 0.5) * h[k]
                for k in range(self.dimension)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @cached_property
    def _mask(self) -> np.ndarray:
        pts = self._full_centers
        keep = np.ones(len(pts), dtype=bool)
        if self.kind == "ball":
            keep &= np.linalg.norm(pts - self.center, axis=1) < self.radius
        if self.inner_cutoff > 0:
            keep &= np.linalg.norm(pts - self.marked_point, axis=1) >= self.inner_cutoff
        return keep

    @cached_property
    def _lookup(self) -> np.ndarray:
        table = np.full(self._mask.size, -1, dtype=np.int64)
        table[self._mask] = np.arange(int(self._mask.sum()))
        return table

    @cached_property
    def points(self) -> np.ndarray:
        pts = self._full_centers[self._mask]
        pts.flags.writeable = False
        return pts

    @property
    def size(self) -> int:
        return int(self._mask.sum())

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.full(self.size, self.cell_volume)
        w.flags.writeable = False
        return w

    @property
    def measure(self) -> float:
        return self.size * self.cell_volume

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if self.kind == "ball":
            return bool(np.linalg.norm(x - self.center) < self.radius)
        return bool(np.all(x > np.array(self.lower)) and np.all(x < np.array(self.upper)))

    def nearest(self, x) -> np.ndarray:
        """Index of the retained cell nearest to each point of ``x`` (shape (..., n))."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        h = self.spacing
        idx = np.floor((x - np.array(self.lower)) / h).astype(np.int64)
        idx = np.clip(idx, 0, self.resolution - 1)
        flat = np.ravel_multi_index(tuple(idx.T), (self.resolution,) * self.dimension)
        out = self._lookup[flat]
        missing = np.flatnonzero(out < 0)
        for m in missing:
            out[m] = int(np.argmin(np.linalg.norm(self.points - x[m], axis=1)))
        return out

    def cells_in_ball(self, center, radius) -> np.ndarray:
        d = np.linalg.norm(self.points - np.asarray(center, dtype=float), axis=1)
        return d < radius

    def refine(self, factor: int = 2) -> "Domain":
        return replace(self, resolution=self.resolution * factor)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "resolution": self.resolution,
               "inner_cutoff": self.inner_cutoff}
        if self.kind == "ball":
            out.update(center=list(self.center), radius=self.radius)
        else:
            out.update(lower=list(self.lower), upper=list(self.upper))
        if self.singular_point is not None:
            out["singular_point"] = list(self.singular_point)
        return out


@dataclass(frozen=True)
class RadialDomain:
    """Spherical shells between ``edges[0]`` and ``edges[-1]`` in R^n."""

    dimension: int
    edges: tuple

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=float)
        if self.dimension < 2:
            raise VarExpError("radial domains need dimension >= 2")
        if e.ndim != 1 or e.size < 2 or e[0] < 0 or np.any(np.diff(e) <= 0):
            raise VarExpError("radial edges must be nonnegative and strictly increasing")
        object.__setattr__(self, "edges", tuple(float(v) for v in e))

    @classmethod
    def log(cls, dimension, r_min, r_max, cells_per_decade=128):
        """Log-spaced shells.  Edges sit on the lattice 10**(k/cells_per_decade)
        so grids with the same density are nested when r_min shrinks."""
        if not 0 < r_min < r_max:
            raise VarExpError("need 0 < r_min < r_max")
        k0 = math.floor(math.log10(r_min) * cells_per_decade + 1e-9)
        k1 = math.ceil(math.log10(r_max) * cells_per_decade - 1e-9)
        edges = 10.0 ** (np.arange(k0, k1 + 1) / cells_per_decade)
        edges = edges[(edges > r_min * (1 + 1e-12)) & (edges < r_max * (1 - 1e-12))]
        edges = np.concatenate([[r_min], edges, [r_max]])
        return cls(dimension, tuple(edges))

    @classmethod
    def linear(cls, dimension, r_max, cells, r_min=0.0):
        return cls(dimension, tuple(np.linspace(r_min, r_max, cells + 1)))

    @property
    def is_radial(self) -> bool:
        return True

    @property
    def kind(self) -> str:
        return "radial"

    @property
    def inner_cutoff(self) -> float:
        return self.edges[0]

    @property
    def r_max(self) -> float:
        return self.edges[-1]

    @property
    def diameter(self) -> float:
        return 2.0 * self.r_max

    @cached_property
    def _edges(self) -> np.ndarray:
        return np.asarray(self.edges)

    @cached_property
    def points(self) -> np.ndarray:
        a, b = self._edges[:-1], self._edges[1:]
        mid = np.where(a > 0, np.sqrt(a * np.maximum(b, 0)), 0.5 * b)
        mid.flags.writeable = False
        return mid

    @property
    def radii(self) -> np.ndarray:
        return self.points

    @property
    def size(self) -> int:
        return len(self.edges) - 1

    @cached_property
    def weights(self) -> np.ndarray:
        a, b = self._edges[:-1], self._edges[1:]
        w = ball_volume(self.dimension) * (b ** self.dimension - a ** self.dimension)
        w.flags.writeable = False
        return w

    @property
    def measure(self) -> float:
        return float(self.weights.sum())

    @property
    def cells_per_decade(self) -> float:
        a, b = self._edges[-3], self._edges[-2]
        return 1.0 / math.log10(b / a) if a > 0 else float("nan")

    def nearest(self, r) -> np.ndarray:
        r = np.abs(np.atleast_1d(np.asarray(r, dtype=float)))
        if r.ndim > 1:
            r = np.linalg.norm(r, axis=-1)
        idx = np.searchsorted(self._edges, r, side="right") - 1
        return np.clip(idx, 0, self.size - 1)

    def shell_fraction_below(self, r: float) -> np.ndarray:
        """Fraction of each shell's volume lying in the ball ``|x| < r``."""
        n = self.dimension
        a, b = self._edges[:-1], self._edges[1:]
        inner = np.clip(r, a, b)
        return (inner ** n - a ** n) / (b ** n - a ** n)

    def to_dict(self) -> dict:
        return {"kind": "radial", "dimension": self.dimension,
                "r_min": self.edges[0], "r_max": self.edges[-1],
                "cells": self.size}


def domain_from_dict(spec: Mapping):
    kind = spec["kind"]
    if kind == "radial":
        return RadialDomain.log(int(spec["dimension"]), float(spec["r_min"]),
                                float(spec["r_max"]), int(spec.get("cells_per_decade", 128)))
    common = dict(resolution=int(spec["resolution"]),
                  inner_cutoff=float(spec.get("inner_cutoff", 0.0)),
                  singular_point=spec.get("singular_point"))
    if kind == "ball":
        return Domain.ball(spec["center"], float(spec["radius"]), **common)
    if kind == "box":
        return Domain.box(spec["lower"], spec["upper"], **common)
    raise VarExpError(f"unknown domain kind {kind!r}")


def _distance(domain, points, x0=None) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    if domain.is_radial:
        if x0 is not None and np.any(np.asarray(x0) != 0):
            raise VarExpError("radial domains only carry fields centered at the origin")
        return np.abs(points)
    if points.ndim == 1 and domain.dimension > 1:
        points = points[None, :]
    if points.ndim == 1:
        points = points[:, None]
    x0 = np.zeros(domain.dimension) if x0 is None else np.asarray(x0, dtype=float)
    return np.linalg.norm(points - x0, axis=-1)


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real function sampled on a domain (one value per cell or shell).

    ``formula`` optionally evaluates the same function exactly at arbitrary
    points: coordinate arrays of shape ``(..., n)`` on lattices, radii on
    radial domains.
    """

    domain: Domain | RadialDomain
    values: np.ndarray
    name: str = "field"
    formula: Callable | None = None
    params: Mapping = field(default_factory=dict)

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.size != self.domain.size:
            raise VarExpError(f"{self.name}: {v.size} values for {self.domain.size} cells")
        if not np.all(np.isfinite(v)):
            raise VarExpError(f"{self.name}: non-finite sample")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def representation(self) -> str:
        if self.formula is not None:
            return "closed-form"
        return "radial" if self.domain.is_radial else "lattice"

    def evaluate(self, x) -> np.ndarray:
        if self.formula is not None:
            return np.asarray(self.formula(np.asarray(x, dtype=float)), dtype=float)
        return self.values[self.domain.nearest(x)]

    def with_values(self, values, name=None) -> "ScalarField":
        return ScalarField(self.domain, values, name or self.name)

    def _scaled(self, c: float, name: str) -> "ScalarField":
        fn = self.formula
        return ScalarField(self.domain, c * self.values, name,
                           None if fn is None else (lambda x: c * fn(x)), self.params)

    def __mul__(self, c):
        if isinstance(c, ScalarField):
            _same_domain(self, c)
            return self.with_values(self.values * c.values, f"{self.name}*{c.name}")
        return self._scaled(float(c), self.name)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self._scaled(1.0 / float(c), self.name)

    def __add__(self, other):
        _same_domain(self, other)
        return self.with_values(self.values + other.values, f"{self.name}+{other.name}")

    def __abs__(self):
        fn = self.formula
        return ScalarField(self.domain, np.abs(self.values), self.name,
                           None if fn is None else (lambda x: np.abs(fn(x))), self.params)

    def power(self, q) -> "ScalarField":
        """|f|**q with q a constant or an array/field of pointwise exponents."""
        q = q.values if isinstance(q, ScalarField) else q
        return self.with_values(np.abs(self.values) ** q, f"|{self.name}|^q")

    def to_csv(self, path) -> None:
        write_csv(self, path)


@dataclass(frozen=True, eq=False)
class ExponentField(ScalarField):
    """Variable exponent with declared bounds and optional log-Hölder data.

    ``far_field`` is the limit value at infinity for exponents satisfying the
    decay condition; ``derivative`` is the radial derivative when known.
    """

    declared_bounds: tuple | None = None
    log_holder: float | None = None
    far_field: float | None = None
    derivative: Callable | None = None

    def __post_init__(self):
        super().__post_init__()
        v = self.values
        if np.any(v <= 0):
            raise VarExpError(f"{self.name}: exponents must be positive")
        lo, hi = (float(v.min()), float(v.max())) if self.declared_bounds is None \
            else (float(self.declared_bounds[0]), float(self.declared_bounds[1]))
        if not 0 < lo <= hi < math.inf:
            raise VarExpError(f"{self.name}: bounds must satisfy 0 < p- <= p+ < inf")
        slack = 1e-12 * max(1.0, hi)
        if v.min() < lo - slack or v.max() > hi + slack:
            raise VarExpError(f"{self.name}: samples leave the declared bounds [{lo}, {hi}]")
        object.__setattr__(self, "declared_bounds", (lo, hi))
        if self.log_holder is not None and self.log_holder < 0:
            raise VarExpError("log-Hölder constant must be nonnegative")

    @property
    def inf(self) -> float:
        """Smallest sample (the sampled surrogate of ess inf)."""
        return float(self.values.min())

    @property
    def sup(self) -> float:
        return float(self.values.max())

    @property
    def is_constant(self) -> bool:
        return bool(self.values.max() == self.values.min())

    def with_values(self, values, name=None) -> "ExponentField":
        return ExponentField(self.domain, values, name or self.name)

    def scaled(self, c: float, name=None) -> "ExponentField":
        """c * p, keeping closed form and log-Hölder metadata."""
        fn, dfn = self.formula, self.derivative
        lo, hi = sorted((c * self.declared_bounds[0], c * self.declared_bounds[1]))
        return ExponentField(
            self.domain, c * self.values, name or f"{c:g}*{self.name}",
            None if fn is None else (lambda x: c * fn(x)), self.params,
            declared_bounds=(lo, hi),
            log_holder=None if self.log_holder is None else abs(c) * self.log_holder,
            far_field=None if self.far_field is None else c * self.far_field,
            derivative=None if dfn is None else (lambda r: c * dfn(r)))

    def shifted(self, c: float, name=None) -> "ExponentField":
        """p + c, keeping closed form and log-Hölder metadata."""
        fn = self.formula
        lo, hi = self.declared_bounds
        return ExponentField(
            self.domain, self.values + c, name or f"{self.name}{c:+g}",
            None if fn is None else (lambda x: fn(x) + c), self.params,
            declared_bounds=(lo + c, hi + c), log_holder=self.log_holder,
            far_field=None if self.far_field is None else self.far_field + c,
            derivative=self.derivative)


def _same_domain(f, g):
    if f.domain != g.domain:
        from .errors import DomainMismatchError
        raise DomainMismatchError(f"{f.name} and {g.name} live on different domains")


def constant_exponent(domain, value: float, name="p") -> ExponentField:
    value = float(value)
    return ExponentField(domain, np.full(domain.size, value), name,
                         lambda x: np.full(np.shape(_distance(domain, x)), value),
                         {"family": "constant", "value": value},
                         declared_bounds=(value, value), log_holder=0.0,
                         far_field=value, derivative=lambda r: np.zeros_like(np.asarray(r, float)))


def _max_distance(domain, x0) -> float:
    if domain.is_radial:
        return domain.r_max
    corners = np.array(np.meshgrid(*zip(domain.lower, domain.upper), indexing="ij"))
    corners = corners.reshape(domain.dimension, -1).T
    return float(np.max(np.linalg.norm(corners - x0, axis=1)))


def _lipschitz_log_holder(lip: float, diameter: float) -> float:
    # t*log(e + 1/t) is increasing, so its max over pair distances is at the diameter
    return lip * diameter * math.log(E + 1.0 / diameter)


EXPONENT_FAMILIES = ("constant", "affine", "bump", "decay", "radial_table")


def make_exponent(spec: Mapping, domain, name: str = "p") -> ExponentField:
    """Instantiate one of the fixed exponent families on ``domain``.

    ============  ==========================================================
    family        parameters
    ============  ==========================================================
    constant      value
    affine        a, b, lower, upper   (a + b*x1 clamped; radial uses x1=r)
    bump          p0, b, x0            p0 + b / log(e + 1/|x - x0|)
    decay         p0, p_inf, x0        p_inf + (p0 - p_inf) / log(e + |x - x0|)
    radial_table  radii, values, x0    piecewise linear in |x - x0|
    ============  ==========================================================
    """
    family = spec["family"]
    pts = domain.points
    if family == "constant":
        return constant_exponent(domain, spec["value"], name)

    if family == "affine":
        a, b = float(spec["a"]), float(spec["b"])
        lo, hi = float(spec.get("lower", -math.inf)), float(spec.get("upper", math.inf))

        def coord(x):
            x = np.asarray(x, dtype=float)
            if domain.is_radial:
                return np.abs(x)
            return x[..., 0] if x.ndim >= 1 and x.shape[-1] == domain.dimension else x

        fn = lambda x: np.clip(a + b * coord(x), lo, hi)
        vals = fn(pts)
        bounds = (max(lo, float(vals.min())) if math.isinf(lo) else lo,
                  min(hi, float(vals.max())) if math.isinf(hi) else hi)
        slope = lambda r: np.where((a + b * np.asarray(r) > lo) & (a + b * np.asarray(r) < hi), b, 0.0)
        return ExponentField(domain, vals, name, fn, dict(spec), declared_bounds=bounds,
                             log_holder=_lipschitz_log_holder(abs(b), domain.diameter),
                             derivative=slope if domain.is_radial else None)

    if family == "bump":
        p0, b = float(spec["p0"]), float(spec["b"])
        x0 = spec.get("x0")

        def fn(x):
            d = _distance(domain, x, x0)
            with np.errstate(divide="ignore"):
                return p0 + b / np.log(E + 1.0 / d)

        def dfn(r):
            r = np.asarray(r, dtype=float)
            L = np.log(E + 1.0 / r)
            return b / (L ** 2 * (E * r + 1.0) * r)

        far = p0 + b / math.log(E + 1.0 / _max_distance(domain, np.zeros(1) if domain.is_radial
                                                         else np.asarray(x0 if x0 is not None
                                                                         else np.zeros(domain.dimension))))
        return ExponentField(domain, fn(pts), name, fn, dict(spec),
                             declared_bounds=tuple(sorted((p0, far))), log_holder=abs(b),
                             derivative=dfn if domain.is_radial else None)

    if family == "decay":
        p0, pinf = float(spec["p0"]), float(spec["p_inf"])
        x0 = spec.get("x0")
        fn = lambda x: pinf + (p0 - pinf) / np.log(E + _distance(domain, x, x0))
        dfn = lambda r: -(p0 - pinf) / ((E + np.asarray(r, float)) * np.log(E + np.asarray(r, float)) ** 2)
        return ExponentField(domain, fn(pts), name, fn, dict(spec),
                             declared_bounds=tuple(sorted((p0, pinf))),
                             log_holder=abs(p0 - pinf) * math.log(E + 1.0 / E),
                             far_field=pinf, derivative=dfn if domain.is_radial else None)

    if family == "radial_table":
        rr = np.asarray(spec["radii"], dtype=float)
        vv = np.asarray(spec["values"], dtype=float)
        if rr.ndim != 1 or rr.size < 2 or np.any(np.diff(rr) <= 0) or vv.shape != rr.shape:
            raise VarExpError("radial_table needs strictly increasing radii and matching values")
        x0 = spec.get("x0")
        fn = lambda x: np.interp(_distance(domain, x, x0), rr, vv)
        h = 1e-5
        dfn = lambda r: (np.interp(np.asarray(r) + h, rr, vv) - np.interp(np.asarray(r) - h, rr, vv)) / (2 * h)
        lip = float(np.max(np.abs(np.diff(vv) / np.diff(rr))))
        return ExponentField(domain, fn(pts), name, fn, dict(spec),
                             declared_bounds=(float(vv.min()), float(vv.max())),
                             log_holder=_lipschitz_log_holder(lip, domain.diameter),
                             far_field=float(vv[-1]), derivative=dfn if domain.is_radial else None)

    raise VarExpError(f"unknown exponent family {family!r}")


FIELD_FAMILIES = ("constant", "indicator_ball", "indicator_annulus", "power",
                  "smooth_bump", "random")


def make_field(spec: Mapping, domain, name: str = "f", seed: int | None = None) -> ScalarField:
    """Closed-form test functions used by the suites and the CLI."""
    family = spec["family"]
    center = spec.get("center")
    pts = domain.points

    if family == "constant":
        c = float(spec.get("value", 1.0))
        fn = lambda x: np.full(np.shape(_distance(domain, x, center)), c)
    elif family == "indicator_ball":
        r, c = float(spec.get("radius", 1.0)), float(spec.get("value", 1.0))
        fn = lambda x: np.where(_distance(domain, x, center) < r, c, 0.0)
    elif family == "indicator_annulus":
        r0, r1 = float(spec["inner"]), float(spec["outer"])
        c = float(spec.get("value", 1.0))
        fn = lambda x: np.where((_distance(domain, x, center) >= r0)
                                & (_distance(domain, x, center) < r1), c, 0.0)
    elif family == "power":
        a, c = float(spec["exponent"]), float(spec.get("scale", 1.0))
        support = float(spec.get("support", math.inf))

        def fn(x):
            d = _distance(domain, x, center)
            with np.errstate(divide="ignore"):
                return np.where(d < support, c * d ** (-a), 0.0)

        if np.any(_distance(domain, pts, center) == 0):
            raise VarExpError("power singularity sits on a sample point; set an inner cutoff")
    elif family == "smooth_bump":
        w, c = float(spec.get("width", 1.0)), float(spec.get("height", 1.0))

        def fn(x):
            s = np.clip(_distance(domain, x, center) / w, 0.0, 1.0)
            with np.errstate(divide="ignore", over="ignore"):
                out = c * np.exp(1.0 - 1.0 / (1.0 - s ** 2))
            return np.where(s < 1.0, out, 0.0)
    elif family == "random":
        rng = np.random.default_rng(spec.get("seed", seed))
        lo, hi = float(spec.get("low", 0.0)), float(spec.get("high", 1.0))
        blocks = spec.get("blocks")
        if blocks is None:
            vals = rng.uniform(lo, hi, size=domain.size)
            return ScalarField(domain, vals, name, None, dict(spec))
        # piecewise constant on a coarse lattice so refinements see the same function
        blocks = int(blocks)
        table = rng.uniform(lo, hi, size=(blocks,) * (1 if domain.is_radial else domain.dimension))

        def fn(x):
            x = np.asarray(x, dtype=float)
            if domain.is_radial:
                t = np.abs(x)[..., None] / domain.r_max
            else:
                t = (x - np.asarray(domain.lower)) / (np.asarray(domain.upper) - np.asarray(domain.lower))
            idx = np.clip((t * blocks).astype(int), 0, blocks - 1)
            return table[tuple(np.moveaxis(idx, -1, 0))]
    else:
        raise VarExpError(f"unknown field family {family!r}")
    return ScalarField(domain, fn(pts), name, fn, dict(spec))


# ---------------------------------------------------------------------------
# exponent calculus
# ---------------------------------------------------------------------------


def _select(g: ScalarField, cells) -> np.ndarray:
    if cells is None:
        return g.values
    cells = np.asarray(cells)
    return g.values[cells]


def ess_bounds(g: ScalarField, cells=None) -> tuple[float, float]:
    """(min, max) of the samples of ``g`` over ``cells`` (mask or indices)."""
    v = _select(g, cells)
    if v.size == 0:
        raise VarExpError("empty set")
    return float(v.min()), float(v.max())


def _ball_weights(domain, center, radius) -> np.ndarray:
    if domain.is_radial:
        if center is not None and np.any(np.asarray(center) != 0):
            raise VarExpError("balls on radial domains must be centered at the origin")
        return domain.weights * domain.shell_fraction_below(radius)
    w = np.where(domain.cells_in_ball(center, radius), domain.weights, 0.0)
    if not w.any() and radius > 0 and domain.contains(center):
        w = np.zeros(domain.size)
        w[domain.nearest(center)] = 1.0
    return w


def harmonic_mean(p: ExponentField, center, radius: float) -> float:
    """(mean over B of 1/p)^{-1} for the ball B(center, radius)."""
    w = _ball_weights(p.domain, center, radius)
    total = w.sum()
    if total <= 0:
        raise VarExpError("ball does not intersect the domain")
    return float(total / np.dot(w, 1.0 / p.values))


def _values_at(p, x):
    if isinstance(p, ScalarField):
        return p.values if x is None else p.evaluate(x)
    return np.asarray(p, dtype=float)


def sobolev_conjugate(p, alpha, x=None, n: int | None = None):
    """n p / (n - alpha p); ``p`` and ``alpha`` are fields or numbers."""
    if n is None:
        if not isinstance(p, ScalarField):
            raise VarExpError("dimension n is required when p is a number")
        n = p.domain.dimension
    pv, av = _values_at(p, x), _values_at(alpha, x)
    ap = av * pv
    if np.any(ap >= n):
        raise SupercriticalExponentError("supercritical exponent: alpha*p >= n")
    out = n * pv / (n - ap)
    return float(out) if np.ndim(out) == 0 else out


def holder_conjugate(p, x=None):
    pv = _values_at(p, x)
    if np.any(pv <= 1):
        raise VarExpError("Hölder conjugate needs p > 1")
    out = pv / (pv - 1.0)
    return float(out) if np.ndim(out) == 0 else out


def _pair_distance(domain, i, j) -> np.ndarray:
    pts = domain.points
    if domain.is_radial:
        # points on a common ray: the closest realization of the two radii
        return np.abs(pts[i] - pts[j])
    return np.linalg.norm(pts[i] - pts[j], axis=1)


def log_holder_modulus(g: ScalarField, sample_pairs: int = 10_000, seed: int = 0) -> float:
    """Empirical log-Hölder constant max |g(x)-g(y)| log(e + 1/|x-y|).

    Random pairs are complemented by pairs anchored at the extremal samples,
    which is where the modulus of a bump-type exponent is attained.
    """
    N = g.domain.size
    if N < 2:
        raise VarExpError("log-Hölder modulus needs at least two cells")
    rng = np.random.default_rng(seed)
    i = rng.integers(0, N, sample_pairs)
    j = rng.integers(0, N, sample_pairs)
    k = max(1, sample_pairs // 4)
    anchors = [int(np.argmin(g.values)), int(np.argmax(g.values))]
    for a in anchors:
        partners = rng.integers(0, N, k)
        i = np.concatenate([i, np.full(k, a), [a] * 2])
        j = np.concatenate([j, partners, anchors])
    keep = i != j
    i, j = i[keep], j[keep]
    if i.size == 0:
        return 0.0
    d = _pair_distance(g.domain, i, j)
    ok = d > 0
    diff = np.abs(g.values[i[ok]] - g.values[j[ok]])
    return float(np.max(diff * np.log(E + 1.0 / d[ok]), initial=0.0))


def oscillation_check(g: ScalarField, balls: Sequence, return_all: bool = False):
    """max over balls B of |B|^{g-_B - g+_B}; balls are (center, radius) pairs."""
    n = g.domain.dimension
    vals = []
    for center, radius in balls:
        w = _ball_weights(g.domain, center, radius)
        sel = w > 0
        if not sel.any():
            raise VarExpError("ball does not intersect the domain")
        lo, hi = ess_bounds(g, sel)
        vals.append((ball_volume(n) * radius ** n) ** (lo - hi))
    vals = np.asarray(vals)
    if return_all:
        return vals
    return float(vals.max())


# ---------------------------------------------------------------------------
# configuration and export
# ---------------------------------------------------------------------------


def load_config(source) -> dict:
    """Read a JSON configuration (path, JSON text or mapping) and validate it."""
    from .schemas import validate

    if isinstance(source, Mapping):
        cfg = dict(source)
    else:
        text = Path(source).read_text() if Path(str(source)).exists() else str(source)
        cfg = json.loads(text)
    validate(cfg, "field")
    return cfg


def build_from_config(cfg: Mapping):
    """(domain, exponent or None, field or None) from a validated field config."""
    domain = domain_from_dict(cfg["domain"])
    p = make_exponent(cfg["exponent"], domain) if "exponent" in cfg else None
    f = make_field(cfg["field"], domain, seed=cfg.get("seed")) if "field" in cfg else None
    return domain, p, f


def write_csv(f: ScalarField, path) -> None:
    pts = f.domain.points
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        if f.domain.is_radial:
            w.writerow(["r", "value"])
            rows = zip(pts, f.values)
            w.writerows((repr(float(r)), repr(float(v))) for r, v in rows)
        else:
            w.writerow([f"x{k + 1}" for k in range(f.domain.dimension)] + ["value"])
            w.writerows([*map(lambda c: repr(float(c)), x), repr(float(v))]
                        for x, v in zip(pts, f.values))
