"""The radial fundamental solution of the p(x)-Laplacian in the unit ball,
its weak-space membership thresholds and its C^1 regularization.

For a radial exponent p with 1 < p < n,

    u(r) = int_r^1 (p(s) s^{n-1})^{-1/(p(s)-1)} ds,

so |grad u|(r) = (p(r) r^{n-1})^{-1/(p(r)-1)}.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate

from .errors import VarExpError
from .fields import ExponentField, RadialDomain, ScalarField, sphere_area
from .spaces import LevelScan, weak_modular_sup

QUAD_RTOL = 1e-8


def _exponent_fn(p: ExponentField):
    if p.formula is not None:
        return lambda r: np.asarray(p.formula(np.asarray(r, dtype=float)), dtype=float)
    r0, v0 = p.domain.points, p.values
    return lambda r: np.interp(r, r0, v0)


def _slope_fn(p: ExponentField):
    if p.derivative is not None:
        return lambda r: np.asarray(p.derivative(np.asarray(r, dtype=float)), dtype=float)
    pf, h = _exponent_fn(p), 1e-5
    return lambda r: (pf(np.asarray(r) + h) - pf(np.asarray(r) - h)) / (2 * h)


def gradient_magnitude(pf, n, r):
    r = np.asarray(r, dtype=float)
    pr = pf(r)
    return (pr * r ** (n - 1)) ** (-1.0 / (pr - 1.0))


def _segment_integrals(pf, n, lo, hi, rtol=QUAD_RTOL, max_level=16):
    """Integral of |grad u| over each [lo_i, hi_i]: midpoint rule in log r,
    doubling the panel count until the relative change drops below rtol."""
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    a, b = np.log(lo), np.log(hi)

    def mid(m, idx):
        k = (np.arange(m) + 0.5) / m
        u = a[idx, None] + (b - a)[idx, None] * k[None, :]
        r = np.exp(u)
        return (gradient_magnitude(pf, n, r) * r).sum(axis=1) * (b - a)[idx] / m

    m = 4
    out = mid(m, np.arange(lo.size))
    todo = np.arange(lo.size)
    for _ in range(max_level):
        m *= 2
        new = mid(m, todo)
        done = np.abs(new - out[todo]) <= rtol * np.abs(new)
        out[todo] = new
        todo = todo[~done]
        if todo.size == 0:
            break
    else:
        raise VarExpError("fundamental-solution quadrature did not converge")
    return out


@dataclass(frozen=True, eq=False)
class RadialSolution:
    """u and |grad u| tabulated at the sample radii of a radial domain contained in (0, 1]."""

    p: ExponentField
    n: int
    radii: np.ndarray
    u_values: np.ndarray
    gradient_values: np.ndarray

    @property
    def domain(self) -> RadialDomain:
        return self.p.domain

    @property
    def p_fn(self):
        return _exponent_fn(self.p)

    def u_at(self, r) -> np.ndarray:
        """u at arbitrary radii in (0, 1], by direct quadrature."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.zeros(r.size)
        inside = r < 1.0
        if inside.any():
            # split [r, 1] into panels of at most a tenth of a decade
            for k in np.flatnonzero(inside):
                e = np.geomspace(r[k], 1.0, max(2, int(math.ceil(10 * -math.log10(r[k]))) + 1))
                out[k] = _segment_integrals(self.p_fn, self.n, e[:-1], e[1:]).sum()
        return out

    def gradient_at(self, r) -> np.ndarray:
        return gradient_magnitude(self.p_fn, self.n, r)

    def u_field(self) -> ScalarField:
        return ScalarField(self.domain, self.u_values, "u")

    def gradient_field(self) -> ScalarField:
        return ScalarField(self.domain, self.gradient_values, "grad_u")

    def to_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "u", "grad_u"])
            w.writerows((repr(float(a)), repr(float(b)), repr(float(c)))
                        for a, b, c in zip(self.radii, self.u_values, self.gradient_values))


def fundamental_solution(p: ExponentField, n: int | None = None) -> RadialSolution:
    """Tabulate u and |grad u| on the radial domain of ``p`` (outer edge 1)."""
    dom = p.domain
    if not dom.is_radial:
        raise VarExpError("the fundamental solution needs a radial exponent")
    n = dom.dimension if n is None else n
    if dom.r_max > 1.0 + 1e-12:
        raise VarExpError("radial domain must lie inside the unit ball")
    pf = _exponent_fn(p)
    samples = np.concatenate([p.values, pf(np.asarray(dom.edges))])
    if np.any(samples >= n):
        raise VarExpError("exponent exceeds dimension: need p < n")
    if np.any(samples <= 1):
        raise VarExpError("fundamental solution needs p > 1")
    radii = dom.points
    # nodes: sample radii and the outer radius 1, integrated between neighbours
    nodes = np.unique(np.concatenate([radii, [1.0]]))
    seg = _segment_integrals(pf, n, nodes[:-1], nodes[1:])
    tail = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    u = tail[np.searchsorted(nodes, radii)]
    return RadialSolution(p, n, radii, u, gradient_magnitude(pf, n, radii))


def constant_u(n, p, r):
    """Closed form of u for a constant exponent."""
    r = np.asarray(r, dtype=float)
    return p ** (-1.0 / (p - 1)) * (p - 1) / (n - p) * (r ** (-(n - p) / (p - 1)) - 1.0)


@dataclass(frozen=True)
class AsymptoticsReport:
    u_band: tuple
    gradient_band: tuple
    C: float
    u_ratios: np.ndarray = field(repr=False)
    gradient_ratios: np.ndarray = field(repr=False)


def asymptotics_check(sol: RadialSolution, r_lo: float = 1e-4, r_hi: float = 1e-1) -> AsymptoticsReport:
    """Ratios of u and |grad u| to the pure powers with exponent frozen at p(0)."""
    n = sol.n
    p0 = float(sol.p_fn(np.array([0.0]))[0])
    sel = (sol.radii >= r_lo * (1 - 1e-12)) & (sol.radii <= r_hi)
    if not sel.any():
        raise VarExpError("no tabulated radii in the requested range")
    r = sol.radii[sel]
    ur = sol.u_values[sel] / r ** (-(n - p0) / (p0 - 1))
    gr = sol.gradient_values[sel] / r ** (-(n - 1) / (p0 - 1))
    lo = min(ur.min(), gr.min())
    hi = max(ur.max(), gr.max())
    C = max(hi, 1.0 / lo)
    return AsymptoticsReport((float(ur.min()), float(ur.max())),
                             (float(gr.min()), float(gr.max())), float(C), ur, gr)


def u_threshold(n, p0):
    return n * (p0 - 1) / (n - p0)


def gradient_threshold(n, p0):
    return n * (p0 - 1) / (n - 1)


DEFAULT_LADDER = ((1e-3, 32), (1e-6, 64), (1e-9, 128))


@dataclass(frozen=True)
class MembershipResult:
    verdict: str
    sups: tuple
    growth: tuple
    ladder: tuple
    threshold: float
    q0: float
    near_threshold: bool
    scans: tuple = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "sups": list(self.sups), "growth": list(self.growth),
                "ladder": [list(x) for x in self.ladder], "threshold": self.threshold,
                "q0": self.q0, "near_threshold": self.near_threshold,
                "scans": [s.to_dict() for s in self.scans]}


def _classify(growth, factor=2.0, stable=0.10):
    if all(g >= factor for g in growth):
        return "non-member"
    if all(abs(g - 1.0) <= stable for g in growth):
        return "member"
    return "borderline"


def membership_scan(p: dict | float, q: dict | float, n: int, target: str = "u",
                    ladder=DEFAULT_LADDER, factor: float = 2.0) -> MembershipResult:
    """Weak-modular sups of u (or |grad u|) in w-L^q along an (eps, resolution) ladder.

    ``p`` and ``q`` are exponent family specs (or constants) instantiated on
    each ladder domain.  The verdict is ``non-member`` when the sup grows by at
    least ``factor`` at every step, ``member`` when it changes by at most 10%,
    and ``borderline`` otherwise.
    """
    from .fields import make_exponent

    spec = lambda s: {"family": "constant", "value": float(s)} if np.isscalar(s) else s
    if target not in ("u", "gradient"):
        raise VarExpError("target must be 'u' or 'gradient'")
    sups, scans = [], []
    p0 = q0 = None
    for eps, cpd in ladder:
        dom = RadialDomain.log(n, eps, 1.0, cpd)
        pe = make_exponent(spec(p), dom, "p")
        qe = make_exponent(spec(q), dom, "q")
        sol = fundamental_solution(pe, n)
        g = sol.u_field() if target == "u" else sol.gradient_field()
        scan = weak_modular_sup(g, qe)
        sups.append(scan.sup_value)
        scans.append(scan)
        p0 = float(_exponent_fn(pe)(np.array([0.0]))[0])
        q0 = float(_exponent_fn(qe)(np.array([0.0]))[0])
    growth = tuple(b / a for a, b in zip(sups[:-1], sups[1:]))
    thr = u_threshold(n, p0) if target == "u" else gradient_threshold(n, p0)
    return MembershipResult(_classify(growth, factor), tuple(sups), growth, tuple(ladder),
                            thr, q0, bool(abs(q0 / thr - 1) < 0.05), tuple(scans))


@dataclass(frozen=True, eq=False)
class Regularization:
    """v_r = a_r - b_r |x| inside B(0, r), u outside, with the right-hand side
    -div(|grad v|^{p-2} grad v) tabulated on B(0, r)."""

    sol: RadialSolution
    r: float
    a_r: float
    b_r: float
    rhs_radii: np.ndarray
    rhs_values: np.ndarray
    value_residual: float
    slope_residual: float
    sign_warning: bool

    def v(self, rho) -> np.ndarray:
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        out = np.empty(rho.size)
        inside = rho < self.r
        out[inside] = self.a_r - self.b_r * rho[inside]
        if (~inside).any():
            out[~inside] = self.sol.u_at(rho[~inside])
        return out

    def rhs(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        n, b = self.sol.n, self.b_r
        pr = self.sol.p_fn(rho)
        slope = _slope_fn(self.sol.p)(rho)
        return b ** (pr - 1.0) * ((n - 1) / rho + slope * math.log(b))

    def l1_mass(self) -> float:
        """Integral of the right-hand side over B(0, r) (punctured at 0)."""
        n = self.sol.n
        sig = sphere_area(n)
        val, _ = integrate.quad(lambda s: float(self.rhs(np.array([s]))[0]) * sig * s ** (n - 1),
                                0.0, self.r, epsabs=0.0, epsrel=1e-12, limit=200)
        return val


def regularize(sol: RadialSolution, r: float, table_points: int = 256) -> Regularization:
    """C^1 matching of the cone a_r - b_r |x| to u at |x| = r."""
    if not 0 < r < 1:
        raise VarExpError("cutoff radius must lie in (0, 1)")
    b = float(sol.gradient_at(np.array([r]))[0])
    u_r = float(sol.u_at(r)[0])
    a = u_r + b * r
    value_res = abs((a - b * r) - u_r)
    slope_res = abs(-b + float(sol.gradient_at(np.array([r]))[0]))
    radii = np.geomspace(r * 1e-4, r, table_points + 1)[:-1]
    reg = Regularization(sol, float(r), float(a), b, radii, np.zeros(0), value_res, slope_res, False)
    vals = reg.rhs(radii)
    object.__setattr__(reg, "rhs_values", vals)
    object.__setattr__(reg, "sign_warning", bool(np.any(vals < 0)))
    return reg


def fd_divergence_rhs(reg: Regularization, rho, h: float | None = None) -> np.ndarray:
    """-div(|grad v|^{p-2} grad v) at points on the first axis at distance rho,
    by nested central differences in Cartesian coordinates."""
    n = reg.sol.n
    h = reg.r / 256 if h is None else h
    pf = reg.sol.p_fn
    rho = np.atleast_1d(np.asarray(rho, dtype=float))

    def v_cart(X):
        R = np.linalg.norm(X, axis=-1)
        return reg.a_r - reg.b_r * R   # interior points only

    def flux(X):
        # |grad v|^{p-2} grad v, gradient by central differences
        grads = np.stack([(v_cart(X + h * e) - v_cart(X - h * e)) / (2 * h)
                          for e in np.eye(n)], axis=-1)
        mag = np.linalg.norm(grads, axis=-1)
        pr = pf(np.linalg.norm(X, axis=-1))
        return (mag ** (pr - 2.0))[..., None] * grads

    X = np.zeros((rho.size, n))
    X[:, 0] = rho
    div = np.zeros(rho.size)
    for k, e in enumerate(np.eye(n)):
        div += (flux(X + h * e)[:, k] - flux(X - h * e)[:, k]) / (2 * h)
    return -div


@dataclass(frozen=True)
class L1Report:
    cutoffs: tuple
    masses: tuple
    monotone: bool
    band: tuple


def l1_uniformity_check(sol: RadialSolution, cutoffs, probe_radii=(0.15, 0.5)) -> L1Report:
    """L^1 masses of the regularized right-hand sides and monotonicity v_r <= v_r' <= u."""
    cutoffs = tuple(float(c) for c in cutoffs)
    if any(b >= a for a, b in zip(cutoffs[:-1], cutoffs[1:])):
        raise VarExpError("cutoffs must decrease")
    regs = [regularize(sol, c) for c in cutoffs]
    masses = tuple(reg.l1_mass() for reg in regs)
    probe = np.asarray(probe_radii, dtype=float)
    u = sol.u_at(probe)
    vs = [reg.v(probe) for reg in regs] + [u]
    tol = 1e-12 * max(1.0, float(np.max(np.abs(u))))
    mono = all(np.all(a <= b + tol) for a, b in zip(vs[:-1], vs[1:]))
    return L1Report(cutoffs, masses, bool(mono), (min(masses), max(masses)))
