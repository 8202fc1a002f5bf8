"""K-functionals for the pair (L^{p0}, L^inf), (theta, inf)-norms and the
two kernel estimates used for the weak-to-weak Riesz bound."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate

from .errors import ConvergenceError, GridError, VarExpError
from .fields import ExponentField, ScalarField, ball_volume, sphere_area
from .potentials import RatioStats
from .spaces import _check_pair, luxemburg_arrays, weak_norm

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
T_PER_DECADE = 40
T_DECADES = 8


def golden_min(fun, a: float, b: float, xtol: float = 1e-10, max_iter: int = 400):
    """Golden-section minimum of a unimodal ``fun`` on [a, b]; returns (x, f(x))."""
    c, d = b - INVPHI * (b - a), a + INVPHI * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(max_iter):
        if abs(b - a) <= xtol * max(1.0, abs(a) + abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = fun(d)
    return (c, fc) if fc <= fd else (d, fd)


class _Truncations:
    """||(f - s)_+||_{p0} for a fixed nonnegative field, with samples sorted
    by decreasing value so each truncation is a prefix."""

    def __init__(self, f: ScalarField, p0: ScalarField):
        _check_pair(f, p0)
        g = np.abs(f.values)
        order = np.argsort(-g, kind="stable")
        self.g = g[order]
        self.w = f.domain.weights[order]
        self.p = np.asarray(p0.values)[order]
        self.top = float(self.g[0]) if self.g.size else 0.0

    def norm(self, s: float) -> float:
        m = int(np.searchsorted(-self.g, -s, side="left"))
        if m == 0:
            return 0.0
        return luxemburg_arrays(self.w[:m], self.g[:m] - s, self.p[:m], tol=1e-11).value

    def k_value(self, t: float, xtol: float = 1e-8, bracket=None) -> tuple[float, float]:
        """(K(t), minimizing truncation level)."""
        if self.top == 0:
            return 0.0, 0.0
        obj = lambda s: self.norm(s) + t * s
        if bracket is None:
            # coarse scan guards against a non-convex objective when p0 < 1
            grid = np.linspace(0.0, self.top, 17)
            vals = np.array([obj(s) for s in grid])
            k = int(np.argmin(vals))
            bracket = (grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)])
            best = (grid[k], vals[k])
        else:
            best = min(((s, obj(s)) for s in bracket), key=lambda sv: sv[1])
        s_best, v_best = golden_min(obj, *bracket, xtol=xtol)
        if best[1] <= v_best:
            s_best, v_best = best
        return float(v_best), float(s_best)

    def table(self):
        """Truncation levels (0, every sample value, and geometric midpoints)
        with the norm at each."""
        vals = np.unique(self.g)
        vals = vals[vals > 0]
        mids = np.sqrt(vals[1:] * vals[:-1])
        levels = np.unique(np.concatenate([[0.0], vals, mids]))
        return levels, np.array([self.norm(s) for s in levels])


def _lower_envelope(levels, norms, t):
    """min over tabulated s of N(s) + t s: concave and nondecreasing in t."""
    vals = norms[None, :] + t[:, None] * levels[None, :]
    k = np.argmin(vals, axis=1)
    return vals[np.arange(t.size), k], k


def k_functional_Linf(f: ScalarField, p0: ScalarField, t: float) -> float:
    """inf over s >= 0 of ||(|f| - s)_+||_{p0} + t s."""
    if t <= 0:
        raise VarExpError("t must be positive")
    return _Truncations(f, p0).k_value(t)[0]


@dataclass(frozen=True, eq=False)
class KProfile:
    t_grid: np.ndarray
    k_values: np.ndarray
    theta: float
    norm_value: float
    argmax_t: float
    grid_value: float = field(default=float("nan"))

    @property
    def weighted(self) -> np.ndarray:
        return self.t_grid ** (-self.theta) * self.k_values

    def to_dict(self) -> dict:
        return {"t": self.t_grid.tolist(), "K": self.k_values.tolist(), "theta": self.theta,
                "norm_value": self.norm_value, "argmax_t": self.argmax_t}

    def to_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "K", "t^-theta K"])
            w.writerows((repr(float(a)), repr(float(b)), repr(float(c)))
                        for a, b, c in zip(self.t_grid, self.k_values, self.weighted))


def _endpoints_low(phi) -> bool:
    return phi[0] < 0.5 * phi.max() and phi[-1] < 0.5 * phi.max()


def theta_norm(f: ScalarField, p0: ScalarField, theta: float, t_grid=None,
               max_extensions: int = 6) -> KProfile:
    """sup over t of t^{-theta} K(t) for the pair (L^{p0}, L^inf).

    The default grid has 40 points per decade over 8 decades centred on
    ||f||_{p0} / ||f||_inf, where K bends from slope one to flat, and is
    widened by 4 decades on each side whose endpoint value is not below half
    the maximum.  The grid maximum is then refined by golden section in log t.
    """
    if not 0 < theta < 1:
        raise VarExpError("theta must lie in (0, 1)")
    tr = _Truncations(f, p0)
    if tr.top == 0:
        t = np.array([1.0]) if t_grid is None else np.asarray(t_grid, float)
        return KProfile(t, np.zeros_like(t), theta, 0.0, float(t[0]), 0.0)
    levels, norms = tr.table()

    def profile(t):
        k, idx = _lower_envelope(levels, norms, t)
        return k, t ** (-theta) * k, idx

    if t_grid is not None:
        t = np.asarray(t_grid, dtype=float)
        if t.ndim != 1 or t.size < 3 or np.any(t <= 0) or np.any(np.diff(t) <= 0):
            raise GridError("t-grid must be positive and strictly increasing")
        k, phi, idx = profile(t)
        j = int(np.argmax(phi))
        if j in (0, t.size - 1) or not _endpoints_low(phi):
            raise GridError("extend t-grid: weighted K-functional not small at the endpoints")
    else:
        center = norms[0] / tr.top
        lo_dec = hi_dec = T_DECADES / 2
        for _ in range(max_extensions + 1):
            npts = int(round((lo_dec + hi_dec) * T_PER_DECADE)) + 1
            t = np.logspace(math.log10(center) - lo_dec, math.log10(center) + hi_dec, npts)
            k, phi, idx = profile(t)
            half = 0.5 * phi.max()
            if phi[0] < half and phi[-1] < half:
                break
            lo_dec += 4 * (phi[0] >= half)
            hi_dec += 4 * (phi[-1] >= half)
        else:
            raise GridError("extend t-grid: endpoint values did not fall below half the maximum")
        j = int(np.argmax(phi))
    grid_value = float(phi[j])

    # refine the sup with the exact K (golden section in s between table levels)
    def K_exact(tt):
        _, i = _lower_envelope(levels, norms, np.array([tt]))
        i = int(i[0])
        br = (levels[max(i - 1, 0)], levels[min(i + 1, levels.size - 1)])
        return tr.k_value(tt, bracket=br)[0]

    lt = np.log(t)
    a, b = lt[max(j - 1, 0)], lt[min(j + 1, t.size - 1)]
    u, neg = golden_min(lambda u: -math.exp(-theta * u) * K_exact(math.exp(u)), a, b, xtol=1e-9)
    at_grid = t[j] ** (-theta) * K_exact(float(t[j]))
    value, targ = (-neg, math.exp(u)) if -neg >= at_grid else (at_grid, float(t[j]))
    return KProfile(t, k, theta, float(value), float(targ), grid_value)


def interpolation_identity_check(fields, p: ExponentField, theta: float,
                                 lambdas=None) -> RatioStats:
    """theta-norm for (L^{(1-theta)p}, L^inf) over the weak p-norm, per field."""
    p0 = p.scaled(1.0 - theta)
    ratios = [theta_norm(f, p0, theta).norm_value / weak_norm(f, p, lambdas).value
              for f in fields]
    return RatioStats.of(ratios)


# ---------------------------------------------------------------------------
# kernel lemmas
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InfimumResult:
    numeric_inf: float
    formula: float
    argmin: float
    ratio: float
    envelope: tuple
    in_envelope: bool
    argmin_rule: bool


def infimum_formula(alpha: float, beta: float, delta: float, t: float,
                    rel_tol: float = 1e-6) -> InfimumResult:
    """Minimize (alpha/beta) R^{-beta} + t (R^alpha - delta^alpha) over R >= delta
    and compare with min(t^{beta/(alpha+beta)}, delta^{-beta})."""
    if min(alpha, beta, delta, t) <= 0:
        raise VarExpError("alpha, beta, delta and t must be positive")
    c = alpha / beta
    obj = lambda R: c * R ** (-beta) + t * (R ** alpha - delta ** alpha)
    obj_log = lambda u: obj(math.exp(u))
    lo = math.log(delta)
    hi = math.log(10.0 * max(delta, 1.0))
    for _ in range(4):
        u, val = golden_min(obj_log, lo, hi, xtol=1e-12)
        # minimum pinned at the upper end with negative slope: widen
        if hi - u > 1e-6 * max(1.0, abs(hi)) or obj_log(hi + 1e-3) >= obj_log(hi):
            break
        hi += math.log(100.0)
    else:
        raise ConvergenceError("infimum search hit the upper end after 3 extensions",
                               bracket=(delta, math.exp(hi)))
    R = math.exp(u)
    if obj(delta) <= val:
        R, val = delta, obj(delta)
    formula = min(t ** (beta / (alpha + beta)), delta ** (-beta))
    ratio = val / formula
    env = (min(c, 1.0), 1.0 + c)
    inside = env[0] * (1 - rel_tol) <= ratio <= env[1] * (1 + rel_tol)
    rule = (R < 1.0) == (t > 1.0 and delta < 1.0)
    return InfimumResult(val, formula, R, ratio, env, bool(inside), bool(rule))


def default_infimum_grid():
    vals = (0.5, 1.0, 2.0)
    ts = np.logspace(-3, 3, 20)
    return [(a, b, d, float(t)) for a in vals for b in vals for d in (0.1, 1.0, 10.0) for t in ts]


@dataclass(frozen=True)
class TailKernelResult:
    lhs: float
    rhs: float
    ratio: float
    harmonic_mean: float


def _panels(lo, hi, per_decade=16, order=8):
    x, w = np.polynomial.legendre.leggauss(order)
    k = max(1, int(math.ceil(per_decade * math.log10(hi / lo))))
    e = np.linspace(math.log(lo), math.log(hi), k + 1)
    a, b = e[:-1, None], e[1:, None]
    u = 0.5 * (b - a) * x + 0.5 * (a + b)
    wu = 0.5 * (b - a) * w
    return np.exp(u).ravel(), (wu * np.exp(u)).ravel()


def _exponent_function(p):
    if isinstance(p, ExponentField):
        if p.formula is None:
            raise VarExpError("tail kernel needs an exponent with a closed form")
        return lambda r: np.asarray(p.formula(np.asarray(r, dtype=float)), dtype=float), p.far_field
    c = float(p)
    return (lambda r: np.full(np.shape(r), c)), c


def tail_kernel_norm(delta: float, alpha: float, p, n: int, R_max: float | None = None,
                     tol: float = 1e-10) -> TailKernelResult:
    """Norm of |y|^{alpha-n} outside B(0, delta) in L^{p'} and the reference
    value |B|^{-1/(p#)_B}.

    ``p`` is a radial exponent (an :class:`ExponentField` with a closed form and
    far-field value, or a constant).  The integral over [delta, R_max] uses
    composite Gauss-Legendre in log r; beyond R_max the exponent is frozen
    at its far-field value and the tail is integrated exactly.
    """
    pf, p_inf = _exponent_function(p)
    if p_inf is None:
        raise VarExpError("tail kernel needs a constant far-field exponent")
    R_max = 1e4 * delta if R_max is None else R_max
    if R_max < 1e3 * delta:
        raise VarExpError("R_max must be at least 1e3 * delta")
    if not 0 < alpha < n:
        raise VarExpError("alpha must lie in (0, n)")
    r, w = _panels(delta, R_max)
    pr = pf(r)
    lo_p = min(pr.min(), p_inf, float(pf(np.array([0.0]))[0]))
    hi_p = max(pr.max(), p_inf)
    if lo_p <= 1 or hi_p >= n / alpha:
        raise VarExpError("need 1 < p- <= p+ < n/alpha")
    q = pr / (pr - 1.0)
    q_inf = p_inf / (p_inf - 1.0)
    sigma = sphere_area(n)
    expo_tail = (alpha - n) * q_inf + n
    w_tail = sigma * R_max ** expo_tail / (-expo_tail)
    W = np.concatenate([sigma * r ** (n - 1) * w, [w_tail]])
    G = np.concatenate([r ** (alpha - n), [1.0]])
    Q = np.concatenate([q, [q_inf]])
    lhs = luxemburg_arrays(W, G, Q, tol=tol).value
    # harmonic mean of p# over B(0, delta): mean of 1/p minus alpha/n
    inv_p, _ = integrate.quad(lambda s: n * s ** (n - 1) / float(pf(np.array([s]))[0]),
                              0.0, delta, epsrel=1e-12)
    inv_p /= delta ** n
    psharp_B = 1.0 / (inv_p - alpha / n)
    rhs = (ball_volume(n) * delta ** n) ** (-1.0 / psharp_B)
    return TailKernelResult(lhs, rhs, lhs / rhs, psharp_B)


def tail_kernel_closed_form(delta, alpha, p, n):
    """Constant-exponent value of the tail kernel norm."""
    q = p / (p - 1.0)
    return (sphere_area(n) / ((n - alpha) * q - n)) ** (1.0 / q) * delta ** ((n - (n - alpha) * q) / q)
