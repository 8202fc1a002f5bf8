"""Modulars, Luxemburg norms and weak variable-exponent norms.

All quantities are midpoint sums over the samples of a field, so they are
exact for the piecewise-constant function the samples define.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .errors import ConvergenceError, DomainMismatchError, GridError, VarExpError
from .fields import ExponentField, ScalarField

DEFAULT_TOL = 1e-8
MAX_ITER = 200
DEFAULT_LAMBDAS = 200


@dataclass(frozen=True)
class NormResult:
    """A computed norm.  ``residual`` is |rho(f/value) - 1| for Luxemburg
    norms and the relative grid-gap bound for level-scan norms."""

    value: float
    method: str
    residual: float
    scan: "LevelScan | None" = field(default=None, repr=False)

    def to_json(self) -> str:
        return json.dumps({"value": self.value, "method": self.method,
                           "residual": self.residual}, sort_keys=True)

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True, eq=False)
class LevelScan:
    """One value per level lambda, with the grid sup and where it occurs.

    ``gap_ratio`` is the largest ratio of adjacent levels; for both the weak
    norm and the weak modular with p >= 1 the continuum sup is at most
    ``sup_value * gap_ratio ** max(1, p+)``.
    """

    lambdas: np.ndarray
    modular_values: np.ndarray
    sup_value: float
    argmax_lambda: float
    gap_ratio: float

    @classmethod
    def from_values(cls, lambdas, values) -> "LevelScan":
        lam = np.asarray(lambdas, dtype=float)
        val = np.asarray(values, dtype=float)
        k = int(np.argmax(val))
        gap = float(np.max(lam[1:] / lam[:-1])) if lam.size > 1 else 1.0
        return cls(lam, val, float(val[k]), float(lam[k]), gap)

    def to_dict(self) -> dict:
        return {"lambdas": self.lambdas.tolist(), "values": self.modular_values.tolist(),
                "sup_value": self.sup_value, "argmax_lambda": self.argmax_lambda,
                "gap_ratio": self.gap_ratio}

    def to_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lambda", "modular_value"])
            w.writerows((repr(float(a)), repr(float(b)))
                        for a, b in zip(self.lambdas, self.modular_values))


def _check_pair(f: ScalarField, p: ScalarField) -> None:
    if f.domain != p.domain:
        raise DomainMismatchError(f"{f.name} and {p.name} live on different domains")


def _terms(f: ScalarField, p: ScalarField) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(weights, |f|, p) restricted to the support of f."""
    g = np.abs(f.values)
    nz = g > 0
    return f.domain.weights[nz], g[nz], np.asarray(p.values)[nz]


def modular(f: ScalarField, p: ScalarField) -> float:
    """Sum over cells of |f|^p times the cell measure."""
    _check_pair(f, p)
    w, g, pv = _terms(f, p)
    return float(np.dot(w, g ** pv))


def _log_modular(logw, logg, pv, u):
    # log rho(f / e^u), stable for extreme magnitudes
    return float(logsumexp(logw + pv * (logg - u)))


def luxemburg_norm(f: ScalarField, p: ScalarField, tol: float = DEFAULT_TOL,
                   max_iter: int = MAX_ITER) -> NormResult:
    """inf{mu > 0 : rho(f/mu) <= 1}, see :func:`luxemburg_arrays`."""
    _check_pair(f, p)
    w, g, pv = _terms(f, p)
    return luxemburg_arrays(w, g, pv, tol, max_iter)


def luxemburg_arrays(w, g, pv, tol: float = DEFAULT_TOL, max_iter: int = MAX_ITER) -> NormResult:
    """Luxemburg norm of samples ``g > 0`` with weights ``w`` and exponents ``pv``.

    The root of rho(g/mu) = 1 is found in u = log(mu), where log rho is convex
    and decreasing with slope in [-p+, -p-].  Newton steps from the left end of
    the bracket increase monotonically to the root; a bisection step is taken
    whenever Newton would leave the bracket.
    """
    if tol <= 0:
        raise VarExpError("tol must be positive")
    w, g, pv = (np.asarray(a, dtype=float) for a in (w, g, pv))
    if g.size == 0:
        return NormResult(0.0, "closed-form", 0.0)
    logw, logg = np.log(w), np.log(g)
    if np.ptp(pv) == 0:
        c = float(pv[0])
        value = math.exp(_log_modular(logw, logg, pv, 0.0) / c)
        res = abs(math.expm1(_log_modular(logw, logg, pv, math.log(value))))
        return NormResult(value, "closed-form", res)

    pmin, pmax = float(pv.min()), float(pv.max())
    L0 = _log_modular(logw, logg, pv, 0.0)
    # sandwich: the norm lies between rho^{1/p+} and rho^{1/p-} (order depends on rho >< 1)
    lo, hi = sorted((L0 / pmax, L0 / pmin))
    lo, hi = lo - 1e-12, hi + 1e-12
    u = lo
    for _ in range(max_iter):
        t = logw + pv * (logg - u)
        tmax = t.max()
        e = np.exp(t - tmax)
        se = e.sum()
        G = tmax + math.log(se)
        if abs(math.expm1(G)) <= tol * 1e-3:
            break
        if G > 0:
            lo = u
        else:
            hi = u
        step = u + G / (float(np.dot(e, pv)) / se)
        u = step if lo < step < hi else 0.5 * (lo + hi)
        if hi - lo < 1e-15 * max(1.0, abs(u)):
            break
    else:
        raise ConvergenceError("Luxemburg root search did not converge",
                               bracket=(math.exp(lo), math.exp(hi)))
    value = math.exp(u)
    res = abs(math.expm1(_log_modular(logw, logg, pv, u)))
    if res > tol:
        raise ConvergenceError(f"Luxemburg residual {res:.3e} above tol",
                               bracket=(math.exp(lo), math.exp(hi)))
    return NormResult(value, "bisection", res)


def sandwich_holds(rho: float, norm: NormResult | float, p: ExponentField) -> bool:
    """Check min(v^p+, v^p-) <= rho <= max(v^p+, v^p-) for a computed pair.

    The slack is what the residual of the root solve permits, plus rounding.
    """
    v = float(norm)
    res = getattr(norm, "residual", 0.0)
    if v == 0:
        return rho == 0
    a, b = v ** p.sup, v ** p.inf
    slack = (res + 1e-13) * max(1.0, p.sup)
    return min(a, b) * (1 - slack) <= rho <= max(a, b) * (1 + slack)


def _indicator_norms(w, p, order, counts):
    """Luxemburg norm of the indicator of the first ``counts[k]`` cells in
    ``order``, for every k."""
    out = np.zeros(len(counts))
    ws, ps = w[order], p[order]
    const = np.ptp(p) == 0 if p.size else True
    if const:
        meas = np.concatenate([[0.0], np.cumsum(ws)])
        c = float(p[0]) if p.size else 1.0
        return meas[counts] ** (1.0 / c)
    ones = np.ones(ws.size)
    for k, m in enumerate(counts):
        if m:
            out[k] = luxemburg_arrays(ws[:m], ones[:m], ps[:m], tol=1e-12).value
    return out


def lambda_grid(f: ScalarField, lambdas=None, n_lambda: int = DEFAULT_LAMBDAS) -> np.ndarray:
    """Log-spaced levels spanning the nonzero range of |f| (or validate a given grid)."""
    g = np.abs(f.values)
    nz = g[g > 0]
    if nz.size == 0:
        return np.array([1.0]) if lambdas is None else np.asarray(lambdas, dtype=float)
    gmin, gmax = float(nz.min()), float(nz.max())
    if lambdas is None:
        return np.geomspace(gmin * (1 - 1e-6), gmax * (1 + 1e-6), n_lambda)
    lam = np.asarray(lambdas, dtype=float)
    if lam.ndim != 1 or lam.size < 2 or np.any(lam <= 0) or np.any(np.diff(lam) <= 0):
        raise GridError("lambda grid must be positive and strictly increasing")
    if lam[0] >= gmin or lam[-1] <= gmax:
        raise GridError("grid too narrow: lambda grid must bracket the range of |f|")
    return lam


def _level_counts(g, lam):
    order = np.argsort(-g, kind="stable")
    gs = g[order]
    # number of cells with |f| > lambda
    counts = np.searchsorted(-gs, -lam, side="left")
    return order, counts


def weak_norm(f: ScalarField, p: ScalarField, lambdas=None,
              n_lambda: int = DEFAULT_LAMBDAS) -> NormResult:
    """sup over the level grid of lambda * ||chi_{|f|>lambda}||."""
    _check_pair(f, p)
    lam = lambda_grid(f, lambdas, n_lambda)
    g = np.abs(f.values)
    if not np.any(g > 0):
        scan = LevelScan.from_values(lam, np.zeros_like(lam))
        return NormResult(0.0, "level-scan", 0.0, scan)
    order, counts = _level_counts(g, lam)
    norms = _indicator_norms(f.domain.weights, np.asarray(p.values), order, counts)
    scan = LevelScan.from_values(lam, lam * norms)
    return NormResult(scan.sup_value, "level-scan", scan.gap_ratio - 1.0, scan)


def weak_modular_sup(f: ScalarField, p: ScalarField, lambdas=None,
                     n_lambda: int = DEFAULT_LAMBDAS) -> LevelScan:
    """Level scan of lambda -> integral over {|f| > lambda} of lambda^p."""
    _check_pair(f, p)
    lam = lambda_grid(f, lambdas, n_lambda)
    g = np.abs(f.values)
    if not np.any(g > 0):
        return LevelScan.from_values(lam, np.zeros_like(lam))
    order, counts = _level_counts(g, lam)
    w = f.domain.weights[order]
    pv = np.asarray(p.values)[order]
    vals = np.empty(lam.size)
    if np.ptp(pv) == 0:
        meas = np.concatenate([[0.0], np.cumsum(w)])
        vals = meas[counts] * lam ** pv[0]
    else:
        loglam = np.log(lam)
        for k, m in enumerate(counts):
            vals[k] = float(np.dot(w[:m], np.exp(pv[:m] * loglam[k])))
    return LevelScan.from_values(lam, vals)


@dataclass(frozen=True)
class EmbeddingReport:
    q_modular: float
    bound: float
    weak_norm: float
    gap: float
    series: float
    holds: bool

    def to_dict(self) -> dict:
        return asdict(self)


def embedding_check(f: ScalarField, p: ExponentField, q: ExponentField,
                    lambdas=None) -> EmbeddingReport:
    """Compare the q-modular of f with the dyadic-layer bound derived from its
    weak p-norm, valid when p - q is bounded below by a positive gap."""
    _check_pair(f, p)
    _check_pair(f, q)
    gap = float(np.min(p.values - q.values))
    if gap <= 0:
        raise VarExpError("embedding hypothesis violated: need (p - q)^- > 0")
    W = weak_norm(f, p, lambdas).value
    # sum_{i>=0} 2^{-i gap}, truncated once the tail drops below 1e-12 of the partial sum
    r = 2.0 ** (-gap)
    series, term, i = 0.0, 1.0, 0
    while True:
        series += term
        i += 1
        term = r ** i
        if term / (1 - r) < 1e-12 * series:
            break
    bound = 2.0 ** q.sup * max(W ** p.sup, W ** p.inf) * series + f.domain.measure
    qm = modular(f, q)
    return EmbeddingReport(qm, bound, W, gap, series, bool(qm <= bound))


def power_rescale(f: ScalarField, q: float, p: ExponentField, lambdas=None) -> NormResult:
    """Weak norm of |f|^q with respect to p/q."""
    q = float(q)
    if q <= 0:
        raise VarExpError("q must be a positive constant")
    fq = f.power(q)
    lam = None if lambdas is None else np.asarray(lambdas, dtype=float) ** q
    return weak_norm(fq, p.scaled(1.0 / q), lam)


def adversarial_exponent(f: ScalarField, branch: str = "small") -> ExponentField:
    """Pointwise exponent q built from |f| that turns the weak modular of
    |f|^q at a fixed level into the strong modular of f.

    ``small``: (1/2)^{1/q} = min(|f|, 1)/2, witnessed at level 1/2.
    ``large``: 2^{1/q} = max(|f|, 1)/2 where |f| > 2, witnessed at level 2.
    q = 1 wherever the defining relation is vacuous.
    """
    g = np.abs(f.values)
    if not np.any(g > 0):
        raise VarExpError("adversarial exponent needs a nonzero field")
    ln2 = math.log(2.0)
    q = np.ones_like(g)
    if branch == "small":
        m = np.minimum(g, 1.0)
        nz = m > 0
        q[nz] = ln2 / (ln2 - np.log(m[nz]))
    elif branch == "large":
        big = g > 2.0
        q[big] = ln2 / np.log(g[big] / 2.0)
    else:
        raise VarExpError(f"unknown branch {branch!r}")
    return ExponentField(f.domain, q, f"q_{branch}")


@dataclass(frozen=True)
class AdversarialWitness:
    level: float
    weak_modular_at_level: float
    lower_bound: float
    branch: str


def adversarial_witness(f: ScalarField, p: ExponentField, branch: str = "small") -> AdversarialWitness:
    """Evaluate the weak modular of |f|^q in the p/q scale at the witness
    level and the lower bound 2^{-p+} rho(f chi) it must dominate."""
    _check_pair(f, p)
    q = adversarial_exponent(f, branch)
    level = 0.5 if branch == "small" else 2.0
    g = np.abs(f.values)
    with np.errstate(over="ignore"):
        fq = g ** q.values  # inf is fine: only the comparison with the level is used
    w = f.domain.weights
    on = fq > level
    value = float(np.dot(w[on], level ** (p.values[on] / q.values[on])))
    piece = (g <= 1.0) if branch == "small" else (g > 2.0)
    lower = 2.0 ** (-p.sup) * float(np.dot(w[piece], g[piece] ** p.values[piece]))
    return AdversarialWitness(level, value, lower, branch)
