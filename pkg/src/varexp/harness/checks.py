"""Registered theorem checks.

Every check is a runner ``fn(params, seed) -> (cases, monitor)`` plus a
parameter dict of defaults.  ``cases`` follow the kinds of
:mod:`varexp.harness.report`; ``monitor`` is the single scalar that
:func:`refinement_study` tracks when the check's resolution is scaled.
"""

from __future__ import annotations

import copy
import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .. import fundamental as fund
from ..errors import VarExpError
from ..fields import (Domain, ExponentField, RadialDomain, ScalarField,
                      constant_exponent, make_exponent, make_field, sobolev_conjugate,
                      sphere_area)
from ..interpolation import (default_infimum_grid, infimum_formula, tail_kernel_closed_form,
                             tail_kernel_norm, theta_norm)
from ..potentials import (KernelSpec, MeasureSpec, hedberg_check, maximal_values,
                          riesz_field, riesz_values, wolff_values, wolff_vs_havin)
from ..spaces import (adversarial_witness, embedding_check, luxemburg_norm, modular,
                      weak_modular_sup, weak_norm)
from .report import Policy, annotate, bound_case, decide, label_case, rule_case, trend_case

REPORT_VERSION = 1


@dataclass(frozen=True)
class CheckSpec:
    id: str
    runner: Callable
    defaults: dict
    resolution_key: str
    description: str


CHECKS: dict[str, CheckSpec] = {}


def register(check_id, defaults, resolution_key, description):
    def wrap(fn):
        CHECKS[check_id] = CheckSpec(check_id, fn, defaults, resolution_key, description)
        return fn
    return wrap


class CaseError(VarExpError):
    """A runner precondition failed; the message names the case."""


def _case(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except Exception as exc:  # re-raised with the case id attached
        raise CaseError(f"case {name}: {exc}") from exc


def _seeded(spec, seed, k):
    spec = dict(spec)
    if spec.get("family") == "random" and "seed" not in spec:
        spec["seed"] = int(seed) + k
    return spec


def _label(spec) -> str:
    fam = spec.get("family")
    if fam == "constant":
        return f"const{spec.get('value', 1.0):g}"
    keys = [k for k in sorted(spec) if k not in ("family", "seed")]
    return fam + "(" + ",".join(f"{k}={spec[k]}" for k in keys) + ")"


def _radial(n, r_min, r_max, cpd):
    return RadialDomain.log(int(n), float(r_min), float(r_max), int(cpd))


# ---------------------------------------------------------------------------
# spaces
# ---------------------------------------------------------------------------


@register("weak-strong-embed",
          {"n": 3, "exponents": [1.5, 2.0, 3.0], "gap": 0.2, "decades": [8, 16, 32],
           "cells_per_decade": 32},
          "cells_per_decade",
          "q-modular of a weak-L^p power stays below the dyadic bound when p - q > 0;"
          " with q = p it diverges logarithmically")
def _weak_strong_embed(P, seed):
    n, cases, monitor = P["n"], [], 0.0
    for pv in P["exponents"]:
        qm, pm, ratio = [], [], []
        for dec in P["decades"]:
            d = _radial(n, 10.0 ** -dec, 1.0, P["cells_per_decade"])
            p = constant_exponent(d, pv)
            f = make_field({"family": "power", "exponent": n / pv}, d)
            rep = _case(f"p={pv}", embedding_check, f, p, constant_exponent(d, pv - P["gap"]))
            qm.append(rep.q_modular)
            ratio.append(rep.q_modular / rep.bound)
            pm.append(modular(f, p))
        cases.append(trend_case(f"q-modular p={pv} q=p-{P['gap']}", P["decades"], qm,
                                "bounded", "decades"))
        cases.append(bound_case(f"embedding bound p={pv}", ratio, upper=1.0))
        cases.append(trend_case(f"p-modular p={pv} q=p", P["decades"], pm, "divergent", "decades"))
        # additive growth per halving of the inner cutoff
        eps = 10.0 ** -P["decades"][0]
        grow = []
        for e in (eps, eps / 2):
            d = _radial(n, e, 1.0, P["cells_per_decade"])
            grow.append(modular(make_field({"family": "power", "exponent": n / pv}, d),
                                constant_exponent(d, pv)))
        cases.append(bound_case(f"p-modular growth per eps-halving p={pv}", grow[1] - grow[0],
                                lower=math.log(2.0)))
        monitor = max(monitor, qm[-1])
    return cases, monitor


@register("adversarial-q",
          {"n": 3, "exponents": [1.5, 2.0], "decades": [2, 4, 8], "cells_per_decade": 32,
           "smooth": {"family": "smooth_bump", "width": 0.8}},
          "cells_per_decade",
          "the pointwise exponent q built from f turns the weak modular of |f|^q into"
          " the strong modular of f: divergent for a weak-but-not-strong power")
def _adversarial_q(P, seed):
    n, cpd, dec = P["n"], P["cells_per_decade"], P["decades"]
    cases, monitor = [], 0.0
    for pv in P["exponents"]:
        rows = {k: [] for k in ("large", "wl", "small", "ws", "smooth", "lb_l", "lb_s")}
        for k in dec:
            # large branch: unit ball, inner cutoff -> 0
            d = _radial(n, 10.0 ** -k, 1.0, cpd)
            p = constant_exponent(d, pv)
            f = make_field({"family": "power", "exponent": n / pv}, d)
            w = _case(f"large p={pv}", adversarial_witness, f, p, "large")
            rows["large"].append(w.weak_modular_at_level)
            rows["lb_l"].append(w.weak_modular_at_level / w.lower_bound)
            rows["wl"].append(weak_norm(f, p).value)
            g = make_field(P["smooth"], d)
            rows["smooth"].append(adversarial_witness(g, p, "small").weak_modular_at_level)
            # small branch: exterior of the unit ball, outer radius -> infinity
            d2 = _radial(n, 1.0, 10.0 ** k, cpd)
            p2 = constant_exponent(d2, pv)
            f2 = make_field({"family": "power", "exponent": n / pv}, d2)
            w2 = _case(f"small p={pv}", adversarial_witness, f2, p2, "small")
            rows["small"].append(w2.weak_modular_at_level)
            rows["lb_s"].append(w2.weak_modular_at_level / w2.lower_bound)
            rows["ws"].append(weak_norm(f2, p2).value)
        cases += [
            trend_case(f"large-branch witness p={pv} (eps->0)", dec, rows["large"], "divergent", "decades"),
            trend_case(f"weak norm p={pv} (eps->0)", dec, rows["wl"], "bounded", "decades"),
            trend_case(f"small-branch witness p={pv} (R->inf)", dec, rows["small"], "divergent", "decades"),
            trend_case(f"weak norm p={pv} (R->inf)", dec, rows["ws"], "bounded", "decades"),
            trend_case(f"smooth field witness p={pv}", dec, rows["smooth"], "bounded", "decades"),
            # equality for constant p, so only rounding slack
            bound_case(f"witness dominates 2^-p+ modular, large p={pv}", rows["lb_l"],
                       lower=1.0 - 1e-12),
            bound_case(f"witness dominates 2^-p+ modular, small p={pv}", rows["lb_s"],
                       lower=1.0 - 1e-12),
        ]
        monitor = max(monitor, rows["wl"][-1])
    return cases, monitor


# ---------------------------------------------------------------------------
# potentials
# ---------------------------------------------------------------------------

_HEDBERG = {
    "resolutions": [64, 128, 256],
    "exponents": [{"family": "constant", "value": 1.2}, {"family": "constant", "value": 1.5},
                  {"family": "bump", "p0": 1.3, "b": 0.2, "x0": [0.05, 0.05]}],
    "alphas": [0.5, 0.8],
    "fields": [{"family": "indicator_ball", "radius": 0.5},
               {"family": "indicator_annulus", "inner": 0.3, "outer": 0.7},
               {"family": "smooth_bump", "width": 0.8},
               {"family": "random", "blocks": 8}],
    "points": [[x, y] for x in (-0.61, -0.23, 0.17, 0.53) for y in (-0.47, 0.09, 0.41, 0.77)],
}


def hedberg_sweep(H, seed):
    """Sup ratios I f / (M f)^{1 - alpha p / n} on unit-norm lattice fields in
    [-1, 1]^2, one trend case per (exponent, alpha, field)."""
    pts = np.asarray(H["points"], dtype=float)
    cases, sups = [], []
    for ps in H["exponents"]:
        for a in H["alphas"]:
            for k, fs in enumerate(H["fields"]):
                fs = _seeded(fs, seed, k)
                name = f"hedberg p={_label(ps)} alpha={a} f={_label(fs)}"
                vals = []
                for N in H["resolutions"]:
                    d = Domain.box([-1.0, -1.0], [1.0, 1.0], int(N))
                    p = make_exponent(ps, d)
                    f = make_field(fs, d)
                    f = f * (1.0 / luxemburg_norm(f, p).value)
                    vals.append(_case(name, hedberg_check, f, p, a, pts).max)
                cases.append(trend_case(name, H["resolutions"], vals, "bounded"))
                sups.append(vals[-1])
    return cases, sups


@register("strong-to-weak-riesz",
          {"n": 3, "alpha": 1.0, "decades": [3, 6, 12], "cells_per_decade": 32,
           "exponents": [{"family": "constant", "value": 1.5},
                         {"family": "bump", "p0": 1.5, "b": 0.2}],
           "fields": [{"family": "indicator_ball", "radius": 0.5},
                      {"family": "power", "exponent": 1.6, "support": 1.0},
                      {"family": "random", "blocks": 8}],
           "q": ["1", "1/(p-1)", "p/p#"],
           "hedberg": _HEDBERG},
          "cells_per_decade",
          "weak modular of (I f)^q in the p#/q scale stays bounded for unit-norm f;"
          " includes the pointwise Hedberg sweep")
def _strong_to_weak(P, seed):
    n, a = P["n"], P["alpha"]
    cases, monitor = [], 0.0
    for ps in P["exponents"]:
        for k, fs in enumerate(P["fields"]):
            fs = _seeded(fs, seed, k)
            traces = {q: [] for q in P["q"]}
            for dec in P["decades"]:
                d = _radial(n, 10.0 ** -dec, 1.0, P["cells_per_decade"])
                p = make_exponent(ps, d)
                f = make_field(fs, d)
                f = f * (1.0 / luxemburg_norm(f, p).value)
                psharp = np.asarray(sobolev_conjugate(p, a, n=n))
                I = _case(f"riesz {_label(fs)}", riesz_values, f, KernelSpec(a))
                pv = np.asarray(p.values)
                for qk in P["q"]:
                    q = {"1": np.ones(d.size), "1/(p-1)": 1.0 / (pv - 1.0),
                         "p/p#": pv / psharp}[qk]
                    g = ScalarField(d, I ** q)
                    e = ExponentField(d, psharp / q, "p#/q")
                    traces[qk].append(weak_modular_sup(g, e).sup_value)
            for qk, vals in traces.items():
                cases.append(trend_case(f"p={_label(ps)} f={_label(fs)} q={qk}", P["decades"],
                                        vals, "bounded", "decades"))
                monitor = max(monitor, vals[-1])
    if P.get("hedberg"):
        hc, _ = hedberg_sweep(P["hedberg"], seed)
        cases += hc
    return cases, monitor


@register("maximal-weak-weak",
          {"n": 3, "exponents": [1.5, 2.0, 3.0], "r_min": 1e-6, "cells_per_decade": [8, 16, 32]},
          "cells_per_decade",
          "||M f||_w / ||f||_w for the weak-but-not-strong power |x|^{-n/p}")
def _maximal_weak_weak(P, seed):
    n, cases, monitor = P["n"], [], 0.0
    for pv in P["exponents"]:
        ratios = []
        for cpd in P["cells_per_decade"]:
            d = _radial(n, P["r_min"], 1.0, cpd)
            p = constant_exponent(d, pv)
            f = make_field({"family": "power", "exponent": n / pv, "support": 1.0}, d)
            Mf = ScalarField(d, _case(f"maximal p={pv}", maximal_values, f), "Mf")
            ratios.append(weak_norm(Mf, p).value / weak_norm(f, p).value)
        cases.append(trend_case(f"weak-norm ratio p={pv}", P["cells_per_decade"], ratios, "bounded"))
        cases.append(bound_case(f"ratio finite p={pv}", ratios, lower=0.0, upper=1e6))
        monitor = max(monitor, ratios[-1])
    return cases, monitor


@register("weak-to-weak-riesz",
          {"n": 3, "pairs": [[1.5, 1.0], [2.0, 1.0], [2.0, 0.5]], "decades": [6, 12, 24],
           "cells_per_decade": 16},
          "cells_per_decade",
          "weak modular of I f in w-L^{p#} is bounded for f = |x|^{-n/p} while its"
          " strong p-modular diverges")
def _weak_to_weak(P, seed):
    n, cases, monitor = P["n"], [], 0.0
    for pv, a in P["pairs"]:
        wm, sm, wn = [], [], []
        for dec in P["decades"]:
            d = _radial(n, 10.0 ** -dec, 1.0, P["cells_per_decade"])
            p = constant_exponent(d, pv)
            f = make_field({"family": "power", "exponent": n / pv, "support": 1.0}, d)
            w = weak_norm(f, p).value
            f = f * (1.0 / w)
            ps = constant_exponent(d, sobolev_conjugate(pv, a, n=n))
            I = _case(f"p={pv} alpha={a}", riesz_field, f, KernelSpec(a))
            wm.append(weak_modular_sup(I, ps).sup_value)
            sm.append(modular(f, p))
            wn.append(w)
        tag = f"p={pv} alpha={a}"
        cases += [trend_case(f"weak modular of I f, {tag}", P["decades"], wm, "bounded", "decades"),
                  trend_case(f"strong modular of f, {tag}", P["decades"], sm, "divergent", "decades"),
                  trend_case(f"weak norm of f, {tag}", P["decades"], wn, "bounded", "decades")]
        monitor = max(monitor, wm[-1])
    return cases, monitor


@register("wolff-havin",
          {"n": 3, "alpha": 1.0, "R": 2.0, "r_min": 1e-4, "cells_per_decade": [8, 16, 32],
           "exponents": [{"family": "constant", "value": 2.0},
                         {"family": "constant", "value": 1.5},
                         {"family": "bump", "p0": 1.8, "b": 0.2}],
           "densities": [{"family": "smooth_bump", "width": 0.05},
                         {"family": "constant", "value": 1.0},
                         {"family": "indicator_annulus", "inner": 0.3, "outer": 0.6}],
           "points": [1e-3, 0.9, 12]},
          "cells_per_decade",
          "Wolff potential over Havin-Maz'ya potential: the empirical constant C in W <= C V")
def _wolff_havin(P, seed):
    n, a, cases, monitor = P["n"], P["alpha"], [], 0.0
    lo, hi, m = P["points"]
    pts = np.geomspace(lo, hi, int(m))
    for ps in P["exponents"]:
        for k, fs in enumerate(P["densities"]):
            fs = _seeded(fs, seed, k)
            C = []
            for cpd in P["cells_per_decade"]:
                d = _radial(n, P["r_min"], 1.0, cpd)
                p = make_exponent(ps, d)
                f = make_field(fs, d)
                C.append(_case(f"{_label(ps)} {_label(fs)}", wolff_vs_havin, f, a, p, pts, P["R"]).max)
            cases.append(trend_case(f"C p={_label(ps)} mu={_label(fs)}", P["cells_per_decade"], C))
            monitor = max(monitor, C[-1])
    # zero measure: both sides vanish
    d = _radial(n, P["r_min"], 1.0, P["cells_per_decade"][0])
    z = ScalarField(d, np.zeros(d.size))
    W0 = wolff_values(MeasureSpec(density=z), a, 2.0, P["R"], pts[:3])
    cases.append(bound_case("zero measure gives zero", float(np.max(W0)), lower=0.0, upper=0.0))
    return cases, monitor


@register("wolff-mapping",
          {"n": 3, "alpha": 1.0, "p": 2.0, "r": 1.0, "R": 2.0, "decades": [3, 6, 12],
           "cells_per_decade": 16,
           "densities": [{"family": "constant", "value": 1.0},
                         {"family": "power", "exponent": 2.5, "support": 1.0},
                         {"family": "power", "exponent": 2.8, "support": 1.0}]},
          "cells_per_decade",
          "weak modular of the Wolff field of a unit L^r density in w-L^{nr(p-1)/(n-alpha p r)}")
def _wolff_mapping(P, seed):
    n, a, pv, r = P["n"], P["alpha"], P["p"], P["r"]
    if a * pv * r >= n:
        raise VarExpError("wolff-mapping needs alpha p r < n")
    target = n * r * (pv - 1.0) / (n - a * pv * r)
    cases, monitor = [], 0.0
    for k, fs in enumerate(P["densities"]):
        fs = _seeded(fs, seed, k)
        vals = []
        for dec in P["decades"]:
            d = _radial(n, 10.0 ** -dec, 1.0, P["cells_per_decade"])
            f = make_field(fs, d)
            f = f * (1.0 / luxemburg_norm(f, constant_exponent(d, r)).value)
            W = _case(_label(fs), wolff_values, MeasureSpec(density=f), a, pv, P["R"])
            vals.append(weak_modular_sup(ScalarField(d, W, "wolff"),
                                         constant_exponent(d, target)).sup_value)
        cases.append(trend_case(f"weak modular of W, mu={_label(fs)}", P["decades"], vals,
                                "bounded", "decades", target_exponent=target))
        monitor = max(monitor, vals[-1])
    return cases, monitor


# ---------------------------------------------------------------------------
# interpolation and kernel lemmas
# ---------------------------------------------------------------------------


@register("interpolation-identity",
          {"n": 3, "theta": 0.5, "r_min": 1e-4, "cells_per_decade": [16, 32, 64],
           "exponents": [{"family": "constant", "value": 1.5},
                         {"family": "bump", "p0": 1.5, "b": 0.2}],
           "fields": [{"family": "indicator_ball", "radius": 0.5},
                      {"family": "indicator_annulus", "inner": 0.3, "outer": 0.6},
                      {"family": "power", "exponent": 2.0, "support": 1.0},
                      {"family": "power", "exponent": 2.0, "support": 1.0, "scale": 10.0},
                      {"family": "smooth_bump", "width": 0.8},
                      {"family": "random", "blocks": 8}],
           "indicator_tol": 1e-3},
          "cells_per_decade",
          "(theta, inf)-norm for (L^{(1-theta)p}, L^inf) against the weak p-norm:"
          " equality on indicators, a single containment constant on the suite")
def _interpolation_identity(P, seed):
    n, th, cases, monitor = P["n"], P["theta"], [], 0.0
    fields = [_seeded(fs, seed, k) for k, fs in enumerate(P["fields"])]
    for ps in P["exponents"]:
        Cs, per_field, profiles = [], [], {}
        for cpd in P["cells_per_decade"]:
            d = _radial(n, P["r_min"], 1.0, cpd)
            p = make_exponent(ps, d)
            p0 = p.scaled(1.0 - th)
            ratios = []
            for fs in fields:
                f = make_field(fs, d)
                prof = _case(_label(fs), theta_norm, f, p0, th)
                ratios.append(prof.norm_value / weak_norm(f, p).value)
                if cpd == P["cells_per_decade"][-1]:
                    profiles[_label(fs)] = {"t": prof.t_grid, "K": prof.k_values}
            per_field.append(ratios)
            r = np.asarray(ratios)
            Cs.append(float(max(r.max(), 1.0 / r.min())))
        R = np.asarray(per_field)
        tag = _label(ps)
        cases.append(trend_case(f"suite constant C p={tag}", P["cells_per_decade"], Cs,
                                "bounded", profiles=profiles))
        cases.append(bound_case(f"suite containment in [1/C, C] p={tag}", R.ravel(),
                                lower=1.0 / max(Cs), upper=max(Cs)))
        for j, fs in enumerate(fields):
            if fs["family"].startswith("indicator"):
                cases.append(bound_case(f"indicator equality p={tag} f={_label(fs)}",
                                        np.abs(R[:, j] - 1.0), upper=P["indicator_tol"]))
        # joint homogeneity: f and a scaled copy give the same ratio
        base = [j for j, fs in enumerate(fields)
                if fs["family"] == "power" and "scale" not in fs]
        scaled = [j for j, fs in enumerate(fields)
                  if fs["family"] == "power" and "scale" in fs]
        for j0, j1 in zip(base, scaled):
            cases.append(bound_case(f"scaled copy ratio p={tag}",
                                    np.abs(R[:, j1] / R[:, j0] - 1.0), upper=1e-6))
        monitor = max(monitor, Cs[-1])
    return cases, monitor


@register("infimum-lemma", {"grid": "default", "rel_tol": 1e-6}, None,
          "golden-section infimum against min(t^{b/(a+b)}, delta^{-b}) inside the exact"
          " envelope [min(a/b, 1), 1 + a/b]; argmin < 1 iff t > 1 and delta < 1")
def _infimum_lemma(P, seed):
    grid = default_infimum_grid() if P["grid"] == "default" else [tuple(g) for g in P["grid"]]
    res = [_case(f"{g}", infimum_formula, *g, rel_tol=P["rel_tol"]) for g in grid]
    ratio = np.array([r.ratio for r in res])
    lo = np.array([r.envelope[0] for r in res]) * (1 - P["rel_tol"])
    hi = np.array([r.envelope[1] for r in res]) * (1 + P["rel_tol"])
    g = np.asarray(grid, dtype=float)
    cases = [bound_case("ratio inside envelope", ratio, lower=lo, upper=hi,
                        alpha=g[:, 0], beta=g[:, 1]),
             rule_case("argmin location", [r.argmin for r in res], g[:, 3], g[:, 2])]
    return cases, float(ratio.max())


@register("tail-kernel",
          {"n": 3, "alpha": 1.0, "deltas": [1e-2, 1e-1, 1.0, 10.0],
           "exponents": [{"family": "constant", "value": 2.0},
                         {"family": "constant", "value": 1.5},
                         {"family": "decay", "p0": 2.2, "p_inf": 1.8},
                         {"family": "decay", "p0": 2.4, "p_inf": 1.6}]},
          None,
          "norm of the truncated kernel outside B(x, delta) in L^{p'} over |B|^{-1/(p#)_B},"
          " stable across delta")
def _tail_kernel(P, seed):
    n, a, cases, monitor = P["n"], P["alpha"], [], 0.0
    d = _radial(n, 1e-3, 1.0, 8)
    for ps in P["exponents"]:
        p = ps["value"] if ps["family"] == "constant" else make_exponent(ps, d)
        res = [_case(_label(ps), tail_kernel_norm, delta, a, p, n) for delta in P["deltas"]]
        ratios = [r.ratio for r in res]
        cases.append(trend_case(f"lhs/rhs p={_label(ps)}", P["deltas"], ratios, "bounded",
                                "delta", lhs=[r.lhs for r in res], rhs=[r.rhs for r in res]))
        if ps["family"] == "constant":
            exact = [tail_kernel_closed_form(delta, a, ps["value"], n) for delta in P["deltas"]]
            cases.append(bound_case(f"closed form p={_label(ps)}",
                                    np.abs(np.array([r.lhs for r in res]) / exact - 1.0),
                                    upper=1e-8))
        monitor = max(monitor, max(ratios))
    return cases, monitor


# ---------------------------------------------------------------------------
# radial examples
# ---------------------------------------------------------------------------


@register("fundamental-thresholds",
          {"pairs": [[3, 2.0], [4, 2.5], [5, 3.0]], "targets": ["u", "gradient"],
           "below": 0.95, "above": 1.05,
           "ladder": [list(x) for x in fund.DEFAULT_LADDER],
           "anchor": {"n": 3, "p": 2.0, "r_min": 1e-4, "cells_per_decade": 128, "r_floor": 1e-3,
                      "tol": 1e-6},
           "variable_q": {"n": 3, "p": 2.0, "q_far": 6.0}},
          None,
          "weak-space membership of u and |grad u| flips across the sharp thresholds")
def _fundamental_thresholds(P, seed):
    ladder = tuple(tuple(x) for x in P["ladder"])
    cases, sups = [], []
    for n, pv in P["pairs"]:
        for tgt in P["targets"]:
            thr = (fund.u_threshold if tgt == "u" else fund.gradient_threshold)(n, pv)
            for f, want in ((P["below"], "member"), (1.0, None), (P["above"], "non-member")):
                m = _case(f"n={n} p={pv} {tgt} q={f}q*", fund.membership_scan, pv, thr * f, n,
                          tgt, ladder)
                cases.append(label_case(f"n={n} p={pv} {tgt} q={f:g}*q*", m.verdict, want,
                                        sups=m.sups, growth=m.growth, threshold=thr,
                                        near_threshold=m.near_threshold))
                sups.append(m.sups[-1])
    # locality: q(0) decides, larger q away from the singularity does not matter
    V = P["variable_q"]
    thr = fund.u_threshold(V["n"], V["p"])
    for f, want in ((P["below"], "member"), (P["above"], "non-member")):
        q = {"family": "decay", "p0": thr * f, "p_inf": V["q_far"]}
        m = _case(f"variable q {f}", fund.membership_scan, V["p"], q, V["n"], "u", ladder)
        cases.append(label_case(f"variable q, q(0)={f:g}*q*, n={V['n']} p={V['p']} u",
                                m.verdict, want, sups=m.sups, growth=m.growth))
    A = P["anchor"]
    d = _radial(A["n"], A["r_min"], 1.0, A["cells_per_decade"])
    sol = fund.fundamental_solution(constant_exponent(d, A["p"]), A["n"])
    sel = d.points >= A["r_floor"]
    err = np.abs(sol.u_values[sel] / fund.constant_u(A["n"], A["p"], d.points[sel]) - 1.0)
    cases.append(bound_case("constant-p anchor u(r)", float(err.max()), upper=A["tol"]))
    return cases, float(max(sups))


@register("l1-regularization",
          {"n": 3, "p": 2.0,
           "lipschitz": {"family": "affine", "a": 2.0, "b": 0.5, "lower": 1.5, "upper": 2.8},
           "cutoffs": [0.2, 0.1, 0.05, 0.025], "r_min": 1e-4, "cells_per_decade": 128,
           "fd_points": 20, "fd_tol": 0.02, "c1_tol": 1e-10, "mass_tol": 1e-10},
          "cells_per_decade",
          "C^1 regularization v_r of u: matching residuals, L^1 masses of the right-hand"
          " side, finite-difference divergence oracle")
def _l1_regularization(P, seed):
    n, cuts = P["n"], P["cutoffs"]
    d = _radial(n, P["r_min"], 1.0, P["cells_per_decade"])
    cases = []
    sol = fund.fundamental_solution(constant_exponent(d, P["p"]), n)
    masses, c1, fd = [], [], []
    for c in cuts:
        reg = _case(f"regularize r={c}", fund.regularize, sol, c)
        masses.append(reg.l1_mass())
        c1.append(max(reg.value_residual, reg.slope_residual))
        rho = np.linspace(c / 16, 15 * c / 16, int(P["fd_points"]))
        fd.append(float(np.max(np.abs(fund.fd_divergence_rhs(reg, rho) / reg.rhs(rho) - 1.0))))
    exact = [sphere_area(n) * float(sol.gradient_at(np.array([c]))[0]) ** (P["p"] - 1) * c ** (n - 1)
             for c in cuts]
    cases += [bound_case("C1 residual, constant p", c1, upper=P["c1_tol"]),
              bound_case("L1 mass vs closed form, constant p",
                         np.abs(np.asarray(masses) / exact - 1.0), upper=P["mass_tol"],
                         masses=masses),
              bound_case("finite-difference oracle, constant p", fd, upper=P["fd_tol"])]
    rep = fund.l1_uniformity_check(sol, cuts)
    cases.append(bound_case("v_r increases to u, constant p", float(rep.monotone), lower=1.0))
    # Lipschitz exponent
    pl = make_exponent(P["lipschitz"], d)
    sl = fund.fundamental_solution(pl, n)
    rep = _case("lipschitz", fund.l1_uniformity_check, sl, cuts)
    scales = [1.0 / c for c in cuts]
    cases.append(trend_case("L1 mass, Lipschitz p", scales, rep.masses, "bounded", "1/r"))
    cases.append(bound_case("v_r increases to u, Lipschitz p", float(rep.monotone), lower=1.0))
    fdl, c1l, warn = [], [], []
    for c in cuts:
        reg = fund.regularize(sl, c)
        rho = np.linspace(c / 16, 15 * c / 16, int(P["fd_points"]))
        fdl.append(float(np.max(np.abs(fund.fd_divergence_rhs(reg, rho) / reg.rhs(rho) - 1.0))))
        c1l.append(max(reg.value_residual, reg.slope_residual))
        warn.append(reg.sign_warning)
    cases += [bound_case("C1 residual, Lipschitz p", c1l, upper=P["c1_tol"]),
              bound_case("finite-difference oracle, Lipschitz p", fdl, upper=P["fd_tol"]),
              label_case("rhs sign warnings, Lipschitz p", str(any(warn)), None, per_cutoff=warn)]
    return cases, float(max(rep.masses))


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------


def merged_params(check_id: str, overrides=None) -> dict:
    if check_id not in CHECKS:
        raise VarExpError(f"unknown check id {check_id!r}; known: {', '.join(CHECKS)}")
    P = copy.deepcopy(CHECKS[check_id].defaults)
    for k, v in (overrides or {}).items():
        if k not in P:
            raise VarExpError(f"unknown parameter {k!r} for check {check_id}")
        P[k] = copy.deepcopy(v)
    return P


def run_check(check_id: str, config: dict | None = None, seed: int = 0) -> dict:
    """Run one registered check and return its report dict (verdict included)."""
    from ..schemas import validate

    config = dict(config or {})
    validate(config, "check")
    if "checks" in config or "only" in config:
        raise VarExpError("'checks' and 'only' belong to suite configs")
    P = merged_params(check_id, config.get("params"))
    policy = Policy.from_dict(config.get("policy"))
    seed = int(config.get("seed", seed))
    t0 = time.perf_counter()
    cases, monitor = CHECKS[check_id].runner(P, seed)
    report = {
        "check": check_id,
        "version": REPORT_VERSION,
        "description": CHECKS[check_id].description,
        "params": P,
        "policy": policy.to_dict(),
        "seed": seed,
        "cases": cases,
        "monitor": monitor,
        "errors": [],
    }
    annotate(report, policy)
    report["verdict"] = decide(report, policy)
    report["wall_time"] = time.perf_counter() - t0
    return report
