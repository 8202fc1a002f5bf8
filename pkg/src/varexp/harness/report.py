"""Verification reports, the tolerance policy and the verdict rule.

A report is a plain JSON-compatible dict.  Its verdict is recomputed by
:func:`decide` from the recorded cases and the policy alone, so a stored
report can be re-judged without running anything.

Case kinds
----------
trend    ``scales``, ``values``, ``expect`` in {bounded, divergent, None}:
         log-log slope of value against scale, classified by the policy.
bound    ``value`` with optional ``lower`` / ``upper`` (scalars or arrays).
label    ``value`` and ``expect`` strings (``expect`` None: informational).
rule     ``argmin``, ``t``, ``delta``: argmin < 1 iff t > 1 and delta < 1.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

VERDICTS = ("pass", "borderline", "fail")
EXIT_CODES = {"pass": 0, "fail": 1, "borderline": 2}


@dataclass(frozen=True)
class Policy:
    """Empirical-constant policy: bounded means |slope| < bounded_slope,
    divergent means slope >= divergent_slope."""

    bounded_slope: float = 0.15
    divergent_slope: float = 0.8
    growth_factor: float = 2.0

    @classmethod
    def from_dict(cls, d=None) -> "Policy":
        return cls(**(d or {}))

    def to_dict(self) -> dict:
        return asdict(self)


def log_slope(scales, values) -> float:
    """Least-squares slope of log(value) against log(scale)."""
    s = np.asarray(scales, dtype=float)
    v = np.asarray(values, dtype=float)
    if s.size < 2:
        return math.nan
    if not np.all(np.isfinite(v)):
        return math.inf
    if np.all(v == v[0]):
        return 0.0
    if np.any(v <= 0):
        return math.nan
    return float(np.polyfit(np.log(s), np.log(v), 1)[0])


def classify_slope(slope: float, policy: Policy) -> str:
    if slope != slope:
        return "undetermined"
    if abs(slope) < policy.bounded_slope:
        return "bounded"
    if slope >= policy.divergent_slope:
        return "divergent"
    return "intermediate"


# ---------------------------------------------------------------------------
# case constructors
# ---------------------------------------------------------------------------


def _clean(x):
    """Convert numpy scalars / arrays to JSON-native values."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return x


def _num(x):
    if isinstance(x, str):
        return float(x)
    if isinstance(x, list):
        return np.array([_num(v) for v in x], dtype=float)
    return x


def trend_case(name, scales, values, expect="bounded", scale_name="resolution", **data) -> dict:
    return _clean({"name": name, "kind": "trend", "scale": scale_name, "scales": list(scales),
                   "values": list(values), "expect": expect, "data": data})


def bound_case(name, value, lower=None, upper=None, **data) -> dict:
    return _clean({"name": name, "kind": "bound", "value": value, "lower": lower,
                   "upper": upper, "data": data})


def label_case(name, value, expect=None, **data) -> dict:
    return _clean({"name": name, "kind": "label", "value": value, "expect": expect, "data": data})


def rule_case(name, argmin, t, delta, **data) -> dict:
    return _clean({"name": name, "kind": "rule", "argmin": list(argmin), "t": list(t),
                   "delta": list(delta), "data": data})


# ---------------------------------------------------------------------------
# decision
# ---------------------------------------------------------------------------


def judge_case(case: dict, policy: Policy) -> str:
    """pass / borderline / fail for one recorded case."""
    kind = case["kind"]
    if kind == "trend":
        ok = [(s, v) for s, v in zip(case["scales"], case["values"]) if v is not None]
        if case["expect"] is None:
            return "pass"
        if len(ok) < 2:
            return "fail"
        cls = classify_slope(log_slope(*zip(*ok)), policy)
        if cls == case["expect"]:
            return "pass"
        if cls in ("intermediate", "undetermined"):
            return "borderline"
        return "fail"
    if kind == "bound":
        v = _num(case["value"])
        lo, hi = case.get("lower"), case.get("upper")
        good = np.ones(np.shape(v), dtype=bool)
        if lo is not None:
            good &= np.asarray(v) >= _num(lo)
        if hi is not None:
            good &= np.asarray(v) <= _num(hi)
        return "pass" if bool(np.all(good)) else "fail"
    if kind == "label":
        if case["expect"] is None or case["value"] == case["expect"]:
            return "pass"
        if case["value"] == "borderline":
            return "borderline"
        return "fail"
    if kind == "rule":
        R, t, d = (np.asarray(case[k], dtype=float) for k in ("argmin", "t", "delta"))
        return "pass" if bool(np.all((R < 1.0) == ((t > 1.0) & (d < 1.0)))) else "fail"
    raise ValueError(f"unknown case kind {kind!r}")


def decide(report: dict, policy: Policy | dict | None = None) -> str:
    """Verdict of a stored report: fail if any case fails or an error was
    recorded, else borderline if any case is borderline, else pass."""
    if policy is None:
        policy = report.get("policy")
    if not isinstance(policy, Policy):
        policy = Policy.from_dict(policy)
    if report.get("errors"):
        return "fail"
    marks = [judge_case(c, policy) for c in report["cases"]]
    if not marks:
        return "fail"
    if "fail" in marks:
        return "fail"
    if "borderline" in marks:
        return "borderline"
    return "pass"


def annotate(report: dict, policy: Policy) -> dict:
    """Add per-case slope / classification / mark fields (derived data)."""
    for c in report["cases"]:
        if c["kind"] == "trend":
            ok = [(s, v) for s, v in zip(c["scales"], c["values"]) if v is not None]
            slope = log_slope(*zip(*ok)) if len(ok) >= 2 else math.nan
            c["slope"] = _clean(slope)
            c["classification"] = classify_slope(slope, policy)
        c["mark"] = judge_case(c, policy)
    return report


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def dumps(report: dict) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=1, allow_nan=False) + "\n"


def canonical(report: dict) -> str:
    """Serialization with the wall-time field removed (the determinism key)."""
    r = dict(report)
    r.pop("wall_time", None)
    return dumps(r)


def write_report(report: dict, out_dir) -> tuple[Path, Path]:
    """Write ``<id>.json`` and a plot-ready ``<id>.csv`` (case, x, y rows)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    j = out / f"{report['check']}.json"
    j.write_text(dumps(report))
    c = out / f"{report['check']}.csv"
    with c.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["case", "kind", "x", "y"])
        for case in report["cases"]:
            if case["kind"] == "trend":
                for s, v in zip(case["scales"], case["values"]):
                    w.writerow([case["name"], "trend", repr(s), repr(v)])
            elif case["kind"] == "bound":
                vals = case["value"] if isinstance(case["value"], list) else [case["value"]]
                for i, v in enumerate(vals):
                    w.writerow([case["name"], "bound", i, repr(v)])
    return j, c
