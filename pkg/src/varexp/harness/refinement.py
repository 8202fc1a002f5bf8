"""Refinement studies and the suite runner."""

from __future__ import annotations

import copy
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

from ..errors import VarExpError
from .checks import CHECKS, REPORT_VERSION, merged_params, run_check
from .report import EXIT_CODES, Policy, classify_slope, log_slope


@dataclass(frozen=True)
class TrendReport:
    check: str
    scales: tuple
    values: tuple
    errors: tuple
    slope: float
    classification: str
    verdicts: tuple = field(default=())

    def to_dict(self) -> dict:
        return asdict(self)


def refined_params(check_id: str, params: dict, factor: int) -> dict:
    """Copy of ``params`` with the check's resolution parameter scaled by ``factor``."""
    key = CHECKS[check_id].resolution_key
    if key is None:
        raise VarExpError(f"check {check_id} has no resolution parameter to refine")
    P = copy.deepcopy(params)
    v = P[key]
    P[key] = [int(x) * factor for x in v] if isinstance(v, list) else int(v) * factor
    return P


def refinement_study(check_id: str, config: dict | None = None, levels: int = 3,
                     ratio: int = 2) -> TrendReport:
    """Re-run a check at ``levels`` geometric resolutions and classify the
    log-log slope of its monitored quantity.

    A level that raises is recorded in ``errors`` and the study continues
    with the remaining levels.
    """
    if levels < 2:
        raise VarExpError("a refinement study needs at least 2 levels")
    config = dict(config or {})
    base = merged_params(check_id, config.get("params"))
    policy = Policy.from_dict(config.get("policy"))
    scales, values, errors, verdicts = [], [], [], []
    for j in range(levels):
        factor = ratio ** j
        cfg = dict(config, params=refined_params(check_id, base, factor))
        try:
            rep = run_check(check_id, cfg)
        except Exception as exc:
            errors.append(f"level {j} (x{factor}): {exc}")
            continue
        scales.append(factor)
        values.append(float(rep["monitor"]))
        verdicts.append(rep["verdict"])
    slope = log_slope(scales, values) if len(values) >= 2 else float("nan")
    return TrendReport(check_id, tuple(scales), tuple(values), tuple(errors), slope,
                       classify_slope(slope, policy), tuple(verdicts))


def _run_one(args):
    check_id, cfg, seed = args
    try:
        return run_check(check_id, cfg, seed)
    except Exception as exc:
        return failed_report(check_id, cfg, seed, exc)


def failed_report(check_id, cfg, seed, exc) -> dict:
    """Report skeleton for a check whose runner raised."""
    return {"check": check_id, "version": REPORT_VERSION, "params": cfg.get("params", {}),
            "policy": Policy.from_dict(cfg.get("policy")).to_dict(), "seed": int(seed),
            "cases": [], "monitor": None, "errors": [f"{type(exc).__name__}: {exc}"],
            "verdict": "fail", "wall_time": 0.0}


def run_suite(only=None, config: dict | None = None, seed: int = 0, jobs: int = 1) -> list[dict]:
    """Run the selected checks (default: all, in registry order).

    Per-check overrides come from ``config["checks"][id]``.  With ``jobs > 1``
    the checks run in a process pool; results keep registry order.
    """
    config = config or {}
    ids = list(only) if only else list(config.get("only") or CHECKS)
    for i in ids:
        if i not in CHECKS:
            raise VarExpError(f"unknown check id {i!r}")
    per = config.get("checks", {})
    tasks = []
    for i in ids:
        cfg = dict(per.get(i, {}))
        if "policy" in config and "policy" not in cfg:
            cfg["policy"] = config["policy"]
        tasks.append((i, cfg, int(config.get("seed", seed))))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_one, tasks))
    return [_run_one(t) for t in tasks]


def suite_exit_code(reports) -> int:
    return max((EXIT_CODES[r["verdict"]] for r in reports), default=0)
