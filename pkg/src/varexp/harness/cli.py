"""Command-line entry point: ``varexp <subcommand> ...``.

Exit codes: 0 pass / success, 1 fail, 2 borderline, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ..errors import ConfigError, VarExpError
from ..fields import build_from_config, constant_exponent, load_config, make_exponent, write_csv
from .checks import CHECKS, run_check
from .refinement import run_suite, suite_exit_code
from .report import EXIT_CODES, dumps, write_report

EX_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _emit(obj, out: Path | None, name: str) -> None:
    text = json.dumps(obj, sort_keys=True, indent=1) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.json").write_text(text)


def _load(args):
    if not args.config:
        raise UsageError("--config is required for this subcommand")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    return cfg, *build_from_config(cfg)


def _need(obj, what):
    if obj is None:
        raise UsageError(f"config needs an '{what}' entry")
    return obj


def _exponent_or_number(spec, domain, default=None):
    if spec is None:
        spec = default
    if isinstance(spec, dict):
        return make_exponent(spec, domain)
    return float(spec)


def _points(cfg, domain):
    pts = cfg.get("points")
    if pts is None:
        return None
    return np.asarray(pts, dtype=float)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_norm(args) -> int:
    from ..spaces import luxemburg_norm, modular, sandwich_holds

    cfg, dom, p, f = _load(args)
    p, f = _need(p, "exponent"), _need(f, "field")
    res = luxemburg_norm(f, p, tol=cfg.get("tol", 1e-8))
    rho = modular(f, p)
    out = {"value": res.value, "method": res.method, "residual": res.residual,
           "modular": rho, "sandwich": sandwich_holds(rho, res, p)}
    _emit(out, args.out, "norm")
    if args.out:
        write_csv(f, args.out / "field.csv")
    return 0


def cmd_weak_norm(args) -> int:
    from ..spaces import weak_norm

    cfg, dom, p, f = _load(args)
    p, f = _need(p, "exponent"), _need(f, "field")
    res = weak_norm(f, p, n_lambda=cfg.get("n_lambda", 200))
    out = {"value": res.value, "method": res.method, "residual": res.residual,
           "argmax_lambda": res.scan.argmax_lambda}
    _emit(out, args.out, "weak-norm")
    if args.out:
        res.scan.to_csv(args.out / "level-scan.csv")
    return 0


def cmd_riesz(args) -> int:
    from ..potentials import KernelSpec, excluded_ball_bound, riesz_values

    cfg, dom, p, f = _load(args)
    f = _need(f, "field")
    alpha = _exponent_or_number(cfg.get("alpha"), dom, 1.0)
    k = KernelSpec(alpha, cfg.get("convention", "alpha-at-x"), cfg.get("cutoff"))
    pts = _points(cfg, dom)
    vals = riesz_values(f, k, pts, cfg.get("local_correction", False))
    out = {"values": vals.tolist(), "cutoff": k.cutoff_for(dom),
           "excluded_ball_bound": excluded_ball_bound(f, k)}
    _emit(out, args.out, "riesz")
    if args.out and pts is None:
        write_csv(f.with_values(vals, "riesz"), args.out / "riesz.csv")
    return 0


def cmd_wolff(args) -> int:
    from ..potentials import MeasureSpec, wolff

    cfg, dom, p, f = _load(args)
    atoms = [(a["location"], a["mass"]) for a in cfg.get("atoms", [])]
    mu = MeasureSpec(density=f, atoms=atoms, domain=dom)
    alpha = _exponent_or_number(cfg.get("alpha"), dom, 1.0)
    pp = _exponent_or_number(cfg["p"], dom) if "p" in cfg else (2.0 if p is None else p)
    R = float(cfg.get("R", dom.diameter))
    pts = _points(cfg, dom)
    pts = dom.points if pts is None else pts
    res = [wolff(mu, alpha, pp, x, R, per_decade=cfg.get("per_decade", 512)) for x in pts]
    out = {"values": [r.value for r in res], "divergent": [r.divergent for r in res],
           "r_min": [r.r_min for r in res], "R": R}
    _emit(out, args.out, "wolff")
    return 0


def cmd_kfun(args) -> int:
    from ..interpolation import k_functional_Linf, theta_norm

    cfg, dom, p, f = _load(args)
    p0, f = _need(p, "exponent"), _need(f, "field")
    if "theta" in cfg:
        prof = theta_norm(f, p0, cfg["theta"], cfg.get("t_grid"))
        out = {"theta": prof.theta, "norm_value": prof.norm_value, "argmax_t": prof.argmax_t}
        _emit(out, args.out, "kfun")
        if args.out:
            prof.to_csv(args.out / "k-profile.csv")
        return 0
    ts = cfg.get("t_grid", [0.1, 1.0, 10.0])
    _emit({"t": ts, "K": [k_functional_Linf(f, p0, t) for t in ts]}, args.out, "kfun")
    return 0


def cmd_example_fundamental(args) -> int:
    from .. import fundamental as fund
    from ..fields import RadialDomain

    n = args.n
    dom = RadialDomain.log(n, args.r_min, 1.0, args.cells_per_decade)
    if args.config:
        cfg = load_config(args.config)
        p = make_exponent(_need(cfg.get("exponent"), "exponent"), dom)
    else:
        p = constant_exponent(dom, args.p)
    sol = fund.fundamental_solution(p, n)
    p0 = float(sol.p_fn(np.array([0.0]))[0])
    asym = fund.asymptotics_check(sol, max(args.r_min, 1e-4), 1e-1)
    out = {"n": n, "p0": p0, "u_threshold": fund.u_threshold(n, p0),
           "gradient_threshold": fund.gradient_threshold(n, p0),
           "u_ratio_band": list(asym.u_band), "gradient_ratio_band": list(asym.gradient_band)}
    _emit(out, args.out, "example-fundamental")
    if args.out:
        sol.to_csv(args.out / "fundamental.csv")
    return 0


def _check_config(args):
    if not args.config:
        return {}
    cfg = json.loads(Path(args.config).read_text())
    if args.seed is not None:
        cfg["seed"] = args.seed
    return cfg


def cmd_check(args) -> int:
    cfg = _check_config(args)
    if args.id not in CHECKS:
        raise UsageError(f"unknown check id {args.id!r}; known: {', '.join(CHECKS)}")
    rep = run_check(args.id, cfg, seed=args.seed or 0)
    if args.out:
        write_report(rep, args.out)
    print(f"{rep['check']}: {rep['verdict']} ({len(rep['cases'])} cases, "
          f"{rep['wall_time']:.1f} s)")
    return EXIT_CODES[rep["verdict"]]


def cmd_suite(args) -> int:
    cfg = _check_config(args)
    only = [s for s in args.only.split(",") if s] if args.only else None
    for i in only or []:
        if i not in CHECKS:
            raise UsageError(f"unknown check id {i!r}")
    reports = run_suite(only, cfg, seed=args.seed or 0, jobs=args.jobs)
    for rep in reports:
        if args.out:
            write_report(rep, args.out)
        err = f" [{rep['errors'][0]}]" if rep.get("errors") else ""
        print(f"{rep['check']}: {rep['verdict']}{err}")
    code = suite_exit_code(reports)
    if args.out:
        summary = {"checks": [r["check"] for r in reports],
                   "verdicts": {r["check"]: r["verdict"] for r in reports}, "exit_code": code}
        (args.out / "suite.json").write_text(dumps(summary))
    return code


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="varexp", description="variable-exponent norms, potentials and theorem checks")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", help="JSON configuration file")
        sp.add_argument("--out", type=Path, help="directory for JSON / CSV output")
        sp.add_argument("--seed", type=int, help="seed for random test fields")
        return sp

    for name, fn, help_ in (("norm", cmd_norm, "Luxemburg norm and modular of a field"),
                            ("weak-norm", cmd_weak_norm, "weak norm with the level scan"),
                            ("riesz", cmd_riesz, "Riesz potential"),
                            ("wolff", cmd_wolff, "truncated Wolff potential"),
                            ("kfun", cmd_kfun, "K-functional or (theta, inf)-norm")):
        common(sub.add_parser(name, help=help_)).set_defaults(func=fn)

    ex = common(sub.add_parser("example-fundamental", help="radial fundamental solution table"))
    ex.add_argument("--n", type=int, default=3)
    ex.add_argument("--p", type=float, default=2.0)
    ex.add_argument("--r-min", type=float, default=1e-4)
    ex.add_argument("--cells-per-decade", type=int, default=128)
    ex.set_defaults(func=cmd_example_fundamental)

    ck = common(sub.add_parser("check", help="run one theorem check"))
    ck.add_argument("id", help="check id: " + ", ".join(CHECKS))
    ck.set_defaults(func=cmd_check)

    st = common(sub.add_parser("suite", help="run the theorem suite"))
    st.add_argument("--only", help="comma-separated check ids")
    st.add_argument("--jobs", type=int, default=1, help="worker processes")
    st.set_defaults(func=cmd_suite)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EX_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (ConfigError, json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"varexp: error: {exc}", file=sys.stderr)
        return EX_USAGE
    except VarExpError as exc:
        print(f"varexp: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
