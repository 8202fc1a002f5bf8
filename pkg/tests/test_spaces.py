import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from varexp.errors import ConvergenceError, DomainMismatchError, GridError, VarExpError
from varexp.fields import (Domain, ExponentField, RadialDomain, ScalarField, ball_volume,
                           constant_exponent, make_exponent, make_field)
from varexp.spaces import (LevelScan, adversarial_exponent, adversarial_witness, embedding_check,
                           luxemburg_arrays, luxemburg_norm, modular, power_rescale,
                           sandwich_holds, weak_modular_sup, weak_norm)

BOX = Domain.box([-1.0, -1.0], [1.0, 1.0], 24)


def _random_field(seed, domain=BOX, scale=1.0):
    return make_field({"family": "random", "low": -1.0, "high": 1.0}, domain, seed=seed) * scale


def _bump(domain=BOX, p0=1.8, b=0.4):
    return make_exponent({"family": "bump", "p0": p0, "b": b, "x0": [0.1, 0.2]}, domain)


# ---------------------------------------------------------------------------
# modular
# ---------------------------------------------------------------------------


def test_modular_zero_and_indicator():
    p = constant_exponent(BOX, 2.5)
    assert modular(make_field({"family": "constant", "value": 0.0}, BOX), p) == 0.0
    f = make_field({"family": "indicator_ball", "radius": 0.5, "value": 3.0}, BOX)
    area = np.count_nonzero(f.values) * BOX.cell_volume
    assert modular(f, p) == pytest.approx(3.0 ** 2.5 * area, rel=1e-14)


def test_modular_radial_closed_form():
    eps = 1e-3
    d = RadialDomain.log(2, eps, 1.0, 256)
    f = make_field({"family": "power", "exponent": 1.0}, d)
    exact = 2 * math.pi * 2 * (1 - eps ** 0.5)
    quad, _ = integrate.quad(lambda r: 2 * math.pi * r ** -0.5, eps, 1.0, epsrel=1e-12)
    assert quad == pytest.approx(exact, rel=1e-10)
    assert modular(f, constant_exponent(d, 1.5)) == pytest.approx(exact, rel=1e-4)


def test_modular_domain_mismatch():
    other = Domain.box([-1.0, -1.0], [1.0, 1.0], 12)
    with pytest.raises(DomainMismatchError):
        modular(_random_field(0), constant_exponent(other, 2.0))


# ---------------------------------------------------------------------------
# Luxemburg norm
# ---------------------------------------------------------------------------


def test_luxemburg_indicator():
    p = constant_exponent(BOX, 3.0)
    f = make_field({"family": "indicator_ball", "radius": 0.7, "value": 2.0}, BOX)
    area = np.count_nonzero(f.values) * BOX.cell_volume
    assert luxemburg_norm(f, p).value == pytest.approx(2.0 * area ** (1 / 3), rel=1e-8)


def test_luxemburg_two_piece_golden_ratio():
    d = Domain.box([0.0], [2.0], 200)
    p = ExponentField(d, np.where(d.points[:, 0] < 1.0, 1.0, 2.0))
    f = make_field({"family": "constant"}, d)
    # 1/lam + 1/lam^2 = 1
    assert luxemburg_norm(f, p, tol=1e-12).value == pytest.approx((1 + math.sqrt(5)) / 2, rel=1e-11)


def test_luxemburg_zero():
    f = make_field({"family": "constant", "value": 0.0}, BOX)
    res = luxemburg_norm(f, constant_exponent(BOX, 2.0))
    assert res.value == 0.0 and res.residual == 0.0


def test_luxemburg_convergence_error_reports_bracket():
    w, g, pv = np.ones(3), np.array([1.0, 1e3, 1e-3]), np.array([1.1, 4.0, 2.0])
    with pytest.raises(ConvergenceError) as info:
        luxemburg_arrays(w, g, pv, tol=1e-14, max_iter=1)
    lo, hi = info.value.bracket
    assert 0 < lo < hi


def test_norm_result_json():
    res = luxemburg_norm(_random_field(1), _bump())
    d = json.loads(res.to_json())
    assert set(d) == {"value", "method", "residual"} and d["method"] == "bisection"


@given(seed=st.integers(0, 10_000), scale=st.floats(1e-5, 1e5), tol=st.sampled_from([1e-6, 1e-10]))
def test_unit_ball_and_sandwich(seed, scale, tol):
    f, p = _random_field(seed, scale=scale), _bump()
    res = luxemburg_norm(f, p, tol=tol)
    assert res.residual <= tol
    assert abs(modular(f / res.value, p) - 1.0) <= tol * (1 + 1e-9)
    assert sandwich_holds(modular(f, p), res, p)


@given(s1=st.integers(0, 10_000), s2=st.integers(0, 10_000), c=st.floats(-50, 50))
def test_norm_axioms(s1, s2, c):
    p = _bump()
    f, g = _random_field(s1), _random_field(s2, scale=3.0)
    nf, ng = luxemburg_norm(f, p).value, luxemburg_norm(g, p).value
    assert luxemburg_norm(f * c, p).value == pytest.approx(abs(c) * nf, rel=1e-7, abs=1e-300)
    assert luxemburg_norm(f + g, p).value <= (nf + ng) * (1 + 1e-6)


# ---------------------------------------------------------------------------
# weak norm and weak modular
# ---------------------------------------------------------------------------


def test_weak_norm_of_indicator():
    p = _bump()
    f = make_field({"family": "indicator_ball", "radius": 0.6}, BOX)
    assert weak_norm(f, p).value == pytest.approx(luxemburg_norm(f, p).value, rel=1e-5)


def test_weak_norm_power_closed_form():
    n, pv = 3, 2.0
    d = RadialDomain.log(n, 1e-3, 1e3, 128)
    f = make_field({"family": "power", "exponent": n / pv}, d)
    assert weak_norm(f, constant_exponent(d, pv)).value == pytest.approx(
        ball_volume(n) ** (1 / pv), rel=0.02)


def test_weak_norm_zero_and_grid_checks():
    p = constant_exponent(BOX, 2.0)
    assert weak_norm(make_field({"family": "constant", "value": 0.0}, BOX), p).value == 0.0
    f = _random_field(2)
    g = np.abs(f.values)
    with pytest.raises(GridError, match="grid too narrow"):
        weak_norm(f, p, lambdas=np.geomspace(g[g > 0].min() * 2, g.max() * 2, 10))
    with pytest.raises(GridError):
        weak_norm(f, p, lambdas=[1.0, 0.5])


@given(seed=st.integers(0, 10_000), c=st.floats(0.01, 100))
def test_weak_norm_homogeneous_and_below_strong(seed, c):
    f, p = _random_field(seed), _bump()
    w = weak_norm(f, p).value
    assert weak_norm(f * c, p).value == pytest.approx(c * w, rel=1e-9)
    assert w <= luxemburg_norm(f, p).value * (1 + 1e-9)


def test_weak_modular_normalized_sup():
    p = _bump()
    f = make_field({"family": "smooth_bump", "width": 0.9}, BOX)
    f = f / weak_norm(f, p).value
    scan = weak_modular_sup(f, p)
    assert 0.95 <= scan.sup_value <= 1.0 + 1e-12
    assert weak_modular_sup(make_field({"family": "constant", "value": 0.0}, BOX), p).sup_value == 0


def test_weak_modular_flat_for_critical_power():
    n, pv = 2, 1.5
    d = RadialDomain.log(n, 1e-4, 1e2, 64)
    f = make_field({"family": "power", "exponent": n / pv}, d)
    f = f / weak_norm(f, constant_exponent(d, pv)).value
    scan = weak_modular_sup(f, constant_exponent(d, pv))
    # levels whose level-set radius lies well inside the grid
    rad = scan.lambdas ** (-pv / n)
    sel = (rad > 1e-3) & (rad < 10.0)
    v = scan.modular_values[sel]
    assert v.std() / v.mean() < 0.1


@given(seed=st.integers(0, 10_000), extra=st.lists(st.floats(0.01, 10), max_size=20))
def test_level_scan_invariants(seed, extra):
    f, p = _random_field(seed), _bump()
    g = np.abs(f.values)
    base = np.geomspace(g.min() * 0.5, g.max() * 2, 30)
    s1 = weak_modular_sup(f, p, base)
    s2 = weak_modular_sup(f, p, np.unique(np.concatenate([base, extra])))
    assert s1.sup_value == s1.modular_values.max()
    assert s1.modular_values[np.searchsorted(s1.lambdas, s1.argmax_lambda)] == s1.sup_value
    assert s2.sup_value >= s1.sup_value


def test_level_scan_csv(tmp_path):
    scan = LevelScan.from_values([1.0, 2.0, 4.0], [0.1, 0.5, 0.2])
    assert (scan.sup_value, scan.argmax_lambda, scan.gap_ratio) == (0.5, 2.0, 2.0)
    scan.to_csv(tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "lambda,modular_value"


def test_weak_norm_monotone_under_domain_exhaustion():
    lam = np.geomspace(1e-2, 1e4, 300)
    vals = []
    for eps in (0.2, 0.1, 0.05, 0.02):
        d = Domain.ball([0.0, 0.0], 1.0, 64, inner_cutoff=eps)
        f = make_field({"family": "power", "exponent": 1.2}, d)
        vals.append(weak_norm(f, _bump(d), lambdas=lam).value)
    assert np.all(np.diff(vals) >= -1e-12)


# ---------------------------------------------------------------------------
# embedding, rescaling, adversarial exponent
# ---------------------------------------------------------------------------


def test_embedding_below_bound():
    n, pv = 3, 2.0
    d = RadialDomain.log(n, 1e-6, 1.0, 128)
    f = make_field({"family": "power", "exponent": n / pv}, d)
    rep = embedding_check(f, constant_exponent(d, pv), constant_exponent(d, pv - 0.2))
    # closed form of the q-modular: 4 pi / 0.3 (1 - eps^0.3)
    exact = 4 * math.pi / 0.3 * (1 - 1e-6 ** 0.3)
    assert rep.q_modular == pytest.approx(exact, rel=1e-3)
    assert rep.holds and rep.q_modular <= rep.bound


def test_embedding_sharp_at_q_equal_p():
    n, pv = 3, 2.0
    rhos = []
    for eps in (1e-2, 5e-3, 2.5e-3):
        d = RadialDomain.log(n, eps, 1.0, 64)
        f = make_field({"family": "power", "exponent": n / pv}, d)
        rhos.append(modular(f, constant_exponent(d, pv)))
    assert np.all(np.diff(rhos) >= math.log(2))


def test_embedding_hypothesis_violated():
    p = constant_exponent(BOX, 2.0)
    with pytest.raises(VarExpError, match="embedding hypothesis violated"):
        embedding_check(_random_field(0), p, p)


@given(seed=st.integers(0, 10_000), gap=st.floats(0.05, 0.8))
def test_embedding_bounded_field(seed, gap):
    p = _bump(p0=2.0)
    q = p.shifted(-gap)
    f = _random_field(seed, scale=4.0)
    rep = embedding_check(f, p, q)
    assert rep.holds
    assert rep.q_modular <= max(np.abs(f.values).max(), 1.0) ** q.sup * BOX.measure * (1 + 1e-12)


def test_power_rescale_identity_and_closed_form():
    f, p = _random_field(3), _bump()
    assert power_rescale(f, 1.0, p).value == pytest.approx(weak_norm(f, p).value, rel=1e-12)
    n, pv = 3, 3.0
    d = RadialDomain.log(n, 1e-3, 1e3, 128)
    g = make_field({"family": "power", "exponent": n / pv}, d)
    assert power_rescale(g, 2.0, constant_exponent(d, pv)).value == pytest.approx(
        ball_volume(n) ** (2 / pv), rel=0.04)
    with pytest.raises(VarExpError):
        power_rescale(f, 0.0, p)


@given(seed=st.integers(0, 10_000), q=st.sampled_from([0.5, 0.75, 2.0]))
def test_power_rescale_within_scan_tolerance(seed, q):
    f, p = _random_field(seed), _bump(p0=2.2)
    base = weak_norm(f, p)
    res = power_rescale(f, q, p)
    slack = 2 * max(base.residual, res.residual) * max(1.0, q)
    assert res.value == pytest.approx(base.value ** q, rel=slack)
    # on matched level grids the identity holds at every level
    g = np.abs(f.values)
    lam = np.geomspace(g.min() * 0.9, g.max() * 1.1, 50)
    assert power_rescale(f, q, p, lam).value == pytest.approx(weak_norm(f, p, lam).value ** q,
                                                              rel=1e-9)


def test_adversarial_exponent_examples():
    d = Domain.box([0.0], [1.0], 10)
    q = adversarial_exponent(make_field({"family": "constant", "value": 0.5}, d))
    assert np.allclose(q.values, 0.5)
    q = adversarial_exponent(make_field({"family": "constant", "value": 8.0}, d), "large")
    assert np.allclose(q.values, 0.5)
    f = ScalarField(d, np.r_[np.zeros(5), np.full(5, 0.25)])
    assert np.all(adversarial_exponent(f).values[:5] == 1.0)
    with pytest.raises(VarExpError):
        adversarial_exponent(make_field({"family": "constant", "value": 0.0}, d))
    with pytest.raises(VarExpError):
        adversarial_exponent(f, "medium")


@given(seed=st.integers(0, 10_000), scale=st.floats(0.1, 20), branch=st.sampled_from(["small", "large"]))
def test_adversarial_witness_dominates(seed, scale, branch):
    f, p = _random_field(seed, scale=scale), _bump()
    w = adversarial_witness(f, p, branch)
    assert w.weak_modular_at_level >= w.lower_bound * (1 - 1e-12)
