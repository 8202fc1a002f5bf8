import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from varexp.errors import GridError, VarExpError
from varexp.fields import (Domain, RadialDomain, constant_exponent, make_exponent, make_field)
from varexp.interpolation import (default_infimum_grid, golden_min, infimum_formula,
                                  interpolation_identity_check, k_functional_Linf,
                                  tail_kernel_closed_form, tail_kernel_norm, theta_norm)
from varexp.spaces import luxemburg_norm, weak_norm

BOX = Domain.box([-1.0, -1.0], [1.0, 1.0], 20)
P0 = make_exponent({"family": "bump", "p0": 1.2, "b": 0.3, "x0": [0.1, 0.0]}, BOX)


def _nonneg(seed):
    return make_field({"family": "random", "low": 0.0, "high": 2.0}, BOX, seed=seed)


def test_golden_min_quadratic():
    x, fx = golden_min(lambda u: (u - 0.3) ** 2 + 1.0, -2.0, 5.0)
    assert x == pytest.approx(0.3, abs=1e-6) and fx == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# K-functional
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("t", [0.01, 0.3, 1.0, 3.0, 100.0])
def test_k_indicator(t):
    f = make_field({"family": "indicator_ball", "radius": 0.6}, BOX)
    norm = luxemburg_norm(f, P0).value
    assert k_functional_Linf(f, P0, t) == pytest.approx(min(norm, t), rel=1e-7)


@pytest.mark.parametrize("t", [0.05, 1.0, 20.0])
def test_k_constant_multiple_of_domain_indicator(t):
    c = 3.0
    f = make_field({"family": "constant", "value": c}, BOX)
    norm = luxemburg_norm(make_field({"family": "constant"}, BOX), P0).value
    assert k_functional_Linf(f, P0, t) == pytest.approx(min(c * norm, c * t), rel=1e-7)


def test_k_large_t_is_strong_norm():
    f = _nonneg(4)
    assert k_functional_Linf(f, P0, 1e6) == pytest.approx(luxemburg_norm(f, P0).value, rel=1e-8)
    with pytest.raises(VarExpError):
        k_functional_Linf(f, P0, 0.0)


@given(seed=st.integers(0, 1000), theta=st.floats(0.2, 0.8))
def test_k_profile_invariants(seed, theta):
    f = _nonneg(seed)
    prof = theta_norm(f, P0, theta)
    t, K = prof.t_grid, prof.k_values
    slack = 1e-9 * K.max()
    assert np.all(np.diff(K) >= -slack)
    # concavity: slopes decrease
    s = np.diff(K) / np.diff(t)
    assert np.all(np.diff(s) <= 1e-9 * np.abs(s[:-1]).max() + 1e-12)
    assert np.all(np.diff(K / t) <= slack / t[1:])
    assert np.all(K <= t * np.abs(f.values).max() * (1 + 1e-9))
    assert np.all(K <= luxemburg_norm(f, P0).value * (1 + 1e-9))


# ---------------------------------------------------------------------------
# theta-norm
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("theta", [0.25, 0.5, 0.75])
def test_theta_norm_indicator_chain(theta):
    f = make_field({"family": "indicator_ball", "radius": 0.5}, BOX)
    p0 = P0
    p = p0.scaled(1.0 / (1.0 - theta))
    prof = theta_norm(f, p0, theta)
    assert prof.norm_value == pytest.approx(luxemburg_norm(f, p0).value ** (1 - theta), rel=1e-6)
    assert prof.norm_value == pytest.approx(luxemburg_norm(f, p).value, rel=1e-6)


@given(seed=st.integers(0, 1000), c=st.floats(0.01, 100))
def test_theta_norm_homogeneous(seed, c):
    f = _nonneg(seed)
    a = theta_norm(f, P0, 0.5).norm_value
    assert theta_norm(f * c, P0, 0.5).norm_value == pytest.approx(c * a, rel=1e-7)


def test_theta_norm_critical_power_ratio_recorded():
    n, pv, th = 3, 2.0, 0.5
    d = RadialDomain.log(n, 1e-4, 1.0, 32)
    f = make_field({"family": "power", "exponent": n / pv}, d)
    p = constant_exponent(d, pv)
    ratio = theta_norm(f, p.scaled(1 - th), th).norm_value / weak_norm(f, p).value
    assert np.isfinite(ratio) and 0.1 < ratio < 10


def test_theta_norm_errors_and_zero(tmp_path):
    f = _nonneg(0)
    with pytest.raises(VarExpError):
        theta_norm(f, P0, 1.0)
    with pytest.raises(GridError, match="extend t-grid"):
        theta_norm(f, P0, 0.5, t_grid=np.geomspace(1e-6, 1e-5, 10))
    with pytest.raises(GridError):
        theta_norm(f, P0, 0.5, t_grid=[1.0, 0.5, 2.0])
    zero = make_field({"family": "constant", "value": 0.0}, BOX)
    assert theta_norm(zero, P0, 0.5).norm_value == 0.0
    prof = theta_norm(f, P0, 0.5)
    assert prof.norm_value >= prof.grid_value * (1 - 1e-12)
    prof.to_csv(tmp_path / "k.csv")
    assert (tmp_path / "k.csv").read_text().splitlines()[0] == "t,K,t^-theta K"


def test_interpolation_identity_indicators_and_scaled_copies():
    p = make_exponent({"family": "bump", "p0": 1.8, "b": 0.3}, BOX)
    ind = [make_field({"family": "indicator_ball", "radius": 0.5}, BOX),
           make_field({"family": "indicator_annulus", "inner": 0.2, "outer": 0.8}, BOX)]
    stats = interpolation_identity_check(ind, p, 0.5)
    assert np.all(np.abs(stats.values - 1.0) <= 1e-3)
    f = make_field({"family": "smooth_bump", "width": 0.9}, BOX)
    stats = interpolation_identity_check([f, f * 10.0, f * 100.0], p, 0.5)
    assert stats.max / stats.min - 1.0 <= 1e-6


# ---------------------------------------------------------------------------
# infimum formula
# ---------------------------------------------------------------------------


def test_infimum_unit_case():
    r = infimum_formula(1.0, 1.0, 1.0, 1.0)
    assert r.numeric_inf == pytest.approx(1.0, abs=1e-12)
    assert r.argmin == pytest.approx(1.0, abs=1e-5) and r.ratio == pytest.approx(1.0)


@pytest.mark.parametrize("a,b", [(1.0, 1.0), (0.5, 2.0), (2.0, 0.5)])
def test_infimum_small_t_unconstrained(a, b):
    for t in (1e-2, 1e-4, 1e-6):
        r = infimum_formula(a, b, 1.0, t)
        # unconstrained minimum at R0 = t^{-1/(a+b)} > delta
        exact = (a / b + 1.0) * t ** (b / (a + b)) - t
        assert r.numeric_inf == pytest.approx(exact, rel=1e-9)
        assert r.argmin == pytest.approx(t ** (-1 / (a + b)), rel=1e-4)
        assert r.in_envelope


@pytest.mark.parametrize("a,b", [(1.0, 1.0), (2.0, 1.0), (0.5, 1.5)])
def test_infimum_constrained_branch(a, b):
    delta = 10.0
    t = 2.0 * delta ** (-(a + b))  # R0 < delta
    r = infimum_formula(a, b, delta, t)
    assert r.argmin == delta
    assert r.numeric_inf == pytest.approx(a / b * delta ** (-b), rel=1e-14)
    assert r.ratio == pytest.approx(a / b, rel=1e-14)


def test_infimum_default_grid_size():
    g = default_infimum_grid()
    assert len(g) == 540 and len(set(g)) == 540


@given(a=st.floats(0.2, 3.0), b=st.floats(0.2, 3.0), ld=st.floats(-2, 2), lt=st.floats(-4, 4))
def test_infimum_envelope_and_argmin_rule(a, b, ld, lt):
    assume(abs(ld) > 1e-3 and abs(lt) > 1e-3)
    r = infimum_formula(a, b, 10.0 ** ld, 10.0 ** lt)
    assert r.in_envelope
    assert r.argmin_rule


def test_infimum_errors():
    with pytest.raises(VarExpError):
        infimum_formula(1.0, 1.0, 0.0, 1.0)


# ---------------------------------------------------------------------------
# tail kernel
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("n,a,p", [(3, 1.0, 2.0), (3, 1.0, 1.5), (2, 0.5, 2.5)])
def test_tail_kernel_constant_closed_form(n, a, p):
    ratios = []
    for delta in (1e-2, 1e-1, 1.0, 10.0):
        r = tail_kernel_norm(delta, a, p, n)
        assert r.lhs == pytest.approx(tail_kernel_closed_form(delta, a, p, n), rel=1e-8)
        assert r.harmonic_mean == pytest.approx(n * p / (n - a * p), rel=1e-10)
        ratios.append(r.ratio)
    assert np.ptp(ratios) <= 1e-8 * max(ratios)


@pytest.mark.parametrize("p0,pinf", [(2.2, 1.8), (1.6, 2.4)])
def test_tail_kernel_decay_exponent_bounded(p0, pinf):
    # the ratio moves between two plateaus as delta crosses the transition scale
    n, a = 3, 1.0
    d = RadialDomain.log(n, 1e-3, 1.0, 8)
    p = make_exponent({"family": "decay", "p0": p0, "p_inf": pinf}, d)
    deltas = np.geomspace(1e-4, 1e3, 8)
    ratios = np.array([tail_kernel_norm(delta, a, p, n).ratio for delta in deltas])
    assert ratios.max() / ratios.min() < 5.0
    for sl in (slice(0, 3), slice(-3, None)):
        slope = np.polyfit(np.log(deltas[sl]), np.log(ratios[sl]), 1)[0]
        assert abs(slope) < 0.15


def test_tail_kernel_preconditions():
    with pytest.raises(VarExpError):
        tail_kernel_norm(1.0, 1.0, 3.0, 3)  # p = n / alpha
    with pytest.raises(VarExpError):
        tail_kernel_norm(1.0, 3.0, 2.0, 3)
    with pytest.raises(VarExpError):
        tail_kernel_norm(1.0, 1.0, 2.0, 3, R_max=10.0)
    d = RadialDomain.log(3, 1e-3, 1.0, 8)
    with pytest.raises(VarExpError):
        tail_kernel_norm(1.0, 1.0, make_exponent({"family": "bump", "p0": 2.0, "b": 0.1}, d), 3)
