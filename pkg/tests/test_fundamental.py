from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from varexp.errors import VarExpError
from varexp.fields import Domain, RadialDomain, constant_exponent, make_exponent, sphere_area
from varexp.fundamental import (DEFAULT_LADDER, asymptotics_check, constant_u, fd_divergence_rhs,
                                fundamental_solution, gradient_threshold, l1_uniformity_check,
                                membership_scan, regularize, u_threshold)

D3 = RadialDomain.log(3, 1e-4, 1.0, 16)
BUMP = make_exponent({"family": "bump", "p0": 1.8, "b": 0.3}, D3)


@pytest.mark.parametrize("n,p", [(3, 2.0), (3, 1.5), (2, 1.3), (5, 3.5)])
def test_constant_u_matches_quadrature(n, p):
    g = lambda s: (p * s ** (n - 1)) ** (-1.0 / (p - 1))
    for r in (1e-3, 0.1, 0.7):
        ref, _ = integrate.quad(g, r, 1.0, epsrel=1e-12, limit=200, points=[10 * r])
        assert constant_u(n, p, r) == pytest.approx(ref, rel=1e-9)
    assert constant_u(n, p, 1.0) == 0.0


@pytest.mark.parametrize("n,p", [(3, 2.0), (4, 2.5)])
def test_tabulated_solution_constant_exponent(n, p):
    d = RadialDomain.log(n, 1e-4, 1.0, 16)
    sol = fundamental_solution(constant_exponent(d, p))
    np.testing.assert_allclose(sol.u_values, constant_u(n, p, sol.radii), rtol=1e-7)
    np.testing.assert_allclose(sol.gradient_values, (p * sol.radii ** (n - 1)) ** (-1 / (p - 1)),
                               rtol=1e-12)
    np.testing.assert_allclose(sol.u_at(sol.radii[::7]), sol.u_values[::7], rtol=1e-7)


def test_gradient_is_minus_derivative_of_u():
    sol = fundamental_solution(BUMP)
    r = np.array([0.01, 0.1, 0.4])
    h = 1e-3 * r
    du = (sol.u_at(r + h) - sol.u_at(r - h)) / (2 * h)
    np.testing.assert_allclose(-du, sol.gradient_at(r), rtol=1e-5)
    assert np.all(np.diff(sol.u_values) < 0)


def test_solution_preconditions():
    with pytest.raises(VarExpError, match="radial"):
        fundamental_solution(constant_exponent(Domain.box([0.0], [1.0], 8), 1.5))
    with pytest.raises(VarExpError, match="unit ball"):
        fundamental_solution(constant_exponent(RadialDomain.log(3, 1e-2, 2.0, 8), 2.0))
    with pytest.raises(VarExpError, match="dimension"):
        fundamental_solution(constant_exponent(D3, 3.0))
    with pytest.raises(VarExpError, match="p > 1"):
        fundamental_solution(constant_exponent(D3, 1.0))


def test_solution_csv(tmp_path):
    sol = fundamental_solution(constant_exponent(D3, 2.0))
    sol.to_csv(tmp_path / "u.csv")
    lines = (tmp_path / "u.csv").read_text().splitlines()
    assert lines[0] == "r,u,grad_u" and len(lines) == sol.radii.size + 1


def test_asymptotics_constant_exponent_exact():
    n, p = 3, 2.0
    sol = fundamental_solution(constant_exponent(D3, p))
    rep = asymptotics_check(sol, 1e-4, 1e-2)
    c = p ** (-1 / (p - 1))
    assert rep.gradient_band == pytest.approx((c, c), rel=1e-12)
    # u r^{(n-p)/(p-1)} = c (p-1)/(n-p) (1 - r^{(n-p)/(p-1)})
    r = sol.radii[(sol.radii >= 1e-4) & (sol.radii <= 1e-2)]
    e = (n - p) / (p - 1)
    assert rep.u_band[1] == pytest.approx(c / e * (1 - r[0] ** e), rel=1e-7)
    assert rep.u_band[0] == pytest.approx(c / e * (1 - r[-1] ** e), rel=1e-7)


def test_asymptotics_log_holder_bump_bounded():
    rep = asymptotics_check(fundamental_solution(BUMP), 1e-4, 1e-1)
    assert np.isfinite(rep.C) and rep.C < 10.0
    with pytest.raises(VarExpError):
        asymptotics_check(fundamental_solution(BUMP), 2.0, 3.0)


@given(n=st.integers(2, 8), num=st.integers(11, 79))
def test_thresholds_rational(n, num):
    p0 = Fraction(num, 10)
    if not 1 < p0 < n:
        return
    assert u_threshold(n, float(p0)) == pytest.approx(float(n * (p0 - 1) / (n - p0)), rel=1e-14)
    assert gradient_threshold(n, float(p0)) == pytest.approx(float(n * (p0 - 1) / (n - 1)),
                                                             rel=1e-14)
    assert gradient_threshold(n, float(p0)) < u_threshold(n, float(p0))


@pytest.mark.parametrize("target,thr", [("u", 3.0), ("gradient", 1.5)])
def test_membership_flips_at_threshold(target, thr):
    ladder = DEFAULT_LADDER[:2]
    below = membership_scan(2.0, 0.95 * thr, 3, target, ladder)
    above = membership_scan(2.0, 1.05 * thr, 3, target, ladder)
    assert below.threshold == pytest.approx(thr)
    assert below.verdict == "member" and above.verdict == "non-member"
    assert below.near_threshold is False
    assert set(below.to_dict()) >= {"verdict", "sups", "growth", "ladder", "scans"}
    with pytest.raises(VarExpError):
        membership_scan(2.0, 2.0, 3, "hessian", ladder)


@pytest.mark.parametrize("r", [0.5, 0.1, 1e-3])
def test_regularization_c1_and_mass_constant(r):
    n, p = 3, 2.0
    sol = fundamental_solution(constant_exponent(D3, p))
    reg = regularize(sol, r)
    assert reg.value_residual <= 1e-12 and reg.slope_residual <= 1e-12
    eps = 1e-9 * r
    assert reg.v(r - eps)[0] == pytest.approx(reg.v(r + eps)[0], rel=1e-7)
    # rhs = b^{p-1}(n-1)/rho, b^{p-1} = 1/(p r^{n-1}): the mass is sigma_n / p
    assert reg.l1_mass() == pytest.approx(sphere_area(n) / p, rel=1e-10)
    assert not reg.sign_warning
    with pytest.raises(VarExpError):
        regularize(sol, 1.0)


def test_regularization_rhs_matches_finite_differences():
    reg = regularize(fundamental_solution(BUMP), 0.3)
    rho = np.array([0.05, 0.15, 0.25])
    np.testing.assert_allclose(fd_divergence_rhs(reg, rho), reg.rhs(rho), rtol=0.02)


def test_l1_uniformity_constant_and_errors():
    sol = fundamental_solution(constant_exponent(D3, 2.0))
    rep = l1_uniformity_check(sol, [0.5, 0.1, 0.01])
    assert rep.monotone
    np.testing.assert_allclose(rep.masses, 4 * np.pi / 2.0, rtol=1e-10)
    with pytest.raises(VarExpError, match="decrease"):
        l1_uniformity_check(sol, [0.1, 0.5])
