"""Discrete Ito identities, the integrand registry, and level estimates."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from walkwise import (
    IntegrandError,
    build_to_level,
    discrete_ito,
    exact_strat_value,
    get_integrand,
    ito_formula_residual,
    ito_integral,
    level_identity_check,
    partition_sum_crosscheck,
    stratonovich_integral,
    trapezoid_dyadic,
    trapezoid_lattice,
)
from walkwise.integrate import derivative_probe, path_coefficients, straight_run_coefficients

paths = st.lists(st.sampled_from((-1, 1)), min_size=0, max_size=60)


def test_trapezoid_lattice_worked_examples():
    sq = lambda j: j * j
    assert trapezoid_lattice(sq, 3) == Fraction(19, 2)
    assert trapezoid_lattice(sq, -2) == -3
    assert trapezoid_lattice(sq, 0) == 0
    assert trapezoid_lattice(sq, -3) == Fraction(-19, 2)


@given(paths)
@settings(max_examples=300)
def test_discrete_ito_identity_any_path(steps):
    # the trapezoidal path sum telescopes to the endpoint-only form for
    # ANY value table; checked here with f(j) = j**3 - 2j
    f = lambda j: j**3 - 2 * j
    trap, ito, corr, strat = discrete_ito(f, steps)
    assert strat == ito + corr
    assert strat == trap


@given(paths)
@settings(max_examples=300)
def test_closed_forms_for_identity_integrand(steps):
    n = len(steps)
    s = sum(steps)
    trap, ito, corr, strat = discrete_ito(lambda j: j, steps)
    assert ito == Fraction(s * s - n, 2)
    assert strat == Fraction(s * s, 2)
    assert corr == Fraction(n, 2)


def test_closed_forms_right_endpoint():
    # sum S_r X_r = S_n**2 / 2 + n / 2 is ito + 2 * correction
    steps = [1, 1, -1, 1, -1, -1, 1, 1]
    _, ito, corr, _ = discrete_ito(lambda j: j, steps)
    s = sum(steps)
    right = ito + 2 * corr
    assert right == Fraction(s * s + len(steps), 2)


def test_exhaustive_short_paths_identity():
    f = lambda j: 3**abs(j)  # wild table; identity is table-independent
    for n in range(0, 9):
        for mask in range(1 << n):
            steps = [1 if mask >> i & 1 else -1 for i in range(n)]
            trap, ito, corr, strat = discrete_ito(f, steps)
            assert strat == trap


@given(paths)
@settings(max_examples=300)
def test_coefficient_identity(steps):
    nums = np.concatenate(([0], np.cumsum(np.asarray(steps, dtype=np.int64))))
    assert level_identity_check(nums)
    c, lo, end = path_coefficients(nums)
    assert np.array_equal(c, straight_run_coefficients(end, lo, c.size))
    # spot check: coefficients reproduce the doubled trapezoid sum for a
    # random-ish table
    tbl = {j: (j * 7 + 3) % 11 - 5 for j in range(lo, lo + c.size)}
    direct = sum((tbl[int(nums[r - 1])] + tbl[int(nums[r])]) * int(nums[r] - nums[r - 1])
                 for r in range(1, nums.size))
    via_coeffs = sum(int(c[j - lo]) * tbl[j] for j in range(lo, lo + c.size))
    assert direct == via_coeffs


def test_nonunit_path_fails_identity_check():
    with pytest.raises(Exception):
        path_coefficients(np.array([1, 2, 3]))  # must start at 0


def test_registry_fixed_integrands():
    x = get_integrand("x")
    assert x.f(2.5) == 2.5
    assert x.integral_0_to(3.0) == 4.5
    x2 = get_integrand("x2")
    assert x2.f_lattice(3) == 9
    assert x2.integral_0_to(2.0) == pytest.approx(8 / 3)
    s = get_integrand("sin")
    assert s.classical_integral(math.pi) == pytest.approx(2.0)
    assert get_integrand("exp").f_prime(0.0) == pytest.approx(1.0)
    c = get_integrand("cos")
    assert c.classical_integral(math.pi / 2) == pytest.approx(1.0)


def test_registry_poly_and_errors():
    p = get_integrand("poly:1,0,2")  # 1 + 2 x**2
    assert p.f(0.5) == pytest.approx(1.5)
    assert p.classical_integral(1.0) == pytest.approx(1 + 2 / 3)
    assert p.f_lattice(3) == 19
    with pytest.raises(IntegrandError):
        get_integrand("nope")
    with pytest.raises(IntegrandError):
        get_integrand("table:missing.csv")
    with pytest.raises(IntegrandError):
        get_integrand("poly:")


def test_registry_table(tmp_path):
    path = tmp_path / "tbl.csv"
    path.write_text("j,value\n-1,5\n0,0\n1,1/2\n2,7\n")
    g = get_integrand(f"table:{path}")
    assert g.lattice_only
    assert g.f_lattice(1) == Fraction(1, 2)
    assert g.f_lattice(-1) == 5
    with pytest.raises(IntegrandError):
        g.f_lattice(9)
    with pytest.raises(IntegrandError):
        g.classical_integral(1.0)


def test_derivative_probe():
    g = get_integrand("sin")
    assert derivative_probe(g, np.linspace(-2, 2, 41)) < 1e-6


def test_trapezoid_dyadic_exact_for_linear():
    from walkwise import DyadicValue

    a = DyadicValue(13, 3)  # 13/8
    got = trapezoid_dyadic(lambda x: x, a, 5)
    assert got == float(a) ** 2 / 2  # trapezoid is exact for linear f
    neg = trapezoid_dyadic(lambda x: x, DyadicValue(-3, 1), 4)
    assert neg == (-1.5) ** 2 / 2


def test_trapezoid_dyadic_quadratic_error_term():
    # composite trapezoid of x**2 over [0,1]: exactly 1/3 + h**2/6
    for m in (2, 4, 6):
        h = 2.0**-m
        got = trapezoid_dyadic(lambda x: x * x, 1, m)
        assert got == pytest.approx(1 / 3 + h * h / 6, rel=1e-12)


def test_trapezoid_dyadic_domain():
    with pytest.raises(ValueError):
        trapezoid_dyadic(lambda x: x, Fraction(1, 3), 4)


def test_level_estimates_closed_form_identity():
    grid = build_to_level(42, 8, 1.06)
    g = get_integrand("x")
    est = ito_integral(grid, g, 1.0, range(3, 9))
    strat = stratonovich_integral(grid, g, 1.0, range(3, 9))
    for m in est.levels:
        b = est.endpoint_per_level[m]
        km = est.K_m_per_level[m]
        assert est.per_level[m] == b * b / 2 - km / 2
        assert strat.per_level[m] == b * b / 2
        assert est.identity_exact_per_level[m] is True
        assert strat.per_level[m] - est.per_level[m] == pytest.approx(
            est.correction_per_level[m])


def test_exact_strat_matches_float_route():
    grid = build_to_level(11, 7, 1.05)
    g = get_integrand("sin")
    est = stratonovich_integral(grid, g, 1.0, [5])
    from walkwise import embedding_family

    fam = embedding_family(grid, [5], {5: int(4.0**5)})
    exact = exact_strat_value(fam[5].nums, 5, g)
    assert est.per_level[5] == pytest.approx(float(exact), abs=1e-9)


def test_ito_formula_residual_shrinks():
    grid = build_to_level(5, 10, 1.1)
    g = get_integrand("sin")
    est = ito_integral(grid, g, 1.0, range(4, 11))
    res = ito_formula_residual(est, g, grid, 1.0)
    assert res[10] < res[4]
    assert res[10] < 0.1
    assert est.residual_per_level == res


def test_residual_requires_ito_mode():
    grid = build_to_level(5, 6, 1.1)
    g = get_integrand("x")
    strat = stratonovich_integral(grid, g, 1.0, [4])
    with pytest.raises(ValueError):
        ito_formula_residual(strat, g, grid, 1.0)


def test_partition_sum_crosscheck():
    grid = build_to_level(2, 9, 1.0)
    g = get_integrand("x")
    val = partition_sum_crosscheck(grid, g, 1.0, 4096)
    wk = grid.values_at(1.0)
    # left sums of x dW approach W(K)**2/2 - K/2
    assert val == pytest.approx(wk * wk / 2 - 0.5, abs=0.25)


def test_estimate_to_dict_round():
    grid = build_to_level(1, 6, 1.02)
    est = ito_integral(grid, get_integrand("x2"), 1.0, [3, 4])
    d = est.to_dict()
    assert d["levels"] == [3, 4]
    assert set(d["per_level"]) == {"3", "4"}
    assert d["mode"] == "ito"
