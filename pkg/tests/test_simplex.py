from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import linprog

from pottscert.simplex import InfeasibleError, solve_linear_program


def test_equality_program_with_duals():
    res = solve_linear_program([1.0, 2.0], [[1.0, 1.0]], [1.0])
    assert res.x == pytest.approx([1.0, 0.0])
    assert res.objective == pytest.approx(1.0)
    assert res.eq_duals == pytest.approx([1.0])


def test_inequality_program_with_duals():
    res = solve_linear_program([-1.0, -2.0], [], [], [[1.0, 1.0]], [1.0])
    assert res.objective == pytest.approx(-2.0)
    assert res.ub_duals == pytest.approx([-2.0])


def test_redundant_rows_are_survived():
    res = solve_linear_program([1.0, 0.0], [[1.0, 1.0], [1.0, 1.0]], [1.0, 1.0])
    assert res.objective == pytest.approx(0.0)
    assert res.x == pytest.approx([0.0, 1.0])


def test_infeasible_detected():
    with pytest.raises(InfeasibleError):
        solve_linear_program([1.0, 0.0], [[1.0, 1.0], [1.0, 1.0]], [1.0, 2.0])


def test_negative_rhs_rows_are_flipped():
    res = solve_linear_program([1.0, 2.0], [[-1.0, -1.0]], [-1.0])
    assert res.objective == pytest.approx(1.0)
    assert res.eq_duals == pytest.approx([-1.0])


def test_rational_matches_float():
    c = [Fraction(3), Fraction(1), Fraction(2)]
    a = [[Fraction(1), Fraction(1), Fraction(1)], [Fraction(2), Fraction(0), Fraction(1)]]
    b = [Fraction(4), Fraction(3)]
    exact = solve_linear_program(c, a, b, rational=True)
    approx = solve_linear_program([3.0, 1.0, 2.0], [[1, 1, 1], [2, 0, 1]], [4.0, 3.0])
    assert float(exact.objective) == pytest.approx(approx.objective)
    assert [float(v) for v in exact.x] == pytest.approx(list(approx.x))


def test_degenerate_vertex_terminates():
    # Multiple constraints meet at the optimum; cycling protection must cope.
    res = solve_linear_program(
        [0.0, 0.0, -1.0],
        [[1.0, -1.0, 0.0]],
        [0.0],
        [[1.0, 0.0, 1.0], [0.0, 1.0, 1.0], [1.0, 1.0, 2.0]],
        [1.0, 1.0, 2.0],
    )
    assert res.objective == pytest.approx(-1.0)


@pytest.mark.parametrize("seed", range(12))
def test_random_programs_match_scipy(seed):
    rng = np.random.default_rng(seed)
    n, m_eq, m_ub = 6, 2, 3
    c = rng.normal(size=n)
    a_eq = rng.normal(size=(m_eq, n))
    a_ub = rng.normal(size=(m_ub, n))
    x_feas = rng.uniform(0.1, 1.0, size=n)
    b_eq = a_eq @ x_feas
    b_ub = a_ub @ x_feas + rng.uniform(0.0, 0.5, size=m_ub)
    ref = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                  bounds=(0, None), method="highs")
    if not ref.success:
        pytest.skip("reference unbounded/infeasible")
    res = solve_linear_program(c, a_eq, b_eq, a_ub, b_ub)
    assert res.objective == pytest.approx(ref.fun, abs=1e-7)
    # Dual objective equals the primal optimum.
    dual_obj = float(np.dot(res.eq_duals, b_eq) + np.dot(res.ub_duals, b_ub))
    assert dual_obj == pytest.approx(res.objective, abs=1e-7)
    assert all(y <= 1e-9 for y in res.ub_duals)


@pytest.mark.parametrize("seed", range(4))
def test_random_rational_programs_match_float(seed):
    rng = np.random.default_rng(100 + seed)
    n = 5
    c = [Fraction(int(v)) for v in rng.integers(-3, 4, n)]
    a = [[Fraction(int(v)) for v in rng.integers(-2, 3, n)] for _ in range(2)]
    x_feas = [Fraction(int(v), 2) for v in rng.integers(1, 4, n)]
    b = [sum(row[j] * x_feas[j] for j in range(n)) for row in a]
    ref = linprog([float(v) for v in c], A_eq=[[float(v) for v in row] for row in a],
                  b_eq=[float(v) for v in b], bounds=(0, None), method="highs")
    if not ref.success:
        pytest.skip("reference unbounded/infeasible")
    exact = solve_linear_program(c, a, b, rational=True)
    assert float(exact.objective) == pytest.approx(ref.fun, abs=1e-9)
