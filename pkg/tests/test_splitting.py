from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from dirac_qwalk.splitting import (RationalSolution, SplittingError, canonical_order, scheme_second_order,
                                   scheme_third_order, search_rational_splittings, suzuki_compose)
from oracles import brute_force_splittings, exact_constraints


def test_second_order_layout():
    s = scheme_second_order()
    assert s.tags() == ["X", "Y", "Z", "M", "V", "A"]
    assert len(s.operator_steps) == 6
    assert s.is_consistent()


def test_third_order_is_a_consistent_palindrome():
    s = scheme_third_order()
    assert len(s.operator_steps) == 11
    assert list(s.steps) == list(reversed(s.steps))
    assert all(v == 1 for v in s.coefficient_sums().values())


def test_suzuki_composition_row_r7():
    p = [Fraction(1, 6)] * 3 + [Fraction(1, 3)] * 3 + [Fraction(-1, 2)]
    f3 = suzuki_compose(scheme_second_order(), p)
    assert len(f3.operator_steps) == 42
    assert f3.order == 3 and f3.is_consistent()
    # p_1 acts first
    assert f3.steps[0].coefficient == Fraction(1, 6)
    assert f3.steps[-1].coefficient == Fraction(-1, 2)


@pytest.mark.parametrize("p", [[1], [Fraction(1, 2), Fraction(1, 2)], [2, -1]])
def test_suzuki_rejects_parameters_violating_the_sums(p):
    with pytest.raises(SplittingError):
        suzuki_compose(scheme_second_order(), p)


@pytest.mark.parametrize("r", [1, 2, 3, 4, 5, 6])
def test_no_solution_below_seven_stages(r):
    assert search_rational_splittings(3, r) == []


def test_single_row_for_seven_and_eight_stages():
    assert [s.p_tilde for s in search_rational_splittings(3, 7)] == [(6, 6, 6, 3, 3, 3, -2)]
    assert [s.p_tilde for s in search_rational_splittings(3, 8)] == [(6, 4, 4, 4, 3, 3, -2, -12)]


@pytest.mark.parametrize("r,p_max", [(5, 12), (6, 12), (7, 12)])
def test_search_matches_brute_force_enumeration(r, p_max):
    found = {s.p_tilde for s in search_rational_splittings(3, r, p_max)}
    assert found == brute_force_splittings(3, r, p_max)


def test_small_bound_brute_force_for_nine_stages():
    found = {s.p_tilde for s in search_rational_splittings(3, 9, 6)}
    assert found == brute_force_splittings(3, 9, 6)


def test_nine_stage_rows_frozen():
    rows = [s.p_tilde for s in search_rational_splittings(3, 9)]
    assert rows == [
        (12, 6, 6, 6, 3, 3, 3, -2, -12),
        (6, 6, 6, 6, 6, 6, 6, 6, -3),
        (6, 6, 6, 6, 3, 3, 3, -2, -6),
        (6, 6, 6, 3, 3, 3, 3, -2, -3),
        (6, 6, 6, 3, 3, 3, 2, -2, -2),
        (6, 6, 6, 3, 3, 3, 1, -1, -2),
    ]
    for row in rows:
        assert exact_constraints(row, 3) == (1, 0)


def test_every_solution_is_exact_and_commensurate():
    for r in (7, 8, 9):
        for sol in search_rational_splittings(3, r):
            assert sol.satisfies(3) and sol.is_commensurate()
            assert 0 not in sol.p_tilde


@given(st.lists(st.integers(-12, 12).filter(bool), min_size=1, max_size=9))
def test_canonical_order_is_permutation_invariant(values):
    ordered = canonical_order(values)
    assert canonical_order(reversed(values)) == ordered
    assert sorted(ordered) == sorted(values)
    pos = [v for v in ordered if v > 0]
    assert list(ordered[: len(pos)]) == sorted(pos, reverse=True)


def test_rational_solution_p_values():
    sol = RationalSolution(7, (6, 6, 6, 3, 3, 3, -2))
    assert sum(sol.p) == 1
