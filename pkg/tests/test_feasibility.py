"""Exact linear feasibility via variable elimination, and its use on
bid-space support systems."""

from fractions import Fraction

import pytest

from gsp_poa import (
    Assignment,
    DimensionCapError,
    Inequality,
    InvalidInstanceError,
    LinearSystem,
    allocate,
    gap_instance,
    make_bids,
    make_instance,
    reference_equilibrium,
    solve,
    support_system,
    verify_nash,
)

F = Fraction


def satisfies(system, point, strict_ok=True):
    for row in system.rows:
        lhs = sum(c * x for c, x in zip(row.coeffs, point))
        if row.rel == ">=" and not lhs >= row.rhs:
            return False
        if row.rel == "<=" and not lhs <= row.rhs:
            return False
        if row.rel == ">" and not lhs > row.rhs:
            return False
        if row.rel == "<" and not lhs < row.rhs:
            return False
    return True


def test_contradictory_pair_is_infeasible():
    system = LinearSystem(
        ("b1",),
        (
            Inequality((F(1),), ">", F(0), "positive"),
            Inequality((F(1),), "<=", F(0), "nonpositive"),
        ),
    )
    result = solve(system)
    assert result.status == "infeasible"
    assert not result.feasible
    assert result.witness is None
    assert result.conflict


def test_single_variable_box_witness():
    system = LinearSystem(
        ("b1",),
        (
            Inequality((F(1),), ">=", F(2), "lower"),
            Inequality((F(1),), "<=", F(6), "upper"),
        ),
    )
    result = solve(system)
    assert result.feasible
    assert F(2) <= result.witness[0] <= F(6)
    assert satisfies(system, result.witness)


def test_strict_rows_are_met_strictly_by_the_witness():
    system = LinearSystem(
        ("b1", "b2"),
        (
            Inequality((F(1), F(-1)), ">", F(0), "b1 above b2"),
            Inequality((F(0), F(1)), ">", F(0), "b2 positive"),
            Inequality((F(1), F(0)), "<", F(1), "b1 below one"),
        ),
    )
    result = solve(system)
    assert result.feasible
    b1, b2 = result.witness
    assert b1 > b2 > 0
    assert b1 < 1


def test_trivial_support_system_is_feasible():
    system = support_system(make_instance([1], [1]), Assignment((1,)))
    result = solve(system)
    assert result.feasible
    assert 0 <= result.witness[0] <= 1


def test_reference_assignment_support_round_trip():
    instance, bids = reference_equilibrium(4)
    pi = allocate(instance, bids)
    system = support_system(instance, pi)
    result = solve(system)
    assert result.feasible
    witness = make_bids(result.witness)
    assert allocate(instance, witness) == pi
    report = verify_nash(instance, witness, epsilon=0)
    assert report.is_nash
    assert report.max_regret == 0


def test_gap_assignment_support_is_infeasible():
    instance, pi = gap_instance()
    result = solve(support_system(instance, pi))
    assert result.status == "infeasible"
    assert result.conflict


def test_status_is_independent_of_elimination_order():
    instance, bids = reference_equilibrium(3)
    feasible_sys = support_system(instance, allocate(instance, bids))
    gap, pi = gap_instance()
    infeasible_sys = support_system(gap, pi)
    orders = [
        ("b1", "b2", "b3"),
        ("b3", "b1", "b2"),
        (2, 0, 1),
    ]
    for order in orders:
        res = solve(feasible_sys, order=order)
        assert res.feasible
        assert satisfies(feasible_sys, res.witness)
    gap_orders = [
        ("b1", "b2", "b3", "b4"),
        ("b4", "b2", "b3", "b1"),
        (0, 3, 1, 2),
    ]
    for order in gap_orders:
        assert solve(infeasible_sys, order=order).status == "infeasible"


def test_solver_is_deterministic():
    instance, bids = reference_equilibrium(4)
    system = support_system(instance, allocate(instance, bids))
    first = solve(system)
    second = solve(system)
    assert first.witness == second.witness
    assert first.eliminated_order == second.eliminated_order


def test_order_validation():
    instance, _ = reference_equilibrium(2)
    system = support_system(instance, Assignment((2, 1)))
    with pytest.raises(InvalidInstanceError):
        solve(system, order=("b1", "b9"))
    with pytest.raises(InvalidInstanceError):
        solve(system, order=("b1",))
    with pytest.raises(InvalidInstanceError):
        solve(system, order=("b1", "b1"))


def test_variable_cap_is_enforced():
    n = 13
    rows = tuple(
        Inequality(tuple(F(int(i == j)) for j in range(n)), ">=", F(0), "")
        for i in range(n)
    )
    system = LinearSystem(tuple(f"b{i + 1}" for i in range(n)), rows)
    with pytest.raises(DimensionCapError):
        solve(system)
    assert solve(system, max_variables=13).feasible


def test_every_feasible_three_advertiser_assignment_yields_a_verified_witness():
    instance, _ = reference_equilibrium(3)
    import itertools

    feasible = []
    for perm in itertools.permutations((1, 2, 3)):
        pi = Assignment(perm)
        result = solve(support_system(instance, pi))
        if result.feasible:
            witness = make_bids(result.witness)
            assert allocate(instance, witness) == pi
            assert verify_nash(instance, witness, epsilon=0).is_nash
            feasible.append(perm)
    assert (1, 2, 3) in feasible
    assert (2, 3, 1) in feasible
