"""Nash verification, deviation scoring, pairwise slot conditions, and
the bid-space support system."""

from fractions import Fraction

import numpy as np
import pytest

from gsp_poa import (
    Assignment,
    LinearSystem,
    allocate,
    best_deviation,
    best_response_dynamics,
    gap_instance,
    make_bids,
    make_instance,
    max_regret_exact,
    reference_assignment,
    reference_equilibrium,
    settle,
    support_system,
    verify_nash,
    weakly_feasible,
)
from gsp_poa.search import sorted_equilibrium_bids

F = Fraction


def random_exact_instance(rng, n):
    vals = np.sort(rng.integers(0, 101, n))[::-1]
    ctrs = np.sort(rng.integers(0, 101, n))[::-1]
    values = [F(1)] + [F(int(v), 100) for v in vals[1:]]
    alphas = [F(1)] + [F(int(a), 100) for a in ctrs[1:]]
    return make_instance(values, alphas)


def test_reference_profiles_are_exact_equilibria():
    for n in (2, 3, 4, 7):
        instance, bids = reference_equilibrium(n)
        report = verify_nash(instance, bids, epsilon=0)
        assert report.is_nash
        assert report.max_regret == 0
        assert allocate(instance, bids) == reference_assignment(n)


def test_deviation_options_of_the_top_value_advertiser():
    instance, bids = reference_equilibrium(4)
    report = best_deviation(instance, bids, 1)
    assert report.current_slot == 3
    assert report.current_utility == F(47, 100)
    utilities = [opt.utility for opt in report.options]
    assert utilities == [F(47, 100), F(4675, 10000), F(47, 100), F(47, 100)]
    assert all(opt.attainable for opt in report.options)
    assert report.best_slot == 3
    assert report.regret == 0


def test_deviation_regret_after_lowering_a_rival_bid():
    instance, _ = reference_equilibrium(4)
    bids = make_bids([0, F(53, 100), F(5, 100), 0])
    report = best_deviation(instance, bids, 1)
    assert report.best_slot == 2
    assert report.best_utility == F(5225, 10000)
    assert report.regret == F(525, 10000)
    assert not verify_nash(instance, bids, epsilon=0).is_nash


def test_zero_value_advertiser_never_regrets():
    instance, bids = reference_equilibrium(5)
    report = best_deviation(instance, bids, 5)
    assert report.current_utility == 0
    assert report.regret == 0


def test_upward_move_blocked_at_the_value_cap():
    """An opponent bidding exactly the deviator's value and winning the
    index tie-break makes the top slot a supremum, not an attainable
    deviation, and the option is flagged accordingly."""
    instance = make_instance([1, 1], [1, F(1, 2)])
    bids = make_bids([1, F(1, 2)])
    report = best_deviation(instance, bids, 2)
    assert report.options[0].utility == 0
    assert not report.options[0].attainable
    assert report.options[1].attainable
    assert report.best_slot == 2
    mirrored = best_deviation(instance, make_bids([F(1, 2), 1]), 1)
    assert mirrored.options[0].attainable


def test_best_deviation_rejects_unknown_advertiser():
    instance, bids = reference_equilibrium(2)
    from gsp_poa import InvalidInstanceError

    with pytest.raises(InvalidInstanceError):
        best_deviation(instance, bids, 3)


def test_regret_nonnegative_and_utility_capped_by_value():
    rng = np.random.default_rng(23)
    for _ in range(200):
        n = int(rng.integers(2, 6))
        instance = random_exact_instance(rng, n)
        bids = make_bids([v * F(int(rng.integers(0, 11)), 10)
                          for v in instance.values])
        for adv in range(1, n + 1):
            report = best_deviation(instance, bids, adv)
            assert report.regret >= 0
            assert report.best_utility <= instance.values[adv - 1]


def test_max_regret_exact_matches_the_report_path():
    rng = np.random.default_rng(31)
    for _ in range(300):
        n = int(rng.integers(2, 6))
        instance = random_exact_instance(rng, n)
        bids = make_bids([v * F(int(rng.integers(0, 11)), 10)
                          for v in instance.values])
        assignment = allocate(instance, bids)
        report = verify_nash(instance, bids, epsilon=0)
        fast = max_regret_exact(instance.values, instance.ctrs, bids.bids,
                                assignment.slot_to_adv)
        assert fast == report.max_regret
        assert report.is_nash == (fast == 0)


def test_verify_nash_float_tolerance():
    instance = make_instance([1.0, 0.5], [1.0, 0.5])
    bids = make_bids([0.25 + 2e-10, 0.5])
    report = verify_nash(instance, bids)
    assert report.epsilon == 1e-9
    assert report.is_nash
    assert verify_nash(instance, bids, epsilon=1e-11).is_nash is False


def test_nash_report_json_shape():
    instance, bids = reference_equilibrium(2)
    data = verify_nash(instance, bids, epsilon=0).to_json_dict()
    assert data["is_nash"] is True
    assert len(data["advertisers"]) == 2
    row = data["advertisers"][0]
    assert set(row) == {"advertiser", "slot", "utility", "best_slot",
                        "best_utility", "regret", "attainable"}
    pretty = verify_nash(instance, bids, epsilon=0).pretty()
    assert "Nash equilibrium" in pretty


def test_pairwise_conditions_on_reference_and_gap_assignments():
    instance, bids = reference_equilibrium(4)
    report = weakly_feasible(instance, allocate(instance, bids))
    assert report.ok
    assert report.min_slack >= 0

    gap, pi = gap_instance()
    gap_report = weakly_feasible(gap, pi)
    assert gap_report.ok
    assert gap_report.min_slack == 0
    assert (1, 3) in gap_report.tight_pairs
    assert gap_report.slacks[(1, 3)] == 0


def test_pairwise_conditions_hold_for_identity_and_fail_when_violated():
    rng = np.random.default_rng(5)
    for _ in range(100):
        n = int(rng.integers(1, 6))
        instance = random_exact_instance(rng, n)
        identity = Assignment(tuple(range(1, n + 1)))
        assert weakly_feasible(instance, identity).ok

    instance = make_instance([1, F(1, 2)], [1, 0])
    report = weakly_feasible(instance, Assignment((2, 1)))
    assert not report.ok
    assert report.slacks[(1, 2)] < 0


def test_equilibria_always_pass_the_pairwise_conditions():
    rng = np.random.default_rng(41)
    checked = 0
    for _ in range(400):
        n = int(rng.integers(2, 6))
        instance = random_exact_instance(rng, n)
        bids = make_bids(sorted_equilibrium_bids(instance.values, instance.ctrs))
        assert verify_nash(instance, bids, epsilon=0).is_nash
        assignment = allocate(instance, bids)
        assert weakly_feasible(instance, assignment).ok
        checked += 1
    assert checked == 400


def test_support_system_accepts_the_reference_bids():
    instance, bids = reference_equilibrium(4)
    system = support_system(instance, allocate(instance, bids))
    assert system.variables == ("b1", "b2", "b3", "b4")
    for row in system.rows:
        lhs = sum(c * b for c, b in zip(row.coeffs, bids.bids))
        if row.rel == ">=":
            assert lhs >= row.rhs, row.provenance
        elif row.rel == ">":
            assert lhs > row.rhs, row.provenance
        elif row.rel == "<=":
            assert lhs <= row.rhs, row.provenance
        else:
            assert lhs < row.rhs, row.provenance


def test_support_system_row_inventory():
    instance, _ = reference_equilibrium(3)
    system = support_system(instance, Assignment((1, 2, 3)))
    assert len(system.rows) == 2 * 3 + 2 + 3 * 2
    single = support_system(make_instance([1], [1]), Assignment((1,)))
    assert len(single.rows) == 2


def test_linear_system_json_and_pretty_round_trip():
    instance, _ = reference_equilibrium(3)
    system = support_system(instance, Assignment((2, 3, 1)))
    rebuilt = LinearSystem.from_json_dict(system.to_json_dict())
    assert rebuilt == system
    text = system.pretty()
    assert "b1" in text and "adv" in text


def test_dynamics_fixed_point_on_the_reference_profile():
    instance, bids = reference_equilibrium(4)
    result = best_response_dynamics(instance, bids)
    assert result.status == "converged"
    assert result.rounds == 0
    assert result.trajectory == (bids.bids,)
    assert result.moves == ()
    assert result.report.is_nash


def test_dynamics_reaches_equilibrium_from_truthful_two_advertisers():
    instance = make_instance([1, F(1, 2)], [1, F(1, 2)])
    start = make_bids([1, F(1, 2)])
    result = best_response_dynamics(instance, start, max_rounds=10)
    assert result.status == "converged"
    assert result.report.is_nash
    final = make_bids(result.trajectory[-1])
    assert settle(instance, final).welfare > 0


def test_dynamics_single_advertiser_and_random_order():
    instance = make_instance([1], [1])
    result = best_response_dynamics(instance, make_bids([1]))
    assert result.status == "converged"
    assert result.rounds <= 1

    four, bids = reference_equilibrium(4)
    randomized = best_response_dynamics(four, bids, order="random", seed=3)
    assert randomized.status == "converged"

    from gsp_poa import InvalidInstanceError

    with pytest.raises(InvalidInstanceError):
        best_response_dynamics(four, bids, order="sideways")
