"""Certified lower-bound search, permutation enumeration, and the
ratio monotonicity probe."""

from fractions import Fraction

import numpy as np
import pytest

from gsp_poa import (
    Assignment,
    InvalidInstanceError,
    SearchConfig,
    allocate,
    candidate_assignments,
    certify_assignment,
    cyclic_permutation,
    enumerate_ne_permutations,
    gap_instance,
    make_bids,
    make_instance,
    monotonicity_probe,
    poa_lower_bound,
    read_frontier_csv,
    reference_equilibrium,
    sorted_equilibrium_bids,
    verify_nash,
)

F = Fraction


def random_exact_instance(rng, n, allow_zero=True):
    lo = 0 if allow_zero else 1
    vals = np.sort(rng.integers(lo, 101, n))[::-1]
    ctrs = np.sort(rng.integers(lo, 101, n))[::-1]
    values = (F(1),) + tuple(F(int(v), 100) for v in vals[1:])
    alphas = (F(1),) + tuple(F(int(a), 100) for a in ctrs[1:])
    return values, alphas


def test_cyclic_permutation_examples():
    assert cyclic_permutation(1).slot_to_adv == (1,)
    assert cyclic_permutation(3).slot_to_adv == (2, 3, 1)
    assert cyclic_permutation(4).slot_to_adv == (2, 3, 4, 1)
    assert cyclic_permutation(4).slot_to_adv != (2, 3, 1, 4)
    with pytest.raises(InvalidInstanceError):
        cyclic_permutation(0)


def test_candidate_assignments_cover_or_cap():
    assert len(candidate_assignments(4)) == 24
    assert len(candidate_assignments(6)) == 720
    large = candidate_assignments(7)
    assert len(large) == 2
    assert tuple(range(1, 8)) in large
    assert cyclic_permutation(7).slot_to_adv in large


def test_sorted_equilibrium_construction_has_zero_regret():
    rng = np.random.default_rng(13)
    for _ in range(500):
        n = int(rng.integers(1, 7))
        values, ctrs = random_exact_instance(rng, n)
        bids = sorted_equilibrium_bids(values, ctrs)
        instance = make_instance(values, ctrs)
        profile = make_bids(bids)
        assert allocate(instance, profile).is_identity()
        report = verify_nash(instance, profile, epsilon=0)
        assert report.max_regret == 0


def test_sorted_equilibrium_handles_zero_tails():
    values = (F(1), F(1, 2), F(1, 4))
    ctrs = (F(1), F(0), F(0))
    bids = sorted_equilibrium_bids(values, ctrs)
    assert bids == (F(1), F(1, 2), F(0))
    instance = make_instance(values, ctrs)
    assert verify_nash(instance, make_bids(bids), epsilon=0).is_nash

    flat = sorted_equilibrium_bids((F(1),), (F(1),))
    assert flat == (F(0),)


def test_certify_assignment_reference_and_gap():
    instance, bids = reference_equilibrium(4)
    pi = allocate(instance, bids)
    witness = certify_assignment(instance.values, instance.ctrs, pi)
    assert witness is not None
    report = verify_nash(instance, make_bids(witness), epsilon=0)
    assert report.is_nash
    assert allocate(instance, make_bids(witness)) == pi

    gap, gap_pi = gap_instance()
    assert certify_assignment(gap.values, gap.ctrs, gap_pi) is None


def test_single_advertiser_search_is_trivial():
    result = poa_lower_bound(SearchConfig(n=1, random_candidates=20,
                                          refine_top=0))
    assert result.best_ratio == 1.0
    assert result.best.ratio_exact == 1
    assert result.certified >= 20


def test_two_advertiser_grid_finds_the_quarter_gap_market():
    config = SearchConfig(n=2, random_candidates=0, grid_step=F(1, 10),
                          use_seeds=False, refine_top=0)
    result = poa_lower_bound(config)
    assert result.evaluated == 121
    assert result.best.ratio_exact == F(5, 4)
    assert result.best.assignment.slot_to_adv == (2, 1)
    assert result.best.values == (1, F(1, 2))
    assert result.best.ctrs == (1, F(1, 2))
    assert result.max_certified_ratio <= 1.25 + 1e-12
    certified = [r for r in result.frontier if r.certified]
    assert len(certified) == result.certified


def test_search_is_deterministic_for_a_fixed_config():
    config = SearchConfig(n=3, random_candidates=150, use_grid=False,
                          refine_top=1, refine_sweeps=3, seed=5)
    a = poa_lower_bound(config)
    b = poa_lower_bound(config)
    key = lambda r: (r.candidate_id, r.assignment.slot_to_adv, r.certified,
                     str(r.ratio_exact), tuple(str(x) for x in r.values))
    assert [key(r) for r in a.frontier] == [key(r) for r in b.frontier]
    assert a.best.ratio_exact == b.best.ratio_exact
    assert a.certified == b.certified

    other = poa_lower_bound(SearchConfig(n=3, random_candidates=150,
                                         use_grid=False, refine_top=1,
                                         refine_sweeps=3, seed=6))
    assert [key(r) for r in other.frontier] != [key(r) for r in a.frontier]


def test_worker_count_does_not_change_the_result():
    base = dict(n=3, random_candidates=120, use_grid=False, refine_top=0,
                seed=9)
    serial = poa_lower_bound(SearchConfig(**base, workers=1))
    parallel = poa_lower_bound(SearchConfig(**base, workers=2))
    key = lambda r: (r.candidate_id, r.assignment.slot_to_adv, r.certified,
                     str(r.ratio_exact))
    assert [key(r) for r in serial.frontier] == [key(r) for r in parallel.frontier]
    assert serial.best.ratio_exact == parallel.best.ratio_exact
    assert serial.certified == parallel.certified


def test_target_mode_only_reports_the_requested_assignment():
    config = SearchConfig(n=2, target=Assignment((2, 1)), random_candidates=60,
                          use_grid=False, use_seeds=False, refine_top=0, seed=2)
    result = poa_lower_bound(config)
    for rec in result.frontier:
        if rec.candidate_id.startswith("rand"):
            assert rec.assignment.slot_to_adv == (2, 1)
    assert any(r.certified for r in result.frontier)
    assert result.best.ratio_exact > 1


def test_target_mode_with_no_candidates_falls_back_to_identity():
    config = SearchConfig(n=2, target=Assignment((2, 1)), random_candidates=0,
                          use_grid=False, use_seeds=False, refine_top=0)
    result = poa_lower_bound(config)
    assert result.best.candidate_id == "fallback-identity"
    assert result.best_ratio == 1.0
    assert result.certified == 0


def test_search_config_validation():
    with pytest.raises(InvalidInstanceError):
        poa_lower_bound(SearchConfig(n=0))
    with pytest.raises(InvalidInstanceError):
        poa_lower_bound(SearchConfig(n=3, target=Assignment((2, 1))))


def test_frontier_csv_round_trip(tmp_path):
    path = str(tmp_path / "frontier.csv")
    config = SearchConfig(n=2, random_candidates=40, use_grid=False,
                          refine_top=0, seed=1, log_path=path)
    result = poa_lower_bound(config)
    rows = read_frontier_csv(path)
    assert len(rows) == len(result.frontier)
    by_id = {r.candidate_id: r for r in result.frontier}
    for row in rows:
        rec = by_id[row["candidate_id"]]
        assert row["permutation"] == "-".join(str(a) for a
                                              in rec.assignment.slot_to_adv)
        assert (row["certified"] == "true") == rec.certified
        assert Fraction(row["values_1"]) == rec.values[0]
        assert Fraction(row["ctrs_2"]) == rec.ctrs[1]


def test_search_result_json_shape():
    result = poa_lower_bound(SearchConfig(n=2, random_candidates=10,
                                          use_grid=False, refine_top=0))
    data = result.to_json_dict()
    assert data["n"] == 2
    assert data["certified"] >= 1
    assert data["best"]["permutation"] in ([1, 2], [2, 1])
    assert Fraction(data["best"]["ratio_exact"]) == result.best.ratio_exact


def test_enumeration_on_a_locked_market():
    instance = make_instance([1, 0], [1, 1], exact=True)
    report = enumerate_ne_permutations(instance)
    assert [a.slot_to_adv for a in report.feasible] == [(1, 2)]
    assert [a.slot_to_adv for a in report.infeasible] == [(2, 1)]


def test_enumeration_on_the_reference_market():
    instance, _ = reference_equilibrium(4)
    report = enumerate_ne_permutations(instance)
    feasible = {a.slot_to_adv for a in report.feasible}
    assert (1, 2, 3, 4) in feasible
    assert (2, 3, 1, 4) in feasible
    assert len(feasible) == 4
    assert len(report.feasible) + len(report.infeasible) == 24
    for perm, bids in report.witnesses.items():
        profile = make_bids(bids)
        assert allocate(instance, profile).slot_to_adv == perm
        assert verify_nash(instance, profile, epsilon=0).is_nash


def test_enumeration_size_cap():
    values = [1] + [F(1, k) for k in range(2, 10)]
    ctrs = [1] + [F(1, k) for k in range(2, 10)]
    instance = make_instance(values, ctrs)
    with pytest.raises(InvalidInstanceError):
        enumerate_ne_permutations(instance)
    small, _ = reference_equilibrium(4)
    with pytest.raises(InvalidInstanceError):
        enumerate_ne_permutations(small, max_n=3)


def test_monotonicity_probe_slopes_on_the_reference_market():
    instance, bids = reference_equilibrium(4)
    pi = allocate(instance, bids)
    slope_tail = monotonicity_probe(instance, pi, 4, F(1, 1000))
    assert slope_tail < 0
    assert float(slope_tail) == pytest.approx(-0.11206, abs=2e-4)
    slope_mid = monotonicity_probe(instance, pi, 2, F(1, 1000))
    assert float(slope_mid) == pytest.approx(-0.65423, abs=2e-3)
    slope_lead = monotonicity_probe(instance, pi, 1, F(1, 1000))
    assert float(slope_lead) == pytest.approx(0.37750, abs=2e-3)


def test_monotonicity_probe_rejects_impossible_steps():
    instance, bids = reference_equilibrium(4)
    pi = allocate(instance, bids)
    with pytest.raises(InvalidInstanceError):
        monotonicity_probe(instance, pi, 4, F(2, 10))
    with pytest.raises(InvalidInstanceError):
        monotonicity_probe(instance, pi, 0, F(1, 100))
    with pytest.raises(InvalidInstanceError):
        monotonicity_probe(instance, pi, 2, 0)
