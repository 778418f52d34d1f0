"""Frozen-value reproduction suite.

Ten standalone checks pin the toolkit's headline results: the
four-advertiser witness equilibrium, the budgeted two/three/four
advertiser search brackets, the weakly-feasible-but-unsupportable gap
instance, the zero-padding tightness family, the closed-form bound
sweep, the corrected ratio-monotonicity lemma, the bid-grid oracle
cross-check, and the certified-implies-weakly-feasible property.

Expected values were derived independently (exact rational arithmetic
or closed forms) and are asserted at the tolerances stated in each
check.  Check 7 is expected to fail; see the README's known-defect
note: the first sweep clause does not hold for generic CTR vectors.
"""

from __future__ import annotations

import itertools
import tempfile
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import auction, bounds, equilibrium, feasibility
from .auction import Assignment, make_instance
from .reference import (
    REFERENCE_RATIO,
    gap_instance,
    reference_assignment,
    reference_equilibrium,
)
from .search import (
    SearchConfig,
    candidate_assignments,
    cyclic_permutation,
    poa_lower_bound,
    read_frontier_csv,
)

#: Exact ratios the checks compare against.
WITNESS_RATIO = REFERENCE_RATIO                  # 2724/2165
GAP_RATIO_SLOT = Fraction(14500, 11729)          # slot -> advertiser reading
GAP_RATIO_ADV = Fraction(2900, 2199)             # advertiser -> slot reading
QUOTED_GAP_RATIO = "1.269"                       # matches neither reading


@dataclass(frozen=True)
class RowResult:
    key: str
    title: str
    expected: str
    observed: str
    passed: bool
    seconds: float


def _row(key, title, expected, observed, passed, start) -> RowResult:
    return RowResult(key, title, expected, str(observed), bool(passed),
                     time.perf_counter() - start)


def _fmt(x) -> str:
    return f"{float(x):.6g}"


# ---------------------------------------------------------------------------
# check 1: four-advertiser witness equilibrium
# ---------------------------------------------------------------------------


def check_witness(seed: int = 0) -> RowResult:
    start = time.perf_counter()
    instance, bids = reference_equilibrium(4)
    assignment = auction.allocate(instance, bids)
    report = equilibrium.verify_nash(instance, bids, epsilon=0)
    ratio = auction.efficiency_ratio(instance, assignment)
    ok = (
        report.is_nash
        and assignment.slot_to_adv == (2, 3, 1, 4)
        and Fraction("1.2580") <= ratio <= Fraction("1.2585")
    )
    observed = (f"nash={report.is_nash} perm={assignment.slot_to_adv} "
                f"ratio={_fmt(ratio)}")
    return _row("C1", "four-advertiser witness equilibrium",
                "exact NE, perm (2,3,1,4), ratio in [1.2580, 1.2585]",
                observed, ok, start)


# ---------------------------------------------------------------------------
# checks 2-4: budgeted search brackets
# ---------------------------------------------------------------------------


def check_two_advertisers(seed: int = 0) -> RowResult:
    start = time.perf_counter()
    config = SearchConfig(n=2, seed=seed, random_candidates=0,
                          grid_step=Fraction(1, 100))
    result = poa_lower_bound(config)
    ok = (Fraction("1.2400") <= result.best.ratio_exact
          and float(result.best.ratio_exact) <= 1.2501
          and result.max_certified_ratio <= 1.2501)
    observed = (f"best={_fmt(result.best.ratio_exact)} "
                f"max_certified={_fmt(result.max_certified_ratio)} "
                f"certified={result.certified}")
    return _row("C2", "two-advertiser grid search bracket",
                "best in [1.2400, 1.2501]; no certified ratio above 1.2501",
                observed, ok, start)


def check_three_advertisers(seed: int = 0, budget: int = 100_000) -> RowResult:
    start = time.perf_counter()
    config = SearchConfig(n=3, seed=seed, random_candidates=budget,
                          use_grid=False)
    result = poa_lower_bound(config)
    ok = (result.best.ratio_exact >= Fraction("1.2582")
          and result.certified >= budget
          and result.max_certified_ratio <= 1.2600)
    observed = (f"best={_fmt(result.best.ratio_exact)} "
                f"certified={result.certified} "
                f"max_certified={_fmt(result.max_certified_ratio)}")
    return _row("C3", "three-advertiser seeded search bracket",
                f"best >= 1.2582 over >= {budget} certified; none above 1.2600",
                observed, ok, start)


def check_four_advertisers(seed: int = 0, budget: int = 100_000) -> RowResult:
    start = time.perf_counter()
    n_perms = len(candidate_assignments(4))
    config = SearchConfig(n=4, seed=seed, random_candidates=budget,
                          use_grid=False)
    result = poa_lower_bound(config)
    ok = (n_perms == 24
          and result.certified >= budget
          and Fraction("1.2582") <= result.best.ratio_exact
          and result.max_certified_ratio <= 1.2600)
    observed = (f"perms={n_perms} best={_fmt(result.best.ratio_exact)} "
                f"certified={result.certified} "
                f"max_certified={_fmt(result.max_certified_ratio)}")
    return _row("C4", "four-advertiser full-budget search bracket",
                f"24 assignments; best in [1.2582, 1.2600] over >= {budget} "
                "certified", observed, ok, start)


# ---------------------------------------------------------------------------
# check 5: weakly feasible but not supportable
# ---------------------------------------------------------------------------


def check_gap_instance(seed: int = 0) -> RowResult:
    start = time.perf_counter()
    instance, assignment = gap_instance()
    weak = equilibrium.weakly_feasible(instance, assignment)
    verdict = feasibility.solve(equilibrium.support_system(instance, assignment))
    ratio_slot = auction.efficiency_ratio(instance, assignment)
    ratio_adv = auction.efficiency_ratio(instance, assignment.inverse())
    ok = (weak.ok and not verdict.feasible
          and ratio_slot == GAP_RATIO_SLOT and ratio_adv == GAP_RATIO_ADV)
    observed = (f"weak={weak.ok} supportable={verdict.feasible} "
                f"ratio(slot)={_fmt(ratio_slot)} ratio(adv)={_fmt(ratio_adv)}; "
                f"quoted {QUOTED_GAP_RATIO} matches neither reading")
    return _row("C5", "weak-feasibility gap instance",
                "weakly feasible yet unsupportable; ratio 1.23626 slot / "
                f"1.31878 adv vs quoted {QUOTED_GAP_RATIO}",
                observed, ok, start)


# ---------------------------------------------------------------------------
# check 6: zero-padding tightness family
# ---------------------------------------------------------------------------


def check_padding_family(seed: int = 0) -> RowResult:
    start = time.perf_counter()
    failures = []
    for n in range(5, 11):
        instance, bids = reference_equilibrium(n)
        report = equilibrium.verify_nash(instance, bids, epsilon=0)
        assignment = auction.allocate(instance, bids)
        ratio = auction.efficiency_ratio(instance, assignment)
        # the family's exact ratio rounds to 1.2582; compared at the
        # printing tolerance and pinned exactly
        if not (report.is_nash
                and assignment.slot_to_adv == reference_assignment(n).slot_to_adv
                and ratio == WITNESS_RATIO
                and ratio >= Fraction("1.2582") - Fraction(1, 10_000)):
            failures.append(n)
    observed = ("all exact NE, ratio 2724/2165 = 1.25820 for n=5..10"
                if not failures else f"failed for n in {failures}")
    return _row("C6", "zero-padding tightness family",
                "exact NE with ratio 1.25820 (tolerance 1e-4) for n=5..10",
                observed, not failures, start)


# ---------------------------------------------------------------------------
# check 7: closed-form bound sweep (known defect: first clause fails)
# ---------------------------------------------------------------------------


def check_bound_sweep(seed: int = 0, samples: int = 10_000) -> RowResult:
    start = time.perf_counter()
    tol = Fraction(1, 10**12)
    violations = 0
    first = None
    total = 0
    min_ok = True
    for k in range(5, 11):
        for ctrs in bounds.sample_ctrs(k, samples, seed + k):
            total += 1
            rec = bounds.record_for(tuple(ctrs))
            if rec.min_bound > Fraction(k, k - 1) + tol:
                min_ok = False
            if rec.ratio > rec.min_bound + tol:
                violations += 1
                if first is None:
                    first = (k, float(rec.ratio), float(rec.min_bound))
    ok = violations == 0 and min_ok
    observed = (f"min-bound clause ok={min_ok}; ratio<=min violated on "
                f"{violations}/{total} draws"
                + (f", first k={first[0]} ratio={first[1]:.6g} "
                   f"min={first[2]:.6g}" if first else ""))
    return _row("C7", "closed-form ratio vs. bound pair sweep",
                "ratio <= min(bound_a, bound_b) + 1e-12 and "
                "min <= k/(k-1) + 1e-12 on every draw",
                observed, ok, start)


# ---------------------------------------------------------------------------
# check 8: corrected shifted-ratio monotonicity
# ---------------------------------------------------------------------------


def check_monotonicity_lemma(seed: int = 0, samples: int = 100_000) -> RowResult:
    start = time.perf_counter()
    probe = bounds.shifted_ratio_monotone(0, 1, 1, 1, 1, 0)
    counterexample_ok = (not probe.inequality_holds
                        and not probe.condition_holds)

    rng = np.random.default_rng(seed)
    kept = 0
    violations = 0
    while kept < samples:
        m = max(4096, 2 * (samples - kept))
        x = rng.integers(0, 10_001, size=m)
        y = rng.integers(1, 10_001, size=m)
        ab = np.sort(rng.integers(0, 10_001, size=(m, 2)), axis=1)
        a, b = ab[:, 0], ab[:, 1]
        vv = np.sort(rng.integers(0, 10_001, size=(m, 2)), axis=1)
        vp, v = vv[:, 0], vv[:, 1]
        mask = (b > 0) & (x * b >= a * y)
        x, y, a, b, v, vp = (arr[mask] for arr in (x, y, a, b, v, vp))
        take = min(len(x), samples - kept)
        x, y, a, b, v, vp = (arr[:take] for arr in (x, y, a, b, v, vp))
        # cross-multiplied exact comparison in int64
        lhs = (x + a * v) * (y + b * vp)
        rhs = (x + a * vp) * (y + b * v)
        violations += int(np.count_nonzero(lhs > rhs))
        kept += take
    ok = counterexample_ok and violations == 0
    observed = (f"counterexample verdict inequality={probe.inequality_holds} "
                f"condition={probe.condition_holds}; "
                f"{violations}/{kept} violations under the correction")
    return _row("C8", "shifted-ratio monotonicity correction",
                "(0,1,1,1,1,0) violates the raw claim; zero violations in "
                f"{samples} draws with x*b >= a*y",
                observed, ok, start)


# ---------------------------------------------------------------------------
# check 9: bid-grid oracle agreement
# ---------------------------------------------------------------------------


def grid_min_regret(values100: tuple, ctrs100: tuple,
                    chunk: int = 1 << 18) -> dict:
    """Exhaustive 0.01-step bid grid sweep in exact integer arithmetic.

    ``values100``/``ctrs100`` are the instance scaled by 100 (ints,
    lead 100).  Returns {slot_to_adv tuple: minimal max-regret} over
    all conservative grid profiles inducing that assignment, regret in
    units of 1e-4 (so the 0.02 slack is 200).
    """
    n = len(values100)
    axes = [np.arange(v + 1, dtype=np.int64) for v in values100]
    mesh = np.meshgrid(*axes, indexing="ij")
    bids_flat = np.stack([m.reshape(-1) for m in mesh], axis=1)
    ctrs = np.asarray(ctrs100, dtype=np.int64)
    vals = np.asarray(values100, dtype=np.int64)
    out: dict[tuple, int] = {}
    for lo in range(0, bids_flat.shape[0], chunk):
        B = bids_flat[lo:lo + chunk]
        m = B.shape[0]
        # slot of advertiser i = number of rivals ranked above it
        rank = np.zeros((m, n), dtype=np.int64)
        for i in range(n):
            for j in range(n):
                if j == i:
                    continue
                above = (B[:, j] >= B[:, i]) if j < i else (B[:, j] > B[:, i])
                rank[:, i] += above
        # occupant bid and CTR per slot
        slot_bid = np.zeros((m, n), dtype=np.int64)
        for i in range(n):
            for k in range(n):
                sel = rank[:, i] == k
                slot_bid[sel, k] = B[sel, i]
        pay = np.zeros((m, n), dtype=np.int64)
        pay[:, :-1] = slot_bid[:, 1:]
        regret = np.zeros(m, dtype=np.int64)
        for i in range(n):
            cur = ctrs[rank[:, i]] * (vals[i] - pay[np.arange(m), rank[:, i]])
            for j in range(n):
                price = np.where(
                    j < rank[:, i], slot_bid[:, j],
                    slot_bid[:, j + 1] if j + 1 < n else np.int64(0))
                gain = ctrs[j] * (vals[i] - price) - cur
                np.maximum(regret, gain, out=regret)
        # perm code: ranks uniquely identify the assignment
        code = np.zeros(m, dtype=np.int64)
        for i in range(n):
            code = code * n + rank[:, i]
        for c in np.unique(code):
            sel = code == c
            ranks = rank[np.argmax(sel)]
            slot_to_adv = tuple(int(np.nonzero(ranks == k)[0][0]) + 1
                                for k in range(n))
            val = int(regret[sel].min())
            if slot_to_adv not in out or val < out[slot_to_adv]:
                out[slot_to_adv] = val
    return out


def check_grid_oracle(seed: int = 0, instances: int = 100) -> RowResult:
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    slack = 200  # 0.02 in utility units of 1e-4
    disagreements = []
    for t in range(instances):
        n = 2 + t % 2
        tail = np.sort(rng.integers(0, 101, size=(2, n - 1)), axis=1)[:, ::-1]
        values100 = (100,) + tuple(int(x) for x in tail[0])
        ctrs100 = (100,) + tuple(int(x) for x in tail[1])
        instance = make_instance([Fraction(v, 100) for v in values100],
                                 [Fraction(a, 100) for a in ctrs100])
        oracle = grid_min_regret(values100, ctrs100)
        for perm in itertools.permutations(range(1, n + 1)):
            verdict = feasibility.solve(
                equilibrium.support_system(instance, Assignment(perm)))
            reach = oracle.get(perm)
            if verdict.feasible and (reach is None or reach > slack):
                disagreements.append((t, perm, "exact-feasible, grid missed"))
            if reach == 0 and not verdict.feasible:
                disagreements.append((t, perm, "grid 0-regret, exact-infeasible"))
    observed = ("agree on all instances" if not disagreements
                else f"{len(disagreements)} disagreements, "
                     f"first {disagreements[0]}")
    return _row("C9", "exact solver vs. bid-grid oracle",
                f"both directions agree on {instances} random instances "
                "(step 0.01, slack 0.02)",
                observed, not disagreements, start)


# ---------------------------------------------------------------------------
# check 10: certified implies weakly feasible; rotation prerequisite
# ---------------------------------------------------------------------------


def check_certified_weakly_feasible(seed: int = 0,
                                    budget: int = 10_000) -> RowResult:
    start = time.perf_counter()
    with tempfile.TemporaryDirectory() as tmp:
        log = str(Path(tmp) / "frontier.csv")
        config = SearchConfig(n=3, seed=seed, random_candidates=budget,
                              use_grid=False, log_path=log)
        result = poa_lower_bound(config)
        rows = read_frontier_csv(log)
    certified_rows = [r for r in rows if r["certified"] == "true"]
    weak_failures = 0
    for row in certified_rows:
        n = int(row["n"])
        values = [Fraction(row[f"values_{i + 1}"]) for i in range(n)]
        ctrs = [Fraction(row[f"ctrs_{i + 1}"]) for i in range(n)]
        perm = tuple(int(p) for p in row["permutation"].split("-"))
        instance = make_instance(values, ctrs)
        if not equilibrium.weakly_feasible(instance, Assignment(perm)).ok:
            weak_failures += 1

    # rotation-assignment prerequisite: v2 >= (1 - a_n/a_1) v1
    rotation_checked = 0
    rotation_failures = 0
    for n, budget_n in ((3, 3000), (4, 2000)):
        config = SearchConfig(n=n, target=cyclic_permutation(n), seed=seed,
                              random_candidates=budget_n, use_grid=False,
                              refine_top=0)
        res = poa_lower_bound(config)
        for rec in res.frontier:
            if not rec.certified:
                continue
            rotation_checked += 1
            if rec.values[1] < (1 - rec.ctrs[-1]) * rec.values[0]:
                rotation_failures += 1
    ok = (len(certified_rows) >= budget and weak_failures == 0
          and rotation_checked > 0 and rotation_failures == 0)
    observed = (f"{len(certified_rows)} certified rows, {weak_failures} weak "
                f"failures; rotation prerequisite {rotation_failures} failures "
                f"on {rotation_checked} equilibria")
    return _row("C10", "certified equilibria are weakly feasible",
                f">= {budget} logged equilibria all weakly feasible; rotation "
                "targets satisfy v2 >= (1 - a_n/a_1) v1",
                observed, ok, start)


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


CHECKS = (
    ("C1", check_witness),
    ("C2", check_two_advertisers),
    ("C3", check_three_advertisers),
    ("C4", check_four_advertisers),
    ("C5", check_gap_instance),
    ("C6", check_padding_family),
    ("C7", check_bound_sweep),
    ("C8", check_monotonicity_lemma),
    ("C9", check_grid_oracle),
    ("C10", check_certified_weakly_feasible),
)

TITLES = {
    "C1": "four-advertiser witness equilibrium",
    "C2": "two-advertiser grid search bracket",
    "C3": "three-advertiser seeded search bracket",
    "C4": "four-advertiser full-budget search bracket",
    "C5": "weak-feasibility gap instance",
    "C6": "zero-padding tightness family",
    "C7": "closed-form ratio vs. bound pair sweep",
    "C8": "shifted-ratio monotonicity correction",
    "C9": "exact solver vs. bid-grid oracle",
    "C10": "certified equilibria are weakly feasible",
}


def run_checks(keys=None, seed: int = 0) -> list[RowResult]:
    wanted = set(keys) if keys else None
    out = []
    for key, fn in CHECKS:
        if wanted is not None and key not in wanted:
            continue
        out.append(fn(seed=seed))
    return out


def format_rows(rows) -> str:
    lines = []
    width = max(len(r.title) for r in rows)
    for r in rows:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{r.key:<4} {r.title:<{width}}  {status}  "
                     f"{r.seconds:7.2f}s  {r.observed}")
    total = sum(r.seconds for r in rows)
    passed = sum(r.passed for r in rows)
    lines.append(f"{passed}/{len(rows)} passed in {total:.2f}s")
    return "\n".join(lines)
