"""Certified lower-bound search for the pure price of anarchy.

Candidates are (instance, assignment) pairs.  A candidate counts only
when certified: an exact conservative Nash profile inducing the
assignment is produced (either the sorted-assignment construction or a
witness from the support-system eliminator) and re-verified at
tolerance 0 in rational arithmetic.  Infeasible candidates are
discarded, never penalized.

The pipeline is deterministic for a fixed config: seeds, a structured
grid, sorted-uniform random instances (snapped to a 1e-4 rational
lattice), then coordinate pattern search around the best certified
candidates with a shrinking step.
"""

from __future__ import annotations

import csv
import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import feasibility
from .auction import (
    Assignment,
    AuctionInstance,
    allocate,
    efficiency_ratio,
)
from .equilibrium import max_regret_exact, support_system, verify_nash
from .errors import InvalidInstanceError
from .numeric import exact_number
from .reference import reference_equilibrium

#: Lattice denominator for random draws; keeps certification exact.
LATTICE = 10**4

#: Default structured-grid step per instance size.
GRID_STEPS = {2: Fraction(1, 100), 3: Fraction(1, 10), 4: Fraction(1, 5)}
COARSE_STEP = Fraction(1, 4)

#: Above this size, full permutation enumeration is off the table and the
#: open search only screens the identity and rotation assignments.
FULL_ENUMERATION_LIMIT = 6


def cyclic_permutation(n: int) -> Assignment:
    """The rotation assignment (2, 3, ..., n, 1); identity for n = 1."""
    if n < 1:
        raise InvalidInstanceError("need n >= 1")
    if n == 1:
        return Assignment((1,))
    return Assignment(tuple(range(2, n + 1)) + (1,))


# ---------------------------------------------------------------------------
# config and records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SearchConfig:
    n: int
    target: Assignment | None = None
    seed: int = 0
    random_candidates: int = 10_000
    grid_step: Fraction | None = None
    use_grid: bool = True
    use_seeds: bool = True
    refine_top: int = 3
    refine_sweeps: int = 200
    refine_step: Fraction = Fraction(1, 50)
    refine_min_step: Fraction = Fraction(1, 20_000)
    workers: int | None = None
    log_path: str | None = None

    def resolved_workers(self) -> int:
        if self.workers is not None:
            return max(1, self.workers)
        return max(1, int(os.environ.get("GSP_POA_WORKERS", "1")))


@dataclass(frozen=True)
class CandidateRecord:
    candidate_id: str
    n: int
    assignment: Assignment
    ratio: float
    ratio_exact: Fraction | None
    certified: bool
    values: tuple
    ctrs: tuple
    bids: tuple | None

    def to_row(self) -> dict:
        row = {
            "candidate_id": self.candidate_id,
            "n": self.n,
            "permutation": "-".join(str(a) for a in self.assignment.slot_to_adv),
            "ratio": f"{self.ratio:.12g}",
            "certified": "true" if self.certified else "false",
        }
        for label, xs in (("values", self.values), ("ctrs", self.ctrs),
                          ("bids", self.bids or ())):
            for i in range(self.n):
                row[f"{label}_{i + 1}"] = str(xs[i]) if i < len(xs) else ""
        return row


def frontier_columns(n: int) -> list[str]:
    cols = ["candidate_id", "n", "permutation", "ratio", "certified"]
    for label in ("values", "ctrs", "bids"):
        cols.extend(f"{label}_{i + 1}" for i in range(n))
    return cols


def write_frontier_csv(records, n: int, path: str) -> None:
    """Dump candidate records as CSV with exact p/q number strings."""
    with open(path, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=frontier_columns(n))
        writer.writeheader()
        for rec in records:
            writer.writerow(rec.to_row())


def read_frontier_csv(path: str) -> list[dict]:
    """Read a frontier CSV, skipping any leading ``#`` manifest lines."""
    with open(path, newline="") as handle:
        lines = [ln for ln in handle if not ln.startswith("#")]
    return [row for row in csv.DictReader(lines) if row.get("candidate_id")]


@dataclass(frozen=True)
class SearchResult:
    config: SearchConfig
    best: CandidateRecord | None
    evaluated: int
    certified: int
    max_certified_ratio: float
    frontier: tuple = field(default=())

    @property
    def best_ratio(self) -> float:
        return self.best.ratio if self.best else 1.0

    def to_json_dict(self) -> dict:
        out = {
            "n": self.config.n,
            "seed": self.config.seed,
            "evaluated": self.evaluated,
            "certified": self.certified,
            "max_certified_ratio": self.max_certified_ratio,
            "best_ratio": self.best_ratio,
        }
        if self.best:
            out["best"] = {
                "candidate_id": self.best.candidate_id,
                "permutation": list(self.best.assignment.slot_to_adv),
                "ratio_exact": str(self.best.ratio_exact),
                "values": [str(v) for v in self.best.values],
                "ctrs": [str(a) for a in self.best.ctrs],
                "bids": [str(b) for b in self.best.bids] if self.best.bids else None,
            }
        return out


# ---------------------------------------------------------------------------
# exact certification helpers
# ---------------------------------------------------------------------------


def sorted_equilibrium_bids(values: tuple, ctrs: tuple) -> tuple:
    """Conservative equilibrium bids inducing the sorted assignment.

    Built bottom-up so each occupant is envy-free at the next slot's
    price; slots with zero click-through rate price at 0.  Exact for
    rational inputs.
    """
    n = len(values)
    if n == 1:
        return (Fraction(0),)
    prices = [Fraction(0)] * n  # prices[k] = per-click price of slot k+1
    for k in range(n - 2, -1, -1):
        if ctrs[k] == 0:
            prices[k] = Fraction(0)
            continue
        ratio = ctrs[k + 1] / ctrs[k]
        prices[k] = values[k + 1] - ratio * (values[k + 1] - prices[k + 1])
    return (values[0],) + tuple(prices[:-1])


def _certify(values: tuple, ctrs: tuple, slot_to_adv: tuple,
             bids: tuple) -> bool:
    """Exact check: conservative, induces the assignment, zero regret."""
    n = len(values)
    for b, v in zip(bids, values):
        if b < 0 or b > v:
            return False
    ranked = sorted(range(1, n + 1), key=lambda i: (-bids[i - 1], i))
    if tuple(ranked) != tuple(slot_to_adv):
        return False
    return max_regret_exact(values, ctrs, bids, slot_to_adv) == 0


def certify_assignment(values: tuple, ctrs: tuple,
                       assignment: Assignment) -> tuple | None:
    """Exact equilibrium bids inducing ``assignment``, or None.

    Tries the direct construction for the identity assignment first,
    then falls back to the support-system eliminator.
    """
    if assignment.is_identity():
        bids = sorted_equilibrium_bids(values, ctrs)
        if _certify(values, ctrs, assignment.slot_to_adv, bids):
            return bids
    instance = AuctionInstance(values, ctrs)
    result = feasibility.solve(support_system(instance, assignment))
    if not result.feasible:
        return None
    if not _certify(values, ctrs, assignment.slot_to_adv, result.witness):
        raise AssertionError(
            "support-system witness failed exact verification; "
            "the system builder and verifier disagree"
        )
    return result.witness


def _exact_ratio(values, ctrs, slot_to_adv) -> Fraction:
    opt = sum(a * v for a, v in zip(ctrs, values))
    assigned = sum(ctrs[k] * values[slot_to_adv[k] - 1] for k in range(len(values)))
    if assigned == 0:
        return Fraction(0)  # degenerate; caller discards
    return opt / assigned


# ---------------------------------------------------------------------------
# candidate generation
# ---------------------------------------------------------------------------


def _random_lattice_instances(n: int, count: int, seed: int) -> np.ndarray:
    """(count, 2, n) int lattice numerators, descending, lead positive."""
    rng = np.random.default_rng(seed)
    draws = rng.integers(1, LATTICE + 1, size=(count, 2, n))
    draws.sort(axis=2)
    return draws[:, :, ::-1]


def _grid_instances(n: int, step: Fraction):
    """Descending tail tuples over the step lattice, lead pinned to 1."""
    m = int(1 / step)
    levels = list(range(m, -1, -1))
    tails = list(itertools.combinations_with_replacement(levels, n - 1))
    for vt in tails:
        for at in tails:
            values = (Fraction(1),) + tuple(Fraction(x, m) for x in vt)
            ctrs = (Fraction(1),) + tuple(Fraction(x, m) for x in at)
            yield values, ctrs


def candidate_assignments(n: int) -> list[tuple]:
    """Assignments the open search screens: all n! up to the cap."""
    if n <= FULL_ENUMERATION_LIMIT:
        return [tuple(p) for p in itertools.permutations(range(1, n + 1))]
    perms = {tuple(range(1, n + 1)), cyclic_permutation(n).slot_to_adv}
    return sorted(perms)


def _weakly_feasible_float(values: np.ndarray, ctrs: np.ndarray,
                           perm0: tuple) -> np.ndarray:
    """Vectorized lenient screen of the pairwise slot conditions."""
    ok = np.ones(values.shape[0], dtype=bool)
    for i in range(len(perm0)):
        for j in range(i + 1, len(perm0)):
            vi = values[:, perm0[i]]
            vj = values[:, perm0[j]]
            ok &= ctrs[:, j] * vj - ctrs[:, i] * (vj - vi) >= -1e-9
    return ok


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def _evaluate_block(args):
    """Evaluate a block of lattice instances; pure, parallel-safe.

    Returns (rows, certified_count, best_tuple) where rows hold only the
    noteworthy records (certifications above the screen threshold and
    infeasible attempts) plus one identity-fallback row per instance.
    """
    (numerators, ids, n, target, perms, threshold_num, threshold_den) = args
    threshold = Fraction(threshold_num, threshold_den)
    thr_float = threshold_num / threshold_den - 1e-9

    vals_f = numerators[:, 0, :] / numerators[:, 0, :1]
    ctrs_f = numerators[:, 1, :] / numerators[:, 1, :1]

    ratios = {}
    weak = {}
    opt = np.einsum("ij,ij->i", vals_f, ctrs_f)
    for perm in perms:
        perm0 = tuple(a - 1 for a in perm)
        assigned = np.einsum("ij,ij->i", ctrs_f, vals_f[:, perm0])
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios[perm] = np.where(assigned > 0, opt / np.maximum(assigned, 1e-300),
                                    0.0)
        weak[perm] = _weakly_feasible_float(vals_f, ctrs_f, perm0)

    rows = []
    certified = 0
    best = None  # (ratio_exact, candidate_id, record)
    for b in range(numerators.shape[0]):
        values = tuple(Fraction(int(x), int(numerators[b, 0, 0])) for x in numerators[b, 0])
        ctrs = tuple(Fraction(int(x), int(numerators[b, 1, 0])) for x in numerators[b, 1])
        record = None
        if target is not None:
            perm = target
            if weak[perm][b]:
                bids = certify_assignment(values, ctrs, Assignment(perm))
                if bids is not None:
                    r = _exact_ratio(values, ctrs, perm)
                    record = CandidateRecord(ids[b], n, Assignment(perm), float(r),
                                             r, True, values, ctrs, tuple(bids))
                else:
                    rows.append(CandidateRecord(ids[b], n, Assignment(perm),
                                                float(ratios[perm][b]), None, False,
                                                values, ctrs, None))
        else:
            order = sorted(perms, key=lambda p: -ratios[p][b])
            for perm in order:
                if ratios[perm][b] <= thr_float:
                    break
                if not weak[perm][b]:
                    continue
                r = _exact_ratio(values, ctrs, perm)
                if r <= threshold:
                    continue
                bids = certify_assignment(values, ctrs, Assignment(perm))
                if bids is None:
                    rows.append(CandidateRecord(f"{ids[b]}p", n, Assignment(perm),
                                                float(r), None, False,
                                                values, ctrs, None))
                    continue
                record = CandidateRecord(ids[b], n, Assignment(perm), float(r),
                                         r, True, values, ctrs, tuple(bids))
                break
            if record is None:
                identity = tuple(range(1, n + 1))
                bids = sorted_equilibrium_bids(values, ctrs)
                if _certify(values, ctrs, identity, bids):
                    record = CandidateRecord(ids[b], n, Assignment(identity), 1.0,
                                             Fraction(1), True, values, ctrs,
                                             tuple(bids))
                else:  # degenerate construction; decide by the eliminator
                    bids = certify_assignment(values, ctrs, Assignment(identity))
                    if bids is not None:
                        record = CandidateRecord(ids[b], n, Assignment(identity),
                                                 1.0, Fraction(1), True, values,
                                                 ctrs, tuple(bids))
        if record is not None:
            certified += 1
            rows.append(record)
            if record.ratio_exact is not None:
                kept = _better(best[2] if best else None, record)
                best = (kept.ratio_exact, kept.candidate_id, kept)
    return rows, certified, best


def _serial(rec: CandidateRecord) -> tuple:
    return tuple(str(x) for x in rec.values + rec.ctrs + rec.assignment.slot_to_adv)


def _better(a: CandidateRecord | None, b: CandidateRecord | None):
    """Max by exact ratio; ties go to the lexicographically smaller instance."""
    if a is None:
        return b
    if b is None:
        return a
    if b.ratio_exact != a.ratio_exact:
        return b if b.ratio_exact > a.ratio_exact else a
    return b if _serial(b) < _serial(a) else a


# ---------------------------------------------------------------------------
# refinement
# ---------------------------------------------------------------------------


def refine_candidate(record: CandidateRecord, sweeps: int,
                     step: Fraction, min_step: Fraction,
                     log: list | None = None) -> CandidateRecord:
    """Coordinate pattern search around a certified candidate.

    Perturbs tail values and ctrs one at a time (lead entries stay 1),
    keeps moves that re-certify with a strictly better exact ratio, and
    halves the step after a sweep with no improvement.
    """
    best = record
    perm = record.assignment
    counter = 0
    for _ in range(sweeps):
        if step < min_step:
            break
        improved = False
        for kind in (0, 1):
            xs = best.values if kind == 0 else best.ctrs
            for pos in range(1, len(xs)):
                for sign in (1, -1):
                    trial = list(xs)
                    trial[pos] = trial[pos] + sign * step
                    upper = trial[pos - 1]
                    lower = trial[pos + 1] if pos + 1 < len(trial) else None
                    if trial[pos] < 0 or trial[pos] > upper:
                        continue
                    if lower is not None and trial[pos] < lower:
                        continue
                    values = tuple(trial) if kind == 0 else best.values
                    ctrs = best.ctrs if kind == 0 else tuple(trial)
                    r = _exact_ratio(values, ctrs, perm.slot_to_adv)
                    if r <= best.ratio_exact:
                        continue
                    bids = certify_assignment(values, ctrs, perm)
                    counter += 1
                    cid = f"{record.candidate_id}r{counter}"
                    if bids is None:
                        if log is not None:
                            log.append(CandidateRecord(cid, best.n, perm, float(r),
                                                       None, False, values, ctrs,
                                                       None))
                        continue
                    best = CandidateRecord(cid, best.n, perm, float(r), r, True,
                                           values, ctrs, tuple(bids))
                    if log is not None:
                        log.append(best)
                    improved = True
        if not improved:
            step = step / 2
    return best


# ---------------------------------------------------------------------------
# top-level search
# ---------------------------------------------------------------------------


def _seed_records(config: SearchConfig) -> list[CandidateRecord]:
    if not config.use_seeds:
        return []
    records = []
    instance, bids = reference_equilibrium(config.n)
    assignment = allocate(instance, bids)
    if config.target is not None and assignment.slot_to_adv != config.target.slot_to_adv:
        return []
    report = verify_nash(instance, bids, epsilon=0)
    if report.is_nash:
        r = _exact_ratio(instance.values, instance.ctrs, assignment.slot_to_adv)
        records.append(CandidateRecord("seed-0", config.n, assignment, float(r), r,
                                       True, instance.values, instance.ctrs,
                                       bids.bids))
    return records


def poa_lower_bound(config: SearchConfig) -> SearchResult:
    """Run the certified lower-bound search described in the module doc.

    Keeps the full candidate log in ``frontier`` (and mirrors it to
    ``config.log_path`` as CSV when set, manifest comment included by
    the caller).  Identity fallbacks keep every sampled instance
    represented among the certified candidates in open mode.
    """
    n = config.n
    if n < 1:
        raise InvalidInstanceError("need n >= 1")
    target = config.target.slot_to_adv if config.target is not None else None
    if target is not None and len(target) != n:
        raise InvalidInstanceError("target assignment size must match n")

    frontier: list[CandidateRecord] = []
    best: CandidateRecord | None = None
    certified = 0
    evaluated = 0

    seeds = _seed_records(config)
    for rec in seeds:
        frontier.append(rec)
        evaluated += 1
        certified += 1
        best = _better(best, rec)

    threshold = best.ratio_exact if best is not None else Fraction(1)

    perms = candidate_assignments(n) if target is None else [target]

    instances = []
    ids = []
    if config.use_grid and n >= 2:
        step = config.grid_step or GRID_STEPS.get(n, COARSE_STEP)
        for g, (values, ctrs) in enumerate(_grid_instances(n, step)):
            instances.append((values, ctrs))
            ids.append(f"grid-{g}")
    lattice = _random_lattice_instances(n, config.random_candidates, config.seed)

    # exact-lattice numerator array for the grid candidates, to share the
    # block evaluator: scale grid fractions onto a common denominator
    blocks = []
    if instances:
        m = int(1 / (config.grid_step or GRID_STEPS.get(n, COARSE_STEP)))
        arr = np.empty((len(instances), 2, n), dtype=np.int64)
        for i, (values, ctrs) in enumerate(instances):
            arr[i, 0] = [int(v * m) for v in values]
            arr[i, 1] = [max(int(a * m), 0) for a in ctrs]
        arr[:, :, 0] = np.maximum(arr[:, :, 0], 1)
        blocks.append((arr, ids))
    if config.random_candidates > 0:
        blocks.append((lattice, [f"rand-{i}" for i in range(len(lattice))]))

    workers = config.resolved_workers()
    chunks = []
    for arr, block_ids in blocks:
        size = max(1, (len(block_ids) + workers - 1) // workers) if workers > 1 else len(block_ids)
        for lo in range(0, len(block_ids), size):
            chunks.append((arr[lo:lo + size], block_ids[lo:lo + size], n,
                           target, perms, threshold.numerator,
                           threshold.denominator))

    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_evaluate_block, chunks))
    else:
        results = [_evaluate_block(c) for c in chunks]

    evaluated += sum(len(block_ids) for _, block_ids in blocks)
    for rows, cert, block_best in results:
        frontier.extend(rows)
        certified += cert
        if block_best is not None:
            best = _better(best, block_best[2])

    # refinement around the strongest certified candidates
    ranked = sorted(
        (r for r in frontier if r.certified and r.ratio_exact is not None),
        key=lambda r: (-r.ratio_exact, r.candidate_id),
    )
    seen_keys = set()
    to_refine = []
    for rec in ranked:
        key = (rec.assignment.slot_to_adv, rec.values, rec.ctrs)
        if key in seen_keys:
            continue
        seen_keys.add(key)
        to_refine.append(rec)
        if len(to_refine) >= config.refine_top:
            break
    for rec in to_refine:
        refined = refine_candidate(rec, config.refine_sweeps, config.refine_step,
                                   config.refine_min_step, log=frontier)
        best = _better(best, refined)

    if best is None:
        # no certified candidate at all (target mode): identity fallback
        instance, bids = reference_equilibrium(n)
        identity = Assignment(tuple(range(1, n + 1)))
        ibids = sorted_equilibrium_bids(instance.values, instance.ctrs)
        best = CandidateRecord("fallback-identity", n, identity, 1.0, Fraction(1),
                               _certify(instance.values, instance.ctrs,
                                        identity.slot_to_adv, ibids),
                               instance.values, instance.ctrs, tuple(ibids))
        frontier.append(best)

    max_certified = max((r.ratio for r in frontier if r.certified), default=1.0)
    result = SearchResult(config, best, evaluated, certified, max_certified,
                          tuple(frontier))
    if config.log_path:
        write_frontier_csv(result.frontier, n, config.log_path)
    return result


# ---------------------------------------------------------------------------
# permutation enumeration and monotonicity probe
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PermutationSetReport:
    """Which assignments of an instance admit supporting equilibria."""

    n: int
    feasible: tuple          # Assignments
    witnesses: dict          # slot_to_adv tuple -> bid tuple
    infeasible: tuple        # Assignments


def enumerate_ne_permutations(instance: AuctionInstance,
                              max_n: int = 8) -> PermutationSetReport:
    """Decide every assignment's support system; exponential in n."""
    if instance.n > max_n:
        raise InvalidInstanceError(
            f"refusing to enumerate {instance.n}! assignments (cap {max_n})"
        )
    values = tuple(exact_number(v) for v in instance.values)
    ctrs = tuple(exact_number(a) for a in instance.ctrs)
    feasible, infeasible = [], []
    witnesses = {}
    for perm in itertools.permutations(range(1, instance.n + 1)):
        assignment = Assignment(perm)
        bids = certify_assignment(values, ctrs, assignment)
        if bids is not None:
            feasible.append(assignment)
            witnesses[perm] = tuple(bids)
        else:
            infeasible.append(assignment)
    return PermutationSetReport(instance.n, tuple(feasible), witnesses,
                                tuple(infeasible))


def monotonicity_probe(instance: AuctionInstance, assignment: Assignment,
                       coordinate: int, h) -> object:
    """Finite-difference slope of the efficiency ratio in one value.

    Central difference when both perturbations stay descending within
    [0, 1]; one-sided at a boundary; error when neither side is
    admissible.  Perturbing the lead value renormalizes the vector.
    """
    if not 1 <= coordinate <= instance.n:
        raise InvalidInstanceError(f"no value coordinate {coordinate}")
    if h <= 0:
        raise InvalidInstanceError("step must be positive")
    if instance.is_exact:
        h = exact_number(h)

    def ratio_at(delta):
        values = list(instance.values)
        values[coordinate - 1] = values[coordinate - 1] + delta
        pos = coordinate - 1
        if values[pos] < 0 or values[pos] > 1:
            return None
        if pos > 0 and values[pos] > values[pos - 1]:
            return None
        if pos + 1 < len(values) and values[pos] < values[pos + 1]:
            return None
        if pos == 0:
            if values[0] <= 0:
                return None
            values = [v / values[0] for v in values]
        return efficiency_ratio(AuctionInstance(tuple(values), instance.ctrs),
                                assignment)

    up, down = ratio_at(h), ratio_at(-h)
    if up is not None and down is not None:
        return (up - down) / (2 * h)
    base = efficiency_ratio(instance, assignment)
    if up is not None:
        return (up - base) / h
    if down is not None:
        return (base - down) / h
    raise InvalidInstanceError(
        f"no admissible perturbation of value {coordinate} at step {h}"
    )
