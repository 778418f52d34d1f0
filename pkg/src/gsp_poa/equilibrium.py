"""Equilibrium analysis for the GSP auction.

Deviations are slot-targeted: an advertiser taking a higher slot j pays
the bid of the current slot-j occupant, while staying put or dropping to
a lower slot j pays the bid of the current slot-(j+1) occupant.  A
deviation that would need a strict overbid of an opponent bidding
exactly the deviator's value is scored at its supremum utility and
flagged as such, so the Nash conditions are weak linear inequalities
throughout.

`support_system` turns "some conservative profile induces assignment
pi and is a Nash equilibrium" into an explicit linear system over the
bids, solved exactly by :mod:`gsp_poa.feasibility`.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .auction import (
    Assignment,
    AuctionInstance,
    BidProfile,
    allocate,
    settle,
)
from .errors import InvalidInstanceError
from .numeric import (
    default_epsilon,
    exact_number,
    fmt,
    num_from_json,
    num_to_json,
)

# ---------------------------------------------------------------------------
# deviation utilities and Nash verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeviationOption:
    """Utility of one advertiser taking one target slot."""

    slot: int
    utility: object
    attainable: bool


@dataclass(frozen=True)
class DeviationReport:
    advertiser: int
    current_slot: int
    current_utility: object
    best_slot: int
    best_utility: object
    regret: object
    attainable: bool
    options: tuple


def _deviation_options(instance, bids, assignment, advertiser):
    """Per-slot deviation utilities for one advertiser.

    Moving above the current slot j pays the sitting slot-j bid; staying
    or moving below slot j pays the sitting slot-(j+1) bid (0 below the
    bottom).  Attainability of an upward move fails only when it would
    require outbidding an opponent whose bid equals the deviator's value
    and whose index wins the tie.
    """
    n = instance.n
    v = instance.values[advertiser - 1]
    s = assignment.slot_of(advertiser)
    zero = bids.bids[0] * 0 if bids.bids else 0
    options = []
    for j in range(1, n + 1):
        if j < s:
            occupant = assignment.slot_to_adv[j - 1]
            price = bids.bids[occupant - 1]
            if price < v or (price == v and advertiser < occupant):
                attainable = True
            else:
                attainable = False
        else:
            below = assignment.slot_to_adv[j] if j < n else None
            price = bids.bids[below - 1] if below is not None else zero
            attainable = True
        options.append(DeviationOption(j, instance.ctrs[j - 1] * (v - price), attainable))
    return s, options


def best_deviation(instance: AuctionInstance, bids: BidProfile,
                   advertiser: int) -> DeviationReport:
    """Best slot-targeted deviation; ties prefer staying, then top slots."""
    if not 1 <= advertiser <= instance.n:
        raise InvalidInstanceError(f"no advertiser {advertiser}")
    assignment = allocate(instance, bids)
    s, options = _deviation_options(instance, bids, assignment, advertiser)
    current = options[s - 1].utility
    best = options[s - 1]
    for opt in options:
        if opt.utility > best.utility:
            best = opt
    if best.utility == current:
        best = options[s - 1]
    regret = best.utility - current
    if regret < 0:
        regret = best.utility * 0
    return DeviationReport(
        advertiser=advertiser,
        current_slot=s,
        current_utility=current,
        best_slot=best.slot,
        best_utility=best.utility,
        regret=regret,
        attainable=best.attainable,
        options=tuple(options),
    )


@dataclass(frozen=True)
class NashReport:
    epsilon: object
    is_nash: bool
    max_regret: object
    rows: tuple

    def to_json_dict(self) -> dict:
        return {
            "epsilon": num_to_json(self.epsilon),
            "is_nash": self.is_nash,
            "max_regret": num_to_json(self.max_regret),
            "advertisers": [
                {
                    "advertiser": r.advertiser,
                    "slot": r.current_slot,
                    "utility": num_to_json(r.current_utility),
                    "best_slot": r.best_slot,
                    "best_utility": num_to_json(r.best_utility),
                    "regret": num_to_json(r.regret),
                    "attainable": r.attainable,
                }
                for r in self.rows
            ],
        }

    def pretty(self) -> str:
        lines = [
            f"{'adv':>3} {'slot':>4} {'utility':>12} {'best slot':>9} "
            f"{'best utility':>12} {'regret':>10}"
        ]
        for r in self.rows:
            lines.append(
                f"{r.advertiser:>3} {r.current_slot:>4} {fmt(r.current_utility):>12} "
                f"{r.best_slot:>9} {fmt(r.best_utility):>12} {fmt(r.regret):>10}"
            )
        verdict = "Nash equilibrium" if self.is_nash else "not an equilibrium"
        lines.append(f"max regret {fmt(self.max_regret)} at epsilon {fmt(self.epsilon)}: {verdict}")
        return "\n".join(lines)


def verify_nash(instance: AuctionInstance, bids: BidProfile,
                epsilon=None) -> NashReport:
    """Check every advertiser's slot deviations against ``epsilon``.

    Exact-rational inputs default to epsilon 0; float inputs to 1e-9.
    """
    if epsilon is None:
        epsilon = default_epsilon(instance.values, instance.ctrs, bids.bids)
    rows = tuple(
        best_deviation(instance, bids, adv) for adv in range(1, instance.n + 1)
    )
    max_regret = max(r.regret for r in rows)
    return NashReport(
        epsilon=epsilon,
        is_nash=bool(max_regret <= epsilon),
        max_regret=max_regret,
        rows=rows,
    )


def max_regret_exact(values: tuple, ctrs: tuple, bids: tuple,
                     slot_to_adv: tuple) -> Fraction:
    """Fast path: maximum deviation regret, all tuples exact, 0-based free.

    ``slot_to_adv`` is 1-based as elsewhere.  Used by the search loops,
    which certify thousands of candidates and cannot afford the report
    dataclasses.
    """
    n = len(values)
    worst = Fraction(0)
    for s in range(1, n + 1):
        adv = slot_to_adv[s - 1]
        v = values[adv - 1]
        pay = bids[slot_to_adv[s] - 1] if s < n else Fraction(0)
        current = ctrs[s - 1] * (v - pay)
        for j in range(1, n + 1):
            if j == s:
                continue
            if j < s:
                price = bids[slot_to_adv[j - 1] - 1]
            else:
                price = bids[slot_to_adv[j] - 1] if j < n else Fraction(0)
            gain = ctrs[j - 1] * (v - price) - current
            if gain > worst:
                worst = gain
    return worst


# ---------------------------------------------------------------------------
# pairwise weak feasibility
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeakFeasibilityReport:
    """Pairwise slot conditions alpha_j*v_pi(j) >= alpha_i*(v_pi(j)-v_pi(i)).

    A conservative Nash profile inducing the assignment forces every
    pair (i < j) to satisfy the condition; the converse fails.
    ``slacks`` maps (i, j) to condition slack (negative = violated).
    """

    ok: bool
    slacks: dict
    min_slack: object
    tight_pairs: tuple


def weakly_feasible(instance: AuctionInstance, assignment: Assignment,
                    epsilon=None) -> WeakFeasibilityReport:
    if assignment.n != instance.n:
        raise InvalidInstanceError("assignment size does not match instance")
    if epsilon is None:
        epsilon = default_epsilon(instance.values, instance.ctrs)
    slacks = {}
    tight = []
    ok = True
    min_slack = None
    for i in range(1, instance.n + 1):
        for j in range(i + 1, instance.n + 1):
            vi = instance.values[assignment.slot_to_adv[i - 1] - 1]
            vj = instance.values[assignment.slot_to_adv[j - 1] - 1]
            slack = instance.ctrs[j - 1] * vj - instance.ctrs[i - 1] * (vj - vi)
            slacks[(i, j)] = slack
            if min_slack is None or slack < min_slack:
                min_slack = slack
            if slack < -epsilon:
                ok = False
            elif -epsilon <= slack <= epsilon:
                tight.append((i, j))
    return WeakFeasibilityReport(ok, slacks, min_slack, tuple(tight))


# ---------------------------------------------------------------------------
# linear support system
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Inequality:
    """coeffs . x  REL  rhs with REL one of <=, <, >=, >."""

    coeffs: tuple
    rel: str
    rhs: object
    provenance: str = ""

    def __post_init__(self):
        if self.rel not in ("<=", "<", ">=", ">"):
            raise InvalidInstanceError(f"unknown relation {self.rel!r}")
        object.__setattr__(self, "coeffs", tuple(self.coeffs))


@dataclass(frozen=True)
class LinearSystem:
    variables: tuple
    rows: tuple

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "rows", tuple(self.rows))
        for row in self.rows:
            if len(row.coeffs) != len(self.variables):
                raise InvalidInstanceError("row width does not match variables")

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    def to_json_dict(self) -> dict:
        return {
            "variables": list(self.variables),
            "inequalities": [
                {
                    "coeffs": [num_to_json(c) for c in row.coeffs],
                    "rel": row.rel,
                    "rhs": num_to_json(row.rhs),
                    "provenance": row.provenance,
                }
                for row in self.rows
            ],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "LinearSystem":
        try:
            variables = tuple(str(v) for v in data["variables"])
            rows = tuple(
                Inequality(
                    coeffs=tuple(num_from_json(c) for c in row["coeffs"]),
                    rel=row["rel"],
                    rhs=num_from_json(row["rhs"]),
                    provenance=str(row.get("provenance", "")),
                )
                for row in data["inequalities"]
            )
        except (KeyError, TypeError) as exc:
            raise InvalidInstanceError(f"bad linear system: {exc}") from exc
        return cls(variables, rows)

    def pretty(self) -> str:
        lines = []
        for row in self.rows:
            terms = []
            for c, name in zip(row.coeffs, self.variables):
                if c == 0:
                    continue
                sign = "-" if c < 0 else ("+" if terms else "")
                mag = abs(c)
                coef = "" if mag == 1 else f"{mag}*"
                terms.append(f"{sign} {coef}{name}".strip())
            lhs = " ".join(terms) if terms else "0"
            tag = f"   [{row.provenance}]" if row.provenance else ""
            lines.append(f"{lhs} {row.rel} {row.rhs}{tag}")
        return "\n".join(lines)


def support_system(instance: AuctionInstance, assignment: Assignment) -> LinearSystem:
    """Linear system over bids whose solutions are exactly the
    conservative Nash profiles inducing ``assignment``.

    Rows: conservativeness box bounds, the bid ordering that realizes
    the assignment under index tie-breaking (strict where a tie would
    flip adjacent occupants), and the no-profitable-move inequalities in
    both directions.  All entries are exact rationals.
    """
    if assignment.n != instance.n:
        raise InvalidInstanceError("assignment size does not match instance")
    n = instance.n
    values = tuple(exact_number(v) for v in instance.values)
    ctrs = tuple(exact_number(a) for a in instance.ctrs)
    pi = assignment.slot_to_adv
    variables = tuple(f"b{i}" for i in range(1, n + 1))
    rows = []

    def unit(idx, coef):
        c = [Fraction(0)] * n
        c[idx] = Fraction(coef)
        return c

    for i in range(n):
        rows.append(Inequality(unit(i, 1), ">=", Fraction(0),
                               f"bid of adv {i + 1} non-negative"))
        rows.append(Inequality(unit(i, 1), "<=", values[i],
                               f"adv {i + 1} conservative (b <= v)"))

    for k in range(1, n):
        upper, lower = pi[k - 1], pi[k]
        c = [Fraction(0)] * n
        c[upper - 1] += 1
        c[lower - 1] -= 1
        rel = ">" if upper > lower else ">="
        rows.append(Inequality(c, rel, Fraction(0),
                               f"slot {k} bid beats slot {k + 1} "
                               f"(advs {upper} vs {lower}, index tie-break)"))

    # payment of slot i's occupant, as a coefficient vector over the bids
    def payment_vec(slot):
        c = [Fraction(0)] * n
        if slot < n:
            c[pi[slot] - 1] += 1
        return c

    for i in range(1, n + 1):
        adv = pi[i - 1]
        v = values[adv - 1]
        stay = payment_vec(i)
        for j in range(1, n + 1):
            if j == i:
                continue
            # ctrs[i-1]*(v - pay_i) >= ctrs[j-1]*(v - price_j)
            if j < i:
                price = [Fraction(0)] * n
                price[pi[j - 1] - 1] += 1
                direction = "up"
            else:
                price = payment_vec(j)
                direction = "down"
            c = [ctrs[j - 1] * price[t] - ctrs[i - 1] * stay[t] for t in range(n)]
            rhs = (ctrs[j - 1] - ctrs[i - 1]) * v
            rows.append(Inequality(c, ">=", rhs,
                                   f"adv {adv} at slot {i}: no gain moving "
                                   f"{direction} to slot {j}"))
    return LinearSystem(variables, tuple(rows))


# ---------------------------------------------------------------------------
# best-response dynamics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DynamicsResult:
    status: str  # "converged" | "max_rounds"
    rounds: int
    trajectory: tuple  # bid tuples, trajectory[0] is the start profile
    report: NashReport
    moves: tuple = field(default=())  # (round, advertiser, old, new)


def _candidate_bids(instance, bids, assignment, advertiser):
    """Midpoint-targeting candidate set for one advertiser's update.

    For each target slot the midpoint of the bid interval that wins it,
    plus interval endpoints, 0, the value cap and the current bid.  The
    realized utility of each candidate is found by resettling, which
    keeps tie-break corner cases honest.
    """
    n = instance.n
    v = instance.values[advertiser - 1]
    s = assignment.slot_of(advertiser)
    cands = [bids.bids[advertiser - 1]]
    half = Fraction(1, 2) if isinstance(v, (Fraction, int)) else 0.5
    for j in range(1, n + 1):
        if j == s:
            continue
        if j < s:
            lo = bids.bids[assignment.slot_to_adv[j - 1] - 1]
            hi = min(v, bids.bids[assignment.slot_to_adv[j - 2] - 1]) if j > 1 else v
        else:
            hi = bids.bids[assignment.slot_to_adv[j - 1] - 1]
            lo = bids.bids[assignment.slot_to_adv[j] - 1] if j < n else hi * 0
        if lo > hi:
            continue
        mid = (lo + hi) * half
        for x in (mid, lo, hi):
            if 0 <= x <= v:
                cands.append(x)
    if v >= 0:
        cands.append(v * 0)
        cands.append(v)
    seen, out = set(), []
    for x in cands:
        if x not in seen:
            seen.add(x)
            out.append(x)
    return out


def best_response_dynamics(instance: AuctionInstance, bids: BidProfile,
                           max_rounds: int = 100, order: str = "round_robin",
                           seed: int = 0, epsilon=None) -> DynamicsResult:
    """Iterate single-advertiser best responses until a fixed point.

    ``order`` is "round_robin" or "random" (per-round shuffle from
    ``seed``).  The terminal profile is re-verified; non-convergence
    within ``max_rounds`` is reported as a status, not an error.
    """
    if order not in ("round_robin", "random"):
        raise InvalidInstanceError(f"unknown update order {order!r}")
    bids.check_against(instance)
    rng = random.Random(seed)
    current = list(bids.bids)
    trajectory = [tuple(current)]
    moves = []
    rounds_done = 0
    for rnd in range(1, max_rounds + 1):
        schedule = list(range(1, instance.n + 1))
        if order == "random":
            rng.shuffle(schedule)
        changed = False
        for adv in schedule:
            profile = BidProfile(tuple(current))
            assignment = allocate(instance, profile)
            best_bid = current[adv - 1]
            best_util = settle(instance, profile).utilities[adv - 1]
            for x in _candidate_bids(instance, profile, assignment, adv):
                trial = list(current)
                trial[adv - 1] = x
                util = settle(instance, BidProfile(tuple(trial))).utilities[adv - 1]
                if util > best_util:
                    best_util, best_bid = util, x
            if best_bid != current[adv - 1]:
                moves.append((rnd, adv, current[adv - 1], best_bid))
                current[adv - 1] = best_bid
                changed = True
        rounds_done = rnd
        trajectory.append(tuple(current))
        if not changed:
            rounds_done = rnd - 1
            trajectory.pop()
            break
    else:
        final = BidProfile(tuple(current))
        return DynamicsResult("max_rounds", rounds_done, tuple(trajectory),
                              verify_nash(instance, final, epsilon), tuple(moves))
    final = BidProfile(tuple(current))
    return DynamicsResult("converged", rounds_done, tuple(trajectory),
                          verify_nash(instance, final, epsilon), tuple(moves))
