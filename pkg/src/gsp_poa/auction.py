"""Core generalized second-price (GSP) auction model.

Advertisers and slots are numbered 1..n.  Per-click values and slot
click-through rates are given in descending order and normalized so the
top entry of each is 1.  Slots go to advertisers by descending bid with
ties broken by ascending advertiser index, and the occupant of slot k
pays, per click, the bid of the occupant of slot k+1 (the bottom slot
pays nothing).

Bidders are conservative: no bid may exceed the bidder's own value.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    ConservativenessError,
    DegenerateInstanceError,
    InvalidInstanceError,
)
from .numeric import all_exact, exact_seq


def _check_descending_unit(name: str, xs) -> None:
    if xs[0] != 1:
        raise InvalidInstanceError(
            f"{name} must start at 1 (got {xs[0]}); pass normalize=True to rescale"
        )
    for i in range(len(xs) - 1):
        if xs[i] < xs[i + 1]:
            raise InvalidInstanceError(
                f"{name} must be non-increasing (position {i + 1} rises)"
            )
    if xs[-1] < 0:
        raise InvalidInstanceError(f"{name} must be non-negative")


@dataclass(frozen=True)
class AuctionInstance:
    """A market: descending normalized values and click-through rates."""

    values: tuple
    ctrs: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "ctrs", tuple(self.ctrs))
        if len(self.values) != len(self.ctrs):
            raise InvalidInstanceError(
                f"{len(self.values)} values but {len(self.ctrs)} ctrs"
            )
        if not self.values:
            raise InvalidInstanceError("empty instance")
        _check_descending_unit("values", self.values)
        _check_descending_unit("ctrs", self.ctrs)

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def is_exact(self) -> bool:
        return all_exact(self.values, self.ctrs)

    def to_json_dict(self) -> dict:
        from .numeric import num_to_json

        return {
            "values": [num_to_json(v) for v in self.values],
            "ctrs": [num_to_json(a) for a in self.ctrs],
        }


def make_instance(values, ctrs, *, normalize: bool = False,
                  exact: bool = False) -> AuctionInstance:
    """Build an instance, optionally rescaling and/or going rational.

    With ``normalize`` the entries are divided through by the leading
    (maximal) entry, which must be positive.  With ``exact`` every entry
    is first converted to an exact rational via its decimal form.
    """
    values = exact_seq(values) if exact else tuple(values)
    ctrs = exact_seq(ctrs) if exact else tuple(ctrs)
    if normalize:
        scaled = []
        for name, xs in (("values", values), ("ctrs", ctrs)):
            if not xs or xs[0] <= 0:
                raise InvalidInstanceError(f"cannot normalize {name}: no positive lead")
            scaled.append(tuple(x / xs[0] for x in xs))
        values, ctrs = scaled
    return AuctionInstance(values, ctrs)


@dataclass(frozen=True)
class BidProfile:
    """One bid per advertiser, in advertiser order."""

    bids: tuple

    def __post_init__(self):
        object.__setattr__(self, "bids", tuple(self.bids))

    @property
    def n(self) -> int:
        return len(self.bids)

    def check_against(self, instance: AuctionInstance) -> None:
        """Enforce 0 <= b_i <= v_i; raises on the first offender."""
        if self.n != instance.n:
            raise InvalidInstanceError(
                f"{self.n} bids for an instance with {instance.n} advertisers"
            )
        for i, (b, v) in enumerate(zip(self.bids, instance.values), start=1):
            if b < 0 or b > v:
                raise ConservativenessError(i, b, v)

    def to_json_dict(self) -> dict:
        from .numeric import num_to_json

        return {"bids": [num_to_json(b) for b in self.bids]}


def make_bids(bids, *, exact: bool = False) -> BidProfile:
    return BidProfile(exact_seq(bids) if exact else tuple(bids))


@dataclass(frozen=True)
class Assignment:
    """Slot-indexed permutation: entry k is the advertiser in slot k."""

    slot_to_adv: tuple

    def __post_init__(self):
        object.__setattr__(self, "slot_to_adv", tuple(int(a) for a in self.slot_to_adv))
        n = len(self.slot_to_adv)
        if sorted(self.slot_to_adv) != list(range(1, n + 1)):
            raise InvalidInstanceError(
                f"assignment {self.slot_to_adv} is not a permutation of 1..{n}"
            )

    @property
    def n(self) -> int:
        return len(self.slot_to_adv)

    def slot_of(self, advertiser: int) -> int:
        """Slot occupied by a (1-based) advertiser."""
        return self.slot_to_adv.index(advertiser) + 1

    def inverse(self) -> "Assignment":
        """Swap the advertiser->slot / slot->advertiser reading."""
        inv = [0] * self.n
        for slot, adv in enumerate(self.slot_to_adv, start=1):
            inv[adv - 1] = slot
        return Assignment(tuple(inv))

    def is_identity(self) -> bool:
        return self.slot_to_adv == tuple(range(1, self.n + 1))


@dataclass(frozen=True)
class Outcome:
    """Result of settling a bid profile.

    ``payments`` is per slot (per click), ``utilities`` per advertiser;
    ``welfare`` is the click-weighted value of the realized assignment.
    """

    assignment: Assignment
    payments: tuple
    utilities: tuple
    welfare: object


def allocate(instance: AuctionInstance, bids: BidProfile) -> Assignment:
    """Rank advertisers by descending bid, ties by ascending index."""
    bids.check_against(instance)
    order = sorted(range(instance.n), key=lambda i: -bids.bids[i])
    return Assignment(tuple(i + 1 for i in order))


def settle(instance: AuctionInstance, bids: BidProfile) -> Outcome:
    """Allocate, charge next-bid prices, and compute utilities."""
    assignment = allocate(instance, bids)
    n = instance.n
    zero = Fraction(0) if instance.is_exact and all_exact(bids.bids) else 0.0
    payments = []
    utilities = [zero] * n
    welfare = zero
    for slot in range(1, n + 1):
        adv = assignment.slot_to_adv[slot - 1]
        pay = bids.bids[assignment.slot_to_adv[slot] - 1] if slot < n else zero
        payments.append(pay)
        utilities[adv - 1] = instance.ctrs[slot - 1] * (instance.values[adv - 1] - pay)
        welfare += instance.ctrs[slot - 1] * instance.values[adv - 1]
    return Outcome(assignment, tuple(payments), tuple(utilities), welfare)


def optimal_welfare(instance: AuctionInstance):
    """Welfare of the sorted pairing (slot k gets advertiser k)."""
    return sum(a * v for a, v in zip(instance.ctrs, instance.values))


def assigned_welfare(instance: AuctionInstance, assignment: Assignment):
    if assignment.n != instance.n:
        raise InvalidInstanceError("assignment size does not match instance")
    return sum(
        instance.ctrs[slot] * instance.values[adv - 1]
        for slot, adv in enumerate(assignment.slot_to_adv)
    )


def efficiency_ratio(instance: AuctionInstance, assignment: Assignment):
    """Optimal welfare over assigned welfare (>= 1 by rearrangement)."""
    denom = assigned_welfare(instance, assignment)
    if denom == 0:
        raise DegenerateInstanceError(
            f"assignment {assignment.slot_to_adv} has zero welfare"
        )
    return optimal_welfare(instance) / denom
