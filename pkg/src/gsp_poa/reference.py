"""Built-in reference instances and equilibria.

These anchor the test-suite and seed the lower-bound search:

* a four-advertiser conservative equilibrium with efficiency ratio
  2724/2165 (about 1.2582), extendable to any n >= 5 by padding with
  zero-value advertisers at click-through rate 0.47;
* its three-advertiser truncation (same ratio);
* a two-advertiser equilibrium at ratio exactly 5/4;
* a "gap" instance whose pairwise slot conditions all hold for the
  assignment (2,3,1,4) even though no conservative Nash profile induces
  it, separating the necessary condition from feasibility.
"""

from __future__ import annotations

from fractions import Fraction

from .auction import Assignment, AuctionInstance, BidProfile, make_bids, make_instance
from .errors import InvalidInstanceError

F = Fraction


def reference_equilibrium(n: int) -> tuple[AuctionInstance, BidProfile]:
    """Known conservative equilibrium on n advertisers (exact mode).

    n = 2 gives the ratio-1.25 two-slot market; n >= 3 the 1.2582
    family.  The induced assignment is (2, 1) for n = 2 and
    (2, 3, 1, 4, ..., n) otherwise.
    """
    if n < 1:
        raise InvalidInstanceError("need at least one advertiser")
    if n == 1:
        return (make_instance([1], [1], exact=True), make_bids([0], exact=True))
    if n == 2:
        return (
            make_instance([1, "0.5"], [1, "0.5"], exact=True),
            make_bids([F(1, 4), F(1, 2)]),
        )
    pad = n - 3
    values = [F(1), F(53, 100), F(15, 100)] + [F(0)] * pad
    ctrs = [F(1), F(55, 100), F(47, 100)] + [F(47, 100)] * pad
    bids = [F(0), F(53, 100), F(15, 100)] + [F(0)] * pad
    return (make_instance(values, ctrs), make_bids(bids))


def reference_assignment(n: int) -> Assignment:
    """Assignment induced by :func:`reference_equilibrium`."""
    if n == 1:
        return Assignment((1,))
    if n == 2:
        return Assignment((2, 1))
    return Assignment((2, 3, 1) + tuple(range(4, n + 1)))


#: Exact efficiency ratio of the reference equilibrium for n >= 3.
REFERENCE_RATIO = F(2724, 2165)

#: Exact efficiency ratio of the two-advertiser reference equilibrium.
REFERENCE_RATIO_2 = F(5, 4)


def gap_instance() -> tuple[AuctionInstance, Assignment]:
    """Instance + assignment passing the pairwise conditions with no
    supporting equilibrium (the support system is infeasible)."""
    instance = make_instance(
        ["1", "0.53", "0.25", "0.16"],
        ["1", "0.57", "0.47", "0.19"],
        exact=True,
    )
    return instance, Assignment((2, 3, 1, 4))
