"""Exception types shared across the package.

The command line maps these onto its exit codes: schema and shape
problems exit 2, conservativeness violations exit 3, analytic negatives
(not an equilibrium, infeasible system, degenerate ratio) exit 1.
"""

from __future__ import annotations


class GspError(Exception):
    """Base class for all package-specific errors."""


class InvalidInstanceError(GspError):
    """Malformed instance, bid profile, or assignment."""


class ConservativenessError(GspError):
    """A bid lies outside [0, value] for its advertiser."""

    def __init__(self, advertiser: int, bid, value):
        self.advertiser = advertiser
        self.bid = bid
        self.value = value
        super().__init__(
            f"bid {bid} of advertiser {advertiser} outside [0, {value}]"
        )


class DegenerateInstanceError(GspError):
    """The assigned welfare is zero, so the efficiency ratio is undefined."""


class DimensionCapError(GspError):
    """The linear system has more variables than the eliminator accepts."""
