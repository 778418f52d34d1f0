"""Closed-form ratio apparatus for the rotation-by-one assignment.

For k slots with descending click-through rates alpha_1..alpha_k, the
worst-case efficiency ratio of the rotation assignment (2, 3, ..., k, 1)
with every value pinned to its equilibrium minimum collapses to the
closed form

    f(alpha) = (S - alpha_k * R) / (S - (k-1) * alpha_k),

with S the CTR sum and R the sum of consecutive ratios alpha_{i+1}/alpha_i.
`decay_mean` is R/(k-1); the two candidate caps are
bound_a = ((k-1)/(k-2)) * decay_mean and bound_b = k - (k-1) * decay_mean,
whose minimum never exceeds k/(k-1).

The sweep helpers evaluate these on random descending CTR vectors.
A separate helper checks the monotonicity of a shifted ratio
(x+av)/(y+bv) in v, which genuinely requires the side condition
x*b >= a*y; see `shifted_ratio_monotone`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InvalidInstanceError
from .numeric import num_to_json


def _check_ctrs(ctrs, minimum: int) -> None:
    k = len(ctrs)
    if k < minimum:
        raise InvalidInstanceError(f"need at least {minimum} ctrs, got {k}")
    for i in range(k - 1):
        if ctrs[i] < ctrs[i + 1]:
            raise InvalidInstanceError("ctrs must be non-increasing")
    if ctrs[-1] < 0:
        raise InvalidInstanceError("ctrs must be non-negative")


def decay_mean(ctrs):
    """Mean of the k-1 consecutive CTR ratios alpha_{i+1}/alpha_i.

    A zero CTR anywhere before the last position leaves some ratio
    undefined and raises; a trailing zero contributes a final ratio of 0
    provided alpha_{k-1} > 0.
    """
    _check_ctrs(ctrs, 2)
    k = len(ctrs)
    for i in range(k - 1):
        if ctrs[i] == 0:
            raise InvalidInstanceError(
                f"zero ctr at position {i + 1} (before last) leaves ratio undefined"
            )
    total = sum(ctrs[i + 1] / ctrs[i] for i in range(k - 1))
    return total / (k - 1)


def rotation_ratio(ctrs):
    """The closed form f(alpha) above; exact for rational inputs."""
    _check_ctrs(ctrs, 3)
    k = len(ctrs)
    ratios_sum = decay_mean(ctrs) * (k - 1)
    total = sum(ctrs)
    denom = total - (k - 1) * ctrs[-1]
    if denom == 0:
        raise InvalidInstanceError("degenerate ctrs: denominator vanishes")
    return (total - ctrs[-1] * ratios_sum) / denom


@dataclass(frozen=True)
class BoundsPair:
    k: int
    decay: object
    bound_a: object
    bound_b: object

    @property
    def min_bound(self):
        return min(self.bound_a, self.bound_b)


def poa_bounds(k: int, decay) -> BoundsPair:
    """The two candidate caps at a given mean decay; min <= k/(k-1)."""
    if k < 3:
        raise InvalidInstanceError(f"need k >= 3, got {k}")
    if not 0 < decay <= 1:
        raise InvalidInstanceError(f"mean decay must be in (0, 1], got {decay}")
    one = Fraction(1) if isinstance(decay, (Fraction, int)) else 1.0
    bound_a = (one * (k - 1) / (k - 2)) * decay
    bound_b = k - (k - 1) * decay
    return BoundsPair(k, decay, bound_a, bound_b)


@dataclass(frozen=True)
class BoundsRecord:
    """One sweep sample: CTR vector, closed-form ratio, and the caps."""

    k: int
    ctrs: tuple
    decay: object
    ratio: object
    bound_a: object
    bound_b: object

    @property
    def min_bound(self):
        return min(self.bound_a, self.bound_b)

    @property
    def within_min_bound(self) -> bool:
        return self.ratio <= self.min_bound + 1e-12

    def to_row(self) -> dict:
        return {
            "k": self.k,
            "ctrs": "|".join(str(num_to_json(a)) for a in self.ctrs),
            "decay": float(self.decay),
            "ratio": float(self.ratio),
            "bound_a": float(self.bound_a),
            "bound_b": float(self.bound_b),
            "min_bound": float(self.min_bound),
            "within_min_bound": self.within_min_bound,
        }


def record_for(ctrs) -> BoundsRecord:
    d = decay_mean(ctrs)
    pair = poa_bounds(len(ctrs), d)
    return BoundsRecord(len(ctrs), tuple(ctrs), d, rotation_ratio(ctrs),
                        pair.bound_a, pair.bound_b)


def sample_ctrs(k: int, count: int, seed: int = 0) -> np.ndarray:
    """Random descending positive CTR vectors, top entry 1 (float64)."""
    rng = np.random.default_rng(seed)
    draws = rng.integers(1, 10**4 + 1, size=(count, k))
    draws.sort(axis=1)
    draws = draws[:, ::-1].astype(float)
    return draws / draws[:, :1]


def bounds_sweep(k_values, samples: int, seed: int = 0) -> list[BoundsRecord]:
    """Evaluate ratio and caps on random CTR vectors for each k.

    Float evaluation; the per-record flag `within_min_bound` uses the
    1e-12 slack.  Seeded per k so each block is reproducible alone.
    """
    records = []
    for k in k_values:
        for ctrs in sample_ctrs(k, samples, seed=seed + k):
            records.append(record_for(tuple(ctrs)))
    return records


# ---------------------------------------------------------------------------
# shifted-ratio monotonicity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MonotonicityCheck:
    inequality_holds: bool   # (x+av)/(y+bv) <= (x+av')/(y+bv')
    condition_holds: bool    # x*b >= a*y  (x/y >= a/b cross-multiplied)
    lhs: object
    rhs: object


def shifted_ratio_monotone(x, y, a, b, v, v_prime) -> MonotonicityCheck:
    """Does lowering v to v' (v >= v', a <= b) raise (x+av)/(y+bv)?

    The implication "yes" needs the side condition x*b >= a*y: the
    difference of cross products is (v - v')*(a*y - x*b).  Without it,
    (x, y, a, b, v, v') = (0, 1, 1, 1, 1, 0) gives 1/2 on the left but 0
    on the right.
    """
    if y <= 0:
        raise InvalidInstanceError("y must be positive")
    if a > b:
        raise InvalidInstanceError("need a <= b")
    if v < v_prime:
        raise InvalidInstanceError("need v >= v_prime")
    d1, d2 = y + b * v, y + b * v_prime
    if d1 <= 0 or d2 <= 0:
        raise InvalidInstanceError("denominators must stay positive")
    lhs = (x + a * v) / d1
    rhs = (x + a * v_prime) / d2
    return MonotonicityCheck(
        inequality_holds=bool(lhs <= rhs),
        condition_holds=bool(x * b >= a * y),
        lhs=lhs,
        rhs=rhs,
    )
