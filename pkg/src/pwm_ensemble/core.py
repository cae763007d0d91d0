"""Shared domain types and the prediction/weight algebra.

Labels and local predictions are plain ints in {-1, +1}. A prediction
vector is a tuple whose entry 0 is the constant +1 of the virtual learner;
an abstaining learner is encoded as 0 so the inner product needs no special
case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

ABSTAIN = 0
LABELS = (-1, 1)

PredictionVector = tuple[int, ...]
WeightVector = tuple[int, ...]


class InvalidArgument(ValueError):
    """Raised when an operation receives an out-of-domain argument."""


class ContractViolation(RuntimeError):
    """Raised when a caller breaks a documented precondition."""


def sign(v: float) -> int:
    """Return +1 for v >= 0 and -1 otherwise (so sign(0) == +1)."""
    if not math.isfinite(v):
        raise InvalidArgument(f"sign() needs a finite value, got {v!r}")
    return 1 if v >= 0 else -1


def check_label(y: int) -> int:
    if y not in LABELS:
        raise InvalidArgument(f"labels are -1 or +1, got {y!r}")
    return y


def inner_product(w: Sequence[int], s: Sequence[int]) -> int:
    if len(w) != len(s):
        raise InvalidArgument(f"length mismatch: weights {len(w)} vs predictions {len(s)}")
    return sum(a * b for a, b in zip(w, s))


def prediction_vector(local: Iterable[int], allow_abstain: bool = False) -> PredictionVector:
    """Build (1, s_1, ..., s_K) from local predictions, validating entries."""
    entries = [1]
    for v in local:
        if v == ABSTAIN:
            if not allow_abstain:
                raise InvalidArgument("abstention is only allowed on the asynchronous path")
        elif v not in LABELS:
            raise InvalidArgument(f"local predictions are -1, +1 or abstain (0), got {v!r}")
        entries.append(int(v))
    return tuple(entries)


def has_abstention(s: Sequence[int]) -> bool:
    return ABSTAIN in s[1:]


def zero_weights(k: int) -> list[int]:
    return [0] * (k + 1)


@dataclass(frozen=True)
class LabeledInstance:
    """One learner's feature vector plus the shared label at a time slot."""

    time_slot: int
    features: tuple[float, ...]
    label: int

    def __post_init__(self) -> None:
        if self.time_slot < 1:
            raise InvalidArgument(f"time slots start at 1, got {self.time_slot}")
        check_label(self.label)
