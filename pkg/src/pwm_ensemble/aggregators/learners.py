"""Learner-side wrappers giving every aggregation rule the same two calls.

The environment drives each learner with ``predict(time_slot, s)`` and,
whenever a label is released to it, ``observe_label(time_slot, y)``.
"""

from __future__ import annotations

from typing import Protocol, Sequence

from ..core import check_label
from .multiplicative import average_majority
from .pwm import ExtendedPwm, MissingPending


class Learner(Protocol):
    def predict(self, time_slot: int, s: Sequence[int]) -> int: ...

    def observe_label(self, time_slot: int, y: int) -> bool: ...


class Delayed:
    """Keep prediction vectors until their labels arrive, then update the wrapped rule.

    The update is evaluated with the rule's current weights, as for
    :class:`ExtendedPwm`, so late and out-of-order labels are handled the same way.
    """

    def __init__(self, rule, max_delay: int | None = None):
        self.rule = rule
        self.max_delay = max_delay
        self.pending: dict[int, tuple[int, ...]] = {}

    def predict(self, time_slot: int, s: Sequence[int]) -> int:
        if self.max_delay is not None:
            horizon = time_slot - self.max_delay
            for m in [m for m in self.pending if m < horizon]:
                del self.pending[m]
        prediction = self.rule.predict(s)
        self.pending[time_slot] = tuple(s)
        return prediction

    def observe_label(self, time_slot: int, y: int) -> bool:
        try:
            s = self.pending.pop(time_slot)
        except KeyError:
            raise MissingPending(f"no stored prediction vector for slot {time_slot}") from None
        return self.rule.update(s, y)

    @property
    def weights(self):
        return self.rule.weights


class AverageMajorityLearner:
    def predict(self, time_slot: int, s: Sequence[int]) -> int:
        return average_majority(s)

    def observe_label(self, time_slot: int, y: int) -> bool:
        check_label(y)
        return False


class AloneLearner:
    """Output the learner's own local prediction; +1 when it has no instance."""

    def __init__(self, index: int):
        self.index = index

    def predict(self, time_slot: int, s: Sequence[int]) -> int:
        own = s[self.index]
        return own if own != 0 else 1

    def observe_label(self, time_slot: int, y: int) -> bool:
        check_label(y)
        return False


class Projected:
    """Feed a learner only the first ``m`` local predictions (plus the virtual entry)."""

    def __init__(self, inner, m: int, k: int):
        if not 1 <= m <= k:
            raise ValueError(f"cannot project {k} learners onto the first {m}")
        self.inner = inner
        self.m = m
        self.k = k

    def predict(self, time_slot: int, s: Sequence[int]) -> int:
        return self.inner.predict(time_slot, s[: self.m + 1])

    def observe_label(self, time_slot: int, y: int) -> bool:
        return self.inner.observe_label(time_slot, y)


__all__ = ["Learner", "Delayed", "AverageMajorityLearner", "AloneLearner", "Projected"]
