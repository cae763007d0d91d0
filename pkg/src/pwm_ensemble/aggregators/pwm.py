"""Perceptron weighted majority and its extended (delay/async aware) variant."""

from __future__ import annotations

from typing import Sequence

from ..core import (
    ContractViolation,
    InvalidArgument,
    check_label,
    has_abstention,
    zero_weights,
)

SNAPSHOT_VERSION = 1


class MissingPending(KeyError):
    """Raised when a label arrives for a slot with no stored prediction vector."""


def _predict(w: Sequence[int], s: Sequence[int]) -> int:
    return 1 if sum(a * b for a, b in zip(w, s)) >= 0 else -1


def _perceptron_update(w: list[int], s: Sequence[int], y: int, freeze_bias: bool) -> bool:
    """Apply one mistake-driven additive update in place; return True on a mistake."""
    if _predict(w, s) == y:
        return False
    for j, v in enumerate(s):
        w[j] += y * v
    if freeze_bias:
        w[0] = 0
    return True


class Pwm:
    """Integer weights over (virtual learner, learner 1..K), starting at zero.

    ``no_bias`` pins the virtual-learner weight at 0, reproducing the
    ablation in which the separating hyperplane passes through the origin.
    """

    def __init__(self, k: int, no_bias: bool = False):
        if k < 1:
            raise InvalidArgument("K must be >= 1")
        self.k = k
        self.no_bias = no_bias
        self.weights = zero_weights(k)

    def _check(self, s: Sequence[int]) -> None:
        if len(s) != self.k + 1:
            raise InvalidArgument(f"expected a prediction vector of length {self.k + 1}")
        if has_abstention(s):
            raise ContractViolation("abstentions require the extended PWM aggregator")

    def predict(self, s: Sequence[int]) -> int:
        self._check(s)
        return _predict(self.weights, s)

    def update(self, s: Sequence[int], y: int) -> bool:
        self._check(s)
        check_label(y)
        return _perceptron_update(self.weights, s, y, self.no_bias)

    def snapshot(self) -> dict:
        return {"version": SNAPSHOT_VERSION, "kind": "pwm", "no_bias": self.no_bias,
                "weights": list(self.weights)}

    @classmethod
    def restore(cls, snap: dict) -> "Pwm":
        _check_snapshot(snap, "pwm")
        agg = cls(len(snap["weights"]) - 1, no_bias=snap.get("no_bias", False))
        agg.weights = [int(v) for v in snap["weights"]]
        return agg


class ExtendedPwm:
    """Two weight vectors: one for slots where every learner reported, one otherwise.

    Prediction vectors are kept until their label arrives. Labels may arrive
    late and out of order; each update recomputes the prediction with the
    *current* weights. When ``max_delay`` is given, entries older than that
    are dropped because their label can no longer arrive.
    """

    def __init__(self, k: int, max_delay: int | None = None, no_bias: bool = False):
        if k < 1:
            raise InvalidArgument("K must be >= 1")
        if max_delay is not None and max_delay < 0:
            raise InvalidArgument("max_delay must be >= 0")
        self.k = k
        self.max_delay = max_delay
        self.no_bias = no_bias
        self.weights_sync = zero_weights(k)
        self.weights_async = zero_weights(k)
        self.pending: dict[int, tuple[int, ...]] = {}

    def _weights_for(self, s: Sequence[int]) -> list[int]:
        return self.weights_async if has_abstention(s) else self.weights_sync

    def _expire(self, time_slot: int) -> None:
        if self.max_delay is None:
            return
        horizon = time_slot - self.max_delay
        for m in [m for m in self.pending if m < horizon]:
            del self.pending[m]

    def predict(self, time_slot: int, s: Sequence[int]) -> int:
        if len(s) != self.k + 1:
            raise InvalidArgument(f"expected a prediction vector of length {self.k + 1}")
        if time_slot in self.pending:
            raise ContractViolation(f"slot {time_slot} already has a stored prediction vector")
        self._expire(time_slot)
        s = tuple(s)
        self.pending[time_slot] = s
        return _predict(self._weights_for(s), s)

    def observe_label(self, time_slot: int, y: int) -> bool:
        check_label(y)
        try:
            s = self.pending.pop(time_slot)
        except KeyError:
            raise MissingPending(f"no stored prediction vector for slot {time_slot}") from None
        return _perceptron_update(self._weights_for(s), s, y, self.no_bias)

    def snapshot(self) -> dict:
        return {
            "version": SNAPSHOT_VERSION,
            "kind": "epwm",
            "no_bias": self.no_bias,
            "max_delay": self.max_delay,
            "weights_sync": list(self.weights_sync),
            "weights_async": list(self.weights_async),
            "pending": [[m, *s] for m, s in sorted(self.pending.items())],
        }

    @classmethod
    def restore(cls, snap: dict) -> "ExtendedPwm":
        _check_snapshot(snap, "epwm")
        agg = cls(len(snap["weights_sync"]) - 1, max_delay=snap.get("max_delay"),
                  no_bias=snap.get("no_bias", False))
        agg.weights_sync = [int(v) for v in snap["weights_sync"]]
        agg.weights_async = [int(v) for v in snap["weights_async"]]
        agg.pending = {int(row[0]): tuple(int(v) for v in row[1:]) for row in snap["pending"]}
        return agg


def _check_snapshot(snap: dict, kind: str) -> None:
    if snap.get("version") != SNAPSHOT_VERSION:
        raise InvalidArgument(f"unsupported snapshot version {snap.get('version')!r}")
    if snap.get("kind") != kind:
        raise InvalidArgument(f"snapshot kind {snap.get('kind')!r} is not {kind!r}")
