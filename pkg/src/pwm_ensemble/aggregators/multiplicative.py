"""Multiplicative-update weighted majority baselines and average majority.

Weights are stored as logarithms so long runs of penalties cannot underflow
to zero; predictions only depend on weight ratios.
"""

from __future__ import annotations

import math
from typing import Sequence

from ..core import ContractViolation, InvalidArgument, check_label, has_abstention

SNAPSHOT_VERSION = 1


def average_majority(s: Sequence[int]) -> int:
    """Unweighted vote over entries 1..K; abstentions (0) do not vote."""
    return 1 if sum(s[1:]) >= 0 else -1


class WeightedMajority:
    """Halve (by ``beta``) the weight of every dissenting learner after an ensemble mistake."""

    kind = "wm"

    def __init__(self, k: int, beta: float = 0.5):
        if k < 1:
            raise InvalidArgument("K must be >= 1")
        if not 0 < beta <= 1:
            raise InvalidArgument("beta must lie in (0, 1]")
        self.k = k
        self.beta = beta
        self.log_weights = [0.0] * k

    @property
    def weights(self) -> list[float]:
        return [math.exp(v) for v in self.log_weights]

    def _check(self, s: Sequence[int]) -> None:
        if len(s) != self.k + 1:
            raise InvalidArgument(f"expected a prediction vector of length {self.k + 1}")
        if has_abstention(s):
            raise ContractViolation(f"{self.kind} does not support abstaining learners")

    def predict(self, s: Sequence[int]) -> int:
        self._check(s)
        top = max(self.log_weights)
        total = sum(math.exp(lw - top) * v for lw, v in zip(self.log_weights, s[1:]))
        return 1 if total >= 0 else -1

    def _reweight(self, s: Sequence[int], y: int, mistake: bool) -> None:
        if not mistake:
            return
        step = math.log(self.beta)
        self.log_weights = [
            lw + step if v != y else lw for lw, v in zip(self.log_weights, s[1:])
        ]

    def update(self, s: Sequence[int], y: int) -> bool:
        check_label(y)
        mistake = self.predict(s) != y
        self._reweight(s, y, mistake)
        return mistake

    def step(self, s: Sequence[int], y: int) -> int:
        """Predict, then learn from ``y``; returns the prediction made."""
        prediction = self.predict(s)
        self.update(s, y)
        return prediction

    def snapshot(self) -> dict:
        return {"version": SNAPSHOT_VERSION, "kind": self.kind, "params": self._params(),
                "log_weights": list(self.log_weights)}

    def _params(self) -> dict:
        return {"beta": self.beta}

    @classmethod
    def restore(cls, snap: dict):
        if snap.get("version") != SNAPSHOT_VERSION or snap.get("kind") != cls.kind:
            raise InvalidArgument("snapshot does not match this aggregator or version")
        agg = cls(len(snap["log_weights"]), **snap["params"])
        agg.log_weights = [float(v) for v in snap["log_weights"]]
        return agg


class Blum(WeightedMajority):
    """On a mistake, promote agreeing learners by ``gamma`` and demote dissenters by ``beta``;
    dissenters are demoted on correct rounds too."""

    kind = "blum"

    def __init__(self, k: int, beta: float = 0.5, gamma: float = 1.5):
        super().__init__(k, beta)
        if gamma < 1:
            raise InvalidArgument("gamma must be >= 1")
        self.gamma = gamma

    def _params(self) -> dict:
        return {"beta": self.beta, "gamma": self.gamma}

    def _reweight(self, s: Sequence[int], y: int, mistake: bool) -> None:
        down = math.log(self.beta)
        up = math.log(self.gamma) if mistake else 0.0
        self.log_weights = [
            lw + (up if v == y else down) for lw, v in zip(self.log_weights, s[1:])
        ]


class TrackExp(WeightedMajority):
    """Weighted majority whose mistake-driven update is followed by sharing a
    ``share_alpha`` fraction of the total weight equally among all learners.

    Correct rounds leave the weights alone; sharing on them as well would pull
    the weights back to uniform and undo what the mistakes taught.
    """

    kind = "trackexp"

    def __init__(self, k: int, beta: float = 0.5, share_alpha: float = 0.25):
        super().__init__(k, beta)
        if not 0 <= share_alpha <= 1:
            raise InvalidArgument("share_alpha must lie in [0, 1]")
        self.share_alpha = share_alpha

    def _params(self) -> dict:
        return {"beta": self.beta, "share_alpha": self.share_alpha}

    def _reweight(self, s: Sequence[int], y: int, mistake: bool) -> None:
        if not mistake:
            return
        super()._reweight(s, y, mistake)
        a = self.share_alpha
        if a == 0:
            return
        top = max(self.log_weights)
        scaled = [math.exp(lw - top) for lw in self.log_weights]
        pool = a * sum(scaled) / self.k
        self.log_weights = [top + math.log((1 - a) * u + pool) for u in scaled]
