"""Local classifiers that produce each learner's +/-1 local prediction.

Aggregators only ever call ``predict`` and ``learn``; anything with those
two methods can be plugged in.
"""

from __future__ import annotations

import math
from typing import Protocol, Sequence, runtime_checkable

from .core import InvalidArgument, check_label

DEFAULT_LEARNING_RATE = 0.1
DEFAULT_GRADIENT_CLIP = 10.0


@runtime_checkable
class LocalClassifier(Protocol):
    def predict(self, features: Sequence[float]) -> int: ...

    def learn(self, features: Sequence[float], label: int) -> None: ...


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


def _clip(v: float, bound: float) -> float:
    return bound if v > bound else -bound if v < -bound else v


class OnlineLogisticRegression:
    """Logistic regression trained by one SGD step per labeled instance.

    Labels -1/+1 are mapped to targets 0/1 for the cross-entropy loss.
    Each gradient coordinate is clipped to ``[-gradient_clip, gradient_clip]``
    so the coefficients stay finite on unscaled features.
    """

    def __init__(
        self,
        n_features: int,
        learning_rate: float = DEFAULT_LEARNING_RATE,
        gradient_clip: float = DEFAULT_GRADIENT_CLIP,
        fit_intercept: bool = True,
    ):
        if n_features < 1:
            raise InvalidArgument("n_features must be >= 1")
        if learning_rate < 0:
            raise InvalidArgument("learning_rate must be >= 0")
        self.n_features = n_features
        self.learning_rate = float(learning_rate)
        self.gradient_clip = float(gradient_clip)
        self.fit_intercept = fit_intercept
        self.coefficients = [0.0] * n_features
        self.intercept = 0.0

    def _check(self, x: Sequence[float]) -> None:
        if len(x) != self.n_features:
            raise InvalidArgument(f"expected {self.n_features} features, got {len(x)}")

    def decision_function(self, x: Sequence[float]) -> float:
        self._check(x)
        return self.intercept + sum(c * v for c, v in zip(self.coefficients, x))

    def predict_proba(self, x: Sequence[float]) -> float:
        return _sigmoid(self.decision_function(x))

    def predict(self, x: Sequence[float]) -> int:
        return 1 if self.decision_function(x) >= 0 else -1

    def learn(self, x: Sequence[float], y: int) -> None:
        check_label(y)
        residual = (1.0 if y == 1 else 0.0) - self.predict_proba(x)
        if residual == 0.0 or self.learning_rate == 0.0:
            return
        rate, clip = self.learning_rate, self.gradient_clip
        self.coefficients = [
            c + rate * _clip(residual * v, clip) for c, v in zip(self.coefficients, x)
        ]
        if self.fit_intercept:
            self.intercept += rate * _clip(residual, clip)

    def snapshot(self) -> list[float]:
        return [self.intercept, *self.coefficients]

    @classmethod
    def from_snapshot(cls, values: Sequence[float], **kwargs) -> "OnlineLogisticRegression":
        if len(values) < 2:
            raise InvalidArgument("snapshot needs an intercept and at least one coefficient")
        model = cls(len(values) - 1, **kwargs)
        model.intercept = float(values[0])
        model.coefficients = [float(v) for v in values[1:]]
        return model


class ThresholdClassifier:
    """Predict +1 iff ``x[dimension_index] >= threshold``; learning is a no-op."""

    def __init__(self, threshold: float = 0.0, dimension_index: int = 0):
        self.threshold = float(threshold)
        self.dimension_index = dimension_index

    def predict(self, x: Sequence[float]) -> int:
        if not 0 <= self.dimension_index < len(x):
            raise InvalidArgument(
                f"dimension_index {self.dimension_index} out of range for {len(x)} features"
            )
        return 1 if x[self.dimension_index] >= self.threshold else -1

    def learn(self, x: Sequence[float], y: int) -> None:
        pass

    def snapshot(self) -> list[float]:
        return [self.threshold, float(self.dimension_index)]

    @classmethod
    def from_snapshot(cls, values: Sequence[float]) -> "ThresholdClassifier":
        return cls(threshold=values[0], dimension_index=int(values[1]))
