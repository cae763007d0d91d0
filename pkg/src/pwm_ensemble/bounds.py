"""Closed-form upper bounds on the PWM mistake probability.

``p_opt`` is the mistake rate of the best static aggregation vector,
``p_star`` that of the best local classifier and ``v_star`` the number of
classifiers attaining it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .core import InvalidArgument


class NotApplicable(ArithmeticError):
    """The missing-label bound is undefined at the requested confidence."""


def _check_common(k: int, n: int) -> None:
    if k < 1:
        raise InvalidArgument(f"K must be >= 1, got {k}")
    if n < 1:
        raise InvalidArgument(f"N must be >= 1, got {n}")


def _check_probability(name: str, p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise InvalidArgument(f"{name} must lie in [0, 1], got {p}")


def bound_b1(k: int, n: int, p_opt: float) -> float:
    _check_common(k, n)
    _check_probability("p_opt", p_opt)
    return 2 * k * p_opt + k * (k + 1) / n


def bound_b2(k: int, n: int, p_star: float, v_star: int) -> float:
    _check_common(k, n)
    _check_probability("p_star", p_star)
    if not 1 <= v_star <= k:
        raise InvalidArgument(f"v_star must lie in [1, K], got {v_star}")
    c = (k + 1) / (2 * n * v_star)
    return 2 * p_star + c + math.sqrt(c * c + 2 * (k + 1) * p_star / (n * v_star))


def bound_b(k: int, n: int, p_opt: float, p_star: float, v_star: int) -> float:
    return min(bound_b1(k, n, p_opt), bound_b2(k, n, p_star, v_star), 1.0)


def bound_delayed(base: float, max_delays: Sequence[int], n: int, k: int) -> float:
    _check_common(k, n)
    if len(max_delays) != k:
        raise InvalidArgument(f"need one maximum delay per learner ({k}), got {len(max_delays)}")
    if any(d < 0 for d in max_delays):
        raise InvalidArgument("maximum delays must be >= 0")
    return base + sum(max_delays) / (n * k)


def lambda_term(epsilon: float, z: float) -> float:
    """Hoeffding confidence radius sqrt(ln(1/epsilon) / (2 z))."""
    if not 0.0 < epsilon < 1.0:
        raise InvalidArgument(f"epsilon must lie in (0, 1), got {epsilon}")
    if z <= 0:
        raise InvalidArgument("lambda is undefined for z <= 0")
    return math.sqrt(math.log(1.0 / epsilon) / (2.0 * z))


def bound_missing(base: float, mu: float, epsilon: float, observed_errors: int) -> float:
    """Bound holding with probability >= 1 - epsilon when labels are seen with probability mu."""
    if not 0.0 < mu <= 1.0:
        raise InvalidArgument(f"mu must lie in (0, 1], got {mu}")
    if observed_errors <= 0:
        raise NotApplicable("no observed errors: the confidence term is undefined")
    lam = lambda_term(epsilon, observed_errors)
    if lam >= mu:
        raise NotApplicable(f"lambda={lam:.4f} >= mu={mu}: bound not applicable at this confidence")
    return base / (mu - lam)


def bound_async(base: float, alpha: float) -> float:
    _check_probability("alpha", alpha)
    return min(base + alpha, 1.0)


@dataclass(frozen=True)
class BoundInputs:
    k: int
    n: int
    p_opt: float
    p_star: float
    v_star: int
    max_delays: tuple[int, ...] = ()
    mu: float = 1.0
    epsilon: float = 0.05
    observed_errors: int | None = None
    alpha: float = 0.0


def all_bounds(inputs: BoundInputs) -> dict[str, float | None]:
    """Every applicable bound; inapplicable ones map to None."""
    b1 = bound_b1(inputs.k, inputs.n, inputs.p_opt)
    b2 = bound_b2(inputs.k, inputs.n, inputs.p_star, inputs.v_star)
    b = min(b1, b2, 1.0)
    out: dict[str, float | None] = {"b1": b1, "b2": b2, "b": b}
    out["delayed"] = (
        bound_delayed(b, inputs.max_delays, inputs.n, inputs.k) if inputs.max_delays else None
    )
    out["async"] = bound_async(b, inputs.alpha)
    missing = None
    if inputs.observed_errors is not None:
        try:
            missing = bound_missing(b, inputs.mu, inputs.epsilon, inputs.observed_errors)
        except NotApplicable:
            missing = None
    out["missing"] = missing
    return out
