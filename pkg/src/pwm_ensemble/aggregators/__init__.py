from .learners import AloneLearner, AverageMajorityLearner, Delayed, Learner, Projected
from .multiplicative import Blum, TrackExp, WeightedMajority, average_majority
from .oracle import (
    BudgetExceeded,
    PatternCounts,
    StaticOracleResult,
    count_patterns,
    estimate_static_optimum,
    optimal_static_oracle,
)
from .pwm import ExtendedPwm, MissingPending, Pwm

__all__ = [
    "AloneLearner",
    "AverageMajorityLearner",
    "Blum",
    "BudgetExceeded",
    "Delayed",
    "ExtendedPwm",
    "Learner",
    "MissingPending",
    "PatternCounts",
    "Projected",
    "Pwm",
    "StaticOracleResult",
    "TrackExp",
    "WeightedMajority",
    "average_majority",
    "count_patterns",
    "estimate_static_optimum",
    "optimal_static_oracle",
]
