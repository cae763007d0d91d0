"""Aggregation of distributed online learners with perceptron weighted majority."""

from .aggregators import ExtendedPwm, Pwm, optimal_static_oracle
from .bounds import bound_b, bound_b1, bound_b2
from .core import ContractViolation, InvalidArgument, sign

__version__ = "0.1.0"

__all__ = [
    "ContractViolation",
    "ExtendedPwm",
    "InvalidArgument",
    "Pwm",
    "bound_b",
    "bound_b1",
    "bound_b2",
    "optimal_static_oracle",
    "sign",
]
