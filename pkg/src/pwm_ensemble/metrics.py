"""Mistake accounting for a run: per learner, system-wide, per classifier and per concept."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

from .aggregators.oracle import PatternCounts, StaticOracleResult, count_patterns, estimate_static_optimum
from .core import InvalidArgument


def classifier_error_rates(trace: Sequence[tuple[Sequence[int], int]]) -> tuple[list[float], float, int]:
    """Per-classifier mistake rates P_i, the best rate P* and how many classifiers attain it."""
    if not trace:
        raise InvalidArgument("the trace is empty")
    k = len(trace[0][0]) - 1
    errors = [0] * k
    for s, y in trace:
        for i in range(k):
            if s[i + 1] != y:
                errors[i] += 1
    n = len(trace)
    rates = [e / n for e in errors]
    best = min(errors)
    return rates, best / n, errors.count(best)


@dataclass
class RunMetrics:
    aggregator: str
    k: int
    n: int
    mistakes: list[int]
    observed_errors: list[int]
    labels_observed: list[int]
    classifier_mistakes: list[int]
    p_opt: float
    oracle_exact: bool
    oracle_weights: tuple[int, ...]
    synchronized_slots: int
    per_concept: dict[int, dict] = field(default_factory=dict)

    @property
    def p_learners(self) -> list[float]:
        return [m / self.n for m in self.mistakes]

    @property
    def p_system(self) -> float:
        return sum(self.mistakes) / (self.n * self.k)

    @property
    def p_classifiers(self) -> list[float]:
        return [m / self.n for m in self.classifier_mistakes]

    @property
    def p_star(self) -> float:
        return min(self.classifier_mistakes) / self.n

    @property
    def v_star(self) -> int:
        return self.classifier_mistakes.count(min(self.classifier_mistakes))

    @property
    def alpha(self) -> float:
        return (self.n - self.synchronized_slots) / self.n

    def to_record(self) -> dict:
        """Flat, JSON-friendly view including the derived probabilities."""
        rec = asdict(self)
        rec["oracle_weights"] = list(self.oracle_weights)
        rec["per_concept"] = {str(c): v for c, v in self.per_concept.items()}
        rec.update(
            p_learners=self.p_learners,
            p_system=self.p_system,
            p_classifiers=self.p_classifiers,
            p_star=self.p_star,
            v_star=self.v_star,
            alpha=self.alpha,
        )
        return rec


class MetricsAccumulator:
    """Fold over slots; per-aggregator mistakes plus the aggregator-independent trace."""

    def __init__(self, k: int, names: Sequence[str]):
        self.k = k
        self.names = list(names)
        self.n = 0
        self.synchronized = 0
        self.trace: list[tuple[tuple[int, ...], int]] = []
        self.mistakes = {a: [0] * k for a in names}
        self.observed_errors = {a: [0] * k for a in names}
        self.labels_observed = [0] * k
        self.concept_slots: dict[int, int] = {}
        self.concept_mistakes = {a: {} for a in names}

    def record_slot(self, full_s: tuple[int, ...], label: int, concept: int,
                    all_arrived: bool, predictions: dict[str, list[int]]) -> None:
        self.n += 1
        self.synchronized += all_arrived
        self.trace.append((full_s, label))
        self.concept_slots[concept] = self.concept_slots.get(concept, 0) + 1
        for a, preds in predictions.items():
            row = self.mistakes[a]
            seg = self.concept_mistakes[a].setdefault(concept, [0] * self.k)
            for i, p in enumerate(preds):
                if p != label:
                    row[i] += 1
                    seg[i] += 1

    def record_label(self, learner: int, recognized: dict[str, bool]) -> None:
        self.labels_observed[learner] += 1
        for a, hit in recognized.items():
            self.observed_errors[a][learner] += hit

    def finalize(self, with_oracle: bool = True) -> dict[str, RunMetrics]:
        if self.n == 0:
            raise InvalidArgument("cannot finalize an empty run")
        classifier_mistakes = [0] * self.k
        for s, y in self.trace:
            for i in range(self.k):
                classifier_mistakes[i] += s[i + 1] != y
        if with_oracle:
            oracle = estimate_static_optimum(count_patterns(self.trace))
        else:
            oracle = StaticOracleResult((0,) * (self.k + 1), 0, False, self.n)
        out = {}
        for a in self.names:
            per_concept = {
                c: {"slots": self.concept_slots[c], "mistakes": list(self.concept_mistakes[a].get(c, [0] * self.k))}
                for c in sorted(self.concept_slots)
                if self.concept_slots[c] > 0
            }
            out[a] = RunMetrics(
                aggregator=a,
                k=self.k,
                n=self.n,
                mistakes=list(self.mistakes[a]),
                observed_errors=list(self.observed_errors[a]),
                labels_observed=list(self.labels_observed),
                classifier_mistakes=list(classifier_mistakes),
                p_opt=oracle.p_opt if with_oracle else float("nan"),
                oracle_exact=oracle.exact,
                oracle_weights=oracle.optimal_weights,
                synchronized_slots=self.synchronized,
                per_concept=per_concept,
            )
        return out

    def pattern_counts(self) -> PatternCounts:
        return count_patterns(self.trace)
