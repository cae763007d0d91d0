"""Distributed-environment simulator: label delays, missing labels and asynchronous arrivals.

:func:`schedule` turns a source into a list of :class:`StreamEvent` records
that fix, for every slot, which learners observe an instance and when (if
ever) each learner receives the label. :func:`simulate` then plays the
events against per-learner local classifiers and aggregation rules.

Within slot n every learner first forms its local prediction, the
prediction vector is broadcast, every learner outputs its final prediction,
and only then are the labels released at slot n delivered.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .classifiers import LocalClassifier
from .core import InvalidArgument
from .metrics import MetricsAccumulator, RunMetrics
from .streams import Source, make_rng

TRACE_FORMAT = "pwm-ensemble-trace"
TRACE_VERSION = 1


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class DelayModel:
    """Per-learner label delays, uniform on {0..max_delay} or always equal to max_delay."""

    max_delays: tuple[int, ...]
    kind: str = "uniform"

    def __post_init__(self) -> None:
        if any(d < 0 for d in self.max_delays):
            raise InvalidArgument("maximum delays must be >= 0")
        if self.kind not in ("uniform", "fixed"):
            raise InvalidArgument("delay kind must be 'uniform' or 'fixed'")

    @classmethod
    def uniform(cls, k: int, max_delay: int) -> "DelayModel":
        return cls((max_delay,) * k)

    @classmethod
    def none(cls, k: int) -> "DelayModel":
        return cls((0,) * k)

    def sample(self, rng: np.random.Generator) -> list[int]:
        if self.kind == "fixed" or not any(self.max_delays):
            return list(self.max_delays)
        return [int(v) for v in rng.integers(0, np.asarray(self.max_delays) + 1)]


@dataclass(frozen=True)
class LabelObservationModel:
    """Each learner independently sees each label with probability ``mu``."""

    mu: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 < self.mu <= 1.0:
            raise InvalidArgument("mu must lie in (0, 1]")

    def sample(self, rng: np.random.Generator, k: int) -> list[bool]:
        if self.mu == 1.0:
            return [True] * k
        return (rng.random(k) < self.mu).tolist()


@dataclass(frozen=True)
class ArrivalModel:
    """Per-learner probability of observing an instance in a slot."""

    probabilities: tuple[float, ...]

    def __post_init__(self) -> None:
        if any(not 0.0 < p <= 1.0 for p in self.probabilities):
            raise InvalidArgument("arrival probabilities must lie in (0, 1]")

    @classmethod
    def always(cls, k: int) -> "ArrivalModel":
        return cls((1.0,) * k)

    @classmethod
    def uniform(cls, k: int, p: float) -> "ArrivalModel":
        return cls((p,) * k)

    def sample(self, rng: np.random.Generator) -> list[bool]:
        if all(p == 1.0 for p in self.probabilities):
            return [True] * len(self.probabilities)
        return (rng.random(len(self.probabilities)) < np.asarray(self.probabilities)).tolist()


@dataclass(frozen=True)
class StreamEvent:
    """Everything that happens in one slot, independent of any aggregation rule.

    ``release[i]`` is the slot at which learner i receives this label, or
    None if it never does.
    """

    time_slot: int
    label: int
    features: tuple[tuple[float, ...], ...]
    arrived: tuple[bool, ...]
    release: tuple[int | None, ...]
    concept: int = 0

    @property
    def k(self) -> int:
        return len(self.features)

    def to_json(self) -> str:
        return json.dumps({
            "t": self.time_slot,
            "y": self.label,
            "c": self.concept,
            "x": [list(f) for f in self.features],
            "a": [int(a) for a in self.arrived],
            "r": list(self.release),
        }, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "StreamEvent":
        return cls(
            time_slot=int(d["t"]),
            label=int(d["y"]),
            features=tuple(tuple(float(v) for v in f) for f in d["x"]),
            arrived=tuple(bool(a) for a in d["a"]),
            release=tuple(None if r is None else int(r) for r in d["r"]),
            concept=int(d.get("c", 0)),
        )


def schedule(
    source: Source,
    n: int,
    delay_model: DelayModel | None = None,
    label_model: LabelObservationModel | None = None,
    arrival_model: ArrivalModel | None = None,
    seed: int | np.random.SeedSequence = 0,
) -> list[StreamEvent]:
    """Draw n slots from ``source`` and compose the three environment models.

    Each model draws from its own child of ``seed`` so changing one model
    leaves the others' realizations untouched.
    """
    if n < 1:
        raise InvalidArgument("N must be >= 1")
    k = source.k
    delay_model = delay_model or DelayModel.none(k)
    label_model = label_model or LabelObservationModel()
    arrival_model = arrival_model or ArrivalModel.always(k)
    if len(delay_model.max_delays) != k or len(arrival_model.probabilities) != k:
        raise ConfigurationError("environment models must describe exactly K learners")
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    delay_rng, label_rng, arrival_rng = (make_rng(s) for s in seq.spawn(3))
    events = []
    for t in range(1, n + 1):
        sample = source.next()
        if len(sample.features) != k:
            raise ConfigurationError(f"source emitted {len(sample.features)} learners, expected {k}")
        delays = delay_model.sample(delay_rng)
        seen = label_model.sample(label_rng, k)
        arrived = arrival_model.sample(arrival_rng)
        events.append(StreamEvent(
            time_slot=t,
            label=sample.label,
            features=sample.features,
            arrived=tuple(arrived),
            release=tuple(t + d if g else None for d, g in zip(delays, seen)),
            concept=sample.concept,
        ))
    return events


def realized_alpha(events: Sequence[StreamEvent]) -> float:
    synced = sum(all(e.arrived) for e in events)
    return (len(events) - synced) / len(events)


AggregatorFactory = Callable[[int, int], object]
ClassifierFactory = Callable[[int, int], LocalClassifier]


def simulate(
    events: Sequence[StreamEvent],
    classifier_factory: ClassifierFactory,
    aggregators: Mapping[str, AggregatorFactory],
    *,
    with_oracle: bool = True,
    observer: Callable[[StreamEvent, dict[str, list]], None] | None = None,
) -> dict[str, RunMetrics]:
    """Run several aggregation rules side by side on one event sequence.

    ``classifier_factory(i, n_features)`` and ``aggregator_factory(K, i)``
    build the objects owned by learner i (1-based). Classifier evolution does
    not depend on the aggregation rule, so one set of classifiers serves all
    rules. ``observer`` is called after every slot with the event and the
    per-rule learner lists.
    """
    if not events:
        raise InvalidArgument("no events to simulate")
    k = events[0].k
    classifiers = [classifier_factory(i + 1, len(events[0].features[i])) for i in range(k)]
    learners: dict[str, list] = {}
    for name, factory in aggregators.items():
        built = [factory(k, i + 1) for i in range(k)]
        for obj in built:
            inner = getattr(obj, "rule", obj)
            if getattr(inner, "k", k) != k:
                raise ConfigurationError(f"aggregator {name!r} was built for K={inner.k}, events have K={k}")
        learners[name] = built
    names = list(learners)
    acc = MetricsAccumulator(k, names)
    due: dict[int, list[tuple[int, int]]] = {}
    by_slot = {e.time_slot: e for e in events}
    for e in events:
        if e.k != k:
            raise ConfigurationError(f"slot {e.time_slot} has {e.k} learners, expected {k}")
        t = e.time_slot
        local = [0] * (k + 1)
        full = [1] * (k + 1)
        local[0] = 1
        for i in range(k):
            p = classifiers[i].predict(e.features[i])
            full[i + 1] = p
            if e.arrived[i]:
                local[i + 1] = p
        s = tuple(local)
        predictions = {a: [lr.predict(t, s) for lr in learners[a]] for a in names}
        acc.record_slot(tuple(full), e.label, e.concept, all(e.arrived), predictions)
        for i, r in enumerate(e.release):
            if r is not None:
                if r < t:
                    raise ConfigurationError(f"slot {t}: label released before it exists")
                due.setdefault(r, []).append((i, t))
        for i, m in sorted(due.pop(t, ())):
            past = by_slot[m]
            acc.record_label(i, {a: learners[a][i].observe_label(m, past.label) for a in names})
            if past.arrived[i]:
                classifiers[i].learn(past.features[i], past.label)
        if observer is not None:
            observer(e, learners)
    return acc.finalize(with_oracle=with_oracle)


def run_learners(
    events: Sequence[StreamEvent],
    aggregator_factory: AggregatorFactory,
    classifier_factory: ClassifierFactory,
    *,
    name: str = "pwm",
    with_oracle: bool = True,
) -> RunMetrics:
    return simulate(events, classifier_factory, {name: aggregator_factory},
                    with_oracle=with_oracle)[name]


# Trace files ----------------------------------------------------------------


class TraceError(ValueError):
    pass


class TraceVersionError(TraceError):
    pass


def write_trace(path: str | Path, events: Sequence[StreamEvent], meta: dict | None = None) -> None:
    """One JSON header line, then one event per line."""
    header = {"format": TRACE_FORMAT, "version": TRACE_VERSION,
              "k": events[0].k if events else 0, "n": len(events), "meta": meta or {}}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for e in events:
            fh.write(e.to_json() + "\n")


def read_trace(path: str | Path) -> tuple[dict, list[StreamEvent]]:
    data = Path(path).read_bytes()
    offset = 0
    header = None
    events: list[StreamEvent] = []
    for raw in data.splitlines(keepends=True):
        if not raw.endswith(b"\n"):
            raise TraceError(f"truncated record at byte offset {offset}")
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise TraceError(f"malformed record at byte offset {offset}: {exc.msg}") from None
        if header is None:
            if obj.get("format") != TRACE_FORMAT:
                raise TraceError("not an event trace file")
            if obj.get("version") != TRACE_VERSION:
                raise TraceVersionError(
                    f"trace version {obj.get('version')!r} is not supported (expected {TRACE_VERSION})"
                )
            header = obj
        else:
            try:
                events.append(StreamEvent.from_dict(obj))
            except (KeyError, TypeError, ValueError) as exc:
                raise TraceError(f"bad event at byte offset {offset}: {exc}") from None
        offset += len(raw)
    if header is None:
        raise TraceError("empty trace file")
    if len(events) != header["n"]:
        raise TraceError(
            f"truncated trace: header promises {header['n']} events, found {len(events)} "
            f"(end at byte offset {offset})"
        )
    return header, events
