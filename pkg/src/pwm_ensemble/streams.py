"""Drifting synthetic sources and CSV replay.

Every source yields one :class:`Sample` per time slot: one feature tuple per
learner, the shared +/-1 label and the id of the concept in force. All
randomness comes from a PCG64 generator seeded by the caller, and each slot
draws in a fixed order, so a seed determines the stream bit for bit and a
longer run extends a shorter one.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .core import InvalidArgument, LabeledInstance


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator; ``seed`` may be an int or a ``SeedSequence``."""
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class Sample:
    features: tuple[tuple[float, ...], ...]
    label: int
    concept: int = 0


class Source:
    k: int

    def next(self) -> Sample:
        raise NotImplementedError

    def take(self, n: int) -> list[Sample]:
        return [self.next() for _ in range(n)]

    def __iter__(self) -> Iterator[Sample]:
        while True:
            try:
                yield self.next()
            except StopIteration:
                return


class RotatingHyperplaneSource(Source):
    """Each learner sees 3 uniform features; the label is a slowly rotating
    hyperplane over the features of the first ``relevant_count`` learners.

    The hyperplane drifts gradually at every slot, so no discrete concept
    boundaries exist and the concept id stays 0.
    """

    dims = 3

    def __init__(self, k: int, relevant_count: int | None = None, walk_std: float = 0.1,
                 seed=0, theta: Sequence[Sequence[float]] | None = None):
        if k < 1:
            raise InvalidArgument("K must be >= 1")
        relevant_count = k if relevant_count is None else relevant_count
        if not 1 <= relevant_count <= k:
            raise InvalidArgument("relevant_count must lie in [1, K]")
        if walk_std < 0:
            raise InvalidArgument("walk_std must be >= 0")
        self.k = k
        self.relevant_count = relevant_count
        self.walk_std = walk_std
        self.rng = make_rng(seed)
        if theta is None:
            self.theta = self.rng.standard_normal((relevant_count, self.dims))
        else:
            self.theta = np.array(theta, dtype=float).reshape(relevant_count, self.dims)

    def next(self) -> Sample:
        x = self.rng.uniform(-1.0, 1.0, (self.k, self.dims))
        score = float(np.sum(self.theta * x[: self.relevant_count]))
        label = 1 if score >= 0 else -1
        if self.walk_std > 0:
            self.theta = self.theta + self.rng.normal(0.0, self.walk_std, self.theta.shape)
        return Sample(tuple(map(tuple, x.tolist())), label)


LABEL_RULES = ("any", "all")


class EventDetectionSource(Source):
    """Each learner observes its own rare +/-1 event in Gaussian noise.

    A learner's source is in a good or bad state with different noise
    levels; the states follow independent symmetric two-state Markov chains.
    The shared label is +1 when any local event fired (``label_rule="any"``)
    or when all of them did (``"all"``). ``forced_switch_slots`` flips every
    learner's state after the listed slots, producing scheduled drifts.
    """

    def __init__(self, k: int, event_prob: float = 0.05, noise_std_good: float = math.sqrt(0.5),
                 noise_std_bad: float = 1.0, switch_prob: float = 0.01, label_rule: str = "any",
                 seed=0, initial_bad: Sequence[bool] | None = None,
                 forced_switch_slots: Sequence[int] = ()):
        if k < 1:
            raise InvalidArgument("K must be >= 1")
        if not 0 <= event_prob <= 1 or not 0 <= switch_prob <= 1:
            raise InvalidArgument("probabilities must lie in [0, 1]")
        if noise_std_good < 0 or noise_std_bad < 0:
            raise InvalidArgument("noise standard deviations must be >= 0")
        if label_rule not in LABEL_RULES:
            raise InvalidArgument(f"label_rule must be one of {LABEL_RULES}")
        self.k = k
        self.event_prob = event_prob
        self.noise_std = np.array([noise_std_good, noise_std_bad])
        self.switch_prob = switch_prob
        self.label_rule = label_rule
        self.forced_switch_slots = frozenset(forced_switch_slots)
        self.rng = make_rng(seed)
        if initial_bad is None:
            self.bad = self.rng.random(k) < 0.5
        else:
            self.bad = np.array(initial_bad, dtype=bool)
        self.concept = 0
        self.slot = 0

    def next(self) -> Sample:
        self.slot += 1
        events = np.where(self.rng.random(self.k) < self.event_prob, 1.0, -1.0)
        noise = self.rng.standard_normal(self.k) * self.noise_std[self.bad.astype(int)]
        x = events + noise
        fired = events > 0
        hit = fired.any() if self.label_rule == "any" else fired.all()
        sample = Sample(tuple((v,) for v in x.tolist()), 1 if hit else -1, self.concept)
        flips = self.rng.random(self.k) < self.switch_prob
        if self.slot in self.forced_switch_slots:
            flips = np.ones(self.k, dtype=bool)
        if flips.any():
            self.bad = self.bad ^ flips
            self.concept += 1
        return sample


class GaussianSource(Source):
    """Balanced +/-1 labels; learner i observes N(y * mu, 1) independently of the others."""

    def __init__(self, k: int, mu: float, seed=0):
        if k < 1:
            raise InvalidArgument("K must be >= 1")
        if mu < 0:
            raise InvalidArgument("mu must be >= 0")
        self.k = k
        self.mu = mu
        self.rng = make_rng(seed)

    def next(self) -> Sample:
        label = 1 if self.rng.random() < 0.5 else -1
        x = self.rng.standard_normal(self.k) + label * self.mu
        return Sample(tuple((v,) for v in x.tolist()), label)


# CSV replay ----------------------------------------------------------------


class CsvParseError(ValueError):
    pass


class CsvSchemaError(ValueError):
    pass


@dataclass(frozen=True)
class CsvSchema:
    """Column layout: one list of feature columns per learner plus a label column.

    ``label_values`` is ``"01"`` (0 -> -1, 1 -> +1) or ``"pm1"`` (-1/+1 as written).
    """

    learners: tuple[tuple[str, ...], ...]
    label: str
    label_values: str = "01"

    @classmethod
    def from_dict(cls, raw: dict) -> "CsvSchema":
        try:
            learners = tuple(tuple(cols) for cols in raw["learners"])
            label = raw["label"]
        except (KeyError, TypeError) as exc:
            raise CsvSchemaError(f"schema needs 'learners' and 'label': {exc}") from None
        if not learners or any(not cols for cols in learners):
            raise CsvSchemaError("every learner needs at least one feature column")
        values = raw.get("label_values", "01")
        if values not in ("01", "pm1"):
            raise CsvSchemaError("label_values must be '01' or 'pm1'")
        return cls(learners, label, values)


_LABEL_MAPS = {"01": {"0": -1, "1": 1}, "pm1": {"-1": -1, "1": 1, "+1": 1}}


def _parse_label(raw: str, schema: CsvSchema, row: int) -> int:
    key = raw.strip()
    mapping = _LABEL_MAPS[schema.label_values]
    if key not in mapping:
        try:
            as_float = float(key)
        except ValueError:
            raise CsvParseError(f"row {row}: label {raw!r} is not a number") from None
        key = str(int(as_float)) if as_float.is_integer() else key
        if key not in mapping:
            raise CsvSchemaError(f"row {row}: label value {raw!r} is not mapped by the schema")
    return mapping[key]


def read_csv_samples(path: str | Path, schema: CsvSchema) -> list[Sample]:
    """Load the whole file; rows are numbered from 1 after the header."""
    samples = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        needed = {c for cols in schema.learners for c in cols} | {schema.label}
        missing = sorted(needed - set(header))
        if missing:
            raise CsvSchemaError(f"columns missing from {path}: {', '.join(missing)}")
        for row_no, row in enumerate(reader, start=1):
            if None in row or any(row[c] is None for c in needed):
                raise CsvParseError(f"row {row_no}: wrong number of fields")
            try:
                feats = tuple(tuple(float(row[c]) for c in cols) for cols in schema.learners)
            except ValueError as exc:
                raise CsvParseError(f"row {row_no}: {exc}") from None
            samples.append(Sample(feats, _parse_label(row[schema.label], schema, row_no)))
    return samples


class CsvSource(Source):
    """Deterministic replay of a CSV file; raises StopIteration when exhausted."""

    def __init__(self, path: str | Path, schema: CsvSchema):
        self.samples = read_csv_samples(path, schema)
        self.k = len(schema.learners)
        self._pos = 0

    def next(self) -> Sample:
        if self._pos >= len(self.samples):
            raise StopIteration
        self._pos += 1
        return self.samples[self._pos - 1]

    def __len__(self) -> int:
        return len(self.samples)


def csv_ingest(path: str | Path, schema: CsvSchema | dict) -> Iterator[list[LabeledInstance]]:
    """Yield, per row, one LabeledInstance per learner (time slots start at 1)."""
    if isinstance(schema, dict):
        schema = CsvSchema.from_dict(schema)
    for n, sample in enumerate(read_csv_samples(path, schema), start=1):
        yield [LabeledInstance(n, f, sample.label) for f in sample.features]
