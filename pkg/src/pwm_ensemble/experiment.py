"""Seed sweeps: build sources, learners and environments from a config and collect records."""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .aggregators import (
    AloneLearner,
    AverageMajorityLearner,
    Blum,
    Delayed,
    ExtendedPwm,
    Projected,
    Pwm,
    TrackExp,
    WeightedMajority,
)
from .bounds import BoundInputs, all_bounds
from .classifiers import OnlineLogisticRegression, ThresholdClassifier
from .config import CsvStream, EventStream, ExperimentConfig, GaussianStream, HyperplaneStream
from .environment import (
    ArrivalModel,
    ConfigurationError,
    DelayModel,
    LabelObservationModel,
    StreamEvent,
    schedule,
    simulate,
    write_trace,
)
from .metrics import RunMetrics
from .streams import (
    CsvSchema,
    CsvSource,
    EventDetectionSource,
    GaussianSource,
    RotatingHyperplaneSource,
    Source,
)

RECORDS_FORMAT = "pwm-ensemble-records"
SUMMARY_FORMAT = "pwm-ensemble-summary"
TABLE_FORMAT = "pwm-ensemble-table"
RESULTS_VERSION = 1

RECORD_COLUMNS = {
    "seed": "root seed of the run",
    "point": "sweep value (null without a sweep)",
    "aggregator": "aggregation rule name",
    "k": "number of learners",
    "n": "number of slots",
    "mistakes": "per-learner final-prediction mistakes",
    "p_learners": "per-learner mistake probability",
    "p_system": "mistake probability averaged over learners",
    "observed_errors": "per-learner mistakes recognized when a label arrived",
    "labels_observed": "per-learner labels delivered",
    "classifier_mistakes": "per-classifier local mistakes (counterfactual when no instance)",
    "p_classifiers": "per-classifier mistake probability",
    "p_star": "best classifier mistake probability",
    "v_star": "number of classifiers attaining p_star",
    "p_opt": "best static weight vector mistake probability",
    "oracle_exact": "whether p_opt is exact (K <= 4) or an upper estimate",
    "oracle_weights": "the static weight vector attaining p_opt",
    "synchronized_slots": "slots in which every learner observed an instance",
    "alpha": "fraction of slots with at least one missing instance",
    "per_concept": "slots and per-learner mistakes for every concept id",
    "bounds": "b1, b2, b, delayed, async, missing (null when not applicable)",
}


# Builders -------------------------------------------------------------------


def build_source(cfg: ExperimentConfig, seed) -> Source:
    st = cfg.stream
    if isinstance(st, HyperplaneStream):
        return RotatingHyperplaneSource(cfg.k, relevant_count=st.relevant_count,
                                        walk_std=st.walk_std, seed=seed)
    if isinstance(st, EventStream):
        return EventDetectionSource(cfg.k, event_prob=st.event_prob, noise_std_good=st.noise_std_good,
                                    noise_std_bad=st.noise_std_bad, switch_prob=st.switch_prob,
                                    label_rule=st.label_rule, seed=seed,
                                    forced_switch_slots=st.forced_switch_slots)
    if isinstance(st, GaussianStream):
        return GaussianSource(cfg.k, st.mu, seed=seed)
    if isinstance(st, CsvStream):
        src = CsvSource(st.path, CsvSchema.from_dict(st.model_dump()))
        if len(src) < cfg.n:
            raise ConfigurationError(f"stream.path: {st.path} has {len(src)} rows, n={cfg.n}")
        return src
    raise ConfigurationError(f"stream.kind: unsupported {st!r}")


def classifier_factory(cfg: ExperimentConfig):
    spec = cfg.classifier

    def make(i: int, n_features: int):
        if spec.kind == "threshold":
            return ThresholdClassifier(spec.threshold, spec.dimension_index)
        return OnlineLogisticRegression(n_features, spec.learning_rate, spec.gradient_clip)

    return make


def aggregator_factory(cfg: ExperimentConfig, name: str):
    """factory(K, i) for learner i; ``cfg.aggregated`` restricts rules to the first m learners."""
    max_delay = cfg.environment.max_delay
    m = cfg.aggregated
    no_bias = cfg.pwm_no_bias

    def rule(k: int, i: int):
        if name == "pwm":
            return Delayed(Pwm(k, no_bias), max_delay)
        if name == "epwm":
            return ExtendedPwm(k, max_delay, no_bias)
        if name == "wm":
            return Delayed(WeightedMajority(k), max_delay)
        if name == "blum":
            return Delayed(Blum(k), max_delay)
        if name == "trackexp":
            return Delayed(TrackExp(k), max_delay)
        if name == "am":
            return AverageMajorityLearner()
        if name == "alone":
            return AloneLearner(i)
        raise ConfigurationError(f"aggregators: unknown {name!r}")

    def make(k: int, i: int):
        if m is None or m == k or name == "alone":
            return rule(k, i)
        return Projected(rule(m, i), m, k)

    return make


def make_events(cfg: ExperimentConfig, seed: int) -> list[StreamEvent]:
    """The aggregator-independent event sequence for one seed."""
    stream_seed, env_seed = np.random.SeedSequence(seed).spawn(2)
    env = cfg.environment
    return schedule(
        build_source(cfg, stream_seed),
        cfg.n,
        DelayModel((env.max_delay,) * cfg.k, env.delay_kind),
        LabelObservationModel(env.label_prob),
        ArrivalModel.uniform(cfg.k, env.arrival_prob),
        seed=env_seed,
    )


def run_events(cfg: ExperimentConfig, events: Sequence[StreamEvent],
               aggregators: Sequence[str] | None = None) -> dict[str, RunMetrics]:
    names = list(aggregators or cfg.aggregators)
    return simulate(events, classifier_factory(cfg),
                    {a: aggregator_factory(cfg, a) for a in names}, with_oracle=cfg.oracle)


def run_bounds(cfg: ExperimentConfig, m: RunMetrics) -> dict[str, float | None]:
    if math.isnan(m.p_opt):
        return {}
    env = cfg.environment
    return all_bounds(BoundInputs(
        k=m.k, n=m.n, p_opt=m.p_opt, p_star=m.p_star, v_star=m.v_star,
        max_delays=(env.max_delay,) * m.k if env.max_delay else (),
        mu=env.label_prob, epsilon=env.epsilon,
        # learner 1's recognized mistakes stand in for the per-learner count
        observed_errors=m.observed_errors[0] if env.label_prob < 1 else None,
        alpha=m.alpha,
    ))


def make_record(seed: int, point: Any, cfg: ExperimentConfig, m: RunMetrics) -> dict:
    rec = {"seed": seed, "point": point}
    rec.update(m.to_record())
    rec["bounds"] = run_bounds(cfg, m)
    return rec


# Sweeps ---------------------------------------------------------------------


@dataclass
class SweepResult:
    records: list[dict] = field(default_factory=list)
    summary: list[dict] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def _job(args) -> tuple[int, int, Any, list[dict] | None, str | None]:
    idx, point, cfg, seed, trace_path = args
    try:
        events = make_events(cfg, seed)
        if trace_path is not None:
            write_trace(trace_path, events, {"seed": seed, "point": point})
        metrics = run_events(cfg, events)
        return idx, seed, point, [make_record(seed, point, cfg, m) for m in metrics.values()], None
    except Exception as exc:  # reported per seed, the sweep carries on
        return idx, seed, point, None, f"{type(exc).__name__}: {exc}"


def trace_path_for(out_dir: Path, name: str, point_index: int, seed: int) -> Path:
    return out_dir / "traces" / f"{name}-p{point_index}-s{seed}.jsonl"


def run_sweep(cfg: ExperimentConfig, out_dir: Path | None = None, workers: int = 1) -> SweepResult:
    jobs = []
    for idx, (point, concrete) in enumerate(cfg.points()):
        for seed in cfg.seed_list():
            tp = None
            if out_dir is not None and cfg.output.traces:
                tp = trace_path_for(out_dir, cfg.output.name, idx, seed)
                tp.parent.mkdir(parents=True, exist_ok=True)
            jobs.append((idx, point, concrete, seed, tp))
    result = SweepResult()
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            outcomes = list(pool.map(_job, jobs))
    else:
        outcomes = [_job(j) for j in jobs]
    # single collector: results are merged in job order whatever the worker count
    for idx, seed, point, recs, err in outcomes:
        if err is not None:
            result.failures.append({"seed": seed, "point": point, "error": err})
        else:
            result.records.extend(recs)
    result.summary = summarize(result.records, cfg.sweep.variable if cfg.sweep else None)
    return result


def _mean_se(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return float("nan"), float("nan")
    se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
    return float(arr.mean()), se


SUMMARY_FIELDS = ("p_system", "p_opt", "p_star", "alpha")
BOUND_FIELDS = ("b1", "b2", "b", "delayed", "async", "missing")


def summarize(records: list[dict], variable: str | None = None) -> list[dict]:
    """Mean and standard error across seeds for every (sweep point, aggregator)."""
    groups: dict[tuple, list[dict]] = {}
    for r in records:
        groups.setdefault((json.dumps(r["point"]), r["aggregator"]), []).append(r)
    out = []
    for (point_key, agg), rows in groups.items():
        entry = {"point": json.loads(point_key), "variable": variable,
                 "aggregator": agg, "seeds": len(rows)}
        for f in SUMMARY_FIELDS:
            entry[f"{f}_mean"], entry[f"{f}_se"] = _mean_se([r[f] for r in rows])
        for b in BOUND_FIELDS:
            vals = [r["bounds"].get(b) for r in rows]
            present = [v for v in vals if v is not None]
            entry[f"{b}_mean"] = _mean_se(present)[0] if present else None
            entry[f"{b}_applicable"] = len(present)
        out.append(entry)
    return out


# Output files ---------------------------------------------------------------


def _append_jsonl(path: Path, fmt: str, header_extra: dict, rows: list[dict]) -> None:
    """Append rows; a new file starts with a header line, an existing one must match the format."""
    if path.exists() and path.stat().st_size > 0:
        with open(path, encoding="utf-8") as fh:
            head = json.loads(fh.readline())
        if head.get("format") != fmt or head.get("version") != RESULTS_VERSION:
            raise ConfigurationError(f"{path} holds {head.get('format')} v{head.get('version')}, "
                                     f"cannot append {fmt} v{RESULTS_VERSION}")
        mode = "a"
    else:
        mode = "w"
    with open(path, mode, encoding="utf-8") as fh:
        if mode == "w":
            fh.write(json.dumps({"format": fmt, "version": RESULTS_VERSION, **header_extra}) + "\n")
        for row in rows:
            fh.write(json.dumps(row) + "\n")


def write_results(result: SweepResult, out_dir: Path, name: str, variable: str | None) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    rec_path = out_dir / f"{name}.records.jsonl"
    sum_path = out_dir / f"{name}.summary.jsonl"
    _append_jsonl(rec_path, RECORDS_FORMAT, {"columns": RECORD_COLUMNS}, result.records)
    _append_jsonl(sum_path, SUMMARY_FORMAT, {"variable": variable}, result.summary)
    table = out_dir / f"{name}.{variable or 'single'}.csv"
    write_table(table, result.summary, variable)
    return [rec_path, sum_path, table]


def write_table(path: Path, summary: list[dict], variable: str | None) -> None:
    """Plot-ready table: one row per sweep point, mean/SE columns per aggregator."""
    aggs = sorted({s["aggregator"] for s in summary})
    points: list = []
    for s in summary:
        if s["point"] not in points:
            points.append(s["point"])
    by_key = {(json.dumps(s["point"]), s["aggregator"]): s for s in summary}
    cols = [variable or "point"]
    for a in aggs:
        cols += [f"{a}_mean", f"{a}_se"]
    cols += ["p_opt_mean", "p_star_mean", "b1_mean", "b2_mean", "b_mean"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# format={TABLE_FORMAT} version={RESULTS_VERSION}\n")
        w = csv.writer(fh)
        w.writerow(cols)
        for p in points:
            row: list = [p]
            any_entry = None
            for a in aggs:
                e = by_key.get((json.dumps(p), a))
                any_entry = any_entry or e
                row += [e["p_system_mean"], e["p_system_se"]] if e else ["", ""]
            for f in ("p_opt_mean", "p_star_mean", "b1_mean", "b2_mean", "b_mean"):
                v = any_entry.get(f) if any_entry else None
                row.append("" if v is None else v)
            w.writerow(row)
