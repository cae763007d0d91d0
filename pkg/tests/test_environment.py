import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pwm_ensemble.aggregators import Delayed, ExtendedPwm, Pwm
from pwm_ensemble.classifiers import OnlineLogisticRegression, ThresholdClassifier
from pwm_ensemble.environment import (
    ArrivalModel,
    ConfigurationError,
    DelayModel,
    LabelObservationModel,
    StreamEvent,
    TraceError,
    TraceVersionError,
    read_trace,
    realized_alpha,
    run_learners,
    schedule,
    simulate,
    write_trace,
)
from pwm_ensemble.streams import GaussianSource, RotatingHyperplaneSource, Sample, Source

threshold = lambda i, d: ThresholdClassifier()
logistic = lambda i, d: OnlineLogisticRegression(d)


class LabelSource(Source):
    """Learner 1 sees the label exactly, the others see noise."""

    def __init__(self, k, seed=0):
        self.k = k
        self.rng = np.random.default_rng(seed)

    def next(self):
        y = 1 if self.rng.random() < 0.5 else -1
        feats = [(float(y),)] + [(float(self.rng.standard_normal()),) for _ in range(self.k - 1)]
        return Sample(tuple(feats), y)


def test_ideal_schedule():
    ev = schedule(GaussianSource(3, 1.0, seed=1), 50, seed=2)
    assert all(all(e.arrived) for e in ev)
    assert all(e.release == (e.time_slot,) * 3 for e in ev)
    assert realized_alpha(ev) == 0.0


def test_label_observation_fraction():
    ev = schedule(GaussianSource(2, 1.0, seed=1), 10000, label_model=LabelObservationModel(0.5), seed=3)
    for i in range(2):
        frac = np.mean([e.release[i] is not None for e in ev])
        assert abs(frac - 0.5) <= 0.02


def test_delays_bounded_and_release_not_before_slot():
    ev = schedule(GaussianSource(3, 1.0, seed=1), 2000, delay_model=DelayModel((0, 5, 20)), seed=4)
    for e in ev:
        for i, r in enumerate(e.release):
            assert e.time_slot <= r <= e.time_slot + (0, 5, 20)[i]
    assert max(e.release[2] - e.time_slot for e in ev) == 20


def test_alpha_matches_definition():
    ev = schedule(GaussianSource(4, 1.0, seed=1), 3000, arrival_model=ArrivalModel.uniform(4, 0.9), seed=5)
    m = sum(all(e.arrived) for e in ev)
    assert realized_alpha(ev) == (3000 - m) / 3000
    assert abs(realized_alpha(ev) - (1 - 0.9 ** 4)) < 0.03


def test_models_use_independent_streams():
    src = lambda: GaussianSource(3, 1.0, seed=1)
    a = schedule(src(), 300, delay_model=DelayModel.uniform(3, 5), seed=9)
    b = schedule(src(), 300, delay_model=DelayModel.uniform(3, 5), label_model=LabelObservationModel(0.5), seed=9)
    # changing the label model leaves delays of observed labels untouched
    for ea, eb in zip(a, b):
        for ra, rb in zip(ea.release, eb.release):
            assert rb is None or ra == rb


def test_single_perfect_expert_k1():
    ev = schedule(LabelSource(1), 200, seed=0)
    m = run_learners(ev, lambda k, i: Delayed(Pwm(k)), threshold)
    assert m.mistakes[0] <= 1


def test_runs_are_deterministic():
    go = lambda: run_learners(schedule(RotatingHyperplaneSource(3, seed=2), 300, seed=3),
                              lambda k, i: Delayed(Pwm(k)), logistic)
    assert go() == go()


def test_ideal_learners_share_weights_and_mistakes():
    snaps = []
    ev = schedule(RotatingHyperplaneSource(4, seed=6), 500, seed=1)
    m = simulate(ev, logistic, {"pwm": lambda k, i: Delayed(Pwm(k))},
                 observer=lambda e, lr: snaps.append([tuple(x.weights) for x in lr["pwm"]]))["pwm"]
    assert len(set(m.mistakes)) == 1
    assert all(len(set(s)) == 1 for s in snaps)


def test_factory_k_mismatch():
    ev = schedule(GaussianSource(3, 1.0), 10)
    with pytest.raises(ConfigurationError):
        run_learners(ev, lambda k, i: Delayed(Pwm(k + 1)), threshold)


def test_async_learner_without_instance_abstains_in_own_slot():
    seen = []

    class Spy(ExtendedPwm):
        def predict(self, t, s):
            seen.append(s)
            return super().predict(t, s)

    ev = [StreamEvent(1, 1, ((0.5,), (0.5,)), (False, True), (1, 1))]
    simulate(ev, threshold, {"epwm": lambda k, i: Spy(k)})
    assert seen == [(1, 0, 1), (1, 0, 1)]


def test_no_arrivals_predicts_with_async_bias():
    ev = [StreamEvent(1, -1, ((0.5,), (0.5,)), (False, False), (1, 1)),
          StreamEvent(2, -1, ((0.5,), (0.5,)), (False, False), (2, 2))]
    m = run_learners(ev, lambda k, i: ExtendedPwm(k), threshold, name="epwm")
    # slot 1 predicts sgn(0)=+1 and learns w0=-1; slot 2 predicts -1
    assert m.mistakes == [1, 1]


def test_missing_labels_still_counted():
    ev = schedule(GaussianSource(2, 0.5, seed=1), 400, label_model=LabelObservationModel(0.3), seed=2)
    m = run_learners(ev, lambda k, i: ExtendedPwm(k), threshold, name="epwm")
    assert m.n == 400
    assert all(lo < 400 for lo in m.labels_observed)


def test_locality_other_learners_labels_do_not_matter():
    ev = schedule(GaussianSource(2, 0.5, seed=3), 300, delay_model=DelayModel.uniform(2, 3), seed=4)
    cut = [StreamEvent(e.time_slot, e.label, e.features, e.arrived, (e.release[0], None), e.concept) for e in ev]
    traj = {}
    for name, events in (("full", ev), ("cut", cut)):
        snaps = []
        simulate(events, threshold, {"pwm": lambda k, i: ExtendedPwm(k, 3)},
                 observer=lambda e, lr: snaps.append(tuple(lr["pwm"][0].weights_sync)))
        traj[name] = snaps
    assert traj["full"] == traj["cut"]


def test_trace_round_trip(tmp_path):
    ev = schedule(RotatingHyperplaneSource(3, seed=1), 100, delay_model=DelayModel.uniform(3, 4),
                  label_model=LabelObservationModel(0.7), seed=2)
    p = tmp_path / "t.jsonl"
    write_trace(p, ev, {"seed": 1})
    header, back = read_trace(p)
    assert back == ev and header["meta"] == {"seed": 1}
    f = lambda events: run_learners(events, lambda k, i: ExtendedPwm(k, 4), logistic, name="epwm")
    assert f(back) == f(ev)


def test_trace_truncated_reports_offset(tmp_path):
    ev = schedule(GaussianSource(2, 1.0), 5)
    p = tmp_path / "t.jsonl"
    write_trace(p, ev)
    data = p.read_bytes()
    p.write_bytes(data[:-10])
    with pytest.raises(TraceError, match="byte offset"):
        read_trace(p)
    lines = data.splitlines(keepends=True)
    p.write_bytes(b"".join(lines[:-1]))
    with pytest.raises(TraceError, match="header promises 5"):
        read_trace(p)


def test_trace_version_mismatch(tmp_path):
    p = tmp_path / "t.jsonl"
    p.write_text(json.dumps({"format": "pwm-ensemble-trace", "version": 99, "k": 1, "n": 0}) + "\n")
    with pytest.raises(TraceVersionError):
        read_trace(p)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 4))
def test_recognized_errors_never_exceed_mistakes_without_delay(seed, k):
    ev = schedule(GaussianSource(k, 0.3, seed=seed), 120, label_model=LabelObservationModel(0.6), seed=seed)
    m = run_learners(ev, lambda kk, i: ExtendedPwm(kk), threshold, name="epwm")
    assert all(ne <= mi for ne, mi in zip(m.observed_errors, m.mistakes))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 4))
def test_pwm_respects_base_bound_on_random_runs(seed, k):
    from pwm_ensemble.bounds import bound_b
    ev = schedule(GaussianSource(k, 0.4, seed=seed), 200, seed=seed + 1)
    m = run_learners(ev, lambda kk, i: Delayed(Pwm(kk)), threshold)
    assert m.oracle_exact
    assert max(m.p_learners) <= bound_b(k, m.n, m.p_opt, m.p_star, m.v_star)
