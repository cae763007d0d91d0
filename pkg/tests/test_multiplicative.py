import math

import pytest
from hypothesis import given, strategies as st

from pwm_ensemble.aggregators import Blum, TrackExp, WeightedMajority, average_majority
from pwm_ensemble.core import ContractViolation


def _set(agg, weights):
    agg.log_weights = [math.log(w) for w in weights]


def test_wm_correct_ensemble_no_change():
    agg = WeightedMajority(3)
    assert agg.step((1, 1, 1, -1), 1) == 1
    assert agg.weights == pytest.approx([1, 1, 1])


def test_wm_mistake_halves_dissenters():
    agg = WeightedMajority(2)
    assert agg.step((1, -1, -1), 1) == -1
    assert agg.weights == pytest.approx([0.5, 0.5])


def test_wm_beta_one_never_changes():
    agg = WeightedMajority(2, beta=1.0)
    for s, y in [((1, -1, -1), 1), ((1, 1, -1), -1)]:
        agg.step(s, y)
    assert agg.weights == pytest.approx([1, 1])


def test_wm_rejects_abstention():
    with pytest.raises(ContractViolation):
        WeightedMajority(2).predict((1, 0, 1))


def test_blum_correct_round_demotes_dissenter():
    agg = Blum(3)
    assert agg.step((1, 1, 1, -1), 1) == 1
    assert agg.weights == pytest.approx([1, 1, 0.5])


def test_blum_mistake_promotes_agreeing():
    agg = Blum(3)
    assert agg.step((1, 1, -1, -1), 1) == -1
    assert agg.weights == pytest.approx([1.5, 0.5, 0.5])


def test_blum_unanimous_correct_unchanged():
    agg = Blum(2)
    agg.step((1, 1, 1), 1)
    assert agg.weights == pytest.approx([1, 1])


def test_trackexp_without_sharing_is_wm():
    a, b = TrackExp(3, share_alpha=0.0), WeightedMajority(3)
    for s, y in [((1, -1, -1, 1), 1), ((1, 1, -1, 1), -1), ((1, -1, 1, 1), -1)]:
        assert a.step(s, y) == b.step(s, y)
    assert a.weights == pytest.approx(b.weights)


def test_trackexp_uniform_fixed_point():
    agg = TrackExp(2)
    _set(agg, [2, 2])
    agg.step((1, -1, -1), 1)  # both dissent: (1, 1) after the update, unchanged by sharing
    assert agg.weights == pytest.approx([1, 1])


def test_trackexp_sharing_formula():
    agg = TrackExp(2, share_alpha=0.25)
    _set(agg, [0.5, 3.0])
    # ensemble says +1, label -1: learner 2 is halved to give (0.5, 1.5), then sharing
    assert agg.step((1, -1, 1), -1) == 1
    assert agg.weights == pytest.approx([0.625, 1.375])


def test_trackexp_correct_round_unchanged():
    agg = TrackExp(2)
    _set(agg, [0.5, 1.5])
    agg.step((1, 1, 1), 1)
    assert agg.weights == pytest.approx([0.5, 1.5])


@pytest.mark.parametrize("s, expected", [((1, 1, 1, -1), 1), ((1, -1, -1), -1), ((1, 1, -1), 1)])
def test_average_majority(s, expected):
    assert average_majority(s) == expected


def test_snapshots_round_trip():
    for cls in (WeightedMajority, Blum, TrackExp):
        agg = cls(3)
        agg.step((1, 1, -1, -1), 1)
        assert cls.restore(agg.snapshot()).weights == pytest.approx(agg.weights)


def test_long_runs_do_not_underflow():
    agg = WeightedMajority(2)
    for _ in range(5000):
        agg.step((1, 1, -1), -1)
    assert agg.predict((1, 1, -1)) == -1
    assert all(lw > -1e6 for lw in agg.log_weights)


rounds = st.integers(1, 5).flatmap(lambda k: st.lists(
    st.tuples(st.lists(st.sampled_from([-1, 1]), min_size=k, max_size=k), st.sampled_from([-1, 1])),
    min_size=1, max_size=60,
))


@given(rounds, st.sampled_from([WeightedMajority, Blum, TrackExp]))
def test_multiplicative_weights_stay_positive(data, cls):
    agg = cls(len(data[0][0]))
    for local, y in data:
        agg.step((1, *local), y)
        assert all(lw > -math.inf for lw in agg.log_weights)
        assert all(math.isfinite(lw) for lw in agg.log_weights)
