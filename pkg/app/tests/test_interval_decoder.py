import numpy as np
import pytest

from app.models.interval_decoder import (
    PredictionInterval,
    codebook_entries,
    decode_team_output,
    euclidean,
    first_medal_probability,
    host_effect,
    knn_interval,
    medal_change_ranking,
    sport_importance,
    total_vector,
)
from app.models.lstm import LstmParams
from app.models.state_matrix import SportIndex, assemble, host_row
from app.utils.csv_utils import MedalTally
from app.utils.encoding_utils import EmbeddingCodebook
from app.utils.exceptions import DegenerateError, RangeError, ShapeError


@pytest.fixture
def codebook():
    return EmbeddingCodebook()


@pytest.fixture
def gold_entries(codebook):
    return codebook_entries(codebook, "gold")


def test_euclidean():
    assert euclidean([0.0, 3.0], [4.0, 0.0]) == 5.0
    with pytest.raises(ShapeError):
        euclidean([1.0], [1.0, 2.0])


def test_knn_exact_codeword(codebook, gold_entries):
    interval = knn_interval(codebook.embed_scalar("gold", 7), gold_entries, k=1)
    assert (interval.lo, interval.hi) == (7, 7)
    assert interval.nn_distances == (0.0,)


def test_knn_equal_distances_prefer_smaller_count(codebook, gold_entries):
    # 6 and 8 sit at the same distance from 7
    interval = knn_interval(codebook.embed_scalar("gold", 7), gold_entries, k=2)
    assert (interval.lo, interval.hi) == (6, 7)

    entries = [(0, np.array([0.0])), (1, np.array([2.0]))]
    interval = knn_interval([1.0], entries, k=1)
    assert (interval.lo, interval.hi) == (0, 0)


def test_knn_interval_bounds(gold_entries):
    v = np.random.default_rng(0).normal(size=10)
    interval = knn_interval(v, gold_entries, k=3)
    assert interval.lo <= interval.hi
    assert list(interval.nn_distances) == sorted(interval.nn_distances)
    with pytest.raises(RangeError):
        knn_interval(v, gold_entries, k=0)
    with pytest.raises(RangeError):
        knn_interval(v, gold_entries[:2], k=3)


def test_prediction_interval():
    interval = PredictionInterval(lo=2, hi=5, nn_distances=(0.1, 0.2))
    assert interval.midpoint == 3.5
    assert interval.contains(2) and interval.contains(5)
    assert not interval.contains(6)


def test_first_medal_probability(codebook, gold_entries):
    zero, one = codebook.embed_scalar("gold", 0), codebook.embed_scalar("gold", 1)
    at_zero = first_medal_probability(zero, gold_entries, "NEP")
    assert at_zero.probability == pytest.approx(1 / (1 + np.exp(5.0)))
    assert not at_zero.predicted_first_medal
    at_one = first_medal_probability(one, gold_entries, "NEP")
    assert at_one.probability == pytest.approx(1 / (1 + np.exp(-5.0)))
    assert at_one.predicted_first_medal
    halfway = first_medal_probability((zero + one) / 2, gold_entries)
    assert halfway.probability == pytest.approx(0.5)
    steeper = first_medal_probability(one, gold_entries, slope=10.0)
    assert steeper.probability > at_one.probability


def test_first_medal_needs_zero_and_one(gold_entries):
    with pytest.raises(DegenerateError):
        first_medal_probability(np.zeros(10), gold_entries[2:])
    with pytest.raises(DegenerateError):
        first_medal_probability(np.zeros(1), [(0, np.zeros(1)), (1, np.zeros(1))])


def test_total_vector():
    n_hat = np.zeros((10, 5))
    n_hat[:, 0], n_hat[:, 1], n_hat[:, 2], n_hat[:, 3] = 3.0, 6.0, 9.0, 100.0
    assert np.allclose(total_vector(n_hat.reshape(-1)), 6.0)


def test_decode_team_output_recovers_exact_tally(codebook):
    tally = MedalTally("USA", 2000, 3, 2, 1, athletes=40, events=5)
    decoded = decode_team_output(codebook.team_matrix(tally).reshape(-1), codebook, k=1)
    assert {feature: interval.lo for feature, interval in decoded.items()} == {
        "gold": 3, "silver": 2, "bronze": 1, "athletes": 40, "events": 5,
    }
    medals = decode_team_output(codebook.team_matrix(tally), codebook, k=1, features=("gold",))
    assert list(medals) == ["gold"]


def test_sport_importance_orders_by_norm():
    index = SportIndex()
    athletes = np.zeros((71, 5))
    athletes[4] = [3.0, 4.0, 0.0, 0.0, 0.0]
    athletes[9] = [1.0, 0.0, 0.0, 0.0, 0.0]
    athletes[2] = [1.0, 0.0, 0.0, 0.0, 0.0]
    ranking = sport_importance(assemble(athletes, np.ones((10, 5)), host_row(True)), index)
    assert len(ranking) == 71
    assert ranking[0] == (index.sport(4), 5.0)
    assert [name for name, _ in ranking[1:3]] == [index.sport(2), index.sport(9)]
    assert ranking[-1][1] == 0.0


def test_host_effect_with_constant_readout(codebook):
    index = SportIndex()
    tally = MedalTally("FRA", 2024, 4, 6, 8, athletes=30, events=6)
    params = LstmParams.initialize(410, 4, 50, np.random.default_rng(0))
    params.W_y[...] = 0.0
    params.b_y[...] = codebook.team_matrix(tally).reshape(-1)
    params.trained = True

    athletes = np.zeros((71, 5))
    athletes[3] = [3.0, 4.0, 0.0, 0.0, 0.0]
    athletes[10] = [0.0, 0.0, 0.0, 0.0, 5.0]
    history = [assemble(np.zeros((71, 5)), np.zeros((10, 5)), host_row(False)),
               assemble(athletes, np.zeros((10, 5)), host_row(False))]

    effect = host_effect(params, history, index, codebook, k=1)
    assert effect.medal_baseline == {"gold": 4, "silver": 6, "bronze": 8, "total": 18}
    assert effect.medal_hosted == effect.medal_baseline
    assert all(delta == 0.0 for delta in effect.medal_deltas.values())
    assert [(name, baseline) for name, baseline, _, _ in effect.sport_deltas] == [
        (index.sport(3), 9.0), (index.sport(10), 9.0),
    ]
    assert effect.aggregate == 0.0


def test_medal_change_ranking():
    ranking = medal_change_ranking({"A": 10.0, "B": 5.0, "C": 3.0}, {"A": 8.0, "B": 7.0})
    assert [row[0] for row in ranking] == ["C", "A", "B"]
    assert ranking[0] == ("C", 3.0, 0.0, 3.0)
    assert ranking[-1][3] == -2.0
