import json
from itertools import combinations, permutations
from math import factorial

import numpy as np
import pytest

from app.analytics.shapley import (
    ShapleyConfig,
    default_state_groups,
    shapley_exact,
    state_attribution,
    top_sports,
    traditional_advantage,
)
from app.models.lstm import LstmParams
from app.models.state_matrix import SportIndex, assemble, host_row
from app.tests.helper import fixture_path
from app.utils.csv_utils import MedalTally
from app.utils.encoding_utils import EmbeddingCodebook
from app.utils.exceptions import AttributionError, RangeError


def table_game(features, values):
    return ShapleyConfig(features, lambda subset: values[frozenset(subset)])


def random_game(n, seed):
    rng = np.random.default_rng(seed)
    features = [f"f{i}" for i in range(n)]
    values = {frozenset(c): float(rng.normal()) for size in range(n + 1) for c in combinations(features, size)}
    return features, values


def permutation_oracle(features, values):
    totals = dict.fromkeys(features, 0.0)
    for order in permutations(features):
        seen = frozenset()
        for name in order:
            totals[name] += values[seen | {name}] - values[seen]
            seen = seen | {name}
    return {name: total / factorial(len(features)) for name, total in totals.items()}


def test_toy_game_from_fixture():
    document = json.loads(fixture_path("shapley_game.json").read_text())
    values = {frozenset(key.split(",")) if key else frozenset(): value for key, value in document["values"].items()}
    phi = shapley_exact(table_game(document["features"], values))
    assert phi["1"] == pytest.approx(11 / 6)
    assert phi["2"] == pytest.approx(17 / 6)
    assert phi["3"] == pytest.approx(1 / 3)
    assert sum(phi.values()) == pytest.approx(5.0)


def test_matches_permutation_average():
    features, values = random_game(5, seed=3)
    phi = shapley_exact(table_game(features, values))
    oracle = permutation_oracle(features, values)
    for name in features:
        assert phi[name] == pytest.approx(oracle[name], abs=1e-12)


def test_efficiency():
    features, values = random_game(6, seed=4)
    phi = shapley_exact(table_game(features, values))
    assert sum(phi.values()) == pytest.approx(values[frozenset(features)] - values[frozenset()], abs=1e-12)


def test_symmetric_and_dummy_players():
    features = ["a", "b", "dummy"]

    def evaluate(subset):
        return 3.0 * ("a" in subset) + 3.0 * ("b" in subset) + 2.0 * ("a" in subset and "b" in subset)

    phi = shapley_exact(ShapleyConfig(features, evaluate))
    assert phi["a"] == pytest.approx(phi["b"])
    assert phi["dummy"] == 0.0


def test_from_baseline():
    config = ShapleyConfig.from_baseline(["x", "y"], {"x": 2.0, "y": 3.0}, {"x": 0.0, "y": 0.0},
                                         lambda values: values["x"] * values["y"])
    phi = shapley_exact(config)
    assert phi["x"] == pytest.approx(3.0)
    assert phi["y"] == pytest.approx(3.0)


def test_empty_and_oversized_games():
    assert shapley_exact(ShapleyConfig([], lambda subset: 0.0)) == {}
    with pytest.raises(RangeError):
        shapley_exact(ShapleyConfig([f"f{i}" for i in range(21)], lambda subset: 0.0))


def test_failed_coalition_is_reported():
    def evaluate(subset):
        if subset == frozenset({"a", "b"}):
            raise ValueError("no model for this coalition")
        return 0.0

    with pytest.raises(AttributionError) as error:
        shapley_exact(ShapleyConfig(["a", "b"], evaluate))
    assert error.value.subset == frozenset({"a", "b"})


def test_traditional_advantage():
    flagged = traditional_advantage({"Diving": 0.6, "Judo": 0.4, "Rowing": 0.1, "Archery": 0.4})
    assert flagged == [("Diving", 0.6, "maintain"), ("Archery", 0.4, "evaluate"), ("Judo", 0.4, "evaluate")]


def test_state_groups_and_top_sports():
    index = SportIndex()
    athletes = np.zeros((71, 5))
    athletes[index.row("Judo")] = 2.0
    athletes[index.row("Diving")] = 1.0
    state = assemble(athletes, np.zeros((10, 5)), host_row(False))
    assert top_sports(state, index, 5) == ["Judo", "Diving"]
    assert top_sports(state, index, 1) == ["Judo"]

    groups = default_state_groups(index, ["Judo", "Diving"])
    assert list(groups) == ["sport:Judo", "sport:Diving", "other_sports", "team_history", "host"]
    assert len(groups["other_sports"]) == 69
    assert groups["team_history"] == list(range(71, 81))
    assert groups["host"] == [81]


def test_state_attribution_is_zero_for_a_constant_model():
    codebook = EmbeddingCodebook()
    params = LstmParams.initialize(410, 4, 50, np.random.default_rng(0))
    params.W_y[...] = 0.0
    params.b_y[...] = codebook.team_matrix(MedalTally("USA", 2024, 9, 1, 1, athletes=10, events=3)).reshape(-1)
    params.trained = True
    index = SportIndex()
    athletes = np.zeros((71, 5))
    athletes[index.row("Judo")] = 1.0
    history = [np.zeros((82, 5)), assemble(athletes, np.ones((10, 5)), host_row(True))]

    phi = state_attribution(params, history, np.zeros((82, 5)), default_state_groups(index, ["Judo"]), codebook, k=1)
    assert set(phi) == {"sport:Judo", "other_sports", "team_history", "host"}
    assert all(value == 0.0 for value in phi.values())
