"""Exact Shapley attribution by coalition enumeration."""
import logging
from dataclasses import dataclass
from math import factorial
from typing import Callable, Dict, FrozenSet, List, Mapping, Sequence, Tuple

import numpy as np

from app.models.interval_decoder import decode_team_output
from app.models.lstm import LstmParams, predict_next
from app.models.state_matrix import ATHLETE_ROWS, TEAM_SLICE, SportIndex, athlete_block
from app.utils.constants import (
    HOST_ROW_INDEX,
    KNN_K,
    SHAPLEY_MAX_FEATURES,
    TRADITIONAL_ADVANTAGE_STRONG,
    TRADITIONAL_ADVANTAGE_THRESHOLD,
)
from app.utils.exceptions import AttributionError, RangeError


@dataclass
class ShapleyConfig:
    features: Sequence[str]
    evaluate: Callable[[FrozenSet[str]], float]

    @classmethod
    def from_baseline(cls, features: Sequence[str], instance: Mapping, baseline: Mapping,
                      model: Callable[[Dict], float]) -> "ShapleyConfig":
        """Features outside a coalition take their baseline value."""

        def evaluate(subset: FrozenSet[str]) -> float:
            return model({name: instance[name] if name in subset else baseline[name] for name in features})

        return cls(list(features), evaluate)


def shapley_exact(config: ShapleyConfig) -> Dict[str, float]:
    features = list(config.features)
    n = len(features)
    if n > SHAPLEY_MAX_FEATURES:
        raise RangeError(f"exact Shapley supports at most {SHAPLEY_MAX_FEATURES} features, got {n}")
    if n == 0:
        return {}

    values = np.empty(1 << n)
    for mask in range(1 << n):
        subset = frozenset(features[i] for i in range(n) if mask >> i & 1)
        try:
            values[mask] = config.evaluate(subset)
        except Exception as e:
            raise AttributionError(f"evaluation failed on coalition {sorted(subset)}: {e}", subset=subset) from e

    masks = np.arange(1 << n)
    sizes = np.array([bin(mask).count("1") for mask in range(1 << n)])
    weights = np.array([factorial(s) * factorial(n - s - 1) / factorial(n) if s < n else 0.0 for s in range(n + 1)])
    attributions = {}
    for i, name in enumerate(features):
        without = masks[(masks >> i & 1) == 0]
        attributions[name] = float(np.sum(weights[sizes[without]] * (values[without | 1 << i] - values[without])))
    return attributions


def traditional_advantage(attributions: Mapping[str, float], threshold: float = TRADITIONAL_ADVANTAGE_THRESHOLD,
                          strong: float = TRADITIONAL_ADVANTAGE_STRONG) -> List[Tuple[str, float, str]]:
    flagged = [(name, value) for name, value in attributions.items() if value > threshold]
    flagged.sort(key=lambda item: (-item[1], item[0]))
    return [(name, value, "maintain" if value > strong else "evaluate") for name, value in flagged]


def default_state_groups(index: SportIndex, sports: Sequence[str]) -> Dict[str, List[int]]:
    """One group per named sport, the remaining sport rows, the team history rows and the host row."""
    named = [index.row(sport) for sport in sports]
    groups = {f"sport:{sport}": [row] for sport, row in zip(sports, named)}
    others = [row for row in range(ATHLETE_ROWS) if row not in named]
    if others:
        groups["other_sports"] = others
    groups["team_history"] = list(range(TEAM_SLICE.start, TEAM_SLICE.stop))
    groups["host"] = [HOST_ROW_INDEX]
    return groups


def top_sports(state, index: SportIndex, top: int) -> List[str]:
    norms = np.linalg.norm(athlete_block(np.asarray(state)), axis=1)
    rows = [row for row in np.argsort(-norms, kind="stable")[:top] if norms[row] > 0]
    return [index.sport(row) for row in rows]


def state_attribution(params: LstmParams, history: Sequence[np.ndarray], baseline: np.ndarray,
                      groups: Mapping[str, Sequence[int]], codebook, k: int = KNN_K) -> Dict[str, float]:
    """Shapley values of state-row groups on the decoded gold midpoint of the next Games."""
    last = np.asarray(history[-1], dtype=float)

    def gold_midpoint(subset: FrozenSet[str]) -> float:
        state = np.array(baseline, dtype=float)
        for name in subset:
            rows = list(groups[name])
            state[rows] = last[rows]
        vector = predict_next(params, list(history[:-1]) + [state])
        return decode_team_output(vector, codebook, k, ("gold",))["gold"].midpoint

    attributions = shapley_exact(ShapleyConfig(list(groups), gold_midpoint))
    logging.info(f"Attributed gold midpoint over {len(groups)} state groups")
    return attributions
