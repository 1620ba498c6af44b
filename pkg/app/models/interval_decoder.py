from dataclasses import dataclass
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np
from scipy.special import expit
from sortedcontainers import SortedList

from app.models.lstm import LstmParams, predict_next
from app.models.state_matrix import SportIndex, athlete_block, with_host
from app.utils.constants import KNN_K, LOGISTIC_SLOPE, TEAM_FEATURES, TEAM_ROWS
from app.utils.exceptions import DegenerateError, RangeError, ShapeError

MEDAL_FEATURES = ("gold", "silver", "bronze")


@dataclass(frozen=True)
class PredictionInterval:
    lo: int
    hi: int
    nn_distances: Tuple[float, ...]

    @property
    def midpoint(self) -> float:
        return (self.lo + self.hi) / 2

    def contains(self, count: int) -> bool:
        return self.lo <= count <= self.hi


@dataclass(frozen=True)
class FirstMedalResult:
    noc: str
    probability: float
    predicted_first_medal: bool


@dataclass
class HostEffect:
    medal_baseline: Dict[str, float]
    medal_hosted: Dict[str, float]
    medal_deltas: Dict[str, float]
    sport_deltas: List[Tuple[str, float, float, float]]
    aggregate: float


def euclidean(x_q, x_i) -> float:
    x_q = np.asarray(x_q, dtype=float)
    x_i = np.asarray(x_i, dtype=float)
    if x_q.shape != x_i.shape:
        raise ShapeError(f"cannot compare vectors of shapes {x_q.shape} and {x_i.shape}")
    return float(np.sqrt(np.sum((x_q - x_i) ** 2)))


def codebook_entries(codebook, feature: str) -> List[Tuple[int, np.ndarray]]:
    counts, table = codebook.scalar_entries(feature)
    return list(zip(counts.tolist(), table))


def knn_interval(v, entries: Sequence[Tuple[int, np.ndarray]], k: int = KNN_K) -> PredictionInterval:
    if not 1 <= k <= len(entries):
        raise RangeError(f"k={k} needs a codebook of at least {k} entries, got {len(entries)}")
    # (distance, count) ordering settles equal distances toward the smaller count
    nearest = SortedList((euclidean(v, codeword), count) for count, codeword in entries)
    chosen = nearest[:k]
    counts = sorted(count for _, count in chosen)
    return PredictionInterval(lo=counts[0], hi=counts[-1], nn_distances=tuple(distance for distance, _ in chosen))


def first_medal_probability(v_total, entries: Sequence[Tuple[int, np.ndarray]], noc: str = "",
                            slope: float = LOGISTIC_SLOPE) -> FirstMedalResult:
    codewords = dict((count, codeword) for count, codeword in entries)
    if 0 not in codewords or 1 not in codewords:
        raise DegenerateError("first-medal decoding needs codewords for counts 0 and 1")
    d0 = euclidean(v_total, codewords[0])
    d1 = euclidean(v_total, codewords[1])
    if d0 + d1 == 0:
        raise DegenerateError("codewords for 0 and 1 coincide")
    u = (d0 - d1) / (d0 + d1)
    probability = float(expit(slope * u))
    return FirstMedalResult(noc=noc, probability=probability, predicted_first_medal=probability > 0.5)


def total_vector(n_hat) -> np.ndarray:
    """Mean of the gold, silver and bronze columns of a decoded 10x5 team matrix."""
    n_hat = np.asarray(n_hat, dtype=float).reshape(TEAM_ROWS, len(TEAM_FEATURES))
    return n_hat[:, :len(MEDAL_FEATURES)].mean(axis=1)


def decode_team_output(vector, codebook, k: int = KNN_K, features: Sequence[str] = TEAM_FEATURES) -> Dict[str, PredictionInterval]:
    n_hat = np.asarray(vector, dtype=float).reshape(TEAM_ROWS, len(TEAM_FEATURES))
    return {
        feature: knn_interval(n_hat[:, TEAM_FEATURES.index(feature)], codebook_entries(codebook, feature), k)
        for feature in features
    }


def sport_importance(state, index: SportIndex) -> List[Tuple[str, float]]:
    norms = np.linalg.norm(athlete_block(np.asarray(state, dtype=float)), axis=1)
    ranking = SortedList((-norm, row) for row, norm in enumerate(norms))
    return [(index.sport(row), -negative) for negative, row in ranking]


def _percent_change(baseline: float, hosted: float) -> float:
    if baseline == 0:
        return 0.0 if hosted == 0 else float("nan")
    return (hosted - baseline) / baseline * 100.0


def host_effect(params: LstmParams, history: Sequence[np.ndarray], index: SportIndex, codebook,
                k: int = KNN_K) -> HostEffect:
    """Decode the next Games twice, with the host row of the last state cleared and set."""
    runs = {}
    for hosting in (False, True):
        flipped = list(history[:-1]) + [with_host(history[-1], hosting)]
        decoded = decode_team_output(predict_next(params, flipped), codebook, k, MEDAL_FEATURES)
        midpoints = {feature: interval.midpoint for feature, interval in decoded.items()}
        midpoints["total"] = sum(midpoints.values())
        runs[hosting] = midpoints

    medal_deltas = {feature: _percent_change(runs[False][feature], runs[True][feature]) for feature in runs[False]}

    # national totals are spread over sports by their share of performance value
    shares = np.linalg.norm(athlete_block(history[-1]), axis=1)
    shares = shares / shares.sum() if shares.sum() > 0 else shares
    sport_deltas = []
    weighted = weights = 0.0
    for row, share in enumerate(shares):
        if share == 0:
            continue
        baseline = runs[False]["total"] * share
        hosted = runs[True]["total"] * share
        delta = _percent_change(baseline, hosted)
        sport_deltas.append((index.sport(row), baseline, hosted, delta))
        if np.isfinite(delta):
            weighted += baseline * delta
            weights += baseline
    aggregate = weighted / weights if weights > 0 else medal_deltas["total"]
    return HostEffect(medal_baseline=runs[False], medal_hosted=runs[True], medal_deltas=medal_deltas,
                      sport_deltas=sport_deltas, aggregate=aggregate)


def medal_change_ranking(predictions: Mapping[str, float], actuals: Mapping[str, float]) -> List[Tuple[str, float, float, float]]:
    ranking = SortedList(
        (-(predictions[noc] - actuals.get(noc, 0.0)), noc, predictions[noc], actuals.get(noc, 0.0))
        for noc in predictions
    )
    return [(noc, predicted, actual, -negative) for negative, noc, predicted, actual in ranking]
