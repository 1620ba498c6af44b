"""Hybrid ARIMA-LSTM orchestration over the per-country state matrices.

Modes:
  hybrid     team block of X_t holds the ARIMA forecast of N_t fitted on the Games before t, in
             training and at inference; the LSTM output is added to that forecast
  lstm_only  team block holds the last known N_{t-1}; the LSTM output is the forecast
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from app.models.arima import ChannelwiseResult, fit_channelwise
from app.models.interval_decoder import MEDAL_FEATURES, decode_team_output
from app.models.lstm import LstmParams, TrainConfig, loss_mae, loss_rmse, predict_next, train
from app.models.pca import ProjectionMatrix, fit_projection
from app.models.state_matrix import ATHLETE_ROWS, SportIndex, accumulate_athletes, assemble, host_row
from app.utils.constants import ARIMA_MIN_ROWS, SCALAR_DOMAINS, SPORTS, TEAM_FEATURES
from app.utils.encoding_utils import EmbeddingCodebook, build_codebook, summarize_athletes
from app.utils.exceptions import InsufficientDataError, ModelStateError, RangeError
from app.utils.seed_utils import stream_rng

HYBRID = "hybrid"
LSTM_ONLY = "lstm_only"
MODES = (HYBRID, LSTM_ONLY)
# flattened offset of the team block inside a state matrix
TEAM_OFFSET = ATHLETE_ROWS * len(TEAM_FEATURES)


@dataclass
class CountrySeries:
    noc: str
    years: List[int]
    athlete_blocks: List[np.ndarray]
    team_blocks: List[np.ndarray]
    counts: np.ndarray
    hosts: List[bool]
    arima_blocks: Optional[List[np.ndarray]] = None

    def team_history(self, upto: int) -> np.ndarray:
        return np.stack([block.reshape(-1) for block in self.team_blocks[:upto]])

    def arima_block(self, t: int) -> np.ndarray:
        if self.arima_blocks is None or t >= len(self.arima_blocks):
            raise ModelStateError(f"{self.noc} has no rolling ARIMA forecast for Games {t}; attach_arima first")
        return self.arima_blocks[t]


@dataclass
class FeatureSet:
    codebook: EmbeddingCodebook
    projection: Optional[ProjectionMatrix]
    sport_index: SportIndex
    calendar: List[int]
    series: Dict[str, CountrySeries]
    athlete_scale: float = 1.0

    @property
    def countries(self) -> List[str]:
        return sorted(self.series)


@dataclass
class HoldoutResult:
    mode: str
    rmse: float
    mae: float
    accuracy: float
    rows: List[dict] = field(default_factory=list)
    params: Optional[LstmParams] = None
    losses: List[float] = field(default_factory=list)


def train_config(cfg, seed: Optional[int] = None, mode: str = LSTM_ONLY) -> TrainConfig:
    return TrainConfig(
        epochs=cfg.epochs,
        learning_rate=cfg.lr,
        grad_clip=cfg.clip,
        seed=cfg.seed if seed is None else seed,
        init_scale=cfg.init_scale,
        forget_bias=cfg.forget_bias,
        hidden_dim=cfg.hidden,
        skip_start=TEAM_OFFSET if mode == HYBRID else None,
    )


def build_features(panel, athletes, cfg, codebook: Optional[EmbeddingCodebook] = None,
                   projection: Optional[ProjectionMatrix] = None, athlete_scale: Optional[float] = None) -> FeatureSet:
    calendar = list(panel.years)
    if len(calendar) < 2:
        raise InsufficientDataError(f"need at least 2 held Games, got {len(calendar)}")
    index = SportIndex(SPORTS)
    held = set(calendar)
    athletes = [record for record in athletes if record.year in held]
    full = summarize_athletes(athletes, calendar=calendar, max_consecutive=cfg.max_consecutive)

    if codebook is None:
        codebook = build_codebook(
            full,
            nocs=panel.countries,
            sports={record.sport for record in athletes},
            max_edition=max((record.edition for record in athletes), default=1),
            max_games=len(calendar),
            seed=cfg.seed,
            dim=cfg.embedding_dim,
        )
    if projection is None:
        projection = fit_projection([codebook.athlete_vector(summary) for summary in full], cfg.pca_k)

    blocks = {noc: [] for noc in panel.countries}
    for year in calendar:
        known = summarize_athletes(athletes, up_to_year=year, calendar=calendar, max_consecutive=cfg.max_consecutive)
        for noc in panel.countries:
            blocks[noc].append(accumulate_athletes(noc, year, known, codebook, projection, index, calendar, cfg.window))

    series = {}
    for noc in panel.countries:
        entries = panel.series(noc)
        series[noc] = CountrySeries(
            noc=noc,
            years=calendar,
            athlete_blocks=blocks[noc],
            team_blocks=[codebook.team_matrix(entry) for entry in entries],
            counts=np.array([[getattr(entry, feature) for feature in TEAM_FEATURES] for entry in entries]),
            hosts=[entry.is_host for entry in entries],
        )
    if athlete_scale is None:
        athlete_scale = max((float(np.max(np.abs(b))) for s in series.values() for b in s.athlete_blocks), default=0.0) or 1.0
    logging.info(f"Built features for {len(series)} countries over {len(calendar)} Games")
    return FeatureSet(codebook, projection, index, calendar, series, athlete_scale)


def _state(features: FeatureSet, country: CountrySeries, athletes_at: int, team: np.ndarray, hosting: bool) -> np.ndarray:
    return assemble(country.athlete_blocks[athletes_at] / features.athlete_scale, team, host_row(hosting))


def country_states(features: FeatureSet, noc: str, mode: str, upto: int) -> List[np.ndarray]:
    """States X_1..X_{upto-1}; X_t carries the athletes known after Games t-1."""
    if mode not in MODES:
        raise RangeError(f"unknown mode '{mode}'")
    country = features.series[noc]
    states = []
    for t in range(1, upto):
        team = country.arima_block(t) if mode == HYBRID else country.team_blocks[t - 1]
        states.append(_state(features, country, t - 1, team, country.hosts[t]))
    return states


def build_sequences(features: FeatureSet, mode: str, upto: Optional[int] = None) -> List[Tuple[np.ndarray, np.ndarray]]:
    upto = len(features.calendar) if upto is None else upto
    if upto < 2:
        raise InsufficientDataError("training sequences need at least 2 Games")
    dataset = []
    for noc in features.countries:
        inputs = np.stack([state.reshape(-1) for state in country_states(features, noc, mode, upto)])
        targets = np.stack([block.reshape(-1) for block in features.series[noc].team_blocks[1:upto]])
        dataset.append((inputs, targets))
    return dataset


def arima_forecast(country: CountrySeries, upto: int, cfg) -> ChannelwiseResult:
    return fit_channelwise(country.team_history(upto), d=cfg.d, max_p=cfg.max_p, max_q=cfg.max_q, criterion=cfg.criterion)


def rolling_arima(country: CountrySeries, cfg) -> Tuple[List[np.ndarray], ChannelwiseResult]:
    """Entry t is the ARIMA forecast of N_t from the Games before t, for t up to the next Games.

    Games with fewer than ARIMA_MIN_ROWS predecessors carry the previous row forward; entry 0 holds
    the first row. The second value is the fit behind the next-Games forecast.
    """
    last = len(country.team_blocks)
    blocks = [country.team_blocks[0].copy()]
    result = None
    for t in range(1, last + 1):
        if t < ARIMA_MIN_ROWS and t < last:
            blocks.append(country.team_blocks[t - 1].copy())
            continue
        result = arima_forecast(country, t, cfg)
        blocks.append(np.clip(result.forecast, -1.0, 1.0))
    return blocks, result


def attach_arima(features: FeatureSet, cfg, mapper: Callable = map) -> Dict[str, ChannelwiseResult]:
    """Fill every country's rolling ARIMA inputs; returns the next-Games fits by country."""
    countries = [features.series[noc] for noc in features.countries]
    results = {}
    for country, (blocks, result) in zip(countries, mapper(lambda country: rolling_arima(country, cfg), countries)):
        country.arima_blocks = blocks
        results[country.noc] = result
    logging.info(f"Rolling ARIMA inputs ready for {len(countries)} countries")
    return results


def state_baseline(features: FeatureSet, mode: str, upto: Optional[int] = None) -> np.ndarray:
    """Mean of the training states over every country and Games."""
    upto = len(features.calendar) if upto is None else upto
    states = [state for noc in features.countries for state in country_states(features, noc, mode, upto)]
    if not states:
        raise InsufficientDataError("no training states to average")
    return np.mean(states, axis=0)


def next_states(features: FeatureSet, noc: str, mode: str, upto: int, n_hat: Optional[np.ndarray] = None,
                host_next: bool = False) -> List[np.ndarray]:
    """Known states followed by the state for Games ``upto``."""
    country = features.series[noc]
    if mode == HYBRID:
        team = country.arima_block(upto) if n_hat is None else np.clip(n_hat, -1.0, 1.0)
    else:
        team = country.team_blocks[upto - 1]
    return country_states(features, noc, mode, upto) + [_state(features, country, upto - 1, team, host_next)]


def forecast_next(features: FeatureSet, noc: str, params: LstmParams, mode: str, upto: int,
                  n_hat: Optional[np.ndarray] = None, host_next: bool = False) -> np.ndarray:
    return predict_next(params, next_states(features, noc, mode, upto, n_hat, host_next))


def train_model(features: FeatureSet, cfg, mode: str, upto: Optional[int] = None, seed: Optional[int] = None):
    tcfg = train_config(cfg, seed, mode)
    rng = stream_rng(tcfg.seed, f"lstm:{mode}")
    return train(build_sequences(features, mode, upto), tcfg, rng)


def evaluate_holdout(features: FeatureSet, cfg, mode: str, seed: Optional[int] = None, mapper: Callable = map) -> HoldoutResult:
    """Train on every Games but the last, then forecast the last Games of each country."""
    last = len(features.calendar) - 1
    if last < 2:
        raise InsufficientDataError("holdout evaluation needs at least 3 Games")
    if mode == HYBRID and any(features.series[noc].arima_blocks is None for noc in features.countries):
        attach_arima(features, cfg, mapper)
    result = train_model(features, cfg, mode, upto=last, seed=seed)

    predicted, actual, rows = [], [], []
    hits = total = 0
    for noc in features.countries:
        country = features.series[noc]
        vector = forecast_next(features, noc, result.params, mode, last, host_next=country.hosts[last])
        truth = country.team_blocks[last].reshape(-1)
        predicted.append(vector)
        actual.append(truth)
        intervals = decode_team_output(vector, features.codebook, cfg.knn_k, MEDAL_FEATURES)
        row = {"noc": noc, "year": features.calendar[last], "rmse": loss_rmse(truth, vector)}
        for feature, interval in intervals.items():
            true_count = int(country.counts[last][TEAM_FEATURES.index(feature)])
            hit = interval.contains(true_count)
            hits += hit
            total += 1
            row.update({f"{feature}_lo": interval.lo, f"{feature}_hi": interval.hi, f"{feature}_true": true_count})
        rows.append(row)

    return HoldoutResult(
        mode=mode,
        rmse=loss_rmse(np.array(actual), np.array(predicted)),
        mae=loss_mae(np.array(actual), np.array(predicted)),
        accuracy=hits / total if total else 0.0,
        rows=rows,
        params=result.params,
        losses=result.losses,
    )


def synthetic_dataset(seed: int, n_countries: int = 5, n_games: int = 12, phi: float = 0.6) -> FeatureSet:
    """Team counts follow AR(1) around a linear trend; a few sport rows carry tanh of the gold count."""
    rng = stream_rng(seed, "synthetic")
    codebook = EmbeddingCodebook(seed=seed)
    index = SportIndex(SPORTS)
    calendar = [1976 + 4 * i for i in range(n_games)]
    series = {}
    for c in range(n_countries):
        noc = f"S{c:02d}"
        level = rng.uniform(5, 30, size=len(TEAM_FEATURES))
        slope = rng.uniform(-0.5, 1.5, size=len(TEAM_FEATURES))
        noise = np.zeros(len(TEAM_FEATURES))
        counts = []
        for t in range(n_games):
            noise = phi * noise + rng.normal(0, 1.5, size=len(TEAM_FEATURES))
            counts.append(level + slope * t + noise)
        limits = np.array([SCALAR_DOMAINS[feature] for feature in TEAM_FEATURES])
        counts = np.clip(np.rint(counts), 0, limits).astype(int)
        rows = rng.choice(len(index), size=3, replace=False)
        pattern = rng.normal(size=(3, len(TEAM_FEATURES)))
        athlete_blocks = []
        for t in range(n_games):
            m = np.zeros((len(index), len(TEAM_FEATURES)))
            m[rows] = np.tanh(counts[t][0] / 10.0) * pattern
            athlete_blocks.append(m)
        team_blocks = [np.column_stack([codebook.embed_scalar(f, int(v)) for f, v in zip(TEAM_FEATURES, row)]) for row in counts]
        hosts = [False] * n_games
        series[noc] = CountrySeries(noc, calendar, athlete_blocks, team_blocks, counts, hosts)
    return FeatureSet(codebook, None, index, calendar, series, athlete_scale=1.0)
