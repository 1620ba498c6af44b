"""Ablation (hybrid vs lstm_only) and data-reduction sensitivity experiments."""
import logging
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

from app.models.pipeline import HYBRID, LSTM_ONLY, FeatureSet, attach_arima, build_features, evaluate_holdout
from app.utils.constants import SENSITIVITY_FRACTIONS
from app.utils.csv_utils import subsample_athletes
from app.utils.exceptions import RangeError
from app.utils.seed_utils import stream_rng


@dataclass
class AblationReport:
    table: pd.DataFrame
    summary: Dict[str, Dict[str, float]]
    hybrid_wins: int


@dataclass
class SensitivityReport:
    fractions: Tuple[float, ...]
    grids: Dict[int, pd.DataFrame]
    monotone_seeds: int
    full_accuracy: Dict[int, float] = field(default_factory=dict)

    def mean_grid(self) -> pd.DataFrame:
        return sum(self.grids.values()) / len(self.grids)


def ablation_run(features: FeatureSet, cfg, seeds: Sequence[int], mapper: Callable = map) -> AblationReport:
    # the rolling ARIMA inputs do not depend on the seed
    attach_arima(features, cfg, mapper)
    rows = []
    for seed in seeds:
        row = {"seed": seed}
        for mode in (HYBRID, LSTM_ONLY):
            result = evaluate_holdout(features, cfg, mode, seed=seed)
            row[f"{mode}_rmse"] = result.rmse
            row[f"{mode}_mae"] = result.mae
            row[f"{mode}_accuracy"] = result.accuracy
        rows.append(row)
        logging.info(f"Ablation seed {seed}: hybrid rmse={row['hybrid_rmse']:.4f} lstm_only rmse={row['lstm_only_rmse']:.4f}")
    table = pd.DataFrame(rows)
    summary = {
        mode: {"rmse": float(table[f"{mode}_rmse"].mean()), "mae": float(table[f"{mode}_mae"].mean())}
        for mode in (HYBRID, LSTM_ONLY)
    }
    wins = int(np.count_nonzero(table["hybrid_rmse"] <= table["lstm_only_rmse"]))
    return AblationReport(table=table, summary=summary, hybrid_wins=wins)


def reduce_years(years: Sequence[int], fraction: float, rng: np.random.Generator) -> List[int]:
    """Seeded subset of Games; the last two are always kept so a holdout remains."""
    years = sorted(years)
    if fraction >= 1.0:
        return years
    keep = max(3, int(round(fraction * len(years))))
    earlier = years[:-2]
    chosen = rng.choice(len(earlier), size=min(keep - 2, len(earlier)), replace=False)
    return sorted([earlier[i] for i in chosen] + years[-2:])


def reduced_accuracy(panel, athletes, cfg, seed: int, athlete_fraction: float, history_fraction: float) -> float:
    for fraction in (athlete_fraction, history_fraction):
        if not 0.0 < fraction <= 1.0:
            raise RangeError(f"fraction must be in (0, 1], got {fraction}")
    rng = stream_rng(seed, f"sensitivity:{athlete_fraction}:{history_fraction}")
    kept_athletes = subsample_athletes(athletes, athlete_fraction, rng)
    kept_panel = panel.restrict_years(reduce_years(panel.years, history_fraction, rng))
    features = build_features(kept_panel, kept_athletes, cfg)
    return evaluate_holdout(features, cfg, HYBRID, seed=seed).accuracy


def sensitivity_grid(panel, athletes, cfg, seeds: Sequence[int], fractions: Sequence[float] = SENSITIVITY_FRACTIONS,
                     mapper: Callable = map) -> SensitivityReport:
    fractions = tuple(fractions)
    for fraction in fractions:
        if not 0.0 < fraction <= 1.0:
            raise RangeError(f"fraction must be in (0, 1], got {fraction}")
    cells = list(product(seeds, fractions, fractions))
    accuracies = list(mapper(lambda cell: reduced_accuracy(panel, athletes, cfg, *cell), cells))

    grids = {}
    for seed in seeds:
        grid = pd.DataFrame(index=pd.Index(fractions, name="athlete_fraction"),
                            columns=pd.Index(fractions, name="history_fraction"), dtype=float)
        grids[seed] = grid
    for (seed, athlete_fraction, history_fraction), accuracy in zip(cells, accuracies):
        grids[seed].loc[athlete_fraction, history_fraction] = accuracy

    monotone = 0
    for grid in grids.values():
        diagonal = [grid.loc[f, f] for f in fractions]
        monotone += all(later <= earlier for earlier, later in zip(diagonal, diagonal[1:]))
    full = {seed: float(grids[seed].loc[fractions[0], fractions[0]]) for seed in seeds}
    logging.info(f"Sensitivity diagonal non-increasing in {monotone} of {len(seeds)} seeds")
    return SensitivityReport(fractions=fractions, grids=grids, monotone_seeds=monotone, full_accuracy=full)
