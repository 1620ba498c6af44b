import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from app.analytics.stat_tests import binarize_by_mean
from app.utils.exceptions import DataIOError, InsufficientDataError, PartitionError, RangeError, SchemaError, UndefinedTestError

LOOKBACK = 4


@dataclass
class CoachEffectResult:
    rmse_coach: float
    rmse_base: float
    effect: float
    e_coach: Optional[float] = None
    index_coach: Optional[float] = None


@dataclass(frozen=True)
class ContingencyTable2x2:
    n11: int
    n12: int
    n21: int
    n22: int

    def as_array(self) -> np.ndarray:
        return np.array([[self.n11, self.n12], [self.n21, self.n22]])


def _rmse(errors: np.ndarray) -> float:
    return float(np.sqrt(np.mean(errors ** 2)))


def effect_from_rmse(rmse_coach: float, rmse_base: float) -> CoachEffectResult:
    return CoachEffectResult(rmse_coach=rmse_coach, rmse_base=rmse_base, effect=rmse_coach - rmse_base)


def coach_effect_rmse(predictions, actuals, years: Sequence[int], coach_years: Iterable[int]) -> CoachEffectResult:
    predictions = np.asarray(predictions, dtype=float)
    actuals = np.asarray(actuals, dtype=float)
    if predictions.shape != actuals.shape or len(predictions) != len(years):
        raise RangeError("predictions, actuals and years must align")
    coached = np.isin(np.asarray(years), list(coach_years))
    if not coached.any() or coached.all():
        raise PartitionError("coach years must split the series into two non-empty parts")
    errors = predictions - actuals
    return effect_from_rmse(_rmse(errors[coached]), _rmse(errors[~coached]))


def coach_effect_coefficient(series) -> float:
    x = np.asarray(series, dtype=float)
    if len(x) <= LOOKBACK:
        raise InsufficientDataError(f"coach effect coefficient needs more than {LOOKBACK} values, got {len(x)}")
    contributions = []
    for t in range(LOOKBACK, len(x)):
        trailing = x[t - LOOKBACK:t].mean()
        if trailing == 0:
            continue
        relative = (x[t] - trailing) / trailing
        window = x[t:t + LOOKBACK]
        if relative > 0:
            sustained = np.count_nonzero(window > trailing)
        elif relative < 0:
            sustained = np.count_nonzero(window < trailing)
        else:
            sustained = 0
        # the window is clipped at the series end but the divisor stays 4
        contributions.append(abs(relative * sustained / LOOKBACK))
    if not contributions:
        raise UndefinedTestError("every trailing mean is zero; the coefficient is undefined")
    return float(max(contributions))


def coach_impact_index(v_p: float, e_coach: float) -> float:
    if v_p < 0:
        raise RangeError(f"performance value must be non-negative, got {v_p}")
    return v_p * (1.0 + e_coach)


def coach_contingency_table(series, years: Sequence[int], coach_start: int) -> ContingencyTable2x2:
    """Rows: before / from the coach's arrival. Columns: above / not above the series mean."""
    above = binarize_by_mean(series).astype(bool)
    after = np.asarray(years) >= coach_start
    return ContingencyTable2x2(
        n11=int(np.count_nonzero(~after & above)),
        n12=int(np.count_nonzero(~after & ~above)),
        n21=int(np.count_nonzero(after & above)),
        n22=int(np.count_nonzero(after & ~above)),
    )


def sport_medal_series(records, noc: str, years: Sequence[int]) -> Dict[str, List[int]]:
    """Medal-winning entries of one country per sport and Games."""
    frame = pd.DataFrame(
        [(r.sport, r.year) for r in records if r.noc == noc and r.medal != "NoMedal"],
        columns=["sport", "year"],
    )
    if frame.empty:
        return {}
    table = frame.groupby(["sport", "year"]).size().unstack(fill_value=0).reindex(columns=list(years), fill_value=0)
    return {sport: [int(v) for v in row] for sport, row in table.iterrows()}


def coach_investment_ranking(importance: Sequence[Tuple[str, float]], sport_series: Mapping[str, Sequence[int]],
                             top: int = 3) -> List[Tuple[str, float, float, float]]:
    """Sports ranked by V_p x (1 + E_coach); sports without a usable series count as E_coach = 0."""
    ranked = []
    for sport, v_p in importance:
        try:
            e_coach = coach_effect_coefficient(sport_series.get(sport, []))
        except (InsufficientDataError, UndefinedTestError) as e:
            logging.info(f"No coach coefficient for {sport}: {e}")
            e_coach = 0.0
        ranked.append((sport, v_p, e_coach, coach_impact_index(v_p, e_coach)))
    ranked.sort(key=lambda row: (-row[3], row[0]))
    return ranked[:top]


def load_coach_years(path) -> pd.DataFrame:
    """CSV of coaching periods with columns noc, sport, coach, start, end."""
    try:
        frame = pd.read_csv(path, dtype={"noc": str, "sport": str, "coach": str})
    except OSError as e:
        raise DataIOError(f"cannot read {path}: {e}") from e
    frame.columns = [str(column).strip().lower() for column in frame.columns]
    for column in ("noc", "sport", "start", "end"):
        if column not in frame.columns:
            raise SchemaError(f"missing required column '{column}' in {path}")
    return frame


def coach_years_of(periods: pd.DataFrame, noc: str, sport: str, years: Sequence[int]) -> List[int]:
    chosen = periods[(periods["noc"] == noc) & (periods["sport"] == sport)]
    return [year for year in years if any(start <= year <= end for start, end in zip(chosen["start"], chosen["end"]))]
