from bisect import bisect_left
from typing import Iterable, List, Sequence

import numpy as np
import pandas as pd

from app.models.pca import ProjectionMatrix, project
from app.utils.constants import HOST_ROW_INDEX, SLIDING_WINDOW, SPORTS, STATE_ROWS, TEAM_FEATURES, TEAM_ROWS, UNKNOWN_SPORT_ERROR
from app.utils.exceptions import ConsistencyError, ShapeError, UnknownSportError

ATHLETE_ROWS = len(SPORTS)
TEAM_SLICE = slice(ATHLETE_ROWS, ATHLETE_ROWS + TEAM_ROWS)


class SportIndex:
    def __init__(self, sports: Sequence[str] = SPORTS):
        self.sports = tuple(sports)
        self._rows = {sport: row for row, sport in enumerate(self.sports)}
        if len(self._rows) != len(self.sports):
            raise ShapeError("sport index has duplicate names")

    def __len__(self) -> int:
        return len(self.sports)

    def __contains__(self, sport: str) -> bool:
        return sport in self._rows

    def row(self, sport: str) -> int:
        if sport not in self._rows:
            raise UnknownSportError(UNKNOWN_SPORT_ERROR.format(sport=sport))
        return self._rows[sport]

    def sport(self, row: int) -> str:
        return self.sports[row]


def _calendar_position(calendar: Sequence[int], year: int) -> int:
    position = bisect_left(calendar, year)
    if position == len(calendar) or calendar[position] != year:
        raise ConsistencyError(f"{year} is not a held Games year")
    return position


def active_athletes(summaries: Iterable, year: int, calendar: Sequence[int], window: int = SLIDING_WINDOW) -> List:
    """Athletes whose latest appearance up to ``year`` falls within the last ``window`` Games."""
    t = _calendar_position(calendar, year)
    active = []
    for summary in summaries:
        seen = [y for y in summary.years if y <= year]
        if not seen:
            continue
        if _calendar_position(calendar, seen[-1]) >= t - window + 1:
            active.append(summary)
    return active


def accumulate_athletes(noc: str, year: int, summaries: Iterable, codebook, p: ProjectionMatrix,
                        index: SportIndex, calendar: Sequence[int], window: int = SLIDING_WINDOW) -> np.ndarray:
    m = np.zeros((len(index), p.k))
    country = [s for s in summaries if s.noc == noc]
    for summary in active_athletes(country, year, calendar, window):
        reduced = project(codebook.athlete_vector(summary), p)
        for sport in summary.sports:
            m[index.row(sport)] += reduced
    return m


def host_row(is_host_next: bool, width: int = len(TEAM_FEATURES)) -> np.ndarray:
    return np.ones(width) if is_host_next else np.zeros(width)


def assemble(m: np.ndarray, n: np.ndarray, host: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    n = np.asarray(n, dtype=float)
    host = np.asarray(host, dtype=float).reshape(1, -1)
    width = len(TEAM_FEATURES)
    if m.shape != (ATHLETE_ROWS, width) or n.shape != (TEAM_ROWS, width) or host.shape != (1, width):
        raise ShapeError(f"cannot assemble {m.shape} + {n.shape} + {host.shape} into ({STATE_ROWS}, {width})")
    return np.vstack([m, n, host])


def athlete_block(x: np.ndarray) -> np.ndarray:
    return x[:ATHLETE_ROWS]


def team_block(x: np.ndarray) -> np.ndarray:
    return x[TEAM_SLICE]


def with_host(x: np.ndarray, is_host_next: bool) -> np.ndarray:
    flipped = x.copy()
    flipped[HOST_ROW_INDEX] = host_row(is_host_next, x.shape[1])
    return flipped


def with_team(x: np.ndarray, n: np.ndarray) -> np.ndarray:
    replaced = x.copy()
    replaced[TEAM_SLICE] = n
    return replaced


def state_frame(x: np.ndarray, index: SportIndex) -> pd.DataFrame:
    labels = list(index.sports) + [f"team_{i}" for i in range(TEAM_ROWS)] + ["host"]
    frame = pd.DataFrame(x, columns=[f"c{j}" for j in range(x.shape[1])])
    frame.insert(0, "row", labels)
    return frame
