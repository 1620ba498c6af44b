from dataclasses import dataclass
from typing import Dict

import numpy as np
import pandas as pd


@dataclass
class GenderTrend:
    table: pd.DataFrame
    totals: Dict[str, int]


def gender_trend(records) -> GenderTrend:
    """Medal-winning entries by sex per Games year, with the male/female ratio."""
    frame = pd.DataFrame([(r.year, r.sex, r.medal) for r in records], columns=["year", "sex", "medal"])
    medalists = frame[(frame["medal"] != "NoMedal") & frame["sex"].isin(["M", "F"])]
    counts = (
        medalists.groupby(["year", "sex"]).size().unstack(fill_value=0)
        .reindex(index=sorted(frame["year"].unique()), columns=["M", "F"], fill_value=0)
    )
    table = pd.DataFrame({
        "year": counts.index.astype(int),
        "male": counts["M"].to_numpy(dtype=int),
        "female": counts["F"].to_numpy(dtype=int),
    })
    with np.errstate(divide="ignore", invalid="ignore"):
        table["ratio"] = table["male"] / table["female"].replace(0, np.nan)
    table.loc[(table["female"] == 0) & (table["male"] > 0), "ratio"] = np.inf
    table["ratio_defined"] = table["female"] > 0
    return GenderTrend(table=table, totals={"male": int(table["male"].sum()), "female": int(table["female"].sum())})
