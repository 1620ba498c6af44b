import argparse
import logging
from typing import Dict, List

import pandas as pd

from app.commands.commands import REPORT_DIR, MedalcastCommand, load_trained_features, mode_of
from app.models.interval_decoder import (
    MEDAL_FEATURES,
    codebook_entries,
    decode_team_output,
    first_medal_probability,
    host_effect,
    medal_change_ranking,
    sport_importance,
    total_vector,
)
from app.models.lstm import LstmParams, loss_rmse, predict_next
from app.models.pipeline import HYBRID, FeatureSet, next_states
from app.utils.constants import EXIT_OK, GAMES_INTERVAL, SPORT_IMPORTANCE_TOP, TEAM_FEATURES
from app.utils.csv_utils import NocRegistry

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from app.AsyncHandler import AsyncCommandHandler

INTERVAL_COLUMNS = [f"{feature}_{part}" for feature in MEDAL_FEATURES for part in ("lo", "hi", "mid")]
PREDICTION_COLUMNS = ["noc", "year", "host"] + INTERVAL_COLUMNS + ["total_mid"]
FIRST_MEDAL_COLUMNS = ["noc", "year", "probability", "predicted_first_medal"]
HOST_EFFECT_COLUMNS = ["noc", "scope", "name", "baseline", "hosted", "delta_pct"]
IMPORTANCE_COLUMNS = ["noc", "rank", "sport", "v_p"]
BACKTEST_COLUMNS = ["noc", "year", "lstm_rmse", "arima_rmse"] + [
    f"{feature}_{part}" for feature in MEDAL_FEATURES for part in ("lo", "hi", "true", "hit")
]
MEDAL_CHANGE_COLUMNS = ["noc", "predicted_total", "last_total", "change"]


def _interval_row(intervals) -> dict:
    row = {}
    for feature, interval in intervals.items():
        row.update({f"{feature}_lo": interval.lo, f"{feature}_hi": interval.hi, f"{feature}_mid": interval.midpoint})
    return row


class PredictCommand(MedalcastCommand):
    async def execute(self, handler: 'AsyncCommandHandler', args: argparse.Namespace) -> int:
        config = handler.config
        store = handler.store
        mode = mode_of(config)
        features, lstm_document = load_trained_features(handler, mode)
        params = LstmParams.from_json(lstm_document)
        host_next = NocRegistry.load(config.registry).canonicalize(config.next_host) if config.next_host else None

        upto = len(features.calendar)
        next_year = features.calendar[-1] + GAMES_INTERVAL
        gold_entries = codebook_entries(features.codebook, "gold")
        predictions, first_medal, host_rows, importance_rows = [], [], [], []
        predicted_totals: Dict[str, float] = {}
        last_totals: Dict[str, float] = {}

        for noc in features.countries:
            country = features.series[noc]
            states = next_states(features, noc, mode, upto, host_next=noc == host_next)
            vector = predict_next(params, states)
            intervals = decode_team_output(vector, features.codebook, config.knn_k, MEDAL_FEATURES)
            row = {"noc": noc, "year": next_year, "host": noc == host_next, **_interval_row(intervals)}
            row["total_mid"] = sum(interval.midpoint for interval in intervals.values())
            predictions.append(row)
            predicted_totals[noc] = row["total_mid"]
            last_totals[noc] = float(country.counts[-1][:len(MEDAL_FEATURES)].sum())

            if country.counts[:, :len(MEDAL_FEATURES)].sum() == 0:
                result = first_medal_probability(total_vector(vector), gold_entries, noc, config.logistic_slope)
                first_medal.append({"noc": noc, "year": next_year, "probability": result.probability,
                                    "predicted_first_medal": result.predicted_first_medal})

            effect = host_effect(params, states, features.sport_index, features.codebook, config.knn_k)
            for feature, delta in effect.medal_deltas.items():
                host_rows.append({"noc": noc, "scope": "medal", "name": feature, "baseline": effect.medal_baseline[feature],
                                  "hosted": effect.medal_hosted[feature], "delta_pct": delta})
            for sport, baseline, hosted, delta in effect.sport_deltas:
                host_rows.append({"noc": noc, "scope": "sport", "name": sport, "baseline": baseline,
                                  "hosted": hosted, "delta_pct": delta})
            host_rows.append({"noc": noc, "scope": "aggregate", "name": "weighted", "baseline": effect.medal_baseline["total"],
                              "hosted": effect.medal_hosted["total"], "delta_pct": effect.aggregate})

            ranked = [(sport, v_p) for sport, v_p in sport_importance(states[-1], features.sport_index) if v_p > 0]
            for rank, (sport, v_p) in enumerate(ranked[:SPORT_IMPORTANCE_TOP], start=1):
                importance_rows.append({"noc": noc, "rank": rank, "sport": sport, "v_p": v_p})

        changes = [
            {"noc": noc, "predicted_total": predicted, "last_total": last, "change": change}
            for noc, predicted, last, change in medal_change_ranking(predicted_totals, last_totals)
        ]
        backtest = self.backtest(handler, features, params, mode)

        store.write_csv(f"{REPORT_DIR}/predictions.csv", pd.DataFrame(predictions, columns=PREDICTION_COLUMNS))
        store.write_csv(f"{REPORT_DIR}/first_medal.csv", pd.DataFrame(first_medal, columns=FIRST_MEDAL_COLUMNS))
        store.write_csv(f"{REPORT_DIR}/host_effect.csv", pd.DataFrame(host_rows, columns=HOST_EFFECT_COLUMNS))
        store.write_csv(f"{REPORT_DIR}/sport_importance.csv", pd.DataFrame(importance_rows, columns=IMPORTANCE_COLUMNS))
        store.write_csv(f"{REPORT_DIR}/backtest.csv", pd.DataFrame(backtest, columns=BACKTEST_COLUMNS))
        store.write_csv(f"{REPORT_DIR}/medal_change.csv", pd.DataFrame(changes, columns=MEDAL_CHANGE_COLUMNS))
        logging.info(f"Predicted {next_year} for {len(predictions)} countries ({mode})")
        return EXIT_OK

    @staticmethod
    def backtest(handler: 'AsyncCommandHandler', features: FeatureSet, params: LstmParams, mode: str) -> List[dict]:
        """One-step forecasts of the last known Games from the Games before it."""
        config = handler.config
        last = len(features.calendar) - 1
        if last < 2:
            logging.warning("Backtest skipped: fewer than 3 Games")
            return []
        rows = []
        for noc in features.countries:
            country = features.series[noc]
            n_hat = country.arima_block(last) if mode == HYBRID else None
            vector = predict_next(params, next_states(features, noc, mode, last, host_next=country.hosts[last]))
            truth = country.team_blocks[last].reshape(-1)
            row = {
                "noc": noc,
                "year": features.calendar[last],
                "lstm_rmse": loss_rmse(truth, vector),
                "arima_rmse": loss_rmse(truth, n_hat.reshape(-1)) if n_hat is not None else float("nan"),
            }
            for feature, interval in decode_team_output(vector, features.codebook, config.knn_k, MEDAL_FEATURES).items():
                true_count = int(country.counts[last][TEAM_FEATURES.index(feature)])
                row.update({f"{feature}_lo": interval.lo, f"{feature}_hi": interval.hi,
                            f"{feature}_true": true_count, f"{feature}_hit": interval.contains(true_count)})
            rows.append(row)
        return rows
