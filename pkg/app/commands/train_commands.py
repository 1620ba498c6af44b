import argparse
import logging
from pathlib import Path

import pandas as pd

from app.commands.commands import CHECKPOINT_DIR, LSTM_CHECKPOINTS, MedalcastCommand, load_clean, mode_of
from app.models.pipeline import HYBRID, attach_arima, build_features, country_states, state_baseline, train_model
from app.models.state_matrix import state_frame
from app.utils.artifact_utils import CSV_FLOAT_FORMAT
from app.utils.constants import EXIT_OK, UNREADABLE_FILE_ERROR
from app.utils.exceptions import DataIOError

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from app.AsyncHandler import AsyncCommandHandler

LOSS_TRACES = {HYBRID: f"{CHECKPOINT_DIR}/loss_trace.csv"}


class TrainCommand(MedalcastCommand):
    async def execute(self, handler: 'AsyncCommandHandler', args: argparse.Namespace) -> int:
        config = handler.config
        store = handler.store
        mode = mode_of(config)
        panel, athletes = load_clean(handler)
        features = build_features(panel, athletes, config)
        upto = len(features.calendar)

        store.write_json(f"{CHECKPOINT_DIR}/codebook.json", features.codebook.to_json())
        store.write_json(f"{CHECKPOINT_DIR}/projection.json", features.projection.to_json())

        if mode == HYBRID:
            results = attach_arima(features, config, handler.runner.map)
            document = {}
            diagnostics = []
            for noc, result in results.items():
                document[noc] = {
                    "forecast": result.forecast,
                    "rolling": features.series[noc].arima_blocks,
                    "models": [model.to_json() if model is not None else None for model in result.models],
                }
                diagnostics.extend({"noc": noc, **row} for row in result.diagnostics)
            store.write_json(f"{CHECKPOINT_DIR}/arima.json", document)
            store.write_csv(f"{CHECKPOINT_DIR}/arima_diagnostics.csv", pd.DataFrame(
                diagnostics, columns=["noc", "channel", "order", "score", "fallback", "reason"]))

        logging.info(f"Training {mode} LSTM for {config.epochs} epochs on {len(features.countries)} countries")
        result = train_model(features, config, mode)
        lstm_document = result.params.to_json()
        lstm_document.update({"athlete_scale": features.athlete_scale, "mode": mode, "seed": config.seed,
                              "state_baseline": state_baseline(features, mode, upto)})
        store.write_json(LSTM_CHECKPOINTS[mode], lstm_document)
        trace = pd.DataFrame({"epoch": range(1, len(result.losses) + 1), "loss": result.losses})
        store.write_csv(LOSS_TRACES.get(mode, f"{CHECKPOINT_DIR}/loss_trace_{mode}.csv"), trace)

        if config.dump_states:
            self.dump_states(features, mode, upto, Path(config.dump_states))
        return EXIT_OK

    @staticmethod
    def dump_states(features, mode: str, upto: int, directory: Path) -> None:
        try:
            directory.mkdir(parents=True, exist_ok=True)
            for noc in features.countries:
                for year, state in zip(features.calendar[1:], country_states(features, noc, mode, upto)):
                    frame = state_frame(state, features.sport_index)
                    frame.to_csv(directory / f"{noc}_{year}.csv", index=False, float_format=CSV_FLOAT_FORMAT,
                                 lineterminator="\n")
        except OSError as e:
            raise DataIOError(UNREADABLE_FILE_ERROR.format(path=directory, reason=e)) from e
        logging.info(f"Dumped state matrices for {len(features.countries)} countries to {directory}")
