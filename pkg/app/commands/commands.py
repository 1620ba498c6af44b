from abc import ABC, abstractmethod
import argparse
import logging
from typing import List, Tuple

import numpy as np

from app.models.pca import ProjectionMatrix
from app.models.pipeline import HYBRID, LSTM_ONLY, FeatureSet, build_features
from app.utils.constants import EXIT_USAGE, UNKNOWN_COMMAND_ERROR
from app.utils.csv_utils import AthleteRecord, Panel, athletes_from_frame, panel_from_frame
from app.utils.encoding_utils import EmbeddingCodebook

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from app.AsyncHandler import AsyncCommandHandler

CLEAN_DIR = "clean"
CHECKPOINT_DIR = "checkpoints"
REPORT_DIR = "reports"
ANALYSIS_DIR = "analysis"

LSTM_CHECKPOINTS = {HYBRID: f"{CHECKPOINT_DIR}/lstm.json", LSTM_ONLY: f"{CHECKPOINT_DIR}/lstm_ablated.json"}


class MedalcastCommand(ABC):
    @abstractmethod
    async def execute(self, handler: 'AsyncCommandHandler', args: argparse.Namespace) -> int:
        pass


class UnknownCommand(MedalcastCommand):
    def __init__(self, known: Tuple[str, ...] = ()):
        self.known = known

    async def execute(self, handler: 'AsyncCommandHandler', args: argparse.Namespace) -> int:
        name = getattr(args, "subcommand", None) or getattr(args, "command", "")
        logging.error(UNKNOWN_COMMAND_ERROR.format(name=name, known="|".join(self.known)))
        return EXIT_USAGE


def mode_of(config) -> str:
    return LSTM_ONLY if config.no_arima else HYBRID


def load_clean(handler: 'AsyncCommandHandler') -> Tuple[Panel, List[AthleteRecord]]:
    store = handler.store
    panel = panel_from_frame(store.read_csv(f"{CLEAN_DIR}/panel.csv", "ingest"))
    athletes = athletes_from_frame(store.read_csv(f"{CLEAN_DIR}/athletes.csv", "ingest", dtype=str))
    return panel, athletes


def load_trained_features(handler: 'AsyncCommandHandler', mode: str) -> Tuple[FeatureSet, dict]:
    """Rebuild the per-country state series with the checkpointed codebook and projection."""
    store = handler.store
    lstm_document = store.read_json(LSTM_CHECKPOINTS[mode], "train")
    codebook = EmbeddingCodebook.from_json(store.read_json(f"{CHECKPOINT_DIR}/codebook.json", "train"))
    projection = ProjectionMatrix.from_json(store.read_json(f"{CHECKPOINT_DIR}/projection.json", "train"))
    panel, athletes = load_clean(handler)
    features = build_features(panel, athletes, handler.config, codebook=codebook, projection=projection,
                              athlete_scale=lstm_document["athlete_scale"])
    if mode == HYBRID:
        arima = store.read_json(f"{CHECKPOINT_DIR}/arima.json", "train")
        for noc in features.countries:
            if noc in arima:
                features.series[noc].arima_blocks = [np.array(block) for block in arima[noc]["rolling"]]
    return features, lstm_document
