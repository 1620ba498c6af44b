import json
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import List, Optional

from app.utils.constants import (
    ARIMA_DEFAULT_D,
    ARIMA_MAX_D,
    ARIMA_MAX_P,
    ARIMA_MAX_Q,
    EMBEDDING_DIM,
    EMBEDDING_SEED,
    KNN_K,
    LOGISTIC_SLOPE,
    LSTM_EPOCHS,
    LSTM_FORGET_BIAS,
    LSTM_GRAD_CLIP,
    LSTM_HIDDEN,
    LSTM_INIT_SCALE,
    LSTM_LEARNING_RATE,
    MAX_CONSECUTIVE_GAMES,
    PCA_COMPONENTS,
    SLIDING_WINDOW,
    UNREADABLE_FILE_ERROR,
)
from app.utils.exceptions import DataIOError, UsageError

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "data" / "fixture"
DATA_DIR = FIXTURE_DIR.parent

INPUT_FILES = ("athletes", "tallies", "hosts", "registry", "programs", "coach_years")

ENVIRONMENT = {
    "MEDALCAST_SEED": ("seed", int),
    "MEDALCAST_OUT": ("out", str),
    "MEDALCAST_LOG_LEVEL": ("log_level", str),
}


@dataclass
class RunConfig:
    athletes: str = str(FIXTURE_DIR / "athletes.csv")
    tallies: str = str(FIXTURE_DIR / "medal_counts.csv")
    hosts: str = str(FIXTURE_DIR / "hosts.csv")
    programs: Optional[str] = str(FIXTURE_DIR / "programs.csv")
    registry: str = str(DATA_DIR / "noc_aliases.csv")
    coach_years: Optional[str] = str(FIXTURE_DIR / "coach_years.csv")
    cancelled_years: List[int] = field(default_factory=list)
    out: str = "medalcast-out"
    seed: int = EMBEDDING_SEED
    embedding_dim: int = EMBEDDING_DIM
    pca_k: int = PCA_COMPONENTS
    window: int = SLIDING_WINDOW
    max_consecutive: int = MAX_CONSECUTIVE_GAMES
    max_p: int = ARIMA_MAX_P
    max_q: int = ARIMA_MAX_Q
    d: int = ARIMA_DEFAULT_D
    criterion: str = "aic"
    epochs: int = LSTM_EPOCHS
    hidden: int = LSTM_HIDDEN
    lr: float = LSTM_LEARNING_RATE
    clip: float = LSTM_GRAD_CLIP
    init_scale: float = LSTM_INIT_SCALE
    forget_bias: float = LSTM_FORGET_BIAS
    knn_k: int = KNN_K
    logistic_slope: float = LOGISTIC_SLOPE
    no_arima: bool = False
    jobs: int = 1
    log_level: str = "INFO"
    dump_states: Optional[str] = None
    emit_clean: Optional[str] = None
    next_host: Optional[str] = None
    seeds: List[int] = field(default_factory=list)

    @property
    def harness_seeds(self) -> List[int]:
        return list(self.seeds) or [self.seed]

    def validate(self) -> "RunConfig":
        if self.window < 1:
            raise UsageError(f"window must be >= 1, got {self.window}")
        if self.epochs < 1:
            raise UsageError(f"epochs must be >= 1, got {self.epochs}")
        if self.lr <= 0:
            raise UsageError(f"learning rate must be positive, got {self.lr}")
        if not 0 <= self.d <= ARIMA_MAX_D:
            raise UsageError(f"differencing order must be between 0 and {ARIMA_MAX_D}, got {self.d}")
        if self.max_p < 0 or self.max_q < 0:
            raise UsageError(f"ARIMA order bounds must be non-negative, got p<={self.max_p} q<={self.max_q}")
        if self.criterion not in ("aic", "bic"):
            raise UsageError(f"criterion must be 'aic' or 'bic', got '{self.criterion}'")
        if self.jobs < 1:
            raise UsageError(f"jobs must be >= 1, got {self.jobs}")
        if self.embedding_dim != EMBEDDING_DIM:
            raise UsageError(f"embedding dim is fixed at {EMBEDDING_DIM}")
        if self.pca_k != PCA_COMPONENTS:
            raise UsageError(f"PCA keeps exactly {PCA_COMPONENTS} components, got {self.pca_k}")
        if self.knn_k < 1:
            raise UsageError(f"knn k must be >= 1, got {self.knn_k}")
        for name in INPUT_FILES:
            path = getattr(self, name)
            if path is not None and not Path(path).is_file():
                raise DataIOError(UNREADABLE_FILE_ERROR.format(path=path, reason=f"{name} file does not exist"))
        return self


def _known_keys() -> set:
    return {f.name for f in fields(RunConfig)}


def load_config_file(path) -> dict:
    try:
        document = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise DataIOError(UNREADABLE_FILE_ERROR.format(path=path, reason=e)) from e
    except json.JSONDecodeError as e:
        raise UsageError(f"config {path} is not valid JSON: {e}") from e
    unknown = set(document) - _known_keys()
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return document


def resolve_config(config_path: Optional[str] = None, overrides: Optional[dict] = None, environ=None) -> RunConfig:
    """Defaults, then the JSON file, then MEDALCAST_* variables, then explicit flags."""
    environ = os.environ if environ is None else environ
    config = RunConfig()
    if config_path:
        config = replace(config, **load_config_file(config_path))
    for variable, (key, cast) in ENVIRONMENT.items():
        if environ.get(variable):
            try:
                config = replace(config, **{key: cast(environ[variable])})
            except ValueError as e:
                raise UsageError(f"{variable}={environ[variable]!r} is invalid") from e
    flags = {key: value for key, value in (overrides or {}).items() if value is not None and key in _known_keys()}
    return replace(config, **flags).validate()
