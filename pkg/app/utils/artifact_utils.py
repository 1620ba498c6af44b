import json
import logging
from hashlib import sha256
from pathlib import Path
from typing import List

import numpy as np
import pandas as pd

from app.utils.constants import MISSING_ARTIFACT_ERROR, UNREADABLE_FILE_ERROR
from app.utils.exceptions import DataIOError, MissingArtifactError

MANIFEST_NAME = "manifest.json"
CSV_FLOAT_FORMAT = "%.10g"


def _to_builtin(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, (set, frozenset, tuple)):
        return list(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def dumps(document) -> str:
    return json.dumps(document, sort_keys=True, indent=2, default=_to_builtin, allow_nan=True) + "\n"


def file_digest(path: Path) -> str:
    return sha256(Path(path).read_bytes()).hexdigest()


class ArtifactStore:
    """Everything a command writes goes through here so the manifest stays complete."""

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)
        self.written: List[str] = []

    def path(self, relative: str) -> Path:
        return self.out_dir / relative

    def _prepare(self, relative: str) -> Path:
        target = self.path(relative)
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise DataIOError(UNREADABLE_FILE_ERROR.format(path=target.parent, reason=e)) from e
        if relative not in self.written:
            self.written.append(relative)
        return target

    def write_json(self, relative: str, document) -> Path:
        target = self._prepare(relative)
        target.write_text(dumps(document), encoding="utf-8")
        logging.info(f"Wrote {target}")
        return target

    def write_csv(self, relative: str, frame: pd.DataFrame) -> Path:
        target = self._prepare(relative)
        frame.to_csv(target, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
        logging.info(f"Wrote {target} ({len(frame)} rows)")
        return target

    def require(self, relative: str, command: str) -> Path:
        target = self.path(relative)
        if not target.is_file():
            raise MissingArtifactError(MISSING_ARTIFACT_ERROR.format(path=target, command=command))
        return target

    def read_json(self, relative: str, command: str):
        return json.loads(self.require(relative, command).read_text(encoding="utf-8"))

    def read_csv(self, relative: str, command: str, **kwargs) -> pd.DataFrame:
        return pd.read_csv(self.require(relative, command), keep_default_na=False, **kwargs)

    def commit_manifest(self) -> Path:
        manifest_path = self.out_dir / MANIFEST_NAME
        manifest = {}
        if manifest_path.is_file():
            manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        for relative in self.written:
            manifest[relative] = file_digest(self.path(relative))
        self.out_dir.mkdir(parents=True, exist_ok=True)
        manifest_path.write_text(dumps(manifest), encoding="utf-8")
        logging.info(f"Manifest lists {len(manifest)} artifacts")
        return manifest_path
