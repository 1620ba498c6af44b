import argparse
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import pytest
from sortedcontainers import SortedDict

from app.AsyncRunner import AsyncRunner
from app.main import build_parser
from app.utils.config_utils import FIXTURE_DIR, RunConfig
from app.utils.csv_utils import (
    AthleteRecord,
    NocRegistry,
    Panel,
    PanelEntry,
    build_panel,
    edition_of,
    load_athletes,
    load_hosts,
    load_tallies,
)

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from app.AsyncHandler import AsyncCommandHandler


@pytest.fixture
def run_config(tmp_path) -> RunConfig:
    # small enough for a full ingest -> train -> predict cycle in a test
    return RunConfig(out=str(tmp_path / "out"), epochs=3, hidden=8, max_p=1, max_q=0).validate()


@pytest.fixture
def setup_runner(run_config):
    runner = AsyncRunner(run_config)
    runner.executor = ThreadPoolExecutor(max_workers=1)
    yield runner
    runner.close()


@pytest.fixture
def setup_handler(setup_runner) -> 'AsyncCommandHandler':
    return setup_runner.handler


def command_args(command: str = "analyze", subcommand: Optional[str] = None, **overrides) -> argparse.Namespace:
    argv = [command] + ([subcommand] if subcommand else [])
    args = build_parser().parse_args(argv)
    for key, value in overrides.items():
        setattr(args, key, value)
    return args


def fixture_path(name: str) -> Path:
    return FIXTURE_DIR / name


def athlete(name: str, noc: str, year: int, sport: str = "Athletics", medal: str = "NoMedal",
            sex: Optional[str] = "M", event: Optional[str] = None) -> AthleteRecord:
    return AthleteRecord(name=name, noc=noc, sex=sex, edition=edition_of(year), year=year, sport=sport,
                         event=event or f"{sport} 1", medal=medal)


def make_panel(counts: Dict[str, Sequence[Tuple[int, int, int]]], years: Sequence[int],
               hosts: Optional[Dict[int, str]] = None) -> Panel:
    hosts = hosts or {}
    entries = {}
    for noc, rows in counts.items():
        entries[noc] = SortedDict({
            year: PanelEntry(noc=noc, year=year, gold=g, silver=s, bronze=b, athletes=5 + g + s + b, events=3,
                             is_host=hosts.get(year) == noc)
            for year, (g, s, b) in zip(years, rows)
        })
    return Panel(years=list(years), entries=entries)


def write_csv(path: Path, header: str, rows: List[str]) -> Path:
    path.write_text("\n".join([header] + rows) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def fixture_data() -> Tuple[Panel, List[AthleteRecord]]:
    registry = NocRegistry.load()
    records = load_athletes(fixture_path("athletes.csv"), registry).records
    panel = build_panel(records, load_tallies(fixture_path("medal_counts.csv"), registry),
                        load_hosts(fixture_path("hosts.csv"), registry))
    return panel, records
