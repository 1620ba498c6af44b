"""Loading, cleaning and canonicalizing the athletes, medal-count, hosts and programs CSVs."""
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence

import pandas as pd
from sortedcontainers import SortedDict

from app.utils.constants import (
    BAD_COUNT_ERROR,
    BAD_YEAR_ERROR,
    DUPLICATE_YEAR_ERROR,
    FIRST_SUMMER_GAMES,
    GAMES_INTERVAL,
    IMPUTE_BOUNDARY_ERROR,
    IMPUTE_CONSECUTIVE_ERROR,
    MEDAL_ALIASES,
    MISSING_COLUMN_ERROR,
    MISSING_MARKERS,
    SCALAR_DOMAINS,
    TALLY_YEAR_ERROR,
    UNKNOWN_ALIAS_ERROR,
    UNKNOWN_MEDAL_ERROR,
    UNREADABLE_FILE_ERROR,
)
from app.utils.exceptions import ConsistencyError, DataIOError, ImputationError, SchemaError, UnknownAliasError

DEFAULT_REGISTRY_PATH = Path(__file__).resolve().parent.parent / "data" / "noc_aliases.csv"


@dataclass(frozen=True)
class AthleteRecord:
    name: str
    noc: str
    sex: Optional[str]
    edition: int
    year: int
    sport: str
    event: str
    medal: str


@dataclass(frozen=True)
class MedalTally:
    noc: str
    year: int
    gold: int
    silver: int
    bronze: int
    athletes: Optional[int] = None
    events: Optional[int] = None

    @property
    def total(self) -> int:
        return self.gold + self.silver + self.bronze


@dataclass(frozen=True)
class GamesRecord:
    year: int
    host_noc: Optional[str]
    held: bool


class AthleteLoad(NamedTuple):
    records: List[AthleteRecord]
    dropped: int


@dataclass
class NocRegistry:
    aliases: Dict[str, str] = field(default_factory=dict)

    @classmethod
    def load(cls, path: Path = DEFAULT_REGISTRY_PATH) -> "NocRegistry":
        frame = _read_csv(path, required=("alias", "code"))
        registry = cls()
        for alias, code in zip(frame["alias"], frame["code"]):
            registry.add(alias, code)
        return registry

    def add(self, alias: str, code: str) -> None:
        code = code.strip().upper()
        self.aliases[alias.strip().lower()] = code
        # codes resolve to themselves, which makes canonicalize idempotent
        self.aliases[code.lower()] = code

    def canonicalize(self, name: str) -> str:
        key = name.strip().lower()
        if key not in self.aliases:
            raise UnknownAliasError(UNKNOWN_ALIAS_ERROR.format(alias=name))
        return self.aliases[key]

    def __contains__(self, name: str) -> bool:
        return name.strip().lower() in self.aliases


def _read_csv(path, required: Sequence[str]) -> pd.DataFrame:
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise DataIOError(UNREADABLE_FILE_ERROR.format(path=path, reason=e)) from e
    except pd.errors.EmptyDataError as e:
        raise SchemaError(MISSING_COLUMN_ERROR.format(column=required[0], path=path)) from e
    frame.columns = [str(column).strip().lower() for column in frame.columns]
    for column in required:
        if column not in frame.columns:
            raise SchemaError(MISSING_COLUMN_ERROR.format(column=column, path=path))
    return frame


def _is_missing(value) -> bool:
    if value is None:
        return True
    if isinstance(value, float) and math.isnan(value):
        return True
    return str(value).strip().lower() in MISSING_MARKERS


def _parse_year(value: str, row: int) -> int:
    try:
        return int(float(value))
    except ValueError as e:
        raise SchemaError(BAD_YEAR_ERROR.format(value=value, row=row)) from e


def _parse_count(value: str, column: str, row: int) -> int:
    try:
        return int(float(value))
    except (TypeError, ValueError, OverflowError) as e:
        raise SchemaError(BAD_COUNT_ERROR.format(column=column, value=value, row=row)) from e


def _parse_optional_count(value: Optional[str], column: str, row: int) -> Optional[int]:
    if _is_missing(value):
        return None
    return _parse_count(value, column, row)


def edition_of(year: int) -> int:
    return (year - FIRST_SUMMER_GAMES) // GAMES_INTERVAL + 1


def load_athletes(path, registry: NocRegistry) -> AthleteLoad:
    frame = _read_csv(path, required=("name", "noc", "year", "sport", "event", "medal"))
    records = []
    dropped = 0
    for row, item in enumerate(frame.to_dict("records"), start=2):
        if any(_is_missing(item[column]) for column in ("noc", "year", "sport", "medal")):
            dropped += 1
            continue
        medal = MEDAL_ALIASES.get(item["medal"].strip().lower())
        if medal is None:
            raise SchemaError(UNKNOWN_MEDAL_ERROR.format(value=item["medal"], row=row))
        year = _parse_year(item["year"], row)
        sex = item.get("sex", "").strip().upper() or None
        records.append(AthleteRecord(
            name=item["name"].strip(),
            noc=registry.canonicalize(item["noc"]),
            sex=sex if sex in ("M", "F") else None,
            edition=edition_of(year),
            year=year,
            sport=item["sport"].strip(),
            event=item["event"].strip(),
            medal=medal,
        ))
    logging.info(f"Loaded {len(records)} athlete rows from {path}, dropped {dropped}")
    return AthleteLoad(records, dropped)


def load_tallies(path, registry: NocRegistry) -> List[MedalTally]:
    frame = _read_csv(path, required=("noc", "year", "gold", "silver", "bronze"))
    tallies = []
    for row, item in enumerate(frame.to_dict("records"), start=2):
        tallies.append(MedalTally(
            noc=registry.canonicalize(item["noc"]),
            year=_parse_year(item["year"], row),
            gold=_parse_count(item["gold"], "gold", row),
            silver=_parse_count(item["silver"], "silver", row),
            bronze=_parse_count(item["bronze"], "bronze", row),
            athletes=_parse_optional_count(item.get("athletes"), "athletes", row),
            events=_parse_optional_count(item.get("events"), "events", row),
        ))
    logging.info(f"Loaded {len(tallies)} medal tallies from {path}")
    return tallies


def validate_tally_ranges(tallies: Iterable[MedalTally]) -> List[str]:
    warnings = []
    for tally in tallies:
        for feature, max_count in SCALAR_DOMAINS.items():
            value = getattr(tally, feature)
            if value is not None and not 0 <= value <= max_count:
                warnings.append(f"{tally.noc} {tally.year}: {feature}={value} outside [0, {max_count}]")
    for warning in warnings:
        logging.warning(warning)
    return warnings


def _host_country(value: str) -> str:
    # "Paris, France" style values resolve through the country part
    return value.rsplit(",", 1)[-1].strip()


def load_hosts(path, registry: NocRegistry, cancelled_years: Iterable[int] = ()) -> List[GamesRecord]:
    frame = _read_csv(path, required=("year", "host"))
    cancelled = set(cancelled_years)
    games = SortedDict()
    for row, item in enumerate(frame.to_dict("records"), start=2):
        year = _parse_year(item["year"], row)
        if year in games:
            raise SchemaError(DUPLICATE_YEAR_ERROR.format(year=year, path=path))
        host = item["host"].strip()
        if "held" in item and not _is_missing(item["held"]):
            held = item["held"].strip().lower() in ("1", "true", "yes", "y")
        else:
            held = "cancel" not in host.lower()
        held = held and year not in cancelled
        host_noc = registry.canonicalize(_host_country(host)) if held and host else None
        games[year] = GamesRecord(year=year, host_noc=host_noc, held=held)
    logging.info(f"Loaded {len(games)} Games from {path}, {sum(not g.held for g in games.values())} not held")
    return list(games.values())


def impute_glitch(series: Sequence) -> List[float]:
    values = list(series)
    missing = [i for i, value in enumerate(values) if _is_missing(value)]
    for index, next_index in zip(missing, missing[1:]):
        if next_index == index + 1:
            raise ImputationError(IMPUTE_CONSECUTIVE_ERROR.format(index=index, next_index=next_index))
    result = []
    for i, value in enumerate(values):
        if i in missing:
            if i == 0 or i == len(values) - 1:
                raise ImputationError(IMPUTE_BOUNDARY_ERROR.format(index=i))
            result.append((float(values[i - 1]) + float(values[i + 1])) / 2)
        else:
            result.append(float(value))
    return result


def _numeric_or_missing(value):
    if _is_missing(value):
        return None
    try:
        return float(str(value).strip())
    except ValueError:
        # unreadable glitch text
        return None


def load_programs(path) -> pd.DataFrame:
    frame = _read_csv(path, required=("sport",))
    year_columns = [column for column in frame.columns if column.isdigit()]
    cleaned = {}
    for item in frame.to_dict("records"):
        row = [_numeric_or_missing(item[column]) for column in year_columns]
        try:
            cleaned[item["sport"].strip()] = impute_glitch(row)
        except ImputationError as e:
            raise ImputationError(f"{item['sport']}: {e}") from e
    programs = pd.DataFrame.from_dict(cleaned, orient="index", columns=[int(c) for c in year_columns])
    programs.index.name = "sport"
    return programs


@dataclass(frozen=True)
class PanelEntry:
    noc: str
    year: int
    gold: int = 0
    silver: int = 0
    bronze: int = 0
    athletes: int = 0
    events: int = 0
    is_host: bool = False

    @property
    def total(self) -> int:
        return self.gold + self.silver + self.bronze


@dataclass
class Panel:
    years: List[int]
    entries: Dict[str, SortedDict]

    @property
    def countries(self) -> List[str]:
        return sorted(self.entries)

    def series(self, noc: str) -> List[PanelEntry]:
        return list(self.entries[noc].values())

    def values(self, noc: str, feature: str) -> List[int]:
        return [getattr(entry, feature) for entry in self.entries[noc].values()]

    def host_of(self, year: int) -> Optional[str]:
        for entry_map in self.entries.values():
            entry = entry_map.get(year)
            if entry is not None and entry.is_host:
                return entry.noc
        return None

    def restrict_years(self, years: Iterable[int]) -> "Panel":
        keep = sorted(set(years) & set(self.years))
        return Panel(
            years=keep,
            entries={noc: SortedDict({y: e for y, e in entry_map.items() if y in keep}) for noc, entry_map in self.entries.items()},
        )

    def to_frame(self) -> pd.DataFrame:
        rows = [vars(entry) for noc in self.countries for entry in self.series(noc)]
        columns = ["noc", "year", "gold", "silver", "bronze", "athletes", "events", "is_host"]
        return pd.DataFrame(rows, columns=columns)


def build_panel(athletes: Sequence[AthleteRecord], tallies: Sequence[MedalTally], hosts: Sequence[GamesRecord]) -> Panel:
    held = {game.year: game for game in hosts if game.held}
    not_held = {game.year for game in hosts if not game.held}
    years = sorted(held)

    by_key = {}
    for tally in tallies:
        if tally.year not in held:
            reason = " (Games not held)" if tally.year in not_held else ""
            raise ConsistencyError(TALLY_YEAR_ERROR.format(year=tally.year, noc=tally.noc) + reason)
        by_key[(tally.noc, tally.year)] = tally

    names = {}
    events = {}
    for record in athletes:
        if record.year not in held:
            continue
        names.setdefault((record.noc, record.year), set()).add(record.name)
        events.setdefault((record.noc, record.year), set()).add(record.event)

    countries = {t.noc for t in tallies} | {a.noc for a in athletes}
    entries = {}
    for noc in countries:
        entry_map = SortedDict()
        for year in years:
            tally = by_key.get((noc, year))
            athlete_count = len(names.get((noc, year), ()))
            event_count = len(events.get((noc, year), ()))
            if tally is not None:
                athlete_count = tally.athletes if tally.athletes is not None else athlete_count
                event_count = tally.events if tally.events is not None else event_count
            entry_map[year] = PanelEntry(
                noc=noc,
                year=year,
                gold=tally.gold if tally else 0,
                silver=tally.silver if tally else 0,
                bronze=tally.bronze if tally else 0,
                athletes=athlete_count,
                events=event_count,
                is_host=held[year].host_noc == noc,
            )
        entries[noc] = entry_map
    logging.info(f"Built panel of {len(countries)} countries x {len(years)} Games")
    return Panel(years=years, entries=entries)


def athletes_frame(records: Sequence[AthleteRecord]) -> pd.DataFrame:
    columns = ["name", "noc", "sex", "edition", "year", "sport", "event", "medal"]
    return pd.DataFrame([vars(r) for r in records], columns=columns)


def tallies_frame(tallies: Sequence[MedalTally]) -> pd.DataFrame:
    columns = ["noc", "year", "gold", "silver", "bronze", "athletes", "events"]
    return pd.DataFrame([vars(t) for t in tallies], columns=columns).astype({"athletes": "Int64", "events": "Int64"})


def hosts_frame(hosts: Sequence[GamesRecord]) -> pd.DataFrame:
    rows = [{"year": g.year, "host": g.host_noc or "Cancelled", "held": g.held} for g in hosts]
    return pd.DataFrame(rows, columns=["year", "host", "held"])


def subsample_athletes(records: Sequence[AthleteRecord], fraction: float, rng) -> List[AthleteRecord]:
    """Keep a seeded fraction of athletes (all rows of a kept athlete stay together)."""
    keys = sorted({(r.name, r.noc) for r in records})
    if fraction >= 1.0 or not keys:
        return list(records)
    keep_count = max(1, int(round(fraction * len(keys))))
    chosen = {keys[i] for i in rng.choice(len(keys), size=keep_count, replace=False)}
    return [r for r in records if (r.name, r.noc) in chosen]


def with_host(records: Sequence[GamesRecord], year: int, host_noc: str) -> List[GamesRecord]:
    return [replace(g, host_noc=host_noc) if g.year == year else g for g in records]


def athletes_from_frame(frame: pd.DataFrame) -> List[AthleteRecord]:
    return [
        AthleteRecord(
            name=str(item["name"]),
            noc=str(item["noc"]),
            sex=str(item["sex"]) if str(item["sex"]) in ("M", "F") else None,
            edition=int(item["edition"]),
            year=int(item["year"]),
            sport=str(item["sport"]),
            event=str(item["event"]),
            medal=str(item["medal"]),
        )
        for item in frame.to_dict("records")
    ]


def panel_from_frame(frame: pd.DataFrame) -> Panel:
    entries = {}
    for item in frame.to_dict("records"):
        entry = PanelEntry(
            noc=str(item["noc"]),
            year=int(item["year"]),
            gold=int(item["gold"]),
            silver=int(item["silver"]),
            bronze=int(item["bronze"]),
            athletes=int(item["athletes"]),
            events=int(item["events"]),
            is_host=str(item["is_host"]).strip().lower() == "true",
        )
        entries.setdefault(entry.noc, SortedDict())[entry.year] = entry
    years = sorted({int(year) for year in frame["year"]}) if len(frame) else []
    return Panel(years=years, entries=entries)
