import numpy as np
import pytest

from app.tests.helper import athlete, fixture_path, write_csv
from app.utils.csv_utils import (
    MedalTally,
    GamesRecord,
    NocRegistry,
    athletes_frame,
    athletes_from_frame,
    build_panel,
    impute_glitch,
    load_athletes,
    load_hosts,
    load_programs,
    load_tallies,
    panel_from_frame,
    subsample_athletes,
    validate_tally_ranges,
)
from app.utils.exceptions import (
    ConsistencyError,
    DataIOError,
    ImputationError,
    SchemaError,
    UnknownAliasError,
)


@pytest.fixture
def registry():
    return NocRegistry.load()


def test_canonicalize(registry):
    assert registry.canonicalize("United States") == "USA"
    assert registry.canonicalize("  china ") == "CHN"
    assert registry.canonicalize(registry.canonicalize("Great Britain")) == registry.canonicalize("Great Britain")
    assert "Nepal" in registry
    with pytest.raises(UnknownAliasError):
        registry.canonicalize("Atlantis")


def test_load_athletes_drops_incomplete_rows(registry):
    load = load_athletes(fixture_path("athletes.csv"), registry)
    assert load.dropped == 2
    assert {record.noc for record in load.records} == {"USA", "CHN", "FRA", "NEP"}
    assert {record.medal for record in load.records} <= {"Gold", "Silver", "Bronze", "NoMedal"}
    assert all(record.edition == (record.year - 1896) // 4 + 1 for record in load.records)


def test_load_athletes_unknown_medal(tmp_path, registry):
    path = write_csv(tmp_path / "a.csv", "Name,Sex,NOC,Year,Sport,Event,Medal", ["A,M,USA,2000,Judo,Judo 1,Platinum"])
    with pytest.raises(SchemaError):
        load_athletes(path, registry)


def test_missing_file_names_path(tmp_path, registry):
    missing = tmp_path / "nowhere.csv"
    with pytest.raises(DataIOError) as error:
        load_athletes(missing, registry)
    assert str(missing) in str(error.value)


def test_missing_column(tmp_path, registry):
    path = write_csv(tmp_path / "t.csv", "NOC,Year,Gold,Silver", ["USA,2000,1,2"])
    with pytest.raises(SchemaError) as error:
        load_tallies(path, registry)
    assert "bronze" in str(error.value)


@pytest.mark.parametrize("row, column", [
    ("USA,2000,,2,3", "gold"),
    ("USA,2000,1,two,3", "silver"),
    ("USA,2000,1,2,inf", "bronze"),
    ("USA,2000,1,2,3,many", "athletes"),
])
def test_load_tallies_rejects_bad_counts(tmp_path, registry, row, column):
    path = write_csv(tmp_path / "t.csv", "NOC,Year,Gold,Silver,Bronze,Athletes", [row])
    with pytest.raises(SchemaError) as error:
        load_tallies(path, registry)
    assert column in str(error.value)
    assert "row 2" in str(error.value)


def test_load_tallies_optional_counts(tmp_path, registry):
    path = write_csv(tmp_path / "t.csv", "NOC,Year,Gold,Silver,Bronze,Athletes", ["USA,2000,1,2,3,", "CHN,2000,4.0,0,0,12"])
    usa, chn = load_tallies(path, registry)
    assert (usa.gold, usa.silver, usa.bronze, usa.athletes) == (1, 2, 3, None)
    assert (chn.gold, chn.athletes, chn.events) == (4, 12, None)


def test_load_hosts_flags_cancelled_games(registry):
    hosts = load_hosts(fixture_path("hosts.csv"), registry)
    by_year = {game.year: game for game in hosts}
    assert not by_year[1940].held
    assert by_year[1940].host_noc is None
    assert by_year[2008].host_noc == "CHN"
    assert sum(game.held for game in hosts) == 10


def test_load_hosts_config_cancelled_years(registry):
    hosts = load_hosts(fixture_path("hosts.csv"), registry, cancelled_years=[1992])
    assert not {game.year: game for game in hosts}[1992].held


def test_load_hosts_without_cancellations(tmp_path, registry):
    path = write_csv(tmp_path / "h.csv", "Year,Host", ['2000,"Sydney, Australia"', '2004,"Athens, Greece"'])
    assert all(game.held for game in load_hosts(path, registry))


def test_load_hosts_duplicate_year(tmp_path, registry):
    path = write_csv(tmp_path / "h.csv", "Year,Host", ["2000,Australia", "2000,Greece"])
    with pytest.raises(SchemaError):
        load_hosts(path, registry)


def test_impute_glitch():
    assert impute_glitch([10, "?", 14]) == [10, 12, 14]
    assert impute_glitch([5, 5, 5]) == [5, 5, 5]
    values = [3, 7, None, 9, 1]
    imputed = impute_glitch(values)
    assert imputed[2] == 8
    assert [imputed[i] for i in (0, 1, 3, 4)] == [3, 7, 9, 1]
    with pytest.raises(ImputationError):
        impute_glitch(["", 3, 4])
    with pytest.raises(ImputationError):
        impute_glitch([1, "?", "?", 4])


def test_load_programs_imputes_glitch():
    programs = load_programs(fixture_path("programs.csv"))
    assert programs.loc["Table Tennis", 1996] == 4
    assert list(programs.columns)[:2] == [1988, 1992]


def test_validate_tally_ranges_is_advisory():
    warnings = validate_tally_ranges([MedalTally("USA", 2000, 90, 1, 1)])
    assert len(warnings) == 1
    assert "gold=90" in warnings[0]


def test_build_panel_cross_product():
    hosts = [GamesRecord(year, "USA" if year == 2004 else None, True) for year in (2000, 2004, 2008, 2012)]
    tallies = [MedalTally(noc, 2000, 1, 0, 0) for noc in ("USA", "CHN")]
    athletes = [athlete("Solo", "NEP", 2008)]
    panel = build_panel(athletes, tallies, hosts)
    assert panel.countries == ["CHN", "NEP", "USA"]
    assert sum(len(panel.series(noc)) for noc in panel.countries) == 12
    assert [entry.year for entry in panel.series("NEP")] == [2000, 2004, 2008, 2012]
    assert panel.series("NEP")[2].athletes == 1
    assert panel.series("NEP")[2].total == 0
    assert panel.series("USA")[1].is_host
    assert panel.host_of(2004) == "USA"


def test_build_panel_rejects_tally_for_cancelled_games():
    hosts = [GamesRecord(1940, None, False), GamesRecord(1948, "GBR", True)]
    with pytest.raises(ConsistencyError):
        build_panel([], [MedalTally("USA", 1940, 1, 0, 0)], hosts)


def test_clean_frames_read_back(registry):
    records = load_athletes(fixture_path("athletes.csv"), registry).records
    frame = athletes_frame(records).astype(str).replace("None", "")
    assert athletes_from_frame(frame) == records

    hosts = load_hosts(fixture_path("hosts.csv"), registry)
    panel = build_panel(records, load_tallies(fixture_path("medal_counts.csv"), registry), hosts)
    restored = panel_from_frame(panel.to_frame())
    assert restored.years == panel.years
    assert restored.series("USA") == panel.series("USA")


def test_subsample_keeps_athletes_whole():
    records = [athlete(f"A{i}", "USA", year) for i in range(10) for year in (2000, 2004)]
    kept = subsample_athletes(records, 0.5, np.random.default_rng(0))
    names = {record.name for record in kept}
    assert len(names) == 5
    assert len(kept) == 10
    assert subsample_athletes(records, 1.0, np.random.default_rng(0)) == records
