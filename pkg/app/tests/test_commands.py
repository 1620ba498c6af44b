import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np
import pandas as pd
import pytest

from app.AsyncRunner import AsyncRunner
from app.commands import analyze_commands, commands
from app.main import run
from app.models.pipeline import HYBRID, build_features, country_states
from app.tests.helper import command_args, fixture_path, run_config, setup_handler, setup_runner, write_csv
from app.utils.constants import EXIT_MISSING_ARTIFACT, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE
from app.utils.exceptions import InsufficientDataError, ModelStateError


def read_json(handler, relative):
    return json.loads(handler.store.path(relative).read_text())


def manifest(handler):
    return read_json(handler, "manifest.json")


async def ingest_and_train(handler):
    assert await handler.handle("ingest", command_args("ingest")) == EXIT_OK
    assert await handler.handle("train", command_args("train")) == EXIT_OK


def make_runner(config) -> AsyncRunner:
    runner = AsyncRunner(config)
    runner.executor = ThreadPoolExecutor(max_workers=2)
    return runner


@pytest.mark.asyncio
async def test_ingest_writes_clean_tables(setup_handler):
    code = await setup_handler.handle("INGEST", command_args("ingest"))
    assert code == EXIT_OK

    report = read_json(setup_handler, "clean/ingest_report.json")
    assert report["athletes"]["dropped"] == 2
    assert report["games"]["not_held"] == [1940]
    assert len(report["games"]["held"]) == 10
    assert report["countries"] == 4
    assert report["panel_rows"] == 40

    panel = pd.read_csv(setup_handler.store.path("clean/panel.csv"))
    assert len(panel) == 40
    assert list(panel.columns) == ["noc", "year", "gold", "silver", "bronze", "athletes", "events", "is_host"]
    assert {"clean/athletes.csv", "clean/panel.csv", "clean/programs.csv", "clean/ingest_report.json"} <= set(manifest(setup_handler))


@pytest.mark.asyncio
async def test_ingest_emits_clean_copy(setup_handler, tmp_path):
    setup_handler.config.emit_clean = str(tmp_path / "copy" / "panel.csv")
    assert await setup_handler.handle("ingest", command_args("ingest")) == EXIT_OK
    assert (tmp_path / "copy" / "panel.csv").read_text() == setup_handler.store.path("clean/panel.csv").read_text()


@pytest.mark.asyncio
async def test_ingest_missing_input(setup_handler, tmp_path):
    setup_handler.config.athletes = str(tmp_path / "nowhere.csv")
    assert await setup_handler.handle("ingest", command_args("ingest")) == EXIT_USAGE
    assert not setup_handler.store.path("manifest.json").exists()


@pytest.mark.asyncio
async def test_train_before_ingest(setup_handler):
    assert await setup_handler.handle("train", command_args("train")) == EXIT_MISSING_ARTIFACT
    assert not setup_handler.store.path("manifest.json").exists()


@pytest.mark.asyncio
async def test_predict_before_train(setup_handler):
    assert await setup_handler.handle("ingest", command_args("ingest")) == EXIT_OK
    assert await setup_handler.handle("predict", command_args("predict")) == EXIT_MISSING_ARTIFACT


@pytest.mark.asyncio
async def test_train_writes_checkpoints(setup_handler, tmp_path):
    setup_handler.config.dump_states = str(tmp_path / "states")
    await ingest_and_train(setup_handler)

    lstm = read_json(setup_handler, "checkpoints/lstm.json")
    assert lstm["mode"] == "hybrid"
    assert lstm["hidden_dim"] == 8
    assert lstm["trained"]
    arima = read_json(setup_handler, "checkpoints/arima.json")
    assert set(arima) == {"CHN", "FRA", "NEP", "USA"}
    assert len(arima["USA"]["forecast"]) == 10
    assert len(arima["USA"]["rolling"]) == 11
    assert np.array(arima["USA"]["rolling"][0]).shape == (10, 5)
    assert np.array(lstm["state_baseline"]).shape == (82, 5)
    diagnostics = pd.read_csv(setup_handler.store.path("checkpoints/arima_diagnostics.csv"))
    assert len(diagnostics) == 4 * 50
    trace = pd.read_csv(setup_handler.store.path("checkpoints/loss_trace.csv"))
    assert trace["epoch"].tolist() == [1, 2, 3]
    assert (tmp_path / "states" / "USA_1992.csv").is_file()
    assert len(list((tmp_path / "states").glob("*.csv"))) == 4 * 9
    assert "checkpoints/projection.json" in manifest(setup_handler)


@pytest.mark.asyncio
async def test_predict_reports(setup_handler):
    setup_handler.config.next_host = "United States"
    await ingest_and_train(setup_handler)
    assert await setup_handler.handle("predict", command_args("predict")) == EXIT_OK

    predictions = pd.read_csv(setup_handler.store.path("reports/predictions.csv"))
    assert predictions["noc"].tolist() == ["CHN", "FRA", "NEP", "USA"]
    assert set(predictions["year"]) == {2028}
    assert predictions.set_index("noc")["host"].to_dict() == {"CHN": False, "FRA": False, "NEP": False, "USA": True}
    assert (predictions["gold_lo"] <= predictions["gold_hi"]).all()

    first_medal = pd.read_csv(setup_handler.store.path("reports/first_medal.csv"))
    assert first_medal["noc"].tolist() == ["NEP"]
    assert 0.0 < first_medal["probability"].iloc[0] < 1.0

    host_effect = pd.read_csv(setup_handler.store.path("reports/host_effect.csv"))
    assert set(host_effect["scope"]) <= {"medal", "sport", "aggregate"}
    assert (host_effect["scope"] == "aggregate").sum() == 4

    importance = pd.read_csv(setup_handler.store.path("reports/sport_importance.csv"))
    assert (importance["v_p"] > 0).all()
    assert importance.groupby("noc")["rank"].max().max() <= 10

    backtest = pd.read_csv(setup_handler.store.path("reports/backtest.csv"))
    assert set(backtest["year"]) == {2024}
    assert backtest["arima_rmse"].notna().all()

    changes = pd.read_csv(setup_handler.store.path("reports/medal_change.csv"))
    assert changes["change"].is_monotonic_decreasing
    assert "reports/backtest.csv" in manifest(setup_handler)


@pytest.mark.asyncio
async def test_lstm_only_variant(setup_handler):
    setup_handler.config.no_arima = True
    await ingest_and_train(setup_handler)
    assert setup_handler.store.path("checkpoints/lstm_ablated.json").is_file()
    assert setup_handler.store.path("checkpoints/loss_trace_lstm_only.csv").is_file()
    assert not setup_handler.store.path("checkpoints/arima.json").exists()
    assert await setup_handler.handle("predict", command_args("predict")) == EXIT_OK
    backtest = pd.read_csv(setup_handler.store.path("reports/backtest.csv"))
    assert backtest["arima_rmse"].isna().all()


@pytest.mark.asyncio
async def test_panel_without_athletes_stops_at_projection(setup_handler, tmp_path):
    setup_handler.config.athletes = str(write_csv(tmp_path / "athletes.csv", "Name,Sex,NOC,Year,Sport,Event,Medal", []))
    assert await setup_handler.handle("ingest", command_args("ingest")) == EXIT_OK
    panel, athletes = commands.load_clean(setup_handler)
    assert athletes == []
    with pytest.raises(InsufficientDataError, match="covariance"):
        build_features(panel, athletes, setup_handler.config)
    assert await setup_handler.handle("train", command_args("train")) == EXIT_NUMERIC
    assert not setup_handler.store.path("checkpoints/lstm.json").exists()
    assert await setup_handler.handle("predict", command_args("predict")) == EXIT_MISSING_ARTIFACT


@pytest.mark.asyncio
async def test_runs_are_reproducible(run_config, tmp_path):
    outputs = []
    for name in ("first", "second"):
        runner = make_runner(replace(run_config, out=str(tmp_path / name)))
        try:
            await ingest_and_train(runner.handler)
            assert await runner.handler.handle("predict", command_args("predict")) == EXIT_OK
        finally:
            runner.close()
            outputs.append((runner.store.path("reports/predictions.csv").read_bytes(),
                            runner.store.path("manifest.json").read_bytes()))
    assert outputs[0] == outputs[1]


@pytest.mark.asyncio
async def test_unknown_command(setup_handler):
    assert await setup_handler.handle("forecast", command_args("forecast")) == EXIT_USAGE
    assert await setup_handler.handle("analyze", command_args("analyze", "fourier")) == EXIT_USAGE
    assert await setup_handler.handle("analyze", command_args("analyze")) == EXIT_USAGE
    assert not setup_handler.store.path("manifest.json").exists()


@pytest.mark.asyncio
async def test_unknown_command_direct(setup_handler):
    command = commands.UnknownCommand(("ingest", "train"))
    assert await command.execute(setup_handler, command_args("bogus")) == EXIT_USAGE


@pytest.mark.asyncio
async def test_analyze_runs_from_file(setup_handler):
    args = command_args("analyze", "runs", input=str(fixture_path("runs_sequence.csv")))
    assert await setup_handler.handle("analyze", args) == EXIT_OK
    result = read_json(setup_handler, "analysis/runs.json")
    assert result["r"] == 6
    assert result["z"] == pytest.approx(-1.9437, abs=1e-4)


@pytest.mark.asyncio
async def test_analyze_runs_binarizes_any_input(setup_handler, tmp_path):
    counts = write_csv(tmp_path / "counts.csv", "total", ["5", "4", "4", "4", "7", "3", "4", "3", "1"])
    flags = write_csv(tmp_path / "flags.csv", "above_mean", ["1", "1", "1", "1", "1", "0", "1", "0", "0"])
    sequences = []
    for path in (counts, flags):
        assert await setup_handler.handle("analyze", command_args("analyze", "runs", input=str(path))) == EXIT_OK
        sequences.append(read_json(setup_handler, "analysis/runs.json")["sequence"])
    assert sequences[0] == sequences[1] == [1, 1, 1, 1, 1, 0, 1, 0, 0]


@pytest.mark.asyncio
async def test_analyze_runs_from_panel(setup_handler):
    assert await setup_handler.handle("ingest", command_args("ingest")) == EXIT_OK
    assert await setup_handler.handle("analyze", command_args("analyze", "runs", noc="USA")) == EXIT_OK
    result = read_json(setup_handler, "analysis/runs.json")
    assert result["source"] == "panel:USA"
    assert len(result["sequence"]) == 10


@pytest.mark.asyncio
async def test_analyze_runs_needs_input(setup_handler):
    assert await setup_handler.handle("analyze", command_args("analyze", "runs")) == EXIT_USAGE


@pytest.mark.asyncio
async def test_analyze_chi2_table(setup_handler):
    assert await setup_handler.handle("analyze", command_args("analyze", "chi2", table="4,1,1,4")) == EXIT_OK
    result = read_json(setup_handler, "analysis/chi2.json")
    assert result["statistic"] == pytest.approx(3.6)
    assert result["p_value_one_sided"] == pytest.approx(0.0289, abs=1e-4)
    assert result["low_expected"]
    assert await setup_handler.handle("analyze", command_args("analyze", "chi2", table="4,1,1")) == EXIT_USAGE


@pytest.mark.asyncio
async def test_analyze_chi2_coach_period(setup_handler):
    assert await setup_handler.handle("ingest", command_args("ingest")) == EXIT_OK
    args = command_args("analyze", "chi2", noc="USA", sport="Diving")
    assert await setup_handler.handle("analyze", args) == EXIT_OK
    result = read_json(setup_handler, "analysis/chi2.json")
    assert result["table"] == [[1, 2], [4, 3]]


@pytest.mark.asyncio
async def test_analyze_spearman_from_file(setup_handler, tmp_path):
    path = write_csv(tmp_path / "pairs.csv", "x,y", ["1,2", "2,1", "3,4", "4,3", "5,5"])
    assert await setup_handler.handle("analyze", command_args("analyze", "spearman", input=str(path))) == EXIT_OK
    assert read_json(setup_handler, "analysis/spearman.json")["rho"] == pytest.approx(0.8)


@pytest.mark.asyncio
async def test_analyze_shapley_game(setup_handler):
    args = command_args("analyze", "shapley", input=str(fixture_path("shapley_game.json")))
    assert await setup_handler.handle("analyze", args) == EXIT_OK
    result = read_json(setup_handler, "analysis/shapley.json")
    assert result["values"]["1"] == pytest.approx(11 / 6)
    assert result["values"]["2"] == pytest.approx(17 / 6)
    assert result["values"]["3"] == pytest.approx(1 / 3)
    assert abs(result["efficiency_gap"]) < 1e-12
    assert [row[0] for row in result["traditional_advantage"]] == ["2", "1", "3"]


@pytest.mark.asyncio
async def test_analyze_shapley_checkpoint(setup_handler):
    await ingest_and_train(setup_handler)
    args = command_args("analyze", "shapley", noc="CHN", top=2)
    assert await setup_handler.handle("analyze", args) == EXIT_OK
    result = read_json(setup_handler, "analysis/shapley.json")
    assert {"team_history", "host"} <= set(result["values"])
    assert abs(result["efficiency_gap"]) < 1e-9


@pytest.mark.asyncio
async def test_shapley_baseline_is_the_mean_training_state(setup_handler):
    await ingest_and_train(setup_handler)
    features, lstm_document = commands.load_trained_features(setup_handler, HYBRID)
    upto = len(features.calendar)
    states = [state for noc in features.countries for state in country_states(features, noc, HYBRID, upto)]
    baseline = analyze_commands.checkpoint_baseline(lstm_document)
    assert baseline.shape == (82, 5)
    assert np.allclose(baseline, np.mean(states, axis=0))
    assert not np.allclose(baseline, 0.0)
    del lstm_document["state_baseline"]
    with pytest.raises(ModelStateError):
        analyze_commands.checkpoint_baseline(lstm_document)


@pytest.mark.asyncio
async def test_analyze_coach_rmse(setup_handler):
    args = command_args("analyze", "coach", rmse_coach=2.86, rmse_base=0.82)
    assert await setup_handler.handle("analyze", args) == EXIT_OK
    assert read_json(setup_handler, "analysis/coach.json")["effect"] == pytest.approx(2.04)
    half = command_args("analyze", "coach", rmse_coach=2.86)
    assert await setup_handler.handle("analyze", half) == EXIT_USAGE


@pytest.mark.asyncio
async def test_analyze_coach_panel(setup_handler):
    await ingest_and_train(setup_handler)
    args = command_args("analyze", "coach", noc="USA", sport="Diving")
    assert await setup_handler.handle("analyze", args) == EXIT_OK
    result = read_json(setup_handler, "analysis/coach.json")
    assert result["coach_years"] == [2000, 2004, 2008]
    assert result["series"] == [0, 0, 1, 1, 1, 0, 1, 0, 1, 0]
    assert result["contingency"] == [[1, 2], [4, 3]]
    assert 1 <= len(result["investment"]) <= 3
    assert result["effect"] == pytest.approx(result["rmse_coach"] - result["rmse_base"])
    assert len(result["predicted_total"]) == len(result["actual_total"]) == 9
    assert result["actual_total"][-1] == 1.0


@pytest.mark.asyncio
async def test_analyze_coach_uses_model_forecasts(setup_handler):
    await ingest_and_train(setup_handler)
    features, lstm_document = commands.load_trained_features(setup_handler, HYBRID)
    params = analyze_commands.LstmParams.from_json(lstm_document)
    years, predicted, actual = analyze_commands.predicted_totals(features, params, HYBRID, "USA", setup_handler.config.knn_k)
    assert years == features.calendar[1:]
    assert actual.tolist() == [5.0, 4.0, 4.0, 4.0, 7.0, 3.0, 4.0, 3.0, 1.0]
    assert await setup_handler.handle("analyze", command_args("analyze", "coach", noc="USA", sport="Diving")) == EXIT_OK
    result = read_json(setup_handler, "analysis/coach.json")
    assert result["predicted_total"] == pytest.approx(predicted.tolist())


@pytest.mark.asyncio
async def test_analyze_coach_needs_a_checkpoint(setup_handler):
    assert await setup_handler.handle("ingest", command_args("ingest")) == EXIT_OK
    args = command_args("analyze", "coach", noc="USA", sport="Diving")
    assert await setup_handler.handle("analyze", args) == EXIT_MISSING_ARTIFACT


@pytest.mark.asyncio
async def test_analyze_gender(setup_handler):
    assert await setup_handler.handle("ingest", command_args("ingest")) == EXIT_OK
    assert await setup_handler.handle("analyze", command_args("analyze", "gender")) == EXIT_OK
    table = pd.read_csv(setup_handler.store.path("analysis/gender.csv"))
    assert table["year"].tolist() == [1988 + 4 * i for i in range(10)]
    totals = read_json(setup_handler, "analysis/gender.json")["totals"]
    assert totals["male"] + totals["female"] > 0


@pytest.mark.asyncio
async def test_analyze_ablate_synthetic(setup_handler):
    setup_handler.config.seeds = [1, 2]
    args = command_args("analyze", "ablate", synthetic=True)
    assert await setup_handler.handle("analyze", args) == EXIT_OK
    table = pd.read_csv(setup_handler.store.path("analysis/ablate.csv"))
    assert table["seed"].tolist() == [1, 2]
    summary = read_json(setup_handler, "analysis/ablate.json")
    assert summary["source"] == "synthetic"
    assert 0 <= summary["hybrid_wins"] <= 2


def test_analyze_command_map():
    command = analyze_commands.AnalyzeCommand()
    assert set(command.command_map) == {"RUNS", "CHI2", "SPEARMAN", "SHAPLEY", "COACH", "GENDER", "ABLATE", "SENSITIVITY"}


@pytest.mark.asyncio
async def test_main_run(tmp_path):
    out = tmp_path / "cli"
    code = await run(["analyze", "chi2", "--table", "4,1,1,4", "--out", str(out)], environ={})
    assert code == EXIT_OK
    assert (out / "analysis" / "chi2.json").is_file()
    assert (out / "manifest.json").is_file()
    assert await run(["train", "--window", "0", "--out", str(out)], environ={}) == EXIT_USAGE
    assert await run(["ingest", "--out", str(out)], environ={"MEDALCAST_SEED": "x"}) == EXIT_USAGE
    missing = tmp_path / "nowhere.csv"
    assert await run(["ingest", "--athletes", str(missing), "--out", str(out)], environ={}) == EXIT_USAGE
    assert not (out / "clean").exists()
