import argparse
import json
import logging
from dataclasses import asdict
from pathlib import Path
from typing import List

import numpy as np
import pandas as pd

from app.analytics.coach import (
    coach_contingency_table,
    coach_effect_coefficient,
    coach_effect_rmse,
    coach_impact_index,
    coach_investment_ranking,
    coach_years_of,
    effect_from_rmse,
    load_coach_years,
    sport_medal_series,
)
from app.analytics.gender import gender_trend
from app.analytics.harness import ablation_run, sensitivity_grid
from app.analytics.shapley import (
    ShapleyConfig,
    default_state_groups,
    shapley_exact,
    state_attribution,
    top_sports,
    traditional_advantage,
)
from app.analytics.stat_tests import binarize_by_mean, chi_square_2x2, prediction_change_correlation, runs_test, spearman
from app.commands.commands import (
    ANALYSIS_DIR,
    MedalcastCommand,
    UnknownCommand,
    load_clean,
    load_trained_features,
    mode_of,
)
from app.models.interval_decoder import MEDAL_FEATURES, decode_team_output
from app.models.lstm import LstmParams, predict_next
from app.models.pipeline import build_features, forecast_next, next_states, synthetic_dataset
from app.utils.constants import EXIT_OK, MISSING_INPUT_ERROR, UNREADABLE_FILE_ERROR
from app.utils.exceptions import DataIOError, ModelStateError, SchemaError, UsageError

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from app.AsyncHandler import AsyncCommandHandler

DEFAULT_TOP = 3


def _require(value, subcommand: str, what: str):
    if value is None:
        raise UsageError(MISSING_INPUT_ERROR.format(subcommand=subcommand, what=what))
    return value


def read_numeric_columns(path, count: int) -> List[np.ndarray]:
    """The first ``count`` columns of a CSV as float arrays."""
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataIOError(UNREADABLE_FILE_ERROR.format(path=path, reason=e)) from e
    if frame.shape[1] < count:
        raise SchemaError(f"{path} needs at least {count} columns, got {frame.shape[1]}")
    try:
        return [pd.to_numeric(frame.iloc[:, i]).to_numpy(dtype=float) for i in range(count)]
    except ValueError as e:
        raise SchemaError(f"{path} holds non-numeric values: {e}") from e


def parse_table(text: str) -> np.ndarray:
    try:
        cells = [int(cell) for cell in text.split(",")]
    except ValueError as e:
        raise UsageError(f"table must be four comma-separated counts, got '{text}'") from e
    if len(cells) != 4:
        raise UsageError(f"table must be four comma-separated counts, got '{text}'")
    return np.array(cells).reshape(2, 2)


def checkpoint_baseline(lstm_document: dict) -> np.ndarray:
    """Mean training state stored with the LSTM weights."""
    if "state_baseline" not in lstm_document:
        raise ModelStateError("LSTM checkpoint has no state baseline, rerun train")
    return np.array(lstm_document["state_baseline"], dtype=float)


def predicted_totals(features, params: LstmParams, mode: str, noc: str, knn_k: int):
    """One-step model forecasts of a country's medal total for every Games after the first."""
    country = features.series[noc]
    horizons = range(1, len(features.calendar))
    predicted = []
    for upto in horizons:
        vector = forecast_next(features, noc, params, mode, upto, host_next=country.hosts[upto])
        intervals = decode_team_output(vector, features.codebook, knn_k, MEDAL_FEATURES)
        predicted.append(sum(interval.midpoint for interval in intervals.values()))
    actual = [float(country.counts[upto][:len(MEDAL_FEATURES)].sum()) for upto in horizons]
    return [features.calendar[upto] for upto in horizons], np.array(predicted), np.array(actual)


class RunsAnalysis(MedalcastCommand):
    async def execute(self, handler: 'AsyncCommandHandler', args: argparse.Namespace) -> int:
        if args.input:
            (values,) = read_numeric_columns(args.input, 1)
            source = str(args.input)
        else:
            noc = _require(args.noc, "runs", "--input or --noc")
            panel, _ = load_clean(handler)
            values = np.array([e.gold + e.silver + e.bronze for e in panel.series(noc)], dtype=float)
            source = f"panel:{noc}"
        sequence = binarize_by_mean(values)
        result = runs_test(sequence)
        handler.store.write_json(f"{ANALYSIS_DIR}/runs.json", {"source": source, "sequence": sequence, **asdict(result)})
        logging.info(f"Runs test on {source}: r={result.r} Z={result.z:.4f} p={result.p_value:.4f}")
        return EXIT_OK


class ChiSquareAnalysis(MedalcastCommand):
    async def execute(self, handler: 'AsyncCommandHandler', args: argparse.Namespace) -> int:
        if args.table:
            table = parse_table(args.table)
            source = "table"
        else:
            noc = _require(args.noc, "chi2", "--table or --noc with --sport")
            sport = _require(args.sport, "chi2", "--sport")
            panel, athletes = load_clean(handler)
            periods = load_coach_years(_require(handler.config.coach_years, "chi2", "coach_years"))
            chosen = periods[(periods["noc"] == noc) & (periods["sport"] == sport)]
            if chosen.empty:
                raise UsageError(f"no coaching period for {noc} {sport}")
            series = sport_medal_series(athletes, noc, panel.years).get(sport, [0] * len(panel.years))
            table = coach_contingency_table(series, panel.years, int(chosen["start"].min())).as_array()
            source = f"coach:{noc}:{sport}"
        result = chi_square_2x2(table)
        handler.store.write_json(f"{ANALYSIS_DIR}/chi2.json", {"source": source, "table": table, **asdict(result)})
        logging.info(f"Chi-square on {source}: {result.statistic:.4f} p={result.p_value:.4f}")
        return EXIT_OK


class SpearmanAnalysis(MedalcastCommand):
    async def execute(self, handler: 'AsyncCommandHandler', args: argparse.Namespace) -> int:
        if args.input:
            x, y = read_numeric_columns(args.input, 2)
            document = {"source": str(args.input), "rho": spearman(x, y)}
        else:
            document = self.prediction_changes(handler, _require(args.noc, "spearman", "--input or --noc"))
        handler.store.write_json(f"{ANALYSIS_DIR}/spearman.json", document)
        logging.info(f"Spearman rho={document['rho']:.4f}")
        return EXIT_OK

    @staticmethod
    def prediction_changes(handler: 'AsyncCommandHandler', noc: str) -> dict:
        """Correlate changes of the predicted gold midpoint with changes of the predicted total."""
        config = handler.config
        mode = mode_of(config)
        features, lstm_document = load_trained_features(handler, mode)
        params = LstmParams.from_json(lstm_document)
        country = features.series[noc]
        horizons = list(range(2, len(features.calendar)))
        gold, total = [], []
        for upto in horizons:
            vector = forecast_next(features, noc, params, mode, upto, host_next=country.hosts[upto])
            intervals = decode_team_output(vector, features.codebook, config.knn_k, MEDAL_FEATURES)
            gold.append(intervals["gold"].midpoint)
            total.append(sum(interval.midpoint for interval in intervals.values()))
        return {
            "source": f"predictions:{noc}",
            "years": [features.calendar[upto] for upto in horizons],
            "gold_mid": gold,
            "total_mid": total,
            "rho": prediction_change_correlation(gold, total),
        }


class ShapleyAnalysis(MedalcastCommand):
    async def execute(self, handler: 'AsyncCommandHandler', args: argparse.Namespace) -> int:
        if args.input:
            document = self.from_game_file(Path(args.input))
        else:
            document = self.from_checkpoint(handler, _require(args.noc, "shapley", "--input or --noc"),
                                            args.top or DEFAULT_TOP)
        handler.store.write_json(f"{ANALYSIS_DIR}/shapley.json", document)
        logging.info(f"Shapley attribution over {len(document['values'])} features, efficiency gap {document['efficiency_gap']:.2e}")
        return EXIT_OK

    @staticmethod
    def from_game_file(path: Path) -> dict:
        """A JSON game: {"features": [...], "values": {"a,b": f({a, b}), "": f({})}} with sorted, comma-joined keys."""
        try:
            game = json.loads(path.read_text(encoding="utf-8"))
        except OSError as e:
            raise DataIOError(UNREADABLE_FILE_ERROR.format(path=path, reason=e)) from e
        except json.JSONDecodeError as e:
            raise SchemaError(f"{path} is not valid JSON: {e}") from e
        features = list(game["features"])
        table = game["values"]
        values = shapley_exact(ShapleyConfig(features, lambda subset: float(table[",".join(sorted(subset))])))
        grand = float(table[",".join(sorted(features))]) - float(table[""])
        return {
            "source": str(path),
            "values": values,
            "efficiency_gap": sum(values.values()) - grand,
            "traditional_advantage": traditional_advantage(values),
        }

    @staticmethod
    def from_checkpoint(handler: 'AsyncCommandHandler', noc: str, top: int) -> dict:
        config = handler.config
        mode = mode_of(config)
        features, lstm_document = load_trained_features(handler, mode)
        params = LstmParams.from_json(lstm_document)
        upto = len(features.calendar)
        history = next_states(features, noc, mode, upto)
        sports = top_sports(history[-1], features.sport_index, top)
        groups = default_state_groups(features.sport_index, sports)
        baseline = checkpoint_baseline(lstm_document)
        values = state_attribution(params, history, baseline, groups, features.codebook, config.knn_k)

        def gold_at(state) -> float:
            vector = predict_next(params, list(history[:-1]) + [state])
            return decode_team_output(vector, features.codebook, config.knn_k, ("gold",))["gold"].midpoint

        sport_values = {name: value for name, value in values.items() if name.startswith("sport:")}
        return {
            "source": f"checkpoint:{noc}",
            "groups": groups,
            "values": values,
            "efficiency_gap": sum(values.values()) - (gold_at(history[-1]) - gold_at(baseline)),
            "traditional_advantage": traditional_advantage(sport_values),
        }


class CoachAnalysis(MedalcastCommand):
    async def execute(self, handler: 'AsyncCommandHandler', args: argparse.Namespace) -> int:
        if args.rmse_coach is not None or args.rmse_base is not None:
            rmse_coach = _require(args.rmse_coach, "coach", "--rmse-coach")
            rmse_base = _require(args.rmse_base, "coach", "--rmse-base")
            document = {"source": "rmse", **asdict(effect_from_rmse(rmse_coach, rmse_base))}
        else:
            document = self.from_checkpoint(handler, _require(args.noc, "coach", "--noc or --rmse-coach/--rmse-base"),
                                       args.sport, args.top or DEFAULT_TOP)
        handler.store.write_json(f"{ANALYSIS_DIR}/coach.json", document)
        return EXIT_OK

    @staticmethod
    def from_checkpoint(handler: 'AsyncCommandHandler', noc: str, sport, top: int) -> dict:
        config = handler.config
        mode = mode_of(config)
        features, lstm_document = load_trained_features(handler, mode)
        _, athletes = load_clean(handler)
        years = features.calendar
        if noc not in features.series:
            raise UsageError(f"no panel rows for {noc}")
        index = features.sport_index
        block = features.series[noc].athlete_blocks[-1] / features.athlete_scale
        importance = [(index.sport(row), float(np.linalg.norm(block[row]))) for row in range(len(index))]
        importance = [(name, v_p) for name, v_p in importance if v_p > 0]
        series = sport_medal_series(athletes, noc, years)
        document = {
            "source": f"panel:{noc}",
            "investment": [
                {"sport": name, "v_p": v_p, "e_coach": e_coach, "index_coach": index_coach}
                for name, v_p, e_coach, index_coach in coach_investment_ranking(importance, series, top)
            ],
        }
        if sport is None:
            return document

        counts = series.get(sport, [0] * len(years))
        periods = load_coach_years(_require(config.coach_years, "coach", "coach_years"))
        coached = coach_years_of(periods, noc, sport, years)
        predicted_years, predictions, actuals = predicted_totals(features, LstmParams.from_json(lstm_document), mode, noc,
                                                                 config.knn_k)
        effect = coach_effect_rmse(predictions, actuals, predicted_years, coached)
        effect.e_coach = coach_effect_coefficient(counts)
        v_p = dict(importance).get(sport, 0.0)
        effect.index_coach = coach_impact_index(v_p, effect.e_coach)
        table = coach_contingency_table(counts, years, min(coached))
        chi2 = chi_square_2x2(table.as_array())
        logging.info(f"Coach effect for {noc} {sport}: {effect.effect:.4f}, E_coach {effect.e_coach:.4f}")
        document.update({
            "sport": sport,
            "series": counts,
            "coach_years": coached,
            "predicted_total": predictions,
            "actual_total": actuals,
            **asdict(effect),
            "contingency": table.as_array(),
            "chi2": asdict(chi2),
        })
        return document


class GenderAnalysis(MedalcastCommand):
    async def execute(self, handler: 'AsyncCommandHandler', args: argparse.Namespace) -> int:
        _, athletes = load_clean(handler)
        trend = gender_trend(athletes)
        handler.store.write_csv(f"{ANALYSIS_DIR}/gender.csv", trend.table)
        handler.store.write_json(f"{ANALYSIS_DIR}/gender.json", {"totals": trend.totals, "years": len(trend.table)})
        return EXIT_OK


class AblationAnalysis(MedalcastCommand):
    async def execute(self, handler: 'AsyncCommandHandler', args: argparse.Namespace) -> int:
        config = handler.config
        if args.synthetic:
            features = synthetic_dataset(config.seed)
            source = "synthetic"
        else:
            panel, athletes = load_clean(handler)
            features = build_features(panel, athletes, config)
            source = "panel"
        seeds = config.harness_seeds
        report = ablation_run(features, config, seeds, mapper=handler.runner.map)
        handler.store.write_csv(f"{ANALYSIS_DIR}/ablate.csv", report.table)
        handler.store.write_json(f"{ANALYSIS_DIR}/ablate.json", {
            "source": source,
            "seeds": seeds,
            "summary": report.summary,
            "hybrid_wins": report.hybrid_wins,
        })
        logging.info(f"Hybrid matched or beat lstm_only in {report.hybrid_wins} of {len(seeds)} seeds")
        return EXIT_OK


class SensitivityAnalysis(MedalcastCommand):
    async def execute(self, handler: 'AsyncCommandHandler', args: argparse.Namespace) -> int:
        config = handler.config
        panel, athletes = load_clean(handler)
        seeds = config.harness_seeds
        report = sensitivity_grid(panel, athletes, config, seeds, mapper=handler.runner.map)
        rows = [
            {"seed": seed, "athlete_fraction": athlete_fraction, "history_fraction": history_fraction,
             "accuracy": grid.loc[athlete_fraction, history_fraction]}
            for seed, grid in report.grids.items()
            for athlete_fraction in report.fractions
            for history_fraction in report.fractions
        ]
        handler.store.write_csv(f"{ANALYSIS_DIR}/sensitivity.csv", pd.DataFrame(
            rows, columns=["seed", "athlete_fraction", "history_fraction", "accuracy"]))
        mean_grid = report.mean_grid()
        handler.store.write_json(f"{ANALYSIS_DIR}/sensitivity.json", {
            "fractions": report.fractions,
            "monotone_seeds": report.monotone_seeds,
            "full_accuracy": {str(seed): accuracy for seed, accuracy in report.full_accuracy.items()},
            "mean_grid": mean_grid.to_numpy(),
        })
        return EXIT_OK


class AnalyzeCommand(MedalcastCommand):
    def __init__(self):
        self.command_map = {
            "RUNS": RunsAnalysis(),
            "CHI2": ChiSquareAnalysis(),
            "SPEARMAN": SpearmanAnalysis(),
            "SHAPLEY": ShapleyAnalysis(),
            "COACH": CoachAnalysis(),
            "GENDER": GenderAnalysis(),
            "ABLATE": AblationAnalysis(),
            "SENSITIVITY": SensitivityAnalysis(),
        }

    async def execute(self, handler: 'AsyncCommandHandler', args: argparse.Namespace) -> int:
        name = (args.subcommand or "").upper()
        known = tuple(key.lower() for key in self.command_map)
        command = self.command_map.get(name, UnknownCommand(known))
        logging.info(f"Analysis: {name or '(none)'}")
        return await command.execute(handler, args)
