import argparse
import asyncio
import logging
import os
import sys
from typing import List, Optional

from app.AsyncRunner import AsyncRunner
from app.utils.config_utils import resolve_config
from app.utils.exceptions import MedalcastError


def _seed_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers, got '{text}'") from e


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="medalcast", description="Forecast Olympic medal tables with a hybrid ARIMA-LSTM.")
    parser.add_argument('command', help='ingest, train, predict or analyze')
    parser.add_argument('subcommand', nargs='?', default=None,
                        help='analysis to run: runs, chi2, spearman, shapley, coach, gender, ablate or sensitivity')
    parser.add_argument('--config', type=str, default=None, help='JSON file with RunConfig keys')

    inputs = parser.add_argument_group('inputs')
    inputs.add_argument('--athletes', type=str, default=None, help='Athlete results CSV')
    inputs.add_argument('--tallies', type=str, default=None, help='Medal counts CSV')
    inputs.add_argument('--hosts', type=str, default=None, help='Host cities CSV')
    inputs.add_argument('--programs', type=str, default=None, help='Event program CSV')
    inputs.add_argument('--registry', type=str, default=None, help='Country alias registry CSV')
    inputs.add_argument('--coach-years', dest='coach_years', type=str, default=None, help='Coaching periods CSV')
    inputs.add_argument('--out', type=str, default=None, help='Output directory')

    model = parser.add_argument_group('model')
    model.add_argument('--seed', type=int, default=None, help='Seed for every random stream (default 42)')
    model.add_argument('--window', type=int, default=None, help='Sliding window of Games for active athletes')
    model.add_argument('--max-p', dest='max_p', type=int, default=None)
    model.add_argument('--max-q', dest='max_q', type=int, default=None)
    model.add_argument('-d', dest='d', type=int, default=None, help='ARIMA differencing order')
    model.add_argument('--criterion', type=str, default=None, choices=('aic', 'bic'))
    model.add_argument('--epochs', type=int, default=None)
    model.add_argument('--hidden', type=int, default=None)
    model.add_argument('--lr', type=float, default=None)
    model.add_argument('--clip', type=float, default=None)
    model.add_argument('--init-scale', dest='init_scale', type=float, default=None)
    model.add_argument('--no-forget-bias', dest='no_forget_bias', action='store_true', help='Start forget-gate biases at 0')
    model.add_argument('--knn-k', dest='knn_k', type=int, default=None)
    model.add_argument('--logistic-slope', dest='logistic_slope', type=float, default=None)
    model.add_argument('--no-arima', dest='no_arima', action='store_true', default=None,
                       help='Train and predict with the lstm_only variant')
    model.add_argument('--next-host', dest='next_host', type=str, default=None, help='Host country of the forecast Games')

    run = parser.add_argument_group('run')
    run.add_argument('--jobs', type=int, default=None, help='Worker threads for per-country work (default 1)')
    run.add_argument('--seeds', type=_seed_list, default=None, help='Comma-separated seeds for ablate and sensitivity')
    run.add_argument('--log-level', dest='log_level', type=str, default=None)
    run.add_argument('--dump-states', dest='dump_states', type=str, default=None, help='Directory for state matrix CSVs')
    run.add_argument('--emit-clean', dest='emit_clean', type=str, default=None, help='Extra path for the cleaned panel CSV')

    analysis = parser.add_argument_group('analyze')
    analysis.add_argument('--input', type=str, default=None, help='Input file for runs, spearman or shapley')
    analysis.add_argument('--table', type=str, default=None, help='2x2 table as a,b,c,d for chi2')
    analysis.add_argument('--noc', type=str, default=None)
    analysis.add_argument('--sport', type=str, default=None)
    analysis.add_argument('--top', type=int, default=None)
    analysis.add_argument('--synthetic', action='store_true', help='Run ablate on the synthetic AR(1) panel')
    analysis.add_argument('--rmse-coach', dest='rmse_coach', type=float, default=None)
    analysis.add_argument('--rmse-base', dest='rmse_base', type=float, default=None)
    return parser


def overrides_from(args: argparse.Namespace) -> dict:
    overrides = dict(vars(args))
    if args.no_forget_bias:
        overrides["forget_bias"] = 0.0
    return overrides


async def run(argv: Optional[List[str]] = None, environ=None) -> int:
    args = build_parser().parse_args(argv)
    environ = os.environ if environ is None else environ
    try:
        config = resolve_config(args.config, overrides_from(args), environ)
    except MedalcastError as e:
        logging.basicConfig(level=logging.INFO)
        logging.error(f"invalid configuration: {e}")
        return e.exit_code

    logging.basicConfig(level=getattr(logging, config.log_level.upper(), logging.INFO))
    runner = await AsyncRunner.create(config)
    return await runner.run(args.command, args)


def main() -> None:
    sys.exit(asyncio.run(run()))


if __name__ == "__main__":
    main()
