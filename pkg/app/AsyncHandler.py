import argparse
import logging

from typing import TYPE_CHECKING

from app.commands import analyze_commands, commands, ingest_commands, predict_commands, train_commands
from app.utils.constants import EXIT_OK
from app.utils.exceptions import MedalcastError

if TYPE_CHECKING:
    from .AsyncRunner import AsyncRunner


class AsyncCommandHandler:
    def __init__(self, runner: 'AsyncRunner'):
        self.runner = runner
        self.config = runner.config
        self.store = runner.store
        self.command_map = {
            "INGEST": ingest_commands.IngestCommand(),
            "TRAIN": train_commands.TrainCommand(),
            "PREDICT": predict_commands.PredictCommand(),
            "ANALYZE": analyze_commands.AnalyzeCommand(),
        }

    async def handle(self, name: str, args: argparse.Namespace) -> int:
        cmd_name = name.upper()  # command names are case-insensitive
        known = tuple(key.lower() for key in self.command_map)
        command = self.command_map.get(cmd_name, commands.UnknownCommand(known))
        logging.info(f"Command: {cmd_name}")
        try:
            code = await command.execute(self, args)
        except MedalcastError as e:
            logging.error(f"{name} failed: {e}")
            code = e.exit_code
        if code == EXIT_OK:
            self.store.commit_manifest()
        logging.info(f"{name} finished with exit code {code}")
        return code
