import argparse
import logging
from pathlib import Path

from app.commands.commands import CLEAN_DIR, MedalcastCommand
from app.utils.artifact_utils import CSV_FLOAT_FORMAT
from app.utils.constants import EXIT_OK, UNREADABLE_FILE_ERROR
from app.utils.csv_utils import (
    NocRegistry,
    athletes_frame,
    build_panel,
    hosts_frame,
    load_athletes,
    load_hosts,
    load_programs,
    load_tallies,
    tallies_frame,
    validate_tally_ranges,
)
from app.utils.exceptions import DataIOError

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from app.AsyncHandler import AsyncCommandHandler


class IngestCommand(MedalcastCommand):
    async def execute(self, handler: 'AsyncCommandHandler', args: argparse.Namespace) -> int:
        config = handler.config
        store = handler.store
        registry = NocRegistry.load(config.registry)
        athletes = load_athletes(config.athletes, registry)
        tallies = load_tallies(config.tallies, registry)
        range_warnings = validate_tally_ranges(tallies)
        hosts = load_hosts(config.hosts, registry, config.cancelled_years)
        panel = build_panel(athletes.records, tallies, hosts)

        store.write_csv(f"{CLEAN_DIR}/athletes.csv", athletes_frame(athletes.records))
        store.write_csv(f"{CLEAN_DIR}/tallies.csv", tallies_frame(tallies))
        store.write_csv(f"{CLEAN_DIR}/hosts.csv", hosts_frame(hosts))
        store.write_csv(f"{CLEAN_DIR}/panel.csv", panel.to_frame())

        program_sports = 0
        if config.programs:
            programs = load_programs(config.programs)
            program_sports = len(programs)
            store.write_csv(f"{CLEAN_DIR}/programs.csv", programs.reset_index())

        if config.emit_clean:
            target = Path(config.emit_clean)
            try:
                target.parent.mkdir(parents=True, exist_ok=True)
                panel.to_frame().to_csv(target, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
            except OSError as e:
                raise DataIOError(UNREADABLE_FILE_ERROR.format(path=target, reason=e)) from e
            logging.info(f"Emitted cleaned panel to {target}")

        report = {
            "athletes": {"loaded": len(athletes.records), "dropped": athletes.dropped},
            "tallies": len(tallies),
            "games": {
                "held": [game.year for game in hosts if game.held],
                "not_held": [game.year for game in hosts if not game.held],
            },
            "countries": len(panel.countries),
            "panel_rows": len(panel.countries) * len(panel.years),
            "program_sports": program_sports,
            "range_warnings": range_warnings,
        }
        store.write_json(f"{CLEAN_DIR}/ingest_report.json", report)
        logging.info(f"Ingested {len(panel.countries)} countries, dropped {athletes.dropped} athlete rows")
        return EXIT_OK
