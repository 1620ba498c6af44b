import logging
from collections import Counter
from dataclasses import dataclass
from itertools import islice
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from app.utils.constants import (
    ATHLETE_CATEGORIES,
    EMBEDDING_DIM,
    EMBEDDING_SEED,
    MAX_CONSECUTIVE_GAMES,
    MEDAL_RANK,
    MEDALS,
    SCALAR_DOMAINS,
    SCALAR_RANGE_ERROR,
    TEAM_FEATURES,
    UNKNOWN_CATEGORY_ERROR,
)
from app.utils.exceptions import CodebookCollisionError, EmbeddingError, RangeError, UnknownCategoryValueError
from app.utils.seed_utils import MASK64, hash64, splitmix64


@dataclass(frozen=True)
class AthleteSummary:
    name: str
    noc: str
    earliest_edition: int
    games: int
    best_award: str
    sport: str
    sports: Tuple[str, ...]
    years: Tuple[int, ...]

    @property
    def last_year(self) -> int:
        return self.years[-1]


def _longest_consecutive_run(years: Sequence[int], calendar: Sequence[int]) -> int:
    positions = sorted(calendar.index(year) for year in years if year in calendar)
    longest = run = 1 if positions else 0
    for previous, current in zip(positions, positions[1:]):
        run = run + 1 if current == previous + 1 else 1
        longest = max(longest, run)
    return longest


def summarize_athletes(records, up_to_year: Optional[int] = None, calendar: Optional[Sequence[int]] = None,
                       max_consecutive: Optional[int] = MAX_CONSECUTIVE_GAMES) -> List[AthleteSummary]:
    """Collapse athlete rows into one summary per (name, country).

    Only rows up to and including ``up_to_year`` are used. Athletes with more than
    ``max_consecutive`` back-to-back Games on ``calendar`` are left out.
    """
    grouped: Dict[Tuple[str, str], list] = {}
    for record in records:
        if up_to_year is not None and record.year > up_to_year:
            continue
        grouped.setdefault((record.name, record.noc), []).append(record)

    calendar = sorted(calendar) if calendar is not None else sorted({r.year for r in records})
    summaries = []
    for (name, noc), rows in sorted(grouped.items()):
        years = tuple(sorted({row.year for row in rows}))
        if max_consecutive is not None and _longest_consecutive_run(years, calendar) > max_consecutive:
            continue
        sport_counts = Counter(row.sport for row in rows)
        # most frequent sport, alphabetical on ties
        sport = min(sport_counts, key=lambda s: (-sport_counts[s], s))
        summaries.append(AthleteSummary(
            name=name,
            noc=noc,
            earliest_edition=min(row.edition for row in rows),
            games=len(years),
            best_award=max((row.medal for row in rows), key=MEDAL_RANK.__getitem__),
            sport=sport,
            sports=tuple(sorted(sport_counts)),
            years=years,
        ))
    return summaries


def sinusoidal_codeword(count: int, dim: int = EMBEDDING_DIM) -> np.ndarray:
    vector = np.empty(dim)
    for k in range(0, dim, 2):
        angle = count / 100 ** (k / dim)
        vector[k] = np.sin(angle)
        if k + 1 < dim:
            vector[k + 1] = np.cos(angle)
    return vector


class EmbeddingCodebook:
    def __init__(self, seed: int = EMBEDDING_SEED, dim: int = EMBEDDING_DIM,
                 scalar_domains: Optional[Dict[str, int]] = None):
        self.seed = seed
        self.dim = dim
        self.categories: Dict[str, Dict[str, np.ndarray]] = {}
        self.scalar_domains = dict(scalar_domains if scalar_domains is not None else SCALAR_DOMAINS)
        self._scalar_tables: Dict[str, np.ndarray] = {}
        for feature, max_count in self.scalar_domains.items():
            self._scalar_tables[feature] = self._build_scalar_table(max_count)

    def _categorical_codeword(self, category: str, value: str) -> np.ndarray:
        state = (self.seed * 0x9E3779B97F4A7C15) & MASK64
        state ^= hash64(f"category:{category}")
        state = (state * 0xD6E8FEB86659FD93) & MASK64
        state ^= hash64(f"value:{value}")
        draws = islice(splitmix64(state), self.dim)
        return np.array([(z >> 11) * 2.0 ** -53 * 2.0 - 1.0 for z in draws])

    def _build_scalar_table(self, max_count: int) -> np.ndarray:
        table = np.stack([sinusoidal_codeword(count, self.dim) for count in range(max_count + 1)])
        if max_count >= 3:
            near = np.linalg.norm(table[1:-2] - table[:-3], axis=1)
            far = np.linalg.norm(table[3:] - table[:-3], axis=1)
            if not np.all(near < far):
                raise EmbeddingError("scalar codewords are not distance-monotone")
        return table

    def register(self, category: str, values: Iterable) -> None:
        codewords = self.categories.setdefault(category, {})
        for value in values:
            key = str(value)
            if key not in codewords:
                codewords[key] = self._categorical_codeword(category, key)
        self._check_collisions(category)

    def _check_collisions(self, category: str) -> None:
        codewords = self.categories[category]
        if not codewords:
            return
        matrix = np.stack(list(codewords.values()))
        if len(np.unique(matrix, axis=0)) != len(matrix):
            raise CodebookCollisionError(f"duplicate codewords in category '{category}'")

    def embed_category(self, category: str, value) -> np.ndarray:
        codewords = self.categories.get(category, {})
        key = str(value)
        if key not in codewords:
            raise UnknownCategoryValueError(UNKNOWN_CATEGORY_ERROR.format(value=key, category=category))
        return codewords[key].copy()

    def embed_scalar(self, feature: str, count: int) -> np.ndarray:
        if feature not in self.scalar_domains:
            raise UnknownCategoryValueError(UNKNOWN_CATEGORY_ERROR.format(value=count, category=feature))
        max_count = self.scalar_domains[feature]
        if not 0 <= count <= max_count or int(count) != count:
            raise RangeError(SCALAR_RANGE_ERROR.format(count=count, max_count=max_count, feature=feature))
        return self._scalar_tables[feature][int(count)].copy()

    def scalar_entries(self, feature: str) -> Tuple[np.ndarray, np.ndarray]:
        """Counts 0..max and their codewords, row-aligned."""
        table = self._scalar_tables[feature]
        return np.arange(len(table)), table.copy()

    def athlete_vector(self, summary: AthleteSummary) -> np.ndarray:
        parts = {
            "noc": summary.noc,
            "edition": summary.earliest_edition,
            "games": summary.games,
            "awards": summary.best_award,
            "sport": summary.sport,
        }
        return np.concatenate([self.embed_category(category, parts[category]) for category in ATHLETE_CATEGORIES])

    def team_matrix(self, tally) -> np.ndarray:
        return np.column_stack([self.embed_scalar(feature, getattr(tally, feature)) for feature in TEAM_FEATURES])

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "dim": self.dim,
            "scalar_domains": self.scalar_domains,
            "categories": {
                category: {value: vector.tolist() for value, vector in sorted(codewords.items())}
                for category, codewords in sorted(self.categories.items())
            },
        }

    @classmethod
    def from_json(cls, document: dict) -> "EmbeddingCodebook":
        codebook = cls(seed=document["seed"], dim=document["dim"], scalar_domains=document["scalar_domains"])
        for category, codewords in document["categories"].items():
            codebook.categories[category] = {value: np.array(vector, dtype=float) for value, vector in codewords.items()}
        return codebook


def build_codebook(summaries: Sequence[AthleteSummary], nocs: Iterable[str] = (), sports: Iterable[str] = (),
                   max_edition: int = 1, max_games: int = 1, seed: int = EMBEDDING_SEED,
                   dim: int = EMBEDDING_DIM) -> EmbeddingCodebook:
    """Register every value the summaries use, widened by the vocabularies passed in."""
    codebook = EmbeddingCodebook(seed=seed, dim=dim)
    codebook.register("noc", sorted(set(nocs) | {s.noc for s in summaries}))
    max_edition = max([max_edition] + [s.earliest_edition for s in summaries])
    max_games = max([max_games] + [s.games for s in summaries])
    codebook.register("edition", range(1, max_edition + 1))
    codebook.register("games", range(1, max_games + 1))
    codebook.register("awards", MEDALS)
    codebook.register("sport", sorted(set(sports) | {s.sport for s in summaries}))
    logging.info(f"Built codebook: {', '.join(f'{c}={len(v)}' for c, v in sorted(codebook.categories.items()))}")
    return codebook
