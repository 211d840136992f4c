"""
Evaluation Harness
Averages per-game agent results (kills, damage, deaths) into summaries and
orders summaries with damage as the main performance factor.
"""

import functools
import json
import logging
import math
from dataclasses import asdict, dataclass
from typing import Dict, List, Tuple

import pandas as pd

from config.player_data import EVAL_GAME_SECONDS

logger = logging.getLogger(__name__)

PRIMARY_METRICS = ("damage", "kills")


@dataclass
class GameResult:
    kills: float
    damage: float
    deaths: float
    duration_s: float = EVAL_GAME_SECONDS

    def __post_init__(self):
        for name in ('kills', 'damage', 'deaths'):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be finite and non-negative, got {value!r}")
        if not (math.isfinite(self.duration_s) and self.duration_s > 0):
            raise ValueError(f"duration_s must be positive, got {self.duration_s!r}")


@dataclass
class EvalSummary:
    mean_kills: float
    mean_damage: float
    mean_deaths: float
    n_games: int


def aggregate(results: List[GameResult]) -> EvalSummary:
    """Arithmetic means over the games"""
    if not results:
        raise ValueError("cannot aggregate an empty list of game results")
    n = len(results)
    return EvalSummary(
        mean_kills=math.fsum(r.kills for r in results) / n,
        mean_damage=math.fsum(r.damage for r in results) / n,
        mean_deaths=math.fsum(r.deaths for r in results) / n,
        n_games=n,
    )


def _sort_key(summary: EvalSummary, primary_metric: str) -> Tuple[float, float, float]:
    secondary = "kills" if primary_metric == "damage" else "damage"
    # deaths only break ties, fewer is better
    return (
        getattr(summary, f"mean_{primary_metric}"),
        getattr(summary, f"mean_{secondary}"),
        -summary.mean_deaths,
    )


def compare(a: EvalSummary, b: EvalSummary, primary_metric: str = "damage") -> int:
    """1 if a ranks above b, -1 if below, 0 for a tie"""
    if primary_metric not in PRIMARY_METRICS:
        raise ValueError(f"primary_metric must be one of {PRIMARY_METRICS}, got {primary_metric!r}")
    key_a = _sort_key(a, primary_metric)
    key_b = _sort_key(b, primary_metric)
    if key_a > key_b:
        return 1
    if key_a < key_b:
        return -1
    return 0


def rank_summaries(named: Dict[str, EvalSummary], primary_metric: str = "damage") -> List[Tuple[str, EvalSummary]]:
    """Best first; exact ties keep name order"""
    def cmp(x, y):
        result = compare(y[1], x[1], primary_metric)
        if result == 0:
            return (x[0] > y[0]) - (x[0] < y[0])
        return result
    return sorted(named.items(), key=functools.cmp_to_key(cmp))


def summaries_to_frame(ranked: List[Tuple[str, EvalSummary]]) -> pd.DataFrame:
    rows = [{'name': name, **asdict(summary)} for name, summary in ranked]
    return pd.DataFrame(rows, columns=['name', 'mean_kills', 'mean_damage', 'mean_deaths', 'n_games'])


def load_game_results(path: str) -> List[GameResult]:
    """One JSON object per line with kills, damage, deaths and optional duration_s"""
    results = []
    with open(path, encoding='utf-8') as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
                results.append(GameResult(**data))
            except (json.JSONDecodeError, TypeError) as e:
                raise ValueError(f"{path}:{line_no}: malformed game result ({e})")
            except ValueError as e:
                raise ValueError(f"{path}:{line_no}: {e}")
    logger.debug(f"Loaded {len(results)} game results from {path}")
    return results


def write_game_results(results: List[GameResult], path: str) -> str:
    with open(path, 'w', encoding='utf-8') as f:
        for r in results:
            f.write(json.dumps(asdict(r), sort_keys=True) + "\n")
    return path
