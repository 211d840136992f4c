"""
Match Store
Match and per-player result tables persisted as append-only JSON-lines logs,
with derived per-player statistics (mean kills/deaths, K/D, win rate).
"""

import json
import logging
import math
import os
from collections import OrderedDict
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from typing import Dict, Iterable, List, Optional, Tuple

import pandas as pd
from dateutil import parser as date_parser

from modules.replay import Replay

logger = logging.getLogger(__name__)

MATCHES_FILE = "matches.jsonl"
RESULTS_FILE = "results.jsonl"

RANK_METRICS = ("win_rate", "kd_ratio", "mean_kills")


class MatchStoreError(ValueError):
    pass


@dataclass
class MatchRecord:
    """One recorded match"""
    match_id: str
    config_name: str
    map_name: str
    played_at: datetime
    player_count: int
    duration_s: float
    replay_file: str

    def to_dict(self) -> dict:
        data = asdict(self)
        data['played_at'] = self.played_at.isoformat()
        return data

    @classmethod
    def from_dict(cls, data: dict) -> 'MatchRecord':
        values = dict(data)
        played_at = values['played_at']
        if isinstance(played_at, str):
            values['played_at'] = date_parser.isoparse(played_at)
        return cls(**values)


@dataclass
class PlayerResult:
    """A player's final stats in one match"""
    match_id: str
    player_id: str
    kills: int
    deaths: int
    damage: int
    won: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> 'PlayerResult':
        return cls(**data)


@dataclass
class PlayerSummary:
    """Per-match averages of one player"""
    player_id: str
    mean_kills: float
    mean_deaths: float
    kd_ratio: float
    win_rate: float
    matches_played: int


def kd_ratio(mean_kills: float, mean_deaths: float) -> float:
    # No deaths counts as one death
    if mean_deaths > 0:
        return mean_kills / mean_deaths
    return mean_kills


class MatchStore:
    """
    In-memory match/result tables backed by two append-only logs.
    Opening a directory replays both logs; every accepted insert is appended.
    directory=None keeps the store in memory only.
    """

    def __init__(self, directory: Optional[str] = None):
        self.directory = directory
        self.matches: Dict[str, MatchRecord] = OrderedDict()
        self.results: Dict[Tuple[str, str], PlayerResult] = OrderedDict()
        self._winners: Dict[str, str] = {}

        if directory is not None:
            os.makedirs(directory, exist_ok=True)
            self._load()

    # ---------- PERSISTENCE ----------
    def _path(self, name: str) -> str:
        return os.path.join(self.directory, name)

    def _read_log(self, name: str) -> Iterable[dict]:
        path = self._path(name)
        if not os.path.exists(path):
            return
        with open(path, encoding='utf-8') as f:
            for line_no, line in enumerate(f, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    yield json.loads(line)
                except json.JSONDecodeError as e:
                    raise MatchStoreError(f"{path}:{line_no}: malformed record ({e.msg})")

    def _load(self):
        for data in self._read_log(MATCHES_FILE):
            self._add_match(MatchRecord.from_dict(data))
        for data in self._read_log(RESULTS_FILE):
            self._add_result(PlayerResult.from_dict(data))
        logger.debug(f"Opened store {self.directory}: {len(self.matches)} matches, {len(self.results)} results")

    def _append(self, name: str, data: dict):
        self._append_many(name, [data])

    def _append_many(self, name: str, rows: List[dict]):
        if self.directory is None or not rows:
            return
        with open(self._path(name), 'a', encoding='utf-8') as f:
            f.write("".join(json.dumps(data, sort_keys=True) + "\n" for data in rows))

    # ---------- INSERTS ----------
    def _add_match(self, m: MatchRecord):
        if m.match_id in self.matches:
            raise MatchStoreError(f"duplicate match_id {m.match_id!r}")
        if m.player_count < 1:
            raise MatchStoreError(f"player_count must be positive, got {m.player_count}")
        if not (math.isfinite(m.duration_s) and m.duration_s > 0):
            raise MatchStoreError(f"duration_s must be positive, got {m.duration_s}")
        self.matches[m.match_id] = m

    def _add_result(self, r: PlayerResult):
        if r.match_id not in self.matches:
            raise MatchStoreError(f"unknown match_id {r.match_id!r}")
        key = (r.match_id, r.player_id)
        if key in self.results:
            raise MatchStoreError(f"duplicate result for player {r.player_id!r} in match {r.match_id!r}")
        for name in ('kills', 'deaths', 'damage'):
            if getattr(r, name) < 0:
                raise MatchStoreError(f"{name} must be non-negative, got {getattr(r, name)}")
        if r.won not in (0, 1):
            raise MatchStoreError(f"won must be 0 or 1, got {r.won!r}")
        if r.won:
            winner = self._winners.get(r.match_id)
            if winner is not None:
                raise MatchStoreError(
                    f"match {r.match_id!r} already has a winner ({winner!r}); cannot add {r.player_id!r}"
                )
            self._winners[r.match_id] = r.player_id
        self.results[key] = r

    def record_match(self, m: MatchRecord) -> 'MatchStore':
        self._add_match(m)
        self._append(MATCHES_FILE, m.to_dict())
        logger.debug(f"Recorded match {m.match_id}")
        return self

    def record_player_result(self, r: PlayerResult) -> 'MatchStore':
        self._add_result(r)
        self._append(RESULTS_FILE, r.to_dict())
        logger.debug(f"Recorded result {r.player_id} in {r.match_id}")
        return self

    def record_batch(self, matches: List[MatchRecord], results: List[PlayerResult]) -> 'MatchStore':
        """Insert matches then results all together; nothing is kept or written if any row is rejected"""
        staged = MatchStore()
        staged.matches = OrderedDict(self.matches)
        staged.results = OrderedDict(self.results)
        staged._winners = dict(self._winners)
        for m in matches:
            staged._add_match(m)
        for r in results:
            staged._add_result(r)

        self.matches, self.results, self._winners = staged.matches, staged.results, staged._winners
        self._append_many(MATCHES_FILE, [m.to_dict() for m in matches])
        self._append_many(RESULTS_FILE, [r.to_dict() for r in results])
        logger.debug(f"Recorded {len(matches)} matches and {len(results)} results")
        return self

    # ---------- QUERIES ----------
    def get_match(self, match_id: str) -> MatchRecord:
        if match_id not in self.matches:
            raise MatchStoreError(f"unknown match_id {match_id!r}")
        return self.matches[match_id]

    def get_result(self, match_id: str, player_id: str) -> PlayerResult:
        key = (match_id, player_id)
        if key not in self.results:
            raise MatchStoreError(f"no result for player {player_id!r} in match {match_id!r}")
        return self.results[key]

    def players(self) -> List[str]:
        return sorted({r.player_id for r in self.results.values()})

    def results_for(self, player_id: str) -> List[PlayerResult]:
        return [r for r in self.results.values() if r.player_id == player_id]

    def player_summary(self, player_id: str) -> PlayerSummary:
        results = self.results_for(player_id)
        if not results:
            raise MatchStoreError(f"unknown player {player_id!r}")
        n = len(results)
        # fsum is exactly rounded, so the means do not depend on insertion order
        mean_kills = math.fsum(r.kills for r in results) / n
        mean_deaths = math.fsum(r.deaths for r in results) / n
        wins = sum(r.won for r in results)
        return PlayerSummary(
            player_id=player_id,
            mean_kills=mean_kills,
            mean_deaths=mean_deaths,
            kd_ratio=kd_ratio(mean_kills, mean_deaths),
            win_rate=wins / n,
            matches_played=n,
        )

    def summary_frame(self) -> pd.DataFrame:
        columns = ['player_id', 'mean_kills', 'mean_deaths', 'kd_ratio', 'win_rate', 'matches_played']
        rows = [asdict(self.player_summary(p)) for p in self.players()]
        return pd.DataFrame(rows, columns=columns)

    def ranked_frame(self, metric: str = "win_rate") -> pd.DataFrame:
        """summary_frame ordered by metric descending, ties by player_id"""
        if metric not in RANK_METRICS:
            raise ValueError(f"metric must be one of {RANK_METRICS}, got {metric!r}")
        if not self.results:
            raise MatchStoreError("cannot rank players of an empty store")
        frame = self.summary_frame().sort_values(
            [metric, 'player_id'], ascending=[False, True], kind='mergesort'
        )
        return frame.reset_index(drop=True)

    def rank_players(self, metric: str = "win_rate") -> List[PlayerSummary]:
        """Summaries ordered by metric descending, ties by player_id"""
        return [self.player_summary(pid) for pid in self.ranked_frame(metric)['player_id']]

    def match_frame(self) -> pd.DataFrame:
        columns = ['match_id', 'config_name', 'map_name', 'played_at', 'player_count', 'duration_s', 'replay_file']
        return pd.DataFrame([m.to_dict() for m in self.matches.values()], columns=columns)


def ingest_replays(
    store: MatchStore,
    replays: List[Replay],
    replay_files: Optional[List[str]] = None,
    config_name: str = "deathmatch",
    map_name: str = "unknown",
    played_at: Optional[datetime] = None,
) -> Tuple[int, int]:
    """
    Derive match and result rows from decoded replays.
    Replays sharing a match_id form one match; the player with strictly the
    most kills wins it. Returns (matches added, results added).
    """
    if replay_files is None:
        replay_files = [f"{r.player_id}_{r.match_id}.farp" for r in replays]
    if len(replay_files) != len(replays):
        raise ValueError("replay_files must match replays one-to-one")
    if played_at is None:
        played_at = datetime.now(timezone.utc)

    grouped: Dict[str, List[Tuple[Replay, str]]] = OrderedDict()
    for replay, path in zip(replays, replay_files):
        grouped.setdefault(replay.match_id, []).append((replay, path))

    matches: List[MatchRecord] = []
    results: List[PlayerResult] = []
    for match_id, members in grouped.items():
        top_kills = max(r.final_stats()['kills'] for r, _ in members)
        leaders = [r.player_id for r, _ in members if r.final_stats()['kills'] == top_kills]
        winner = leaders[0] if len(leaders) == 1 else None
        if winner is None:
            logger.warning(f"Match {match_id}: {len(leaders)} players tied on {top_kills} kills, no winner")

        matches.append(MatchRecord(
            match_id=match_id,
            config_name=config_name,
            map_name=map_name,
            played_at=played_at,
            player_count=len(members),
            duration_s=max(r.duration_s for r, _ in members),
            replay_file=";".join(os.path.basename(p) for _, p in members),
        ))

        for replay, _ in members:
            stats = replay.final_stats()
            results.append(PlayerResult(
                match_id=match_id,
                player_id=replay.player_id,
                kills=stats['kills'],
                deaths=stats['deaths'],
                damage=stats['damage'],
                won=int(replay.player_id == winner),
            ))

    store.record_batch(matches, results)
    logger.info(f"Ingested {len(results)} replays into {len(matches)} matches")
    return len(matches), len(results)
