"""
Reference performance tables for the recorded deathmatch players and the
agents trained from them. Used as fixtures for the statistics and evaluation
code paths.
"""

# ============================================================
# Players who played the most matches (per-match averages)
# ============================================================
PLAYER_TABLE = {
    "PointlessSolitaire": {"kills": 20.05, "deaths": 11.14, "kd_ratio": 1.80, "win_rate": 0.619},
    "LeanCeiling":        {"kills": 15.14, "deaths": 7.89,  "kd_ratio": 1.92, "win_rate": 0.297},
    "NebulousFellow":     {"kills": 15.78, "deaths": 12.86, "kd_ratio": 1.23, "win_rate": 0.270},
    "FadedHeater":        {"kills": 14.84, "deaths": 11.68, "kd_ratio": 1.27, "win_rate": 0.120},
    "HospitableKiller":   {"kills": 7.66,  "deaths": 15.34, "kd_ratio": 0.50, "win_rate": 0.0},
    # published K/D, 0.52, is not 5.03 / 10.31 (= 0.488)
    "WastefulTandem":     {"kills": 5.03,  "deaths": 10.31, "kd_ratio": 0.52, "win_rate": 0.0},
}

# Ordering by win rate, best first
PLAYER_RANKING = [
    "PointlessSolitaire",
    "LeanCeiling",
    "NebulousFellow",
    "FadedHeater",
    "HospitableKiller",
    "WastefulTandem",
]

# ============================================================
# Agents evaluated against the built-in bots (per-game averages)
# ============================================================
AGENT_TABLE = {
    "Agent (Top 3)":              {"kills": 11.0, "damage": 1462.0, "deaths": 11.2},
    "Agent (PointlessSolitaire)": {"kills": 9.2,  "damage": 1294.0, "deaths": 10.9},
    "Agent (NebulousFellow)":     {"kills": 9.3,  "damage": 1200.0, "deaths": 10.2},
    "Agent (LeanCeiling)":        {"kills": 7.8,  "damage": 1134.0, "deaths": 7.6},
    "Agent (Bottom 3)":           {"kills": 5.1,  "damage": 762.0,  "deaths": 8.7},
}

# Recorded dataset scale
DATASET_MATCHES = 41
EVAL_GAMES = 10
EVAL_GAME_SECONDS = 60.0


def _integer_series(mean: float, n: int) -> list:
    """n non-negative integers whose arithmetic mean is exactly round(mean * n) / n"""
    total = int(round(mean * n))
    base, extra = divmod(total, n)
    return [base + 1] * extra + [base] * (n - extra)


def player_table_results(n_matches: int = 100) -> list:
    """
    Per-match (player, kills, deaths, won) rows reproducing PLAYER_TABLE's
    kill/death means and win rates, one player per match.
    With 100 matches every two-decimal mean is hit exactly.
    """
    rows = []
    for player, stats in PLAYER_TABLE.items():
        kills = _integer_series(stats["kills"], n_matches)
        deaths = _integer_series(stats["deaths"], n_matches)
        wins = int(round(stats["win_rate"] * n_matches))
        for i in range(n_matches):
            rows.append((player, kills[i], deaths[i], int(i < wins)))
    return rows
