"""
Synthetic replays for desk-scale runs: camera deltas from one of the
behaviour profiles, random button presses, a bounded random walk for the
pose and monotone kill/death/damage counters.
"""

import logging

import numpy as np

from algorithms.analysis import draw_camera_deltas
from algorithms.sampler import RngLike, as_rng
from config.bc_config import BINARY_ACTIONS, TICK_RATE
from modules.replay import ActionVector, FrameRecord, Replay

logger = logging.getLogger(__name__)

MAP_SIZE = 2048.0
MOVE_SPEED = 8.0  # map units per tick

BUTTON_RATES = {
    "attack": 0.25,
    "move_forward": 0.55,
    "move_backward": 0.08,
    "move_left": 0.15,
    "move_right": 0.15,
}

KILL_RATE = 0.004    # per tick
DEATH_RATE = 0.003
DAMAGE_PER_HIT = (5, 25)


def synth_replay(player_id: str, match_id: str, n_frames: int, profile: str = "human_like",
                 seed: RngLike = None, tick_rate: int = TICK_RATE, start_tick: int = 0) -> Replay:
    if n_frames < 1:
        raise ValueError(f"n_frames must be positive, got {n_frames}")
    rng = as_rng(seed)

    mouse_x = draw_camera_deltas(profile, n_frames, rng)
    mouse_y = rng.normal(0.0, 0.5, size=n_frames)
    buttons = {name: (rng.random(n_frames) < BUTTON_RATES[name]).astype(int) for name in BINARY_ACTIONS}

    yaw = np.mod(np.cumsum(mouse_x), 360.0)
    heading = np.deg2rad(yaw)
    forward = buttons["move_forward"] - buttons["move_backward"]
    strafe = buttons["move_right"] - buttons["move_left"]
    step_x = MOVE_SPEED * (forward * np.cos(heading) + strafe * np.sin(heading))
    step_y = MOVE_SPEED * (forward * np.sin(heading) - strafe * np.cos(heading))

    kills = np.cumsum(rng.random(n_frames) < KILL_RATE)
    deaths = np.cumsum(rng.random(n_frames) < DEATH_RATE)
    hits = (buttons["attack"] == 1) & (rng.random(n_frames) < 0.1)
    damage = np.cumsum(np.where(hits, rng.integers(DAMAGE_PER_HIT[0], DAMAGE_PER_HIT[1] + 1, size=n_frames), 0))

    frames = []
    x = y = MAP_SIZE / 2
    for i in range(n_frames):
        x = float(np.clip(x + step_x[i], 0.0, MAP_SIZE))
        y = float(np.clip(y + step_y[i], 0.0, MAP_SIZE))
        action = ActionVector(
            mouse_x=float(mouse_x[i]),
            mouse_y=float(mouse_y[i]),
            **{name: int(buttons[name][i]) for name in BINARY_ACTIONS},
        )
        frames.append(FrameRecord(
            tick=start_tick + i,
            action=action,
            pos_x=x,
            pos_y=y,
            yaw=float(yaw[i]),
            kills=int(kills[i]),
            deaths=int(deaths[i]),
            damage=int(damage[i]),
        ))

    logger.debug(f"Generated {profile} replay {player_id}/{match_id} with {n_frames} frames")
    return Replay(player_id=player_id, match_id=match_id, tick_rate=tick_rate, frames=frames)
