"""
Replay domain types: per-tick controls, per-tick frame records and a
single player's replay of one match.
"""

from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from config.bc_config import ALL_ACTIONS, BINARY_ACTIONS, TICK_RATE


def _f32(value: float) -> float:
    """Round a float to binary32 so that stored values survive encoding exactly"""
    return float(np.float32(value))


@dataclass(frozen=True)
class ActionVector:
    """One tick's controls: mouse deltas in degrees/tick plus five buttons"""
    mouse_x: float = 0.0
    mouse_y: float = 0.0
    attack: int = 0
    move_forward: int = 0
    move_backward: int = 0
    move_left: int = 0
    move_right: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'mouse_x', _f32(self.mouse_x))
        object.__setattr__(self, 'mouse_y', _f32(self.mouse_y))

    def buttons_mask(self) -> int:
        mask = 0
        for bit, name in enumerate(BINARY_ACTIONS):
            if getattr(self, name):
                mask |= 1 << bit
        return mask

    @classmethod
    def from_mask(cls, mouse_x: float, mouse_y: float, mask: int) -> 'ActionVector':
        buttons = {name: (mask >> bit) & 1 for bit, name in enumerate(BINARY_ACTIONS)}
        return cls(mouse_x=mouse_x, mouse_y=mouse_y, **buttons)

    def as_dict(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in ALL_ACTIONS}


@dataclass(frozen=True)
class FrameRecord:
    """Action, pose and cumulative match stats for one tick"""
    tick: int
    action: ActionVector
    pos_x: float = 0.0
    pos_y: float = 0.0
    yaw: float = 0.0
    kills: int = 0
    deaths: int = 0
    damage: int = 0

    def __post_init__(self):
        for name in ('pos_x', 'pos_y', 'yaw'):
            object.__setattr__(self, name, _f32(getattr(self, name)))


@dataclass
class Replay:
    """One player's viewpoint of one match"""
    player_id: str
    match_id: str
    tick_rate: int = TICK_RATE
    frames: List[FrameRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def duration_s(self) -> float:
        return len(self.frames) / self.tick_rate

    def actions(self) -> List[ActionVector]:
        return [f.action for f in self.frames]

    def final_stats(self) -> Dict[str, int]:
        last = self.frames[-1]
        return {'kills': last.kills, 'deaths': last.deaths, 'damage': last.damage}
