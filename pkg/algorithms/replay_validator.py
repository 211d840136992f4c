import math
from dataclasses import dataclass
from typing import List

from config.bc_config import BINARY_ACTIONS, MOUSE_ACTIONS

U16_MAX = 0xFFFF
U32_MAX = 0xFFFFFFFF

@dataclass
class ValidationResult:
    is_valid: bool
    violations: List[dict]
    details: dict


class ReplayValidator:
    def __init__(self, config: dict = None):
        config = config or {}
        self.check_encodable = config.get('check_encodable', True)
        self.max_violations = config.get('max_violations', None)

    def validate(self, replay) -> ValidationResult:

        violations = []

        def report(vtype: str, frame, field_name: str, description: str):
            violations.append({
                'type': vtype,
                'frame': frame,
                'field': field_name,
                'description': description
            })

        # ---------- HEADER ----------
        if not replay.frames:
            report('empty', None, 'frames', 'empty replay')

        if not isinstance(replay.tick_rate, int) or replay.tick_rate < 1:
            report('tick_rate', None, 'tick_rate',
                   f'tick_rate must be a positive integer, got {replay.tick_rate!r}')
        elif self.check_encodable and replay.tick_rate > U16_MAX:
            report('out_of_range', None, 'tick_rate',
                   f'tick_rate {replay.tick_rate} exceeds {U16_MAX}')

        if self.check_encodable:
            for name in ('player_id', 'match_id'):
                encoded = getattr(replay, name).encode('utf-8')
                if len(encoded) > U16_MAX:
                    report('out_of_range', None, name,
                           f'{name} is {len(encoded)} bytes, limit {U16_MAX}')
            if len(replay.frames) > U32_MAX:
                report('out_of_range', None, 'frames', 'too many frames')

        # ---------- FRAME SCAN ----------
        prev = None
        for idx, frame in enumerate(replay.frames):
            if frame.tick < 0:
                report('tick', idx, 'tick', f'negative tick at index {idx}')
            elif self.check_encodable and frame.tick > U32_MAX:
                report('out_of_range', idx, 'tick', f'tick {frame.tick} exceeds {U32_MAX} at index {idx}')

            if prev is not None and frame.tick <= prev.tick:
                report('tick', idx, 'tick', f'non-increasing tick at index {idx}')

            # Mouse values are stored as-is but must be finite
            for name in MOUSE_ACTIONS:
                value = getattr(frame.action, name)
                if not math.isfinite(value):
                    report('non_finite', idx, f'action.{name}', f'non-finite {name} at index {idx}')

            for name in BINARY_ACTIONS:
                if getattr(frame.action, name) not in (0, 1):
                    report('binary', idx, f'action.{name}',
                           f'{name} must be 0 or 1 at index {idx}, got {getattr(frame.action, name)!r}')

            for name in ('pos_x', 'pos_y', 'yaw'):
                if not math.isfinite(getattr(frame, name)):
                    report('non_finite', idx, name, f'non-finite {name} at index {idx}')

            for name, limit in (('kills', U16_MAX), ('deaths', U16_MAX), ('damage', U32_MAX)):
                value = getattr(frame, name)
                if value < 0:
                    report('stats', idx, name, f'negative {name} at index {idx}')
                elif self.check_encodable and value > limit:
                    report('out_of_range', idx, name, f'{name} {value} exceeds {limit} at index {idx}')
                if prev is not None and value < getattr(prev, name):
                    report('stats', idx, name, f'{name} decreased at index {idx}')

            prev = frame

            if self.max_violations is not None and len(violations) >= self.max_violations:
                break

        return ValidationResult(
            is_valid=(not violations),
            violations=violations,
            details={
                'frames': len(replay.frames),
                'player_id': replay.player_id,
                'match_id': replay.match_id
            }
        )


def validate_replay(replay) -> List[dict]:
    """All invariant violations of a replay; empty list iff the replay is valid"""
    return ReplayValidator().validate(replay).violations
