"""
Sequence Sampler
Builds training sequences from replays: exponential frame skipping over the
history, averaged target labels, and action-balanced batches.
"""

import logging
import math
from dataclasses import dataclass, field
from decimal import ROUND_FLOOR, Decimal, localcontext
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Union

import numpy as np

from config.bc_config import (
    ALL_ACTIONS, BINARY_ACTIONS, DEFAULT_SEED, FRAME_CHANNELS, FRAME_HEIGHT, FRAME_WIDTH,
    SamplerConfig,
)
from modules.replay import ActionVector, Replay

logger = logging.getLogger(__name__)

MIN_SKIP_EXPONENT = 1.0
MAX_SKIP_EXPONENT = 1.5
POSITIVE_THRESHOLD = 0.5
EXACT_FLOOR_MAX_DENOMINATOR = 1000

RngLike = Union[int, np.random.Generator, None]


def as_rng(seed: RngLike = None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(DEFAULT_SEED if seed is None else seed)


@dataclass(frozen=True)
class ChannelSpec:
    """Layout of one stacked input frame"""
    channels: tuple = FRAME_CHANNELS
    width: int = FRAME_WIDTH
    height: int = FRAME_HEIGHT

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    def describe(self) -> str:
        return f"{self.n_channels}x{self.width}x{self.height} ({','.join(self.channels)})"


DEFAULT_CHANNEL_SPEC = ChannelSpec()


@dataclass
class ActionTarget:
    """Training label; binary fields may be fractional after averaging"""
    mouse_x: float = 0.0
    mouse_y: float = 0.0
    attack: float = 0.0
    move_forward: float = 0.0
    move_backward: float = 0.0
    move_left: float = 0.0
    move_right: float = 0.0

    def as_dict(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in ALL_ACTIONS}

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in ALL_ACTIONS], dtype=np.float64)

    @classmethod
    def from_action(cls, action: ActionVector) -> 'ActionTarget':
        return cls(**{name: float(getattr(action, name)) for name in ALL_ACTIONS})


@dataclass
class SequenceSample:
    frame_indices: List[int]
    target: ActionTarget
    channel_spec: ChannelSpec = field(default=DEFAULT_CHANNEL_SPEC)

    @property
    def anchor(self) -> int:
        return self.frame_indices[-1]

    def is_positive(self, action: str) -> bool:
        return getattr(self.target, action) >= POSITIVE_THRESHOLD

    def to_dict(self) -> dict:
        return {
            't': self.anchor,
            'frame_indices': list(self.frame_indices),
            'target': self.target.as_dict(),
            'channels': self.channel_spec.describe(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'SequenceSample':
        return cls(
            frame_indices=[int(i) for i in data['frame_indices']],
            target=ActionTarget(**data['target']),
        )


# ============================================================
# FRAME SKIPPING
# ============================================================

def _settle_floor(i: int, ratio: Fraction, estimate: int) -> int:
    """Move an estimate of floor(i ** (p/q)) onto the largest k with k**q <= i**p"""
    p, q = ratio.numerator, ratio.denominator
    target = i ** p
    k = estimate
    while k > 0 and k ** q > target:
        k -= 1
    while (k + 1) ** q <= target:
        k += 1
    return k


def frame_offsets(n_frames: int, skip_exponent: float) -> List[int]:
    """
    Offsets floor(i ** lambda) for i = 1..N-1.
    Powers are evaluated in 40-digit decimal arithmetic; when lambda's
    decimal form is a fraction p/q with a small q the floor is then settled
    in exact integers, so powers that land on an integer floor correctly.
    """
    if not isinstance(n_frames, (int, np.integer)) or n_frames < 2:
        raise ValueError(f"sequence length N must be an integer >= 2, got {n_frames!r}")
    if not MIN_SKIP_EXPONENT <= skip_exponent <= MAX_SKIP_EXPONENT:
        raise ValueError(
            f"lambda must be in [{MIN_SKIP_EXPONENT}, {MAX_SKIP_EXPONENT}], got {skip_exponent}"
        )

    text = repr(float(skip_exponent))
    exponent = Decimal(text)
    ratio = Fraction(text)
    offsets = []
    with localcontext() as ctx:
        ctx.prec = 40
        for i in range(1, int(n_frames)):
            k = int((Decimal(i) ** exponent).to_integral_value(rounding=ROUND_FLOOR))
            if ratio.denominator <= EXACT_FLOOR_MAX_DENOMINATOR:
                k = _settle_floor(i, ratio, k)
            offsets.append(k)
    return offsets


def history_span(n_frames: int, skip_exponent: float) -> int:
    return frame_offsets(n_frames, skip_exponent)[-1]


# ============================================================
# TARGETS
# ============================================================

def _check_window(n_labels: int, t: int, target_range: int):
    if target_range < 1:
        raise ValueError(f"target range L must be positive, got {target_range}")
    if t < 0:
        raise ValueError(f"anchor t must be non-negative, got {t}")
    if t + target_range >= n_labels:
        raise ValueError(
            f"target window t+1..t+{target_range} exceeds data: t={t}, {n_labels} frames"
        )


def average_target(labels: Sequence[ActionVector], t: int, target_range: int) -> ActionTarget:
    """Mean of the next L actions l_{t+1} .. l_{t+L}"""
    _check_window(len(labels), t, target_range)
    window = labels[t + 1:t + 1 + target_range]
    return ActionTarget(**{
        name: math.fsum(getattr(a, name) for a in window) / target_range
        for name in ALL_ACTIONS
    })


def make_target(labels: Sequence[ActionVector], t: int, cfg: SamplerConfig,
                rng: RngLike = None) -> ActionTarget:
    method = cfg.target_method
    if method == "average":
        return average_target(labels, t, cfg.target_range)

    _check_window(len(labels), t, cfg.target_range)
    if method == "one_next":
        return ActionTarget.from_action(labels[t + 1])
    if method == "one_random":
        step = int(as_rng(rng).integers(1, cfg.target_range + 1))
        return ActionTarget.from_action(labels[t + step])
    raise ValueError(f"unknown target method {method!r}")


# ============================================================
# SEQUENCES
# ============================================================

def build_sequence(replay: Replay, t: int, cfg: Optional[SamplerConfig] = None,
                   rng: RngLike = None, labels: Optional[Sequence[ActionVector]] = None) -> SequenceSample:
    """
    Frame indices [t - f(N-1), ..., t - f(1), t], clamped at the first frame,
    plus the target for anchor t.
    """
    cfg = cfg or SamplerConfig()
    labels = labels if labels is not None else replay.actions()
    _check_window(len(labels), t, cfg.target_range)

    offsets = frame_offsets(cfg.sequence_length, cfg.skip_exponent)
    indices = [max(t - o, 0) for o in reversed(offsets)] + [t]
    return SequenceSample(
        frame_indices=indices,
        target=make_target(labels, t, cfg, rng),
    )


def iter_sequences(replay: Replay, cfg: Optional[SamplerConfig] = None, stride: int = 1,
                   rng: RngLike = None, start: int = 0) -> Iterator[SequenceSample]:
    """Every anchor from start whose target window fits, stepping by stride"""
    cfg = cfg or SamplerConfig()
    if stride < 1:
        raise ValueError(f"stride must be positive, got {stride}")
    rng = as_rng(rng)
    labels = replay.actions()
    for t in range(start, len(labels) - cfg.target_range, stride):
        yield build_sequence(replay, t, cfg, rng, labels=labels)


# ============================================================
# BALANCED BATCHES
# ============================================================

class _ShufflingPool:
    """Endless draw from a fixed pool, reshuffled each time it runs out"""

    def __init__(self, items: List[SequenceSample], rng: np.random.Generator):
        self.items = items
        self.rng = rng
        self.order = rng.permutation(len(items))
        self.position = 0

    def draw(self) -> SequenceSample:
        if self.position == len(self.order):
            self.order = self.rng.permutation(len(self.items))
            self.position = 0
        item = self.items[self.order[self.position]]
        self.position += 1
        return item


def balanced_batches(samples: List[SequenceSample], batch_size: int, key_action: str,
                     seed: RngLike = DEFAULT_SEED) -> List[List[SequenceSample]]:
    """
    Batches whose positive/negative counts for key_action differ by at most
    one. Slots alternate between the positive and negative pools; the
    starting pool alternates from batch to batch, so odd sizes stay balanced
    overall. The number of batches covers the dataset once.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be positive, got {batch_size}")
    if key_action not in BINARY_ACTIONS:
        raise ValueError(f"key_action must be one of {BINARY_ACTIONS}, got {key_action!r}")

    positives = [s for s in samples if s.is_positive(key_action)]
    negatives = [s for s in samples if not s.is_positive(key_action)]
    if not positives or not negatives:
        kind = "all-negative" if not positives else "all-positive"
        raise ValueError(f"cannot balance {kind} dataset for {key_action} ({len(samples)} samples)")

    rng = as_rng(seed)
    pools = (_ShufflingPool(positives, rng), _ShufflingPool(negatives, rng))
    n_batches = math.ceil(len(samples) / batch_size)

    batches = []
    for b in range(n_batches):
        batches.append([pools[(b + slot) % 2].draw() for slot in range(batch_size)])

    logger.debug(
        f"Balanced {len(samples)} samples ({len(positives)} positive for {key_action}) "
        f"into {n_batches} batches of {batch_size}"
    )
    return batches


def batch_balance(batch: List[SequenceSample], key_action: str) -> Dict[str, int]:
    positives = sum(1 for s in batch if s.is_positive(key_action))
    return {'positive': positives, 'negative': len(batch) - positives}
