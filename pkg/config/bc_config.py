"""
Behavioural Cloning Toolkit Configuration
Capture constants, action set and the tuned training/analysis defaults
"""

import json
import os
from dataclasses import dataclass, field, fields, replace
from typing import Dict, Optional, Tuple

# Capture Configuration
TICK_RATE = 35  # frames captured per second during playback
START_UP_TRIM_FRAMES = 600  # frames typically discarded for match start-up

# Stacked frame contract consumed by the policy
FRAME_WIDTH = 256
FRAME_HEIGHT = 192
FRAME_CHANNELS = ("r", "g", "b", "depth", "label")

# Action set (order matters: the replay button bitmask follows BINARY_ACTIONS from LSB)
MOUSE_ACTIONS = ["mouse_x", "mouse_y"]
BINARY_ACTIONS = ["attack", "move_forward", "move_backward", "move_left", "move_right"]
ALL_ACTIONS = MOUSE_ACTIONS + BINARY_ACTIONS

# Penalising weights multiplied against each action's loss component
PENALISING_WEIGHTS = {
    "attack": 1.25,
    "move_right": 1.73,
    "move_left": 1.73,
    "move_forward": 0.54,
    "move_backward": 1.94,
    "mouse_x": 0.45,
    "mouse_y": 0.45,
}

WEIGHT_ALIASES = {
    "mouse_lr": "mouse_x",
    "mouse_ud": "mouse_y",
}

# Network depths of the full CNN / ConvLSTM / MLP model
CNN_DEPTH = 5
CONVLSTM_DEPTH = 4
MLP_DEPTH = 5

TARGET_METHODS = ("average", "one_random", "one_next")
CAMERA_PROFILES = ("human_like", "il_like", "rl_like")

DEFAULT_SEED = 7
STORE_ENV_VAR = "BCKIT_STORE_DIR"


@dataclass
class SamplerConfig:
    """Sequence construction parameters"""
    sequence_length: int = 15       # N
    skip_exponent: float = 1.22     # lambda
    target_range: int = 2           # L
    target_method: str = "average"  # average, one_random, one_next

    def __post_init__(self):
        if self.target_method not in TARGET_METHODS:
            raise ValueError(
                f"target_method must be one of {TARGET_METHODS}, got {self.target_method!r}"
            )
        if self.target_range < 1:
            raise ValueError(f"target_range must be positive, got {self.target_range}")


@dataclass
class LossConfig:
    """Loss weighting and learning-rate schedule"""
    action_weights: Dict[str, float] = field(default_factory=lambda: dict(PENALISING_WEIGHTS))
    wrong_sign_mask: float = (0 + 0.5) / 1.5
    right_sign_mask: float = (1 + 0.5) / 1.5
    warmup_epochs: int = 500
    base_lr: float = 0.0002
    bce_epsilon: float = 1e-7
    use_sign_mask: bool = True

    def __post_init__(self):
        self.action_weights = {
            WEIGHT_ALIASES.get(k, k): float(v) for k, v in self.action_weights.items()
        }
        missing = [a for a in ALL_ACTIONS if a not in self.action_weights]
        if missing:
            raise ValueError(f"action_weights missing {missing}")
        for action, weight in self.action_weights.items():
            if action not in ALL_ACTIONS:
                raise ValueError(f"unknown action in action_weights: {action!r}")
            if not 0 < weight <= 2:
                raise ValueError(f"weight for {action} must be in (0, 2], got {weight}")
        if not self.wrong_sign_mask < self.right_sign_mask:
            raise ValueError("wrong_sign_mask must be smaller than right_sign_mask")
        if self.warmup_epochs < 1:
            raise ValueError(f"warmup_epochs must be positive, got {self.warmup_epochs}")
        if self.base_lr <= 0:
            raise ValueError(f"base_lr must be positive, got {self.base_lr}")


@dataclass
class AnalysisConfig:
    """Heatmap and camera-movement analysis defaults"""
    hist_bins: int = 61
    hist_range: Tuple[float, float] = (-15.0, 15.0)
    mask_threshold: float = 0.005   # fraction of the busiest cell
    cell_size: float = 64.0         # map units per heatmap cell
    camera_axis: str = "mouse_x"


@dataclass
class PolicyConfig:
    """Surrogate policy shape"""
    hidden_dims: Tuple[int, ...] = (16,)
    dropout: float = 0.0


@dataclass
class DemoConfig:
    """Desk-scale training run on the synthetic separable task"""
    input_dim: int = 8
    hidden_dims: Tuple[int, ...] = ()
    n_train: int = 1024
    n_heldout: int = 20000
    steps: int = 500
    base_lr: float = 0.3
    warmup_epochs: int = 50
    mouse_asymmetry: float = 1.25  # slope ratio of positive vs negative mouse labels
    binary_margin: float = 0.5


CONFIG_SECTIONS = {
    "sampler": SamplerConfig,
    "loss": LossConfig,
    "analysis": AnalysisConfig,
    "policy": PolicyConfig,
    "demo": DemoConfig,
}

_TUPLE_FIELDS = {"hist_range", "hidden_dims"}


def _build_section(name: str, cls, values: dict):
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ValueError(f"unknown keys in config section {name!r}: {unknown}")
    kwargs = {}
    for key, value in values.items():
        if key in _TUPLE_FIELDS:
            value = tuple(value)
        kwargs[key] = value
    if cls is LossConfig and "action_weights" in kwargs:
        merged = dict(PENALISING_WEIGHTS)
        merged.update({WEIGHT_ALIASES.get(k, k): v for k, v in kwargs["action_weights"].items()})
        kwargs["action_weights"] = merged
    return cls(**kwargs)


def default_configs() -> Dict[str, object]:
    """Fresh default configuration objects keyed by section name"""
    return {name: cls() for name, cls in CONFIG_SECTIONS.items()}


def load_config(path: Optional[str]) -> Dict[str, object]:
    """
    Load configuration overrides from a JSON file.
    Sections not present in the file keep their defaults.
    """
    configs = default_configs()
    if path is None:
        return configs

    with open(path) as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise ValueError(f"config file {path} must contain a JSON object")

    unknown = sorted(set(data) - set(CONFIG_SECTIONS))
    if unknown:
        raise ValueError(f"unknown config sections: {unknown}")

    for name, values in data.items():
        if not isinstance(values, dict):
            raise ValueError(f"config section {name!r} must be an object")
        configs[name] = _build_section(name, CONFIG_SECTIONS[name], values)
    return configs


def demo_loss_config(loss_cfg: LossConfig, demo_cfg: DemoConfig, plain_mse: bool = False) -> LossConfig:
    """Loss config for the synthetic run: same weights and masks, desk-scale schedule"""
    return replace(
        loss_cfg,
        base_lr=demo_cfg.base_lr,
        warmup_epochs=demo_cfg.warmup_epochs,
        use_sign_mask=not plain_mse,
    )


def default_store_dir() -> Optional[str]:
    return os.environ.get(STORE_ENV_VAR)
