"""
Policy
Width calculators for the full CNN / ConvLSTM / MLP network and a small
multi-head surrogate policy (dense tanh trunk, one un-shared head per action)
trained with the combined loss by plain gradient descent.
"""

import logging
import struct
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.special import expit

from algorithms.loss import LossBreakdown, combined_loss, warmup_lr
from algorithms.sampler import RngLike, as_rng
from config.bc_config import (
    ALL_ACTIONS, BINARY_ACTIONS, CNN_DEPTH, CONVLSTM_DEPTH, MLP_DEPTH, MOUSE_ACTIONS,
    DemoConfig, LossConfig, demo_loss_config,
)

logger = logging.getLogger(__name__)

N_HEADS = len(ALL_ACTIONS)
MOUSE_COLUMNS = [ALL_ACTIONS.index(a) for a in MOUSE_ACTIONS]
BINARY_COLUMNS = [ALL_ACTIONS.index(a) for a in BINARY_ACTIONS]

CHECKPOINT_MAGIC = b"BCPT"
CHECKPOINT_VERSION = 1


# ============================================================
# ARCHITECTURE WIDTHS
# ============================================================

def _check_depth(depth: int, max_depth: int, name: str):
    if not isinstance(depth, (int, np.integer)) or not 1 <= depth <= max_depth:
        raise ValueError(f"{name} depth must be in 1..{max_depth}, got {depth!r}")


def cnn_width(depth: int) -> int:
    _check_depth(depth, CNN_DEPTH, "cnn")
    return 74 * 2 ** (depth - 1)


def convlstm_width(depth: int) -> int:
    _check_depth(depth, CONVLSTM_DEPTH, "convlstm")
    return 9 + depth * 2


def mlp_width(depth: int) -> int:
    _check_depth(depth, MLP_DEPTH, "mlp")
    # 1984 = 31 * 2^6, so the division is exact at every depth
    return 1984 // 2 ** (depth - 1)


@dataclass
class ArchitectureSpec:
    cnn_depth: int = CNN_DEPTH
    convlstm_depth: int = CONVLSTM_DEPTH
    mlp_depth: int = MLP_DEPTH

    def __post_init__(self):
        _check_depth(self.cnn_depth, CNN_DEPTH, "cnn")
        _check_depth(self.convlstm_depth, CONVLSTM_DEPTH, "convlstm")
        _check_depth(self.mlp_depth, MLP_DEPTH, "mlp")

    def cnn_widths(self) -> List[int]:
        return [cnn_width(d) for d in range(1, self.cnn_depth + 1)]

    def convlstm_widths(self) -> List[int]:
        return [convlstm_width(d) for d in range(1, self.convlstm_depth + 1)]

    def mlp_widths(self) -> List[int]:
        return [mlp_width(d) for d in range(1, self.mlp_depth + 1)]

    def mlp_parameter_count(self, input_dim: int) -> int:
        """Dense layers plus one scalar output head per action"""
        if input_dim < 1:
            raise ValueError(f"input_dim must be positive, got {input_dim}")
        count = 0
        fan_in = input_dim
        for width in self.mlp_widths():
            count += fan_in * width + width
            fan_in = width
        return count + N_HEADS * (fan_in + 1)


# ============================================================
# SURROGATE POLICY
# ============================================================

def parameter_count(input_dim: int, hidden_dims: Tuple[int, ...]) -> int:
    count = 0
    fan_in = input_dim
    for width in hidden_dims:
        count += fan_in * width + width
        fan_in = width
    return count + fan_in * N_HEADS + N_HEADS


@dataclass
class SurrogatePolicy:
    """
    Flat parameter vector laid out as, per trunk layer, W (fan_in x width)
    then b (width), followed by the head matrix (last width x 7) and head
    biases. Head columns follow ALL_ACTIONS: mouse heads are linear, binary
    heads are sigmoid.
    """
    input_dim: int
    hidden_dims: Tuple[int, ...]
    params: np.ndarray = field(repr=False)
    dropout: float = 0.0

    def __post_init__(self):
        self.hidden_dims = tuple(int(h) for h in self.hidden_dims)
        if self.input_dim < 1 or any(h < 1 for h in self.hidden_dims):
            raise ValueError(f"dimensions must be positive: {self.input_dim}, {self.hidden_dims}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")
        self.params = np.asarray(self.params, dtype=np.float64)
        expected = parameter_count(self.input_dim, self.hidden_dims)
        if self.params.shape != (expected,):
            raise ValueError(f"expected {expected} parameters, got shape {self.params.shape}")

    @classmethod
    def initialize(cls, input_dim: int, hidden_dims: Tuple[int, ...] = (16,),
                   seed: RngLike = None, dropout: float = 0.0) -> 'SurrogatePolicy':
        """Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for every weight and bias"""
        rng = as_rng(seed)
        chunks = []
        fan_in = input_dim
        for width in tuple(hidden_dims) + (N_HEADS,):
            bound = 1.0 / np.sqrt(fan_in)
            chunks.append(rng.uniform(-bound, bound, size=fan_in * width))
            chunks.append(rng.uniform(-bound, bound, size=width))
            fan_in = width
        return cls(input_dim, tuple(hidden_dims), np.concatenate(chunks), dropout)

    @classmethod
    def zeros(cls, input_dim: int, hidden_dims: Tuple[int, ...] = ()) -> 'SurrogatePolicy':
        return cls(input_dim, tuple(hidden_dims), np.zeros(parameter_count(input_dim, tuple(hidden_dims))))

    @property
    def n_params(self) -> int:
        return self.params.size

    def layers(self) -> List[Tuple[np.ndarray, np.ndarray]]:
        """(W, b) views into params; the last pair is the heads"""
        out = []
        pos = 0
        fan_in = self.input_dim
        for width in self.hidden_dims + (N_HEADS,):
            w = self.params[pos:pos + fan_in * width].reshape(fan_in, width)
            pos += fan_in * width
            b = self.params[pos:pos + width]
            pos += width
            out.append((w, b))
            fan_in = width
        return out

    def _check_features(self, features) -> Tuple[np.ndarray, bool]:
        x = np.asarray(features, dtype=np.float64)
        squeeze = x.ndim == 1
        x = np.atleast_2d(x)
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ValueError(f"expected features of length {self.input_dim}, got shape {np.shape(features)}")
        if not np.isfinite(x).all():
            raise ValueError("features contain non-finite values")
        return x, squeeze

    def _forward(self, x: np.ndarray, rng: Optional[np.random.Generator] = None):
        """Outputs plus, per trunk layer, the layer input, tanh output and dropout scale"""
        layers = self.layers()
        inputs = []
        tanh_outputs = []
        masks = []
        h = x
        for w, b in layers[:-1]:
            inputs.append(h)
            t = np.tanh(h @ w + b)
            tanh_outputs.append(t)
            if rng is not None and self.dropout > 0:
                keep = (rng.random(t.shape) >= self.dropout) / (1.0 - self.dropout)
                h = t * keep
            else:
                keep = None
                h = t
            masks.append(keep)
        inputs.append(h)
        w, b = layers[-1]
        raw = h @ w + b
        out = raw.copy()
        out[:, BINARY_COLUMNS] = expit(raw[:, BINARY_COLUMNS])
        return out, (inputs, tanh_outputs, masks)

    def forward(self, features) -> Dict[str, object]:
        """Per-action predictions; floats for one feature vector, arrays for a batch"""
        x, squeeze = self._check_features(features)
        out, _ = self._forward(x)
        if squeeze:
            return {a: float(out[0, i]) for i, a in enumerate(ALL_ACTIONS)}
        return {a: out[:, i] for i, a in enumerate(ALL_ACTIONS)}


def forward(policy: SurrogatePolicy, features) -> Dict[str, object]:
    return policy.forward(features)


def loss_and_gradient(policy: SurrogatePolicy, features, targets: Dict[str, object],
                      cfg: Optional[LossConfig] = None,
                      rng: Optional[np.random.Generator] = None) -> Tuple[LossBreakdown, np.ndarray]:
    """Combined loss over a batch and its gradient with respect to the flat parameters"""
    x, _ = policy._check_features(features)
    if x.shape[0] == 0:
        raise ValueError("empty batch")
    out, (inputs, tanh_outputs, masks) = policy._forward(x, rng)

    predictions = {a: out[:, i] for i, a in enumerate(ALL_ACTIONS)}
    batch_targets = {a: np.broadcast_to(np.asarray(targets[a], dtype=np.float64), (x.shape[0],))
                     for a in ALL_ACTIONS if a in targets}
    breakdown = combined_loss(predictions, batch_targets, cfg)

    d_out = np.empty_like(out)
    for i, action in enumerate(ALL_ACTIONS):
        d_out[:, i] = breakdown.gradients[action]
    d_out[:, BINARY_COLUMNS] *= out[:, BINARY_COLUMNS] * (1.0 - out[:, BINARY_COLUMNS])

    layers = policy.layers()
    grads = []
    d_h = d_out
    for depth in range(len(layers) - 1, -1, -1):
        w, _ = layers[depth]
        if depth < len(layers) - 1:
            # back through this layer's dropout and tanh
            if masks[depth] is not None:
                d_h = d_h * masks[depth]
            t = tanh_outputs[depth]
            d_h = d_h * (1.0 - t * t)
        h_prev = inputs[depth]
        grads.append((h_prev.T @ d_h, d_h.sum(axis=0)))
        d_h = d_h @ w.T

    flat = []
    for gw, gb in reversed(grads):
        flat.append(gw.ravel())
        flat.append(gb)
    return breakdown, np.concatenate(flat)


def train_step(policy: SurrogatePolicy, features, targets: Dict[str, object],
               cfg: Optional[LossConfig] = None, epoch: int = 0,
               rng: Optional[np.random.Generator] = None) -> Tuple[SurrogatePolicy, float]:
    """One gradient-descent step at warmup_lr(epoch); returns the new policy and the pre-step loss"""
    cfg = cfg or LossConfig()
    breakdown, grad = loss_and_gradient(policy, features, targets, cfg, rng)
    lr = warmup_lr(epoch, cfg)
    return replace(policy, params=policy.params - lr * grad), breakdown.total


# ============================================================
# CHECKPOINTS
# ============================================================

def checkpoint_bytes(policy: SurrogatePolicy) -> bytes:
    header = CHECKPOINT_MAGIC
    header += struct.pack('<HIH', CHECKPOINT_VERSION, policy.input_dim, len(policy.hidden_dims))
    header += struct.pack(f'<{len(policy.hidden_dims)}I', *policy.hidden_dims)
    header += struct.pack('<fI', policy.dropout, policy.n_params)
    return header + policy.params.astype('<f4').tobytes()


def policy_from_checkpoint(data: bytes) -> SurrogatePolicy:
    if data[:4] != CHECKPOINT_MAGIC:
        raise ValueError("bad checkpoint magic at offset 0")
    try:
        version, input_dim, n_hidden = struct.unpack_from('<HIH', data, 4)
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version} at offset 4")
        offset = 12
        hidden = struct.unpack_from(f'<{n_hidden}I', data, offset)
        offset += 4 * n_hidden
        dropout, n_params = struct.unpack_from('<fI', data, offset)
        offset += 8
    except struct.error:
        raise ValueError("truncated checkpoint header")
    if len(data) != offset + 4 * n_params:
        raise ValueError(f"checkpoint holds {len(data) - offset} parameter bytes, expected {4 * n_params}")
    params = np.frombuffer(data, dtype='<f4', count=n_params, offset=offset).astype(np.float64)
    return SurrogatePolicy(input_dim, tuple(hidden), params, float(dropout))


def save_checkpoint(policy: SurrogatePolicy, path: str) -> str:
    with open(path, 'wb') as f:
        f.write(checkpoint_bytes(policy))
    return path


def load_checkpoint(path: str) -> SurrogatePolicy:
    with open(path, 'rb') as f:
        return policy_from_checkpoint(f.read())


# ============================================================
# SYNTHETIC TRAINING TASK
# ============================================================

def make_synthetic_task(n: int, cfg: Optional[DemoConfig] = None,
                        seed: RngLike = None) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
    """
    Feature 0/1 drive the mouse labels, with a steeper slope for positive
    values. Features 2..6 drive the five buttons and stay at least
    binary_margin away from zero, so the binary labels are linearly separable.
    Remaining features are noise.
    """
    cfg = cfg or DemoConfig()
    n_drivers = len(MOUSE_ACTIONS) + len(BINARY_ACTIONS)
    if cfg.input_dim < n_drivers:
        raise ValueError(f"input_dim must be at least {n_drivers}, got {cfg.input_dim}")
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")

    rng = as_rng(seed)
    x = rng.standard_normal((n, cfg.input_dim))
    targets = {}
    for i, action in enumerate(MOUSE_ACTIONS):
        s = x[:, i]
        targets[action] = np.where(s > 0, cfg.mouse_asymmetry * s, s)
    for j, action in enumerate(BINARY_ACTIONS):
        col = len(MOUSE_ACTIONS) + j
        x[:, col] = np.sign(x[:, col]) * (np.abs(x[:, col]) + cfg.binary_margin)
        targets[action] = (x[:, col] > 0).astype(np.float64)
    return x, targets


def mouse_sign_agreement(policy: SurrogatePolicy, features, targets: Dict[str, np.ndarray]) -> float:
    """Fraction of mouse predictions whose sign matches the label, over both axes"""
    predictions = policy.forward(np.atleast_2d(features))
    hits = [np.sign(predictions[a]) == np.sign(targets[a]) for a in MOUSE_ACTIONS]
    return float(np.mean(np.concatenate(hits)))


@dataclass
class DemoResult:
    losses: List[float]
    initial_loss: float
    final_loss: float
    sign_agreement: float
    plain_mse: bool
    policy: SurrogatePolicy = field(repr=False)


def run_demo(demo_cfg: Optional[DemoConfig] = None, loss_cfg: Optional[LossConfig] = None,
             seed: RngLike = None, steps: Optional[int] = None, plain_mse: bool = False) -> DemoResult:
    """Full-batch training on the synthetic task; step k uses epoch k + 1 of the warm-up"""
    demo_cfg = demo_cfg or DemoConfig()
    cfg = demo_loss_config(loss_cfg or LossConfig(), demo_cfg, plain_mse=plain_mse)
    steps = demo_cfg.steps if steps is None else steps
    if steps < 1:
        raise ValueError(f"steps must be positive, got {steps}")

    rng = as_rng(seed)
    x_train, y_train = make_synthetic_task(demo_cfg.n_train, demo_cfg, rng)
    x_held, y_held = make_synthetic_task(demo_cfg.n_heldout, demo_cfg, rng)
    policy = SurrogatePolicy.initialize(demo_cfg.input_dim, demo_cfg.hidden_dims, rng)

    losses = []
    for step in range(steps):
        policy, loss = train_step(policy, x_train, y_train, cfg, epoch=step + 1)
        losses.append(loss)
        if step % 100 == 0:
            logger.debug(f"step {step}: loss {loss:.6f}")

    final_loss = loss_and_gradient(policy, x_train, y_train, cfg)[0].total
    agreement = mouse_sign_agreement(policy, x_held, y_held)
    logger.info(
        f"Trained {steps} steps ({'plain MSE' if plain_mse else 'signed MSE'}): "
        f"loss {losses[0]:.4f} -> {final_loss:.4f}, sign agreement {agreement:.4f}"
    )
    return DemoResult(
        losses=losses,
        initial_loss=losses[0],
        final_loss=final_loss,
        sign_agreement=agreement,
        plain_mse=plain_mse,
        policy=policy,
    )
