"""
Loss Kernels
Signed-MSE mouse loss, clamped binary cross-entropy, the weighted combined
loss over all seven actions, and the linear learning-rate warm-up.
Every kernel returns its value together with the analytic derivative with
respect to the prediction.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from config.bc_config import ALL_ACTIONS, MOUSE_ACTIONS, LossConfig

logger = logging.getLogger(__name__)

_DEFAULT_CONFIG = LossConfig()


def _checked_array(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if np.isnan(arr).any():
        raise ValueError(f"{name} contains NaN")
    return arr


# ============================================================
# MOUSE (signed MSE)
# ============================================================

def sign_mask_array(prediction, label, cfg: Optional[LossConfig] = None) -> np.ndarray:
    """right_sign_mask where prediction*label > 0, wrong_sign_mask otherwise (zero included)"""
    cfg = cfg or _DEFAULT_CONFIG
    prediction = _checked_array(prediction, "prediction")
    label = _checked_array(label, "label")
    if not cfg.use_sign_mask:
        return np.ones(np.broadcast(prediction, label).shape)
    return np.where(prediction * label > 0, cfg.right_sign_mask, cfg.wrong_sign_mask)


def sign_mask(prediction: float, label: float, cfg: Optional[LossConfig] = None) -> float:
    return float(sign_mask_array(prediction, label, cfg))


def mouse_loss_array(prediction, label, cfg: Optional[LossConfig] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    (p - l)^2 / mask and its derivative 2 (p - l) / mask.
    The mask is held constant when differentiating.
    """
    prediction = _checked_array(prediction, "prediction")
    label = _checked_array(label, "label")
    mask = sign_mask_array(prediction, label, cfg)
    diff = prediction - label
    return diff * diff / mask, 2.0 * diff / mask


def mouse_loss(prediction: float, label: float, cfg: Optional[LossConfig] = None) -> Tuple[float, float]:
    loss, grad = mouse_loss_array(prediction, label, cfg)
    return float(loss), float(grad)


# ============================================================
# BINARY (cross-entropy)
# ============================================================

def bce_loss_array(prediction, label, epsilon: float = _DEFAULT_CONFIG.bce_epsilon) -> Tuple[np.ndarray, np.ndarray]:
    """
    -(l ln p + (1 - l) ln(1 - p)) with p clamped to [eps, 1 - eps].
    Labels may be fractional. The gradient is zero where the clamp is active.
    """
    prediction = _checked_array(prediction, "prediction")
    label = _checked_array(label, "label")
    p = np.clip(prediction, epsilon, 1.0 - epsilon)
    loss = -(label * np.log(p) + (1.0 - label) * np.log1p(-p))
    inside = (prediction > epsilon) & (prediction < 1.0 - epsilon)
    grad = np.where(inside, -label / p + (1.0 - label) / (1.0 - p), 0.0)
    return loss, grad


def bce_loss(prediction: float, label: float, epsilon: float = _DEFAULT_CONFIG.bce_epsilon) -> Tuple[float, float]:
    loss, grad = bce_loss_array(prediction, label, epsilon)
    return float(loss), float(grad)


# ============================================================
# COMBINED
# ============================================================

@dataclass
class LossBreakdown:
    """Weighted total, unweighted per-action means and d(total)/d(prediction)"""
    total: float
    components: Dict[str, float] = field(default_factory=dict)
    gradients: Dict[str, np.ndarray] = field(default_factory=dict)

    def weighted(self, cfg: LossConfig) -> Dict[str, float]:
        return {a: cfg.action_weights[a] * c for a, c in self.components.items()}


def combined_loss(predictions: Mapping[str, object], targets: Mapping[str, object],
                  cfg: Optional[LossConfig] = None) -> LossBreakdown:
    """
    total = sum_a weight(a) * mean_batch(loss_a)
    Values per action may be scalars or equal-length 1-D batches.
    """
    cfg = cfg or _DEFAULT_CONFIG
    for name, mapping in (("predictions", predictions), ("targets", targets)):
        missing = [a for a in ALL_ACTIONS if a not in mapping]
        if missing:
            raise ValueError(f"{name} missing actions {missing}")

    components = {}
    gradients = {}
    total = 0.0
    for action in ALL_ACTIONS:
        pred = np.asarray(predictions[action], dtype=np.float64)
        target = np.asarray(targets[action], dtype=np.float64)
        if pred.shape != target.shape:
            raise ValueError(
                f"shape mismatch for {action}: prediction {pred.shape} vs target {target.shape}"
            )
        if action in MOUSE_ACTIONS:
            loss, grad = mouse_loss_array(pred, target, cfg)
        else:
            loss, grad = bce_loss_array(pred, target, cfg.bce_epsilon)

        n = max(loss.size, 1)
        weight = cfg.action_weights[action]
        components[action] = float(np.mean(loss))
        gradients[action] = weight * grad / n
        total += weight * components[action]

    return LossBreakdown(total=total, components=components, gradients=gradients)


# ============================================================
# SCHEDULE
# ============================================================

def warmup_lr(epoch: int, cfg: Optional[LossConfig] = None) -> float:
    """base_lr * min(epoch / warmup_epochs, 1)"""
    cfg = cfg or _DEFAULT_CONFIG
    if epoch < 0:
        raise ValueError(f"epoch must be non-negative, got {epoch}")
    return cfg.base_lr * min(epoch / cfg.warmup_epochs, 1.0)
