"""
Behaviour Analysis
Spatial occupancy heatmaps and camera-movement distributions (orders 1-3:
turn velocity, acceleration, jerk) with Gaussian summaries and 1-D
Wasserstein distances between empirical distributions.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd

from algorithms.sampler import RngLike, as_rng
from config.bc_config import CAMERA_PROFILES, MOUSE_ACTIONS, AnalysisConfig
from modules.replay import Replay

logger = logging.getLogger(__name__)

MAX_ORDER = 3
CAMERA_LIMIT = 15.0

_DEFAULTS = AnalysisConfig()


# ============================================================
# OCCUPANCY HEATMAP
# ============================================================

@dataclass(eq=False)
class OccupancyGrid:
    """Visit counts indexed counts[ix, iy]; cell (0, 0) starts at origin"""
    origin: Tuple[float, float]
    cell_size: float
    width: int
    height: int
    counts: np.ndarray
    mask_threshold: float = _DEFAULTS.mask_threshold
    out_of_bounds: int = 0

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def masked(self, threshold: Optional[float] = None) -> np.ndarray:
        """Counts with cells below threshold * max zeroed"""
        threshold = self.mask_threshold if threshold is None else threshold
        if threshold < 0:
            raise ValueError(f"mask threshold must be non-negative, got {threshold}")
        peak = self.counts.max() if self.counts.size else 0
        if peak == 0:
            return self.counts.copy()
        return np.where(self.counts >= threshold * peak, self.counts, 0)

    def extent(self) -> Tuple[float, float, float, float]:
        x0, y0 = self.origin
        return x0, y0, x0 + self.width * self.cell_size, y0 + self.height * self.cell_size


def occupancy_heatmap(positions, origin: Tuple[float, float] = (0.0, 0.0),
                      cell_size: float = _DEFAULTS.cell_size, width: int = 32, height: int = 32,
                      mask_threshold: float = _DEFAULTS.mask_threshold) -> OccupancyGrid:
    """Bin (x, y) positions into a width x height grid; outside positions are only counted"""
    if not cell_size > 0:
        raise ValueError(f"cell_size must be positive, got {cell_size}")
    if width < 1 or height < 1:
        raise ValueError(f"grid dimensions must be positive, got {width}x{height}")
    if mask_threshold < 0:
        raise ValueError(f"mask_threshold must be non-negative, got {mask_threshold}")

    pts = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    finite = np.isfinite(pts).all(axis=1)
    if not finite.all():
        raise ValueError(f"non-finite position at index {int(np.argmin(finite))}")

    fx = np.floor((pts[:, 0] - origin[0]) / cell_size)
    fy = np.floor((pts[:, 1] - origin[1]) / cell_size)
    inside = (fx >= 0) & (fx < width) & (fy >= 0) & (fy < height)
    ix = fx[inside].astype(np.int64)
    iy = fy[inside].astype(np.int64)
    counts = np.bincount(ix * height + iy, minlength=width * height).reshape(width, height)

    out_of_bounds = int(len(pts) - inside.sum())
    if out_of_bounds:
        logger.warning(f"{out_of_bounds} of {len(pts)} positions fall outside the heatmap grid")
    return OccupancyGrid(
        origin=(float(origin[0]), float(origin[1])),
        cell_size=float(cell_size),
        width=int(width),
        height=int(height),
        counts=counts,
        mask_threshold=mask_threshold,
        out_of_bounds=out_of_bounds,
    )


def replay_positions(replay: Replay) -> np.ndarray:
    return np.array([(f.pos_x, f.pos_y) for f in replay.frames], dtype=np.float64).reshape(-1, 2)


def fit_grid(positions, cell_size: float = _DEFAULTS.cell_size) -> Tuple[Tuple[float, float], int, int]:
    """Cell-aligned origin and grid size that cover every position"""
    pts = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("no positions to fit a grid to")
    lo = np.floor(pts.min(axis=0) / cell_size) * cell_size
    span = pts.max(axis=0) - lo
    width, height = (np.floor(span / cell_size).astype(int) + 1).tolist()
    return (float(lo[0]), float(lo[1])), width, height


# ============================================================
# CAMERA MOVEMENT
# ============================================================

@dataclass(eq=False)
class EmpiricalDistribution:
    samples: np.ndarray
    order: int = 1

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64).ravel()
        if not 1 <= self.order <= MAX_ORDER:
            raise ValueError(f"order must be in 1..{MAX_ORDER}, got {self.order}")
        if not np.isfinite(self.samples).all():
            raise ValueError("distribution samples must be finite")

    def __len__(self) -> int:
        return self.samples.size


@dataclass
class GaussianFit:
    mean: float
    std: float


def derivative_series(values, order: int) -> np.ndarray:
    """Order 1 is the values themselves; each further order is a first difference"""
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"order must be in 1..{MAX_ORDER}, got {order}")
    values = np.asarray(values, dtype=np.float64)
    if values.size < order:
        raise ValueError(f"order {order} needs at least {order} frames, got {values.size}")
    return np.diff(values, n=order - 1)


def camera_series(replay: Replay, order: int = 1, axis: str = _DEFAULTS.camera_axis) -> EmpiricalDistribution:
    """Camera movement of the given order from per-frame mouse deltas"""
    if axis not in MOUSE_ACTIONS:
        raise ValueError(f"axis must be one of {MOUSE_ACTIONS}, got {axis!r}")
    deltas = [getattr(f.action, axis) for f in replay.frames]
    return EmpiricalDistribution(derivative_series(deltas, order), order)


def default_range(order: int) -> Tuple[float, float]:
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"order must be in 1..{MAX_ORDER}, got {order}")
    limit = CAMERA_LIMIT * 2 ** (order - 1)
    return -limit, limit


@dataclass(eq=False)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray

    @property
    def centres(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'bin_lo': self.edges[:-1],
            'bin_hi': self.edges[1:],
            'count': self.counts,
        })


def histogram(dist: EmpiricalDistribution, bin_count: int = _DEFAULTS.hist_bins,
              value_range: Optional[Tuple[float, float]] = None) -> Histogram:
    """Equal-width bins; samples outside the range land in the end bins"""
    if len(dist) == 0:
        raise ValueError("cannot histogram an empty distribution")
    if bin_count < 1:
        raise ValueError(f"bin_count must be at least 1, got {bin_count}")
    lo, hi = value_range if value_range is not None else default_range(dist.order)
    if not lo < hi:
        raise ValueError(f"histogram range must satisfy lo < hi, got ({lo}, {hi})")
    counts, edges = np.histogram(np.clip(dist.samples, lo, hi), bins=bin_count, range=(lo, hi))
    return Histogram(edges=edges, counts=counts)


def fit_gaussian(dist: EmpiricalDistribution) -> GaussianFit:
    """Sample mean and population standard deviation"""
    samples = dist.samples
    if samples.size < 2:
        raise ValueError(f"need at least 2 samples to fit a Gaussian, got {samples.size}")
    if (samples == samples[0]).all():
        return GaussianFit(mean=float(samples[0]), std=0.0)
    return GaussianFit(mean=float(np.mean(samples)), std=float(np.std(samples)))


def wasserstein1(a: EmpiricalDistribution, b: EmpiricalDistribution) -> float:
    """
    W1 as the integral of |CDF_a - CDF_b| over the merged support.
    Exact for finite samples of any sizes.
    """
    u = np.sort(a.samples if isinstance(a, EmpiricalDistribution) else np.asarray(a, dtype=np.float64))
    v = np.sort(b.samples if isinstance(b, EmpiricalDistribution) else np.asarray(b, dtype=np.float64))
    if u.size == 0 or v.size == 0:
        raise ValueError("wasserstein1 needs two non-empty distributions")

    support = np.concatenate([u, v])
    support.sort(kind='mergesort')
    widths = np.diff(support)
    cdf_u = np.searchsorted(u, support[:-1], side='right') / u.size
    cdf_v = np.searchsorted(v, support[:-1], side='right') / v.size
    return float(np.sum(np.abs(cdf_u - cdf_v) * widths))


def pairwise_distances(named: Dict[str, EmpiricalDistribution]) -> pd.DataFrame:
    """W1 for every unordered pair, in insertion order"""
    names = list(named)
    rows = []
    for i, first in enumerate(names):
        for second in names[i + 1:]:
            rows.append({'a': first, 'b': second, 'w1': wasserstein1(named[first], named[second])})
    return pd.DataFrame(rows, columns=['a', 'b', 'w1'])


# ============================================================
# SYNTHETIC CAMERA PROFILES
# ============================================================

# (std of the centre Gaussian, probability of a snap to +/- CAMERA_LIMIT)
PROFILE_PARAMS = {
    "human_like": (1.5, 0.0),
    "il_like": (2.0, 0.0),
    "rl_like": (6.0, 0.35),
}


def draw_camera_deltas(profile: str, n: int, seed: RngLike = None) -> np.ndarray:
    """
    Per-frame turn deltas: zero-centred Gaussian draws, and for rl_like a
    share of snaps to the extremes; all values bounded by +/- CAMERA_LIMIT.
    """
    if profile not in CAMERA_PROFILES:
        raise ValueError(f"profile must be one of {CAMERA_PROFILES}, got {profile!r}")
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    rng = as_rng(seed)
    std, snap = PROFILE_PARAMS[profile]
    deltas = np.clip(rng.normal(0.0, std, size=n), -CAMERA_LIMIT, CAMERA_LIMIT)
    if snap > 0:
        snapped = rng.random(n) < snap
        signs = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        deltas = np.where(snapped, signs * CAMERA_LIMIT, deltas)
    return deltas


def synth_camera_stream(profile: str, n: int, seed: RngLike = None) -> EmpiricalDistribution:
    return EmpiricalDistribution(draw_camera_deltas(profile, n, seed), order=1)


def describe_distributions(named: Dict[str, EmpiricalDistribution]) -> pd.DataFrame:
    rows = []
    for name, dist in named.items():
        fit = fit_gaussian(dist) if len(dist) >= 2 else GaussianFit(float(dist.samples[0]), 0.0)
        rows.append({'name': name, 'order': dist.order, 'n': len(dist), 'mean': fit.mean, 'std': fit.std})
    return pd.DataFrame(rows, columns=['name', 'order', 'n', 'mean', 'std'])
