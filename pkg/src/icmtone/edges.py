"""Edge-aware adaptation maps for halo control.

Near strong brightness edges the regularization weight is ramped up and the
upper bound on output brightness is pulled down from 0 towards the reference,
both linearly in Chebyshev distance to the nearest edge pixel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

DEFAULT_EDGE_THRESHOLD = math.log(8.0)
DEFAULT_RAMP_RADIUS = 6
DEFAULT_LAMBDA_BOOST = 10.0


@dataclass(frozen=True)
class EdgeParams:
    edge_threshold: float = DEFAULT_EDGE_THRESHOLD
    ramp_radius: int = DEFAULT_RAMP_RADIUS
    lambda_boost: float = DEFAULT_LAMBDA_BOOST
    upper_bound: bool = True  # False keeps u == 0 everywhere

    def __post_init__(self) -> None:
        if not self.edge_threshold > 0:
            raise ValueError("edge_threshold must be positive")
        if self.ramp_radius < 0:
            raise ValueError("ramp_radius must be non-negative")
        if not self.lambda_boost >= 1:
            raise ValueError("lambda_boost must be >= 1")


@dataclass(frozen=True)
class AdaptationMaps:
    """Per-pixel regularization weight and brightness upper bound."""

    lambda_map: np.ndarray
    upper_bound: np.ndarray

    @classmethod
    def uniform(cls, shape: tuple[int, int], base_lambda: float) -> "AdaptationMaps":
        return cls(np.full(shape, float(base_lambda)), np.zeros(shape))


def detect_strong_edges(b: np.ndarray, edge_threshold: float) -> np.ndarray:
    """Mark pixels whose largest 4-neighbor brightness difference exceeds the threshold."""
    b = np.asarray(b, dtype=np.float64)
    big = np.zeros(b.shape, dtype=bool)
    dx = np.abs(np.diff(b, axis=1)) > edge_threshold
    dy = np.abs(np.diff(b, axis=0)) > edge_threshold
    big[:, :-1] |= dx
    big[:, 1:] |= dx
    big[:-1, :] |= dy
    big[1:, :] |= dy
    return big


def edge_distance(edges: np.ndarray, cap: int) -> np.ndarray:
    """Chebyshev distance to the nearest marked pixel, saturated at ``cap``."""
    edges = np.asarray(edges, dtype=bool)
    if not edges.any():
        return np.full(edges.shape, cap, dtype=np.int64)
    # chessboard chamfer with unit weights is exact for the Chebyshev metric
    d = ndimage.distance_transform_cdt(~edges, metric="chessboard")
    return np.minimum(d, cap).astype(np.int64)


def ramp_weight(edges: np.ndarray, ramp_radius: int) -> np.ndarray:
    """max(0, 1 - d / ramp_radius); identically zero when ``ramp_radius`` is 0."""
    if ramp_radius == 0:
        return np.zeros(np.shape(edges))
    d = edge_distance(edges, ramp_radius)
    return np.maximum(0.0, 1.0 - d / ramp_radius)


def build_lambda_map(edges: np.ndarray, base_lambda: float, params: EdgeParams) -> np.ndarray:
    if not base_lambda > 0:
        raise ValueError("base_lambda must be positive")
    t = ramp_weight(edges, params.ramp_radius)
    return base_lambda * (1.0 + (params.lambda_boost - 1.0) * t)


def build_upper_bound(edges: np.ndarray, r: np.ndarray, params: EdgeParams) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    if np.any(r > 0):
        raise ValueError("reference brightness must be non-positive")
    if not params.upper_bound:
        return np.zeros(r.shape)
    return ramp_weight(edges, params.ramp_radius) * r


def build_adaptation(
    b: np.ndarray, r: np.ndarray, base_lambda: float, params: EdgeParams
) -> tuple[np.ndarray, AdaptationMaps]:
    """Detect edges on the HDR brightness ``b`` and derive both maps; returns (edges, maps)."""
    edges = detect_strong_edges(b, params.edge_threshold)
    maps = AdaptationMaps(
        lambda_map=build_lambda_map(edges, base_lambda, params),
        upper_bound=build_upper_bound(edges, r, params),
    )
    return edges, maps
