"""Reference brightness from a locally adaptive logarithmic tone curve.

The curve maps normalized luminance ``y`` in (0, 1] to

    g = log(1 + y / k) / log(1 + 1 / k),   k = beta * surround ** gamma_exp

which is the ratio ``[log(y + k) - log k] / [log(1 + k) - log k]`` written
with ``log1p`` to avoid cancellation when ``y << k``.  ``surround`` is the
geometric mean of luminance over a square window.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_BETA = 0.1
DEFAULT_GAMMA_EXP = 0.6
DEFAULT_G_FLOOR = 1e-6


def default_window_radius(height: int, width: int) -> int:
    return max(8, int(round(min(height, width) / 32)))


@dataclass(frozen=True)
class TroParams:
    beta: float = DEFAULT_BETA
    gamma_exp: float = DEFAULT_GAMMA_EXP
    window_radius: int | None = None  # None: scale with image size
    g_floor: float = DEFAULT_G_FLOOR

    def __post_init__(self) -> None:
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not self.gamma_exp > 0:
            raise ValueError("gamma_exp must be positive")
        if self.window_radius is not None and self.window_radius < 0:
            raise ValueError("window_radius must be non-negative")
        if not 0 < self.g_floor < 1:
            raise ValueError("g_floor must lie in (0, 1)")

    def radius_for(self, shape: tuple[int, int]) -> int:
        if self.window_radius is None:
            return default_window_radius(*shape)
        return self.window_radius


def box_mean(plane: np.ndarray, radius: int) -> np.ndarray:
    """Mean over a (2r+1)^2 window clipped at the borders (divides by the in-image count)."""
    plane = np.asarray(plane, dtype=np.float64)
    if radius == 0:
        return plane.copy()
    h, w = plane.shape
    sat = np.zeros((h + 1, w + 1))
    sat[1:, 1:] = plane.cumsum(axis=0).cumsum(axis=1)
    ys = np.arange(h)
    xs = np.arange(w)
    y0 = np.clip(ys - radius, 0, h)[:, None]
    y1 = np.clip(ys + radius + 1, 0, h)[:, None]
    x0 = np.clip(xs - radius, 0, w)[None, :]
    x1 = np.clip(xs + radius + 1, 0, w)[None, :]
    total = sat[y1, x1] - sat[y0, x1] - sat[y1, x0] + sat[y0, x0]
    return total / ((y1 - y0) * (x1 - x0))


def local_geometric_mean(y: np.ndarray, window_radius: int) -> np.ndarray:
    """exp of the border-clipped box average of ``log y``."""
    if window_radius < 0:
        raise ValueError("window_radius must be non-negative")
    y = np.asarray(y, dtype=np.float64)
    if window_radius == 0:
        return y.copy()
    return np.exp(box_mean(np.log(y), window_radius))


def tro_curve(y: np.ndarray, surround: np.ndarray, beta: float, gamma_exp: float) -> np.ndarray:
    """Evaluate the tone curve for given luminance and surround values."""
    k = beta * np.power(surround, gamma_exp)
    return np.log1p(y / k) / np.log1p(1.0 / k)


def tro_map(y: np.ndarray, params: TroParams) -> np.ndarray:
    """Apply the locally adaptive tone curve to a normalized luminance plane."""
    y = np.asarray(y, dtype=np.float64)
    surround = local_geometric_mean(y, params.radius_for(y.shape))
    return tro_curve(y, surround, params.beta, params.gamma_exp)


def reference_brightness(y: np.ndarray, params: TroParams) -> np.ndarray:
    """log of the tone-mapped luminance, floored at ``log(g_floor)``; always <= 0."""
    g = tro_map(y, params)
    return np.minimum(np.log(np.maximum(g, params.g_floor)), 0.0)
