"""Adjacent-pair contrast targets and the regularized least-squares objective.

Each pair ``(i, j)`` is stored once, keyed by its first pixel ``i`` and a
neighbor offset, with ``j = i + offset`` and target ``c = B_i - B_j``.
Targets and weights are kept in full-size planes (one per offset); entries
whose partner falls outside the image carry weight 0 and are not pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

OFFSETS_4 = ((0, 1), (1, 0))
OFFSETS_8 = ((0, 1), (1, 0), (1, 1), (1, -1))


def pair_slices(offset: tuple[int, int], shape: tuple[int, int]) -> tuple[tuple[slice, slice], tuple[slice, slice]]:
    """Slices selecting the first and second pixel of every in-image pair for ``offset``."""
    dy, dx = offset
    h, w = shape
    x0, x1 = max(0, -dx), w - max(0, dx)
    src = (slice(0, h - dy), slice(x0, x1))
    dst = (slice(dy, h), slice(x0 + dx, x1 + dx))
    return src, dst


@dataclass(frozen=True)
class ContrastSystem:
    """Sparse encoding of the pair matrix, targets and weights."""

    offsets: tuple[tuple[int, int], ...]
    targets: np.ndarray  # (K, H, W)
    weights: np.ndarray  # (K, H, W), 0 where no pair

    @property
    def shape(self) -> tuple[int, int]:
        return self.targets.shape[1:]

    @property
    def pair_count(self) -> int:
        return int(np.count_nonzero(self.weights))

    def pairs(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Flat pair list ``(i, j, c, w)`` with row-major pixel indices."""
        h, w = self.shape
        idx = np.arange(h * w).reshape(h, w)
        out_i, out_j, out_c, out_w = [], [], [], []
        for k, off in enumerate(self.offsets):
            src, dst = pair_slices(off, (h, w))
            out_i.append(idx[src].ravel())
            out_j.append(idx[dst].ravel())
            out_c.append(self.targets[k][src].ravel())
            out_w.append(self.weights[k][src].ravel())
        return tuple(np.concatenate(a) for a in (out_i, out_j, out_c, out_w))

    def residuals(self, b_hat: np.ndarray) -> list[np.ndarray]:
        """Per-offset ``b_i - b_j - c`` over in-image pairs."""
        out = []
        for k, off in enumerate(self.offsets):
            src, dst = pair_slices(off, self.shape)
            out.append(b_hat[src] - b_hat[dst] - self.targets[k][src])
        return out


def build_contrast_system(b: np.ndarray, connectivity: int = 4) -> ContrastSystem:
    """Targets ``B_i - B_j`` for every adjacent pair; unit weights, diagonals 1/sqrt(2)."""
    b = np.asarray(b, dtype=np.float64)
    if not np.all(np.isfinite(b)):
        raise ValueError("brightness must be finite")
    if connectivity == 4:
        offsets = OFFSETS_4
    elif connectivity == 8:
        offsets = OFFSETS_8
    else:
        raise ValueError("connectivity must be 4 or 8")
    k = len(offsets)
    targets = np.zeros((k,) + b.shape)
    weights = np.zeros((k,) + b.shape)
    for n, off in enumerate(offsets):
        src, dst = pair_slices(off, b.shape)
        targets[n][src] = b[src] - b[dst]
        weights[n][src] = 1.0 if 0 in off else 1.0 / math.sqrt(2.0)
    return ContrastSystem(offsets, targets, weights)


def contrast_term(system: ContrastSystem, b_hat: np.ndarray) -> float:
    total = 0.0
    for k, (off, res) in enumerate(zip(system.offsets, system.residuals(b_hat))):
        src, _ = pair_slices(off, system.shape)
        total += float(np.sum(system.weights[k][src] * res * res))
    return total


def objective(system: ContrastSystem, b_hat: np.ndarray, maps, r: np.ndarray) -> float:
    """Weighted pair-contrast error plus per-pixel weighted distance to the reference."""
    b_hat = np.asarray(b_hat, dtype=np.float64)
    if b_hat.shape != system.shape or np.shape(r) != system.shape:
        raise ValueError("field shapes do not match the contrast system")
    d = b_hat - r
    return contrast_term(system, b_hat) + float(np.sum(maps.lambda_map * d * d))


def mean_abs_contrast_error(system: ContrastSystem, b_hat: np.ndarray) -> float:
    """Mean of ``|b_i - b_j - c_ij|`` over all pairs."""
    if system.pair_count == 0:
        return 0.0
    total = sum(float(np.abs(res).sum()) for res in system.residuals(b_hat))
    return total / system.pair_count
