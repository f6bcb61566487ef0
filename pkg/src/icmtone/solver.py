"""Iterated conditional modes for the box-constrained contrast problem.

Every pixel update is the exact minimizer of the objective in that single
coordinate, clamped to the pixel's upper bound:

    b_i <- min(u_i, [sum_j w_ij (b_j + c_ij) + lam_i r_i] / [sum_j w_ij + lam_i])

with ``c_ij`` oriented as ``B_i - B_j``.  Asynchronous sweeps apply updates in
place in raster order (Gauss-Seidel); synchronous sweeps compute every update
from the previous sweep and commit them together (Jacobi), which is what
allows the row loop to run in parallel.
"""

from __future__ import annotations

import logging
import os
from contextlib import contextmanager
from dataclasses import dataclass, field

import numba
import numpy as np

from .contrast import ContrastSystem, build_contrast_system, objective
from .edges import AdaptationMaps, EdgeParams, build_adaptation
from .errors import NumericalError
from .reference import TroParams, reference_brightness

log = logging.getLogger(__name__)

SYNC = "sync"
ASYNC = "async"
SCHEMES = (SYNC, ASYNC)

DEFAULT_BASE_LAMBDA = 1.0
DEFAULT_MAX_ITERS = 100
DEFAULT_TOL = 1e-4
# consecutive objective increases that trigger the switch from sync to async
_FALLBACK_PATIENCE = 3


@dataclass(frozen=True)
class SolverConfig:
    scheme: str = SYNC
    max_iters: int = DEFAULT_MAX_ITERS
    tol: float = DEFAULT_TOL

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass
class SolveReport:
    iterations_run: int = 0
    final_objective: float = float("nan")
    final_max_delta: float = float("inf")
    converged: bool = False
    objective_trace: list[float] = field(default_factory=list)
    delta_trace: list[float] = field(default_factory=list)
    initial_objective: float = float("nan")
    scheme: str = SYNC
    fallback_at: int | None = None  # sweep after which sync switched to async


# ---------------------------------------------------------------------------
# kernels


@numba.njit(cache=True, inline="always")
def _vertex(b, y, x, offsets, targets, weights, lam, r, u):
    h, w = b.shape
    num = lam[y, x] * r[y, x]
    den = lam[y, x]
    for k in range(offsets.shape[0]):
        dy = offsets[k, 0]
        dx = offsets[k, 1]
        wf = weights[k, y, x]
        if wf > 0.0:
            num += wf * (b[y + dy, x + dx] + targets[k, y, x])
            den += wf
        yy = y - dy
        xx = x - dx
        if yy >= 0 and yy < h and xx >= 0 and xx < w:
            wb = weights[k, yy, xx]
            if wb > 0.0:
                num += wb * (b[yy, xx] - targets[k, yy, xx])
                den += wb
    v = num / den
    if v > u[y, x]:
        v = u[y, x]
    return v


@numba.njit(cache=True)
def _pixel_update(b, y, x, offsets, targets, weights, lam, r, u):
    return _vertex(b, y, x, offsets, targets, weights, lam, r, u)


@numba.njit(cache=True)
def _async_sweep(b, offsets, targets, weights, lam, r, u):
    h, w = b.shape
    max_delta = 0.0
    for y in range(h):
        for x in range(w):
            v = _vertex(b, y, x, offsets, targets, weights, lam, r, u)
            d = abs(v - b[y, x])
            # propagates NaN
            if not d <= max_delta:
                max_delta = d
            b[y, x] = v
    return max_delta


@numba.njit(cache=True, parallel=True)
def _sync_sweep(b, out, offsets, targets, weights, lam, r, u):
    h, w = b.shape
    for y in numba.prange(h):
        for x in range(w):
            out[y, x] = _vertex(b, y, x, offsets, targets, weights, lam, r, u)


@contextmanager
def _numba_threads(threads: int | None):
    if threads is None:
        yield
        return
    previous = numba.get_num_threads()
    numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))
    try:
        yield
    finally:
        numba.set_num_threads(previous)


def _kernel_args(system: ContrastSystem, maps: AdaptationMaps, r: np.ndarray):
    return (
        np.asarray(system.offsets, dtype=np.int64).reshape(-1, 2),
        np.ascontiguousarray(system.targets, dtype=np.float64),
        np.ascontiguousarray(system.weights, dtype=np.float64),
        np.ascontiguousarray(maps.lambda_map, dtype=np.float64),
        np.ascontiguousarray(r, dtype=np.float64),
        np.ascontiguousarray(maps.upper_bound, dtype=np.float64),
    )


def _validate(system: ContrastSystem, maps: AdaptationMaps, r: np.ndarray) -> None:
    shape = system.shape
    for name, arr in (("lambda_map", maps.lambda_map), ("upper_bound", maps.upper_bound), ("r", r)):
        if np.shape(arr) != shape:
            raise ValueError(f"{name} has shape {np.shape(arr)}, expected {shape}")
        if not np.all(np.isfinite(arr)):
            raise NumericalError(f"{name} contains non-finite values")
    if not np.all(maps.lambda_map > 0):
        raise ValueError("lambda must be positive at every pixel")


# ---------------------------------------------------------------------------
# public API


def icm_pixel_update(
    index: int | tuple[int, int],
    b_hat: np.ndarray,
    system: ContrastSystem,
    maps: AdaptationMaps,
    r: np.ndarray,
) -> float:
    """Exact constrained minimizer of the objective in one coordinate (others held fixed)."""
    b_hat = np.ascontiguousarray(b_hat, dtype=np.float64)
    if isinstance(index, tuple):
        y, x = index
    else:
        y, x = divmod(int(index), b_hat.shape[1])
    return float(_pixel_update(b_hat, y, x, *_kernel_args(system, maps, r)))


def sweep(
    b_hat: np.ndarray,
    system: ContrastSystem,
    maps: AdaptationMaps,
    r: np.ndarray,
    scheme: str = SYNC,
    threads: int | None = None,
) -> tuple[np.ndarray, float]:
    """One full ICM sweep; returns the new field and the max absolute change."""
    args = _kernel_args(system, maps, r)
    b = np.array(b_hat, dtype=np.float64, order="C")
    if scheme == ASYNC:
        return b, float(_async_sweep(b, *args))
    out = np.empty_like(b)
    with _numba_threads(threads):
        _sync_sweep(b, out, *args)
    return out, float(np.max(np.abs(out - b)))


def solve(
    b_init: np.ndarray,
    system: ContrastSystem,
    maps: AdaptationMaps,
    r: np.ndarray,
    cfg: SolverConfig = SolverConfig(),
    threads: int | None = None,
) -> tuple[np.ndarray, SolveReport]:
    """Run ICM sweeps until the largest per-pixel change drops below ``cfg.tol``."""
    _validate(system, maps, r)
    args = _kernel_args(system, maps, r)
    upper = args[-1]
    b = np.minimum(np.array(b_init, dtype=np.float64, order="C"), upper)
    if not np.all(np.isfinite(b)):
        raise NumericalError("initial field contains non-finite values")

    report = SolveReport(scheme=cfg.scheme, initial_objective=objective(system, b, maps, r))
    scheme = cfg.scheme
    rises = 0
    prev = report.initial_objective
    scratch = np.empty_like(b)

    with _numba_threads(threads):
        for it in range(1, cfg.max_iters + 1):
            if scheme == ASYNC:
                delta = float(_async_sweep(b, *args))
            else:
                _sync_sweep(b, scratch, *args)
                delta = float(np.max(np.abs(scratch - b)))
                b, scratch = scratch, b
            if not np.isfinite(delta):
                raise NumericalError(f"non-finite brightness after sweep {it}")
            obj = objective(system, b, maps, r)
            report.iterations_run = it
            report.objective_trace.append(obj)
            report.delta_trace.append(delta)
            report.final_max_delta = delta
            report.final_objective = obj
            if delta < cfg.tol:
                report.converged = True
                break
            if scheme == SYNC:
                rises = rises + 1 if obj > prev else 0
                if rises >= _FALLBACK_PATIENCE:
                    log.warning("synchronous objective rose %d sweeps in a row; switching to asynchronous", rises)
                    scheme = ASYNC
                    report.fallback_at = it
            prev = obj
    return b, report


# ---------------------------------------------------------------------------
# luminance compression


@dataclass(frozen=True)
class CompressParams:
    tro: TroParams = TroParams()
    edge: EdgeParams = EdgeParams()
    base_lambda: float = DEFAULT_BASE_LAMBDA
    solver: SolverConfig = SolverConfig()
    connectivity: int = 4

    def __post_init__(self) -> None:
        if not self.base_lambda > 0:
            raise ValueError("base_lambda must be positive")


@dataclass
class CompressResult:
    y_out: np.ndarray
    b_hat: np.ndarray
    brightness: np.ndarray
    reference: np.ndarray
    edges: np.ndarray
    maps: AdaptationMaps
    system: ContrastSystem
    report: SolveReport


def compress_detailed(
    y: np.ndarray, params: CompressParams = CompressParams(), threads: int | None = None
) -> CompressResult:
    """Full luminance pipeline, keeping every intermediate plane."""
    y = np.asarray(y, dtype=np.float64)
    if np.any(y <= 0) or np.any(y > 1):
        raise ValueError("luminance must lie in (0, 1]")
    brightness = np.log(y)
    reference = reference_brightness(y, params.tro)
    edges, maps = build_adaptation(brightness, reference, params.base_lambda, params.edge)
    system = build_contrast_system(brightness, params.connectivity)
    b_hat, report = solve(reference, system, maps, reference, params.solver, threads=threads)
    return CompressResult(
        y_out=np.exp(b_hat),
        b_hat=b_hat,
        brightness=brightness,
        reference=reference,
        edges=edges,
        maps=maps,
        system=system,
        report=report,
    )


def compress(y: np.ndarray, params: CompressParams = CompressParams(), threads: int | None = None) -> np.ndarray:
    """Compressed luminance ``exp(b_hat)`` in (0, 1]."""
    return compress_detailed(y, params, threads).y_out


def default_threads() -> int:
    return os.cpu_count() or 1
