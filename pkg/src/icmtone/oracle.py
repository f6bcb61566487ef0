"""Reference solver for small instances: projected gradient descent on the full quadratic.

Built from an explicit pair list and sparse matrices, sharing no code path
with the ICM kernels, so agreement between the two certifies the ICM result.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .contrast import ContrastSystem

MAX_VARIABLES = 4096


class OracleFailure(RuntimeError):
    """Projected gradient did not reach the requested tolerance."""


@dataclass(frozen=True)
class DenseInstance:
    n: int
    i: np.ndarray
    j: np.ndarray
    c: np.ndarray
    w: np.ndarray
    lam: np.ndarray
    r: np.ndarray
    u: np.ndarray

    @classmethod
    def from_grid(cls, system: ContrastSystem, maps, r: np.ndarray) -> "DenseInstance":
        i, j, c, w = system.pairs()
        keep = w > 0
        return cls(
            n=int(np.prod(system.shape)),
            i=i[keep],
            j=j[keep],
            c=c[keep],
            w=w[keep],
            lam=np.asarray(maps.lambda_map, dtype=np.float64).ravel().copy(),
            r=np.asarray(r, dtype=np.float64).ravel().copy(),
            u=np.asarray(maps.upper_bound, dtype=np.float64).ravel().copy(),
        )

    def pair_matrix(self) -> sp.csr_matrix:
        """Rows hold +1 at ``i`` and -1 at ``j`` for each pair."""
        m = len(self.i)
        rows = np.concatenate([np.arange(m), np.arange(m)])
        cols = np.concatenate([self.i, self.j])
        vals = np.concatenate([np.ones(m), -np.ones(m)])
        return sp.csr_matrix((vals, (rows, cols)), shape=(m, self.n))

    def objective(self, x: np.ndarray) -> float:
        res = x[self.i] - x[self.j] - self.c
        d = x - self.r
        return float(np.sum(self.w * res * res) + np.sum(self.lam * d * d))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        res = self.w * (x[self.i] - x[self.j] - self.c)
        g = 2.0 * self.lam * (x - self.r)
        g += 2.0 * np.bincount(self.i, res, self.n)
        g -= 2.0 * np.bincount(self.j, res, self.n)
        return g

    def lipschitz(self) -> float:
        """Gershgorin bound on the largest Hessian eigenvalue."""
        wsum = np.bincount(self.i, self.w, self.n) + np.bincount(self.j, self.w, self.n)
        return float(2.0 * np.max(2.0 * wsum + self.lam))


def projected_gradient_norm(inst: DenseInstance, x: np.ndarray) -> float:
    g = inst.gradient(x)
    at_bound = x >= inst.u
    pg = np.where(at_bound, np.maximum(g, 0.0), g)
    return float(np.max(np.abs(pg))) if pg.size else 0.0


def oracle_solve(
    inst: DenseInstance,
    tol: float = 1e-10,
    max_iters: int = 2_000_000,
    x0: np.ndarray | None = None,
    trace: list[float] | None = None,
) -> np.ndarray:
    """Minimize the instance objective over ``x <= u`` by projected gradient with step 1/L."""
    if inst.n > MAX_VARIABLES:
        raise ValueError(f"oracle is limited to {MAX_VARIABLES} variables")
    if not np.all(inst.lam > 0):
        raise ValueError("oracle requires lambda > 0 everywhere")
    H = inst.pair_matrix()
    A = (H.T @ sp.diags(inst.w) @ H + sp.diags(inst.lam)).tocsr()
    rhs = H.T @ (inst.w * inst.c) + inst.lam * inst.r
    step = 1.0 / inst.lipschitz()
    u = inst.u
    x = np.minimum(inst.r if x0 is None else np.asarray(x0, dtype=np.float64), u).copy()

    for _ in range(max_iters):
        g = 2.0 * (A @ x - rhs)
        pg = np.where(x >= u, np.maximum(g, 0.0), g)
        if np.max(np.abs(pg), initial=0.0) < tol:
            return x
        x = np.minimum(x - step * g, u)
        if trace is not None:
            trace.append(inst.objective(x))
    raise OracleFailure(f"projected gradient did not reach tol={tol} in {max_iters} iterations")
