"""Coordinate descent for the weighted-penalty linear Lasso.

Solves

    min_b  ||y - X b||^2 / (2n) + lam * sum_k upsilon_k |b_k|

cycling over coordinates 1..p in fixed order and maintaining the residual
``r = y - X b`` incrementally. The coordinate minimiser is the soft-threshold
of ``b_k + v_k'r / ||v_k||^2`` at ``n * lam * upsilon_k / ||v_k||^2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from irlasso.errors import ContractError

DEFAULT_CD_TOL = 1e-7
DEFAULT_CD_MAX_CYCLES = 100_000


@dataclass
class WeightedLassoProblem:
    y: np.ndarray
    X: np.ndarray
    lam: float
    upsilon: np.ndarray
    tol: float = DEFAULT_CD_TOL
    max_cycles: int = DEFAULT_CD_MAX_CYCLES

    def __post_init__(self):
        self.X = np.asfortranarray(self.X, dtype=float)
        self.y = np.ascontiguousarray(self.y, dtype=float)
        self.upsilon = np.ascontiguousarray(self.upsilon, dtype=float)
        n, p = self.X.shape
        if self.y.shape != (n,):
            raise ContractError(f"y has shape {self.y.shape}, expected ({n},)")
        if self.upsilon.shape != (p,):
            raise ContractError(f"upsilon has shape {self.upsilon.shape}, expected ({p},)")
        if self.lam < 0:
            raise ContractError(f"lambda must be non-negative, got {self.lam}")
        if np.any(self.upsilon <= 0):
            raise ContractError("penalty multipliers must be positive")
        if self.tol <= 0 or self.max_cycles < 1:
            raise ContractError("tol must be positive and max_cycles >= 1")

    def objective(self, b) -> float:
        r = self.y - self.X @ b
        n = self.X.shape[0]
        return float(r @ r / (2 * n) + self.lam * np.sum(self.upsilon * np.abs(b)))


@dataclass
class CdSolution:
    b: np.ndarray
    cycles_used: int
    converged: bool
    residual: np.ndarray | None = None
    objective_history: np.ndarray | None = None


def shrinkage(x: float, threshold: float) -> float:
    """Soft-threshold: ``sign(x) * max(|x| - threshold, 0)``."""
    if threshold < 0:
        raise ContractError("threshold must be non-negative")
    return float(np.sign(x) * max(abs(x) - threshold, 0.0))


@njit(cache=True, fastmath=True)
def _cd_kernel(X, y, b, lam, upsilon, tol, max_cycles, record, history):
    n, p = X.shape
    r = y.copy()
    for k in range(p):
        if b[k] != 0.0:
            for i in range(n):
                r[i] -= X[i, k] * b[k]
    norms = np.empty(p)
    for k in range(p):
        s = 0.0
        for i in range(n):
            s += X[i, k] * X[i, k]
        norms[k] = s

    cycles = 0
    converged = False
    while cycles < max_cycles:
        cycles += 1
        change2 = 0.0
        for k in range(p):
            nk = norms[k]
            if nk == 0.0:
                # a zero column never moves the fit; pin its coefficient at 0
                if b[k] != 0.0:
                    change2 += b[k] * b[k]
                    b[k] = 0.0
                continue
            dot = 0.0
            for i in range(n):
                dot += X[i, k] * r[i]
            bk = b[k]
            z = bk + dot / nk
            thr = n * lam * upsilon[k] / nk
            if z > thr:
                bnew = z - thr
            elif z < -thr:
                bnew = z + thr
            else:
                bnew = 0.0
            if bnew != bk:
                delta = bk - bnew
                for i in range(n):
                    r[i] += delta * X[i, k]
                change2 += delta * delta
                b[k] = bnew
        if record:
            rss = 0.0
            for i in range(n):
                rss += r[i] * r[i]
            pen = 0.0
            for k in range(p):
                pen += upsilon[k] * abs(b[k])
            history[cycles - 1] = rss / (2.0 * n) + lam * pen
        if np.sqrt(change2) < tol:
            converged = True
            break
    return cycles, converged, r


@njit(cache=True, fastmath=True)
def _cd_gram_kernel(G, c, n, b, lam, upsilon, tol, max_cycles):
    # same cyclic updates as _cd_kernel, tracking q = G b instead of r = y - X b
    p = G.shape[0]
    q = np.zeros(p)
    for k in range(p):
        if b[k] != 0.0:
            for j in range(p):
                q[j] += G[k, j] * b[k]
    cycles = 0
    converged = False
    while cycles < max_cycles:
        cycles += 1
        change2 = 0.0
        for k in range(p):
            nk = G[k, k]
            if nk == 0.0:
                if b[k] != 0.0:
                    change2 += b[k] * b[k]
                    b[k] = 0.0
                continue
            bk = b[k]
            z = bk + (c[k] - q[k]) / nk
            thr = n * lam * upsilon[k] / nk
            if z > thr:
                bnew = z - thr
            elif z < -thr:
                bnew = z + thr
            else:
                bnew = 0.0
            if bnew != bk:
                delta = bnew - bk
                for j in range(p):
                    q[j] += delta * G[k, j]
                change2 += delta * delta
                b[k] = bnew
        if np.sqrt(change2) < tol:
            converged = True
            break
    return cycles, converged


def lasso_cd_gram(problem: WeightedLassoProblem, b_init=None) -> CdSolution:
    """Same iteration as :func:`lasso_cd`, driven by ``X'X`` and ``X'y``.

    Each coordinate update costs O(p) instead of O(n), which pays off when
    n >> p and many cycles are needed. The residual is formed once on exit.
    """
    X = problem.X
    p = X.shape[1]
    b = np.zeros(p) if b_init is None else np.array(b_init, dtype=float)
    if b.shape != (p,):
        raise ContractError(f"b_init has shape {b.shape}, expected ({p},)")
    G = np.ascontiguousarray(X.T @ X)
    c = X.T @ problem.y
    cycles, converged = _cd_gram_kernel(
        G, c, float(X.shape[0]), b, float(problem.lam), problem.upsilon,
        float(problem.tol), int(problem.max_cycles),
    )
    return CdSolution(b, int(cycles), bool(converged), residual=problem.y - X @ b)


def lasso_cd(
    problem: WeightedLassoProblem, b_init=None, record_objective: bool = False
) -> CdSolution:
    """Run coordinate descent from ``b_init`` (zeros if omitted).

    Non-convergence is reported through ``converged=False``; the last iterate
    is returned either way.
    """
    p = problem.X.shape[1]
    b = np.zeros(p) if b_init is None else np.array(b_init, dtype=float)
    if b.shape != (p,):
        raise ContractError(f"b_init has shape {b.shape}, expected ({p},)")
    history = np.empty(problem.max_cycles if record_objective else 1)
    cycles, converged, r = _cd_kernel(
        problem.X,
        problem.y,
        b,
        float(problem.lam),
        problem.upsilon,
        float(problem.tol),
        int(problem.max_cycles),
        record_objective,
        history,
    )
    return CdSolution(
        b=b,
        cycles_used=int(cycles),
        converged=bool(converged),
        residual=r,
        objective_history=history[:cycles].copy() if record_objective else None,
    )


def kkt_residuals(problem: WeightedLassoProblem, b) -> np.ndarray:
    """Per-coordinate violation of the Lasso optimality conditions.

    With ``g = X'(y - X b) / n``: ``max(|g_k| - lam*ups_k, 0)`` where
    ``b_k == 0`` and ``|g_k - lam*ups_k*sign(b_k)|`` otherwise.
    """
    b = np.asarray(b, dtype=float)
    n = problem.X.shape[0]
    g = problem.X.T @ (problem.y - problem.X @ b) / n
    pen = problem.lam * problem.upsilon
    return np.where(
        b == 0.0,
        np.maximum(np.abs(g) - pen, 0.0),
        np.abs(g - pen * np.sign(b)),
    )
