"""Brute-force oracles used to verify the fast paths.

Everything here is deliberately independent of the operations it checks:
objective values are recomputed from first principles (sorted sums,
exhaustive support enumeration, convex duality) rather than through the
penalty or solver modules.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "t_k_reference",
    "prox_top_k_brute",
    "active_patterns_brute",
    "project_l0_brute",
    "numeric_gradient",
    "ls_support_global_min",
    "robust_support_global_min",
    "penalized_robust_global_min",
    "directional_descent_min",
]


def t_k_reference(x: np.ndarray, K: int, excluded=()) -> float:
    """Sum of all but the K largest |x_j| over non-excluded coordinates."""
    excluded = set(excluded)
    mags = sorted(
        (abs(float(v)) for j, v in enumerate(x) if j not in excluded), reverse=True
    )
    return float(sum(mags[K:]))


def _soft(v: float, tau: float) -> float:
    if v > tau:
        return v - tau
    if v < -tau:
        return v + tau
    return 0.0


def prox_top_k_brute(y: np.ndarray, tau: float, K: int, excluded=()):
    """Minimize tau*T_K(x) + 0.5||x - y||^2 by enumerating every size-K support.

    For each candidate keep-set the minimizer keeps y there and soft-thresholds
    elsewhere; the lowest achieved objective is the prox value.  Returns
    (best point, best objective value).
    """
    y = np.asarray(y, dtype=np.float64)
    p = len(y)
    excluded = set(excluded)
    free = [j for j in range(p) if j not in excluded]
    best_obj = math.inf
    best_x = None
    for keep in itertools.combinations(free, K):
        x = y.copy()
        for j in free:
            if j not in keep:
                x[j] = _soft(float(y[j]), tau)
        obj = tau * t_k_reference(x, K, excluded) + 0.5 * float(np.sum((x - y) ** 2))
        if obj < best_obj:
            best_obj = obj
            best_x = x
    return best_x, best_obj


def active_patterns_brute(x: np.ndarray, K: int, excluded=(), delta: float = 0.0):
    """Scan all C(p, K) * 2^K sign patterns; keep those within delta of the max.

    Returns a set of entry tuples (one {0, +1, -1}^p tuple per pattern).
    """
    x = np.asarray(x, dtype=np.float64)
    p = len(x)
    excluded = set(excluded)
    free = [j for j in range(p) if j not in excluded]
    mags = sorted((abs(float(x[j])) for j in free), reverse=True)
    threshold = float(sum(mags[:K])) - delta
    out = set()
    for chosen in itertools.combinations(free, K):
        for signs in itertools.product((1, -1), repeat=K):
            dot = sum(s * float(x[j]) for j, s in zip(chosen, signs))
            if dot >= threshold:
                entries = [0] * p
                for j, s in zip(chosen, signs):
                    entries[j] = s
                out.add(tuple(entries))
    return out


def project_l0_brute(z: np.ndarray, kappa: int):
    """Best kappa-sparse approximation by support enumeration.

    Returns (best point, best squared distance).
    """
    z = np.asarray(z, dtype=np.float64)
    n = len(z)
    best_d = math.inf
    best = None
    for keep in itertools.combinations(range(n), kappa):
        cand = np.zeros_like(z)
        for j in keep:
            cand[j] = z[j]
        d = float(np.sum((cand - z) ** 2))
        if d < best_d:
            best_d = d
            best = cand
    return best, best_d


def numeric_gradient(fun, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central finite differences of a scalar function."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    for j in range(len(x)):
        e = np.zeros_like(x)
        e[j] = h
        g[j] = (fun(x + e) - fun(x - e)) / (2.0 * h)
    return g


def ls_support_global_min(A: np.ndarray, b: np.ndarray, K: int, excluded=()):
    """Global minimum of 0.5||Ax-b||^2 over ||x||_0 <= K by support enumeration.

    Excluded coordinates (an intercept) are allowed in every support for free.
    Returns (best objective, best point, best support).
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    p = A.shape[1]
    excluded = sorted(set(excluded))
    free = [j for j in range(p) if j not in excluded]
    best = (math.inf, None, None)
    for support in itertools.combinations(free, K):
        cols = list(excluded) + list(support)
        coef, *_ = np.linalg.lstsq(A[:, cols], b, rcond=None)
        x = np.zeros(p)
        x[cols] = coef
        r = A @ x - b
        val = 0.5 * float(r @ r)
        if val < best[0]:
            best = (val, x, tuple(cols))
    return best


def robust_support_global_min(A: np.ndarray, b: np.ndarray, K: int, kappa: int):
    """Global minimum of 0.5||Ax-b-z||^2 over ||x||_0<=K, ||z||_0<=kappa.

    For fixed supports the z-coordinates on their support absorb those
    residual rows exactly, so the inner problem is least squares on the
    remaining rows.  Returns (best objective, x, z).
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n, p = A.shape
    best = (math.inf, None, None)
    for sx in itertools.combinations(range(p), K):
        for sz in itertools.combinations(range(n), kappa):
            rows = [i for i in range(n) if i not in sz]
            coef, *_ = np.linalg.lstsq(A[np.ix_(rows, list(sx))], b[rows], rcond=None)
            x = np.zeros(p)
            x[list(sx)] = coef
            r = A @ x - b
            z = np.zeros(n)
            z[list(sz)] = r[list(sz)]
            val = 0.5 * float(np.sum((r - z) ** 2))
            if val < best[0]:
                best = (val, x, z)
    return best


@dataclass
class PenalizedGlobalMin:
    objective: float
    x: np.ndarray
    z: np.ndarray
    lower_bound: float
    certified: bool


def _piece_minimum(M, b, costs, w0, L, gap_tol, max_iters):
    """Exactly-weighted lasso min 0.5||Mw-b||^2 + sum_j costs_j |w_j|.

    Solved by ISTA with a duality-gap certificate: the dual point is the
    residual projected onto the null space of the unpenalized columns and
    scaled into the feasible box.  Returns (primal value, w, lower bound).
    """
    free_cols = np.flatnonzero(costs == 0.0)
    M_free = M[:, free_cols]
    if M_free.shape[1]:
        q, _ = np.linalg.qr(M_free)
    else:
        q = None
    w = w0.copy()
    primal = math.inf
    lower = -math.inf
    for _ in range(max_iters):
        for _ in range(25):
            grad = M.T @ (M @ w - b)
            step = w - grad / L
            w = np.sign(step) * np.maximum(np.abs(step) - costs / L, 0.0)
        resid = M @ w - b
        primal = 0.5 * float(resid @ resid) + float(costs @ np.abs(w))
        nu = resid.copy()
        if q is not None:
            nu -= q @ (q.T @ nu)
        corr = M.T @ nu
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(costs > 0, np.abs(corr) / costs, 0.0)
        scale_fac = max(1.0, float(ratios.max()) if ratios.size else 1.0)
        nu /= scale_fac
        lower = -0.5 * float(nu @ nu) - float(nu @ b)
        if primal - lower <= gap_tol:
            break
    return primal, w, lower


def penalized_robust_global_min(
    A: np.ndarray,
    b: np.ndarray,
    lam1: float,
    lam2: float,
    K: int,
    kappa: int,
    gap_tol: float = 1e-9,
    max_rounds: int = 400,
) -> PenalizedGlobalMin:
    """Global minimum of 0.5||Ax-b-z||^2 + lam1 T_K(x) + lam2 T_kappa(z).

    T_K(x) is the minimum over size-K keep-sets of the l1 norm off the set,
    so the objective is the pointwise minimum of C(p,K)*C(n,kappa) convex
    weighted-lasso problems.  Each piece is solved by ISTA and certified with
    a dual lower bound; the result is certified when the smallest dual bound
    reaches the best primal value within 10 * gap_tol.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n, p = A.shape
    M = np.hstack([A, -np.eye(n)])
    L = float(np.linalg.eigvalsh(M @ M.T)[-1])
    best = (math.inf, None, None)
    worst_lower = math.inf
    certified = True
    for sx in itertools.combinations(range(p), K):
        for sz in itertools.combinations(range(n), kappa):
            costs = np.concatenate([np.full(p, lam1), np.full(n, lam2)])
            costs[list(sx)] = 0.0
            costs[[p + i for i in sz]] = 0.0
            # warm start from the support-restricted least-squares solution
            rows = [i for i in range(n) if i not in sz]
            coef, *_ = np.linalg.lstsq(A[np.ix_(rows, list(sx))], b[rows], rcond=None)
            w0 = np.zeros(p + n)
            w0[list(sx)] = coef
            resid0 = A @ w0[:p] - b
            w0[[p + i for i in sz]] = resid0[list(sz)]
            primal, w, lower = _piece_minimum(
                M, b, costs, w0, L, gap_tol, max_rounds
            )
            if primal - lower > 10.0 * gap_tol:
                certified = False
            worst_lower = min(worst_lower, lower)
            if primal < best[0]:
                best = (primal, w[:p].copy(), w[p:].copy())
    if worst_lower < best[0] - 10.0 * gap_tol:
        certified = False
    return PenalizedGlobalMin(
        objective=best[0],
        x=best[1],
        z=best[2],
        lower_bound=worst_lower,
        certified=certified,
    )


def directional_descent_min(
    value_fn, x: np.ndarray, n_dirs: int = 10_000, tau: float = 1e-6, seed: int = 0
) -> float:
    """min over random unit directions of F(x + tau d) - F(x)."""
    rng = np.random.Generator(np.random.Philox(seed))
    base = value_fn(x)
    best = math.inf
    for _ in range(n_dirs):
        d = rng.standard_normal(len(x))
        d /= np.linalg.norm(d)
        best = min(best, value_fn(x + tau * d) - base)
    return best
