"""Smooth losses, gradients, and Lipschitz-constant estimation.

Three loss kinds back every solver:

* least squares            f(x)   = 0.5 ||Ax - b||^2
* logistic                 f(x)   = (1/N) sum_i log(1 + exp(-b_i <a_i, x>))
* robust least squares     f(x,z) = 0.5 ||Ax - b - z||^2   (two blocks)

The 0.5 scaling on the squared losses makes grad f = A.T (Ax - b) and
L = lambda_max(A.T A), which is what the step-size rules assume.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import DesignMatrix
from .errors import DimensionMismatchError, InvalidDataError

__all__ = [
    "LipschitzEstimate",
    "ls_value",
    "ls_value_grad",
    "logistic_value",
    "logistic_value_grad",
    "robust_ls_value",
    "robust_ls_value_grad",
    "lipschitz_upper_bound",
    "LeastSquaresLoss",
    "LogisticLoss",
    "RobustLeastSquaresLoss",
]

_POWER_ITER_CAP = 10_000
_EXACT_MAX_DIM = 1024  # gram dimension up to which the dense eigensolver is used


@dataclass(frozen=True)
class LipschitzEstimate:
    """Certified upper bound on the gradient Lipschitz constant.

    ``L`` is never below the spectral constant it estimates: the dense path is
    exact and the power-iteration path is inflated by ``1 + 10 * tol``.
    """

    L: float
    method: str  # "power_iteration" | "exact_small"
    iterations_used: int
    relative_tolerance: float
    degenerate: bool = False
    converged: bool = True


def _as_vector(v, n: int, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (n,):
        raise DimensionMismatchError(f"{name} has shape {v.shape}, expected ({n},)")
    if not np.all(np.isfinite(v)):
        raise InvalidDataError(f"{name} contains NaN or Inf")
    return v


def ls_value(A: DesignMatrix, b: np.ndarray, x: np.ndarray) -> float:
    b = _as_vector(b, A.n_rows, "b")
    x = _as_vector(x, A.n_cols, "x")
    r = A.matvec(x) - b
    return 0.5 * float(r @ r)


def ls_value_grad(A: DesignMatrix, b: np.ndarray, x: np.ndarray):
    """0.5 ||Ax - b||^2 and its gradient A.T (Ax - b)."""
    b = _as_vector(b, A.n_rows, "b")
    x = _as_vector(x, A.n_cols, "x")
    r = A.matvec(x) - b
    return 0.5 * float(r @ r), A.rmatvec(r)


def _softplus(t: np.ndarray) -> np.ndarray:
    # log(1 + exp(t)) without overflow for large |t|
    return np.log1p(np.exp(-np.abs(t))) + np.maximum(t, 0.0)


def _sigmoid(t: np.ndarray) -> np.ndarray:
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _check_labels(b: np.ndarray) -> None:
    if not np.all(np.isin(b, (-1.0, 1.0))):
        raise InvalidDataError("logistic labels must all be +1 or -1")


def logistic_value(A: DesignMatrix, b: np.ndarray, x: np.ndarray) -> float:
    b = _as_vector(b, A.n_rows, "b")
    _check_labels(b)
    x = _as_vector(x, A.n_cols, "x")
    margins = b * A.matvec(x)
    return float(np.mean(_softplus(-margins)))


def logistic_value_grad(A: DesignMatrix, b: np.ndarray, x: np.ndarray):
    """(1/N)-scaled logistic loss and gradient, stable for large margins."""
    b = _as_vector(b, A.n_rows, "b")
    _check_labels(b)
    x = _as_vector(x, A.n_cols, "x")
    n = A.n_rows
    margins = b * A.matvec(x)
    value = float(np.mean(_softplus(-margins)))
    grad = A.rmatvec(-b * _sigmoid(-margins)) / n
    return value, grad


def robust_ls_value(A: DesignMatrix, b: np.ndarray, x: np.ndarray, z: np.ndarray) -> float:
    b = _as_vector(b, A.n_rows, "b")
    x = _as_vector(x, A.n_cols, "x")
    z = _as_vector(z, A.n_rows, "z")
    r = A.matvec(x) - b - z
    return 0.5 * float(r @ r)


def robust_ls_value_grad(A: DesignMatrix, b: np.ndarray, x: np.ndarray, z: np.ndarray):
    """0.5 ||Ax - b - z||^2 with gradients (A.T r, -r), r = Ax - b - z."""
    b = _as_vector(b, A.n_rows, "b")
    x = _as_vector(x, A.n_cols, "x")
    z = _as_vector(z, A.n_rows, "z")
    r = A.matvec(x) - b - z
    return 0.5 * float(r @ r), A.rmatvec(r), -r


def _power_iteration(operator, dim: int, tol: float) -> tuple[float, int, bool, bool]:
    """Largest eigenvalue of a PSD operator by power iteration.

    Returns (rayleigh, iterations, converged, degenerate). Start vector is the
    normalized all-ones vector perturbed by a fixed-seed draw, so runs are
    reproducible across platforms.
    """
    rng = np.random.Generator(np.random.Philox(0))
    v = np.ones(dim) + 1e-3 * rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    rayleigh = 0.0
    for it in range(1, _POWER_ITER_CAP + 1):
        w = operator(v)
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0, it, True, True
        new_rayleigh = float(v @ w)
        v = w / norm_w
        # stop two decades below the requested tolerance so the residual
        # error stays within the (1 + 10 tol) safety inflation
        if it > 1 and abs(new_rayleigh - rayleigh) < 0.01 * tol * max(
            abs(new_rayleigh), 1e-300
        ):
            return new_rayleigh, it, True, False
        rayleigh = new_rayleigh
    return rayleigh, _POWER_ITER_CAP, False, False


def _gram_lambda_max_exact(A: DesignMatrix) -> float:
    # eigvalsh on the smaller of A.T A / A A.T; both share lambda_max
    dense = A.to_dense()
    if A.n_cols <= A.n_rows:
        gram = dense.T @ dense
    else:
        gram = dense @ dense.T
    if gram.size == 0:
        return 0.0
    return float(max(np.linalg.eigvalsh(gram)[-1], 0.0))


def _gram_lambda_max(A: DesignMatrix, tol: float, method: str):
    """lambda_max(A.T A) plus estimate bookkeeping."""
    dim = min(A.n_rows, A.n_cols)
    if method == "auto":
        method = "exact_small" if dim <= _EXACT_MAX_DIM else "power_iteration"
    if method == "exact_small":
        lam = _gram_lambda_max_exact(A)
        return lam, "exact_small", 0, True, lam == 0.0
    if method != "power_iteration":
        raise ValueError(f"unknown lipschitz method {method!r}")

    def operator(v):
        return A.rmatvec(A.matvec(v))

    lam, its, converged, degenerate = _power_iteration(operator, A.n_cols, tol)
    lam *= 1.0 + 10.0 * tol  # safety factor keeps the estimate an upper bound
    return lam, "power_iteration", its, converged, degenerate


def lipschitz_upper_bound(loss, tol: float = 1e-9, method: str = "auto") -> LipschitzEstimate:
    """Upper bound on the gradient Lipschitz constant of a loss.

    least squares   -> lambda_max(A.T A)
    logistic        -> lambda_max(A.T A) / (4 N)
    robust LS       -> lambda_max of the stacked operator [A, -I], which
                       equals lambda_max(A.T A) + 1

    A zero matrix yields the machine-epsilon floor with ``degenerate=True``.
    """
    if isinstance(loss, RobustLeastSquaresLoss):
        return loss.joint_lipschitz(tol=tol, method=method)
    A = loss.A
    lam, used, its, converged, degenerate = _gram_lambda_max(A, tol, method)
    if isinstance(loss, LogisticLoss):
        lam /= 4.0 * max(A.n_rows, 1)
    if lam <= 0.0:
        return LipschitzEstimate(
            L=float(np.finfo(np.float64).eps),
            method=used,
            iterations_used=its,
            relative_tolerance=tol,
            degenerate=True,
            converged=converged,
        )
    return LipschitzEstimate(lam, used, its, tol, degenerate, converged)


class LeastSquaresLoss:
    """f(x) = 0.5 ||Ax - b||^2."""

    kind = "least_squares"

    def __init__(self, A: DesignMatrix, b):
        self.A = A
        self.b = _as_vector(b, A.n_rows, "b")
        self._lip: LipschitzEstimate | None = None

    @property
    def dim(self) -> int:
        return self.A.n_cols

    @property
    def sample_count(self) -> int:
        return self.A.n_rows

    def value(self, x: np.ndarray) -> float:
        return ls_value(self.A, self.b, x)

    def value_grad(self, x: np.ndarray):
        return ls_value_grad(self.A, self.b, x)

    def grad(self, x: np.ndarray) -> np.ndarray:
        return self.value_grad(x)[1]

    def lipschitz(self, tol: float = 1e-9, method: str = "auto") -> float:
        if self._lip is None:
            self._lip = lipschitz_upper_bound(self, tol=tol, method=method)
        return self._lip.L


class LogisticLoss:
    """f(x) = (1/N) sum_i log(1 + exp(-b_i <a_i, x>)), labels in {-1, +1}."""

    kind = "logistic"

    def __init__(self, A: DesignMatrix, b):
        self.A = A
        self.b = _as_vector(b, A.n_rows, "b")
        _check_labels(self.b)
        self._lip: LipschitzEstimate | None = None

    @property
    def dim(self) -> int:
        return self.A.n_cols

    @property
    def sample_count(self) -> int:
        return self.A.n_rows

    def value(self, x: np.ndarray) -> float:
        return logistic_value(self.A, self.b, x)

    def value_grad(self, x: np.ndarray):
        return logistic_value_grad(self.A, self.b, x)

    def grad(self, x: np.ndarray) -> np.ndarray:
        return self.value_grad(x)[1]

    def lipschitz(self, tol: float = 1e-9, method: str = "auto") -> float:
        if self._lip is None:
            self._lip = lipschitz_upper_bound(self, tol=tol, method=method)
        return self._lip.L


class RobustLeastSquaresLoss:
    """f(x, z) = 0.5 ||Ax - b - z||^2 with gradient blocks for x and z."""

    kind = "robust_least_squares"

    def __init__(self, A: DesignMatrix, b):
        self.A = A
        self.b = _as_vector(b, A.n_rows, "b")
        self._lip_x: LipschitzEstimate | None = None
        self._lip_joint: LipschitzEstimate | None = None

    @property
    def dim_x(self) -> int:
        return self.A.n_cols

    @property
    def dim_z(self) -> int:
        return self.A.n_rows

    def value(self, x: np.ndarray, z: np.ndarray) -> float:
        return robust_ls_value(self.A, self.b, x, z)

    def value_grads(self, x: np.ndarray, z: np.ndarray):
        return robust_ls_value_grad(self.A, self.b, x, z)

    def grad_x(self, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        r = self.A.matvec(x) - self.b - z
        return self.A.rmatvec(r)

    def grad_z(self, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        return -(self.A.matvec(x) - self.b - z)

    def fit_residual(self, x: np.ndarray) -> np.ndarray:
        """Ax - b, the unconstrained minimizer of f(x, .) over z."""
        return self.A.matvec(x) - self.b

    def lipschitz_x(self, tol: float = 1e-9, method: str = "auto") -> float:
        """Block constant for x: lambda_max(A.T A)."""
        if self._lip_x is None:
            A = self.A
            lam, used, its, converged, degenerate = _gram_lambda_max(A, tol, method)
            lam = max(lam, float(np.finfo(np.float64).eps))
            self._lip_x = LipschitzEstimate(lam, used, its, tol, degenerate, converged)
        return self._lip_x.L

    def lipschitz_z(self) -> float:
        """Block constant for z: Hessian block is the identity."""
        return 1.0

    def joint_lipschitz(
        self, tol: float = 1e-9, method: str = "auto", cheap_bound: bool = False
    ) -> LipschitzEstimate:
        """Joint constant M = lambda_max([[A.T A, -A.T], [-A, I]]).

        For this loss the stacked operator [A, -I] satisfies
        lambda_max = lambda_max(A.T A) + 1, so ``cheap_bound=True`` and the
        exact path coincide; power iteration is kept for large problems.
        """
        if cheap_bound or method == "exact_small" or (
            method == "auto" and min(self.A.shape) <= _EXACT_MAX_DIM
        ):
            lam, used, its, converged, degenerate = _gram_lambda_max(
                self.A, tol, "exact_small" if method != "power_iteration" else method
            )
            return LipschitzEstimate(lam + 1.0, used, its, tol, False, converged)

        A = self.A
        p, n = A.n_cols, A.n_rows

        def operator(v):
            t = A.matvec(v[:p]) - v[p:]
            return np.concatenate([A.rmatvec(t), -t])

        lam, its, converged, degenerate = _power_iteration(operator, p + n, tol)
        lam *= 1.0 + 10.0 * tol
        return LipschitzEstimate(
            max(lam, 1.0), "power_iteration", its, tol, degenerate, converged
        )
