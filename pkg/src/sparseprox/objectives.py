"""Composite objectives consumed by the solvers.

Single-block problems minimize F(x) = f(x) + g(x) with a smooth loss f and a
prox-friendly penalty g.  Two-block problems minimize F(x, z) = f(x, z) +
g(x) + h(z).  Penalties that expose a DC decomposition g = g1 - g2 (convex
minus convex, g2 a max of linear pieces) additionally support the DC solvers
and the stationarity certificates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .design import DesignMatrix
from .losses import LeastSquaresLoss
from .penalties import SignPattern

__all__ = [
    "CompositeObjective",
    "TwoBlockObjective",
    "PositivePartPenalty",
    "corner_1d_problem",
]


class CompositeObjective:
    """F(x) = loss.value(x) + penalty.value(x); evaluation is side-effect free."""

    def __init__(self, loss, penalty):
        self.loss = loss
        self.penalty = penalty

    @property
    def dim(self) -> int:
        return self.loss.dim

    def value(self, x: np.ndarray) -> float:
        return self.loss.value(x) + self.penalty.value(x)

    def smooth_value(self, x: np.ndarray) -> float:
        return self.loss.value(x)

    def smooth_value_grad(self, x: np.ndarray):
        return self.loss.value_grad(x)

    def smooth_grad(self, x: np.ndarray) -> np.ndarray:
        return self.loss.value_grad(x)[1]

    def penalty_value(self, x: np.ndarray) -> float:
        return self.penalty.value(x)

    def prox_penalty(self, y: np.ndarray, step: float) -> np.ndarray:
        return self.penalty.prox(y, step)

    def lipschitz(self) -> float:
        return self.loss.lipschitz()

    # DC surface, available when the penalty carries a decomposition --------
    @property
    def is_dc(self) -> bool:
        return getattr(self.penalty, "is_dc", False)

    def _require_dc(self):
        if not self.is_dc:
            raise TypeError("penalty does not expose a DC decomposition")

    def convex_value(self, x: np.ndarray) -> float:
        self._require_dc()
        return self.penalty.convex_value(x)

    def convex_prox(self, y: np.ndarray, step: float) -> np.ndarray:
        self._require_dc()
        return self.penalty.convex_prox(y, step)

    def concave_value(self, x: np.ndarray) -> float:
        self._require_dc()
        return self.penalty.concave_value(x)

    def concave_subgradient(self, x: np.ndarray, policy: str = "canonical") -> np.ndarray:
        self._require_dc()
        return self.penalty.concave_subgradient(x, policy)

    def active_gradients(self, x: np.ndarray, delta: float = 0.0, cap: int = 100_000):
        self._require_dc()
        return self.penalty.active_gradients(x, delta, cap)

    def l1_weights(self) -> np.ndarray:
        self._require_dc()
        return self.penalty.l1_weights()


class TwoBlockObjective:
    """F(x, z) = loss.value(x, z) + penalty_x(x) + penalty_z(z)."""

    def __init__(self, loss, penalty_x, penalty_z):
        self.loss = loss
        self.penalty_x = penalty_x
        self.penalty_z = penalty_z

    def value(self, x: np.ndarray, z: np.ndarray) -> float:
        return self.loss.value(x, z) + self.penalty_x.value(x) + self.penalty_z.value(z)

    def smooth_value(self, x: np.ndarray, z: np.ndarray) -> float:
        return self.loss.value(x, z)

    def grad_x(self, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        return self.loss.grad_x(x, z)

    def grad_z(self, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        return self.loss.grad_z(x, z)

    def prox_x(self, y: np.ndarray, step: float) -> np.ndarray:
        return self.penalty_x.prox(y, step)

    def prox_z(self, y: np.ndarray, step: float) -> np.ndarray:
        return self.penalty_z.prox(y, step)

    def lipschitz_x(self) -> float:
        return self.loss.lipschitz_x()

    def lipschitz_z(self) -> float:
        return self.loss.lipschitz_z()


@dataclass
class PositivePartPenalty:
    """1-d penalty g(x) = max(0, x), written as the DC split |x| - max(0, -x).

    Both DC parts are nonsmooth, so the difference of their subdifferentials
    at 0 is much larger than the subdifferential of g itself.  That makes 0 a
    DC-critical point of 0.5*(x-2)^2 + g(x) that is not d-stationary, which is
    the canonical stress test for the certificate code and for subgradient
    policies (plain DC iterations stall at 0 under the extreme choice).
    """

    is_dc: bool = field(default=True, init=False, repr=False)
    p: int = field(default=1, init=False, repr=False)

    def value(self, x: np.ndarray) -> float:
        return float(max(0.0, x[0]))

    def prox(self, y: np.ndarray, step: float) -> np.ndarray:
        # one-sided shrink: prox of step * max(0, .)
        v = float(y[0])
        if v < 0.0:
            out = v
        elif v <= step:
            out = 0.0
        else:
            out = v - step
        return np.array([out])

    def convex_value(self, x: np.ndarray) -> float:
        return float(abs(x[0]))

    def convex_prox(self, y: np.ndarray, step: float) -> np.ndarray:
        v = float(y[0])
        return np.array([np.sign(v) * max(abs(v) - step, 0.0)])

    def concave_value(self, x: np.ndarray) -> float:
        return float(max(0.0, -x[0]))

    def concave_subgradient(self, x: np.ndarray, policy: str = "canonical") -> np.ndarray:
        v = float(x[0])
        if v > 0:
            return np.array([0.0])
        if v < 0:
            return np.array([-1.0])
        if policy == "extreme_negative":
            return np.array([-1.0])
        return np.array([0.0])  # canonical and index_order take the flat piece

    def active_gradients(self, x: np.ndarray, delta: float = 0.0, cap: int = 100_000):
        """Pieces of max(0, -x): the flat piece 0 and the linear piece -x."""
        v = float(x[0])
        g2 = max(0.0, -v)
        grads, patterns = [], []
        if 0.0 >= g2 - delta:
            grads.append(np.array([0.0]))
            patterns.append(SignPattern(np.array([0], dtype=np.int8), 0))
        if -v >= g2 - delta:
            grads.append(np.array([-1.0]))
            patterns.append(SignPattern(np.array([-1], dtype=np.int8), 1))
        return grads, patterns

    def l1_weights(self) -> np.ndarray:
        return np.array([1.0])


def corner_1d_problem() -> CompositeObjective:
    """The builtin 1-d problem 0.5*(x-2)^2 + |x| - max(0, -x).

    Its unique minimizer is x = 1 (F = 1.5); x = 0 is DC-critical but not
    d-stationary, and whether a DC iteration escapes 0 depends on the
    subgradient policy.
    """
    loss = LeastSquaresLoss(DesignMatrix(np.array([[1.0]])), np.array([2.0]))
    return CompositeObjective(loss, PositivePartPenalty())
