"""Machine-checkable certificates for the solution-quality hierarchy.

For F = f + g1 - g2 with g1 = weighted l1 and g2 a pointwise max of linear
pieces gamma_i = <v_i, .>, a point is

* *critical*      when SOME active piece i satisfies
                  0 in grad f(x) + d g1(x) - grad gamma_i(x),
* *d-stationary*  when EVERY active piece satisfies it.

The membership test is coordinate-wise (the l1 subdifferential is separable):
with w the per-coordinate l1 weight and gamma the piece gradient,

    x_j != 0 or w_j == 0:  |grad_j + w_j sign(x_j) - gamma_j| <= tol
    x_j == 0, w_j > 0:     |grad_j - gamma_j| <= w_j + tol

Active pieces are collected with a tie tolerance proportional to the
certificate tolerance (magnitude ties at solver terminals hold only up to
rounding), so "critical" means within-tolerance of a point whose exact active
set certifies, and "d-stationary" additionally covers all nearly-active
pieces.

Limiting-stationarity is certified only through the prox fixed-point residual
``prox_residual`` (a zero residual implies d-stationarity for prox-bounded g);
explicit limiting-subdifferential computation is intractable for general g.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ActiveSetOverflowError
from .penalties import DEFAULT_ACTIVE_SET_CAP, SignPattern

__all__ = [
    "StationarityReport",
    "prox_residual",
    "check_critical",
    "check_d_stationary",
    "classify",
    "classify_blocks",
]


@dataclass
class StationarityReport:
    """Certificate summary for one point (or one block of a two-block point).

    ``critical`` / ``d_stationary`` are None when the active set overflowed
    the pattern cap: the result is indeterminate, never a false negative.
    ``d_stationary`` true implies ``critical`` true.
    """

    prox_residual: float
    critical: bool | None
    d_stationary: bool | None
    tolerance: float
    gradient_scale: float
    active_set_size: int | None
    overflow: bool
    critical_witness: SignPattern | None = None
    worst_pattern: SignPattern | None = None
    worst_residual: float | None = None
    best_residual: float | None = None
    block: str = "x"

    def to_dict(self) -> dict:
        def pat(p):
            return None if p is None else [int(v) for v in p.entries]

        return {
            "block": self.block,
            "prox_residual": self.prox_residual,
            "critical": self.critical,
            "d_stationary": self.d_stationary,
            "tolerance": self.tolerance,
            "gradient_scale": self.gradient_scale,
            "active_set_size": self.active_set_size,
            "overflow": self.overflow,
            "critical_witness": pat(self.critical_witness),
            "worst_pattern": pat(self.worst_pattern),
            "worst_residual": self.worst_residual,
            "best_residual": self.best_residual,
        }


def _pattern_residual(
    grad: np.ndarray, x: np.ndarray, weights: np.ndarray, piece_grad: np.ndarray
) -> float:
    """Coordinate-wise distance of 0 from grad f + w * d|.| - piece gradient."""
    shifted = grad - piece_grad
    nonzero = (x != 0.0) | (weights == 0.0)
    viol = np.where(
        nonzero,
        np.abs(shifted + weights * np.sign(x)),
        np.maximum(np.abs(shifted) - weights, 0.0),
    )
    return float(viol.max()) if viol.size else 0.0


def prox_residual(obj, x: np.ndarray, eta: float) -> float:
    """||x - prox_{g/eta}(x - grad f(x)/eta)|| with the deterministic prox.

    Zero exactly at prox fixed points, which are d-stationary.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    x = np.asarray(x, dtype=np.float64)
    grad = obj.smooth_grad(x)
    return float(np.linalg.norm(x - obj.prox_penalty(x - grad / eta, 1.0 / eta)))


def _tie_delta(x: np.ndarray, tol: float) -> float:
    # Magnitude ties at displacement-converged terminals hold only up to
    # rounding, so the pattern enumeration must tolerate gaps at the
    # certificate's own scale; exact gaps at solver terminals are orders of
    # magnitude larger than this.
    scale = float(np.max(np.abs(x))) if x.size else 0.0
    return tol * (1.0 + scale)


def _pattern_residuals(obj, x, cap, delta):
    grad = obj.smooth_grad(x)
    weights = obj.l1_weights()
    piece_grads, patterns = obj.active_gradients(x, delta, cap)
    residuals = [_pattern_residual(grad, x, weights, g) for g in piece_grads]
    return residuals, patterns


def check_critical(obj, x: np.ndarray, tol: float, cap: int = DEFAULT_ACTIVE_SET_CAP):
    """(is_critical, witnessing pattern); (None, None) on active-set overflow."""
    x = np.asarray(x, dtype=np.float64)
    try:
        residuals, patterns = _pattern_residuals(obj, x, cap, _tie_delta(x, tol))
    except ActiveSetOverflowError:
        return None, None
    best = int(np.argmin(residuals))
    return residuals[best] <= tol, patterns[best]


def check_d_stationary(
    obj, x: np.ndarray, tol: float, cap: int = DEFAULT_ACTIVE_SET_CAP
):
    """(is_d_stationary, worst pattern, worst residual); Nones on overflow."""
    x = np.asarray(x, dtype=np.float64)
    try:
        residuals, patterns = _pattern_residuals(obj, x, cap, _tie_delta(x, tol))
    except ActiveSetOverflowError:
        return None, None, None
    worst = int(np.argmax(residuals))
    return residuals[worst] <= tol, patterns[worst], residuals[worst]


def classify(
    obj,
    x: np.ndarray,
    tol: float = 1e-5,
    cap: int = DEFAULT_ACTIVE_SET_CAP,
    eta: float | None = None,
    block: str = "x",
) -> StationarityReport:
    """Full certificate: prox residual plus both pattern checks in one sweep."""
    x = np.asarray(x, dtype=np.float64)
    grad = obj.smooth_grad(x)
    scale = float(np.linalg.norm(grad))
    if eta is None:
        eta = 1.1 * obj.lipschitz()
    residual = prox_residual(obj, x, eta)
    if not getattr(obj, "is_dc", False):
        return StationarityReport(
            prox_residual=residual,
            critical=None,
            d_stationary=None,
            tolerance=tol,
            gradient_scale=scale,
            active_set_size=None,
            overflow=False,
            block=block,
        )
    try:
        residuals, patterns = _pattern_residuals(obj, x, cap, _tie_delta(x, tol))
    except ActiveSetOverflowError:
        return StationarityReport(
            prox_residual=residual,
            critical=None,
            d_stationary=None,
            tolerance=tol,
            gradient_scale=scale,
            active_set_size=None,
            overflow=True,
            block=block,
        )
    best = int(np.argmin(residuals))
    worst = int(np.argmax(residuals))
    return StationarityReport(
        prox_residual=residual,
        critical=residuals[best] <= tol,
        d_stationary=residuals[worst] <= tol,
        tolerance=tol,
        gradient_scale=scale,
        active_set_size=len(patterns),
        overflow=False,
        critical_witness=patterns[best],
        worst_pattern=patterns[worst],
        worst_residual=residuals[worst],
        best_residual=residuals[best],
        block=block,
    )


class _BlockObjective:
    """Single-block view of a two-block objective with the other block frozen."""

    def __init__(self, obj2, block: str, fixed: np.ndarray):
        self.obj2 = obj2
        self.block = block
        self.fixed = np.asarray(fixed, dtype=np.float64)
        self.penalty = obj2.penalty_x if block == "x" else obj2.penalty_z

    @property
    def is_dc(self) -> bool:
        return getattr(self.penalty, "is_dc", False)

    def smooth_grad(self, v):
        if self.block == "x":
            return self.obj2.grad_x(v, self.fixed)
        return self.obj2.grad_z(self.fixed, v)

    def prox_penalty(self, y, step):
        return self.penalty.prox(y, step)

    def penalty_value(self, v):
        return self.penalty.value(v)

    def lipschitz(self) -> float:
        return self.obj2.lipschitz_x() if self.block == "x" else self.obj2.lipschitz_z()

    def active_gradients(self, v, delta, cap):
        return self.penalty.active_gradients(v, delta, cap)

    def l1_weights(self):
        return self.penalty.l1_weights()


def classify_blocks(
    obj2,
    x: np.ndarray,
    z: np.ndarray,
    tol: float = 1e-5,
    cap: int = DEFAULT_ACTIVE_SET_CAP,
):
    """Block-wise certificates for F(x, z) = f + g(x) + h(z).

    The joint directional derivative separates over the blocks, so joint
    d-stationarity is equivalent to each block being d-stationary with the
    other fixed.  Blocks whose penalty is not DC (e.g. an l0-ball indicator)
    get a prox-residual-only report.
    """
    rx = classify(_BlockObjective(obj2, "x", z), x, tol=tol, cap=cap, block="x")
    rz = classify(_BlockObjective(obj2, "z", x), z, tol=tol, cap=cap, block="z")
    return rx, rz
