"""Iterative solvers: proximal-gradient family and proximal-DC family.

Single block (F = f + g):

* ``pgm_solve``     fixed step eta = 1.1 * L
* ``gist_solve``    BB step initialization + nonmonotone backtracking
* ``pdca_solve``    DC linearization step with fixed 1/L step
* ``pdcae_solve``   DC step with extrapolation
* ``nepdca_solve``  DC step certified against every active piece per iteration

Two blocks (F = f + g + h):

* ``palm_solve``        alternating prox-gradient, fixed per-block steps
* ``gpalm_solve``       alternating steps with per-block BB + nonmonotone search
* ``pdcae_proj_solve``  extrapolated DC steps on x, exact l0-projection on z

All solvers are deterministic: identical (objective, x0, config) reproduce the
iterate sequence bit for bit.  Wall-clock entries in the trace are the only
non-reproducible fields.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import ActiveSetOverflowError, DivergenceError, LineSearchError

__all__ = [
    "SolverConfig",
    "IterateTrace",
    "SolverResult",
    "default_config",
    "pgm_solve",
    "gist_solve",
    "pdca_solve",
    "pdcae_solve",
    "nepdca_solve",
    "palm_solve",
    "gpalm_solve",
    "pdcae_proj_solve",
    "SOLVER_NAMES",
]

STATUS_CONVERGED = "converged"
STATUS_ITER_LIMIT = "iter_limit"
STATUS_TIME_LIMIT = "time_limit"
STATUS_ACTIVE_SET_OVERFLOW = "active_set_overflow"


@dataclass
class SolverConfig:
    """Run parameters shared by all solvers; unused fields are ignored.

    ``stop_tol`` applies to the iterate displacement (sum of block
    displacements for two-block solvers); a negative value disables the
    displacement stop entirely.  ``seed`` is reserved for randomized variants
    and is unused by the deterministic solvers here.
    """

    max_iters: int = 10_000
    time_limit_sec: float = math.inf
    stop_tol: float = 1e-8
    eta_min: float = 1e-8
    eta_max: float = 1e8
    eta0: float = 1.0
    sigma: float = 1e-3
    sigma_z: float = 1e-3
    rho: float = 2.0
    rho_z: float = 2.0
    window: int = 4
    fixed_step_factor: float = 1.1
    delta: float = 1e-6
    c: float | None = None
    subgradient_policy: str = "canonical"
    beta_mode: str = "nesterov"
    beta_restart_period: int = 200
    active_set_cap: int = 100_000
    max_backtracks: int = 200
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.eta_min < self.eta_max:
            raise ValueError("need 0 < eta_min < eta_max")
        if not self.rho > 1 or not self.rho_z > 1:
            raise ValueError("backtracking factors must exceed 1")
        if not 0 < self.sigma < 1 or not 0 < self.sigma_z < 1:
            raise ValueError("sufficient-decrease constants must lie in (0, 1)")
        if self.window < 1:
            raise ValueError("nonmonotone window must be >= 1")


_DEFAULTS = {
    "pgm": {},
    "gist": {"window": 4, "sigma": 1e-3, "eta0": 1.0, "rho": 2.0},
    "pdca": {},
    "pdcae": {},
    "nepdca": {"window": 5, "delta": 1e-6, "rho": 2.0},
    "palm": {},
    "gpalm": {"window": 6, "sigma": 1e-3, "sigma_z": 1e-3, "rho": 2.0, "rho_z": 2.0},
    "pdcae_proj": {},
}

SOLVER_NAMES = tuple(_DEFAULTS)


def default_config(solver: str, **overrides) -> SolverConfig:
    """Per-solver default configuration with optional field overrides."""
    if solver not in _DEFAULTS:
        raise ValueError(f"unknown solver {solver!r}")
    kwargs = dict(_DEFAULTS[solver])
    kwargs.update(overrides)
    return SolverConfig(**kwargs)


class IterateTrace:
    """Per-iteration history.

    Row 0 describes the starting point; row t >= 1 describes iteration t.
    ``eta_z`` and ``active_set_size`` are NaN where they do not apply.
    """

    def __init__(self):
        self.t: list[int] = []
        self.objective: list[float] = []
        self.smooth: list[float] = []
        self.penalty: list[float] = []
        self.step_norm: list[float] = []
        self.eta: list[float] = []
        self.eta_z: list[float] = []
        self.backtracks: list[int] = []
        self.active_set_size: list[float] = []
        self.time_sec: list[float] = []

    def append(
        self,
        t: int,
        objective: float,
        smooth: float,
        step_norm: float = math.nan,
        eta: float = math.nan,
        eta_z: float = math.nan,
        backtracks: int = 0,
        active_set_size: float = math.nan,
        time_sec: float = 0.0,
    ):
        self.t.append(t)
        self.objective.append(objective)
        self.smooth.append(smooth)
        self.penalty.append(objective - smooth)
        self.step_norm.append(step_norm)
        self.eta.append(eta)
        self.eta_z.append(eta_z)
        self.backtracks.append(backtracks)
        self.active_set_size.append(active_set_size)
        self.time_sec.append(time_sec)

    def __len__(self) -> int:
        return len(self.t)

    def objective_array(self) -> np.ndarray:
        return np.asarray(self.objective)

    def step_norm_array(self) -> np.ndarray:
        return np.asarray(self.step_norm)

    def eta_array(self) -> np.ndarray:
        return np.asarray(self.eta)

    def math_fields(self) -> dict:
        """Everything except wall time, for determinism comparisons."""
        return {
            "t": list(self.t),
            "objective": list(self.objective),
            "smooth": list(self.smooth),
            "step_norm": list(self.step_norm),
            "eta": list(self.eta),
            "eta_z": list(self.eta_z),
            "backtracks": list(self.backtracks),
            "active_set_size": list(self.active_set_size),
        }


@dataclass
class SolverResult:
    x: np.ndarray
    status: str
    trace: IterateTrace
    z: np.ndarray | None = None
    certificate: object = None  # filled by callers from the stationarity module

    @property
    def iterations(self) -> int:
        return self.trace.t[-1] if self.trace.t else 0

    @property
    def objective(self) -> float:
        return self.trace.objective[-1]


def _check_finite(F: float, solver: str) -> None:
    if not math.isfinite(F):
        raise DivergenceError(f"{solver} produced a non-finite objective value")


def _bb_ratio(s: np.ndarray, y: np.ndarray, cfg: SolverConfig, fallback: float) -> float:
    """Secant step parameter <s, y> / ||s||^2 clipped to [eta_min, eta_max]."""
    denom = float(s @ s)
    if denom == 0.0:
        return fallback
    ratio = float(s @ y) / denom
    if not math.isfinite(ratio):
        return fallback
    return min(cfg.eta_max, max(cfg.eta_min, ratio))


def pgm_solve(obj, x0: np.ndarray, cfg: SolverConfig) -> SolverResult:
    """Proximal gradient with the fixed step parameter eta = factor * L.

    With factor > 1 every iteration enjoys the sufficient decrease
    F(x+) <= F(x) - ((eta - L)/2) ||x+ - x||^2, so F is monotone.
    """
    start = time.perf_counter()
    L = obj.lipschitz()
    eta = cfg.fixed_step_factor * L
    x = np.asarray(x0, dtype=np.float64).copy()
    fval, grad = obj.smooth_value_grad(x)
    F = fval + obj.penalty_value(x)
    _check_finite(F, "pgm")
    trace = IterateTrace()
    trace.append(0, F, fval, eta=eta, time_sec=time.perf_counter() - start)
    status = STATUS_ITER_LIMIT
    for t in range(1, cfg.max_iters + 1):
        if time.perf_counter() - start > cfg.time_limit_sec:
            status = STATUS_TIME_LIMIT
            break
        x_new = obj.prox_penalty(x - grad / eta, 1.0 / eta)
        f_new, grad_new = obj.smooth_value_grad(x_new)
        F_new = f_new + obj.penalty_value(x_new)
        _check_finite(F_new, "pgm")
        step = float(np.linalg.norm(x_new - x))
        x, grad, F = x_new, grad_new, F_new
        trace.append(t, F_new, f_new, step, eta, time_sec=time.perf_counter() - start)
        if step <= cfg.stop_tol:
            status = STATUS_CONVERGED
            break
    return SolverResult(x=x, status=status, trace=trace)


def gist_solve(obj, x0: np.ndarray, cfg: SolverConfig) -> SolverResult:
    """Prox-gradient with BB initialization and nonmonotone backtracking.

    The trial step is accepted once
    F(x+) <= max of the last ``window`` objective values
             - (sigma * eta / 2) ||x+ - x||^2,
    multiplying eta by rho after each failed trial.
    """
    start = time.perf_counter()
    x = np.asarray(x0, dtype=np.float64).copy()
    fval, grad = obj.smooth_value_grad(x)
    F = fval + obj.penalty_value(x)
    _check_finite(F, "gist")
    trace = IterateTrace()
    trace.append(0, F, fval, time_sec=time.perf_counter() - start)
    f_hist = [F]
    x_prev = None
    grad_prev = None
    eta_accepted = cfg.eta0
    status = STATUS_ITER_LIMIT
    for t in range(1, cfg.max_iters + 1):
        if time.perf_counter() - start > cfg.time_limit_sec:
            status = STATUS_TIME_LIMIT
            break
        if x_prev is None:
            eta = cfg.eta0
        else:
            eta = _bb_ratio(x - x_prev, grad - grad_prev, cfg, eta_accepted)
        f_window = max(f_hist[-cfg.window:])
        backtracks = 0
        while True:
            x_new = obj.prox_penalty(x - grad / eta, 1.0 / eta)
            f_new = obj.smooth_value(x_new)
            F_new = f_new + obj.penalty_value(x_new)
            step_sq = float(np.sum((x_new - x) ** 2))
            if F_new <= f_window - 0.5 * cfg.sigma * eta * step_sq:
                break
            backtracks += 1
            if backtracks > cfg.max_backtracks:
                raise LineSearchError(
                    f"gist backtracking exceeded {cfg.max_backtracks} trials"
                )
            eta *= cfg.rho
        _check_finite(F_new, "gist")
        x_prev, grad_prev = x, grad
        x = x_new
        grad = obj.smooth_grad(x)
        F = F_new
        eta_accepted = eta
        f_hist.append(F)
        step = math.sqrt(step_sq)
        trace.append(
            t, F, f_new, step, eta, backtracks=backtracks,
            time_sec=time.perf_counter() - start,
        )
        if step <= cfg.stop_tol:
            status = STATUS_CONVERGED
            break
    return SolverResult(x=x, status=status, trace=trace)


def pdca_solve(obj, x0: np.ndarray, cfg: SolverConfig) -> SolverResult:
    """Proximal DC: linearize g2 via a subgradient, prox of g1 with step 1/L.

    Which subgradient is taken at nondifferentiable points
    (``cfg.subgradient_policy``) materially changes the trajectory; the
    extreme choice can stall at critical points that are not d-stationary.
    """
    start = time.perf_counter()
    L = obj.lipschitz()
    x = np.asarray(x0, dtype=np.float64).copy()
    fval, grad = obj.smooth_value_grad(x)
    F = fval + obj.penalty_value(x)
    _check_finite(F, "pdca")
    trace = IterateTrace()
    trace.append(0, F, fval, eta=L, time_sec=time.perf_counter() - start)
    status = STATUS_ITER_LIMIT
    for t in range(1, cfg.max_iters + 1):
        if time.perf_counter() - start > cfg.time_limit_sec:
            status = STATUS_TIME_LIMIT
            break
        xi = obj.concave_subgradient(x, cfg.subgradient_policy)
        x_new = obj.convex_prox(x - (grad - xi) / L, 1.0 / L)
        f_new, grad_new = obj.smooth_value_grad(x_new)
        F_new = f_new + obj.penalty_value(x_new)
        _check_finite(F_new, "pdca")
        step = float(np.linalg.norm(x_new - x))
        x, grad, F = x_new, grad_new, F_new
        trace.append(t, F, f_new, step, L, time_sec=time.perf_counter() - start)
        if step <= cfg.stop_tol:
            status = STATUS_CONVERGED
            break
    return SolverResult(x=x, status=status, trace=trace)


class _BetaSchedule:
    """Accelerated-gradient extrapolation weights with fixed-period restart.

    theta_0 = theta_{-1} = 1, theta_{t+1} = (1 + sqrt(1 + 4 theta_t^2)) / 2,
    beta_t = (theta_{t-1} - 1) / theta_t.  The schedule restarts (beta drops
    to 0) every ``period`` iterations and whenever the objective increases,
    which keeps sup beta_t < 1.
    """

    def __init__(self, mode: str, period: int):
        if mode not in ("nesterov", "zero"):
            raise ValueError(f"unknown beta_mode {mode!r}")
        self.mode = mode
        self.period = period
        self.theta_prev = 1.0
        self.theta = 1.0
        self.count = 0

    def beta(self) -> float:
        if self.mode == "zero":
            return 0.0
        return (self.theta_prev - 1.0) / self.theta

    def advance(self, objective_increased: bool):
        self.count += 1
        if self.mode == "zero":
            return
        if objective_increased or self.count % self.period == 0:
            self.theta_prev = 1.0
            self.theta = 1.0
        else:
            self.theta_prev, self.theta = (
                self.theta,
                0.5 * (1.0 + math.sqrt(1.0 + 4.0 * self.theta**2)),
            )


def pdcae_solve(obj, x0: np.ndarray, cfg: SolverConfig) -> SolverResult:
    """Proximal DC with extrapolation: y = x + beta (x - x_prev), then a DC step.

    The subgradient of g2 is taken at x (not at the extrapolated point).
    """
    start = time.perf_counter()
    L = obj.lipschitz()
    x = np.asarray(x0, dtype=np.float64).copy()
    x_prev = x.copy()
    F = obj.value(x)
    _check_finite(F, "pdcae")
    trace = IterateTrace()
    trace.append(0, F, obj.smooth_value(x), eta=L, time_sec=time.perf_counter() - start)
    schedule = _BetaSchedule(cfg.beta_mode, cfg.beta_restart_period)
    status = STATUS_ITER_LIMIT
    for t in range(1, cfg.max_iters + 1):
        if time.perf_counter() - start > cfg.time_limit_sec:
            status = STATUS_TIME_LIMIT
            break
        beta = schedule.beta()
        y = x + beta * (x - x_prev)
        xi = obj.concave_subgradient(x, cfg.subgradient_policy)
        grad_y = obj.smooth_grad(y)
        x_new = obj.convex_prox(y - (grad_y - xi) / L, 1.0 / L)
        f_new = obj.smooth_value(x_new)
        F_new = f_new + obj.penalty_value(x_new)
        _check_finite(F_new, "pdcae")
        schedule.advance(objective_increased=F_new > F)
        step = float(np.linalg.norm(x_new - x))
        x_prev, x, F = x, x_new, F_new
        trace.append(t, F, f_new, step, L, time_sec=time.perf_counter() - start)
        if step <= cfg.stop_tol:
            status = STATUS_CONVERGED
            break
    return SolverResult(x=x, status=status, trace=trace)


def nepdca_solve(obj, x0: np.ndarray, cfg: SolverConfig) -> SolverResult:
    """Nonmonotone enhanced DC iteration certifying all active pieces.

    Per iteration the relaxed active set A_delta(x) is enumerated; one prox
    candidate is computed per piece and the best (by F + (c/2) ||. - x||^2)
    must pass the per-piece acceptance inequality before being taken,
    otherwise eta is multiplied by rho and all candidates are recomputed.
    Active-set overflow ends the run with the last accepted iterate.
    """
    start = time.perf_counter()
    L = obj.lipschitz()
    c = cfg.c if cfg.c is not None else 0.49 * min(L, 1.0)
    if not 0.0 < c < 0.5 * L:
        raise ValueError(f"nepdca constant c must lie in (0, L/2) = (0, {0.5 * L})")
    x = np.asarray(x0, dtype=np.float64).copy()
    fval, grad = obj.smooth_value_grad(x)
    F = fval + obj.penalty_value(x)
    _check_finite(F, "nepdca")
    trace = IterateTrace()
    trace.append(0, F, fval, time_sec=time.perf_counter() - start)
    f_hist = [F]
    x_prev = None
    grad_prev = None
    eta_accepted = cfg.eta0
    status = STATUS_ITER_LIMIT
    for t in range(1, cfg.max_iters + 1):
        if time.perf_counter() - start > cfg.time_limit_sec:
            status = STATUS_TIME_LIMIT
            break
        try:
            piece_grads, _ = obj.active_gradients(x, cfg.delta, cfg.active_set_cap)
        except ActiveSetOverflowError:
            status = STATUS_ACTIVE_SET_OVERFLOW
            break
        gamma_vals = [float(g @ x) for g in piece_grads]
        g1_x = obj.convex_value(x)
        # window covers F(x_{t-1-r}) ... F(x_{t-1}) of the accepted iterates
        f_window = max(f_hist[-(cfg.window + 1):])
        if x_prev is None:
            eta = cfg.eta0
        else:
            eta = _bb_ratio(x - x_prev, grad - grad_prev, cfg, eta_accepted)
        backtracks = 0
        while True:
            candidates = [
                obj.convex_prox(x - (grad - g) / eta, 1.0 / eta) for g in piece_grads
            ]
            objectives = [obj.value(cand) for cand in candidates]
            steps_sq = [float(np.sum((cand - x) ** 2)) for cand in candidates]
            scored = [Fi + 0.5 * c * d2 for Fi, d2 in zip(objectives, steps_sq)]
            best = int(np.argmin(scored))
            F_best = objectives[best]
            d2_best = steps_sq[best]
            accepted = all(
                F_best
                <= max(fval + g1_x - gamma_vals[i], f_window)
                - 0.5 * c * d2_best
                - 0.5 * c * steps_sq[i]
                for i in range(len(piece_grads))
            )
            if accepted:
                break
            backtracks += 1
            if backtracks > cfg.max_backtracks:
                raise LineSearchError(
                    f"nepdca backtracking exceeded {cfg.max_backtracks} trials"
                )
            eta *= cfg.rho
        x_new = candidates[best]
        _check_finite(F_best, "nepdca")
        x_prev, grad_prev = x, grad
        x = x_new
        fval, grad = obj.smooth_value_grad(x)
        F = F_best
        eta_accepted = eta
        f_hist.append(F)
        step = math.sqrt(d2_best)
        trace.append(
            t, F, fval, step, eta, backtracks=backtracks,
            active_set_size=float(len(piece_grads)),
            time_sec=time.perf_counter() - start,
        )
        if step <= cfg.stop_tol:
            status = STATUS_CONVERGED
            break
    return SolverResult(x=x, status=status, trace=trace)


def palm_solve(obj2, x0: np.ndarray, z0: np.ndarray, cfg: SolverConfig) -> SolverResult:
    """Alternating prox-gradient with fixed per-block steps factor * L_block."""
    start = time.perf_counter()
    eta_x = cfg.fixed_step_factor * obj2.lipschitz_x()
    eta_z = cfg.fixed_step_factor * obj2.lipschitz_z()
    x = np.asarray(x0, dtype=np.float64).copy()
    z = np.asarray(z0, dtype=np.float64).copy()
    F = obj2.value(x, z)
    _check_finite(F, "palm")
    trace = IterateTrace()
    trace.append(
        0, F, obj2.smooth_value(x, z), eta=eta_x, eta_z=eta_z,
        time_sec=time.perf_counter() - start,
    )
    status = STATUS_ITER_LIMIT
    for t in range(1, cfg.max_iters + 1):
        if time.perf_counter() - start > cfg.time_limit_sec:
            status = STATUS_TIME_LIMIT
            break
        x_new = obj2.prox_x(x - obj2.grad_x(x, z) / eta_x, 1.0 / eta_x)
        z_new = obj2.prox_z(z - obj2.grad_z(x_new, z) / eta_z, 1.0 / eta_z)
        f_new = obj2.smooth_value(x_new, z_new)
        F_new = f_new + obj2.penalty_x.value(x_new) + obj2.penalty_z.value(z_new)
        _check_finite(F_new, "palm")
        step = float(np.linalg.norm(x_new - x) + np.linalg.norm(z_new - z))
        x, z, F = x_new, z_new, F_new
        trace.append(
            t, F, f_new, step, eta_x, eta_z=eta_z,
            time_sec=time.perf_counter() - start,
        )
        if step <= cfg.stop_tol:
            status = STATUS_CONVERGED
            break
    return SolverResult(x=x, z=z, status=status, trace=trace)


def gpalm_solve(obj2, x0: np.ndarray, z0: np.ndarray, cfg: SolverConfig) -> SolverResult:
    """Alternating prox-gradient with per-block BB steps and nonmonotone search.

    Both block steps are scaled up together (rho, rho_z) until
    F(x+, z+) <= max of last ``window`` objectives
                 - (sigma eta_x / 2) ||dx||^2 - (sigma_z eta_z / 2) ||dz||^2,
    then the accepted displacement seeds per-block secant ratios for the next
    outer iteration.
    """
    start = time.perf_counter()
    x = np.asarray(x0, dtype=np.float64).copy()
    z = np.asarray(z0, dtype=np.float64).copy()
    F = obj2.value(x, z)
    _check_finite(F, "gpalm")
    trace = IterateTrace()
    trace.append(0, F, obj2.smooth_value(x, z), time_sec=time.perf_counter() - start)
    f_hist = [F]
    eta_x = cfg.eta0
    eta_z = cfg.eta0
    status = STATUS_ITER_LIMIT
    for t in range(1, cfg.max_iters + 1):
        if time.perf_counter() - start > cfg.time_limit_sec:
            status = STATUS_TIME_LIMIT
            break
        f_window = max(f_hist[-cfg.window:])
        gx = obj2.grad_x(x, z)
        backtracks = 0
        while True:
            x_new = obj2.prox_x(x - gx / eta_x, 1.0 / eta_x)
            gz_mid = obj2.grad_z(x_new, z)
            z_new = obj2.prox_z(z - gz_mid / eta_z, 1.0 / eta_z)
            f_new = obj2.smooth_value(x_new, z_new)
            F_new = f_new + obj2.penalty_x.value(x_new) + obj2.penalty_z.value(z_new)
            dx_sq = float(np.sum((x_new - x) ** 2))
            dz_sq = float(np.sum((z_new - z) ** 2))
            if F_new <= f_window - 0.5 * cfg.sigma * eta_x * dx_sq - 0.5 * cfg.sigma_z * eta_z * dz_sq:
                break
            backtracks += 1
            if backtracks > cfg.max_backtracks:
                raise LineSearchError(
                    f"gpalm backtracking exceeded {cfg.max_backtracks} trials"
                )
            eta_x *= cfg.rho
            eta_z *= cfg.rho_z
        _check_finite(F_new, "gpalm")
        gx_new = obj2.grad_x(x_new, z_new)
        gz_new = obj2.grad_z(x_new, z_new)
        eta_x_accepted, eta_z_accepted = eta_x, eta_z
        eta_x = _bb_ratio(x_new - x, gx_new - gx, cfg, eta_x_accepted)
        eta_z = _bb_ratio(z_new - z, gz_new - gz_mid, cfg, eta_z_accepted)
        step = math.sqrt(dx_sq) + math.sqrt(dz_sq)
        x, z, F = x_new, z_new, F_new
        f_hist.append(F)
        trace.append(
            t, F, f_new, step, eta_x_accepted, eta_z=eta_z_accepted,
            backtracks=backtracks, time_sec=time.perf_counter() - start,
        )
        if step <= cfg.stop_tol:
            status = STATUS_CONVERGED
            break
    return SolverResult(x=x, z=z, status=status, trace=trace)


def pdcae_proj_solve(obj2, x0: np.ndarray, z0: np.ndarray, cfg: SolverConfig) -> SolverResult:
    """Alternating scheme: extrapolated DC step on x, exact z-minimization.

    Requires a DC x-penalty and an l0-ball z-penalty; for the robust
    least-squares loss the z-update is the l0-ball projection of Ax - b.
    """
    if not getattr(obj2.penalty_x, "is_dc", False):
        raise TypeError("pdcae_proj requires a DC x-penalty")
    start = time.perf_counter()
    L_x = obj2.lipschitz_x()
    x = np.asarray(x0, dtype=np.float64).copy()
    x_prev = x.copy()
    # the z-iterate must live on the l0 ball; project the start if needed
    z = obj2.prox_z(np.asarray(z0, dtype=np.float64), 1.0)
    F = obj2.value(x, z)
    _check_finite(F, "pdcae_proj")
    trace = IterateTrace()
    trace.append(
        0, F, obj2.smooth_value(x, z), eta=L_x, time_sec=time.perf_counter() - start
    )
    schedule = _BetaSchedule(cfg.beta_mode, cfg.beta_restart_period)
    status = STATUS_ITER_LIMIT
    for t in range(1, cfg.max_iters + 1):
        if time.perf_counter() - start > cfg.time_limit_sec:
            status = STATUS_TIME_LIMIT
            break
        beta = schedule.beta()
        y = x + beta * (x - x_prev)
        xi = obj2.penalty_x.concave_subgradient(x, cfg.subgradient_policy)
        grad_y = obj2.grad_x(y, z)
        x_new = obj2.penalty_x.convex_prox(y - (grad_y - xi) / L_x, 1.0 / L_x)
        z_new = obj2.prox_z(obj2.loss.fit_residual(x_new), 1.0)
        f_new = obj2.smooth_value(x_new, z_new)
        F_new = f_new + obj2.penalty_x.value(x_new) + obj2.penalty_z.value(z_new)
        _check_finite(F_new, "pdcae_proj")
        schedule.advance(objective_increased=F_new > F)
        step = float(np.linalg.norm(x_new - x) + np.linalg.norm(z_new - z))
        x_prev, x, z, F = x, x_new, z_new, F_new
        trace.append(
            t, F, f_new, step, L_x, time_sec=time.perf_counter() - start
        )
        if step <= cfg.stop_tol:
            status = STATUS_CONVERGED
            break
    return SolverResult(x=x, z=z, status=status, trace=trace)
