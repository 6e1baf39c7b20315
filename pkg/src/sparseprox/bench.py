"""Experiment runner: solver races with CSV reports and convergence plots.

An experiment is described by an :class:`ExperimentConfig` (typically read
from a TOML file by the CLI): a problem, a solver list with per-solver
overrides, and a repetition count.  Every repetition generates or loads one
instance, derives one starting point shared by all solvers, runs each solver,
re-certifies its terminal point with the stationarity module (certificates
are never trusted from the solver), and emits one report row.  Mean rows per
solver with best-in-column flags are appended.

Wall-clock columns are measured around the solver loop only and are the one
part of the output that cannot be byte-reproducible; every other column is
deterministic given the config.
"""

from __future__ import annotations

import io
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import data_io, solvers
from .losses import LeastSquaresLoss, LogisticLoss, RobustLeastSquaresLoss
from .objectives import CompositeObjective, TwoBlockObjective, corner_1d_problem
from .penalties import IndicatorL0Ball, TopKPenalty
from .stationarity import classify, classify_blocks

__all__ = [
    "SolverSpec",
    "ExperimentConfig",
    "ReportRow",
    "run_experiment",
    "emit_csv",
    "emit_plot",
    "CSV_COLUMNS",
]

TWO_BLOCK_SOLVERS = ("palm", "gpalm", "pdcae_proj")

_SOLVER_FUNCS = {
    "pgm": solvers.pgm_solve,
    "gist": solvers.gist_solve,
    "pdca": solvers.pdca_solve,
    "pdcae": solvers.pdcae_solve,
    "nepdca": solvers.nepdca_solve,
    "palm": solvers.palm_solve,
    "gpalm": solvers.gpalm_solve,
    "pdcae_proj": solvers.pdcae_proj_solve,
}


@dataclass
class SolverSpec:
    name: str
    overrides: dict = field(default_factory=dict)


@dataclass
class ExperimentConfig:
    """One benchmark run: a problem, solvers, and repetition protocol.

    ``problem`` keys:

    * kind="synthetic_ls": p, n, k, lam
    * kind="synthetic_robust": p, n, k, kappa, lam1, lam2,
      outlier_magnitude, noise_sd
    * kind="dataset": path, lam, k, add_intercept, loss ("least_squares" or
      "logistic")
    * kind="corner1d"
    """

    problem: dict
    solvers: list
    repetitions: int = 1
    base_seed: int = 0
    stop_tol: float = 1e-8
    time_limit_sec: float = math.inf
    max_iters: int = 100_000
    x0_scale: float | None = None
    certify_tol: float = 1e-5
    output_dir: str | None = None
    plot: bool = True

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if not self.solvers:
            raise ValueError("at least one solver is required")
        self.solvers = [
            s if isinstance(s, SolverSpec) else SolverSpec(**s) for s in self.solvers
        ]
        for spec in self.solvers:
            if spec.name not in _SOLVER_FUNCS:
                raise ValueError(f"unknown solver {spec.name!r}")


@dataclass
class ReportRow:
    kind: str  # "run" | "mean"
    solver: str
    instance_id: str
    seed: int | None
    iterations: float
    wall_time_sec: float
    objective: float
    smooth: float
    ln_objective: float
    l0_x: float
    l0_z: float | None
    status: str
    critical: bool | None
    d_stationary: bool | None
    prox_residual: float | None
    best: str = ""


def _safe_log(v: float) -> float:
    return float(np.log(max(v, 1e-300)))


class _ProblemBundle:
    """Everything one repetition needs: objectives per solver and the start."""

    def __init__(self, instance_id, seed, x0, z0=None, single=None, two_block=None,
                 two_block_proj=None):
        self.instance_id = instance_id
        self.seed = seed
        self.x0 = x0
        self.z0 = z0
        self.single = single
        self.two_block = two_block
        self.two_block_proj = two_block_proj

    def objective_for(self, solver: str):
        if solver in TWO_BLOCK_SOLVERS:
            if solver == "pdcae_proj":
                if self.two_block_proj is None:
                    raise ValueError("problem has no two-block form")
                return self.two_block_proj
            if self.two_block is None:
                raise ValueError("problem has no two-block form")
            return self.two_block
        if self.single is None:
            raise ValueError(f"solver {solver!r} needs a single-block problem")
        return self.single


def _build_bundle(problem: dict, rep: int, cfg: ExperimentConfig, cache: dict) -> _ProblemBundle:
    kind = problem["kind"]
    seed = cfg.base_seed + rep
    if kind == "corner1d":
        obj = cache.setdefault("corner1d", corner_1d_problem())
        x0 = np.array([float(problem.get("x0", 0.0))])
        return _ProblemBundle(f"corner1d-{rep}", seed, x0, single=obj)

    if kind == "synthetic_ls":
        p, n, k, lam = problem["p"], problem["n"], problem["k"], problem["lam"]
        inst = data_io.gen_sparse_ls_instance(p, n, k, lam, seed)
        obj = CompositeObjective(
            LeastSquaresLoss(inst.A, inst.b), TopKPenalty(lam, k, p)
        )
        scale = cfg.x0_scale if cfg.x0_scale is not None else 0.01
        x0 = data_io.perturbed_start(inst, scale, seed=seed)
        return _ProblemBundle(f"{inst.metadata['name']}-s{seed}", seed, x0, single=obj)

    if kind == "synthetic_robust":
        p, n = problem["p"], problem["n"]
        k, kap = problem["k"], problem["kappa"]
        lam1 = problem["lam1"]
        lam2 = problem.get("lam2", lam1)
        inst = data_io.gen_robust_instance(
            p, n, k, kap,
            outlier_magnitude=problem.get("outlier_magnitude", 5.0),
            noise_sd=problem.get("noise_sd", 0.1),
            seed=seed,
        )
        loss = RobustLeastSquaresLoss(inst.A, inst.b)
        two = TwoBlockObjective(loss, TopKPenalty(lam1, k, p), TopKPenalty(lam2, kap, n))
        two_proj = TwoBlockObjective(loss, TopKPenalty(lam1, k, p), IndicatorL0Ball(kap, n))
        scale = cfg.x0_scale if cfg.x0_scale is not None else 0.01
        x0 = data_io.scaled_uniform_start(p, scale, seed=seed)
        z0 = data_io.scaled_uniform_start(n, scale, seed=seed + 10_000_019)
        return _ProblemBundle(
            f"{inst.metadata['name']}-s{seed}", seed, x0, z0=z0,
            two_block=two, two_block_proj=two_proj,
        )

    if kind == "dataset":
        key = ("dataset", problem["path"], bool(problem.get("add_intercept", False)))
        if key not in cache:
            inst = data_io.load_instance(problem["path"])
            excluded: set[int] = set()
            if problem.get("add_intercept", False):
                inst, excluded = data_io.add_intercept(inst)
            cache[key] = (inst, excluded)
        inst, excluded = cache[key]
        lam, k = problem["lam"], problem["k"]
        loss_kind = problem.get("loss", "least_squares")
        if loss_kind == "logistic":
            loss = LogisticLoss(inst.A, inst.b)
        elif loss_kind == "least_squares":
            loss = LeastSquaresLoss(inst.A, inst.b)
        else:
            raise ValueError(f"unknown dataset loss {loss_kind!r}")
        obj = CompositeObjective(loss, TopKPenalty(lam, k, inst.p, tuple(excluded)))
        scale = cfg.x0_scale if cfg.x0_scale is not None else 0.1
        x0 = data_io.scaled_uniform_start(inst.p, scale, seed=seed)
        name = problem.get("name", problem["path"])
        return _ProblemBundle(f"{name}-s{seed}", seed, x0, single=obj)

    raise ValueError(f"unknown problem kind {kind!r}")


def _solver_config(cfg: ExperimentConfig, spec: SolverSpec) -> solvers.SolverConfig:
    overrides = dict(
        stop_tol=cfg.stop_tol,
        time_limit_sec=cfg.time_limit_sec,
        max_iters=cfg.max_iters,
    )
    overrides.update(spec.overrides)
    return solvers.default_config(spec.name, **overrides)


def _certify(bundle: _ProblemBundle, solver: str, result, tol: float):
    if solver in TWO_BLOCK_SOLVERS:
        obj2 = bundle.objective_for(solver)
        rx, rz = classify_blocks(obj2, result.x, result.z, tol=tol)
        critical = None if (rx.critical is None or rz.critical is None) else (
            rx.critical and rz.critical
        )
        if rz.d_stationary is None and not getattr(obj2.penalty_z, "is_dc", False):
            d_stat = rx.d_stationary  # z-block certificate undefined for indicator
        elif rx.d_stationary is None or rz.d_stationary is None:
            d_stat = None
        else:
            d_stat = rx.d_stationary and rz.d_stationary
        return (rx, rz), critical, d_stat, rx.prox_residual + rz.prox_residual
    report = classify(bundle.objective_for(solver), result.x, tol=tol)
    return report, report.critical, report.d_stationary, report.prox_residual


def run_experiment(cfg: ExperimentConfig):
    """Execute the experiment; returns (rows, traces).

    ``rows`` holds one "run" row per (repetition, solver) plus "mean" rows.
    ``traces`` maps solver name to the trace of the first repetition, which
    backs the convergence plot.
    """
    rows: list[ReportRow] = []
    traces: dict[str, solvers.IterateTrace] = {}
    cache: dict = {}
    for rep in range(cfg.repetitions):
        bundle = _build_bundle(cfg.problem, rep, cfg, cache)
        for spec in cfg.solvers:
            run_cfg = _solver_config(cfg, spec)
            fn = _SOLVER_FUNCS[spec.name]
            obj = bundle.objective_for(spec.name)
            t0 = time.perf_counter()
            if spec.name in TWO_BLOCK_SOLVERS:
                result = fn(obj, bundle.x0, bundle.z0, run_cfg)
            else:
                result = fn(obj, bundle.x0, run_cfg)
            wall = time.perf_counter() - t0
            report, critical, d_stat, residual = _certify(
                bundle, spec.name, result, cfg.certify_tol
            )
            result.certificate = report
            F = result.trace.objective[-1]
            rows.append(
                ReportRow(
                    kind="run",
                    solver=spec.name,
                    instance_id=bundle.instance_id,
                    seed=bundle.seed,
                    iterations=result.iterations,
                    wall_time_sec=wall,
                    objective=F,
                    smooth=result.trace.smooth[-1],
                    ln_objective=_safe_log(F),
                    l0_x=int(np.count_nonzero(result.x)),
                    l0_z=(
                        int(np.count_nonzero(result.z)) if result.z is not None else None
                    ),
                    status=result.status,
                    critical=critical,
                    d_stationary=d_stat,
                    prox_residual=residual,
                )
            )
            if rep == 0:
                traces[spec.name] = result.trace
    rows.extend(_mean_rows(rows, [s.name for s in cfg.solvers]))
    return rows, traces


_MEAN_FIELDS = ("iterations", "wall_time_sec", "objective", "smooth", "ln_objective", "l0_x")
_BEST_LOWER = ("iterations", "wall_time_sec", "objective", "ln_objective")


def _mean_rows(run_rows, solver_names):
    means = []
    for name in solver_names:
        group = [r for r in run_rows if r.kind == "run" and r.solver == name]
        if not group:
            continue
        vals = {f: float(np.mean([getattr(r, f) for r in group])) for f in _MEAN_FIELDS}
        l0z = [r.l0_z for r in group if r.l0_z is not None]
        means.append(
            ReportRow(
                kind="mean",
                solver=name,
                instance_id="mean",
                seed=None,
                iterations=vals["iterations"],
                wall_time_sec=vals["wall_time_sec"],
                objective=vals["objective"],
                smooth=vals["smooth"],
                ln_objective=vals["ln_objective"],
                l0_x=vals["l0_x"],
                l0_z=float(np.mean(l0z)) if l0z else None,
                status="",
                critical=None,
                d_stationary=None,
                prox_residual=None,
            )
        )
    # best-in-column flags on the formatted (full-precision) values; ties joint
    for metric in _BEST_LOWER:
        formatted = [repr(getattr(r, metric)) for r in means]
        values = [getattr(r, metric) for r in means]
        if not values:
            continue
        best_val = min(values)
        best_repr = repr(best_val)
        for r, f in zip(means, formatted):
            if f == best_repr:
                r.best = f"{r.best};{metric}" if r.best else metric
    return means


CSV_COLUMNS = (
    "kind", "solver", "instance_id", "seed", "iterations", "wall_time_sec",
    "objective", "smooth", "ln_objective", "l0_x", "l0_z", "status",
    "critical", "d_stationary", "prox_residual", "best",
)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)  # shortest representation that round-trips
    return str(value)


def emit_csv(rows) -> str:
    """Serialize report rows as UTF-8 CSV text with LF line endings."""
    if not rows:
        raise ValueError("no rows to emit")
    out = io.StringIO()
    out.write(",".join(CSV_COLUMNS) + "\n")
    for r in rows:
        out.write(",".join(_cell(getattr(r, c)) for c in CSV_COLUMNS) + "\n")
    return out.getvalue()


_PLOT_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")
_PLOT_EPS = 1e-16


def emit_plot(traces: dict, width: int = 800, height: int = 600) -> str:
    """Log-log SVG plot of objective gap F(x_t) - F_min + eps vs iteration.

    One polyline per solver, deterministic layout, no external dependencies.
    """
    if not traces:
        raise ValueError("no traces to plot")
    series = {}
    f_min = min(min(tr.objective) for tr in traces.values())
    for name, tr in traces.items():
        ys = np.asarray(tr.objective) - f_min + _PLOT_EPS
        xs = np.arange(1, len(ys) + 1, dtype=float)
        series[name] = (np.log10(xs), np.log10(ys))
    x_lo = min(s[0].min() for s in series.values())
    x_hi = max(s[0].max() for s in series.values())
    y_lo = min(s[1].min() for s in series.values())
    y_hi = max(s[1].max() for s in series.values())
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    margin = 60.0
    span_x = width - 2 * margin
    span_y = height - 2 * margin

    def sx(v):
        return margin + (v - x_lo) / (x_hi - x_lo) * span_x

    def sy(v):
        return height - margin - (v - y_lo) / (y_hi - y_lo) * span_y

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{margin}" y="{margin}" width="{span_x}" height="{span_y}" '
        'fill="none" stroke="black" stroke-width="1"/>',
    ]
    for tick in range(math.ceil(x_lo), math.floor(x_hi) + 1):
        px = sx(tick)
        parts.append(
            f'<line x1="{px:.2f}" y1="{margin}" x2="{px:.2f}" y2="{height - margin}" '
            'stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{px:.2f}" y="{height - margin + 20}" font-size="12" '
            f'text-anchor="middle">1e{tick}</text>'
        )
    for tick in range(math.ceil(y_lo), math.floor(y_hi) + 1):
        py = sy(tick)
        parts.append(
            f'<line x1="{margin}" y1="{py:.2f}" x2="{width - margin}" y2="{py:.2f}" '
            'stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{margin - 8}" y="{py + 4:.2f}" font-size="12" '
            f'text-anchor="end">1e{tick}</text>'
        )
    parts.append(
        f'<text x="{width / 2}" y="{height - 12}" font-size="13" '
        'text-anchor="middle">iteration</text>'
    )
    parts.append(
        f'<text x="16" y="{height / 2}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 16 {height / 2})">objective gap</text>'
    )
    for i, name in enumerate(sorted(series)):
        xs, ys = series[name]
        color = _PLOT_COLORS[i % len(_PLOT_COLORS)]
        points = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(xs, ys))
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        ly = margin + 18 + 18 * i
        parts.append(
            f'<line x1="{width - margin - 130}" y1="{ly - 4}" x2="{width - margin - 104}" '
            f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{width - margin - 98}" y="{ly}" font-size="12">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
