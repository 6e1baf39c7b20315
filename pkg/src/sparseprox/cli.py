"""Command-line interface.

Subcommands:

* ``solve``        run one solver on one problem, print the certificate
* ``bench``        run a batch experiment from a TOML config file
* ``gen``          write synthetic instance files (.libsvm + .json sidecar)
* ``certify``      classify a point file against a problem
* ``prox-oracle``  run the brute-force prox / active-set / global oracles

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import bench, data_io, oracles, solvers
from .losses import LeastSquaresLoss, LogisticLoss
from .objectives import CompositeObjective, corner_1d_problem
from .penalties import TopKPenalty, active_set_enumerate, prox_top_k_penalty
from .stationarity import classify

__all__ = ["main", "cli_main"]

CONFIG_SCHEMA = """\
# Experiment config schema (TOML).  Key names are fixed; values shown are
# examples.  Exactly one [problem] table and at least one [[solvers]] entry.

[problem]
kind = "synthetic_ls"      # synthetic_ls | synthetic_robust | dataset | corner1d
p = 1000                   # synthetic_*: dimensions
n = 1000
k = 300                    # sparsity target K
lam = 10.0                 # penalty weight (synthetic_ls, dataset)
# kappa = 2                # synthetic_robust: z-sparsity
# lam1 = 150.0             # synthetic_robust penalties
# lam2 = 150.0
# outlier_magnitude = 5.0  # synthetic_robust
# noise_sd = 0.1
# path = "data.libsvm"     # dataset: input file
# add_intercept = true     # dataset: prepend all-ones column, exclude it
# loss = "least_squares"   # dataset: least_squares | logistic

[run]
repetitions = 30
base_seed = 0
stop_tol = 1e-8
time_limit_sec = 90.0
max_iters = 100000
# x0_scale = 0.01          # start scale (default 0.01 synthetic, 0.1 dataset)
certify_tol = 1e-5

[[solvers]]
name = "gist"
# [solvers.overrides]      # optional SolverConfig field overrides
# window = 4

[[solvers]]
name = "pgm"

[output]
directory = "out"          # where report.csv / convergence.svg are written
plot = true
"""


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="sparseprox", description="Sparse-optimization solver bench")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol", type=float, default=None, help="stopping/certificate tolerance")
        p.add_argument("--time-limit", type=float, default=math.inf)
        p.add_argument("--out", type=str, default=None)

    ps = sub.add_parser("solve", help="run one solver on one problem")
    ps.add_argument("--problem", choices=["corner1d", "synth", "dataset"], required=True)
    ps.add_argument("--solver", choices=sorted(solvers.SOLVER_NAMES), required=True)
    ps.add_argument("--subgrad", choices=["canonical", "extreme_negative", "index_order"],
                    default="canonical")
    ps.add_argument("--x0", type=str, default=None,
                    help="comma-separated start, or 'planted' / 'uniform' for synth")
    ps.add_argument("--x0-scale", type=float, default=None)
    ps.add_argument("--p", type=int, default=100)
    ps.add_argument("--n", type=int, default=100)
    ps.add_argument("--k", type=int, default=10)
    ps.add_argument("--lam", type=float, default=1.0)
    ps.add_argument("--dataset", type=str, default=None)
    ps.add_argument("--intercept", action="store_true")
    ps.add_argument("--loss", choices=["least_squares", "logistic"], default="least_squares")
    ps.add_argument("--max-iters", type=int, default=100_000)
    common(ps)

    pb = sub.add_parser("bench", help="run an experiment from a config file")
    pb.add_argument("--config", type=str)
    pb.add_argument("--print-schema", action="store_true")
    common(pb)

    pg = sub.add_parser("gen", help="write a synthetic instance to files")
    pg.add_argument("--kind", choices=["sparse", "robust"], default="sparse")
    pg.add_argument("--p", type=int, required=True)
    pg.add_argument("--n", type=int, required=True)
    pg.add_argument("--k", type=int, required=True)
    pg.add_argument("--lam", type=float, default=10.0)
    pg.add_argument("--kappa", type=int, default=2)
    pg.add_argument("--outlier-magnitude", type=float, default=5.0)
    pg.add_argument("--noise-sd", type=float, default=0.1)
    common(pg)

    pc = sub.add_parser("certify", help="classify a point against a problem")
    pc.add_argument("--problem", choices=["corner1d", "synth", "dataset"], required=True)
    pc.add_argument("--point", type=str, required=True,
                    help="comma-separated values, a JSON file, or 'planted'")
    pc.add_argument("--p", type=int, default=100)
    pc.add_argument("--n", type=int, default=100)
    pc.add_argument("--k", type=int, default=10)
    pc.add_argument("--lam", type=float, default=1.0)
    pc.add_argument("--dataset", type=str, default=None)
    pc.add_argument("--intercept", action="store_true")
    pc.add_argument("--loss", choices=["least_squares", "logistic"], default="least_squares")
    common(pc)

    po = sub.add_parser("prox-oracle", help="brute-force oracles for test support")
    po.add_argument("--mode", choices=["prox", "active-set", "global-ls"], required=True)
    po.add_argument("--y", type=str, help="comma-separated vector")
    po.add_argument("--tau", type=float, default=1.0)
    po.add_argument("--k", type=int, required=True)
    po.add_argument("--delta", type=float, default=0.0)
    po.add_argument("--p", type=int, default=6)
    po.add_argument("--n", type=int, default=8)
    po.add_argument("--lam", type=float, default=1.0)
    common(po)

    return parser


def _parse_vector(text: str) -> np.ndarray:
    if os.path.exists(text):
        with open(text, "r", encoding="utf-8") as fh:
            return np.asarray(json.load(fh), dtype=np.float64)
    return np.asarray([float(tok) for tok in text.split(",") if tok.strip()],
                      dtype=np.float64)


def _build_problem(args):
    """(objective, default x0, instance or None) for solve/certify."""
    if args.problem == "corner1d":
        return corner_1d_problem(), np.array([0.0]), None
    if args.problem == "synth":
        inst = data_io.gen_sparse_ls_instance(args.p, args.n, args.k, args.lam, args.seed)
        obj = CompositeObjective(
            LeastSquaresLoss(inst.A, inst.b), TopKPenalty(args.lam, args.k, args.p)
        )
        x0 = data_io.perturbed_start(inst, 0.01, seed=args.seed)
        return obj, x0, inst
    if args.dataset is None:
        raise _UsageError("--dataset is required for dataset problems")
    inst = data_io.load_instance(args.dataset)
    excluded: set[int] = set()
    if args.intercept:
        inst, excluded = data_io.add_intercept(inst)
    loss = (
        LogisticLoss(inst.A, inst.b) if args.loss == "logistic"
        else LeastSquaresLoss(inst.A, inst.b)
    )
    obj = CompositeObjective(loss, TopKPenalty(args.lam, args.k, inst.p, tuple(excluded)))
    x0 = data_io.scaled_uniform_start(inst.p, 0.1, seed=args.seed)
    return obj, x0, inst


def _write_or_print(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        print(text, end="" if text.endswith("\n") else "\n")


def _cmd_solve(args) -> int:
    obj, x0, inst = _build_problem(args)
    if args.x0 is not None:
        if args.x0 == "planted":
            x0 = inst.planted.copy()
        elif args.x0 == "uniform":
            x0 = data_io.scaled_uniform_start(
                obj.dim, args.x0_scale or 0.1, seed=args.seed
            )
        else:
            x0 = _parse_vector(args.x0)
            if x0.shape != (obj.dim,):
                x0 = np.full(obj.dim, x0[0]) if len(x0) == 1 else x0
    cfg = solvers.default_config(
        args.solver,
        stop_tol=args.tol if args.tol is not None else 1e-8,
        max_iters=args.max_iters,
        time_limit_sec=args.time_limit,
        subgradient_policy=args.subgrad,
    )
    fn = bench._SOLVER_FUNCS[args.solver]
    result = fn(obj, x0, cfg)
    report = classify(obj, result.x, tol=1e-5)
    payload = {
        "solver": args.solver,
        "status": result.status,
        "iterations": result.iterations,
        "objective": result.trace.objective[-1],
        "l0": int(np.count_nonzero(result.x)),
        "x": [float(v) for v in result.x] if obj.dim <= 20 else None,
        "certificate": report.to_dict(),
    }
    _write_or_print(json.dumps(payload, indent=2) + "\n", args.out)
    return 0


def _load_experiment_config(path: str) -> bench.ExperimentConfig:
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    run = raw.get("run", {})
    output = raw.get("output", {})
    solver_specs = [
        bench.SolverSpec(name=entry["name"], overrides=entry.get("overrides", {}))
        for entry in raw.get("solvers", [])
    ]
    return bench.ExperimentConfig(
        problem=raw["problem"],
        solvers=solver_specs,
        repetitions=run.get("repetitions", 1),
        base_seed=run.get("base_seed", 0),
        stop_tol=run.get("stop_tol", 1e-8),
        time_limit_sec=run.get("time_limit_sec", math.inf),
        max_iters=run.get("max_iters", 100_000),
        x0_scale=run.get("x0_scale"),
        certify_tol=run.get("certify_tol", 1e-5),
        output_dir=output.get("directory"),
        plot=output.get("plot", True),
    )


def _cmd_bench(args) -> int:
    if args.print_schema:
        print(CONFIG_SCHEMA, end="")
        return 0
    if not args.config:
        raise _UsageError("bench requires --config FILE (or --print-schema)")
    if not os.path.exists(args.config):
        raise _UsageError(f"config file not found: {args.config}")
    cfg = _load_experiment_config(args.config)
    if args.out:
        cfg.output_dir = args.out
    rows, traces = bench.run_experiment(cfg)
    csv_text = bench.emit_csv(rows)
    out_dir = cfg.output_dir or "."
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "report.csv")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text)
    written = [csv_path]
    if cfg.plot:
        svg_path = os.path.join(out_dir, "convergence.svg")
        with open(svg_path, "w", encoding="utf-8") as fh:
            fh.write(bench.emit_plot(traces))
        written.append(svg_path)
    for r in rows:
        if r.kind == "mean":
            print(
                f"{r.solver:12s} iters={r.iterations:10.1f} time={r.wall_time_sec:8.3f}s "
                f"lnF={r.ln_objective:10.5f} l0={r.l0_x:8.1f} best={r.best}"
            )
    print("wrote " + ", ".join(written))
    return 0


def _cmd_gen(args) -> int:
    out = args.out or f"instance-{args.kind}-p{args.p}-n{args.n}-k{args.k}-s{args.seed}"
    if args.kind == "sparse":
        inst = data_io.gen_sparse_ls_instance(args.p, args.n, args.k, args.lam, args.seed)
    else:
        ri = data_io.gen_robust_instance(
            args.p, args.n, args.k, args.kappa,
            outlier_magnitude=args.outlier_magnitude,
            noise_sd=args.noise_sd, seed=args.seed,
        )
        meta = dict(ri.metadata)
        meta.update(
            seed=ri.seed, noise_sd=ri.noise_sd,
            true_x=[float(v) for v in ri.true_x],
            outlier_indices=[int(i) for i in ri.outlier_indices],
        )
        inst = data_io.Instance(A=ri.A, b=ri.b, metadata=meta)
    data_path, meta_path = data_io.save_instance(inst, out)
    print(f"wrote {data_path}, {meta_path}")
    return 0


def _cmd_certify(args) -> int:
    obj, _, inst = _build_problem(args)
    if args.point == "planted":
        if inst is None or inst.planted is None:
            raise _UsageError("'planted' requires a synthetic problem")
        point = inst.planted
    else:
        point = _parse_vector(args.point)
    tol = args.tol if args.tol is not None else 1e-5
    report = classify(obj, point, tol=tol)
    _write_or_print(json.dumps(report.to_dict(), indent=2) + "\n", args.out)
    return 0


def _cmd_prox_oracle(args) -> int:
    if args.mode in ("prox", "active-set"):
        if not args.y:
            raise _UsageError(f"--y is required for mode {args.mode}")
        y = _parse_vector(args.y)
    if args.mode == "prox":
        fast = prox_top_k_penalty(y, args.tau, args.k)
        brute_x, brute_obj = oracles.prox_top_k_brute(y, args.tau, args.k)
        fast_obj = args.tau * oracles.t_k_reference(fast, args.k) + 0.5 * float(
            np.sum((fast - y) ** 2)
        )
        payload = {
            "fast": [float(v) for v in fast],
            "fast_objective": fast_obj,
            "brute": [float(v) for v in brute_x],
            "brute_objective": brute_obj,
            "agree": bool(abs(fast_obj - brute_obj) <= 1e-12),
        }
    elif args.mode == "active-set":
        patterns = active_set_enumerate(y, args.k, delta=args.delta)
        brute = oracles.active_patterns_brute(y, args.k, delta=args.delta)
        payload = {
            "count": len(patterns),
            "patterns": [[int(v) for v in p.entries] for p in patterns],
            "brute_count": len(brute),
            "agree": {tuple(int(v) for v in p.entries) for p in patterns} == brute,
        }
    else:  # global-ls
        inst = data_io.gen_sparse_ls_instance(args.p, args.n, args.k, args.lam, args.seed)
        value, x, support = oracles.ls_support_global_min(
            inst.A.to_dense(), inst.b, args.k
        )
        payload = {
            "objective": value,
            "support": [int(j) for j in support],
            "x_nonzero": {int(j): float(x[j]) for j in support},
        }
    _write_or_print(json.dumps(payload, indent=2) + "\n", args.out)
    return 0


_COMMANDS = {
    "solve": _cmd_solve,
    "bench": _cmd_bench,
    "gen": _cmd_gen,
    "certify": _cmd_certify,
    "prox-oracle": _cmd_prox_oracle,
}


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # surfaced with exit code 2 per the CLI contract
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
