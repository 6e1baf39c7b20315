"""Instance ingestion and synthetic generation.

LIBSVM text format: one sample per line, ``label idx:val idx:val ...`` with
1-based strictly increasing indices (converted to 0-based internally), blank
lines skipped and ``#`` starting a comment.  Instances round-trip through
``serialize_libsvm`` exactly up to shortest-repr float formatting.

The sparse-regression generator plants a point that is DC-critical but not
d-stationary and certifies it against the stationarity module before
returning; the construction is validated by the certificates, not assumed.
All randomness flows through the counter-based Philox generator, so a seed
pins an instance bit for bit across platforms.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .design import DesignMatrix
from .errors import GenerationError, InvalidDataError, ParseError
from .losses import LeastSquaresLoss
from .objectives import CompositeObjective
from .penalties import TopKPenalty
from .stationarity import classify

__all__ = [
    "Instance",
    "RobustInstance",
    "parse_libsvm",
    "serialize_libsvm",
    "load_instance",
    "save_instance",
    "add_intercept",
    "gen_sparse_ls_instance",
    "gen_robust_instance",
    "perturbed_start",
    "scaled_uniform_start",
]


@dataclass
class Instance:
    """A design matrix with its response and provenance metadata."""

    A: DesignMatrix
    b: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def p(self) -> int:
        return self.A.n_cols

    @property
    def n(self) -> int:
        return self.A.n_rows

    @property
    def planted(self) -> np.ndarray | None:
        x = self.metadata.get("planted")
        return None if x is None else np.asarray(x, dtype=np.float64)


@dataclass
class RobustInstance:
    """Sparse-regression data with planted outliers for the two-block problem."""

    A: DesignMatrix
    b: np.ndarray
    true_x: np.ndarray
    outlier_indices: np.ndarray
    noise_sd: float
    seed: int
    metadata: dict = field(default_factory=dict)

    @property
    def p(self) -> int:
        return self.A.n_cols

    @property
    def n(self) -> int:
        return self.A.n_rows


def _iter_lines(source):
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def parse_libsvm(source) -> Instance:
    """Parse LIBSVM-format text into a CSR-backed instance.

    ``source`` may be a string, bytes, or a file-like object.  The column
    count is the largest index seen; an empty stream yields a 0x0 instance.
    """
    labels: list[float] = []
    data: list[float] = []
    indices: list[int] = []
    indptr: list[int] = [0]
    n_cols = 0
    for lineno, raw in enumerate(_iter_lines(source), start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            labels.append(float(tokens[0]))
        except ValueError:
            raise ParseError(f"unparsable label {tokens[0]!r}", lineno) from None
        prev_idx = 0
        for tok in tokens[1:]:
            try:
                idx_str, val_str = tok.split(":", 1)
                idx = int(idx_str)
                val = float(val_str)
            except ValueError:
                raise ParseError(f"unparsable feature token {tok!r}", lineno) from None
            if idx < 1:
                raise ParseError(f"index {idx} must be >= 1", lineno)
            if idx <= prev_idx:
                raise ParseError(
                    f"index {idx} not strictly increasing after {prev_idx}", lineno
                )
            prev_idx = idx
            indices.append(idx - 1)
            data.append(val)
            n_cols = max(n_cols, idx)
        indptr.append(len(data))
    n_rows = len(labels)
    mat = sp.csr_matrix(
        (np.asarray(data), np.asarray(indices, dtype=np.int64), np.asarray(indptr)),
        shape=(n_rows, n_cols),
    )
    return Instance(
        A=DesignMatrix(mat),
        b=np.asarray(labels, dtype=np.float64),
        metadata={"source": "libsvm", "p": n_cols, "N": n_rows},
    )


def serialize_libsvm(instance: Instance) -> str:
    """Inverse of :func:`parse_libsvm`; floats use shortest round-trip repr."""
    lines = []
    A, b = instance.A, instance.b
    for i in range(A.n_rows):
        if A.is_sparse:
            row = A._mat.getrow(i)
            pairs = zip(row.indices, row.data)
        else:
            dense_row = A.row(i)
            pairs = ((j, dense_row[j]) for j in np.flatnonzero(dense_row))
        feats = " ".join(f"{int(j) + 1}:{repr(float(v))}" for j, v in pairs)
        label = repr(float(b[i]))
        lines.append(f"{label} {feats}".rstrip())
    return "\n".join(lines) + ("\n" if lines else "")


def save_instance(instance: Instance, prefix: str) -> tuple[str, str]:
    """Write PREFIX.libsvm plus a PREFIX.json metadata sidecar."""
    data_path = f"{prefix}.libsvm"
    meta_path = f"{prefix}.json"
    with open(data_path, "w", encoding="utf-8") as fh:
        fh.write(serialize_libsvm(instance))
    meta = dict(instance.metadata)
    if meta.get("planted") is not None:
        meta["planted"] = [float(v) for v in meta["planted"]]
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return data_path, meta_path


def load_instance(path: str) -> Instance:
    """Read a .libsvm file, picking up the .json sidecar when present."""
    base = path[: -len(".libsvm")] if path.endswith(".libsvm") else path
    data_path = base + ".libsvm"
    with open(data_path, "r", encoding="utf-8") as fh:
        inst = parse_libsvm(fh)
    meta_path = base + ".json"
    try:
        with open(meta_path, "r", encoding="utf-8") as fh:
            inst.metadata.update(json.load(fh))
    except FileNotFoundError:
        pass
    inst.metadata.setdefault("source", data_path)
    return inst


def add_intercept(instance: Instance) -> tuple[Instance, set[int]]:
    """Prepend an all-ones column at index 0 and return the exclusion set {0}.

    The new column models an intercept and must never be penalized.  Applying
    the transform twice is refused.
    """
    if instance.metadata.get("intercept"):
        raise InvalidDataError("intercept column already present")
    ones = np.ones((instance.n, 1))
    if instance.A.is_sparse:
        mat = sp.hstack([sp.csr_matrix(ones), instance.A._mat], format="csr")
        A = DesignMatrix(mat)
    else:
        A = DesignMatrix(np.hstack([ones, instance.A.to_dense()]))
    meta = dict(instance.metadata)
    meta["intercept"] = True
    meta["p"] = instance.p + 1
    return Instance(A=A, b=instance.b.copy(), metadata=meta), {0}


def _rng_for(seed: int, *key: int) -> np.random.Generator:
    """Philox generator for (seed, stream key); counter-based, platform-stable."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


def gen_sparse_ls_instance(
    p: int, N: int, K: int, lam: float, seed: int, max_attempts: int = 100
) -> Instance:
    """Random least-squares instance with a planted critical point.

    The planted point has K+1 nonzeros whose K-th and (K+1)-th magnitudes
    tie, so exactly two top-K sign patterns are active there.  The response
    is chosen to put a gradient of magnitude exactly lam on one tied
    coordinate (pushing it to grow) and zero gradient on the rest of the
    support: the pattern keeping the other tied coordinate then witnesses
    DC-criticality with zero residual, while the pattern keeping the
    gradient-loaded coordinate violates the stationarity condition by lam.
    Descent methods escape by growing the loaded coordinate and dropping its
    tie partner, which lands them at exactly K nonzeros.

    Every instance is certified (critical and not d-stationary at tol 1e-8)
    before being returned; failures re-derive the seed, and exhausting
    ``max_attempts`` raises :class:`GenerationError`.
    """
    if not 1 <= K < p:
        raise ValueError("need 1 <= K < p")
    if N < K + 1:
        raise ValueError("need N >= K + 1 to realize the gradient target")
    if lam <= 0:
        raise ValueError("the planted construction requires lam > 0")
    for attempt in range(max_attempts):
        rng = _rng_for(seed, 0, attempt)
        A = rng.standard_normal((N, p))
        if N >= p:
            # Orthonormal columns make the smooth term separable, so every
            # coordinate's fate under soft-thresholding is governed by the
            # single scale lam: planted values above lam survive, values
            # below it can only be held by a chosen pattern or an engineered
            # gradient.  That is what lets the plain DC iterations stall at
            # the planted critical point while the prox-of-T_K solvers
            # always resolve it.
            A, _ = np.linalg.qr(A)
        else:
            norms = np.linalg.norm(A, axis=0)
            norms[norms == 0.0] = 1.0
            A /= norms

        support = rng.permutation(p)[: K + 1]
        # Bands scale with lam (the separable death threshold): the K-1 big
        # values sit safely above it, the tied pair safely below, so the only
        # contested top-K slot is the tie itself.
        big = lam * np.sort(rng.uniform(1.3, 2.0, size=K - 1))[::-1]
        tie = lam * rng.uniform(0.6, 0.7)
        vals = np.concatenate([big, [tie, tie]])
        signs = rng.choice([-1.0, 1.0], size=K + 1)
        x_tilde = np.zeros(p)
        x_tilde[support] = vals * signs
        j2 = int(support[K])  # tied coordinate left out of the witness pattern
        if N < p:
            # decouple the gradient-target column from the rest of the
            # support so the planted pull acts on j2 alone
            rest = A[:, support[:K]]
            coef, *_ = np.linalg.lstsq(rest, A[:, j2], rcond=None)
            A[:, j2] -= rest @ coef
            col_norm = np.linalg.norm(A[:, j2])
            if col_norm < 1e-8:
                continue
            A[:, j2] /= col_norm

        # grad f(x~) = -lam * sign(x~_{j2}) * e_{j2}, solved through A's
        # support columns so all other coordinates keep zero gradient
        target = np.zeros(K + 1)
        target[K] = -lam * signs[K]
        A_s = A[:, support]
        gram = A_s.T @ A_s
        try:
            w = np.linalg.solve(gram, target)
        except np.linalg.LinAlgError:
            continue
        r = A_s @ w
        b = A @ x_tilde - r

        inst = Instance(
            A=DesignMatrix(A),
            b=b,
            metadata={
                "name": f"synthetic-ls-p{p}-N{N}-K{K}",
                "source": "synthetic",
                "p": p,
                "N": N,
                "K": K,
                "lam": lam,
                "seed": seed,
                "attempt": attempt,
                "planted": x_tilde,
                "tie_indices": (int(support[K - 1]), j2),
            },
        )
        obj = CompositeObjective(
            LeastSquaresLoss(inst.A, inst.b), TopKPenalty(lam, K, p)
        )
        report = classify(obj, x_tilde, tol=1e-8)
        if (
            report.critical is True
            and report.d_stationary is False
            and int(np.count_nonzero(x_tilde)) == K + 1
        ):
            return inst
    raise GenerationError(
        f"failed to certify a planted instance in {max_attempts} attempts"
    )


def gen_robust_instance(
    p: int,
    N: int,
    K: int,
    kappa: int,
    outlier_magnitude: float,
    noise_sd: float,
    seed: int,
) -> RobustInstance:
    """Sparse regression data with kappa planted outliers.

    True coefficients: K nonzeros with magnitudes U[1, 2] and random signs.
    b = A x* + noise, with ``kappa`` entries additionally shifted by
    +-outlier_magnitude.
    """
    if not 0 <= K < p:
        raise ValueError("need 0 <= K < p")
    if not 0 <= kappa < N:
        raise ValueError("need 0 <= kappa < N")
    rng = _rng_for(seed, 0, 0)
    A = rng.standard_normal((N, p))
    norms = np.linalg.norm(A, axis=0)
    norms[norms == 0.0] = 1.0
    A /= norms
    true_x = np.zeros(p)
    support = rng.permutation(p)[:K]
    true_x[support] = rng.uniform(1.0, 2.0, size=K) * rng.choice([-1.0, 1.0], size=K)
    b = A @ true_x + noise_sd * rng.standard_normal(N)
    outliers = np.sort(rng.permutation(N)[:kappa])
    b[outliers] += outlier_magnitude * rng.choice([-1.0, 1.0], size=kappa)
    return RobustInstance(
        A=DesignMatrix(A),
        b=b,
        true_x=true_x,
        outlier_indices=outliers,
        noise_sd=noise_sd,
        seed=seed,
        metadata={
            "name": f"synthetic-robust-p{p}-N{N}-K{K}-kappa{kappa}",
            "p": p,
            "N": N,
            "K": K,
            "kappa": kappa,
            "outlier_magnitude": outlier_magnitude,
        },
    )


def perturbed_start(instance: Instance, scale: float = 0.01, seed: int = 0) -> np.ndarray:
    """Planted point plus scale * U[-1, 1]^p noise."""
    x = instance.planted
    if x is None:
        raise InvalidDataError("instance has no planted point")
    rng = _rng_for(seed, 1)
    return x + scale * rng.uniform(-1.0, 1.0, size=instance.p)


def scaled_uniform_start(dim: int, scale: float = 0.1, seed: int = 0) -> np.ndarray:
    """scale * U[-1, 1]^dim starting point."""
    rng = _rng_for(seed, 1)
    return scale * rng.uniform(-1.0, 1.0, size=dim)
