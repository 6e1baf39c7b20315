"""Exact sparsity penalty T_K, its prox, subgradients, and active sets.

T_K(x) is the sum of the p - K smallest absolute entries of x, equivalently
the l1 norm minus the largest-K norm (the sum of the K largest absolute
entries).  T_K(x) = 0 exactly when x has at most K nonzeros, which makes
lambda * T_K an exact penalty for the l0 constraint.

Coordinates listed in ``excluded`` (e.g. an intercept) are never penalized:
they do not count toward K, are never thresholded, and never appear in sign
patterns.

Tie-breaking everywhere is (|x_j| descending, index ascending), so traces and
oracle comparisons are reproducible across platforms.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ActiveSetOverflowError, DimensionMismatchError

__all__ = [
    "SignPattern",
    "soft_threshold",
    "top_k_norm",
    "t_k_value",
    "prox_top_k_penalty",
    "top_k_subgradient",
    "active_set_enumerate",
    "project_l0_ball",
    "ExactPenaltyBound",
    "exact_penalty_bound",
    "TopKPenalty",
    "IndicatorL0Ball",
]

SUBGRADIENT_POLICIES = ("canonical", "extreme_negative", "index_order")

DEFAULT_ACTIVE_SET_CAP = 100_000


@dataclass(frozen=True)
class SignPattern:
    """One active linear piece of the largest-K norm: v in {0, +1, -1}^p.

    ``entries`` has exactly ``support_size`` nonzeros, all on non-excluded
    coordinates.
    """

    entries: np.ndarray
    support_size: int

    def as_float(self) -> np.ndarray:
        return self.entries.astype(np.float64)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SignPattern)
            and self.support_size == other.support_size
            and np.array_equal(self.entries, other.entries)
        )

    def __hash__(self) -> int:
        return hash(self.entries.tobytes())


def _free_indices(p: int, excluded) -> np.ndarray:
    if not excluded:
        return np.arange(p)
    excluded = np.asarray(sorted(excluded), dtype=np.int64)
    if len(excluded) and (excluded[0] < 0 or excluded[-1] >= p):
        raise ValueError("excluded index out of range")
    mask = np.ones(p, dtype=bool)
    mask[excluded] = False
    return np.flatnonzero(mask)


def _check_k(K: int, n_free: int) -> None:
    if not 0 <= K <= n_free:
        raise ValueError(f"K={K} out of range [0, {n_free}]")


def soft_threshold(xi, lam):
    """Soft-thresholding: shrink toward 0 by lam, clamping at 0.

    Works elementwise on arrays; scalar in, scalar out.
    """
    if lam < 0:
        raise ValueError("soft threshold requires lam >= 0")
    xi_arr = np.asarray(xi, dtype=np.float64)
    out = np.sign(xi_arr) * np.maximum(np.abs(xi_arr) - lam, 0.0)
    if np.isscalar(xi) or xi_arr.ndim == 0:
        return float(out)
    return out


def _top_k_selection(values: np.ndarray, free: np.ndarray, K: int) -> np.ndarray:
    """Indices of the K largest |values| among ``free``, ties by lowest index."""
    mags = np.abs(values[free])
    order = np.lexsort((free, -mags))
    return free[order[:K]]


def top_k_norm(x: np.ndarray, K: int, excluded=()) -> float:
    """Sum of the K largest absolute entries among non-excluded coordinates."""
    x = np.asarray(x, dtype=np.float64)
    free = _free_indices(x.shape[0], excluded)
    _check_k(K, len(free))
    if K == 0:
        return 0.0
    mags = np.abs(x[free])
    return float(np.sort(mags)[::-1][:K].sum())


def t_k_value(x: np.ndarray, K: int, excluded=()) -> float:
    """T_K(x): l1 norm minus largest-K norm over non-excluded coordinates.

    Nonnegative; zero exactly when at most K of those coordinates are nonzero.
    """
    x = np.asarray(x, dtype=np.float64)
    free = _free_indices(x.shape[0], excluded)
    _check_k(K, len(free))
    mags = np.sort(np.abs(x[free]))[::-1]
    return float(mags[K:].sum())


def prox_top_k_penalty(y: np.ndarray, tau: float, K: int, excluded=()) -> np.ndarray:
    """Proximal mapping of tau * T_K: argmin tau*T_K(x) + 0.5 ||x - y||^2.

    The K largest |y_j| among non-excluded coordinates (ties by lowest index)
    are kept verbatim; every other non-excluded coordinate is soft-thresholded
    by tau.  Excluded coordinates pass through unchanged.
    """
    if tau < 0:
        raise ValueError("prox requires tau >= 0")
    y = np.asarray(y, dtype=np.float64)
    free = _free_indices(y.shape[0], excluded)
    _check_k(K, len(free))
    out = y.copy()
    if tau == 0.0:
        return out
    keep = _top_k_selection(y, free, K)
    shrink = np.setdiff1d(free, keep, assume_unique=True)
    out[shrink] = soft_threshold(y[shrink], tau)
    return out


def top_k_subgradient(
    x: np.ndarray, K: int, excluded=(), policy: str = "canonical", scale: float = 1.0
) -> np.ndarray:
    """A subgradient of scale * (largest-K norm) at x.

    The chosen index set is the deterministic top-K.  On a chosen coordinate
    with x_j != 0 the entry is sign(x_j); on a chosen zero coordinate the
    policy decides:

    * ``canonical``        0   (a convex-hull subgradient; <v, x> still
                                attains the largest-K norm)
    * ``extreme_negative`` -1  (an extreme active piece; reproduces the
                                stalling behaviour of plain DC iterations)
    * ``index_order``      +1  (sign(0) taken as +1)
    """
    if policy not in SUBGRADIENT_POLICIES:
        raise ValueError(f"unknown subgradient policy {policy!r}")
    x = np.asarray(x, dtype=np.float64)
    free = _free_indices(x.shape[0], excluded)
    _check_k(K, len(free))
    v = np.zeros_like(x)
    chosen = _top_k_selection(x, free, K)
    signs = np.sign(x[chosen])
    if policy == "extreme_negative":
        signs[signs == 0.0] = -1.0
    elif policy == "index_order":
        signs[signs == 0.0] = 1.0
    v[chosen] = signs
    return scale * v


def _enumerate_exact_ties(x, free, K) -> list[tuple[tuple[int, ...], ...]]:
    """All (chosen set, sign vector) pairs active at delta = 0.

    Derived combinatorially (no floating-point threshold): a set attains the
    largest-K norm iff it contains every coordinate with |x_j| strictly above
    the K-th largest magnitude and fills the rest from the tie class.  Sign
    choices are free only on zero-valued chosen coordinates.
    """
    if K == 0:
        return [((), ())]
    mags = np.abs(x[free])
    kth = np.sort(mags)[::-1][K - 1]
    mandatory = sorted(int(j) for j in free[mags > kth])
    ties = sorted(int(j) for j in free[mags == kth])
    slots = K - len(mandatory)
    out = []
    for combo in itertools.combinations(ties, slots):
        chosen = tuple(sorted(mandatory + list(combo)))
        zero_positions = [j for j in chosen if x[j] == 0.0]
        nonzero_signs = {j: (1 if x[j] > 0 else -1) for j in chosen if x[j] != 0.0}
        for zero_signs in itertools.product((1, -1), repeat=len(zero_positions)):
            signs = []
            z_iter = iter(zero_signs)
            for j in chosen:
                signs.append(nonzero_signs[j] if x[j] != 0.0 else next(z_iter))
            out.append((chosen, tuple(signs)))
    return out


def _count_exact_ties(x, free, K) -> int:
    if K == 0:
        return 1
    mags = np.abs(x[free])
    kth = np.sort(mags)[::-1][K - 1]
    n_mandatory = int(np.count_nonzero(mags > kth))
    n_ties = int(np.count_nonzero(mags == kth))
    slots = K - n_mandatory
    per_combo_signs = 2**slots if kth == 0.0 else 1
    return math.comb(n_ties, slots) * per_combo_signs


def _enumerate_relaxed(x, free, K, delta, cap) -> list[tuple[tuple[int, ...], ...]]:
    """Branch-and-bound enumeration of patterns within delta of the largest-K norm.

    Indices are visited in (magnitude descending, index ascending) order so
    the best-completion bound is a contiguous prefix sum; an explicit stack
    avoids recursion limits at large K, and results are sorted into the
    canonical order afterwards.
    """
    mags_all = np.abs(x[free])
    order = np.lexsort((free, -mags_all))
    idx = free[order]
    mags = mags_all[order]
    csum = np.concatenate([[0.0], np.cumsum(mags)])
    n = len(idx)
    threshold = float(np.sort(mags_all)[::-1][:K].sum()) - delta
    found: set[tuple[tuple[int, ...], tuple[int, ...]]] = set()
    stack: list[tuple[int, int, float, tuple, tuple]] = [(0, K, 0.0, (), ())]
    while stack:
        pos, slots, acc, chosen, signs = stack.pop()
        if slots == 0:
            if acc >= threshold:
                pairs = sorted(zip(chosen, signs))
                found.add((tuple(j for j, _ in pairs), tuple(s for _, s in pairs)))
                if len(found) > cap:
                    raise ActiveSetOverflowError(cap)
            continue
        if pos >= n or n - pos < slots:
            continue
        # best completion: the next `slots` magnitudes (contiguous when sorted)
        if acc + (csum[min(pos + slots, n)] - csum[pos]) < threshold:
            continue
        j = int(idx[pos])
        m = float(mags[pos])
        canonical = 1 if x[j] >= 0 else -1
        stack.append((pos + 1, slots, acc, chosen, signs))
        # flipped sign is a distinct pattern (always for zeros, rarely viable
        # otherwise unless delta is large)
        stack.append(
            (pos + 1, slots - 1, acc + (-m if x[j] != 0.0 else m),
             chosen + (j,), signs + (-canonical,))
        )
        stack.append((pos + 1, slots - 1, acc + m, chosen + (j,), signs + (canonical,)))
    return sorted(found)


def active_set_enumerate(
    x: np.ndarray,
    K: int,
    excluded=(),
    delta: float = 0.0,
    cap: int = DEFAULT_ACTIVE_SET_CAP,
) -> list[SignPattern]:
    """All sign patterns v with sum|v_j| = K and <v, x> >= top_k_norm(x) - delta.

    Enumeration order is deterministic: lexicographic over chosen index sets,
    then sign choices (canonical sign first) on each set.  Raises
    :class:`ActiveSetOverflowError` (never truncates) when more than ``cap``
    patterns exist; silently truncating would corrupt downstream
    d-stationarity certificates.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if cap < 1:
        raise ValueError("cap must be at least 1")
    x = np.asarray(x, dtype=np.float64)
    p = x.shape[0]
    free = _free_indices(p, excluded)
    _check_k(K, len(free))
    if delta == 0.0:
        if _count_exact_ties(x, free, K) > cap:
            raise ActiveSetOverflowError(cap)
        raw = _enumerate_exact_ties(x, free, K)
    else:
        raw = _enumerate_relaxed(x, free, K, delta, cap)
    patterns = []
    for chosen, signs in raw:
        entries = np.zeros(p, dtype=np.int8)
        for j, s in zip(chosen, signs):
            entries[j] = s
        patterns.append(SignPattern(entries=entries, support_size=K))
    return patterns


def project_l0_ball(z: np.ndarray, kappa: int) -> np.ndarray:
    """Euclidean projection onto {z : ||z||_0 <= kappa}.

    Keeps the kappa largest-magnitude entries (ties by lowest index), zeroes
    the rest.
    """
    z = np.asarray(z, dtype=np.float64)
    n = z.shape[0]
    if not 0 <= kappa <= n:
        raise ValueError(f"kappa={kappa} out of range [0, {n}]")
    if kappa == n:
        return z.copy()
    keep = _top_k_selection(z, np.arange(n), kappa)
    out = np.zeros_like(z)
    out[keep] = z[keep]
    return out


@dataclass(frozen=True)
class ExactPenaltyBound:
    """Penalty weights above which the penalized and constrained problems agree.

    The strict inequalities of the underlying bound are realized by the
    multiplicative ``margin``.  Whether the bounded-solution-set hypothesis
    actually holds for the supplied floors is not checkable in general; the
    calculator only reports the thresholds.
    """

    lambda1_min: float
    lambda2_min: float
    grad_x_at_origin_norm: float
    grad_z_at_origin_norm: float
    M: float
    C_x: float
    C_z: float
    lambda1_floor: float
    lambda2_floor: float
    margin: float


def exact_penalty_bound(
    grad_x_at_origin_norm: float,
    grad_z_at_origin_norm: float,
    M: float,
    C_x: float,
    C_z: float,
    lambda1_floor: float = 0.0,
    lambda2_floor: float = 0.0,
    margin: float = 1e-6,
) -> ExactPenaltyBound:
    """Exact-penalty thresholds for the two-block sparse robust problem."""
    if min(grad_x_at_origin_norm, grad_z_at_origin_norm, M, C_x, C_z) < 0:
        raise ValueError("all bound inputs must be nonnegative")
    if min(lambda1_floor, lambda2_floor) < 0:
        raise ValueError("floors must be nonnegative")
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    lam1 = (1.0 + margin) * max(
        grad_x_at_origin_norm + M * (1.5 * C_x + C_z), lambda1_floor
    )
    lam2 = (1.0 + margin) * max(
        grad_z_at_origin_norm + M * (C_x + 1.5 * C_z), lambda2_floor
    )
    return ExactPenaltyBound(
        lambda1_min=lam1,
        lambda2_min=lam2,
        grad_x_at_origin_norm=grad_x_at_origin_norm,
        grad_z_at_origin_norm=grad_z_at_origin_norm,
        M=M,
        C_x=C_x,
        C_z=C_z,
        lambda1_floor=lambda1_floor,
        lambda2_floor=lambda2_floor,
        margin=margin,
    )


@dataclass
class TopKPenalty:
    """g(x) = lam * T_K(x) over non-excluded coordinates.

    DC decomposition: g = g1 - g2 with g1 = lam * l1 and g2 = lam *
    largest-K norm, both restricted to non-excluded coordinates.
    """

    lam: float
    K: int
    p: int
    excluded: tuple = ()

    is_dc: bool = field(default=True, init=False, repr=False)

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        self.excluded = tuple(sorted(set(int(j) for j in self.excluded)))
        free = _free_indices(self.p, self.excluded)
        _check_k(self.K, len(free))
        self._free = free

    def _check_dim(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.p,):
            raise DimensionMismatchError(f"x has shape {x.shape}, expected ({self.p},)")
        return x

    def value(self, x: np.ndarray) -> float:
        x = self._check_dim(x)
        return self.lam * t_k_value(x, self.K, self.excluded)

    def prox(self, y: np.ndarray, step: float) -> np.ndarray:
        """argmin g(x) + (1/(2*step)) ||x - y||^2, i.e. prox of step*g."""
        y = self._check_dim(y)
        return prox_top_k_penalty(y, self.lam * step, self.K, self.excluded)

    # DC surface -----------------------------------------------------------
    def convex_value(self, x: np.ndarray) -> float:
        x = self._check_dim(x)
        return self.lam * float(np.abs(x[self._free]).sum())

    def convex_prox(self, y: np.ndarray, step: float) -> np.ndarray:
        y = self._check_dim(y)
        out = y.copy()
        out[self._free] = soft_threshold(y[self._free], self.lam * step)
        return out

    def concave_value(self, x: np.ndarray) -> float:
        x = self._check_dim(x)
        return self.lam * top_k_norm(x, self.K, self.excluded)

    def concave_subgradient(self, x: np.ndarray, policy: str = "canonical") -> np.ndarray:
        x = self._check_dim(x)
        return top_k_subgradient(x, self.K, self.excluded, policy, scale=self.lam)

    def active_gradients(
        self, x: np.ndarray, delta: float = 0.0, cap: int = DEFAULT_ACTIVE_SET_CAP
    ):
        """Gradients lam*v of the active linear pieces, with their patterns."""
        x = self._check_dim(x)
        patterns = active_set_enumerate(x, self.K, self.excluded, delta, cap)
        grads = [self.lam * pat.as_float() for pat in patterns]
        return grads, patterns

    def l1_weights(self) -> np.ndarray:
        w = np.zeros(self.p)
        w[self._free] = self.lam
        return w


@dataclass
class IndicatorL0Ball:
    """h(z) = 0 if ||z||_0 <= kappa else +inf; prox is the l0-ball projection."""

    kappa: int
    p: int

    is_dc: bool = field(default=False, init=False, repr=False)

    def __post_init__(self):
        if not 0 <= self.kappa <= self.p:
            raise ValueError(f"kappa={self.kappa} out of range [0, {self.p}]")

    def value(self, z: np.ndarray) -> float:
        z = np.asarray(z, dtype=np.float64)
        if z.shape != (self.p,):
            raise DimensionMismatchError(f"z has shape {z.shape}, expected ({self.p},)")
        return 0.0 if np.count_nonzero(z) <= self.kappa else np.inf

    def prox(self, y: np.ndarray, step: float) -> np.ndarray:
        return project_l0_ball(np.asarray(y, dtype=np.float64), self.kappa)
