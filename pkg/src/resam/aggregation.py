"""Aggregation rules for distributed SGD under adversarial workers.

Each rule maps n input vectors, at most f of which are adversarial, to a
single vector.  Certified rules additionally come with a resilience
coefficient ``lambda_of(rule, n, f, d)``: the rule's output is guaranteed
to stay within ``lambda * diameter(S)`` of the average of any subset S of
n - f inputs.  ``mean``, ``cc`` and ``cge`` carry no such certificate.

All index ties are broken deterministically towards smaller indices, and
MDA towards the lexicographically smallest index set.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import comb, sqrt
from typing import Optional, Sequence

import numpy as np

from .vectors import as_matrix, as_vector, coord_median

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

RULE_NAMES = (
    "mean",
    "mda",
    "cwtm",
    "cwmed",
    "meamed",
    "krum_star",
    "multi_krum_star",
    "gm",
    "cc",
    "cge",
)

# Rules for which lambda_of returns a certified coefficient.
CERTIFIED_RULE_NAMES = (
    "mda",
    "cwtm",
    "cwmed",
    "meamed",
    "krum_star",
    "multi_krum_star",
    "gm",
)

MDA_MAX_N = 25
MDA_MAX_SUBSETS = 10**6

GM_EPS = 1e-8
GM_TOL = 1e-10
GM_MAX_ITERS = 1000


class AggregationError(ValueError):
    """Invalid inputs or parameters for an aggregation rule."""


class NoCertifiedCoefficient(LookupError):
    """The rule has no certified resilience coefficient."""


class GMConvergenceError(RuntimeError):
    """Geometric-median iteration failed to converge.

    Carries the last iterate so callers can inspect how far it got.
    """

    def __init__(self, message: str, last_iterate: np.ndarray):
        super().__init__(message)
        self.last_iterate = last_iterate


@dataclass(frozen=True)
class Rule:
    """An aggregation rule identifier with its parameters.

    ``q`` is only meaningful for multi_krum_star (number of averaged
    candidates); ``c_tau`` and ``iters`` only for cc (clipping radius and
    number of clipping iterations).
    """

    name: str
    q: Optional[int] = None
    c_tau: float = 2.0
    iters: int = 1

    def __post_init__(self) -> None:
        if self.name not in RULE_NAMES:
            raise AggregationError(f"unknown rule {self.name!r}")
        if self.name == "multi_krum_star":
            if self.q is None or self.q < 1:
                raise AggregationError("multi_krum_star requires q >= 1")
        elif self.q is not None:
            raise AggregationError(f"rule {self.name!r} does not take q")
        if self.name == "cc":
            if self.c_tau <= 0:
                raise AggregationError("cc requires c_tau > 0")
            if self.iters < 1:
                raise AggregationError("cc requires iters >= 1")

    def label(self) -> str:
        if self.name == "multi_krum_star":
            return f"multi_krum_star_q{self.q}"
        return self.name


@dataclass(frozen=True)
class ResilienceCoefficient:
    rule_name: str
    n: int
    f: int
    d: int
    value: float
    delta: float


def _validate_family(xs: Sequence, f: int, *, need_majority: bool) -> np.ndarray:
    X = as_matrix(xs)
    n = X.shape[0]
    if not isinstance(f, (int, np.integer)) or isinstance(f, bool):
        raise AggregationError(f"f must be an integer, got {f!r}")
    if f < 0:
        raise AggregationError(f"f must be non-negative, got {f}")
    if need_majority:
        if 2 * f >= n:
            raise AggregationError(f"rule requires f < n/2, got n={n}, f={f}")
    elif f >= n:
        raise AggregationError(f"f must be smaller than n, got n={n}, f={f}")
    return X


def aggregate_mean(xs: Sequence, f: int = 0) -> np.ndarray:
    X = _validate_family(xs, f, need_majority=False)
    return X.mean(axis=0)


@lru_cache(maxsize=None)
def _triu_indices(n: int):
    return np.triu_indices(n, 1)


@lru_cache(maxsize=None)
def _subset_tables(n: int, m: int):
    """Lex-ordered m-subsets of range(n) and, per subset, the condensed
    (upper-triangle) indices of its internal pairs."""
    subs = np.array(list(combinations(range(n), m)), dtype=np.int64)
    flat = np.zeros((n, n), dtype=np.int64)
    k = 0
    for i in range(n):
        for j in range(i + 1, n):
            flat[i, j] = k
            k += 1
    pairs = np.array(
        [
            [flat[s[a], s[b]] for a in range(m) for b in range(a + 1, m)]
            for s in combinations(range(n), m)
        ],
        dtype=np.int64,
    )
    return subs, pairs


def _min_diameter_subset_np(d2: np.ndarray, pairs: np.ndarray) -> int:
    # First occurrence of the minimum keeps the lexicographically smallest set.
    return int(d2[pairs].max(axis=1).argmin())


if _HAVE_NUMBA:

    @njit(cache=True)
    def _min_diameter_subset_nb(d2, pairs):  # pragma: no cover - compiled
        best = np.inf
        best_s = 0
        for s in range(pairs.shape[0]):
            dm = 0.0
            for p in range(pairs.shape[1]):
                v = d2[pairs[s, p]]
                if v > dm:
                    dm = v
                    if dm >= best:
                        break
            if dm < best:
                best = dm
                best_s = s
        return best_s

    def _min_diameter_subset(d2: np.ndarray, pairs: np.ndarray) -> int:
        return int(_min_diameter_subset_nb(d2, pairs))

else:  # pragma: no cover
    _min_diameter_subset = _min_diameter_subset_np


def aggregate_mda(xs: Sequence, f: int = 0) -> np.ndarray:
    """Average of the minimum-diameter subset of n - f inputs."""
    X = _validate_family(xs, f, need_majority=True)
    n = X.shape[0]
    if n > MDA_MAX_N or comb(n, f) > MDA_MAX_SUBSETS:
        raise AggregationError(
            f"mda subset enumeration too large for n={n}, f={f} "
            f"(limits: n <= {MDA_MAX_N}, C(n, f) <= {MDA_MAX_SUBSETS})"
        )
    if f == 0:
        return X.mean(axis=0)
    m = n - f
    subs, pairs = _subset_tables(n, m)
    diff = X[:, None, :] - X[None, :, :]
    d2 = np.ascontiguousarray((diff * diff).sum(axis=-1)[_triu_indices(n)])
    best = _min_diameter_subset(d2, pairs)
    return X[subs[best]].mean(axis=0)


if _HAVE_NUMBA:

    @njit(cache=True)
    def _min_diameter_subset_batch_nb(D2, pairs, out):  # pragma: no cover
        for r in range(D2.shape[0]):
            best = np.inf
            best_s = 0
            for s in range(pairs.shape[0]):
                dm = 0.0
                for p in range(pairs.shape[1]):
                    v = D2[r, pairs[s, p]]
                    if v > dm:
                        dm = v
                        if dm >= best:
                            break
                if dm < best:
                    best = dm
                    best_s = s
            out[r] = best_s


def aggregate_mda_batch(Xs: np.ndarray, f: int) -> np.ndarray:
    """Apply ``aggregate_mda`` to a batch of (R, n, d) families at once.

    Gives identical results to calling the rule per family but amortizes
    the subset scan, which matters for Monte Carlo workloads.
    """
    Xs = np.asarray(Xs, dtype=np.float64)
    if Xs.ndim != 3:
        raise AggregationError(f"expected an (R, n, d) batch, got shape {Xs.shape}")
    R, n, _ = Xs.shape
    if 2 * f >= n:
        raise AggregationError(f"rule requires f < n/2, got n={n}, f={f}")
    if n > MDA_MAX_N or comb(n, f) > MDA_MAX_SUBSETS:
        raise AggregationError(
            f"mda subset enumeration too large for n={n}, f={f} "
            f"(limits: n <= {MDA_MAX_N}, C(n, f) <= {MDA_MAX_SUBSETS})"
        )
    if f == 0:
        return Xs.mean(axis=1)
    subs, pairs = _subset_tables(n, n - f)
    diff = Xs[:, :, None, :] - Xs[:, None, :, :]
    iu = _triu_indices(n)
    D2 = np.ascontiguousarray((diff * diff).sum(axis=-1)[:, iu[0], iu[1]])
    best = np.zeros(R, dtype=np.int64)
    if _HAVE_NUMBA:
        _min_diameter_subset_batch_nb(D2, pairs, best)
    else:  # pragma: no cover
        best[:] = D2[:, pairs].max(axis=2).argmin(axis=1)
    return Xs[np.arange(R)[:, None], subs[best]].mean(axis=1)


def aggregate_cwtm(xs: Sequence, f: int = 0) -> np.ndarray:
    """Coordinate-wise trimmed mean: drop the f smallest and f largest
    entries of each coordinate and average the rest."""
    X = _validate_family(xs, f, need_majority=True)
    n = X.shape[0]
    s = np.sort(X, axis=0)
    return s[f : n - f].mean(axis=0)


def aggregate_cwmed(xs: Sequence, f: int = 0) -> np.ndarray:
    X = _validate_family(xs, f, need_majority=True)
    return coord_median(X)


def aggregate_meamed(xs: Sequence, f: int = 0) -> np.ndarray:
    """Coordinate-wise mean of the n - f entries closest to the median."""
    X = _validate_family(xs, f, need_majority=True)
    n = X.shape[0]
    med = coord_median(X)
    dist = np.abs(X - med)
    order = np.argsort(dist, axis=0, kind="stable")[: n - f]
    return np.take_along_axis(X, order, axis=0).mean(axis=0)


def _krum_scores(X: np.ndarray, f: int) -> np.ndarray:
    n = X.shape[0]
    diff = X[:, None, :] - X[None, :, :]
    d2 = (diff * diff).sum(axis=-1)
    np.fill_diagonal(d2, np.inf)
    nearest = np.sort(d2, axis=1)[:, : n - f - 1]
    return nearest.sum(axis=1)


def aggregate_multi_krum_star(xs: Sequence, f: int = 0, q: int = 1) -> np.ndarray:
    """Average the q inputs whose summed squared distance to their
    n - f - 1 nearest peers is smallest."""
    X = _validate_family(xs, f, need_majority=True)
    n = X.shape[0]
    if not 1 <= q <= n - f:
        raise AggregationError(f"q must satisfy 1 <= q <= n - f, got q={q}")
    scores = _krum_scores(X, f)
    chosen = np.argsort(scores, kind="stable")[:q]
    return X[chosen].mean(axis=0)


def aggregate_krum_star(xs: Sequence, f: int = 0) -> np.ndarray:
    return aggregate_multi_krum_star(xs, f, q=1)


def _gm_objective(X: np.ndarray, y: np.ndarray) -> float:
    return float(np.linalg.norm(X - y, axis=1).sum())


def aggregate_gm(
    xs: Sequence,
    f: int = 0,
    *,
    eps: float = GM_EPS,
    tol: float = GM_TOL,
    max_iters: int = GM_MAX_ITERS,
) -> np.ndarray:
    """Geometric median via smoothed fixed-point iteration.

    Distances are floored at ``eps`` to keep the weights finite; the
    iteration stops once the relative step falls below ``tol``.  The
    plain iteration contracts slowly when the optimum sits close to an
    input point, so geometric tails are shortcut by extrapolating along
    the step direction whenever that lowers the objective; the returned
    point is always a plain fixed-point update and therefore a convex
    combination of the inputs.
    """
    X = _validate_family(xs, f, need_majority=True)
    y = X.mean(axis=0)
    prev_step = None
    for _ in range(max_iters):
        dist = np.linalg.norm(X - y, axis=1)
        w = 1.0 / np.maximum(dist, eps)
        y_new = (w[:, None] * X).sum(axis=0) / w.sum()
        step_vec = y_new - y
        step = float(np.linalg.norm(step_vec))
        if step <= tol * max(1.0, float(np.linalg.norm(y_new))):
            return y_new
        if prev_step is not None and prev_step > 0:
            ratio = step / prev_step
            if 1e-4 < ratio < 1.0 - 1e-12:
                base = _gm_objective(X, y_new)
                jump = ratio / (1.0 - ratio)
                accepted = False
                # Backtrack: the full jump overshoots in flat valleys.
                for _ in range(8):
                    cand = y_new + step_vec * jump
                    if _gm_objective(X, cand) < base:
                        prev_step = None
                        y = cand
                        accepted = True
                        break
                    jump *= 0.5
                if accepted:
                    continue
        prev_step = step
        y = y_new
    raise GMConvergenceError(
        f"geometric median did not converge within {max_iters} iterations",
        last_iterate=y,
    )


def aggregate_cc(
    xs: Sequence,
    f: int = 0,
    v0=None,
    c_tau: float = 2.0,
    iters: int = 1,
) -> np.ndarray:
    """Centered clipping: clip each input to a ball of radius c_tau around
    the current estimate and average the clipped offsets."""
    X = _validate_family(xs, f, need_majority=False)
    if c_tau <= 0:
        raise AggregationError(f"c_tau must be positive, got {c_tau}")
    if iters < 1:
        raise AggregationError(f"iters must be >= 1, got {iters}")
    v = np.zeros(X.shape[1]) if v0 is None else as_vector(v0)
    if v.size != X.shape[1]:
        raise AggregationError("v0 dimension does not match the inputs")
    for _ in range(iters):
        diff = X - v
        nrm = np.linalg.norm(diff, axis=1)
        safe = np.where(nrm > 0, nrm, 1.0)
        clip = np.where(nrm > c_tau, c_tau / safe, 1.0)
        v = v + (clip[:, None] * diff).mean(axis=0)
    return v


def aggregate_cge(xs: Sequence, f: int = 0) -> np.ndarray:
    """Average of the n - f smallest-norm inputs (norm-based filtering)."""
    X = _validate_family(xs, f, need_majority=False)
    n = X.shape[0]
    nrm = np.linalg.norm(X, axis=1)
    keep = np.argsort(nrm, kind="stable")[: n - f]
    return X[keep].mean(axis=0)


def aggregate(rule: Rule, xs: Sequence, f: int, v0=None) -> np.ndarray:
    """Dispatch to the rule named by ``rule`` with its parameters."""
    if rule.name == "mean":
        return aggregate_mean(xs, f)
    if rule.name == "mda":
        return aggregate_mda(xs, f)
    if rule.name == "cwtm":
        return aggregate_cwtm(xs, f)
    if rule.name == "cwmed":
        return aggregate_cwmed(xs, f)
    if rule.name == "meamed":
        return aggregate_meamed(xs, f)
    if rule.name == "krum_star":
        return aggregate_krum_star(xs, f)
    if rule.name == "multi_krum_star":
        return aggregate_multi_krum_star(xs, f, q=rule.q)
    if rule.name == "gm":
        return aggregate_gm(xs, f)
    if rule.name == "cc":
        return aggregate_cc(xs, f, v0=v0, c_tau=rule.c_tau, iters=rule.iters)
    if rule.name == "cge":
        return aggregate_cge(xs, f)
    raise AggregationError(f"unknown rule {rule.name!r}")


def resilience_delta(n: int, f: int, d: int) -> float:
    """Dimension factor appearing in the coordinate-wise coefficients."""
    return min(2.0 * sqrt(n - f), sqrt(d))


def lambda_of(rule: Rule, n: int, f: int, d: int) -> ResilienceCoefficient:
    """Certified resilience coefficient of a rule at (n, f, d).

    Raises NoCertifiedCoefficient for rules without a certificate
    (mean, cc, cge).
    """
    if n < 1 or d < 1:
        raise AggregationError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    if f < 0 or 2 * f >= n:
        raise AggregationError(f"need 0 <= f < n/2, got n={n}, f={f}")
    delta = resilience_delta(n, f, d)
    name = rule.name
    if name == "mda":
        lam = 2.0 * f / (n - f)
    elif name == "cwtm":
        lam = f / (n - f) * delta
    elif name == "meamed":
        lam = 2.0 * f / (n - f) * delta
    elif name == "krum_star":
        lam = 1.0 + sqrt((n - f) / (n - 2 * f))
    elif name == "multi_krum_star":
        lam = (1.0 + sqrt((n - f) / (n - 2 * f))) * min(1.0, (n - rule.q) / (n - f))
    elif name == "gm":
        lam = 1.0 + (n - f) / sqrt((n - 2 * f) * n)
    elif name == "cwmed":
        lam = n / (2.0 * (n - f)) * delta
    else:
        raise NoCertifiedCoefficient(f"rule {name!r} has no certified coefficient")
    return ResilienceCoefficient(rule_name=name, n=n, f=f, d=d, value=lam, delta=delta)


def lambda_lower_bound(n: int, f: int) -> float:
    """No rule can achieve a coefficient below f / (n - f)."""
    if f < 0 or 2 * f >= n:
        raise AggregationError(f"need 0 <= f < n/2, got n={n}, f={f}")
    return f / (n - f)
