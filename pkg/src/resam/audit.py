"""Empirical certification of aggregation rules.

``check_instance`` verifies, by exhaustive enumeration of the candidate
honest subsets, that a rule's output stays within ``lambda * diameter(S)``
of the average of every subset S of n - f inputs.  ``randomized_audit``
runs that check over families of adversarially-shaped random instances.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from functools import lru_cache
from itertools import combinations
from math import comb
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from .aggregation import (
    AggregationError,
    NoCertifiedCoefficient,
    Rule,
    aggregate,
    lambda_of,
)
from .rng import RngStream
from .vectors import as_matrix

EXACT_RULE_TOL = 1e-9
GM_RULE_TOL = 1e-6

AUDIT_MAX_N = 25
AUDIT_MAX_SUBSETS = 10**6


def rule_tolerance(rule: Rule) -> float:
    """Numerical slack granted to a rule in the resilience check.

    Iterative rules (gm) get a looser tolerance than exact ones.
    """
    return GM_RULE_TOL if rule.name == "gm" else EXACT_RULE_TOL


@dataclass
class AuditInstance:
    """One audited input family together with the rule parameters."""

    xs: np.ndarray
    f: int
    generator: str = "manual"


@dataclass
class AuditReport:
    rule: str
    n: int
    f: int
    d: int
    lambda_claimed: Optional[float]
    lambda_empirical: float
    trials: int
    violations: int
    tol: float
    worst_generator: Optional[str] = None
    worst_xs: Optional[list] = None
    worst_subset: Optional[list] = None

    @property
    def violated(self) -> bool:
        return self.violations > 0

    def to_json(self) -> str:
        payload = {"schema_version": 1}
        payload.update(asdict(self))
        payload["violated"] = self.violated
        return json.dumps(payload, indent=2, sort_keys=True)


@lru_cache(maxsize=None)
def _subsets(n: int, m: int) -> np.ndarray:
    return np.array(list(combinations(range(n), m)), dtype=np.int64)


@dataclass
class InstanceCheck:
    ok: bool
    worst_ratio: float
    worst_subset: Optional[Tuple[int, ...]]
    max_excess: float


def check_instance(
    rule: Rule,
    instance: AuditInstance,
    lambda_claimed: Optional[float],
    tol: Optional[float] = None,
) -> InstanceCheck:
    """Check one instance against every candidate honest subset.

    ``worst_ratio`` is the largest deviation-to-diameter ratio over
    subsets with positive diameter, an empirical lower bound on any
    coefficient the rule could claim.  When ``lambda_claimed`` is given,
    ``ok`` reports whether every subset satisfies the certified bound up
    to ``tol``; zero-diameter subsets require the output to match the
    subset average up to ``tol`` outright.
    """
    if tol is None:
        tol = rule_tolerance(rule)
    X = as_matrix(instance.xs)
    n = X.shape[0]
    f = instance.f
    m = n - f
    if n > AUDIT_MAX_N or comb(n, m) > AUDIT_MAX_SUBSETS:
        raise AggregationError(
            f"audit subset enumeration too large for n={n}, f={f}"
        )
    out = aggregate(rule, X, f)
    subs = _subsets(n, m)
    means = X[subs].mean(axis=1)
    dev = np.linalg.norm(out[None, :] - means, axis=1)
    diff = X[:, None, :] - X[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=-1))
    diams = dist[subs[:, :, None], subs[:, None, :]].reshape(subs.shape[0], -1).max(axis=1)

    positive = diams > 0
    ratios = np.zeros_like(dev)
    ratios[positive] = dev[positive] / diams[positive]
    worst_ratio = float(ratios.max()) if positive.any() else 0.0

    if lambda_claimed is None:
        # Measurement mode: zero-diameter subsets still demand exactness.
        excess = np.where(positive, 0.0, dev - tol)
    else:
        excess = dev - lambda_claimed * diams - tol
    max_excess = float(excess.max())
    ok = max_excess <= 0
    worst_idx = int(np.argmax(np.where(positive, ratios, dev)))
    if not ok:
        worst_idx = int(np.argmax(excess))
    return InstanceCheck(
        ok=ok,
        worst_ratio=worst_ratio,
        worst_subset=tuple(int(i) for i in subs[worst_idx]),
        max_excess=max_excess,
    )


def lower_bound_instance(n: int, f: int, d: int = 1) -> AuditInstance:
    """The matching-lower-bound family: n - f vectors at the origin and f
    at one.  The zero-diameter honest candidate pins every certified rule
    to the origin, while the mixed candidate sits at f/(n-f)."""
    if f < 1 or 2 * f >= n:
        raise AggregationError(f"need 1 <= f < n/2, got n={n}, f={f}")
    X = np.zeros((n, d))
    X[n - f :, :] = 1.0 / np.sqrt(d)
    return AuditInstance(xs=X, f=f, generator="lower_bound")


def cge_counterexample(n: int, f: int) -> AuditInstance:
    """A family on which norm-based filtering breaks certification: n - f
    honest copies of 2 plus f smaller-norm adversarial scalars whose
    presence shifts the output off the (zero-diameter) honest average."""
    if f < 1 or 2 * f >= n:
        raise AggregationError(f"need 1 <= f < n/2, got n={n}, f={f}")
    X = np.full((n, 1), 2.0)
    for j in range(f):
        X[n - f + j, 0] = 1.0 - j
    return AuditInstance(xs=X, f=f, generator="cge_counterexample")


# --- random instance generators -------------------------------------------
# Each generator draws one (n, d) family given a stream; families are
# shaped to stress different failure modes of the rules.

def _gen_gaussian(rng: RngStream, n: int, f: int, d: int) -> np.ndarray:
    g = rng.generator
    scale = 10.0 ** g.integers(-2, 3)
    return g.standard_normal((n, d)) * scale


def _gen_heavy_tail(rng: RngStream, n: int, f: int, d: int) -> np.ndarray:
    g = rng.generator
    return g.standard_t(df=1.5, size=(n, d))


def _gen_two_cluster(rng: RngStream, n: int, f: int, d: int) -> np.ndarray:
    g = rng.generator
    sep = 10.0 ** g.integers(0, 7)
    center = g.standard_normal(d)
    X = center + g.standard_normal((n, d))
    k = int(g.integers(1, max(f, 1) + 1))
    direction = g.standard_normal(d)
    direction /= max(np.linalg.norm(direction), 1e-12)
    X[n - k :] = center + sep * direction + g.standard_normal((k, d)) * (sep * 1e-3)
    return X


def _gen_outlier_at_scale(rng: RngStream, n: int, f: int, d: int) -> np.ndarray:
    g = rng.generator
    X = g.standard_normal((n, d))
    scale = 10.0 ** g.integers(0, 7)
    idx = int(g.integers(0, n))
    X[idx] *= scale
    return X


def _gen_lower_bound(rng: RngStream, n: int, f: int, d: int) -> np.ndarray:
    if f == 0:
        return np.zeros((n, d))
    return lower_bound_instance(n, f, d).xs


def _gen_colinear(rng: RngStream, n: int, f: int, d: int) -> np.ndarray:
    g = rng.generator
    direction = g.standard_normal(d)
    direction /= max(np.linalg.norm(direction), 1e-12)
    offsets = g.standard_normal(n) * 10.0 ** g.integers(-1, 4)
    return offsets[:, None] * direction[None, :]


GENERATORS: Dict[str, Callable[[RngStream, int, int, int], np.ndarray]] = {
    "gaussian": _gen_gaussian,
    "heavy_tail": _gen_heavy_tail,
    "two_cluster": _gen_two_cluster,
    "outlier_at_scale": _gen_outlier_at_scale,
    "lower_bound": _gen_lower_bound,
    "colinear": _gen_colinear,
}


def randomized_audit(
    rule: Rule,
    n: int,
    f: int,
    d: int,
    trials: int,
    rng: RngStream,
    generators: Optional[Sequence[str]] = None,
    lambda_claimed: Optional[float] = "auto",
    tol: Optional[float] = None,
) -> AuditReport:
    """Audit a rule over ``trials`` random instances.

    ``lambda_claimed="auto"`` looks the coefficient up via ``lambda_of``;
    pass None to run in measurement-only mode (no certificate asserted,
    except exactness on zero-diameter subsets).  The audit is a pure
    function of ``rng``: generators are cycled deterministically and each
    trial draws from its own child stream.
    """
    if generators is None:
        names = tuple(GENERATORS)
    else:
        unknown = set(generators) - set(GENERATORS)
        if unknown:
            raise AggregationError(f"unknown generators: {sorted(unknown)}")
        names = tuple(generators)
    if lambda_claimed == "auto":
        lambda_claimed = lambda_of(rule, n, f, d).value
    if tol is None:
        tol = rule_tolerance(rule)

    lam_emp = 0.0
    violations = 0
    worst = None  # (excess_or_ratio, generator, xs, subset)
    for t in range(trials):
        gname = names[t % len(names)]
        xs = GENERATORS[gname](rng.split(t), n, f, d)
        inst = AuditInstance(xs=xs, f=f, generator=gname)
        res = check_instance(rule, inst, lambda_claimed, tol=tol)
        lam_emp = max(lam_emp, res.worst_ratio)
        if not res.ok:
            violations += 1
        key = (0 if res.ok else 1, res.max_excess if not res.ok else res.worst_ratio)
        if worst is None or key > worst[0]:
            worst = (key, gname, xs, res.worst_subset)

    report = AuditReport(
        rule=rule.label(),
        n=n,
        f=f,
        d=d,
        lambda_claimed=lambda_claimed,
        lambda_empirical=lam_emp,
        trials=trials,
        violations=violations,
        tol=tol,
        worst_generator=worst[1] if worst else None,
        worst_xs=worst[2].tolist() if worst else None,
        worst_subset=list(worst[3]) if worst and worst[3] is not None else None,
    )
    return report
