from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resam.aggregation import (
    AggregationError,
    NoCertifiedCoefficient,
    Rule,
    aggregate,
    aggregate_cc,
    aggregate_cge,
    aggregate_cwmed,
    aggregate_cwtm,
    aggregate_gm,
    aggregate_krum_star,
    aggregate_mda,
    aggregate_mda_batch,
    aggregate_meamed,
    aggregate_multi_krum_star,
    lambda_lower_bound,
    lambda_of,
)
from resam.rng import RngStream
from resam.vectors import pairwise_distances

# --- reference implementations used as oracles -----------------------------


def mda_oracle(X, f):
    n = len(X)
    best = None
    for subset in itertools.combinations(range(n), n - f):
        sub = X[list(subset)]
        diam = pairwise_distances(sub).max() if len(sub) > 1 else 0.0
        if best is None or diam < best[0]:
            best = (diam, subset)
    return X[list(best[1])].mean(axis=0)


def krum_oracle(X, f, q):
    n = len(X)
    scores = []
    for i in range(n):
        dists = sorted(
            float(np.sum((X[j] - X[i]) ** 2)) for j in range(n) if j != i
        )
        scores.append(sum(dists[: n - f - 1]))
    order = sorted(range(n), key=lambda i: (scores[i], i))
    return X[order[:q]].mean(axis=0)


def meamed_oracle(X, f):
    n, d = X.shape
    out = np.zeros(d)
    for k in range(d):
        med = np.median(X[:, k])
        order = sorted(range(n), key=lambda i: (abs(X[i, k] - med), i))
        out[k] = X[order[: n - f], k].mean()
    return out


def _random_instances(count, n, d, seed):
    g = RngStream(seed).generator
    return [g.standard_normal((n, d)) * 10.0 ** g.integers(-1, 3) for _ in range(count)]


# --- pinned examples -------------------------------------------------------


def test_cwtm_example():
    X = np.array([[1.0], [2.0], [3.0], [100.0]])
    assert aggregate_cwtm(X, 1) == pytest.approx([2.5])


def test_meamed_example():
    X = np.array([[1.0], [2.0], [3.0], [100.0]])
    assert aggregate_meamed(X, 1) == pytest.approx([2.0])


def test_krum_star_example():
    X = np.array([[0.0], [0.1], [0.2], [10.0]])
    assert aggregate_krum_star(X, 1) == pytest.approx([0.1])


def test_multi_krum_q2_breaks_score_tie_towards_smaller_index():
    # Scores are (0.05, 0.02, 0.05, 194.05): q=2 must take worker 1 then
    # worker 0, not worker 2.
    X = np.array([[0.0], [0.1], [0.2], [10.0]])
    assert aggregate_multi_krum_star(X, 1, q=2) == pytest.approx([0.05])


def test_mda_example():
    X = np.array([[0.0], [0.1], [0.2], [10.0]])
    assert aggregate_mda(X, 1) == pytest.approx([0.1])


def test_mda_diameter_tie_prefers_lex_smallest_subset():
    # Subsets {0,1,2} and {1,2,3} both have diameter 3; the first wins.
    X = np.array([[0.0], [1.0], [3.0], [4.0]])
    assert aggregate_mda(X, 1) == pytest.approx([4.0 / 3.0])


def test_cge_example():
    X = np.array([[1.0], [2.0], [-5.0]])
    assert aggregate_cge(X, 1) == pytest.approx([1.5])


def test_cge_norm_tie_prefers_smaller_index():
    X = np.array([[2.0], [-2.0], [5.0]])
    assert aggregate_cge(X, 2) == pytest.approx([2.0])


def test_cwmed_even_takes_midpoint():
    X = np.array([[1.0], [2.0], [7.0], [100.0]])
    assert aggregate_cwmed(X, 1) == pytest.approx([4.5])


def test_cc_example():
    X = np.array([[0.0, 0.0], [10.0, 0.0]])
    assert aggregate_cc(X, 0, c_tau=2.0, iters=1) == pytest.approx([1.0, 0.0])


def test_cc_input_equal_to_center():
    X = np.array([[0.0], [0.0]])
    assert aggregate_cc(X, 0, v0=[0.0]) == pytest.approx([0.0])


def test_gm_identical_inputs():
    X = np.array([[3.0, -1.0]] * 4)
    assert aggregate_gm(X, 1) == pytest.approx([3.0, -1.0], abs=1e-9)


def test_gm_majority_anchor():
    X = np.array([[0.0], [0.0], [1.0]])
    assert aggregate_gm(X, 1) == pytest.approx([0.0], abs=1e-6)


def test_gm_square_symmetry():
    X = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    assert aggregate_gm(X, 1) == pytest.approx([0.0, 0.0], abs=1e-8)


def test_gm_first_order_optimality():
    g = RngStream(3).generator
    X = g.standard_normal((7, 3))
    y = aggregate_gm(X, 2)
    dirs = (X - y) / np.linalg.norm(X - y, axis=1)[:, None]
    assert float(np.linalg.norm(dirs.sum(axis=0))) < 1e-6


# --- oracle comparisons on random instances --------------------------------


@pytest.mark.parametrize("n,f", [(4, 1), (6, 2), (7, 3), (9, 2)])
def test_mda_matches_enumeration_oracle(n, f):
    for X in _random_instances(20, n, 3, seed=n * 10 + f):
        assert aggregate_mda(X, f) == pytest.approx(mda_oracle(X, f))


@pytest.mark.parametrize("n,f,q", [(4, 1, 1), (6, 2, 1), (6, 2, 4), (8, 3, 5)])
def test_multi_krum_matches_oracle(n, f, q):
    for X in _random_instances(20, n, 2, seed=n + q):
        assert aggregate_multi_krum_star(X, f, q) == pytest.approx(
            krum_oracle(X, f, q)
        )


@pytest.mark.parametrize("n,f", [(4, 1), (5, 2), (8, 3)])
def test_meamed_matches_oracle(n, f):
    for X in _random_instances(20, n, 3, seed=n * 100 + f):
        assert aggregate_meamed(X, f) == pytest.approx(meamed_oracle(X, f))


@pytest.mark.parametrize("n,f", [(5, 1), (7, 2)])
def test_cwtm_matches_sorted_slice(n, f):
    for X in _random_instances(10, n, 2, seed=f):
        expected = np.stack(
            [np.sort(X[:, k])[f : n - f] for k in range(X.shape[1])], axis=1
        ).mean(axis=0)
        assert aggregate_cwtm(X, f) == pytest.approx(expected)


# --- invariance properties -------------------------------------------------

CERTIFIED = [
    Rule("mda"),
    Rule("cwtm"),
    Rule("cwmed"),
    Rule("meamed"),
    Rule("krum_star"),
    Rule("multi_krum_star", q=3),
    Rule("gm"),
]


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_translation_equivariance(seed):
    g = RngStream(seed).generator
    X = g.standard_normal((6, 2))
    shift = g.standard_normal(2) * 5
    for rule in CERTIFIED + [Rule("mean")]:
        a = aggregate(rule, X + shift, 2)
        b = aggregate(rule, X, 2) + shift
        assert a == pytest.approx(b, abs=1e-6)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_permutation_invariance(seed):
    g = RngStream(seed).generator
    X = g.standard_normal((7, 2))
    perm = g.permutation(7)
    # MDA is excluded: two subsets can share the exact same critical pair
    # (hence diameter), and its index-set tie-break is then order dependent.
    for rule in CERTIFIED + [Rule("mean"), Rule("cge")]:
        if rule.name == "mda":
            continue
        a = aggregate(rule, X[perm], 2)
        b = aggregate(rule, X, 2)
        assert a == pytest.approx(b, abs=1e-7)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), scale=st.sampled_from([0.5, 2.0, 10.0]))
def test_positive_scale_equivariance(seed, scale):
    g = RngStream(seed).generator
    X = g.standard_normal((6, 2))
    for rule in CERTIFIED + [Rule("mean"), Rule("cge")]:
        a = aggregate(rule, X * scale, 2)
        b = aggregate(rule, X, 2) * scale
        assert a == pytest.approx(b, abs=1e-6 * scale)


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 10**6),
    n=st.integers(3, 6),
    d=st.integers(1, 2),
)
def test_certified_rules_respect_their_coefficient(seed, n, d):
    g = RngStream(seed).generator
    for f in range((n - 1) // 2 + 1):
        X = g.standard_normal((n, d)) * 10.0 ** g.integers(-1, 4)
        for rule in CERTIFIED:
            if rule.name == "multi_krum_star":
                rule = Rule("multi_krum_star", q=n - f)
            lam = lambda_of(rule, n, f, d).value
            out = aggregate(rule, X, f)
            tol = 1e-6 if rule.name == "gm" else 1e-9
            for subset in itertools.combinations(range(n), n - f):
                sub = X[list(subset)]
                diam = pairwise_distances(sub).max() if len(sub) > 1 else 0.0
                dev = float(np.linalg.norm(out - sub.mean(axis=0)))
                assert dev <= lam * diam + tol * max(1.0, diam)


# --- coefficients ----------------------------------------------------------


def test_lambda_values_pinned():
    assert lambda_of(Rule("mda"), 15, 5, 10).value == pytest.approx(1.0)
    assert lambda_of(Rule("cwtm"), 4, 1, 1).value == pytest.approx(1.0 / 3.0)
    assert lambda_of(Rule("krum_star"), 15, 5, 10).value == pytest.approx(
        1.0 + np.sqrt(2.0)
    )
    assert lambda_of(Rule("gm"), 15, 5, 10).value == pytest.approx(
        1.0 + 10.0 / np.sqrt(75.0)
    )
    assert lambda_of(Rule("cwmed"), 4, 1, 1).value == pytest.approx(2.0 / 3.0)
    assert lambda_of(Rule("meamed"), 4, 1, 2).value == pytest.approx(
        (2.0 / 3.0) * np.sqrt(2.0)
    )
    # Dimension factor saturates at 2 sqrt(n - f) in high dimension.
    assert lambda_of(Rule("cwtm"), 4, 1, 10**6).value == pytest.approx(
        (1.0 / 3.0) * 2.0 * np.sqrt(3.0)
    )


def test_multi_krum_lambda_shrinks_with_q():
    base = lambda_of(Rule("krum_star"), 10, 2, 4).value
    for q in range(1, 9):
        lam = lambda_of(Rule("multi_krum_star", q=q), 10, 2, 4).value
        assert lam == pytest.approx(base * min(1.0, (10 - q) / 8.0))


def test_lambda_lower_bound():
    assert lambda_lower_bound(15, 5) == pytest.approx(0.5)
    assert lambda_lower_bound(3, 1) == pytest.approx(0.5)
    assert lambda_lower_bound(9, 0) == 0.0


def test_lambda_at_f_zero():
    for name in ("mda", "cwtm", "meamed"):
        assert lambda_of(Rule(name), 8, 0, 3).value == 0.0
    assert lambda_of(Rule("krum_star"), 8, 0, 3).value == pytest.approx(2.0)


def test_uncertified_rules_have_no_coefficient():
    for name in ("mean", "cge"):
        with pytest.raises(NoCertifiedCoefficient):
            lambda_of(Rule(name), 8, 2, 3)
    with pytest.raises(NoCertifiedCoefficient):
        lambda_of(Rule("cc"), 8, 2, 3)


# --- validation ------------------------------------------------------------


def test_f_too_large_rejected():
    X = np.zeros((4, 2))
    for fn in (
        aggregate_mda,
        aggregate_cwtm,
        aggregate_cwmed,
        aggregate_meamed,
        aggregate_krum_star,
        aggregate_gm,
    ):
        with pytest.raises(AggregationError):
            fn(X, 2)


def test_mda_budget_guard():
    with pytest.raises(AggregationError):
        aggregate_mda(np.zeros((26, 1)), 12)


def test_multi_krum_q_range():
    X = np.zeros((6, 1))
    with pytest.raises(AggregationError):
        aggregate_multi_krum_star(X, 2, q=5)
    with pytest.raises(AggregationError):
        aggregate_multi_krum_star(X, 2, q=0)


def test_rule_parameter_validation():
    with pytest.raises(AggregationError):
        Rule("nope")
    with pytest.raises(AggregationError):
        Rule("multi_krum_star")
    with pytest.raises(AggregationError):
        Rule("mda", q=2)
    with pytest.raises(AggregationError):
        Rule("cc", c_tau=0.0)


def test_lambda_of_rejects_invalid_nf():
    with pytest.raises(AggregationError):
        lambda_of(Rule("mda"), 4, 2, 1)


def test_mda_batch_matches_single_rule():
    import numpy as np
    from resam.rng import RngStream

    g = RngStream(31).generator
    Xs = g.standard_normal((40, 15, 5))
    batch = aggregate_mda_batch(Xs, 5)
    for r in range(40):
        assert np.array_equal(batch[r], aggregate_mda(Xs[r], 5))
    assert np.array_equal(aggregate_mda_batch(Xs, 0), Xs.mean(axis=1))
    with pytest.raises(AggregationError):
        aggregate_mda_batch(Xs, 8)
    with pytest.raises(AggregationError):
        aggregate_mda_batch(Xs[0], 2)
