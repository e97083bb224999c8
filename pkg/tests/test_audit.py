from __future__ import annotations

import json

import numpy as np
import pytest

from resam.aggregation import AggregationError, Rule, lambda_lower_bound, lambda_of
from resam.audit import (
    GENERATORS,
    AuditInstance,
    cge_counterexample,
    check_instance,
    lower_bound_instance,
    randomized_audit,
)
from resam.rng import RngStream


def test_check_instance_passes_exact_rule_on_its_own_example():
    # CWTM on (0, 0, 1) with f=1 sits exactly on the certified boundary
    # for the mixed subset: deviation 0.5 == lambda * diameter.
    inst = AuditInstance(xs=np.array([[0.0], [0.0], [1.0]]), f=1)
    lam = lambda_of(Rule("cwtm"), 3, 1, 1).value
    res = check_instance(Rule("cwtm"), inst, lam)
    assert res.ok
    assert res.worst_ratio == pytest.approx(0.5)


def test_check_instance_flags_mean():
    # The plain average violates any small coefficient under one outlier.
    X = np.vstack([np.zeros((4, 1)), [[100.0]]])
    inst = AuditInstance(xs=X, f=1)
    res = check_instance(Rule("mean"), inst, 0.1)
    assert not res.ok


def test_check_instance_zero_diameter_requires_exactness():
    X = np.vstack([np.full((3, 1), 2.0), [[1.0]]])
    inst = AuditInstance(xs=X, f=1)
    # CGE output is (2+2+1)/3 != 2 while the honest subset has diameter 0,
    # so no finite coefficient can save it.
    res = check_instance(Rule("cge"), inst, 10.0**6)
    assert not res.ok
    assert res.worst_subset == (0, 1, 2)


def test_check_instance_monotone_in_lambda():
    g = RngStream(11).generator
    X = g.standard_normal((6, 2))
    inst = AuditInstance(xs=X, f=2)
    res = check_instance(Rule("mean"), inst, 0.0, tol=1e-12)
    assert not res.ok
    loose = check_instance(Rule("mean"), inst, res.worst_ratio + 1e-6, tol=1e-12)
    assert loose.ok


def test_check_instance_enumeration_guard():
    inst = AuditInstance(xs=np.zeros((30, 1)), f=14)
    with pytest.raises(AggregationError):
        check_instance(Rule("cwmed"), inst, 1.0)


def test_lower_bound_instance_shape():
    inst = lower_bound_instance(5, 2)
    assert inst.xs.shape == (5, 1)
    assert list(inst.xs.ravel()) == [0.0, 0.0, 0.0, 1.0, 1.0]


def test_lower_bound_pins_rules_to_zero_and_ratio():
    for n, f in [(3, 1), (5, 2), (8, 3)]:
        inst = lower_bound_instance(n, f)
        for rule in (
            Rule("mda"),
            Rule("cwtm"),
            Rule("cwmed"),
            Rule("meamed"),
            Rule("krum_star"),
            Rule("multi_krum_star", q=n - f),
        ):
            from resam.aggregation import aggregate

            out = aggregate(rule, inst.xs, f)
            assert np.all(out == 0.0), (rule.name, n, f, out)
            res = check_instance(rule, inst, lambda_of(rule, n, f, 1).value)
            assert res.ok
            assert res.worst_ratio == pytest.approx(
                lambda_lower_bound(n, f), abs=1e-12
            )


def test_lower_bound_instance_rejects_f_zero():
    with pytest.raises(AggregationError):
        lower_bound_instance(4, 0)


def test_cge_counterexample_violates_any_coefficient():
    for n in range(3, 9):
        for f in range(1, (n - 1) // 2 + 1):
            inst = cge_counterexample(n, f)
            res = check_instance(Rule("cge"), inst, 10.0**6)
            assert not res.ok, (n, f)


def test_cge_counterexample_pinned_values():
    from resam.aggregation import aggregate_cge

    assert aggregate_cge(cge_counterexample(4, 1).xs, 1) == pytest.approx([5.0 / 3.0])
    assert aggregate_cge(cge_counterexample(5, 2).xs, 2) == pytest.approx([1.0])


def test_generators_deterministic_and_shaped():
    for name, gen in GENERATORS.items():
        a = gen(RngStream(4, 9), 6, 2, 3)
        b = gen(RngStream(4, 9), 6, 2, 3)
        assert a.shape == (6, 3), name
        assert np.array_equal(a, b), name
        assert np.all(np.isfinite(a)), name


def test_randomized_audit_clean_for_certified_rule():
    rep = randomized_audit(Rule("meamed"), 6, 2, 2, trials=300, rng=RngStream(7))
    assert rep.violations == 0
    assert not rep.violated
    assert 0 < rep.lambda_empirical <= rep.lambda_claimed


def test_randomized_audit_reproducible():
    a = randomized_audit(Rule("cwmed"), 5, 2, 2, trials=120, rng=RngStream(3))
    b = randomized_audit(Rule("cwmed"), 5, 2, 2, trials=120, rng=RngStream(3))
    assert a.lambda_empirical == b.lambda_empirical
    assert a.worst_xs == b.worst_xs


def test_randomized_audit_flags_mean():
    rep = randomized_audit(
        Rule("mean"), 5, 2, 1, trials=60, rng=RngStream(0), lambda_claimed=0.05
    )
    assert rep.violated
    assert rep.worst_xs is not None


def test_randomized_audit_measurement_mode():
    rep = randomized_audit(
        Rule("krum_star"), 5, 1, 2, trials=60, rng=RngStream(1), lambda_claimed=None
    )
    assert rep.lambda_claimed is None
    assert rep.lambda_empirical > 0


def test_audit_report_json_roundtrip():
    rep = randomized_audit(Rule("mda"), 4, 1, 1, trials=30, rng=RngStream(5))
    payload = json.loads(rep.to_json())
    assert payload["schema_version"] == 1
    assert payload["rule"] == "mda"
    assert payload["violated"] is False
    assert payload["trials"] == 30


def test_unknown_generator_rejected():
    with pytest.raises(AggregationError):
        randomized_audit(
            Rule("mda"), 4, 1, 1, trials=10, rng=RngStream(0), generators=["nope"]
        )
