from __future__ import annotations

import numpy as np
import pytest

from resam.rng import RngStream, _splitmix64


def test_same_seed_and_stream_replay_identically():
    a = RngStream(123, 7).generator.standard_normal(64)
    b = RngStream(123, 7).generator.standard_normal(64)
    assert np.array_equal(a, b)


def test_different_streams_differ():
    a = RngStream(123, 0).generator.standard_normal(64)
    b = RngStream(123, 1).generator.standard_normal(64)
    assert not np.array_equal(a, b)


def test_split_is_pure_and_deterministic():
    root = RngStream(5, 0)
    c1 = root.split(3)
    c2 = root.split(3)
    assert c1.stream_id == c2.stream_id
    assert np.array_equal(
        c1.generator.standard_normal(8), c2.generator.standard_normal(8)
    )


def test_split_does_not_advance_parent():
    root = RngStream(5, 0)
    before = RngStream(5, 0).generator.standard_normal(8)
    root.split(1)
    root.split(2)
    assert np.array_equal(root.generator.standard_normal(8), before)


def test_sibling_splits_are_distinct():
    root = RngStream(5, 0)
    ids = {root.split(k).stream_id for k in range(1000)}
    assert len(ids) == 1000


def test_nested_splits_are_order_sensitive():
    root = RngStream(5, 0)
    assert root.split(1).split(2).stream_id != root.split(2).split(1).stream_id


def test_splitmix_is_a_bijection_sample():
    xs = [_splitmix64(x) for x in range(4096)]
    assert len(set(xs)) == 4096


def test_frozen_draws_are_stable():
    # Guard against platform or library drift in the generator pipeline.
    g = RngStream(2024, 1).generator
    got = g.standard_normal(3)
    assert got == pytest.approx(
        [0.2769563760080999, -0.8944725437372066, -0.7733786892031456], abs=0.0
    )


def test_seed_type_checked():
    with pytest.raises(TypeError):
        RngStream("7")
