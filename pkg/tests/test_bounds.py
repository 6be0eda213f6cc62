import numpy as np
import pytest

from certikit import (
    PerturbationRegion,
    ReluNetwork,
    forward,
    interval_propagate,
    split_pos_neg,
)
from conftest import make_random_net


def test_split_pos_neg_hand_case():
    plus, minus = split_pos_neg(np.array([[1.0, -2.0]]))
    assert np.array_equal(plus, [[1.0, 0.0]])
    assert np.array_equal(minus, [[0.0, -2.0]])


def test_split_pos_neg_zero():
    plus, minus = split_pos_neg(np.zeros((2, 3)))
    assert not plus.any() and not minus.any()


def test_split_pos_neg_reconstruction():
    rng = np.random.default_rng(0)
    for _ in range(20):
        M = rng.standard_normal((4, 5))
        plus, minus = split_pos_neg(M)
        assert np.array_equal(plus + minus, M)
        assert np.all(plus >= 0.0) and np.all(minus <= 0.0)


def test_region_validation():
    with pytest.raises(ValueError):
        PerturbationRegion(np.zeros(2), -0.1)
    with pytest.raises(ValueError):
        PerturbationRegion(np.array([np.nan, 0.0]), 0.1)


def test_degenerate_region_reproduces_forward():
    rng = np.random.default_rng(1)
    net = make_random_net(rng, d=3, hidden=(4, 2), k=2)
    x = rng.standard_normal(3)
    lb = interval_propagate(net, PerturbationRegion(x, 0.0))
    acts = forward(net, x)
    for xi, lo, hi in zip(acts.x, lb.lower, lb.upper):
        assert lo == pytest.approx(xi, abs=1e-12)
        assert hi == pytest.approx(xi, abs=1e-12)


def test_hand_case_single_unit():
    net = ReluNetwork(
        weights=(np.array([[1.0, -1.0]]),),
        biases=(np.zeros(1),),
        class_matrix=np.array([[1.0], [0.0]]),
        class_bias=np.zeros(2),
    )
    lb = interval_propagate(net, PerturbationRegion(np.zeros(2), 0.1))
    assert lb.pre_lower[0] == pytest.approx([-0.2])
    assert lb.pre_upper[0] == pytest.approx([0.2])
    assert lb.lower[1] == pytest.approx([0.0])
    assert lb.upper[1] == pytest.approx([0.2])


def test_soundness_by_sampling():
    rng = np.random.default_rng(2)
    for _ in range(5):
        net = make_random_net(rng, d=3, hidden=(4, 3), k=2)
        center = rng.standard_normal(3)
        region = PerturbationRegion(center, 0.3)
        lb = interval_propagate(net, region)
        for _ in range(200):
            x = rng.uniform(region.lower, region.upper)
            acts = forward(net, x)
            for xi, lo, hi in zip(acts.x, lb.lower, lb.upper):
                assert np.all(xi >= lo - 1e-12)
                assert np.all(xi <= hi + 1e-12)


def test_monotone_in_radius():
    rng = np.random.default_rng(3)
    net = make_random_net(rng, d=3, hidden=(4, 2), k=2)
    center = rng.standard_normal(3)
    small = interval_propagate(net, PerturbationRegion(center, 0.1))
    large = interval_propagate(net, PerturbationRegion(center, 0.3))
    for lo_s, hi_s, lo_l, hi_l in zip(small.lower, small.upper, large.lower, large.upper):
        assert np.all(lo_l <= lo_s + 1e-12)
        assert np.all(hi_l >= hi_s - 1e-12)


def test_clamping_relations():
    rng = np.random.default_rng(4)
    net = make_random_net(rng, d=3, hidden=(5, 4), k=2)
    lb = interval_propagate(net, PerturbationRegion(rng.standard_normal(3), 0.4))
    for i in range(1, len(lb.lower)):
        assert np.array_equal(lb.lower[i], np.maximum(lb.pre_lower[i - 1], 0.0))
        assert np.array_equal(lb.upper[i], np.maximum(lb.pre_upper[i - 1], 0.0))


def test_dimension_mismatch():
    rng = np.random.default_rng(5)
    net = make_random_net(rng, d=3, hidden=(2,), k=2)
    with pytest.raises(ValueError):
        interval_propagate(net, PerturbationRegion(np.zeros(4), 0.1))
