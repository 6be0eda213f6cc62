import numpy as np
import pytest

from certikit import (
    PatternBudgetError,
    PerturbationRegion,
    ReluNetwork,
    SolverSettings,
    build_lp,
    class_margin,
    exact_margin_bruteforce,
    gap_experiment,
    interval_propagate,
    lp_l1_lower_bound,
    lp_upper_bound,
    operator_norm,
    random_sign_matrix,
    sdp_upper_bound,
    solve_box_lp,
    spectral_sdp_bound,
)
from certikit.sdp_relax import SdpOptions
from conftest import make_random_net

TIGHT = SolverSettings(abs_tol=1e-9, rel_tol=1e-9, max_iter=100000)


# ---------------------------------------------------------------------------
# random sign matrices and the operator norm
# ---------------------------------------------------------------------------

def test_sign_matrix_entries_and_determinism():
    M = random_sign_matrix(16, 16, seed=3)
    assert set(np.unique(M)) <= {-1.0, 1.0}
    assert np.array_equal(M, random_sign_matrix(16, 16, seed=3))
    assert not np.array_equal(M, random_sign_matrix(16, 16, seed=4))


def test_sign_matrix_mean_is_small():
    means = [random_sign_matrix(32, 32, seed=s).mean() for s in range(10)]
    assert all(abs(m) <= 4 / np.sqrt(32 * 32) for m in means)


def test_operator_norm_diagonal_and_identity():
    assert operator_norm(np.array([[3.0, 0.0], [0.0, 4.0]])) == pytest.approx(4.0)
    assert operator_norm(np.eye(7)) == pytest.approx(1.0)
    assert operator_norm(np.zeros((3, 3))) == 0.0


def test_operator_norm_against_svd():
    rng = np.random.default_rng(0)
    for _ in range(20):
        M = rng.standard_normal((rng.integers(2, 7), rng.integers(2, 7)))
        exact = float(np.linalg.norm(M, 2))
        assert operator_norm(M, tol=1e-12) == pytest.approx(exact, rel=1e-8)


# ---------------------------------------------------------------------------
# analytic bounds
# ---------------------------------------------------------------------------

def test_l1_lower_bound_values():
    assert lp_l1_lower_bound(random_sign_matrix(5, 8, seed=0)) == 20.0
    assert lp_l1_lower_bound(np.zeros((3, 3))) == 0.0


def test_solved_lp_at_least_l1_bound():
    for seed in range(20):
        W = random_sign_matrix(5, 5, seed=seed)
        net = ReluNetwork(
            weights=(W,),
            biases=(np.zeros(5),),
            class_matrix=np.vstack([np.ones(5), np.zeros(5)]),
            class_bias=np.zeros(2),
        )
        lb = interval_propagate(net, PerturbationRegion(np.zeros(5), 1.0))
        rep = solve_box_lp(build_lp(net, lb, np.ones(5)), TIGHT)
        assert rep.objective >= lp_l1_lower_bound(W) - 1e-6


def test_spectral_bound_identity():
    d = 5
    assert spectral_sdp_bound(np.eye(d), np.ones(d), d) == pytest.approx(d)


def test_spectral_bound_uses_power_iteration_value():
    W = random_sign_matrix(10, 10, seed=1)
    c = np.ones(10)
    expected = np.sqrt(10) * operator_norm(W) * np.sqrt(10)
    assert spectral_sdp_bound(W, c, 10) == pytest.approx(expected, rel=1e-8)


def test_solved_sdp_below_spectral_bound():
    for seed in range(5):
        W = random_sign_matrix(4, 4, seed=seed)
        c = np.ones(4)
        net = ReluNetwork(
            weights=(W,),
            biases=(np.zeros(4),),
            class_matrix=np.vstack([c, np.zeros(4)]),
            class_bias=np.zeros(2),
        )
        region = PerturbationRegion(np.zeros(4), 1.0)
        res = sdp_upper_bound(net, region, 0, 1, opts=SdpOptions(solver=TIGHT))
        assert res.certified_upper_bound <= spectral_sdp_bound(W, c, 4) + 1e-5


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------

def test_bruteforce_degenerate_region_is_clean_margin():
    rng = np.random.default_rng(2)
    net = make_random_net(rng, d=3, hidden=(4,), k=3)
    x = rng.standard_normal(3)
    got = exact_margin_bruteforce(net, PerturbationRegion(x, 0.0), 2, 0)
    assert got == pytest.approx(class_margin(net, x, 2, 0), abs=1e-9)


def test_bruteforce_two_unit_instance(two_unit_instance):
    net, region = two_unit_instance
    assert exact_margin_bruteforce(net, region, 0, 1) == pytest.approx(2.0, abs=1e-9)
    # cross-check with a fine grid at d = 2
    grid = np.linspace(-1, 1, 201)
    vals = [
        class_margin(net, np.array([a, b]), 0, 1) for a in grid for b in grid
    ]
    assert max(vals) == pytest.approx(2.0, abs=1e-9)


def test_bruteforce_dominates_sampling():
    rng = np.random.default_rng(3)
    for _ in range(50):
        net = make_random_net(rng, d=2, hidden=(4,), k=2)
        region = PerturbationRegion(rng.standard_normal(2) * 0.5, 0.3)
        exact = exact_margin_bruteforce(net, region, 0, 1)
        # vectorized batch evaluation of the margin on 10^5 samples
        X = rng.uniform(region.lower, region.upper, size=(100000, 2))
        H = np.maximum(X @ net.weights[0].T + net.biases[0], 0.0)
        diff = net.class_matrix[0] - net.class_matrix[1]
        margins = H @ diff + net.class_bias[0] - net.class_bias[1]
        assert exact >= margins.max() - 1e-9


def test_bruteforce_covers_grid_on_small_inputs():
    rng = np.random.default_rng(4)
    net = make_random_net(rng, d=2, hidden=(3, 2), k=2)
    region = PerturbationRegion(rng.standard_normal(2) * 0.3, 0.25)
    exact = exact_margin_bruteforce(net, region, 0, 1)
    grid = np.linspace(region.lower[0], region.upper[0], 41)
    grid2 = np.linspace(region.lower[1], region.upper[1], 41)
    best_grid = max(
        class_margin(net, np.array([a, b]), 0, 1) for a in grid for b in grid2
    )
    lp = lp_upper_bound(net, region, 0, 1, settings=TIGHT)
    assert best_grid - 1e-9 <= exact <= lp.certified_upper_bound + 1e-7


def test_bruteforce_budget():
    rng = np.random.default_rng(5)
    net = make_random_net(rng, d=2, hidden=(9, 8), k=2)
    with pytest.raises(PatternBudgetError):
        exact_margin_bruteforce(net, PerturbationRegion(np.zeros(2), 0.1), 0, 1)


# ---------------------------------------------------------------------------
# gap experiment
# ---------------------------------------------------------------------------

def test_gap_experiment_small():
    table = gap_experiment([4], trials=3, seed=0)
    assert len(table.rows) == 3
    for row in table.rows:
        assert row.f_lp >= 8.0 - 1e-6
        assert row.f_sdp <= row.spectral_bound + 1e-5
        assert np.isfinite(row.normalized_ratio)
    assert np.isfinite(table.gamma_hat)
    assert table.check_invariants() == []


def test_gap_experiment_deterministic():
    t1 = gap_experiment([4], trials=2, seed=9)
    t2 = gap_experiment([4], trials=2, seed=9)
    assert t1.to_csv() == t2.to_csv()


def test_gap_table_csv_shape():
    table = gap_experiment([4], trials=2, seed=1)
    csv_text = table.to_csv()
    lines = csv_text.strip().split("\n")
    assert lines[0] == "m,d,seed,f_lp,lp_lower_bound,f_sdp,spectral_bound,normalized_ratio"
    assert len(lines) == 3
    for line in lines[1:]:  # plain decimal fields that parse back exactly
        for field in line.split(",")[3:]:
            assert repr(float(field)) == field


def test_gap_experiment_enforcement():
    table = gap_experiment([4], trials=1, seed=2, enforce=False)
    bad = table.rows[0].__class__(
        m=4, d=4, seed=0, f_lp=1.0, lp_lower_bound=8.0, f_sdp=0.5,
        spectral_bound=10.0, normalized_ratio=0.1,
    )
    assert type(table)(rows=(bad,)).check_invariants() != []
    with pytest.raises(ValueError):
        gap_experiment([0], trials=1, seed=0)
    with pytest.raises(ValueError):
        gap_experiment([4], trials=0, seed=0)
