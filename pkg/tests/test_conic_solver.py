import numpy as np
import pytest

from certikit import (
    ConicProblem,
    PerturbationRegion,
    SolverSettings,
    build_sdp,
    forward,
    interval_propagate,
    polish_multipliers,
    psd_project,
    rigorous_dual_bound,
    scalar_relu_sdp,
    solve,
    solve_box_lp,
)
from certikit.conic_solver import rows_to_matrix, smat, svec, svec_dim, svec_entry
from certikit.lp_relax import LinearProblem
import scipy.sparse as sp

from conftest import make_random_net


# ---------------------------------------------------------------------------
# svec machinery
# ---------------------------------------------------------------------------

def test_svec_roundtrip_and_inner_product():
    rng = np.random.default_rng(0)
    for n in (1, 2, 5, 8):
        A = rng.standard_normal((n, n))
        A = A + A.T
        B = rng.standard_normal((n, n))
        B = B + B.T
        assert smat(svec(A), n) == pytest.approx(A)
        assert svec(A) @ svec(B) == pytest.approx(np.sum(A * B))
        assert svec(A).shape == (svec_dim(n),)


def test_svec_entry_selects_single_entry():
    rng = np.random.default_rng(1)
    n = 4
    P = rng.standard_normal((n, n))
    P = P + P.T
    for i in range(n):
        for j in range(i, n):
            pos, scale = svec_entry(n, i, j)
            row = np.zeros(svec_dim(n))
            row[pos] = scale
            assert row @ svec(P) == pytest.approx(P[i, j])


# ---------------------------------------------------------------------------
# psd_project
# ---------------------------------------------------------------------------

def test_psd_project_fixed_point():
    rng = np.random.default_rng(2)
    A = rng.standard_normal((5, 5))
    S = A @ A.T  # PSD
    assert np.linalg.norm(psd_project(S) - S, "fro") <= 1e-12


def test_psd_project_clamps_negative_eigenvalue():
    assert psd_project(np.diag([1.0, -1.0])) == pytest.approx(np.diag([1.0, 0.0]))


def test_psd_project_is_nearest():
    rng = np.random.default_rng(3)
    S = rng.standard_normal((4, 4))
    S = S + S.T
    proj = psd_project(S)
    dist = np.linalg.norm(S - proj, "fro")
    for _ in range(100):
        A = rng.standard_normal((4, 4))
        Z = A @ A.T
        assert dist <= np.linalg.norm(S - Z, "fro") + 1e-12


def test_psd_project_idempotent_and_symmetric():
    rng = np.random.default_rng(4)
    S = rng.standard_normal((6, 6))
    S = S + S.T
    proj = psd_project(S)
    assert proj == pytest.approx(proj.T)
    assert psd_project(proj) == pytest.approx(proj, abs=1e-12)
    with pytest.raises(ValueError):
        psd_project(np.array([[np.nan, 0.0], [0.0, 1.0]]))


# ---------------------------------------------------------------------------
# conic solve
# ---------------------------------------------------------------------------

def _trivial_problem():
    return ConicProblem(
        n=1,
        objective=np.array([1.0]),
        offset=0.0,
        eq_mat=rows_to_matrix(1, [[(0, 0, 1.0)]]),
        eq_rhs=np.array([1.0]),
        ineq_mat=rows_to_matrix(1, []),
        ineq_rhs=np.zeros(0),
        trace_cap=1.0,
    )


def test_solve_trivial_problem():
    rep = solve(_trivial_problem())
    assert rep.objective == pytest.approx(1.0, abs=1e-5)
    assert rep.dual_bound == pytest.approx(1.0, abs=1e-6)
    assert rep.status == "converged"


def test_solve_degenerate_scalar_relu():
    rep = solve(scalar_relu_sdp(0.5, 0.5), SolverSettings(abs_tol=1e-9, rel_tol=1e-9))
    assert rep.objective == pytest.approx(0.5, abs=1e-6)
    assert rep.dual_bound == pytest.approx(0.5, abs=1e-6)


def test_solve_two_unit_instance_primal_dual_agree(two_unit_instance):
    net, region = two_unit_instance
    lb = interval_propagate(net, region)
    problem = build_sdp(net, lb, np.ones(2))
    rep = solve(problem, SolverSettings(abs_tol=1e-8, rel_tol=1e-8, max_iter=100000))
    assert rep.status == "converged"
    assert 2.0 <= rep.dual_bound < 3.0
    assert abs(rep.dual_bound - rep.objective) <= 1e-4


def test_solve_is_deterministic(two_unit_instance):
    net, region = two_unit_instance
    lb = interval_propagate(net, region)
    problem = build_sdp(net, lb, np.ones(2))
    r1 = solve(problem)
    r2 = solve(problem)
    assert np.array_equal(r1.P, r2.P)
    assert r1.objective == r2.objective
    assert r1.dual_bound == r2.dual_bound
    assert r1.iterations == r2.iterations


def test_gap_invariant_at_convergence():
    settings = SolverSettings()
    for prob in (_trivial_problem(), scalar_relu_sdp(-1.0, 1.0), scalar_relu_sdp(0.5, 0.5)):
        rep = solve(prob, settings)
        assert rep.status == "converged"
        gap_tol = max(settings.abs_tol, settings.rel_tol * abs(rep.objective)) * 10
        assert rep.dual_bound >= rep.objective - gap_tol


def test_max_iter_report_still_bounds():
    prob = scalar_relu_sdp(-1.0, 1.0)
    rep = solve(prob, SolverSettings(max_iter=10))
    assert rep.status == "max_iter"
    # a truncated run may be loose but never invalid: the optimum is 1
    assert rep.dual_bound >= 1.0 - 1e-9


# ---------------------------------------------------------------------------
# rigorous dual bound
# ---------------------------------------------------------------------------

def test_dual_bound_zero_multipliers_formula():
    prob = scalar_relu_sdp(-1.0, 1.0)
    C0 = smat(prob.objective, 3)
    lam_max = float(np.linalg.eigvalsh(C0)[-1])
    expected = prob.trace_cap * max(0.0, lam_max)
    got = rigorous_dual_bound(prob, np.zeros(prob.num_eq), np.zeros(prob.num_ineq))
    assert got == pytest.approx(expected)


def test_dual_bound_rejects_negative_multipliers():
    prob = scalar_relu_sdp(-1.0, 1.0)
    lam = np.zeros(prob.num_ineq)
    lam[0] = -0.5
    with pytest.raises(ValueError):
        rigorous_dual_bound(prob, np.zeros(prob.num_eq), lam)


def test_weak_duality_against_rank1_points():
    rng = np.random.default_rng(5)
    net = make_random_net(rng, d=2, hidden=(3,), k=2)
    region = PerturbationRegion(rng.standard_normal(2) * 0.3, 0.2)
    lb = interval_propagate(net, region)
    objvec = net.class_matrix[0] - net.class_matrix[1]
    problem = build_sdp(net, lb, objvec)

    feas_objs = []
    for _ in range(20):
        x = rng.uniform(region.lower, region.upper)
        acts = forward(net, x)
        v = np.concatenate([[1.0], *acts.x])
        feas_objs.append(float(problem.objective @ svec(np.outer(v, v))))
    best_feas = max(feas_objs)

    for _ in range(100):
        nu = rng.standard_normal(problem.num_eq)
        lam = np.abs(rng.standard_normal(problem.num_ineq))
        assert rigorous_dual_bound(problem, nu, lam) >= best_feas - 1e-7


def test_polish_never_worsens_the_bound():
    prob = scalar_relu_sdp(-2.0, 1.5)
    rep = solve(prob, SolverSettings(max_iter=300))
    before = rigorous_dual_bound(prob, rep.eq_multipliers, rep.ineq_multipliers)
    _, _, after = polish_multipliers(prob, rep.eq_multipliers, rep.ineq_multipliers, steps=50)
    assert after <= before + 1e-12


# ---------------------------------------------------------------------------
# box LP path
# ---------------------------------------------------------------------------

def _tiny_lp():
    # maximize x1 + x2 with x1 + x2 <= 1 on the unit box
    rows = sp.csr_matrix(np.array([[1.0, 1.0]]))
    return LinearProblem(
        num_vars=2,
        objective=np.array([1.0, 1.0]),
        offset=0.0,
        rows=rows,
        rhs=np.array([1.0]),
        lower=np.zeros(2),
        upper=np.ones(2),
        var_index={(0, 0): 0, (0, 1): 1},
    )


def test_solve_box_lp_known_optimum():
    rep = solve_box_lp(_tiny_lp(), SolverSettings(abs_tol=1e-9, rel_tol=1e-9))
    assert rep.objective == pytest.approx(1.0, abs=1e-6)
    assert rep.dual_bound == pytest.approx(1.0, abs=1e-6)
    assert rep.dual_bound >= 1.0 - 1e-9


def test_solve_box_lp_no_rows():
    lp = LinearProblem(
        num_vars=2,
        objective=np.array([2.0, -1.0]),
        offset=0.5,
        rows=sp.csr_matrix((0, 2)),
        rhs=np.zeros(0),
        lower=np.array([-1.0, -1.0]),
        upper=np.array([1.0, 1.0]),
        var_index={},
    )
    rep = solve_box_lp(lp)
    assert rep.objective == pytest.approx(2.0 + 1.0 + 0.5)
    assert rep.dual_bound == pytest.approx(rep.objective)
