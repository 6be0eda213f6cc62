"""Dense reference solver for PSD-constrained moment programs and box LPs.

Both problem kinds are maximizations of a linear functional over an affine
slice of a convex set, solved by the same ADMM consensus splitting: one half
step projects onto the affine rows through a cached factorization, the other
projects onto the constraint set (the PSD cone via eigendecomposition, or the
variable boxes). Inequality rows enter through slack variables and the trace
cap is one more affine row with a nonnegative slack.

Certificates never trust convergence. ``rigorous_dual_bound`` evaluates a
weak-duality expression that upper-bounds every feasible objective for *any*
equality multipliers and nonnegative inequality multipliers; a poor solve can
only loosen the bound, never invalidate it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

CONVERGED = "converged"
MAX_ITER = "max_iter"
FAILED = "failed"

_SQRT2 = float(np.sqrt(2.0))


# ---------------------------------------------------------------------------
# Symmetric-matrix vectorization. svec stacks the upper triangle row-major
# with off-diagonal entries scaled by sqrt(2), so that dot products of svec
# vectors equal Frobenius inner products of the matrices.
# ---------------------------------------------------------------------------

def svec_dim(n: int) -> int:
    return n * (n + 1) // 2


def svec(M: np.ndarray) -> np.ndarray:
    n = M.shape[0]
    iu, ju = np.triu_indices(n)
    v = M[iu, ju].astype(float)
    v[iu != ju] *= _SQRT2
    return v


def smat(v: np.ndarray, n: int) -> np.ndarray:
    iu, ju = np.triu_indices(n)
    w = np.asarray(v, dtype=float).copy()
    w[iu != ju] /= _SQRT2
    M = np.zeros((n, n))
    M[iu, ju] = w
    M[ju, iu] = w
    return M


def svec_entry(n: int, i: int, j: int) -> tuple:
    """svec position and coefficient scale for the matrix entry (i, j), i <= j.

    A linear functional ``coeff * P[i, j]`` on symmetric P contributes
    ``coeff * scale`` at the returned position of the svec coordinate vector.
    """
    if not 0 <= i <= j < n:
        raise ValueError("need 0 <= i <= j < n")
    pos = i * n - i * (i - 1) // 2 + (j - i)
    scale = 1.0 if i == j else 1.0 / _SQRT2
    return pos, scale


def rows_to_matrix(n: int, rows) -> sp.csr_matrix:
    """Assemble sparse functional rows over svec coordinates.

    Each row is a list of ``(i, j, coeff)`` triples with i <= j, meaning the
    functional sum of coeff * P[i, j].
    """
    data, indices, indptr = [], [], [0]
    for row in rows:
        for i, j, coeff in row:
            pos, scale = svec_entry(n, i, j)
            indices.append(pos)
            data.append(coeff * scale)
        indptr.append(len(data))
    return sp.csr_matrix(
        (np.array(data, float), np.array(indices, np.int64), np.array(indptr, np.int64)),
        shape=(len(indptr) - 1, svec_dim(n)),
    )


# ---------------------------------------------------------------------------
# Problem containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConicProblem:
    """Maximize <C0, P> + offset over symmetric P >= 0 with tr(P) <= trace_cap,
    subject to equality rows <A_k, P> = b_k and inequality rows <G_j, P> <= h_j.

    Coefficient rows are stored sparsely over svec coordinates; ``objective``
    is the svec of C0.
    """

    n: int
    objective: np.ndarray
    offset: float
    eq_mat: sp.csr_matrix
    eq_rhs: np.ndarray
    ineq_mat: sp.csr_matrix
    ineq_rhs: np.ndarray
    trace_cap: float

    def __post_init__(self):
        if self.trace_cap < 1.0 or not np.isfinite(self.trace_cap):
            raise ValueError("trace cap must be finite and at least 1")
        for arr in (self.objective, self.eq_rhs, self.ineq_rhs):
            if not np.all(np.isfinite(arr)):
                raise ValueError("problem data must be finite")

    @property
    def num_eq(self) -> int:
        return self.eq_rhs.shape[0]

    @property
    def num_ineq(self) -> int:
        return self.ineq_rhs.shape[0]


@dataclass(frozen=True)
class SolverSettings:
    abs_tol: float = 1e-6
    rel_tol: float = 1e-6
    max_iter: int = 20000
    relaxation: float = 1.6
    rho: float = 1.0
    adaptive_rho: bool = True
    polish_steps: int = 0

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass(frozen=True)
class SolveReport:
    """Primal iterate, row multipliers, and the rigorous dual bound.

    ``P`` is the cone-feasible iterate for matrix problems (``x`` is None);
    for box LPs ``x`` holds the variable vector instead. ``ineq_multipliers``
    are clamped nonnegative so they are always admissible for the bound.
    """

    P: np.ndarray | None
    x: np.ndarray | None
    eq_multipliers: np.ndarray
    ineq_multipliers: np.ndarray
    objective: float
    dual_bound: float
    primal_residual: float
    dual_residual: float
    iterations: int
    status: str


def psd_project(S: np.ndarray) -> np.ndarray:
    """Frobenius-nearest PSD matrix: clamp negative eigenvalues to zero."""
    S = np.asarray(S, dtype=float)
    if not np.all(np.isfinite(S)):
        raise ValueError("cannot project a non-finite matrix")
    S = 0.5 * (S + S.T)
    w, V = np.linalg.eigh(S)
    if w[0] >= 0.0:
        return S
    w = np.maximum(w, 0.0)
    X = (V * w) @ V.T
    return 0.5 * (X + X.T)


# ---------------------------------------------------------------------------
# Shared ADMM core
# ---------------------------------------------------------------------------

def _admm(M: sp.csr_matrix, q, c, cone_project, settings: SolverSettings, checkpoint=None):
    """Maximize c.x subject to M x = q and x in the set given by cone_project.

    Returns (x, z, mu, rho, iterations, status, r_prim, r_dual); z is the
    cone-feasible iterate and rho * mu estimates the row multipliers.
    ``checkpoint(mu, rho)`` is invoked periodically so callers can track the
    best dual candidate along the run.
    """
    R, D = M.shape
    MT = M.T.tocsr()
    gram = (M @ MT).toarray()
    # pinvh tolerates rank-deficient row sets (e.g. paired opposite rows).
    gram_pinv = scipy.linalg.pinvh(gram)
    q = np.asarray(q, float)
    c = np.asarray(c, float)

    z = np.zeros(D)
    u = np.zeros(D)
    mu = np.zeros(R)
    rho = settings.rho
    alpha = settings.relaxation
    sqrt_d = np.sqrt(D)
    status = MAX_ITER
    r_prim = r_dual = np.inf
    it = 0
    x = np.zeros(D)
    for it in range(1, settings.max_iter + 1):
        w = z - u + c / rho
        mu = gram_pinv @ (M @ w - q)
        x = w - MT @ mu
        xhat = alpha * x + (1.0 - alpha) * z
        z_prev = z
        z = cone_project(xhat + u)
        u = u + xhat - z
        if not np.all(np.isfinite(z)):
            status = FAILED
            break
        r_prim = np.linalg.norm(x - z)
        r_dual = rho * np.linalg.norm(z - z_prev)
        eps_prim = sqrt_d * settings.abs_tol + settings.rel_tol * max(
            np.linalg.norm(x), np.linalg.norm(z)
        )
        eps_dual = sqrt_d * settings.abs_tol + settings.rel_tol * rho * np.linalg.norm(u)
        if r_prim <= eps_prim and r_dual <= eps_dual:
            status = CONVERGED
            break
        if checkpoint is not None and it % 500 == 0:
            checkpoint(mu, rho)
        if settings.adaptive_rho and it % 25 == 0:
            if r_prim > 10.0 * r_dual and rho < 1e6:
                rho *= 2.0
                u *= 0.5
            elif r_dual > 10.0 * r_prim and rho > 1e-6:
                rho *= 0.5
                u *= 2.0
    return x, z, mu, rho, it, status, r_prim, r_dual


def rigorous_dual_bound(problem: ConicProblem, eq_multipliers, ineq_multipliers) -> float:
    """Weak-duality upper bound, valid for arbitrary admissible multipliers.

    With S = C0 - sum(nu_k A_k) - sum(lambda_j G_j), every feasible P gives
    <C0, P> <= nu.b + lambda.h + trace_cap * max(0, lambda_max(S)), because
    <S, P> <= lambda_max(S)+ * tr(P) on the PSD cone with the trace cap.
    """
    nu = np.asarray(eq_multipliers, float)
    lam = np.asarray(ineq_multipliers, float)
    if lam.size and lam.min() < 0.0:
        raise ValueError("inequality multipliers must be nonnegative")
    s = problem.objective.copy()
    if nu.size:
        s -= problem.eq_mat.T @ nu
    if lam.size:
        s -= problem.ineq_mat.T @ lam
    S = smat(s, problem.n)
    lam_max = float(scipy.linalg.eigvalsh(S)[-1])
    value = problem.trace_cap * max(0.0, lam_max) + problem.offset
    if nu.size:
        value += float(nu @ problem.eq_rhs)
    if lam.size:
        value += float(lam @ problem.ineq_rhs)
    return value


def polish_multipliers(problem: ConicProblem, eq_multipliers, ineq_multipliers, steps: int = 20):
    """Projected subgradient descent on the dual-bound expression.

    Monotone: a step is kept only if it lowers the bound, so the result is
    never worse than the input multipliers. Returns (nu, lam, bound).
    """
    nu = np.asarray(eq_multipliers, float).copy()
    lam = np.maximum(np.asarray(ineq_multipliers, float), 0.0)
    best = rigorous_dual_bound(problem, nu, lam)
    step = 1.0
    for _ in range(max(0, steps)):
        s = problem.objective.copy()
        if nu.size:
            s -= problem.eq_mat.T @ nu
        if lam.size:
            s -= problem.ineq_mat.T @ lam
        S = smat(s, problem.n)
        w, V = np.linalg.eigh(S)
        grad_nu = problem.eq_rhs.astype(float).copy()
        grad_lam = problem.ineq_rhs.astype(float).copy()
        if w[-1] > 0.0:
            top = svec(np.outer(V[:, -1], V[:, -1]))
            grad_nu -= problem.trace_cap * (problem.eq_mat @ top)
            grad_lam -= problem.trace_cap * (problem.ineq_mat @ top)
        norm = np.sqrt(float(grad_nu @ grad_nu + grad_lam @ grad_lam))
        if norm < 1e-14:
            break
        cand_nu = nu - (step / norm) * grad_nu
        cand_lam = np.maximum(lam - (step / norm) * grad_lam, 0.0)
        cand = rigorous_dual_bound(problem, cand_nu, cand_lam)
        if cand < best:
            nu, lam, best = cand_nu, cand_lam, cand
            step *= 1.5
        else:
            step *= 0.5
            if step < 1e-12:
                break
    return nu, lam, best


def solve(problem: ConicProblem, settings: SolverSettings | None = None) -> SolveReport:
    """ADMM solve of a ConicProblem; deterministic for fixed settings.

    The reported dual bound is the best rigorous bound seen across periodic
    multiplier checkpoints (every candidate is valid on its own), optionally
    improved by the polish steps.
    """
    settings = settings or SolverSettings()
    n = problem.n
    N = svec_dim(n)
    K, J = problem.num_eq, problem.num_ineq

    trace_row = sp.csr_matrix(svec(np.eye(n)))
    blocks = [
        [problem.eq_mat, sp.csr_matrix((K, J)), sp.csr_matrix((K, 1))],
        [problem.ineq_mat, sp.identity(J, format="csr"), sp.csr_matrix((J, 1))],
        [trace_row, sp.csr_matrix((1, J)), sp.identity(1, format="csr")],
    ]
    M = sp.bmat(blocks, format="csr")
    q = np.concatenate([problem.eq_rhs, problem.ineq_rhs, [problem.trace_cap]])
    c = np.concatenate([problem.objective, np.zeros(J + 1)])

    def cone_project(v):
        out = np.empty_like(v)
        out[:N] = svec(psd_project(smat(v[:N], n)))
        np.maximum(v[N:], 0.0, out=out[N:])
        return out

    best = {"nu": np.zeros(K), "lam": np.zeros(J), "bound": np.inf}

    def checkpoint(mu, rho):
        nu = rho * mu[:K]
        lam = np.maximum(rho * mu[K : K + J], 0.0)
        if not (np.all(np.isfinite(nu)) and np.all(np.isfinite(lam))):
            return
        bound = rigorous_dual_bound(problem, nu, lam)
        if bound < best["bound"]:
            best.update(nu=nu, lam=lam, bound=bound)

    x, z, mu, rho, iters, status, _, r_dual = _admm(
        M, q, c, cone_project, settings, checkpoint=checkpoint
    )
    checkpoint(mu, rho)

    P = smat(z[:N], n)
    nu, lam, bound = best["nu"], best["lam"], best["bound"]
    objective = float(problem.objective @ z[:N]) + problem.offset
    if settings.polish_steps > 0:
        nu, lam, bound = polish_multipliers(problem, nu, lam, settings.polish_steps)
    zero_bound = rigorous_dual_bound(problem, np.zeros(K), np.zeros(J))
    if zero_bound < bound:
        nu, lam, bound = np.zeros(K), np.zeros(J), zero_bound

    zsv = z[:N]
    eq_res = problem.eq_mat @ zsv - problem.eq_rhs if K else np.zeros(0)
    ineq_res = np.maximum(problem.ineq_mat @ zsv - problem.ineq_rhs, 0.0) if J else np.zeros(0)
    trace_res = max(0.0, float(np.trace(P)) - problem.trace_cap)
    primal_residual = max(
        float(np.max(np.abs(eq_res))) if K else 0.0,
        float(np.max(ineq_res)) if J else 0.0,
        trace_res,
    )

    return SolveReport(
        P=P,
        x=None,
        eq_multipliers=nu,
        ineq_multipliers=lam,
        objective=objective,
        dual_bound=bound,
        primal_residual=primal_residual,
        dual_residual=float(r_dual),
        iterations=iters,
        status=status,
    )


# ---------------------------------------------------------------------------
# Box LP path: the same splitting with the PSD projection replaced by the
# variable-box clamp. Problems are duck-typed: any object with num_vars,
# objective, offset, rows (csr), rhs, lower, upper works.
# ---------------------------------------------------------------------------

def box_dual_bound(problem, ineq_multipliers) -> float:
    """Closed-form Lagrangian bound over the variable boxes.

    For lambda >= 0 the supremum of objective.v + lambda.(rhs - rows v) over
    the box splits per coordinate into max(r_i * lo_i, r_i * hi_i) with
    r = objective - rows^T lambda; always an upper bound on the LP optimum.
    """
    lam = np.asarray(ineq_multipliers, float)
    if lam.size and lam.min() < 0.0:
        raise ValueError("inequality multipliers must be nonnegative")
    r = problem.objective.astype(float).copy()
    value = problem.offset
    if lam.size:
        r -= problem.rows.T @ lam
        value += float(lam @ problem.rhs)
    value += float(np.sum(np.maximum(r * problem.lower, r * problem.upper)))
    return value


def solve_box_lp(problem, settings: SolverSettings | None = None) -> SolveReport:
    """ADMM solve of a box-constrained LP (no PSD block)."""
    settings = settings or SolverSettings()
    p = problem.num_vars
    J = problem.rhs.shape[0]
    M = sp.bmat([[problem.rows, sp.identity(J, format="csr")]], format="csr") if J else None
    lower, upper = problem.lower, problem.upper

    if J == 0:
        # Pure box problem; the maximizer is coordinatewise.
        x = np.where(problem.objective >= 0, upper, lower).astype(float)
        obj = float(problem.objective @ x) + problem.offset
        return SolveReport(
            P=None, x=x, eq_multipliers=np.zeros(0), ineq_multipliers=np.zeros(0),
            objective=obj, dual_bound=box_dual_bound(problem, np.zeros(0)),
            primal_residual=0.0, dual_residual=0.0, iterations=0, status=CONVERGED,
        )

    q = problem.rhs
    c = np.concatenate([problem.objective, np.zeros(J)])

    def cone_project(v):
        out = np.empty_like(v)
        np.clip(v[:p], lower, upper, out=out[:p])
        np.maximum(v[p:], 0.0, out=out[p:])
        return out

    x, z, mu, rho, iters, status, _, r_dual = _admm(M, q, c, cone_project, settings)

    v = z[:p]
    lam = np.maximum(rho * mu, 0.0)
    if status == FAILED or not np.all(np.isfinite(lam)):
        lam = np.zeros(J)
    objective = float(problem.objective @ v) + problem.offset
    bound = min(box_dual_bound(problem, lam), box_dual_bound(problem, np.zeros(J)))
    row_res = np.maximum(problem.rows @ v - problem.rhs, 0.0)
    box_res = np.maximum(np.maximum(problem.lower - v, v - problem.upper), 0.0)
    primal_residual = max(
        float(np.max(row_res)) if J else 0.0,
        float(np.max(box_res)) if p else 0.0,
    )
    return SolveReport(
        P=None,
        x=v,
        eq_multipliers=np.zeros(0),
        ineq_multipliers=lam,
        objective=objective,
        dual_bound=bound,
        primal_residual=primal_residual,
        dual_residual=float(r_dual),
        iterations=iters,
        status=status,
    )
