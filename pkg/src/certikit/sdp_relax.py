"""Semidefinite relaxation of the worst-case margin.

The ReLU constraint z = max(p, 0) is equivalent to the linear/quadratic
system z >= 0, z >= p, z(z - p) = 0. Stacking all layer activations into
v = (1, x^0, ..., x^L) and relaxing the rank-one matrix vv^T to a PSD moment
matrix P turns those constraints into linear functionals of P: the quadratic
ReLU identity becomes diag(P[x^i x^i^T]) = diag(W P[x^{i-1} x^i^T]) plus the
bias term, and each interval bound l <= x <= u becomes the quadratic row
diag(P[x x^T]) <= (l + u) * P[x] - l * u. The quadratic rows on every block
imply P[x_j^2] <= max(l_j^2, u_j^2), which yields an explicit trace cap and
with it a closed-form rigorous dual bound (conic_solver.rigorous_dual_bound).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import conic_solver
from .bounds import LayerBounds, PerturbationRegion, interval_propagate
from .conic_solver import ConicProblem, SolverSettings, rows_to_matrix, svec, svec_dim
from .network import Activations, ReluNetwork, _check_classes
from .results import (
    STATUS_CONVERGED,
    STATUS_MAX_ITER,
    STATUS_SOLVER_FAILED,
    BoundResult,
)


@dataclass(frozen=True)
class MomentIndexMap:
    """Coordinate layout of v = (1, x^0, ..., x^L) inside the moment matrix."""

    n: int
    layer_offsets: tuple
    layer_sizes: tuple

    const_index = 0

    def index(self, layer: int, unit: int) -> int:
        if not 0 <= unit < self.layer_sizes[layer]:
            raise IndexError(f"unit {unit} out of range for layer {layer}")
        return self.layer_offsets[layer] + unit

    def block(self, layer: int) -> slice:
        off = self.layer_offsets[layer]
        return slice(off, off + self.layer_sizes[layer])


def moment_index_map(net: ReluNetwork) -> MomentIndexMap:
    """Dimension n = 1 + sum of layer sizes, with the constant coordinate first."""
    if net.depth == 0:
        raise ValueError("moment relaxation requires at least one hidden layer")
    sizes = net.layer_sizes
    offsets = tuple(int(v) for v in np.concatenate([[1], 1 + np.cumsum(sizes)[:-1]]))
    return MomentIndexMap(n=1 + int(sum(sizes)), layer_offsets=offsets, layer_sizes=sizes)


@dataclass(frozen=True)
class SdpOptions:
    """Relaxation strength switches and the solver settings handle.

    Turning ``include_intermediate_quadratic`` off drops the quadratic
    interval rows on hidden blocks 1..L-1 (keeping only the input block),
    which empirically inflates the bound dramatically on deeper networks.
    ``include_last_layer_quadratic`` controls the same rows on block L.
    """

    include_intermediate_quadratic: bool = True
    include_last_layer_quadratic: bool = True
    solver: SolverSettings = field(default_factory=SolverSettings)


def _interval_rows(eq_rows, eq_rhs, ineq_rows, ineq_rhs, offset, lo, hi):
    # (x_j - l_j)(x_j - u_j) <= 0  as  P[x_j^2] - (l_j + u_j) P[x_j] <= -l_j u_j.
    # A collapsed interval (l_j = u_j) pins the coordinate: the quadratic row
    # together with P >= 0 forces P[x_j] = l_j and P[x_j^2] = l_j^2 anyway,
    # and stating the pins as equalities keeps the dual well-behaved where
    # the inequality form has an empty interior.
    for j in range(lo.shape[0]):
        xi = offset + j
        if lo[j] == hi[j]:
            eq_rows.append([(0, xi, 1.0)])
            eq_rhs.append(lo[j])
            eq_rows.append([(xi, xi, 1.0)])
            eq_rhs.append(lo[j] * lo[j])
        else:
            ineq_rows.append([(xi, xi, 1.0), (0, xi, -(lo[j] + hi[j]))])
            ineq_rhs.append(-lo[j] * hi[j])


def build_sdp(
    net: ReluNetwork,
    lb: LayerBounds,
    objvec,
    opts: SdpOptions | None = None,
) -> ConicProblem:
    """Assemble the multi-layer moment relaxation as a ConicProblem.

    Per layer i = 1..L with z = x^i, x = x^{i-1}, weights (W, b):
      P[z] >= 0,  P[z] >= W P[x] + b,
      diag(P[z z^T]) = diag(W P[x z^T]) + b * P[z],
      quadratic interval rows on block i-1 (and on block L per options),
    plus P[1,1] = 1, P >= 0, and the trace cap
    1 + sum_j max(l_j^2, u_j^2) over all blocks.
    """
    opts = opts or SdpOptions()
    imap = moment_index_map(net)
    L = net.depth
    if len(lb.lower) != L + 1:
        raise ValueError("layer bounds do not cover every layer")
    objvec = np.asarray(objvec, dtype=float)
    if objvec.shape != (imap.layer_sizes[-1],):
        raise ValueError(
            f"objective has shape {objvec.shape}, expected ({imap.layer_sizes[-1]},)"
        )

    eq_rows, eq_rhs = [[(0, 0, 1.0)]], [1.0]
    ineq_rows, ineq_rhs = [], []

    for i in range(1, L + 1):
        W, b = net.weights[i - 1], net.biases[i - 1]
        x_off, z_off = imap.layer_offsets[i - 1], imap.layer_offsets[i]
        for j in range(W.shape[0]):
            zi = z_off + j
            w_entries = [(x_off + r, W[j, r]) for r in range(W.shape[1]) if W[j, r] != 0.0]
            # P[z_j] >= 0
            ineq_rows.append([(0, zi, -1.0)])
            ineq_rhs.append(0.0)
            # W_j P[x] + b_j - P[z_j] <= 0
            ineq_rows.append([(0, xi, c) for xi, c in w_entries] + [(0, zi, -1.0)])
            ineq_rhs.append(-b[j])
            # P[z_j^2] - sum_r W_jr P[x_r z_j] - b_j P[z_j] = 0
            row = [(zi, zi, 1.0)]
            for xi, c in w_entries:
                row.append((min(xi, zi), max(xi, zi), -c))
            if b[j] != 0.0:
                row.append((0, zi, -b[j]))
            eq_rows.append(row)
            eq_rhs.append(0.0)

    quad_blocks = [0]
    if opts.include_intermediate_quadratic:
        quad_blocks.extend(range(1, L))
    if opts.include_last_layer_quadratic:
        quad_blocks.append(L)
    for blk in quad_blocks:
        _interval_rows(
            eq_rows, eq_rhs, ineq_rows, ineq_rhs,
            imap.layer_offsets[blk], lb.lower[blk], lb.upper[blk],
        )

    trace_cap = 1.0 + float(
        sum(np.sum(np.maximum(lo**2, hi**2)) for lo, hi in zip(lb.lower, lb.upper))
    )

    objective = np.zeros(svec_dim(imap.n))
    z_off = imap.layer_offsets[-1]
    for j, coeff in enumerate(objvec):
        if coeff != 0.0:
            pos, scale = conic_solver.svec_entry(imap.n, 0, z_off + j)
            objective[pos] = coeff * scale

    return ConicProblem(
        n=imap.n,
        objective=objective,
        offset=0.0,
        eq_mat=rows_to_matrix(imap.n, eq_rows),
        eq_rhs=np.array(eq_rhs, float),
        ineq_mat=rows_to_matrix(imap.n, ineq_rows),
        ineq_rhs=np.array(ineq_rhs, float),
        trace_cap=trace_cap,
    )


def scalar_relu_sdp(l: float, u: float) -> ConicProblem:
    """Moment relaxation of max z s.t. z = ReLU(x), l <= x <= u, on v = (1, x, z).

    Rows: z >= 0, z >= x, the quadratic identity P[z^2] = P[xz], and the input
    interval row; the trace cap follows from the intervals of x and ReLU(x).
    """
    l, u = float(l), float(u)
    if l > u:
        raise ValueError(f"interval endpoints out of order: l={l} > u={u}")
    eq_rows = [[(0, 0, 1.0)], [(2, 2, 1.0), (1, 2, -1.0)]]
    eq_rhs = [1.0, 0.0]
    ineq_rows = [
        [(0, 2, -1.0)],
        [(0, 1, 1.0), (0, 2, -1.0)],
        [(1, 1, 1.0), (0, 1, -(l + u))],
    ]
    ineq_rhs = [0.0, 0.0, -l * u]
    objective = np.zeros(svec_dim(3))
    pos, scale = conic_solver.svec_entry(3, 0, 2)
    objective[pos] = scale
    trace_cap = 1.0 + max(l * l, u * u) + max(u, 0.0) ** 2
    return ConicProblem(
        n=3,
        objective=objective,
        offset=0.0,
        eq_mat=rows_to_matrix(3, eq_rows),
        eq_rhs=np.array(eq_rhs, float),
        ineq_mat=rows_to_matrix(3, ineq_rows),
        ineq_rhs=np.array(ineq_rhs, float),
        trace_cap=trace_cap,
    )


@dataclass(frozen=True)
class MomentSolution:
    """A solved moment matrix, normalized so that P[1,1] = 1 exactly."""

    P: np.ndarray
    index_map: MomentIndexMap
    objective_value: float

    @classmethod
    def from_matrix(cls, P, index_map, objective_value):
        P = np.asarray(P, dtype=float)
        if P.shape != (index_map.n, index_map.n):
            raise ValueError("moment matrix does not match the index map")
        if P[0, 0] <= 0.0:
            raise ValueError("constant coordinate of the moment matrix must be positive")
        return cls(P=P / P[0, 0], index_map=index_map, objective_value=float(objective_value))

    def vector(self, layer: int) -> np.ndarray:
        """First-order moments P[x^layer]."""
        return self.P[0, self.index_map.block(layer)]

    def second_moment(self, layer_a: int, layer_b: int) -> np.ndarray:
        return self.P[self.index_map.block(layer_a), self.index_map.block(layer_b)]


@dataclass(frozen=True)
class FeasibilityReport:
    """Worst constraint violations of a candidate moment matrix."""

    max_equality_violation: float
    max_inequality_violation: float
    trace_violation: float

    @property
    def max_violation(self) -> float:
        return max(
            self.max_equality_violation,
            self.max_inequality_violation,
            self.trace_violation,
        )


def check_rank1_feasibility(problem: ConicProblem, acts: Activations) -> FeasibilityReport:
    """Evaluate every constraint row at the rank-one moment of a network run.

    Activations coming from an input inside the region used to build the
    problem must satisfy every row up to floating-point noise; this is the
    load-bearing correctness check for the builder.
    """
    v = np.concatenate([[1.0], *acts.x])
    if v.shape[0] != problem.n:
        raise ValueError(
            f"activations give dimension {v.shape[0]}, problem has n={problem.n}"
        )
    sv = svec(np.outer(v, v))
    eq = problem.eq_mat @ sv - problem.eq_rhs
    ineq = problem.ineq_mat @ sv - problem.ineq_rhs
    return FeasibilityReport(
        max_equality_violation=float(np.max(np.abs(eq))) if eq.size else 0.0,
        max_inequality_violation=float(np.max(np.maximum(ineq, 0.0))) if ineq.size else 0.0,
        trace_violation=max(0.0, float(v @ v) - problem.trace_cap),
    )


@dataclass(frozen=True)
class LemmaChainReport:
    """Inequality chain linking the objective to the spectral bound.

    For a one-hidden-layer solution: ||P[z]||^2 <= tr P[zz^T] (Schur), the
    Cauchy-Schwarz step c.P[z] <= ||c|| sqrt(tr P[zz^T]), and the spectral
    step tr P[zz^T] <= ||W||_2^2 * sum_j max(l_j^2, u_j^2).
    """

    schur_lhs: float
    schur_rhs: float
    cauchy_lhs: float
    cauchy_rhs: float
    spectral_lhs: float
    spectral_rhs: float

    @property
    def violations(self) -> tuple:
        return (
            self.schur_lhs - self.schur_rhs,
            self.cauchy_lhs - self.cauchy_rhs,
            self.spectral_lhs - self.spectral_rhs,
        )


def lemma_chain_check(sol: MomentSolution, W, c, interval_squares) -> LemmaChainReport:
    """Evaluate the inequality chain on a solved one-hidden-layer instance.

    ``interval_squares`` is the vector of per-input max(l_j^2, u_j^2); for the
    unit box it is all ones and the spectral step reduces to ||W||_2^2 * d.
    """
    if len(sol.index_map.layer_sizes) != 2:
        raise ValueError("chain check applies to one-hidden-layer solutions")
    W = np.asarray(W, dtype=float)
    c = np.asarray(c, dtype=float)
    interval_squares = np.asarray(interval_squares, dtype=float)
    pz = sol.vector(1)
    tr_pzz = float(np.trace(sol.second_moment(1, 1)))
    opnorm = float(np.linalg.norm(W, 2))
    return LemmaChainReport(
        schur_lhs=float(pz @ pz),
        schur_rhs=tr_pzz,
        cauchy_lhs=float(c @ pz),
        cauchy_rhs=float(np.linalg.norm(c)) * float(np.sqrt(max(tr_pzz, 0.0))),
        spectral_lhs=tr_pzz,
        spectral_rhs=opnorm**2 * float(np.sum(interval_squares)),
    )


def sdp_upper_bound(
    net: ReluNetwork,
    region: PerturbationRegion,
    y: int,
    ybar: int,
    opts: SdpOptions | None = None,
    layer_bounds: LayerBounds | None = None,
) -> BoundResult:
    """Certified SDP upper bound on the worst-case margin of class y over ybar.

    The certificate is the rigorous dual bound at the solver's multipliers,
    valid for every feasible moment matrix and hence for the true worst-case
    margin; the primal value is reported as the estimate.
    """
    _check_classes(net, y, ybar)
    opts = opts or SdpOptions()
    lb = layer_bounds if layer_bounds is not None else interval_propagate(net, region)
    objvec = net.class_matrix[y] - net.class_matrix[ybar]
    offset = float(net.class_bias[y] - net.class_bias[ybar])
    problem = build_sdp(net, lb, objvec, opts)

    start = time.perf_counter()
    try:
        report = conic_solver.solve(problem, opts.solver)
    except Exception:
        report = None
    elapsed = time.perf_counter() - start

    if report is None or report.status == conic_solver.FAILED:
        return BoundResult(
            objective_estimate=float("nan"),
            certified_upper_bound=float("inf"),
            status=STATUS_SOLVER_FAILED,
            primal_residual=float("nan"),
            dual_residual=float("nan"),
            iterations=0 if report is None else report.iterations,
            wall_time=elapsed,
        )
    status = STATUS_CONVERGED if report.status == conic_solver.CONVERGED else STATUS_MAX_ITER
    return BoundResult(
        objective_estimate=report.objective + offset,
        certified_upper_bound=report.dual_bound + offset,
        status=status,
        primal_residual=report.primal_residual,
        dual_residual=report.dual_residual,
        iterations=report.iterations,
        wall_time=elapsed,
    )
