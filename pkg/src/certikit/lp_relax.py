"""Linear-programming relaxation of the worst-case margin.

Each ReLU unit is replaced by its triangle envelope over the unit's
pre-activation interval [s, t]: the exact lower edges z >= 0 and z >= Wx + b,
and the chord through (s, ReLU(s)) and (t, ReLU(t)) as the upper edge. Layers
are stacked with the interval pre-activation bounds, and every variable
carries the interval-derived box, which makes a closed-form certified bound
available for any nonnegative row multipliers (see conic_solver.box_dual_bound).
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import conic_solver
from .bounds import LayerBounds, PerturbationRegion, interval_propagate
from .network import ReluNetwork, _check_classes
from .results import (
    STATUS_CONVERGED,
    STATUS_MAX_ITER,
    STATUS_SOLVER_FAILED,
    BoundResult,
)

ALWAYS_OFF = "always-off"
ALWAYS_ON = "always-on"
MIXED = "mixed"


@dataclass(frozen=True)
class EnvelopeLine:
    """Upper edge of the ReLU triangle envelope over a pre-activation interval."""

    slope: float
    intercept: float
    mode: str

    def value(self, p):
        return self.slope * np.asarray(p, dtype=float) + self.intercept


def relu_envelope(s: float, t: float) -> EnvelopeLine:
    """Envelope line for a unit whose pre-activation lies in [s, t].

    t <= 0 fixes the unit off (z = 0); s >= 0 makes it linear (z = p); in
    between, the chord through (s, 0) and (t, t) with slope t / (t - s).
    Degenerate s = t falls into one of the two fixed modes, so the chord
    slope is never evaluated with a zero denominator.
    """
    s, t = float(s), float(t)
    if s > t:
        raise ValueError(f"interval endpoints out of order: s={s} > t={t}")
    if t <= 0.0:
        return EnvelopeLine(0.0, 0.0, ALWAYS_OFF)
    if s >= 0.0:
        return EnvelopeLine(1.0, 0.0, ALWAYS_ON)
    slope = t / (t - s)
    return EnvelopeLine(slope, -slope * s, MIXED)


@dataclass(frozen=True)
class LinearProblem:
    """Maximize objective.v + offset subject to rows v <= rhs and box bounds.

    Variables are all layer values x^0..x^L; ``var_index`` maps (layer, unit)
    to the flat variable index.
    """

    num_vars: int
    objective: np.ndarray
    offset: float
    rows: sp.csr_matrix
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    var_index: dict

    def __post_init__(self):
        if np.any(self.lower > self.upper):
            raise ValueError("inconsistent box bounds")
        for arr in (self.objective, self.rhs, self.lower, self.upper):
            if not np.all(np.isfinite(arr)):
                raise ValueError("problem data must be finite")


def build_lp(net: ReluNetwork, lb: LayerBounds, objvec, offset: float = 0.0) -> LinearProblem:
    """Assemble the stacked triangle-envelope LP for objective objvec.x^L.

    Envelope intervals (s, t) come from the unclamped pre-activation bounds;
    the variable boxes are the clamped activation bounds. Always-off units
    need no rows (their box is already [0, 0]); always-on units get the
    equality pair z = Wx + b; mixed units get z >= Wx + b and the chord.
    z >= 0 is enforced by the boxes, whose lower edges are clamped at zero.
    """
    sizes = net.layer_sizes
    if len(lb.lower) != len(sizes):
        raise ValueError("layer bounds do not cover every layer")
    objvec = np.asarray(objvec, dtype=float)
    if objvec.shape != (sizes[-1],):
        raise ValueError(f"objective has shape {objvec.shape}, expected ({sizes[-1]},)")

    offsets = np.concatenate([[0], np.cumsum(sizes)])
    num_vars = int(offsets[-1])
    var_index = {
        (layer, unit): int(offsets[layer] + unit)
        for layer in range(len(sizes))
        for unit in range(sizes[layer])
    }

    lower = np.concatenate(lb.lower)
    upper = np.concatenate(lb.upper)

    data, cols, indptr, rhs = [], [], [0], []

    def add_row(entries, bound):
        for idx, coeff in entries:
            cols.append(idx)
            data.append(coeff)
        indptr.append(len(data))
        rhs.append(bound)

    for i, (W, b) in enumerate(zip(net.weights, net.biases), start=1):
        s_vec, t_vec = lb.pre_lower[i - 1], lb.pre_upper[i - 1]
        x_off, z_off = offsets[i - 1], offsets[i]
        for j in range(W.shape[0]):
            env = relu_envelope(s_vec[j], t_vec[j])
            zi = int(z_off + j)
            w_entries = [(int(x_off + r), W[j, r]) for r in range(W.shape[1]) if W[j, r] != 0.0]
            if env.mode == ALWAYS_OFF:
                continue
            if env.mode == ALWAYS_ON:
                add_row(w_entries + [(zi, -1.0)], -b[j])
                add_row([(idx, -c) for idx, c in w_entries] + [(zi, 1.0)], b[j])
                continue
            # z >= Wx + b
            add_row(w_entries + [(zi, -1.0)], -b[j])
            # z <= slope * (Wx + b) + intercept
            add_row(
                [(idx, -env.slope * c) for idx, c in w_entries] + [(zi, 1.0)],
                env.slope * b[j] + env.intercept,
            )

    rows = sp.csr_matrix(
        (np.array(data, float), np.array(cols, np.int64), np.array(indptr, np.int64)),
        shape=(len(rhs), num_vars),
    )
    objective = np.zeros(num_vars)
    objective[offsets[-2] :] = objvec

    return LinearProblem(
        num_vars=num_vars,
        objective=objective,
        offset=float(offset),
        rows=rows,
        rhs=np.array(rhs, float),
        lower=lower,
        upper=upper,
        var_index=var_index,
    )


def lp_upper_bound(
    net: ReluNetwork,
    region: PerturbationRegion,
    y: int,
    ybar: int,
    settings: conic_solver.SolverSettings | None = None,
    layer_bounds: LayerBounds | None = None,
) -> BoundResult:
    """Certified LP upper bound on the worst-case margin of class y over ybar.

    The certified value is the box-Lagrangian bound at the solver's returned
    multipliers (or zero multipliers, whichever is smaller), so it stays valid
    even when the solve stops early. A failed solve returns the +inf sentinel.
    """
    _check_classes(net, y, ybar)
    lb = layer_bounds if layer_bounds is not None else interval_propagate(net, region)
    objvec = net.class_matrix[y] - net.class_matrix[ybar]
    offset = float(net.class_bias[y] - net.class_bias[ybar])
    problem = build_lp(net, lb, objvec, offset)

    start = time.perf_counter()
    try:
        report = conic_solver.solve_box_lp(problem, settings)
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
        objective_estimate=report.objective,
        certified_upper_bound=report.dual_bound,
        status=status,
        primal_residual=report.primal_residual,
        dual_residual=report.dual_residual,
        iterations=report.iterations,
        wall_time=elapsed,
    )
