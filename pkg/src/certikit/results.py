"""Result containers shared by the bound methods and the certification harness."""

from __future__ import annotations

from dataclasses import dataclass, field

STATUS_CONVERGED = "converged"
STATUS_MAX_ITER = "max_iter"
STATUS_SOLVER_FAILED = "solver_failed"


@dataclass(frozen=True)
class BoundResult:
    """Outcome of one worst-case-margin bound computation.

    ``certified_upper_bound`` is rigorously valid (an upper bound on the true
    worst-case margin) regardless of solver convergence; a failed solve yields
    the +inf sentinel so a bad run can never produce a false certificate.
    ``objective_estimate`` is the solver's primal value, informative only.
    """

    objective_estimate: float
    certified_upper_bound: float
    status: str
    primal_residual: float
    dual_residual: float
    iterations: int
    wall_time: float


@dataclass(frozen=True)
class PointVerdict:
    """Certification outcome for one (input, label) pair.

    ``certified`` is True exactly when bounds were computed for every
    incorrect class and all certified upper bounds are negative. When the
    clean point is already misclassified the bounds dict is empty: no solves
    are performed because no bound could be negative. ``pgd_margin`` is the
    companion attack statistic (closest-incorrect margin at the attack point),
    present when the attack was run.
    """

    point_id: int
    label: int
    bounds: dict = field(default_factory=dict)
    certified: bool = False
    pgd_margin: float | None = None
    error: str | None = None
