"""Analytic bounds, the exact brute-force margin oracle, and the random-
network benchmark that measures the gap between the LP and SDP relaxations.

For a one-hidden-layer network with random sign weights on the unit box, the
LP value is at least half the elementwise l1-norm of W (a feasible point puts
every unit on the middle of its envelope chord at x = 0), while the SDP value
is capped by sqrt(d) * ||W||_2 * ||c||_2. The benchmark records both sides
per trial together with the solved values and the normalized SDP ratio.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from . import conic_solver, lp_relax, sdp_relax
from .bounds import PerturbationRegion, interval_propagate
from .network import ReluNetwork, _check_classes


class PatternBudgetError(ValueError):
    """Total hidden unit count exceeds the enumeration budget."""


class GapInvariantError(RuntimeError):
    """A benchmark row violated one of its analytic bounds."""


def random_sign_matrix(m: int, d: int, seed: int) -> np.ndarray:
    """Matrix with i.i.d. uniform +-1 entries; deterministic in the seed."""
    if m < 1 or d < 1:
        raise ValueError("matrix dimensions must be positive")
    rng = np.random.default_rng(seed)
    return 2.0 * rng.integers(0, 2, size=(m, d)) - 1.0


def operator_norm(M, tol: float = 1e-10, max_iter: int = 10000) -> float:
    """Largest singular value by power iteration on the Gram matrix."""
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix must be finite")
    if M.size == 0 or not M.any():
        return 0.0
    G = M @ M.T if M.shape[0] <= M.shape[1] else M.T @ M
    rng = np.random.default_rng(12345)
    v = rng.standard_normal(G.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = G @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        lam_new = float(v @ (G @ v))
        if abs(lam_new - lam) <= tol * max(abs(lam_new), 1.0):
            lam = lam_new
            break
        lam = lam_new
    return float(np.sqrt(max(lam, 0.0)))


def lp_l1_lower_bound(W) -> float:
    """Half the elementwise l1-norm of W: a feasible LP value on the unit box."""
    return 0.5 * float(np.sum(np.abs(np.asarray(W, dtype=float))))


def spectral_sdp_bound(W, c, d: int, tol: float = 1e-12) -> float:
    """sqrt(d) * ||W||_2 * ||c||_2, an upper bound on the SDP value for the
    unit box around the origin."""
    return float(np.sqrt(d)) * operator_norm(W, tol) * float(np.linalg.norm(np.asarray(c, float)))


def exact_margin_bruteforce(
    net: ReluNetwork,
    region: PerturbationRegion,
    y: int,
    ybar: int,
    budget: int = 16,
) -> float:
    """Exact worst-case margin by enumerating all ReLU on/off patterns.

    For a fixed pattern the network is affine in the input, so the maximum
    over the region decomposes into one LP per pattern (sign-consistency rows
    plus the input box), each solved with an off-the-shelf LP solver. Exact
    for piecewise-linear networks; cost is 2^h LPs for h hidden units.
    """
    _check_classes(net, y, ybar)
    if region.center.shape != (net.input_dim,):
        raise ValueError("region dimension does not match the network input")
    hidden = sum(W.shape[0] for W in net.weights)
    if hidden > budget:
        raise PatternBudgetError(f"{hidden} hidden units exceed the budget of {budget}")

    objvec = net.class_matrix[y] - net.class_matrix[ybar]
    offset = float(net.class_bias[y] - net.class_bias[ybar])
    var_bounds = list(zip(region.lower, region.upper))
    d = net.input_dim

    best = -np.inf
    for code in range(2 ** hidden):
        bits = [(code >> s) & 1 for s in range(hidden)]
        A = np.eye(d)
        a = np.zeros(d)
        rows, rhs = [], []
        pos = 0
        for W, b in zip(net.weights, net.biases):
            m = W.shape[0]
            pre_A = W @ A
            pre_a = W @ a + b
            mask = np.array(bits[pos : pos + m], dtype=float)
            pos += m
            for j in range(m):
                if mask[j]:
                    rows.append(-pre_A[j])
                    rhs.append(pre_a[j])
                else:
                    rows.append(pre_A[j])
                    rhs.append(-pre_a[j])
            A = mask[:, None] * pre_A
            a = mask * pre_a
        obj = objvec @ A
        const = float(objvec @ a) + offset
        res = scipy.optimize.linprog(
            -obj,
            A_ub=np.array(rows) if rows else None,
            b_ub=np.array(rhs) if rhs else None,
            bounds=var_bounds,
            method="highs",
        )
        if res.status == 2:  # infeasible pattern
            continue
        if not res.success:
            raise RuntimeError(f"pattern LP failed with status {res.status}: {res.message}")
        best = max(best, -float(res.fun) + const)
    if not np.isfinite(best):
        raise RuntimeError("no feasible activation pattern found")
    return best


@dataclass(frozen=True)
class GapRow:
    m: int
    d: int
    seed: int
    f_lp: float
    lp_lower_bound: float
    f_sdp: float
    spectral_bound: float
    normalized_ratio: float


@dataclass(frozen=True)
class GapTable:
    """Benchmark rows plus the fitted constant estimate gamma_hat."""

    rows: tuple

    CSV_HEADER = ("m", "d", "seed", "f_lp", "lp_lower_bound", "f_sdp", "spectral_bound",
                  "normalized_ratio")

    @property
    def gamma_hat(self) -> float:
        ratios = [r.normalized_ratio for r in self.rows if np.isfinite(r.normalized_ratio)]
        return max(ratios) if ratios else float("nan")

    def check_invariants(self, tol: float = 1e-5) -> list:
        """Per-row analytic bounds; returns human-readable violations."""
        violations = []
        for r in self.rows:
            # failed solves (NaN entries) are excluded per column
            if np.isfinite(r.f_lp) and r.f_lp < r.lp_lower_bound - tol * max(
                1.0, abs(r.lp_lower_bound)
            ):
                violations.append(
                    f"m={r.m} d={r.d} seed={r.seed}: f_lp={r.f_lp} below {r.lp_lower_bound}"
                )
            if np.isfinite(r.f_sdp) and r.f_sdp > r.spectral_bound + tol * max(
                1.0, abs(r.spectral_bound)
            ):
                violations.append(
                    f"m={r.m} d={r.d} seed={r.seed}: f_sdp={r.f_sdp} above {r.spectral_bound}"
                )
        return violations

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.CSV_HEADER)
        for r in self.rows:
            writer.writerow(
                [r.m, r.d, r.seed]
                + [repr(float(v)) for v in (r.f_lp, r.lp_lower_bound, r.f_sdp,
                                            r.spectral_bound, r.normalized_ratio)]
            )
        return buf.getvalue()


def _benchmark_instance(m, d, trial_seed):
    W = random_sign_matrix(m, d, trial_seed)
    c = np.ones(m)
    net = ReluNetwork(
        weights=(W,),
        biases=(np.zeros(m),),
        class_matrix=np.vstack([c, np.zeros(m)]),
        class_bias=np.zeros(2),
    )
    region = PerturbationRegion(np.zeros(d), 1.0)
    return net, W, c, region


#: Benchmark solves run tighter than the solver defaults: the certified SDP
#: value has to come close enough to the optimum to sit below the spectral cap.
BENCH_SETTINGS = conic_solver.SolverSettings(
    abs_tol=1e-8, rel_tol=1e-8, max_iter=100000, polish_steps=50
)


def gap_experiment(
    sizes,
    trials: int,
    seed: int,
    solver_settings: conic_solver.SolverSettings | None = None,
    enforce: bool = True,
) -> GapTable:
    """Solve LP and SDP relaxations of random sign-matrix instances.

    One row per (size, trial): m = d = size, unit box around the origin,
    all-ones objective over the hidden layer. Failed solves produce NaN
    entries and are excluded from gamma_hat.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    solver_settings = solver_settings or BENCH_SETTINGS
    rows = []
    for size in sizes:
        if size < 1:
            raise ValueError("sizes must be positive")
        for trial in range(trials):
            trial_seed = int(np.random.SeedSequence([seed, size, trial]).generate_state(1)[0])
            net, W, c, region = _benchmark_instance(size, size, trial_seed)
            lb = interval_propagate(net, region)
            f_lp = f_sdp = float("nan")
            try:
                lp = lp_relax.build_lp(net, lb, c)
                rep = conic_solver.solve_box_lp(lp, solver_settings)
                if rep.status != conic_solver.FAILED:
                    f_lp = rep.objective
            except Exception:
                pass
            try:
                opts = sdp_relax.SdpOptions(solver=solver_settings)
                sdp = sdp_relax.build_sdp(net, lb, c, opts)
                rep = conic_solver.solve(sdp, opts.solver)
                if rep.status != conic_solver.FAILED:
                    f_sdp = rep.dual_bound
            except Exception:
                pass
            m, d = size, size
            denom = m * np.sqrt(d) + d * np.sqrt(m)
            rows.append(
                GapRow(
                    m=m,
                    d=d,
                    seed=trial_seed,
                    f_lp=float(f_lp),
                    lp_lower_bound=lp_l1_lower_bound(W),
                    f_sdp=float(f_sdp),
                    spectral_bound=spectral_sdp_bound(W, c, d),
                    normalized_ratio=float(f_sdp / denom),
                )
            )
    table = GapTable(rows=tuple(rows))
    if enforce:
        violations = table.check_invariants()
        if violations:
            raise GapInvariantError("; ".join(violations))
    return table
