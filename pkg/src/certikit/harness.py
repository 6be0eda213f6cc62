"""Per-example certification orchestration and batch reporting.

A point is certified at radius eps when the chosen relaxation proves a
negative upper bound on the margin of every incorrect class. Bound problems
share one interval-propagation pass per point, solver failures degrade to
"not certified" (never to a false certificate), and a point whose clean
prediction is already wrong is rejected without solving anything, since the
clean input itself is a feasible witness with nonnegative margin.
"""

from __future__ import annotations

import concurrent.futures
import csv
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .attack import PgdSettings, pgd_margin
from .bounds import PerturbationRegion, interval_propagate
from .conic_solver import SolverSettings
from .lp_relax import lp_upper_bound
from .network import ReluNetwork, forward
from .results import BoundResult, PointVerdict
from .sdp_relax import SdpOptions, sdp_upper_bound

logger = logging.getLogger(__name__)

METHODS = ("sdp", "lp")


@dataclass(frozen=True)
class CertifyOptions:
    solver: SolverSettings = field(default_factory=SolverSettings)
    include_intermediate_quadratic: bool = True
    include_last_layer_quadratic: bool = True
    pgd: PgdSettings | None = field(default_factory=PgdSettings)

    def sdp_options(self) -> SdpOptions:
        return SdpOptions(
            include_intermediate_quadratic=self.include_intermediate_quadratic,
            include_last_layer_quadratic=self.include_last_layer_quadratic,
            solver=self.solver,
        )


def certify_point(
    net: ReluNetwork,
    center,
    label: int,
    eps: float,
    method: str = "sdp",
    options: CertifyOptions | None = None,
    point_id: int = 0,
) -> PointVerdict:
    """Bound the margin of every incorrect class and aggregate the verdict."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    options = options or CertifyOptions()
    center = np.asarray(center, dtype=float)
    if not 0 <= label < net.num_classes:
        raise ValueError(f"label {label} out of range for {net.num_classes} classes")
    region = PerturbationRegion(center, eps)

    margin = None
    if options.pgd is not None:
        margin = pgd_margin(net, region, label, options.pgd)

    logits = forward(net, center).logits
    clean_margins = logits - logits[label]
    clean_margins = np.delete(clean_margins, label)
    if clean_margins.size and float(clean_margins.max()) >= 0.0:
        # Misclassified (or tied) clean point: the rank-one moment of the
        # center is feasible for every relaxation, so no bound can be negative.
        return PointVerdict(
            point_id=point_id, label=label, bounds={}, certified=False, pgd_margin=margin
        )

    lb = interval_propagate(net, region)
    bounds: dict[int, BoundResult] = {}
    for y in range(net.num_classes):
        if y == label:
            continue
        if method == "sdp":
            bounds[y] = sdp_upper_bound(
                net, region, y, label, opts=options.sdp_options(), layer_bounds=lb
            )
        else:
            bounds[y] = lp_upper_bound(
                net, region, y, label, settings=options.solver, layer_bounds=lb
            )
    certified = bool(bounds) and all(
        b.certified_upper_bound < 0.0 for b in bounds.values()
    )
    return PointVerdict(
        point_id=point_id, label=label, bounds=bounds, certified=certified, pgd_margin=margin
    )


@dataclass(frozen=True)
class DatasetSummary:
    num_points: int
    num_certified: int
    fraction_not_certified: float
    fraction_pgd_success: float | None
    mean_pgd_margin_certified: float | None
    mean_pgd_margin_uncertified: float | None


def _certify_one(args):
    net, point_id, label, x, eps, method, options = args
    try:
        return certify_point(net, x, label, eps, method, options, point_id=point_id)
    except Exception as exc:  # record, never abort the batch
        logger.warning("point %d failed: %s", point_id, exc)
        return PointVerdict(
            point_id=point_id, label=label, bounds={}, certified=False, error=str(exc)
        )


def certify_dataset(
    net: ReluNetwork,
    dataset,
    eps: float,
    method: str = "sdp",
    options: CertifyOptions | None = None,
    jobs: int = 1,
) -> tuple:
    """Certify every (label, input) pair; returns (verdicts, summary).

    Verdicts keep the dataset order regardless of scheduling; per-point
    failures are recorded on the verdict and excluded from nothing but the
    certified count (a failed point is simply not certified).
    """
    options = options or CertifyOptions()
    tasks = [
        (net, i, int(label), np.asarray(x, dtype=float), eps, method, options)
        for i, (label, x) in enumerate(dataset)
    ]
    if jobs > 1 and len(tasks) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            verdicts = list(pool.map(_certify_one, tasks))
    else:
        verdicts = [_certify_one(t) for t in tasks]
    verdicts.sort(key=lambda v: v.point_id)

    n = len(verdicts)
    certified = [v for v in verdicts if v.certified]
    margins = [v.pgd_margin for v in verdicts if v.pgd_margin is not None]
    cert_margins = [v.pgd_margin for v in certified if v.pgd_margin is not None]
    uncert_margins = [
        v.pgd_margin for v in verdicts if not v.certified and v.pgd_margin is not None
    ]
    summary = DatasetSummary(
        num_points=n,
        num_certified=len(certified),
        fraction_not_certified=(n - len(certified)) / n if n else 0.0,
        fraction_pgd_success=(
            sum(1 for m in margins if m <= 0.0) / n if margins and n else None
        ),
        mean_pgd_margin_certified=(
            float(np.mean(cert_margins)) if cert_margins else None
        ),
        mean_pgd_margin_uncertified=(
            float(np.mean(uncert_margins)) if uncert_margins else None
        ),
    )
    return verdicts, summary


# ---------------------------------------------------------------------------
# External formats: dataset CSV (label, then d feature floats per row) and the
# JSON-lines report (one object per point, summary object last).
# ---------------------------------------------------------------------------

def read_dataset(path) -> list:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            try:
                label = int(row[0])
                x = np.array([float(v) for v in row[1:]], dtype=float)
            except ValueError as exc:
                raise ValueError(f"{path}: bad row {lineno}: {exc}") from exc
            rows.append((label, x))
    if not rows:
        raise ValueError(f"{path}: empty dataset")
    d = rows[0][1].shape[0]
    for lineno, (_, x) in enumerate(rows, start=1):
        if x.shape[0] != d:
            raise ValueError(f"{path}: row {lineno} has {x.shape[0]} features, expected {d}")
    return rows


def _json_float(v):
    # strict JSON has no Infinity/NaN tokens; the status field already says why
    return float(v) if v is not None and np.isfinite(v) else None


def _bound_to_json(b: BoundResult) -> dict:
    return {
        "estimate": _json_float(b.objective_estimate),
        "certified_bound": _json_float(b.certified_upper_bound),
        "status": b.status,
        "iters": b.iterations,
        "ms": b.wall_time * 1000.0,
    }


def verdict_to_json(v: PointVerdict) -> dict:
    obj = {
        "id": v.point_id,
        "label": v.label,
        "certified": v.certified,
        "bounds": {str(y): _bound_to_json(b) for y, b in sorted(v.bounds.items())},
        "pgd_margin": _json_float(v.pgd_margin),
    }
    if v.error is not None:
        obj["error"] = v.error
    return obj


def write_report(fh, verdicts, summary: DatasetSummary) -> None:
    for v in verdicts:
        fh.write(json.dumps(verdict_to_json(v), allow_nan=False) + "\n")
    fh.write(
        json.dumps(
            {
                "summary": {
                    "points": summary.num_points,
                    "certified": summary.num_certified,
                    "fraction_not_certified": summary.fraction_not_certified,
                    "fraction_pgd_success": summary.fraction_pgd_success,
                    "mean_pgd_margin_certified": summary.mean_pgd_margin_certified,
                    "mean_pgd_margin_uncertified": summary.mean_pgd_margin_uncertified,
                }
            }
        )
        + "\n"
    )
