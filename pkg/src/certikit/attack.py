"""Projected gradient ascent on class margins inside the l-infinity ball.

The attack provides lower-bound witnesses for the worst-case margin: any
point it finds inside the ball is feasible for the exact problem, so its
margin can never exceed a valid certified upper bound. Each restart ascends
the margin of every incorrect class separately with sign-gradient steps,
projecting onto the ball after each step; the clean center is always kept as
a candidate so a misclassified input is reported as a successful attack.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bounds import PerturbationRegion
from .network import ReluNetwork, _frozen_array, forward, margin_gradient


@dataclass(frozen=True)
class PgdSettings:
    step_size: float = 0.1
    iterations: int = 40
    restarts: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.step_size <= 0:
            raise ValueError("step size must be positive")
        if self.iterations < 1 or self.restarts < 1:
            raise ValueError("iterations and restarts must be at least 1")


@dataclass(frozen=True)
class AttackResult:
    """Best adversarial witness found.

    ``achieved_margin`` is max over incorrect classes of f(x_adv)_y -
    f(x_adv)_ybar, recomputed by a fresh forward pass; ``closest_margin`` is
    its negation, min over incorrect classes of f_ybar - f_y. ``success``
    means the point is (weakly) misclassified.
    """

    x_adv: np.ndarray
    target_class: int
    achieved_margin: float
    success: bool
    closest_margin: float


def _best_incorrect(logits, ybar):
    margins = logits - logits[ybar]  # fresh writable array
    margins[ybar] = -np.inf
    y = int(np.argmax(margins))
    return y, float(margins[y])


def pgd_attack(
    net: ReluNetwork,
    region: PerturbationRegion,
    ybar: int,
    settings: PgdSettings | None = None,
) -> AttackResult:
    """Sign-gradient ascent with random restarts, one run per incorrect class."""
    settings = settings or PgdSettings()
    if region.center.shape != (net.input_dim,):
        raise ValueError("region dimension does not match the network input")
    if not 0 <= ybar < net.num_classes:
        raise ValueError("true label out of range")
    lo, hi = region.lower, region.upper
    rng = np.random.default_rng(settings.seed)

    best_x = region.center
    _, best_margin = _best_incorrect(forward(net, best_x).logits, ybar)

    for _ in range(settings.restarts):
        x_init = rng.uniform(lo, hi) if region.radius > 0 else region.center.copy()
        for y in range(net.num_classes):
            if y == ybar:
                continue
            x = np.asarray(x_init, dtype=float).copy()
            for _ in range(settings.iterations):
                g = margin_gradient(net, x, y, ybar)
                x = np.clip(x + settings.step_size * np.sign(g), lo, hi)
            _, margin = _best_incorrect(forward(net, x).logits, ybar)
            if margin > best_margin:
                best_margin, best_x = margin, x

    target, achieved = _best_incorrect(forward(net, best_x).logits, ybar)
    return AttackResult(
        x_adv=_frozen_array(best_x),
        target_class=target,
        achieved_margin=achieved,
        success=achieved >= 0.0,
        closest_margin=-achieved,
    )


def pgd_margin(
    net: ReluNetwork,
    region: PerturbationRegion,
    ybar: int,
    settings: PgdSettings | None = None,
) -> float:
    """Closest-incorrect-class margin at the attack point.

    Small or negative values indicate the attack came close to (or achieved)
    a misclassification.
    """
    return pgd_attack(net, region, ybar, settings).closest_margin
