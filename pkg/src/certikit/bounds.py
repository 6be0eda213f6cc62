"""Elementwise activation bounds for an l-infinity perturbation region.

Bounds are propagated layer by layer with interval arithmetic through the
positive/negative split of each weight matrix. Both the post-ReLU activation
intervals and the raw pre-activation intervals are kept: the latter are the
extreme points used by the triangle envelopes and the quadratic interval
constraints downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import ReluNetwork, _frozen_array


@dataclass(frozen=True)
class PerturbationRegion:
    """l-infinity ball of radius ``radius`` around ``center``."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        center = _frozen_array(self.center)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))
        if center.ndim != 1 or not np.all(np.isfinite(center)):
            raise ValueError("center must be a finite vector")
        if not (self.radius >= 0.0 and np.isfinite(self.radius)):
            raise ValueError("radius must be a finite nonnegative scalar")

    @property
    def lower(self) -> np.ndarray:
        return self.center - self.radius

    @property
    def upper(self) -> np.ndarray:
        return self.center + self.radius


@dataclass(frozen=True)
class LayerBounds:
    """Per-layer bounds on x^0..x^L.

    ``lower``/``upper`` bound the actual layer values (post-ReLU for i >= 1,
    hence clamped at zero). ``pre_lower``/``pre_upper`` are the unclamped
    pre-activation intervals for layers 1..L.
    """

    lower: tuple
    upper: tuple
    pre_lower: tuple
    pre_upper: tuple


def split_pos_neg(M) -> tuple:
    """Split M = Mplus + Mminus with Mplus >= 0 >= Mminus elementwise."""
    M = np.asarray(M, dtype=float)
    return np.maximum(M, 0.0), np.minimum(M, 0.0)


def interval_propagate(net: ReluNetwork, region: PerturbationRegion) -> LayerBounds:
    """Propagate the input box through the network.

    Pre-activation intervals combine the positive part of W with the lower
    bound and the negative part with the upper bound (and vice versa); the
    activation interval is the ReLU clamp of that. Soundness: every input in
    the region produces activations inside the returned intervals.
    """
    if region.center.shape != (net.input_dim,):
        raise ValueError(
            f"region dimension {region.center.shape[0]} does not match input dim {net.input_dim}"
        )
    lower = [region.lower]
    upper = [region.upper]
    pre_lower, pre_upper = [], []
    for W, b in zip(net.weights, net.biases):
        Wp, Wm = split_pos_neg(W)
        p_lo = Wp @ lower[-1] + Wm @ upper[-1] + b
        p_hi = Wp @ upper[-1] + Wm @ lower[-1] + b
        pre_lower.append(p_lo)
        pre_upper.append(p_hi)
        lower.append(np.maximum(p_lo, 0.0))
        upper.append(np.maximum(p_hi, 0.0))
    return LayerBounds(
        lower=tuple(_frozen_array(v) for v in lower),
        upper=tuple(_frozen_array(v) for v in upper),
        pre_lower=tuple(_frozen_array(v) for v in pre_lower),
        pre_upper=tuple(_frozen_array(v) for v in pre_upper),
    )
