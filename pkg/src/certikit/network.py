"""Feedforward ReLU classifiers: evaluation, margins, gradients, serialization.

A network maps an input x^0 through hidden layers x^i = ReLU(W^{i-1} x^{i-1}
+ b^{i-1}) and scores k classes as C x^L + class_bias. Networks are immutable
after construction and all operations here are pure, so a single instance can
be shared across concurrent certification jobs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


class NetworkParseError(ValueError):
    """Serialized network text is malformed."""


class NetworkShapeError(ValueError):
    """Layer shapes do not chain, or the class count is too small."""


class NetworkValueError(ValueError):
    """A weight or bias entry is not finite."""


def _frozen_array(a, dtype=float):
    out = np.array(a, dtype=dtype)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class ReluNetwork:
    """A feedforward ReLU classifier.

    ``weights``/``biases`` hold the hidden layers W^0..W^{L-1} and b^0..b^{L-1};
    ``class_matrix`` (k x m_L) and ``class_bias`` (k,) produce the logits.
    L = 0 is allowed and gives a purely linear classifier on the input.
    """

    weights: tuple
    biases: tuple
    class_matrix: np.ndarray
    class_bias: np.ndarray

    def __post_init__(self):
        weights = tuple(_frozen_array(W) for W in self.weights)
        biases = tuple(_frozen_array(b) for b in self.biases)
        C = _frozen_array(self.class_matrix)
        cb = _frozen_array(self.class_bias)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "biases", biases)
        object.__setattr__(self, "class_matrix", C)
        object.__setattr__(self, "class_bias", cb)

        if len(weights) != len(biases):
            raise NetworkShapeError("one bias vector required per weight matrix")
        for i, (W, b) in enumerate(zip(weights, biases)):
            if W.ndim != 2 or b.ndim != 1 or W.shape[0] != b.shape[0]:
                raise NetworkShapeError(f"layer {i}: weight {W.shape} and bias {b.shape} do not match")
            if i > 0 and W.shape[1] != weights[i - 1].shape[0]:
                raise NetworkShapeError(
                    f"layer {i}: expects {W.shape[1]} inputs but layer {i - 1} has "
                    f"{weights[i - 1].shape[0]} units"
                )
        if C.ndim != 2 or cb.ndim != 1 or C.shape[0] != cb.shape[0]:
            raise NetworkShapeError("output head shapes do not match")
        feeding = weights[-1].shape[0] if weights else C.shape[1]
        if C.shape[1] != feeding:
            raise NetworkShapeError(
                f"output head expects {C.shape[1]} features but last layer has {feeding} units"
            )
        if C.shape[0] < 2:
            raise NetworkShapeError("at least two classes required")
        for arr in (*weights, *biases, C, cb):
            if not np.all(np.isfinite(arr)):
                raise NetworkValueError("network parameters must be finite")

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1] if self.weights else self.class_matrix.shape[1]

    @property
    def depth(self) -> int:
        """Number of hidden layers L."""
        return len(self.weights)

    @property
    def num_classes(self) -> int:
        return self.class_matrix.shape[0]

    @property
    def layer_sizes(self) -> tuple:
        """(d, m_1, ..., m_L)."""
        return (self.input_dim,) + tuple(W.shape[0] for W in self.weights)


@dataclass(frozen=True)
class Activations:
    """Input and post-ReLU layer values x^0..x^L plus the k class scores."""

    x: tuple
    logits: np.ndarray


def forward(net: ReluNetwork, x0) -> Activations:
    """Evaluate the network, keeping every intermediate activation vector."""
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (net.input_dim,):
        raise ValueError(f"input has shape {x0.shape}, expected ({net.input_dim},)")
    xs = [x0]
    for W, b in zip(net.weights, net.biases):
        xs.append(np.maximum(W @ xs[-1] + b, 0.0))
    logits = net.class_matrix @ xs[-1] + net.class_bias
    return Activations(tuple(_frozen_array(x) for x in xs), _frozen_array(logits))


def _check_classes(net, y, ybar):
    k = net.num_classes
    if not (0 <= y < k and 0 <= ybar < k):
        raise ValueError(f"class indices must lie in [0, {k})")
    if y == ybar:
        raise ValueError("margin requires two distinct classes")


def class_margin(net: ReluNetwork, x0, y: int, ybar: int) -> float:
    """Score difference f(x0)_y - f(x0)_ybar."""
    _check_classes(net, y, ybar)
    logits = forward(net, x0).logits
    return float(logits[y] - logits[ybar])


def margin_gradient(net: ReluNetwork, x0, y: int, ybar: int) -> np.ndarray:
    """Gradient of class_margin at x0 by reverse accumulation.

    The ReLU subgradient at exactly zero is taken as zero, so a unit whose
    pre-activation is non-positive contributes nothing.
    """
    _check_classes(net, y, ybar)
    acts = forward(net, x0)
    g = net.class_matrix[y] - net.class_matrix[ybar]
    # x^i > 0 iff the pre-activation was > 0, so the stored activations carry the masks.
    for W, xi in zip(reversed(net.weights), reversed(acts.x[1:])):
        g = (g * (xi > 0.0)) @ W
    return g


def _layer_block(W: np.ndarray, b: np.ndarray) -> dict:
    rows, cols = W.shape
    return {
        "rows": int(rows),
        "cols": int(cols),
        "w": [float(v) for v in W.reshape(-1)],
        "b": [float(v) for v in b],
    }


def save_network(net: ReluNetwork) -> str:
    """Serialize to the canonical JSON form.

    Floats are written as their shortest round-trip decimals, keys in a fixed
    order, so equal networks always serialize to identical bytes.
    """
    obj = {
        "layers": [_layer_block(W, b) for W, b in zip(net.weights, net.biases)],
        "output": _layer_block(net.class_matrix, net.class_bias),
    }
    return json.dumps(obj, allow_nan=False)


def _reject_constant(token):
    raise NetworkParseError(f"non-finite token {token!r} is not allowed")


def _parse_block(obj, name):
    if not isinstance(obj, dict):
        raise NetworkParseError(f"{name}: expected an object")
    for key in ("rows", "cols", "w", "b"):
        if key not in obj:
            raise NetworkParseError(f"{name}: missing field {key!r}")
    rows, cols = obj["rows"], obj["cols"]
    if not (isinstance(rows, int) and isinstance(cols, int)) or rows < 1 or cols < 1:
        raise NetworkParseError(f"{name}: rows/cols must be positive integers")
    w, b = obj["w"], obj["b"]
    if not isinstance(w, list) or not isinstance(b, list):
        raise NetworkParseError(f"{name}: w and b must be arrays")
    if any(not isinstance(v, (int, float)) or isinstance(v, bool) for v in w + b):
        raise NetworkParseError(f"{name}: w and b must contain numbers only")
    if len(w) != rows * cols:
        raise NetworkShapeError(f"{name}: w has {len(w)} entries, expected rows*cols = {rows * cols}")
    if len(b) != rows:
        raise NetworkShapeError(f"{name}: b has {len(b)} entries, expected rows = {rows}")
    W = np.array(w, dtype=float).reshape(rows, cols)
    bv = np.array(b, dtype=float)
    if not (np.all(np.isfinite(W)) and np.all(np.isfinite(bv))):
        raise NetworkValueError(f"{name}: entries must be finite")
    return W, bv


def load_network(text: str) -> ReluNetwork:
    """Parse the canonical JSON form; inverse of save_network."""
    try:
        obj = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise NetworkParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict) or "layers" not in obj or "output" not in obj:
        raise NetworkParseError("top level must be an object with 'layers' and 'output'")
    if not isinstance(obj["layers"], list):
        raise NetworkParseError("'layers' must be an array")
    layers = [_parse_block(blk, f"layers[{i}]") for i, blk in enumerate(obj["layers"])]
    C, cb = _parse_block(obj["output"], "output")
    return ReluNetwork(
        weights=tuple(W for W, _ in layers),
        biases=tuple(b for _, b in layers),
        class_matrix=C,
        class_bias=cb,
    )
