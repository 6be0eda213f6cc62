"""Shared fixtures and independent oracles for the test suite."""

import itertools

import numpy as np
import pytest

from certikit import PerturbationRegion, ReluNetwork


def make_random_net(rng, d, hidden, k=2, weight_scale=0.8, bias_scale=0.3):
    """Random fully-connected ReLU net with the given hidden layer sizes."""
    sizes = [d] + list(hidden)
    weights, biases = [], []
    for a, b in zip(sizes, sizes[1:]):
        weights.append(weight_scale * rng.standard_normal((b, a)))
        biases.append(bias_scale * rng.standard_normal(b))
    C = rng.standard_normal((k, sizes[-1]))
    cb = 0.1 * rng.standard_normal(k)
    return ReluNetwork(weights=tuple(weights), biases=tuple(biases), class_matrix=C, class_bias=cb)


def vertex_enumerate_lp(problem, tol=1e-9):
    """Exact LP optimum by enumerating basic feasible solutions.

    Stacks the inequality rows and both sides of every variable box into one
    halfspace system, solves every square subsystem, and keeps the feasible
    maximizer. Only viable for a handful of variables.
    """
    rows = problem.rows.toarray()
    p = problem.num_vars
    A = np.vstack([rows, np.eye(p), -np.eye(p)])
    b = np.concatenate([problem.rhs, problem.upper, -problem.lower])
    best = -np.inf
    for combo in itertools.combinations(range(A.shape[0]), p):
        sub = A[list(combo)]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        v = np.linalg.solve(sub, b[list(combo)])
        if np.all(A @ v <= b + tol):
            best = max(best, float(problem.objective @ v))
    assert np.isfinite(best), "no feasible vertex found"
    return best + problem.offset


@pytest.fixture
def two_unit_instance():
    """Two hidden units on a 2-d input: z1 = ReLU(x1 + x2), z2 = ReLU(x1 - x2),
    objective z1 + z2 over the unit box. The classic instance where the LP
    reaches 3 but the exact optimum is 2."""
    W = np.array([[1.0, 1.0], [1.0, -1.0]])
    net = ReluNetwork(
        weights=(W,),
        biases=(np.zeros(2),),
        class_matrix=np.array([[1.0, 1.0], [0.0, 0.0]]),
        class_bias=np.zeros(2),
    )
    region = PerturbationRegion(np.zeros(2), 1.0)
    return net, region
