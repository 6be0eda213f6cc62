"""The two-unit instance where the LP and SDP relaxations visibly separate.

Two hidden units read a 2-d input from the unit box:

    z1 = ReLU(x1 + x2),  z2 = ReLU(x1 - x2),  maximize z1 + z2.

The exact optimum is 2 (take x1 = 1, any x2). The per-unit triangle LP cannot
couple the two units and reaches 3; the moment relaxation reasons about them
jointly and stops at 1 + sqrt(2) ~ 2.414.

Run: python demos/two_unit_gap.py
"""

import numpy as np

from certikit import (
    PerturbationRegion,
    ReluNetwork,
    SolverSettings,
    build_lp,
    build_sdp,
    exact_margin_bruteforce,
    interval_propagate,
    pgd_attack,
    solve,
    solve_box_lp,
)


def main():
    W = np.array([[1.0, 1.0], [1.0, -1.0]])
    net = ReluNetwork(
        weights=(W,),
        biases=(np.zeros(2),),
        class_matrix=np.array([[1.0, 1.0], [0.0, 0.0]]),
        class_bias=np.zeros(2),
    )
    region = PerturbationRegion(np.zeros(2), 1.0)
    lb = interval_propagate(net, region)
    settings = SolverSettings(abs_tol=1e-9, rel_tol=1e-9, max_iter=100000)

    print("pre-activation intervals:", lb.pre_lower[0], "to", lb.pre_upper[0])

    exact = exact_margin_bruteforce(net, region, 0, 1)
    print(f"exact optimum (pattern enumeration): {exact:.6f}")

    attack = pgd_attack(net, region, ybar=1)
    print(f"attack lower bound:                  {attack.achieved_margin:.6f} "
          f"at x = {attack.x_adv}")

    lp_rep = solve_box_lp(build_lp(net, lb, np.ones(2)), settings)
    print(f"LP relaxation value:                 {lp_rep.dual_bound:.6f}")

    sdp_rep = solve(build_sdp(net, lb, np.ones(2)), settings)
    print(f"SDP relaxation value:                {sdp_rep.dual_bound:.6f} "
          f"(1 + sqrt(2) = {1 + np.sqrt(2):.6f})")

    print()
    print("ordering: attack <= exact <= SDP < LP")
    assert attack.achieved_margin <= exact + 1e-9
    assert exact <= sdp_rep.dual_bound + 1e-6
    assert sdp_rep.dual_bound < lp_rep.dual_bound


if __name__ == "__main__":
    main()
