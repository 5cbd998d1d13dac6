"""Damped oscillator with memory for each preset; prints x(t) on a coarse grid."""

import argparse

import numpy as np

from dynmem.generators import make_preset
from dynmem.langevin import LangevinProblem, SolverOptions, solve


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=0.6)
    ap.add_argument("--beta", type=float, default=0.7)
    ap.add_argument("--t-end", type=float, default=10.0)
    ap.add_argument("--steps", type=int, default=1000)
    ap.add_argument("--presets", nargs="+", default=["classical", "tempered", "hybrid"])
    args = ap.parse_args()
    cols = {}
    for name in args.presets:
        g, th = make_preset(name)
        problem = LangevinProblem(args.alpha, args.beta, g, th, args.t_end, [1.0],
                                  A=[[-1.0]], damping=lambda t: 0.2 + 0 * t,
                                  F=lambda t, u, v: -0.1 * u ** 3)
        traj = solve(problem, SolverOptions(args.steps))
        cols[name] = traj.states[:, 0]
        t = traj.grid.nodes
    stride = max(1, args.steps // 20)
    print("t," + ",".join(cols))
    for j in range(0, len(t), stride):
        print(f"{t[j]:.3f}," + ",".join(f"{cols[k][j]:.6f}" for k in cols))


if __name__ == "__main__":
    main()
