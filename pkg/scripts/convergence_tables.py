"""Error tables under grid halving for the main discrete identities."""

import argparse

import numpy as np

from dynmem.generators import make_preset
from dynmem.grid import Grid, GridFunction
from dynmem.kernels import semigroup_residual
from dynmem.mittag_leffler import MLQuery, ml_eigen_residual
from dynmem.operators import fractional_integral, rl_derivative
from dynmem.report import observed_order


def inverse_error(g, th, alpha, n):
    x = GridFunction.from_callable(Grid(1.0, n), np.sin)
    d = rl_derivative(g, th, alpha, fractional_integral(g, th, alpha, x))
    return float(np.max(np.abs(d.values - x.values)[1:-1]))


def eigen_error(g, th, alpha, n):
    return ml_eigen_residual(MLQuery(g, th, alpha, -1.0, Grid(1.0, n)))


def semigroup_error(g, th, alpha, n):
    return semigroup_residual(g, th, alpha, alpha, Grid(1.0, n), t_min=0.1)


STUDIES = {"semigroup": semigroup_error, "inverse": inverse_error, "eigen": eigen_error}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--presets", nargs="+", default=["classical", "tempered", "affine"])
    ap.add_argument("--studies", nargs="+", default=list(STUDIES), choices=list(STUDIES))
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--levels", type=int, nargs="+", default=[128, 256, 512, 1024])
    args = ap.parse_args()
    print("study,preset," + ",".join(f"N={n}" for n in args.levels) + ",min_order")
    for study in args.studies:
        for name in args.presets:
            g, th = make_preset(name)
            errs = [STUDIES[study](g, th, args.alpha, n) for n in args.levels]
            order = min(observed_order(errs))
            print(f"{study},{name}," + ",".join(f"{e:.3e}" for e in errs) + f",{order:.2f}")


if __name__ == "__main__":
    main()
