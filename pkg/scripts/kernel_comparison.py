"""Kernel of order alpha for every preset next to the exponential-type kernel, as CSV."""

import argparse
import sys

from dynmem.cli import run_cli


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--t-end", type=float, default=5.0)
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("-o", "--output")
    args = ap.parse_args()
    argv = ["kernel", "--compare", "--alpha", str(args.alpha), "--t-end", str(args.t_end),
            "--steps", str(args.steps)]
    if args.output:
        argv = ["-o", args.output] + argv
    sys.exit(run_cli(argv))


if __name__ == "__main__":
    main()
