"""Sweeps to convergence (avg/max over restarts) on a synthetic plane
instance, for each k and lambda.

    python3 scripts/iteration_counts.py [--facilities 500 --clients 2000]
"""

import argparse
import time

import numpy as np

from reconkm.instance import Instance
from reconkm.metrics import euclidean_distances
from reconkm.solver import SolverConfig, local_search


def two_camp_points(rng, n):
    side = rng.choice([-1.0, 1.0], size=n)
    return np.column_stack([side + 0.5 * rng.standard_normal(n), 0.5 * rng.standard_normal(n)])


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--facilities", type=int, default=500)
    ap.add_argument("--clients", type=int, default=2000)
    ap.add_argument("--ks", default="2,4,8")
    ap.add_argument("--lambdas", default="0,0.8,3.2")
    ap.add_argument("--restarts", type=int, default=40)
    ap.add_argument("--normalization", choices=["sum", "mean"], default="mean")
    ap.add_argument("--strategy", choices=["first", "best"], default="first")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    F, C = two_camp_points(rng, args.facilities), two_camp_points(rng, args.clients)
    inst = Instance(euclidean_distances(C, F), euclidean_distances(F, F))
    print(f"{'k':>3} {'lambda':>7} {'avg':>6} {'max':>4} {'sec/run':>8}")
    for k in map(int, args.ks.split(",")):
        for lam in map(float, args.lambdas.split(",")):
            cfg = SolverConfig(k=k, lam=lam, normalization=args.normalization, strategy=args.strategy)
            t0 = time.perf_counter()
            its = [local_search(inst, cfg, seed=r).iterations for r in range(args.restarts)]
            per = (time.perf_counter() - t0) / args.restarts
            print(f"{k:>3} {lam:>7.1f} {np.mean(its):>6.2f} {max(its):>4} {per:>8.2f}")


if __name__ == "__main__":
    main()
