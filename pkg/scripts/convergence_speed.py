"""Count the iterations each fit needs to come within rel_tol of its final bound.

Usage: python3 scripts/convergence_speed.py --trials 20 --k 5 --d 50
"""

import argparse

import numpy as np

from vmfmix.generate import GenSpec, sample_corpus
from vmfmix.inference import FitConfig, fit


def iterations_to_settle(trace, rel_tol):
    final = trace[-1]
    return next(t + 1 for t, v in enumerate(trace) if abs(final - v) <= rel_tol * abs(final))


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--d", type=int, default=10)
    p.add_argument("--docs", type=int, default=200)
    p.add_argument("--tokens", type=int, default=30)
    p.add_argument("--kappa", type=float, default=50.0)
    p.add_argument("--rel-tol", type=float, default=1e-5)
    p.add_argument("--budget", type=int, default=20)
    args = p.parse_args()
    counts = []
    for seed in range(args.trials):
        corpus, _ = sample_corpus(GenSpec(K=args.k, D=args.d, num_docs=args.docs, tokens_min=args.tokens,
                                          tokens_max=args.tokens, kappa=args.kappa, seed=seed))
        _, _, report = fit(corpus, FitConfig(K=args.k, seed=seed, rel_tol=args.rel_tol))
        counts.append(iterations_to_settle(report.elbo_trace, args.rel_tol))
    counts = np.array(counts)
    print(f"iterations to settle: {counts.tolist()}")
    print(f"within {args.budget} iterations: {np.mean(counts <= args.budget):.0%}")


if __name__ == "__main__":
    main()
