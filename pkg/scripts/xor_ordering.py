"""Linear versus nonlinear models on the seeded XOR-cluster set (25% held out)."""

import argparse

import numpy as np

from tweetcat.models import fit_model, model_scores
from tweetcat.synthgen import xor_clusters


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--noise", type=float, default=0.35)
    args = ap.parse_args()
    X, y = xor_clusters(args.n, seed=args.seed, noise=args.noise)
    perm = np.random.default_rng(args.seed).permutation(len(y))
    cut = len(y) // 4
    test, train = perm[:cut], perm[cut:]
    for kind in ("nb", "lr", "svm", "rf", "gb", "mlp"):
        Xtr, Xte = X[train], X[test]
        if kind == "nb":  # multinomial NB needs non-negative features
            lo = X.min(axis=0)
            Xtr, Xte = Xtr - lo, Xte - lo
        m = fit_model(kind, Xtr, y[train])
        acc = np.mean(model_scores(m, Xte).predict() == y[test])
        print(f"{kind:4s} {acc:.4f}")


if __name__ == "__main__":
    main()
