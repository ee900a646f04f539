#!/usr/bin/env python3
"""Desk-scale permuted-digit runs over the similarity corners and the
continual-learning variants; writes one CSV with all runs.

Uses real IDX files when --data-dir is given, otherwise the bundled
synthetic digit generator.

    python scripts/run_mnist_desk.py --seeds 0 1 2 --out desk.csv
"""
import argparse
import sys
import time

from latentcl.mnist_latent import (
    load_idx,
    make_synthetic_mnist,
    run_mnist_experiment,
    write_mnist_csv,
)
from latentcl.mnist_latent.protocol import find_idx_pair

CASES = [
    ("vanilla", 1.0, 0.0, {}),
    ("vanilla", 0.0, 1.0, {}),
    ("vanilla", 1.0, 1.0, {}),
    ("vanilla", 1.0, 0.5, {}),
    ("gated", 1.0, 0.5, dict(alpha=0.3)),
    ("adaptive_gated", 1.0, 0.5, dict(alpha=0.3)),
    ("reg_euclid", 0.5, 0.5, dict(amplitude=3.0)),
    ("reg_fim_layerwise", 0.5, 0.5, dict(amplitude=3.0)),
    ("reg_fim_diag", 0.5, 0.5, dict(amplitude=3.0)),
]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data-dir", default=None)
    ap.add_argument("--profile", default="desk")
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--out", default="mnist_desk.csv")
    args = ap.parse_args()

    if args.data_dir:
        train = load_idx(*find_idx_pair(args.data_dir, "train"), split="train")
        test = load_idx(*find_idx_pair(args.data_dir, "test"), split="test")
    else:
        train, test = make_synthetic_mnist(10000, 2000, seed=0)

    results = []
    for variant, ra, rb, kw in CASES:
        for seed in args.seeds:
            t0 = time.perf_counter()
            res = run_mnist_experiment(train, test, args.profile, variant,
                                       ra, rb, seed=seed, **kw)
            results.append(res)
            print(f"{variant} ({ra},{rb}) seed {seed}: transfer "
                  f"{res.transfer:+.3f} retention {res.retention:+.3f} "
                  f"[{time.perf_counter() - t0:.1f}s]", file=sys.stderr)
    write_mnist_csv(results, args.out)
    print(f"wrote {args.out} ({len(results)} runs)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
