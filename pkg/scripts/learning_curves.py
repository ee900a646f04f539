#!/usr/bin/env python3
"""Two-phase learning curves of the plain student: error on both tasks
while training on task 1 and then on task 2.

    python scripts/learning_curves.py --rho-a 0.8 --rho-b 0.3 --out curves.csv
"""
import argparse
import sys

import numpy as np

from latentcl.students import StudentState, gd_train
from latentcl.taskgen import EnsembleConfig, gen_task_pair


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rho-a", type=float, default=0.8)
    ap.add_argument("--rho-b", type=float, default=0.3)
    ap.add_argument("--eta", type=float, default=0.001)
    ap.add_argument("--iters", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    cfg = EnsembleConfig(n_s=30, n_x=3000, n_y=10, rho_a=args.rho_a,
                         rho_b=args.rho_b, seed=args.seed)
    tp = gen_task_pair(cfg)
    student = StudentState(weight=np.zeros((cfg.n_y, cfg.n_x)), variant="vanilla",
                           hyper=dict(eta=args.eta, iters=args.iters))
    phase1 = gd_train(student.weight, tp.a1, tp.b1, args.eta, args.iters,
                      eval_tasks=[(tp.a2, tp.b2, None)])
    student.weight = phase1.weight
    phase2 = gd_train(student.weight, tp.a2, tp.b2, args.eta, args.iters,
                      eval_tasks=[(tp.a1, tp.b1, None)])

    lines = ["iteration,task1_error,task2_error"]
    for t in phase1.iterations:
        lines.append(f"{t},{phase1.errors[0, t]:.6f},{phase1.errors[1, t]:.6f}")
    for t in phase2.iterations[1:]:
        step = args.iters + int(t)
        lines.append(f"{step},{phase2.errors[1, t]:.6f},{phase2.errors[0, t]:.6f}")
    payload = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload)
        print(f"wrote {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(payload)
    return 0


if __name__ == "__main__":
    sys.exit(main())
