"""Command-line front end.

Subcommands: theory (closed-form predictions over a similarity grid),
sweep (simulation sweeps from a JSON config), average (prior-averaged
performance, simulated and analytical), mnist (one permuted-digit run),
selftest (fast invariant suite). Exit codes: 0 success, 1 runtime failure,
2 usage or configuration error. All randomness flows from explicit seeds;
environment variables are never consulted.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments, linalg, students, theory
from .errors import ConfigError, LatentCLError
from .mnist_latent import (
    PROFILES,
    load_idx,
    make_synthetic_mnist,
    run_mnist_experiment,
    write_mnist_csv,
)
from .mnist_latent.protocol import MNIST_VARIANTS, find_idx_pair

_DEFAULT_GRID = tuple(round(0.1 * i, 1) for i in range(11))

THEORY_VARIANTS = ("vanilla", "gated", "adaptive_gated", "euclid", "fim",
                   "fim_fixed")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_text_atomic(path: Path, payload: str) -> None:
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    try:
        tmp.write_text(payload, encoding="utf-8", newline="\n")
        os.replace(tmp, path)
    except OSError:
        tmp.unlink(missing_ok=True)
        raise


def _emit(payload: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(payload)
    else:
        _write_text_atomic(Path(out), payload)


def _theory_prediction(args, rho_a: float, rho_b: float):
    p = theory.SimilarityPoint(rho_a, rho_b)
    if args.variant == "vanilla":
        return theory.vanilla(p), 1.0
    if args.variant == "gated":
        return theory.gated(args.alpha, p, n_s=args.n_s, n_x=args.n_x), args.alpha
    if args.variant == "adaptive_gated":
        eff = theory.adaptive_alpha_eff(args.alpha, p)
        return theory.gated(eff, p, n_s=args.n_s, n_x=args.n_x), args.alpha
    if args.variant == "euclid":
        return theory.euclid(args.gamma, p), args.gamma
    if args.variant == "fim":
        if rho_a == 1.0:
            lam = students.lambda_from_gamma(args.gamma, args.n_s, args.n_x)
            return theory.fim_fixed_feature(
                1.0 / (1.0 + lam), rho_b,
                first_task_regularized=args.first_task_regularized), args.gamma
        return theory.fim(p, args.n_s, args.n_x), args.gamma
    if args.variant == "fim_fixed":
        return theory.fim_fixed_feature(
            args.gamma_f, rho_b,
            first_task_regularized=args.first_task_regularized), args.gamma_f
    raise ConfigError(f"unknown theory variant {args.variant!r}")


def cmd_theory(args) -> int:
    rho_a = args.rho_a if args.rho_a is not None else list(_DEFAULT_GRID)
    rho_b = args.rho_b if args.rho_b is not None else list(_DEFAULT_GRID)
    if not rho_a or not rho_b:
        raise ConfigError("similarity grid is empty")
    if args.variant in ("gated", "adaptive_gated") and args.alpha is None:
        raise ConfigError(f"{args.variant} needs --alpha")
    if args.variant in ("euclid", "fim") and args.gamma is None:
        raise ConfigError(f"{args.variant} needs --gamma")
    if args.variant == "fim_fixed" and args.gamma_f is None:
        raise ConfigError("fim_fixed needs --gamma-f")
    lines = ["variant,rho_a,rho_b,hyper,transfer,retention,valid"]
    for ra in rho_a:
        for rb in rho_b:
            pred, hyper = _theory_prediction(args, ra, rb)
            lines.append(",".join([
                args.variant, _fmt(ra), _fmt(rb), _fmt(hyper),
                _fmt(pred.transfer), _fmt(pred.retention),
                "true" if pred.valid else "false"]))
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_sweep(args) -> int:
    spec = experiments.SweepSpec.from_json_file(args.config)
    if args.small:
        small = dict(experiments.SMALL_DIMS)
        spec = experiments.SweepSpec.from_dict({
            **{k: v for k, v in spec.__dict__.items()},
            **small, "seeds": experiments.SMALL_SEEDS})
    def progress(done, total):
        if done == total or done % 50 == 0:
            print(f"\r{done}/{total} cells", end="", file=sys.stderr, flush=True)
    rows = experiments.run_sweep(spec, max_workers=args.threads, progress=progress)
    print(file=sys.stderr)
    if args.out is None:
        lines = [experiments.CSV_HEADER]
        for r in rows:
            lines.append(",".join([
                r.variant, _fmt(r.rho_a), _fmt(r.rho_b), _fmt(r.hyper),
                str(r.seed), _fmt(r.transfer_sim), _fmt(r.retention_sim),
                _fmt(r.transfer_theory), _fmt(r.retention_theory),
                "true" if r.valid else "false", _fmt(r.seconds)]))
        sys.stdout.write("\n".join(lines) + "\n")
    else:
        experiments.write_csv(rows, args.out)
    failures = sum(1 for r in rows if r.error)
    if failures:
        print(f"{failures} cells carried error tags", file=sys.stderr)
    return 0


def cmd_average(args) -> int:
    hyper = "optimal" if args.hyper == "optimal" else float(args.hyper)
    avg = experiments.average_over_prior(
        args.variant, hyper, args.n_pairs, seeds=tuple(args.seeds),
        n_s=args.n_s, n_x=args.n_x, n_y=args.n_y, max_workers=args.threads)
    pred_tf = pred_rt = float("nan")
    if args.variant == "vanilla":
        pred_tf, pred_rt = theory.uniform_prior_average(theory.vanilla, 200)
    elif args.variant == "gated" and hyper != "optimal":
        pred_tf, pred_rt = theory.gated_prior_average(float(hyper))
    elif args.variant == "gated" and hyper == "optimal":
        pred_tf = 0.25
    lines = ["variant,hyper,n,transfer_avg,transfer_sem,retention_avg,"
             "retention_sem,transfer_theory,retention_theory"]
    lines.append(",".join([
        args.variant, str(args.hyper), str(avg.n), _fmt(avg.transfer_avg),
        _fmt(avg.transfer_sem), _fmt(avg.retention_avg), _fmt(avg.retention_sem),
        _fmt(pred_tf), _fmt(pred_rt)]))
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_mnist(args) -> int:
    if args.data_dir is None and not args.synthetic:
        raise ConfigError("give --data-dir with IDX files or --synthetic N")
    if args.data_dir is not None:
        train_pair = find_idx_pair(args.data_dir, "train")
        test_pair = find_idx_pair(args.data_dir, "test")
        if train_pair is None or test_pair is None:
            raise ConfigError(
                f"could not find train/t10k IDX file pairs under {args.data_dir}")
        train = load_idx(*train_pair, split="train")
        test = load_idx(*test_pair, split="test")
    else:
        train, test = make_synthetic_mnist(args.synthetic,
                                           max(args.synthetic // 5, 100),
                                           seed=args.seed)
    result = run_mnist_experiment(
        train, test, args.profile, args.variant, args.rho_a, args.rho_b,
        amplitude=args.amplitude, alpha=args.alpha, seed=args.seed)
    if args.out is None:
        print(f"transfer {result.transfer:+.4f} retention {result.retention:+.4f} "
              f"(task1 mse {result.test_mse_task1:.4f}, task2 mse "
              f"{result.test_mse_task2:.4f})")
    else:
        write_mnist_csv([result], args.out)
    return 0


def _selftest_checks():
    rng = np.random.default_rng(2024)
    # pseudo-inverse contract on random tall matrices
    worst = 0.0
    for _ in range(50):
        m = rng.normal(size=(rng.integers(20, 80), rng.integers(3, 12)))
        p = linalg.pinv(m)
        worst = max(worst, float(np.abs(p @ m - np.eye(m.shape[1])).max()))
    yield "pinv identity residual over 50 tall matrices", worst, 1e-8

    f = linalg.thin_svd(rng.normal(size=(200, 30)))
    orth = max(float(np.abs(f.u.T @ f.u - np.eye(f.rank)).max()),
               float(np.abs(f.v.T @ f.v - np.eye(f.rank)).max()))
    yield "thin SVD orthogonality residual", orth, 1e-10

    tf, rt = theory.uniform_prior_average(theory.vanilla, 200)
    yield "prior-average transfer vs 1/6", abs(tf - 1.0 / 6.0), 1e-6
    yield "prior-average retention vs 43/60", abs(rt - 43.0 / 60.0), 1e-6

    worst = 0.0
    for gamma in (0.1, 0.4, 0.75, 1.0):
        for ra in (0.0, 0.3, 0.8, 1.0):
            for rb in (0.0, 0.5, 1.0):
                p = theory.SimilarityPoint(ra, rb)
                worst = max(worst, abs(theory.euclid(gamma, p).transfer
                                       - theory.gated(gamma, p).transfer))
    yield "euclid/gated transfer identity", worst, 0.0

    w_prev = rng.normal(size=(3, 12))
    a = rng.normal(size=(12, 4))
    b = rng.normal(size=(3, 4))
    lam = 2.5
    dense = (b @ a.T + lam * w_prev) @ np.linalg.inv(a @ a.T + lam * np.eye(12))
    wood = students.fit_reg_euclid(w_prev, a, b, lam)
    yield "ridge Woodbury vs dense solve", float(np.abs(dense - wood).max()), 1e-9

    gate = np.ones(12, dtype=bool)
    from .taskgen import GateVector
    gv = GateVector(bits=gate, alpha=1.0)
    w_gate = students.fit_gated(w_prev, a, b, gv)
    w_van = students.fit_vanilla(w_prev, a, b)
    yield "all-ones gate equals plain fit", float(np.abs(w_gate - w_van).max()), 1e-12

    sv = students.soft_threshold(np.array([2.0, -2.0, 0.5]), 1.0)
    yield "soft threshold hand case", float(np.abs(sv - [1.0, -1.0, 0.0]).max()), 0.0


def cmd_selftest(_args) -> int:
    failures = 0
    for name, actual, limit in _selftest_checks():
        ok = actual <= limit
        status = "pass" if ok else "FAIL"
        print(f"[{status}] {name}: {actual:.3g} (limit {limit:.3g})")
        failures += 0 if ok else 1
    if failures:
        print(f"{failures} selftest checks failed", file=sys.stderr)
        return 1
    print("selftest passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latentcl",
        description="Continual-learning lab for latent-structured tasks")
    sub = parser.add_subparsers(dest="command", required=True)

    p_theory = sub.add_parser("theory", help="closed-form predictions over a grid")
    p_theory.add_argument("--variant", required=True, choices=THEORY_VARIANTS)
    p_theory.add_argument("--rho-a", type=float, nargs="*", default=None)
    p_theory.add_argument("--rho-b", type=float, nargs="*", default=None)
    p_theory.add_argument("--alpha", type=float, default=None)
    p_theory.add_argument("--gamma", type=float, default=None)
    p_theory.add_argument("--gamma-f", type=float, default=None)
    p_theory.add_argument("--first-task-regularized", action="store_true")
    p_theory.add_argument("--n-s", type=int, default=30)
    p_theory.add_argument("--n-x", type=int, default=3000)
    p_theory.add_argument("--out", default=None)
    p_theory.set_defaults(func=cmd_theory)

    p_sweep = sub.add_parser("sweep", help="run a simulation sweep from JSON config")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out", default=None)
    p_sweep.add_argument("--threads", type=int, default=None)
    p_sweep.add_argument("--small", action="store_true",
                         help="shrink dims/seeds to the CI profile")
    p_sweep.set_defaults(func=cmd_sweep)

    p_avg = sub.add_parser("average", help="prior-averaged performance")
    p_avg.add_argument("--variant", required=True, choices=experiments.VARIANTS)
    p_avg.add_argument("--hyper", required=True,
                       help="hyperparameter value, or 'optimal' for per-pair optimum")
    p_avg.add_argument("--n-pairs", type=int, default=100)
    p_avg.add_argument("--seeds", type=int, nargs="+", default=list(range(10)))
    p_avg.add_argument("--n-s", type=int, default=30)
    p_avg.add_argument("--n-x", type=int, default=3000)
    p_avg.add_argument("--n-y", type=int, default=10)
    p_avg.add_argument("--threads", type=int, default=None)
    p_avg.add_argument("--out", default=None)
    p_avg.set_defaults(func=cmd_average)

    p_mnist = sub.add_parser("mnist", help="one permuted-digit latent run")
    p_mnist.add_argument("--data-dir", default=None)
    p_mnist.add_argument("--synthetic", type=int, default=0, metavar="N",
                         help="use N synthetic training images instead of files")
    p_mnist.add_argument("--profile", choices=sorted(PROFILES), default="desk")
    p_mnist.add_argument("--variant", choices=MNIST_VARIANTS, default="vanilla")
    p_mnist.add_argument("--rho-a", type=float, required=True)
    p_mnist.add_argument("--rho-b", type=float, required=True)
    p_mnist.add_argument("--amplitude", type=float, default=1.0)
    p_mnist.add_argument("--alpha", type=float, default=0.5)
    p_mnist.add_argument("--seed", type=int, default=0)
    p_mnist.add_argument("--out", default=None)
    p_mnist.set_defaults(func=cmd_mnist)

    p_self = sub.add_parser("selftest", help="fast invariant suite")
    p_self.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LatentCLError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
