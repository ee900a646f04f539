"""Two-task continual-learning protocol on permuted digit images with
latent targets.

Feature similarity is the fraction of unpermuted pixels between tasks;
readout similarity is the fraction of entries of the 10 x 4 latent readout
kept between tasks. Targets are the readout applied to the centered 4-bit
binary code of the digit, and all errors are test-set squared errors
normalized by the output width, so the transfer/retention deltas live on
the same scale as the linear model's.
"""
from __future__ import annotations

import os
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from ..taskgen import STREAM_MLP, substream
from .idx import MnistDataset
from .mlp import (
    DiagFimReg,
    EuclidReg,
    LayerwiseFimReg,
    MlpParams,
    anchor_stats,
    init_params,
    mse,
    sgd_epoch,
)

N_PIXELS = 784
N_LATENT = 4
N_OUT = 10

MNIST_VARIANTS = ("vanilla", "gated", "adaptive_gated", "reg_euclid",
                  "reg_fim_layerwise", "reg_fim_diag")


@dataclass(frozen=True)
class Profile:
    """Scale profile for one experiment run."""

    name: str
    n_hidden: int
    epochs_task1: int
    epochs_task2: int
    train_subset: int | None
    test_subset: int | None
    batch: int = 300
    eta: float = 0.01


PROFILES = {
    "paper": Profile("paper", n_hidden=1500, epochs_task1=100, epochs_task2=10,
                     train_subset=None, test_subset=None),
    "desk": Profile("desk", n_hidden=200, epochs_task1=10, epochs_task2=40,
                    train_subset=10000, test_subset=2000),
}


@dataclass(frozen=True)
class MnistLatentTask:
    """Pixel permutation plus latent readout of one task."""

    permutation: np.ndarray  # int64, (784,), a bijection
    readout: np.ndarray      # (10, 4)
    rho_a: float
    rho_b: float

    def view(self, images: np.ndarray) -> np.ndarray:
        """Task-specific pixel arrangement: column i is original pixel
        permutation[i]."""
        return images[:, self.permutation]


def latent_of_digit(digit: int) -> np.ndarray:
    """Big-endian 4-bit binary code of the digit, e.g. 9 -> (1, 0, 0, 1)."""
    if not 0 <= digit <= 9:
        raise ValueError(f"digit out of range: {digit}")
    return np.array([(digit >> k) & 1 for k in (3, 2, 1, 0)], dtype=np.float64)


_LATENT_TABLE = None


def _latent_table() -> np.ndarray:
    global _LATENT_TABLE
    if _LATENT_TABLE is None:
        _LATENT_TABLE = np.stack([latent_of_digit(d) for d in range(10)])
    return _LATENT_TABLE


def make_target(digit: int, readout: np.ndarray) -> np.ndarray:
    """Target output B (s_digit - 1/2)."""
    if readout.shape != (N_OUT, N_LATENT):
        raise ValueError(f"readout must be {N_OUT} x {N_LATENT}, got {readout.shape}")
    return readout @ (latent_of_digit(digit) - 0.5)


def task_targets(labels: np.ndarray, readout: np.ndarray) -> np.ndarray:
    """Targets for a whole label vector, shape (n, 10)."""
    return (_latent_table()[labels] - 0.5) @ readout.T


def initial_task(rng: np.random.Generator) -> MnistLatentTask:
    """First task: unpermuted pixels and a fresh standard-normal readout."""
    return MnistLatentTask(permutation=np.arange(N_PIXELS),
                           readout=rng.standard_normal((N_OUT, N_LATENT)),
                           rho_a=1.0, rho_b=1.0)


def gen_successor_task(prev: MnistLatentTask, rho_a: float, rho_b: float,
                       rng: np.random.Generator) -> MnistLatentTask:
    """Follow-up task: permute a (1 - rho_a) fraction of pixel positions
    among themselves and resample a (1 - rho_b) fraction of readout entries."""
    if not (0.0 <= rho_a <= 1.0 and 0.0 <= rho_b <= 1.0):
        raise ValueError(f"similarities must lie in [0, 1], got ({rho_a}, {rho_b})")
    perm = prev.permutation.copy()
    n_move = int(round((1.0 - rho_a) * N_PIXELS))
    if n_move > 1:
        positions = rng.choice(N_PIXELS, size=n_move, replace=False)
        perm[positions] = perm[rng.permutation(positions)]
    readout = rng.standard_normal((N_OUT, N_LATENT))
    n_keep = int(round(rho_b * N_OUT * N_LATENT))
    if n_keep > 0:
        flat_keep = rng.choice(N_OUT * N_LATENT, size=n_keep, replace=False)
        readout.ravel()[flat_keep] = prev.readout.ravel()[flat_keep]
    return MnistLatentTask(permutation=perm, readout=readout,
                           rho_a=rho_a, rho_b=rho_b)


def nearest_target_accuracy(params: MlpParams, x: np.ndarray,
                            labels: np.ndarray, readout: np.ndarray,
                            gates=None) -> float:
    """Classification accuracy by decoding to the nearest digit target."""
    from .mlp import mlp_forward

    prototypes = (_latent_table() - 0.5) @ readout.T   # (10, 10)
    y, _, _ = mlp_forward(params, x, gates)
    d2 = np.sum((y[:, None, :] - prototypes[None, :, :]) ** 2, axis=2)
    return float(np.mean(np.argmin(d2, axis=1) == labels))


def make_synthetic_mnist(n_train: int, n_test: int, seed: int = 0):
    """Deterministic stand-in digit corpus with per-class image structure.

    Each class is a fixed mixture of Gaussian bumps on the 28 x 28 grid;
    samples scale the prototype and add pixel noise, quantized to the same
    256 levels real files carry. Useful wherever the real dataset files are
    not available; the learning dynamics only need class-conditional
    structure, not actual handwriting.
    """
    rng = substream(seed, STREAM_MLP, 997)
    grid = np.stack(np.meshgrid(np.arange(28), np.arange(28), indexing="ij"),
                    axis=-1).reshape(-1, 2).astype(np.float64)
    prototypes = np.zeros((10, N_PIXELS))
    for d in range(10):
        img = np.zeros(N_PIXELS)
        for _ in range(3):
            center = rng.uniform(4, 24, size=2)
            width = rng.uniform(2.0, 4.0)
            amp = rng.uniform(0.6, 1.0)
            dist2 = np.sum((grid - center) ** 2, axis=1)
            img += amp * np.exp(-dist2 / (2.0 * width * width))
        prototypes[d] = img / img.max()

    def draw(n, split):
        labels = rng.integers(0, 10, size=n)
        bright = rng.uniform(0.7, 1.0, size=(n, 1))
        noise = rng.normal(0.0, 0.08, size=(n, N_PIXELS))
        images = np.clip(prototypes[labels] * bright + noise, 0.0, 1.0)
        images = np.rint(images * 255.0) / 255.0
        return MnistDataset(images=images, labels=labels, split=split)

    return draw(n_train, "train"), draw(n_test, "test")


def find_idx_pair(data_dir, split: str) -> tuple[Path, Path] | None:
    """Locate the conventional IDX file names for a split under data_dir."""
    data_dir = Path(data_dir)
    stem = "train" if split == "train" else "t10k"
    for suffix in ("", ".gz"):
        images = data_dir / f"{stem}-images-idx3-ubyte{suffix}"
        labels = data_dir / f"{stem}-labels-idx1-ubyte{suffix}"
        if images.exists() and labels.exists():
            return images, labels
    return None


@dataclass
class MnistResult:
    """One two-task run; deltas follow the same convention as the sweep rows."""

    variant: str
    rho_a: float
    rho_b: float
    hyper: float
    seed: int
    transfer: float
    retention: float
    epoch_t2_at_eval: int
    test_mse_task1: float
    test_mse_task2: float
    baseline_task1: float
    baseline_task2: float
    seconds: float
    probe_rho_g: float | None = None


def _resolve_profile(profile) -> Profile:
    if isinstance(profile, Profile):
        return profile
    try:
        return PROFILES[profile]
    except KeyError:
        raise ConfigError(f"unknown profile {profile!r}; pick from {sorted(PROFILES)}") from None


def _bernoulli_gate(n: int, alpha: float, rng: np.random.Generator) -> np.ndarray:
    if alpha >= 1.0:
        return np.ones(n)
    return (rng.random(n) < alpha).astype(np.float64)


def _reuse_gate(prev: np.ndarray, rho_g: float, alpha: float,
                rng: np.random.Generator) -> np.ndarray:
    keep = rng.random(prev.shape[0]) < rho_g
    fresh = _bernoulli_gate(prev.shape[0], alpha, rng)
    return np.where(keep, prev, fresh)


def run_mnist_experiment(train: MnistDataset, test: MnistDataset, profile,
                         variant: str, rho_a: float, rho_b: float,
                         amplitude: float = 1.0, alpha: float = 0.5,
                         seed: int = 0) -> MnistResult:
    """Train on task 1, then on task 2, and measure the transfer/retention
    deltas on held-out data.

    Transfer compares the task-2 test error at the initial weights with the
    error after task-1 training; retention compares the task-1 test error
    at the initial weights with the error after task-2 training. Anchored
    regularizers take their statistics from task-1 training data at the
    task-1 final weights; adaptive gating runs a probe evaluation with the
    task-1 gates before deciding how much of them to reuse.
    """
    if variant not in MNIST_VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}; pick from {MNIST_VARIANTS}")
    prof = _resolve_profile(profile)
    start = time.perf_counter()
    if prof.train_subset:
        train = train.subset(prof.train_subset)
    if prof.test_subset:
        test = test.subset(prof.test_subset)

    init_rng = substream(seed, STREAM_MLP, 0)
    task_rng = substream(seed, STREAM_MLP, 1)
    epoch_rng = substream(seed, STREAM_MLP, 2)
    gate_rng = substream(seed, STREAM_MLP, 3)
    stats_rng = substream(seed, STREAM_MLP, 4)

    task1 = initial_task(task_rng)
    task2 = gen_successor_task(task1, rho_a, rho_b, task_rng)
    x1_train, x2_train = task1.view(train.images), task2.view(train.images)
    y1_train = task_targets(train.labels, task1.readout)
    y2_train = task_targets(train.labels, task2.readout)
    x1_test, x2_test = task1.view(test.images), task2.view(test.images)
    y1_test = task_targets(test.labels, task1.readout)
    y2_test = task_targets(test.labels, task2.readout)

    gated = variant in ("gated", "adaptive_gated")
    g1 = g2 = None
    if gated:
        g1 = (_bernoulli_gate(N_PIXELS, alpha, gate_rng),
              _bernoulli_gate(prof.n_hidden, alpha, gate_rng))

    params0 = init_params(prof.n_hidden, init_rng)
    params = params0.copy()
    for _ in range(prof.epochs_task1):
        sgd_epoch(params, x1_train, y1_train, prof.batch, prof.eta, epoch_rng,
                  gates=g1)
    params1 = params.copy()

    probe_rho_g = None
    if gated:
        if variant == "adaptive_gated":
            probe_error = mse(params1, x2_test, y2_test, gates=g1)
            baseline = mse(params0, x2_test, y2_test, gates=g1)
            probe_rho_g = 0.0
            if baseline > 0:
                probe_rho_g = min(1.0, max(0.0, 1.0 - probe_error / baseline))
            g2 = (_reuse_gate(g1[0], probe_rho_g, alpha, gate_rng),
                  _reuse_gate(g1[1], probe_rho_g, alpha, gate_rng))
        else:
            g2 = (_bernoulli_gate(N_PIXELS, alpha, gate_rng),
                  _bernoulli_gate(prof.n_hidden, alpha, gate_rng))

    regularizer = None
    if variant in ("reg_euclid", "reg_fim_layerwise", "reg_fim_diag"):
        if variant == "reg_euclid":
            regularizer = EuclidReg(params1, amplitude)
        else:
            stats = anchor_stats(params1, x1_train, gates=g1, rng=stats_rng)
            cls = LayerwiseFimReg if variant == "reg_fim_layerwise" else DiagFimReg
            regularizer = cls(params1, stats, amplitude)

    baseline_task2 = mse(params0, x2_test, y2_test, gates=g2)
    baseline_task1 = mse(params0, x1_test, y1_test, gates=g1)
    e2_w1 = mse(params1, x2_test, y2_test, gates=g2)

    for _ in range(prof.epochs_task2):
        sgd_epoch(params, x2_train, y2_train, prof.batch, prof.eta, epoch_rng,
                  gates=g2, regularizer=regularizer)

    e1_w2 = mse(params, x1_test, y1_test, gates=g1)
    e2_w2 = mse(params, x2_test, y2_test, gates=g2)
    hyper = alpha if gated else (amplitude if regularizer is not None else 1.0)
    return MnistResult(
        variant=variant, rho_a=rho_a, rho_b=rho_b, hyper=hyper, seed=seed,
        transfer=baseline_task2 - e2_w1, retention=baseline_task1 - e1_w2,
        epoch_t2_at_eval=prof.epochs_task2, test_mse_task1=e1_w2,
        test_mse_task2=e2_w2, baseline_task1=baseline_task1,
        baseline_task2=baseline_task2, seconds=time.perf_counter() - start,
        probe_rho_g=probe_rho_g)


MNIST_CSV_HEADER = ("variant,rho_a,rho_b,hyper,seed,transfer_sim,retention_sim,"
                    "transfer_theory,retention_theory,valid,seconds,"
                    "epoch_T2_at_eval,test_mse_task1,test_mse_task2")


def write_mnist_csv(results: list[MnistResult], destination) -> None:
    """Emit results in the sweep CSV schema extended with the evaluation
    epoch and the raw task errors; written atomically."""
    destination = Path(destination)
    fmt = lambda x: format(float(x), ".17g")
    lines = [MNIST_CSV_HEADER]
    for r in results:
        lines.append(",".join([
            r.variant, fmt(r.rho_a), fmt(r.rho_b), fmt(r.hyper), str(r.seed),
            fmt(r.transfer), fmt(r.retention), "nan", "nan", "true",
            fmt(r.seconds), str(r.epoch_t2_at_eval), fmt(r.test_mse_task1),
            fmt(r.test_mse_task2)]))
    payload = "\n".join(lines) + "\n"
    tmp = destination.with_name(destination.name + f".tmp{os.getpid()}")
    try:
        tmp.write_text(payload, encoding="utf-8", newline="\n")
        os.replace(tmp, destination)
    except OSError as exc:
        tmp.unlink(missing_ok=True)
        raise OSError(f"failed writing results CSV to {destination}: {exc}") from exc
