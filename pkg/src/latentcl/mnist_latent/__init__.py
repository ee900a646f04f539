"""Permuted-digit validation of the linear predictions on a one-hidden-layer
rectified network with latent targets."""

from .idx import IMAGES_MAGIC, LABELS_MAGIC, MnistDataset, load_idx, write_idx
from .mlp import (
    AnchorStats,
    DiagFimReg,
    EuclidReg,
    LayerwiseFimReg,
    MlpParams,
    anchor_stats,
    backprop,
    init_params,
    mlp_forward,
    sgd_epoch,
)
from .protocol import (
    PROFILES,
    MnistLatentTask,
    MnistResult,
    Profile,
    gen_successor_task,
    initial_task,
    latent_of_digit,
    make_synthetic_mnist,
    make_target,
    run_mnist_experiment,
    task_targets,
    write_mnist_csv,
)

__all__ = [
    "IMAGES_MAGIC", "LABELS_MAGIC", "MnistDataset", "load_idx", "write_idx",
    "AnchorStats", "DiagFimReg", "EuclidReg", "LayerwiseFimReg", "MlpParams",
    "anchor_stats", "backprop", "init_params", "mlp_forward", "sgd_epoch",
    "PROFILES", "MnistLatentTask", "MnistResult", "Profile",
    "gen_successor_task", "initial_task", "latent_of_digit",
    "make_synthetic_mnist", "make_target", "run_mnist_experiment",
    "task_targets", "write_mnist_csv",
]
