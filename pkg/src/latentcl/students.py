"""Student learning rules for the linear readout model.

Six variants: the plain least-squares fixed point, activity gating,
plasticity gating, Euclidean weight regularization, weight regularization
in the feature-space (Fisher) metric with exact and diagonal solvers, and
a sample-based SGD fit for the soft-thresholded input model. All closed
forms act on the tall feature matrix only through n_s-sized Gram blocks,
so a fit at n_x = 3000 costs milliseconds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateGateError,
    DegenerateMetricError,
    DegenerateTaskError,
    InstabilityError,
    InvalidDensityError,
    InvalidRegularizerError,
    NearDuplicateFeatureError,
)
from .linalg import thin_svd
from .taskgen import GateVector


@dataclass
class StudentState:
    """Trainable readout plus the algorithm tag and hyperparameters."""

    weight: np.ndarray
    variant: str
    hyper: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Trajectory:
    """Per-iteration errors recorded during gradient-descent training.

    errors has one row per evaluated task; row 0 is the task being trained.
    """

    iterations: np.ndarray
    errors: np.ndarray  # (n_tasks, len(iterations))
    weight: np.ndarray


@dataclass(frozen=True)
class SoftThresholdFit:
    """Result of the sample-based SGD fit; converged is False when the
    Monte Carlo loss failed to decrease over the run."""

    weight: np.ndarray
    converged: bool
    initial_loss: float
    final_loss: float


def _gate_bits(gate) -> np.ndarray | None:
    if gate is None:
        return None
    if isinstance(gate, GateVector):
        return gate.bits
    return np.asarray(gate, dtype=bool)


def _gated_features(a: np.ndarray, gate) -> np.ndarray:
    bits = _gate_bits(gate)
    if bits is None:
        return a
    return a * bits[:, None].astype(np.float64)


def error_linear(w: np.ndarray, a: np.ndarray, b: np.ndarray, gate=None) -> float:
    """Expected squared error (1/n_y) ||B - W D A||_F^2 of the gated linear model.

    The expectation over standard-normal latents is taken analytically.
    """
    da = _gated_features(a, gate)
    if w.shape[1] != da.shape[0] or b.shape[0] != w.shape[0] or b.shape[1] != da.shape[1]:
        raise ValueError(
            f"shape mismatch: W {w.shape}, A {a.shape}, B {b.shape}")
    r = b - w @ da
    return float(np.sum(r * r) / b.shape[0])


def fit_vanilla(w_prev: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Least-squares fixed point W_prev (I - U U^T) + B A^+ reached by
    full-batch gradient descent from W_prev."""
    f = thin_svd(a)
    if f.rank < a.shape[1]:
        raise DegenerateTaskError(
            f"feature matrix has rank {f.rank} < {a.shape[1]} columns")
    return _projected_update(w_prev, b, f)


def fit_gated(w_prev: np.ndarray, a: np.ndarray, b: np.ndarray,
              gate: GateVector) -> np.ndarray:
    """Activity-gated fixed point; the SVD is of the gated feature matrix."""
    bits = _gate_bits(gate)
    if int(np.count_nonzero(bits)) < a.shape[1]:
        raise DegenerateGateError(
            f"gate keeps {int(np.count_nonzero(bits))} units, need >= {a.shape[1]}")
    da = a * bits[:, None].astype(np.float64)
    f = thin_svd(da)
    if f.rank < a.shape[1]:
        raise DegenerateGateError("gated feature matrix is rank deficient")
    return _projected_update(w_prev, b, f)


def _projected_update(w_prev: np.ndarray, b: np.ndarray, f) -> np.ndarray:
    # W_prev (I - U U^T) + B V diag(1/s) U^T, with U applied as thin blocks.
    w = w_prev - (w_prev @ f.u) @ f.u.T
    w += (b @ (f.v / f.s)) @ f.u.T
    return w


def fit_plasticity_gated(w_prev: np.ndarray, a: np.ndarray, b: np.ndarray,
                         gate: GateVector) -> np.ndarray:
    """Fixed point when only synapses from gated inputs are plastic.

    Activity stays ungated, so the SVD is of the raw feature matrix; the
    gate enters through the update direction U^T D and the n_s x n_s block
    U^T D U that must be inverted.
    """
    bits = _gate_bits(gate)
    n_active = int(np.count_nonzero(bits))
    if n_active < a.shape[1]:
        raise DegenerateGateError(
            f"gate keeps {n_active} plastic inputs, need >= {a.shape[1]}")
    f = thin_svd(a)
    if f.rank < a.shape[1]:
        raise DegenerateTaskError(
            f"feature matrix has rank {f.rank} < {a.shape[1]} columns")
    du = f.u * bits[:, None].astype(np.float64)
    utdu = f.u.T @ du
    rhs = b @ (f.v / f.s) - w_prev @ f.u
    try:
        coeff = np.linalg.solve(utdu.T, rhs.T).T
    except np.linalg.LinAlgError as exc:
        raise DegenerateGateError("U^T D U is singular for this gate") from exc
    return w_prev + coeff @ du.T


def fit_reg_euclid(w_prev: np.ndarray, a: np.ndarray, b: np.ndarray,
                   lam: float) -> np.ndarray:
    """Minimizer of 0.5 ||B - W A||_F^2 + (lam/2) ||W - W_prev||_F^2.

    Solved through the Woodbury identity so only an n_s x n_s system is
    inverted: (A A^T + lam I)^-1 = (1/lam)(I - A (lam I + A^T A)^-1 A^T).
    """
    if lam < 0:
        raise InvalidRegularizerError(f"lambda must be >= 0, got {lam}")
    if lam == 0:
        return fit_vanilla(w_prev, a, b)
    n_s = a.shape[1]
    core = lam * np.eye(n_s) + a.T @ a
    # W = T (1/lam)(I - A core^-1 A^T) with T = B A^T + lam W_prev.
    t_a = b @ (a.T @ a) + lam * (w_prev @ a)      # T A, (n_y, n_s)
    inner = np.linalg.solve(core.T, t_a.T).T      # T A core^-1
    return (b @ a.T + lam * w_prev - inner @ a.T) / lam


def lambda_from_gamma(gamma: float, n_s: int, n_x: int) -> float:
    """Regularizer amplitude (n_x / n_s)(1/gamma - 1) for gamma in (0, 1]."""
    if not 0.0 < gamma <= 1.0:
        raise InvalidRegularizerError(f"gamma must lie in (0, 1], got {gamma}")
    return (n_x / n_s) * (1.0 / gamma - 1.0)


def gamma_from_lambda(lam: float, n_s: int, n_x: int) -> float:
    """Inverse of lambda_from_gamma: n_x / (n_x + lam n_s)."""
    if lam < 0:
        raise InvalidRegularizerError(f"lambda must be >= 0, got {lam}")
    return n_x / (n_x + lam * n_s)


def fit_reg_fim(w_prev: np.ndarray, a_prev: np.ndarray, a: np.ndarray,
                b: np.ndarray, lam: float) -> np.ndarray:
    """Minimizer of 0.5 ||B - W A||_F^2 + (lam/2) ||(W - W_prev) A_prev||_F^2
    reachable by gradient descent from W_prev.

    The update lives in the span of [A_prev, A]; its coefficients come from
    an exact 2 n_s x 2 n_s solve. When A_prev equals A bit-for-bit the
    stacked system is singular and the fixed-feature solution
    W_prev (I - gf U U^T) + gf B A^+ with gf = 1/(1 + lam) applies instead.
    """
    if lam <= 0:
        raise InvalidRegularizerError(f"lambda must be > 0, got {lam}")
    if a_prev.shape != a.shape:
        raise ValueError(f"feature shapes differ: {a_prev.shape} vs {a.shape}")
    if not np.any(a_prev != a):
        return _fit_fim_fixed_feature(w_prev, a, b, lam)
    n_s = a.shape[1]
    g_pp = a_prev.T @ a_prev
    g_pc = a_prev.T @ a
    g_cc = a.T @ a
    m = np.block([[lam * g_pp, g_pc], [lam * g_pc.T, g_cc]])
    rhs = np.concatenate([np.zeros((b.shape[0], n_s)), b - w_prev @ a], axis=1)
    try:
        q = np.linalg.solve(m.T, rhs.T).T
    except np.linalg.LinAlgError as exc:
        raise NearDuplicateFeatureError(
            "stacked Gram block is singular; features are (near-)identical, "
            "use the fixed-feature path") from exc
    if not np.all(np.isfinite(q)):
        raise NearDuplicateFeatureError("stacked Gram solve produced non-finite values")
    return w_prev + q[:, :n_s] @ a_prev.T + q[:, n_s:] @ a.T


def _fit_fim_fixed_feature(w_prev, a, b, lam):
    gf = 1.0 / (1.0 + lam)
    f = thin_svd(a)
    if f.rank < a.shape[1]:
        raise DegenerateTaskError(
            f"feature matrix has rank {f.rank} < {a.shape[1]} columns")
    w = w_prev - gf * (w_prev @ f.u) @ f.u.T
    w += gf * (b @ (f.v / f.s)) @ f.u.T
    return w


def fit_reg_fim_diag(w_prev: np.ndarray, a_prev: np.ndarray, a: np.ndarray,
                     b: np.ndarray, lam: float) -> np.ndarray:
    """Like fit_reg_fim but with the metric replaced by its diagonal
    c_j = (A_prev A_prev^T)_jj, a per-input-unit penalty shared across rows.

    Solved per the Woodbury identity against diag(c). A metric that is zero
    everywhere carries no penalty, so the fit falls back to the plain
    least-squares fixed point; isolated zero entries make the ridge system
    singular and are rejected.
    """
    if lam <= 0:
        raise InvalidRegularizerError(f"lambda must be > 0, got {lam}")
    c = np.sum(a_prev * a_prev, axis=1)
    if not np.any(c > 0):
        return fit_vanilla(w_prev, a, b)
    if np.any(c == 0):
        raise DegenerateMetricError(
            "diagonal metric has zero entries mixed with nonzero ones")
    n_s = a.shape[1]
    e = 1.0 / (lam * c)                      # diag((lam C)^-1)
    ea = a * e[:, None]                      # (lam C)^-1 A
    k = np.eye(n_s) + a.T @ ea
    rhs = b @ a.T + (lam * w_prev) * c[None, :]   # B A^T + lam W_prev C
    re = rhs * e[None, :]
    return re - np.linalg.solve(k.T, (re @ a).T).T @ ea.T


def soft_threshold(x, h: float) -> np.ndarray:
    """Element-wise shrink toward zero: sgn(x) * max(0, |x| - h).

    Computed as clip(x - h, 0, inf) + clip(x + h, -inf, 0), which is the
    same function with fewer array passes.
    """
    if h < 0:
        raise ValueError(f"threshold must be >= 0, got {h}")
    x = np.asarray(x, dtype=np.float64)
    pos = x - h
    np.clip(pos, 0.0, None, out=pos)
    neg = x + h
    np.clip(neg, None, 0.0, out=neg)
    pos += neg
    return pos


def threshold_for_density(alpha: float, tol: float = 1e-10) -> float:
    """Threshold h with erfc(h / sqrt(2)) = alpha, found by bisection on [0, 10].

    A standard-normal input then stays nonzero with probability alpha.
    """
    if not 0.0 < alpha <= 1.0:
        raise InvalidDensityError(f"density must lie in (0, 1], got {alpha}")
    if alpha == 1.0:
        return 0.0
    lo, hi = 0.0, 10.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if math.erfc(mid / math.sqrt(2.0)) > alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def fit_soft_threshold(w_prev: np.ndarray, a: np.ndarray, b: np.ndarray,
                       alpha: float, rng: np.random.Generator,
                       n_samples: int = 10000, eta: float = 0.01,
                       iters: int = 5000) -> SoftThresholdFit:
    """SGD fit of the readout on soft-thresholded inputs.

    Each iteration draws a fresh batch of latents, estimates the squared
    error and its gradient from it, and takes one step. The threshold is
    chosen so the input activity keeps density alpha.
    """
    h = threshold_for_density(alpha)
    n_y = b.shape[0]
    w = w_prev.astype(np.float64, copy=True)
    initial = final = math.nan
    for it in range(iters):
        s = rng.standard_normal((a.shape[1], n_samples))
        phi = soft_threshold(a @ s, h)
        resid = b @ s - w @ phi
        loss = float(np.sum(resid * resid) / (n_samples * n_y))
        if it == 0:
            initial = loss
        final = loss
        w += (2.0 * eta / (n_samples * n_y)) * resid @ phi.T
    converged = bool(final <= initial) or initial == 0.0
    return SoftThresholdFit(weight=w, converged=converged,
                            initial_loss=initial, final_loss=final)


def error_soft_threshold(w: np.ndarray, a: np.ndarray, b: np.ndarray,
                         alpha: float, rng: np.random.Generator,
                         n_samples: int = 20000) -> float:
    """Monte Carlo estimate of the soft-thresholded model's squared error."""
    h = threshold_for_density(alpha)
    s = rng.standard_normal((a.shape[1], n_samples))
    resid = b @ s - w @ soft_threshold(a @ s, h)
    return float(np.sum(resid * resid) / (n_samples * b.shape[0]))


def gd_train(w0: np.ndarray, a: np.ndarray, b: np.ndarray, eta: float,
             iters: int, gate: GateVector | None = None,
             eval_tasks: tuple = ()) -> Trajectory:
    """Full-batch gradient descent W <- W - (2 eta / n_y)(W D A - B)(D A)^T.

    Row 0 of the trajectory's errors is the training task; one more row is
    recorded per (A, B, gate) triple in eval_tasks. Errors are logged at
    iteration 0 (before any step) through iters.
    """
    da = _gated_features(a, gate)
    n_y = b.shape[0]
    evals = [(a, b, gate)] + list(eval_tasks)
    errors = np.empty((len(evals), iters + 1))
    w = w0.astype(np.float64, copy=True)
    for i, (ea, eb, eg) in enumerate(evals):
        errors[i, 0] = error_linear(w, ea, eb, eg)
    limit = 10.0 * max(errors[0, 0], 1e-12)
    for t in range(1, iters + 1):
        resid = w @ da - b
        w -= (2.0 * eta / n_y) * resid @ da.T
        for i, (ea, eb, eg) in enumerate(evals):
            errors[i, t] = error_linear(w, ea, eb, eg)
        if errors[0, t] > limit:
            raise InstabilityError(
                f"training error grew to {errors[0, t]:.3g} at iteration {t}, "
                f"more than 10x the initial {errors[0, 0]:.3g}; reduce eta")
    return Trajectory(iterations=np.arange(iters + 1), errors=errors, weight=w)
