"""One-hidden-layer rectified network trained by mini-batch SGD on the
squared error, with optional per-layer activity gates and anchored weight
regularizers (Euclidean, layer-wise curvature metric, diagonal metric).

Shapes are batch-first: x is (n, n_in), hidden is (n, n_h), y is (n, n_out).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateMetricError, InstabilityError


@dataclass
class MlpParams:
    """Two weight matrices and two bias vectors."""

    w1: np.ndarray  # (n_h, n_in)
    b1: np.ndarray  # (n_h,)
    w2: np.ndarray  # (n_out, n_h)
    b2: np.ndarray  # (n_out,)

    def copy(self) -> "MlpParams":
        return MlpParams(self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2.copy())


def init_params(n_hidden: int, rng: np.random.Generator, n_in: int = 784,
                n_out: int = 10) -> MlpParams:
    """Small random start: layer-1 entries have variance 1/n_hidden^2 and
    layer-2 entries variance 1/n_out^2, biases included."""
    s1 = 1.0 / n_hidden
    s2 = 1.0 / n_out
    return MlpParams(
        w1=rng.normal(0.0, s1, size=(n_hidden, n_in)),
        b1=rng.normal(0.0, s1, size=n_hidden),
        w2=rng.normal(0.0, s2, size=(n_out, n_hidden)),
        b2=rng.normal(0.0, s2, size=n_out),
    )


def mlp_forward(params: MlpParams, x: np.ndarray, gates=None):
    """Forward pass; returns (output, hidden activation, hidden derivative mask).

    gates, when given, is (input_gate, hidden_gate); the input gate
    multiplies x before layer 1 and the hidden gate multiplies the rectified
    activation before layer 2. Either entry may be None. A single input
    vector comes back as a single output vector.
    """
    single = x.ndim == 1
    xb = np.atleast_2d(x)
    g_in = g_hid = None
    if gates is not None:
        g_in, g_hid = gates
    if g_in is not None:
        xb = xb * np.asarray(g_in, dtype=np.float64)[None, :]
    pre = xb @ params.w1.T + params.b1
    mask = pre > 0
    hidden = np.where(mask, pre, 0.0)
    if g_hid is not None:
        hidden = hidden * np.asarray(g_hid, dtype=np.float64)[None, :]
    y = hidden @ params.w2.T + params.b2
    if single:
        return y[0], hidden[0], mask[0]
    return y, hidden, mask


def mse(params: MlpParams, x: np.ndarray, targets: np.ndarray, gates=None) -> float:
    """Squared error (1/n_out) mean_i ||y_i - y*_i||^2."""
    y, _, _ = mlp_forward(params, x, gates)
    d = y - targets
    return float(np.mean(np.sum(d * d, axis=1)) / targets.shape[1])


def backprop(params: MlpParams, x: np.ndarray, targets: np.ndarray,
             gates=None) -> tuple[float, MlpParams]:
    """Loss 0.5 mean_i ||y_i - y*_i||^2 and its parameter gradients."""
    xb = np.atleast_2d(x)
    tb = np.atleast_2d(targets)
    n = xb.shape[0]
    g_in = g_hid = None
    if gates is not None:
        g_in, g_hid = gates
    if g_in is not None:
        xb = xb * np.asarray(g_in, dtype=np.float64)[None, :]
    pre = xb @ params.w1.T + params.b1
    mask = pre > 0
    hidden = np.where(mask, pre, 0.0)
    if g_hid is not None:
        hidden = hidden * np.asarray(g_hid, dtype=np.float64)[None, :]
    y = hidden @ params.w2.T + params.b2
    diff = y - tb
    loss = 0.5 * float(np.sum(diff * diff)) / n
    d_y = diff / n
    g_w2 = d_y.T @ hidden
    g_b2 = d_y.sum(axis=0)
    d_h = d_y @ params.w2
    if g_hid is not None:
        d_h = d_h * np.asarray(g_hid, dtype=np.float64)[None, :]
    d_pre = np.where(mask, d_h, 0.0)
    g_w1 = d_pre.T @ xb
    g_b1 = d_pre.sum(axis=0)
    return loss, MlpParams(w1=g_w1, b1=g_b1, w2=g_w2, b2=g_b2)


class EuclidReg:
    """Quadratic pull of both weight matrices toward anchor weights;
    biases are left unregularized."""

    def __init__(self, anchor: MlpParams, amplitude: float):
        self.anchor = anchor
        self.amplitude = amplitude

    def penalty(self, params: MlpParams) -> float:
        d1 = params.w1 - self.anchor.w1
        d2 = params.w2 - self.anchor.w2
        return 0.5 * self.amplitude * float(np.sum(d1 * d1) + np.sum(d2 * d2))

    def grads(self, params: MlpParams) -> tuple[np.ndarray, np.ndarray]:
        return (self.amplitude * (params.w1 - self.anchor.w1),
                self.amplitude * (params.w2 - self.anchor.w2))


@dataclass(frozen=True)
class AnchorStats:
    """Input/hidden second moments of the previous task at its final weights.

    m_x = <x x^T>, m_phi = <phi phi^T>, and the layer-1 curvature factor
    g = <grad_phi W2^T W2 grad_phi>; f1/f2 are the per-coefficient diagonal
    factors with their normalizers z1_diag/z2_diag. z1/z2 normalize the
    layer-wise penalty by spectral norms.
    """

    m_x: np.ndarray
    m_phi: np.ndarray
    g: np.ndarray
    z1: float
    z2: float
    f1: np.ndarray
    f2: np.ndarray
    z1_diag: float
    z2_diag: float


def spectral_norm(m: np.ndarray, iters: int = 100, tol: float = 1e-8) -> float:
    """Largest singular value by power iteration on the symmetric m."""
    v = np.ones(m.shape[0]) / np.sqrt(m.shape[0])
    prev = 0.0
    for _ in range(iters):
        v = m @ v
        norm = float(np.linalg.norm(v))
        if norm == 0.0:
            return 0.0
        v /= norm
        if abs(norm - prev) <= tol * max(norm, 1.0):
            return norm
        prev = norm
    return prev


def anchor_stats(params: MlpParams, x: np.ndarray, gates=None,
                 n_samples: int = 5000,
                 rng: np.random.Generator | None = None) -> AnchorStats:
    """Estimate the anchored-metric statistics from task data at params.

    A random n_samples subset of x is used when the data is larger.
    """
    if rng is not None and x.shape[0] > n_samples:
        idx = rng.choice(x.shape[0], size=n_samples, replace=False)
        x = x[idx]
    n = x.shape[0]
    g_in = g_hid = None
    if gates is not None:
        g_in, g_hid = gates
    xb = x if g_in is None else x * np.asarray(g_in, dtype=np.float64)[None, :]
    pre = xb @ params.w1.T + params.b1
    mask = (pre > 0).astype(np.float64)
    phi = np.where(pre > 0, pre, 0.0)
    if g_hid is not None:
        phi = phi * np.asarray(g_hid, dtype=np.float64)[None, :]
        mask = mask * np.asarray(g_hid, dtype=np.float64)[None, :]
    m_x = xb.T @ xb / n
    m_phi = phi.T @ phi / n
    k = params.w2.T @ params.w2
    g = k * (mask.T @ mask / n)
    z1 = spectral_norm(params.w2 @ params.w2.T) * spectral_norm(m_x)
    z2 = spectral_norm(m_phi)
    s2 = np.sum(params.w2 * params.w2, axis=0)           # (n_h,)
    t = (mask * mask).T @ (xb * xb) / n                  # <mask_i x_j^2>
    f1 = s2[:, None] * t
    f2 = np.mean(phi * phi, axis=0)
    return AnchorStats(m_x=m_x, m_phi=m_phi, g=g, z1=float(z1), z2=float(z2),
                       f1=f1, f2=f2, z1_diag=float(f1.max()),
                       z2_diag=float(f2.max()))


class LayerwiseFimReg:
    """Curvature-metric weight anchor with the cross-layer terms dropped.

    Layer-1 deviations are penalized through <grad_phi W2^T W2 grad_phi> on
    the left and <x x^T> on the right; layer-2 deviations through
    <phi phi^T>. Each term is normalized by the spectral norms z1/z2 so the
    amplitude knob is comparable with the Euclidean regularizer's.
    """

    def __init__(self, anchor: MlpParams, stats: AnchorStats, amplitude: float):
        if stats.z1 <= 0 or stats.z2 <= 0:
            raise DegenerateMetricError("layer-wise metric normalizers are zero")
        self.anchor = anchor
        self.stats = stats
        self.amplitude = amplitude

    def penalty(self, params: MlpParams) -> float:
        d1 = params.w1 - self.anchor.w1
        d2 = params.w2 - self.anchor.w2
        t1 = float(np.sum(d1 * (self.stats.g @ d1 @ self.stats.m_x))) / self.stats.z1
        t2 = float(np.sum(d2 * (d2 @ self.stats.m_phi))) / self.stats.z2
        return 0.5 * self.amplitude * (t1 + t2)

    def grads(self, params: MlpParams) -> tuple[np.ndarray, np.ndarray]:
        d1 = params.w1 - self.anchor.w1
        d2 = params.w2 - self.anchor.w2
        g1 = self.stats.g @ d1 @ self.stats.m_x / self.stats.z1
        g2 = d2 @ self.stats.m_phi / self.stats.z2
        return self.amplitude * g1, self.amplitude * g2


class DiagFimReg:
    """Per-coefficient quadratic anchor: the diagonal of the curvature metric."""

    def __init__(self, anchor: MlpParams, stats: AnchorStats, amplitude: float):
        if stats.z1_diag <= 0 or stats.z2_diag <= 0:
            raise DegenerateMetricError("diagonal metric normalizers are zero")
        self.anchor = anchor
        self.stats = stats
        self.amplitude = amplitude

    def penalty(self, params: MlpParams) -> float:
        d1 = params.w1 - self.anchor.w1
        d2 = params.w2 - self.anchor.w2
        t1 = float(np.sum(self.stats.f1 * d1 * d1)) / self.stats.z1_diag
        t2 = float(np.sum(self.stats.f2[None, :] * d2 * d2)) / self.stats.z2_diag
        return 0.5 * self.amplitude * (t1 + t2)

    def grads(self, params: MlpParams) -> tuple[np.ndarray, np.ndarray]:
        d1 = params.w1 - self.anchor.w1
        d2 = params.w2 - self.anchor.w2
        g1 = self.stats.f1 * d1 / self.stats.z1_diag
        g2 = self.stats.f2[None, :] * d2 / self.stats.z2_diag
        return self.amplitude * g1, self.amplitude * g2


def sgd_epoch(params: MlpParams, x: np.ndarray, targets: np.ndarray,
              batch: int, eta: float, rng: np.random.Generator,
              gates=None, regularizer=None) -> float:
    """One shuffled pass of mini-batch SGD; params are updated in place and
    the mean per-batch training loss is returned."""
    n = x.shape[0]
    if batch > n:
        raise ValueError(f"batch {batch} exceeds dataset size {n}")
    order = rng.permutation(n)
    losses = []
    for start in range(0, n - batch + 1, batch):
        idx = order[start:start + batch]
        loss, grads = backprop(params, x[idx], targets[idx], gates)
        if regularizer is not None:
            r1, r2 = regularizer.grads(params)
            grads.w1 += r1
            grads.w2 += r2
            loss += regularizer.penalty(params)
        params.w1 -= eta * grads.w1
        params.b1 -= eta * grads.b1
        params.w2 -= eta * grads.w2
        params.b2 -= eta * grads.b2
        losses.append(loss)
        if loss > 1e3 or not np.isfinite(loss):
            raise InstabilityError(
                f"training loss reached {loss:.3g}; reduce the learning rate")
    return float(np.mean(losses))
