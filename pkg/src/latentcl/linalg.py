"""Dense matrix primitives: thin SVD, pseudo-inverse, and the concentration
diagnostics for very tall random matrices that the rest of the package
leans on.

Everything here is float64; the pseudo-inverse contract (identity residual
below 1e-8 at aspect ratios around 100) is not attainable in float32.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGateError, NonFiniteInputError

DEFAULT_RANK_TOL = 1e-10


@dataclass(frozen=True)
class ThinSvd:
    """Rank-truncated SVD, M ~= u @ diag(s) @ v.T with semi-orthonormal u, v."""

    u: np.ndarray  # (n, r)
    s: np.ndarray  # (r,) descending, all > 0
    v: np.ndarray  # (m, r)

    @property
    def rank(self) -> int:
        return self.s.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.s) @ self.v.T


def _as_float_matrix(m, name: str = "matrix") -> np.ndarray:
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"{name} must be 2-D and non-empty, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteInputError(f"{name} contains non-finite entries")
    return a


def thin_svd(m, rank_tol: float = DEFAULT_RANK_TOL) -> ThinSvd:
    """SVD keeping only singular triplets with sigma > rank_tol * sigma_max."""
    a = _as_float_matrix(m)
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return ThinSvd(u[:, :0], s[:0], vt.T[:, :0])
    keep = s > rank_tol * s[0]
    return ThinSvd(np.ascontiguousarray(u[:, keep]), s[keep],
                   np.ascontiguousarray(vt[keep].T))


def pinv(m, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Moore-Penrose pseudo-inverse via the thin SVD, v @ diag(1/s) @ u.T."""
    f = thin_svd(m, rank_tol)
    if f.rank == 0:
        a = np.asarray(m)
        return np.zeros((a.shape[1], a.shape[0]))
    return (f.v / f.s) @ f.u.T


def gram_deviation(a) -> float:
    """Squared Frobenius distance of (1/n_x) A^T A from (1/n_s) I.

    For A with i.i.d. N(0, 1/n_s) entries the expectation of this quantity
    is (1/n_x) (1 + 1/n_s), so it vanishes as the matrix gets taller.
    """
    a = _as_float_matrix(a)
    n_x, n_s = a.shape
    g = a.T @ a / n_x
    g[np.diag_indices(n_s)] -= 1.0 / n_s
    return float(np.sum(g * g))


def projector_approx_error(a, gate) -> float:
    """Relative error of the scaled-outer-product surrogate for U U^T.

    U comes from the thin SVD of D A (D = diag(gate)); the surrogate is
    (n_s / (alpha n_x)) * D A A^T D with alpha the realized gate density.
    Small only when the gated matrix is still very tall (alpha n_x >> n_s);
    gates sparse enough to lose column rank return an order-one error,
    which is exactly the breakdown this diagnostic is for. Computed from
    n_s x n_s Gram blocks, no n_x x n_x matrix is formed.
    """
    a = _as_float_matrix(a)
    n_x, n_s = a.shape
    g = np.asarray(gate, dtype=np.float64).reshape(-1)
    if g.shape[0] != n_x:
        raise ValueError(f"gate length {g.shape[0]} does not match rows {n_x}")
    active = float(np.count_nonzero(g))
    da = a * g[:, None]
    f = thin_svd(da)
    if active == 0 or f.rank == 0:
        raise DegenerateGateError("gate keeps no rows, projector undefined")
    alpha = active / n_x
    c = n_s / (alpha * n_x)
    # ||UU^T - c M M^T||_F^2 = r - 2c ||M^T U||_F^2 + c^2 ||M^T M||_F^2
    mtu = da.T @ f.u
    mtm = da.T @ da
    sq = f.rank - 2.0 * c * np.sum(mtu * mtu) + c * c * np.sum(mtm * mtm)
    return float(np.sqrt(max(sq, 0.0)) / np.sqrt(f.rank))
