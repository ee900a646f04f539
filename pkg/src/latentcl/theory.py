"""Closed-form transfer/retention predictions for every model variant,
plus prior averages, optimal gating levels, and the gating-regime
classification.

Transfer is the error drop on the new task from having trained on the old
one; retention is the error drop still held on the old task after training
on the new one. Both are normalized so an untrained network scores 0 and a
perfectly learned, perfectly remembered task scores 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

PHASE_TRADEOFF = "tradeoff"
PHASE_HIGH_ALPHA_RETENTION = "high-alpha-retention"
PHASE_NO_BENEFIT = "no-benefit"


@dataclass(frozen=True)
class SimilarityPoint:
    """Feature similarity rho_a and readout similarity rho_b, both in [0, 1]."""

    rho_a: float
    rho_b: float

    def __post_init__(self):
        for name, rho in (("rho_a", self.rho_a), ("rho_b", self.rho_b)):
            if not 0.0 <= rho <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {rho}")


@dataclass(frozen=True)
class Prediction:
    """A transfer/retention pair with a validity flag recording whether the
    asymptotic assumptions behind the formula hold at the caller's sizes."""

    transfer: float
    retention: float
    valid: bool = True
    message: str = ""


def _gated_transfer(alpha_eff: float, rho_a: float, rho_b: float) -> float:
    return alpha_eff * rho_a * (2.0 * rho_b - alpha_eff * rho_a)


def _gated_retention(alpha_eff: float, rho_a: float, rho_b: float) -> float:
    ar = alpha_eff * rho_a
    return 1.0 - ar * ar * (ar * ar - 2.0 * ar * rho_b + 1.0)


def vanilla(p: SimilarityPoint) -> Prediction:
    """Plain least-squares student: transfer rho_a (2 rho_b - rho_a),
    retention 1 - rho_a^2 (rho_a^2 - 2 rho_a rho_b + 1)."""
    return Prediction(transfer=_gated_transfer(1.0, p.rho_a, p.rho_b),
                      retention=_gated_retention(1.0, p.rho_a, p.rho_b))


def gated(alpha_eff: float, p: SimilarityPoint,
          n_s: int | None = None, n_x: int | None = None) -> Prediction:
    """Random activity gating at effective density alpha_eff; the gate scales
    the feature similarity from rho_a to alpha_eff * rho_a.

    Pass n_s and n_x to have the validity flag mark the sparse regime
    (alpha_eff * n_x <= 10 n_s) where the formulas degrade.
    """
    if not 0.0 < alpha_eff <= 1.0:
        raise ValueError(f"alpha_eff must lie in (0, 1], got {alpha_eff}")
    valid, message = True, ""
    if n_s is not None and n_x is not None and alpha_eff * n_x <= 10.0 * n_s:
        valid = False
        message = (f"sparse regime: alpha_eff * n_x = {alpha_eff * n_x:.1f} "
                   f"<= 10 n_s = {10 * n_s}")
    return Prediction(transfer=_gated_transfer(alpha_eff, p.rho_a, p.rho_b),
                      retention=_gated_retention(alpha_eff, p.rho_a, p.rho_b),
                      valid=valid, message=message)


def optimal_alpha_transfer(p: SimilarityPoint) -> float:
    """Gating level maximizing transfer: min(rho_b / rho_a, 1).

    At rho_a = 0 transfer is identically zero, so 1 is returned by convention.
    """
    if p.rho_a == 0.0:
        return 1.0
    return min(p.rho_b / p.rho_a, 1.0)


def adaptive_alpha_eff(alpha: float, p: SimilarityPoint) -> float:
    """Effective gating level of adaptive gate reuse.

    The reuse probability equals the expected normalized probe improvement
    max(0, rho_a (2 rho_b - rho_a)), so the effective level rises above
    alpha exactly when vanilla transfer would be positive.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if 2.0 * p.rho_b >= p.rho_a:
        return alpha + (1.0 - alpha) * p.rho_a * (2.0 * p.rho_b - p.rho_a)
    return alpha


def euclid(gamma: float, p: SimilarityPoint) -> Prediction:
    """Euclidean weight regularization at normalized amplitude gamma.

    Transfer is the same expression as random gating at density gamma.
    Retention carries two extra terms; the (1 - gamma)^2 one records that a
    strongly regularized network never acquires the first task.
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    ra, rb = p.rho_a, p.rho_b
    gr = gamma * ra
    retention = (1.0 - gr * gr * (1.0 - 2.0 * gr * rb + gr * gr)
                 + 2.0 * gr * (1.0 - gamma) * (rb - gr)
                 - (1.0 - gamma) * (1.0 - gamma))
    return Prediction(transfer=_gated_transfer(gamma, ra, rb), retention=retention)


def fim(p: SimilarityPoint, n_s: int, n_x: int) -> Prediction:
    """Weight regularization in the feature-space metric, variable features.

    Retention is 1 up to O(n_s / (n_x (1 - rho_a^2))); the flag goes false
    once n_s exceeds a tenth of n_x (1 - rho_a^2). Transfer equals the
    vanilla prediction because the first task is fit unregularized.
    """
    if p.rho_a >= 1.0:
        raise ValueError("rho_a = 1 has fixed features; use fim_fixed_feature")
    margin = n_x * (1.0 - p.rho_a * p.rho_a)
    valid = n_s <= 0.1 * margin
    message = "" if valid else (
        f"n_s = {n_s} exceeds 0.1 n_x (1 - rho_a^2) = {0.1 * margin:.1f}")
    return Prediction(transfer=_gated_transfer(1.0, p.rho_a, p.rho_b),
                      retention=1.0, valid=valid, message=message)


def fim_fixed_feature(gamma_f: float, rho_b: float,
                      first_task_regularized: bool = False) -> Prediction:
    """Feature-metric regularization when both tasks share the feature matrix.

    gamma_f = 1 / (1 + lambda). Transfer is gamma_f (2 rho_b - gamma_f).
    With an unregularized first task, retention is 1 - 2 gamma_f^2 (1 - rho_b).
    With a regularized first task the residual on the old task is
    (1 - gamma_f + gamma_f^2) B1 - gamma_f B2, which expands to the
    retention below (it reduces to the vanilla value 2 rho_b - 1 at
    gamma_f = 1, and to 0 in the frozen limit gamma_f -> 0).
    """
    if not 0.0 < gamma_f <= 1.0:
        raise ValueError(f"gamma_f must lie in (0, 1], got {gamma_f}")
    if not 0.0 <= rho_b <= 1.0:
        raise ValueError(f"rho_b must lie in [0, 1], got {rho_b}")
    transfer = gamma_f * (2.0 * rho_b - gamma_f)
    if first_task_regularized:
        c1 = 1.0 - gamma_f + gamma_f * gamma_f
        retention = 1.0 - c1 * c1 - gamma_f * gamma_f + 2.0 * c1 * gamma_f * rho_b
    else:
        retention = 1.0 - 2.0 * gamma_f * gamma_f * (1.0 - rho_b)
    return Prediction(transfer=transfer, retention=retention)


def uniform_prior_average(predictor: Callable[[SimilarityPoint], Prediction],
                          quadrature_n: int = 200,
                          method: str = "quadrature",
                          rng: np.random.Generator | None = None,
                          n_samples: int = 100) -> tuple[float, float]:
    """Average (transfer, retention) of a predictor over uniform similarities.

    method="quadrature" integrates over [0, 1]^2 with a composite Simpson
    rule, quadrature_n intervals per axis (rounded up to even; >= 100 keeps
    the error below 1e-6 for the piecewise-polynomial predictors here).
    method="monte_carlo" instead averages n_samples uniformly drawn pairs,
    mirroring how the simulated prior averages are estimated.
    """
    if method == "monte_carlo":
        if rng is None:
            raise ValueError("monte_carlo averaging needs an rng")
        tf = rt = 0.0
        for _ in range(n_samples):
            pred = predictor(SimilarityPoint(rng.random(), rng.random()))
            tf += pred.transfer
            rt += pred.retention
        return tf / n_samples, rt / n_samples
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    n = max(int(quadrature_n), 2)
    if n % 2:
        n += 1
    nodes = np.linspace(0.0, 1.0, n + 1)
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w /= 3.0 * n
    tf = rt = 0.0
    for i, ra in enumerate(nodes):
        for j, rb in enumerate(nodes):
            pred = predictor(SimilarityPoint(ra, rb))
            wij = w[i] * w[j]
            tf += wij * pred.transfer
            rt += wij * pred.retention
    return tf, rt


def gated_prior_average(alpha: float) -> tuple[float, float]:
    """Closed-form prior averages under random gating:
    transfer alpha/2 - alpha^2/3, retention 1 - alpha^2/3 + alpha^3/4 - alpha^4/5."""
    tf = alpha / 2.0 - alpha * alpha / 3.0
    rt = 1.0 - alpha ** 2 / 3.0 + alpha ** 3 / 4.0 - alpha ** 4 / 5.0
    return tf, rt


def optimal_alpha_average_transfer() -> float:
    """Gating level maximizing the prior-averaged transfer alpha/2 - alpha^2/3."""
    return 0.75


def gating_phase(p: SimilarityPoint) -> str:
    """Classify how the gating level trades transfer against retention.

    "no-benefit" when rho_b < rho_a (dense gating hurts both measures);
    "high-alpha-retention" inside the region where near-dense gating also
    recovers retention; "tradeoff" otherwise. Boundary equalities classify
    into "high-alpha-retention". rho_a = 0 is "tradeoff" by convention.
    """
    ra, rb = p.rho_a, p.rho_b
    if ra == 0.0:
        return PHASE_TRADEOFF
    if rb < ra:
        return PHASE_NO_BENEFIT
    in_region = (rb >= 2.0 * ra / 3.0 + 1.0 / (3.0 * ra)
                 or (rb >= 2.0 * math.sqrt(2.0) / 3.0 and ra >= 1.0 / math.sqrt(2.0)))
    return PHASE_HIGH_ALPHA_RETENTION if in_region else PHASE_TRADEOFF
