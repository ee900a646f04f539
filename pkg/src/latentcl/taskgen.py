"""Seeded generation of correlated task pairs, gates, and latent samples.

Every random object is drawn from its own substream, derived from a seed
plus a structural key via numpy's SeedSequence. Adding draws to one stream
therefore never shifts any other, and a sweep cell can be regenerated
bit-identically from (seed, cell index) alone.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidDensityError

# Substream ids. Fixed constants are part of the determinism contract.
STREAM_A1 = 0
STREAM_A2 = 1
STREAM_B1 = 2
STREAM_B2 = 3
STREAM_GATE1 = 4
STREAM_GATE2 = 5
STREAM_LATENT = 6
STREAM_SGD = 7
STREAM_SIMILARITY = 8
STREAM_MLP = 9


def substream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the substream identified by (seed, *key)."""
    return np.random.default_rng(np.random.SeedSequence((int(seed),) + tuple(int(k) for k in key)))


@dataclass(frozen=True)
class EnsembleConfig:
    """Dimensions, similarities, and seed for one correlated task pair."""

    n_s: int
    n_x: int
    n_y: int
    rho_a: float
    rho_b: float
    seed: int

    def __post_init__(self):
        if self.n_s < 1 or self.n_y < 1 or self.n_x < self.n_s:
            raise ValueError(
                f"need n_s >= 1, n_y >= 1, n_x >= n_s, got ({self.n_s}, {self.n_x}, {self.n_y})")
        for name, rho in (("rho_a", self.rho_a), ("rho_b", self.rho_b)):
            if not 0.0 <= rho <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {rho}")


@dataclass(frozen=True)
class TaskPair:
    """Two correlated teacher tasks: features a1/a2, readouts b1/b2."""

    a1: np.ndarray
    a2: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    config: EnsembleConfig


@dataclass(frozen=True)
class GateVector:
    """Binary unit gate with its target density."""

    bits: np.ndarray  # bool, shape (n_x,)
    alpha: float

    @property
    def active(self) -> int:
        return int(np.count_nonzero(self.bits))


def _gaussian_mixing(rng: np.random.Generator, rows: int, cols: int, n_s: int) -> np.ndarray:
    return rng.normal(0.0, 1.0 / np.sqrt(n_s), size=(rows, cols))


def _correlated_resample(prev: np.ndarray, rho: float, rng: np.random.Generator,
                         n_s: int) -> np.ndarray:
    """Keep each entry of prev with probability rho, else redraw it fresh."""
    if rho == 1.0:
        return prev.copy()
    fresh = _gaussian_mixing(rng, prev.shape[0], prev.shape[1], n_s)
    if rho == 0.0:
        return fresh
    keep = rng.random(prev.shape) < rho
    return np.where(keep, prev, fresh)


def gen_task_pair(cfg: EnsembleConfig) -> TaskPair:
    """Draw (A1, B1) i.i.d. N(0, 1/n_s) and the entry-wise correlated (A2, B2)."""
    a1 = _gaussian_mixing(substream(cfg.seed, STREAM_A1), cfg.n_x, cfg.n_s, cfg.n_s)
    b1 = _gaussian_mixing(substream(cfg.seed, STREAM_B1), cfg.n_y, cfg.n_s, cfg.n_s)
    a2 = _correlated_resample(a1, cfg.rho_a, substream(cfg.seed, STREAM_A2), cfg.n_s)
    b2 = _correlated_resample(b1, cfg.rho_b, substream(cfg.seed, STREAM_B2), cfg.n_s)
    return TaskPair(a1=a1, a2=a2, b1=b1, b2=b2, config=cfg)


def gen_gate(n_x: int, alpha: float, rng: np.random.Generator) -> GateVector:
    """I.i.d. Bernoulli(alpha) gate over n_x units."""
    if not 0.0 < alpha <= 1.0:
        raise InvalidDensityError(f"gate density must lie in (0, 1], got {alpha}")
    if alpha == 1.0:
        bits = np.ones(n_x, dtype=bool)
    else:
        bits = rng.random(n_x) < alpha
    return GateVector(bits=bits, alpha=alpha)


def gen_correlated_gate(prev: GateVector, rho_g: float, alpha: float,
                        rng: np.random.Generator) -> GateVector:
    """Copy each bit of prev with probability rho_g, else redraw Bernoulli(alpha).

    The fraction of units active in both gates is then alpha * alpha_eff with
    alpha_eff = rho_g + (1 - rho_g) * alpha.
    """
    if not 0.0 <= rho_g <= 1.0:
        raise ValueError(f"rho_g must lie in [0, 1], got {rho_g}")
    if not 0.0 < alpha <= 1.0:
        raise InvalidDensityError(f"gate density must lie in (0, 1], got {alpha}")
    if rho_g == 1.0:
        return GateVector(bits=prev.bits.copy(), alpha=alpha)
    keep = rng.random(prev.bits.shape[0]) < rho_g
    fresh = rng.random(prev.bits.shape[0]) < alpha
    if rho_g == 0.0:
        return GateVector(bits=fresh, alpha=alpha)
    return GateVector(bits=np.where(keep, prev.bits, fresh), alpha=alpha)


def sample_latents(n_s: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. standard-normal latent columns, shape (n_s, n)."""
    if n < 1:
        raise ValueError(f"need at least one sample, got {n}")
    return rng.standard_normal((n_s, n))
