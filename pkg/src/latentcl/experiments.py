"""Sweep harness: run (variant x similarity x hyperparameter x seed) cells,
pair each simulated cell with its analytical prediction, aggregate over
seeds, and read/write the CSV that downstream plotting consumes.

Cells are deterministic functions of (seed, similarity index); execution
order and worker count never change a row.
"""
from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import students, theory
from .errors import ConfigError, LatentCLError
from .taskgen import (
    STREAM_GATE1,
    STREAM_GATE2,
    STREAM_SGD,
    STREAM_SIMILARITY,
    EnsembleConfig,
    GateVector,
    gen_correlated_gate,
    gen_gate,
    gen_task_pair,
    substream,
)

VARIANTS = (
    "vanilla",
    "gated",
    "adaptive_gated",
    "plasticity_gated",
    "soft_threshold",
    "reg_euclid",
    "reg_fim",
    "reg_fim_diag",
)

CSV_HEADER = ("variant,rho_a,rho_b,hyper,seed,transfer_sim,retention_sim,"
              "transfer_theory,retention_theory,valid,seconds")

# Training protocol lengths for iterative mode; heavier regularized models
# need the longer schedule to reach their fixed points.
_DEFAULT_ITERS = {
    "vanilla": 100,
    "gated": 100,
    "adaptive_gated": 100,
    "plasticity_gated": 500,
    "reg_euclid": 500,
    "reg_fim": 500,
    "reg_fim_diag": 500,
}

DEFAULT_DIMS = dict(n_s=30, n_x=3000, n_y=10)
SMALL_DIMS = dict(n_s=10, n_x=500, n_y=10)
DEFAULT_SEEDS = tuple(range(10))
SMALL_SEEDS = tuple(range(5))


@dataclass(frozen=True)
class SweepSpec:
    """Full description of one sweep; the JSON config mirrors these fields."""

    variant: str
    hyper: tuple[float, ...] = (1.0,)
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    rho_a: tuple[float, ...] | None = None
    rho_b: tuple[float, ...] | None = None
    n_random_pairs: int | None = None
    n_s: int = 30
    n_x: int = 3000
    n_y: int = 10
    mode: str = "closed_form"
    eta: float = 0.001
    iterations: int | None = None
    sgd_samples: int = 10000
    sgd_eta: float = 0.01
    sgd_iters: int = 5000
    eval_samples: int = 20000

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; pick one of {VARIANTS}")
        if self.mode not in ("closed_form", "iterative"):
            raise ConfigError(f"mode must be closed_form or iterative, got {self.mode!r}")
        if not self.hyper:
            raise ConfigError("hyper grid is empty")
        if not self.seeds:
            raise ConfigError("seeds list is empty")
        has_grid = self.rho_a is not None or self.rho_b is not None
        if has_grid and (not self.rho_a or not self.rho_b):
            raise ConfigError("rho_a and rho_b lists must both be given and non-empty")
        if not has_grid and not self.n_random_pairs:
            raise ConfigError("give rho_a/rho_b lists or n_random_pairs")
        if has_grid and self.n_random_pairs:
            raise ConfigError("rho_a/rho_b lists and n_random_pairs are mutually exclusive")
        EnsembleConfig(self.n_s, self.n_x, self.n_y, 0.0, 0.0, 0)  # dim check

    @classmethod
    def from_dict(cls, data: dict) -> "SweepSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        coerced = dict(data)
        for key in ("hyper", "seeds", "rho_a", "rho_b"):
            if coerced.get(key) is not None:
                coerced[key] = tuple(coerced[key])
        try:
            return cls(**coerced)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json_file(cls, path) -> "SweepSpec":
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        return cls.from_dict(raw)

    def task_iterations(self) -> int:
        if self.iterations is not None:
            return self.iterations
        return _DEFAULT_ITERS.get(self.variant, 100)


@dataclass(frozen=True)
class ProbeRecord:
    """Outcome of the adaptive-gating probe trial before gate resampling."""

    probe_error: float
    rho_g: float
    realized_overlap: float


@dataclass
class ResultRow:
    """One sweep cell. seconds is measured wall-clock time and the only
    field exempt from the bit-exact determinism contract."""

    variant: str
    rho_a: float
    rho_b: float
    hyper: float
    seed: int
    transfer_sim: float
    retention_sim: float
    transfer_theory: float
    retention_theory: float
    valid: bool
    seconds: float
    error: str | None = None
    probe: ProbeRecord | None = None

    def sort_key(self):
        return (self.variant, self.rho_a, self.rho_b, self.hyper, self.seed)


@dataclass(frozen=True)
class CellStats:
    """Seed statistics for one grid cell; std is the population convention,
    sem = std / sqrt(n)."""

    variant: str
    rho_a: float
    rho_b: float
    hyper: float
    n: int
    transfer_mean: float
    transfer_std: float
    transfer_sem: float
    retention_mean: float
    retention_std: float
    retention_sem: float
    transfer_theory: float
    retention_theory: float
    valid: bool


@dataclass(frozen=True)
class PriorAverage:
    """Simulated average performance under uniformly sampled similarities."""

    transfer_avg: float
    retention_avg: float
    transfer_sem: float
    retention_sem: float
    n: int


def _task_seed(seed: int, sim_index: int) -> int:
    return int(np.random.SeedSequence((int(seed), int(sim_index))).generate_state(1, np.uint64)[0])


def similarity_pair(spec: SweepSpec, seed: int, sim_index: int) -> tuple[float, float]:
    """The (rho_a, rho_b) of a sampled-similarity cell; fresh per seed so
    prior averages see n_pairs * n_seeds independent similarity draws."""
    rng = substream(seed, STREAM_SIMILARITY, sim_index)
    return float(rng.random()), float(rng.random())


def _similarity_grid(spec: SweepSpec) -> list[tuple[float, float]] | None:
    if spec.rho_a is None:
        return None
    return [(ra, rb) for ra in spec.rho_a for rb in spec.rho_b]


class _Episode:
    """One two-task run under a single variant.

    For the linear variants the two simulated deltas are evaluated with the
    readout ensemble integrated out analytically: every fit here is linear
    in (W_prev, B), so running it on identity "basis" readouts yields the
    operators K1, P, Q with W1 = B1 K1 and W2 = B1 P + B2 Q, from which the
    expected errors over correlated Gaussian readouts follow in closed
    form. This is the same order of integration the analytical predictions
    use, and it removes the readout-norm noise that otherwise dominates
    small seed ensembles. Only the feature matrices and gates stay Monte
    Carlo. The soft-threshold variant is nonlinear in its samples and keeps
    fully simulated errors.
    """

    def __init__(self, spec: SweepSpec, rho_a: float, rho_b: float,
                 hyper: float, seed: int, sim_index: int, hyper_index: int):
        self.spec = spec
        self.hyper = hyper
        self.point = theory.SimilarityPoint(rho_a, rho_b)
        cfg = EnsembleConfig(spec.n_s, spec.n_x, spec.n_y, rho_a, rho_b,
                             _task_seed(seed, sim_index))
        self.task = gen_task_pair(cfg)
        self.cfg = cfg
        self.hyper_index = hyper_index
        self.probe: ProbeRecord | None = None
        self.sgd_flag: str | None = None

    def stream(self, stream_id: int) -> np.random.Generator:
        return substream(self.cfg.seed, stream_id, self.hyper_index)

    def basis_readout(self) -> np.ndarray:
        return np.eye(self.spec.n_s)

    def zero_operator(self) -> np.ndarray:
        return np.zeros((self.spec.n_s, self.spec.n_x))

    def zero_weight(self) -> np.ndarray:
        return np.zeros((self.spec.n_y, self.spec.n_x))


def ensemble_error(x1: np.ndarray, x2: np.ndarray, rho_b: float) -> float:
    """Expected (1/n_y) ||B1 X1 + B2 X2||_F^2 over correlated readouts.

    B1, B2 have i.i.d. N(0, 1/n_s) entries with entry-wise keep probability
    rho_b, giving (||X1||^2 + ||X2||^2 + 2 rho_b tr(X1^T X2)) / n_s.
    """
    n_s = x1.shape[0]
    return float((np.sum(x1 * x1) + np.sum(x2 * x2)
                  + 2.0 * rho_b * np.sum(x1 * x2)) / n_s)


def _gd_fit(w0, a, b, eta, iters, n_y, gate: GateVector | None = None,
            plastic_gate: GateVector | None = None,
            reg_grad=None) -> np.ndarray:
    """Full-gradient descent used by iterative sweep mode; returns the final
    weight only (learning curves live in students.gd_train)."""
    da = a if gate is None else a * gate.bits[:, None].astype(np.float64)
    update_mask = None
    if plastic_gate is not None:
        update_mask = plastic_gate.bits.astype(np.float64)
    w = w0.astype(np.float64, copy=True)
    scale = 2.0 * eta / n_y
    for _ in range(iters):
        grad = (w @ da - b) @ da.T
        if update_mask is not None:
            grad = grad * update_mask[None, :]
        if reg_grad is not None:
            grad = grad + reg_grad(w)
        w -= scale * grad
        if not np.all(np.isfinite(w)):
            raise students.InstabilityError("iterative fit diverged; reduce eta")
    return w


def _soft_threshold_deltas(ep: _Episode) -> tuple[float, float]:
    """Fully simulated deltas for the SGD-fit soft-threshold variant."""
    spec, tp = ep.spec, ep.task
    alpha = ep.hyper
    rng = ep.stream(STREAM_SGD)
    w0 = ep.zero_weight()
    fit1 = students.fit_soft_threshold(
        w0, tp.a1, tp.b1, alpha, rng, n_samples=spec.sgd_samples,
        eta=spec.sgd_eta, iters=spec.sgd_iters)
    fit2 = students.fit_soft_threshold(
        fit1.weight, tp.a2, tp.b2, alpha, rng, n_samples=spec.sgd_samples,
        eta=spec.sgd_eta, iters=spec.sgd_iters)
    if not (fit1.converged and fit2.converged):
        ep.sgd_flag = "sgd_not_converged"
    e2_w0 = students.error_linear(w0, tp.a2, tp.b2)
    e1_w0 = students.error_linear(w0, tp.a1, tp.b1)
    e2_w1 = students.error_soft_threshold(fit1.weight, tp.a2, tp.b2, alpha,
                                          rng, spec.eval_samples)
    e1_w2 = students.error_soft_threshold(fit2.weight, tp.a1, tp.b1, alpha,
                                          rng, spec.eval_samples)
    return e2_w0 - e2_w1, e1_w0 - e1_w2


def _fit_operators(ep: _Episode) -> tuple[np.ndarray, np.ndarray, np.ndarray, dict]:
    """Basis-readout operators (k1, p, q) of the episode's linear variant,
    so that W1 = B1 k1 and W2 = B1 p + B2 q."""
    spec, tp = ep.spec, ep.task
    iterative = spec.mode == "iterative"
    iters = spec.task_iterations()
    variant = spec.variant
    eye = ep.basis_readout()
    zero = ep.zero_operator()

    def fit_pair(fit1, fit2):
        k1 = fit1(zero, tp.a1, eye)
        p = fit2(k1, tp.a2, np.zeros_like(eye))
        q = fit2(zero, tp.a2, eye)
        return k1, p, q

    if variant in ("gated", "adaptive_gated"):
        alpha = ep.hyper
        g1 = gen_gate(spec.n_x, alpha, ep.stream(STREAM_GATE1))
        if iterative:
            k1 = _gd_fit(zero, tp.a1, eye, spec.eta, iters, spec.n_y, gate=g1)
        else:
            k1 = students.fit_gated(zero, tp.a1, eye, g1)
        if variant == "adaptive_gated":
            # Probe trial: expected error of W1 on task 2 while keeping the
            # task-1 gate, relative to the untrained baseline of 1.
            da2 = tp.a2 * g1.bits[:, None].astype(np.float64)
            probe_error = ensemble_error(-(k1 @ da2), eye, ep.cfg.rho_b)
            rho_g = min(1.0, max(0.0, 1.0 - probe_error))
            g2 = gen_correlated_gate(g1, rho_g, alpha, ep.stream(STREAM_GATE2))
            both = np.count_nonzero(g1.bits & g2.bits)
            ep.probe = ProbeRecord(probe_error=probe_error, rho_g=rho_g,
                                   realized_overlap=both / (alpha * spec.n_x))
        else:
            g2 = gen_gate(spec.n_x, alpha, ep.stream(STREAM_GATE2))
        if iterative:
            p = _gd_fit(k1, tp.a2, np.zeros_like(eye), spec.eta, iters, spec.n_y, gate=g2)
            q = _gd_fit(zero, tp.a2, eye, spec.eta, iters, spec.n_y, gate=g2)
        else:
            p = students.fit_gated(k1, tp.a2, np.zeros_like(eye), g2)
            q = students.fit_gated(zero, tp.a2, eye, g2)
        return k1, p, q, dict(gate1=g1, gate2=g2)

    if variant == "plasticity_gated":
        alpha = ep.hyper
        g1 = gen_gate(spec.n_x, alpha, ep.stream(STREAM_GATE1))
        g2 = gen_gate(spec.n_x, alpha, ep.stream(STREAM_GATE2))
        if iterative:
            fit1 = lambda w, a, b: _gd_fit(w, a, b, spec.eta, iters, spec.n_y,
                                           plastic_gate=g1)
            fit2 = lambda w, a, b: _gd_fit(w, a, b, spec.eta, iters, spec.n_y,
                                           plastic_gate=g2)
        else:
            fit1 = lambda w, a, b: students.fit_plasticity_gated(w, a, b, g1)
            fit2 = lambda w, a, b: students.fit_plasticity_gated(w, a, b, g2)
        return (*fit_pair(fit1, fit2), {})

    if variant == "reg_euclid":
        lam = students.lambda_from_gamma(ep.hyper, spec.n_s, spec.n_x)
        if iterative:
            def fit_reg(w, a, b):
                return _gd_fit(w, a, b, spec.eta, iters, spec.n_y,
                               reg_grad=lambda cur, anchor=w: lam * (cur - anchor))
            return (*fit_pair(fit_reg, fit_reg), {})
        fit_reg = lambda w, a, b: students.fit_reg_euclid(w, a, b, lam)
        return (*fit_pair(fit_reg, fit_reg), {})

    if variant in ("reg_fim", "reg_fim_diag"):
        lam = students.lambda_from_gamma(ep.hyper, spec.n_s, spec.n_x)
        if iterative:
            fit1 = lambda w, a, b: _gd_fit(w, a, b, spec.eta, iters, spec.n_y)
            if variant == "reg_fim":
                def fit2(w, a, b):
                    return _gd_fit(w, a, b, spec.eta, iters, spec.n_y,
                                   reg_grad=lambda cur, anchor=w, ap=tp.a1:
                                       lam * (((cur - anchor) @ ap) @ ap.T))
            else:
                c = np.sum(tp.a1 * tp.a1, axis=1)
                def fit2(w, a, b):
                    return _gd_fit(w, a, b, spec.eta, iters, spec.n_y,
                                   reg_grad=lambda cur, anchor=w:
                                       lam * (cur - anchor) * c[None, :])
        else:
            fit1 = students.fit_vanilla
            if variant == "reg_fim":
                fit2 = lambda w, a, b: students.fit_reg_fim(w, tp.a1, a, b, lam)
            else:
                fit2 = lambda w, a, b: students.fit_reg_fim_diag(w, tp.a1, a, b, lam)
        return (*fit_pair(fit1, fit2), {})

    # vanilla
    if iterative:
        fit = lambda w, a, b: _gd_fit(w, a, b, spec.eta, iters, spec.n_y)
        return (*fit_pair(fit, fit), {})
    return (*fit_pair(students.fit_vanilla, students.fit_vanilla), {})


def _linear_deltas(ep: _Episode, k1, p, q, kwargs) -> tuple[float, float]:
    """Transfer/retention with the readout ensemble integrated out.

    The untrained baselines average to exactly 1; the trained errors are
    ensemble expectations of the residual operators. Evaluation always uses
    the gate of the task being evaluated.
    """
    tp, rho_b = ep.task, ep.cfg.rho_b
    g1 = kwargs.get("gate1")
    g2 = kwargs.get("gate2")
    da1 = tp.a1 if g1 is None else tp.a1 * g1.bits[:, None].astype(np.float64)
    da2 = tp.a2 if g2 is None else tp.a2 * g2.bits[:, None].astype(np.float64)
    eye = np.eye(ep.spec.n_s)
    e2_w1 = ensemble_error(-(k1 @ da2), eye, rho_b)
    e1_w2 = ensemble_error(eye - p @ da1, -(q @ da1), rho_b)
    return 1.0 - e2_w1, 1.0 - e1_w2


def attach_theory(spec: SweepSpec, rho_a: float, rho_b: float,
                  hyper: float) -> theory.Prediction:
    """Analytical prediction matching a sweep cell; variants without a
    closed form get NaNs with the flag left true."""
    p = theory.SimilarityPoint(rho_a, rho_b)
    if spec.variant == "gated":
        return theory.gated(hyper, p, n_s=spec.n_s, n_x=spec.n_x)
    if spec.variant == "adaptive_gated":
        alpha_eff = theory.adaptive_alpha_eff(hyper, p)
        return theory.gated(alpha_eff, p, n_s=spec.n_s, n_x=spec.n_x)
    if spec.variant == "reg_euclid":
        return theory.euclid(hyper, p)
    if spec.variant == "reg_fim":
        if rho_a == 1.0:
            lam = students.lambda_from_gamma(hyper, spec.n_s, spec.n_x)
            return theory.fim_fixed_feature(1.0 / (1.0 + lam), rho_b,
                                            first_task_regularized=False)
        return theory.fim(p, spec.n_s, spec.n_x)
    if spec.variant == "reg_fim_diag":
        return theory.Prediction(transfer=float("nan"), retention=float("nan"))
    return theory.vanilla(p)


def run_cell(spec: SweepSpec, rho_a: float, rho_b: float, hyper: float,
             seed: int, sim_index: int = 0, hyper_index: int = 0) -> ResultRow:
    """One (similarity, hyperparameter, seed) episode.

    Task matrices depend only on (seed, sim_index), so cells that differ in
    variant or hyperparameter alone see identical tasks; domain errors come
    back as tagged rows rather than exceptions.
    """
    start = time.perf_counter()
    pred = attach_theory(spec, rho_a, rho_b, hyper)
    try:
        ep = _Episode(spec, rho_a, rho_b, hyper, seed, sim_index, hyper_index)
        if spec.variant == "soft_threshold":
            transfer, retention = _soft_threshold_deltas(ep)
        else:
            k1, p, q, kwargs = _fit_operators(ep)
            transfer, retention = _linear_deltas(ep, k1, p, q, kwargs)
        return ResultRow(
            variant=spec.variant, rho_a=rho_a, rho_b=rho_b, hyper=hyper,
            seed=seed, transfer_sim=transfer, retention_sim=retention,
            transfer_theory=pred.transfer, retention_theory=pred.retention,
            valid=pred.valid, seconds=time.perf_counter() - start,
            error=ep.sgd_flag, probe=ep.probe)
    except LatentCLError as exc:
        return ResultRow(
            variant=spec.variant, rho_a=rho_a, rho_b=rho_b, hyper=hyper,
            seed=seed, transfer_sim=float("nan"), retention_sim=float("nan"),
            transfer_theory=pred.transfer, retention_theory=pred.retention,
            valid=False, seconds=time.perf_counter() - start, error=str(exc))


def run_sweep(spec: SweepSpec, max_workers: int | None = None,
              progress=None) -> list[ResultRow]:
    """All cells of the spec, sorted by (variant, rho_a, rho_b, hyper, seed).

    progress, when given, is called with (done, total) after each cell.
    """
    grid = _similarity_grid(spec)
    cells = []
    for seed in spec.seeds:
        if grid is None:
            sims = [similarity_pair(spec, seed, i) for i in range(spec.n_random_pairs)]
        else:
            sims = grid
        for sim_index, (ra, rb) in enumerate(sims):
            for hyper_index, hyper in enumerate(spec.hyper):
                cells.append((ra, rb, hyper, seed, sim_index, hyper_index))

    total = len(cells)
    rows: list[ResultRow] = []
    if max_workers is None:
        max_workers = os.cpu_count() or 1
    if max_workers <= 1:
        for i, cell in enumerate(cells):
            rows.append(run_cell(spec, *cell))
            if progress:
                progress(i + 1, total)
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            futures = [pool.submit(run_cell, spec, *cell) for cell in cells]
            for i, fut in enumerate(futures):
                rows.append(fut.result())
                if progress:
                    progress(i + 1, total)
    rows.sort(key=ResultRow.sort_key)
    return rows


def aggregate(rows: list[ResultRow]) -> list[CellStats]:
    """Per-cell mean/std/sem over seeds, skipping error-tagged rows."""
    groups: dict[tuple, list[ResultRow]] = {}
    for row in rows:
        groups.setdefault((row.variant, row.rho_a, row.rho_b, row.hyper), []).append(row)
    stats = []
    for (variant, ra, rb, hyper), members in sorted(groups.items()):
        ok = [m for m in members if not np.isnan(m.transfer_sim)]
        if not ok:
            ok = members
        tf = np.array([m.transfer_sim for m in ok])
        rt = np.array([m.retention_sim for m in ok])
        n = len(ok)
        stats.append(CellStats(
            variant=variant, rho_a=ra, rho_b=rb, hyper=hyper, n=n,
            transfer_mean=float(tf.mean()), transfer_std=float(tf.std()),
            transfer_sem=float(tf.std() / np.sqrt(n)),
            retention_mean=float(rt.mean()), retention_std=float(rt.std()),
            retention_sem=float(rt.std() / np.sqrt(n)),
            transfer_theory=ok[0].transfer_theory,
            retention_theory=ok[0].retention_theory,
            valid=all(m.valid for m in members)))
    return stats


def average_over_prior(variant: str, hyper, n_pairs: int,
                       seeds=DEFAULT_SEEDS, *, n_s: int = 30, n_x: int = 3000,
                       n_y: int = 10, mode: str = "closed_form",
                       max_workers: int | None = None,
                       **spec_overrides) -> PriorAverage:
    """Simulated average performance over uniformly sampled similarities.

    hyper may be a number or "optimal", which picks the transfer-optimal
    gating level per sampled pair (floored at 3 n_s / n_x so the gated
    matrix stays comfortably tall). Each seed draws its own n_pairs
    similarity pairs.
    """
    spec = SweepSpec(variant=variant, hyper=(1.0,), seeds=tuple(seeds),
                     n_random_pairs=n_pairs, n_s=n_s, n_x=n_x, n_y=n_y,
                     mode=mode, **spec_overrides)
    cells = []
    for seed in spec.seeds:
        for sim_index in range(n_pairs):
            ra, rb = similarity_pair(spec, seed, sim_index)
            if hyper == "optimal":
                h = theory.optimal_alpha_transfer(theory.SimilarityPoint(ra, rb))
                h = min(1.0, max(h, 3.0 * n_s / n_x))
            else:
                h = float(hyper)
            cells.append((ra, rb, h, seed, sim_index, 0))
    if max_workers is None:
        max_workers = os.cpu_count() or 1
    if max_workers <= 1:
        rows = [run_cell(spec, *cell) for cell in cells]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rows = list(pool.map(lambda c: run_cell(spec, *c), cells))
    tf = np.array([r.transfer_sim for r in rows if not np.isnan(r.transfer_sim)])
    rt = np.array([r.retention_sim for r in rows if not np.isnan(r.retention_sim)])
    n = tf.size
    return PriorAverage(
        transfer_avg=float(tf.mean()), retention_avg=float(rt.mean()),
        transfer_sem=float(tf.std() / np.sqrt(n)),
        retention_sem=float(rt.std() / np.sqrt(n)), n=n)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(rows: list[ResultRow], destination) -> None:
    """Emit rows under the fixed header, atomically (temp file + rename).

    Floats carry 17 significant digits so a parse-back reproduces them
    bit-exactly; UTF-8 with LF line endings.
    """
    destination = Path(destination)
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(",".join([
            r.variant, _fmt(r.rho_a), _fmt(r.rho_b), _fmt(r.hyper), str(r.seed),
            _fmt(r.transfer_sim), _fmt(r.retention_sim), _fmt(r.transfer_theory),
            _fmt(r.retention_theory), "true" if r.valid else "false",
            _fmt(r.seconds)]))
    payload = "\n".join(lines) + "\n"
    tmp = destination.with_name(destination.name + f".tmp{os.getpid()}")
    try:
        tmp.write_text(payload, encoding="utf-8", newline="\n")
        os.replace(tmp, destination)
    except OSError as exc:
        tmp.unlink(missing_ok=True)
        raise OSError(f"failed writing sweep CSV to {destination}: {exc}") from exc


def read_csv(path) -> list[ResultRow]:
    """Parse a file produced by write_csv back into rows."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ConfigError(f"{path} does not start with the sweep CSV header")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 11:
            raise ConfigError(f"{path}: malformed row {ln!r}")
        rows.append(ResultRow(
            variant=parts[0], rho_a=float(parts[1]), rho_b=float(parts[2]),
            hyper=float(parts[3]), seed=int(parts[4]),
            transfer_sim=float(parts[5]), retention_sim=float(parts[6]),
            transfer_theory=float(parts[7]), retention_theory=float(parts[8]),
            valid=parts[9] == "true", seconds=float(parts[10])))
    return rows
