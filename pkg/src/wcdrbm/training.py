"""Gradient-ascent training with exact KL tracking, grids and comparisons.

A run is fully determined by (dataset, config): one Generator seeded from
config.seed drives weight init, batch shuffling and all Gibbs sampling.
The KL against the target distribution is evaluated exactly every
``kl_record_stride`` epochs and at the final epoch; the best (smallest)
value and its parameter checkpoint are tracked.

The data term of each update weights batch elements by their renormalized
target probabilities, which reduces to the plain batch mean for the
uniform-target problems and realizes non-uniform targets without
duplicating states.
"""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import backend
from .datasets import Dataset
from .errors import NonFiniteError
from .exact import compute_exact_distribution, kl_divergence
from .gradients import (GradientDelta, exact_negative_phase, weighted_phase)
from .model import RbmParams

ESTIMATORS = ("cd", "wcd", "pcd", "wpcd", "exact")

_MODES = {
    "cd": backend.MODE_CD,
    "wcd": backend.MODE_WCD,
    "pcd": backend.MODE_PCD,
    "wpcd": backend.MODE_WPCD,
}

SCHEDULES = ("fixed", "linear")


@dataclass
class TrainConfig:
    estimator: str
    n_hidden: int
    init_sigma: float
    learning_rate: float
    epochs: int
    k: int = 1
    lr_schedule: str = "fixed"
    momentum: float = 0.0
    weight_decay: float = 0.0
    batch_size: int | None = None  # None trains full-batch
    seed: int = 0
    kl_record_stride: int = 50

    def validate(self) -> "TrainConfig":
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}")
        if self.estimator in ("cd", "wcd") and self.k < 1:
            raise ValueError("k must be >= 1 for the CD estimators")
        if self.n_hidden < 1:
            raise ValueError("n_hidden must be positive")
        if self.init_sigma <= 0:
            raise ValueError("init_sigma must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.lr_schedule not in SCHEDULES:
            raise ValueError(f"lr_schedule must be one of {SCHEDULES}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be nonnegative")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be positive (or None for full batch)")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.kl_record_stride < 1:
            raise ValueError("kl_record_stride must be >= 1")
        return self


@dataclass
class RunRecord:
    config: TrainConfig
    kl_epochs: np.ndarray
    kl_values: np.ndarray
    best_kl: float
    best_epoch: int
    best_params: RbmParams | None
    final_params: RbmParams | None
    wall_time: float
    failed: bool = False
    error: str = ""

    @property
    def kl_trace(self):
        return list(zip(self.kl_epochs.tolist(), self.kl_values.tolist()))

    def tail_mean_kl(self) -> float:
        """Mean KL over the final quarter of the recorded trace."""
        if self.kl_values.size == 0:
            return float("nan")
        tail = max(1, self.kl_values.size // 4)
        return float(self.kl_values[-tail:].mean())


@dataclass
class GridSpec:
    hidden_multipliers: tuple = (1, 2, 3, 4, 5)
    init_sigmas: tuple = (1.0, 0.1, 0.01, 0.001, 0.0001)
    learning_rates: tuple = (0.1, 0.01, 0.001, 0.0001, 0.00001)
    momenta: tuple = (0.9,)
    schedules: tuple = ("fixed",)
    repetitions: int = 10

    def validate(self) -> "GridSpec":
        for name in ("hidden_multipliers", "init_sigmas", "learning_rates",
                     "momenta", "schedules"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be non-empty")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        return self


def init_params(n_visible: int, n_hidden: int, sigma: float, seed) -> RbmParams:
    """Gaussian(0, sigma^2) weights, zero biases."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    rng = np.random.default_rng(seed)
    W = rng.normal(0.0, sigma, size=(n_hidden, n_visible))
    return RbmParams(n_visible, n_hidden, np.zeros(n_visible), np.zeros(n_hidden), W)


def sgd_step(params: RbmParams, delta_pos: GradientDelta, delta_neg: GradientDelta,
             velocity: GradientDelta, eta: float, momentum: float,
             weight_decay: float) -> None:
    """Heavy-ball ascent step in place: g = delta_neg - delta_pos.

    Weight decay applies to W only and reads the pre-update weights without
    entering the velocity. Raises NonFiniteError if any parameter leaves
    the finite range.
    """
    g = delta_neg - delta_pos
    velocity.db *= momentum
    velocity.db += eta * g.db
    velocity.dc *= momentum
    velocity.dc += eta * g.dc
    velocity.dW *= momentum
    velocity.dW += eta * g.dW
    params.b += velocity.db
    params.c += velocity.dc
    if weight_decay != 0.0:
        params.W += velocity.dW - eta * weight_decay * params.W
    else:
        params.W += velocity.dW
    if not (np.isfinite(params.b).all() and np.isfinite(params.c).all()
            and np.isfinite(params.W).all()):
        raise NonFiniteError("parameter update produced non-finite values")


def _learning_rate(config: TrainConfig, epoch: int) -> float:
    if config.lr_schedule == "linear":
        # reaches zero exactly at the final epoch
        return config.learning_rate * (1.0 - epoch / config.epochs)
    return config.learning_rate


def _batch_weights(probs: np.ndarray) -> np.ndarray:
    return probs / probs.sum()


def train(dataset: Dataset, config: TrainConfig,
          enumeration_limit: int = 25) -> RunRecord:
    """Run the full training loop and record the exact KL trace."""
    config.validate()
    dataset.validate()
    n_v = dataset.n_bits
    start = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    params = init_params(n_v, config.n_hidden, config.init_sigma, rng)
    vel_b = np.zeros(n_v)
    vel_c = np.zeros(config.n_hidden)
    vel_W = np.zeros((config.n_hidden, n_v))

    states = np.ascontiguousarray(dataset.states, dtype=np.uint8)
    probs = dataset.target_probs
    count = states.shape[0]
    full_batch = config.batch_size is None or config.batch_size >= count
    if full_batch:
        full_states = states
        full_weights = _batch_weights(probs)

    chains = None
    if config.estimator in ("pcd", "wpcd"):
        if full_batch:
            chains = states.copy()
        else:
            chains = states[:config.batch_size].copy()

    mode = _MODES.get(config.estimator)
    exact_velocity = GradientDelta(vel_b, vel_c, vel_W)

    kl_epochs: list[int] = []
    kl_values: list[float] = []
    best_kl = np.inf
    best_epoch = -1
    best_params = None
    failed = False
    error = ""

    def evaluate(epoch: int):
        nonlocal best_kl, best_epoch, best_params
        dist = compute_exact_distribution(params, limit=enumeration_limit)
        kl = kl_divergence(dataset, dist)
        kl_epochs.append(epoch)
        kl_values.append(kl)
        if kl < best_kl:
            best_kl = kl
            best_epoch = epoch
            best_params = params.copy()

    for epoch in range(1, config.epochs + 1):
        eta = _learning_rate(config, epoch)
        if full_batch:
            batches = ((full_states, full_weights),)
        else:
            order = rng.permutation(count)
            batches = tuple(
                (np.ascontiguousarray(states[order[i:i + config.batch_size]]),
                 _batch_weights(probs[order[i:i + config.batch_size]]))
                for i in range(0, count, config.batch_size))
        try:
            # overflow to inf is handled by the finiteness guard below
            with np.errstate(over="ignore", invalid="ignore"):
                for batch_states, batch_weights in batches:
                    if config.estimator == "exact":
                        delta_pos = weighted_phase(params, batch_states,
                                                   batch_weights)
                        delta_neg = exact_negative_phase(
                            params, limit=enumeration_limit)
                        sgd_step(params, delta_pos, delta_neg, exact_velocity,
                                 eta, config.momentum, config.weight_decay)
                    else:
                        ok = backend.update_step(
                            params.b, params.c, params.W, vel_b, vel_c, vel_W,
                            batch_states, batch_weights, mode, config.k, chains,
                            eta, config.momentum, config.weight_decay, rng)
                        if not ok:
                            raise NonFiniteError(
                                f"non-finite parameters at epoch {epoch}")
        except NonFiniteError as err:
            failed = True
            error = str(err)
            break
        if epoch % config.kl_record_stride == 0 or epoch == config.epochs:
            evaluate(epoch)

    final_params = params if not failed else None
    return RunRecord(
        config=config,
        kl_epochs=np.asarray(kl_epochs, dtype=np.int64),
        kl_values=np.asarray(kl_values),
        best_kl=float(best_kl) if kl_values else float("nan"),
        best_epoch=best_epoch,
        best_params=best_params,
        final_params=final_params,
        wall_time=time.perf_counter() - start,
        failed=failed,
        error=error,
    )


def _run_one(args):
    dataset, config, limit = args
    try:
        return train(dataset, config, enumeration_limit=limit)
    except Exception as err:  # keep grid sweeps alive through bad configs
        return RunRecord(config, np.empty(0, dtype=np.int64), np.empty(0),
                         float("nan"), -1, None, None, 0.0,
                         failed=True, error=f"{type(err).__name__}: {err}")


def run_many(dataset: Dataset, configs, jobs: int = 1,
             enumeration_limit: int = 25) -> list[RunRecord]:
    """Train each config; failures become flagged records, order preserved."""
    tasks = [(dataset, cfg, enumeration_limit) for cfg in configs]
    if jobs <= 1 or len(tasks) <= 1:
        return [_run_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_one, tasks))


def grid_configs(dataset: Dataset, grid: GridSpec, estimator: str, k: int,
                 epochs: int, batch_size: int | None = None,
                 kl_record_stride: int = 50, weight_decay: float = 0.0,
                 base_seed: int = 0):
    """The deterministic config list a grid search runs, in order."""
    grid.validate()
    configs = []
    for mult, sigma, lr, mom, sched in itertools.product(
            grid.hidden_multipliers, grid.init_sigmas, grid.learning_rates,
            grid.momenta, grid.schedules):
        for rep in range(grid.repetitions):
            configs.append(TrainConfig(
                estimator=estimator, k=k, n_hidden=mult * dataset.n_bits,
                init_sigma=sigma, learning_rate=lr, lr_schedule=sched,
                momentum=mom, weight_decay=weight_decay,
                batch_size=batch_size, epochs=epochs,
                seed=base_seed + rep, kl_record_stride=kl_record_stride))
    return configs


def grid_search(dataset: Dataset, grid: GridSpec, estimator: str, k: int,
                epochs: int, batch_size: int | None = None,
                kl_record_stride: int = 50, weight_decay: float = 0.0,
                base_seed: int = 0, jobs: int = 1,
                enumeration_limit: int = 25):
    """Train every configuration x repetition; best config by smallest KL.

    Returns (records, best_config); best_config is None when every run
    failed.
    """
    configs = grid_configs(dataset, grid, estimator, k, epochs, batch_size,
                           kl_record_stride, weight_decay, base_seed)
    records = run_many(dataset, configs, jobs=jobs,
                       enumeration_limit=enumeration_limit)
    best = None
    for rec in records:
        if rec.failed or not np.isfinite(rec.best_kl):
            continue
        if best is None or rec.best_kl < best.best_kl:
            best = rec
    return records, (best.config if best else None)


def paired_comparison(dataset: Dataset, base_config: TrainConfig,
                      estimator_pair, multipliers=(1, 2, 3, 4, 5),
                      n_seeds: int = 10, base_seed: int = 0, jobs: int = 1,
                      enumeration_limit: int = 25):
    """Run each estimator over a hidden-multiplier sweep with shared
    hyperparameters and seeds; summarize per-estimator KL statistics.

    estimator_pair is a sequence of (name, k) tuples. Returns
    (records_by_label, summary) where labels are e.g. "cd1", "wpcd".
    """
    records_by_label = {}
    summary = {}
    for name, k in estimator_pair:
        label = f"{name}{k}" if name in ("cd", "wcd") else name
        configs = [replace(base_config, estimator=name, k=k,
                           n_hidden=mult * dataset.n_bits, seed=base_seed + rep)
                   for mult in multipliers for rep in range(n_seeds)]
        records = run_many(dataset, configs, jobs=jobs,
                           enumeration_limit=enumeration_limit)
        records_by_label[label] = records
        finished = [r for r in records if not r.failed]
        best = np.array([r.best_kl for r in finished])
        tail = np.array([r.tail_mean_kl() for r in finished])
        summary[label] = {
            "runs": len(records),
            "failed": len(records) - len(finished),
            "mean_best_kl": float(best.mean()) if best.size else float("nan"),
            "std_best_kl": float(best.std(ddof=1)) if best.size > 1 else 0.0,
            "mean_tail_kl": float(tail.mean()) if tail.size else float("nan"),
            "std_tail_kl": float(tail.std(ddof=1)) if tail.size > 1 else 0.0,
        }
    return records_by_label, summary
