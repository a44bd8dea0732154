"""Self-organizing map with a configurable weighted metric.

Used twice: over position-velocity states for the shared level (velocity
weighted up so that regions mean "same action"), and over innovation vectors
in the private layer (plain Euclidean there).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import WeightedMetric
from .errors import InvalidInputError


@dataclass(frozen=True)
class SomConfig:
    rows: int = 4
    cols: int = 4
    epochs: int = 200
    lr0: float = 0.5
    sigma0: float = 1.5
    seed: int = 0
    metric: WeightedMetric = None  # None means plain Euclidean

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1 or self.rows * self.cols < 2:
            raise InvalidInputError("grid must have at least 2 units")
        if self.epochs < 1:
            raise InvalidInputError("epochs must be >= 1")
        if not (0 < self.lr0 <= 1):
            raise InvalidInputError("lr0 must lie in (0, 1]")
        if not (self.sigma0 > 0):
            raise InvalidInputError("sigma0 must be positive")


@dataclass
class SomModel:
    prototypes: np.ndarray          # (units, dim)
    grid: np.ndarray                # (units, 2) lattice coordinates
    metric: WeightedMetric          # None -> Euclidean
    quantization_error: float = field(default=float("nan"))

    def metric_scales(self) -> np.ndarray:
        if self.metric is None:
            return np.ones(self.prototypes.shape[1])
        return self.metric.scales()


def _distances(prototypes, x, scales):
    diff = prototypes - x
    return np.sqrt(diff * diff @ scales)


def best_matching_unit(model: SomModel, x):
    """Index and metric distance of the nearest prototype (ties -> lowest index)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.prototypes.shape[1],):
        raise InvalidInputError(
            f"sample dimension {x.shape} does not match prototypes {model.prototypes.shape[1]}"
        )
    d = _distances(model.prototypes, x, model.metric_scales())
    idx = int(np.argmin(d))  # argmin returns the first minimum, our tie-break
    return idx, float(d[idx])


def quantization_error(model: SomModel, samples) -> float:
    """Mean BMU distance over the sample set."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.size == 0:
        raise InvalidInputError("quantization error of an empty sample set is undefined")
    scales = model.metric_scales()
    total = 0.0
    for x in samples:
        total += float(np.min(_distances(model.prototypes, x, scales)))
    return total / len(samples)


def train(samples, cfg: SomConfig) -> SomModel:
    """Train a SOM on the sample rows; deterministic for a fixed seed.

    Prototypes start at randomly drawn samples.  Each presentation pulls
    prototypes toward the sample with a Gaussian neighborhood around the BMU;
    learning rate and radius both decay as exp(-epoch/epochs).
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.size == 0:
        raise InvalidInputError("cannot train on an empty sample set")
    if not np.all(np.isfinite(samples)):
        raise InvalidInputError("training samples must be finite")
    n, dim = samples.shape
    units = cfg.rows * cfg.cols
    if n < units:
        raise InvalidInputError(f"need at least {units} samples for a {cfg.rows}x{cfg.cols} grid, got {n}")
    if cfg.metric is not None and dim != 4:
        raise InvalidInputError("the weighted metric applies to 4-dimensional states only")

    rng = np.random.default_rng(cfg.seed)
    grid = np.array([(i // cfg.cols, i % cfg.cols) for i in range(units)], dtype=float)
    prototypes = samples[rng.choice(n, size=units, replace=False)].copy()
    scales = np.ones(dim) if cfg.metric is None else cfg.metric.scales()

    # Pairwise squared lattice distances, fixed for the whole run.
    gdiff = grid[:, None, :] - grid[None, :, :]
    grid_sq = np.sum(gdiff * gdiff, axis=2)

    for epoch in range(cfg.epochs):
        lr = cfg.lr0 * np.exp(-epoch / cfg.epochs)
        sigma = cfg.sigma0 * np.exp(-epoch / cfg.epochs)
        inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma)
        for idx in rng.permutation(n):
            x = samples[idx]
            diff = x - prototypes
            bmu = int(np.argmin(diff * diff @ scales))
            h = np.exp(-grid_sq[bmu] * inv_two_sigma_sq)
            prototypes += (lr * h)[:, None] * diff

    model = SomModel(prototypes=prototypes, grid=grid, metric=cfg.metric)
    model.quantization_error = quantization_error(model, samples)
    return model
