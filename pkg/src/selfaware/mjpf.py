"""Markov jump particle filter: a particle filter over superstates with one
Kalman filter embedded per particle.

Each particle carries a superstate hypothesis and a Gaussian belief over the
generalized state.  Per step: sample the next superstate from the learned
transition row, predict under that region's quasi-constant velocity model,
update against the observed position, and reweight by the innovation
likelihood.  The per-step abnormality signal is the median of the particles'
position-innovation norms.

All particles share F, Q, H and R and start from the same covariance, so the
covariance recursion is common to the particle set and is carried once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DUMMY, AnomalySeries, GeneralizedState, Observation, Trajectory, vector_to_state, weighted_distances
from .errors import InvalidInputError
from .unmotivated import H_POSITION, KalmanBelief, NoiseConfig
from .vocabulary import Vocabulary

# Region dynamics (quasi-constant velocity): x' = F x + B u.
F_REGION = np.block([
    [np.eye(2), np.zeros((2, 2))],
    [np.zeros((2, 2)), np.zeros((2, 2))],
])

WEIGHT_FLOOR = 1e-300

# The filter runs with a blunter observation noise than the tracker that
# produced the vocabulary: a soft likelihood keeps regime switching honest
# (an unobserved transition should not be adopted off a single sharp
# residual), while the tracker wants tight noise for velocity recovery.
DEFAULT_FILTER_R = 0.01 * np.eye(2)


def default_filter_noise() -> NoiseConfig:
    return NoiseConfig(r=DEFAULT_FILTER_R)


def control_matrix(dt: float) -> np.ndarray:
    return np.vstack([dt * np.eye(2), np.eye(2)])


@dataclass(frozen=True)
class MjpfConfig:
    n_particles: int = 100
    noise: NoiseConfig = None
    resample_threshold: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n_particles < 2:
            raise InvalidInputError(f"need at least 2 particles, got {self.n_particles}")
        if not (0 < self.resample_threshold <= 1):
            raise InvalidInputError("resample_threshold must lie in (0, 1]")
        if self.noise is None:
            object.__setattr__(self, "noise", default_filter_noise())


@dataclass(frozen=True)
class Particle:
    superstate: int
    belief: KalmanBelief
    weight: float


@dataclass
class MjpfState:
    vocab: Vocabulary
    cfg: MjpfConfig
    superstates: np.ndarray   # (N,) int, DUMMY allowed
    means: np.ndarray         # (N, 4)
    cov: np.ndarray           # (4, 4), shared by construction
    weights: np.ndarray       # (N,), sums to 1
    rng: np.random.Generator

    def particles(self):
        """Materialize per-particle views (superstate, belief, weight)."""
        return [
            Particle(int(s), KalmanBelief(vector_to_state(m), self.cov.copy()), float(w))
            for s, m, w in zip(self.superstates, self.means, self.weights)
        ]


@dataclass(frozen=True)
class StepResult:
    anomaly: float
    map_superstate: int
    posterior_mean: GeneralizedState
    dummy_fraction: float
    per_particle_innovation_norms: np.ndarray
    ess: float
    weights_reset: bool = False


def init(v: Vocabulary, cfg: MjpfConfig, z0: Observation) -> MjpfState:
    """Uniform draw over superstates; beliefs start at the first observation
    with that region's control velocity and identity covariance."""
    if len(v) == 0:
        raise InvalidInputError("vocabulary is empty")
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_particles
    superstates = rng.integers(0, len(v), size=n)
    means = np.empty((n, 4))
    means[:, 0] = z0.position[0]
    means[:, 1] = z0.position[1]
    means[:, 2:] = v.control_velocities[superstates]
    return MjpfState(
        vocab=v,
        cfg=cfg,
        superstates=superstates,
        means=means,
        cov=np.eye(4),
        weights=np.full(n, 1.0 / n),
        rng=rng,
    )


def _systematic_resample(weights, rng):
    n = len(weights)
    points = (rng.random() + np.arange(n)) / n
    return np.searchsorted(np.cumsum(weights), points)


def step(state: MjpfState, z: Observation):
    """Advance the filter by one observation; returns (new state, result)."""
    v, cfg, rng = state.vocab, state.cfg, state.rng
    m = len(v)
    n = cfg.n_particles
    sup = state.superstates.copy()
    means = state.means.copy()
    weights = state.weights.copy()
    scales = v.metric.scales()

    # (1) Discrete prediction.  Dummy particles try to re-enter the vocabulary
    # through region assignment of their belief mean; if the mean is still
    # outside every region they draw a uniform regime hypothesis but keep the
    # no-action rule (U = 0) for this step's continuous prediction.
    predict_u_zero = np.zeros(n, dtype=bool)
    dummy_idx = np.flatnonzero(sup == DUMMY)
    if dummy_idx.size:
        for i in dummy_idx:
            d = weighted_distances(v.centroid_vectors, means[i], scales)
            best = int(np.argmin(d))
            if d[best] <= v.dummy_threshold:
                sup[i] = best
            else:
                sup[i] = rng.integers(0, m)
                predict_u_zero[i] = True
    live_idx = np.flatnonzero(state.superstates != DUMMY)
    if live_idx.size:
        rows = v.transitions.probabilities[sup[live_idx]]
        draws = rng.random(live_idx.size)
        sup[live_idx] = (np.cumsum(rows, axis=1) > draws[:, None]).argmax(axis=1)

    # (2) Continuous prediction under the sampled regions.
    u = v.control_velocities[sup].copy()
    u[predict_u_zero] = 0.0
    means = means @ F_REGION.T + u @ control_matrix(v.dt).T
    cov = F_REGION @ state.cov @ F_REGION.T + cfg.noise.q

    # (3) Position update, shared gain, innovation likelihood weighting.
    s_innov = H_POSITION @ cov @ H_POSITION.T + cfg.noise.r
    s_inv = np.linalg.inv(s_innov)
    gain = cov @ H_POSITION.T @ s_inv
    innovations = np.asarray(z.position, dtype=float) - means[:, :2]
    means = means + innovations @ gain.T
    ikh = np.eye(4) - gain @ H_POSITION
    cov = ikh @ cov @ ikh.T + gain @ cfg.noise.r @ gain.T
    cov = 0.5 * (cov + cov.T)

    norms = np.linalg.norm(innovations, axis=1)  # Eq-level anomaly uses plain position norm
    quad = np.einsum("ni,ij,nj->n", innovations, s_inv, innovations)
    loglik = -0.5 * quad
    loglik -= loglik.max()
    likelihood = np.maximum(np.exp(loglik), WEIGHT_FLOOR)
    weights = weights * likelihood
    total = weights.sum()
    weights_reset = not np.isfinite(total) or total <= 0.0
    if weights_reset:
        weights = np.full(n, 1.0 / n)
    else:
        weights = weights / total

    # (4) Relabel particles that left their region's acceptance ball.
    centroid_dist = np.sqrt(((means - v.centroid_vectors[sup]) ** 2) @ scales)
    sup[centroid_dist > v.acceptance_radii[sup]] = DUMMY

    # (5) Systematic resampling on effective-sample-size collapse.
    ess = 1.0 / float(np.sum(weights * weights))
    if ess < cfg.resample_threshold * n:
        picks = _systematic_resample(weights, rng)
        sup = sup[picks]
        means = means[picks]
        weights = np.full(n, 1.0 / n)

    # (6) Summary.
    anomaly = float(np.median(norms))
    labels, inverse = np.unique(sup, return_inverse=True)
    label_weights = np.bincount(inverse, weights=weights)
    map_superstate = int(labels[np.argmax(label_weights)])
    dummy_fraction = float(weights[sup == DUMMY].sum())
    posterior_mean = vector_to_state(weights @ means)

    new_state = MjpfState(v, cfg, sup, means, cov, weights, rng)
    result = StepResult(
        anomaly=anomaly,
        map_superstate=map_superstate,
        posterior_mean=posterior_mean,
        dummy_fraction=dummy_fraction,
        per_particle_innovation_norms=norms,
        ess=float(ess),
        weights_reset=weights_reset,
    )
    return new_state, result


def run(v: Vocabulary, cfg: MjpfConfig, traj: Trajectory):
    """Fold the filter over a trajectory.

    Returns one series entry per sample; the first sample seeds the particle
    set and is recorded with score 0 (no prediction exists for it yet), along
    with the per-step result log for the remaining samples.
    """
    state = init(v, cfg, traj.samples[0])
    labels, inverse = np.unique(state.superstates, return_inverse=True)
    init_map = int(labels[np.argmax(np.bincount(inverse, weights=state.weights))])

    ks = [traj.samples[0].k]
    sups = [init_map]
    scores = [0.0]
    log = []
    for obs in traj.samples[1:]:
        state, result = step(state, obs)
        ks.append(obs.k)
        sups.append(result.map_superstate)
        scores.append(result.anomaly)
        log.append(result)
    return AnomalySeries(ks, sups, scores), log


def save_step_log_csv(path, ks, log):
    """Optional diagnostics: `k,map_superstate,anomaly,dummy_fraction,ess`."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("k,map_superstate,anomaly,dummy_fraction,ess\n")
        for k, r in zip(ks, log):
            fh.write(
                f"{k},{r.map_superstate},{repr(float(r.anomaly))},"
                f"{repr(float(r.dummy_fraction))},{repr(float(r.ess))}\n"
            )
