"""Kalman filter over the "unmotivated" random-walk model.

The dynamic matrix keeps positions and annihilates velocities, so the agent
is modeled as static and every real motion shows up in the innovation.  The
filtered positions plus innovation-derived velocities are the generalized
states later clustered into superstates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import GeneralizedState, Trajectory, state_to_vector, vector_to_state
from .errors import InvalidInputError, NumericalDegeneracyError

# A keeps the position block and zeroes the velocity block.
A_UNMOTIVATED = np.block([
    [np.eye(2), np.zeros((2, 2))],
    [np.zeros((2, 2)), np.zeros((2, 2))],
])

# Observation picks out the position components.
H_POSITION = np.hstack([np.eye(2), np.zeros((2, 2))])

DEFAULT_Q = np.diag([0.01, 0.01, 0.04, 0.04])
# Tight observation noise keeps the steady-state position gain near 1, which
# innovation/dt velocity extraction needs to stay unbiased: the recovered
# speed is true speed / gain, so gain 0.62 (r = q) would inflate every
# control velocity by 1.6x and poison the vocabulary.
DEFAULT_R = 5e-4 * np.eye(2)


def _check_symmetric(name, mat, tol=1e-12):
    mat = np.asarray(mat, dtype=float)
    if not np.all(np.isfinite(mat)):
        raise InvalidInputError(f"{name} must be finite")
    if np.max(np.abs(mat - mat.T)) > tol:
        raise InvalidInputError(f"{name} must be symmetric within {tol}")
    return mat


@dataclass(frozen=True)
class NoiseConfig:
    """Process covariance q (4x4, PSD) and observation covariance r (2x2, PD)."""

    q: np.ndarray = None
    r: np.ndarray = None

    def __post_init__(self):
        q = DEFAULT_Q if self.q is None else self.q
        r = DEFAULT_R if self.r is None else self.r
        q = _check_symmetric("q", q)
        r = _check_symmetric("r", r)
        if q.shape != (4, 4):
            raise InvalidInputError(f"q must be 4x4, got {q.shape}")
        if r.shape != (2, 2):
            raise InvalidInputError(f"r must be 2x2, got {r.shape}")
        if np.min(np.linalg.eigvalsh(q)) < -1e-12:
            raise InvalidInputError("q must be positive semidefinite")
        if np.min(np.linalg.eigvalsh(r)) <= 0:
            raise InvalidInputError("r must be positive definite")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "r", r)


@dataclass(frozen=True)
class KalmanBelief:
    mean: GeneralizedState
    covariance: np.ndarray

    def __post_init__(self):
        cov = _check_symmetric("covariance", self.covariance, tol=1e-9)
        if cov.shape != (4, 4):
            raise InvalidInputError(f"covariance must be 4x4, got {cov.shape}")
        object.__setattr__(self, "covariance", cov)


def initial_belief(position) -> KalmanBelief:
    """Uninformative-but-proper start: first observation, zero velocity, P = I."""
    return KalmanBelief(GeneralizedState(position[0], position[1], 0.0, 0.0), np.eye(4))


def predict_unmotivated(b: KalmanBelief, noise: NoiseConfig) -> KalmanBelief:
    """One prediction under the static model: velocity zeroed, P <- A P A' + Q."""
    x = A_UNMOTIVATED @ state_to_vector(b.mean)
    p = A_UNMOTIVATED @ b.covariance @ A_UNMOTIVATED.T + noise.q
    return KalmanBelief(vector_to_state(x), 0.5 * (p + p.T))


def update_position(b: KalmanBelief, z_position, noise: NoiseConfig):
    """Linear-Gaussian position update (Joseph form).

    Returns the posterior belief and the 2-vector innovation z - H x.
    """
    x = state_to_vector(b.mean)
    p = b.covariance
    z = np.asarray(z_position, dtype=float).reshape(2)

    innovation = z - H_POSITION @ x
    with np.errstate(over="ignore", invalid="ignore"):
        s = H_POSITION @ p @ H_POSITION.T + noise.r
    if not np.all(np.isfinite(s)):
        raise NumericalDegeneracyError("non-finite innovation covariance")
    try:
        gain = np.linalg.solve(s, H_POSITION @ p).T
    except np.linalg.LinAlgError as exc:
        raise NumericalDegeneracyError(f"singular innovation covariance: {exc}") from exc
    if not np.all(np.isfinite(gain)):
        raise NumericalDegeneracyError("non-finite Kalman gain")

    x_post = x + gain @ innovation
    ikh = np.eye(4) - gain @ H_POSITION
    p_post = ikh @ p @ ikh.T + gain @ noise.r @ gain.T  # Joseph form keeps PSD under roundoff
    return KalmanBelief(vector_to_state(x_post), 0.5 * (p_post + p_post.T)), innovation


def track(traj: Trajectory, noise: NoiseConfig = None, init: KalmanBelief = None):
    """Filter a trajectory into generalized states.

    Positions are the filtered positions.  Velocities are recovered from the
    correction step as innovation/dt (the static model pushes all motion into
    the innovation) and smoothed with a trailing 3-sample moving average.
    """
    noise = noise or NoiseConfig()
    belief = init or initial_belief(traj.samples[0].position)

    positions = np.zeros((len(traj), 2))
    raw_velocities = np.zeros((len(traj), 2))
    positions[0] = state_to_vector(belief.mean)[:2]

    for i, obs in enumerate(traj.samples[1:], start=1):
        belief = predict_unmotivated(belief, noise)
        try:
            belief, innovation = update_position(belief, obs.position, noise)
        except NumericalDegeneracyError as exc:
            raise NumericalDegeneracyError(f"sample k={obs.k}: {exc}") from exc
        positions[i] = state_to_vector(belief.mean)[:2]
        raw_velocities[i] = innovation / traj.dt

    velocities = np.zeros_like(raw_velocities)
    for i in range(len(traj)):
        lo = max(0, i - 2)
        velocities[i] = raw_velocities[lo : i + 1].mean(axis=0)

    return [
        GeneralizedState(positions[i, 0], positions[i, 1], velocities[i, 0], velocities[i, 1])
        for i in range(len(traj))
    ]
