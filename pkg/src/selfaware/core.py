"""Domain types, the weighted state metric and the series formats shared by every layer.

State convention: a generalized state is the column vector [x, y, vx, vy]
(positions in meters, velocities in meters/second), in exactly this order.
The dummy superstate is serialized as the integer label -1 everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, ParseError

#: Sentinel label for "no learned region applies".
DUMMY = -1

STATE_DIM = 4


def _require_finite(name, values):
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} must be finite, got {values!r}")
    return arr


@dataclass(frozen=True)
class GeneralizedState:
    """Agent position plus velocity, the 4-vector [x, y, vx, vy]."""

    x: float
    y: float
    vx: float
    vy: float

    def __post_init__(self):
        _require_finite("state components", (self.x, self.y, self.vx, self.vy))

    @property
    def position(self):
        return (self.x, self.y)

    @property
    def velocity(self):
        return (self.vx, self.vy)


def state_to_vector(s: GeneralizedState) -> np.ndarray:
    """Return the state as the length-4 array [x, y, vx, vy]."""
    return np.array([s.x, s.y, s.vx, s.vy], dtype=float)


def vector_to_state(v) -> GeneralizedState:
    """Inverse of :func:`state_to_vector`; validates length and finiteness."""
    arr = np.asarray(v, dtype=float).reshape(-1)
    if arr.shape != (STATE_DIM,):
        raise InvalidInputError(f"state vector must have length {STATE_DIM}, got shape {arr.shape}")
    _require_finite("state vector", arr)
    return GeneralizedState(float(arr[0]), float(arr[1]), float(arr[2]), float(arr[3]))


@dataclass(frozen=True)
class WeightedMetric:
    """Distance weights: beta on the position block, alpha on the velocity block.

    Induces D = diag(beta, beta, alpha, alpha) and the distance
    d(a, b) = sqrt((a-b)^T D (a-b)).
    """

    beta: float
    alpha: float

    def __post_init__(self):
        _require_finite("metric weights", (self.beta, self.alpha))
        if self.beta < 0 or self.alpha < 0:
            raise InvalidInputError("metric weights must be nonnegative")
        if self.alpha + self.beta <= 0:
            raise InvalidInputError("alpha + beta must be positive")

    def scales(self) -> np.ndarray:
        """Per-component weights [beta, beta, alpha, alpha]."""
        return np.array([self.beta, self.beta, self.alpha, self.alpha])

    def matrix(self) -> np.ndarray:
        return np.diag(self.scales())


def weighted_distance(a: GeneralizedState, b: GeneralizedState, m: WeightedMetric) -> float:
    """Weighted Euclidean distance between two generalized states."""
    d = state_to_vector(a) - state_to_vector(b)
    return math.sqrt(float(np.dot(m.scales(), d * d)))


def weighted_distances(vectors: np.ndarray, point: np.ndarray, scales: np.ndarray) -> np.ndarray:
    """Vectorized form: distances from each row of `vectors` to `point`."""
    diff = np.atleast_2d(vectors) - point
    return np.sqrt(diff * diff @ scales)


@dataclass(frozen=True)
class Observation:
    """A timestamped position sample; k is the integer sample index."""

    k: int
    t: float
    position: tuple

    def __post_init__(self):
        if self.k < 0 or self.k != int(self.k):
            raise InvalidInputError(f"sample index must be an integer >= 0, got {self.k}")
        _require_finite("observation", (self.t, *self.position))
        if len(self.position) != 2:
            raise InvalidInputError("position must be an (x, y) pair")


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled position sequence with sampling time dt (seconds)."""

    samples: tuple
    dt: float

    def __post_init__(self):
        if len(self.samples) < 2:
            raise InvalidInputError(f"trajectory needs >= 2 samples, got {len(self.samples)}")
        if not (self.dt > 0):
            raise InvalidInputError(f"dt must be positive, got {self.dt}")
        ks = np.array([o.k for o in self.samples])
        if np.any(np.diff(ks) <= 0):
            raise InvalidInputError("sample indices k must be strictly increasing")
        ts = np.array([o.t for o in self.samples])
        steps = np.diff(ts)
        if np.any(steps <= 0):
            raise InvalidInputError("timestamps must be strictly increasing")
        if np.any(np.abs(steps - self.dt) > 1e-9 * max(self.dt, 1.0)):
            raise InvalidInputError("timestamps must be uniformly spaced by dt")

    def __len__(self):
        return len(self.samples)

    def positions(self) -> np.ndarray:
        return np.array([o.position for o in self.samples], dtype=float)

    def ks(self) -> np.ndarray:
        return np.array([o.k for o in self.samples], dtype=int)


class AnomalySeries:
    """Per-sample abnormality record: (k, superstate label or DUMMY, score >= 0).

    The same wire format carries the shared-level and the private-layer
    signals, so the fusion stage can consume either side unchanged.
    """

    def __init__(self, ks, superstates, scores):
        self.ks = np.asarray(ks, dtype=int)
        self.superstates = np.asarray(superstates, dtype=int)
        self.scores = np.asarray(scores, dtype=float)
        if not (self.ks.shape == self.superstates.shape == self.scores.shape):
            raise InvalidInputError("series columns must have equal length")
        if self.ks.size and np.any(np.diff(self.ks) <= 0):
            raise InvalidInputError("series k must be strictly increasing")
        if not np.all(np.isfinite(self.scores)) or np.any(self.scores < 0):
            raise InvalidInputError("scores must be finite and >= 0")

    def __len__(self):
        return self.ks.size

    def __eq__(self, other):
        if not isinstance(other, AnomalySeries):
            return NotImplemented
        return (
            np.array_equal(self.ks, other.ks)
            and np.array_equal(self.superstates, other.superstates)
            and np.array_equal(self.scores, other.scores)
        )

    def entries(self):
        return list(zip(self.ks.tolist(), self.superstates.tolist(), self.scores.tolist()))


# ---------------------------------------------------------------------------
# CSV wire formats (UTF-8, LF, decimal point, no thousands separators)

def _fmt(x: float) -> str:
    return repr(float(x))


def save_trajectory_csv(path, traj: Trajectory):
    """Write the `k,t,x,y` trajectory format."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("k,t,x,y\n")
        for o in traj.samples:
            fh.write(f"{o.k},{_fmt(o.t)},{_fmt(o.position[0])},{_fmt(o.position[1])}\n")


def load_trajectory_csv(path) -> Trajectory:
    """Read `k,t,x,y` (a trailing `label` column is tolerated and ignored)."""
    rows = _read_rows(path, header_prefix=["k", "t", "x", "y"])
    samples = []
    for lineno, parts in rows:
        try:
            samples.append(Observation(int(parts[0]), float(parts[1]), (float(parts[2]), float(parts[3]))))
        except (ValueError, InvalidInputError) as exc:
            raise ParseError(str(exc), line=lineno) from exc
    if len(samples) < 2:
        raise ParseError(f"trajectory file {path} has fewer than 2 samples")
    dt = samples[1].t - samples[0].t
    return Trajectory(tuple(samples), dt)


def save_series_csv(path, series: AnomalySeries):
    """Write the `k,superstate,score` anomaly-series format (DUMMY as -1)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("k,superstate,score\n")
        for k, s, y in zip(series.ks, series.superstates, series.scores):
            fh.write(f"{k},{s},{_fmt(y)}\n")


def load_series_csv(path) -> AnomalySeries:
    rows = _read_rows(path, header_prefix=["k", "superstate", "score"])
    ks, sups, scores = [], [], []
    for lineno, parts in rows:
        try:
            ks.append(int(parts[0]))
            sups.append(int(parts[1]))
            scores.append(float(parts[2]))
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from exc
    try:
        return AnomalySeries(ks, sups, scores)
    except InvalidInputError as exc:
        raise ParseError(str(exc)) from exc


def _read_rows(path, header_prefix):
    """Shared CSV scaffolding: header check plus (lineno, fields) pairs."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError(f"{path} is empty")
    header = [c.strip() for c in lines[0].split(",")]
    if header[: len(header_prefix)] != header_prefix:
        raise ParseError(f"expected header starting with {','.join(header_prefix)!r}, got {lines[0]!r}", line=1)
    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = [c.strip() for c in line.split(",")]
        if len(parts) < len(header_prefix):
            raise ParseError(f"expected {len(header_prefix)} fields, got {len(parts)}", line=lineno)
        out.append((lineno, parts))
    return out
