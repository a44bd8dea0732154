"""Superstate vocabulary: learned regions, per-region control velocities and
the temporal transition matrix between regions.

Each region carries the quasi-constant velocity model
x' = position + U*dt, v' = U; the dummy superstate stands for "no learned
action applies" and predicts with U = 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import (
    DUMMY,
    GeneralizedState,
    WeightedMetric,
    state_to_vector,
    vector_to_state,
    weighted_distances,
)
from .errors import InvalidInputError
from .som import SomModel, best_matching_unit

ACCEPTANCE_PERCENTILE = 99.0
DUMMY_SAFETY_FACTOR = 1.5


@dataclass(frozen=True)
class Superstate:
    id: int
    centroid: GeneralizedState
    control_velocity: tuple
    acceptance_radius: float
    member_count: int


@dataclass(frozen=True)
class TransitionMatrix:
    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise InvalidInputError(f"transition matrix must be square, got {p.shape}")
        if np.any(p < 0):
            raise InvalidInputError("transition probabilities must be nonnegative")
        if np.max(np.abs(p.sum(axis=1) - 1.0)) > 1e-9:
            raise InvalidInputError("transition rows must sum to 1")
        object.__setattr__(self, "probabilities", p)

    @property
    def size(self):
        return self.probabilities.shape[0]


@dataclass
class Vocabulary:
    superstates: list
    transitions: TransitionMatrix
    metric: WeightedMetric
    dt: float
    dummy_threshold: float

    def __post_init__(self):
        ids = [s.id for s in self.superstates]
        if ids != list(range(len(ids))):
            raise InvalidInputError("superstate ids must be 0..M-1 without gaps")
        if self.transitions.size != len(self.superstates):
            raise InvalidInputError("transition matrix size must match superstate count")
        self._centroids = np.array([state_to_vector(s.centroid) for s in self.superstates])
        self._controls = np.array([s.control_velocity for s in self.superstates])
        self._radii = np.array([s.acceptance_radius for s in self.superstates])

    def __len__(self):
        return len(self.superstates)

    @property
    def centroid_vectors(self):
        return self._centroids

    @property
    def control_velocities(self):
        return self._controls

    @property
    def acceptance_radii(self):
        return self._radii


def build_vocabulary(states, som: SomModel, dt: float) -> Vocabulary:
    """Group filtered states by BMU and summarize each populated prototype.

    Empty prototypes are dropped and ids re-packed so the particle filter
    sees a dense categorical support.  The acceptance radius is the 99th
    percentile of member BMU distances; the dummy threshold is 1.5x the
    largest radius.
    """
    if not states:
        raise InvalidInputError("cannot build a vocabulary from zero states")
    if not (dt > 0):
        raise InvalidInputError("dt must be positive")
    if som.prototypes.shape[1] != 4:
        raise InvalidInputError("vocabulary requires a map over 4-dimensional states")
    metric = som.metric if som.metric is not None else WeightedMetric(beta=1.0, alpha=1.0)

    vectors = np.array([state_to_vector(s) for s in states])
    assignments = np.empty(len(states), dtype=int)
    distances = np.empty(len(states))
    for i, x in enumerate(vectors):
        assignments[i], distances[i] = best_matching_unit(som, x)

    superstates = []
    for proto_idx in range(len(som.prototypes)):
        mask = assignments == proto_idx
        count = int(mask.sum())
        if count == 0:
            continue
        members = vectors[mask]
        superstates.append(
            Superstate(
                id=len(superstates),
                centroid=vector_to_state(som.prototypes[proto_idx]),
                control_velocity=(float(members[:, 2].mean()), float(members[:, 3].mean())),
                acceptance_radius=float(np.percentile(distances[mask], ACCEPTANCE_PERCENTILE)),
                member_count=count,
            )
        )

    dummy_threshold = DUMMY_SAFETY_FACTOR * max(s.acceptance_radius for s in superstates)
    # transitions start uniform; learn_transitions fills them in a second pass
    placeholder = TransitionMatrix(np.full((len(superstates), len(superstates)), 1.0 / len(superstates)))
    return Vocabulary(superstates, placeholder, metric, dt, dummy_threshold)


def assign_superstate(v: Vocabulary, s: GeneralizedState) -> int:
    """Nearest superstate id, or DUMMY when strictly beyond the dummy threshold."""
    d = weighted_distances(v.centroid_vectors, state_to_vector(s), v.metric.scales())
    idx = int(np.argmin(d))
    if d[idx] > v.dummy_threshold:
        return DUMMY
    return idx


def learn_transitions(label_sequences, m: int, smoothing: float = 1.0) -> TransitionMatrix:
    """First-order transition estimates with Laplace smoothing.

    DUMMY entries are skipped and break the chain: no transition is counted
    into, out of, or across a dummy sample.  Rows with no data and zero
    smoothing fall back to uniform.
    """
    if m <= 0:
        raise InvalidInputError(f"superstate count must be positive, got {m}")
    if smoothing < 0:
        raise InvalidInputError("smoothing must be nonnegative")

    counts = np.zeros((m, m))
    for seq in label_sequences:
        prev = None
        for label in seq:
            label = int(label)
            if label == DUMMY:
                prev = None
                continue
            if not (0 <= label < m):
                raise InvalidInputError(f"label {label} outside 0..{m - 1}")
            if prev is not None:
                counts[prev, label] += 1
            prev = label

    probs = counts + smoothing
    row_sums = probs.sum(axis=1)
    empty = row_sums == 0
    probs[empty] = 1.0 / m
    row_sums[empty] = 1.0
    return TransitionMatrix(probs / row_sums[:, None])


def predict_state(v: Vocabulary, s: GeneralizedState, superstate_id: int) -> GeneralizedState:
    """Quasi-constant velocity prediction for one region (U = 0 for DUMMY)."""
    if superstate_id == DUMMY:
        ux, uy = 0.0, 0.0
    else:
        if not (0 <= superstate_id < len(v)):
            raise InvalidInputError(f"unknown superstate id {superstate_id}")
        ux, uy = v.superstates[superstate_id].control_velocity
    return GeneralizedState(s.x + ux * v.dt, s.y + uy * v.dt, ux, uy)


# ---------------------------------------------------------------------------
# Model artifact (JSON)

def vocabulary_to_dict(v: Vocabulary) -> dict:
    return {
        "metric": {"alpha": v.metric.alpha, "beta": v.metric.beta},
        "dt": v.dt,
        "dummy_threshold": v.dummy_threshold,
        "superstates": [
            {
                "id": s.id,
                "centroid": list(state_to_vector(s.centroid)),
                "control_velocity": list(s.control_velocity),
                "acceptance_radius": s.acceptance_radius,
                "member_count": s.member_count,
            }
            for s in v.superstates
        ],
        "transitions": v.transitions.probabilities.tolist(),
    }


def vocabulary_from_dict(data: dict) -> Vocabulary:
    try:
        metric = WeightedMetric(beta=data["metric"]["beta"], alpha=data["metric"]["alpha"])
        superstates = [
            Superstate(
                id=int(s["id"]),
                centroid=vector_to_state(s["centroid"]),
                control_velocity=(float(s["control_velocity"][0]), float(s["control_velocity"][1])),
                acceptance_radius=float(s["acceptance_radius"]),
                member_count=int(s["member_count"]),
            )
            for s in data["superstates"]
        ]
        transitions = TransitionMatrix(np.array(data["transitions"], dtype=float))
        return Vocabulary(superstates, transitions, metric, float(data["dt"]), float(data["dummy_threshold"]))
    except (KeyError, TypeError, IndexError) as exc:
        raise InvalidInputError(f"malformed vocabulary document: {exc}") from exc


def save_vocabulary_json(path, v: Vocabulary):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(vocabulary_to_dict(v), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_vocabulary_json(path) -> Vocabulary:
    with open(path, "r", encoding="utf-8") as fh:
        return vocabulary_from_dict(json.load(fh))
