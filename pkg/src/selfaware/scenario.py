"""Synthetic courtyard scenarios with ground-truth anomaly labels.

A rounded-rectangle perimeter is traversed counterclockwise at constant
speed.  Three variants: plain monitoring laps, a U-turn forced mid-straight,
and an emergency stop.  Positions carry i.i.d. Gaussian noise; labels mark
straights, curves and the abnormal maneuver windows.

Sampling is arc-length parameterized.  The requested speed is snapped to the
nearest value that divides a lap into an integer number of steps, so laps are
exactly periodic sample-for-sample; the U-turn diameter and the stop ramps
are likewise snapped to whole steps so that post-maneuver samples fall back
onto the same arc grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Observation, Trajectory, load_trajectory_csv, _fmt, _read_rows
from .errors import InvalidInputError, ParseError

STRAIGHT = "S"
CURVE = "C"
ABNORMAL = "A"

LEAD_IN_METERS = 2.0  # "first sight" window ahead of a maneuver trigger


@dataclass(frozen=True)
class ScenarioParams:
    width: float = 40.0
    height: float = 20.0
    speed: float = 2.0
    dt: float = 0.1
    laps: int = 4
    corner_radius: float = 3.0
    noise_sigma: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise InvalidInputError("rectangle dimensions must be positive")
        if not (0 < self.corner_radius < min(self.width, self.height) / 2):
            raise InvalidInputError("corner_radius must lie in (0, min(width, height)/2)")
        if self.speed <= 0 or self.dt <= 0:
            raise InvalidInputError("speed and dt must be positive")
        if self.speed * self.dt >= self.corner_radius:
            raise InvalidInputError("speed*dt must stay below corner_radius to sample curvature")
        if self.laps < 1:
            raise InvalidInputError("laps must be >= 1")
        if self.noise_sigma < 0:
            raise InvalidInputError("noise_sigma must be nonnegative")


@dataclass(frozen=True)
class LabeledTrajectory:
    trajectory: Trajectory
    labels: tuple

    def __post_init__(self):
        if len(self.labels) != len(self.trajectory):
            raise InvalidInputError("labels must match trajectory length")
        bad = set(self.labels) - {STRAIGHT, CURVE, ABNORMAL}
        if bad:
            raise InvalidInputError(f"unknown labels {bad}")

    def abnormal_mask(self) -> np.ndarray:
        return np.array([lbl == ABNORMAL for lbl in self.labels])


class _PerimeterPath:
    """Arc-length parameterization of the rounded rectangle, counterclockwise
    from the start of the bottom straight."""

    def __init__(self, width, height, radius):
        w, h, r = width, height, radius
        self.length = 2 * (w - 2 * r) + 2 * (h - 2 * r) + 2 * math.pi * r
        quarter = math.pi * r / 2
        self.segments = []
        cursor = 0.0

        def straight(p0, d):
            return ("straight", np.array(p0, dtype=float), np.array(d, dtype=float))

        def arc(center, start_angle):
            return ("arc", np.array(center, dtype=float), start_angle)

        for seg, seg_len in [
            (straight((r, 0.0), (1.0, 0.0)), w - 2 * r),
            (arc((w - r, r), -math.pi / 2), quarter),
            (straight((w, r), (0.0, 1.0)), h - 2 * r),
            (arc((w - r, h - r), 0.0), quarter),
            (straight((w - r, h), (-1.0, 0.0)), w - 2 * r),
            (arc((r, h - r), math.pi / 2), quarter),
            (straight((0.0, h - r), (0.0, -1.0)), h - 2 * r),
            (arc((r, r), math.pi), quarter),
        ]:
            self.segments.append((cursor, seg_len, seg))
            cursor += seg_len
        self._radius = r

    def _locate(self, s):
        s = s % self.length
        for start, seg_len, seg in self.segments[:-1]:
            if s < start + seg_len:
                return s - start, seg
        start, _, seg = self.segments[-1]
        return s - start, seg

    def position(self, s) -> np.ndarray:
        local, seg = self._locate(s)
        if seg[0] == "straight":
            return seg[1] + local * seg[2]
        center, start_angle = seg[1], seg[2]
        angle = start_angle + local / self._radius
        return center + self._radius * np.array([math.cos(angle), math.sin(angle)])

    def tangent(self, s) -> np.ndarray:
        local, seg = self._locate(s)
        if seg[0] == "straight":
            return seg[2]
        angle = seg[2] + local / self._radius
        return np.array([-math.sin(angle), math.cos(angle)])

    def is_curve(self, s) -> bool:
        _, seg = self._locate(s)
        return seg[0] == "arc"


def _grid(p: ScenarioParams):
    """Path, per-lap step count and the snapped arc step."""
    path = _PerimeterPath(p.width, p.height, p.corner_radius)
    per_lap = int(round(path.length / (p.speed * p.dt)))
    if per_lap < 8:
        raise InvalidInputError("geometry too small for the requested speed*dt")
    return path, per_lap, path.length / per_lap


def perimeter_length(p: ScenarioParams) -> float:
    return _PerimeterPath(p.width, p.height, p.corner_radius).length


def samples_per_lap(p: ScenarioParams) -> int:
    return _grid(p)[1]


def _assemble(p, points, spatial_s, abnormal, path):
    """Noise + labels + packaging.  `spatial_s` is the nominal arc position of
    each sample, used for the straight/curve label where not abnormal."""
    rng = np.random.default_rng(p.seed)
    samples = []
    labels = []
    for i, (pt, s, ab) in enumerate(zip(points, spatial_s, abnormal)):
        pos = np.asarray(pt, dtype=float)
        if p.noise_sigma > 0:
            pos = pos + rng.normal(0.0, p.noise_sigma, size=2)
        samples.append(Observation(i, i * p.dt, (float(pos[0]), float(pos[1]))))
        if ab:
            labels.append(ABNORMAL)
        else:
            labels.append(CURVE if path.is_curve(s) else STRAIGHT)
    return LabeledTrajectory(Trajectory(tuple(samples), p.dt), tuple(labels))


def generate_perimeter(p: ScenarioParams) -> LabeledTrajectory:
    """Normal monitoring: `laps` counterclockwise circuits, no abnormal labels."""
    path, per_lap, ds = _grid(p)
    total = p.laps * per_lap
    arc = [(i % per_lap) * ds for i in range(total)]
    points = [path.position(s) for s in arc]
    return _assemble(p, points, arc, [False] * total, path)


def generate_uturn(p: ScenarioParams, trigger_fraction: float) -> LabeledTrajectory:
    """Perimeter run with a half-turn maneuver forced on a straight.

    At the trigger the vehicle sweeps a semicircle (radius about half the
    corner radius) that re-enters the path slightly ahead, then retraces the
    perimeter clockwise for the remaining budget.  Abnormal window: 2 m of
    lead-in before the trigger through the end of the half-turn.
    """
    if not (0 < trigger_fraction < 1):
        raise InvalidInputError("trigger_fraction must lie in (0, 1)")
    path, per_lap, ds = _grid(p)
    total = p.laps * per_lap
    m = int(round(trigger_fraction * total))
    m = min(max(m, 1), total - 1)
    s_trig = (m % per_lap) * ds
    if path.is_curve(s_trig):
        raise InvalidInputError("U-turn trigger must fall on a straight segment, not a curve")

    # Semicircle re-entering the path: diameter along the travel direction,
    # snapped to a whole number of arc steps so the retrace stays on-grid.
    r_u = p.corner_radius / 2.0
    diameter_steps = max(2, int(round(2.0 * r_u / ds)))
    diameter = diameter_steps * ds
    r_eff = diameter / 2.0
    if path.is_curve(s_trig + diameter) or path.is_curve(s_trig + diameter / 2):
        raise InvalidInputError("U-turn arc would overlap a curve; move the trigger")
    n_turn = max(1, int(round(math.pi * r_eff / ds)))

    p0 = path.position(s_trig)
    d_hat = path.tangent(s_trig)
    n_hat = np.array([-d_hat[1], d_hat[0]])  # left normal = courtyard interior
    center = p0 + r_eff * d_hat

    points = [path.position((i % per_lap) * ds) for i in range(m)]
    spatial = [(i % per_lap) * ds for i in range(m)]
    for j in range(1, n_turn + 1):
        phi = j * math.pi / n_turn
        local = np.array([-r_eff * math.cos(phi), r_eff * math.sin(phi)])
        points.append(center + local[0] * d_hat + local[1] * n_hat)
        spatial.append(s_trig)
    retrace = total - m
    s_exit = s_trig + diameter
    for j in range(1, retrace + 1):
        s = (s_exit - j * ds) % path.length
        points.append(path.position(s))
        spatial.append(s)

    lead = int(math.ceil(LEAD_IN_METERS / ds))
    abnormal = [False] * len(points)
    for i in range(max(0, m - lead), m + n_turn):
        abnormal[i] = True
    return _assemble(p, points, spatial, abnormal, path)


def generate_stop(p: ScenarioParams, stop_fraction: float, stop_duration: float,
                  ramp_seconds: float = 1.0) -> LabeledTrajectory:
    """Perimeter run with an emergency stop on a straight.

    Constant-deceleration ramp to rest, a hold, and a symmetric ramp back up;
    all ramp and hold samples are labeled abnormal.  Ramp lengths are whole
    sample counts so the vehicle resumes exactly on the arc grid.
    """
    if not (0 < stop_fraction < 1):
        raise InvalidInputError("stop_fraction must lie in (0, 1)")
    if stop_duration < 0 or ramp_seconds < 0:
        raise InvalidInputError("durations must be nonnegative")
    path, per_lap, ds = _grid(p)
    total = p.laps * per_lap
    m = int(round(stop_fraction * total))
    m = min(max(m, 1), total - 1)
    s_stop = (m % per_lap) * ds
    if path.is_curve(s_stop):
        raise InvalidInputError("stop point must fall on a straight segment, not a curve")

    ramp_steps = int(round(ramp_seconds / p.dt))
    hold_steps = int(round(stop_duration / p.dt))

    arc = [(i % per_lap) * ds for i in range(m)]
    abnormal = [False] * m
    cursor = s_stop
    for j in range(1, ramp_steps + 1):  # decelerate
        cursor += ds * (1.0 - j / ramp_steps)
        arc.append(cursor)
        abnormal.append(True)
    for _ in range(hold_steps):
        arc.append(cursor)
        abnormal.append(True)
    for j in range(1, ramp_steps + 1):  # accelerate
        cursor += ds * (j / ramp_steps)
        arc.append(cursor)
        abnormal.append(True)
    # after both ramps the cursor sits ramp_steps grid points past the trigger
    for i in range(m + ramp_steps, total):
        arc.append((i % per_lap) * ds)
        abnormal.append(False)
    points = [path.position(s) for s in arc]
    return _assemble(p, points, arc, abnormal, path)


# ---------------------------------------------------------------------------
# File formats

def load_trajectory(path) -> Trajectory:
    """Read `k,t,x,y` (labels, when present, are ignored)."""
    return load_trajectory_csv(path)


def save_labeled(path, lt: LabeledTrajectory):
    """Write `k,t,x,y,label` with label in {S, C, A}."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("k,t,x,y,label\n")
        for obs, lbl in zip(lt.trajectory.samples, lt.labels):
            fh.write(f"{obs.k},{_fmt(obs.t)},{_fmt(obs.position[0])},{_fmt(obs.position[1])},{lbl}\n")


def load_labeled(path) -> LabeledTrajectory:
    rows = _read_rows(path, header_prefix=["k", "t", "x", "y", "label"])
    samples, labels = [], []
    for lineno, parts in rows:
        try:
            samples.append(Observation(int(parts[0]), float(parts[1]), (float(parts[2]), float(parts[3]))))
        except (ValueError, InvalidInputError) as exc:
            raise ParseError(str(exc), line=lineno) from exc
        labels.append(parts[4])
    if len(samples) < 2:
        raise ParseError(f"labeled file {path} has fewer than 2 samples")
    dt = samples[1].t - samples[0].t
    return LabeledTrajectory(Trajectory(tuple(samples), dt), tuple(labels))
