"""Event-level correlation between the shared-level and private-layer series:
lag recovery, change-point agreement and joint anomaly verdicts."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import DUMMY, AnomalySeries
from .errors import AlignmentError, InvalidInputError


@dataclass(frozen=True)
class FusionConfig:
    sl_threshold: float = 0.0
    pl_threshold: float = 0.0
    rule: str = "OR"
    max_lag: int = 0

    def __post_init__(self):
        if self.rule not in ("AND", "OR"):
            raise InvalidInputError(f"rule must be AND or OR, got {self.rule!r}")
        if self.max_lag < 0:
            raise InvalidInputError("max_lag must be >= 0")
        if not (np.isfinite(self.sl_threshold) and np.isfinite(self.pl_threshold)):
            raise InvalidInputError("thresholds must be finite")


@dataclass
class JointSeries:
    ks: np.ndarray
    sl_superstates: np.ndarray
    sl_scores: np.ndarray
    pl_superstates: np.ndarray
    pl_scores: np.ndarray

    def __len__(self):
        return self.ks.size


def _changepoints(superstates: np.ndarray) -> np.ndarray:
    """Binary indicator: label differs from its predecessor (dummy included)."""
    cp = np.zeros(superstates.size, dtype=float)
    if superstates.size > 1:
        cp[1:] = superstates[1:] != superstates[:-1]
    return cp


def _indicator_on_grid(series: AnomalySeries, k_min, k_max):
    """Change-point indicator resampled onto the dense integer k grid."""
    grid = np.zeros(k_max - k_min + 1)
    cp = _changepoints(series.superstates)
    for k, val in zip(series.ks, cp):
        if k_min <= k <= k_max:
            grid[k - k_min] = val
    return grid


def align(sl: AnomalySeries, pl: AnomalySeries, cfg: FusionConfig):
    """Join the two series on the sample index, recovering an integer lag.

    With max_lag = 0 this is a pure inner join on equal k.  Otherwise the lag
    in [-max_lag, max_lag] maximizing the normalized cross-correlation of the
    two change-point indicator sequences is chosen, and sl at k is joined
    with pl at k + lag.  Returns (joint, lag).
    """
    if len(sl) == 0 or len(pl) == 0:
        raise AlignmentError("cannot align an empty series")

    lag = 0
    if cfg.max_lag > 0:
        k_min = int(min(sl.ks.min(), pl.ks.min()))
        k_max = int(max(sl.ks.max(), pl.ks.max()))
        a = _indicator_on_grid(sl, k_min, k_max)
        b = _indicator_on_grid(pl, k_min, k_max)
        best = None
        for cand in range(-cfg.max_lag, cfg.max_lag + 1):
            if cand >= 0:
                xa, xb = a[: a.size - cand], b[cand:]
            else:
                xa, xb = a[-cand:], b[: b.size + cand]
            denom = np.sqrt(np.sum(xa * xa) * np.sum(xb * xb))
            score = float(np.sum(xa * xb) / denom) if denom > 0 else 0.0
            key = (score, -abs(cand), cand)
            if best is None or key > best[0]:
                best = (key, cand)
        lag = best[1]

    pl_lookup = {int(k): i for i, k in enumerate(pl.ks)}
    rows = []
    for i, k in enumerate(sl.ks):
        j = pl_lookup.get(int(k) + lag)
        if j is not None:
            rows.append((int(k), i, j))
    if not rows:
        raise AlignmentError(f"no overlapping samples at lag {lag}")

    ks = np.array([r[0] for r in rows])
    si = np.array([r[1] for r in rows])
    pi = np.array([r[2] for r in rows])
    joint = JointSeries(
        ks=ks,
        sl_superstates=sl.superstates[si],
        sl_scores=sl.scores[si],
        pl_superstates=pl.superstates[pi],
        pl_scores=pl.scores[pi],
    )
    return joint, lag


def changepoint_correlation(joint: JointSeries, window: int) -> float:
    """Fraction of one side's superstate switches matched by a switch on the
    other side within +-window samples, averaged over both directions.

    A side with no switches contributes 0 to its direction.
    """
    if window < 1:
        raise InvalidInputError("window must be >= 1")
    if window >= len(joint):
        raise InvalidInputError("window must be smaller than the series length")

    sl_cp = np.flatnonzero(_changepoints(joint.sl_superstates))
    pl_cp = np.flatnonzero(_changepoints(joint.pl_superstates))

    def matched_fraction(src, dst):
        if src.size == 0 or dst.size == 0:
            return 0.0
        hits = sum(1 for i in src if np.min(np.abs(dst - i)) <= window)
        return hits / src.size

    return 0.5 * (matched_fraction(sl_cp, pl_cp) + matched_fraction(pl_cp, sl_cp))


def joint_verdict(joint: JointSeries, cfg: FusionConfig) -> np.ndarray:
    """Per-sample anomaly flags.

    The shared-level side fires on score alone; the private-layer side
    requires both an above-threshold score and a dummy superstate (every
    hierarchy level rejected the sample).
    """
    sl_side = joint.sl_scores > cfg.sl_threshold
    pl_side = (joint.pl_scores > cfg.pl_threshold) & (joint.pl_superstates == DUMMY)
    return (sl_side | pl_side) if cfg.rule == "OR" else (sl_side & pl_side)


def verdict_summary(joint: JointSeries, flags, lag, window, labels=None) -> dict:
    """JSON-ready run summary; precision/recall appear when labels are given."""
    out = {
        "lag": int(lag),
        "changepoint_correlation": changepoint_correlation(joint, window),
    }
    if labels is not None:
        labels = np.asarray(labels, dtype=bool)
        if labels.size != len(joint):
            raise InvalidInputError("labels length must match the joint series")
        tp = int(np.sum(flags & labels))
        fp = int(np.sum(flags & ~labels))
        fn = int(np.sum(~flags & labels))
        out["precision"] = tp / (tp + fp) if tp + fp else 0.0
        out["recall"] = tp / (tp + fn) if tp + fn else 0.0
    return out


def save_joint_csv(path, joint: JointSeries, flags):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("k,sl_superstate,sl_score,pl_superstate,pl_score,flag\n")
        for k, ss, sy, ps, py, f in zip(
            joint.ks, joint.sl_superstates, joint.sl_scores,
            joint.pl_superstates, joint.pl_scores, flags,
        ):
            fh.write(f"{k},{ss},{repr(float(sy))},{ps},{repr(float(py))},{int(f)}\n")


def save_summary_json(path, summary: dict):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
