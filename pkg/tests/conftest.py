import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import selfaware as sa
from selfaware import mjpf, scenario as sc, som as sm, vocabulary as vc

# Desk-scale protocol shared by the heavier tests: one courtyard, one
# vocabulary, reused everywhere to keep the suite fast.
COURTYARD = dict(width=40.0, height=20.0, speed=2.0, dt=0.1,
                 corner_radius=6.0, noise_sigma=0.02)


def make_params(laps, seed, **overrides):
    kw = dict(COURTYARD, laps=laps, seed=seed)
    kw.update(overrides)
    return sa.ScenarioParams(**kw)


def train_vocabulary(params, som_seed=2, epochs=200):
    lt = sa.generate_perimeter(params)
    states = sa.track(lt.trajectory)
    vectors = np.array([[s.x, s.y, s.vx, s.vy] for s in states])
    cfg = sm.SomConfig(seed=som_seed, epochs=epochs,
                       metric=sa.WeightedMetric(beta=0.05, alpha=1.0))
    model = sm.train(vectors, cfg)
    vocab = vc.build_vocabulary(states, model, lt.trajectory.dt)
    labels = [vc.assign_superstate(vocab, s) for s in states]
    vocab.transitions = vc.learn_transitions([labels], len(vocab), 1.0)
    return vocab, states, model


@pytest.fixture(scope="session")
def sl_pipeline():
    """Vocabulary trained on 4 clean perimeter laps of the shared courtyard."""
    params = make_params(laps=4, seed=1)
    vocab, states, model = train_vocabulary(params)
    return {"params": params, "vocab": vocab, "states": states, "som": model}


@pytest.fixture()
def filter_config():
    return mjpf.MjpfConfig(seed=3)


def uturn_trigger_fraction(params):
    """Trigger 1 m into the left straight of the final lap: the latest
    straight that still fits the turn, keeping the retrace short."""
    w, h, r = params.width, params.height, params.corner_radius
    left_start = 2 * (w - 2 * r) + (h - 2 * r) + 3 * (np.pi * r / 2)
    lap_frac = (left_start + 1.0) / sc.perimeter_length(params)
    return (params.laps - 1 + lap_frac) / params.laps
