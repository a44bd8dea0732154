import numpy as np
import pytest

from selfaware.core import GeneralizedState, Observation, Trajectory, state_to_vector, vector_to_state
from selfaware.errors import InvalidInputError, NumericalDegeneracyError
from selfaware.unmotivated import (
    A_UNMOTIVATED,
    H_POSITION,
    KalmanBelief,
    NoiseConfig,
    initial_belief,
    predict_unmotivated,
    track,
    update_position,
)


def belief(mean, cov):
    return KalmanBelief(vector_to_state(np.asarray(mean, dtype=float)), np.asarray(cov, dtype=float))


def make_traj(positions, dt=0.1):
    obs = tuple(Observation(k, k * dt, (float(p[0]), float(p[1]))) for k, p in enumerate(positions))
    return Trajectory(obs, dt)


class TestNoiseConfig:
    def test_defaults_valid(self):
        n = NoiseConfig()
        assert n.q.shape == (4, 4) and n.r.shape == (2, 2)

    def test_asymmetric_rejected(self):
        q = np.diag([1.0, 1, 1, 1])
        q[0, 1] = 1e-6
        with pytest.raises(InvalidInputError):
            NoiseConfig(q=q)

    def test_indefinite_q_rejected(self):
        with pytest.raises(InvalidInputError):
            NoiseConfig(q=np.diag([-0.1, 1, 1, 1]))

    def test_singular_r_rejected(self):
        with pytest.raises(InvalidInputError):
            NoiseConfig(r=np.diag([1.0, 0.0]))


class TestPredict:
    def test_velocity_annihilated(self):
        b = belief([2, 3, 1, 1], np.eye(4))
        out = predict_unmotivated(b, NoiseConfig(q=np.zeros((4, 4))))
        assert state_to_vector(out.mean) == pytest.approx([2, 3, 0, 0])

    def test_zero_state_identity_q(self):
        b = belief([0, 0, 0, 0], np.zeros((4, 4)))
        out = predict_unmotivated(b, NoiseConfig(q=np.eye(4)))
        assert np.allclose(out.covariance, np.eye(4))

    def test_covariance_is_a_p_at(self):
        # hand matrix product: A I A^T keeps the position block only
        b = belief([5, -1, 0.5, 0.5], np.eye(4))
        out = predict_unmotivated(b, NoiseConfig(q=np.zeros((4, 4))))
        assert np.allclose(out.covariance, A_UNMOTIVATED @ A_UNMOTIVATED.T)
        assert np.allclose(out.covariance, np.diag([1.0, 1.0, 0.0, 0.0]))


class TestUpdate:
    def test_zero_innovation(self):
        b = belief([1, 2, 0, 0], np.eye(4))
        out, innovation = update_position(b, (1.0, 2.0), NoiseConfig())
        assert innovation == pytest.approx([0.0, 0.0])
        assert state_to_vector(out.mean)[:2] == pytest.approx([1.0, 2.0])

    def test_hand_evaluated_scalar_update(self):
        # P = I, R = I: S = 2I, K = 0.5 on position; z = (2, 0) -> posterior (1, 0)
        b = belief([0, 0, 0, 0], np.eye(4))
        out, innovation = update_position(b, (2.0, 0.0), NoiseConfig(r=np.eye(2)))
        assert innovation == pytest.approx([2.0, 0.0])
        assert state_to_vector(out.mean)[:2] == pytest.approx([1.0, 0.0], abs=1e-12)

    def test_uninformative_measurement_limit(self):
        b = belief([3, -4, 0, 0], np.eye(4))
        out, _ = update_position(b, (100.0, 100.0), NoiseConfig(r=1e12 * np.eye(2)))
        assert np.allclose(state_to_vector(out.mean), state_to_vector(b.mean), atol=1e-6)
        assert np.allclose(out.covariance, b.covariance, atol=1e-6)

    def test_degenerate_update_raises(self):
        b = belief([0, 0, 0, 0], 1e308 * np.eye(4))
        with pytest.raises(NumericalDegeneracyError):
            update_position(b, (0.0, 0.0), NoiseConfig(r=1e308 * np.eye(2)))

    def test_posterior_not_larger_on_observed_subspace(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            a = rng.normal(size=(4, 4))
            p = a @ a.T + 1e-6 * np.eye(4)
            b = belief(rng.normal(size=4), p)
            out, _ = update_position(b, rng.normal(size=2), NoiseConfig())
            shrink = H_POSITION @ (b.covariance - out.covariance) @ H_POSITION.T
            assert np.min(np.linalg.eigvalsh(shrink)) >= -1e-9


class TestTrack:
    def test_static_agent_velocities_vanish(self):
        traj = make_traj([(2.0, -1.0)] * 60)
        states = track(traj)
        tail = np.array([[s.vx, s.vy] for s in states[-10:]])
        assert np.max(np.abs(tail)) < 1e-6

    def test_straight_line_velocity_recovered(self):
        # closed-form check: with tiny R the gain is ~1, so innovation/dt -> speed
        dt = 0.1
        traj = make_traj([(k * dt, 0.0) for k in range(60)], dt=dt)
        noise = NoiseConfig(r=1e-9 * np.eye(2))
        states = track(traj, noise)
        vx = np.array([s.vx for s in states[10:]])
        assert np.all(np.abs(vx - 1.0) < 0.05)

    def test_length_one_rejected(self):
        with pytest.raises(InvalidInputError):
            make_traj([(0.0, 0.0)])

    def test_output_length_matches(self):
        traj = make_traj([(0.1 * k, 0.2 * k) for k in range(25)])
        assert len(track(traj)) == 25


class TestFilterProperties:
    def test_covariance_stays_symmetric_psd(self):
        rng = np.random.default_rng(3)
        b = initial_belief((0.0, 0.0))
        noise = NoiseConfig()
        for _ in range(200):
            b = predict_unmotivated(b, noise)
            b, _ = update_position(b, rng.normal(scale=0.3, size=2), noise)
            assert np.max(np.abs(b.covariance - b.covariance.T)) < 1e-9
            assert np.min(np.linalg.eigvalsh(b.covariance)) >= -1e-9

    def test_static_posterior_converges_to_running_mean(self):
        # Q = 0, R = eps*I: the prior (weight ~eps) washes out and the
        # posterior tracks the running mean of the updated observations.
        rng = np.random.default_rng(9)
        eps = 1e-9
        noise = NoiseConfig(q=np.zeros((4, 4)), r=eps * np.eye(2))
        zs = rng.normal(loc=(5.0, -2.0), scale=0.3, size=(50, 2))
        b = KalmanBelief(GeneralizedState(0.0, 0.0, 0.0, 0.0), np.eye(4))
        for k in range(len(zs)):
            b = predict_unmotivated(b, noise)
            b, _ = update_position(b, zs[k], noise)
            running_mean = zs[: k + 1].mean(axis=0)
            assert state_to_vector(b.mean)[:2] == pytest.approx(running_mean, abs=1e-6)

    def test_innovation_whiteness_on_model_data(self):
        # simulate the unmotivated model itself; innovations must be white
        rng = np.random.default_rng(17)
        noise = NoiseConfig()
        n = 1500
        x = np.zeros(4)
        innovations = np.zeros((n, 2))
        b = initial_belief((0.0, 0.0))
        for k in range(n):
            x = A_UNMOTIVATED @ x + rng.multivariate_normal(np.zeros(4), noise.q)
            z = H_POSITION @ x + rng.multivariate_normal(np.zeros(2), noise.r)
            b = predict_unmotivated(b, noise)
            b, innovations[k] = update_position(b, z, noise)
        burn = innovations[100:]
        for axis in range(2):
            v = burn[:, axis] - burn[:, axis].mean()
            rho1 = np.dot(v[1:], v[:-1]) / np.dot(v, v)
            assert abs(rho1) < 0.1
