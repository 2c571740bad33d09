import numpy as np
import pytest

from idkit import Diverged, NoiseConfig, StateSpaceModel, UtWeights, sigma_points, ukf_filter, urtss_smooth
from idkit.errors import InvalidArgument, NumericalFailure
from idkit.experiments.cts import THETA0, CascadedTanks, gen_synthetic_cts
from idkit.oracles import kalman_filter, rts_smoother
from idkit.selftest import linear_ss_model, random_linear_system, smoother_oracle_error
from idkit.smoother import smooth


def _psd(M):
    return np.allclose(M, M.T) and np.linalg.eigvalsh(M).min() >= -1e-10


class TestWeights:
    def test_default_weights_normalized(self):
        for n in range(1, 6):
            w = UtWeights.from_params(n)
            assert abs(w.wm.sum() - 1) <= 1e-12
            np.testing.assert_array_equal(w.wm[1:], w.wc[1:])

    def test_two_state_defaults(self):
        w = UtWeights.from_params(2)
        assert w.a == pytest.approx(np.sqrt(3))
        assert w.wm[0] == pytest.approx(1 / 3) and w.wc[0] == pytest.approx(7 / 3)
        assert w.wm[1] == pytest.approx(1 / 6)

    def test_tank_preset_override(self):
        w = UtWeights.tank_preset(2)
        assert w.a == 2.74 and w.wm[0] == 0.33 and w.wc[0] == 2.33 and np.all(w.wm[1:] == 0.67)

    def test_nonpositive_scaling_rejected(self):
        with pytest.raises(InvalidArgument):
            UtWeights.from_params(2, alpha=1.0, kappa=-2.0)


class TestSigmaPoints:
    def test_scalar_points(self):
        w = UtWeights(a=2.0, wm=np.array([0.5, 0.25, 0.25]), wc=np.array([0.5, 0.25, 0.25]))
        np.testing.assert_allclose(sigma_points([0.0], [[1.0]], w).ravel(), [0, 2, -2])

    def test_moments(self, rng):
        for n in range(1, 5):
            M = rng.standard_normal((n, n))
            P, m = M @ M.T + 0.1 * np.eye(n), rng.standard_normal(n)
            w = UtWeights.from_params(n, alpha=1.0, beta=0.0, kappa=0.0)
            S = sigma_points(m, P, w)
            np.testing.assert_allclose(w.wm @ S, m, atol=1e-12)
            d = S - w.wm @ S
            np.testing.assert_allclose((w.wc[:, None] * d).T @ d, P, atol=1e-10)

    def test_indefinite_covariance(self):
        with pytest.raises(NumericalFailure):
            sigma_points([0.0, 0.0], np.diag([1.0, -1.0]), UtWeights.from_params(2))


class TestLinearOracle:
    def test_filter_and_smoother_match_exact(self, rng):
        for _ in range(3):
            err_f, err_s = smoother_oracle_error(random_linear_system(rng))
            assert err_f <= 1e-8 and err_s <= 1e-8

    def test_covariances_and_smoothing_gain(self, rng):
        sys = random_linear_system(rng)
        noise = NoiseConfig(Pe=sys["Pe"], Pw=sys["Pw"], P0=sys["P0"], x0=sys["x0"])
        traj = smooth(linear_ss_model(sys), None, noise, UtWeights.from_params(2), sys["u"], sys["y"])
        np.testing.assert_array_equal(traj.smoothed_means[-1], traj.filtered_means[-1])
        for t in range(1, traj.horizon + 1):
            assert _psd(traj.filtered_covs[t - 1]) and _psd(traj.smoothed_covs[t])
            assert np.trace(traj.smoothed_covs[t]) <= np.trace(traj.filtered_covs[t - 1]) + 1e-9
        ms, Ps = kalman_filter(sys["A"], sys["B"], sys["C"], sys["D"], sys["Pe"], sys["Pw"], sys["x0"],
                               sys["P0"], sys["u"], sys["y"])
        _, sP = rts_smoother(sys["A"], sys["B"], sys["Pe"], sys["x0"], sys["P0"], sys["u"], ms, Ps)
        np.testing.assert_allclose(traj.filtered_covs, Ps, atol=1e-8)
        np.testing.assert_allclose(traj.smoothed_covs, sP, atol=1e-8)

    def test_zero_gain_limit(self, rng):
        sys = random_linear_system(rng, T=20)
        noise = NoiseConfig(Pe=np.zeros((2, 2)), Pw=1e14, P0=0.1 * np.eye(2), x0=sys["x0"])
        means, _ = ukf_filter(linear_ss_model(sys), None, noise, UtWeights.from_params(2), sys["u"], sys["y"])
        x = sys["x0"].copy()
        for k in range(20):
            x = sys["A"] @ x + sys["B"] * sys["u"][k]
            np.testing.assert_allclose(means[k], x, atol=1e-6)

    def test_deterministic(self, rng):
        sys = random_linear_system(rng)
        noise = NoiseConfig(Pe=sys["Pe"], Pw=sys["Pw"], P0=sys["P0"], x0=sys["x0"])
        a = smooth(linear_ss_model(sys), None, noise, UtWeights.from_params(2), sys["u"], sys["y"])
        b = smooth(linear_ss_model(sys), None, noise, UtWeights.from_params(2), sys["u"], sys["y"])
        np.testing.assert_array_equal(a.smoothed_means, b.smoothed_means)

    def test_per_point_callables(self, rng):
        sys = random_linear_system(rng, T=10)
        A, B, C, D = sys["A"], sys["B"], sys["C"], sys["D"]
        scalar = StateSpaceModel(f=lambda x, u, th: A @ x + B * u, g=lambda x, u, th: C @ x + D * u, n=2)
        noise = NoiseConfig(Pe=sys["Pe"], Pw=sys["Pw"], P0=sys["P0"], x0=sys["x0"])
        a = smooth(scalar, None, noise, UtWeights.from_params(2), sys["u"], sys["y"])
        b = smooth(linear_ss_model(sys), None, noise, UtWeights.from_params(2), sys["u"], sys["y"])
        np.testing.assert_allclose(a.smoothed_means, b.smoothed_means, atol=1e-12)


def test_divergence_names_step():
    model = StateSpaceModel(f=lambda x, u, th: x * (np.inf if u > 0 else 1.0), g=lambda x, u, th: x[0], n=1)
    noise = NoiseConfig(Pe=[[0.1]], Pw=0.1, P0=[[1.0]], x0=[1.0])
    u = np.array([0.0, 0.0, 1.0, 0.0])
    with pytest.raises(Diverged) as err:
        ukf_filter(model, None, noise, UtWeights.from_params(1), u, np.zeros(3))
    assert err.value.step == 3


def test_noise_config_validation():
    with pytest.raises(InvalidArgument):
        NoiseConfig(Pe=-np.eye(2), Pw=0.1, P0=np.eye(2), x0=[0, 0])
    with pytest.raises(InvalidArgument):
        NoiseConfig(Pe=np.eye(2), Pw=-1, P0=np.eye(2), x0=[0, 0])
    with pytest.raises(InvalidArgument):
        NoiseConfig(Pe=np.eye(3), Pw=0.1, P0=np.eye(2), x0=[0, 0])


def test_tank_model_long_horizon():
    ds = gen_synthetic_cts(0)
    tanks = CascadedTanks()
    y = ds.y_est
    noise = NoiseConfig(Pe=1e-3 * np.eye(2), Pw=1e-2, P0=0.5 * np.eye(2), x0=[y[0], y[0]])
    traj = smooth(tanks.state_space_model(), THETA0, noise, UtWeights.from_params(2), ds.u_est, y[1:])
    assert traj.horizon == 1023
    assert np.all(np.isfinite(traj.smoothed_means))
    assert all(_psd(P) for P in traj.filtered_covs) and all(_psd(P) for P in traj.smoothed_covs)
