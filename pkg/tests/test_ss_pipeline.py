import numpy as np
import pytest

from idkit import EmbedConfig, InvalidArgument, KernelSpec, NoiseConfig, StateSpaceModel, UtWeights
from idkit.embed import EmbedResult, PhysicsModel
from idkit.experiments.cts import CascadedTanks, CtsConfig, THETA0, gen_synthetic_cts, run_variant
from idkit.ss_pipeline import (CtsLayout, GeneralLayout, IOData, PredictorModel, build_regressors,
                               evaluate_prediction, evaluate_simulation, run_algorithm1)

A = lambda t: np.array([[t[0], 0.3], [0.0, 0.8]])
B = lambda t: np.array([t[1], 1.0])
THETA = np.array([0.7, 0.5])


def linear_model():
    f = lambda X, u, t: X @ A(t).T + np.outer(np.ones(len(X)), B(t)) * u
    return StateSpaceModel(f=f, g=lambda X, u, t: X[:, 0], n=2, vectorized=True)


def linear_data(seed, T=300):
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(T)
    x, y = np.zeros(2), np.zeros(T)
    for k in range(T):
        y[k] = x[0] + 0.01 * rng.standard_normal()
        x = A(THETA) @ x + B(THETA) * u[k] + 0.01 * rng.standard_normal(2)
    return IOData(u, y)


class TestRegressors:
    def test_general_lag_accounting(self):
        Z, target, idx = build_regressors(np.zeros((3, 2)), np.arange(3.0), np.arange(3.0), "general")
        assert Z.shape == (2, 4) and list(idx) == [1, 2]

    def test_general_contents(self):
        X = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
        Z, target, _ = build_regressors(X, [10.0, 11.0, 12.0], [0.0, 0.5, 0.7], "general")
        np.testing.assert_array_equal(Z[0], [1, 2, 10, 11])
        np.testing.assert_array_equal(target, [0.5, 0.7])

    def test_cts_bookkeeping(self):
        Z, target, _ = build_regressors(np.array([7.0, 8.0, 9.0]), [4.0, 5.0, 6.0], [1.0, 2.0, 3.0], "cts")
        np.testing.assert_array_equal(Z, [[7.0, 2.0, 4.0]])
        np.testing.assert_array_equal(target, [3.0])

    def test_zero_inputs(self):
        Z, _, _ = build_regressors(np.zeros((6, 2)), np.zeros(6), np.zeros(6), "general")
        assert not np.any(Z)

    def test_short_horizon(self):
        with pytest.raises(InvalidArgument):
            build_regressors(np.zeros((1, 2)), [0.0], [0.0], "general")
        with pytest.raises(InvalidArgument):
            build_regressors(np.zeros((2, 2)), [0.0, 1.0], [0.0, 1.0], "cts")
        with pytest.raises(InvalidArgument):
            build_regressors(np.zeros((3, 2)), [0.0] * 3, [0.0] * 3, "narx")


def test_linear_system_recovery_over_seeds():
    noise_cfg = dict(Pe=1e-4 * np.eye(2), Pw=1e-4, P0=np.eye(2))
    for seed in range(20):
        data = linear_data(seed)
        noise = NoiseConfig(x0=[data.y[0], 0.0], **noise_cfg)
        # nominal parameters within 5% of the truth
        cfg = EmbedConfig(1.0, None, THETA * 1.05)
        _, _, res = run_algorithm1(data, linear_model(), noise, UtWeights.from_params(2), cfg)
        assert np.all(np.abs(res.theta / THETA - 1) <= 0.05), (seed, res.theta)


def test_affine_physics_uses_closed_form():
    data = linear_data(0, T=120)
    noise = NoiseConfig(Pe=1e-4 * np.eye(2), Pw=1e-4, P0=np.eye(2), x0=[data.y[0], 0.0])
    # xi = theta0 * x1 + 0.3 x2 + theta1 * u_{t-1}: affine in theta
    phys = PhysicsModel.affine(lambda Z: Z[:, [0, 2]], 2, offset=lambda Z: 0.3 * Z[:, 1])
    cfg = EmbedConfig(1e3, KernelSpec.gaussian(3.0), THETA)
    _, _, res = run_algorithm1(data, linear_model(), noise, UtWeights.from_params(2), cfg, physics=phys)
    assert res.method == "affine_closed_form"
    np.testing.assert_allclose(res.theta, THETA, rtol=0.05)


def test_stage_label_on_failure():
    blowup = StateSpaceModel(f=lambda X, u, t: X * np.inf, g=lambda X, u, t: X[:, 0], n=2, vectorized=True)
    noise = NoiseConfig(Pe=np.eye(2), Pw=1.0, P0=np.eye(2), x0=[0.0, 0.0])
    with pytest.raises(Exception, match=r"\[smoothing\]"), np.errstate(invalid="ignore"):
        run_algorithm1(linear_data(0, 10), blowup, noise, UtWeights.from_params(2),
                       EmbedConfig(1.0, None, THETA))


def _exact_tank_predictor(theta):
    tanks = CascadedTanks()
    omega = np.zeros(3)
    res = EmbedResult(theta=np.array(theta), omega=omega, support=np.zeros((3, 3)), spec=None, gamma=1.0,
                      method="ls")
    return PredictorModel(tanks.physics_model(), res, CtsLayout(), tanks.state_space_model(), np.array(theta))


def _noiseless_tanks(n=200):
    return gen_synthetic_cts(0, delta=lambda x, u, Ts: np.zeros(2), process_std=0.0, meas_std=0.0, n=n)


def test_perfect_model_scores_zero():
    ds = _noiseless_tanks()
    model = _exact_tank_predictor(THETA0)
    val = ds.validation
    s1 = (THETA0[3] * val.u[0] / THETA0[0]) ** 2
    assert evaluate_prediction(model, val, x0=s1) == pytest.approx(0.0, abs=1e-10)
    r, fit = evaluate_simulation(model, val, s1)
    assert r == pytest.approx(0.0, abs=1e-10) and fit == pytest.approx(100.0)


def test_constant_output_fit_guard():
    model = _exact_tank_predictor(np.zeros(4))
    data = IOData(np.zeros(20), np.full(20, 2.0))
    r, fit = evaluate_simulation(model, data, 0.0)
    assert r == 0.0 and fit == 100.0


def test_physics_only_matches_direct_simulator():
    ds = gen_synthetic_cts(1, n=150)
    v, predictor, _ = run_variant(ds, CtsConfig(), use_kernel=False)
    tanks = CascadedTanks()
    k, k0 = predictor.theta, predictor.state_theta
    u, y = ds.u_val, ds.y_val
    y_hat = np.empty_like(y)
    y_hat[:2] = y[:2]
    x1 = y[0]
    for t in range(1, len(y) - 1):
        y_hat[t + 1] = tanks.xi(np.array([[x1, y_hat[t], u[t - 1]]]), k)[0]
        x1 = x1 + 4.0 * (-k0[0] * np.sqrt(max(x1, 0.0)) + k0[3] * u[t - 1])
    expected = np.sqrt(np.mean((y_hat[2:] - y[2:]) ** 2))
    assert v.val_simulation[0] == pytest.approx(expected, abs=1e-10)


def test_dropping_kernel_keeps_theta():
    ds = gen_synthetic_cts(2, n=150)
    _, predictor, _ = run_variant(ds, CtsConfig(), use_kernel=True)
    bare = predictor.physics_only()
    np.testing.assert_array_equal(bare.theta, predictor.theta)
    Z = np.array([[5.0, 4.0, 2.0]])
    assert bare.predict(Z)[0] == pytest.approx(predictor.physics.predict(Z, predictor.theta)[0])


def test_identified_state_params_option():
    ds = gen_synthetic_cts(3, n=150)
    v, predictor, _ = run_variant(ds, CtsConfig(state_params="identified"), use_kernel=False)
    np.testing.assert_array_equal(predictor.state_theta, predictor.theta)
    with pytest.raises(InvalidArgument):
        run_algorithm1(ds.estimation, CascadedTanks().state_space_model(),
                       NoiseConfig(Pe=np.eye(2), Pw=1.0, P0=np.eye(2), x0=[1.0, 1.0]),
                       UtWeights.from_params(2), EmbedConfig(0.1, None, THETA0), layout="cts",
                       physics=CascadedTanks().physics_model(), state_params="best")
