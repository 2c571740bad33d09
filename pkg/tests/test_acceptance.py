"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The Monte Carlo run count defaults to 200; set ``IDKIT_MC_RUNS=1000`` for the
full study. Set ``IDKIT_CTS_DATA`` to a directory holding ``cts_est.csv`` and
``cts_val.csv`` to score the recorded tank data instead of the synthetic
self-test.
"""
import os
import time
import warnings

import numpy as np
import pytest

from idkit import KernelSpec
from idkit.embed import EmbedConfig, PhysicsModel, fit_affine, fit_ls, fit_nonlinear
from idkit.experiments.academic import (AcademicConfig, DM_HP, KRR_HP, PROPOSED_HP, GridConfig, evaluate_methods,
                                        gen_academic, monte_carlo, physics_model)
from idkit.experiments.cts import CtsConfig, SYNTH_THETA, gen_synthetic_cts, has_cts_data, load_cts, run_variant
from idkit.kernels import gram_matrix
from idkit.krr import fit_krr
from idkit.selftest import psi_identity_error, random_affine_instance, random_linear_system, random_spec, \
    smoother_oracle_error

CTS_SEEDS = (0, 1)


@pytest.fixture
def report(capsys):
    def _report(n, ok, detail, elapsed, budget):
        ok = ok and elapsed < budget
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}  {detail}  [{elapsed:.1f}s / {budget:.0f}s]")
        assert ok, detail
    return _report


def test_criterion_1_psi_identities(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst_inv = worst_id = 0.0
    families = set()
    for _ in range(100):
        T, d = int(rng.integers(2, 31)), int(rng.integers(1, 4))
        spec = random_spec(rng, d)
        families.add(spec.family)
        K = gram_matrix(spec, rng.standard_normal((T, d)))
        inv_err, id_err = psi_identity_error(K, float(10 ** rng.uniform(-2, 1)))
        worst_inv, worst_id = max(worst_inv, inv_err), max(worst_id, id_err)
    ok = worst_inv <= 1e-9 and worst_id <= 1e-9 and len(families) == 4
    report(1, ok, f"inverse {worst_inv:.1e}, identity {worst_id:.1e}, families {len(families)}",
           time.perf_counter() - t0, 5)


def test_criterion_2_closed_form_vs_iterative(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(50):
        X, Y, physics, spec, gamma = random_affine_instance(rng)
        closed = fit_affine(X, Y, physics, spec, gamma)
        it = fit_nonlinear(X, Y, physics, EmbedConfig(gamma, spec, np.zeros(physics.n_theta)))
        worst = max(worst, np.linalg.norm(closed.theta - it.theta) / (1 + np.linalg.norm(closed.theta)))
    report(2, worst <= 1e-5, f"max scaled diff {worst:.1e}", time.perf_counter() - t0, 30)


def test_criterion_3_reductions(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    krr_err = ls_err = 0.0
    zero = PhysicsModel(f=lambda X, th: np.zeros(X.shape[0]), n_theta=1)
    for _ in range(10):
        X, Y, physics, spec, gamma = random_affine_instance(rng)
        ref = fit_krr(X, Y, spec, gamma).omega
        got = fit_nonlinear(X, Y, zero, EmbedConfig(gamma, spec, [0.3])).omega
        krr_err = max(krr_err, np.max(np.abs(got - ref)))
        ls = fit_ls(X, Y, physics).theta
        big = fit_affine(X, Y, physics, spec, 1e12).theta
        ls_err = max(ls_err, np.linalg.norm(big - ls) / max(np.linalg.norm(ls), 1e-12))
    report(3, krr_err <= 1e-8 and ls_err <= 1e-4, f"krr weights {krr_err:.1e}, ls relative {ls_err:.1e}",
           time.perf_counter() - t0, 5)


def test_criterion_4_smoother_oracle(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    worst_f = worst_s = 0.0
    for _ in range(20):
        err_f, err_s = smoother_oracle_error(random_linear_system(rng, T=50))
        worst_f, worst_s = max(worst_f, err_f), max(worst_s, err_s)
    report(4, worst_f <= 1e-8 and worst_s <= 1e-8, f"filter {worst_f:.1e}, smoother {worst_s:.1e}",
           time.perf_counter() - t0, 10)


def test_criterion_5_academic_table(report):
    t0 = time.perf_counter()
    hyper = {"Proposed": PROPOSED_HP, "DM": DM_HP, "KRR": KRR_HP}
    rm = {m: [] for m in ("Proposed", "LS", "DM", "KRR")}
    for seed in range(20):
        cfg = AcademicConfig(seed=seed)
        train, _, test = gen_academic(cfg)
        res = evaluate_methods(train, test, cfg.theta_bar, hyper)
        for m in rm:
            rm[m].append(res[m]["rmse"])
    rm = {m: np.array(v) for m, v in rm.items()}
    wins = int(np.sum((rm["Proposed"] < rm["LS"]) & (rm["Proposed"] < rm["DM"]) & (rm["Proposed"] < rm["KRR"])))
    p, ls = rm["Proposed"].mean(), rm["LS"].mean()
    ok = 0.24 <= p <= 0.45 and 0.85 <= ls <= 1.05 and wins >= 19
    report(5, ok, f"Proposed {p:.3f}, LS {ls:.3f}, DM {rm['DM'].mean():.3f}, KRR {rm['KRR'].mean():.3f}, "
                  f"wins {wins}/20", time.perf_counter() - t0, 300)


@pytest.mark.slow
def test_criterion_6_monte_carlo(report):
    t0 = time.perf_counter()
    n_runs = int(os.environ.get("IDKIT_MC_RUNS", "200"))
    jobs = min(4, os.cpu_count() or 1)
    summary, _, failed = monte_carlo(n_runs, master_seed=0, jobs=jobs)
    err = summary["Proposed"]["theta_err"][0]
    rm = summary["Proposed"]["rmse"][0]
    true_rm = summary["True"]["rmse"][0]
    ok = 0.40 <= err <= 0.65 and 0.40 <= rm <= 0.70 and 0.090 <= true_rm <= 0.108
    report(6, ok, f"{n_runs} runs on {jobs} workers ({failed} failed): Proposed theta err {err:.3f}, "
                  f"rmse {rm:.3f}; True rmse {true_rm:.4f}", time.perf_counter() - t0, 1800)


@pytest.fixture(scope="module")
def cts_runs():
    """Both tank variants per dataset, computed once for criteria 7 and 8."""
    data_dir = os.environ.get("IDKIT_CTS_DATA")
    t0 = time.perf_counter()
    if has_cts_data(data_dir):
        sets = {"recorded": load_cts(data_dir)}
    else:
        sets = {f"synthetic-{s}": gen_synthetic_cts(s) for s in CTS_SEEDS}
    out = {}
    with warnings.catch_warnings(), np.errstate(all="ignore"):
        # clipped square roots are expected on the synthetic tanks
        warnings.simplefilter("ignore", RuntimeWarning)
        for name, ds in sets.items():
            out[name] = {k: run_variant(ds, CtsConfig(), k)[0] for k in (False, True)}
    return out, time.perf_counter() - t0


def test_criterion_7_cts(report, cts_runs):
    runs, elapsed = cts_runs
    lines, ok = [], True
    if "recorded" in runs:
        phys, kern = runs["recorded"][False], runs["recorded"][True]
        r_k, fit_k = kern.val_simulation
        r_p = phys.val_simulation[0]
        ok = r_k <= 0.25 and fit_k >= 88 and 0.30 <= r_p <= 0.45 and kern.val_prediction_rmse <= 0.07
        lines.append(f"kernel sim {r_k:.3f} ({fit_k:.1f}%), physics sim {r_p:.3f}, "
                     f"kernel pred {kern.val_prediction_rmse:.3f}")
    else:
        for name, pair in runs.items():
            phys, kern = pair[False], pair[True]
            k_err = float(np.max(np.abs(kern.theta - SYNTH_THETA) / SYNTH_THETA))
            gain = 1 - kern.val_simulation[0] / phys.val_simulation[0]
            ok &= k_err <= 0.20 and gain >= 0.40
            lines.append(f"{name}: k err {k_err:.0%}, sim improvement {gain:.0%}")
    report(7, ok, "; ".join(lines), elapsed, 300)


def test_criterion_8_properties(report, cts_runs):
    t0 = time.perf_counter()
    runs, _ = cts_runs
    ordered = all(v.est_prediction_rmse <= v.est_simulation[0] and v.val_prediction_rmse <= v.val_simulation[0]
                  for pair in runs.values() for v in pair.values())
    train, _, _ = gen_academic(AcademicConfig(seed=0))
    spec = KernelSpec.laplacian(PROPOSED_HP[0])
    K = gram_matrix(spec, train.X)
    norms = np.array([fit_affine(train.X, train.y, physics_model(), spec, g, K).rkhs_norm2(K)
                      for g in np.logspace(-3, 1, 10)])
    monotone = bool(np.all(np.diff(norms) <= 1e-9 * norms[:-1]))
    report(8, ordered and monotone, f"prediction <= simulation on all {2 * len(runs)} runs: {ordered}; "
                                    f"rkhs norm monotone: {monotone}", time.perf_counter() - t0, 120)
