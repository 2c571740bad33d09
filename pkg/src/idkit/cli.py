"""Command-line entry point.

    idkit {academic,grid,montecarlo,cts,selftest} [flags]

Flags may also come from a flat ``key = value`` file passed with ``--config``;
explicit flags win. Exit codes: 0 success, 1 configuration or input error,
2 numerical failure.
"""
import argparse
import os
import sys
import time

import numpy as np

from .errors import InvalidArgument, NumericalFailure

EXPERIMENTS = ("academic", "grid", "montecarlo", "cts", "selftest")


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser():
    p = _Parser(prog="idkit", description="Physics-informed kernel identification experiments.")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", help="key = value file mirrored by the flags below")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--data", help="directory holding cts_est.csv and cts_val.csv")
    p.add_argument("--synthetic", action="store_true", default=None,
                   help="cts: use simulated tank data instead of --data")
    p.add_argument("--gamma", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--grid", help="hyperparameter grid size NxM (sigma x gamma)")
    p.add_argument("--runs", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--no-kernel", dest="no_kernel", action="store_true", default=None)
    p.add_argument("--ut-paper-weights", dest="ut_paper_weights", action="store_true", default=None)
    p.add_argument("--state-params", dest="state_params", choices=("nominal", "identified"))
    return p


DEFAULTS = {"seed": 0, "out": "runs", "data": None, "synthetic": False, "gamma": None, "sigma": None,
            "grid": None, "runs": None, "jobs": 1, "no_kernel": False, "ut_paper_weights": False,
            "state_params": "nominal"}
_TYPES = {"seed": int, "runs": int, "jobs": int, "gamma": float, "sigma": float}
_BOOLS = ("synthetic", "no_kernel", "ut_paper_weights")


def read_config_file(path):
    values = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            if key in _BOOLS:
                if val.lower() not in ("1", "0", "true", "false", "yes", "no"):
                    raise ValueError(val)
                values[key] = val.lower() in ("1", "true", "yes")
            else:
                values[key] = _TYPES.get(key, str)(val)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {val!r}") from exc
    return values


def resolve(args):
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(read_config_file(args.config))
    for key in DEFAULTS:
        v = getattr(args, key)
        if v is not None:
            cfg[key] = v
    cfg["experiment"] = args.experiment
    if cfg["jobs"] < 1:
        raise ConfigError("--jobs must be at least 1")
    if cfg["runs"] is not None and cfg["runs"] < 1:
        raise ConfigError("--runs must be at least 1")
    if cfg["grid"] is not None:
        cfg["grid_shape"] = parse_grid(cfg["grid"])
    return cfg


def parse_grid(text):
    try:
        a, b = text.lower().split("x")
        shape = int(a), int(b)
    except ValueError as exc:
        raise ConfigError(f"--grid expects NxM, got {text!r}") from exc
    if min(shape) < 1:
        raise ConfigError("--grid sizes must be positive")
    return shape


def _row(*cells):
    print("  ".join(f"{c:.4g}" if isinstance(c, float) else str(c) for c in cells))


def run_academic(cfg, out):
    from .experiments.academic import DM_HP, KRR_HP, METHODS, PROPOSED_HP, AcademicConfig, table1
    from .experiments.io import write_csv
    hp = (cfg["sigma"] or PROPOSED_HP[0], cfg["gamma"] or PROPOSED_HP[1])
    res = table1(AcademicConfig(seed=cfg["seed"]), {"Proposed": hp, "DM": DM_HP, "KRR": KRR_HP})
    rows = []
    for m in METHODS:
        r = res[m]
        theta = "" if r["theta"] is None else r["theta"]
        rows.append((m, theta, r["theta_err"], r["rmse"], r["fit"]))
        _row(m, "theta=" + ("-" if r["theta"] is None else np.array2string(r["theta"], precision=3)),
             f"rmse={r['rmse']:.4f}", f"fit={r['fit']:.2f}")
    write_csv(os.path.join(out, "table1.csv"), ["method", "theta", "theta_err", "rmse_test", "fit_test"], rows)
    return {"hyper": {"Proposed": hp, "DM": DM_HP, "KRR": KRR_HP}}


def run_grid(cfg, out):
    from .experiments.academic import AcademicConfig, GridConfig, gen_academic, grid_search
    from .experiments.io import write_csv, write_surface
    shape = cfg.get("grid_shape", (50, 50))
    grids = GridConfig.sized(*shape)
    train, val, _ = gen_academic(AcademicConfig(seed=cfg["seed"]))
    s, g, surface = grid_search(train, val, grids)
    write_surface(os.path.join(out, "fig1_grid_surface.csv"), grids.sigmas, grids.gammas, surface)
    i = int(np.argmin(np.abs(grids.sigmas - s)))
    write_csv(os.path.join(out, "fig2_gamma_sweep.csv"), ["gamma", "val_rmse"],
              list(zip(grids.gammas, surface[i])))
    _row("selected", f"sigma={s:.4g}", f"gamma={g:.4g}", f"val_rmse={surface.min():.4f}")
    return {"sigma_star": s, "gamma_star": g, "grid": list(shape)}


def run_montecarlo(cfg, out):
    from .experiments.academic import METHODS, GridConfig, monte_carlo
    from .experiments.io import write_csv
    shape = cfg.get("grid_shape", (10, 10))
    n_runs = cfg["runs"] or 200
    summary, runs, failed = monte_carlo(n_runs, grids=GridConfig.sized(*shape), master_seed=cfg["seed"],
                                        jobs=cfg["jobs"])
    rows = []
    for m in METHODS:
        s = summary[m]
        rows.append((m, *s["theta_err"], *s["fit"], *s["rmse"]))
        _row(m, f"theta_err={s['theta_err'][0]:.4f}+-{s['theta_err'][1]:.4f}",
             f"fit={s['fit'][0]:.2f}+-{s['fit'][1]:.2f}", f"rmse={s['rmse'][0]:.4f}+-{s['rmse'][1]:.4f}")
    write_csv(os.path.join(out, "table2.csv"),
              ["method", "theta_err_mean", "theta_err_std", "fit_mean", "fit_std", "rmse_mean", "rmse_std"], rows)
    return {"runs": n_runs, "failed": failed, "grid": list(shape)}


def run_cts_cmd(cfg, out):
    from .experiments.cts import CtsConfig, gen_synthetic_cts, has_cts_data, load_cts, run_variant
    from .experiments.io import write_csv
    from .smoother import UtWeights
    from .ss_pipeline import simulate
    if cfg["synthetic"]:
        ds, source = gen_synthetic_cts(cfg["seed"]), "synthetic"
    else:
        if not has_cts_data(cfg["data"]):
            raise ConfigError("cts needs --data DIR with cts_est.csv and cts_val.csv (or --synthetic)")
        ds, source = load_cts(cfg["data"]), cfg["data"]
    conf = CtsConfig(state_params=cfg["state_params"])
    if cfg["gamma"] is not None:
        conf.gamma = cfg["gamma"]
    if cfg["sigma"] is not None:
        conf.sigma = cfg["sigma"]
    if cfg["ut_paper_weights"]:
        conf.weights = UtWeights.tank_preset(2)
    rows, overlay = [], {}
    for use_kernel in ((False,) if cfg["no_kernel"] else (False, True)):
        v, predictor, _ = run_variant(ds, conf, use_kernel)
        for split, task, r, fit in v.rows():
            rows.append((v.name, split, task, r, fit))
            _row(v.name, split, task, f"rmse={r:.4f}", "" if np.isnan(fit) else f"fit={fit:.2f}")
        _row(v.name, "theta=" + np.array2string(v.theta, precision=4),
             "x0_smoothed=" + np.array2string(v.x0_smoothed, precision=3))
        overlay[v.name] = simulate(predictor, ds.validation, ds.validation.y[0])
    write_csv(os.path.join(out, "table3.csv"), ["variant", "split", "task", "rmse", "fit"], rows)
    names = list(overlay)
    target = overlay[names[0]][1]
    write_csv(os.path.join(out, "fig3_validation_simulation.csv"), ["t", "y", *names],
              [(t + 2, target[t], *(overlay[n][0][t] for n in names)) for t in range(target.size)])
    return {"data": source, "gamma": conf.gamma, "sigma": conf.sigma}


def run_selftest_cmd(cfg, out):
    from .selftest import run_selftest
    results = run_selftest(cfg["seed"])
    for name, ok, detail in results:
        _row("PASS" if ok else "FAIL", name, detail)
    n_pass = sum(ok for _, ok, _ in results)
    print(f"{n_pass}/{len(results)} checks passed")
    if n_pass != len(results):
        raise NumericalFailure("self-test failures")
    return {"passed": n_pass, "total": len(results)}


RUNNERS = {"academic": run_academic, "grid": run_grid, "montecarlo": run_montecarlo, "cts": run_cts_cmd,
           "selftest": run_selftest_cmd}


def main(argv=None):
    from .experiments.io import ensure_dir, write_manifest
    try:
        cfg = resolve(build_parser().parse_args(argv))
        out = os.path.join(cfg["out"], cfg["experiment"]) if cfg["out"] == DEFAULTS["out"] else cfg["out"]
        try:
            ensure_dir(out)
        except OSError as exc:
            raise ConfigError(f"output directory {out} is not writable: {exc.strerror}") from exc
        t0 = time.time()
        extra = RUNNERS[cfg["experiment"]](cfg, out)
        write_manifest(os.path.join(out, "manifest.json"), cfg, {"master": cfg["seed"]},
                       {"total_s": time.time() - t0}, {"results": extra})
    except (ConfigError, InvalidArgument, OSError) as exc:
        print(f"idkit: error: {exc}", file=sys.stderr)
        return 1
    except NumericalFailure as exc:
        print(f"idkit: numerical failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
