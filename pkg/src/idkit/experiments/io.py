import csv
import json
import os
import platform
import time

import numpy as np


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    probe = os.path.join(path, ".write-test")
    with open(probe, "w") as fh:
        fh.write("")
    os.remove(probe)
    return path


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6g}"
    if isinstance(v, np.ndarray):
        return " ".join(f"{x:.6g}" for x in v.ravel())
    return v


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return path


def write_surface(path, sigmas, gammas, surface):
    rows = [(s, g, surface[i, j]) for i, s in enumerate(sigmas) for j, g in enumerate(gammas)]
    return write_csv(path, ["sigma", "gamma", "val_rmse"], rows)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def versions():
    import numba
    import scipy

    from .._accel import backend
    return {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__,
            "numba": numba.__version__, "backend": backend()}


def write_manifest(path, config, seeds, timings, extra=None):
    doc = {"config": config, "seeds": seeds, "timings": timings, "versions": versions(),
           "created": time.strftime("%Y-%m-%dT%H:%M:%S")}
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        json.dump(_jsonable(doc), fh, indent=2, sort_keys=True)
    return path
