"""Experiment drivers emitting the CSV bundles consumed by the figure scripts.

Every experiment writes ``<out_dir>/<name>.csv`` plus a sidecar
``<name>.schema.json`` describing the columns. Rows carry per-trial raw
values followed by aggregate rows (mean, quantiles 10/25/75/90, median,
min, max) grouped over the experiment's key columns. Per-trial seeds are
derived as ``seed * 1_000_003 + trial``, so splitting trials across workers
never changes the numbers, only the order in which they are computed; rows
are sorted before writing.

The environment variable ``SRW_THREADS`` caps the worker count (default:
machine parallelism).
"""

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .exceptions import InvalidInput
from .linalg import mahalanobis_cost
from .otcore import exact_ot
from .solver import SolverConfig, solve, srw_curve
from .synthetic import GeneratorSpec, generate

__all__ = ["EXPERIMENT_NAMES", "run_experiment", "experiment_defaults", "DISK_ANNULUS_W2"]

# Closed-form squared distance between the uniform unit disk and the uniform
# [2, 3] annulus (matched radial quantiles): 14/5 + (8 / (5 sqrt 5)) log((3 + sqrt 5) / 2).
DISK_ANNULUS_W2 = 14.0 / 5.0 + (8.0 / (5.0 * math.sqrt(5.0))) * math.log((3.0 + math.sqrt(5.0)) / 2.0)

_AGGREGATE_KINDS = ("mean", "q10", "q25", "median", "q75", "q90", "min", "max")

_AGGREGATORS = {
    "mean": np.mean,
    "q10": lambda v: np.quantile(v, 0.10),
    "q25": lambda v: np.quantile(v, 0.25),
    "median": np.median,
    "q75": lambda v: np.quantile(v, 0.75),
    "q90": lambda v: np.quantile(v, 0.90),
    "min": np.min,
    "max": np.max,
}


def _trial_seed(seed: int, trial: int) -> int:
    return seed * 1_000_003 + trial


def _make_config(params: dict, k: int) -> SolverConfig:
    if params["algo"] == "fw":
        return SolverConfig(
            algorithm="frank_wolfe",
            k=k,
            gamma=params["gamma"],
            epsilon=params["eps"],
            max_iter=params.get("max_iter"),
        )
    if params["algo"] == "supergradient":
        return SolverConfig(
            algorithm="supergradient",
            k=k,
            gamma=0.0,
            epsilon=params["eps"],
            max_iter=params.get("max_iter"),
        )
    raise InvalidInput(f"unknown algorithm {params['algo']!r}")


def _w2(mu, nu) -> float:
    cost = mahalanobis_cost(mu.points, nu.points, np.eye(mu.d))
    _, value = exact_ot(mu, nu, cost)
    return value


def _curve_rows(sweep, base: dict) -> list[dict]:
    rows = []
    for k in sorted(sweep.results):
        res = sweep.results[k]
        rows.append(
            base
            | {
                "k": k,
                "value_squared": res.value_squared,
                "gap": res.gap,
                "iterations": res.iterations,
                "converged": res.converged,
            }
        )
    for k, message in sweep.errors.items():
        rows.append(base | {"k": k, "converged": False, "error": message})
    return rows


def _trial_hypercube_curve(params, trial, tseed):
    rows = []
    for kstar in params["kstars"]:
        spec = GeneratorSpec(
            kind="hypercube_pair", d=params["d"], n=params["n"], kstar=kstar, seed=tseed
        )
        mu, nu = generate(spec)
        sweep = srw_curve(mu, nu, _make_config(params, k=1))
        rows.extend(_curve_rows(sweep, {"kind": "trial", "trial": trial, "kstar": kstar}))
    return rows


def _trial_hypercube_error(params, trial, tseed):
    rows = []
    truth = 4.0 * params["kstar"]
    for n in params["ns"]:
        spec = GeneratorSpec(
            kind="hypercube_pair", d=params["d"], n=n, kstar=params["kstar"], seed=tseed
        )
        mu, nu = generate(spec)
        res = solve(mu, nu, _make_config(params, k=params["k"]))
        rows.append(
            {
                "kind": "trial",
                "trial": trial,
                "n": n,
                "error": abs(truth - res.value_squared),
                "value_squared": res.value_squared,
            }
        )
    return rows


def _trial_hypercube_subspace(params, trial, tseed):
    rows = []
    kstar = params["kstar"]
    for n in params["ns"]:
        spec = GeneratorSpec(kind="hypercube_pair", d=params["d"], n=n, kstar=kstar, seed=tseed)
        mu, nu = generate(spec)
        res = solve(mu, nu, _make_config(params, k=kstar))
        target = np.zeros((params["d"], params["d"]))
        target[:kstar, :kstar] = np.eye(kstar)
        rows.append(
            {
                "kind": "trial",
                "trial": trial,
                "n": n,
                "frobenius_error": float(np.linalg.norm(res.omega.matrix - target)),
            }
        )
    return rows


def _trial_gaussians_curve(params, trial, tseed):
    spec = GeneratorSpec(
        kind="wishart_gaussian_pair",
        d=params["d"],
        n=params["n"],
        degrees_of_freedom=params["dof"],
        noise_sigma=params["sigma"],
        seed=tseed,
    )
    mu, nu = generate(spec)
    w2 = _w2(mu, nu)
    sweep = srw_curve(mu, nu, _make_config(params, k=1))
    rows = []
    for l in sorted(sweep.results):
        rows.append(
            {
                "kind": "trial",
                "trial": trial,
                "sigma": params["sigma"],
                "l": l,
                "ratio": sweep.results[l].value_squared / w2 if w2 > 0 else 1.0,
            }
        )
    return rows


def _trial_noise_robustness(params, trial, tseed):
    def pair(sigma):
        return generate(
            GeneratorSpec(
                kind="wishart_gaussian_pair",
                d=params["d"],
                n=params["n"],
                degrees_of_freedom=params["dof"],
                noise_sigma=sigma,
                seed=tseed,
            )
        )

    mu0, nu0 = pair(0.0)
    config = _make_config(params, k=params["k"])
    srw_clean = solve(mu0, nu0, config).value_squared
    w2_clean = _w2(mu0, nu0)
    rows = []
    for sigma in params["sigmas"]:
        mu, nu = pair(sigma)
        srw_noisy = solve(mu, nu, config).value_squared
        w2_noisy = _w2(mu, nu)
        rows.append(
            {
                "kind": "trial",
                "trial": trial,
                "sigma": sigma,
                "srw_rel_error": abs(srw_noisy - srw_clean) / srw_clean if srw_clean > 0 else 0.0,
                "w2_rel_error": abs(w2_noisy - w2_clean) / w2_clean if w2_clean > 0 else 0.0,
            }
        )
    return rows


def _trial_timing(params, trial, tseed):
    rows = []
    for d in params["ds"]:
        spec = GeneratorSpec(kind="hypercube_pair", d=d, n=params["n"], kstar=params["kstar"], seed=tseed)
        mu, nu = generate(spec)
        config = _make_config(params, k=params["k"])
        start = time.perf_counter()
        res = solve(mu, nu, config)
        elapsed = time.perf_counter() - start
        rows.append(
            {
                "kind": "trial",
                "trial": trial,
                "d": d,
                "seconds": elapsed,
                "value_squared": res.value_squared,
            }
        )
    return rows


def _trial_disk_annulus_curve(params, trial, tseed):
    rows = []
    for kstar in params["kstars"]:
        spec = GeneratorSpec(
            kind="disk_annulus_pair", d=params["d"], n=params["n"], kstar=kstar, seed=tseed
        )
        mu, nu = generate(spec)
        sweep = srw_curve(mu, nu, _make_config(params, k=1))
        rows.extend(_curve_rows(sweep, {"kind": "trial", "trial": trial, "kstar": kstar}))
    return rows


def _trial_disk_annulus_error(params, trial, tseed):
    rows = []
    for n in params["ns"]:
        spec = GeneratorSpec(kind="disk_annulus_pair", d=params["d"], n=n, kstar=params["kstar"], seed=tseed)
        mu, nu = generate(spec)
        w2 = _w2(mu, nu)
        rows.append(
            {
                "kind": "trial",
                "trial": trial,
                "n": n,
                "w2_empirical": w2,
                "abs_error": abs(w2 - DISK_ANNULUS_W2),
            }
        )
    return rows


def _trial_plan_segments(params, trial, tseed):
    setup = params["setup"]
    if setup == "hypercube":
        spec = GeneratorSpec(
            kind="hypercube_pair",
            d=params["d"],
            n=params["n"],
            kstar=params["kstar"],
            seed=tseed,
            coupled=True,
        )
    elif setup == "disk-annulus":
        spec = GeneratorSpec(
            kind="disk_annulus_pair", d=params["d"], n=params["n"], kstar=params["kstar"], seed=tseed
        )
    elif setup == "dirac":
        spec = GeneratorSpec(kind="dirac_pair", d=max(params["d"], 2), seed=tseed)
    else:
        raise InvalidInput(f"unknown plan-segments setup {setup!r}")
    mu, nu = generate(spec)
    res = solve(mu, nu, _make_config(params, k=params["k"]))
    pi = res.plan.matrix
    rows = []
    for i, j in zip(*np.nonzero(pi > 1e-12)):
        rows.append(
            {
                "kind": "trial",
                "trial": trial,
                "mass": float(pi[i, j]),
                "x0": float(mu.points[i, 0]),
                "y0": float(mu.points[i, 1]),
                "x1": float(nu.points[j, 0]),
                "y1": float(nu.points[j, 1]),
            }
        )
    return rows


@dataclass(frozen=True)
class _Experiment:
    trial_fn: Callable
    defaults: dict
    key_columns: tuple[str, ...]
    value_columns: tuple[str, ...]
    extra_columns: tuple[str, ...] = ()
    default_trials: int = 20


_CURVE_DEFAULTS = {"d": 30, "n": 100, "kstars": (2, 4, 7, 10), "algo": "fw", "gamma": 0.1, "eps": 0.05}

_EXPERIMENTS: dict[str, _Experiment] = {
    "hypercube-curve": _Experiment(
        _trial_hypercube_curve,
        dict(_CURVE_DEFAULTS),
        key_columns=("kstar", "k"),
        value_columns=("value_squared",),
        extra_columns=("gap", "iterations", "converged", "error"),
    ),
    "hypercube-error": _Experiment(
        _trial_hypercube_error,
        {"d": 30, "kstar": 2, "k": 2, "ns": (25, 50, 100, 250, 500, 1000),
         "algo": "fw", "gamma": 0.1, "eps": 0.05},
        key_columns=("n",),
        value_columns=("error", "value_squared"),
    ),
    "hypercube-subspace": _Experiment(
        _trial_hypercube_subspace,
        {"d": 30, "kstar": 2, "ns": (25, 50, 100, 250, 500, 1000),
         "algo": "fw", "gamma": 0.1, "eps": 0.05},
        key_columns=("n",),
        value_columns=("frobenius_error",),
    ),
    "gaussians-curve": _Experiment(
        _trial_gaussians_curve,
        {"d": 20, "n": 100, "dof": 5, "sigma": 0.0, "algo": "supergradient", "eps": 1e-6},
        key_columns=("sigma", "l"),
        value_columns=("ratio",),
    ),
    "noise-robustness": _Experiment(
        _trial_noise_robustness,
        {"d": 20, "n": 100, "dof": 5, "k": 5, "sigmas": (0.01, 0.1, 1.0, 2.0, 5.0, 10.0),
         "algo": "supergradient", "eps": 1e-6},
        key_columns=("sigma",),
        value_columns=("srw_rel_error", "w2_rel_error"),
    ),
    "timing": _Experiment(
        _trial_timing,
        {"ds": (25, 50, 100, 250, 500), "n": 100, "kstar": 2, "k": 2,
         "algo": "fw", "gamma": 0.1, "eps": 0.05},
        key_columns=("d",),
        value_columns=("seconds", "value_squared"),
    ),
    "disk-annulus-curve": _Experiment(
        _trial_disk_annulus_curve,
        dict(_CURVE_DEFAULTS),
        key_columns=("kstar", "k"),
        value_columns=("value_squared",),
        extra_columns=("gap", "iterations", "converged", "error"),
    ),
    "disk-annulus-error": _Experiment(
        _trial_disk_annulus_error,
        {"d": 2, "kstar": 2, "ns": (25, 50, 100, 250, 500, 1000)},
        key_columns=("n",),
        value_columns=("w2_empirical", "abs_error"),
    ),
    "plan-segments": _Experiment(
        _trial_plan_segments,
        {"setup": "hypercube", "d": 30, "n": 250, "kstar": 2, "k": 2,
         "algo": "fw", "gamma": 0.1, "eps": 0.05},
        key_columns=(),
        value_columns=(),
        extra_columns=("mass", "x0", "y0", "x1", "y1"),
        default_trials=1,
    ),
}

EXPERIMENT_NAMES = tuple(_EXPERIMENTS)


def experiment_defaults(name: str) -> dict:
    """Default parameter dict for one experiment (a copy)."""
    if name not in _EXPERIMENTS:
        raise InvalidInput(f"unknown experiment {name!r}")
    return dict(_EXPERIMENTS[name].defaults)


def _worker_count(trials: int, workers: int | None) -> int:
    if workers is None:
        env = os.environ.get("SRW_THREADS", "").strip()
        workers = int(env) if env else (os.cpu_count() or 1)
    if workers < 1:
        raise InvalidInput("worker count must be at least 1")
    return min(workers, trials)


def _run_trial(name: str, params: dict, trial: int, tseed: int) -> list[dict]:
    return _EXPERIMENTS[name].trial_fn(params, trial, tseed)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _aggregate_rows(rows, key_columns, value_columns):
    groups: dict[tuple, list[dict]] = {}
    order: list[tuple] = []
    for row in rows:
        key = tuple(row.get(c) for c in key_columns)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row)
    out = []
    for kind in _AGGREGATE_KINDS:
        fn = _AGGREGATORS[kind]
        for key in order:
            agg: dict = {"kind": kind, "trial": None}
            agg.update(dict(zip(key_columns, key)))
            for col in value_columns:
                vals = [r[col] for r in groups[key] if r.get(col) is not None]
                vals = [v for v in vals if np.isfinite(v)]
                if vals:
                    agg[col] = float(fn(np.asarray(vals, dtype=float)))
            out.append(agg)
    return out


def run_experiment(
    name: str,
    out_dir,
    trials: int | None = None,
    seed: int = 0,
    workers: int | None = None,
    **overrides,
):
    """Run one experiment and write its CSV + schema sidecar.

    Returns the CSV path. ``overrides`` must be a subset of the experiment's
    documented parameters; unknown keys are rejected.
    """
    if name not in _EXPERIMENTS:
        raise InvalidInput(f"unknown experiment {name!r}")
    exp = _EXPERIMENTS[name]
    params = dict(exp.defaults)
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in params:
            raise InvalidInput(f"experiment {name!r} does not take parameter {key!r}")
        params[key] = value
    if trials is None:
        trials = exp.default_trials
    if trials < 1:
        raise InvalidInput("trials must be at least 1")

    nworkers = _worker_count(trials, workers)
    tseeds = [_trial_seed(seed, t) for t in range(trials)]
    if nworkers > 1:
        with ProcessPoolExecutor(max_workers=nworkers) as pool:
            chunks = list(pool.map(_run_trial, [name] * trials, [params] * trials, range(trials), tseeds))
    else:
        chunks = [_run_trial(name, params, t, ts) for t, ts in zip(range(trials), tseeds)]

    rows = [row for chunk in chunks for row in chunk]
    key_sort = lambda r: (r["trial"], tuple(float(r.get(c, 0) or 0) for c in exp.key_columns))
    rows.sort(key=key_sort)
    agg = _aggregate_rows(rows, exp.key_columns, exp.value_columns)

    columns = ["kind", "trial", *exp.key_columns, *exp.value_columns, *exp.extra_columns]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{name}.csv"
    with open(csv_path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows + agg:
            writer.writerow([_cell(row.get(c)) for c in columns])

    schema = {
        "experiment": name,
        "columns": columns,
        "key_columns": list(exp.key_columns),
        "value_columns": list(exp.value_columns),
        "aggregate_kinds": list(_AGGREGATE_KINDS),
        "trials": trials,
        "seed": seed,
        "params": {k: (list(v) if isinstance(v, tuple) else v) for k, v in params.items()},
    }
    with open(out_dir / f"{name}.schema.json", "w", encoding="ascii") as fh:
        json.dump(schema, fh, indent=1)
        fh.write("\n")
    return csv_path
