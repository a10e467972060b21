"""Experiment registry behind the command-line harness.

Each experiment is a named recipe: a typed parameter map with defaults, a
``validate`` hook that reports violated preconditions without running, and a
``run`` hook producing CSV columns and rows.  Runs are deterministic in
(config, seed): trial t draws from RngStream(seed, t) and rows are emitted in
trial order, so output never depends on scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .accounting import purify_hyperparams_sgd
from .adaptive import (
    RegressionInstance,
    median_spec,
    mode_release,
    private_local_sensitivity_release,
    pure_adassp,
    pure_ptr,
)
from .audit import estimate_max_divergence, tightness_check
from .core import (
    LqBall,
    PurifyParams,
    RngStream,
    analytic_gaussian_sigma,
    folklore_mix_apply,
    folklore_mix_discrete,
    purify,
    purify_discrete_batch,
    purify_l1_bound,
    sample_uniform_ball,
)
from .erm import mean_quadratic_problem, purified_dpsgd
from .frankwolfe import purified_fw
from .queries import HistogramDataset, QueryWorkload, eval_queries, mwem, pure_mwem

__all__ = ["ConfigError", "Experiment", "ExperimentConfig", "EXPERIMENTS", "resolve_config"]


class ConfigError(ValueError):
    """The configuration cannot be resolved (usage error, exit code 2)."""


@dataclass(frozen=True)
class Experiment:
    name: str
    defaults: dict
    run: Callable[[dict, int, int], tuple[list[str], list[tuple]]]
    validate: Callable[[dict, int], list[str]] | None = None
    default_trials: int = 1


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved run description; ``as_dict()`` is what gets hashed into
    the CSV metadata header."""

    experiment: str
    seed: int
    trials: int
    params: dict
    out: str

    def as_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "trials": self.trials,
            "params": dict(self.params),
            "out": self.out,
        }


def _coerce(name: str, value, default):
    """Coerce a config value to the type carried by the default."""
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        raise ConfigError(f"parameter {name!r} must be a boolean, got {value!r}")
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, int) and not isinstance(value, bool):
            return value
        if isinstance(value, float) and value == int(value):
            return int(value)
        raise ConfigError(f"parameter {name!r} must be an integer, got {value!r}")
    if isinstance(default, float):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        raise ConfigError(f"parameter {name!r} must be a number, got {value!r}")
    if isinstance(default, str):
        if isinstance(value, str):
            return value
        raise ConfigError(f"parameter {name!r} must be a string, got {value!r}")
    if isinstance(default, list):
        if not isinstance(value, list) or not value:
            raise ConfigError(f"parameter {name!r} must be a non-empty list")
        elem = default[0]
        return [_coerce(f"{name}[]", v, elem) for v in value]
    raise ConfigError(f"unsupported parameter type for {name!r}")


def resolve_config(
    raw: dict,
    seed_override: int | None = None,
    out_override: str | None = None,
) -> ExperimentConfig:
    """Merge a parsed config file with CLI overrides into a full config.

    Rejects unknown experiments, unknown keys (top level and parameter map),
    and a missing seed; fills parameter defaults.
    """
    if not isinstance(raw, dict):
        raise ConfigError("config file must hold a key-value mapping")
    known_top = {"experiment", "seed", "trials", "params", "out"}
    unknown = sorted(set(raw) - known_top)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    name = raw.get("experiment")
    if name not in EXPERIMENTS:
        raise ConfigError(
            f"unknown experiment {name!r}; choose from {', '.join(sorted(EXPERIMENTS))}"
        )
    exp = EXPERIMENTS[name]

    seed = seed_override if seed_override is not None else raw.get("seed")
    if seed is None:
        raise ConfigError("a seed is required (config key 'seed' or --seed)")
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError(f"seed must be an integer, got {seed!r}")

    trials = raw.get("trials", exp.default_trials)
    if not isinstance(trials, int) or isinstance(trials, bool) or trials < 1:
        raise ConfigError(f"trials must be a positive integer, got {trials!r}")

    given = raw.get("params", {}) or {}
    if not isinstance(given, dict):
        raise ConfigError("'params' must be a mapping")
    bad = sorted(set(given) - set(exp.defaults))
    if bad:
        raise ConfigError(f"unknown parameters for {name}: {', '.join(bad)}")
    params = {
        k: _coerce(k, given[k], dflt) if k in given else dflt
        for k, dflt in exp.defaults.items()
    }

    out = out_override if out_override is not None else raw.get("out")
    if out is None:
        out = f"{name}.csv"
    if not isinstance(out, str):
        raise ConfigError(f"out must be a path string, got {out!r}")
    return ExperimentConfig(
        experiment=name, seed=seed, trials=trials, params=params, out=out
    )


# ---------------------------------------------------------------------------
# experiment recipes
# ---------------------------------------------------------------------------


def _run_figure1(params, seed, trials):
    eps, sens = params["eps"], params["sensitivity"]
    laplace_var = 2.0 * (sens / eps) ** 2
    deltas = np.geomspace(params["delta_min"], params["delta_max"], params["points"])
    rows = []
    for delta in deltas:
        sigma = analytic_gaussian_sigma(eps, float(delta), sens)
        rows.append((float(delta), laplace_var, sigma * sigma))
    return ["delta", "laplace_var", "gaussian_var"], rows


def _validate_figure1(params, trials):
    out = []
    if params["eps"] <= 0 or params["sensitivity"] <= 0:
        out.append("eps and sensitivity must be positive")
    if not (0.0 < params["delta_min"] < params["delta_max"] < 1.0):
        out.append("need 0 < delta_min < delta_max < 1")
    if params["points"] < 2:
        out.append("need at least 2 grid points")
    return out


def _run_tightness(params, seed, trials):
    rows = []
    for d in params["d"]:
        tv, w8 = tightness_check(
            d, params["delta_tilde"], trials, RngStream(seed, d), grid=params["grid"]
        )
        rows.append(
            (
                d,
                params["delta_tilde"],
                tv.estimate,
                tv.conf_radius,
                tv.details["target"],
                w8.estimate,
                w8.details["target"],
                tv.details["grid_step"],
            )
        )
    columns = [
        "d", "delta_tilde", "tv_estimate", "tv_conf_radius", "tv_target",
        "w8_displacement", "w8_target", "grid_step",
    ]
    return columns, rows


def _validate_tightness(params, trials):
    out = []
    if any(d < 1 or d > 4 for d in params["d"]):
        out.append("dimensions must lie in 1..4 (grid-based TV estimation)")
    if not (0.0 < params["delta_tilde"] < 1.0):
        out.append("delta_tilde must be in (0,1)")
    return out


def _run_purify_demo(params, seed, trials):
    ball = LqBall.centered(q=params["q"], radius=params["radius"], dim=params["d"])
    cal = PurifyParams.calibrate(
        ball,
        eps=params["eps"],
        eps_prime=params["eps_prime"],
        omega=params["omega"],
        delta=params["delta"],
    )
    bound = purify_l1_bound(ball, cal)
    rows = []
    for t in range(trials):
        rng = RngStream(seed, t)
        x_apx = sample_uniform_ball(ball, rng.child("input"))
        x_pure, info = purify(x_apx, ball, cal, rng.child("purify"), return_info=True)
        disp = float(np.sum(np.abs(x_pure - x_apx)))
        rows.append((t, info.mixed, disp, bound))
    return ["trial", "mixed", "l1_displacement", "mean_l1_bound"], rows


def _validate_purify_demo(params, trials):
    out = []
    if params["q"] not in (1.0, 2.0):
        out.append("q must be 1 or 2 (use the discrete path for cube domains)")
    if not (0.0 < params["omega"] < 1.0):
        out.append("omega must be in (0,1)")
    if not (0.0 < params["delta"] < 1.0):
        out.append("delta must be in (0,1)")
    if params["eps"] <= 0 or params["eps_prime"] <= 0:
        out.append("eps and eps_prime must be positive")
    return out


def _sgd_domain(params):
    return LqBall.centered(q=2, radius=params["diameter"] / 2.0, dim=params["d"])


def _run_erm_sgd(params, seed, trials):
    domain = _sgd_domain(params)
    problem = mean_quadratic_problem(domain, lipschitz=domain.diameter)
    eps = params["eps"]
    rows = []
    for t in range(trials):
        rng = RngStream(seed, t)
        for n in params["n"]:
            data = sample_uniform_ball(domain, rng.child(("data", n)), size=n)
            res = purified_dpsgd(problem, data, eps, rng.child(("run", n)))
            opt = np.mean(data, axis=0)
            excess = problem.risk(res.theta_pure, data) - problem.risk(opt, data)
            disp = float(np.linalg.norm(res.theta_pure - res.theta_apx))
            rows.append((n, params["d"], eps, t, excess, disp))
    return ["n", "d", "eps", "trial", "excess_risk", "displacement"], rows


def _validate_erm_sgd(params, trials):
    out = []
    d, eps, C = params["d"], params["eps"], params["diameter"]
    for n in params["n"]:
        if n < 2:
            out.append(f"n={n}: need n >= 2")
            continue
        _, _, log_delta = purify_hyperparams_sgd(n, d, C)
        bound = min(d, 8) * (-log_delta)
        if eps > bound:
            out.append(
                f"n={n}: eps={eps} violates the DP-SGD analysis precondition "
                f"eps <= min(d, 8) ln(1/delta) = {bound}"
            )
    return out


def _run_erm_fw(params, seed, trials):
    domain = LqBall.centered(q=1, radius=params["radius"], dim=params["d"])
    problem = mean_quadratic_problem(domain, lipschitz=2.0 * params["radius"])
    eps = params["eps"]
    rows = []
    for t in range(trials):
        rng = RngStream(seed, t)
        for n in params["n"]:
            data = sample_uniform_ball(domain, rng.child(("data", n)), size=n)
            res = purified_fw(problem, data, eps, rng.child(("run", n)))
            opt = np.mean(data, axis=0)
            excess = problem.risk(res.theta, data) - problem.risk(opt, data)
            rec_err = float(np.sum(np.abs(res.theta - res.theta_fw)))
            rows.append(
                (n, params["d"], eps, t, res.T, res.k, res.xi,
                 res.success_path, excess, rec_err)
            )
    columns = [
        "n", "d", "eps", "trial", "T", "k", "xi", "success_path",
        "excess_risk", "recovery_error",
    ]
    return columns, rows


def _validate_erm_fw(params, trials):
    out = []
    if params["radius"] <= 0 or params["eps"] <= 0:
        out.append("radius and eps must be positive")
    if any(n < 2 for n in params["n"]):
        out.append("every n must be >= 2")
    return out


def _cluster_data(params, rng: RngStream) -> np.ndarray:
    """Points packed around the grid midpoint: far from any median-stability
    violation, so PTR should release."""
    gen = rng.generator()
    mid = 0.5 * (params["grid_lo"] + params["grid_hi"])
    pts = mid + params["spread"] * (gen.uniform(size=params["n"]) - 0.5)
    return np.clip(pts, params["grid_lo"], params["grid_hi"])


def _run_ptr(params, seed, trials):
    spec = median_spec(params["grid_lo"], params["grid_hi"])
    rows = []
    for t in range(trials):
        rng = RngStream(seed, t)
        data = _cluster_data(params, rng.child("data"))
        x_pure, base = pure_ptr(
            spec,
            data,
            eps=params["eps"],
            eps_prime=params["eps_prime"],
            delta=params["delta"],
            omega=params["omega"],
            beta=params["beta"],
            rng=rng.child("mech"),
        )
        true_med = float(spec.query(data)[0])
        rows.append(
            (t, base.released, base.distance, float(x_pure[0]),
             abs(float(x_pure[0]) - true_med))
        )
    return ["trial", "released", "distance", "value", "abs_error"], rows


def _validate_grid_release(params, trials):
    out = []
    if params["grid_lo"] >= params["grid_hi"]:
        out.append("need grid_lo < grid_hi")
    if not (0.0 < params["delta"] < 1.0) or not (0.0 < params["omega"] < 1.0):
        out.append("delta and omega must be in (0,1)")
    if params["n"] < 3:
        out.append("need at least 3 data points")
    return out


def _validate_ptr(params, trials):
    out = _validate_grid_release(params, trials)
    if params["beta"] <= 0:
        out.append("beta must be positive")
    return out


def _run_local_sens(params, seed, trials):
    spec = median_spec(params["grid_lo"], params["grid_hi"])
    rows = []
    for t in range(trials):
        rng = RngStream(seed, t)
        data = _cluster_data(params, rng.child("data"))
        res = private_local_sensitivity_release(
            spec,
            data,
            eps=params["eps"],
            delta=params["delta"],
            omega=params["omega"],
            rng=rng.child("mech"),
        )
        true_med = float(spec.query(data)[0])
        rows.append(
            (t, res.beta_hat, res.clamped, float(res.value[0]),
             abs(float(res.value[0]) - true_med))
        )
    return ["trial", "beta_hat", "clamped", "value", "abs_error"], rows


def _mode_data(params) -> np.ndarray:
    top, second, tail = params["top_count"], params["second_count"], params["tail_cells"]
    vals = [1] * top + [2] * second + list(range(3, 3 + tail))
    return np.array(vals, dtype=np.int64)


def _run_mode(params, seed, trials):
    data = _mode_data(params)
    rows = []
    for t in range(trials):
        res = mode_release(
            data, params["universe"], params["eps"], RngStream(seed, t)
        )
        rows.append((t, res.index, res.index == res.mode, res.test_passed))
    return ["trial", "index", "correct", "test_passed"], rows


def _validate_mode(params, trials):
    out = []
    if params["universe"] < 2:
        out.append("universe must be >= 2")
    if params["top_count"] <= params["second_count"]:
        out.append("need top_count > second_count for a unique mode")
    if 3 + params["tail_cells"] > params["universe"]:
        out.append("tail cells exceed the universe")
    return out


def _regression_data(params, rng: RngStream) -> tuple[RegressionInstance, np.ndarray]:
    gen = rng.generator()
    d = params["d"]
    theta = 0.5 * np.array([(-1.0) ** i for i in range(d)]) / math.sqrt(d)
    n = params["n_current"]
    X = gen.standard_normal((n, d))
    X /= np.maximum(1.0, np.linalg.norm(X, axis=1))[:, None]
    y = X @ theta + params["noise"] * gen.standard_normal(n)
    y = np.clip(y, -1.0, 1.0)
    return RegressionInstance(X=X, y=y, norm_x=1.0, norm_y=1.0), theta


def _run_adassp(params, seed, trials):
    rows = []
    for t in range(trials):
        rng = RngStream(seed, t)
        for n in params["n"]:
            inst, theta = _regression_data(
                {**params, "n_current": n}, rng.child(("data", n))
            )
            res = pure_adassp(
                inst, params["eps"], params["delta"], rng.child(("run", n))
            )
            mse_pure = float(np.mean((res.theta_pure - theta) ** 2))
            mse_tilde = float(np.mean((res.theta_tilde - theta) ** 2))
            rows.append(
                (n, params["d"], params["eps"], t, mse_pure, mse_tilde,
                 res.lam, res.mixed)
            )
    columns = ["n", "d", "eps", "trial", "mse_pure", "mse_tilde", "lam", "mixed"]
    return columns, rows


def _validate_adassp(params, trials):
    out = []
    if any(n <= params["d"] for n in params["n"]):
        out.append("every n must exceed d")
    if not (0.0 < params["delta"] < 1.0):
        out.append("delta must be in (0,1)")
    return out


def _query_instance(params, rng: RngStream) -> tuple[HistogramDataset, QueryWorkload]:
    gen = rng.generator()
    cells, K, n = params["cells"], params["K"], params["n"]
    values = (gen.uniform(size=(K, cells)) < 0.5).astype(float)
    weights = gen.exponential(size=cells)
    draws = gen.choice(cells, size=n, p=weights / weights.sum())
    counts = np.bincount(draws, minlength=cells)
    return HistogramDataset(counts=counts), QueryWorkload(values=values)


def _run_mwem(params, seed, trials):
    rows = []
    for t in range(trials):
        rng = RngStream(seed, t)
        dataset, workload = _query_instance(params, rng.child("instance"))
        truth = eval_queries(workload, dataset)
        n, d, K = dataset.n, workload.dim, workload.K

        def err(p):
            return float(np.max(np.abs(eval_queries(workload, p) - truth)))

        for T in params["T"]:
            base = mwem(dataset, workload, T, params["rho"], rng.child(("mwem", T)))
            rows.append((n, d, K, T, 0, params["eps"], err(base.synthetic / n), "mwem"))
        res = pure_mwem(dataset, workload, params["eps"], rng.child("pure"))
        rows.append(
            (n, d, K, res.T, res.m, params["eps"], err(res.mwem_synthetic / n), "mwem")
        )
        sampled = np.bincount(res.sampled, minlength=workload.cells) / res.m
        rows.append((n, d, K, res.T, res.m, params["eps"], err(sampled), "sampled"))
        rows.append(
            (n, d, K, res.T, res.m, params["eps"], err(res.distribution()), "purified")
        )
    return ["n", "d", "K", "T", "m", "eps", "linf_error", "stage"], rows


def _validate_mwem(params, trials):
    out = []
    cells = params["cells"]
    if cells < 2 or cells & (cells - 1) != 0:
        out.append("cells must be a power of two >= 2")
        return out
    d = cells.bit_length() - 1
    n, eps = params["n"], params["eps"]
    m = max(1, math.ceil((n * eps) ** (2.0 / 3.0) * d ** (-2.0 / 3.0)))
    if m * d > params["bit_budget"]:
        out.append(
            f"encoded width m*d = {m * d} bits exceeds the bit budget "
            f"{params['bit_budget']}"
        )
    if params["rho"] <= 0:
        out.append("rho must be positive")
    if any(T < 1 for T in params["T"]):
        out.append("every T must be >= 1")
    return out


def _run_audit(params, seed, trials):
    space = params["space"]
    eps, delta, omega = params["eps"], params["delta"], params["omega"]
    target = params["target"]

    def base(u, stream: RngStream, n: int) -> np.ndarray:
        """Toy (0, delta)-DP mechanism: usually a uniform draw, with
        probability delta the dataset's identity leaks through."""
        gen = stream.generator()
        out = gen.integers(0, space, size=n)
        leak = gen.uniform(size=n) < delta
        out[leak] = u
        return out

    if target == "purify_discrete":
        claimed = 2.0 * eps

        def mech(u, stream, n):
            raw = base(u, stream.child("base"), n)
            return purify_discrete_batch(raw, space, eps, delta, stream.child("purify"))

    else:  # folklore
        claimed = folklore_mix_discrete(space, 0.0, delta, omega)

        def mech(u, stream, n):
            raw = base(u, stream.child("base"), n)
            return folklore_mix_apply(raw, space, omega, stream.child("mix"))

    report = estimate_max_divergence(mech, 0, space - 1, trials, RngStream(seed, 0))
    row = (
        target,
        trials,
        claimed,
        report.estimate,
        report.conf_radius,
        report.details.get("one_sided_support", 0),
        report.details.get("excluded_mass", 0.0),
        report.estimate <= claimed + report.conf_radius,
    )
    columns = [
        "target", "trials", "eps_claimed", "eps_hat", "conf_radius",
        "one_sided_support", "excluded_mass", "within_claim",
    ]
    return columns, [row]


def _validate_audit(params, trials):
    out = []
    if params["target"] not in ("purify_discrete", "folklore"):
        out.append("target must be 'purify_discrete' or 'folklore'")
    if params["space"] < 2 or params["space"] > 64:
        out.append("space must be in 2..64 (finite-outcome audit pathway)")
    if not (0.0 < params["delta"] < 1.0) or not (0.0 < params["omega"] <= 1.0):
        out.append("delta in (0,1) and omega in (0,1] required")
    return out


EXPERIMENTS: dict[str, Experiment] = {
    e.name: e
    for e in [
        Experiment(
            name="figure1",
            defaults={
                "eps": 1.0,
                "sensitivity": 1.0,
                "delta_min": 1e-10,
                "delta_max": 1e-1,
                "points": 19,
            },
            run=_run_figure1,
            validate=_validate_figure1,
        ),
        Experiment(
            name="tightness",
            defaults={"d": [1, 2], "delta_tilde": 0.5, "grid": 64},
            run=_run_tightness,
            validate=_validate_tightness,
            default_trials=100000,
        ),
        Experiment(
            name="purify-demo",
            defaults={
                "q": 2.0,
                "radius": 0.5,
                "d": 5,
                "eps": 1.0,
                "eps_prime": 1.0,
                "omega": 0.01,
                "delta": 1e-6,
            },
            run=_run_purify_demo,
            validate=_validate_purify_demo,
            default_trials=100,
        ),
        Experiment(
            name="erm-sgd",
            defaults={"n": [200, 400], "d": 5, "eps": 1.0, "diameter": 1.0},
            run=_run_erm_sgd,
            validate=_validate_erm_sgd,
            default_trials=3,
        ),
        Experiment(
            name="erm-fw",
            defaults={"n": [200], "d": 30, "eps": 1.0, "radius": 1.0},
            run=_run_erm_fw,
            validate=_validate_erm_fw,
            default_trials=3,
        ),
        Experiment(
            name="ptr",
            defaults={
                "eps": 1.0,
                "eps_prime": 1.0,
                "delta": 1e-6,
                "omega": 0.01,
                "beta": 0.1,
                "grid_lo": 0.0,
                "grid_hi": 1.0,
                "n": 101,
                "spread": 0.05,
            },
            run=_run_ptr,
            validate=_validate_ptr,
            default_trials=20,
        ),
        Experiment(
            name="local-sens",
            defaults={
                "eps": 1.0,
                "delta": 1e-6,
                "omega": 0.01,
                "grid_lo": 0.0,
                "grid_hi": 1.0,
                "n": 101,
                "spread": 0.05,
            },
            run=_run_local_sens,
            validate=_validate_grid_release,
            default_trials=20,
        ),
        Experiment(
            name="mode",
            defaults={
                "universe": 256,
                "eps": 1.0,
                "top_count": 250,
                "second_count": 58,
                "tail_cells": 92,
            },
            run=_run_mode,
            validate=_validate_mode,
            default_trials=100,
        ),
        Experiment(
            name="adassp",
            defaults={"n": [200, 800], "d": 5, "eps": 1.0, "delta": 1e-6, "noise": 0.1},
            run=_run_adassp,
            validate=_validate_adassp,
            default_trials=5,
        ),
        Experiment(
            name="mwem",
            defaults={
                "cells": 32,
                "K": 20,
                "n": 200,
                "eps": 1.0,
                "rho": 0.5,
                "T": [1, 5, 20],
                "bit_budget": 4096,
            },
            run=_run_mwem,
            validate=_validate_mwem,
            default_trials=3,
        ),
        Experiment(
            name="audit",
            defaults={
                "target": "purify_discrete",
                "space": 16,
                "eps": 1.0,
                "delta": 1e-4,
                "omega": 0.1,
            },
            run=_run_audit,
            validate=_validate_audit,
            default_trials=50000,
        ),
    ]
}
