"""Command-line experiment harness.

``clusterlab <experiment> [--config cfg.json] [--seed N] [--threads K] [--out DIR]``

Each run writes ``report.json`` (resolved config, results, the claim it
checks and an overall ``passed`` flag) plus CSV plot data. Exit status is
0 when every check passes, 1 otherwise and 2 for usage or config errors.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
import types
import typing
from dataclasses import MISSING, asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable

import numpy as np

from ._util import as_seedseq, default_threads, mean_se, replicate, seed_streams, to_jsonable
from .clusters import (BlockingPlan, cluster_functional_nu, independence_test_LQ,
                       laplace_gap_diagnostic, replicated_cluster_law, replicated_theta)
from .espace import (embed_cadlag, graph, hausdorff_graphs, m2_convergence_check, m2_distance, sup_path,
                     uniform_metric)
from .functionals import (ClusterFunctional, capped_abs_sum, exceedance_count, second_largest_ratio,
                          sign_of_sum, sup_above, sup_exceeds)
from .limitpp import EmpiricalQ, nu_limit, sample_limit_pp
from .models import (GarchModel, LinearModel, ParameterError, RegVarLaw, hill_estimate, model_from_dict,
                     quantile_an, simulate)
from .records import poisson_chisquare, record_convergence_experiment, simulate_limit_records
from .seqspace import Cluster, shift_metric
from .sums import (LinearForwardTheta, block_decorated_path, karamata_check, limit_decorated_path,
                   limit_inputs, m2_distribution_experiment, marginal_tail_balance, partial_sum_path,
                   stable_params_from_forward_theta, stable_params_from_Q, sup_law_experiment)

ENV_OUT = "CLUSTERLAB_OUT"


class ConfigError(ValueError):
    """Invalid configuration; ``path`` locates the offending field."""

    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}" if path else msg)
        self.path = path


# configuration ---------------------------------------------------------------------


@dataclass
class BlockingConfig:
    r_n: int | None = None
    u: float = 1.0


@dataclass
class LimitConfig:
    theta: float | None = None
    alpha: float | None = None
    q: str = "model"
    p_min: float = 1e-4
    mc_samples: int = 20000
    draws: int = 20000


@dataclass
class ExperimentConfig:
    """Fully resolved settings of one run."""

    experiment: str
    model: dict = field(default_factory=lambda: {"kind": "linear", "coeffs": [1.0, 0.7], "alpha": 0.7})
    blocking: BlockingConfig = field(default_factory=BlockingConfig)
    limit: LimitConfig = field(default_factory=LimitConfig)
    n_grid: list[int] = field(default_factory=lambda: [10000])
    replications: int = 10
    seed: int = 0
    out: str | None = None
    tol: float | None = None
    window: list[float] | None = None
    windows: list[list[float]] | None = None
    functionals: list[str] = field(default_factory=lambda: ["sup_exceeds(1)", "sup_exceeds(2)",
                                                             "capped_abs_sum(5,1)"])
    levels: list[float] = field(default_factory=lambda: [2.0])
    epsilons: list[float] = field(default_factory=lambda: [0.1, 0.5])

    def to_dict(self) -> dict:
        return asdict(self)


def _check_type(value, tp, path: str):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin in (typing.Union, types.UnionType):
        if value is None and type(None) in args:
            return None
        for a in args:
            if a is type(None):
                continue
            try:
                return _check_type(value, a, path)
            except ConfigError:
                pass
        raise ConfigError(path, f"unexpected value {value!r}")
    if origin is list:
        if not isinstance(value, list):
            raise ConfigError(path, f"expected a list, got {type(value).__name__}")
        return [_check_type(v, args[0], f"{path}[{i}]") for i, v in enumerate(value)]
    if isinstance(tp, type) and hasattr(tp, "__dataclass_fields__"):
        return _build(tp, value, path)
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(path, "expected a boolean")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    if tp is dict:
        if not isinstance(value, dict):
            raise ConfigError(path, "expected an object")
        return value
    raise ConfigError(path, f"unsupported field type {tp}")


def _build(cls, data, path: str = ""):
    if not isinstance(data, dict):
        raise ConfigError(path, "expected an object")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        where = f"{path}.{unknown[0]}" if path else unknown[0]
        raise ConfigError(where, "unknown field")
    kwargs = {}
    for f in fields(cls):
        sub = f"{path}.{f.name}" if path else f.name
        if f.name in data:
            kwargs[f.name] = _check_type(data[f.name], hints[f.name], sub)
        elif f.default is MISSING and f.default_factory is MISSING:
            raise ConfigError(sub, "required field missing")
    return cls(**kwargs)


def _merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "model":
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(experiment: str, data: dict | None = None, seed: int | None = None,
                out: str | None = None) -> ExperimentConfig:
    """Validate ``data`` on top of the experiment defaults; raise :class:`ConfigError`."""
    if experiment not in EXPERIMENTS:
        raise ConfigError("experiment", f"unknown experiment {experiment!r}")
    data = {} if data is None else data
    if not isinstance(data, dict):
        raise ConfigError("", "config must be a JSON object")
    if "experiment" in data and data["experiment"] != experiment:
        raise ConfigError("experiment", f"config is for {data['experiment']!r}, not {experiment!r}")
    merged = _merge(EXPERIMENTS[experiment].defaults, data)
    merged["experiment"] = experiment
    if seed is not None:
        merged["seed"] = seed
    if out is not None:
        merged["out"] = out
    cfg = _build(ExperimentConfig, merged)
    try:
        model_from_dict(cfg.model)
    except ParameterError as exc:
        raise ConfigError("model", str(exc)) from None
    if cfg.replications < 0:
        raise ConfigError("replications", "must be nonnegative")
    if any(n < 1 for n in cfg.n_grid):
        raise ConfigError("n_grid", "sample sizes must be positive")
    if cfg.limit.q not in ("model", "empirical"):
        raise ConfigError("limit.q", "expected 'model' or 'empirical'")
    for i, name in enumerate(cfg.functionals):
        try:
            parse_functional(name)
        except ParameterError as exc:
            raise ConfigError(f"functionals[{i}]", str(exc)) from None
    return cfg


_FUNCTIONALS: dict[str, Callable[..., ClusterFunctional]] = {
    "sup_exceeds": sup_exceeds, "capped_abs_sum": capped_abs_sum, "sup_above": sup_above,
    "exceedance_count": exceedance_count, "sign_of_sum": sign_of_sum,
    "second_largest_ratio": second_largest_ratio,
}


def parse_functional(text: str) -> ClusterFunctional:
    """``name`` or ``name(a, b)`` from the functional catalogue."""
    m = re.fullmatch(r"\s*(\w+)\s*(?:\((.*)\))?\s*", text)
    if not m or m.group(1) not in _FUNCTIONALS:
        raise ParameterError(f"unknown functional {text!r}")
    args = [float(a) for a in m.group(2).split(",")] if m.group(2) else []
    try:
        return _FUNCTIONALS[m.group(1)](*args)
    except TypeError:
        raise ParameterError(f"bad arguments in {text!r}") from None


# experiments --------------------------------------------------------------------------


@dataclass
class Experiment:
    name: str
    description: str
    anchor: str
    run: Callable[["ExperimentConfig", int], dict]
    defaults: dict


def _model(cfg):
    return model_from_dict(cfg.model)


def _plan(model, n, cfg, sample=None):
    return BlockingPlan.for_model(model, n, cfg.blocking.r_n, cfg.blocking.u, sample)


def _limit_theta_q(model, cfg, law=None):
    if cfg.limit.q == "empirical":
        if law is None:
            raise ParameterError("empirical Q needs an observed cluster law")
        theta = cfg.limit.theta
        if theta is None:
            raise ParameterError("empirical Q needs limit.theta")
        return theta, EmpiricalQ(law)
    theta, q = limit_inputs(model)
    return (cfg.limit.theta if cfg.limit.theta is not None else theta), q


def run_theta(cfg, threads):
    model = _model(cfg)
    if not isinstance(model, (LinearModel, RegVarLaw)):
        raise ParameterError("theta experiment needs a closed-form extremal index")
    target, _ = limit_inputs(model)
    tol = cfg.tol if cfg.tol is not None else 0.05
    rows = []
    for n, ss in zip(cfg.n_grid, seed_streams(cfg.seed, len(cfg.n_grid))):
        d = replicated_theta(model, _plan(model, n, cfg), cfg.replications, ss, threads)
        rows.append({"n": n, "diagnostic": d.to_dict(), "closed_form": target,
                     "error": d.estimate - target, "passed": abs(d.estimate - target) < tol})
    return {"rows": rows, "tol": tol, "passed": all(r["passed"] for r in rows)}, {}


def run_cluster_law(cfg, threads):
    model = _model(cfg)
    n = cfg.n_grid[-1]
    plan = _plan(model, n, cfg)
    law = replicated_cluster_law(model, plan, cfg.replications, cfg.seed, threads)
    alpha = model.alpha if not isinstance(model, GarchModel) else hill_estimate(law.L, max(10, len(law) // 10))
    checks = []
    for v in cfg.levels:
        p = float(np.mean(law.L > v))
        target = v ** -alpha
        se = np.sqrt(target * (1 - target) / len(law))
        checks.append({"v": v, "empirical": p, "target": target, "se": se,
                       "z": (p - target) / se, "passed": abs(p - target) <= 3 * se})
    pvals = {}
    if len(law) >= 500:
        for g in (sign_of_sum(), second_largest_ratio()):
            pvals[g.name] = independence_test_LQ(law, g, seed=cfg.seed)
    report = {"plan": plan.to_dict(), "pairs": len(law), "tail_checks": checks,
              "independence_pvalues": pvals, "passed": all(c["passed"] for c in checks)}
    return report, {"cluster_law.csv": law.to_csv()}


def run_nu(cfg, threads):
    model = _model(cfg)
    fs = [parse_functional(s) for s in cfg.functionals]
    n = cfg.n_grid[-1]
    plan = _plan(model, n, cfg)
    root = as_seedseq(cfg.seed)
    s_emp, s_law, *s_lim = root.spawn(2 + len(fs))
    law = None
    if cfg.limit.q == "empirical":
        law = replicated_cluster_law(model, plan, max(1, cfg.replications // 2), s_law, threads)
    theta, q = _limit_theta_q(model, cfg, law)
    alpha = cfg.limit.alpha if cfg.limit.alpha is not None else model.alpha

    def one(ss):
        x = simulate(model, n, ss)
        return [cluster_functional_nu(x, plan, f).estimate for f in fs]

    per = np.array(replicate(one, s_emp, cfg.replications, threads))
    rows = []
    for j, (f, ss) in enumerate(zip(fs, s_lim)):
        emp = mean_se(per[:, j])
        lim = nu_limit(f, theta, alpha, q, cfg.limit.mc_samples, ss)
        z = emp.z(lim.value, lim.se)
        rows.append({"functional": f.name, "empirical": emp.value, "empirical_se": emp.se,
                     "limit": lim.value, "limit_se": lim.se, "z": z, "passed": abs(z) <= 3})
    return {"plan": plan.to_dict(), "theta": theta, "rows": rows,
            "passed": all(r["passed"] for r in rows)}, {}


def run_sums(cfg, threads):
    model = _model(cfg)
    if not isinstance(model, (LinearModel, RegVarLaw)) or not model.alpha < 1:
        raise ParameterError("sums experiment needs a Pareto or linear model with alpha < 1")
    root = as_seedseq(cfg.seed)
    s_path, s_sup, s_m2 = root.spawn(3)
    theta, q = limit_inputs(model)
    # path level: the limit truncated at decreasing floors converges to itself
    pp = sample_limit_pp(theta, model.alpha, q, cfg.limit.p_min, 1.0, s_path)
    full = limit_decorated_path(pp, model.alpha)
    floors = [cfg.limit.p_min * 10 ** k for k in range(4, -1, -1)]
    seq = [limit_decorated_path(pp.thin(f), model.alpha) for f in floors]
    windows = cfg.windows or [[0.0, 1.0], [0.0, 0.5], [0.5, 1.0], [0.25, 0.75]]
    path_check = m2_convergence_check(seq, full, windows, tol=0.05)
    sup = sup_law_experiment(model, cfg.n_grid, cfg.replications, s_sup, cfg.limit.draws,
                             cfg.limit.p_min, cfg.tol if cfg.tol is not None else 0.03, threads)
    m2 = None
    if model.c.size > 1 if isinstance(model, LinearModel) else False:
        m2 = m2_distribution_experiment(model, cfg.n_grid, cfg.replications, s_m2, cfg.limit.draws,
                                        [tuple(w) for w in windows], cfg.limit.p_min, 0.05, threads)
    n = cfg.n_grid[-1]
    a_n = quantile_an(model, n)
    x = simulate(model, n, s_path)
    csvs = {"limit_graph.csv": graph(full).to_csv(),
            "sample_graph.csv": graph(embed_cadlag(partial_sum_path(x, a_n))).to_csv()}
    passed = path_check["passed"] and sup["passed"] and (m2 is None or m2["passed"])
    return {"path_check": {"floors": floors, **path_check}, "sup_law": sup, "m2_distribution": m2,
            "passed": passed}, csvs


def run_records(cfg, threads):
    model = _model(cfg)
    window = tuple(cfg.window or [0.05, 1.0])
    root = as_seedseq(cfg.seed)
    s_exp, s_lim = root.spawn(2)
    exp = record_convergence_experiment(model, cfg.n_grid, window, cfg.replications, s_exp,
                                        cfg.blocking.r_n, threads)
    _, q = limit_inputs(model)
    draws = cfg.limit.draws
    lw = (1.0, float(np.e))
    counts = np.array([len(simulate_limit_records(model.alpha, q, lw, s))
                       for s in s_lim.spawn(draws)]) if draws else np.zeros(0, int)
    # records merged per atom: counts of atoms on [1, e] are Poisson(1)
    chi = poisson_chisquare(counts, 1.0) if draws else None
    lim_ok = chi is None or chi["pvalue"] > 0.01
    return {"experiment": exp, "limit_counts": {"window": list(lw), "draws": draws, "chisq": chi},
            "passed": bool(exp["passed"] and lim_ok)}, {}


def _random_cluster(rng, max_len=6):
    return Cluster(rng.normal(size=rng.integers(0, max_len + 1)) * (rng.random() < 0.9))


def _random_step(rng, k=4):
    from .espace import DecoratedPath, StepPath
    t = np.sort(rng.choice(np.arange(1, 50), size=rng.integers(0, k + 1), replace=False)) / 50.0
    step = StepPath(t, rng.normal(size=t.size + 1))
    dec = []
    for tt in t:
        if rng.random() < 0.5:
            lo, hi = sorted((step.left_limit(tt), step(tt)))
            dec.append((tt, lo - abs(rng.normal()), hi + abs(rng.normal())))
    return DecoratedPath(step, dec, relative=False) if dec else embed_cadlag(step)


def run_metric_selftest(cfg, threads):
    rng = np.random.default_rng(cfg.seed)
    count = max(cfg.replications, 1)
    fails = {"shift_symmetry": 0, "shift_triangle": 0, "shift_invariance": 0,
             "m2_symmetry": 0, "m2_triangle": 0, "m2_below_uniform": 0, "hausdorff_bruteforce": 0}
    worst = 0.0
    for _ in range(count):
        a, b, c = (_random_cluster(rng) for _ in range(3))
        dab, dba = shift_metric(a, b), shift_metric(b, a)
        fails["shift_symmetry"] += dab != dba
        fails["shift_triangle"] += dab > shift_metric(a, c) + shift_metric(c, b) + 1e-9
        fails["shift_invariance"] += shift_metric(a.shift(int(rng.integers(-5, 6))), b) != dab
        p1, p2, p3 = (_random_step(rng) for _ in range(3))
        m12, m21 = m2_distance(p1, p2), m2_distance(p2, p1)
        fails["m2_symmetry"] += abs(m12 - m21) > 1e-12
        fails["m2_triangle"] += m12 > m2_distance(p1, p3) + m2_distance(p3, p2) + 1e-9
        fails["m2_below_uniform"] += m12 > uniform_metric(p1, p2) + 1e-9
    from scipy.spatial.distance import cdist
    for _ in range(min(count, 20)):
        p1, p2 = _random_step(rng), _random_step(rng)
        g1, g2 = graph(p1), graph(p2)
        x, y = g1.sample_points(1e-3), g2.sample_points(1e-3)
        d = cdist(x, y, "chebyshev")
        brute = max(d.min(axis=1).max(), d.min(axis=0).max())
        gap = abs(brute - hausdorff_graphs(g1, g2))
        worst = max(worst, gap)
        fails["hausdorff_bruteforce"] += gap > 2e-3
    fails = {k: int(v) for k, v in fails.items()}
    return {"cases": count, "failures": fails, "worst_bruteforce_gap": worst,
            "passed": not any(fails.values())}, {}


def run_figures(cfg, threads):
    """Graphs of partial-sum paths for a negative-lag MA(1) and a GARCH(1,1)."""
    root = as_seedseq(cfg.seed)
    s_ma, s_garch = root.spawn(2)
    n = cfg.n_grid[-1]
    csvs = {}
    ma = LinearModel((1.0, -0.7), RegVarLaw(0.7, 0.5))
    x = simulate(ma, n, s_ma)
    a_n = quantile_an(ma, n)
    path = partial_sum_path(x, a_n)
    csvs["ma1_partial_sum_graph.csv"] = graph(embed_cadlag(path)).to_csv()
    csvs["ma1_running_max_graph.csv"] = graph(embed_cadlag(sup_path(embed_cadlag(path)))).to_csv()
    r_n = cfg.blocking.r_n or max(1, int(np.sqrt(n)))
    csvs["ma1_block_graph.csv"] = graph(block_decorated_path(x, r_n, a_n)).to_csv()
    garch = GarchModel(0.01, 1.45, 0.1)
    g = simulate(garch, n, s_garch)
    k = max(10, n // 100)
    alpha_hat = hill_estimate(g, k)
    a_g = quantile_an(GarchModel(0.01, 1.45, 0.1, alpha_hat), n, g, k)
    csvs["garch_partial_sum_graph.csv"] = graph(embed_cadlag(partial_sum_path(g, a_g))).to_csv()
    return {"n": n, "r_n": r_n, "ma1_a_n": a_n, "garch_hill_alpha": alpha_hat, "garch_a_n": a_g,
            "files": sorted(csvs), "passed": True}, csvs


def run_stable(cfg, threads):
    model = _model(cfg)
    if not isinstance(model, LinearModel):
        raise ParameterError("stable cross-check needs a linear model")
    theta, q = limit_inputs(model)
    s1, s2 = seed_streams(cfg.seed, 2)
    mc = cfg.limit.mc_samples
    a = stable_params_from_Q(model.alpha, theta, q, marginal_tail_balance(model), mc, s1, exact=False)
    b = stable_params_from_forward_theta(model.alpha, LinearForwardTheta(model), mc, s2, exact=False)
    rows = []
    for key in ("sigma", "beta", "b"):
        va, vb = getattr(a, key), getattr(b, key)
        se = float(np.hypot(a.se.get(key, 0.0), b.se.get(key, 0.0)))
        z = 0.0 if va == vb else (va - vb) / se if se > 0 else np.inf
        rows.append({"parameter": key, "Q_route": va, "forward_route": vb, "se": se, "z": z,
                     "passed": abs(z) <= 3})
    dh = a.extra["balance_residual"]
    dh_ok = abs(dh) <= 3 * a.extra["balance_se"] + 1e-12
    return {"Q_route": a.to_dict(), "forward_route": b.to_dict(), "rows": rows,
            "identity_residual": dh, "passed": all(r["passed"] for r in rows) and dh_ok}, {}


def run_laplace_gap(cfg, threads):
    model = _model(cfg)
    n = cfg.n_grid[-1]
    plan = _plan(model, n, cfg)
    f = parse_functional(cfg.functionals[0])
    d = laplace_gap_diagnostic(model, plan, f, cfg.replications, cfg.seed, threads=threads)
    z = d.estimate / d.se if d.se > 0 else 0.0
    return {"diagnostic": d.to_dict(), "z": z, "passed": abs(z) <= 3}, {}


def run_karamata(cfg, threads):
    model = _model(cfg)
    n = cfg.n_grid[-1]
    rows = karamata_check(model.alpha, n, cfg.epsilons, cfg.limit.mc_samples, cfg.seed)
    for r in rows:
        r["z"] = (r["mc"] - r["limit"]) / r["se"]
        r["passed"] = abs(r["z"]) <= 3
    return {"rows": rows, "passed": all(r["passed"] for r in rows)}, {}


_MA = {"kind": "linear", "coeffs": [1.0, 0.7], "alpha": 0.7}

EXPERIMENTS: dict[str, Experiment] = {e.name: e for e in [
    Experiment("theta", "blocked extremal index against the closed form for linear processes",
               "extremal index of a linear process: max|c|^alpha / sum|c|^alpha", run_theta,
               {"model": _MA, "n_grid": [100000], "replications": 20,
                "blocking": {"r_n": 300, "u": 0.05}}),
    Experiment("cluster-law", "Pareto law of cluster sup-norms and independence of the shape",
               "cluster magnitude is Pareto(alpha) and independent of the cluster shape",
               run_cluster_law, {"model": _MA, "n_grid": [100000], "replications": 20,
                                 "blocking": {"r_n": 300, "u": 0.05}}),
    Experiment("nu", "cluster functionals of blocks against their Poisson-limit values",
               "block functionals converge to the cluster intensity measure nu",
               run_nu, {"model": _MA, "n_grid": [100000], "replications": 50,
                        "blocking": {"r_n": 300}}),
    Experiment("sums", "decorated partial-sum limit: path construction, sup law and M2 windows",
               "partial sums converge in the space of decorated paths; sup converges in law",
               run_sums, {"model": _MA, "n_grid": [10000, 100000], "replications": 5000,
                          "limit": {"draws": 20000}}),
    Experiment("records", "block-merged record times against the compound Poisson limit",
               "record times converge to a compound scale-invariant Poisson process",
               run_records, {"model": {"kind": "linear", "coeffs": [1.0, 2.0], "alpha": 1.0},
                             "n_grid": [100000], "replications": 100, "window": [0.05, 1.0],
                             "blocking": {"r_n": 300}, "limit": {"draws": 10000}}),
    Experiment("metric-selftest", "invariant suites for the shift metric and the graph Hausdorff metric",
               "shift-invariant sup metric on clusters and Hausdorff metric on completed graphs",
               run_metric_selftest, {"replications": 200}),
    Experiment("figures", "plot data for partial-sum graphs of MA(1) and GARCH(1,1) paths",
               "sample paths of partial sums for a negative-lag moving average and a GARCH(1,1)",
               run_figures, {"n_grid": [10000], "replications": 1}),
    Experiment("stable", "stable parameters from the cluster shape against the forward tail process",
               "stable limit parameters expressed through Q and through the spectral tail process",
               run_stable, {"model": _MA, "limit": {"mc_samples": 200000}}),
    Experiment("laplace-gap", "gap between the block Laplace functional and its product form",
               "asymptotic independence of blocks (Laplace functional factorises)",
               run_laplace_gap, {"model": _MA, "n_grid": [20000], "replications": 200,
                                 "blocking": {"r_n": 200}, "functionals": ["sup_exceeds(1)"]}),
    Experiment("karamata", "truncated first moment of a Pareto law against its regular-variation limit",
               "Karamata's theorem for truncated moments", run_karamata,
               {"model": {"kind": "pareto", "alpha": 0.7}, "n_grid": [100000],
                "limit": {"mc_samples": 2000000}}),
]}


def list_experiments() -> list[dict]:
    """Static catalogue: name, one-line description and the claim each run checks."""
    return [{"name": e.name, "description": e.description, "anchor": e.anchor}
            for e in EXPERIMENTS.values()]


def run(cfg: ExperimentConfig, threads: int | None = None, out_dir: str | Path | None = None) -> dict:
    """Run one experiment, write its artifacts and return the report."""
    exp = EXPERIMENTS[cfg.experiment]
    threads = threads or default_threads()
    results, csvs = exp.run(cfg, threads)
    report = {"experiment": exp.name, "anchor": exp.anchor, "config": cfg.to_dict(),
              "results": results, "passed": bool(results["passed"])}
    out = Path(out_dir or cfg.out or os.environ.get(ENV_OUT) or Path("clusterlab-out") / exp.name)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.json", "w") as fh:
        json.dump(to_jsonable(report), fh, indent=2, sort_keys=True)
        fh.write("\n")
    for name, text in csvs.items():
        (out / name).write_text(text)
    report["out"] = str(out)
    return report


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="clusterlab", description=__doc__.splitlines()[0])
    parser.add_argument("experiment", nargs="?", help="experiment name (see --list)")
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--out", help=f"output directory (default: ${ENV_OUT} or ./clusterlab-out/<experiment>)")
    parser.add_argument("--list", action="store_true", help="list experiments and exit")
    args = parser.parse_args(argv)
    if args.list:
        for e in list_experiments():
            print(f"{e['name']:16s} {e['description']}")
        return 0
    if args.experiment is None:
        parser.print_usage(sys.stderr)
        return 2
    if args.experiment not in EXPERIMENTS:
        print(f"clusterlab: unknown experiment {args.experiment!r}; choose from "
              f"{', '.join(EXPERIMENTS)}", file=sys.stderr)
        return 2
    try:
        data = None
        if args.config:
            try:
                with open(args.config) as fh:
                    data = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError("", f"cannot read config: {exc}") from None
        cfg = load_config(args.experiment, data, args.seed, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.threads is not None and args.threads < 1:
        print("config error: --threads must be positive", file=sys.stderr)
        return 2
    try:
        report = run(cfg, args.threads)
    except ParameterError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    status = "PASS" if report["passed"] else "FAIL"
    print(f"{cfg.experiment}: {status} ({report['out']}/report.json)")
    return 0 if report["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
