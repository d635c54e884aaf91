"""Config-driven experiment runs: build the problem, run solvers, write CSV and SVG."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import instances, regression
from .config import ExperimentConfig, dump_config
from .gossip import default_round_count
from .numkit import InputError
from .objectives import LocalObjectiveSet, OracleMeter
from .plotting import plot_panels, write_csv
from .solvers import RunRecord, SolverParams, cgd, dgd_gt, drone, drone_default_params, gd
from .topology import Graph, MixingMatrix, laplacian_mixing, parse_topology

AXES = ("iter", "lfo_total", "comm_rounds", "time_units")


@dataclass
class Problem:
    objs: LocalObjectiveSet
    mixing: MixingMatrix | None
    f_lower: float | None = None  # a known lower bound on f* when f* itself is unknown


def _get(params: dict, key: str, default=None, kind=float):
    if key not in params:
        if default is None:
            raise InputError(f"[problem] needs '{key}'")
        return default
    try:
        return kind(params[key])
    except (TypeError, ValueError):
        raise InputError(f"[problem] {key} must be {kind.__name__}") from None


def build_problem(cfg: ExperimentConfig, need_network: bool = True) -> Problem:
    p = dict(cfg.problem)
    preset = p.pop("preset")
    base, _, arg = preset.partition(":")
    base = instances.ALIASES.get(base, base)
    network: Graph | MixingMatrix | None = None
    f_lower = None
    if base in instances.PRESETS:
        if not arg:
            # keyword form: the preset's parameters as separate keys
            names = instances.PRESETS[base].partition(":")[2].strip("[]").split(",")
            vals = [str(p[k]) for k in names if k and k in p]
            if base != "hard-decentralized" and len(vals) != len(names):
                missing = [k for k in names if k not in p]
                raise InputError(f"[problem] {base} needs {', '.join(missing)}")
            preset = base + (":" + ",".join(vals) if vals else "")
        elif base != preset.partition(":")[0]:
            preset = base + ":" + arg
        objs, network = instances.build_preset(preset)
    else:
        n = _get(p, "n", kind=int)
        seed = _get(p, "data_seed", 0, int)
        if base in ("linreg-synth", "logreg-synth"):
            mode = "square" if base == "linreg-synth" else "logistic"
            ds = regression.synth_regression(_get(p, "m", kind=int), _get(p, "d", kind=int),
                                             _get(p, "noise", 0.0), seed, mode)
            loss = mode
        elif base == "drivface-scale":
            ds = regression.drivface_scale(seed, _get(p, "noise", 0.0))
            loss = "square"
        else:  # libsvm
            path = arg or p.get("path")
            if not path:
                raise InputError("libsvm preset needs a path ('libsvm:<path>' or path = ...)")
            ds = regression.read_libsvm(path)
            loss = p.get("loss", "square")
        objs = regression.partitioned_regression_set(ds, n, loss)
        f_lower = 0.0  # both losses are non-negative
    mixing = None
    if cfg.topology is not None:
        mixing = laplacian_mixing(parse_topology(cfg.topology))
    elif isinstance(network, MixingMatrix):
        mixing = network
    elif isinstance(network, Graph):
        mixing = laplacian_mixing(network)
    elif need_network:
        mixing = laplacian_mixing(parse_topology(f"linear:{objs.n}"))
    if mixing is not None and mixing.n != objs.n:
        raise InputError(f"topology has {mixing.n} nodes but the problem has {objs.n} agents")
    return Problem(objs, mixing, f_lower)


def initial_lyapunov(objs: LocalObjectiveSet, x0: np.ndarray, eta: float, f_lower: float | None) -> float:
    """``Phi`` at the consensual start ``X = 1 x0``, ``S = G = grad F(X)``; uses ``f_lower`` if ``f*`` is unknown."""
    f_ref = objs.f_star if objs.f_star is not None else f_lower
    if f_ref is None:
        raise InputError("automatic parameters need a known optimal value or lower bound")
    G = objs.local_gradients(np.tile(x0, (objs.n, 1)))
    spread = float(np.sum((G - G.mean(axis=0)) ** 2))
    return objs.full_value(x0) - f_ref + objs.L * eta * eta * spread


@dataclass
class ResolvedParams:
    params: SolverParams
    notes: list = field(default_factory=list)


def resolve_params(cfg: ExperimentConfig, prob: Problem, x0: np.ndarray) -> ResolvedParams:
    s = cfg.solver
    objs = prob.objs
    notes = []
    if s.auto:
        if objs.L is None or objs.mu is None:
            raise InputError(f"{objs.name}: automatic parameters need declared L and mu")
        gamma = prob.mixing.gap if prob.mixing is not None else 1.0
        first = drone_default_params(objs.n, objs.L, objs.mu, gamma, 1.0, cfg.run.eps, cfg.run.seed)
        phi0 = initial_lyapunov(objs, x0, first.params.eta, prob.f_lower)
        rep = drone_default_params(objs.n, objs.L, objs.mu, gamma, phi0, cfg.run.eps, cfg.run.seed)
        params = rep.params
        notes += rep.adjustments
        notes.append(f"automatic parameters from Phi0 = {phi0:.6g}")
    else:
        K = s.K
        if K is None:
            K = default_round_count(objs.n, prob.mixing.gap) if prob.mixing is not None else 1
        p = s.p if s.p is not None else 1.0 / (min(math.sqrt(objs.n), objs.kappa or math.sqrt(objs.n)) + 1.0)
        b = s.b if s.b is not None else max(1, min(objs.n, math.ceil((1.0 - p) / p - 1e-12)))
        params = SolverParams(eta=s.eta, T_iters=s.T_iters, K=K, p=p, b=b, seed=cfg.run.seed)
    for key in ("eta", "T_iters", "K", "p", "b"):
        v = getattr(s, key)
        if s.auto and v is not None:
            setattr(params, key, v)
            notes.append(f"{key} overridden to {v}")
    params.validate(objs.n)
    return ResolvedParams(params, notes)


@dataclass
class ExperimentResult:
    records: dict
    params: SolverParams
    notes: list
    summary: list
    files: list


def run_solver(name: str, prob: Problem, x0, params: SolverParams, tau: float, stop_at, lyapunov) -> RunRecord:
    objs = prob.objs
    meter = OracleMeter(objs.n, tau)
    if name == "gd":
        return gd(objs, x0, params.eta, params.T_iters, meter, stop_at)
    if name == "cgd":
        return cgd(objs, x0, params.eta, params.T_iters, tau, meter, stop_at)
    if prob.mixing is None:
        raise InputError(f"{name} needs a topology")
    if name == "dgd_gt":
        return dgd_gt(objs, prob.mixing, x0, params.eta, params.K, params.T_iters, tau, meter, stop_at, lyapunov)
    if name == "drone":
        return drone(objs, prob.mixing, x0, params, tau, meter, stop_at, lyapunov)
    raise InputError(f"unknown solver {name!r}")


def summarize(records: dict, eps: float) -> list[str]:
    lines = []
    for name, rec in records.items():
        label = "relative gap" if rec.relative_gap else "gap"
        hit = [rec.first_reaching(eps, a) for a in AXES]
        if hit[0] is None:
            lines.append(f"{name}: {label} <= {eps:g} not reached in {len(rec) - 1} iterations "
                         f"(final {label} {rec.columns['gap'][-1]:.6g})")
        else:
            parts = ", ".join(f"{a}={v:.17g}" for a, v in zip(AXES, hit))
            lines.append(f"{name}: {label} <= {eps:g} at {parts}")
    return lines


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> ExperimentResult:
    need_net = any(s in ("dgd_gt", "drone") for s in cfg.solver.names)
    prob = build_problem(cfg, need_net)
    x0 = np.zeros(prob.objs.d)
    resolved = resolve_params(cfg, prob, x0)
    stop_at = cfg.run.eps if cfg.run.stop_at_eps else None
    records = {}
    for name in cfg.solver.names:
        records[name] = run_solver(name, prob, x0, resolved.params, cfg.run.tau, stop_at, cfg.run.lyapunov)
    notes = list(resolved.notes)
    if prob.objs.f_star is None:
        f_ref = min(min(r.values) for r in records.values())
        for r in records.values():
            r.rebase_gap(f_ref)
        notes.append(f"optimal value unknown: gaps are relative to the best value seen, {f_ref:.17g}")
    summary = summarize(records, cfg.run.eps)
    files = []
    if write:
        out = Path(cfg.run.out)
        out.mkdir(parents=True, exist_ok=True)
        for name, rec in records.items():
            files.append(write_csv(rec, out / f"{name}.csv"))
        files.append(plot_panels(list(records.values()), out / "convergence.svg", title=prob.objs.name))
        (out / "config.toml").write_text(dump_config(cfg))
        p = resolved.params
        header = [f"problem: {prob.objs.name}",
                  f"params: eta={p.eta:.17g} K={p.K} p={p.p:.17g} b={p.b} T_iters={p.T_iters} seed={p.seed}"]
        (out / "summary.txt").write_text("\n".join(header + notes + summary) + "\n")
        files += [out / "config.toml", out / "summary.txt"]
    return ExperimentResult(records, resolved.params, notes, summary, files)
