"""Scenario runner: ``topoflock run|sweep|list-scenarios``.

Configs are flat JSON objects. Only ``scenario`` is always required; every
other key falls back to the scenario's registry defaults. Randomness comes
from one integer seed, split per purpose as
``SeedSequence(seed, spawn_key=(crc32(purpose),))`` so that adding a new
random component never shifts the streams of existing ones.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import glob
import io
import json
import math
import sys
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import diagnostics as diag
from . import scenarios as sc
from .core import AgentEnsemble, WeightFunction
from .dynamics import SimulationError, Trajectory, simulate, simulate_fixed_topology
from .graph import left_null_vector, predict_consensus, random_strongly_connected
from .hydro import HydroState, envelope_check, simulate_hydro
from .meanfield import Mollifier, simulate_meanfield_particles
from .swarm import SwarmParams, pattern_metrics, simulate_swarm, speed_bound

SCHEMA_VERSION = 1
MODELS = ("topological", "metric", "fixed-topology", "meanfield", "hydro", "swarm")


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    model: str = ""
    n_agents: int = 7
    dim: int = 1
    dt: float = 1e-3
    t_end: float = 1.0
    sample_every: int = 1
    seed: int = 0
    weight_table: list | None = None
    weight_family: str | None = None
    weight_params: list | None = None
    metric_params: list | None = None
    c: float | None = None
    epsilon: float | None = None
    g0: float | None = None
    edge_prob: float = 0.6
    a: float = 1.0
    b: float = 0.5
    C_R: float = 1.0
    l_R: float = 0.5
    C_A: float = 1.0
    l_A: float = 0.1
    refine_switches: bool = False
    output_dir: str = "out"

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @property
    def swarm_params(self) -> SwarmParams:
        return SwarmParams(self.a, self.b, self.C_R, self.l_R, self.C_A, self.l_A)


_FLOAT, _INT, _BOOL, _STR, _LIST = "float", "int", "bool", "str", "list"
_TYPES = {
    "scenario": _STR, "model": _STR, "n_agents": _INT, "dim": _INT, "dt": _FLOAT,
    "t_end": _FLOAT, "sample_every": _INT, "seed": _INT, "weight_table": _LIST,
    "weight_family": _STR, "weight_params": _LIST, "metric_params": _LIST, "c": _FLOAT,
    "epsilon": _FLOAT, "g0": _FLOAT, "edge_prob": _FLOAT, "a": _FLOAT, "b": _FLOAT,
    "C_R": _FLOAT, "l_R": _FLOAT, "C_A": _FLOAT, "l_A": _FLOAT, "refine_switches": _BOOL,
    "output_dir": _STR,
}
assert set(_TYPES) == {f.name for f in dataclasses.fields(RunConfig)}
_NULLABLE = {f.name for f in dataclasses.fields(RunConfig) if f.default is None}


@dataclass(frozen=True)
class Scenario:
    name: str
    model: str
    description: str
    defaults: dict = field(default_factory=dict)
    required: tuple = ()


REGISTRY = {s.name: s for s in [
    Scenario("example1", "topological",
             "central agent between two rigid triplets, second-neighbour coupling",
             dict(n_agents=7, dim=1, dt=1e-3, t_end=5.0, refine_switches=True), ("c",)),
    Scenario("example2", "topological",
             "two-nearest-neighbour coupling that loses strong connectivity near t = 10",
             dict(n_agents=7, dim=1, dt=1e-2, t_end=100.0, sample_every=10, refine_switches=True)),
    Scenario("example3", "topological",
             "one distant agent that nobody listens to; never strongly connected",
             dict(n_agents=10, dim=1, dt=1e-2, t_end=10.0, sample_every=10)),
    Scenario("random_topological", "topological",
             "complete digraph g = 1 from a random start",
             dict(n_agents=10, dim=2, dt=1e-2, t_end=50.0, sample_every=10)),
    Scenario("metric", "metric",
             "classical metric rates lam / (sigma^2 + r^2)^beta from a random start",
             dict(n_agents=10, dim=2, dt=1e-2, t_end=20.0, sample_every=10,
                  metric_params=[1.0, 1.0, 0.25])),
    Scenario("fixed-topology", "fixed-topology",
             "random strongly connected fixed digraph and its consensus prediction",
             dict(n_agents=8, dim=1, dt=1e-3, t_end=50.0, sample_every=100)),
    Scenario("meanfield", "meanfield",
             "self-consistent particle approximation of the kinetic equation",
             dict(n_agents=100, dim=1, dt=5e-2, t_end=5.0, weight_family="exponential",
                  weight_params=[1.0, 0.5])),
    Scenario("hydro", "hydro",
             "1-D Lagrangian Euler-alignment run with kernel bounded below by g0",
             dict(n_agents=64, dim=1, dt=1e-2, t_end=20.0, sample_every=10, g0=0.5,
                  weight_family="affine", weight_params=[1.5, 0.5])),
    Scenario("swarm", "swarm",
             "self-propelled agents, Morse repulsion, rank-based attraction",
             dict(n_agents=100, dim=2, dt=1e-2, t_end=10.0, sample_every=10)),
]}


def _check_type(key: str, value, kind: str):
    if value is None and key in _NULLABLE:
        return None
    if kind == _BOOL:
        ok = isinstance(value, bool)
    elif kind == _INT:
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif kind == _FLOAT:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif kind == _STR:
        ok = isinstance(value, str)
    else:
        ok = isinstance(value, list) and all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in value)
    if not ok:
        raise ConfigError(key, f"expected {kind}, got {type(value).__name__}")
    if kind == _FLOAT:
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(key, "must be finite")
    if kind == _LIST:
        value = [float(x) for x in value]
    return value


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "config must be a key-value object")
    for key in data:
        if key not in _TYPES:
            raise ConfigError(key, "unknown key")
    if "scenario" not in data:
        raise ConfigError("scenario", "missing required key")
    name = _check_type("scenario", data["scenario"], _STR)
    if name not in REGISTRY:
        raise ConfigError("scenario", f"unknown scenario {name!r}")
    spec = REGISTRY[name]
    for key in spec.required:
        if data.get(key) is None:
            raise ConfigError(key, f"missing required key for scenario {name!r}")
    values = {"model": spec.model, **spec.defaults}
    for key, raw in data.items():
        values[key] = _check_type(key, raw, _TYPES[key])
    values["scenario"] = name
    cfg = RunConfig(**values)
    _validate(cfg, spec)
    return cfg


def _validate(cfg: RunConfig, spec: Scenario):
    if cfg.model not in MODELS:
        raise ConfigError("model", f"unknown model {cfg.model!r}")
    if cfg.model != spec.model:
        raise ConfigError("model", f"scenario {spec.name!r} runs the {spec.model!r} model")
    if not cfg.dt > 0:
        raise ConfigError("dt", "must be positive")
    if not cfg.t_end > 0:
        raise ConfigError("t_end", "must be positive")
    if cfg.sample_every < 1:
        raise ConfigError("sample_every", "must be at least 1")
    if cfg.n_agents < 1:
        raise ConfigError("n_agents", "must be at least 1")
    if cfg.dim not in (1, 2, 3):
        raise ConfigError("dim", "must be 1, 2 or 3")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed", "must be an unsigned 64-bit integer")
    if cfg.c is not None and not cfg.c > 0:
        raise ConfigError("c", "must be positive")
    if cfg.g0 is not None and not cfg.g0 > 0:
        raise ConfigError("g0", "must be positive")
    if cfg.epsilon is not None and cfg.epsilon < 0:
        raise ConfigError("epsilon", "must be nonnegative")
    if cfg.metric_params is not None and len(cfg.metric_params) != 3:
        raise ConfigError("metric_params", "expected [lambda, sigma, beta]")
    if cfg.weight_family is not None and cfg.weight_family not in _FAMILIES:
        raise ConfigError("weight_family", f"unknown family {cfg.weight_family!r}")
    if spec.name == "example3" and cfg.n_agents < 3:
        raise ConfigError("n_agents", "example3 needs at least 3 agents")
    if spec.name in ("example1", "example2") and cfg.n_agents != 7:
        raise ConfigError("n_agents", f"{spec.name} has exactly 7 agents")
    if spec.model == "hydro" and cfg.g0 is None:
        raise ConfigError("g0", "the hydro scenario needs a kernel lower bound")
    if spec.model in ("meanfield", "hydro") and cfg.weight_table is None and cfg.weight_family is None:
        raise ConfigError("weight_family", f"the {spec.model} scenario needs a weight function")
    if spec.model == "metric" and cfg.metric_params is None:
        raise ConfigError("metric_params", "expected [lambda, sigma, beta]")
    if spec.model == "swarm":
        try:
            cfg.swarm_params
        except ValueError as exc:
            raise ConfigError("l_R", str(exc)) from None


def parse_config(text: str) -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<document>", f"malformed JSON: {exc}") from None
    return config_from_dict(data)


def emit(config: RunConfig) -> str:
    """Canonical JSON text; floats use the shortest round-trip repr."""
    return json.dumps(config.to_dict(), sort_keys=True, indent=2) + "\n"


def rng_for(seed: int, purpose: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(zlib.crc32(purpose.encode()),)))


_FAMILIES = {
    "constant": WeightFunction.constant,
    "exponential": WeightFunction.exponential,
    "affine": WeightFunction.affine,
}


def _weights(cfg: RunConfig) -> WeightFunction | None:
    if cfg.weight_table is not None:
        return WeightFunction.discrete(cfg.weight_table)
    if cfg.weight_family is not None:
        try:
            return _FAMILIES[cfg.weight_family](*(cfg.weight_params or []))
        except TypeError:
            raise ConfigError("weight_params", f"wrong parameter count for {cfg.weight_family!r}") from None
    return None


# ---------------------------------------------------------------- running

def _random_start(cfg: RunConfig) -> AgentEnsemble:
    rng = rng_for(cfg.seed, "initial")
    shape = (cfg.n_agents, cfg.dim)
    return AgentEnsemble(rng.uniform(-1, 1, shape), rng.uniform(-1, 1, shape))


def _execute(cfg: RunConfig) -> tuple[Trajectory, dict]:
    """Run the configured scenario; returns the trajectory and summary extras."""
    extra: dict = {}
    kw = dict(dt=cfg.dt, t_end=cfg.t_end, sample_every=cfg.sample_every)
    name = cfg.scenario
    if name in ("example1", "example2", "example3", "random_topological", "metric"):
        if name == "example1":
            ens, w = sc.scenario_example1(cfg.c)
        elif name == "example2":
            ens, w = sc.scenario_example2()
        elif name == "example3":
            ens, w = sc.scenario_example3(cfg.n_agents)
        elif name == "random_topological":
            ens, w = _random_start(cfg), WeightFunction.discrete(np.ones(cfg.n_agents))
        else:
            ens, w = _random_start(cfg), WeightFunction.metric(*cfg.metric_params)
        w = _weights(cfg) or w
        traj = simulate(ens, w, refine_switches=cfg.refine_switches, **kw)
        log = traj.switch_log
        if name == "example1":
            extra["first_return_time"] = log.events[0].time if log.events else None
            extra["analytic_return_time"] = sc.return_time(cfg.c)
        trans = log.connectivity_transitions()
        extra["first_strong_to_weak"] = next(
            (t for t, a, b in trans if a == "strong" and b != "strong"), None)
    elif name == "fixed-topology":
        topo = random_strongly_connected(cfg.n_agents, rng_for(cfg.seed, "topology"), cfg.edge_prob)
        ens = _random_start(cfg)
        traj = simulate_fixed_topology(ens, topo, **kw)
        cert = left_null_vector(topo)
        extra["xi"] = cert.xi.tolist()
        extra["certificate_valid"] = cert.valid
        if cert.valid:
            pred = predict_consensus(cert, ens.velocities)
            extra["prediction"] = pred.tolist()
            extra["prediction_error"] = float(np.abs(traj.velocities[-1] - pred).max())
            xi_v = cert.xi @ traj.velocities.reshape(len(traj), cfg.n_agents, -1)
            extra["xi_v_drift"] = float(np.abs(xi_v - xi_v[0]).max())
    elif name == "meanfield":
        rng = rng_for(cfg.seed, "initial")
        pool_x = rng.uniform(-1, 1, (cfg.n_agents, cfg.dim))
        pool_v = rng.uniform(-0.5, 0.5, (cfg.n_agents, cfg.dim))
        moll = None if cfg.epsilon is None else Mollifier(cfg.epsilon)
        traj = simulate_meanfield_particles(cfg.n_agents, lambda n: (pool_x[:n], pool_v[:n]),
                                            _weights(cfg), moll, **kw)
    elif name == "hydro":
        if cfg.dim != 1:
            raise ConfigError("dim", "the hydro scenario is one-dimensional")
        rng = rng_for(cfg.seed, "initial")
        state = HydroState.uniform(rng.uniform(-1, 1, cfg.n_agents),
                                   rng.uniform(-1, 1, cfg.n_agents), g0=cfg.g0)
        hyd = simulate_hydro(state, _weights(cfg), **kw)
        traj = Trajectory(hyd.times, hyd.positions[..., None], hyd.velocities[..., None])
        rep = envelope_check(hyd, cfg.g0)
        extra["envelope"] = {"ok": bool(rep.ok), "worst_ratio": rep.worst_ratio,
                          "sup_dx": rep.sup_dx, "dx_bound": rep.dx_bound}
    else:  # swarm
        ens = _random_box(cfg)
        params = cfg.swarm_params
        traj = simulate_swarm(ens, params, **kw)
        if cfg.dim == 2:
            pm = pattern_metrics(traj, params=params)
            extra["final_polarization"] = float(pm.polarization[-1])
            extra["final_clusters"] = int(pm.n_clusters[-1])
            extra["final_angular_momentum"] = float(pm.angular_momentum[-1])
        if params.b > 0:
            v0 = float(np.linalg.norm(ens.velocities, axis=1).max())
            extra["speed_bound"] = speed_bound(params, v0)
    return traj, extra


def _random_box(cfg: RunConfig) -> AgentEnsemble:
    rng = rng_for(cfg.seed, "initial")
    shape = (cfg.n_agents, cfg.dim)
    return AgentEnsemble(rng.uniform(0, 1, shape), np.zeros(shape))


def _num(x) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise SimulationError("non-finite value in output")
    return repr(x)


def _csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(header)
    for row in rows:
        out.writerow([_num(x) for x in row])
    return buf.getvalue()


def trajectory_csv(traj: Trajectory) -> str:
    n, d = traj.n_agents, traj.dim
    header = ["t"] + [f"x{k}_{i}" for k in range(d) for i in range(n)] \
        + [f"v{k}_{i}" for k in range(d) for i in range(n)]
    x = traj.positions.transpose(0, 2, 1).reshape(len(traj), -1)
    v = traj.velocities.transpose(0, 2, 1).reshape(len(traj), -1)
    return _csv_text(header, np.column_stack([traj.times, x, v]))


def diagnostics_csv(series: diag.DiagnosticsSeries) -> str:
    d = series.momentum.shape[1]
    header = ["t", "omega", "vel_diameter", "pos_fluctuation"] + \
        [f"momentum{k}" for k in range(d)] + ["max_position"]
    cols = np.column_stack([series.times, series.omega, series.vel_diameter,
                            series.pos_fluctuation, series.momentum, series.max_position])
    return _csv_text(header, cols)


def switches_json(traj: Trajectory) -> dict:
    log = traj.switch_log
    if log is None:
        return {"schema_version": SCHEMA_VERSION, "tracked": False, "events": [],
                "occupancy": {}, "pattern_occupancy": {}, "connectivity": {}, "connectivity_transitions": []}
    return {
        "schema_version": SCHEMA_VERSION,
        "tracked": True,
        "initial": log.initial_hash,
        "events": [{"time": e.time, "old": e.old_hash, "new": e.new_hash} for e in log.events],
        "occupancy": log.occupancy,
        "pattern_occupancy": log.pattern_occupancy,
        "connectivity": {h: {"strong": s, "weak": w} for h, (s, w) in log.connectivity.items()},
        "connectivity_transitions": [{"time": t, "from": a, "to": b}
                                     for t, a, b in log.connectivity_transitions()],
    }


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def run(config: RunConfig, output_dir: str | None = None) -> dict:
    """Run one config and write its four output files; returns the summary."""
    if output_dir is not None:
        config = dataclasses.replace(config, output_dir=output_dir)
    traj, extra = _execute(config)
    series = diag.compute_series(traj)
    verdict = diag.check_flocking(series)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "config": config.to_dict(),
        "n_samples": len(traj),
        "flocked": verdict.flocked,
        "t_flock": verdict.t_flock,
        "v_consensus": None if verdict.v_consensus is None else verdict.v_consensus.tolist(),
        "final_mean_velocity": series.momentum[-1].tolist(),
        "final_vel_diameter": float(series.vel_diameter[-1]),
        "momentum_drift": diag.momentum_drift(traj),
        "omega_nonincreasing": bool(diag.omega_monotone(series)),
        "n_switches": 0 if traj.switch_log is None else len(traj.switch_log.events),
        **extra,
    }
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "trajectory.csv").write_text(trajectory_csv(traj))
    (out / "diagnostics.csv").write_text(diagnostics_csv(series))
    (out / "switches.json").write_text(_dump(switches_json(traj)))
    (out / "summary.json").write_text(_dump(summary))
    return summary


def _apply_flags(cfg: RunConfig, args) -> RunConfig:
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=_check_type("seed", args.seed, _INT))
        _validate(cfg, REGISTRY[cfg.scenario])
    if args.output_dir is not None:
        cfg = dataclasses.replace(cfg, output_dir=args.output_dir)
    return cfg


def _load(path: str) -> RunConfig:
    return parse_config(Path(path).read_text())


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="topoflock", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one config file")
    p_run.add_argument("config")
    p_sweep = sub.add_parser("sweep", help="run every config matching a glob")
    p_sweep.add_argument("pattern")
    for p in (p_run, p_sweep):
        p.add_argument("--output-dir", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--quiet", action="store_true")
    sub.add_parser("list-scenarios", help="show the scenario registry")
    args = parser.parse_args(argv)

    if args.command == "list-scenarios":
        for s in REGISTRY.values():
            req = f" (requires {', '.join(s.required)})" if s.required else ""
            print(f"{s.name:15s} {s.model:15s} {s.description}{req}")
        return 0

    def say(msg):
        if not args.quiet:
            print(msg)

    try:
        if args.command == "run":
            cfg = _apply_flags(_load(args.config), args)
            summary = run(cfg)
            say(f"{cfg.scenario}: wrote {cfg.output_dir} (flocked={summary['flocked']})")
            return 0
        paths = sorted(glob.glob(args.pattern))
        if not paths:
            print(f"error: no config matches {args.pattern!r}", file=sys.stderr)
            return 2
        configs = [_load(p) for p in paths]  # validate everything before running
        for path, cfg in zip(paths, configs):
            cfg = _apply_flags(cfg, args)
            base = args.output_dir if args.output_dir is not None else cfg.output_dir
            cfg = dataclasses.replace(cfg, output_dir=str(Path(base) / Path(path).stem))
            run(cfg)
            say(f"{path}: wrote {cfg.output_dir}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, SimulationError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
