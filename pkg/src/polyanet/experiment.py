"""Experiment configs, the run driver, and curve comparison.

A JSON config fully determines a run: network source, urn counts,
modes, horizon, replicate count and master seed.  Identical configs
produce byte-identical CSV artifacts.  Curve CSVs share the column
layout (time, urn-or-"avg", value, ...) so any two of them can be
compared on their network-average rows.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import chain, meanfield, montecarlo, networks
from .csvio import write_csv
from .errors import CapExceededError, ConfigError, UnstableSystemError
from .params import RawConfig, normalize

SCHEMA_VERSION = 1
MODES = (
    "exact",
    "montecarlo",
    "meanfield-nonlinear",
    "meanfield-linear",
    "equilibrium",
)
NETWORK_KINDS = (
    "barabasi-albert",
    "ring",
    "complete",
    "identity",
    "matrix",
    "matrix-file",
)


@dataclass
class ExperimentConfig:
    raw: RawConfig
    modes: list[str]
    t_max: int
    replicates: int
    master_seed: int
    out_prefix: str
    threads: int = 1
    exact_cap_bits: int = chain.DEFAULT_CAP_BITS
    network_spec: dict = field(default_factory=dict)


def resolve_network(spec, base_dir: str = ".") -> np.ndarray:
    """Build the interaction matrix described by a config's network entry."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("network", "must be an object with a 'kind' entry")
    kind = spec["kind"]
    if kind not in NETWORK_KINDS:
        raise ConfigError("network.kind", f"unknown kind {kind!r}; options: {NETWORK_KINDS}")
    try:
        if kind == "matrix":
            return networks.row_normalize(np.asarray(spec["values"], dtype=float), 0.0) \
                if spec.get("normalize", False) else \
                _checked(np.asarray(spec["values"], dtype=float))
        if kind == "matrix-file":
            path = spec["path"]
            if not os.path.isabs(path):
                path = os.path.join(base_dir, path)
            return _checked(networks.load_matrix(path))
        nodes = int(spec["nodes"])
        if kind == "ring":
            return networks.ring(nodes)
        if kind == "identity":
            return networks.identity(nodes)
        self_weight = float(spec.get("self_weight", 1.0))
        if kind == "complete":
            return networks.row_normalize(networks.complete(nodes), self_weight)
        adj = networks.barabasi_albert(nodes, int(spec.get("attach", 2)), int(spec.get("seed", 0)))
        return networks.row_normalize(adj, self_weight)
    except KeyError as exc:
        raise ConfigError("network", f"missing entry {exc.args[0]!r} for kind {kind!r}") from None
    except (ValueError, OSError) as exc:
        raise ConfigError("network", str(exc)) from None


def _checked(S: np.ndarray) -> np.ndarray:
    from .params import check_interaction_matrix

    return check_interaction_matrix(S)


def config_from_dict(data: dict, base_dir: str = ".") -> ExperimentConfig:
    """Validate a parsed JSON document into an :class:`ExperimentConfig`."""
    if not isinstance(data, dict):
        raise ConfigError("config", "top level must be a JSON object")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(
            "schema_version", f"expected {SCHEMA_VERSION}, got {version!r}"
        )
    S = resolve_network(data.get("network"), base_dir)
    missing = [
        k
        for k in ("memory", "initial_red", "initial_total", "reinforce_red",
                  "reinforce_black", "modes", "out_prefix")
        if k not in data
    ]
    if missing:
        raise ConfigError(missing[0], "required entry is missing")
    try:
        raw = RawConfig(
            memory=data["memory"],
            initial_red=data["initial_red"],
            initial_total=data["initial_total"],
            reinforce_red=data["reinforce_red"],
            reinforce_black=data["reinforce_black"],
            interaction=S,
        )
    except ValueError as exc:
        raise ConfigError("urns", str(exc)) from None
    if np.all(raw.reinforce_red + raw.reinforce_black == 0):
        raise ConfigError("reinforce_red", "reinforcement is zero for every urn")
    modes = data["modes"]
    if not isinstance(modes, list) or not modes:
        raise ConfigError("modes", "must be a nonempty list")
    for m in modes:
        if m not in MODES:
            raise ConfigError("modes", f"unknown mode {m!r}; options: {MODES}")
    t_max = int(data.get("t_max", 1000))
    if t_max < 1:
        raise ConfigError("t_max", "must be at least 1")
    replicates = int(data.get("replicates", 100))
    if replicates < 1:
        raise ConfigError("replicates", "must be at least 1")
    cap = int(data.get("exact_cap_bits", chain.DEFAULT_CAP_BITS))
    cfg = ExperimentConfig(
        raw=raw,
        modes=list(modes),
        t_max=t_max,
        replicates=replicates,
        master_seed=int(data.get("master_seed", 0)),
        out_prefix=str(data["out_prefix"]),
        threads=int(data.get("threads", 1)),
        exact_cap_bits=cap,
        network_spec=dict(data.get("network", {})),
    )
    return cfg


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON in {path}: {exc}") from None
    return config_from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Serializable echo of a config (network given as explicit matrix
    when no generator spec is available)."""
    network = dict(cfg.network_spec) if cfg.network_spec else {
        "kind": "matrix",
        "values": cfg.raw.interaction.tolist(),
    }
    return {
        "schema_version": SCHEMA_VERSION,
        "network": network,
        "memory": cfg.raw.memory,
        "initial_red": cfg.raw.initial_red.tolist(),
        "initial_total": cfg.raw.initial_total.tolist(),
        "reinforce_red": cfg.raw.reinforce_red.tolist(),
        "reinforce_black": cfg.raw.reinforce_black.tolist(),
        "modes": list(cfg.modes),
        "t_max": cfg.t_max,
        "replicates": cfg.replicates,
        "master_seed": cfg.master_seed,
        "out_prefix": cfg.out_prefix,
        "threads": cfg.threads,
        "exact_cap_bits": cfg.exact_cap_bits,
    }


def _exact_trajectory(cfg: ExperimentConfig) -> meanfield.InfectionTrajectory:
    params = normalize(cfg.raw)
    kernel = chain.build_kernel(params, cfg.raw.interaction, cap_bits=cfg.exact_cap_bits)
    mu = chain.point_mass(kernel, 0)
    N, M = params.n_urns, params.memory
    per = np.zeros((cfg.t_max, N))
    for t in range(1, cfg.t_max + 1):
        mu = kernel.apply(mu)
        for j in range(N):
            per[t - 1, j] = chain.marginal_infection(mu, j, M - 1, M)
    times = np.arange(1, cfg.t_max + 1)
    return meanfield.InfectionTrajectory(
        times=times, per_urn=per, network_avg=per.mean(axis=1), system="exact"
    )


def run(cfg: ExperimentConfig) -> dict:
    """Execute every requested mode; returns the summary dictionary.

    Artifacts land at ``{out_prefix}_{mode}.csv`` plus
    ``{out_prefix}_summary.json``.  The summary carries the config echo,
    per-mode artifact paths, the equilibrium report when requested, and
    pairwise sup-distances between the produced network-average curves
    on their common horizon.
    """
    artifacts: dict[str, str] = {}
    curves: dict[str, np.ndarray] = {}
    summary: dict = {
        "config": config_to_dict(cfg),
        "artifacts": artifacts,
        "spectral_radius": None,
        "equilibrium": None,
        "equilibrium_declined": False,
        "comparisons": {},
    }
    params = None
    needs_params = [m for m in cfg.modes if m != "montecarlo"]
    if needs_params:
        try:
            params = normalize(cfg.raw)
        except ValueError as exc:
            raise ConfigError("urns", str(exc)) from None
    S = cfg.raw.interaction
    for mode in cfg.modes:
        path = f"{cfg.out_prefix}_{mode}.csv"
        if mode == "montecarlo":
            summary_mc = montecarlo.average_replicates(
                cfg.raw, cfg.t_max, cfg.replicates, cfg.master_seed, jobs=cfg.threads
            )
            montecarlo.save_summary_csv(summary_mc, path)
            curves[mode] = summary_mc.network_avg
        elif mode == "exact":
            traj = _exact_trajectory(cfg)
            meanfield.save_trajectory_csv(traj, path)
            curves[mode] = traj.network_avg
        elif mode in ("meanfield-nonlinear", "meanfield-linear"):
            traj = meanfield.iterate(mode.split("-", 1)[1], params, S, cfg.t_max)
            meanfield.save_trajectory_csv(traj, path)
            curves[mode] = traj.network_avg
        elif mode == "equilibrium":
            system = meanfield.build_linear_system(params, S)
            try:
                eq = meanfield.equilibrium(system)
            except UnstableSystemError as exc:
                summary["spectral_radius"] = exc.radius
                summary["equilibrium_declined"] = True
                write_csv(path, ("urn", "value"), [("spectral_radius", exc.radius)])
            else:
                meanfield.save_equilibrium_csv(eq, path)
                summary["spectral_radius"] = eq.spectral_radius
                summary["equilibrium"] = [float(v) for v in eq.per_urn]
        artifacts[mode] = path
    names = sorted(curves)
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            horizon = min(len(curves[a]), len(curves[b]))
            gap = float(np.max(np.abs(curves[a][:horizon] - curves[b][:horizon])))
            summary["comparisons"][f"{a}|{b}"] = gap
    summary_path = f"{cfg.out_prefix}_summary.json"
    parent = os.path.dirname(os.path.abspath(summary_path))
    os.makedirs(parent, exist_ok=True)
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    summary["summary_path"] = summary_path
    return summary


# -- curve comparison ---------------------------------------------------------


@dataclass
class CompareReport:
    linf: float
    l1_mean: float
    final_abs_diff: float
    n_points: int


def read_curve(path: str) -> tuple[np.ndarray, np.ndarray]:
    """Times and network-average values from any curve CSV."""
    times, values = [], []
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or len(header) < 3 or header[0] != "time":
                raise ConfigError("curves", f"{path}: not a curve CSV (header {header})")
            for line in reader:
                if len(line) >= 3 and line[1] == "avg":
                    times.append(int(line[0]))
                    values.append(float(line[2]))
    except OSError as exc:
        raise ConfigError("curves", f"cannot read {path}: {exc}") from None
    if not times:
        raise ConfigError("curves", f"{path}: no network-average rows found")
    order = np.argsort(times)
    return np.asarray(times)[order], np.asarray(values)[order]


def compare_curves(path_a: str, path_b: str) -> CompareReport:
    """Sup, mean-absolute and final differences of two average curves.

    The two files must cover the same time grid; misaligned grids are a
    configuration error, not something to silently interpolate over.
    """
    ta, va = read_curve(path_a)
    tb, vb = read_curve(path_b)
    if ta.shape != tb.shape or np.any(ta != tb):
        raise ConfigError("curves", "time grids differ; curves are not comparable")
    diff = np.abs(va - vb)
    return CompareReport(
        linf=float(diff.max()),
        l1_mean=float(diff.mean()),
        final_abs_diff=float(diff[-1]),
        n_points=len(diff),
    )


# -- figure reproductions -----------------------------------------------------

FIGURE_SEED = 1789
_FIG_MODES = ["montecarlo", "meanfield-nonlinear", "meanfield-linear"]


def figure_setup(which: str, seed: int = FIGURE_SEED) -> dict:
    """Deterministic network and per-urn counts for a figure family.

    1: 100-node preferential-attachment network, totals 25, initial red
       1..10, reinforcement 30..50 red / 15..30 black.
    2: 10-node preferential-attachment network, totals 25, initial red
       2..9, reinforcement 20..28 red / 20..29 black.
    3: same 10-node network, homogeneous urns (12 red of 25, both
       reinforcements 11, so rho = 0.48 and delta = 0.44).

    Topologies beyond the node counts are a documented convention of
    this package: preferential attachment with 2 edges per node and a
    self weight of 1 before row normalization.
    """
    if which not in ("1", "2", "3"):
        raise ConfigError("figure", f"unknown figure {which!r}; options: 1, 2, 3")
    rng = np.random.default_rng([seed, int(which)])
    if which == "1":
        nodes = 100
        red = rng.integers(1, 11, nodes)
        add_red = rng.integers(30, 51, nodes)
        add_black = rng.integers(15, 31, nodes)
    elif which == "2":
        nodes = 10
        red = rng.integers(2, 10, nodes)
        add_red = rng.integers(20, 29, nodes)
        add_black = rng.integers(20, 30, nodes)
    else:
        nodes = 10
        red = np.full(nodes, 12)
        add_red = np.full(nodes, 11)
        add_black = np.full(nodes, 11)
    network = {
        "kind": "barabasi-albert",
        "nodes": nodes,
        "attach": 2,
        "seed": seed,
        "self_weight": 1.0,
    }
    return {
        "network": network,
        "initial_red": red.tolist(),
        "initial_total": [25] * nodes,
        "reinforce_red": add_red.tolist(),
        "reinforce_black": add_black.tolist(),
    }


def figure_configs(
    which: str,
    out_prefix: str,
    seed: int = FIGURE_SEED,
    t_max: int = 1000,
    replicates: int = 100,
    threads: int = 1,
) -> list[ExperimentConfig]:
    """One config per memory value M = 1, 2, 3 for a figure family."""
    base = figure_setup(which, seed)
    configs = []
    for memory in (1, 2, 3):
        data = {
            "schema_version": SCHEMA_VERSION,
            "memory": memory,
            "modes": list(_FIG_MODES),
            "t_max": t_max,
            "replicates": replicates,
            "master_seed": seed * 10 + memory,
            "out_prefix": f"{out_prefix}_m{memory}",
            "threads": threads,
            **base,
        }
        configs.append(config_from_dict(data))
    return configs
