"""Stochastic simulation of the urn network.

States carry exact integer ball counts; normalization to [0, 1] happens
only in the draw probabilities.  The first M steps are a warm-up where
reinforcement accumulates without retirement (the urns grow); from step
M+1 on, the addition made M steps earlier is retired right after each
draw, so the total per urn is constant again.

Randomness is counter-based: replicate r of a run always consumes the
Philox stream keyed (master_seed, r), so results are independent of
scheduling and worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .csvio import write_csv
from .params import RawConfig, clamp_probability


@dataclass
class SimState:
    """Mutable per-run state: exact counts plus the circular draw window."""

    red: np.ndarray
    total: np.ndarray
    window: np.ndarray  # (N, M) most recent draws; column ``head`` is oldest
    head: int
    t: int


def new_state(config: RawConfig) -> SimState:
    return SimState(
        red=config.initial_red.copy(),
        total=config.initial_total.copy(),
        window=np.zeros((config.n_urns, config.memory), dtype=np.int8),
        head=0,
        t=0,
    )


def red_ratios(state: SimState) -> np.ndarray:
    return state.red / state.total


def step(state: SimState, config: RawConfig, rng: np.random.Generator):
    """Advance one epoch; returns the mutated state and the new draws.

    All N draws are sampled simultaneously from the pre-step red
    fractions, reinforcement is added, and once past the warm-up the
    addition from M steps back is retired.
    """
    probs = clamp_probability(
        config.interaction @ (state.red / state.total), what="draw probability"
    )
    draws = (rng.random(config.n_urns) < probs).astype(np.int8)
    t_next = state.t + 1
    if t_next > config.memory:
        old = state.window[:, state.head].astype(np.int64)
        state.red -= config.reinforce_red * old
        state.total -= config.reinforce_red * old + config.reinforce_black * (1 - old)
    add = draws.astype(np.int64)
    state.red += config.reinforce_red * add
    state.total += config.reinforce_red * add + config.reinforce_black * (1 - add)
    state.window[:, state.head] = draws
    state.head = (state.head + 1) % config.memory
    state.t = t_next
    return state, draws


def replicate_stream(master_seed: int, replicate: int) -> np.random.Generator:
    """Independent deterministic stream for one replicate."""
    key = np.array(
        [master_seed & 0xFFFFFFFFFFFFFFFF, replicate], dtype=np.uint64
    )
    return np.random.Generator(np.random.Philox(key=key))


@dataclass
class Trajectory:
    """One simulated run; row t-1 holds time t (t = 1..t_max)."""

    draws: np.ndarray  # (T, N) 0/1
    ratios: np.ndarray  # (T, N) red fraction after the time-t update


def simulate(config: RawConfig, t_max: int, seed) -> Trajectory:
    """Run one trajectory; the same seed reproduces it bit for bit.

    ``seed`` may be an integer (mapped to replicate stream 0) or a
    ready-made numpy Generator.
    """
    if t_max < 1:
        raise ValueError("t_max must be at least 1")
    rng = seed if isinstance(seed, np.random.Generator) else replicate_stream(int(seed), 0)
    state = new_state(config)
    draws = np.empty((t_max, config.n_urns), dtype=np.int8)
    ratios = np.empty((t_max, config.n_urns))
    for t in range(t_max):
        state, z = step(state, config, rng)
        draws[t] = z
        ratios[t] = state.red / state.total
    return Trajectory(draws=draws, ratios=ratios)


def empirical_sum(trajectory) -> np.ndarray:
    """Running per-urn draw averages (1/t) * sum_{n<=t} Z_n, shape (T, N)."""
    z = np.asarray(getattr(trajectory, "draws", trajectory), dtype=float)
    return np.cumsum(z, axis=0) / np.arange(1, z.shape[0] + 1)[:, None]


@dataclass
class ReplicateSummary:
    """Replicate-averaged running draw averages."""

    times: np.ndarray
    per_urn: np.ndarray  # (T, N), mean over replicates
    network_avg: np.ndarray  # (T,)
    replicates: int
    master_seed: int


def _replicate_part(config: RawConfig, t_max: int, master_seed: int, r: int) -> np.ndarray:
    traj = simulate(config, t_max, replicate_stream(master_seed, r))
    return empirical_sum(traj.draws)


def average_replicates(
    config: RawConfig,
    t_max: int,
    replicates: int,
    master_seed: int,
    jobs: int = 1,
) -> ReplicateSummary:
    """Mean over seeded replicates of the running draw averages.

    Replicate r always consumes stream (master_seed, r) and the
    reduction runs in replicate order, so the summary is identical for
    any ``jobs`` value.
    """
    if replicates < 1:
        raise ValueError("replicates must be at least 1")
    acc = np.zeros((t_max, config.n_urns))
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = pool.map(
                _replicate_part,
                (config for _ in range(replicates)),
                (t_max for _ in range(replicates)),
                (master_seed for _ in range(replicates)),
                range(replicates),
            )
            for part in parts:
                acc += part
    else:
        for r in range(replicates):
            acc += _replicate_part(config, t_max, master_seed, r)
    per_urn = acc / replicates
    return ReplicateSummary(
        times=np.arange(1, t_max + 1),
        per_urn=per_urn,
        network_avg=per_urn.mean(axis=1),
        replicates=replicates,
        master_seed=master_seed,
    )


def save_summary_csv(summary: ReplicateSummary, path: str) -> None:
    """Curve CSV: time, urn (or "avg"), empirical_sum, replicate_count."""

    def rows():
        n = summary.per_urn.shape[1]
        for k, t in enumerate(summary.times):
            for j in range(n):
                yield (int(t), j, float(summary.per_urn[k, j]), summary.replicates)
            yield (int(t), "avg", float(summary.network_avg[k]), summary.replicates)

    write_csv(path, ("time", "urn", "empirical_sum", "replicate_count"), rows())
