"""Exact analysis of the expanded draw chain.

The network draw process with memory M over N urns is a first-order
Markov chain on 2**(N*M) states once each state records the last M
draws of every urn.  A state is packed into one integer with the layout

    bit (urn * M + lag)  =  draw of ``urn`` at window position ``lag``,

where lag 0 is the oldest remembered draw and lag M-1 the most recent
one.  Every exporter and consumer in the package shares this layout.

A transition from ``a`` to ``b`` is possible only when each urn's
window shifts by one (b's first M-1 positions repeat a's last M-1); the
probability is then a product over urns of red/black factors computed
from ``a``'s per-urn red fractions mixed through the interaction
matrix.  Each state therefore has at most 2**N successors, which is
what :class:`TransitionKernel` enumerates on the fly instead of storing
a dense matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from .csvio import write_csv
from .errors import CapExceededError, ConvergenceError
from .params import (
    NetworkParams,
    check_interaction_matrix,
    clamp_probability,
    red_ratio_table,
)

DEFAULT_CAP_BITS = 24
SPARSE_NNZ_CAP = 1 << 26
_CHUNK_TARGET = 1 << 21
DIST_SUM_TOL = 1e-10


def state_bit(urn: int, lag: int, memory: int) -> int:
    """Bit position of (urn, lag) in the packed state; lag 0 is oldest."""
    return urn * memory + lag


def _popcounts(memory: int) -> np.ndarray:
    return np.array([bin(v).count("1") for v in range(1 << memory)], dtype=np.int64)


class TransitionKernel:
    """One-step transition operator applied without materialization.

    ``apply`` pushes a distribution forward by enumerating, per source
    state, the 2**N reachable successors; ``to_sparse`` materializes the
    same data as a CSR matrix when the nonzero count stays under
    ``SPARSE_NNZ_CAP``.
    """

    def __init__(self, params: NetworkParams, S, cap_bits: int = DEFAULT_CAP_BITS):
        S = check_interaction_matrix(S)
        if S.shape[0] != params.n_urns:
            raise ValueError(
                f"interaction matrix is {S.shape[0]}x{S.shape[0]} but params "
                f"describe {params.n_urns} urns"
            )
        bits = params.n_urns * params.memory
        if bits > cap_bits:
            raise CapExceededError(
                f"state space needs {bits} bits ({params.n_urns} urns x memory "
                f"{params.memory}); cap is {cap_bits}"
            )
        self.params = params
        self.S = S
        self.n_urns = params.n_urns
        self.memory = params.memory
        self.n_bits = bits
        self.n_states = 1 << bits

        N, M = self.n_urns, self.memory
        self._ratios = red_ratio_table(params)  # (N, M+1)
        self._field_mask = (1 << M) - 1
        self._pop = _popcounts(M)
        # Positions receiving the fresh draws: the newest lag of each urn.
        self._new_mask = sum(1 << (d * M + M - 1) for d in range(N))
        self._keep_mask = ((1 << bits) - 1) & ~self._new_mask
        draws = np.arange(1 << N, dtype=np.int64)
        offsets = np.zeros(1 << N, dtype=np.int64)
        for d in range(N):
            offsets += ((draws >> d) & 1) << (d * M + M - 1)
        self._draw_offsets = offsets
        # Chunked enumeration keeps chunk * 2**N workspace bounded.
        self._chunk = max(1, _CHUNK_TARGET >> N)

    # -- per-state quantities -------------------------------------------------

    def window_counts(self, states) -> np.ndarray:
        """Red draws per urn window for each packed state, shape (len, N)."""
        states = np.asarray(states, dtype=np.int64)
        counts = np.empty(states.shape + (self.n_urns,), dtype=np.int64)
        for j in range(self.n_urns):
            field = (states >> (j * self.memory)) & self._field_mask
            counts[..., j] = self._pop[field]
        return counts

    def draw_probabilities(self, states) -> np.ndarray:
        """Red-draw probability of every urn out of each state, shape (len, N)."""
        counts = self.window_counts(states)
        urns = np.arange(self.n_urns)
        ratios = self._ratios[urns[None, :], counts]
        return clamp_probability(ratios @ self.S.T, what="draw probability")

    # -- operator -------------------------------------------------------------

    def apply(self, mu: np.ndarray) -> np.ndarray:
        """Push a distribution one step forward (row-vector times kernel)."""
        mu = np.asarray(mu, dtype=float)
        if mu.shape != (self.n_states,):
            raise ValueError(f"distribution must have length {self.n_states}")
        out = np.zeros(self.n_states)
        n_draws = 1 << self.n_urns
        for start in range(0, self.n_states, self._chunk):
            states = np.arange(
                start, min(start + self._chunk, self.n_states), dtype=np.int64
            )
            mass = mu[states]
            probs = self.draw_probabilities(states)
            shifted = (states >> 1) & self._keep_mask
            factors = np.ones((len(states), 1))
            for d in range(self.n_urns):
                p = probs[:, d : d + 1]
                factors = np.concatenate([factors * (1.0 - p), factors * p], axis=1)
            succ = shifted[:, None] + self._draw_offsets[None, :]
            contrib = mass[:, None] * factors
            out += np.bincount(
                succ.ravel(), weights=contrib.ravel(), minlength=self.n_states
            )
        return out

    def successors(self, state: int):
        """Successor indices and probabilities of one state (zeros dropped)."""
        states = np.array([state], dtype=np.int64)
        probs = self.draw_probabilities(states)[0]
        shifted = (int(state) >> 1) & self._keep_mask
        n_draws = 1 << self.n_urns
        vals = np.ones(n_draws)
        for d in range(self.n_urns):
            bit = (np.arange(n_draws) >> d) & 1
            vals *= np.where(bit == 1, probs[d], 1.0 - probs[d])
        idx = shifted + self._draw_offsets
        keep = vals > 0.0
        return idx[keep], vals[keep]

    def to_sparse(self) -> sp.csr_matrix:
        """Materialize the kernel as CSR; at most 2**N entries per row."""
        nnz = self.n_states << self.n_urns
        if nnz > SPARSE_NNZ_CAP:
            raise CapExceededError(
                f"materializing {nnz} entries exceeds cap {SPARSE_NNZ_CAP}"
            )
        rows, cols, vals = [], [], []
        n_draws = 1 << self.n_urns
        bitcols = (np.arange(n_draws)[None, :] >> np.arange(self.n_urns)[:, None]) & 1
        for start in range(0, self.n_states, self._chunk):
            states = np.arange(
                start, min(start + self._chunk, self.n_states), dtype=np.int64
            )
            probs = self.draw_probabilities(states)
            shifted = (states >> 1) & self._keep_mask
            factors = np.ones((len(states), 1))
            for d in range(self.n_urns):
                p = probs[:, d : d + 1]
                factors = np.concatenate([factors * (1.0 - p), factors * p], axis=1)
            succ = shifted[:, None] + self._draw_offsets[None, :]
            src = np.repeat(states, n_draws)
            keep = factors.ravel() > 0.0
            rows.append(src[keep])
            cols.append(succ.ravel()[keep])
            vals.append(factors.ravel()[keep])
        del bitcols
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.n_states, self.n_states),
        )


def build_kernel(params: NetworkParams, S, cap_bits: int = DEFAULT_CAP_BITS) -> TransitionKernel:
    return TransitionKernel(params, S, cap_bits=cap_bits)


def transition_prob(a: int, b: int, params: NetworkParams, S) -> float:
    """Probability of moving from packed state ``a`` to ``b`` in one step.

    Returns 0.0 when the windows of ``b`` are not one-step shifts of the
    windows of ``a``.  Heterogeneous parameters are supported: urn d's
    red probability mixes every urn's current red fraction through row d
    of the interaction matrix.
    """
    S = check_interaction_matrix(S)
    N, M = params.n_urns, params.memory
    if S.shape[0] != N:
        raise ValueError("interaction matrix size does not match params")
    n_states = 1 << (N * M)
    if not (0 <= a < n_states and 0 <= b < n_states):
        raise ValueError(f"states must lie in [0, {n_states})")
    field_mask = (1 << M) - 1
    low_mask = field_mask >> 1
    ratios = np.empty(N)
    table = red_ratio_table(params)
    new_draws = np.empty(N, dtype=np.int64)
    for j in range(N):
        a_field = (a >> (j * M)) & field_mask
        b_field = (b >> (j * M)) & field_mask
        if (b_field & low_mask) != (a_field >> 1):
            return 0.0
        ratios[j] = table[j, bin(a_field).count("1")]
        new_draws[j] = (b_field >> (M - 1)) & 1
    probs = clamp_probability(S @ ratios, what="draw probability")
    factors = np.where(new_draws == 1, probs, 1.0 - probs)
    return float(np.prod(factors))


def _check_distribution(mu: np.ndarray, n_states: int) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (n_states,):
        raise ValueError(f"distribution must have length {n_states}")
    if np.any(mu < 0):
        raise ValueError("distribution entries must be nonnegative")
    if abs(mu.sum() - 1.0) > DIST_SUM_TOL:
        raise ValueError(f"distribution sums to {mu.sum()!r}, not 1")
    return mu


def stationary_distribution(
    kernel: TransitionKernel,
    tol: float = 1e-12,
    max_iters: int = 10**6,
    start=None,
) -> np.ndarray:
    """Stationary law by power iteration.

    Iterates ``mu <- mu @ Q`` until the sup-norm residual drops to
    ``tol``.  The chain must have a unique stationary law for the result
    to be start-independent; homogeneous networks with positive
    reinforcement always do, and :func:`check_irreducible_aperiodic`
    certifies arbitrary ones.
    """
    if start is None:
        mu = np.full(kernel.n_states, 1.0 / kernel.n_states)
    else:
        mu = _check_distribution(start, kernel.n_states).copy()
    for _ in range(max_iters):
        nxt = kernel.apply(mu)
        resid = float(np.max(np.abs(nxt - mu)))
        if resid <= tol:
            return mu
        mu = nxt / nxt.sum()
    raise ConvergenceError(
        f"power iteration did not reach tol={tol} in {max_iters} iterations "
        f"(last residual {resid:.3e})"
    )


def evolve_distribution(kernel: TransitionKernel, mu0, steps: int) -> np.ndarray:
    """Distribution after ``steps`` applications of the kernel."""
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    mu = _check_distribution(mu0, kernel.n_states).copy()
    for _ in range(steps):
        mu = kernel.apply(mu)
    return mu


def point_mass(kernel: TransitionKernel, state: int = 0) -> np.ndarray:
    """Distribution concentrated on one packed state (default: all zeros)."""
    if not 0 <= state < kernel.n_states:
        raise ValueError("state out of range")
    mu = np.zeros(kernel.n_states)
    mu[state] = 1.0
    return mu


def marginal_infection(mu, urn: int, lag: int, memory: int) -> float:
    """P(draw of ``urn`` at window position ``lag`` is red) under ``mu``.

    ``len(mu)`` must be ``2**(N*memory)`` for some integer N; the bit
    probed is ``urn * memory + lag`` with lag 0 the oldest position.
    """
    mu = np.asarray(mu, dtype=float)
    bits = int(np.log2(mu.shape[0]) + 0.5)
    if (1 << bits) != mu.shape[0] or bits % memory != 0:
        raise ValueError("distribution length is not 2**(N*memory)")
    n_urns = bits // memory
    if not 0 <= urn < n_urns:
        raise ValueError(f"urn index {urn} out of range for {n_urns} urns")
    if not 0 <= lag < memory:
        raise ValueError(f"lag {lag} out of range for memory {memory}")
    bit = state_bit(urn, lag, memory)
    total = 0.0
    chunk = 1 << 20
    for start in range(0, mu.shape[0], chunk):
        states = np.arange(start, min(start + chunk, mu.shape[0]), dtype=np.int64)
        mask = ((states >> bit) & 1) == 1
        total += float(mu[states[mask]].sum())
    return total


def two_fold_joint(pi, kernel: TransitionKernel, urn: int) -> np.ndarray:
    """Joint law of (current draw, next draw) for one urn, memory 1 only.

    Entry [a, b] is the stationary probability that the urn's draw is
    ``a`` now and ``b`` one step later; computed from ``pi`` and the
    per-state red probabilities, no simulation involved.
    """
    if kernel.memory != 1:
        raise ValueError("two_fold_joint is defined for memory 1")
    if not 0 <= urn < kernel.n_urns:
        raise ValueError(f"urn index {urn} out of range")
    pi = _check_distribution(pi, kernel.n_states)
    joint = np.zeros((2, 2))
    chunk = kernel._chunk
    for start in range(0, kernel.n_states, chunk):
        states = np.arange(start, min(start + chunk, kernel.n_states), dtype=np.int64)
        p = kernel.draw_probabilities(states)[:, urn]
        now = (states >> urn) & 1
        w = pi[states]
        for a in (0, 1):
            sel = now == a
            joint[a, 1] += float((w[sel] * p[sel]).sum())
            joint[a, 0] += float((w[sel] * (1.0 - p[sel])).sum())
    return joint


@dataclass
class KernelStructure:
    """Certificate produced by :func:`check_irreducible_aperiodic`.

    ``diameter`` is the longest shortest path when small enough to
    compute; for homogeneous networks with positive reinforcement it is
    at most the memory M (any window content can be rewritten in M
    draws).
    """

    irreducible: bool
    aperiodic: bool
    period: int | None
    n_components: int
    diameter: int | None

    @property
    def ok(self) -> bool:
        return self.irreducible and self.aperiodic

    def __bool__(self) -> bool:
        return self.ok


def check_irreducible_aperiodic(
    kernel: TransitionKernel, diameter_limit: int = 4096
) -> KernelStructure:
    """Structural check of the chain via its directed transition graph.

    Strong connectivity gives irreducibility; the gcd of level
    differences along edges from a breadth-first search gives the
    period of the class reachable from state 0.
    """
    Q = kernel.to_sparse()
    n_comp, _ = csgraph.connected_components(Q, directed=True, connection="strong")
    irreducible = n_comp == 1
    dist = csgraph.shortest_path(Q, method="D", unweighted=True, indices=0)
    coo = Q.tocoo()
    reach = np.isfinite(dist[coo.row]) & np.isfinite(dist[coo.col])
    diffs = (dist[coo.row[reach]] + 1 - dist[coo.col[reach]]).astype(np.int64)
    period = int(np.gcd.reduce(np.abs(diffs))) if diffs.size else None
    aperiodic = bool(irreducible and period == 1)
    diameter = None
    if irreducible and kernel.n_states <= diameter_limit:
        all_dist = csgraph.shortest_path(Q, method="D", unweighted=True)
        diameter = int(all_dist.max())
    return KernelStructure(
        irreducible=irreducible,
        aperiodic=aperiodic,
        period=period,
        n_components=int(n_comp),
        diameter=diameter,
    )


def save_distribution_csv(mu, path: str) -> None:
    """Rows of (packed state index, probability)."""
    mu = np.asarray(mu, dtype=float)
    write_csv(path, ("state", "probability"), ((i, float(v)) for i, v in enumerate(mu)))


def save_kernel_csv(kernel: TransitionKernel, path: str) -> None:
    """Materialized transitions as (from_state, to_state, probability) rows."""
    Q = kernel.to_sparse().tocoo()
    order = np.lexsort((Q.col, Q.row))
    rows = (
        (int(Q.row[k]), int(Q.col[k]), float(Q.data[k])) for k in order
    )
    write_csv(path, ("from_state", "to_state", "probability"), rows)
