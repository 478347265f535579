"""Interaction-matrix builders and graph CSV import/export."""

from __future__ import annotations

import csv
import os

import numpy as np

from .csvio import write_csv
from .params import check_interaction_matrix


def barabasi_albert(n_nodes: int, attach: int, seed: int) -> np.ndarray:
    """Preferential-attachment graph as a symmetric 0/1 adjacency matrix.

    Starts from a complete graph on ``attach + 1`` nodes; every later
    node links to ``attach`` distinct existing nodes, chosen without
    replacement with probability proportional to current degree.  The
    same ``(n_nodes, attach, seed)`` always yields the same edge set.

    Parameters
    ----------
    n_nodes : int
        Total number of nodes, at least ``attach + 1``.
    attach : int
        Edges added per new node, at least 1.
    seed : int
        Seed for the attachment draws.
    """
    core = attach + 1
    if attach < 1:
        raise ValueError("attach must be at least 1")
    if n_nodes < core:
        raise ValueError(f"n_nodes must be at least attach + 1 = {core}")
    rng = np.random.default_rng(seed)
    adj = np.zeros((n_nodes, n_nodes))
    adj[:core, :core] = 1.0
    np.fill_diagonal(adj, 0.0)
    degree = adj.sum(axis=1)
    for u in range(core, n_nodes):
        weights = degree[:u].copy()
        targets = []
        for _ in range(attach):
            total = weights.sum()
            r = rng.random() * total
            j = int(np.searchsorted(np.cumsum(weights), r, side="right"))
            j = min(j, u - 1)
            targets.append(j)
            weights[j] = 0.0
        for j in targets:
            adj[u, j] = adj[j, u] = 1.0
            degree[j] += 1
        degree[u] = attach
    return adj


def ring(n_nodes: int) -> np.ndarray:
    """Directed cycle: urn i listens only to urn i+1 (mod n)."""
    if n_nodes < 2:
        raise ValueError("ring needs at least 2 nodes")
    S = np.zeros((n_nodes, n_nodes))
    for i in range(n_nodes):
        S[i, (i + 1) % n_nodes] = 1.0
    return S


def complete(n_nodes: int) -> np.ndarray:
    """Complete-graph adjacency (all ones off the diagonal)."""
    if n_nodes < 1:
        raise ValueError("complete needs at least 1 node")
    adj = np.ones((n_nodes, n_nodes))
    np.fill_diagonal(adj, 0.0)
    return adj


def identity(n_nodes: int) -> np.ndarray:
    """No interaction: every urn listens only to itself."""
    if n_nodes < 1:
        raise ValueError("identity needs at least 1 node")
    return np.eye(n_nodes)


def row_normalize(adjacency, self_weight: float = 0.0) -> np.ndarray:
    """Turn a weighted adjacency into a row-stochastic interaction matrix.

    Adds ``self_weight`` to every diagonal entry, then divides each row
    by its total.  A row whose total is zero (isolated node without a
    self loop) has no valid draw distribution and raises.
    """
    adj = np.asarray(adjacency, dtype=float)
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise ValueError("adjacency must be a square matrix")
    if np.any(adj < 0) or self_weight < 0:
        raise ValueError("weights must be nonnegative")
    work = adj + self_weight * np.eye(adj.shape[0])
    totals = work.sum(axis=1)
    if np.any(totals == 0):
        bad = int(np.argmin(totals))
        raise ValueError(f"row {bad} has zero total weight; cannot normalize")
    S = work / totals[:, None]
    return check_interaction_matrix(S)


def save_edge_list(adjacency, path: str) -> None:
    """Write the upper triangle of a symmetric adjacency as u,v,weight rows."""
    adj = np.asarray(adjacency, dtype=float)
    rows = []
    for u in range(adj.shape[0]):
        for v in range(u + 1, adj.shape[1]):
            if adj[u, v] != 0:
                rows.append((u, v, float(adj[u, v])))
    write_csv(path, ("u", "v", "weight"), rows)


def load_edge_list(path: str, n_nodes: int | None = None) -> np.ndarray:
    """Read a u,v,weight edge list back into a symmetric adjacency."""
    edges = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != ["u", "v", "weight"]:
            raise ValueError(f"{path}: expected header u,v,weight")
        for line in reader:
            if not line:
                continue
            edges.append((int(line[0]), int(line[1]), float(line[2])))
    if n_nodes is None:
        n_nodes = 1 + max((max(u, v) for u, v, _ in edges), default=-1)
    adj = np.zeros((n_nodes, n_nodes))
    for u, v, w in edges:
        adj[u, v] = adj[v, u] = w
    return adj


def save_matrix(matrix, path: str) -> None:
    """Dense CSV dump, one row per line, 17 significant digits."""
    mat = np.asarray(matrix, dtype=float)
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", newline="") as fh:
        for row in mat:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


def load_matrix(path: str) -> np.ndarray:
    mat = np.loadtxt(path, delimiter=",", ndmin=2)
    return np.asarray(mat, dtype=float)
