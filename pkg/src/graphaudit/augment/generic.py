"""Domain-agnostic graph augmentations: node dropping, edge perturbation,
attribute masking and subgraph removal.

Counts are ``floor(ratio * size)``; see :func:`count`.
"""

from __future__ import annotations

import math

import numpy as np

from ..graph import Graph, connected_components, induced_subgraph, with_edge_map
from ..rng import make_rng


def count(ratio: float, size: int) -> int:
    """``floor(ratio * size)``, robust to float noise such as ``0.29 * 100``."""
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"ratio must lie in [0, 1], got {ratio}")
    return int(math.floor(ratio * size + 1e-9))


def node_drop(graph: Graph, ratio: float, seed: int) -> Graph:
    n = graph.num_nodes
    m = min(n - 1, count(ratio, n))
    if m <= 0:
        return graph.copy()
    rng = make_rng(seed)
    dropped = rng.choice(n, size=m, replace=False)
    keep = np.setdiff1d(np.arange(n), dropped)
    return induced_subgraph(graph, keep)


def non_edges(graph: Graph) -> np.ndarray:
    """All canonical pairs ``u < v`` that are not edges, in lexicographic order."""
    n = graph.num_nodes
    iu, iv = np.triu_indices(n, k=1)
    adj = graph.adjacency_matrix()
    mask = adj[iu, iv] == 0
    return np.stack([iu[mask], iv[mask]], axis=1).astype(np.int64)


def edge_perturb(graph: Graph, ratio: float, seed: int) -> Graph:
    """Remove ``floor(ratio * |E|)`` edges, then add as many (at most) from the
    original graph's non-edges."""
    r = count(ratio, graph.num_edges)
    if r == 0:
        return graph.copy()
    rng = make_rng(seed)
    candidates = non_edges(graph)
    removed = rng.choice(graph.num_edges, size=r, replace=False)
    a = min(r, candidates.shape[0])
    added = rng.choice(candidates.shape[0], size=a, replace=False) if a else []
    weights = graph.weight_map()
    for i in removed:
        del weights[(int(graph.edges[i, 0]), int(graph.edges[i, 1]))]
    for i in added:
        weights[(int(candidates[i, 0]), int(candidates[i, 1]))] = 1.0
    return with_edge_map(graph.copy(), weights)


def attribute_mask(graph: Graph, ratio: float, seed: int, mask_value: float = 0.0) -> Graph:
    m = count(ratio, graph.num_nodes)
    out = graph.copy()
    if m == 0:
        return out
    rng = make_rng(seed)
    rows = rng.choice(graph.num_nodes, size=m, replace=False)
    out.node_features[rows] = mask_value
    return out


def subgraph_sample(graph: Graph, ratio: float, seed: int) -> Graph:
    """Remove a random-walk subgraph covering ``max(1, floor(ratio * n))`` nodes.

    The walk starts at a uniform node and moves to uniform neighbours; once
    its component is exhausted it restarts at a uniform unvisited node.
    """
    n = graph.num_nodes
    if n < 2:
        raise ValueError("subgraph sampling needs at least 2 nodes")
    t = max(1, count(ratio, n))
    if t >= n:
        raise ValueError(f"ratio {ratio} would remove all {n} nodes")
    rng = make_rng(seed)
    adj = graph.neighbors()
    comp_of = np.empty(n, dtype=np.int64)
    comps = connected_components(graph)
    for ci, c in enumerate(comps):
        comp_of[c] = ci
    remaining = np.array([len(c) for c in comps])

    visited = np.zeros(n, dtype=bool)

    def visit(v: int) -> None:
        visited[v] = True
        remaining[comp_of[v]] -= 1

    current = int(rng.integers(n))
    visit(current)
    taken = 1
    while taken < t:
        if remaining[comp_of[current]] == 0:
            unvisited = np.flatnonzero(~visited)
            current = int(unvisited[rng.integers(unvisited.size)])
        else:
            nb = adj[current]
            current = nb[int(rng.integers(len(nb)))]
        if not visited[current]:
            visit(current)
            taken += 1
    return induced_subgraph(graph, np.flatnonzero(~visited))
