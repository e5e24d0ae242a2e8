"""Attributed undirected graphs and datasets of them.

Edges are stored canonically as ``(u, v)`` with ``u < v``, sorted
lexicographically, in an ``(m, 2)`` integer array. Node features are an
``(n, d)`` float array, so the node count is always ``node_features.shape[0]``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np


@dataclass(eq=False)
class Graph:
    node_features: np.ndarray
    edges: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=np.int64))
    edge_weights: Optional[np.ndarray] = None
    graph_label: Optional[int] = None
    node_labels: Optional[np.ndarray] = None
    token_count: Optional[int] = None

    @property
    def num_nodes(self) -> int:
        return int(self.node_features.shape[0])

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    @property
    def feature_dim(self) -> int:
        return int(self.node_features.shape[1])

    @classmethod
    def from_edges(
        cls,
        node_features,
        edges: Iterable[Sequence[int]] = (),
        edge_weights: Optional[Iterable[float]] = None,
        **kwargs,
    ) -> "Graph":
        """Build a graph from arbitrary edge pairs.

        Pairs are canonicalised to ``u < v`` and sorted. Duplicates are merged
        (weights of duplicates are summed); self-loops are kept so that
        :func:`validate` can report them.
        """
        x = np.asarray(node_features, dtype=np.float64)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        pairs = [tuple(int(t) for t in e) for e in edges]
        weights = None if edge_weights is None else [float(w) for w in edge_weights]
        if weights is not None and len(weights) != len(pairs):
            raise ValueError("edge_weights length differs from edge count")
        merged: dict[tuple[int, int], float] = {}
        for i, (u, v) in enumerate(pairs):
            key = (min(u, v), max(u, v))
            merged[key] = merged.get(key, 0.0) + (1.0 if weights is None else weights[i])
        keys = sorted(merged)
        e = np.array(keys, dtype=np.int64).reshape(-1, 2)
        w = None if weights is None else np.array([merged[k] for k in keys], dtype=np.float64)
        node_labels = kwargs.pop("node_labels", None)
        if node_labels is not None:
            node_labels = np.asarray(node_labels, dtype=np.int64)
        return cls(x, e, w, node_labels=node_labels, **kwargs)

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(u), int(v)) for u, v in self.edges}

    def weight_map(self) -> dict[tuple[int, int], float]:
        if self.edge_weights is None:
            return {e: 1.0 for e in self.edge_set()}
        return {(int(u), int(v)): float(w) for (u, v), w in zip(self.edges, self.edge_weights)}

    def neighbors(self) -> list[list[int]]:
        """Adjacency lists, each sorted ascending."""
        adj: list[list[int]] = [[] for _ in range(self.num_nodes)]
        for u, v in self.edges:
            adj[int(u)].append(int(v))
            adj[int(v)].append(int(u))
        for a in adj:
            a.sort()
        return adj

    def adjacency_matrix(self) -> np.ndarray:
        """Dense unweighted 0/1 adjacency."""
        n = self.num_nodes
        a = np.zeros((n, n), dtype=np.float64)
        if self.num_edges:
            a[self.edges[:, 0], self.edges[:, 1]] = 1.0
            a[self.edges[:, 1], self.edges[:, 0]] = 1.0
        return a

    def replace(self, **changes) -> "Graph":
        return dataclasses.replace(self, **changes)

    def copy(self) -> "Graph":
        return Graph(
            self.node_features.copy(),
            self.edges.copy(),
            None if self.edge_weights is None else self.edge_weights.copy(),
            self.graph_label,
            None if self.node_labels is None else self.node_labels.copy(),
            self.token_count,
        )


@dataclass(eq=False)
class GraphDataset:
    graphs: list[Graph]
    name: str = "dataset"
    class_count: int = 1

    def __len__(self) -> int:
        return len(self.graphs)

    def __getitem__(self, i: int) -> Graph:
        return self.graphs[i]

    def __iter__(self):
        return iter(self.graphs)

    @property
    def labels(self) -> np.ndarray:
        return np.array([g.graph_label for g in self.graphs], dtype=np.int64)

    @property
    def feature_dim(self) -> int:
        return self.graphs[0].feature_dim if self.graphs else 0

    def with_graphs(self, graphs: list[Graph]) -> "GraphDataset":
        return GraphDataset(list(graphs), self.name, self.class_count)


def validate(graph: Graph) -> list[str]:
    """Return human-readable invariant violations; empty when the graph is valid."""
    problems: list[str] = []
    x = graph.node_features
    if not isinstance(x, np.ndarray) or x.ndim != 2:
        return ["node_features must be a 2-D matrix"]
    n = x.shape[0]
    e = np.asarray(graph.edges)
    if e.size and (e.ndim != 2 or e.shape[1] != 2):
        return ["edges must be an (m, 2) array"]
    e = e.reshape(-1, 2)
    seen: set[tuple[int, int]] = set()
    for i, (u, v) in enumerate(e.tolist()):
        if u == v:
            problems.append(f"self-loop at node {u} (edge {i})")
        if u < 0 or v < 0 or u >= n or v >= n:
            problems.append(f"endpoint out of range in edge {i}: ({u}, {v}) with n={n}")
        key = (min(u, v), max(u, v))
        if key in seen:
            problems.append(f"duplicate edge {key} (edge {i})")
        seen.add(key)
    if graph.edge_weights is not None:
        w = np.asarray(graph.edge_weights)
        if w.shape != (e.shape[0],):
            problems.append(f"edge_weights length {w.size} differs from edge count {e.shape[0]}")
        else:
            for i in np.flatnonzero(~(w > 0)):
                problems.append(f"non-positive edge weight at edge {int(i)}: {w[i]}")
    if graph.node_labels is not None and np.asarray(graph.node_labels).shape != (n,):
        problems.append(f"node_labels length differs from node count {n}")
    if graph.token_count is not None and graph.token_count < 1:
        problems.append(f"token_count must be positive, got {graph.token_count}")
    if not np.all(np.isfinite(x)):
        problems.append("node_features contain non-finite values")
    return problems


def degree(graph: Graph, node: int) -> int:
    if not 0 <= node < graph.num_nodes:
        raise IndexError(f"node {node} out of range for graph with {graph.num_nodes} nodes")
    if not graph.num_edges:
        return 0
    return int(np.count_nonzero(graph.edges == node))


def degrees(graph: Graph) -> np.ndarray:
    d = np.zeros(graph.num_nodes, dtype=np.int64)
    np.add.at(d, graph.edges.reshape(-1), 1)
    return d


def connected_components(graph: Graph) -> list[list[int]]:
    """Maximal connected node sets, each sorted, ordered by smallest member."""
    n = graph.num_nodes
    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for u, v in graph.edges.tolist():
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
    groups: dict[int, list[int]] = {}
    for a in range(n):
        groups.setdefault(find(a), []).append(a)
    return [groups[r] for r in sorted(groups)]


def induced_subgraph(graph: Graph, keep: Sequence[int]) -> Graph:
    """Subgraph on ``keep`` (sorted ascending), relabelled to ``0..len(keep)-1``."""
    keep = np.unique(np.asarray(keep, dtype=np.int64))
    remap = np.full(graph.num_nodes, -1, dtype=np.int64)
    remap[keep] = np.arange(keep.size)
    if graph.num_edges:
        mask = (remap[graph.edges[:, 0]] >= 0) & (remap[graph.edges[:, 1]] >= 0)
        edges = remap[graph.edges[mask]]
        weights = None if graph.edge_weights is None else graph.edge_weights[mask].copy()
    else:
        edges = np.zeros((0, 2), dtype=np.int64)
        weights = None if graph.edge_weights is None else np.zeros(0)
    return Graph(
        graph.node_features[keep].copy(),
        edges,
        weights,
        graph.graph_label,
        None if graph.node_labels is None else graph.node_labels[keep].copy(),
        graph.token_count,
    )


def with_edge_map(graph: Graph, weights: dict[tuple[int, int], float], **changes) -> Graph:
    """Copy of ``graph`` whose edge set is the keys of ``weights`` (canonical pairs)."""
    keys = sorted(weights)
    edges = np.array(keys, dtype=np.int64).reshape(-1, 2)
    w = None
    if graph.edge_weights is not None:
        w = np.array([weights[k] for k in keys], dtype=np.float64)
    return graph.replace(edges=edges, edge_weights=w, **changes)


def structurally_equal(a: Graph, b: Graph) -> bool:
    """Bit-exact equality of every field."""

    def same(x, y) -> bool:
        if x is None or y is None:
            return x is None and y is None
        x, y = np.asarray(x), np.asarray(y)
        return x.shape == y.shape and x.dtype.kind == y.dtype.kind and np.array_equal(x, y)

    return (
        same(a.node_features, b.node_features)
        and same(a.edges.reshape(-1, 2), b.edges.reshape(-1, 2))
        and same(a.edge_weights, b.edge_weights)
        and same(a.node_labels, b.node_labels)
        and a.graph_label == b.graph_label
        and a.token_count == b.token_count
    )


def disjoint_union(a: Graph, b: Graph) -> Graph:
    """Place ``b``'s nodes after ``a``'s; features must share a dimension."""
    edges = np.vstack([a.edges.reshape(-1, 2), b.edges.reshape(-1, 2) + a.num_nodes])
    weights = None
    if a.edge_weights is not None or b.edge_weights is not None:
        wa = a.edge_weights if a.edge_weights is not None else np.ones(a.num_edges)
        wb = b.edge_weights if b.edge_weights is not None else np.ones(b.num_edges)
        weights = np.concatenate([wa, wb])
    labels = None
    if a.node_labels is not None and b.node_labels is not None:
        labels = np.concatenate([a.node_labels, b.node_labels])
    return Graph(np.vstack([a.node_features, b.node_features]), edges, weights, a.graph_label, labels)


def permute_nodes(graph: Graph, perm: Sequence[int]) -> Graph:
    """Relabel nodes so that old node ``i`` becomes ``perm[i]``."""
    perm = np.asarray(perm, dtype=np.int64)
    inv = np.argsort(perm)
    weights = None if graph.edge_weights is None else graph.edge_weights
    g = Graph.from_edges(
        graph.node_features[inv],
        perm[graph.edges].tolist() if graph.num_edges else [],
        None if weights is None else weights.tolist(),
        graph_label=graph.graph_label,
        node_labels=None if graph.node_labels is None else graph.node_labels[inv],
        token_count=graph.token_count,
    )
    return g
