"""Context-aware augmentations.

Text: sentences become co-occurrence graphs (unique words as nodes, word
vectors as features) and the four EDA text edits are applied directly in
graph space. Strength scales with the sentence length stored in
``Graph.token_count``, falling back to the node count.

Images: super-pixel graphs with ``[intensity, x, y]`` features are colorized
by tinting intensity with one random RGB colour per graph.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np

from ..graph import Graph, with_edge_map
from ..io import Document, EmbeddingTable
from ..rng import derive_seed, make_rng
from .generic import count


@dataclass
class ContextAugConfig:
    synonym_ratio: float = 0.05
    delete_ratio: float = 0.10
    insert_ratio: float = 0.05
    swap_ratio: float = 0.05
    seed: int = 0

    def __post_init__(self):
        for name in ("synonym_ratio", "delete_ratio", "insert_ratio", "swap_ratio"):
            r = getattr(self, name)
            if not 0.0 <= r <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {r}")

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "ContextAugConfig":
        """Parse ``synonym=0.05,delete=0.10,insert=0.05,swap=0.05`` (missing keys keep defaults)."""
        keys = {"synonym": "synonym_ratio", "delete": "delete_ratio",
                "insert": "insert_ratio", "swap": "swap_ratio"}
        kwargs = {}
        for item in filter(None, (s.strip() for s in text.split(","))):
            k, sep, v = item.partition("=")
            if not sep or k.strip() not in keys:
                raise ValueError(f"bad config item {item!r}; expected one of {sorted(keys)}=<ratio>")
            kwargs[keys[k.strip()]] = float(v)
        return cls(seed=seed, **kwargs)


def _strength(graph: Graph, ratio: float) -> int:
    size = graph.token_count if graph.token_count is not None else graph.num_nodes
    return count(ratio, size)


def build_cooccurrence(doc: Document, window: int, table: EmbeddingTable) -> Graph:
    """Co-occurrence graph of one document.

    Nodes are unique tokens in first-occurrence order. Every run of ``window``
    consecutive tokens (the whole document if it is shorter) links each pair
    of distinct words in it; an edge's weight is the number of windows in
    which the pair co-occurs.
    """
    if window < 2:
        raise ValueError(f"window must be at least 2, got {window}")
    tokens = doc.tokens
    if not tokens:
        raise ValueError("document has no tokens")
    index: dict[str, int] = {}
    for t in tokens:
        index.setdefault(t, len(index))
    ids = [index[t] for t in tokens]
    weights: dict[tuple[int, int], float] = {}
    for start in range(max(1, len(ids) - window + 1)):
        present = sorted(set(ids[start : start + window]))
        for u, v in combinations(present, 2):
            weights[(u, v)] = weights.get((u, v), 0.0) + 1.0
    features = np.array([table.vector(t) for t in index], dtype=np.float64).reshape(len(index), table.dim)
    keys = sorted(weights)
    return Graph(
        features,
        np.array(keys, dtype=np.int64).reshape(-1, 2),
        np.array([weights[k] for k in keys], dtype=np.float64),
        graph_label=doc.label,
        token_count=len(tokens),
    )


def _check_table(graph: Graph, table: EmbeddingTable) -> None:
    if len(table) == 0:
        raise ValueError("embedding table is empty")
    if graph.feature_dim != table.dim:
        raise ValueError(f"feature dimension {graph.feature_dim} does not match table dimension {table.dim}")


def nearest_word_vector(feature: np.ndarray, table: EmbeddingTable) -> Optional[np.ndarray]:
    """Table row with the highest cosine similarity to ``feature``, excluding
    rows exactly equal to it and zero rows. ``None`` if ``feature`` is zero or
    nothing is eligible."""
    norm = np.linalg.norm(feature)
    if norm == 0:
        return None
    vecs = table.vectors
    norms = np.linalg.norm(vecs, axis=1)
    eligible = (norms > 0) & ~np.all(vecs == feature, axis=1)
    if not eligible.any():
        return None
    cos = np.full(len(table), -np.inf)
    cos[eligible] = vecs[eligible] @ feature / (norms[eligible] * norm)
    return vecs[int(np.argmax(cos))]


def synonym_replace(graph: Graph, ratio: float, table: EmbeddingTable, seed: int) -> Graph:
    _check_table(graph, table)
    m = min(graph.num_nodes, _strength(graph, ratio))
    out = graph.copy()
    if m == 0:
        return out
    rng = make_rng(seed)
    for v in rng.choice(graph.num_nodes, size=m, replace=False):
        replacement = nearest_word_vector(out.node_features[v], table)
        if replacement is not None:
            out.node_features[v] = replacement
    return out


def random_insert(graph: Graph, ratio: float, table: EmbeddingTable, seed: int) -> Graph:
    """Each insertion appends a node with a random word vector that copies the
    connections (and weights) of a random existing node. The new node is not
    linked to the node it copies."""
    _check_table(graph, table)
    if graph.num_nodes < 1:
        raise ValueError("random insertion needs at least one node")
    m = _strength(graph, ratio)
    if m == 0:
        return graph.copy()
    rng = make_rng(seed)
    weights = graph.weight_map()
    adj: list[set[int]] = [set() for _ in range(graph.num_nodes)]
    for u, v in weights:
        adj[u].add(v)
        adj[v].add(u)
    features = [row for row in graph.node_features]
    labels = None if graph.node_labels is None else list(graph.node_labels)
    for _ in range(m):
        u = int(rng.integers(len(features)))
        w = int(rng.integers(len(table)))
        v = len(features)
        features.append(table.vectors[w].copy())
        if labels is not None:
            labels.append(labels[u])
        adj.append(set())
        for x in sorted(adj[u]):
            weights[(x, v)] = weights[(min(u, x), max(u, x))]
            adj[x].add(v)
            adj[v].add(x)
    return with_edge_map(
        graph,
        weights,
        node_features=np.array(features, dtype=np.float64).reshape(len(features), graph.feature_dim),
        node_labels=None if labels is None else np.array(labels, dtype=np.int64),
    )


def random_delete_rewire(graph: Graph, ratio: float, seed: int) -> Graph:
    """Sequentially delete random nodes, joining each deleted node's former
    neighbours into a clique (new edges get weight 1.0)."""
    n = graph.num_nodes
    m = min(n - 1, _strength(graph, ratio))
    if m <= 0:
        return graph.copy()
    rng = make_rng(seed)
    weights = graph.weight_map()
    adj: dict[int, set[int]] = {v: set() for v in range(n)}
    for u, v in weights:
        adj[u].add(v)
        adj[v].add(u)
    alive = list(range(n))
    for _ in range(m):
        d = alive.pop(int(rng.integers(len(alive))))
        former = sorted(adj.pop(d))
        for x in former:
            adj[x].discard(d)
            weights.pop((min(d, x), max(d, x)))
        for a, b in combinations(former, 2):
            if b not in adj[a]:
                adj[a].add(b)
                adj[b].add(a)
                weights[(a, b)] = 1.0
    keep = np.array(alive, dtype=np.int64)
    remap = {int(v): i for i, v in enumerate(keep)}
    new_weights = {(remap[u], remap[v]): w for (u, v), w in weights.items()}
    return with_edge_map(
        graph,
        new_weights,
        node_features=graph.node_features[keep].copy(),
        node_labels=None if graph.node_labels is None else graph.node_labels[keep].copy(),
    )


def feature_swap(graph: Graph, ratio: float, seed: int) -> Graph:
    out = graph.copy()
    m = _strength(graph, ratio)
    if m == 0 or graph.num_nodes < 2:
        return out
    rng = make_rng(seed)
    x = out.node_features
    for _ in range(m):
        a, b = rng.choice(graph.num_nodes, size=2, replace=False)
        x[[a, b]] = x[[b, a]]
        if out.node_labels is not None:
            out.node_labels[[a, b]] = out.node_labels[[b, a]]
    return out


def apply_context(config: ContextAugConfig, graph: Graph, table: EmbeddingTable) -> Graph:
    """Synonym replacement, insertion, swap, then deletion, each with its own sub-seed."""
    g = synonym_replace(graph, config.synonym_ratio, table, derive_seed(config.seed, 0))
    g = random_insert(g, config.insert_ratio, table, derive_seed(config.seed, 1))
    g = feature_swap(g, config.swap_ratio, derive_seed(config.seed, 2))
    return random_delete_rewire(g, config.delete_ratio, derive_seed(config.seed, 3))


def colorize(graph: Graph, seed: int, color=None) -> Graph:
    """Map ``[intensity, x, y]`` features to ``[i*r, i*g, i*b, x, y]``.

    ``color`` overrides the random per-graph colour drawn uniformly from [0, 1]^3.
    """
    if graph.feature_dim != 3:
        raise ValueError(f"colorize expects [intensity, x, y] features (d=3), got d={graph.feature_dim}")
    c = make_rng(seed).random(3) if color is None else np.asarray(color, dtype=np.float64)
    x = graph.node_features
    feats = np.concatenate([x[:, :1] * c[None, :], x[:, 1:3]], axis=1)
    return graph.copy().replace(node_features=feats)
