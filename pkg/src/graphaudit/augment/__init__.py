"""Augmentation specs and dispatch over single graphs and whole datasets."""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

from ..graph import Graph, GraphDataset
from ..io import EmbeddingTable
from ..rng import MASK64, derive_seed
from .context import (
    ContextAugConfig,
    apply_context,
    build_cooccurrence,
    colorize,
    feature_swap,
    random_delete_rewire,
    random_insert,
    synonym_replace,
)
from .generic import attribute_mask, count, edge_perturb, node_drop, subgraph_sample


class AugKind(enum.Enum):
    NODE_DROP = "node-drop"
    EDGE_PERTURB = "edge-perturb"
    ATTR_MASK = "attr-mask"
    SUBGRAPH = "subgraph"
    SYNONYM_REPLACE = "synonym-replace"
    RANDOM_INSERT = "random-insert"
    RANDOM_DELETE_REWIRE = "random-delete-rewire"
    FEATURE_SWAP = "feature-swap"
    COLORIZE = "colorize"
    IDENTITY = "identity"

    @property
    def needs_table(self) -> bool:
        return self in (AugKind.SYNONYM_REPLACE, AugKind.RANDOM_INSERT)


@dataclass(frozen=True)
class AugmentationSpec:
    kind: AugKind
    ratio: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.kind, AugKind):
            object.__setattr__(self, "kind", AugKind(self.kind))
        if not 0.0 <= self.ratio <= 1.0:
            raise ValueError(f"ratio must lie in [0, 1], got {self.ratio}")
        if not 0 <= self.seed <= MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def apply(spec: AugmentationSpec, graph: Graph, table: Optional[EmbeddingTable] = None,
          seed: Optional[int] = None) -> Graph:
    """Augment one graph. ``seed`` overrides ``spec.seed`` (used for per-graph seeds)."""
    s = spec.seed if seed is None else seed
    k = spec.kind
    if k.needs_table and table is None:
        raise ValueError(f"{k.value} needs a word-embedding table")
    if k is AugKind.IDENTITY:
        return graph.copy()
    if k is AugKind.NODE_DROP:
        return node_drop(graph, spec.ratio, s)
    if k is AugKind.EDGE_PERTURB:
        return edge_perturb(graph, spec.ratio, s)
    if k is AugKind.ATTR_MASK:
        return attribute_mask(graph, spec.ratio, s)
    if k is AugKind.SUBGRAPH:
        return subgraph_sample(graph, spec.ratio, s)
    if k is AugKind.SYNONYM_REPLACE:
        return synonym_replace(graph, spec.ratio, table, s)
    if k is AugKind.RANDOM_INSERT:
        return random_insert(graph, spec.ratio, table, s)
    if k is AugKind.RANDOM_DELETE_REWIRE:
        return random_delete_rewire(graph, spec.ratio, s)
    if k is AugKind.FEATURE_SWAP:
        return feature_swap(graph, spec.ratio, s)
    if k is AugKind.COLORIZE:
        return colorize(graph, s)
    raise ValueError(f"unknown augmentation kind {k}")


def check_applicable(spec: AugmentationSpec, dataset: GraphDataset,
                     table: Optional[EmbeddingTable] = None) -> None:
    if spec.kind.needs_table:
        if table is None:
            raise ValueError(f"{spec.kind.value} needs a word-embedding table")
        if dataset.graphs and dataset.feature_dim != table.dim:
            raise ValueError(
                f"{spec.kind.value}: dataset feature dimension {dataset.feature_dim} "
                f"does not match embedding dimension {table.dim}"
            )
    if spec.kind is AugKind.COLORIZE and dataset.graphs and dataset.feature_dim != 3:
        raise ValueError(f"colorize needs [intensity, x, y] features, dataset has d={dataset.feature_dim}")


def apply_dataset(spec: AugmentationSpec, dataset: GraphDataset,
                  table: Optional[EmbeddingTable] = None, threads: int = 1) -> GraphDataset:
    """Augment every graph with seed ``derive_seed(spec.seed, index)``.

    Outcomes depend on each graph's position, not on scheduling.
    """
    check_applicable(spec, dataset, table)

    def one(i: int) -> Graph:
        try:
            return apply(spec, dataset.graphs[i], table, derive_seed(spec.seed, i))
        except ValueError as exc:
            raise ValueError(f"graph {i}: {exc}") from exc

    idx = range(len(dataset))
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            graphs = list(pool.map(one, idx))
    else:
        graphs = [one(i) for i in idx]
    return dataset.with_graphs(graphs)


__all__ = [
    "AugKind", "AugmentationSpec", "ContextAugConfig", "apply", "apply_dataset",
    "apply_context", "attribute_mask", "build_cooccurrence", "check_applicable", "colorize",
    "count", "edge_perturb", "feature_swap", "node_drop", "random_delete_rewire",
    "random_insert", "subgraph_sample", "synonym_replace",
]
