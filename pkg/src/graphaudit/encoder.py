"""Untrained GIN encoder used as the random-initialisation baseline.

Each layer computes ``h_v <- relu(MLP((1 + eps) h_v + sum_{u in N(v)} h_u))``
with ``MLP = Linear -> ReLU -> Linear``. The graph embedding concatenates the
sum-pooled node states of every layer. Weights are Glorot-uniform, biases
zero, and nothing is ever trained.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, GraphDataset
from .rng import make_rng


@dataclass(frozen=True)
class EncoderConfig:
    layers: int = 3
    hidden_dim: int = 32
    epsilon: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.layers < 1 or self.hidden_dim < 1:
            raise ValueError("layers and hidden_dim must be positive")

    @property
    def embedding_dim(self) -> int:
        return self.layers * self.hidden_dim


@dataclass(frozen=True)
class Affine:
    weight: np.ndarray  # (fan_in, fan_out)
    bias: np.ndarray  # (fan_out,)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return x @ self.weight + self.bias


@dataclass(frozen=True)
class Encoder:
    config: EncoderConfig
    input_dim: int
    mlps: tuple = field(default=())  # one (Affine, Affine) pair per layer

    @property
    def embedding_dim(self) -> int:
        return self.config.embedding_dim


@dataclass
class EmbeddingMatrix:
    rows: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.rows.ndim != 2 or self.rows.shape[0] != self.labels.shape[0]:
            raise ValueError("need one label per embedding row")

    def __len__(self) -> int:
        return int(self.rows.shape[0])


def glorot_bound(fan_in: int, fan_out: int) -> float:
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


def init_encoder(config: EncoderConfig, input_dim: int) -> Encoder:
    if input_dim < 1:
        raise ValueError("input_dim must be positive")
    rng = make_rng(config.seed)
    h = config.hidden_dim
    mlps = []
    for layer in range(config.layers):
        pair = []
        for fan_in in (input_dim if layer == 0 else h, h):
            a = glorot_bound(fan_in, h)
            w = rng.uniform(-a, a, size=(fan_in, h))
            w.flags.writeable = False
            b = np.zeros(h)
            b.flags.writeable = False
            pair.append(Affine(w, b))
        mlps.append(tuple(pair))
    return Encoder(config, input_dim, tuple(mlps))


def embed(encoder: Encoder, graph: Graph) -> np.ndarray:
    if graph.feature_dim != encoder.input_dim:
        raise ValueError(
            f"graph feature dimension {graph.feature_dim} != encoder input dimension {encoder.input_dim}"
        )
    h = graph.node_features
    src = np.concatenate([graph.edges[:, 0], graph.edges[:, 1]])
    dst = np.concatenate([graph.edges[:, 1], graph.edges[:, 0]])
    pooled = []
    for first, second in encoder.mlps:
        agg = (1.0 + encoder.config.epsilon) * h
        if src.size:
            agg = agg.copy()
            np.add.at(agg, dst, h[src])
        h = np.maximum(second(np.maximum(first(agg), 0.0)), 0.0)
        pooled.append(h.sum(axis=0))
    return np.concatenate(pooled)


def embed_dataset(encoder: Encoder, dataset: GraphDataset, threads: int = 1) -> EmbeddingMatrix:
    def one(i: int) -> np.ndarray:
        try:
            return embed(encoder, dataset.graphs[i])
        except ValueError as exc:
            raise ValueError(f"graph {i}: {exc}") from exc

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(one, range(len(dataset))))
    else:
        rows = [one(i) for i in range(len(dataset))]
    mat = np.vstack(rows) if rows else np.zeros((0, encoder.embedding_dim))
    return EmbeddingMatrix(mat, dataset.labels)
