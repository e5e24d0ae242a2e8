"""Readers and writers for the on-disk formats the toolkit consumes and emits.

TU benchmark layout (1-based node ids)::

    <name>_A.txt                 "i, j" per line, each undirected edge listed in both directions
    <name>_graph_indicator.txt   graph id of node i on line i
    <name>_graph_labels.txt      class of graph g on line g
    <name>_node_labels.txt       optional, integer per node
    <name>_node_attributes.txt   optional, comma-separated reals per node

Two optional sidecars carry data the TU layout has no slot for:
``<name>_edge_weights.txt`` (one positive real per line of ``_A.txt``) and
``<name>_token_counts.txt`` (one positive integer per graph).
"""

from __future__ import annotations

import hashlib
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .graph import Graph, GraphDataset

log = logging.getLogger(__name__)


class DataError(ValueError):
    """Malformed input data; the message names the file and location."""


@dataclass(eq=False)
class EmbeddingTable:
    words: list[str]
    vectors: np.ndarray

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.words):
            raise ValueError("vectors must have one row per word")
        self._index = {w: i for i, w in enumerate(self.words)}
        if len(self._index) != len(self.words):
            raise ValueError("duplicate word in embedding table")

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def vector(self, word: str) -> np.ndarray:
        """Row for ``word``, or the zero vector when out of vocabulary."""
        i = self._index.get(word)
        if i is None:
            return np.zeros(self.dim)
        return self.vectors[i]


@dataclass
class Document:
    tokens: list[str]
    label: int


# ---------------------------------------------------------------------------
# TU datasets


def find_tu_name(directory) -> str:
    """Infer the dataset name from the single ``*_A.txt`` file in ``directory``."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"dataset directory not found: {directory}")
    names = sorted(p.name[: -len("_A.txt")] for p in directory.glob("*_A.txt"))
    if len(names) != 1:
        raise DataError(f"{directory}: expected exactly one *_A.txt file, found {len(names)}")
    return names[0]


def _read_lines(path: Path) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        return [ln.strip() for ln in fh if ln.strip()]


def _read_ints(path: Path) -> list[int]:
    out = []
    for i, ln in enumerate(_read_lines(path), 1):
        try:
            out.append(int(ln))
        except ValueError:
            raise DataError(f"{path}:{i}: expected an integer, got {ln!r}") from None
    return out


def _read_reals(path: Path) -> np.ndarray:
    rows = []
    for i, ln in enumerate(_read_lines(path), 1):
        try:
            rows.append([float(t) for t in ln.split(",")])
        except ValueError:
            raise DataError(f"{path}:{i}: expected comma-separated reals, got {ln!r}") from None
        if len(rows[-1]) != len(rows[0]):
            raise DataError(f"{path}:{i}: expected {len(rows[0])} columns, got {len(rows[-1])}")
    return np.array(rows, dtype=np.float64)


def load_tu_dataset(directory, name: Optional[str] = None) -> GraphDataset:
    directory = Path(directory)
    if name is None:
        name = find_tu_name(directory)

    def path(suffix: str) -> Path:
        return directory / f"{name}_{suffix}.txt"

    for suffix in ("A", "graph_indicator", "graph_labels"):
        if not path(suffix).is_file():
            raise FileNotFoundError(f"missing mandatory file: {path(suffix)}")

    indicator = np.array(_read_ints(path("graph_indicator")), dtype=np.int64)
    raw_labels = _read_ints(path("graph_labels"))
    n_graphs = len(raw_labels)
    if indicator.size and (indicator.min() < 1 or indicator.max() > n_graphs):
        raise DataError(f"{path('graph_indicator')}: graph ids must lie in 1..{n_graphs}")

    # local index of each global node within its graph
    counts = np.bincount(indicator - 1, minlength=n_graphs)
    local = np.zeros(indicator.size, dtype=np.int64)
    seen = np.zeros(n_graphs, dtype=np.int64)
    for v, g in enumerate(indicator - 1):
        local[v] = seen[g]
        seen[g] += 1

    a_lines = _read_lines(path("A"))
    weights_path = path("edge_weights")
    raw_weights = None
    if weights_path.is_file():
        raw_weights = _read_reals(weights_path).reshape(-1)
        if raw_weights.size != len(a_lines):
            raise DataError(f"{weights_path}: {raw_weights.size} weights for {len(a_lines)} edges")

    edge_maps: list[dict[tuple[int, int], float]] = [dict() for _ in range(n_graphs)]
    n_nodes = indicator.size
    for i, ln in enumerate(a_lines, 1):
        try:
            u, v = (int(t) for t in ln.split(","))
        except ValueError:
            raise DataError(f"{path('A')}:{i}: expected 'i, j', got {ln!r}") from None
        if not (1 <= u <= n_nodes and 1 <= v <= n_nodes):
            raise DataError(f"{path('A')}:{i}: node id out of range 1..{n_nodes}")
        gu, gv = indicator[u - 1], indicator[v - 1]
        if gu != gv:
            raise DataError(
                f"{path('A')}:{i}: edge ({u}, {v}) references a node outside graph {gu}"
            )
        if u == v:
            log.warning("%s:%d: dropping self-loop at node %d", path("A"), i, u)
            continue
        a, b = sorted((int(local[u - 1]), int(local[v - 1])))
        w = 1.0 if raw_weights is None else float(raw_weights[i - 1])
        edge_maps[gu - 1].setdefault((a, b), w)

    node_labels = None
    if path("node_labels").is_file():
        node_labels = np.array(_read_ints(path("node_labels")), dtype=np.int64)
        if node_labels.size != n_nodes:
            raise DataError(f"{path('node_labels')}: {node_labels.size} labels for {n_nodes} nodes")

    if path("node_attributes").is_file():
        features = _read_reals(path("node_attributes"))
        if features.shape[0] != n_nodes:
            raise DataError(f"{path('node_attributes')}: {features.shape[0]} rows for {n_nodes} nodes")
    elif node_labels is not None:
        alphabet = np.unique(node_labels)
        features = (node_labels[:, None] == alphabet[None, :]).astype(np.float64)
    else:
        features = np.ones((n_nodes, 1))

    token_counts = None
    if path("token_counts").is_file():
        token_counts = _read_ints(path("token_counts"))
        if len(token_counts) != n_graphs:
            raise DataError(f"{path('token_counts')}: {len(token_counts)} values for {n_graphs} graphs")

    classes = sorted(set(raw_labels))
    class_of = {c: i for i, c in enumerate(classes)}
    order = np.argsort(indicator, kind="stable")
    starts = np.concatenate([[0], np.cumsum(counts)])
    graphs = []
    for g in range(n_graphs):
        members = order[starts[g] : starts[g + 1]]
        emap = edge_maps[g]
        keys = sorted(emap)
        edges = np.array(keys, dtype=np.int64).reshape(-1, 2)
        weights = None
        if raw_weights is not None:
            weights = np.array([emap[k] for k in keys], dtype=np.float64)
        graphs.append(
            Graph(
                features[members].copy(),
                edges,
                weights,
                class_of[raw_labels[g]],
                None if node_labels is None else node_labels[members].copy(),
                None if token_counts is None else token_counts[g],
            )
        )
    return GraphDataset(graphs, name, max(1, len(classes)))


def _fmt(x: float) -> str:
    return repr(float(x))


def write_tu_dataset(dataset: GraphDataset, directory, write_features: bool = True) -> None:
    """Write ``dataset`` in TU layout under ``directory`` (created if needed).

    Features are written as ``_node_attributes.txt`` so that reloading gives the
    same matrices even when they were originally derived from node labels.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    name = dataset.name

    a_rows, w_rows, ind_rows, nl_rows, attr_rows = [], [], [], [], []
    offset = 0
    any_weights = any(g.edge_weights is not None for g in dataset)
    has_node_labels = bool(dataset.graphs) and all(g.node_labels is not None for g in dataset)
    for gi, g in enumerate(dataset, 1):
        for (u, v), w in zip(g.edges.tolist(), _weights(g)):
            a, b = u + offset + 1, v + offset + 1
            a_rows += [f"{a}, {b}", f"{b}, {a}"]
            w_rows += [_fmt(w), _fmt(w)]
        ind_rows += [str(gi)] * g.num_nodes
        if has_node_labels:
            nl_rows += [str(int(x)) for x in g.node_labels]
        attr_rows += [", ".join(_fmt(x) for x in row) for row in g.node_features]
        offset += g.num_nodes

    def write(suffix: str, rows: Sequence[str]) -> None:
        with open(directory / f"{name}_{suffix}.txt", "w", encoding="utf-8", newline="\n") as fh:
            fh.write("".join(r + "\n" for r in rows))

    write("A", a_rows)
    write("graph_indicator", ind_rows)
    write("graph_labels", [str(int(g.graph_label)) for g in dataset])
    if has_node_labels:
        write("node_labels", nl_rows)
    if write_features:
        write("node_attributes", attr_rows)
    if any_weights:
        write("edge_weights", w_rows)
    if dataset.graphs and all(g.token_count is not None for g in dataset):
        write("token_counts", [str(int(g.token_count)) for g in dataset])


def _weights(g: Graph):
    if g.edge_weights is None:
        return [1.0] * g.num_edges
    return g.edge_weights.tolist()


# ---------------------------------------------------------------------------
# Word vectors and corpora


def load_embedding_table(path) -> EmbeddingTable:
    """Text word vectors: ``word v1 v2 ...`` per line, optional ``count dim`` header."""
    path = Path(path)
    lines = _read_lines(path)
    if not lines:
        raise DataError(f"{path}: empty embedding file")
    first = lines[0].split()
    if len(first) == 2 and all(t.lstrip("-").isdigit() for t in first) and len(lines) > 1:
        if len(lines[1].split()) == int(first[1]) + 1:
            lines = lines[1:]
    words, rows = [], []
    seen = set()
    dim = None
    for i, ln in enumerate(lines, 1):
        parts = ln.split()
        word, vals = parts[0], parts[1:]
        if dim is None:
            dim = len(vals)
            if dim == 0:
                raise DataError(f"{path}:{i}: no vector values for {word!r}")
        elif len(vals) != dim:
            raise DataError(f"{path}:{i}: inconsistent dimension {len(vals)}, expected {dim}")
        if word in seen:
            raise DataError(f"{path}:{i}: duplicate word {word!r}")
        seen.add(word)
        try:
            rows.append([float(t) for t in vals])
        except ValueError:
            raise DataError(f"{path}:{i}: non-numeric vector entry") from None
        words.append(word)
    return EmbeddingTable(words, np.array(rows, dtype=np.float64))


def load_corpus(path) -> list[Document]:
    """TSV corpus: ``label<TAB>space separated tokens``; tokens are lowercased."""
    path = Path(path)
    docs = []
    with open(path, "r", encoding="utf-8") as fh:
        for i, raw in enumerate(fh, 1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            label, sep, text = line.partition("\t")
            if not sep:
                raise DataError(f"{path}:{i}: missing tab between label and tokens")
            try:
                y = int(label.strip())
            except ValueError:
                raise DataError(f"{path}:{i}: non-integer label {label!r}") from None
            tokens = text.lower().split()
            if not tokens:
                raise DataError(f"{path}:{i}: empty token list")
            docs.append(Document(tokens, y))
    return docs


# ---------------------------------------------------------------------------
# Matrices, labels, heatmaps


def write_matrix_csv(matrix, path) -> None:
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in m:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def read_matrix_csv(path) -> np.ndarray:
    path = Path(path)
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for i, ln in enumerate(fh, 1):
            ln = ln.strip()
            if not ln:
                continue
            cells = ln.split(",")
            row = []
            for j, c in enumerate(cells, 1):
                try:
                    row.append(float(c))
                except ValueError:
                    raise DataError(f"{path}: row {i}, column {j}: cannot parse {c!r}") from None
            if rows and len(row) != len(rows[0]):
                raise DataError(f"{path}: row {i} has {len(row)} columns, expected {len(rows[0])}")
            rows.append(row)
    if not rows:
        raise DataError(f"{path}: empty matrix file")
    return np.array(rows, dtype=np.float64)


def write_labels(labels, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("".join(f"{int(y)}\n" for y in labels))


def read_labels(path) -> np.ndarray:
    return np.array(_read_ints(Path(path)), dtype=np.int64)


def heatmap_pixels(matrix) -> np.ndarray:
    """Quantise values in [-1, 1] to 0..255 with round-half-up."""
    m = np.clip(np.asarray(matrix, dtype=np.float64), -1.0, 1.0)
    return np.floor((m + 1.0) / 2.0 * 255.0 + 0.5).astype(np.int64)


def write_heatmap_pgm(matrix, path) -> None:
    px = heatmap_pixels(matrix)
    if px.ndim != 2:
        raise ValueError("heatmap matrix must be 2-D")
    h, w = px.shape
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"P2\n{w} {h}\n255\n")
        for row in px:
            fh.write(" ".join(str(int(v)) for v in row) + "\n")


def read_pgm(path) -> np.ndarray:
    tokens = []
    with open(path, "r", encoding="ascii") as fh:
        for ln in fh:
            tokens += ln.split("#", 1)[0].split()
    if not tokens or tokens[0] != "P2":
        raise DataError(f"{path}: not an ASCII PGM (P2) file")
    w, h = int(tokens[1]), int(tokens[2])
    return np.array([int(t) for t in tokens[4:]], dtype=np.int64).reshape(h, w)


def file_digest(path) -> str:
    """SHA-256 of a file, or of a directory's files (sorted by name)."""
    h = hashlib.sha256()
    p = Path(path)
    files = sorted(q for q in p.rglob("*") if q.is_file()) if p.is_dir() else [p]
    for f in files:
        if p.is_dir():
            h.update(os.fsencode(f.relative_to(p).as_posix()) + b"\0")
        h.update(f.read_bytes())
    return h.hexdigest()
