"""Evaluating frozen representations and sanity-checking them.

The linear probe is L2-regularised multinomial logistic regression trained by
full-batch gradient descent on standardised features. It stands in for both
the linear SVM of the usual unsupervised-graph protocol and the supervised
network of the affinity protocol.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .augment import AugmentationSpec, apply_dataset
from .encoder import EmbeddingMatrix, EncoderConfig, embed_dataset, init_encoder
from .graph import GraphDataset
from .io import EmbeddingTable
from .rng import make_rng

# ---------------------------------------------------------------------------
# NT-XENT


def _logsumexp(x: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(x, axis=axis, keepdims=True)
    return (np.log(np.sum(np.exp(x - m), axis=axis, keepdims=True)) + m).squeeze(axis)


def nt_xent(z_first, z_second, tau: float = 0.5) -> float:
    """Mean NT-XENT over all ``2N`` ordered positive pairs.

    Row ``i`` of ``z_first`` and row ``i`` of ``z_second`` form a positive
    pair; every other row of the stacked batch is a negative. Cosine similarity.
    """
    z1 = np.asarray(z_first, dtype=np.float64)
    z2 = np.asarray(z_second, dtype=np.float64)
    if z1.ndim != 2 or z1.shape != z2.shape:
        raise ValueError(f"views must be N x d matrices of equal shape, got {z1.shape} and {z2.shape}")
    n = z1.shape[0]
    if n == 0:
        raise ValueError("empty batch")
    if tau <= 0:
        raise ValueError("temperature must be positive")
    z = np.vstack([z1, z2])
    norms = np.linalg.norm(z, axis=1)
    bad = np.flatnonzero(norms == 0)
    if bad.size:
        raise ValueError(f"zero-norm representation at stacked row {int(bad[0])}")
    u = z / norms[:, None]
    logits = (u @ u.T) / tau
    np.fill_diagonal(logits, -np.inf)
    partner = np.concatenate([np.arange(n, 2 * n), np.arange(n)])
    pos = logits[np.arange(2 * n), partner]
    return float(np.mean(_logsumexp(logits, axis=1) - pos))


# ---------------------------------------------------------------------------
# Representation similarity


def _normalize_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1)
    out = np.zeros_like(x)
    ok = norms > 0
    out[ok] = x[ok] / norms[ok, None]
    return out


@dataclass
class SimilarityReport:
    matrix: np.ndarray
    labels: np.ndarray
    class_boundaries: list[int]
    intra_mean: float
    inter_mean: float

    @property
    def passes(self) -> bool:
        return bool(self.intra_mean > self.inter_mean)

    def summary(self) -> dict:
        def num(x):
            return None if np.isnan(x) else float(x)

        return {"n": int(self.matrix.shape[0]), "intra_mean": num(self.intra_mean),
                "inter_mean": num(self.inter_mean), "passes": self.passes}


def similarity_matrix(emb: EmbeddingMatrix) -> SimilarityReport:
    """All-pairs cosine similarity with rows and columns grouped by class.

    ``class_boundaries`` lists the index where each class block after the first starts.
    """
    x = emb.rows
    if x.shape[0] < 2:
        raise ValueError("need at least two embeddings")
    norms = np.linalg.norm(x, axis=1)
    bad = np.flatnonzero(norms == 0)
    if bad.size:
        raise ValueError(f"zero-norm embedding at row {int(bad[0])}")
    order = np.argsort(emb.labels, kind="stable")
    labels = emb.labels[order]
    u = x[order] / norms[order, None]
    s = u @ u.T
    s = np.clip((s + s.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(s, 1.0)
    same = labels[:, None] == labels[None, :]
    off = ~np.eye(len(labels), dtype=bool)
    intra = s[same & off]
    inter = s[~same]
    boundaries = [int(i) for i in np.flatnonzero(np.diff(labels)) + 1]
    return SimilarityReport(
        s, labels, boundaries,
        float(intra.mean()) if intra.size else float("nan"),
        float(inter.mean()) if inter.size else float("nan"),
    )


# ---------------------------------------------------------------------------
# Cross-validation helpers and kNN


def stratified_folds(labels, folds: int, seed: int) -> list[np.ndarray]:
    """Test-index arrays for stratified k-fold CV.

    Members of each class are shuffled and dealt round-robin to the folds.
    """
    labels = np.asarray(labels)
    if folds < 2:
        raise ValueError("need at least 2 folds")
    classes, counts = np.unique(labels, return_counts=True)
    small = classes[counts < folds]
    if small.size:
        raise ValueError(
            f"cannot stratify into {folds} folds: class {int(small[0])} has "
            f"{int(counts[classes == small[0]][0])} members"
        )
    rng = make_rng(seed)
    assignment = np.empty(labels.size, dtype=np.int64)
    offset = 0
    for c in classes:
        members = np.flatnonzero(labels == c)
        members = members[rng.permutation(members.size)]
        assignment[members] = (offset + np.arange(members.size)) % folds
        offset += members.size
    return [np.flatnonzero(assignment == f) for f in range(folds)]


def knn_predict(train_x, train_y, test_x, k: int = 5) -> np.ndarray:
    """Majority vote over the ``k`` nearest training rows by cosine distance.

    Training rows tied with the k-th nearest distance also vote; vote ties go
    to the smallest class id. Zero vectors have cosine 0 to everything.
    """
    if k < 1:
        raise ValueError("k must be positive")
    train_y = np.asarray(train_y)
    a = _normalize_rows(np.asarray(train_x, dtype=np.float64))
    b = _normalize_rows(np.asarray(test_x, dtype=np.float64))
    dist = 1.0 - b @ a.T
    classes = np.unique(train_y)
    kk = min(k, a.shape[0])
    preds = np.empty(b.shape[0], dtype=train_y.dtype)
    for i, row in enumerate(dist):
        kth = np.partition(row, kk - 1)[kk - 1]
        voters = train_y[row <= kth]
        votes = np.array([np.count_nonzero(voters == c) for c in classes])
        preds[i] = classes[int(np.argmax(votes))]
    return preds


def knn_accuracy(emb: EmbeddingMatrix, k: int = 5, folds: int = 10, seed: int = 0) -> tuple[float, float]:
    """Stratified k-fold kNN accuracy: ``(mean, std)`` over folds (population std)."""
    accs = []
    for test in stratified_folds(emb.labels, folds, seed):
        train = np.setdiff1d(np.arange(len(emb)), test)
        pred = knn_predict(emb.rows[train], emb.labels[train], emb.rows[test], k)
        accs.append(float(np.mean(pred == emb.labels[test])))
    return float(np.mean(accs)), float(np.std(accs))


# ---------------------------------------------------------------------------
# Linear probe


@dataclass(frozen=True)
class ProbeConfig:
    learning_rate: float = 0.1
    epochs: int = 500
    l2_lambda: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.epochs < 1 or self.l2_lambda < 0:
            raise ValueError("learning_rate and epochs must be positive, l2_lambda nonnegative")


@dataclass
class LinearProbe:
    mean: np.ndarray
    scale: np.ndarray
    weight: np.ndarray  # (d, C)
    bias: np.ndarray  # (C,)
    classes: np.ndarray
    loss_history: list[float] = field(default_factory=list)

    def standardize(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.scale

    def logits(self, x) -> np.ndarray:
        return self.standardize(x) @ self.weight + self.bias

    def predict(self, x) -> np.ndarray:
        return self.classes[np.argmax(self.logits(x), axis=1)]


def _log_softmax(z: np.ndarray) -> np.ndarray:
    return z - _logsumexp(z, axis=1)[:, None]


def probe_objective(weight, bias, x, y_index, l2_lambda):
    """Regularised loss ``mean CE + (l2/2)||W||^2`` and its gradients.

    ``x`` is already standardised; ``y_index`` holds class positions.
    Returns ``(loss, grad_weight, grad_bias)``.
    """
    m = x.shape[0]
    logp = _log_softmax(x @ weight + bias)
    loss = -float(np.mean(logp[np.arange(m), y_index])) + 0.5 * l2_lambda * float(np.sum(weight * weight))
    p = np.exp(logp)
    p[np.arange(m), y_index] -= 1.0
    p /= m
    return loss, x.T @ p + l2_lambda * weight, p.sum(axis=0)


def train_linear_probe(x, y, config: ProbeConfig = ProbeConfig()) -> LinearProbe:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("linear probe needs at least two classes in the training rows")
    mean = x.mean(axis=0)
    scale = np.maximum(x.std(axis=0), 1e-8)
    xs = (x - mean) / scale
    y_index = np.searchsorted(classes, y)
    rng = make_rng(config.seed)
    w = rng.normal(0.0, 0.01, size=(x.shape[1], classes.size))
    b = np.zeros(classes.size)
    history = []
    for _ in range(config.epochs):
        loss, gw, gb = probe_objective(w, b, xs, y_index, config.l2_lambda)
        history.append(loss)
        w = w - config.learning_rate * gw
        b = b - config.learning_rate * gb
    history.append(probe_objective(w, b, xs, y_index, config.l2_lambda)[0])
    return LinearProbe(mean, scale, w, b, classes, history)


def probe_eval(probe: LinearProbe, x, y) -> tuple[float, float]:
    """``(accuracy, mean cross-entropy)`` on the given rows (no regulariser)."""
    y = np.asarray(y)
    unknown = np.setdiff1d(y, probe.classes)
    if unknown.size:
        raise ValueError(f"label {int(unknown[0])} was not seen when training the probe")
    logp = _log_softmax(probe.logits(x))
    idx = np.searchsorted(probe.classes, y)
    acc = float(np.mean(probe.classes[np.argmax(logp, axis=1)] == y))
    return acc, -float(np.mean(logp[np.arange(y.size), idx]))


def probe_cv_accuracy(emb: EmbeddingMatrix, config: ProbeConfig = ProbeConfig(),
                      folds: int = 10, seed: int = 0) -> tuple[float, float]:
    """Stratified k-fold linear-probe accuracy: ``(mean, std)`` over folds."""
    accs = []
    for test in stratified_folds(emb.labels, folds, seed):
        train = np.setdiff1d(np.arange(len(emb)), test)
        probe = train_linear_probe(emb.rows[train], emb.labels[train], config)
        accs.append(probe_eval(probe, emb.rows[test], emb.labels[test])[0])
    return float(np.mean(accs)), float(np.std(accs))


# ---------------------------------------------------------------------------
# Affinity / diversity

AFFINITY_PROTOCOL = (
    "fixed model = linear probe on frozen random-GIN embeddings trained on the clean data; "
    "accuracies are on clean vs augmented training data; losses are final-epoch "
    "training cross-entropy of probes trained on clean vs augmented embeddings"
)


@dataclass
class AffinityReport:
    clean_accuracy: float
    augmented_accuracy: float
    affinity: float
    clean_loss: float
    augmented_loss: float
    diversity: float
    protocol: str = AFFINITY_PROTOCOL

    def to_dict(self) -> dict:
        return asdict(self)


def affinity_audit(dataset: GraphDataset, spec: AugmentationSpec,
                   enc_config: EncoderConfig = EncoderConfig(),
                   probe_config: ProbeConfig = ProbeConfig(),
                   table: Optional[EmbeddingTable] = None, threads: int = 1) -> AffinityReport:
    encoder = init_encoder(enc_config, dataset.feature_dim)
    clean = embed_dataset(encoder, dataset, threads)
    augmented = embed_dataset(encoder, apply_dataset(spec, dataset, table, threads), threads)

    probe = train_linear_probe(clean.rows, clean.labels, probe_config)
    clean_acc, clean_loss = probe_eval(probe, clean.rows, clean.labels)
    aug_acc, _ = probe_eval(probe, augmented.rows, augmented.labels)

    aug_probe = train_linear_probe(augmented.rows, augmented.labels, probe_config)
    _, aug_loss = probe_eval(aug_probe, augmented.rows, augmented.labels)
    return AffinityReport(clean_acc, aug_acc, clean_acc - aug_acc, clean_loss, aug_loss, aug_loss - clean_loss)
