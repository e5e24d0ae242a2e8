"""How much an augmentation changes a sample, measured in graph, feature and
image space: Laplacian spectra, node-feature cosine similarity and SSIM."""

from __future__ import annotations

import math

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .graph import Graph, GraphDataset, degrees

SPECTRUM_CLAMP = 1e-9


class ConvergenceError(RuntimeError):
    pass


def jacobi_eigenvalues(matrix, tol: float = 1e-10, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.

    Sweeps over all ``(p, q)`` pairs until the off-diagonal Frobenius norm
    drops below ``tol``. Returned in ascending order.
    """
    a = np.array(matrix, dtype=np.float64, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if not np.allclose(a, a.T, rtol=0, atol=1e-12):
        raise ValueError("matrix must be symmetric")
    n = a.shape[0]

    def off_norm() -> float:
        # summed directly; ||A||^2 - ||diag||^2 cancels catastrophically
        return float(np.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2)))

    for _ in range(max_sweeps + 1):
        if off_norm() < tol:
            return np.sort(np.diag(a))
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = float(a[p, q])
                if apq == 0.0:
                    continue
                app, aqq = float(a[p, p]), float(a[q, q])
                theta = (aqq - app) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                    if theta < 0:
                        t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                row_p = a[p].copy()
                row_q = a[q].copy()
                new_p = c * row_p - s * row_q
                new_q = s * row_p + c * row_q
                a[p] = new_p
                a[q] = new_q
                a[:, p] = new_p
                a[:, q] = new_q
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = a[q, p] = 0.0
    raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps (off-norm {off_norm():.3e})")


def laplacian(graph: Graph) -> np.ndarray:
    """Unweighted combinatorial Laplacian ``D - A``."""
    return np.diag(degrees(graph).astype(np.float64)) - graph.adjacency_matrix()


def laplacian_spectrum(graph: Graph) -> np.ndarray:
    """Laplacian eigenvalues, descending; edge weights are ignored."""
    if graph.num_nodes < 1:
        raise ValueError("spectrum of an empty graph is undefined")
    ev = jacobi_eigenvalues(laplacian(graph))[::-1].copy()
    ev[(ev < 0) & (ev >= -SPECTRUM_CLAMP)] = 0.0
    return ev


def coverage_length(spectrum: Sequence[float], coverage: float = 0.9) -> int:
    """Shortest prefix of a descending spectrum whose sum reaches ``coverage`` of the total.

    An all-zero spectrum gives 1.
    """
    ev = np.asarray(spectrum, dtype=np.float64)
    total = float(ev.sum())
    if total <= 0:
        return 1
    target = coverage * total - 1e-9 * max(1.0, total)
    return int(np.argmax(np.cumsum(ev) >= target)) + 1


@dataclass
class SpectralReport:
    eigenvalues_a: list[float]
    eigenvalues_b: list[float]
    k_a: int
    k_b: int
    k: int
    score: float


def spectral_similarity(g1: Graph, g2: Graph, coverage: float = 0.9) -> SpectralReport:
    """Squared distance between the leading ``k`` Laplacian eigenvalues, where
    ``k`` is the smaller of the two graphs' coverage lengths."""
    if not 0.0 < coverage <= 1.0:
        raise ValueError(f"coverage must lie in (0, 1], got {coverage}")
    a, b = laplacian_spectrum(g1), laplacian_spectrum(g2)
    ka, kb = coverage_length(a, coverage), coverage_length(b, coverage)
    k = min(ka, kb)
    score = float(np.sum((a[:k] - b[:k]) ** 2))
    return SpectralReport(a.tolist(), b.tolist(), ka, kb, k, score)


def _cosines(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    nx = np.linalg.norm(x, axis=1)
    ny = np.linalg.norm(y, axis=1)
    denom = nx * ny
    out = np.zeros(x.shape[0])
    ok = denom > 0
    out[ok] = np.sum(x[ok] * y[ok], axis=1) / denom[ok]
    return np.clip(out, -1.0, 1.0)


def feature_similarity(g1: Graph, g2: Graph) -> float:
    """Mean cosine between features of nodes with equal index, over the first
    ``min(n1, n2)`` nodes. Pairs involving a zero vector count as 0."""
    if g1.feature_dim != g2.feature_dim:
        raise ValueError(f"feature dimensions differ: {g1.feature_dim} vs {g2.feature_dim}")
    m = min(g1.num_nodes, g2.num_nodes)
    if m == 0:
        raise ValueError("no corresponding nodes")
    return float(np.mean(_cosines(g1.node_features[:m], g2.node_features[:m])))


SSIM_WINDOW = 7


def ssim(img_a, img_b, data_range: float = 1.0, window: int = SSIM_WINDOW) -> float:
    """Mean SSIM over all ``window x window`` patches with uniform weights.

    Patch statistics are uniform-weighted (population) means, variances and
    covariance; ``C1 = (0.01 L)^2`` and ``C2 = (0.03 L)^2``.
    """
    a = np.asarray(img_a, dtype=np.float64)
    b = np.asarray(img_b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    if a.ndim != 2 or min(a.shape) < window:
        raise ValueError(f"images must be 2-D with both sides >= {window}, got {a.shape}")
    c1 = (0.01 * data_range) ** 2
    c2 = (0.03 * data_range) ** 2
    pa = np.lib.stride_tricks.sliding_window_view(a, (window, window))
    pb = np.lib.stride_tricks.sliding_window_view(b, (window, window))
    mu_a = pa.mean(axis=(-2, -1))
    mu_b = pb.mean(axis=(-2, -1))
    da = pa - mu_a[..., None, None]
    db = pb - mu_b[..., None, None]
    var_a = (da * da).mean(axis=(-2, -1))
    var_b = (db * db).mean(axis=(-2, -1))
    cov = (da * db).mean(axis=(-2, -1))
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


@dataclass
class FidelityReport:
    spectral: SpectralReport
    feature_similarity: float
    ssim: Optional[float] = None

    def to_pair_json(self, index: int) -> dict:
        return {
            "index": index,
            "spectral_score": self.spectral.score,
            "k": self.spectral.k,
            "feature_similarity": self.feature_similarity,
            "ssim": self.ssim,
        }

    def to_dict(self) -> dict:
        return asdict(self)


def fidelity_report(g1: Graph, g2: Graph, images=None, coverage: float = 0.9) -> FidelityReport:
    """``images`` is an optional ``(original, augmented)`` pair of grayscale arrays."""
    s = None if images is None else ssim(images[0], images[1])
    return FidelityReport(spectral_similarity(g1, g2, coverage), feature_similarity(g1, g2), s)


def fidelity_reports(a: GraphDataset, b: GraphDataset, coverage: float = 0.9,
                     threads: int = 1) -> list[FidelityReport]:
    """One report per graph pair, in dataset order."""
    if len(a) != len(b):
        raise ValueError(f"datasets differ in length: {len(a)} vs {len(b)}")

    def one(i: int) -> FidelityReport:
        try:
            return fidelity_report(a[i], b[i], coverage=coverage)
        except (ValueError, ConvergenceError) as exc:
            raise type(exc)(f"graph {i}: {exc}") from exc

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, range(len(a))))
    return [one(i) for i in range(len(a))]


def reports_json(reports: Sequence[FidelityReport]) -> dict:
    return {"pairs": [r.to_pair_json(i) for i, r in enumerate(reports)]}
