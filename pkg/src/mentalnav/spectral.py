"""Gaussian-affinity spectral clustering of landmark positions.

The eigendecomposition is a cyclic Jacobi solver: landmark counts are in
the dozens at most, so an exact dense method without external solver
dependencies is the right trade.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.cluster import KMeans
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import DegenerateGeometry, SingularDegree


def jacobi_eigh(
    a: np.ndarray,
    tol: float = 1e-10,
    max_sweeps: int = 100,
) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps over the strictly upper triangle in row order until the
    off-diagonal Frobenius norm drops below ``tol`` (or ``max_sweeps`` is
    reached).

    Returns:
        ``(eigenvalues, eigenvectors)`` with eigenvalues ascending and the
        eigenvectors as the matching columns.
    """
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.allclose(a, a.T, rtol=0, atol=1e-12 * max(1.0, np.abs(a).max(initial=0.0))):
        raise ValueError("matrix is not symmetric")
    a = (a + a.T) / 2.0
    n = a.shape[0]
    v = np.eye(n)
    offdiag = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum(a[offdiag] ** 2)))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-18 * (abs(a[p, p]) + abs(a[q, q])) or abs(apq) < 1e-300:
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta  # theta**2 would overflow
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J with J the (p, q) Givens rotation
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def median_nonzero(d: np.ndarray) -> float:
    """Median over the distinct pairs with non-zero distance."""
    iu = np.triu_indices(d.shape[0], k=1)
    vals = d[iu]
    vals = vals[vals > 0]
    if vals.size == 0:
        raise DegenerateGeometry("all pairwise landmark distances are zero")
    return float(np.median(vals))


def gaussian_affinity(points: np.ndarray) -> tuple[np.ndarray, float]:
    """Affinity ``exp(-d^2 / (2 sigma^2))`` with a zero diagonal.

    ``sigma`` is the median of the non-zero pairwise distances.
    """
    points = np.asarray(points, dtype=float)
    if points.shape[0] < 2:
        raise ValueError("need at least two points")
    d = pairwise_distances(points)
    sigma = median_nonzero(d)
    a = np.exp(-(d * d) / (2.0 * sigma * sigma))
    np.fill_diagonal(a, 0.0)
    return a, sigma


def normalized_laplacian(affinity: np.ndarray) -> np.ndarray:
    """``I - D^-1/2 A D^-1/2``."""
    deg = affinity.sum(axis=1)
    if np.any(deg <= 0):
        raise SingularDegree(f"landmark {int(np.argmin(deg))} has zero total affinity")
    inv = 1.0 / np.sqrt(deg)
    return np.eye(affinity.shape[0]) - inv[:, None] * affinity * inv[None, :]


def eigengap_k(eigenvalues: np.ndarray, max_k: int = 8) -> int:
    """Cluster count at the largest gap among the first ``min(max_k, n)`` eigenvalues.

    The gap after the trivial zero eigenvalue is skipped when there are at
    least three eigenvalues: with a median-distance bandwidth the second
    eigenvalue sits near 1 for any balanced grouping, so that gap would
    always win and every map would collapse to a single region.
    """
    m = min(max_k, len(eigenvalues))
    if m < 3:
        return 1
    gaps = np.diff(eigenvalues[:m])[1:]
    return int(np.argmax(gaps)) + 2


class SpectralRegionClusterer(ClusterMixin, BaseEstimator):
    """Partition 2D landmark centres into regions.

    Parameters
    ----------
    n_clusters : int or "auto"
        Number of regions; ``"auto"`` picks it by the eigengap heuristic.
    n_init : int
        k-means restarts (k-means++ seeding); the best inertia wins.
    random_state : int
        Seed for k-means. Required, there is no hidden entropy.

    Attributes
    ----------
    labels_ : ndarray of shape (n,)
    affinity_matrix_ : ndarray of shape (n, n)
    sigma_ : float
    eigenvalues_ : ndarray of shape (n,)
    embedding_ : ndarray of shape (n, n_clusters_)
    n_clusters_ : int
    """

    def __init__(self, n_clusters="auto", n_init=50, random_state=0, max_auto_k=8):
        self.n_clusters = n_clusters
        self.n_init = n_init
        self.random_state = random_state
        self.max_auto_k = max_auto_k

    def fit(self, X, y=None):
        X = check_array(X, dtype=float, ensure_min_samples=2)
        n = X.shape[0]
        if self.n_clusters != "auto":
            if not isinstance(self.n_clusters, (int, np.integer)) or not 1 <= self.n_clusters <= n:
                raise ValueError(f"n_clusters must be 'auto' or in [1, {n}], got {self.n_clusters!r}")

        self.affinity_matrix_, self.sigma_ = gaussian_affinity(X)
        lap = normalized_laplacian(self.affinity_matrix_)
        self.eigenvalues_, self.eigenvectors_ = jacobi_eigh(lap)
        k = eigengap_k(self.eigenvalues_, self.max_auto_k) if self.n_clusters == "auto" else int(self.n_clusters)
        self.n_clusters_ = k

        emb = self.eigenvectors_[:, :k].copy()
        norms = np.linalg.norm(emb, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        self.embedding_ = emb / norms
        if k == 1:
            self.labels_ = np.zeros(n, dtype=int)
        else:
            km = KMeans(n_clusters=k, init="k-means++", n_init=self.n_init, random_state=self.random_state)
            self.labels_ = _canonical_labels(km.fit_predict(self.embedding_))
        return self

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_

    def residuals(self) -> np.ndarray:
        """``||L v - lambda v||`` for each eigenpair of the fitted Laplacian."""
        check_is_fitted(self, "eigenvalues_")
        lap = normalized_laplacian(self.affinity_matrix_)
        r = lap @ self.eigenvectors_ - self.eigenvectors_ * self.eigenvalues_[None, :]
        return np.linalg.norm(r, axis=0)


def _canonical_labels(labels: np.ndarray) -> np.ndarray:
    """Relabel so clusters are numbered by first appearance."""
    mapping: dict[int, int] = {}
    out = np.empty_like(labels)
    for i, lab in enumerate(labels):
        out[i] = mapping.setdefault(int(lab), len(mapping))
    return out
