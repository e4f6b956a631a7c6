from __future__ import annotations

import numpy as np
import pytest
from sklearn.base import clone

from mentalnav.errors import DegenerateGeometry
from mentalnav.spectral import SpectralRegionClusterer, eigengap_k, gaussian_affinity, jacobi_eigh, normalized_laplacian


def test_jacobi_matches_numpy_on_random_matrices():
    rng = np.random.default_rng(0)
    for n in (1, 2, 5, 12):
        m = rng.normal(size=(n, n))
        m = (m + m.T) / 2
        w, v = jacobi_eigh(m)
        assert np.allclose(w, np.linalg.eigvalsh(m), atol=1e-10)
        assert np.allclose(v.T @ v, np.eye(n), atol=1e-10)
        assert np.max(np.linalg.norm(m @ v - v * w, axis=0)) < 1e-8


def test_jacobi_rejects_asymmetric():
    with pytest.raises(ValueError):
        jacobi_eigh(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_laplacian_spectrum_range():
    pts = np.random.default_rng(1).uniform(0, 10, (8, 2))
    a, sigma = gaussian_affinity(pts)
    w, _ = jacobi_eigh(normalized_laplacian(a))
    assert sigma > 0
    assert abs(w[0]) < 1e-10 and w[-1] <= 2 + 1e-10


def test_all_coincident_points_degenerate():
    with pytest.raises(DegenerateGeometry):
        gaussian_affinity(np.zeros((3, 2)))


def test_eigengap_rule():
    assert eigengap_k(np.array([0.0, 0.9])) == 1
    # trivial gap skipped: the largest later gap sits after the third eigenvalue
    assert eigengap_k(np.array([0.0, 0.9, 0.95, 1.5, 1.55])) == 3


def test_estimator_api():
    est = SpectralRegionClusterer(n_clusters=2, random_state=3)
    assert clone(est).get_params() == est.get_params()
    pts = np.array([[0, 0], [0.3, 0.1], [0.1, 0.4], [9, 9], [9.2, 9.1], [8.9, 9.3]], float)
    labels = est.fit_predict(pts)
    assert list(labels) == [0, 0, 0, 1, 1, 1]
    assert est.embedding_.shape == (6, 2)
    with pytest.raises(ValueError):
        SpectralRegionClusterer(n_clusters=7).fit(pts)
