import numpy as np
import pytest

from conftest import random_state
from qlle import knn
from qlle.encoding import (
    inner_product_norms,
    norm_from_overlap,
    overlap_test,
    prepare_amplitude_state,
    qram_neighbor_state,
    quantum_distance_matrix,
    quantum_knn,
)
from qlle.errors import ContractError
from qlle.lle import NeighborGraph, local_gram


def test_amplitude_state():
    s, norm = prepare_amplitude_state([3, 4])
    assert np.allclose(s.amplitudes, [0.6, 0.8]) and norm == 5
    s, _ = prepare_amplitude_state([1, 2, 2])
    assert s.dim == 4 and s.amplitudes[3] == 0
    v = np.random.default_rng(0).normal(size=7)
    assert abs(np.linalg.norm(prepare_amplitude_state(v)[0].amplitudes) - 1) < 1e-12
    with pytest.raises(ContractError):
        prepare_amplitude_state([0.0, 0.0])


def test_overlap_examples():
    assert overlap_test([1, 0], [1, 0]) == pytest.approx(1.0)
    assert overlap_test([1, 0], [0, 1]) == pytest.approx(0.5)
    assert overlap_test([1, 0], [0.6, 0.8]) == pytest.approx(0.8, abs=1e-15)
    with pytest.raises(ContractError):
        overlap_test([1, 0], [1, 0, 0, 0])


def test_overlap_law_random(rng):
    for _ in range(100):
        x, y = random_state(rng, 8), random_state(rng, 8)
        assert abs(overlap_test(x, y) - (0.5 + 0.5 * np.vdot(x, y).real)) < 1e-12


def test_inner_product_norms():
    assert inner_product_norms([1, 2], [1, 2]) == pytest.approx(0, abs=1e-12)
    assert inner_product_norms([1, 0], [0, 1]) == pytest.approx(2)
    rng = np.random.default_rng(3)
    for _ in range(20):
        a, b = rng.normal(size=3), rng.normal(size=3)
        assert abs(inner_product_norms(a, b) - np.sum((a - b) ** 2)) < 1e-10
    with pytest.raises(ContractError):
        inner_product_norms([0, 0], [1, 0])


def test_norm_from_overlap():
    e = np.array([1.0, 0.0])
    assert norm_from_overlap(e, e) == pytest.approx(0, abs=1e-7)
    assert norm_from_overlap(e, -e) == pytest.approx(2)
    w = np.array([0.6, 0.8])
    assert norm_from_overlap(e, w) == pytest.approx(np.linalg.norm(e - w))
    with pytest.raises(ContractError):
        norm_from_overlap(e, [1.0, 1.0])


def test_quantum_knn_matches_classical(s_curve32, swiss32):
    for data in (s_curve32, swiss32):
        for k in (1, 4, 6):
            assert quantum_knn(data, k) == knn(data, k)
    assert quantum_knn(s_curve32, 4).indices.shape == (32, 4)


def test_quantum_knn_sampled_close():
    # well separated clusters of points on a line
    x = np.vstack([np.repeat(np.arange(8.0), 1) * 3 + 1.0, np.zeros(8) + 1.0])
    exact = quantum_knn(x, 2)
    sampled = quantum_knn(x, 2, shots=10**6, rng=4)
    diff = len(exact.edges() ^ sampled.edges()) / 2
    assert diff <= 0.05 * len(exact.edges())


def test_distance_matrix_symmetric(s_curve32):
    d2 = quantum_distance_matrix(s_curve32[:, :6])
    assert np.allclose(d2, d2.T) and np.all(np.diag(d2) == 0)


def test_qram_single_neighbor():
    x = np.array([[0.0, 1.0, 3.0]])
    g = knn(x, 1)
    _, rho = qram_neighbor_state(x, g, 0)
    assert rho.shape == (1, 1) and rho[0, 0] == pytest.approx(1.0)


def test_qram_symmetric_pair():
    x = np.array([[-1.0, 0.0, 1.0], [0.0, 0.0, 0.0]])
    g = NeighborGraph(np.array([[1, 2], [0, 2], [1, 0]]), np.zeros((3, 2)))
    _, rho = qram_neighbor_state(x, g, 1)
    # differences (1, -1) along one axis: C = [[1, -1], [-1, 1]]
    assert np.allclose(rho, np.array([[1, -1], [-1, 1]]) / 2, atol=1e-15)


def test_qram_matches_gram(s_curve32):
    g = knn(s_curve32, 4)
    for i in range(32):
        state, rho = qram_neighbor_state(s_curve32, g, i)
        c = local_gram(s_curve32, g, i)
        assert np.max(np.abs(rho - c / np.trace(c))) < 1e-12
        assert abs(np.linalg.norm(state.amplitudes) - 1) < 1e-12


def test_qram_coincident_neighbors():
    x = np.zeros((2, 3))
    with pytest.raises(ContractError):
        qram_neighbor_state(x, knn(x, 2), 0)
