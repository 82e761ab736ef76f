import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlle import build_m, embed, gen_s_curve, knn, lle, local_weights
from qlle.errors import ContractError
from qlle.lle import NeighborGraph, embedding_defects, local_gram, regularized_gram


def test_knn_collinear():
    x = np.array([[0.0, 1.0, 3.0, 6.0], [0, 0, 0, 0]])
    g = knn(x, 1)
    assert list(g.indices[:, 0]) == [1, 0, 1, 2]


def test_knn_s_curve_k4(s_curve32):
    g = knn(s_curve32, 4)
    assert g.indices.shape == (32, 4)
    for i in range(32):
        assert i not in g.indices[i]
        assert len(set(g.indices[i])) == 4
        assert np.all(np.diff(g.distances[i]) >= 0)


def test_knn_duplicate_and_ties():
    # points 1 and 3 duplicate point 0; 2 and 4 tie at distance 1
    x = np.array([[0.0, 0.0, 1.0, 0.0, -1.0]])
    g = knn(x, 4)
    assert list(g.indices[0]) == [1, 3, 2, 4]
    assert g.distances[0, 0] == 0.0


def test_knn_bad_k():
    x = np.zeros((2, 3))
    for k in (0, 3):
        with pytest.raises(ContractError):
            knn(x, k)


def test_weights_single_neighbor():
    x = gen_s_curve(6, seed=2)
    w = local_weights(x, knn(x, 1))
    assert np.allclose(w.sum(axis=0), 1.0)
    assert set(np.unique(w)) <= {0.0, 1.0}


def test_weights_symmetric_pair():
    x = np.array([[-1.0, 0.0, 1.0, 5.0], [0.0, 0.0, 0.0, 0.0]])
    g = NeighborGraph(np.array([[1, 2], [0, 2], [1, 0], [2, 1]]), np.zeros((4, 2)))
    w = local_weights(x, g)
    assert w[0, 1] == pytest.approx(0.5) and w[2, 1] == pytest.approx(0.5)


def _constrained_lsq(z, xi):
    """Independent oracle: minimize |xi - z w| over w = w0 + Q c with 1^T w = 1."""
    k = z.shape[1]
    w0 = np.ones(k) / k
    q = np.linalg.svd(np.ones((1, k)))[2][1:].T
    c, *_ = np.linalg.lstsq(z @ q, xi - z @ w0, rcond=None)
    return w0 + q @ c


def test_weights_match_constrained_lsq():
    rng = np.random.default_rng(11)
    x = rng.normal(size=(3, 12))
    g = knn(x, 3)
    w = local_weights(x, g)
    for i in range(12):
        ref = _constrained_lsq(x[:, g.indices[i]], x[:, i])
        assert np.allclose(w[g.indices[i], i], ref, atol=1e-8)
        r_got = np.linalg.norm(x[:, i] - x @ w[:, i])
        r_ref = np.linalg.norm(x[:, i] - x[:, g.indices[i]] @ ref)
        assert abs(r_got - r_ref) < 1e-8


def test_weights_stationarity():
    # nonsingular C: 2 C w + mu 1 = 0 for some scalar mu
    rng = np.random.default_rng(5)
    x = rng.normal(size=(5, 10))
    g = knn(x, 3)
    w = local_weights(x, g)
    for i in range(10):
        c = local_gram(x, g, i)
        r = 2 * c @ w[g.indices[i], i]
        assert np.allclose(r, r[0], rtol=1e-9, atol=1e-12)


def test_weights_regularized_flagged(s_curve32):
    report = {}
    w = local_weights(s_curve32, knn(s_curve32, 4), report=report)
    # k > D makes every C singular
    assert all(report["regularized"])
    assert np.allclose(w.sum(axis=0), 1.0, atol=1e-10)
    c, flagged = regularized_gram(np.eye(2))
    assert not flagged and np.array_equal(c, np.eye(2))


def test_weights_graph_mismatch(s_curve32):
    with pytest.raises(ContractError):
        local_weights(s_curve32[:, :10], knn(s_curve32, 4))


def test_m_identity_weights():
    assert np.array_equal(build_m(np.eye(5)), np.zeros((5, 5)))


def test_m_explicit_expansion():
    x = gen_s_curve(4, seed=1)
    w = local_weights(x, knn(x, 2))
    ref = np.zeros((4, 4))
    for a, b in itertools.product(range(4), repeat=2):
        ref[a, b] = sum(((a == c) - w[a, c]) * ((b == c) - w[b, c]) for c in range(4))
    assert np.allclose(build_m(w), ref, atol=1e-12)


def test_m_null_vector(s_curve32):
    m = build_m(local_weights(s_curve32, knn(s_curve32, 4)))
    assert np.max(np.abs(m @ np.ones(32))) < 1e-9
    vals, vecs = np.linalg.eigh(m)
    assert abs(vals[0]) < 1e-9


def test_embed_full_spectrum_small():
    x = gen_s_curve(4, seed=3)
    m = build_m(local_weights(x, knn(x, 2)))
    y = embed(m, 3)
    assert y.shape == (3, 4)
    c, wh = embedding_defects(y)
    assert c < 1e-10 and wh < 1e-10


def test_embed_objective_matches_eigenvalues():
    x = gen_s_curve(8, seed=4)
    m = build_m(local_weights(x, knn(x, 3)))
    y, lam = embed(m, 2, return_eigenvalues=True)
    ref = np.linalg.eigvalsh(m)
    assert np.trace(y @ m @ y.T) == pytest.approx(8 * (ref[1] + ref[2]), abs=1e-9)
    assert np.allclose(lam, ref[1:3], atol=1e-12)


def test_embed_bad_d():
    with pytest.raises(ContractError):
        embed(np.eye(3), 3)


def test_lle_constraints(s_curve32):
    res = lle(s_curve32, 4, 2)
    c, wh = embedding_defects(res.embedding)
    assert c < 1e-8 and wh < 1e-8
    assert len(res.diagnostics["eigenvalues"]) == 32


@settings(max_examples=25, deadline=None)
@given(st.integers(6, 14), st.integers(1, 4), st.integers(0, 10**6))
def test_weight_invariants(n, k, seed):
    x = np.random.default_rng(seed).normal(size=(3, n))
    g = knn(x, k)
    w = local_weights(x, g)
    assert np.allclose(w.sum(axis=0), 1.0, atol=1e-10)
    for i in range(n):
        outside = np.setdiff1d(np.arange(n), g.indices[i])
        assert np.all(w[outside, i] == 0)
    m = build_m(w)
    assert np.max(np.abs(m @ np.ones(n))) < 1e-9
