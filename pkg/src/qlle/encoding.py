"""Amplitude encoding, the interference overlap test and the states built from them."""

import numpy as np

from .errors import ContractError
from .lle import NeighborGraph, select_neighbors
from .linalg import partial_trace
from .qsim import Circuit, StateVector, apply, measure


def _pad_length(n):
    return max(2, 1 << (int(n) - 1).bit_length())


def prepare_amplitude_state(v):
    """Amplitude-encode ``v`` (zero-padded to a power of two); returns ``(state, |v|)``."""
    v = np.asarray(v, dtype=complex).ravel()
    norm = float(np.linalg.norm(v))
    if v.size == 0 or norm == 0.0:
        raise ContractError("cannot amplitude-encode a zero vector")
    amp = np.zeros(_pad_length(v.size), dtype=complex)
    amp[: v.size] = v / norm
    return StateVector(amp), norm


def _as_state(x):
    if isinstance(x, StateVector):
        return x
    return StateVector(np.asarray(x, dtype=complex))


def overlap_test(x, y, shots=None, rng=None):
    """Probability of reading 0 on the ancilla of the interference overlap circuit.

    Prepares ``(|0>|x> + |1>|y>)/sqrt(2)``, applies a Hadamard to the ancilla
    and measures it, which gives ``1/2 + Re<x|y>/2``. This is the circuit the
    weight-construction step calls a swap test; unlike the textbook swap test
    it is sensitive to the real part of the overlap rather than its modulus.

    ``shots=None`` (or 0) returns the exact probability; otherwise the
    estimate from ``shots`` samples drawn with ``rng``.
    """
    x, y = _as_state(x), _as_state(y)
    if x.dim != y.dim:
        raise ContractError(f"states have different dimensions ({x.dim} vs {y.dim})")
    psi0 = StateVector(np.concatenate([x.amplitudes, y.amplitudes]) / np.sqrt(2))
    circ = Circuit(psi0.num_qubits).h(0)
    rec = measure(apply(circ, psi0), qubits=[0], shots=shots or None, rng=rng)
    if rec.counts is None:
        return rec.probabilities["0"]
    return rec.counts.get("0", 0) / rec.shots


def inner_product_norms(xi, xj, shots=None, rng=None):
    """Squared distance ``|xi|^2 + |xj|^2 - (4 P(0) - 2) |xi| |xj|`` from one overlap test."""
    xi = np.asarray(xi, dtype=float).ravel()
    xj = np.asarray(xj, dtype=float).ravel()
    if xi.shape != xj.shape:
        raise ContractError("vectors must have the same length")
    si, ni = prepare_amplitude_state(xi)
    sj, nj = prepare_amplitude_state(xj)
    p0 = overlap_test(si, sj, shots=shots, rng=rng)
    return ni**2 + nj**2 - (4 * p0 - 2) * ni * nj


def norm_from_overlap(ei, wi, shots=None, rng=None):
    """``|ei - wi| = 2 sqrt(1 - P(0))`` for unit vectors, via the overlap test."""
    ei = np.asarray(ei, dtype=complex).ravel()
    wi = np.asarray(wi, dtype=complex).ravel()
    for name, v in (("ei", ei), ("wi", wi)):
        if abs(np.linalg.norm(v) - 1.0) > 1e-10:
            raise ContractError(f"{name} must have unit norm")
    if ei.shape != wi.shape:
        raise ContractError("vectors must have the same length")
    se, _ = prepare_amplitude_state(ei)
    sw, _ = prepare_amplitude_state(wi)
    p0 = overlap_test(se, sw, shots=shots, rng=rng)
    return 2.0 * np.sqrt(max(0.0, 1.0 - p0))


def quantum_distance_matrix(data, shots=None, rng=None):
    """All pairwise squared distances estimated with :func:`inner_product_norms`."""
    data = np.asarray(data, dtype=float)
    n = data.shape[1]
    rng = np.random.default_rng(rng) if shots else None
    d2 = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d2[i, j] = d2[j, i] = inner_product_norms(data[:, i], data[:, j], shots=shots, rng=rng)
    return d2


def quantum_knn(data, k, shots=None, rng=None) -> NeighborGraph:
    """k-NN graph from overlap-test distance estimates.

    Selection is classical with the same tie rule as :func:`qlle.lle.knn`, so
    exact mode reproduces the classical graph. The amplitude-amplified search
    of a full quantum k-NN is not simulated.
    """
    data = np.asarray(data, dtype=float)
    if not 1 <= k < data.shape[1]:
        raise ContractError(f"need 1 <= k < N, got k={k}, N={data.shape[1]}")
    return select_neighbors(quantum_distance_matrix(data, shots=shots, rng=rng), k)


def qram_neighbor_state(data, graph, i):
    """State ``sum_jm (x_mi - x_mj) |j>|m>`` over point i's neighbors and its traced Gram operator.

    Returns ``(state, rho)`` where ``rho`` is the ``k x k`` block of
    ``tr_m |psi><psi|``, equal to ``C_i / tr C_i``.
    """
    data = np.asarray(data, dtype=float)
    if not 0 <= i < data.shape[1]:
        raise ContractError(f"point index {i} out of range")
    nb = graph.indices[i]
    diff = data[:, [i]] - data[:, nb]  # D x k
    if not np.any(diff):
        raise ContractError(f"all neighbors of point {i} coincide with it")
    k, dim = len(nb), data.shape[0]
    kp, dp = _pad_length(k), _pad_length(dim)
    amp = np.zeros((kp, dp))
    amp[:k, :dim] = diff.T
    state = StateVector(amp.ravel() / np.linalg.norm(amp))
    full = np.outer(state.amplitudes, state.amplitudes.conj())
    rho = partial_trace(full, (kp, dp), keep=0)[:k, :k]
    return state, rho
