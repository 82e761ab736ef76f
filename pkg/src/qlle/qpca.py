"""Density-matrix exponentiation and qPCA on ``J = xi I - rho_M``.

The smallest eigenvalues of ``rho_M`` are the largest of ``J``, so phase
estimation over ``exp(-i J t)`` exposes the embedding directions as the
dominant clock peaks. The top peak belongs to the constant vector and is
dropped.

When two or more eigenvalues land in one clock peak, the peak's subspace is
fed back as the new input state and re-estimated with a longer evolution
time (same step size, more steps). The window then covers only that peak, so
the clock resolution improves by roughly the ratio of the full range to the
peak width.
"""

import warnings
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import ContractError, DegeneracyWarning
from .hhl import controlled_powers_circuit
from .linalg import canonical_signs, check_hermitian
from .qsim import run_gates

RANGE_FRACTION = 0.75
PEAK_FLOOR = 0.2  # peak bins must hold this fraction of one eigenvector's weight
MEMBER_FLOOR = 0.5  # conditioned weight needed to count a direction as in a group


@dataclass(frozen=True)
class ExpConfig:
    """Steps ``L``, total time ``t`` (``None``: fit ``J``'s range to the clock), shift ``xi`` and clock width."""

    steps: int = 512
    total_time: Optional[float] = None
    shift: float = 1.0
    clock_qubits: int = 10

    def __post_init__(self):
        if self.steps < 1:
            raise ContractError("steps must be positive")
        if self.total_time is not None and self.total_time < 0:
            raise ContractError("total_time must be non-negative")
        if self.clock_qubits < 1:
            raise ContractError("clock_qubits must be at least 1")

    @property
    def time(self):
        if self.total_time is None:
            return RANGE_FRACTION * 2 * np.pi / self.shift
        return self.total_time

    @property
    def dt(self):
        return self.time / self.steps


def _check_density(rho, name):
    rho = check_hermitian(rho, tol=1e-10)
    if abs(np.trace(rho).real - 1.0) > 1e-8:
        raise ContractError(f"{name} must have unit trace")
    return rho


def dme_step(rho, sigma, dt):
    """``tr_1{exp(-i S dt) (rho x sigma) exp(i S dt)}`` for the swap ``S``.

    Because ``S^2 = I`` the partial-swap evolution is ``cos(dt) I - i sin(dt) S``
    and the partial trace collapses to
    ``cos^2 sigma + sin^2 rho - i sin cos [rho, sigma]``.
    """
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape or rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ContractError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    c, s = np.cos(dt), np.sin(dt)
    comm = rho @ sigma - sigma @ rho
    return c * c * sigma + s * s * rho - 1j * s * c * comm


def dme_evolve(rho, sigma, t, steps):
    """``steps`` applications of :func:`dme_step`, approximating ``exp(-i rho t) sigma exp(i rho t)``."""
    dt = t / steps
    for _ in range(steps):
        sigma = dme_step(rho, sigma, dt)
    return sigma


def _step_unitary(rho, dt, shift):
    # unitary part of one reversed DME step: the commutator coefficient
    # sin(dt) cos(dt) acts as the effective time
    vals, vecs = np.linalg.eigh(rho)
    phase = np.exp(1j * vals * np.sin(2 * dt) / 2 - 1j * shift * dt)
    return (vecs * phase) @ vecs.conj().T


def exp_j(rho_m, cfg: ExpConfig = ExpConfig()):
    """``exp(-i J t)`` composed from ``L`` steps of ``exp(-i xi dt) exp(i rho dt)``.

    Each step's ``exp(i rho dt)`` is the one a DME step with ``-dt`` induces on
    the system; its effective time ``sin(2 dt)/2`` differs from ``dt`` at third
    order, so the composed error falls as ``t^3 / L^2``.
    """
    rho_m = _check_density(rho_m, "rho_m")
    if cfg.time == 0:
        return np.eye(rho_m.shape[0], dtype=complex)
    return np.linalg.matrix_power(_step_unitary(rho_m, cfg.dt, cfg.shift), cfg.steps)


def _pad(rho):
    n = rho.shape[0]
    size = max(2, 1 << (n - 1).bit_length())
    out = np.zeros((size, size), dtype=complex)
    out[:n, :n] = rho
    return out


def _estimate(rho, inputs, cfg: ExpConfig):
    """Run DME phase estimation on the purification columns ``inputs``.

    Returns the clock histogram and the joint amplitudes ``out[tau, :, b]``.
    """
    rp = _pad(rho)
    n, size = rho.shape[0], rp.shape[0]
    t = cfg.clock_qubits
    u = np.linalg.matrix_power(_step_unitary(rp, cfg.dt, cfg.shift), cfg.steps)
    circ = controlled_powers_circuit(u, t)
    batch = inputs.shape[1]
    psi = np.zeros((2**t, size, batch), dtype=complex)
    psi[0, :n] = inputs
    out = run_gates(psi.reshape(-1, batch), circ).reshape(2**t, size, batch)[:, :n]
    hist = np.einsum("tsb,tsb->t", out, out.conj()).real
    return hist, out


def _decode(cfg: ExpConfig, lo_j):
    """``J`` eigenvalue for every clock value, read in the window starting at ``lo_j``."""
    size = 2**cfg.clock_qubits
    phi = np.arange(size) / size
    t = cfg.time
    # clock reads phi with exp(2 pi i phi) = exp(-i lambda_J t)
    return lo_j + np.mod(-2 * np.pi * phi - lo_j * t, 2 * np.pi) / t


def _groups(hist, unit):
    """Split the cyclic clock histogram into peaks separated at their minima.

    Returns ``(groups, peaks)``; group ``j`` runs from the minimum before peak
    ``j`` up to the minimum after it.
    """
    size = hist.size
    left, right = np.roll(hist, 1), np.roll(hist, -1)
    peaks = np.flatnonzero((hist >= left) & (hist > right) & (hist >= PEAK_FLOOR * unit))
    if peaks.size == 0:
        peaks = np.array([int(np.argmax(hist))])
    if peaks.size == 1:
        return [np.arange(size)], peaks
    cuts = []
    for a, b in zip(peaks, np.roll(peaks, -1)):
        span = np.arange(a, a + (b - a) % size) % size
        cuts.append(span[np.argmin(hist[span])])
    groups = []
    for j in range(peaks.size):
        start, stop = cuts[j - 1], cuts[j]
        groups.append(np.arange(start, start + (stop - start) % size) % size)
    return groups, peaks


def _resolve(rho, basis, cfg: ExpConfig, lo_j, depth, rounds):
    """Eigen-directions inside ``span(basis)`` grouped by clock peak, descending in ``J``.

    Each entry is ``(lambda_J, vectors, lo, hi, depth)`` where ``[lo, hi]``
    brackets the peak's eigenvalues.
    """
    m = basis.shape[1]
    unit = 1.0 / m
    hist, out = _estimate(rho, basis / np.sqrt(m), cfg)
    values = _decode(cfg, lo_j)
    bin_width = 2 * np.pi / (cfg.time * hist.size)
    period = 2 * np.pi / cfg.time
    groups, peaks = _groups(hist, unit)
    rounds.append({"depth": depth, "time": cfg.time, "steps": cfg.steps, "histogram": hist.tolist()})
    found = []
    for g, p in zip(groups, peaks):
        amp = out[g]
        cond = np.einsum("tsb,tub->su", amp, amp.conj())
        w, v = np.linalg.eigh(0.5 * (cond + cond.conj().T))
        keep = w > MEMBER_FLOOR * unit
        if not np.any(keep):
            continue
        near = np.array([p - 1, p, p + 1]) % hist.size
        rel = np.mod(values[near] - values[p] + period / 2, period) - period / 2
        lam = values[p] + float(np.sum(hist[near] * rel) / np.sum(hist[near]))
        core = g[hist[g] >= 0.05 * unit]
        rel = np.mod(values[core] - lam + period / 2, period) - period / 2
        lo, hi = lam + rel.min() - 2 * bin_width, lam + rel.max() + 2 * bin_width
        found.append((lam, canonical_signs(v[:, keep][:, ::-1]), lo, hi, depth))
    found.sort(key=lambda f: -f[0])  # descending J = ascending rho_M
    total = sum(f[1].shape[1] for f in found)
    if total != m:
        warnings.warn(f"clock groups account for {total} of {m} directions", DegeneracyWarning, stacklevel=3)
    return found


def qpca_spectrum(rho_m, d, cfg: ExpConfig = ExpConfig(), max_refine=3, oracle=None, report=None):
    """Eigenpairs 2..d+1 (ascending) of ``rho_M`` from DME phase estimation on ``J``.

    The input is the maximally mixed state. The top group of ``J`` (``rho_M``
    eigenvalue 0, eigenvector ``1_N``) is discarded; if further directions share
    its clock peak they are kept after projecting out ``1_N``. A group that
    merges several eigenvalues is refined up to ``max_refine`` times; what
    still cannot be separated is returned as an orthonormal basis of the
    merged subspace with a :class:`DegeneracyWarning`.

    Returns a list of ``(eigenvalue, eigenvector)`` ascending in eigenvalue.
    ``oracle`` adds the subspace fidelity to ``report``: either the ``d``
    reference eigenvectors themselves or all eigenvectors of ``M`` ascending
    (columns 2..d+1 are used).
    """
    rho_m = _check_density(rho_m, "rho_m")
    n = rho_m.shape[0]
    if not 1 <= d <= n - 1:
        raise ContractError(f"need 1 <= d <= N-1, got d={d}, N={n}")
    xi = cfg.shift
    rounds = []
    found = _resolve(rho_m, np.eye(n), cfg, xi - 1.0, 0, rounds)
    ones = np.ones(n) / np.sqrt(n)

    # drop 1_N from the top-of-J group
    lam0, top, lo0, hi0, _ = found[0]
    proj = top @ (top.conj().T @ ones)
    discarded = proj / np.linalg.norm(proj) if np.linalg.norm(proj) > 1e-12 else top[:, 0]
    rest = top - np.outer(discarded, discarded.conj() @ top)
    q, s, _ = np.linalg.svd(rest, full_matrices=False)
    rest = q[:, s > 1e-8]
    queue = list(found[1:])
    if rest.shape[1]:
        queue.insert(0, (lam0, rest, lo0, hi0, 0))

    result = []
    merged = 0
    while len(result) < d and queue:
        lam, vecs, lo, hi, depth = queue.pop(0)
        if vecs.shape[1] > 1 and depth < max_refine:
            t_new = RANGE_FRACTION * 2 * np.pi / (hi - lo)
            steps = max(cfg.steps, int(np.ceil(cfg.steps * t_new / cfg.time)))
            sub_cfg = replace(cfg, total_time=t_new, steps=steps)
            queue[:0] = _resolve(rho_m, vecs, sub_cfg, lo, depth + 1, rounds)
            continue
        if vecs.shape[1] > 1:
            merged += 1
        for j in range(min(d - len(result), vecs.shape[1])):
            result.append((xi - lam, vecs[:, j]))
    if merged:
        warnings.warn(
            f"{merged} clock group(s) still merge several eigenvalues; returning their span",
            DegeneracyWarning,
            stacklevel=2,
        )

    result.sort(key=lambda r: r[0])
    if report is not None:
        report["clock_rounds"] = rounds
        report["eigenvalues"] = [float(r[0]) for r in result]
        report["discarded_overlap"] = float(abs(np.vdot(ones, discarded)) ** 2)
        if oracle is not None:
            got = np.column_stack([r[1] for r in result])
            want = np.asarray(oracle)
            if want.shape[1] != d:
                want = want[:, 1 : d + 1]
            report["subspace_fidelity"] = subspace_fidelity(got, want)
    return result


def subspace_fidelity(a, b):
    """Mean squared cosine of the principal angles between ``span(a)`` and ``span(b)``."""
    qa, _ = np.linalg.qr(np.asarray(a))
    qb, _ = np.linalg.qr(np.asarray(b))
    s = np.linalg.svd(qa.conj().T @ qb, compute_uv=False)
    return float(np.mean(np.minimum(s, 1.0) ** 2))


def spectrum_to_embedding(spectrum, n):
    """Rows ``sqrt(N) u_j^T`` from qPCA eigenvectors, orthogonal to ``1_N`` and sign-fixed."""
    # real symmetric operator: phases were fixed by canonical_signs, so the real part is the vector
    u = np.column_stack([v for _, v in spectrum]).real
    u, _ = np.linalg.qr(u - np.outer(np.ones(n) / n, np.ones(n) @ u))
    return np.sqrt(n) * canonical_signs(u).T


def embed_quantum(data, k, d, hhl_cfg=None, exp_cfg: ExpConfig = ExpConfig(), shots=None, seed=None, reg=None, report=None):
    """Linear-algebra QLLE: quantum k-NN, HHL weights, qRAM ``rho_M`` and qPCA."""
    from .encoding import quantum_knn
    from .hhl import HhlConfig, build_rho_m_qram, weights_hhl
    from .lle import DEFAULT_REG

    data = np.asarray(data, dtype=float)
    n = data.shape[1]
    graph = quantum_knn(data, k, shots=shots, rng=seed)
    w, solves = weights_hhl(data, graph, hhl_cfg or HhlConfig(), DEFAULT_REG if reg is None else reg)
    rho = build_rho_m_qram(w)
    spec_report = {}
    spectrum = qpca_spectrum(rho, d, exp_cfg, report=spec_report)
    y = spectrum_to_embedding(spectrum, n)
    center = float(np.max(np.abs(y.sum(axis=1)))) / np.sqrt(n)
    white = float(np.max(np.abs(y @ y.T / n - np.eye(d))))
    if center > 1e-2 or white > 1e-2:
        raise ContractError(f"embedding constraints violated beyond 1e-2 (center {center:.3g}, white {white:.3g})")
    if report is not None:
        report.update(graph=graph, weights=w, rho_m=rho, hhl=solves, qpca=spec_report)
    return y
