"""Simulated HHL: phase estimation, eigenvalue-conditioned rotation, uncomputation
and postselection, plus the two ways of preparing ``rho_M``.

Register layout of :func:`hhl_solve` (qubit 0 first): one rotation ancilla,
``t`` clock qubits, then the system register.

Clock convention: with ``U = exp(i m t0)`` the clock reads ``tau = 2^t phi``
where ``phi = lambda t0 / 2 pi``. In signed mode clock values at or above
``2^(t-1)`` are read as negative (two's complement), which lets the same
circuit handle indefinite matrices.
"""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import linalg as sla

from .encoding import norm_from_overlap  # noqa: F401  (part of the public surface)
from .errors import ContractError, SolveError
from .lle import DEFAULT_REG, local_gram, regularized_gram
from .linalg import check_hermitian, gershgorin_bound, partial_trace, state_fidelity
from .qsim import Circuit, StateVector, iqft, run_gates

RANGE_FRACTION = 0.75


@dataclass(frozen=True)
class HhlConfig:
    """Clock width and scaling of the simulated HHL.

    ``evolution_time`` and ``gamma`` are filled in from the matrix when left
    as ``None``: the Gershgorin bound on ``|lambda|`` is placed at 0.75 of the
    clock range and ``gamma`` is the reciprocal of the largest representable
    ``f(lambda)``. ``signed=None`` picks signed clock readout whenever the
    Gershgorin lower bound is negative.
    """

    clock_qubits: int = 8
    evolution_time: Optional[float] = None
    gamma: Optional[float] = None
    eigenvalue_function: str = "inverse"
    signed: Optional[bool] = None

    def __post_init__(self):
        if self.clock_qubits < 1:
            raise ContractError("clock_qubits must be at least 1")
        if self.eigenvalue_function not in ("inverse", "identity"):
            raise ContractError(f"unknown eigenvalue function {self.eigenvalue_function!r}")
        if self.evolution_time is not None and self.evolution_time <= 0:
            raise ContractError("evolution_time must be positive")

    def resolved(self, m):
        """Copy with every automatic field fixed for matrix ``m``."""
        lo, hi = gershgorin_bound(m)
        signed = self.signed if self.signed is not None else lo < -1e-12
        t0 = self.evolution_time
        if t0 is None:
            bound = max(abs(lo), abs(hi))
            if bound == 0:
                raise ContractError("cannot scale the zero matrix into the clock range")
            t0 = RANGE_FRACTION * (np.pi if signed else 2 * np.pi) / bound
        cfg = replace(self, evolution_time=float(t0), signed=bool(signed))
        values = cfg.clock_eigenvalues()
        fvals = np.abs(cfg.f(values))
        if cfg.gamma is None:
            cfg = replace(cfg, gamma=float(1.0 / fvals.max()))
        elif np.any(cfg.gamma * fvals > 1 + 1e-12):
            raise ContractError("gamma * f(lambda) exceeds 1 for some clock value")
        return cfg

    def clock_eigenvalues(self):
        """Eigenvalue estimate attached to every clock basis value."""
        size = 2**self.clock_qubits
        tau = np.arange(size, dtype=float)
        if self.signed:
            tau = np.where(tau >= size // 2, tau - size, tau)
        return tau * 2 * np.pi / (self.evolution_time * size)

    def f(self, lam):
        lam = np.asarray(lam, dtype=float)
        if self.eigenvalue_function == "identity":
            return lam
        out = np.zeros_like(lam)
        nz = lam != 0
        out[nz] = 1.0 / lam[nz]
        return out


@dataclass
class PostselectedState:
    state: StateVector
    success_probability: float
    diagnostics: dict = field(default_factory=dict)


def _pad_hermitian(m):
    m = check_hermitian(m, tol=1e-10)
    n = m.shape[0]
    size = max(2, 1 << (n - 1).bit_length())
    out = np.zeros((size, size), dtype=m.dtype)
    out[:n, :n] = m
    return out, n


def _check_representable(m, cfg):
    lams = np.linalg.eigvalsh(m)
    phi = lams * cfg.evolution_time / (2 * np.pi)
    lo, hi = (-0.5, 0.5) if cfg.signed else (0.0, 1.0)
    bad = lams[(phi < lo - 1e-12) | (phi >= hi)]
    if bad.size:
        raise ContractError(f"eigenvalue {bad[0]:.6g} is outside the representable clock range")


def controlled_powers_circuit(u, clock_qubits, offset=0, total=None):
    """Hadamards, controlled ``u^(2^j)`` and the inverse QFT: phase estimation of ``u``.

    The clock occupies qubits ``offset .. offset + t - 1`` (most significant
    first) and the system the qubits after it. The clock then reads ``phi``
    with ``u |v> = exp(2 pi i phi) |v>``.
    """
    t = clock_qubits
    n_sys = u.shape[0].bit_length() - 1
    total = total or offset + t + n_sys
    sys_qubits = list(range(offset + t, offset + t + n_sys))
    c = Circuit(total)
    for j in range(t):
        c.h(offset + j)
    power = np.asarray(u, dtype=complex)
    # clock qubit offset+j carries weight 2^(t-1-j); walk from least significant
    for j in reversed(range(t)):
        c.unitary(power, sys_qubits, controls=(offset + j,))
        power = power @ power
    c.extend(iqft(t), offset=offset)
    return c


def phase_estimation_circuit(m, cfg: HhlConfig, offset=0, total=None):
    """Phase estimation of ``exp(i m t0)``; ``m`` must have power-of-two size."""
    u = sla.expm(1j * m * cfg.evolution_time)
    return controlled_powers_circuit(u, cfg.clock_qubits, offset, total)


def phase_estimation(m, input_state, cfg: HhlConfig) -> StateVector:
    """Clock register (first) entangled with the system after phase estimation.

    ``m`` must have its eigenvalues inside the clock range for ``cfg``
    (``lambda t0 / 2 pi`` in ``[0, 1)``, or ``[-1/2, 1/2)`` when signed).
    """
    m = check_hermitian(m, tol=1e-10)
    state = input_state if isinstance(input_state, StateVector) else StateVector(input_state)
    if state.dim != m.shape[0]:
        raise ContractError(f"input has dimension {state.dim}, matrix is {m.shape[0]}")
    cfg = cfg.resolved(m)
    _check_representable(m, cfg)
    circ = phase_estimation_circuit(m, cfg)
    psi0 = np.kron(np.eye(2**cfg.clock_qubits)[0], state.amplitudes)
    return StateVector(run_gates(psi0, circ))


def conditional_rotation_circuit(cfg: HhlConfig, total, ancilla=0, clock_offset=1):
    """Ancilla ``RY`` by ``2 arcsin(gamma f(lambda_tau))`` for every clock value ``tau``."""
    t = cfg.clock_qubits
    c = Circuit(total)
    amps = cfg.gamma * cfg.f(cfg.clock_eigenvalues())
    clock = tuple(range(clock_offset, clock_offset + t))
    for tau, a in enumerate(amps):
        if a == 0:
            continue
        bits = tuple(int(b) for b in format(tau, f"0{t}b"))
        c.ry(ancilla, 2 * np.arcsin(np.clip(a, -1.0, 1.0)), controls=clock, ctrl_state=bits)
    return c


def hhl_circuit(m, cfg: HhlConfig):
    """Full ``U_HHL``: phase estimation, rotation, inverse phase estimation."""
    t = cfg.clock_qubits
    n_sys = m.shape[0].bit_length() - 1
    total = 1 + t + n_sys
    pe = phase_estimation_circuit(m, cfg, offset=1, total=total)
    c = Circuit(total)
    c.extend(pe)
    c.extend(conditional_rotation_circuit(cfg, total))
    c.extend(pe.inverse())
    return c


def _run_hhl(m, vectors, cfg):
    """Apply ``U_HHL`` to each column of ``vectors``; return the (ancilla=1, clock=0) branch."""
    t = cfg.clock_qubits
    dim = m.shape[0]
    circ = hhl_circuit(m, cfg)
    batch = vectors.shape[1]
    psi = np.zeros((2, 2**t, dim, batch), dtype=complex)
    psi[0, 0] = vectors
    out = run_gates(psi.reshape(-1, batch), circ).reshape(2, 2**t, dim, batch)
    anc1 = float(np.sum(np.abs(out[1]) ** 2))
    return out[1, 0], anc1


def hhl_solve(m, b, cfg: HhlConfig = HhlConfig()) -> PostselectedState:
    """State proportional to ``f(m) b`` (``m^{-1} b`` for the inverse function).

    Postselection is simulated analytically: the branch with the rotation
    ancilla in ``|1>`` and the clock back in ``|0...0>`` is kept and
    renormalized. Its probability is reported as ``success_probability``; the
    ancilla-only marginal is in the diagnostics.
    """
    mp, n = _pad_hermitian(m)
    b = np.asarray(b.amplitudes if isinstance(b, StateVector) else b, dtype=complex).ravel()
    if b.size != n:
        raise ContractError(f"right-hand side has length {b.size}, matrix is {n}x{n}")
    if abs(np.linalg.norm(b) - 1.0) > 1e-10:
        raise ContractError("right-hand side must be a normalized state")
    cfg = cfg.resolved(mp)
    _check_representable(mp, cfg)
    bp = np.zeros(mp.shape[0], dtype=complex)
    bp[:n] = b
    branch, anc1 = _run_hhl(mp, bp[:, None], cfg)
    amp = branch[:, 0]
    p = float(np.vdot(amp, amp).real)
    if p < 1e-14:
        raise SolveError("postselection has zero probability: b lies in the kernel of the solve")
    # the state keeps the padded register; entries past n are dropped and
    # the rest renormalized
    vec = np.zeros(mp.shape[0], dtype=complex)
    vec[:n] = amp[:n] / np.linalg.norm(amp[:n])
    leak = float(np.linalg.norm(amp[n:]) ** 2 / p)
    diag = {
        "clock_qubits": cfg.clock_qubits,
        "evolution_time": cfg.evolution_time,
        "gamma": cfg.gamma,
        "signed": cfg.signed,
        "success_probability": p,
        "ancilla_one_probability": anc1,
        "padding_leakage": leak,
    }
    return PostselectedState(StateVector(vec), p, diag)


def solve_weight_column(data, graph, i, cfg: HhlConfig = HhlConfig(), reg=DEFAULT_REG, oracle=None):
    """Column ``i`` of ``W`` from an HHL solve of ``C_i w = 1`` on the k-neighbor block.

    The ``N x N`` padding of ``C_i`` only adds a zero block and is not
    materialized. The unit-norm HHL output is rescaled classically so its
    entries sum to one. Returns ``(column, diagnostics)``.
    """
    data = np.asarray(data, dtype=float)
    n, k = data.shape[1], graph.k
    col = np.zeros(n)
    if k == 1:
        col[graph.indices[i]] = 1.0
        return col, {"clock_qubits": cfg.clock_qubits, "success_probability": 1.0, "trivial": True}
    c, flagged = regularized_gram(local_gram(data, graph, i), reg)
    b = np.ones(k) / np.sqrt(k)
    res = hhl_solve(c, b, cfg)
    vec = res.state.amplitudes[:k]
    vec = vec * np.exp(-1j * np.angle(vec[np.argmax(np.abs(vec))]))
    x = vec.real
    total = x.sum()
    if abs(total) < 1e-12:
        raise SolveError(f"HHL solution for point {i} sums to zero; cannot rescale")
    col[graph.indices[i]] = x / total
    diag = dict(res.diagnostics, regularized=bool(flagged))
    if oracle is not None:
        diag["fidelity"] = state_fidelity(oracle[graph.indices[i]], x)
        diag["linf_error"] = float(np.max(np.abs(col - oracle)))
    return col, diag


def weights_hhl(data, graph, cfg: HhlConfig = HhlConfig(), reg=DEFAULT_REG, oracle_w=None):
    """All columns of ``W`` via :func:`solve_weight_column`; returns ``(W, per-column diagnostics)``."""
    n = np.asarray(data).shape[1]
    w = np.zeros((n, n))
    report = []
    for i in range(n):
        oracle = None if oracle_w is None else oracle_w[:, i]
        w[:, i], d = solve_weight_column(data, graph, i, cfg, reg, oracle)
        report.append(d)
    return w, report


def _pad_to_power(n):
    return max(2, 1 << (n - 1).bit_length())


def build_rho_m_qram(w):
    """``rho_M = M / tr M`` by tracing ``|i>`` out of ``sum_im (e_mi - W_mi)|i>|m>``."""
    w = np.asarray(w, dtype=float)
    n = w.shape[0]
    a = np.eye(n) - w
    if not np.any(np.abs(a) > 0):
        raise ContractError("I - W is zero, so M has zero trace")
    size = _pad_to_power(n)
    amp = np.zeros((size, size))
    amp[:n, :n] = a.T  # amp[i, m] = (I - W)[m, i]
    amp /= np.linalg.norm(amp)
    psi = amp.ravel()
    rho = partial_trace(np.outer(psi, psi), (size, size), keep=1)[:n, :n]
    return 0.5 * (rho + rho.T)


def build_rho_m_hhl(w, cfg: HhlConfig = HhlConfig(clock_qubits=10, eigenvalue_function="identity")):
    """``rho_M`` by applying ``U_HHL(I - W, lambda)`` to the maximally mixed state.

    ``I - W`` is not Hermitian, so the circuit acts on its Hermitian dilation
    ``[[0, A], [A^T, 0]]`` with ``A = I - W``; feeding ``|1>|i>`` returns
    ``|0> A|i>``. The ancilla branch ``|1>`` (with the clock back at zero) and
    the dilation qubit ``|0>`` are postselected for every basis input, and the
    mixture over ``i`` is renormalized. The result equals
    ``A rho0 A^T / tr`` up to phase-estimation error, which is ``M / tr M``
    only because ``rho0`` is proportional to the identity.
    """
    if cfg.eigenvalue_function != "identity":
        raise ContractError("build_rho_m_hhl needs the identity eigenvalue function")
    w = np.asarray(w, dtype=float)
    n = w.shape[0]
    size = _pad_to_power(n)
    a = np.zeros((size, size))
    a[:n, :n] = np.eye(n) - w
    h = np.block([[np.zeros((size, size)), a], [a.T, np.zeros((size, size))]])
    cfg = replace(cfg, signed=True if cfg.signed is None else cfg.signed).resolved(h)
    _check_representable(h, cfg)
    inputs = np.zeros((2 * size, n), dtype=complex)
    inputs[size + np.arange(n), np.arange(n)] = 1.0
    branch, _ = _run_hhl(h, inputs, cfg)
    top = branch[:size, :][:n, :]  # dilation qubit |0>
    rho = top @ top.conj().T / n
    tr = np.trace(rho).real
    if tr < 1e-14:
        raise SolveError("postselection has zero probability")
    rho = rho / tr
    return 0.5 * (rho + rho.conj().T)
