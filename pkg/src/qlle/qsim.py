"""A small statevector simulator.

Qubit 0 is the most significant bit of a basis index, so the flat amplitude
vector of ``n`` qubits reshapes to an ``(2,) * n`` tensor with axis ``j``
belonging to qubit ``j``.

Gate kinds: ``H``, ``X``, ``P`` (phase), ``RY``, ``SWAP`` and ``U`` (an
arbitrary unitary given as a matrix). Any gate may carry controls; a control
fires on ``|1>`` unless its entry in ``ctrl_state`` is 0.
"""

import math
import re
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import ContractError

NORM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.array(self.amplitudes, dtype=complex).ravel()
        dim = amp.size
        if dim == 0 or dim & (dim - 1):
            raise ContractError(f"state dimension must be a power of two, got {dim}")
        norm = np.linalg.norm(amp)
        if abs(norm - 1.0) > NORM_TOL:
            raise ContractError(f"state is not normalized (|psi| = {norm:.15g})")
        amp.flags.writeable = False
        object.__setattr__(self, "amplitudes", amp)

    @property
    def num_qubits(self):
        return self.amplitudes.size.bit_length() - 1

    @property
    def dim(self):
        return self.amplitudes.size

    @classmethod
    def basis(cls, index, num_qubits):
        amp = np.zeros(2**num_qubits, dtype=complex)
        amp[index] = 1.0
        return cls(amp)

    @classmethod
    def from_unnormalized(cls, vec):
        vec = np.asarray(vec, dtype=complex).ravel()
        nrm = np.linalg.norm(vec)
        if nrm == 0:
            raise ContractError("cannot normalize the zero vector")
        return cls(vec / nrm)

    def tensor(self, other):
        return StateVector(np.kron(self.amplitudes, other.amplitudes))

    def probabilities(self):
        return np.abs(self.amplitudes) ** 2

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)


class Gate(NamedTuple):
    kind: str
    targets: tuple
    controls: tuple = ()
    params: tuple = ()
    matrix: Optional[np.ndarray] = None
    ctrl_state: Optional[tuple] = None

    def qubits(self):
        return tuple(self.targets) + tuple(self.controls)


_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def ry_matrix(theta):
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def gate_matrix(g: Gate) -> np.ndarray:
    """Matrix acting on the gate's targets (controls excluded)."""
    if g.kind == "H":
        return _H
    if g.kind == "X":
        return _X
    if g.kind == "P":
        return np.diag([1.0, np.exp(1j * g.params[0])])
    if g.kind == "RY":
        return ry_matrix(g.params[0])
    if g.kind == "SWAP":
        return _SWAP
    if g.kind == "U":
        return np.asarray(g.matrix, dtype=complex)
    raise ContractError(f"unknown gate kind {g.kind!r}")


def inverse_gate(g: Gate) -> Gate:
    if g.kind in ("H", "X", "SWAP"):
        return g
    if g.kind in ("P", "RY"):
        return g._replace(params=(-g.params[0],))
    if g.kind == "U":
        return g._replace(matrix=np.asarray(g.matrix).conj().T)
    raise ContractError(f"unknown gate kind {g.kind!r}")


@dataclass
class Circuit:
    num_qubits: int
    gates: list = field(default_factory=list)

    def _add(self, kind, targets, controls=(), params=(), matrix=None, ctrl_state=None):
        targets = tuple(int(t) for t in np.atleast_1d(targets))
        controls = tuple(int(c) for c in np.atleast_1d(controls)) if np.size(controls) else ()
        if ctrl_state is not None:
            ctrl_state = tuple(int(b) for b in ctrl_state)
            if len(ctrl_state) != len(controls):
                raise ContractError("ctrl_state length must match the number of controls")
            if all(ctrl_state):
                ctrl_state = None
        qs = targets + controls
        if len(set(qs)) != len(qs):
            raise ContractError(f"gate {kind} uses repeated qubits {qs}")
        if any(q < 0 or q >= self.num_qubits for q in qs):
            raise ContractError(f"gate {kind} qubits {qs} out of range for {self.num_qubits} qubits")
        if kind == "U":
            matrix = np.asarray(matrix, dtype=complex)
            if matrix.shape != (2 ** len(targets),) * 2:
                raise ContractError(f"matrix shape {matrix.shape} does not fit {len(targets)} targets")
        if kind == "SWAP" and len(targets) != 2:
            raise ContractError("SWAP needs two targets")
        if kind in ("H", "X", "P", "RY") and len(targets) != 1:
            raise ContractError(f"{kind} acts on a single target")
        self.gates.append(Gate(kind, targets, controls, tuple(float(p) for p in params), matrix, ctrl_state))
        return self

    def h(self, q, controls=(), ctrl_state=None):
        return self._add("H", q, controls, ctrl_state=ctrl_state)

    def x(self, q, controls=(), ctrl_state=None):
        return self._add("X", q, controls, ctrl_state=ctrl_state)

    def p(self, q, theta, controls=(), ctrl_state=None):
        return self._add("P", q, controls, (theta,), ctrl_state=ctrl_state)

    def cp(self, control, target, theta):
        return self._add("P", target, (control,), (theta,))

    def ry(self, q, theta, controls=(), ctrl_state=None):
        return self._add("RY", q, controls, (theta,), ctrl_state=ctrl_state)

    def swap(self, a, b, controls=()):
        return self._add("SWAP", (a, b), controls)

    def unitary(self, matrix, targets, controls=(), ctrl_state=None):
        return self._add("U", targets, controls, matrix=matrix, ctrl_state=ctrl_state)

    def extend(self, other, offset=0):
        """Append another circuit's gates, shifting its qubit indices by ``offset``."""
        for g in other.gates:
            self._add(
                g.kind,
                tuple(t + offset for t in g.targets),
                tuple(c + offset for c in g.controls),
                g.params,
                g.matrix,
                g.ctrl_state,
            )
        return self

    def inverse(self):
        return Circuit(self.num_qubits, [inverse_gate(g) for g in reversed(self.gates)])

    def __len__(self):
        return len(self.gates)

    def to_text(self):
        return dump_circuit(self)


def _apply_gate(psi: np.ndarray, g: Gate, n: int) -> np.ndarray:
    """Apply one gate to an ``(2,)*n + batch`` tensor in place and return it."""
    u = gate_matrix(g)
    m = len(g.targets)
    if g.controls:
        cs = g.ctrl_state or (1,) * len(g.controls)
        index = [slice(None)] * psi.ndim
        for c, v in zip(g.controls, cs):
            index[c] = v
        view = psi[tuple(index)]
        remaining = [q for q in range(n) if q not in g.controls]
        axes = [remaining.index(t) for t in g.targets]
    else:
        view = psi
        axes = list(g.targets)
    if m == 1 and g.kind == "P":
        sl = [slice(None)] * view.ndim
        sl[axes[0]] = 1
        view[tuple(sl)] *= u[1, 1]
        return psi
    ut = u.reshape((2,) * (2 * m))
    out = np.tensordot(ut, view, axes=(list(range(m, 2 * m)), axes))
    view[...] = np.moveaxis(out, list(range(m)), axes)
    return psi


def run_gates(amplitudes, circuit: Circuit) -> np.ndarray:
    """Apply ``circuit`` to raw amplitudes (a flat vector or a ``(2**n, batch)`` array)."""
    amp = np.array(amplitudes, dtype=complex)
    n = circuit.num_qubits
    if amp.shape[0] != 2**n:
        raise ContractError(f"state has dimension {amp.shape[0]}, circuit needs {2**n}")
    batch = amp.shape[1:]
    psi = amp.reshape((2,) * n + batch)
    for g in circuit.gates:
        psi = _apply_gate(psi, g, n)
    return psi.reshape((2**n,) + batch)


def apply(circuit: Circuit, state: StateVector) -> StateVector:
    """Evolve ``state`` through ``circuit``; returns a new state."""
    if circuit.num_qubits != state.num_qubits:
        raise ContractError(
            f"circuit acts on {circuit.num_qubits} qubits, state has {state.num_qubits}"
        )
    out = run_gates(state.amplitudes, circuit)
    # renormalize away rounding drift only
    return StateVector(out / np.linalg.norm(out))


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    dim = 2**circuit.num_qubits
    return run_gates(np.eye(dim, dtype=complex), circuit)


def qft(q, inverse=False):
    """QFT on ``q`` qubits: ``|a> -> 2^{-q/2} sum_k exp(2 pi i a k / 2^q) |k>``.

    Built from Hadamards and controlled phases followed by the bit-reversal
    swaps, so the unitary equals the normalized DFT matrix.
    """
    if q < 1:
        raise ContractError("QFT needs at least one qubit")
    c = Circuit(q)
    for j in range(q):
        c.h(j)
        for m in range(j + 1, q):
            c.cp(m, j, 2 * np.pi / 2 ** (m - j + 1))
    for j in range(q // 2):
        c.swap(j, q - 1 - j)
    return c.inverse() if inverse else c


def iqft(q):
    return qft(q, inverse=True)


def phase_subtract(q):
    """``|a>|b> -> |a>|b - a mod 2^q>`` by Fourier-space phase arithmetic.

    The second register is moved to the Fourier basis; each pair of bits
    (a_l of the first register, k_m of the second) with ``p = l + m + 2 - q``
    in ``1..q`` gets a controlled ``R_p = diag(1, exp(-2 pi i / 2^p))``.
    """
    c = Circuit(2 * q)
    c.extend(qft(q), offset=q)
    for l in range(q):
        for m in range(q):
            p = l + m + 2 - q
            if 1 <= p <= q:
                c.cp(l, q + m, -2 * np.pi / 2**p)
    c.extend(iqft(q), offset=q)
    return c


def increment(q, offset=0, total=None):
    """``|x> -> |x + 1 mod 2^q>`` on the register starting at ``offset``."""
    c = Circuit(total or q)
    c.extend(qft(q), offset=offset)
    for m in range(q):
        c.p(offset + m, 2 * np.pi / 2 ** (m + 1))
    c.extend(iqft(q), offset=offset)
    return c


def subtractor(q):
    """``|a>|b> -> |a>|a - b mod 2^q>`` on two q-qubit registers.

    Phase subtraction leaves ``b - a`` in the second register; a two's
    complement negation (bit flips then +1) turns it into ``a - b``.
    """
    if q < 1:
        raise ContractError("subtractor needs at least one bit per register")
    c = phase_subtract(q)
    for m in range(q):
        c.x(q + m)
    c.extend(increment(q, offset=q, total=2 * q))
    return c


def encode_fixed_point(value, bits, frac_bits):
    """Two's complement code of ``round(value * 2^frac_bits)``; flags overflow."""
    scaled = int(round(value * 2**frac_bits))
    lo, hi = -(2 ** (bits - 1)), 2 ** (bits - 1) - 1
    overflow = not lo <= scaled <= hi
    return scaled % 2**bits, overflow


def decode_fixed_point(code, bits, frac_bits):
    if code >= 2 ** (bits - 1):
        code -= 2**bits
    return code / 2**frac_bits


def fixed_point_difference(x, y, bits=8, frac_bits=4, diagnostics=None):
    """Coordinate-wise ``x - y`` computed by running the subtractor circuit.

    Each coordinate pair is basis-encoded in two's complement with
    ``frac_bits`` fractional bits. Overflowing inputs or results are recorded
    in ``diagnostics['overflow']`` rather than raised.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        raise ContractError("vectors must have equal length")
    circ = subtractor(bits)
    out = np.empty_like(x)
    overflow = []
    for idx, (a, b) in enumerate(zip(x, y)):
        ca, oa = encode_fixed_point(a, bits, frac_bits)
        cb, ob = encode_fixed_point(b, bits, frac_bits)
        psi = apply(circ, StateVector.basis(ca * 2**bits + cb, 2 * bits))
        result = int(np.argmax(psi.probabilities())) % 2**bits
        out[idx] = decode_fixed_point(result, bits, frac_bits)
        exact = (ca if ca < 2 ** (bits - 1) else ca - 2**bits) - (cb if cb < 2 ** (bits - 1) else cb - 2**bits)
        if oa or ob or not -(2 ** (bits - 1)) <= exact < 2 ** (bits - 1):
            overflow.append(idx)
    if diagnostics is not None:
        diagnostics["overflow"] = overflow
    return out


@dataclass
class MeasurementRecord:
    probabilities: dict
    counts: Optional[dict] = None
    shots: Optional[int] = None


def measure(state: StateVector, qubits=None, shots=None, rng=None) -> MeasurementRecord:
    """Outcome distribution of ``qubits`` (all by default); samples when ``shots`` is set."""
    n = state.num_qubits
    qubits = list(range(n)) if qubits is None else list(qubits)
    probs = state.probabilities().reshape((2,) * n)
    other = tuple(q for q in range(n) if q not in qubits)
    marg = probs.sum(axis=other) if other else probs
    marg = np.transpose(marg, np.argsort(np.argsort(qubits))) if len(qubits) > 1 else marg
    flat = marg.ravel()
    width = len(qubits)
    table = {format(i, f"0{width}b"): float(p) for i, p in enumerate(flat)}
    if not shots:
        return MeasurementRecord(table)
    rng = np.random.default_rng(rng)
    draws = rng.multinomial(int(shots), flat / flat.sum())
    counts = {format(i, f"0{width}b"): int(c) for i, c in enumerate(draws) if c}
    return MeasurementRecord(table, counts, int(shots))


# --- text serialization -----------------------------------------------------

def _fmt_float(v):
    return repr(float(v))


def dump_circuit(circuit: Circuit) -> str:
    """One gate per line: ``KIND targets... [controls...] [angle]``.

    A ``~`` before a control index marks a control on ``|0>``. ``U`` gates
    carry their row-major matrix in braces.
    """
    lines = [f"# qubits {circuit.num_qubits}"]
    for g in circuit.gates:
        parts = [g.kind] + [str(t) for t in g.targets]
        if g.controls:
            cs = g.ctrl_state or (1,) * len(g.controls)
            parts.append("[" + " ".join(("" if v else "~") + str(c) for c, v in zip(g.controls, cs)) + "]")
        parts += [_fmt_float(p) for p in g.params]
        if g.kind == "U":
            entries = np.asarray(g.matrix).ravel()
            parts.append("{" + ",".join(f"({float(z.real)!r},{float(z.imag)!r})" for z in entries) + "}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def load_circuit(text: str) -> Circuit:
    """Inverse of :func:`dump_circuit`."""
    lines = text.strip().splitlines()
    if not lines or not lines[0].startswith("# qubits"):
        raise ContractError("circuit text must start with '# qubits N'")
    circ = Circuit(int(lines[0].split()[2]))
    for raw in lines[1:]:
        raw = raw.strip()
        if not raw or raw.startswith("#"):
            continue
        matrix = None
        if "{" in raw:
            raw, body = raw.split("{", 1)
            pairs = re.findall(r"\(([^,]+),([^)]+)\)", body)
            matrix = np.array([complex(float(a), float(b)) for a, b in pairs])
        controls, cstate = (), None
        if "[" in raw:
            head, tail = raw.split("[", 1)
            inner, after = tail.split("]", 1)
            toks = inner.split()
            controls = tuple(int(t.lstrip("~")) for t in toks)
            cstate = tuple(0 if t.startswith("~") else 1 for t in toks)
            raw = head + " " + after
        toks = raw.split()
        if not toks:
            raise ContractError("empty gate line")
        kind, rest = toks[0], toks[1:]
        targets = tuple(int(t) for t in rest if t.isdigit())
        params = tuple(float(t) for t in rest if not t.isdigit())
        if matrix is not None:
            dim = 2 ** len(targets)
            matrix = matrix.reshape(dim, dim)
        circ._add(kind, targets, controls, params, matrix, cstate)
    return circ
