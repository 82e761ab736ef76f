"""Variational QLLE: ansatz circuits, the costs L1/L2/L3, gradients, AdaGrad and
the two embedding designs (end-to-end and VQE with deflation).

Costs take parameter arrays of shape ``(P,)`` or ``(B, P)``; the batched form
lets a whole gradient's worth of shifted circuits run as one tensor contraction.
"""

import csv
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ContractError, ConvergenceWarning, DegeneracyWarning
from .lle import DEFAULT_REG, local_gram, regularized_gram
from .linalg import canonical_signs, check_hermitian
from .qsim import Circuit, StateVector


# ---------------------------------------------------------------- ansatz


@dataclass(frozen=True)
class Ansatz:
    """``layers`` rounds of one ``Ry`` per qubit followed by a CZ entangler.

    ``entangler="tree"`` selects a different family: a cascade where qubit
    ``l`` gets an ``Ry`` controlled on every value of qubits ``0..l-1``
    (``2^n - 1`` parameters, ``layers`` ignored). It reaches every real state
    and is what the embedding designs use; the layered CZ circuits stall on
    generic targets from four qubits up.

    The state is real for every ``theta``, which matches the real vectors
    (weights, embeddings, eigenvectors of a real ``rho_M``) it has to represent.
    """

    qubits: int
    layers: int = 4
    entangler: str = "ring"

    def __post_init__(self):
        if self.qubits < 1 or self.layers < 1:
            raise ContractError("ansatz needs at least one qubit and one layer")
        if self.entangler not in ("ring", "line", "tree"):
            raise ContractError(f"unknown entangler {self.entangler!r}")

    @property
    def n_params(self):
        if self.entangler == "tree":
            return 2**self.qubits - 1
        return self.qubits * self.layers

    @property
    def dim(self):
        return 2**self.qubits

    def pairs(self):
        n = self.qubits
        if n == 1:
            return []
        line = [(q, q + 1) for q in range(n - 1)]
        if self.entangler == "ring" and n > 2:
            line.append((n - 1, 0))
        return line

    def controlled_mask(self):
        """Parameters that sit on controlled rotations (all but the first in a tree)."""
        mask = np.zeros(self.n_params, bool)
        if self.entangler == "tree":
            mask[1:] = True
        return mask

    def cz_signs(self):
        """Diagonal of one entangler layer."""
        idx = np.arange(self.dim)
        bits = (idx[:, None] >> (self.qubits - 1 - np.arange(self.qubits))) & 1
        sign = np.ones(self.dim)
        for a, b in self.pairs():
            sign[(bits[:, a] & bits[:, b]) == 1] *= -1
        return sign


def for_dimension(dim, layers=None, entangler="ring"):
    """Smallest ansatz whose register holds ``dim`` amplitudes."""
    qubits = max(1, int(np.ceil(np.log2(max(dim, 2)))))
    return Ansatz(qubits, 4 if layers is None else layers, entangler)


def ansatz_circuit(a: Ansatz, theta) -> Circuit:
    theta = _check_theta(a, theta)
    c = Circuit(a.qubits)
    if a.entangler == "tree":
        for level in range(a.qubits):
            controls = tuple(range(level))
            for v in range(2**level):
                bits = tuple(int(b) for b in format(v, f"0{level}b")) if level else ()
                c.ry(level, float(theta[2**level - 1 + v]), controls=controls, ctrl_state=bits)
        return c
    for layer in range(a.layers):
        for q in range(a.qubits):
            c.ry(q, float(theta[layer * a.qubits + q]))
        for x, y in a.pairs():
            c.cp(x, y, np.pi)
    return c


def _check_theta(a, theta):
    theta = np.asarray(theta, dtype=float)
    if theta.shape[-1] != a.n_params:
        raise ContractError(f"ansatz expects {a.n_params} parameters, got {theta.shape[-1]}")
    return theta


def ansatz_amplitudes(a: Ansatz, theta):
    """Real amplitudes of shape ``(dim,)`` or ``(B, dim)``."""
    theta = _check_theta(a, theta)
    single = theta.ndim == 1
    th = np.atleast_2d(theta)
    if a.entangler == "tree":
        out = _tree_amplitudes(th, a.qubits)
        return out[0] if single else out
    b, n = th.shape[0], a.qubits
    psi = np.zeros((b,) + (2,) * n)
    psi[(slice(None),) + (0,) * n] = 1.0
    sign = a.cz_signs().reshape((2,) * n)
    for layer in range(a.layers):
        for q in range(n):
            half = th[:, layer * n + q] / 2
            c, s = np.cos(half), np.sin(half)
            psi = np.moveaxis(psi, q + 1, 1)
            p0, p1 = psi[:, 0], psi[:, 1]
            cb = c.reshape((b,) + (1,) * (n - 1))
            sb = s.reshape((b,) + (1,) * (n - 1))
            psi = np.stack([cb * p0 - sb * p1, sb * p0 + cb * p1], axis=1)
            psi = np.moveaxis(psi, 1, q + 1)
        psi = psi * sign
    out = psi.reshape(b, -1)
    return out[0] if single else out


def _tree_amplitudes(th, n):
    # level l splits every prefix amplitude by cos/sin of its own angle
    amps = np.ones((th.shape[0], 1))
    for level in range(n):
        half = th[:, 2**level - 1 : 2 ** (level + 1) - 1] / 2
        amps = np.stack([amps * np.cos(half), amps * np.sin(half)], axis=-1).reshape(th.shape[0], -1)
    return amps


def ansatz_state(a: Ansatz, theta) -> StateVector:
    return StateVector(ansatz_amplitudes(a, theta).astype(complex))


# ---------------------------------------------------------------- gradients and AdaGrad


def _eval(cost, thetas):
    thetas = np.atleast_2d(thetas)
    if getattr(cost, "batched", False):
        return np.asarray(cost(thetas), dtype=float)
    return np.array([cost(t) for t in thetas], dtype=float)


# four-term rule for gates whose generator has eigenvalues {0, +-1/2}
_D_PLUS = (np.sqrt(2) + 1) / (4 * np.sqrt(2))
_D_MINUS = (np.sqrt(2) - 1) / (4 * np.sqrt(2))


def gradient(cost: Callable, theta, method="shift", h=1e-5, controlled=None):
    """Gradient by the parameter-shift rule or central finite differences.

    The shift rule ``[f(theta + pi/2 e_j) - f(theta - pi/2 e_j)] / 2`` is exact
    for expectation values of ``Ry``-parameterized circuits. Parameters of
    controlled ``Ry`` gates (``controlled`` mask, see
    :meth:`Ansatz.controlled_mask`) need the four-term rule with shifts
    ``pi/2`` and ``3 pi/2``. Use ``"fd"`` for costs with classical
    post-processing.
    """
    theta = np.asarray(theta, dtype=float)
    p = theta.size
    eye = np.eye(p)
    if method == "fd":
        vals = _eval(cost, np.vstack([theta + h * eye, theta - h * eye]))
        return (vals[:p] - vals[p:]) / (2 * h)
    if method != "shift":
        raise ContractError(f"unknown gradient method {method!r}")
    vals = _eval(cost, np.vstack([theta + np.pi / 2 * eye, theta - np.pi / 2 * eye]))
    g = (vals[:p] - vals[p:]) / 2
    mask = np.zeros(p, bool) if controlled is None else np.asarray(controlled, bool)
    if mask.any():
        idx = np.flatnonzero(mask)
        e = eye[idx]
        far = _eval(cost, np.vstack([theta + 1.5 * np.pi * e, theta - 1.5 * np.pi * e]))
        m = idx.size
        g[idx] = _D_PLUS * (vals[idx] - vals[p + idx]) - _D_MINUS * (far[:m] - far[m:])
    return g


@dataclass
class OptimizerState:
    learning_rate: float = 0.1
    epsilon: float = 1e-8
    accumulator: Optional[np.ndarray] = None
    iteration: int = 0


def adagrad_step(state: OptimizerState, theta, grad):
    theta = np.asarray(theta, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if theta.shape != grad.shape:
        raise ContractError("theta and gradient differ in length")
    acc = np.zeros_like(theta) if state.accumulator is None else state.accumulator
    acc = acc + grad * grad
    new = theta - state.learning_rate * grad / np.sqrt(acc + state.epsilon)
    return OptimizerState(state.learning_rate, state.epsilon, acc, state.iteration + 1), new


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = 0.1
    epsilon: float = 1e-8
    max_iter: int = 2000
    tol: float = 1e-8
    window: int = 50
    restarts: int = 3
    seed: int = 0
    threshold: float = 1e-3  # best cost above this triggers a convergence warning (L1 only)


# The embedding costs have eigen-gaps of 1e-4 relative to their scale; the
# default step and budget stop well short of resolving them.
EMBED_OPT = OptimizerConfig(learning_rate=0.3, max_iter=10000)


@dataclass
class OptimizeResult:
    theta: np.ndarray
    cost: float
    initial_cost: float
    iterations: int
    trace: list = field(default_factory=list)


def minimize(cost, n_params, opt: OptimizerConfig = OptimizerConfig(), method="fd", init=None, tag="", controlled=None):
    """AdaGrad with seeded random restarts; returns the best parameters seen.

    Each restart stops when its best cost improved by less than ``tol`` over
    the last ``window`` iterations. ``trace`` rows are
    ``(tag, restart, iteration, cost, gradient norm)``.
    """
    rng = np.random.default_rng(opt.seed)
    best = None
    trace = []
    first_cost = None
    for r in range(opt.restarts):
        theta = rng.uniform(0, 2 * np.pi, n_params) if init is None or r > 0 else np.asarray(init, float)
        state = OptimizerState(opt.learning_rate, opt.epsilon)
        history = []
        run_best, run_theta = np.inf, theta
        for it in range(opt.max_iter):
            g = gradient(cost, theta, method=method, controlled=controlled)
            c = float(_eval(cost, theta)[0])
            if first_cost is None:
                first_cost = c
            trace.append((tag, r, it, c, float(np.linalg.norm(g))))
            if c < run_best:
                run_best, run_theta = c, theta.copy()
            history.append(run_best)
            if it >= opt.window and history[-opt.window - 1] - run_best < opt.tol:
                break
            state, theta = adagrad_step(state, theta, g)
        if best is None or run_best < best.cost:
            best = OptimizeResult(run_theta, run_best, first_cost, it + 1)
    best.trace = trace
    best.initial_cost = first_cost
    return best


def write_trace(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["stage", "restart", "iteration", "cost", "gradient_norm"])
        for tag, r, it, c, g in rows:
            w.writerow([tag, r, it, f"{c:.17g}", f"{g:.17g}"])


# ---------------------------------------------------------------- L1: weights


def _block(data, graph, i, reg):
    c, _ = regularized_gram(local_gram(data, graph, i), reg)
    return c


def l1_terms(c_blocks, amplitudes):
    """Per-point ``1 - |<1|C psi>|^2 / (k |C psi|^2)``; zero ``C psi`` counts as 1.

    ``amplitudes`` has one row per point (or a leading batch axis); entries
    past ``k`` are padding and are masked out.
    """
    k = c_blocks.shape[-1]
    psi = amplitudes[..., :k]
    cpsi = np.einsum("...ij,...j->...i", c_blocks, psi)
    norm2 = np.sum(cpsi * cpsi, axis=-1)
    ov = np.sum(cpsi, axis=-1) ** 2
    out = np.ones_like(norm2)
    ok = norm2 > 1e-300
    out[ok] = 1.0 - ov[ok] / (k * norm2[ok])
    return out


def cost_l1(data, graph, ansatz: Ansatz, thetas, reg=DEFAULT_REG, flags=None):
    """``1 - (1/N) sum_i overlap_i^2`` with ``overlap_i`` the normalized ``<1|C_i|psi_i>``.

    The overlap is taken on the k neighbor slots, the only support ``C_i`` has.
    Points whose ``C_i psi_i`` vanishes contribute 1 and are listed in
    ``flags`` when given.
    """
    data = np.asarray(data, dtype=float)
    thetas = np.asarray(thetas, dtype=float)
    n = data.shape[1]
    if thetas.shape != (n, ansatz.n_params):
        raise ContractError(f"need one parameter block per point: expected {(n, ansatz.n_params)}")
    blocks = np.stack([_block(data, graph, i, reg) for i in range(n)])
    amps = ansatz_amplitudes(ansatz, thetas)
    terms = l1_terms(blocks, amps)
    if flags is not None:
        psi = amps[:, : graph.k]
        zero = np.linalg.norm(np.einsum("nij,nj->ni", blocks, psi), axis=1) <= 1e-150
        flags.extend(int(i) for i in np.flatnonzero(zero))
    return float(np.mean(terms))


def solve_weights_variational(data, graph, ansatz: Optional[Ansatz] = None, opt: OptimizerConfig = OptimizerConfig(), reg=DEFAULT_REG, trace=None, report=None):
    """Minimize each point's L1 term and rescale the masked state to column sum 1."""
    data = np.asarray(data, dtype=float)
    n, k = data.shape[1], graph.k
    ansatz = ansatz or for_dimension(k, layers=4)
    if ansatz.dim < k:
        raise ContractError(f"ansatz register holds {ansatz.dim} amplitudes, need {k}")
    w = np.zeros((n, n))
    costs = []
    for i in range(n):
        if k == 1:
            w[graph.indices[i], i] = 1.0
            costs.append(0.0)
            continue
        c = _block(data, graph, i, reg)

        def cost(th, c=c):
            return l1_terms(c, ansatz_amplitudes(ansatz, np.atleast_2d(th)))

        cost.batched = True
        res = minimize(cost, ansatz.n_params, _seeded(opt, i), method="fd", tag=f"w{i}")
        if trace is not None:
            trace.extend(res.trace)
        x = ansatz_amplitudes(ansatz, res.theta)[:k]
        total = x.sum()
        if abs(total) < 1e-12:
            raise ContractError(f"variational weights for point {i} sum to zero")
        w[graph.indices[i], i] = x / total
        costs.append(res.cost)
    worst = max(costs) if costs else 0.0
    if worst > opt.threshold:
        warnings.warn(f"L1 optimization left cost {worst:.3g} > {opt.threshold}", ConvergenceWarning, stacklevel=2)
    if report is not None:
        report["l1_costs"] = costs
    return w


def _seeded(opt, offset):
    return OptimizerConfig(**{**opt.__dict__, "seed": opt.seed * 100003 + offset})


# ---------------------------------------------------------------- L2: end-to-end embedding


def amplitudes_to_y(amplitudes, d, n):
    """Read ``Y`` (``d x N``) from the first ``d N`` amplitudes, scaled to ``|Y|_F^2 = N d``."""
    a = np.asarray(amplitudes)[..., : d * n]
    a = a / np.linalg.norm(a, axis=-1, keepdims=True)
    return np.sqrt(n * d) * a.reshape(a.shape[:-1] + (d, n))


def l2_value(y, w, penalty):
    """``|Y(I - W)|_F^2 + penalty (|Y 1|^2 + |Y Y^T / N - I|_F^2)``; accepts a batch of ``Y``."""
    n = w.shape[0]
    d = y.shape[-2]
    r = y - y @ w
    main = np.sum(r * r, axis=(-2, -1))
    center = np.sum(y.sum(axis=-1) ** 2, axis=-1)
    g = y @ np.swapaxes(y, -1, -2) / n - np.eye(d)
    return main + penalty * (center + np.sum(g * g, axis=(-2, -1)))


def cost_l2(w, ansatz: Ansatz, theta_y, penalty=10.0, d=2):
    w = np.asarray(w, dtype=float)
    n = w.shape[0]
    if ansatz.dim < d * n:
        raise ContractError(f"ansatz holds {ansatz.dim} amplitudes, need d*N = {d * n}")
    y = amplitudes_to_y(ansatz_amplitudes(ansatz, theta_y), d, n)
    return l2_value(y, w, penalty)


def whiten(y):
    """Center the rows and apply symmetric orthogonalization so ``Y Y^T / N = I``."""
    y = np.asarray(y, dtype=float)
    n = y.shape[1]
    y = y - y.mean(axis=1, keepdims=True)
    g = y @ y.T / n
    vals, vecs = np.linalg.eigh(g)
    if vals.min() <= 1e-14 * max(vals.max(), 1e-300):
        raise ContractError("embedding rows are linearly dependent; cannot whiten")
    return (vecs / np.sqrt(vals)) @ vecs.T @ y


def embed_end_to_end(w, d, ansatz: Optional[Ansatz] = None, opt: OptimizerConfig = EMBED_OPT, penalty=10.0, trace=None, report=None):
    """Minimize L2 over one ansatz holding all of ``Y``, then whiten exactly."""
    w = np.asarray(w, dtype=float)
    n = w.shape[0]
    ansatz = ansatz or for_dimension(d * n, entangler="tree")

    def cost(th):
        return cost_l2(w, ansatz, th, penalty, d)

    cost.batched = True
    res = minimize(cost, ansatz.n_params, opt, method="fd", tag="y")
    if trace is not None:
        trace.extend(res.trace)
    if report is not None:
        report.update(l2_initial=res.initial_cost, l2_final=res.cost, iterations=res.iterations, theta=res.theta.tolist())
    y = whiten(amplitudes_to_y(ansatz_amplitudes(ansatz, res.theta), d, n))
    return _canonical_rows(y)


def _canonical_rows(y):
    return canonical_signs(y.T).T


# ---------------------------------------------------------------- L3: VQE with deflation


def cost_l3(rho_m, ansatz: Ansatz, theta, deflation=()):
    """``<psi|rho|psi> + sum_i alpha_i |<psi|phi_i>|^2`` for ``deflation = [(phi_i, alpha_i), ...]``."""
    rho = np.asarray(rho_m)
    psi = ansatz_amplitudes(ansatz, theta)
    val = np.einsum("...i,ij,...j->...", psi, rho.real, psi)
    for phi, alpha in deflation:
        phi = np.asarray(phi.amplitudes if isinstance(phi, StateVector) else phi)
        if abs(np.linalg.norm(phi) - 1.0) > 1e-8:
            raise ContractError("deflation states must be normalized")
        val = val + alpha * np.abs(psi @ phi.conj()) ** 2
    return val


def _pad_operator(rho):
    n = rho.shape[0]
    size = max(2, 1 << (n - 1).bit_length())
    out = np.zeros((size, size))
    out[:n, :n] = rho.real
    return out, n


def vqe_eigenpairs(rho_m, count, ansatz: Optional[Ansatz] = None, opt: OptimizerConfig = OptimizerConfig(), alpha=2.0, trace=None, thetas=None):
    """Lowest ``count`` eigenpairs by sequential L3 minimization with deflation.

    Padded directions (when ``N`` is not a power of two) are deflated from the
    start with weight ``10 alpha``. Returns ``(values, vectors)`` with vectors
    as columns of length ``N``.
    """
    rho = check_hermitian(rho_m, tol=1e-10)
    rp, n = _pad_operator(rho)
    size = rp.shape[0]
    ansatz = ansatz or for_dimension(size, entangler="tree")
    if ansatz.dim != size:
        raise ContractError(f"ansatz dimension {ansatz.dim} does not match padded operator {size}")
    deflation = [(np.eye(size)[j], 10 * alpha) for j in range(n, size)]
    values, vectors = [], []
    for j in range(count):

        def cost(th, defl=tuple(deflation)):
            return cost_l3(rp, ansatz, th, defl)

        cost.batched = True
        res = minimize(
            cost, ansatz.n_params, _seeded(opt, j), method="shift", tag=f"e{j}", controlled=ansatz.controlled_mask()
        )
        if trace is not None:
            trace.extend(res.trace)
        if thetas is not None:
            thetas.append(res.theta)
        psi = ansatz_amplitudes(ansatz, res.theta)
        values.append(float(psi @ rp @ psi))
        vectors.append(psi[:n] / np.linalg.norm(psi[:n]))
        deflation.append((psi, alpha))
    return np.array(values), np.column_stack(vectors)


def embed_vqe(rho_m, d, ansatz: Optional[Ansatz] = None, opt: OptimizerConfig = EMBED_OPT, alpha=2.0, trace=None, report=None):
    """Rows of ``Y`` are VQE eigenvectors 2..d+1 of ``rho_M``, whitened and sign-fixed.

    The ``d + 1`` deflated states are projected onto the complement of
    ``1_N`` and a Rayleigh-Ritz step on that span picks the ``d`` lowest
    directions. When ``rho_M`` has a degenerate zero eigenvalue (a
    disconnected neighbor graph) the first state found need not be ``1_N``;
    the projection removes ``1_N`` wherever it landed.
    """
    rho = check_hermitian(rho_m, tol=1e-10).real
    n = rho.shape[0]
    if not 1 <= d <= n - 1:
        raise ContractError(f"need 1 <= d <= N-1, got d={d}, N={n}")
    thetas = []
    values, vectors = vqe_eigenpairs(rho, d + 1, ansatz, opt, alpha, trace, thetas)
    if np.any(np.abs(np.diff(values)) < 1e-6):
        warnings.warn("consecutive VQE eigenvalues differ by less than 1e-6", DegeneracyWarning, stacklevel=2)
    ones = np.ones(n) / np.sqrt(n)
    proj = vectors - np.outer(ones, ones @ vectors)
    q, s, _ = np.linalg.svd(proj, full_matrices=False)
    q = q[:, :d]
    ritz, rot = np.linalg.eigh(q.T @ rho @ q)
    u = q @ rot
    if report is not None:
        report.update(
            eigenvalues=values.tolist(),
            ritz_values=ritz.tolist(),
            trivial_overlap=float(abs(vectors[:, 0] @ ones) ** 2),
            theta=thetas[1].tolist(),
        )
    return _canonical_rows(whiten(np.sqrt(n) * u.T))
