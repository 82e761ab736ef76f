"""Acceptance criteria, one test each, at their stated tolerances.

Every test records a PASS/FAIL line (printed in the terminal summary and to
stdout) with the measured quantities, then asserts.
"""

import time
import warnings

import numpy as np
import pytest

from conftest import ACCEPTANCE, random_state
from qlle import build_m, gen_s_curve, gen_swiss_roll, knn, lle, local_weights
from qlle.errors import DegeneracyWarning
from qlle.hhl import HhlConfig, build_rho_m_hhl, build_rho_m_qram, hhl_solve, weights_hhl
from qlle.linalg import orthonormal_complement, state_fidelity, trace_distance
from qlle.metrics import subspace_angle_deg
from qlle.pipeline import RunConfig, run
from qlle.qpca import ExpConfig, dme_evolve, embed_quantum, qpca_spectrum
from qlle.qsim import run_gates, subtractor
from qlle.encoding import overlap_test
from qlle.vqlle import Ansatz, OptimizerConfig, ansatz_amplitudes, gradient, vqe_eigenpairs
from scipy.linalg import expm


def record(num, title, ok, detail):
    ACCEPTANCE[num] = (bool(ok), title, detail)
    print(f"[{'PASS' if ok else 'FAIL'}] {num:2d}. {title}: {detail}")
    assert ok, detail


# ------------------------------------------------------------------ 1

def test_01_classical_oracle_validity():
    start = time.perf_counter()
    worst = dict(center=0.0, white=0.0, colsum=0.0, m1=0.0, lam0=0.0)
    overlap, literal = 1.0, 1.0
    for gen in (gen_s_curve, gen_swiss_roll):
        x = gen(32, seed=7)
        res = lle(x, 4, 2)
        y, w, m = res.embedding, res.weights, res.m
        worst["center"] = max(worst["center"], np.max(np.abs(y.sum(axis=1))))
        worst["white"] = max(worst["white"], np.max(np.abs(y @ y.T / 32 - np.eye(2))))
        worst["colsum"] = max(worst["colsum"], np.max(np.abs(w.sum(axis=0) - 1)))
        worst["m1"] = max(worst["m1"], np.max(np.abs(m @ np.ones(32))))
        lam, vecs = np.linalg.eigh(m)
        worst["lam0"] = max(worst["lam0"], abs(lam[0]))
        one = np.ones(32) / np.sqrt(32)
        # overlap of 1_N with the eigenspace of the smallest eigenvalue; on a
        # disconnected neighbor graph that eigenspace has dimension > 1 and
        # the single vector LAPACK returns is an arbitrary basis element
        space = vecs[:, np.abs(lam - lam[0]) <= 1e-9]
        overlap = min(overlap, float(np.sum((space.T @ one) ** 2)))
        literal = min(literal, float((vecs[:, 0] @ one) ** 2))
    elapsed = time.perf_counter() - start
    ok = (
        worst["center"] <= 1e-8
        and worst["white"] <= 1e-8
        and worst["colsum"] <= 1e-10
        and worst["m1"] <= 1e-9
        and worst["lam0"] <= 1e-9
        and overlap >= 1 - 1e-9
        and elapsed < 5
    )
    detail = (
        f"|Y1|={worst['center']:.1e} |YY^T/N-I|={worst['white']:.1e} colsum={worst['colsum']:.1e} "
        f"|M1|={worst['m1']:.1e} lam0={worst['lam0']:.1e} overlap={overlap:.12f} "
        f"(first-vector overlap {literal:.3f}) {elapsed:.2f}s"
    )
    record(1, "classical oracle validity", ok, detail)


# ------------------------------------------------------------------ 2

def test_02_brute_force_optimality():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst_gap = np.inf
    cases = [(4, 2, 1), (5, 2, 2), (5, 3, 2), (6, 2, 2), (6, 3, 2), (6, 4, 3)]
    for n, k, d in cases:
        x = rng.normal(size=(3, n))
        m = build_m(local_weights(x, knn(x, k)))
        y0 = lle(x, k, d).embedding
        best = np.trace(y0 @ m @ y0.T)
        q = orthonormal_complement(np.ones(n))
        for _ in range(10**4):
            # uniformly random d-frame inside 1^perp: centred and whitened
            frame, _ = np.linalg.qr(rng.normal(size=(n - 1, d)))
            y = np.sqrt(n) * (q @ frame).T
            worst_gap = min(worst_gap, np.trace(y @ m @ y.T) - best)
    elapsed = time.perf_counter() - start
    ok = worst_gap >= -1e-9 and elapsed < 60
    record(2, "brute-force optimality", ok, f"min tr(YMY^T)-tr(Y*MY*^T)={worst_gap:.2e} over 10^4 frames on each of {len(cases)} datasets, {elapsed:.1f}s")


# ------------------------------------------------------------------ 3

def test_03_subtractor_exhaustive():
    start = time.perf_counter()
    failures = 0
    total = 0
    for q in range(1, 6):
        size = 2**q
        u = run_gates(np.eye(size * size, dtype=complex), subtractor(q))
        for a in range(size):
            for b in range(size):
                col = u[:, a * size + b]
                want = a * size + (a - b) % size
                if abs(abs(col[want]) - 1) > 1e-9:
                    failures += 1
                total += 1
    elapsed = time.perf_counter() - start
    record(3, "subtractor exactness", failures == 0 and elapsed < 30, f"{failures} failures in {total} pairs (q=1..5), {elapsed:.1f}s")


# ------------------------------------------------------------------ 4

def test_04_overlap_law():
    rng = np.random.default_rng(4)
    exact_err = 0.0
    for _ in range(100):
        x, y = random_state(rng, 8), random_state(rng, 8)
        exact_err = max(exact_err, abs(overlap_test(x, y) - (0.5 + 0.5 * np.vdot(x, y).real)))
    rates = {}
    for shots in (10**3, 10**4, 10**5):
        hits = 0
        for _ in range(100):
            x, y = random_state(rng, 8), random_state(rng, 8)
            est = overlap_test(x, y, shots=shots, rng=rng)
            hits += abs(est - overlap_test(x, y)) <= 5 / np.sqrt(shots)
        rates[shots] = float(hits / 100)
    ok = exact_err <= 1e-12 and all(r >= 0.95 for r in rates.values())
    record(4, "overlap law", ok, f"exact max err={exact_err:.1e}; sampled pass rates {rates}")


# ------------------------------------------------------------------ 5

def test_05_hhl_fidelity():
    rng = np.random.default_rng(5)
    fids = []
    for _ in range(10):
        lam = rng.uniform(1.0, 5.0, size=4)
        lam[:2] = 1.0, 5.0
        lam *= rng.choice([-1.0, 1.0], size=4)
        q, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
        m = (q * lam) @ q.conj().T
        b = random_state(rng, 4)
        res = hhl_solve(m, b, HhlConfig(clock_qubits=8))
        fids.append(state_fidelity(res.state.amplitudes, np.linalg.solve(m, b)))
    m = np.array([[2.0, 0.5, 0, 0], [0.5, 3.0, 0.3, 0], [0, 0.3, 1.5, 0.2], [0, 0, 0.2, 4.0]])
    b = np.ones(4) / 2
    exact = np.linalg.solve(m, b)
    trend = [state_fidelity(hhl_solve(m, b, HhlConfig(clock_qubits=t)).state.amplitudes, exact) for t in (4, 6, 8, 10)]
    monotone = all(b_ >= a - 1e-12 for a, b_ in zip(trend, trend[1:]))
    ok = min(fids) >= 0.99 and monotone
    record(5, "HHL fidelity", ok, f"min fidelity (t=8)={min(fids):.6f}; t=4,6,8,10 -> {[round(f, 6) for f in trend]}")


# ------------------------------------------------------------------ 6

def test_06_weight_recovery():
    start = time.perf_counter()
    x = gen_s_curve(32, seed=7)
    g = knn(x, 4)
    w_ref = local_weights(x, g)
    w, _ = weights_hhl(x, g, HhlConfig(clock_qubits=8))
    err = float(np.max(np.abs(w - w_ref)))
    colsum = float(np.max(np.abs(w.sum(axis=0) - 1)))
    elapsed = time.perf_counter() - start
    ok = err <= 1e-2 and colsum <= 1e-10 and elapsed < 600
    record(6, "weight recovery", ok, f"L_inf={err:.2e}, column sums within {colsum:.1e}, {elapsed:.1f}s")


# ------------------------------------------------------------------ 7

def test_07_rho_m_construction():
    qram_err, hhl_dist = 0.0, 0.0
    for seed in range(5):
        x = gen_s_curve(4, seed=seed)
        w = local_weights(x, knn(x, 2))
        m = build_m(w)
        rho = build_rho_m_qram(w)
        qram_err = max(qram_err, float(np.max(np.abs(rho - m / np.trace(m)))))
        hhl = build_rho_m_hhl(w, HhlConfig(clock_qubits=10, eigenvalue_function="identity"))
        hhl_dist = max(hhl_dist, trace_distance(hhl, rho))
    for n, k in ((32, 4), (16, 4)):
        x = gen_s_curve(n, seed=7)
        w = local_weights(x, knn(x, k))
        m = build_m(w)
        qram_err = max(qram_err, float(np.max(np.abs(build_rho_m_qram(w) - m / np.trace(m)))))
    ok = qram_err <= 1e-12 and hhl_dist <= 0.05
    record(7, "rho_M construction", ok, f"qRAM max err={qram_err:.1e}; HHL trace distance (N=4, t=10)={hhl_dist:.2e}")


# ------------------------------------------------------------------ 8

def test_08_dme_error_scaling():
    rng = np.random.default_rng(8)
    ratios = []
    for _ in range(5):
        mats = []
        for _ in range(2):
            a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            r = a @ a.conj().T
            mats.append(r / np.trace(r).real)
        rho, sigma = mats
        t = 1.0
        u = expm(-1j * rho * t)
        exact = u @ sigma @ u.conj().T
        errs = [trace_distance(dme_evolve(rho, sigma, t, L), exact) for L in (64, 128, 256, 512)]
        ratios += [a / b for a, b in zip(errs, errs[1:])]
    ok = all(1.6 <= r <= 2.4 for r in ratios)
    record(8, "DME error scaling", ok, f"error ratios per L-doubling in [{min(ratios):.3f}, {max(ratios):.3f}]")


# ------------------------------------------------------------------ 9

def test_09_qpca_spectrum():
    fid, disc = 1.0, 1.0
    for seed in (1, 2, 3, 4, 5):
        x = gen_s_curve(4, seed=seed)
        w = local_weights(x, knn(x, 2))
        m = build_m(w)
        rep = {}
        qpca_spectrum(build_rho_m_qram(w), 2, ExpConfig(steps=512, clock_qubits=10), oracle=np.linalg.eigh(m)[1], report=rep)
        fid = min(fid, rep["subspace_fidelity"])
        disc = min(disc, rep["discarded_overlap"])
    ok = fid >= 0.99 and disc >= 0.99
    record(9, "qPCA spectrum", ok, f"min subspace fidelity={fid:.6f}; min discarded overlap with 1_N={disc:.6f}")


# ------------------------------------------------------------------ 10

@pytest.mark.slow
def test_10_end_to_end_qlle():
    start = time.perf_counter()
    x = gen_s_curve(32, seed=7)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegeneracyWarning)
        y = embed_quantum(x, 4, 2, HhlConfig(clock_qubits=8), ExpConfig(steps=512, clock_qubits=10))
    angle = subspace_angle_deg(y, lle(x, 4, 2).embedding)
    elapsed = time.perf_counter() - start
    record(10, "end-to-end linear-algebra QLLE", angle <= 10 and elapsed < 1800, f"subspace angle={angle:.3f} deg, {elapsed:.1f}s")


# ------------------------------------------------------------------ 11

@pytest.mark.slow
def test_11_vqe_deflation():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(3):
        a = rng.normal(size=(8, 8))
        rho = a @ a.T
        rho /= np.trace(rho)
        vals, _ = vqe_eigenpairs(rho, 3, Ansatz(3, 4), OptimizerConfig(restarts=3, max_iter=2000))
        exact = np.linalg.eigvalsh(rho)[:3]
        ascending = bool(np.all(np.diff(vals) >= -1e-12))
        worst = max(worst, float(np.max(np.abs(vals - exact))) if ascending else np.inf)
    record(11, "VQE deflation", worst <= 1e-3, f"max |lambda_vqe - lambda| over 3 random 8x8 PSD = {worst:.2e}")


# ------------------------------------------------------------------ 12

@pytest.mark.slow
def test_12_vqlle_embeddings(tmp_path):
    parts, ok = [], True
    for design in ("vqlle-e2e", "vqlle-vqe"):
        rep = run(RunConfig(dataset="s-curve", n=16, seed=7, k=4, d=2, pipeline=design, out=str(tmp_path / design)))
        m = rep.metrics
        gap = abs(m["trustworthiness"] - m["trustworthiness_oracle"])
        ok &= gap <= 0.05 and m["subspace_angle_deg"] <= 15
        parts.append(f"{design}: angle={m['subspace_angle_deg']:.2f} deg, T={m['trustworthiness']:.4f} vs oracle {m['trustworthiness_oracle']:.4f}")
    record(12, "VQLLE embeddings", ok, "; ".join(parts))


# ------------------------------------------------------------------ 13

def test_13_gradient_checks():
    rng = np.random.default_rng(13)
    worst = 0.0
    for _ in range(20):
        qubits = int(rng.integers(1, 4))
        ent = str(rng.choice(["ring", "line", "tree"]))
        a = Ansatz(qubits, int(rng.integers(1, 4)), ent)
        h = rng.normal(size=(a.dim, a.dim))
        h = h + h.T

        def cost(th, a=a, h=h):
            psi = ansatz_amplitudes(a, th)
            return psi @ h @ psi

        th = rng.uniform(0, 2 * np.pi, a.n_params)
        g_shift = gradient(cost, th, method="shift", controlled=a.controlled_mask())
        g_fd = gradient(cost, th, method="fd", h=1e-5)
        worst = max(worst, float(np.max(np.abs(g_shift - g_fd))))
    record(13, "gradient checks", worst <= 1e-4, f"max |shift - fd| over 20 draws = {worst:.2e}")


# ------------------------------------------------------------------ 14

@pytest.mark.slow
def test_14_determinism(tmp_path):
    differing = []
    configs = [
        RunConfig(pipeline="classical"),
        RunConfig(pipeline="qlle"),
        RunConfig(pipeline="vqlle-e2e", n=8, k=3),
        RunConfig(pipeline="vqlle-vqe", n=8, k=3),
    ]
    for cfg in configs:
        outs = []
        for rep in ("a", "b"):
            out = tmp_path / f"{cfg.pipeline}-{rep}"
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                run(RunConfig(**{**cfg.__dict__, "out": str(out)}))
            outs.append(out)
        for name in ("embedding.csv", "report.json", "plot.svg"):
            if (outs[0] / name).read_bytes() != (outs[1] / name).read_bytes():
                differing.append(f"{cfg.pipeline}/{name}")
    record(14, "determinism", not differing, f"byte-identical outputs for {len(configs)} pipelines" if not differing else f"differ: {differing}")
