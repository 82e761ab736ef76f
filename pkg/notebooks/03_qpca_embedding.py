"""
Embedding by density-matrix exponentiation and qPCA
===================================================

rho_M is exponentiated through repeated partial swaps, phase estimation reads
the spectrum of J = xi I - rho_M, and the top clock peak (the constant
vector) is thrown away.
"""

import warnings

import numpy as np
from scipy.linalg import expm

from qlle import gen_s_curve, lle
from qlle.errors import DegeneracyWarning
from qlle.hhl import build_rho_m_qram
from qlle.linalg import trace_distance
from qlle.metrics import subspace_angle_deg
from qlle.qpca import ExpConfig, dme_evolve, qpca_spectrum, embed_quantum

# the partial-swap error falls by two per doubling of L
rng = np.random.default_rng(0)
a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
rho = a @ a.conj().T
rho /= np.trace(rho).real
sigma = np.eye(4) / 4 + 0.1 * np.diag([1, -1, 1, -1])
u = expm(-1j * rho)
exact = u @ sigma @ u.conj().T
for L in (64, 128, 256, 512):
    print("L=%4d  error %.3e" % (L, trace_distance(dme_evolve(rho, sigma, 1.0, L), exact)))

# qPCA on the S-curve rho_M; the report carries the fidelity to the classical
# embedding rows (M has a double zero here, so "eigenvectors 2 and 3" of M
# would not be well defined)
x = gen_s_curve(32, seed=7)
ref = lle(x, 4, 2)
rho_m = build_rho_m_qram(ref.weights)
report = {}
with warnings.catch_warnings():
    warnings.simplefilter("ignore", DegeneracyWarning)
    spectrum = qpca_spectrum(rho_m, 2, ExpConfig(steps=512, clock_qubits=10), oracle=ref.embedding.T, report=report)
print("qPCA eigenvalues:", np.round(report["eigenvalues"], 6))
print("exact          :", np.round(np.linalg.eigvalsh(rho_m)[1:3], 6))
print("subspace fidelity %.8f, discarded overlap with 1_N %.8f" % (report["subspace_fidelity"], report["discarded_overlap"]))

# everything end to end: quantum k-NN, HHL weights, qRAM rho_M, qPCA
with warnings.catch_warnings():
    warnings.simplefilter("ignore", DegeneracyWarning)
    y = embed_quantum(x, 4, 2)
print("angle to the classical embedding: %.3f deg" % subspace_angle_deg(y, ref.embedding))
