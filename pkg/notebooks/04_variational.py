"""
Variational designs
===================

Weights from per-point L1 minimization, then the embedding either from one
ansatz holding all of Y (L2) or from VQE with deflation on rho_M (L3).
Takes about a minute.
"""

import numpy as np

from qlle import gen_s_curve, knn, lle, trustworthiness
from qlle.hhl import build_rho_m_qram
from qlle.metrics import subspace_angle_deg
from qlle.vqlle import Ansatz, solve_weights_variational, embed_end_to_end, embed_vqe
from qlle.plot import plot

x, t = gen_s_curve(16, seed=7, return_param=True)
ref = lle(x, 4, 2)
g = knn(x, 4)

# 2-qubit ring ansatz per point, AdaGrad with 3 restarts
rep = {}
w = solve_weights_variational(x, g, Ansatz(2, 4), report=rep)
print("worst L1 cost: %.2e" % max(rep["l1_costs"]))
print("max weight error: %.2e" % np.abs(w - ref.weights).max())

# end to end: 5 qubits hold the 2 x 16 entries of Y
rep = {}
y_e2e = embed_end_to_end(w, 2, report=rep)
print("L2: %.4g -> %.4g in %d iterations" % (rep["l2_initial"], rep["l2_final"], rep["iterations"]))

# VQE: three deflated eigenvectors. The first lies in the null space of M,
# which is two dimensional for this sample, so it need not be 1_N; the
# projection onto the complement of 1_N takes care of that
rep = {}
y_vqe = embed_vqe(build_rho_m_qram(w), 2, report=rep)
print("VQE eigenvalues:", np.round(rep["eigenvalues"], 6), " overlap of first with 1_N: %.4f" % rep["trivial_overlap"])

for name, y in (("end-to-end", y_e2e), ("VQE", y_vqe)):
    print("%-10s angle %.2f deg, trustworthiness %.4f (classical %.4f)"
          % (name, subspace_angle_deg(y, ref.embedding), trustworthiness(x, y, 4), trustworthiness(x, ref.embedding, 4)))

plot(y_vqe, t, "vqe.svg", title="VQLLE (VQE)")
