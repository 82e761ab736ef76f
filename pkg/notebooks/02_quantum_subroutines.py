"""
Building blocks of the linear-algebra design
============================================

Overlap test, quantum subtractor, HHL on a single local Gram matrix, and the
two routes to the density operator rho_M.
"""

import numpy as np

from qlle import gen_s_curve, knn, local_weights, build_m
from qlle.encoding import overlap_test, inner_product_norms, qram_neighbor_state
from qlle.qsim import StateVector, apply, subtractor, fixed_point_difference
from qlle.hhl import HhlConfig, hhl_solve, solve_weight_column, build_rho_m_qram, build_rho_m_hhl
from qlle.linalg import trace_distance

# interference test: P(0) = 1/2 + Re<x|y>/2
print("P(0) for (1,0),(0.6,0.8):", overlap_test([1, 0], [0.6, 0.8]))
a, b = np.array([1.0, 2.0, 0.5]), np.array([0.0, 1.0, 1.5])
print("distance^2 via overlap: %.12f  classical: %.12f" % (inner_product_norms(a, b), np.sum((a - b) ** 2)))

# 3-bit subtractor: |5>|3> -> |5>|2>
out = apply(subtractor(3), StateVector.basis(5 * 8 + 3, 6))
print("subtractor |5>|3> ->", divmod(int(np.argmax(out.probabilities())), 8))
print("fixed point 1.25 - 2.5 =", fixed_point_difference([1.25], [2.5], bits=8, frac_bits=4))

# HHL on C_0 of the S-curve, b = uniform
x = gen_s_curve(32, seed=7)
g = knn(x, 4)
w_ref = local_weights(x, g)
col, diag = solve_weight_column(x, g, 0, HhlConfig(clock_qubits=8), oracle=w_ref[:, 0])
print("HHL weights:", np.round(col[g.indices[0]], 4), " classical:", np.round(w_ref[g.indices[0], 0], 4))
print("fidelity %.6f, success probability %.3g" % (diag["fidelity"], diag["success_probability"]))

# a diagonal system whose eigenvalues do not sit on clock values
m2 = np.diag([1.0, 2.3])
b2 = np.ones(2) / np.sqrt(2)
exact = np.linalg.solve(m2, b2)
exact /= np.linalg.norm(exact)
for t in (4, 6, 8, 10):
    res = hhl_solve(m2, b2, HhlConfig(clock_qubits=t))
    print("t=%2d  state %s  exact %s" % (t, np.round(res.state.amplitudes.real, 5), np.round(exact, 5)))

# the qRAM state traced over the feature register gives C_i / tr C_i
_, rho_c = qram_neighbor_state(x, g, 0)
print("rho_C trace:", np.trace(rho_c))

# rho_M on a 4-point toy: qRAM (exact) vs the HHL dilation circuit
toy = gen_s_curve(4, seed=2)
w = local_weights(toy, knn(toy, 2))
m = build_m(w)
rq = build_rho_m_qram(w)
rh = build_rho_m_hhl(w)
print("|rho_qram - M/trM| = %.1e   D(rho_hhl, rho_qram) = %.2e" % (np.abs(rq - m / np.trace(m)).max(), trace_distance(rh, rq)))
