"""
Classical LLE on the S-curve
============================

The reference pipeline every quantum variant is compared against. Run with
``python notebooks/01_classical_lle.py``; it writes ``classical.svg`` next to
the working directory.
"""

import numpy as np

from qlle import gen_s_curve, knn, local_weights, build_m, embed, trustworthiness
from qlle.plot import plot

# 32 points on the S-curve, colored by the curve parameter
x, t = gen_s_curve(32, seed=7, return_param=True)
print("data", x.shape)

# four neighbors each; the graph on this sample splits into two pieces
graph = knn(x, 4)
print("neighbors of point 0:", graph.indices[0])

# k > D, so every local Gram matrix is singular and gets the trace shift
report = {}
w = local_weights(x, graph, report=report)
print("regularized points:", sum(report["regularized"]), "of", len(report["regularized"]))
print("max reconstruction residual: %.3g" % max(report["residuals"]))

m = build_m(w)
lam = np.linalg.eigvalsh(m)
print("smallest eigenvalues of M:", np.round(lam[:4], 6))  # two zeros: disconnected graph

# the embedding is taken orthogonal to the constant vector
y = embed(m, 2)
print("Y 1 =", np.round(y.sum(axis=1), 12), " Y Y^T / N =", np.round(y @ y.T / 32, 12).tolist())
print("trustworthiness (k=4): %.4f" % trustworthiness(x, y, 4))

plot(y, t, "classical.svg", title="classical LLE")
