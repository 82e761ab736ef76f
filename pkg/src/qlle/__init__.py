"""Quantum locally linear embedding, simulated classically.

Subpackages by stage:

- :mod:`qlle.lle` classical reference pipeline
- :mod:`qlle.qsim`, :mod:`qlle.encoding` statevector simulator and state preparation
- :mod:`qlle.hhl` HHL weights and ``rho_M``
- :mod:`qlle.qpca` density-matrix exponentiation and qPCA
- :mod:`qlle.vqlle` variational designs
- :mod:`qlle.pipeline`, :mod:`qlle.cli` orchestration
"""

from .datasets import gen_s_curve, gen_swiss_roll, load_csv, save_csv
from .errors import ContractError, ConvergenceWarning, DegeneracyWarning, ParseError, SolveError, StageError
from .lle import build_m, embed, knn, lle, local_weights
from .metrics import compare, trustworthiness

__version__ = "0.1.0"
