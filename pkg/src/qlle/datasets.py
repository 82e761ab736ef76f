"""Benchmark manifolds and CSV persistence for point sets.

Point sets are ``D x N`` arrays: one column per sample.
"""

import csv
import os

import numpy as np

from .errors import ContractError, ParseError

S_CURVE_T_RANGE = (-1.5 * np.pi, 1.5 * np.pi)
S_CURVE_H_RANGE = (0.0, 2.0)
SWISS_ROLL_T_RANGE = (1.5 * np.pi, 4.5 * np.pi)
SWISS_ROLL_H_RANGE = (0.0, 21.0)


def _check_n(n):
    if int(n) != n or n < 1:
        raise ContractError(f"number of points must be a positive integer, got {n!r}")
    return int(n)


def gen_s_curve(n, seed=0, t_range=S_CURVE_T_RANGE, h_range=S_CURVE_H_RANGE, return_param=False):
    """Sample ``n`` points from the S-curve.

    Returns a ``3 x n`` array ``(sin t, h, sign(t) (cos t - 1))``; with
    ``return_param=True`` the curve parameter ``t`` is returned as well (handy
    for coloring plots).
    """
    n = _check_n(n)
    rng = np.random.default_rng(seed)
    t = rng.uniform(*t_range, size=n)
    h = rng.uniform(*h_range, size=n)
    x = np.vstack([np.sin(t), h, np.sign(t) * (np.cos(t) - 1.0)])
    return (x, t) if return_param else x


def gen_swiss_roll(n, seed=0, t_range=SWISS_ROLL_T_RANGE, h_range=SWISS_ROLL_H_RANGE, return_param=False):
    """Sample ``n`` points from the Swiss roll ``(t cos t, h, t sin t)``."""
    n = _check_n(n)
    rng = np.random.default_rng(seed)
    t = rng.uniform(*t_range, size=n)
    h = rng.uniform(*h_range, size=n)
    x = np.vstack([t * np.cos(t), h, t * np.sin(t)])
    return (x, t) if return_param else x


def validate_data(data, k=None):
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.size == 0:
        raise ContractError(f"data must be a non-empty D x N matrix, got shape {data.shape}")
    if not np.all(np.isfinite(data)):
        raise ContractError("data contains NaN or Inf entries")
    if k is not None and data.shape[1] < k + 1:
        raise ContractError(f"need at least k+1={k + 1} points, got {data.shape[1]}")
    return data


def save_csv(data, path, header=True):
    """Write points as rows; 17 significant digits make the round trip exact."""
    data = validate_data(data)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow([f"x{m}" for m in range(data.shape[0])])
        for col in data.T:
            w.writerow([f"{v:.17g}" for v in col])


def load_csv(path):
    """Read a CSV of points (rows) into a ``D x N`` array.

    A first row that does not parse as numbers is treated as a header.
    """
    if not os.path.exists(path):
        raise ParseError(f"no such file: {path}")
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh)]
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise ParseError(f"{path} contains no data")
    start = 0
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        start = 1
    body = rows[start:]
    if not body:
        raise ParseError(f"{path} contains a header but no data", row=0)
    width = len(body[0])
    values = []
    for r_idx, row in enumerate(body, start=start):
        if len(row) != width:
            raise ParseError(f"ragged row: expected {width} cells, found {len(row)}", row=r_idx)
        parsed = []
        for c_idx, cell in enumerate(row):
            try:
                parsed.append(float(cell))
            except ValueError:
                raise ParseError(f"non-numeric cell {cell!r}", row=r_idx, column=c_idx) from None
        values.append(parsed)
    out = np.array(values, dtype=float).T
    if not np.all(np.isfinite(out)):
        raise ParseError(f"{path} contains NaN or Inf values")
    return np.ascontiguousarray(out)
