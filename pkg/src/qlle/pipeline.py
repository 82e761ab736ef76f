"""Run configuration and orchestration of the four pipelines.

Outputs in the run directory:

- ``embedding.csv``: ``d`` rows by ``N`` columns
- ``report.json``: config echo, metrics and per-stage diagnostics (deterministic)
- ``timings.json``: wall-clock seconds per stage (kept apart so the report is reproducible)
- ``plot.svg``: scatter colored by the manifold parameter
- ``circuit.txt`` and ``trace.csv`` on request
- ``FAILED`` when a stage raised; whatever finished before it is still written
"""

import csv
import json
import os
import time
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .datasets import gen_s_curve, gen_swiss_roll, load_csv, validate_data
from .errors import ContractError, StageError
from .hhl import HhlConfig, build_rho_m_qram, hhl_circuit, weights_hhl
from .lle import DEFAULT_REG, embedding_defects, lle, local_gram, regularized_gram
from .metrics import procrustes_residual, subspace_angle_deg, trustworthiness
from .plot import plot
from .qpca import ExpConfig, qpca_spectrum, spectrum_to_embedding
from .qsim import dump_circuit
from .encoding import quantum_knn
from .vqlle import (
    EMBED_OPT,
    Ansatz,
    OptimizerConfig,
    ansatz_circuit,
    embed_end_to_end,
    embed_vqe,
    for_dimension,
    solve_weights_variational,
    write_trace,
)

try:  # Python 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

PIPELINES = ("classical", "qlle", "vqlle-e2e", "vqlle-vqe")
GENERATED = ("s-curve", "swiss-roll")


@dataclass
class VqlleSettings:
    weight_layers: int = 4
    weight_entangler: str = "ring"
    embed_entangler: str = "tree"
    embed_layers: int = 4
    penalty: float = 10.0
    alpha: float = 2.0


@dataclass
class RunConfig:
    dataset: str = "s-curve"
    n: int = 32
    seed: int = 7
    k: int = 4
    d: int = 2
    pipeline: str = "classical"
    out: str = "run"
    oracle: bool = True
    shots: int = 0
    dump_circuit: bool = False
    trace: bool = False
    reg: float = DEFAULT_REG
    hhl: HhlConfig = field(default_factory=HhlConfig)
    qpca: ExpConfig = field(default_factory=ExpConfig)
    max_refine: int = 3
    vqlle: VqlleSettings = field(default_factory=VqlleSettings)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    embed_optimizer: OptimizerConfig = EMBED_OPT

    def validate(self, n_points=None):
        n = self.n if n_points is None else n_points
        if self.pipeline not in PIPELINES:
            raise ContractError(f"unknown pipeline {self.pipeline!r}; choose from {', '.join(PIPELINES)}")
        if self.dataset not in GENERATED and not self.dataset.endswith(".csv"):
            raise ContractError(f"dataset must be one of {GENERATED} or a .csv path, got {self.dataset!r}")
        if n < 2:
            raise ContractError("need at least two points")
        if not 1 <= self.k < n:
            raise ContractError(f"need 1 <= k < n, got k={self.k}, n={n}")
        if not 1 <= self.d <= min(self.k, n - 1):
            raise ContractError(f"need 1 <= d <= min(k, n-1), got d={self.d}")
        if self.shots < 0:
            raise ContractError("shots must be >= 0 (0 means exact)")
        if self.reg <= 0:
            raise ContractError("reg must be positive")
        return self

    def to_dict(self):
        """Config echo for the report; the output directory is left out so reruns elsewhere match byte for byte."""
        out = asdict(self)
        out.pop("out")
        return out


_SECTIONS = {"hhl": HhlConfig, "qpca": ExpConfig, "vqlle": VqlleSettings, "optimizer": OptimizerConfig, "embed_optimizer": OptimizerConfig}


def _build(cls, table, where):
    names = {f.name for f in fields(cls)}
    unknown = set(table) - names
    if unknown:
        raise ContractError(f"unknown key(s) in [{where}]: {', '.join(sorted(unknown))}")
    return cls(**table)


def config_from_dict(doc) -> RunConfig:
    """``[pipeline]`` holds the run-level keys; the other tables map to module configs."""
    doc = dict(doc)
    top = dict(doc.pop("pipeline", {}))
    run_keys = {f.name for f in fields(RunConfig)} - set(_SECTIONS) - {"max_refine"}
    unknown = set(top) - run_keys
    if unknown:
        raise ContractError(f"unknown key(s) in [pipeline]: {', '.join(sorted(unknown))}")
    cfg = RunConfig(**top)
    for name, table in doc.items():
        if name not in _SECTIONS:
            raise ContractError(f"unknown config table [{name}]")
        table = dict(table)
        if name == "qpca" and "max_refine" in table:
            cfg = replace(cfg, max_refine=int(table.pop("max_refine")))
        base = asdict(getattr(cfg, name))
        base.update(table)
        cfg = replace(cfg, **{name: _build(_SECTIONS[name], base, name)})
    return cfg


def load_config(path) -> RunConfig:
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ContractError(f"{path}: {exc}") from None
    return config_from_dict(doc)


@dataclass
class RunReport:
    embedding: np.ndarray
    metrics: dict
    timings: dict
    config: dict
    diagnostics: dict = field(default_factory=dict)


def load_dataset(cfg: RunConfig):
    """Returns ``(data, labels)``; labels color the plot."""
    if cfg.dataset == "s-curve":
        return gen_s_curve(cfg.n, seed=cfg.seed, return_param=True)
    if cfg.dataset == "swiss-roll":
        return gen_swiss_roll(cfg.n, seed=cfg.seed, return_param=True)
    data = load_csv(cfg.dataset)
    return data, data[0].copy()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_embedding(y, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in np.asarray(y):
            w.writerow([f"{v:.17g}" for v in row])


def _write_json(obj, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


class _Stages:
    """Times each stage and tags failures with the stage name."""

    def __init__(self):
        self.timings = {}
        self.current = None

    def __call__(self, name):
        self.current = name
        return self

    def __enter__(self):
        self._t = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.timings[self.current] = time.perf_counter() - self._t
        if exc is not None and not isinstance(exc, StageError):
            raise StageError(self.current, exc) from exc
        return False


def _metrics(data, y, y_oracle, k):
    n = data.shape[1]
    kt = k if k < n / 2 else max(1, (n - 1) // 2)
    out = {
        "trustworthiness": trustworthiness(data, y, kt) if kt < n / 2 else None,
        "trustworthiness_k": kt,
    }
    if y_oracle is not None:
        out.update(
            subspace_angle_deg=subspace_angle_deg(y, y_oracle),
            procrustes_residual=procrustes_residual(y, y_oracle),
            trustworthiness_oracle=trustworthiness(data, y_oracle, kt) if kt < n / 2 else None,
        )
    return out


def run(cfg: RunConfig) -> RunReport:
    """Execute the configured pipeline and write its outputs to ``cfg.out``.

    Config errors surface before any computation. Errors inside a stage are
    re-raised as :class:`StageError` after partial outputs and a ``FAILED``
    marker have been written.
    """
    cfg.validate(None if cfg.dataset.endswith(".csv") else cfg.n)
    os.makedirs(cfg.out, exist_ok=True)
    failed = os.path.join(cfg.out, "FAILED")
    if os.path.exists(failed):
        os.remove(failed)
    stage = _Stages()
    diag = {}
    trace_rows = [] if cfg.trace else None
    circuit = None
    y = y_oracle = None
    labels = None
    data = None
    try:
        with stage("data"):
            data, labels = load_dataset(cfg)
            data = validate_data(data)
            cfg.validate(data.shape[1])
        k, d = cfg.k, cfg.d
        n = data.shape[1]
        if cfg.oracle or cfg.pipeline == "classical":
            with stage("oracle"):
                ref = lle(data, k, d, reg=cfg.reg)
                y_oracle = ref.embedding
                diag["oracle"] = {"eigenvalues": ref.diagnostics["eigenvalues"][: d + 2], "regularized": ref.diagnostics["regularized"]}
        shots = cfg.shots or None
        if cfg.pipeline == "classical":
            y = y_oracle
            y_oracle = y_oracle if cfg.oracle else None
        else:
            with stage("neighbors"):
                graph = quantum_knn(data, k, shots=shots, rng=cfg.seed)
            if cfg.pipeline == "qlle":
                with stage("weights"):
                    w, solves = weights_hhl(data, graph, cfg.hhl, cfg.reg, None if not cfg.oracle else ref.weights)
                    diag["hhl"] = solves
                    if cfg.dump_circuit:
                        c, _ = regularized_gram(local_gram(data, graph, 0), cfg.reg)
                        size = max(2, 1 << (k - 1).bit_length())
                        cp = np.zeros((size, size))
                        cp[:k, :k] = c
                        circuit = hhl_circuit(cp, cfg.hhl.resolved(cp))
                with stage("rho_m"):
                    rho = build_rho_m_qram(w)
                with stage("spectrum"):
                    rep = {}
                    oracle_vecs = None if y_oracle is None else (y_oracle.T / np.sqrt(n))
                    spectrum = qpca_spectrum(rho, d, cfg.qpca, max_refine=cfg.max_refine, oracle=oracle_vecs, report=rep)
                    if not cfg.trace:
                        # clock histograms are bulky; keep them only on request
                        rep.pop("clock_rounds", None)
                    diag["qpca"] = rep
                    y = spectrum_to_embedding(spectrum, n)
            else:
                with stage("weights"):
                    wa = Ansatz(max(1, (k - 1).bit_length()), cfg.vqlle.weight_layers, cfg.vqlle.weight_entangler)
                    rep = {}
                    w = solve_weights_variational(data, graph, wa, cfg.optimizer, cfg.reg, trace_rows, rep)
                    diag["l1_costs"] = rep["l1_costs"]
                if cfg.pipeline == "vqlle-e2e":
                    with stage("embedding"):
                        ea = for_dimension(d * n, cfg.vqlle.embed_layers, cfg.vqlle.embed_entangler)
                        rep = {}
                        y = embed_end_to_end(w, d, ea, cfg.embed_optimizer, cfg.vqlle.penalty, trace_rows, rep)
                        diag["l2"] = rep
                else:
                    with stage("rho_m"):
                        rho = build_rho_m_qram(w)
                    with stage("embedding"):
                        ea = for_dimension(n, cfg.vqlle.embed_layers, cfg.vqlle.embed_entangler)
                        rep = {}
                        y = embed_vqe(rho, d, ea, cfg.embed_optimizer, cfg.vqlle.alpha, trace_rows, rep)
                        diag["vqe"] = rep
                if cfg.dump_circuit:
                    circuit = ansatz_circuit(ea, rep["theta"])
        with stage("compare"):
            metrics = _metrics(data, y, y_oracle, k)
            center, white = embedding_defects(y)
            metrics.update(center_defect=center, whitening_defect=white)
        with stage("write"):
            _write_outputs(cfg, y, labels, metrics, diag, circuit, trace_rows)
    except StageError as err:
        _write_partial(cfg, y, labels, diag, circuit, trace_rows, err)
        _write_json(stage.timings, os.path.join(cfg.out, "timings.json"))
        raise
    _write_json(stage.timings, os.path.join(cfg.out, "timings.json"))
    return RunReport(y, metrics, dict(stage.timings), cfg.to_dict(), diag)


def _write_outputs(cfg, y, labels, metrics, diag, circuit, trace_rows):
    write_embedding(y, os.path.join(cfg.out, "embedding.csv"))
    _write_json({"config": cfg.to_dict(), "metrics": metrics, "diagnostics": diag}, os.path.join(cfg.out, "report.json"))
    if y.shape[0] <= 3:
        plot(y, labels, os.path.join(cfg.out, "plot.svg"), title=f"{cfg.pipeline} on {os.path.basename(cfg.dataset)}")
    if circuit is not None:
        with open(os.path.join(cfg.out, "circuit.txt"), "w") as fh:
            fh.write(dump_circuit(circuit))
    if trace_rows is not None:
        write_trace(trace_rows, os.path.join(cfg.out, "trace.csv"))


def _write_partial(cfg, y, labels, diag, circuit, trace_rows, err):
    try:
        if y is not None:
            write_embedding(y, os.path.join(cfg.out, "embedding.csv"))
        _write_json({"config": cfg.to_dict(), "diagnostics": diag, "error": {"stage": err.stage, "message": str(err.cause)}}, os.path.join(cfg.out, "report.json"))
        if trace_rows:
            write_trace(trace_rows, os.path.join(cfg.out, "trace.csv"))
    finally:
        with open(os.path.join(cfg.out, "FAILED"), "w") as fh:
            fh.write(f"stage: {err.stage}\nerror: {type(err.cause).__name__}: {err.cause}\n")
