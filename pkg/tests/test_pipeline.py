import json

import numpy as np
import pytest

from qlle import gen_s_curve, save_csv
from qlle.cli import main
from qlle.errors import ContractError, StageError
from qlle.pipeline import RunConfig, config_from_dict, load_config, run
from qlle.qsim import load_circuit


def test_classical_run(tmp_path):
    rep = run(RunConfig(out=str(tmp_path)))
    assert rep.embedding.shape == (2, 32)
    assert rep.metrics["center_defect"] < 1e-8 and rep.metrics["whitening_defect"] < 1e-8
    for name in ("embedding.csv", "report.json", "plot.svg", "timings.json"):
        assert (tmp_path / name).exists()
    doc = json.loads((tmp_path / "report.json").read_text())
    assert "out" not in doc["config"]
    assert doc["metrics"]["trustworthiness"] > 0.8
    y = np.loadtxt(tmp_path / "embedding.csv", delimiter=",", ndmin=2)
    assert y.shape[0] == 2


@pytest.mark.slow
def test_qlle_run(tmp_path):
    rep = run(RunConfig(pipeline="qlle", out=str(tmp_path), dump_circuit=True))
    assert rep.metrics["subspace_angle_deg"] <= 10.0
    circ = load_circuit((tmp_path / "circuit.txt").read_text())
    assert circ.num_qubits == 1 + 8 + 2


@pytest.mark.parametrize(
    "kw",
    [dict(k=32), dict(k=0), dict(d=5), dict(pipeline="magic"), dict(dataset="moons"), dict(shots=-1), dict(reg=0.0)],
)
def test_config_rejected_before_work(tmp_path, kw):
    out = tmp_path / "out"
    with pytest.raises(ContractError):
        run(RunConfig(out=str(out), **kw))
    assert not out.exists()


def test_toml_config(tmp_path):
    p = tmp_path / "cfg.toml"
    p.write_text(
        "[pipeline]\npipeline = 'qlle'\nn = 16\n\n[hhl]\nclock_qubits = 6\n\n[qpca]\nsteps = 128\nmax_refine = 1\n\n"
        "[optimizer]\nrestarts = 2\n"
    )
    cfg = load_config(p)
    assert (cfg.pipeline, cfg.n, cfg.hhl.clock_qubits, cfg.qpca.steps, cfg.max_refine) == ("qlle", 16, 6, 128, 1)
    assert cfg.optimizer.restarts == 2 and cfg.optimizer.max_iter == 2000


@pytest.mark.parametrize("doc", [{"pipeline": {"colour": 1}}, {"hhl": {"bits": 3}}, {"extras": {}}])
def test_toml_unknown_keys(doc):
    with pytest.raises(ContractError):
        config_from_dict(doc)


def test_bad_toml(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("[pipeline\n")
    with pytest.raises(ContractError):
        load_config(p)


def test_csv_dataset(tmp_path):
    data = gen_s_curve(20, seed=1)
    save_csv(data, tmp_path / "pts.csv")
    rep = run(RunConfig(dataset=str(tmp_path / "pts.csv"), out=str(tmp_path / "o")))
    assert rep.embedding.shape == (2, 20)


def test_stage_failure_writes_marker(tmp_path):
    # every point coincides, so the weight stage cannot build a state
    data = np.zeros((3, 8))
    data[0] = np.arange(8) % 2
    save_csv(data, tmp_path / "dup.csv")
    out = tmp_path / "o"
    with pytest.raises(StageError) as info:
        run(RunConfig(dataset=str(tmp_path / "dup.csv"), pipeline="qlle", k=2, out=str(out)))
    assert (out / "FAILED").exists()
    assert info.value.stage in (out / "FAILED").read_text()
    doc = json.loads((out / "report.json").read_text())
    assert doc["error"]["stage"] == info.value.stage


def test_cli_classical(tmp_path, capsys):
    code = main(["--n", "24", "--seed", "3", "--out", str(tmp_path), "--trace"])
    assert code == 0
    metrics = json.loads(capsys.readouterr().out)
    assert "trustworthiness" in metrics and "trustworthiness_oracle" in metrics


def test_cli_overrides_config(tmp_path):
    p = tmp_path / "cfg.toml"
    p.write_text("[pipeline]\nn = 40\nseed = 2\n")
    out = tmp_path / "o"
    assert main(["--config", str(p), "--n", "20", "--out", str(out)]) == 0
    assert np.loadtxt(out / "embedding.csv", delimiter=",").shape[1] == 20


def test_cli_rejects_bad_config(tmp_path, capsys):
    assert main(["--k", "40", "--n", "10", "--out", str(tmp_path / "o")]) == 2
    assert "invalid configuration" in capsys.readouterr().err
    assert main(["--config", str(tmp_path / "missing.toml")]) == 2


def test_cli_stage_failure(tmp_path):
    data = np.zeros((3, 8))
    data[0] = np.arange(8) % 2
    save_csv(data, tmp_path / "dup.csv")
    assert main(["--dataset", str(tmp_path / "dup.csv"), "--pipeline", "qlle", "--k", "2", "--out", str(tmp_path / "o")]) == 1


@pytest.mark.slow
def test_vqlle_runs_with_trace(tmp_path):
    cfg = RunConfig(pipeline="vqlle-vqe", n=16, out=str(tmp_path), trace=True, dump_circuit=True)
    rep = run(cfg)
    assert rep.metrics["subspace_angle_deg"] <= 15.0
    header = (tmp_path / "trace.csv").read_text().splitlines()[0]
    assert header == "stage,restart,iteration,cost,gradient_norm"
    assert load_circuit((tmp_path / "circuit.txt").read_text()).num_qubits == 4
