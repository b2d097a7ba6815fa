import json
import math

import numpy as np
import pytest

from phasebound import cli
from phasebound.errors import StiffnessFailure
from phasebound.io import read_csv


def run(capsys, *argv, env=None, monkeypatch=None):
    if env and monkeypatch:
        for k, v in env.items():
            monkeypatch.setenv(k, v)
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, (json.loads(out.out) if code == 0 else None), out.err


def test_count_examples(capsys, tmp_path):
    code, data, _ = run(capsys, "count", "--kind", "lorentzian", "--U0", "1", "--d", "1", "--py", "0.1")
    assert code == 0 and data["N_d"] == 2
    assert run(capsys, "count", "--kind", "delta", "--G", "1.2", "--py", "0.5")[1]["N_d"] == 1
    assert run(capsys, "count", "--kind", "sech", "--U0", "0", "--d", "1", "--py", "0.1")[1]["N_d"] == 0


def test_potential_grammar_flag(capsys):
    code, data, _ = run(capsys, "count", "--potential", "kind=lorentzian U0=1 d=1", "--py", "0.1")
    assert data["N_d"] == 2


def test_exit_codes(capsys, monkeypatch):
    code, _, err = run(capsys, "count", "--kind", "sech", "--U0", "1", "--d", "-1", "--py", "0.1")
    assert code == 2 and "positive" in err
    assert run(capsys, "count", "--kind", "sech", "--U0", "1", "--d", "1")[0] == 2
    assert run(capsys, "count", "--kind", "sech", "--U0", "1", "--d", "1", "--py", "0.1", "--tol-phase", "0")[0] == 2

    def stiff(*a, **k):
        raise StiffnessFailure("step size underflow")

    monkeypatch.setattr(cli, "edge_branches", stiff)
    code, _, err = run(capsys, "count", "--kind", "sech", "--U0", "1", "--d", "1", "--py", "0.1")
    assert code == 1 and "underflow" in err


def test_spectrum_outputs(capsys, tmp_path):
    code, data, _ = run(capsys, "spectrum", "--kind", "delta", "--G", str(math.pi / 2), "--py", "0.3", "--out", str(tmp_path))
    assert code == 0 and data["N_d"] == 1
    assert abs(data["eigenvalues"][0]["E"]) <= 0.3e-8
    saved = json.loads((tmp_path / "spectrum.json").read_text())
    assert set(saved) == {"p_y", "N_d", "eigenvalues", "staircase"}
    header, cols, rows = read_csv(tmp_path / "staircase.csv")
    assert cols == ["E", "branch"] and header["N_d"] == "1"
    assert np.all(np.diff(rows[:, 1]) <= 0)


def test_spectrum_free_and_lorentzian(capsys, tmp_path):
    assert run(capsys, "spectrum", "--kind", "sech", "--U0", "0", "--d", "1", "--py", "0.5", "--out", str(tmp_path))[1]["eigenvalues"] == []
    data = run(capsys, "spectrum", "--kind", "lorentzian", "--U0", "1", "--d", "1", "--py", "0.1", "--out", str(tmp_path))[1]
    assert len(data["eigenvalues"]) == 2


def test_wavefunction_output(capsys, tmp_path):
    code, data, _ = run(
        capsys, "wavefunction", "--kind", "delta", "--G", str(math.pi / 2), "--py", "1", "--index", "0", "--out", str(tmp_path)
    )
    assert code == 0
    header, cols, rows = read_csv(tmp_path / "wavefunction_0.csv")
    assert cols == ["x", "omega", "R", "phi", "rho"]
    assert {"p_y", "E_d", "W", "k", "note"} <= set(header)
    assert float(header["k"]) == pytest.approx(1.0)
    x, rho = rows[:, 0], rows[:, 4]
    tail = x > 2
    slope = np.diff(np.log(rho[tail])) / np.diff(x[tail])
    assert np.allclose(slope, -2.0, atol=1e-6)


def test_wavefunction_index_out_of_range(capsys, tmp_path):
    code, _, err = run(capsys, "wavefunction", "--kind", "delta", "--G", "1", "--py", "1", "--index", "3", "--out", str(tmp_path))
    assert code == 2 and "N_d" in err


def test_portrait_outputs(capsys, tmp_path):
    code, data, _ = run(
        capsys, "portrait", "--kind", "lorentzian", "--U0", "1", "--d", "1", "--py", "0.1", "--E", "0.05",
        "--resolution", "16x32", "--out", str(tmp_path),
    )
    assert code == 0 and data["winding"] == -1
    assert json.loads((tmp_path / "portrait.json").read_text())["winding"] == -1
    _, cols, rows = read_csv(tmp_path / "field_0.csv")
    assert cols == ["U", "omega", "FU", "Fomega"] and rows.shape == (16 * 32, 4)
    assert read_csv(tmp_path / "trajectory_1.csv")[1] == ["U", "omega"]
    assert read_csv(tmp_path / "ring.csv")[1] == ["X", "Y"]
    assert run(capsys, "portrait", "--kind", "lorentzian", "--U0", "1", "--d", "1", "--py", "0.1")[0] == 2


def test_validate_rows(capsys, tmp_path):
    code, data, _ = run(capsys, "validate", "--kind", "sech", "--U0", "0.7", "--d", "1", "--py", "0.01", "--out", str(tmp_path))
    assert code == 0
    rows = {r["limit"]: r for r in data["rows"]}
    assert set(rows) == {"delta", "nonrelativistic", "semiclassical"}
    for r in rows.values():
        assert set(r) >= {"predicted", "numeric", "discrepancy", "validity_metric"}
    assert rows["delta"]["discrepancy"] < 0.05
    assert rows["semiclassical"]["numeric"] == data["N_d"] == 1


def test_precedence(capsys, tmp_path, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"kind": "delta", "G": 1.2, "py": 0.5, "eps_edge": 1e-5}))
    args = cli._parser().parse_args(["count", "--config", str(cfg)])
    assert cli.resolve_config(args, environ={})["py"] == 0.5
    assert cli.resolve_config(args, environ={"PHASEBOUND_PY": "0.7"})["py"] == 0.7
    args = cli._parser().parse_args(["count", "--config", str(cfg), "--py", "0.9"])
    merged = cli.resolve_config(args, environ={"PHASEBOUND_PY": "0.7"})
    assert merged["py"] == 0.9 and merged["eps_edge"] == 1e-5 and merged["G"] == 1.2
    monkeypatch.setenv("PHASEBOUND_POLISH", "true")
    assert cli.resolve_config(cli._parser().parse_args(["count"]))["polish"] is True
    cfg.write_text(json.dumps({"colour": "red"}))
    assert run(capsys, "count", "--config", str(cfg))[0] == 2


def test_outputs_are_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out, threads in ((a, "1"), (b, "2")):
        run(capsys, "spectrum", "--kind", "lorentzian", "--U0", "1", "--d", "1", "--py", "0.1", "--threads", threads, "--out", str(out))
        run(capsys, "wavefunction", "--kind", "lorentzian", "--U0", "1", "--d", "1", "--py", "0.1", "--index", "1", "--out", str(out))
    for name in ("spectrum.json", "staircase.csv", "wavefunction_1.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_seventeen_digits(capsys, tmp_path):
    run(capsys, "spectrum", "--kind", "delta", "--G", "0.1", "--py", "0.2", "--out", str(tmp_path))
    data = json.loads((tmp_path / "spectrum.json").read_text())
    E = data["eigenvalues"][0]["E"]
    assert float(format(E, ".17g")) == E
    assert E == pytest.approx(-0.2 * math.cos(0.1), abs=2e-9)
