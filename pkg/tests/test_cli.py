import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from fockbound.cli import run

GOLDEN = Path(__file__).parent / "golden"
UPDATE = os.environ.get("FOCKBOUND_UPDATE_GOLDEN") == "1"


def _config(tmp_path, **kw):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(kw))
    return str(path)


def _run(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    return code, (json.loads(out.out) if out.out.strip() else None), out.err


def test_product_phases(tmp_path, capsys):
    cfg = _config(tmp_path, depth=6)
    code, rep, _ = _run(capsys, "product", "x_i", "x_i", "--config", cfg)
    assert code == 0
    res = rep["result"]
    assert res["closed_form_method"] == "symbolic" and res["distance"] < 1e-12
    # x_i o x_i = x_{-1}: diagonal entries (-1)^{|I|}
    diag = {(tuple(J), tuple(I)): complex(re, im) for J, I, re, im in res["sot"]}
    assert diag[((), ())] == 1 and diag[((1,), (1,))] == -1 and diag[((1, 2), (1, 2))] == 1
    assert all(J == I for J, I in diag)


def test_product_left_creation(tmp_path, capsys):
    code, rep, _ = _run(capsys, "product", "r_1", "x_i", "--config", _config(tmp_path, depth=6))
    res = rep["result"]
    assert code == 0 and res["closed_form_method"] == "left_mul"
    assert res["correction_norm"] == 0 and res["correction_vanishes"]


def test_product_identity(tmp_path, capsys):
    code, rep, _ = _run(capsys, "product", "1", "1", "--config", _config(tmp_path, depth=4))
    res = rep["result"]
    assert code == 0
    assert all(J == I and complex(re, im) == 1 for J, I, re, im in res["sot"])
    assert len(res["sot"]) == 2 ** (res["trust"] + 1) - 1


def test_product_input_errors(tmp_path, capsys):
    cfg = _config(tmp_path, depth=4)
    assert _run(capsys, "product", "p0", "1", "--config", cfg)[0] == 2
    assert _run(capsys, "product", "r_3", "1", "--config", cfg)[0] == 2
    assert _run(capsys, "product", "r_1", "--config", cfg)[0] == 2
    assert _run(capsys, "product", "r_1 +", "1", "--config", cfg)[0] == 2


@pytest.mark.parametrize("bad", [{"weights": [0.7, 0.2]}, {"depth": 1, "word_bound": 2}])
def test_config_errors(tmp_path, capsys, bad):
    code, rep, err = _run(capsys, "verify", "--config", _config(tmp_path, **bad))
    assert code == 2 and rep is None and "config error" in err


def test_usage_errors(tmp_path, capsys):
    assert run(["bogus", "--config", "x"]) == 2
    assert run(["verify"]) == 2
    assert run(["verify", "--config", str(tmp_path / "missing.json")]) == 2
    capsys.readouterr()


def test_commutant_examples(tmp_path, capsys):
    code, rep, _ = _run(capsys, "commutant", "--config", _config(tmp_path, depth=4, basis=["1"]))
    assert code == 0 and rep["result"]["commutant"]["nullspace_dimension"] == 1
    code, rep, _ = _run(capsys, "commutant", "--config",
                        _config(tmp_path, depth=4, basis=["1", "x_{-1}"]))
    assert code == 0 and rep["result"]["commutant"]["nullspace_dimension"] == 1
    code, rep, err = _run(capsys, "commutant", "--config",
                          _config(tmp_path, depth=4, basis=["1", "x_{-1}"], svd_tol=1))
    assert code == 1 and "warning" in err
    assert rep["result"]["commutant"]["nullspace_dimension"] == 0
    code, _, _ = _run(capsys, "commutant", "--config", _config(tmp_path, depth=4, basis=["p0"]))
    assert code == 2


def test_commutant_default_grid(tmp_path, capsys):
    dump = tmp_path / "dump"
    code, rep, _ = _run(capsys, "commutant", "--center", "--dump", str(dump), "--config",
                        _config(tmp_path, depth=6, word_bound=1))
    res = rep["result"]
    assert code == 0
    assert res["commutant"]["nullspace_dimension"] == 1 and res["center"]["nullspace_dimension"] == 1
    assert (dump / "commutant" / "singular_values.csv").exists()
    assert (dump / "center" / "residuals.csv").exists()


@pytest.mark.parametrize("spec,expected", [
    ("x_i + r_1", [{"coeff_im": 0, "coeff_re": 1, "eps": False, "la": [], "lc": [], "ra": [],
                    "rc": [1]}]),
    ("r_1 r_2*", None),
    ("x_{-1} r_2", []),
])
def test_expectation_examples(tmp_path, capsys, spec, expected):
    code, rep, _ = _run(capsys, "expectation", spec, "--config", _config(tmp_path, depth=6))
    res = rep["result"]
    assert code == 0
    assert max(res["axiom_residuals"].values()) < 1e-12
    sym = [{k: v for k, v in t.items() if k not in ("tag", "exact")} for t in res["E_symbolic"]]
    if expected is None:
        assert len(sym) == 1 and sym[0]["rc"] == [1] and sym[0]["ra"] == [2]
    else:
        assert sym == expected


def test_expectation_rejects_non_grid(tmp_path, capsys):
    cfg = _config(tmp_path, depth=6)
    assert _run(capsys, "expectation", "x_root{8,1}", "--config", cfg)[0] == 2
    assert _run(capsys, "expectation", "p0", "--config", cfg)[0] == 2


def test_spectrum_examples(tmp_path, capsys):
    cfg = _config(tmp_path, depth=5)
    code, rep, _ = _run(capsys, "spectrum", "x_root{8,1}", "--config", cfg)
    assert code == 0 and rep["result"]["lambda"]["turns"] == "1/8"
    code, rep, _ = _run(capsys, "spectrum", "r_2", "--config", cfg)
    assert rep["result"]["lambda"]["turns"] == "0"
    code, rep, _ = _run(capsys, "spectrum", "p0", "--config", cfg)
    assert code == 0 and rep["result"]["lambda"] is None


def test_out_and_seed(tmp_path, capsys):
    out = tmp_path / "r" / "report.json"
    code = run(["spectrum", "r_1", "--seed", "7", "--out", str(out), "--config",
                _config(tmp_path, depth=4)])
    assert code == 0 and capsys.readouterr().out == ""
    rep = json.loads(out.read_text())
    assert rep["config"]["seed"] == 7 and rep["version"] and rep["exit_code"] == 0


GOLDEN_CASES = {
    "product_r1_xi": (["product", "r_1", "x_i"], {"depth": 4}),
    "commutant_1_xm1": (["commutant"], {"depth": 4, "basis": ["1", "x_{-1}"]}),
    "spectrum_root8": (["spectrum", "x_root{8,1}"], {"depth": 4}),
    "expectation_xi_r1": (["expectation", "x_i + r_1"], {"depth": 5}),
}


@pytest.mark.parametrize("name", sorted(GOLDEN_CASES))
def test_golden(tmp_path, capsys, name):
    argv, cfg = GOLDEN_CASES[name]
    run(argv + ["--config", _config(tmp_path, **cfg)])
    text = capsys.readouterr().out
    path = GOLDEN / f"{name}.json"
    if UPDATE or not path.exists():
        path.write_text(text)
    assert text == path.read_text()


def test_verify_small(tmp_path):
    """n=2, d=6, uniform weights: every suite passes; output is byte-identical across runs."""
    cfg = _config(tmp_path, n=2, depth=6, weights="uniform")
    cmd = [sys.executable, "-m", "fockbound.cli", "verify", "--config", cfg]
    first = subprocess.run(cmd, capture_output=True, text=True)
    assert first.returncode == 0, first.stderr
    rep = json.loads(first.stdout)
    assert rep["result"]["passed"]
    assert {s["name"].split()[0] for s in rep["result"]["suites"]} >= {"relations", "products"}
    assert rep["config"]["depth"] == 6


def test_determinism(tmp_path):
    cfg = _config(tmp_path, depth=5, word_bound=1)
    cmd = [sys.executable, "-m", "fockbound.cli", "commutant", "--center", "--config", cfg]
    a = subprocess.run(cmd, capture_output=True, text=True)
    b = subprocess.run(cmd, capture_output=True, text=True)
    assert a.returncode == 0 and a.stdout == b.stdout
