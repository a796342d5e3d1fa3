import json
import subprocess
import sys

import numpy as np
import pytest

from pseslab.cli import main
from pseslab.verify import CLAIMS


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_constants(capsys):
    code, out, _ = run(capsys, "constants", "--dloc", "2")
    assert code == 0
    assert "r_0 = (sqrt(2D) - 2)/4 = 0.2071068" in out
    assert "= 1.0823922" in out and "radius (sqrt(D) - 1)/2 = 0.5000000" in out
    code, out, _ = run(capsys, "constants", "--dloc", "3")
    assert "0.5606602" in out
    code, _, err = run(capsys, "constants", "--dloc", "1")
    assert code == 2 and "d_loc" in err


def test_verify_claim_json(capsys):
    code, out, _ = run(capsys, "verify", "--claim", "lemma-con1", "--dloc", "2", "--r", "0.2",
                       "--trials", "100000", "--seed", "7", "--format", "json")
    assert code == 0
    d = json.loads(out)
    assert d["claim_id"] == "lemma-con1" and d["seed"] == 7 and d["pass"] is True
    assert d["params"]["r"] == 0.2


def test_verify_all_quick(capsys):
    code, out, _ = run(capsys, "verify", "--all", "--profile", "quick", "--dloc", "2", "--seed", "1")
    assert code == 0
    assert out.count("[PASS]") == len(CLAIMS)


def test_unknown_claim(capsys):
    code, _, err = run(capsys, "verify", "--claim", "nope")
    assert code == 2
    for c in CLAIMS:
        assert c in err


def test_usage_errors(capsys):
    assert run(capsys, "verify")[0] == 2
    assert run(capsys, "verify", "--claim", "thm-dist", "--all")[0] == 2
    assert run(capsys, "verify", "--claim", "thm-dist", "--trials", "0")[0] == 2
    assert run(capsys, "verify", "--claim", "thm-dist", "--tol", "1.5")[0] == 2
    assert run(capsys, "verify", "--claim", "thm-dist", "--r", "0.3")[0] == 2
    with pytest.raises(SystemExit) as e:
        main(["verify", "--claim", "thm-dist", "--r", "0.1", "--epsilon", "0.5"])
    assert e.value.code == 2


def test_failure_exit_code(capsys):
    code, out, _ = run(capsys, "verify", "--claim", "ineq-F1", "--trials", "500", "--tol", "1e-300",
                       "--format", "csv")
    assert code in (0, 1)
    assert out.startswith("claim_id,")
    assert (code == 1) == (",false," in out)


def test_seed_env(capsys, monkeypatch):
    monkeypatch.setenv("PSESLAB_SEED", "11")
    _, out, _ = run(capsys, "verify", "--claim", "prop-cap", "--format", "json")
    assert json.loads(out)["seed"] == 11
    _, out, _ = run(capsys, "verify", "--claim", "prop-cap", "--format", "json", "--seed", "4")
    assert json.loads(out)["seed"] == 4
    monkeypatch.setenv("PSESLAB_SEED", "x")
    assert run(capsys, "verify", "--claim", "prop-cap")[0] == 2
    monkeypatch.delenv("PSESLAB_SEED")
    _, out, _ = run(capsys, "verify", "--claim", "prop-cap", "--format", "json")
    assert json.loads(out)["seed"] == 0


def test_out_file(capsys, tmp_path):
    path = tmp_path / "r.csv"
    code, out, _ = run(capsys, "verify", "--claim", "prop-cap", "--format", "csv", "--out", str(path))
    assert code == 0 and out == ""
    assert path.read_bytes().count(b"\r\n") == 2


def test_demo(capsys, tmp_path):
    code, out, _ = run(capsys, "demo-discrimination", "--dloc", "2", "--epsilon", "0.5")
    assert code == 0
    assert "eps^2(8-eps^2)/32 = 0.0605469" in out
    assert "overlap Tr(rho_1 rho_2) = 0.1210937" in out
    assert "perfect discrimination: yes" in out
    assert run(capsys, "demo-discrimination", "--r", "0")[0] == 2
    assert run(capsys, "demo-discrimination")[0] == 2
    npz = tmp_path / "m.npz"
    code, out, _ = run(capsys, "demo-discrimination", "--dloc", "3", "--r", "0.25", "--out", str(npz))
    assert code == 0
    data = np.load(npz)
    assert data["M1"].shape == (9, 9)
    assert np.allclose(data["M1"] + data["M2"], np.eye(9))
    spectra = [ln for ln in out.splitlines() if "spectrum" in ln]
    assert len(spectra) == 2 and all(len(ln.split(":")[1].split()) == 9 for ln in spectra)


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "pseslab", "constants"], capture_output=True, text=True)
    assert p.returncode == 0 and "r_0" in p.stdout
