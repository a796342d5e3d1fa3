import ast
import pathlib

import numpy as np
import pytest

import pseslab.verify as verify_mod
from pseslab.cones import con2_floor, r0
from pseslab.linalg import Dims
from pseslab.verify import CLAIMS, DEFAULTS, ClaimError, claim_rng, run_all, run_claim

D2 = Dims(2)


def test_registry_and_defaults_agree():
    assert set(CLAIMS) == set(DEFAULTS)
    assert len(CLAIMS) == 12


def test_examples():
    rep = run_claim("lemma-con2", D2, {"r": r0(D2), "trials": 100_000})
    assert rep.passed and rep.max_violation >= -1e-9
    assert abs(con2_floor(r0(D2), D2)) < 1e-15
    rep = run_claim("thm-dist", D2, {"r": 0.1})
    assert rep.passed
    assert any("0.3055555556" in n for n in rep.notes)
    assert any("lower bound" in n for n in rep.notes)
    rep = run_claim("prop-cap", D2)
    assert rep.passed and rep.trials_run == 4


def test_errors():
    with pytest.raises(ClaimError, match="registered claims"):
        run_claim("no-such-claim", D2)
    with pytest.raises(ClaimError):
        run_claim("lemma-con2", D2, {"r": 0.5})
    with pytest.raises(ClaimError):
        run_claim("lemma-con1", D2, {"trials": 0})
    with pytest.raises(ClaimError):
        run_claim("lemma-con1", D2, {"r": "big"})
    with pytest.raises(ClaimError):
        run_claim("thm-dist", D2, profile="slow")
    with pytest.raises(ClaimError):
        run_claim("ineq-F1", D2, {"tol": 2.0})


def test_mathematical_failure_is_a_report():
    # an absurdly tight tolerance cannot make a claim raise, only fail or pass
    rep = run_claim("ineq-F1", D2, {"trials": 200, "tol": 1e-300})
    assert isinstance(rep.passed, bool)


def test_claim_streams_are_independent():
    a = claim_rng("lemma-con1", 7).random(4)
    b = claim_rng("lemma-con2", 7).random(4)
    assert not np.allclose(a, b)
    assert np.array_equal(a, claim_rng("lemma-con1", 7).random(4))


def test_determinism():
    for cid in ("lemma-con1", "prop-construction1", "lemma-max-ent", "con-hie"):
        a = run_claim(cid, D2, {"trials": 50}, seed=5)
        b = run_claim(cid, D2, {"trials": 50}, seed=5)
        assert a.max_violation == b.max_violation and a.notes == b.notes


def test_run_all_quick_order_and_workers():
    reps = run_all(D2, seed=1, profile="quick")
    assert [r.claim_id for r in reps] == list(CLAIMS)
    assert all(r.passed for r in reps), [(r.claim_id, r.notes) for r in reps if not r.passed]
    par = run_all(D2, seed=1, profile="quick", workers=4)
    assert [r.max_violation for r in par] == [r.max_violation for r in reps]


def test_run_all_quick_dim3():
    reps = run_all(Dims(3), seed=2, profile="quick")
    assert all(r.passed for r in reps), [(r.claim_id, r.notes) for r in reps if not r.passed]


def test_runners_only_use_declared_modules():
    tree = ast.parse(pathlib.Path(verify_mod.__file__).read_text())
    imported = {n.module for n in ast.walk(tree) if isinstance(n, ast.ImportFrom) and n.level == 1}
    assert imported <= {"cones", "discrimination", "linalg", "metrics", "report", "symmetry"}
