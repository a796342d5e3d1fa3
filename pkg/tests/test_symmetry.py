import numpy as np
import pytest

from pseslab.cones import is_block_positive, is_ppt_separable, npm_element, r0
from pseslab.linalg import (
    Dims,
    haar_unitaries,
    make_rng,
    partial_transpose,
    random_hermitian,
    random_mebasis,
    random_state,
    trace_inner,
)
from pseslab.symmetry import (
    Global,
    Local,
    apply,
    apply_to_basis,
    capacity_witness,
    check_gamma_self_dual,
    check_lu_symmetry_npm,
    gu_breaking_witness,
    random_local,
    unitarity_error,
    unitary_with_first_column,
)

D2 = Dims(2)


def test_apply_identity_and_spectrum():
    x = random_hermitian(4, 0)
    assert np.array_equal(apply(Global(np.eye(4)), x), x)
    g = Global(haar_unitaries(4, 1, 1)[0])
    assert unitarity_error(g) < 1e-13
    assert np.allclose(np.linalg.eigvalsh(apply(g, x)), np.linalg.eigvalsh(x), atol=1e-10)
    with pytest.raises(ValueError):
        apply(g, np.eye(9))


def test_apply_to_basis_matches_apply():
    b = random_mebasis(Dims(3), 2)
    g = random_local(Dims(3), 3)
    rb = apply_to_basis(g, b)
    for k in range(9):
        assert np.allclose(rb[k], apply(g, b[k]), atol=1e-13)
    assert rb.is_valid()


def test_unitary_with_first_column():
    v = np.array([0, 1, 1j, 0]) / np.sqrt(2)
    u = unitary_with_first_column(v)
    assert np.allclose(u.conj().T @ u, np.eye(4), atol=1e-14)
    assert np.allclose(u[:, 0], v)


@pytest.mark.parametrize("r", [0.05, 0.1, r0(D2)])
def test_gu_breaking_witness(r):
    for seed in range(10):
        w = gu_breaking_witness(r, random_mebasis(D2, seed), rng_seed=seed)
        assert w.violation <= -r + 1e-10
        gx = apply(w.g, w.x)
        assert np.real(np.vdot(w.y, gx @ w.y)) == pytest.approx(w.violation, abs=1e-14)
        # N itself is block positive, g(N) is not
        assert is_block_positive(w.x, D2).inside
        assert w.cross_check.outside


def test_gu_breaking_small_r():
    w = gu_breaking_witness(1e-8, random_mebasis(D2, 0), cross_check=False)
    assert -1e-7 < w.violation < 0
    with pytest.raises(ValueError):
        gu_breaking_witness(0.0, random_mebasis(D2, 0))


def test_gamma_covariance_needs_conjugate():
    rng = make_rng(4)
    ua, ub = haar_unitaries(2, 2, rng)
    rho = random_state(4, rng)
    lhs = partial_transpose(apply(Local(ua, ub), rho), D2)
    assert np.allclose(lhs, apply(Local(ua, ub.conj()), partial_transpose(rho, D2)), atol=1e-13)
    # the same-unitary form only holds for real U_B
    assert not np.allclose(lhs, apply(Local(ua, ub), partial_transpose(rho, D2)), atol=1e-3)
    o = np.array([[np.cos(0.3), -np.sin(0.3)], [np.sin(0.3), np.cos(0.3)]])
    lhs = partial_transpose(apply(Local(ua, o), rho), D2)
    assert np.allclose(lhs, apply(Local(ua, o), partial_transpose(rho, D2)), atol=1e-13)


def test_gamma_examples():
    x = np.eye(4) / 4
    assert trace_inner(partial_transpose(x, D2), partial_transpose(x, D2)) == pytest.approx(0.25)
    rep = check_gamma_self_dual(200, rng_seed=0)
    assert rep.passed, rep.notes
    assert rep.claim_id == "prop-gamma"


def test_lu_symmetry():
    b = random_mebasis(D2, 0)
    x = npm_element(0.1, b)
    ident = Local(np.eye(2), np.eye(2))
    assert np.array_equal(apply(ident, x), x)
    rep = check_lu_symmetry_npm(0.1, 100, rng_seed=0, rotations=20)
    assert rep.passed, rep.notes
    rep = check_lu_symmetry_npm(0.3, 20, rng_seed=0, dims=Dims(3), rotations=10)
    assert rep.passed, rep.notes


def test_lu_preserves_block_positivity_verdict():
    rng = make_rng(12)
    n = 0
    while n < 30:
        x = random_hermitian(4, rng) + rng.uniform(0, 2) * np.eye(4)
        v = is_block_positive(x, D2)
        if abs(v.bound) <= 1e-4:
            continue
        g = random_local(D2, rng)
        assert is_block_positive(apply(g, x), D2).status is v.status
        n += 1


@pytest.mark.parametrize("d", [2, 3])
def test_capacity(d):
    states, meas = capacity_witness(Dims(d))
    assert len(states) == d * d
    stats = np.array([[trace_inner(s, m) for m in meas.effects] for s in states])
    assert np.array_equal(stats, np.eye(d * d))
    assert meas.completeness_error() == 0.0
    assert all(is_ppt_separable(s, Dims(d)).inside for s in states)
