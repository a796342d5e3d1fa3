import numpy as np
import pytest

from pseslab.cones import (
    ConeKind,
    ConeSpec,
    Finite,
    FullMEOP,
    Status,
    con1_radius,
    con2_floor,
    hierarchy_witness,
    in_gamma_ses,
    is_block_positive,
    is_ppt_separable,
    is_psd,
    kr0_dual_membership,
    kr0_membership,
    kr_membership,
    membership,
    min_product_value,
    npm_cone_membership,
    npm_dual_membership,
    npm_element,
    r0,
    witness_value,
)
from pseslab.discrimination import discrimination_states, p0_family
from pseslab.linalg import (
    Dims,
    make_rng,
    partial_transpose,
    phi_plus,
    proj,
    random_hermitian,
    random_mebasis,
    random_product_pure,
    random_state,
    tensor,
    weyl_bell_basis,
)
from pseslab.metrics import isotropic_mixture

D2 = Dims(2)
BELL = weyl_bell_basis(D2)


def _exact(v, x):
    """Outside verdicts must reproduce their violation from the witness alone."""
    assert v.outside and v.certified
    assert abs(witness_value(x, v.witness) - v.violation) <= 1e-12
    assert v.violation < -1e-9


def test_constants():
    assert r0(D2) == pytest.approx(0.2071068, abs=1e-7)
    assert r0(Dims(3)) == pytest.approx(0.5606602, abs=1e-7)
    assert r0(Dims(3)) == pytest.approx((np.sqrt(18) - 2) / 4)
    assert con1_radius(D2) == 0.5
    assert abs(con2_floor(r0(D2), D2)) < 1e-15
    assert abs(con2_floor(r0(Dims(4)), Dims(4))) < 1e-14


def test_npm_element_examples():
    n0 = npm_element(0.0, BELL)
    # eigenvalue on each Bell vector in order
    diag = [np.real(np.vdot(v, n0 @ v)) for v in BELL.vectors]
    assert np.allclose(diag, [0, 1, 0.5, 0.5])
    nr = npm_element(r0(D2), BELL)
    assert np.linalg.eigvalsh(nr)[0] == pytest.approx(-0.2071068, abs=1e-7)
    for lam in (0.0, 0.1, 0.2):
        assert np.trace(npm_element(lam, random_mebasis(D2, 1))).real == pytest.approx(2.0)
    assert np.trace(npm_element(0.3, random_mebasis(Dims(3), 1))).real == pytest.approx(4.5)
    with pytest.raises(ValueError):
        npm_element(-0.1, BELL)


def test_is_psd():
    assert is_psd(np.eye(4)).inside
    assert is_psd(proj(phi_plus(D2))).inside
    x = npm_element(0.1, BELL)
    v = is_psd(x)
    _exact(v, x)
    assert v.violation == pytest.approx(-0.1, abs=1e-12)
    # witness is the E_1 eigenvector
    assert abs(abs(np.vdot(v.witness, BELL.vectors[0])) - 1) < 1e-10


def _bloch(n):
    t = np.linspace(0, np.pi, n)
    p = np.linspace(0, 2 * np.pi, n, endpoint=False)
    t, p = np.meshgrid(t, p, indexing="ij")
    return np.stack([np.cos(t / 2), np.exp(1j * p) * np.sin(t / 2)], axis=-1).reshape(-1, 2)


GRID = _bloch(60)
# conj(b_k) b_l for every grid vector b
GRID_KL = (GRID.conj()[:, :, None] * GRID[:, None, :]).reshape(-1, 4)


def grid_min(x):
    """Brute-force min of <a b|x|a b> over a 60^4 Bloch-angle grid."""
    t = x.reshape(2, 2, 2, 2)
    # M_a[k, l] = sum_ij conj(a_i) a_j x[(i k), (j l)]
    m = np.einsum("ai,ikjl,aj->akl", GRID.conj(), t, GRID, optimize=True)
    return float((m.reshape(-1, 4) @ GRID_KL.T).real.min())


def test_block_positive_examples():
    v = is_block_positive(np.eye(4), D2)
    assert v.inside and v.bound == pytest.approx(1.0)
    swap_half = partial_transpose(proj(phi_plus(D2)), D2)
    v = is_block_positive(swap_half, D2)
    assert v.inside and abs(v.bound) <= 1e-9
    assert abs(grid_min(swap_half)) <= 1e-12
    x = proj(phi_plus(D2)) - 0.55 * np.eye(4)
    v = is_block_positive(x, D2)
    _exact(v, x)
    assert v.violation <= -0.05 + 1e-9
    # product vectors orthogonal to Phi+ exist, so the product minimum is -0.55
    assert grid_min(x) == pytest.approx(-0.55, abs=1e-9)


def test_block_positive_vs_grid_oracle():
    rng = make_rng(2024)
    checked = 0
    for _ in range(100):
        h = random_hermitian(4, rng)
        # shift so the grid minimum lands near zero with either sign; the identity adds
        # exactly the shift to every product value
        g = rng.uniform(-0.3, 0.3)
        x = h + (g - grid_min(h)) * np.eye(4)
        if abs(g) <= 1e-3:
            continue
        v = is_block_positive(x, D2, rng_seed=int(rng.integers(1 << 30)))
        assert v.status is (Status.INSIDE if g > 0 else Status.OUTSIDE), (g, v.bound)
        if v.outside:
            _exact(v, x)
        checked += 1
    assert checked > 80


def test_min_product_value_is_sound():
    x = random_hermitian(9, 3)
    val, a, b = min_product_value(x, Dims(3), rng_seed=0)
    y = np.kron(a, b)
    assert np.real(np.vdot(y, x @ y)) == pytest.approx(val, abs=1e-12)


def test_ppt():
    assert is_ppt_separable(np.eye(4) / 4, D2).inside
    x = proj(phi_plus(D2))
    v = is_ppt_separable(x, D2)
    _exact(v, x)
    assert v.violation == pytest.approx(-0.5, abs=1e-12)
    rng = make_rng(0)
    a, b = random_state(2, rng), random_state(2, rng)
    assert is_ppt_separable(tensor(a, b), D2).inside
    # d_loc = 3: product states are certified, other PPT states are undecided
    d3 = Dims(3)
    a, b = random_state(3, rng), random_state(3, rng)
    assert is_ppt_separable(tensor(a, b), d3).inside
    assert is_ppt_separable(np.eye(9) / 9 * 0.5 + 0.5 * tensor(a, b), d3).status is Status.UNDECIDED
    with pytest.raises(ValueError):
        is_ppt_separable(-np.eye(4), D2)


def test_gamma_ses():
    assert in_gamma_ses(partial_transpose(proj(phi_plus(D2)), D2), D2).inside
    x = partial_transpose(proj(phi_plus(D2)), D2) * 0 + proj(phi_plus(D2))
    _exact(in_gamma_ses(x, D2), x)


def test_kr0_dual_examples():
    fam = p0_family(BELL)
    r = 0.15
    v = kr0_dual_membership(np.eye(4) / 4, r, fam)
    assert v.inside and v.certified and v.bound == pytest.approx(0.25)
    rho1, _ = discrimination_states(r, BELL)
    assert kr0_dual_membership(rho1, r, fam).inside
    # Tr rho_1 M_1(lam) = (lam + r + 1)/(2r+1), Tr rho_1 M_2(lam) = (r - lam)/(2r+1)
    for lam in (0.0, 0.07, r):
        m1 = npm_element(lam, fam.bases[0])
        m2 = npm_element(lam, fam.bases[1])
        assert np.real(np.trace(rho1 @ m1)) == pytest.approx((lam + r + 1) / (2 * r + 1))
        assert np.real(np.trace(rho1 @ m2)) == pytest.approx((r - lam) / (2 * r + 1))
    e1 = BELL[0]
    v = kr0_dual_membership(e1, 0.1, fam)
    _exact(v, e1)
    assert v.violation == pytest.approx(-0.1, abs=1e-12)
    assert np.allclose(v.witness, npm_element(0.1, BELL))


def test_npm_dual_examples():
    fam = Finite([random_mebasis(D2, k) for k in range(3)])
    r = r0(D2)
    for b in fam.bases:
        assert npm_dual_membership(npm_element(r, b), r, fam).inside
    x = -np.eye(4)
    _exact(npm_dual_membership(x, r, fam), x)
    # isotropic state at F_max = 1/(2r+1) against the full family
    sigma = proj(phi_plus(D2))
    rho = isotropic_mixture(sigma, 1 / (2 * r + 1))
    v = npm_dual_membership(rho, r, FullMEOP(D2, 256, 0))
    assert v.inside and not v.certified


def test_full_meop_outside_is_certified():
    fam = FullMEOP(D2, 64, 3)
    b = next(fam.iter_bases())
    x = b[0]
    v = npm_dual_membership(x, 0.2, fam)
    _exact(v, x)


def test_npm_cone_and_kr0():
    fam = p0_family(BELL)
    r = 0.2
    n1, n2 = (npm_element(r, b) for b in fam.bases)
    v = npm_cone_membership(0.3 * n1 + 0.7 * n2, r, fam)
    assert v.inside and v.certified
    x = -np.eye(4)
    _exact(npm_cone_membership(x, r, fam), x)
    v = kr0_membership(n1 + random_state(4, 0), r, fam)
    assert v.inside
    # strictly below -r on E_1 no element of K_r^(0) can reach
    y = np.eye(4) - 2.0 * BELL[0]
    v = kr0_membership(y, r, fam)
    assert v.status is not Status.INSIDE
    if v.outside:
        _exact(v, y)


def test_kr_membership_and_dispatcher():
    fam = p0_family(BELL)
    r = 0.1
    assert kr_membership(np.eye(4) / 4, r, fam).inside
    spec = ConeSpec(ConeKind.KR0_DUAL, D2, r, fam)
    assert membership(np.eye(4) / 4, spec).inside
    assert membership(BELL[0], spec).outside
    assert membership(np.eye(4), ConeSpec(ConeKind.SES, D2)).inside
    with pytest.raises(ValueError):
        ConeSpec(ConeKind.KR, D2, 0.3, fam)
    with pytest.raises(ValueError):
        ConeSpec(ConeKind.KR, D2, 0.1, None)


def test_witness_exactness_sweep():
    rng = make_rng(8)
    fam = p0_family(random_mebasis(D2, rng))
    for _ in range(50):
        x = random_hermitian(4, rng)
        for v in (is_psd(x), npm_dual_membership(x, 0.2, fam), kr0_dual_membership(x, 0.2, fam),
                  in_gamma_ses(x, D2)):
            if v.outside:
                _exact(v, x)


def test_hierarchy_witness():
    fam = p0_family(BELL)
    res = hierarchy_witness(r0(D2), r0(D2) / 2, fam, rng_seed=0)
    assert res.found and res.samples_used <= 10_000
    assert res.verdict_r1.outside and res.verdict_r2.inside
    _exact(res.verdict_r1, res.witness)
    same = hierarchy_witness(0.1, 0.1, fam)
    assert not same.found and same.witness is None


def test_con1_pairs():
    # lemma-con1 at the largest admissible radius, direct evaluation
    rng = make_rng(5)
    for dims in (D2, Dims(3)):
        r = con1_radius(dims)
        worst = np.inf
        for _ in range(300):
            n = npm_element(r, random_mebasis(dims, rng))
            y = random_product_pure(dims, rng)
            worst = min(worst, np.real(np.vdot(y, n @ y)))
        assert worst >= -1e-9


def test_con2_floor_attained_by_swap_pair():
    for d in (2, 3):
        dims = Dims(d)
        b = random_mebasis(dims, d)
        sw = b.permuted([1, 0] + list(range(2, dims.D)))
        r = 0.9 * r0(dims)
        val = np.real(np.trace(npm_element(r, b) @ npm_element(r, sw)))
        assert val == pytest.approx(con2_floor(r, dims), abs=1e-12)
        assert val >= 0
