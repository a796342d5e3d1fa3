"""Global and local unitary actions, and the checks built on them."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .cones import (
    MembershipVerdict,
    Finite,
    is_block_positive,
    npm_dual_membership,
    npm_element,
    r0,
)
from .discrimination import Measurement
from .linalg import (
    Dims,
    MEBasis,
    SeedLike,
    expect,
    haar_unitaries,
    make_rng,
    partial_transpose,
    proj,
    random_mebasis,
    random_state,
    rotate_mebasis,
    trace_inner,
    weyl_bell_basis,
)
from .metrics import isotropic_mixture
from .report import ClaimReport


@dataclass(frozen=True, eq=False)
class Global:
    """g(x) = U^dagger x U for a unitary U on the whole space."""

    u: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return self.u


@dataclass(frozen=True, eq=False)
class Local:
    """g(x) = (U_A (x) U_B)^dagger x (U_A (x) U_B)."""

    u_a: np.ndarray
    u_b: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return np.kron(self.u_a, self.u_b)


GroupElement = Union[Global, Local]


def unitarity_error(g: GroupElement) -> float:
    u = g.matrix
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def apply(g: GroupElement, x: np.ndarray) -> np.ndarray:
    u = g.matrix
    if u.shape[0] != x.shape[0]:
        raise ValueError(f"group element of size {u.shape[0]} cannot act on size {x.shape[0]}")
    return u.conj().T @ x @ u


def apply_to_basis(g: Local, basis: MEBasis) -> MEBasis:
    """The basis {g(E_k)}: each vector is mapped to (U_A (x) U_B)^dagger psi_k."""
    return rotate_mebasis(basis, (g.u_a.conj().T, g.u_b.conj().T))


def random_local(dims: Dims, rng: SeedLike = None) -> Local:
    ua, ub = haar_unitaries(dims.d_loc, 2, make_rng(rng))
    return Local(ua, ub)


def unitary_with_first_column(v: np.ndarray) -> np.ndarray:
    """Unitary whose first column is ``v``: Gram-Schmidt of v followed by the computational basis."""
    n = v.shape[0]
    cols = [v / np.linalg.norm(v)]
    for e in np.eye(n, dtype=complex):
        w = e - sum(np.vdot(c, e) * c for c in cols)
        nw = np.linalg.norm(w)
        if nw > 1e-8:
            cols.append(w / nw)
        if len(cols) == n:
            break
    return np.array(cols).T


@dataclass
class GUBreakingWitness:
    x: np.ndarray
    g: Global
    y: np.ndarray
    violation: float
    cross_check: Optional[MembershipVerdict] = None


def gu_breaking_witness(r: float, basis: MEBasis, rng_seed: SeedLike = 0,
                        cross_check: bool = True) -> GUBreakingWitness:
    """Global unitary that pushes the block-positive N(r; basis) out of SEP*.

    N(r) has eigenvalue -r on |psi_1>. With U|00> = |psi_1>, the map g(x) = U^dagger x U sends
    that eigenvector to the product vector |00>, so <00|g(N)|00> = -r and g(N) is not block
    positive. ``cross_check`` runs the block-positivity oracle on g(N) as well.
    """
    dims = basis.dims
    if not 0.0 < r <= r0(dims) + 1e-15:
        raise ValueError(f"r must lie in (0, r_0]; got {r}")
    x = npm_element(r, basis)
    w, v = np.linalg.eigh(x)
    psi = v[:, 0]
    g = Global(unitary_with_first_column(psi))
    y = np.zeros(dims.D, dtype=complex)
    y[0] = 1.0
    gx = apply(g, x)
    verdict = is_block_positive(gx, dims, rng_seed=rng_seed) if cross_check else None
    return GUBreakingWitness(x, g, y, expect(gx, y), verdict)


def _report(claim_id, dims, params, seed, trials, margins, notes, start) -> ClaimReport:
    worst = min(margins.values())
    return ClaimReport(claim_id, dims, params, seed if isinstance(seed, int) else 0, trials,
                       float(worst), bool(worst >= 0.0),
                       notes + [f"{k}: slack {v:.3e}" for k, v in margins.items()],
                       time.perf_counter() - start)


def check_gamma_self_dual(trials: int, rng_seed: SeedLike = 0, dims: Dims = Dims(2),
                          tol: float = 1e-12, tol_witness: float = 1e-9) -> ClaimReport:
    """Self-duality and LU covariance of the partially transposed PSD cone.

    (i) Tr G(x)G(y) = Tr xy >= 0 on random state pairs; (ii) the PSD x' = E_1 against the
    block-positive, non-PSD z' = N(r_0; Bell) gives Tr G(x')G(z') = -r_0 < 0;
    (iii) G(g(rho)) = g'(G(rho)) entrywise for random local g = (U_A, U_B), g' = (U_A, conj U_B).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    start = time.perf_counter()
    rng = make_rng(rng_seed)
    pt = lambda m: partial_transpose(m, dims)  # noqa: E731
    inner_err, min_inner, cov_err, literal_err = 0.0, np.inf, 0.0, 0.0
    for _ in range(trials):
        x = random_state(dims.D, rng)
        y = random_state(dims.D, rng)
        a, b = trace_inner(pt(x), pt(y)), trace_inner(x, y)
        inner_err = max(inner_err, abs(a - b))
        min_inner = min(min_inner, a)
        g = random_local(dims, rng)
        rho = random_state(dims.D, rng)
        # Gamma conjugates U_B: Gamma(g(rho)) = g'(Gamma(rho)) with g' = (U_A, conj(U_B))
        lhs = pt(apply(g, rho))
        cov_err = max(cov_err, float(np.max(np.abs(apply(Local(g.u_a, g.u_b.conj()), pt(rho)) - lhs))))
        literal_err = max(literal_err, float(np.max(np.abs(apply(g, pt(rho)) - lhs))))
    rr = r0(dims)
    bell = weyl_bell_basis(dims)
    z = npm_element(rr, bell)
    val = trace_inner(pt(bell[0]), pt(z))
    margins = {
        "trace_inner_preserved": tol - inner_err,
        "psd_pairs_nonnegative": min_inner + tol,
        "lu_covariance": tol - cov_err,
        "witness_value": tol_witness - abs(val + rr),
        "witness_negative": -val - tol,
    }
    notes = [f"Tr G(E_1)G(N(r_0)) = {val:.12f} (expected -r_0 = {-rr:.12f})",
             f"same-unitary identity g(G(rho)) = G(g(rho)): max deviation {literal_err:.3e} "
             "(holds only for real U_B; reported, not asserted)"]
    return _report("prop-gamma", dims, {"trials": trials}, rng_seed, trials, margins, notes, start)


def check_lu_symmetry_npm(r: float, trials: int, rng_seed: SeedLike = 0, dims: Dims = Dims(2),
                          rotations: int = 100, tol: float = 1e-12) -> ClaimReport:
    """LU covariance of NPM elements and of the NPM_r dual-membership verdicts.

    g(N(lam; {E_k})) must equal N(lam; {g(E_k)}), and the verdict of g(x) against the rotated
    family must match the verdict of x against the original family.
    """
    if not 0.0 <= r <= r0(dims) + 1e-15:
        raise ValueError(f"r outside [0, r_0]: {r}")
    start = time.perf_counter()
    rng = make_rng(rng_seed)
    err = 0.0
    for _ in range(trials):
        basis = random_mebasis(dims, rng)
        lam = rng.uniform(0.0, r) if r > 0 else 0.0
        g = random_local(dims, rng)
        err = max(err, float(np.max(np.abs(apply(g, npm_element(lam, basis))
                                           - npm_element(lam, apply_to_basis(g, basis))))))
    family = Finite([random_mebasis(dims, rng) for _ in range(4)])
    sigma = family.bases[0][0]
    probes = [isotropic_mixture(sigma, 1.0 / (2.0 * r + 1.0)), sigma, np.eye(dims.D) / dims.D]
    base = [npm_dual_membership(x, r, family).status for x in probes]
    mismatches = 0
    for _ in range(rotations):
        g = random_local(dims, rng)
        rotated = Finite([apply_to_basis(g, b) for b in family.bases])
        now = [npm_dual_membership(apply(g, x), r, rotated).status for x in probes]
        mismatches += sum(a != b for a, b in zip(base, now))
    margins = {"npm_covariance": tol - err, "verdict_invariance": -float(mismatches)}
    notes = [f"max |g(N) - N(g E)| = {err:.3e}", f"verdict mismatches over {rotations} rotations: {mismatches}",
             "probe verdicts: " + ", ".join(s.value for s in base)]
    return _report("prop-lu", dims, {"r": r, "trials": trials, "rotations": rotations}, rng_seed,
                   trials, margins, notes, start)


def capacity_witness(dims: Dims) -> tuple[list[np.ndarray], Measurement]:
    """The D computational product states with the matching projective measurement."""
    states = [proj(e) for e in np.eye(dims.D, dtype=complex)]
    return states, Measurement([s.copy() for s in states])

