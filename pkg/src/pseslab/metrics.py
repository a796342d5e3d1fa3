"""Trace norm, fidelity with pure states, maximal entanglement fidelity, and distance bounds."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cones import FamilySpec, as_family, kr0_dual_membership, r0
from .linalg import (
    TOL,
    Dims,
    SeedLike,
    haar_unitaries,
    make_rng,
    mes_from_unitary,
    partial_trace,
    proj,
    trace_inner,
)


def trace_norm(x: np.ndarray) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    return float(np.sum(np.abs(np.linalg.eigvalsh(x))))


def fidelity_pure(rho: np.ndarray, sigma_pure: np.ndarray, tol: float = 1e-9) -> float:
    """F(rho, sigma) = Tr(rho sigma) for a rank-one projector sigma."""
    w = np.linalg.eigvalsh(sigma_pure)
    if abs(w[-1] - 1.0) > tol or np.max(np.abs(w[:-1]), initial=0.0) > tol:
        raise ValueError("sigma_pure must be a rank-one projector")
    return trace_inner(rho, sigma_pure)


def isotropic_mixture(sigma: np.ndarray, p: float) -> np.ndarray:
    """p sigma + (1-p)(I - sigma)/(D-1): fidelity p with sigma, trace distance 2(1-p)."""
    D = sigma.shape[0]
    return p * sigma + (1.0 - p) * (np.eye(D) - sigma) / (D - 1)


def _polar_unitary(m: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(m)
    return u @ vh


def _fmax_ascent(rho: np.ndarray, u: np.ndarray, iters: int, tol: float):
    d = u.shape[0]
    val = -np.inf
    for _ in range(iters):
        v = mes_from_unitary(u)
        # gradient of <v|rho|v> with respect to vec(u), reshaped to d x d
        g = (rho @ v).reshape(d, d)
        u_new = _polar_unitary(g)
        new = float(np.real(np.vdot(mes_from_unitary(u_new), rho @ mes_from_unitary(u_new))))
        u = u_new
        if new - val <= tol:
            val = max(val, new)
            break
        val = new
    return val, u


def f_max(rho: np.ndarray, restarts: int = 8, iters: int = 500, rng_seed: SeedLike = 0):
    """Maximal overlap of ``rho`` with a maximally entangled state.

    Every maximally entangled vector is vec(U)/sqrt(d) for a unitary U, and Tr(rho sigma) is a
    convex quadratic in vec(U); each step maximizes its linearization at the current U, which
    is the polar factor of the gradient, so the overlap never decreases. Starts are the
    polar factor of the top eigenvector of ``rho`` and Haar-random unitaries.

    Returns ``(value, sigma)``: the value is Tr(rho sigma) for the returned MES projector, a
    certified lower bound on the true maximum.
    """
    D = rho.shape[0]
    d = int(round(np.sqrt(D)))
    rng = make_rng(rng_seed)
    w, v = np.linalg.eigh(rho)
    starts = [_polar_unitary(v[:, -1].reshape(d, d))]
    if restarts > 1:
        starts += list(haar_unitaries(d, restarts - 1, rng))
    best_val, best_u = -np.inf, None
    for u0 in starts:
        val, u = _fmax_ascent(rho, u0, iters, 1e-15)
        if val > best_val:
            best_val, best_u = val, u
    sigma = proj(mes_from_unitary(best_u))
    return trace_inner(rho, sigma), sigma


def f_max_haar_bruteforce(rho: np.ndarray, n_samples: int = 100_000, rng_seed: SeedLike = 0,
                          batch: int = 20_000) -> float:
    """Best overlap over ``n_samples`` Haar-sampled maximally entangled states."""
    D = rho.shape[0]
    d = int(round(np.sqrt(D)))
    rng = make_rng(rng_seed)
    best, left = -np.inf, n_samples
    while left > 0:
        n = min(batch, left)
        V = haar_unitaries(d, n, rng).reshape(n, D) / np.sqrt(d)
        vals = np.real(np.einsum("ni,ij,nj->n", V.conj(), rho, V))
        best = max(best, float(vals.max()))
        left -= n
    return best


# Rows are the magic basis: Phi+, i Phi-, i Psi+, Psi- in the computational basis.
_MAGIC = np.array([[1, 0, 0, 1], [1j, 0, 0, -1j], [0, 1j, 1j, 0], [0, 1, -1, 0]]) / np.sqrt(2.0)


def f_max_two_qubit(rho: np.ndarray) -> float:
    """Exact two-qubit value: largest eigenvalue of Re(rho) written in the magic basis.

    Maximally entangled two-qubit vectors are exactly the real unit combinations of the magic
    basis up to a global phase.
    """
    if rho.shape != (4, 4):
        raise ValueError("closed form only for two qubits")
    m = _MAGIC.conj() @ rho @ _MAGIC.T
    return float(np.linalg.eigvalsh(m.real)[-1])


def epsilon_of_r(r: float) -> float:
    """Distance scale 2 sqrt(2r / (2r+1))."""
    if r < 0:
        raise ValueError("r must be non-negative")
    return 2.0 * np.sqrt(2.0 * r / (2.0 * r + 1.0))


def r_of_epsilon(eps: float) -> float:
    """Inverse of :func:`epsilon_of_r`: eps^2 / (2 (4 - eps^2))."""
    if not 0.0 <= eps < 2.0:
        raise ValueError(f"epsilon must lie in [0, 2), got {eps}")
    e2 = eps * eps
    return e2 / (2.0 * (4.0 - e2))


class WitnessError(RuntimeError):
    """The constructed state failed a check it must pass; indicates a bug or an F_max shortfall."""


def undist_witness(sigma_mes: np.ndarray, r: float, family, tol: float = TOL,
                   rng_seed: SeedLike = 0):
    """State of K_r^(0)(P)* close to the maximally entangled ``sigma_mes``.

    Builds rho0 = p sigma + (1-p)(I - sigma)/(D-1) with p = 1/(2r+1), checks numerically that
    F_max(rho0) <= p and that rho0 passes the K_r^(0)* oracle, and returns
    ``(rho0, ||rho0 - sigma||_1)``; the distance equals 4r/(2r+1).
    """
    family = as_family(family)
    dims = family.dims
    if not 0.0 < r <= r0(dims) + 1e-15:
        raise ValueError(f"r must lie in (0, r_0]; got {r}")
    w = np.linalg.eigvalsh(sigma_mes)
    red = partial_trace(sigma_mes, dims, "A")
    mixed = abs(w[-1] - 1.0) > tol or np.abs(w[:-1]).max() > tol
    if mixed or np.abs(red - np.eye(dims.d_loc) / dims.d_loc).max() > tol:
        raise ValueError("sigma_mes must be a maximally entangled pure state")
    p = 1.0 / (2.0 * r + 1.0)
    rho0 = isotropic_mixture(sigma_mes, p)
    fm, _ = f_max(rho0, restarts=4, rng_seed=rng_seed)
    if fm > p + tol:
        raise WitnessError(f"F_max(rho0)={fm} exceeds 1/(2r+1)={p}")
    verdict = kr0_dual_membership(rho0, r, family, tol)
    if not verdict.inside:
        raise WitnessError(f"rho0 rejected by the K_r^(0)* oracle: {verdict.status.value}")
    return rho0, trace_norm(rho0 - sigma_mes)


@dataclass
class DistanceBoundReport:
    r: float
    epsilon_r: float
    sampled_sigma_count: int
    max_over_sigma_of_min_dist: float
    witness_states: list = field(default_factory=list)
    passed: bool = False


def d_bound_report(r: float, family: FamilySpec, n_sigma: int = 100, rng_seed: SeedLike = 0,
                   keep_witnesses: bool = False, tol: float = TOL) -> DistanceBoundReport:
    """Upper bound on the distance from Haar-sampled MES to K_r^(0)(P)* via explicit witnesses."""
    family = as_family(family)
    dims = family.dims
    if not 0.0 < r <= r0(dims) + 1e-15:
        raise ValueError(f"r must lie in (0, r_0]; got {r}")
    rng = make_rng(rng_seed)
    eps = epsilon_of_r(r)
    worst, kept = -np.inf, []
    for u in haar_unitaries(dims.d_loc, n_sigma, rng):
        sigma = proj(mes_from_unitary(u))
        rho0, dist = undist_witness(sigma, r, family, tol, rng)
        worst = max(worst, dist)
        if keep_witnesses:
            kept.append((sigma, rho0, dist))
    return DistanceBoundReport(r, eps, n_sigma, worst, kept, passed=worst <= eps + tol)


def sample_mes(dims: Dims, rng: SeedLike = None) -> np.ndarray:
    """Projector onto a Haar-random maximally entangled state."""
    u = haar_unitaries(dims.d_loc, 1, make_rng(rng))[0]
    return proj(mes_from_unitary(u))
