"""Dense Hermitian linear algebra on a bipartite space H_A (x) H_B with equal local dimension.

Matrices are plain ``numpy`` complex arrays. ``Dims`` carries the local dimension ``d_loc``
and the total dimension ``D = d_loc**2``; every function that needs the split takes it
explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Union

import numpy as np

TOL_HERM = 1e-12
TOL_NORM = 1e-12
TOL = 1e-9
TOL_SPEC = 1e-10

SeedLike = Union[int, np.random.Generator, np.random.SeedSequence, None]

RNG_NAME = "numpy.random.Generator(PCG64)"


def make_rng(seed: SeedLike) -> np.random.Generator:
    """Return a PCG64 generator; a ``Generator`` passes through unchanged."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class Dims:
    """Local dimension of each factor; the bipartite space has dimension ``D = d_loc**2``."""

    d_loc: int

    def __post_init__(self):
        if not isinstance(self.d_loc, (int, np.integer)) or isinstance(self.d_loc, bool):
            raise TypeError(f"d_loc must be an integer, got {self.d_loc!r}")
        if self.d_loc < 2:
            raise ValueError(f"d_loc must be at least 2, got {self.d_loc}")

    @property
    def D(self) -> int:
        return self.d_loc * self.d_loc

    @classmethod
    def from_total(cls, D: int) -> "Dims":
        d = int(round(np.sqrt(D)))
        if d * d != D:
            raise ValueError(f"total dimension {D} is not a perfect square")
        return cls(d)


def _check_square(x: np.ndarray, name: str = "x") -> None:
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {x.shape}")


def _check_dims(x: np.ndarray, dims: Dims) -> None:
    _check_square(x)
    if x.shape[0] != dims.D:
        raise ValueError(f"matrix of size {x.shape[0]} does not match D={dims.D}")


def is_hermitian(x: np.ndarray, tol: float = TOL_HERM) -> bool:
    return x.ndim == 2 and x.shape[0] == x.shape[1] and bool(np.max(np.abs(x - x.conj().T), initial=0.0) <= tol)


def as_herm(x, tol: float = TOL_HERM) -> np.ndarray:
    """Validate ``x`` as Hermitian and return it as a complex array."""
    x = np.asarray(x, dtype=complex)
    _check_square(x)
    if not is_hermitian(x, tol * max(1.0, float(np.max(np.abs(x), initial=0.0)))):
        raise ValueError("matrix is not Hermitian")
    return x


def ket(v) -> np.ndarray:
    """Normalize a vector; raises on the zero vector."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("cannot normalize the zero vector")
    return v / n


def proj(v) -> np.ndarray:
    """Rank-one projector |v><v| of a (normalized) vector."""
    v = ket(v)
    return np.outer(v, v.conj())


def fix_phase(v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Rotate the global phase so the first non-negligible amplitude is real and positive."""
    v = np.asarray(v, dtype=complex)
    idx = np.flatnonzero(np.abs(v) > tol)
    if idx.size == 0:
        return v
    a = v[idx[0]]
    if a.imag == 0.0 and a.real > 0.0:
        return v
    out = v * (abs(a) / a)
    out[idx[0]] = abs(a)
    return out


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(a, b)


def trace_inner(x: np.ndarray, y: np.ndarray) -> float:
    """Hilbert-Schmidt inner product Tr(x y) for Hermitian x, y (real by construction)."""
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    # Tr(xy) = sum_ij x_ij y_ji
    return float(np.real(np.sum(x * y.T)))


def expect(x: np.ndarray, v: np.ndarray) -> float:
    """Real quadratic form <v|x|v>."""
    return float(np.real(np.vdot(v, x @ v)))


def partial_transpose(x: np.ndarray, dims: Dims) -> np.ndarray:
    """Transpose on the second (Bob's) factor."""
    _check_dims(x, dims)
    d = dims.d_loc
    return x.reshape(d, d, d, d).transpose(0, 3, 2, 1).reshape(dims.D, dims.D)


def partial_trace(x: np.ndarray, dims: Dims, factor: str = "B") -> np.ndarray:
    """Trace out ``factor`` ('A' or 'B') and return the reduced d_loc x d_loc matrix."""
    _check_dims(x, dims)
    d = dims.d_loc
    t = x.reshape(d, d, d, d)
    if factor == "B":
        return np.einsum("ijkj->ik", t)
    if factor == "A":
        return np.einsum("ijil->jl", t)
    raise ValueError(f"factor must be 'A' or 'B', got {factor!r}")


def eig_h(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending order and the matching orthonormal eigenvectors (as columns)."""
    _check_square(x)
    if not np.all(np.isfinite(x)):
        raise np.linalg.LinAlgError("non-finite entries in Hermitian eigenproblem")
    w, v = np.linalg.eigh(x)
    return w[::-1].copy(), v[:, ::-1].copy()


def min_eig(x: np.ndarray) -> tuple[float, np.ndarray]:
    """Smallest eigenvalue and a unit eigenvector for it."""
    w, v = np.linalg.eigh(x)
    return float(w[0]), v[:, 0]


def psd_part(x: np.ndarray) -> np.ndarray:
    """Frobenius-nearest PSD matrix (projection onto the PSD cone)."""
    w, v = np.linalg.eigh(x)
    return (v * np.clip(w, 0.0, None)) @ v.conj().T


# --- sampling -----------------------------------------------------------------------------


def haar_unitaries(dim: int, n: int, rng: SeedLike = None) -> np.ndarray:
    """``n`` Haar-distributed ``dim x dim`` unitaries, shape ``(n, dim, dim)``.

    QR of a complex Ginibre matrix with the phases of R's diagonal folded back into Q.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    rng = make_rng(rng)
    z = (rng.standard_normal((n, dim, dim)) + 1j * rng.standard_normal((n, dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=1, axis2=2)
    return q * (diag / np.abs(diag))[:, None, :]


def haar_unitary(dim: int, rng_seed: SeedLike = None) -> np.ndarray:
    return haar_unitaries(dim, 1, rng_seed)[0]


def random_unit_vectors(dim: int, n: int, rng: SeedLike = None) -> np.ndarray:
    """Uniformly random unit vectors in C^dim, shape ``(n, dim)``."""
    rng = make_rng(rng)
    z = rng.standard_normal((n, dim)) + 1j * rng.standard_normal((n, dim))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def random_product_pure(dims: Dims, rng_seed: SeedLike = None) -> np.ndarray:
    """A product vector a (x) b with a, b independent Haar-random local unit vectors."""
    rng = make_rng(rng_seed)
    a, b = random_unit_vectors(dims.d_loc, 2, rng)
    return np.kron(a, b)


def random_product_pures(dims: Dims, n: int, rng: SeedLike = None) -> np.ndarray:
    rng = make_rng(rng)
    a = random_unit_vectors(dims.d_loc, n, rng)
    b = random_unit_vectors(dims.d_loc, n, rng)
    return (a[:, :, None] * b[:, None, :]).reshape(n, dims.D)


def random_state(dim: int, rng: SeedLike = None, rank: int | None = None) -> np.ndarray:
    """Density matrix from the induced (Hilbert-Schmidt for full rank) measure."""
    rng = make_rng(rng)
    k = dim if rank is None else rank
    g = rng.standard_normal((dim, k)) + 1j * rng.standard_normal((dim, k))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_hermitian(dim: int, rng: SeedLike = None) -> np.ndarray:
    rng = make_rng(rng)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (g + g.conj().T) / 2.0


def schmidt_coefficients(v: np.ndarray, dims: Dims) -> np.ndarray:
    return np.linalg.svd(np.asarray(v).reshape(dims.d_loc, dims.d_loc), compute_uv=False)


def phi_plus(dims: Dims) -> np.ndarray:
    """|Phi+> = sum_i |ii> / sqrt(d)."""
    return np.eye(dims.d_loc, dtype=complex).reshape(-1) / np.sqrt(dims.d_loc)


def mes_from_unitary(u: np.ndarray) -> np.ndarray:
    """The maximally entangled vector (u (x) I)|Phi+>, i.e. vec(u)/sqrt(d)."""
    return np.asarray(u, dtype=complex).reshape(-1) / np.sqrt(u.shape[0])


# --- maximally entangled bases ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MEBasis:
    """An ordered orthonormal basis of maximally entangled vectors |psi_1>, ..., |psi_{d^2}>.

    ``vectors[k]`` is |psi_{k+1}>; the projectors E_k = |psi_k><psi_k| are derived.
    """

    vectors: np.ndarray
    dims: Dims

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=complex)
        if v.shape != (self.dims.D, self.dims.D):
            raise ValueError(f"expected {self.dims.D} vectors of length {self.dims.D}, got {v.shape}")
        v = np.array([fix_phase(row) for row in v])
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @cached_property
    def projectors(self) -> np.ndarray:
        p = self.vectors[:, :, None] * self.vectors[:, None, :].conj()
        p.setflags(write=False)
        return p

    def __len__(self) -> int:
        return self.vectors.shape[0]

    def __getitem__(self, k: int) -> np.ndarray:
        return self.projectors[k]

    def invariant_errors(self) -> dict[str, float]:
        """Largest deviation from each defining property of an ME basis."""
        P = self.projectors
        D, d = self.dims.D, self.dims.d_loc
        idem = max(np.max(np.abs(p @ p - p)) for p in P)
        gram = np.einsum("kij,lji->kl", P, P)
        ortho = np.max(np.abs(gram - np.eye(D)))
        comp = np.max(np.abs(P.sum(axis=0) - np.eye(D)))
        red = np.eye(d) / d
        maxent = max(
            max(np.max(np.abs(partial_trace(p, self.dims, f) - red)) for f in ("A", "B")) for p in P
        )
        return {"projector": float(idem), "orthonormal": float(ortho), "complete": float(comp),
                "max_entangled": float(maxent)}

    def is_valid(self, tol: float = TOL_SPEC) -> bool:
        return all(e <= tol for e in self.invariant_errors().values())

    def permuted(self, order: Iterable[int]) -> "MEBasis":
        order = list(order)
        if sorted(order) != list(range(len(self))):
            raise ValueError("order must be a permutation of the basis indices")
        return MEBasis(self.vectors[order], self.dims)


@lru_cache(maxsize=None)
def weyl_bell_basis(dims: Dims) -> MEBasis:
    """Generalized Bell basis (X^a Z^b (x) I)|Phi+>, ordered by k = a*d + b.

    For d_loc = 2 this is Phi+, Phi-, Psi+, Psi- (up to phase).
    """
    d = dims.d_loc
    omega = np.exp(2j * np.pi / d)
    shift = np.roll(np.eye(d), 1, axis=0)
    clock = np.diag(omega ** np.arange(d))
    phi = phi_plus(dims)
    vecs = []
    for a in range(d):
        for b in range(d):
            w = np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b)
            vecs.append(np.kron(w, np.eye(d)) @ phi)
    return MEBasis(np.array(vecs), dims)


def rotate_mebasis(basis: MEBasis, u_local: tuple[np.ndarray, np.ndarray]) -> MEBasis:
    """Map every |psi_k> to (U_A (x) U_B)|psi_k>, so E_k -> U E_k U^dagger."""
    ua, ub = u_local
    u = np.kron(ua, ub)
    return MEBasis(basis.vectors @ u.T, basis.dims)


def random_mebasis(dims: Dims, rng: SeedLike = None, shuffle: bool = True) -> MEBasis:
    """A Haar local-unitary rotation of the Weyl basis, optionally with shuffled order."""
    rng = make_rng(rng)
    ua, ub = haar_unitaries(dims.d_loc, 2, rng)
    basis = rotate_mebasis(weyl_bell_basis(dims), (ua, ub))
    if shuffle:
        basis = basis.permuted(rng.permutation(dims.D))
    return basis
