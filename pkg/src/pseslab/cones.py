"""Cone descriptions and membership oracles.

Every oracle returns a :class:`MembershipVerdict`. ``Outside`` verdicts always carry a witness
that can be re-evaluated against the tested matrix (:func:`witness_value`); ``Inside`` verdicts
say whether the decision is exact (``certified``) or a heuristic search result.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np
from scipy.optimize import nnls

from .linalg import (
    TOL,
    Dims,
    MEBasis,
    SeedLike,
    expect,
    haar_unitaries,
    make_rng,
    min_eig,
    partial_trace,
    partial_transpose,
    psd_part,
    random_unit_vectors,
    trace_inner,
    weyl_bell_basis,
)


def r0(dims: Dims) -> float:
    """Largest NPM parameter for which NPM elements are pairwise non-negative: (sqrt(2D)-2)/4."""
    return (np.sqrt(2.0 * dims.D) - 2.0) / 4.0


def con1_radius(dims: Dims) -> float:
    """Parameter bound (sqrt(D)-1)/2 under which NPM elements are block positive."""
    return (np.sqrt(dims.D) - 1.0) / 2.0


def con2_floor(r: float, dims: Dims) -> float:
    """Lower bound -2(r+1/2)^2 + D/4 on Tr(xy) for two NPM elements with parameter r."""
    return -2.0 * (r + 0.5) ** 2 + dims.D / 4.0


# --- verdicts -----------------------------------------------------------------------------


class Status(str, enum.Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    UNDECIDED = "undecided"


Witness = np.ndarray


@dataclass
class MembershipVerdict:
    """Outcome of a membership test.

    ``witness`` is either a vector ``v`` (value ``<v|x|v>``) or a matrix ``w`` (value
    ``Tr(x w)``); ``violation`` is that value, negative for an ``Outside`` verdict.
    ``bound`` is the smallest value of the defining functional that the search saw.
    """

    status: Status
    certified: bool = False
    certificate: Optional[dict] = None
    witness: Optional[Witness] = None
    violation: Optional[float] = None
    bound: Optional[float] = None
    notes: list[str] = field(default_factory=list)

    @property
    def inside(self) -> bool:
        return self.status is Status.INSIDE

    @property
    def outside(self) -> bool:
        return self.status is Status.OUTSIDE


def witness_value(x: np.ndarray, witness: Witness) -> float:
    if witness.ndim == 1:
        return expect(x, witness)
    return trace_inner(x, witness)


def _outside(x: np.ndarray, witness: Witness, **kw) -> MembershipVerdict:
    return MembershipVerdict(Status.OUTSIDE, certified=True, witness=witness,
                             violation=witness_value(x, witness), **kw)


# --- families and cone specs --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Finite:
    """An explicit finite set of ME bases."""

    bases: tuple[MEBasis, ...]

    def __init__(self, bases: Sequence[MEBasis]):
        bases = tuple(bases)
        if not bases:
            raise ValueError("a finite family needs at least one basis")
        dims = bases[0].dims
        if any(b.dims != dims for b in bases):
            raise ValueError("all bases in a family must share dims")
        object.__setattr__(self, "bases", bases)

    @property
    def dims(self) -> Dims:
        return self.bases[0].dims

    def iter_bases(self):
        return iter(self.bases)


@dataclass(frozen=True)
class FullMEOP:
    """All ME bases; membership against it is tested on ``sample_budget`` random bases.

    The sample is a deterministic function of ``(dims, sample_budget, rng_seed)``.
    """

    dims: Dims
    sample_budget: int = 1024
    rng_seed: int = 0

    def __post_init__(self):
        if self.sample_budget < 1:
            raise ValueError("sample_budget must be >= 1")

    def vectors(self) -> np.ndarray:
        return _sampled_vectors(self.dims, self.sample_budget, self.rng_seed)

    def iter_bases(self):
        for v in self.vectors():
            yield MEBasis(v, self.dims)


@lru_cache(maxsize=32)
def _sampled_vectors(dims: Dims, budget: int, seed: int) -> np.ndarray:
    """Stack of ``budget`` randomly ordered LU rotations of the Weyl basis, shape (budget, D, D)."""
    rng = make_rng(seed)
    d, D = dims.d_loc, dims.D
    u = haar_unitaries(d, 2 * budget, rng)
    ua, ub = u[:budget], u[budget:]
    kron = np.einsum("bij,bkl->bikjl", ua, ub).reshape(budget, D, D)
    out = np.einsum("kj,bij->bki", weyl_bell_basis(dims).vectors, kron)
    for b in range(budget):
        out[b] = out[b][rng.permutation(D)]
    out.setflags(write=False)
    return out


def family_vectors(family) -> np.ndarray:
    """All basis vectors of a family as one array of shape (n_bases, D, D)."""
    if isinstance(family, FullMEOP):
        return family.vectors()
    return np.stack([b.vectors for b in family.bases])


FamilySpec = Union[Finite, FullMEOP]


def as_family(family: Union[FamilySpec, MEBasis, Sequence[MEBasis]]) -> FamilySpec:
    if isinstance(family, (Finite, FullMEOP)):
        return family
    if isinstance(family, MEBasis):
        return Finite([family])
    return Finite(family)


class ConeKind(str, enum.Enum):
    SES = "SES"
    SEP_DUAL = "SEP*"
    GAMMA_SES = "Gamma(SES)"
    NPM_CONE = "cone(NPM_r)"
    KR0 = "K_r^(0)"
    KR0_DUAL = "K_r^(0)*"
    KR = "K_r"


_NPM_KINDS = {ConeKind.NPM_CONE, ConeKind.KR0, ConeKind.KR0_DUAL, ConeKind.KR}


@dataclass(frozen=True, eq=False)
class ConeSpec:
    kind: ConeKind
    dims: Dims
    r: Optional[float] = None
    family: Optional[FamilySpec] = None

    def __post_init__(self):
        if self.kind in _NPM_KINDS:
            if self.r is None or self.family is None:
                raise ValueError(f"{self.kind.value} needs both r and a family")
            _check_r(self.r, self.dims)
            if self.family.dims != self.dims:
                raise ValueError("family dims do not match cone dims")


def _check_r(r: float, dims: Dims) -> None:
    if not (0.0 <= r <= r0(dims) + 1e-15):
        raise ValueError(f"r={r} outside [0, r_0={r0(dims):.7f}]")


# --- NPM elements -------------------------------------------------------------------------


def npm_element(lam: float, basis: MEBasis) -> np.ndarray:
    """N(lam; {E_k}) = -lam E_1 + (1+lam) E_2 + 1/2 sum_{k>=3} E_k."""
    if lam < 0:
        raise ValueError(f"lambda must be non-negative, got {lam}")
    P = basis.projectors
    return -lam * P[0] + (1.0 + lam) * P[1] + 0.5 * P[2:].sum(axis=0)


def _npm_values(x: np.ndarray, vectors: np.ndarray, lam: float) -> np.ndarray:
    """Tr(x N(lam)) for each basis in a stack, from the diagonal <psi_k|x|psi_k>."""
    diag = np.real(np.sum((vectors.conj() @ x) * vectors, axis=2))
    return -lam * diag[:, 0] + (1.0 + lam) * diag[:, 1] + 0.5 * diag[:, 2:].sum(axis=1)


def _npm_scan(x: np.ndarray, r: float, family: FamilySpec):
    """Minimum of Tr(x N(lam)) over the family at lam in {0, r}.

    Tr(x N(lam)) is affine in lam, so the two endpoints cover the whole interval.
    Returns ``(min value, lam, basis index, number of bases)``.
    """
    V = family_vectors(family)
    vals = np.stack([_npm_values(x, V, 0.0), _npm_values(x, V, r)])
    i, b = np.unravel_index(np.argmin(vals), vals.shape)
    return float(vals[i, b]), (0.0, r)[i], int(b), V.shape[0]


# --- SES / SEP* / SEP ---------------------------------------------------------------------


def is_psd(x: np.ndarray, tol: float = TOL) -> MembershipVerdict:
    """Membership in SES: Inside iff the smallest eigenvalue is >= -tol."""
    lam, v = min_eig(x)
    if lam >= -tol:
        return MembershipVerdict(Status.INSIDE, certified=True, bound=lam,
                                 certificate={"min_eigenvalue": lam})
    return _outside(x, v, bound=lam)


def _product_form(x: np.ndarray, d: int) -> np.ndarray:
    return x.reshape(d, d, d, d)


def min_product_value(x: np.ndarray, dims: Dims, restarts: int = 32, iters: int = 200,
                      rng_seed: SeedLike = None, tol: float = 1e-13):
    """Heuristic minimum of <a(x)b|x|a(x)b> over unit a, b by alternating eigen-minimization.

    Returns ``(value, a, b)`` for the best local minimum found.
    """
    d = dims.d_loc
    X = _product_form(x, d)
    rng = make_rng(rng_seed)
    starts = random_unit_vectors(d, restarts, rng)
    best = (np.inf, None, None)
    for a in starts:
        prev = np.inf
        for _ in range(iters):
            mb = np.einsum("i,ijkl,k->jl", a.conj(), X, a)
            wb, vb = np.linalg.eigh(mb)
            b = vb[:, 0]
            ma = np.einsum("j,ijkl,l->ik", b.conj(), X, b)
            wa, va = np.linalg.eigh(ma)
            a = va[:, 0]
            val = wa[0]
            if prev - val <= tol:
                break
            prev = val
        val = expect(x, np.kron(a, b))
        if val < best[0]:
            best = (val, a, b)
    return best


def is_block_positive(x: np.ndarray, dims: Dims, restarts: int = 32, iters: int = 200,
                      rng_seed: SeedLike = 0, tol: float = TOL) -> MembershipVerdict:
    """Membership in SEP*: positivity of the quadratic form on product vectors.

    ``Outside`` is certified by the returned product vector. ``Inside`` is only a search
    result (``certified=False``) with ``bound`` the best minimum found.
    """
    val, a, b = min_product_value(x, dims, restarts, iters, rng_seed)
    if val < -tol:
        return _outside(x, np.kron(a, b), bound=val)
    return MembershipVerdict(Status.INSIDE, certified=False, bound=val,
                             notes=[f"heuristic: {restarts} restarts x {iters} iterations"])


def is_ppt_separable(x: np.ndarray, dims: Dims, tol: float = TOL) -> MembershipVerdict:
    """SEP membership by the partial-transpose test.

    Exact for D <= 6. Above that a PPT state is Inside only when it is a product state,
    otherwise Undecided.
    """
    if is_psd(x, tol).outside or abs(np.trace(x).real - 1.0) > tol:
        raise ValueError("is_ppt_separable expects a density matrix")
    lam, v = min_eig(partial_transpose(x, dims))
    if lam < -tol:
        # Tr(x Gamma(vv*)) = <v|Gamma(x)|v>
        w = partial_transpose(np.outer(v, v.conj()), dims)
        return _outside(x, w, bound=lam)
    if dims.D <= 6:
        return MembershipVerdict(Status.INSIDE, certified=True, bound=lam,
                                 certificate={"min_pt_eigenvalue": lam})
    # a product state is separable in any dimension
    reduced = np.kron(partial_trace(x, dims, "B"), partial_trace(x, dims, "A"))
    prod_err = float(np.max(np.abs(x - reduced)))
    if prod_err <= tol:
        return MembershipVerdict(Status.INSIDE, certified=True, bound=lam,
                                 certificate={"min_pt_eigenvalue": lam, "product_error": prod_err})
    return MembershipVerdict(Status.UNDECIDED, bound=lam,
                             notes=[f"PPT but D={dims.D} > 6: partial transpose test inconclusive"])


def in_gamma_ses(x: np.ndarray, dims: Dims, tol: float = TOL) -> MembershipVerdict:
    """Membership in Gamma(SES): Gamma(x) must be PSD."""
    lam, v = min_eig(partial_transpose(x, dims))
    if lam >= -tol:
        return MembershipVerdict(Status.INSIDE, certified=True, bound=lam,
                                 certificate={"min_pt_eigenvalue": lam})
    return _outside(x, partial_transpose(np.outer(v, v.conj()), dims), bound=lam)


# --- NPM-based cones ----------------------------------------------------------------------


def npm_dual_membership(x: np.ndarray, r: float, family, tol: float = TOL) -> MembershipVerdict:
    """Membership in NPM_r(P)*: Tr(x N) >= 0 for every NPM element of the family."""
    family = as_family(family)
    _check_r(r, family.dims)
    best, lam, b, n = _npm_scan(x, r, family)
    exact = isinstance(family, Finite)
    if best < -tol:
        basis = MEBasis(family_vectors(family)[b], family.dims)
        return _outside(x, npm_element(lam, basis), bound=best,
                        certificate={"lambda": lam, "basis_index": b, "bases_tested": n})
    return MembershipVerdict(Status.INSIDE, certified=exact, bound=best,
                             certificate={"min_npm_value": best, "bases_tested": n})


def kr0_dual_membership(x: np.ndarray, r: float, family, tol: float = TOL) -> MembershipVerdict:
    """Membership in K_r^(0)(P)* = (SES + NPM_r(P))*: x PSD and in NPM_r(P)*."""
    family = as_family(family)
    _check_r(r, family.dims)
    psd = is_psd(x, tol)
    if psd.outside:
        psd.notes.append("fails the SES half")
        return psd
    v = npm_dual_membership(x, r, family, tol)
    if v.outside:
        v.notes.append("fails the NPM half")
        return v
    v.certificate = {**(v.certificate or {}), "min_eigenvalue": psd.bound}
    v.bound = min(psd.bound, v.bound)
    return v


def _npm_generators(r: float, family: Finite) -> list[np.ndarray]:
    # N(lam) is a convex combination of N(0) (PSD) and N(r), so N(r) generates the non-PSD part.
    return [npm_element(r, b) for b in family.iter_bases()]


def _herm_to_real(m: np.ndarray) -> np.ndarray:
    return np.concatenate([m.real.reshape(-1), m.imag.reshape(-1)])


def npm_cone_membership(x: np.ndarray, r: float, family, tol: float = TOL) -> MembershipVerdict:
    """Membership in the convex cone generated by NPM_r(P), decided by non-negative least squares.

    For a finite family the residual of the NNLS fit is an exact separating functional.
    """
    family = as_family(family)
    _check_r(r, family.dims)
    gens = []
    for b in family.iter_bases():
        gens += [npm_element(0.0, b), npm_element(r, b)]
    A = np.stack([_herm_to_real(g) for g in gens], axis=1)
    c, _ = nnls(A, _herm_to_real(x))
    resid = x - np.tensordot(c, np.array(gens), axes=1)
    norm = np.linalg.norm(resid)
    if norm <= tol:
        return MembershipVerdict(Status.INSIDE, certified=isinstance(family, Finite), bound=0.0,
                                 certificate={"coefficients": c, "residual": norm})
    if isinstance(family, Finite):
        w = -(resid + resid.conj().T) / 2.0
        if trace_inner(x, w) < -tol and min(trace_inner(g, w) for g in gens) >= -tol:
            return _outside(x, w, certificate={"residual": norm})
    return MembershipVerdict(Status.UNDECIDED, bound=-norm,
                             notes=["no generating combination found within the sampled family"])


def kr0_membership(x: np.ndarray, r: float, family, max_iter: int = 2000,
                   tol: float = TOL) -> MembershipVerdict:
    """Membership in K_r^(0)(P) = SES + cone(NPM_r(P)) by alternating projections.

    Searches c >= 0 with x - sum_b c_b N(r; E^b) PSD, alternating between the PSD cone and the
    affine-conic set of such differences. ``Inside`` returns the decomposition; ``Outside`` is
    only reported when the limit direction is a verified separating element of K_r^(0)*;
    otherwise ``Undecided``.
    """
    family = as_family(family)
    _check_r(r, family.dims)
    if not isinstance(family, Finite):
        raise ValueError("primal K_r^(0) membership needs a finite family")
    gens = _npm_generators(r, family)
    G = np.array(gens)
    A = np.stack([_herm_to_real(g) for g in gens], axis=1)
    c = np.zeros(len(gens))
    s = x.copy()
    for _ in range(max_iter):
        s = x - np.tensordot(c, G, axes=1)
        lam, _ = min_eig(s)
        if lam >= -tol:
            return MembershipVerdict(Status.INSIDE, certified=True, bound=lam,
                                     certificate={"coefficients": c, "sigma": s, "min_eigenvalue": lam})
        p = psd_part(s)
        c_new, _ = nnls(A, _herm_to_real(x - p))
        if np.max(np.abs(c_new - c), initial=0.0) < 1e-14:
            break
        c = c_new
    # candidate separating element: the negative part of the residual
    w = psd_part(s) - s
    w = (w + w.conj().T) / 2.0
    if trace_inner(x, w) < -tol:
        dual = kr0_dual_membership(w, r, family, tol)
        if dual.inside:
            return _outside(x, w, notes=["separating element verified in K_r^(0)*"])
    return MembershipVerdict(Status.UNDECIDED, bound=min_eig(s)[0],
                             notes=["alternating projections did not reach a PSD remainder"])


def kr_membership(x: np.ndarray, r: float, family, max_iter: int = 2000,
                  tol: float = TOL) -> MembershipVerdict:
    """Membership in K_r(P) = (K_r^(0)(P)* + NPM_r(P))*.

    The dual of the sum is the intersection of duals: x must lie in the closure of K_r^(0)(P)
    and in NPM_r(P)*.
    """
    v = npm_dual_membership(x, r, family, tol)
    if v.outside:
        return v
    p = kr0_membership(x, r, family, max_iter, tol)
    if p.inside:
        p.certified = p.certified and v.certified
        p.certificate = {**p.certificate, "min_npm_value": v.bound}
        p.bound = min(p.bound, v.bound)
    return p


def membership(x: np.ndarray, cone: ConeSpec, **kw) -> MembershipVerdict:
    """Dispatch ``x`` to the oracle for ``cone``."""
    k = cone.kind
    if k is ConeKind.SES:
        return is_psd(x, **kw)
    if k is ConeKind.SEP_DUAL:
        return is_block_positive(x, cone.dims, **kw)
    if k is ConeKind.GAMMA_SES:
        return in_gamma_ses(x, cone.dims, **kw)
    if k is ConeKind.NPM_CONE:
        return npm_cone_membership(x, cone.r, cone.family, **kw)
    if k is ConeKind.KR0:
        return kr0_membership(x, cone.r, cone.family, **kw)
    if k is ConeKind.KR0_DUAL:
        return kr0_dual_membership(x, cone.r, cone.family, **kw)
    if k is ConeKind.KR:
        return kr_membership(x, cone.r, cone.family, **kw)
    raise ValueError(f"unknown cone kind {k}")


# --- hierarchy witnesses ------------------------------------------------------------------


@dataclass
class HierarchyResult:
    found: bool
    witness: Optional[np.ndarray]
    verdict_r1: Optional[MembershipVerdict]
    verdict_r2: Optional[MembershipVerdict]
    samples_used: int
    notes: list[str] = field(default_factory=list)


def hierarchy_witness(r1: float, r2: float, family, rng_seed: SeedLike = 0,
                      budget: int = 10_000, tol: float = TOL) -> HierarchyResult:
    """Search for a Hermitian x in NPM_{r2}(P)* but not in NPM_{r1}(P)*.

    Candidates are the family's own NPM elements N(r1), then random mixtures
    p E + (1-p)(I - E)/(D-1) with E a first projector of a family basis. Exhausting the budget
    is reported, not raised.
    """
    family = as_family(family)
    dims = family.dims
    _check_r(r1, dims)
    _check_r(r2, dims)
    if not r2 <= r1:
        raise ValueError("expected r2 <= r1")
    if r1 == r2:
        return HierarchyResult(False, None, None, None, 0,
                               ["r1 == r2: the dual constraint sets coincide"])
    bases = list(family.iter_bases())
    D = dims.D
    eye = np.eye(D)

    def test(x):
        v1 = npm_dual_membership(x, r1, Finite(bases), tol)
        v2 = npm_dual_membership(x, r2, Finite(bases), tol)
        return v1, v2

    n = 0
    for b in bases:
        n += 1
        x = npm_element(r1, b)
        v1, v2 = test(x)
        if v1.status != v2.status:
            return HierarchyResult(True, x, v1, v2, n, ["structured candidate N(r1)"])
    rng = make_rng(rng_seed)
    while n < budget:
        n += 1
        e = bases[rng.integers(len(bases))][0]
        p = rng.uniform()
        x = p * e + (1.0 - p) * (eye - e) / (D - 1)
        v1, v2 = test(x)
        if v1.status != v2.status:
            return HierarchyResult(True, x, v1, v2, n, [f"random mixture p={p:.12g}"])
    return HierarchyResult(False, None, None, None, n, [f"no witness within {budget} samples"])
