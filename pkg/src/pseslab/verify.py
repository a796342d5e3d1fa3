"""One seeded runner per claim, each producing a :class:`ClaimReport`.

Runners never raise on a mathematical failure; they return ``passed=False``. Bad claim ids or
parameters outside a claim's domain raise :class:`ClaimError`.

Seeds: each claim draws from ``SeedSequence(seed, spawn_key=(crc32(claim_id),))`` so claims
are independent streams and can run in any order or concurrently.
"""

from __future__ import annotations

import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable

import numpy as np

from .cones import (
    Finite,
    FullMEOP,
    con1_radius,
    con2_floor,
    family_vectors,
    hierarchy_witness,
    is_ppt_separable,
    kr0_dual_membership,
    min_product_value,
    npm_element,
    r0,
    witness_value,
)
from .discrimination import p0_family, verify_theorem_dist
from .linalg import (
    TOL,
    Dims,
    haar_unitaries,
    random_mebasis,
    random_product_pures,
    random_state,
    rotate_mebasis,
    schmidt_coefficients,
    trace_inner,
    weyl_bell_basis,
)
from .metrics import d_bound_report, f_max, isotropic_mixture, WitnessError
from .report import ClaimReport
from .symmetry import (
    capacity_witness,
    check_gamma_self_dual,
    check_lu_symmetry_npm,
    gu_breaking_witness,
)


class ClaimError(ValueError):
    """Unknown claim id or parameters outside the claim's domain."""


# Trials per claim and profile; inequality sweeps scale with the profile, composite claims use
# the instance counts of the acceptance suite.
DEFAULTS: dict[str, dict[str, int]] = {
    "lemma-con1": {"quick": 1_000, "full": 100_000},
    "lemma-con2": {"quick": 1_000, "full": 100_000},
    "prop-construction1": {"quick": 1_000, "full": 100_000},
    "prop-construction2": {"quick": 10, "full": 100},
    "lemma-max-ent": {"quick": 200, "full": 10_000},
    "thm-dist": {"quick": 10, "full": 100},
    "prop-global2": {"quick": 5, "full": 50},
    "prop-gamma": {"quick": 100, "full": 1_000},
    "prop-lu": {"quick": 100, "full": 1_000},
    "prop-cap": {"quick": 1, "full": 1},
    "con-hie": {"quick": 10_000, "full": 10_000},
    "ineq-F1": {"quick": 1_000, "full": 10_000},
}
FULL_MEOP_BUDGET = 1024
BATCH = 10_000


def claim_rng(claim_id: str, seed: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(zlib.crc32(claim_id.encode()),))
    return np.random.Generator(np.random.PCG64(ss))


def _child_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(2**32))


def _random_basis_vectors(dims: Dims, n: int, rng) -> np.ndarray:
    """``n`` random, randomly ordered ME bases as an (n, D, D) stack of row vectors."""
    return family_vectors(FullMEOP(dims, n, _child_seed(rng)))


def _npm_coeffs(lam: np.ndarray, D: int) -> np.ndarray:
    c = np.full((lam.shape[0], D), 0.5)
    c[:, 0] = -lam
    c[:, 1] = 1.0 + lam
    return c


def _lambdas(r: float, n: int, rng) -> np.ndarray:
    """Half of the draws at the endpoint lam = r, the rest uniform on [0, r]."""
    lam = rng.uniform(0.0, r, n)
    lam[rng.uniform(size=n) < 0.5] = r
    return lam


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ClaimError(msg)


# --- runners ------------------------------------------------------------------------------
# Each runner gets (dims, params, rng) and returns (trials, max_violation, passed, notes).


def _lemma_con1(dims: Dims, p: dict, rng):
    r = p.get("r", con1_radius(dims))
    _require(0.0 <= r <= con1_radius(dims) + 1e-15, f"lemma-con1 needs 0 <= r <= (sqrt(D)-1)/2, got {r}")
    n = p["trials"]
    D = dims.D
    worst, done = np.inf, 0
    while done < n:
        m = min(BATCH, n - done)
        V = _random_basis_vectors(dims, m, rng)
        y = random_product_pures(dims, m, rng)
        # <y|N|y> = sum_k n_k |<psi_k|y>|^2 with N's spectral decomposition in the basis
        c = np.abs(np.einsum("bki,bi->bk", V.conj(), y)) ** 2
        vals = np.sum(_npm_coeffs(_lambdas(r, m, rng), D) * c, axis=1)
        worst = min(worst, float(vals.min()))
        done += m
    # targeted: locally minimize over product vectors for a handful of elements
    targeted = max(1, n // 1000)
    t_worst = np.inf
    for _ in range(targeted):
        basis = random_mebasis(dims, rng)
        val, _, _ = min_product_value(npm_element(r, basis), dims, restarts=4, iters=100,
                                      rng_seed=_child_seed(rng))
        t_worst = min(t_worst, val)
    worst_all = min(worst, t_worst)
    notes = [f"r={r:.10f}; random min {worst:.3e}; targeted min over {targeted} elements {t_worst:.3e}"]
    return n + targeted, worst_all, worst_all >= -p["tol"], notes


def _npm_pair_values(Vx, Vy, lx, ly, D):
    overlaps = np.abs(np.einsum("bki,bli->bkl", Vx.conj(), Vy)) ** 2
    cx, cy = _npm_coeffs(lx, D), _npm_coeffs(ly, D)
    return np.einsum("bk,bkl,bl->b", cx, overlaps, cy)


def _lemma_con2(dims: Dims, p: dict, rng):
    r = p.get("r", r0(dims))
    _require(0.0 <= r <= r0(dims) + 1e-15, f"lemma-con2 needs 0 <= r <= r_0, got {r}")
    n = p["trials"]
    D = dims.D
    floor = con2_floor(r, dims)
    target = max(0.0, floor)
    worst, done = np.inf, 0
    while done < n:
        m = min(BATCH, n - done)
        Vx = _random_basis_vectors(dims, m, rng)
        Vy = _random_basis_vectors(dims, m, rng)
        # a quarter of the pairs use the first-two-swapped basis, which attains the floor
        swap = rng.uniform(size=m) < 0.25
        Vy = np.array(Vy)
        Vy[swap] = Vx[swap][:, [1, 0] + list(range(2, D))]
        lx, ly = _lambdas(r, m, rng), _lambdas(r, m, rng)
        vals = _npm_pair_values(Vx, Vy, lx, ly, D)
        worst = min(worst, float((vals - target).min()))
        done += m
    notes = [f"r={r:.10f}; analytic floor -2(r+1/2)^2 + D/4 = {floor:.3e}",
             f"min Tr(xy) - max(0, floor) = {worst:.3e}"]
    return n, worst, worst >= -p["tol"], notes


def _prop_construction1(dims: Dims, p: dict, rng):
    """Pre-duality: Tr(xy) >= 0 over pairs from K_r^(0)* samples and NPM_r elements."""
    r = p.get("r", r0(dims))
    _require(0.0 <= r <= r0(dims) + 1e-15, f"prop-construction1 needs 0 <= r <= r_0, got {r}")
    n = p["trials"]
    D = dims.D
    bases = [random_mebasis(dims, rng) for _ in range(4)]
    bases += [b.permuted([1, 0] + list(range(2, D))) for b in bases]
    family = Finite(bases)
    pool = []
    for b in bases:
        pool.append(npm_element(r, b))
        pool.append(npm_element(rng.uniform(0.0, r), b))
    n_npm = len(pool)
    tried = 0
    while len(pool) < n_npm + 400 and tried < 20_000:
        tried += 1
        if tried % 4 == 0:
            # boundary states: isotropic mixture around a family projector
            e = bases[rng.integers(len(bases))][int(rng.integers(D))]
            x = isotropic_mixture(e, 1.0 / (2.0 * r + 1.0))
        else:
            t = rng.uniform()
            x = t * random_state(D, rng, rank=int(rng.integers(1, D + 1))) + (1 - t) * np.eye(D) / D
        if kr0_dual_membership(x, r, family).inside:
            pool.append(x)
    P = np.array(pool)
    flat = P.reshape(len(pool), -1)
    gram = np.real(flat.conj() @ flat.T)  # Tr(x y) for Hermitian x, y
    i = rng.integers(len(pool), size=n)
    j = rng.integers(len(pool), size=n)
    vals = gram[i, j]
    worst = float(vals.min())
    notes = [f"r={r:.10f}; pool: {n_npm} NPM elements + {len(pool) - n_npm} K_r^(0)* states "
             f"({tried} candidates); family of {len(bases)} bases",
             f"min Tr(xy) over {n} pairs = {worst:.3e}; over all pool pairs = {gram.min():.3e}"]
    return n, min(worst, float(gram.min())), min(worst, gram.min()) >= -p["tol"], notes


def _prop_construction2(dims: Dims, p: dict, rng):
    rs = p.get("rs", [0.02, 0.125, r0(dims)])
    if "r" in p:
        rs = [p["r"]]
    for r in rs:
        _require(0.0 < r <= r0(dims) + 1e-15, f"prop-construction2 needs 0 < r <= r_0, got {r}")
    n = p["trials"]
    family = FullMEOP(dims, FULL_MEOP_BUDGET, _child_seed(rng))
    worst, notes, ok = np.inf, [], True
    for r in rs:
        try:
            rep = d_bound_report(r, family, n, _child_seed(rng))
        except WitnessError as exc:
            return n * len(rs), -np.inf, False, [f"r={r}: {exc}"]
        closed = 4.0 * r / (2.0 * r + 1.0)
        dist_err = abs(rep.max_over_sigma_of_min_dist - closed)
        slack = min(rep.epsilon_r - rep.max_over_sigma_of_min_dist, TOL - dist_err)
        ok &= rep.passed and dist_err <= TOL
        worst = min(worst, slack)
        notes.append(f"r={r:.7f}: max dist {rep.max_over_sigma_of_min_dist:.10f} "
                     f"(4r/(2r+1)={closed:.10f}) <= eps_r={rep.epsilon_r:.10f}")
    return n * len(rs), worst, ok and worst >= 0.0, notes


def _lemma_max_ent(dims: Dims, p: dict, rng):
    """States with certified F_max <= 1/(2r+1) must lie in K_r^(0)*."""
    r = p.get("r", r0(dims))
    _require(0.0 < r <= r0(dims) + 1e-15, f"lemma-max-ent needs 0 < r <= r_0, got {r}")
    n = p["trials"]
    D = dims.D
    pth = 1.0 / (2.0 * r + 1.0)
    family = FullMEOP(dims, FULL_MEOP_BUDGET, _child_seed(rng))
    worst, fm_excess = np.inf, -np.inf
    heavy = max(1, n // 100)
    for k in range(n):
        if k % 10 == 0:
            # isotropic state on the boundary F_max = 1/(2r+1)
            u = haar_unitaries(dims.d_loc, 1, rng)[0]
            v = u.reshape(-1) / np.sqrt(dims.d_loc)
            sigma = np.outer(v, v.conj())
            rho = isotropic_mixture(sigma, pth)
        else:
            rho_p = random_state(D, rng, rank=int(rng.integers(1, D + 1)))
            # F_max(rho_p) <= lambda_max(rho_p): a certified upper bound
            lmax = float(np.linalg.eigvalsh(rho_p)[-1])
            t_max = 1.0 if lmax <= pth else (pth - 1.0 / D) / (lmax - 1.0 / D)
            t = t_max if rng.uniform() < 0.25 else t_max * rng.uniform()
            rho = t * rho_p + (1.0 - t) * np.eye(D) / D
        fam = family
        if k < heavy:
            val, s = f_max(rho, restarts=4, rng_seed=_child_seed(rng))
            fm_excess = max(fm_excess, val - pth)
            # add the basis whose first member is the best MES found
            w, vv = np.linalg.eigh(s)
            u = (vv[:, -1] * np.sqrt(dims.d_loc)).reshape(dims.d_loc, dims.d_loc)
            b = rotate_mebasis(weyl_bell_basis(dims), (u, np.eye(dims.d_loc)))
            fam = Finite([b, b.permuted([0] + list(range(2, D)) + [1])])
        v = kr0_dual_membership(rho, r, fam)
        worst = min(worst, v.bound if v.bound is not None else -np.inf)
    notes = [f"r={r:.10f}; 1/(2r+1)={pth:.10f}; min over states of Tr(rho N) and min eig = {worst:.3e}",
             f"heuristic F_max - 1/(2r+1) on {heavy} states: max {fm_excess:.3e}"]
    return n, worst, worst >= -p["tol"] and fm_excess <= p["tol"], notes


def _thm_dist(dims: Dims, p: dict, rng):
    r = p.get("r", r0(dims))
    _require(0.0 < r <= r0(dims) + 1e-15, f"thm-dist needs 0 < r <= r_0, got {r}")
    rep = verify_theorem_dist(r, dims, _child_seed(rng), trials=p["trials"])
    return rep.trials_run, rep.max_violation, rep.passed, rep.notes


def _prop_global2(dims: Dims, p: dict, rng):
    rs = p.get("rs", [0.05, 0.1, r0(dims)])
    if "r" in p:
        rs = [p["r"]]
    for r in rs:
        _require(0.0 < r <= r0(dims) + 1e-15, f"prop-global2 needs 0 < r <= r_0, got {r}")
    n = p["trials"]
    worst, ok = np.inf, True
    for r in rs:
        for _ in range(n):
            basis = random_mebasis(dims, rng)
            w = gu_breaking_witness(r, basis, _child_seed(rng))
            worst = min(worst, (-r + 1e-10) - w.violation)
            cc = w.cross_check
            gx = w.g.u.conj().T @ w.x @ w.g.u
            ok &= cc.outside and abs(witness_value(gx, cc.witness) - cc.violation) <= 1e-12
    notes = [f"r values {', '.join(f'{r:.7f}' for r in rs)}; {n} bases each",
             f"min of (-r + 1e-10) - violation = {worst:.3e}; block-positivity cross-check Outside: {ok}"]
    return n * len(rs), worst, ok and worst >= 0.0, notes


def _prop_gamma(dims: Dims, p: dict, rng):
    rep = check_gamma_self_dual(p["trials"], _child_seed(rng), dims)
    return rep.trials_run, rep.max_violation, rep.passed, rep.notes


def _prop_lu(dims: Dims, p: dict, rng):
    r = p.get("r", r0(dims))
    _require(0.0 <= r <= r0(dims) + 1e-15, f"prop-lu needs 0 <= r <= r_0, got {r}")
    rep = check_lu_symmetry_npm(r, p["trials"], _child_seed(rng), dims,
                                rotations=p.get("rotations", 100))
    return rep.trials_run, rep.max_violation, rep.passed, rep.notes


def _prop_cap(dims: Dims, p: dict, rng):
    states, meas = capacity_witness(dims)
    stats = np.array([[trace_inner(s, m) for m in meas.effects] for s in states])
    err = float(np.max(np.abs(stats - np.eye(dims.D))))
    comp = meas.completeness_error()
    product = all(np.sum(schmidt_coefficients(np.linalg.eigh(s)[1][:, -1], dims) > 1e-12) == 1
                  for s in states)
    ppt = [is_ppt_separable(s, dims).status.value for s in states]
    ok = err == 0.0 and comp == 0.0 and product and set(ppt) == {"inside"}
    notes = [f"{len(states)} product states, max |Tr(rho_i M_j) - delta_ij| = {err:.1e}, "
             f"completeness error {comp:.1e}", f"PPT verdicts: {sorted(set(ppt))}"]
    return len(states), -max(err, comp), ok, notes


def _con_hie(dims: Dims, p: dict, rng):
    r1 = p.get("r1", r0(dims))
    r2 = p.get("r2", r1 / 2.0)
    _require(0.0 <= r2 <= r1 <= r0(dims) + 1e-15, f"con-hie needs 0 <= r2 <= r1 <= r_0, got {r1}, {r2}")
    family = p0_family(weyl_bell_basis(dims))
    res = hierarchy_witness(r1, r2, family, _child_seed(rng), budget=p["trials"])
    if r1 == r2:
        return 0, 0.0, not res.found, res.notes
    if not res.found:
        return res.samples_used, -np.inf, False, res.notes
    exact = abs(witness_value(res.witness, res.verdict_r1.witness) - res.verdict_r1.violation) <= 1e-12
    ok = res.verdict_r1.outside and res.verdict_r2.inside and exact
    notes = res.notes + [f"r1={r1:.7f} verdict {res.verdict_r1.status.value} "
                         f"(violation {res.verdict_r1.violation:.3e}); r2={r2:.7f} verdict "
                         f"{res.verdict_r2.status.value}; found after {res.samples_used} samples"]
    return res.samples_used, min(res.verdict_r2.bound, 0.0) if ok else -np.inf, ok, notes


def _ineq_f1(dims: Dims, p: dict, rng):
    n = p["trials"]
    D = dims.D
    worst, done = np.inf, 0
    while done < n:
        m = min(BATCH, n - done)
        g = rng.standard_normal((m, D, D)) + 1j * rng.standard_normal((m, D, D))
        # every fourth state pure, where the bound is tight
        g[::4, :, 1:] = 0.0
        rho = g @ np.conj(np.swapaxes(g, 1, 2))
        rho /= np.trace(rho, axis1=1, axis2=2).real[:, None, None]
        v = rng.standard_normal((m, D)) + 1j * rng.standard_normal((m, D))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        sigma = v[:, :, None] * v[:, None, :].conj()
        fid = np.real(np.einsum("bi,bij,bj->b", v.conj(), rho, v))
        tn = np.abs(np.linalg.eigvalsh(rho - sigma)).sum(axis=1)
        worst = min(worst, float((2.0 * np.sqrt(np.clip(1.0 - fid, 0.0, None)) - tn).min()))
        done += m
    return n, worst, worst >= -p["tol"], [f"min of 2 sqrt(1-F) - ||rho - sigma||_1 = {worst:.3e}"]


Runner = Callable[[Dims, dict, np.random.Generator], tuple]

CLAIMS: dict[str, Runner] = {
    "lemma-con1": _lemma_con1,
    "lemma-con2": _lemma_con2,
    "prop-construction1": _prop_construction1,
    "prop-construction2": _prop_construction2,
    "lemma-max-ent": _lemma_max_ent,
    "thm-dist": _thm_dist,
    "prop-global2": _prop_global2,
    "prop-gamma": _prop_gamma,
    "prop-lu": _prop_lu,
    "prop-cap": _prop_cap,
    "con-hie": _con_hie,
    "ineq-F1": _ineq_f1,
}


def run_claim(claim_id: str, dims: Dims, params: dict[str, Any] | None = None, seed: int = 0,
              profile: str = "quick") -> ClaimReport:
    """Run one registered claim; ``params['trials']`` defaults to the profile's table entry.

    ``params['tol']`` (default 1e-9) is the slack allowed on the inequality claims; composite
    claims use the fixed tolerances of their sub-checks.
    """
    if claim_id not in CLAIMS:
        raise ClaimError(f"unknown claim {claim_id!r}; registered claims: {', '.join(CLAIMS)}")
    if profile not in ("quick", "full"):
        raise ClaimError(f"unknown profile {profile!r}")
    params = dict(params or {})
    params.setdefault("trials", DEFAULTS[claim_id][profile])
    for key in ("r", "r1", "r2"):
        if key in params:
            v = params[key]
            _require(isinstance(v, (int, float)) and not isinstance(v, bool) and np.isfinite(v),
                     f"{key} must be a finite real, got {v!r}")
    tol = params.get("tol", TOL)
    _require(isinstance(tol, float) and 0.0 < tol < 1.0, f"tol must lie in (0, 1), got {tol!r}")
    _require(isinstance(params["trials"], (int, np.integer)) and params["trials"] >= 1,
             f"trials must be a positive integer, got {params['trials']!r}")
    start = time.perf_counter()
    rng = claim_rng(claim_id, seed)
    trials, worst, passed, notes = CLAIMS[claim_id](dims, {"tol": tol, **params}, rng)
    return ClaimReport(claim_id, dims, params, seed, int(trials), float(worst), bool(passed),
                       list(notes), time.perf_counter() - start)


def run_all(dims: Dims, seed: int = 0, profile: str = "quick", workers: int = 1,
            params: dict[str, Any] | None = None) -> list[ClaimReport]:
    """Every registered claim at default parameters, in registry order.

    ``params`` (e.g. ``trials`` or ``tol``) is applied to every claim.
    """
    ids = list(CLAIMS)
    job = lambda c: run_claim(c, dims, params, seed, profile)  # noqa: E731
    if workers <= 1:
        return [job(c) for c in ids]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(job, ids))
