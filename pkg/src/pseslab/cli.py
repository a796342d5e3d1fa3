"""Command-line front end: ``pseslab verify | demo-discrimination | constants``.

Exit codes: 0 when every check passes, 1 on a mathematical failure, 2 on a usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .cones import con1_radius, con2_floor, r0
from .discrimination import (
    build_instance,
    overlap_eps_half,
    overlap_lower_bound,
    overlap_eps_true,
    overlap_half,
)
from .linalg import TOL, Dims, random_mebasis
from .metrics import epsilon_of_r, r_of_epsilon
from .report import to_csv, to_json, to_text
from .verify import CLAIMS, ClaimError, run_all, run_claim

SEED_ENV = "PSESLAB_SEED"


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    dims: Dims
    r: Optional[float] = None
    epsilon: Optional[float] = None
    trials: Optional[int] = None
    seed: int = 0
    tol: float = TOL
    profile: str = "quick"
    out_path: Optional[str] = None
    format: str = "text"

    def __post_init__(self):
        if self.r is not None and self.epsilon is not None:
            raise UsageError("give at most one of --r and --epsilon")
        if self.epsilon is not None:
            if not 0.0 < self.epsilon < 2.0:
                raise UsageError(f"--epsilon must lie in (0, 2), got {self.epsilon}")
            self.r = r_of_epsilon(self.epsilon)
        if self.trials is not None and self.trials < 1:
            raise UsageError(f"--trials must be >= 1, got {self.trials}")
        if not 0.0 < self.tol < 1.0:
            raise UsageError(f"--tol must lie in (0, 1), got {self.tol}")


def _resolve_seed(flag: Optional[int]) -> int:
    if flag is not None:
        return flag
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return 0


def _config(args) -> RunConfig:
    try:
        dims = Dims(args.dloc)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return RunConfig(dims=dims, r=getattr(args, "r", None), epsilon=getattr(args, "epsilon", None),
                     trials=getattr(args, "trials", None), seed=_resolve_seed(getattr(args, "seed", None)),
                     tol=getattr(args, "tol", TOL), profile=getattr(args, "profile", "quick"),
                     out_path=getattr(args, "out", None), format=getattr(args, "format", "text"))


def _emit(text: str, out_path: Optional[str]) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def cmd_verify(args) -> int:
    cfg = _config(args)
    if bool(args.claim) == bool(args.all):
        raise UsageError("give exactly one of --claim ID or --all")
    params: dict = {"tol": cfg.tol}
    if cfg.trials is not None:
        params["trials"] = cfg.trials
    try:
        if args.all:
            if cfg.r is not None:
                raise UsageError("--r/--epsilon apply to a single --claim only")
            reports = run_all(cfg.dims, cfg.seed, cfg.profile, workers=args.workers, params=params)
        else:
            if cfg.r is not None:
                params["r1" if args.claim == "con-hie" else "r"] = cfg.r
            reports = [run_claim(args.claim, cfg.dims, params, cfg.seed, cfg.profile)]
    except ClaimError as exc:
        raise UsageError(str(exc)) from None
    if cfg.format == "json":
        text = to_json(reports if args.all else reports[0])
    elif cfg.format == "csv":
        text = to_csv(reports)
    else:
        text = to_text(reports)
    _emit(text, cfg.out_path)
    return 0 if all(r.passed for r in reports) else 1


def cmd_demo_discrimination(args) -> int:
    cfg = _config(args)
    if cfg.r is None:
        raise UsageError("demo-discrimination needs --r or --epsilon")
    if not 0.0 < cfg.r <= r0(cfg.dims) + 1e-15:
        raise UsageError(f"r must lie in (0, r_0 = {r0(cfg.dims):.7f}] for d_loc={cfg.dims.d_loc}, got {cfg.r}")
    r = cfg.r
    basis = random_mebasis(cfg.dims, cfg.seed, shuffle=False)
    inst = build_instance(r, basis)
    eps = epsilon_of_r(r)
    lines = [f"pseslab {__version__}  d_loc={cfg.dims.d_loc} D={cfg.dims.D} seed={cfg.seed}",
             f"r = {r:.10g}   eps = 2 sqrt(2r/(2r+1)) = {eps:.10g}", ""]
    for i, (m, v) in enumerate(zip(inst.measurement.effects, inst.measurement.verdicts), 1):
        spec = np.sort(np.linalg.eigvalsh(m))[::-1]
        lines.append(f"M_{i} spectrum: " + " ".join(f"{x:+.7f}" for x in spec))
        lines.append(f"M_{i} verdict vs NPM_r dual: {v.status.value}"
                     + (f" (bound {v.bound:.3e})" if v.bound is not None else ""))
    lines.append(f"M_1 + M_2 = I up to {inst.measurement.completeness_error():.1e}")
    lines += ["", "Tr(rho_i M_j):"]
    stats = inst.statistics()
    lines.append("          M_1          M_2")
    for i in range(2):
        lines.append(f"rho_{i + 1}  " + "  ".join(f"{x:+.3e}" for x in stats[i]))
    lines += ["",
              f"overlap Tr(rho_1 rho_2) = {inst.overlap:.7f}",
              f"  = eps^2(8-eps^2)/16 = {overlap_eps_true(eps):.7f}",
              f"half-overlap form 2r(r+1)/(2r+1)^2 = eps^2(8-eps^2)/32 = {overlap_eps_half(eps):.7f}"
              f" (closed form {overlap_half(r):.7f})",
              f"lower bound eps^2(eps^2+8)/32 = {overlap_lower_bound(eps):.7f}: "
              + ("satisfied" if inst.overlap >= overlap_lower_bound(eps) else "NOT satisfied")]
    ok = (np.max(np.abs(stats - np.eye(2))) <= 1e-10 and inst.overlap > 0
          and all(v.inside for v in inst.measurement.verdicts))
    lines.append("perfect discrimination: " + ("yes" if ok else "NO"))
    print("\n".join(lines))
    if cfg.out_path:
        np.savez(cfg.out_path, M1=inst.measurement.effects[0], M2=inst.measurement.effects[1],
                 rho1=inst.rho1, rho2=inst.rho2, basis=basis.vectors, r=r, seed=cfg.seed)
    return 0 if ok else 1


def cmd_constants(args) -> int:
    cfg = _config(args)
    dims = cfg.dims
    rr = r0(dims)
    print(f"d_loc = {dims.d_loc}, D = {dims.D}")
    print(f"r_0 = (sqrt(2D) - 2)/4 = {rr:.7f}")
    print(f"eps_(r_0) = 2 sqrt(2 r_0/(2 r_0 + 1)) = {epsilon_of_r(rr):.7f}")
    print(f"lemma-con1 radius (sqrt(D) - 1)/2 = {con1_radius(dims):.7f}")
    print(f"lemma-con2 floor -2(r + 1/2)^2 + D/4 = {dims.D / 4 - 0.5:g} - 2r - 2r^2; at r_0: {con2_floor(rr, dims):.3e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pseslab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"pseslab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--dloc", type=int, default=2, help="local dimension d_loc (default 2)")

    def seeded(sp):
        sp.add_argument("--seed", type=int, default=None,
                        help=f"master seed (flag > ${SEED_ENV} > 0)")

    def radius(sp):
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--r", type=float, default=None, help="deformation parameter r")
        g.add_argument("--epsilon", type=float, default=None, help="target eps; r is derived from it")

    v = sub.add_parser("verify", help="run one claim or all of them")
    common(v)
    seeded(v)
    radius(v)
    v.add_argument("--claim", metavar="ID", help="claim id: " + ", ".join(CLAIMS))
    v.add_argument("--all", action="store_true", help="run every registered claim")
    v.add_argument("--trials", type=int, default=None)
    v.add_argument("--tol", type=float, default=TOL)
    v.add_argument("--profile", choices=["quick", "full"], default="quick")
    v.add_argument("--format", choices=["json", "csv", "text"], default="text")
    v.add_argument("--out", default=None, help="write the report here instead of stdout")
    v.add_argument("--workers", type=int, default=1, help="claims run concurrently (default 1)")
    v.set_defaults(func=cmd_verify)

    d = sub.add_parser("demo-discrimination", help="build and print one discrimination instance")
    common(d)
    seeded(d)
    radius(d)
    d.add_argument("--out", default=None, help="save the matrices as .npz")
    d.set_defaults(func=cmd_demo_discrimination)

    c = sub.add_parser("constants", help="print the derived constants for d_loc")
    common(c)
    c.set_defaults(func=cmd_constants)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"pseslab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
