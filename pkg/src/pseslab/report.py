"""Claim reports and their JSON / CSV / text encodings."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Any, Iterable

from . import __version__
from .linalg import Dims


@dataclass
class ClaimReport:
    """Result of checking one claim on seeded inputs.

    ``max_violation`` is the most negative slack seen over all checked inequalities (so the
    claim holds iff it is >= -tol); composite claims take the minimum over their sub-checks.
    """

    claim_id: str
    dims: Dims
    params: dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    trials_run: int = 0
    max_violation: float = 0.0
    passed: bool = False
    notes: list[str] = field(default_factory=list)
    wall_time: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "claim_id": self.claim_id,
            "dims": {"d_loc": self.dims.d_loc, "D": self.dims.D},
            "params": {k: _plain(v) for k, v in sorted(self.params.items())},
            "seed": self.seed,
            "trials": self.trials_run,
            "max_violation": float(self.max_violation),
            "pass": bool(self.passed),
            "notes": list(self.notes),
            "wall_time_s": float(self.wall_time),
            "tool_version": __version__,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ClaimReport":
        return cls(
            claim_id=d["claim_id"],
            dims=Dims(d["dims"]["d_loc"]),
            params=dict(d["params"]),
            seed=d["seed"],
            trials_run=d["trials"],
            max_violation=d["max_violation"],
            passed=d["pass"],
            notes=list(d["notes"]),
            wall_time=d["wall_time_s"],
        )


def _plain(v):
    if hasattr(v, "item"):
        return v.item()
    return v


FIELDS = ["claim_id", "d_loc", "D", "params", "seed", "trials", "max_violation", "pass", "notes",
          "wall_time_s", "tool_version"]


def to_json(reports: ClaimReport | list[ClaimReport]) -> str:
    if isinstance(reports, ClaimReport):
        payload: Any = reports.to_dict()
    else:
        payload = [r.to_dict() for r in reports]
    return json.dumps(payload, indent=2, ensure_ascii=False)


def from_json(text: str) -> ClaimReport | list[ClaimReport]:
    data = json.loads(text)
    if isinstance(data, list):
        return [ClaimReport.from_dict(d) for d in data]
    return ClaimReport.from_dict(data)


def to_csv(reports: Iterable[ClaimReport]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=FIELDS, lineterminator="\r\n")
    w.writeheader()
    for r in reports:
        d = r.to_dict()
        dims = d.pop("dims")
        d["d_loc"], d["D"] = dims["d_loc"], dims["D"]
        d["params"] = json.dumps(d["params"])
        d["notes"] = " | ".join(d["notes"])
        d["pass"] = "true" if d["pass"] else "false"
        w.writerow(d)
    return buf.getvalue()


def to_text(reports: Iterable[ClaimReport]) -> str:
    lines = []
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"[{status}] {r.claim_id:<18} d_loc={r.dims.d_loc} seed={r.seed} "
                     f"trials={r.trials_run} max_violation={r.max_violation:.3e} "
                     f"({r.wall_time:.2f}s)")
        for n in r.notes:
            lines.append(f"    - {n}")
    return "\n".join(lines) + "\n"
