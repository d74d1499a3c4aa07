"""Relative error norms, convergence rates and CSV result tables."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

TABLE_HEADER = ["scheme", "H", "m", "Nt", "basis", "eps_a", "eps_0", "eps_inf", "CR_a", "CR_0"]
SCHEME_ORDER = {"EIRK1": 0, "EIRK22": 1, "FDBE": 2, "FDCN": 3}


class UndefinedRatioError(ZeroDivisionError):
    pass


def error_norms(u_ref: np.ndarray, u_test: np.ndarray, M, A) -> tuple[float, float, float]:
    """Relative (L2, energy, nodal max) errors of ``u_test`` against ``u_ref``."""
    e = np.asarray(u_test) - np.asarray(u_ref)
    out = []
    for name, norm in (("L2", lambda v: v @ (M @ v)), ("energy", lambda v: v @ (A @ v))):
        den = norm(u_ref)
        if not den > 0:
            raise UndefinedRatioError(f"reference has zero {name} norm")
        out.append(math.sqrt(max(norm(e), 0.0) / den))
    den = np.max(np.abs(u_ref))
    if not den > 0:
        raise UndefinedRatioError("reference has zero max norm")
    eps0, epsa = out
    return eps0, epsa, float(np.max(np.abs(e)) / den)


def convergence_rate(errors: Sequence[float]) -> list[float]:
    """``|ln e_i - ln e_{i-1}| / ln 2`` for consecutive entries."""
    errors = list(errors)
    if len(errors) < 2:
        raise ValueError("need at least two errors")
    if any(not e > 0 for e in errors):
        raise ValueError(f"errors must be positive: {errors}")
    return [abs(math.log(b) - math.log(a)) / math.log(2.0) for a, b in zip(errors, errors[1:])]


@dataclass
class ErrorReport:
    scheme: str
    H: float
    m: int
    Nt: int
    basis: int
    eps_a: float = math.nan
    eps_0: float = math.nan
    eps_inf: float = math.nan
    CR_a: float | None = None
    CR_0: float | None = None
    status: str = "ok"
    species: str = ""

    @property
    def label(self) -> str:
        return f"{self.scheme}[{self.species}]" if self.species else self.scheme

    def sort_key(self):
        return (SCHEME_ORDER.get(self.scheme, 99), self.scheme, self.species, -self.H, self.m, self.Nt, self.basis)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "nan" if math.isnan(x) else f"{x:.6e}"
    return str(x)


def _fmt_H(H: float) -> str:
    inv = 1.0 / H
    return f"1/{round(inv)}" if abs(inv - round(inv)) < 1e-9 else repr(H)


def emit_table(rows: Sequence[ErrorReport], path: str | Path, comment: str | None = None) -> None:
    """Write rows sorted by scheme, descending H, then m, Nt, basis; failed rows show FAILED."""
    rows = sorted(rows, key=ErrorReport.sort_key)
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TABLE_HEADER)
        for r in rows:
            vals = [r.eps_a, r.eps_0, r.eps_inf, r.CR_a, r.CR_0]
            if r.status != "ok":
                vals = ["FAILED"] * 3 + ["", ""]
            w.writerow([r.label, _fmt_H(r.H), r.m, r.Nt, r.basis] + [_fmt(v) for v in vals])


def read_table(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def attach_rates(rows: list[ErrorReport], along: str) -> None:
    """Fill CR_a/CR_0 between consecutive rows that differ only in ``along`` ("Nt" or "H")."""
    groups: dict = {}
    for r in rows:
        if r.status != "ok":
            continue
        key = (r.scheme, r.species, r.basis) + ((r.H, r.m) if along == "Nt" else (r.Nt,))
        groups.setdefault(key, []).append(r)
    for grp in groups.values():
        grp.sort(key=(lambda r: r.Nt) if along == "Nt" else (lambda r: -r.H))
        for prev, cur in zip(grp, grp[1:]):
            if prev.eps_a > 0 and cur.eps_a > 0:
                cur.CR_a = convergence_rate([prev.eps_a, cur.eps_a])[0]
            if prev.eps_0 > 0 and cur.eps_0 > 0:
                cur.CR_0 = convergence_rate([prev.eps_0, cur.eps_0])[0]
