"""Flat ``key = value`` experiment configuration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path

SCHEMES = ("EIRK1", "EIRK22", "FDBE", "FDCN")


class ConfigError(ValueError):
    pass


def _ints(v: str) -> list[int]:
    return [int(x) for x in _split(v)]


def _split(v: str) -> list[str]:
    return [x.strip() for x in v.split(",") if x.strip()]


def _coarse(v: str) -> list[int]:
    """Coarse counts given as element counts (8) or mesh sizes (1/8)."""
    out = []
    for x in _split(v):
        if "/" in x:
            fr = Fraction(x)
            if fr.numerator != 1:
                raise ConfigError(f"coarse size {x} is not of the form 1/N")
            out.append(fr.denominator)
        else:
            out.append(int(x))
    return out


def _layers(v: str):
    return "auto" if v.strip() == "auto" else _ints(v)


def _bool(v: str) -> bool:
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


@dataclass
class ExperimentConfig:
    example: int = 1
    n_fine: int = 128
    coarse: list[int] = field(default_factory=lambda: [8])
    layers: object = "auto"  # "auto" or list[int]
    layer_constant: float = 1.0 / math.log(10.0)
    layer_rounding: str = "ceil"
    basis_per_element: int = 4
    scheme: list[str] = field(default_factory=lambda: ["EIRK1"])
    nt: list[int] = field(default_factory=lambda: [200])
    nt_ref: int = 1000
    reference: str = "fine"  # or "<scheme>:<Nt>" for a same-space self-reference
    contrast: float | None = None
    seed: int = 0
    epsilon: float | None = None
    final_time: float | None = None
    kappa_file: str | None = None
    v_kappa: str = "kappa1"
    nonlinear: str = "picard"
    picard_tol: float = 1e-10
    picard_max_iter: int = 50
    output: str = "out"
    dump_fields: bool = False
    cache_dir: str | None = None

    def validate(self) -> "ExperimentConfig":
        if self.example not in (1, 2, 3, 4, 5):
            raise ConfigError(f"example must be 1..5, got {self.example}")
        if self.n_fine < 2:
            raise ConfigError(f"n_fine must be >= 2, got {self.n_fine}")
        if not self.coarse:
            raise ConfigError("coarse list is empty")
        for N in self.coarse:
            if N < 2 or self.n_fine % N:
                raise ConfigError(f"n_fine={self.n_fine} is not divisible by coarse={N} (or coarse < 2)")
        if self.layers != "auto":
            if not self.layers or any(m < 1 for m in self.layers):
                raise ConfigError(f"layers must be 'auto' or positive integers, got {self.layers}")
        if self.layer_rounding not in ("ceil", "floor"):
            raise ConfigError(f"layer_rounding must be ceil or floor, got {self.layer_rounding!r}")
        if self.basis_per_element < 1:
            raise ConfigError("basis_per_element must be >= 1")
        bad = [s for s in self.scheme if s not in SCHEMES]
        if bad or not self.scheme:
            raise ConfigError(f"unknown scheme(s) {bad}; choose from {SCHEMES}")
        if not self.nt or any(n < 1 for n in self.nt):
            raise ConfigError(f"nt entries must be positive, got {self.nt}")
        if self.nt_ref < 1:
            raise ConfigError("nt_ref must be >= 1")
        if self.reference != "fine":
            try:
                s, n = self.reference.split(":")
                if s not in ("EIRK1", "EIRK22") or int(n) < 1:
                    raise ValueError
            except ValueError:
                raise ConfigError(f"reference must be 'fine' or 'EIRK1:<Nt>'/'EIRK22:<Nt>', got {self.reference!r}") from None
        if self.contrast is not None and self.contrast < 1:
            raise ConfigError(f"contrast must be >= 1, got {self.contrast}")
        if self.nonlinear not in ("picard", "lagged"):
            raise ConfigError(f"nonlinear must be picard or lagged, got {self.nonlinear!r}")
        if self.v_kappa not in ("kappa1", "kappa4"):
            raise ConfigError(f"v_kappa must be kappa1 or kappa4, got {self.v_kappa!r}")
        return self


_PARSERS = {
    "example": int, "n_fine": int, "coarse": _coarse, "layers": _layers, "layer_constant": float,
    "layer_rounding": str.strip,
    "basis_per_element": int, "scheme": lambda v: [s.upper() for s in _split(v)], "nt": _ints,
    "nt_ref": int, "reference": str.strip, "contrast": float, "seed": int, "epsilon": float,
    "final_time": float, "kappa_file": str.strip, "v_kappa": str.strip, "nonlinear": str.strip,
    "picard_tol": float, "picard_max_iter": int, "output": str.strip, "dump_fields": _bool,
    "cache_dir": str.strip,
}
assert set(_PARSERS) == {f.name for f in fields(ExperimentConfig)}


def parse_config(text: str) -> ExperimentConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _PARSERS[key](val)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    return ExperimentConfig(**values).validate()


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
