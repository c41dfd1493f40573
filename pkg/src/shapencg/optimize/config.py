"""Method and parameter records for the descent driver."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

NCG_VARIANTS = ("FR", "PR", "HS", "DY", "HZ")


@dataclass(frozen=True)
class Method:
    """``GD``, ``LBFGS`` with memory ``m`` or ``NCG`` with a beta variant.

    :meth:`parse` accepts ``gd``, ``lbfgs3`` / ``lbfgs:3`` / ``l-bfgs 3`` and
    ``ncg-dy`` / ``cg_dy`` / ``dy`` (case-insensitive).
    """

    kind: str
    memory: int = 0
    variant: str | None = None

    def __post_init__(self):
        if self.kind not in ("GD", "LBFGS", "NCG"):
            raise ValueError(f"unknown method kind {self.kind!r}")
        if self.kind == "LBFGS" and self.memory < 1:
            raise ValueError("L-BFGS needs memory m >= 1")
        if self.kind == "NCG" and self.variant not in NCG_VARIANTS:
            raise ValueError(f"NCG variant must be one of {NCG_VARIANTS}")

    @classmethod
    def parse(cls, text: str) -> "Method":
        s = text.strip().upper().replace("_", "-").replace(" ", "-")
        if s in ("GD", "GRADIENT-DESCENT"):
            return cls("GD")
        m = re.fullmatch(r"L-?BFGS[-:(]?(\d+)\)?", s)
        if m:
            return cls("LBFGS", memory=int(m.group(1)))
        m = re.fullmatch(r"(?:N?CG-?)?(FR|PR|HS|DY|HZ)", s)
        if m:
            return cls("NCG", variant=m.group(1))
        raise ValueError(f"cannot parse method {text!r}; use gd, lbfgs<m> or ncg-<FR|PR|HS|DY|HZ>")

    @property
    def label(self) -> str:
        if self.kind == "GD":
            return "GD"
        if self.kind == "LBFGS":
            return f"LBFGS{self.memory}"
        return f"NCG-{self.variant}"


@dataclass(frozen=True)
class LineSearchParams:
    t0: float = 1.0
    sigma: float = 1e-4
    omega: float = 0.5
    t_min: float | None = None      # defaults to 1e-12 * t0
    area_floor: float = 0.1         # reject trial meshes whose element areas shrink below this ratio

    def __post_init__(self):
        if not self.t0 > 0:
            raise ValueError("t0 must be positive")
        if not 0 < self.sigma < 1:
            raise ValueError("sigma must lie in (0, 1)")
        if not 0 < self.omega < 1:
            raise ValueError("omega must lie in (0, 1)")
        if self.t_min is not None and not 0 < self.t_min < self.t0:
            raise ValueError("need 0 < t_min < t0")

    @property
    def min_step(self) -> float:
        return 1e-12 * self.t0 if self.t_min is None else self.t_min


@dataclass(frozen=True)
class RestartPolicy:
    """NCG restarts every ``k_cg`` iterations or once ``a(G_k, G_{k-1}) / |G_k|^2 >= eps_cg``."""

    k_cg: float = math.inf
    eps_cg: float = math.inf

    def __post_init__(self):
        if math.isfinite(self.k_cg) and (self.k_cg < 1 or self.k_cg != int(self.k_cg)):
            raise ValueError("k_cg must be a positive integer or infinity")
        if math.isfinite(self.eps_cg) and self.eps_cg <= 0:
            raise ValueError("eps_cg must be positive or infinity")

    def periodic(self, k: int) -> bool:
        return math.isfinite(self.k_cg) and k % int(self.k_cg) == 0

    def orthogonality_lost(self, ratio: float) -> bool:
        return math.isfinite(self.eps_cg) and ratio >= self.eps_cg
