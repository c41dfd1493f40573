"""Search directions.  Every scalar product is ``a_Omega`` on the current mesh.

Stored fields from earlier iterations are carried over by the identity
transport, i.e. their nodal arrays are reused as they are.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .config import RestartPolicy

GUARD = 1e-30


class _Identity:
    """Euclidean stand-in for an inner-product operator (used in dense oracles)."""

    def inner(self, v, w) -> float:
        return float(np.sum(np.asarray(v, dtype=float) * np.asarray(w, dtype=float)))


EUCLIDEAN = _Identity()


def direction_gd(g: np.ndarray) -> np.ndarray:
    return -np.asarray(g, dtype=float)


class LbfgsMemory:
    """At most ``m`` pairs ``(s, y)`` with ``rho = 1 / a(s, y)`` fixed when stored."""

    def __init__(self, m: int):
        if m < 1:
            raise ValueError("memory must be at least 1")
        self.m = m
        self.pairs: deque = deque(maxlen=m)
        self.resets = 0

    def __len__(self) -> int:
        return len(self.pairs)

    def clear(self) -> None:
        self.pairs.clear()

    def push(self, s: np.ndarray, y: np.ndarray, ip) -> bool:
        """Store the pair if ``a(s, y) > 0``; otherwise empty the memory."""
        sy = ip.inner(s, y)
        if not sy > 0:
            self.clear()
            self.resets += 1
            return False
        self.pairs.append((np.array(s, dtype=float), np.array(y, dtype=float), 1.0 / sy))
        return True


def direction_lbfgs(g: np.ndarray, memory: LbfgsMemory, ip) -> np.ndarray:
    """Two-loop recursion; ``-g`` for an empty memory."""
    q = np.array(g, dtype=float)
    if not memory.pairs:
        return -q
    alphas = []
    for s, y, rho in reversed(memory.pairs):
        a = rho * ip.inner(s, q)
        alphas.append(a)
        q = q - a * y
    s, y, _ = memory.pairs[-1]
    yy = ip.inner(y, y)
    r = (ip.inner(s, y) / yy) * q if yy > 0 else q
    for (s, y, rho), a in zip(memory.pairs, reversed(alphas)):
        b = rho * ip.inner(y, r)
        r = r + (a - b) * s
    return -r


@dataclass
class BetaResult:
    beta: float
    guarded: bool = False


def _ratio(num: float, den: float, scale: float) -> BetaResult:
    if not np.isfinite(den) or abs(den) <= GUARD * scale:
        return BetaResult(0.0, True)
    return BetaResult(num / den)


def ncg_beta(variant: str, g: np.ndarray, g_prev: np.ndarray, d_prev: np.ndarray, ip) -> BetaResult:
    """``beta_k`` for one of FR, PR, HS, DY, HZ with ``Y = g - g_prev``.

    Denominators at or below ``1e-30`` times the product of the norms they
    are built from count as degenerate and give ``beta = 0``.
    """
    y = g - g_prev
    gg = ip.inner(g, g)
    pp = ip.inner(g_prev, g_prev)
    if variant in ("FR", "PR"):
        num = gg if variant == "FR" else ip.inner(g, y)
        return _ratio(num, pp, max(pp, gg))
    dy = ip.inner(d_prev, y)
    scale = np.sqrt(max(ip.inner(d_prev, d_prev), 0.0) * max(ip.inner(y, y), 0.0))
    if variant == "HS":
        return _ratio(ip.inner(g, y), dy, scale)
    if variant == "DY":
        return _ratio(gg, dy, scale)
    if variant == "HZ":
        if not np.isfinite(dy) or abs(dy) <= GUARD * scale:
            return BetaResult(0.0, True)
        z = y - 2.0 * d_prev * (ip.inner(y, y) / dy)
        return BetaResult(ip.inner(z, g) / dy)
    raise ValueError(f"unknown NCG variant {variant!r}")


@dataclass
class NcgStep:
    direction: np.ndarray
    beta: float
    restarted: bool
    guarded: bool


def direction_ncg(g: np.ndarray, prev, variant: str, ip, rp: RestartPolicy, k: int) -> NcgStep:
    """``D = -G + beta D_prev``; ``prev`` is ``(d_prev, g_prev)`` or ``None`` at the start."""
    g = np.asarray(g, dtype=float)
    if prev is None or k == 0:
        return NcgStep(-g, 0.0, True, False)
    d_prev, g_prev = prev
    if rp.periodic(k):
        return NcgStep(-g, 0.0, True, False)
    if np.isfinite(rp.eps_cg):
        gg = ip.inner(g, g)
        ratio = ip.inner(g, g_prev) / gg if gg > 0 else np.inf
        if rp.orthogonality_lost(ratio):
            return NcgStep(-g, 0.0, True, False)
    res = ncg_beta(variant, g, g_prev, d_prev, ip)
    return NcgStep(-g + res.beta * d_prev, res.beta, False, res.guarded)
