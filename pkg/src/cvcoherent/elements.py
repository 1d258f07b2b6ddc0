"""Optical elements.

Each element comes in two forms: a rewrite of quadrature expressions for
the symbolic engine, and a matrix for the covariance oracle. Two-mode
matrices act on ``(x_a, p_a, x_b, p_b)``.

The dataclasses at the bottom are the circuit vocabulary shared by both
engines (see :mod:`cvcoherent.circuit`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .fma_qnd import FmaParams
from .gaussian_oracle import beamsplitter_matrix
from .quad_algebra import AXES, P, X, QuadExpr, SourceKind, linear_combine

Quad4 = tuple[QuadExpr, QuadExpr, QuadExpr, QuadExpr]


def _check_distinct(xa, pa, xb, pb):
    if xa == xb and pa == pb:
        raise ValueError("two-mode element applied to the same mode twice")


def ideal_qnd(xa, pa, xb, pb, g: float = 1.0, axis: str = X) -> Quad4:
    """Quantum nondemolition coupling of control ``a`` into target ``b``.

    ``axis='x'`` copies position::

        x_a -> x_a,  p_a -> p_a - g p_b,  x_b -> x_b + g x_a,  p_b -> p_b

    ``axis='p'`` is the conjugate map: ``p_b -> p_b + g p_a`` with back-action
    ``x_a -> x_a - g x_b``.
    """
    _check_distinct(xa, pa, xb, pb)
    if not math.isfinite(g):
        raise ValueError("QND gain must be finite")
    if axis == X:
        return xa, linear_combine([pa, pb], [1, -g]), linear_combine([xb, xa], [1, g]), pb
    if axis == P:
        return linear_combine([xa, xb], [1, -g]), pa, xb, linear_combine([pb, pa], [1, g])
    raise ValueError(f"axis must be 'x' or 'p', got {axis!r}")


def beamsplitter(xa, pa, xb, pb, t: float) -> Quad4:
    """``a' = sqrt(t) a + sqrt(1-t) b``, ``b' = -sqrt(1-t) a + sqrt(t) b``."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"transmittivity must lie in [0, 1], got {t}")
    _check_distinct(xa, pa, xb, pb)
    c, s = math.sqrt(t), math.sqrt(1.0 - t)
    return (
        linear_combine([xa, xb], [c, s]),
        linear_combine([pa, pb], [c, s]),
        linear_combine([xa, xb], [-s, c]),
        linear_combine([pa, pb], [-s, c]),
    )


def _cos_sin(theta: float) -> tuple[float, float]:
    # exact values at multiples of pi/2 so that pi shifts stay coefficient-exact
    quarter = theta / (math.pi / 2)
    if abs(quarter - round(quarter)) < 1e-15:
        return [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)][round(quarter) % 4]
    return math.cos(theta), math.sin(theta)


def phase_shift(x, p, theta: float) -> tuple[QuadExpr, QuadExpr]:
    """Rotate by ``theta``: ``x -> x cos - p sin``, ``p -> x sin + p cos``."""
    c, s = _cos_sin(theta)
    return linear_combine([x, p], [c, -s]), linear_combine([x, p], [s, c])


def squeezer(x, p, r: float, axis: str = X) -> tuple[QuadExpr, QuadExpr]:
    if r < 0:
        raise ValueError("squeezing strength must be >= 0")
    k = math.exp(-r) if axis == X else math.exp(r)
    return x * k, p * (1.0 / k)


def ideal_qnd_matrix(g: float = 1.0, axis: str = X) -> np.ndarray:
    if axis == X:
        return np.array([[1, 0, 0, 0], [0, 1, 0, -g], [g, 0, 1, 0], [0, 0, 0, 1]], float)
    if axis == P:
        return np.array([[1, 0, -g, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, g, 0, 1]], float)
    raise ValueError(f"axis must be 'x' or 'p', got {axis!r}")


def phase_shift_matrix(theta: float) -> np.ndarray:
    c, s = _cos_sin(theta)
    return np.array([[c, -s], [s, c]])


def squeezer_matrix(r: float, axis: str = X) -> np.ndarray:
    k = math.exp(-r) if axis == X else math.exp(r)
    return np.diag([k, 1.0 / k])


def epr_delta(r: float) -> float:
    """Per-quadrature correlation ``<(x_a - x_b)^2> = <(p_a + p_b)^2>`` of an EPR pair."""
    if r < 0:
        raise ValueError("squeezing strength must be >= 0")
    return 2.0 * math.exp(-2.0 * r)


# -- circuit vocabulary ------------------------------------------------------


@dataclass(frozen=True)
class Prepare:
    """Introduce a fresh mode from one independent source.

    ``record`` keeps a frozen copy of the mode as it enters the circuit
    (used for protocol inputs whose original quadratures appear in residuals).
    """

    mode: str
    kind: SourceKind
    mean: tuple[float, float] = (0.0, 0.0)
    record: bool = False
    group: str = ""


@dataclass(frozen=True)
class Beamsplitter:
    a: str
    b: str
    t: float


@dataclass(frozen=True)
class PhaseShift:
    mode: str
    theta: float


@dataclass(frozen=True)
class Squeezer:
    mode: str
    r: float
    axis: str = X


@dataclass(frozen=True)
class Swap:
    """Relabel two modes; no physical element."""

    a: str
    b: str


@dataclass(frozen=True)
class IdealQnd:
    control: str
    target: str
    gain: float = 1.0
    axis: str = X


@dataclass(frozen=True)
class FmaQnd:
    control: str
    target: str
    params: FmaParams
    axis: str = X


@dataclass(frozen=True)
class Homodyne:
    """Measure ``axis`` of ``mode`` and displace ``targets`` by gain * outcome."""

    mode: str
    axis: str
    eta: float = 1.0
    targets: tuple[tuple[str, str, float], ...] = ()

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"detector efficiency eta must lie in (0, 1], got {self.eta}")
        if self.axis not in AXES:
            raise ValueError(f"axis must be 'x' or 'p', got {self.axis!r}")


Op = Union[Prepare, Beamsplitter, PhaseShift, Squeezer, Swap, IdealQnd, FmaQnd, Homodyne]


def tritter(a: str, b: str, c: str) -> list[Op]:
    """Three-port splitter producing GHZ-type correlations.

    With a p-squeezed input on ``a`` and x-squeezed inputs on ``b`` and
    ``c``, the outputs (left on ``a``, ``b``, ``c``) satisfy::

        x_a - x_b = sqrt(3/2) X_b0 - sqrt(1/2) X_c0
        x_b - x_c = sqrt(2) X_c0
        p_a + p_b + p_c = sqrt(3) P_a0

    where ``X_b0`` etc. are the squeezed input quadratures.
    """
    return [
        Beamsplitter(a, b, 1.0 / 3.0),
        Beamsplitter(b, c, 0.5),
        PhaseShift(b, math.pi),
        Swap(b, c),
    ]


def epr_pair(a: str, b: str, r: float, group: str = "") -> list[Op]:
    """Two-mode squeezed pair with ``<(x_a-x_b)^2> = <(p_a+p_b)^2> = 2 e^{-2r}``."""
    if r < 0:
        raise ValueError("squeezing strength must be >= 0")
    group = group or f"epr:{a}{b}"
    return [
        Prepare(a, SourceKind.squeezed_x(r), group=group),
        Prepare(b, SourceKind.squeezed_p(r), group=group),
        Beamsplitter(a, b, 0.5),
    ]


def ghz_triple(a1: str, a2: str, b: str, r: float, group: str = "ghz") -> list[Op]:
    if r < 0:
        raise ValueError("squeezing strength must be >= 0")
    return [
        Prepare(a1, SourceKind.squeezed_p(r), group=group),
        Prepare(a2, SourceKind.squeezed_x(r), group=group),
        Prepare(b, SourceKind.squeezed_x(r), group=group),
        *tritter(a1, a2, b),
    ]


def is_entangled_pair(delta: float) -> bool:
    return delta < 1.0
