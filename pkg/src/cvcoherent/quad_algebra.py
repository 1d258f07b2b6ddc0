"""Heisenberg-picture quadrature algebra.

Every output quadrature of a linear-optical circuit is a real linear
combination of the quadratures of independent elementary sources, plus a
c-number offset. Commutators and second moments then follow in closed form
from the coefficients alone.

Units: vacuum fluctuations have ``<x^2> = <p^2> = 1`` and the elementary
commutator is ``[x_s, p_s] = i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

X = "x"
P = "p"
AXES = (X, P)


def _check_axis(axis: str) -> str:
    if axis not in AXES:
        raise ValueError(f"axis must be 'x' or 'p', got {axis!r}")
    return axis


def conjugate_axis(axis: str) -> str:
    return P if _check_axis(axis) == X else X


@dataclass(frozen=True)
class SourceKind:
    """Statistics of one elementary mode.

    Use the constructors ``vacuum()``, ``squeezed_x(r)``, ``squeezed_p(r)``
    and ``input_signal(x_var, p_var)`` rather than building this directly.
    """

    name: str
    r: float = 0.0
    x_var: float = 1.0
    p_var: float = 1.0

    def __post_init__(self):
        if self.name not in ("vacuum", "squeezed_x", "squeezed_p", "input"):
            raise ValueError(f"unknown source kind {self.name!r}")
        if not math.isfinite(self.r) or self.r < 0:
            raise ValueError(f"squeezing strength must be finite and >= 0, got {self.r}")
        if self.x_var < 0 or self.p_var < 0:
            raise ValueError("input-signal variances must be >= 0")
        if self.x_var * self.p_var < 1.0 - 1e-12:
            raise ValueError(
                f"variances ({self.x_var}, {self.p_var}) violate <x^2><p^2> >= 1"
            )

    @classmethod
    def vacuum(cls) -> SourceKind:
        return cls("vacuum")

    @classmethod
    def squeezed_x(cls, r: float) -> SourceKind:
        return cls("squeezed_x", r, math.exp(-2 * r), math.exp(2 * r))

    @classmethod
    def squeezed_p(cls, r: float) -> SourceKind:
        return cls("squeezed_p", r, math.exp(2 * r), math.exp(-2 * r))

    @classmethod
    def input_signal(cls, x_var: float = 1.0, p_var: float = 1.0) -> SourceKind:
        return cls("input", 0.0, float(x_var), float(p_var))

    def variance(self, axis: str) -> float:
        return self.x_var if _check_axis(axis) == X else self.p_var


@dataclass(frozen=True)
class Source:
    index: int
    kind: SourceKind
    label: str
    group: str


class SourceRegistry:
    """Append-only table of independent elementary sources.

    Ids are allocated sequentially and never reused. Each source carries a
    free-form ``group`` tag so that callers can attribute noise to the
    component that introduced it (a detector, one QND box, an EPR pair).
    """

    def __init__(self):
        self._sources: list[Source] = []

    def add(self, kind: SourceKind, label: str = "", group: str = "") -> int:
        index = len(self._sources)
        self._sources.append(Source(index, kind, label or f"s{index}", group))
        return index

    def __len__(self) -> int:
        return len(self._sources)

    def __iter__(self) -> Iterator[Source]:
        return iter(self._sources)

    def __getitem__(self, index: int) -> Source:
        if not 0 <= index < len(self._sources):
            raise KeyError(f"unknown source id {index}")
        return self._sources[index]

    def variance(self, index: int, axis: str) -> float:
        return self[index].kind.variance(axis)

    def groups(self) -> dict[str, list[int]]:
        out: dict[str, list[int]] = {}
        for s in self._sources:
            out.setdefault(s.group, []).append(s.index)
        return out

    def quadratures(self, index: int) -> tuple[QuadExpr, QuadExpr]:
        """The bare ``(x, p)`` expressions of one source."""
        self[index]
        return QuadExpr.unit(index, X), QuadExpr.unit(index, P)


Key = tuple[int, str]


@dataclass(frozen=True)
class QuadExpr:
    """Linear combination ``sum_k c_k q_k + offset`` of source quadratures.

    ``terms`` is kept sorted by ``(source id, axis)`` and never contains
    zero coefficients, so equal expressions compare and serialize equal.
    """

    terms: tuple[tuple[Key, float], ...] = ()
    offset: float = 0.0

    @classmethod
    def from_mapping(cls, coeffs: Mapping[Key, float], offset: float = 0.0) -> QuadExpr:
        items = []
        for (index, axis), c in coeffs.items():
            _check_axis(axis)
            c = float(c)
            if not math.isfinite(c):
                raise ValueError(f"non-finite coefficient on {(index, axis)}")
            if c != 0.0:
                items.append(((int(index), axis), c))
        items.sort()
        return cls(tuple(items), float(offset))

    @classmethod
    def unit(cls, index: int, axis: str) -> QuadExpr:
        return cls((((index, _check_axis(axis)), 1.0),))

    @classmethod
    def constant(cls, value: float) -> QuadExpr:
        return cls((), float(value))

    def as_dict(self) -> dict[Key, float]:
        return dict(self.terms)

    def coeff(self, index: int, axis: str) -> float:
        return self.as_dict().get((index, axis), 0.0)

    def sources(self) -> set[int]:
        return {index for (index, _), _ in self.terms}

    def restrict(self, indices: Iterable[int]) -> QuadExpr:
        """Keep only terms on the given sources; the offset is dropped."""
        keep = set(indices)
        return QuadExpr(tuple(t for t in self.terms if t[0][0] in keep))

    def __add__(self, other: QuadExpr) -> QuadExpr:
        if not isinstance(other, QuadExpr):
            return NotImplemented
        return linear_combine([self, other], [1.0, 1.0])

    def __sub__(self, other: QuadExpr) -> QuadExpr:
        if not isinstance(other, QuadExpr):
            return NotImplemented
        return linear_combine([self, other], [1.0, -1.0])

    def __neg__(self) -> QuadExpr:
        return self * -1.0

    def __mul__(self, scalar: float) -> QuadExpr:
        return linear_combine([self], [scalar])

    __rmul__ = __mul__

    def is_close(self, other: QuadExpr, atol: float = 1e-12) -> bool:
        diff = self - other
        return abs(diff.offset) <= atol and all(abs(c) <= atol for _, c in diff.terms)

    def __str__(self) -> str:
        parts = [f"{c:+.6g}*{axis}{index}" for (index, axis), c in self.terms]
        if self.offset or not parts:
            parts.append(f"{self.offset:+.6g}")
        return " ".join(parts)


ZERO = QuadExpr()


def linear_combine(exprs: Sequence[QuadExpr], coeffs: Sequence[float]) -> QuadExpr:
    """Return ``sum_i coeffs[i] * exprs[i]``, offsets included."""
    if len(exprs) != len(coeffs):
        raise ValueError(
            f"linear_combine got {len(exprs)} expressions and {len(coeffs)} coefficients"
        )
    acc: dict[Key, float] = {}
    offset = 0.0
    for expr, w in zip(exprs, coeffs):
        w = float(w)
        if not math.isfinite(w):
            raise ValueError("non-finite combination coefficient")
        for key, c in expr.terms:
            acc[key] = acc.get(key, 0.0) + w * c
        offset += w * expr.offset
    return QuadExpr.from_mapping(acc, offset)


def commutator(a: QuadExpr, b: QuadExpr) -> complex:
    """``[a, b]`` as an imaginary scalar; offsets commute with everything."""
    da, db = a.as_dict(), b.as_dict()
    total = 0.0
    for index in a.sources() & b.sources():
        total += da.get((index, X), 0.0) * db.get((index, P), 0.0)
        total -= da.get((index, P), 0.0) * db.get((index, X), 0.0)
    return 1j * total


def covariance(a: QuadExpr, b: QuadExpr, reg: SourceRegistry) -> float:
    """Symmetrized zero-mean covariance ``<(ab + ba)/2>`` of two expressions.

    Distinct sources are independent and each source has no x-p correlation,
    so only matching keys contribute.
    """
    db = b.as_dict()
    total = 0.0
    for (index, axis), c in a.terms:
        var = reg.variance(index, axis)
        other = db.get((index, axis))
        if other is not None:
            total += c * other * var
    for (index, axis), _ in b.terms:
        reg.variance(index, axis)
    return total


def second_moment(a: QuadExpr, reg: SourceRegistry, include_offset: bool = False) -> float:
    value = sum(c * c * reg.variance(index, axis) for (index, axis), c in a.terms)
    if include_offset:
        value += a.offset**2
    return value


def uncertainty_products(reg: SourceRegistry) -> list[float]:
    """``<x^2><p^2>`` for every registered source."""
    return [s.kind.x_var * s.kind.p_var for s in reg]


@dataclass(frozen=True)
class Mode:
    """The pair of quadrature expressions describing one optical mode."""

    x: QuadExpr
    p: QuadExpr = field(default=ZERO)

    def quad(self, axis: str) -> QuadExpr:
        return self.x if _check_axis(axis) == X else self.p

    def commutator(self) -> complex:
        return commutator(self.x, self.p)
