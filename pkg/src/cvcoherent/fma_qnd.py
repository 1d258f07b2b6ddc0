"""Measurement-induced QND interaction built from offline squeezers.

The box is defined by its input-output relations (copy axis x)::

    x1' = x1 - sqrt(a) x0 - sqrt(b) xB
    p1' = p1 - g p2 + sqrt(a/T) p0 + sqrt(T b) pA
    x2' = x2 + g x1 - sqrt(a/T) x0 + sqrt(T b) xB
    p2' = p2 - sqrt(a) p0 + sqrt(b) pA

with ``g = 1/sqrt(T) - sqrt(T)``, ``b = (1-T)/(1+T)``, ``a = b (1-eta)/eta``.
``x0``, ``p0`` are independent, commuting vacuum contributions; ``xB`` and
``pA`` come from offline squeezers of strength ``r`` (variance ``e^{-2r}``).
Copying the momentum instead is the same map with x and p exchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quad_algebra import P, X, QuadExpr, SourceKind, SourceRegistry, linear_combine

UNITY_GAIN_T = (3.0 - math.sqrt(5.0)) / 2.0


def unity_gain_T() -> float:
    """Interaction strength giving unit QND gain, ``1/sqrt(T) - sqrt(T) = 1``."""
    T = UNITY_GAIN_T
    gain = 1.0 / math.sqrt(T) - math.sqrt(T)
    assert abs(gain - 1.0) < 1e-12, gain
    return T


@dataclass(frozen=True)
class FmaParams:
    """Operating point of one FMA box.

    Args:
        eta: photodetector efficiency, in (0, 1].
        r: offline squeezing strength, >= 0.
        T: interaction strength; the unity-gain value by default.
    """

    eta: float = 1.0
    r: float = 1.0
    T: float = UNITY_GAIN_T

    def __post_init__(self):
        if not (math.isfinite(self.eta) and 0.0 < self.eta <= 1.0):
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        if not (math.isfinite(self.r) and self.r >= 0.0):
            raise ValueError(f"r must be finite and >= 0, got {self.r}")
        if not 0.0 < self.T < 1.0:
            raise ValueError(f"T must lie in (0, 1), got {self.T}")

    @property
    def T1(self) -> float:
        return 1.0 / (1.0 + self.T)

    @property
    def T2(self) -> float:
        return self.T / (1.0 + self.T)

    @property
    def beta(self) -> float:
        return (1.0 - self.T) / (1.0 + self.T)

    @property
    def alpha(self) -> float:
        return self.beta * (1.0 - self.eta) / self.eta

    @property
    def gain(self) -> float:
        return 1.0 / math.sqrt(self.T) - math.sqrt(self.T)

    @property
    def eta_F(self) -> float:
        return eta_F(self)


def eta_F(params: FmaParams) -> float:
    """Noise bound per box: ``beta ((1-eta)/(eta T) + e^{-2r})``."""
    return params.beta * ((1.0 - params.eta) / (params.eta * params.T) + math.exp(-2.0 * params.r))


def _noise_coefficients(params: FmaParams) -> np.ndarray:
    """Rows (x1', p1', x2', p2'); columns (x0, p0, xB, pA) for copy axis x."""
    a, b, T = params.alpha, params.beta, params.T
    return np.array(
        [
            [-math.sqrt(a), 0.0, -math.sqrt(b), 0.0],
            [0.0, math.sqrt(a / T), 0.0, math.sqrt(T * b)],
            [-math.sqrt(a / T), 0.0, math.sqrt(T * b), 0.0],
            [0.0, -math.sqrt(a), 0.0, math.sqrt(b)],
        ]
    )


def fma_map(x1, p1, x2, p2, params: FmaParams, reg: SourceRegistry, copy_axis: str = X, group: str = "fma"):
    """Apply one FMA box to control mode 1 and target mode 2.

    Allocates four fresh sources in ``reg`` under ``group``: two vacua
    (one contributes ``x0``, the other ``p0``, so the two commute) and two
    squeezers. Returns ``(x1', p1', x2', p2')``.
    """
    if x1 == x2 and p1 == p2:
        raise ValueError("FMA box applied to the same mode twice")
    g = params.gain
    a, b, T = params.alpha, params.beta, params.T
    v0 = reg.add(SourceKind.vacuum(), f"{group}:v0", group)
    v1 = reg.add(SourceKind.vacuum(), f"{group}:v1", group)
    if copy_axis == X:
        sq_b = reg.add(SourceKind.squeezed_x(params.r), f"{group}:sqB", group)
        sq_a = reg.add(SourceKind.squeezed_p(params.r), f"{group}:sqA", group)
        x0, p0 = QuadExpr.unit(v0, X), QuadExpr.unit(v1, P)
        xB, pA = QuadExpr.unit(sq_b, X), QuadExpr.unit(sq_a, P)
        return (
            linear_combine([x1, x0, xB], [1, -math.sqrt(a), -math.sqrt(b)]),
            linear_combine([p1, p2, p0, pA], [1, -g, math.sqrt(a / T), math.sqrt(T * b)]),
            linear_combine([x2, x1, x0, xB], [1, g, -math.sqrt(a / T), math.sqrt(T * b)]),
            linear_combine([p2, p0, pA], [1, -math.sqrt(a), math.sqrt(b)]),
        )
    if copy_axis == P:
        sq_b = reg.add(SourceKind.squeezed_p(params.r), f"{group}:sqB", group)
        sq_a = reg.add(SourceKind.squeezed_x(params.r), f"{group}:sqA", group)
        p0, x0 = QuadExpr.unit(v0, P), QuadExpr.unit(v1, X)
        pB, xA = QuadExpr.unit(sq_b, P), QuadExpr.unit(sq_a, X)
        return (
            linear_combine([x1, x2, x0, xA], [1, -g, math.sqrt(a / T), math.sqrt(T * b)]),
            linear_combine([p1, p0, pB], [1, -math.sqrt(a), -math.sqrt(b)]),
            linear_combine([x2, x0, xA], [1, -math.sqrt(a), math.sqrt(b)]),
            linear_combine([p2, p1, p0, pB], [1, g, -math.sqrt(a / T), math.sqrt(T * b)]),
        )
    raise ValueError(f"copy_axis must be 'x' or 'p', got {copy_axis!r}")


_SWAP_XP = np.kron(np.eye(2), np.array([[0.0, 1.0], [1.0, 0.0]]))


def fma_channel(params: FmaParams, copy_axis: str = X) -> tuple[np.ndarray, np.ndarray]:
    """The box as a Gaussian channel ``(transfer, noise)`` on ``(x1, p1, x2, p2)``."""
    g = params.gain
    transfer = np.array([[1, 0, 0, 0], [0, 1, 0, -g], [g, 0, 1, 0], [0, 0, 0, 1]], float)
    n = _noise_coefficients(params)
    s = math.exp(-2.0 * params.r)
    noise = n @ np.diag([1.0, 1.0, s, s]) @ n.T
    if copy_axis == X:
        return transfer, noise
    if copy_axis == P:
        return _SWAP_XP @ transfer @ _SWAP_XP, _SWAP_XP @ noise @ _SWAP_XP
    raise ValueError(f"copy_axis must be 'x' or 'p', got {copy_axis!r}")


def added_noise_moments(params: FmaParams) -> dict[str, float]:
    """Exact added-noise second moment on each output quadrature (copy axis x)."""
    a, b, T = params.alpha, params.beta, params.T
    s = math.exp(-2.0 * params.r)
    return {
        "x1": a + b * s,
        "p1": a / T + T * b * s,
        "x2": a / T + T * b * s,
        "p2": a + b * s,
    }
