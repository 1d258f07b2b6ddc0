"""Covariance-matrix engine for Gaussian states.

This is the brute-force cross-check for the symbolic engine: states are
``(mean, cov)`` over labelled modes in ``x1, p1, x2, p2, ...`` order, and
every element is applied as a matrix. Homodyne detection with feedforward
goes through Gaussian conditioning (Schur complement) followed by averaging
over the outcome distribution, which is a different route from the
substitution the symbolic engine performs.

A mode may be marked *frozen*: a record of some mode's quadratures at an
earlier time (typically a protocol input before the circuit acts). Frozen
modes ride along in the covariance matrix so that residuals such as
``x_B' - x_A`` can be evaluated, but no element touches them and they are
excluded from the physicality check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .quad_algebra import AXES, P, X, SourceKind

SYMPLECTIC_TOL = 1e-9
PHYSICAL_TOL = 1e-9
SINGULAR_TOL = 1e-12


class SingularMeasurementError(ValueError):
    """Measured quadrature has (numerically) zero variance."""


def symplectic_form(n: int) -> np.ndarray:
    return np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def is_symplectic(s: np.ndarray, tol: float = SYMPLECTIC_TOL) -> bool:
    n = s.shape[0] // 2
    omega = symplectic_form(n)
    return bool(np.allclose(s @ omega @ s.T, omega, atol=tol, rtol=0))


@dataclass(frozen=True)
class SymplecticMap:
    """Affine symplectic map ``z -> S z + d`` on a subset of modes."""

    matrix: np.ndarray
    displacement: np.ndarray | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2:
            raise ValueError(f"symplectic matrix must be 2n x 2n, got shape {m.shape}")
        if not is_symplectic(m):
            raise ValueError("matrix is not symplectic (S Omega S^T != Omega)")
        d = np.zeros(m.shape[0]) if self.displacement is None else np.asarray(self.displacement, float)
        if d.shape != (m.shape[0],):
            raise ValueError("displacement length does not match matrix")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "displacement", d)


@dataclass(frozen=True)
class GaussianState:
    modes: tuple[str, ...]
    mean: np.ndarray
    cov: np.ndarray
    frozen: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        n = len(self.modes)
        if len(set(self.modes)) != n:
            raise ValueError(f"duplicate mode labels in {self.modes}")
        mean = np.asarray(self.mean, dtype=float).reshape(2 * n)
        cov = np.asarray(self.cov, dtype=float).reshape(2 * n, 2 * n)
        if not np.allclose(cov, cov.T, atol=1e-9 * max(1.0, np.abs(cov).max(initial=0.0))):
            raise ValueError("covariance matrix is not symmetric")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    def index(self, mode: str, axis: str = X) -> int:
        try:
            k = self.modes.index(mode)
        except ValueError:
            raise KeyError(f"no mode {mode!r} in state {self.modes}") from None
        return 2 * k + (0 if axis == X else 1)

    def physical_modes(self) -> list[str]:
        return [m for m in self.modes if m not in self.frozen]

    def min_uncertainty_eigenvalue(self) -> float:
        """Smallest eigenvalue of ``cov + i Omega`` over the physical modes."""
        phys = self.physical_modes()
        if not phys:
            return 0.0
        idx = [self.index(m, a) for m in phys for a in AXES]
        sub = self.cov[np.ix_(idx, idx)]
        return float(np.linalg.eigvalsh(sub + 1j * symplectic_form(len(phys))).min())

    def is_physical(self, tol: float = PHYSICAL_TOL) -> bool:
        return self.min_uncertainty_eigenvalue() >= -tol


def empty_state() -> GaussianState:
    return GaussianState((), np.zeros(0), np.zeros((0, 0)))


def add_mode(
    state: GaussianState,
    mode: str,
    kind: SourceKind,
    mean: tuple[float, float] = (0.0, 0.0),
) -> GaussianState:
    """Append an uncorrelated mode with the given single-mode statistics."""
    n = state.n_modes
    cov = np.zeros((2 * n + 2, 2 * n + 2))
    cov[: 2 * n, : 2 * n] = state.cov
    cov[2 * n, 2 * n] = kind.x_var
    cov[2 * n + 1, 2 * n + 1] = kind.p_var
    return GaussianState(
        state.modes + (mode,),
        np.concatenate([state.mean, np.asarray(mean, float)]),
        cov,
        state.frozen,
    )


def freeze_copy(state: GaussianState, mode: str, label: str) -> GaussianState:
    """Append a frozen record ``label`` that duplicates ``mode`` right now."""
    n = state.n_modes
    i = state.index(mode)
    lift = np.zeros((2 * n + 2, 2 * n))
    lift[: 2 * n, : 2 * n] = np.eye(2 * n)
    lift[2 * n, i] = 1.0
    lift[2 * n + 1, i + 1] = 1.0
    return GaussianState(
        state.modes + (label,),
        lift @ state.mean,
        lift @ state.cov @ lift.T,
        state.frozen | {label},
    )


def drop_modes(state: GaussianState, modes: Sequence[str]) -> GaussianState:
    """Marginalize: remove the listed modes."""
    keep = [m for m in state.modes if m not in set(modes)]
    idx = [state.index(m, a) for m in keep for a in AXES]
    return GaussianState(
        tuple(keep),
        state.mean[idx],
        state.cov[np.ix_(idx, idx)],
        state.frozen & set(keep),
    )


def _embed(state: GaussianState, modes: Sequence[str], local: np.ndarray) -> np.ndarray:
    big = np.eye(2 * state.n_modes)
    idx = [state.index(m, a) for m in modes for a in AXES]
    for m in modes:
        if m in state.frozen:
            raise ValueError(f"mode {m!r} is a frozen record and cannot be acted on")
    big[np.ix_(idx, idx)] = local
    return big


def apply_symplectic(
    state: GaussianState,
    smap: SymplecticMap,
    modes: Sequence[str] | None = None,
) -> GaussianState:
    """``mean -> S mean + d``, ``cov -> S cov S^T`` on ``modes`` (default: all)."""
    if modes is None:
        modes = state.physical_modes()
    if smap.matrix.shape[0] != 2 * len(modes):
        raise ValueError(
            f"map acts on {smap.matrix.shape[0] // 2} modes but {len(modes)} were given"
        )
    s = _embed(state, modes, smap.matrix)
    d = np.zeros(2 * state.n_modes)
    idx = [state.index(m, a) for m in modes for a in AXES]
    d[idx] = smap.displacement
    return GaussianState(state.modes, s @ state.mean + d, s @ state.cov @ s.T, state.frozen)


def apply_channel(
    state: GaussianState,
    modes: Sequence[str],
    transfer: np.ndarray,
    noise: np.ndarray,
) -> GaussianState:
    """Gaussian channel ``cov -> X cov X^T + Y`` restricted to ``modes``.

    Raises if ``(X, Y)`` is not completely positive, i.e. if
    ``Y + i Omega - i X Omega X^T`` has a negative eigenvalue.
    """
    k = len(modes)
    transfer = np.asarray(transfer, float)
    noise = np.asarray(noise, float)
    if transfer.shape != (2 * k, 2 * k) or noise.shape != (2 * k, 2 * k):
        raise ValueError("channel matrices do not match the number of modes")
    omega = symplectic_form(k)
    cp = noise + 1j * omega - 1j * transfer @ omega @ transfer.T
    if np.linalg.eigvalsh(cp).min() < -PHYSICAL_TOL:
        raise ValueError("channel (X, Y) is not completely positive")
    xbig = _embed(state, modes, transfer)
    ybig = np.zeros_like(state.cov)
    idx = [state.index(m, a) for m in modes for a in AXES]
    ybig[np.ix_(idx, idx)] = noise
    return GaussianState(
        state.modes, xbig @ state.mean, xbig @ state.cov @ xbig.T + ybig, state.frozen
    )


def beamsplitter_matrix(t: float) -> np.ndarray:
    """Two-mode map ``a' = sqrt(t) a + sqrt(1-t) b``, ``b' = -sqrt(1-t) a + sqrt(t) b``."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"transmittivity must lie in [0, 1], got {t}")
    c, s = np.sqrt(t), np.sqrt(1.0 - t)
    return np.kron(np.array([[c, s], [-s, c]]), np.eye(2))


def homodyne_feedforward(
    state: GaussianState,
    measured_mode: str,
    axis: str,
    eta: float,
    targets: Sequence[tuple[str, str, float]] = (),
) -> GaussianState:
    """Measure one quadrature, feed the outcome forward, discard the mode.

    Detector inefficiency is a beamsplitter of transmittivity ``eta`` with a
    fresh vacuum; the recorded outcome is rescaled by ``1/sqrt(eta)`` so that
    its signal part has unit gain. Each target quadrature is displaced by
    ``gain * outcome``. The returned moments are averaged over outcomes:

        cov' = S_c + sigma * (K + G)(K + G)^T,   mean' = mu_K + G mu_q

    where ``S_c`` is the conditional (Schur complement) covariance and
    ``K = Sigma_Kq / sigma`` the regression of kept coordinates on the
    outcome.
    """
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"detector efficiency eta must lie in (0, 1], got {eta}")
    if axis not in AXES:
        raise ValueError(f"axis must be 'x' or 'p', got {axis!r}")
    if measured_mode in state.frozen:
        raise ValueError("cannot measure a frozen record")
    for mode, _, _ in targets:
        if mode == measured_mode:
            raise ValueError("feedforward target cannot be the measured mode")
        state.index(mode)

    lost = None
    if eta < 1.0:
        lost = f"__loss_{measured_mode}"
        while lost in state.modes:
            lost += "_"
        state = add_mode(state, lost, SourceKind.vacuum())
        # vacuum in port a, signal in port b; port b' is detected
        state = apply_symplectic(state, SymplecticMap(beamsplitter_matrix(eta)), [lost, measured_mode])

    q = state.index(measured_mode, axis)
    scale = 1.0 / np.sqrt(eta)
    sigma = state.cov[q, q] * scale**2
    if sigma < SINGULAR_TOL:
        raise SingularMeasurementError(
            f"variance of measured {axis}-quadrature of {measured_mode!r} is {sigma:.3g}"
        )

    drop = {measured_mode} | ({lost} if lost else set())
    keep = [m for m in state.modes if m not in drop]
    kidx = [state.index(m, a) for m in keep for a in AXES]
    s_kk = state.cov[np.ix_(kidx, kidx)]
    s_kq = state.cov[kidx, q] * scale
    mu_k = state.mean[kidx]
    mu_q = state.mean[q] * scale

    regress = s_kq / sigma
    conditional = s_kk - np.outer(s_kq, s_kq) / sigma
    gains = np.zeros(len(kidx))
    for mode, tax, g in targets:
        gains[2 * keep.index(mode) + (0 if tax == X else 1)] += g
    shift = regress + gains
    cov = conditional + sigma * np.outer(shift, shift)
    mean = mu_k + gains * mu_q
    return GaussianState(tuple(keep), mean, cov, state.frozen & set(keep))


def linear_form(state: GaussianState, observable: Mapping[tuple[str, str], float]) -> np.ndarray:
    v = np.zeros(2 * state.n_modes)
    for (mode, axis), c in observable.items():
        v[state.index(mode, axis)] += c
    return v


def moment_of(
    state: GaussianState,
    observable: Mapping[tuple[str, str], float],
    include_mean: bool = False,
) -> float:
    """``v^T cov v`` for the linear form ``observable`` over ``(mode, axis)``."""
    v = linear_form(state, observable)
    value = float(v @ state.cov @ v)
    if include_mean:
        value += float(v @ state.mean) ** 2
    return value


def mean_of(state: GaussianState, observable: Mapping[tuple[str, str], float]) -> float:
    return float(linear_form(state, observable) @ state.mean)


__all__ = [
    "GaussianState",
    "SymplecticMap",
    "SingularMeasurementError",
    "P",
    "X",
    "add_mode",
    "apply_channel",
    "apply_symplectic",
    "beamsplitter_matrix",
    "drop_modes",
    "empty_state",
    "freeze_copy",
    "homodyne_feedforward",
    "is_symplectic",
    "linear_form",
    "mean_of",
    "moment_of",
    "symplectic_form",
]
