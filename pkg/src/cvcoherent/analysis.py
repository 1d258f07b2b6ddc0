"""Coherent-channel certification and figures of merit."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .circuit import record_label
from .quad_algebra import P, X, QuadExpr, SourceRegistry, commutator, conjugate_axis, second_moment

CANONICAL_TOL = 1e-12
RETENTION_TOL = 1e-12
MEAN_TOL = 1e-12

BELOW_CLASSICAL = "below_classical"
BEATS_HALF = "beats_1/2"
BEATS_TWO_THIRDS = "beats_2/3"


@dataclass
class ChannelReport:
    """Certificate for one approximate coherent channel.

    ``epsilon`` is the larger of the two exact residual moments.
    ``epsilon_budget`` is the budget-style certificate: residual moment from
    everything except FMA boxes, plus ``eta_F`` for every FMA box whose
    noise reaches the residual.
    """

    axis: str
    residual_copy_moment: float
    residual_backaction_moment: float
    epsilon: float
    epsilon_budget: float
    identity_retained: bool
    retention_defect_moment: float
    canonical: bool
    commutators: dict[str, complex]
    mean_conditions_ok: bool
    definition_satisfied: bool
    retention: str = "exact"
    diagnostics: list[str] = field(default_factory=list)
    observables: dict[str, dict] = field(default_factory=dict)


def _budget(expr: QuadExpr, reg: SourceRegistry, fma_groups: Sequence[str], eta_F: float) -> float:
    groups = reg.groups()
    fma_sources = {s for g in fma_groups for s in groups.get(g, [])}
    rest = {s.index for s in reg} - fma_sources
    touched = sum(1 for g in fma_groups if expr.sources() & set(groups.get(g, [])))
    return second_moment(expr.restrict(rest), reg) + touched * eta_F


def verify_coherent_channel(
    result,
    input_mode: str,
    out_a: str,
    out_b: str,
    axis: str = X,
    retention: str = "exact",
    eta_F: float = 0.0,
) -> ChannelReport:
    """Check the approximate coherent-channel conditions for one channel.

    For ``axis='x'`` (position channel) with input ``A`` and outputs
    ``A'``, ``B'``::

        x_A' = x_A                       (identity retention)
        x_D  = x_B' - x_A                (copy residual)
        p_D  = p_A' - p_A                (back-action)
        <x_D> = <p_D + p_B'> = 0
        epsilon = max(<x_D^2>, <(p_D + p_B')^2>)

    ``axis='p'`` is the same with x and p exchanged.

    With ``retention='approximate'`` the sender's copy may carry zero-mean
    noise: retention holds when the defect ``x_A' - x_A`` has moment at most
    ``epsilon``. The residuals and ``epsilon`` are unchanged.
    """
    if retention not in ("exact", "approximate"):
        raise ValueError("retention must be 'exact' or 'approximate'")
    sym = result.symbolic
    reg = sym.registry
    q, c = axis, conjugate_axis(axis)
    if input_mode not in sym.inputs:
        raise KeyError(f"{input_mode!r} is not a recorded protocol input")
    src = sym.inputs[input_mode]
    a, b = sym.modes[out_a], sym.modes[out_b]
    rec = record_label(input_mode)

    defect = a.quad(q) - src.quad(q)
    copy_res = b.quad(q) - src.quad(q)
    copy_obs = {(out_b, q): 1.0, (rec, q): -1.0}
    back = a.quad(c) - src.quad(c) + b.quad(c)
    back_obs = {(out_a, c): 1.0, (rec, c): -1.0, (out_b, c): 1.0}

    m_copy = second_moment(copy_res, reg)
    m_back = second_moment(back, reg)
    eps = max(m_copy, m_back)
    fma_groups = getattr(sym, "fma_groups", [])
    eps_budget = max(_budget(copy_res, reg, fma_groups, eta_F), _budget(back, reg, fma_groups, eta_F))

    diagnostics = []
    comms = {
        f"[x_{out_a},p_{out_a}]": a.commutator(),
        f"[x_{out_b},p_{out_b}]": b.commutator(),
    }
    canonical = all(abs(v - 1j) <= CANONICAL_TOL for v in comms.values())
    if not canonical:
        diagnostics.append(f"non-canonical output commutators {comms}")

    defect_moment = second_moment(defect, reg)
    exact_retained = all(abs(v) <= RETENTION_TOL for _, v in defect.terms) and abs(defect.offset) <= RETENTION_TOL
    if retention == "exact":
        retained = exact_retained
    else:
        retained = abs(defect.offset) <= MEAN_TOL and defect_moment <= eps + RETENTION_TOL
    if not retained:
        diagnostics.append(f"{q}_{out_a} does not retain {q}_{input_mode}: defect moment {defect_moment:.6g}")

    mean_ok = abs(copy_res.offset) <= MEAN_TOL and abs(back.offset) <= MEAN_TOL
    if not mean_ok:
        diagnostics.append(f"residual means {copy_res.offset:.6g}, {back.offset:.6g} are not zero")

    return ChannelReport(
        axis=axis,
        residual_copy_moment=m_copy,
        residual_backaction_moment=m_back,
        epsilon=eps,
        epsilon_budget=eps_budget,
        identity_retained=exact_retained,
        retention_defect_moment=defect_moment,
        canonical=canonical,
        commutators=comms,
        mean_conditions_ok=mean_ok,
        definition_satisfied=canonical and retained and mean_ok,
        retention=retention,
        diagnostics=diagnostics,
        observables={"copy": copy_obs, "backaction": back_obs},
    )


@dataclass(frozen=True)
class EntanglementReport:
    x_moment: float
    p_moment: float
    signs: tuple[int, int]

    @property
    def sum_moment(self) -> float:
        return self.x_moment + self.p_moment

    @property
    def entangled(self) -> bool:
        return self.x_moment < 1.0 and self.p_moment < 1.0


def duan_check(xa, pa, xb, pb, signs: tuple[int, int], reg: SourceRegistry) -> EntanglementReport:
    """Correlation moments ``<(x_a + sx x_b)^2>`` and ``<(p_a + sp p_b)^2>``.

    An EPR-type pair uses ``signs=(-1, +1)``. Reported as entangled when both
    moments are below one.
    """
    sx, sp = signs
    return EntanglementReport(
        second_moment(xa + xb * sx, reg),
        second_moment(pa + pb * sp, reg),
        (int(sx), int(sp)),
    )


def threshold_class_of_fidelity(F: float) -> str:
    if F > 2.0 / 3.0:
        return BEATS_TWO_THIRDS
    if F > 0.5:
        return BEATS_HALF
    return BELOW_CLASSICAL


@dataclass(frozen=True)
class FidelityReport:
    F: float
    dx_moment: float
    dp_moment: float
    threshold_class: str


def teleport_fidelity(dx_moment: float, dp_moment: float) -> FidelityReport:
    """Average coherent-state fidelity ``2 / sqrt((<dx^2>+1)(<dp^2>+1))``.

    The moments are the teleported mode's total fluctuations for a
    coherent-state input, so perfect teleportation gives ``(1, 1)`` and
    ``F = 1``.
    """
    if dx_moment < 0 or dp_moment < 0:
        raise ValueError("quadrature moments must be non-negative")
    F = 2.0 / math.sqrt((dx_moment + 1.0) * (dp_moment + 1.0))
    return FidelityReport(F, dx_moment, dp_moment, threshold_class_of_fidelity(F))


def epsilon_threshold_class(eps: float) -> str:
    """Fidelity class guaranteed by an ``eps``-approximate coherent channel."""
    if eps < 0:
        raise ValueError(f"epsilon must be >= 0, got {eps}")
    if eps < 0.5:
        return BEATS_TWO_THIRDS
    if eps < 1.0:
        return BEATS_HALF
    return BELOW_CLASSICAL


def sweep(
    protocol: Callable[..., object],
    grid: Mapping[str, Sequence[float]],
    summarize: Callable[[object], Mapping[str, object]] | None = None,
    fixed: Mapping[str, object] | None = None,
) -> list[dict]:
    """Evaluate ``protocol`` on the Cartesian product of ``grid``.

    Rows come out in row-major order of the grid keys as given. Each row
    holds the grid point followed by ``summarize(result)`` (default: the
    result's ``figures``).
    """
    if not grid:
        raise ValueError("sweep grid is empty")
    keys = list(grid)
    for k in keys:
        values = list(grid[k])
        if not values:
            raise ValueError(f"sweep axis {k!r} has no points")
        if not all(isinstance(v, (int, float)) and math.isfinite(v) for v in values):
            raise ValueError(f"sweep axis {k!r} has non-finite values")
    summarize = summarize or (lambda res: dict(res.figures))
    rows = []
    for point in itertools.product(*(grid[k] for k in keys)):
        kwargs = dict(zip(keys, point))
        result = protocol(**kwargs, **(fixed or {}))
        rows.append({**kwargs, **summarize(result)})
    return rows


def monotone_nonincreasing(values: Sequence[float], tol: float = 1e-12) -> bool:
    return all(b <= a + tol for a, b in zip(values, values[1:]))
