"""End-to-end coherent-communication protocols.

Each protocol is written once as a circuit (a list of element ops) and run
through both engines. The returned :class:`ScenarioResult` holds the
symbolic outputs, the oracle state, a table of named observables with their
second moments from both engines, and the figures of merit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

from . import analysis
from .circuit import Observable, SymbolicRun, oracle_moment, record_label, run_oracle, run_symbolic
from .elements import (
    Beamsplitter,
    FmaQnd,
    Homodyne,
    IdealQnd,
    Op,
    PhaseShift,
    Prepare,
    epr_delta,
    epr_pair,
    ghz_triple,
)
from .fma_qnd import FmaParams
from .gaussian_oracle import GaussianState, mean_of
from .quad_algebra import P, X, Mode, SourceKind, second_moment

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class Ideal:
    gain: float = 1.0

    name = "ideal"


@dataclass(frozen=True)
class Fma:
    params: FmaParams

    name = "fma"


QndBackend = Union[Ideal, Fma]


def qnd(control: str, target: str, backend: QndBackend, axis: str = X) -> Op:
    if isinstance(backend, Ideal):
        return IdealQnd(control, target, backend.gain, axis)
    if isinstance(backend, Fma):
        return FmaQnd(control, target, backend.params, axis)
    raise TypeError(f"unknown QND backend {backend!r}")


def _retention(backend: QndBackend) -> str:
    # FMA boxes add bounded zero-mean noise to the control's copied quadrature
    return "approximate" if isinstance(backend, Fma) else "exact"


def _eta_F(backend: QndBackend) -> float:
    return backend.params.eta_F if isinstance(backend, Fma) else 0.0


@dataclass
class ScenarioResult:
    protocol: str
    backend: QndBackend
    params: dict[str, float]
    ops: list[Op]
    symbolic: SymbolicRun
    oracle: GaussianState
    observables: dict[str, Observable] = field(default_factory=dict)
    moments: dict[str, float] = field(default_factory=dict)
    oracle_moments: dict[str, float] = field(default_factory=dict)
    channels: dict[str, analysis.ChannelReport] = field(default_factory=dict)
    figures: dict[str, object] = field(default_factory=dict)
    checks: dict[str, bool] = field(default_factory=dict)
    fidelity: analysis.FidelityReport | None = None
    entanglement: dict[str, analysis.EntanglementReport] = field(default_factory=dict)
    retention: str | None = None

    @property
    def outputs(self) -> dict[str, Mode]:
        return self.symbolic.modes

    @property
    def registry(self):
        return self.symbolic.registry

    def noise_ledger(self) -> dict[str, list[int]]:
        return self.registry.groups()

    def observe(self, name: str, observable: Observable) -> float:
        """Register a named observable and evaluate it in both engines."""
        self.observables[name] = dict(observable)
        value = second_moment(self.symbolic.expr(observable), self.registry)
        self.moments[name] = value
        self.oracle_moments[name] = oracle_moment(self.oracle, observable)
        return value

    def oracle_mean(self, observable: Observable) -> float:
        return mean_of(self.oracle, observable)

    @property
    def engine_agreement(self) -> float:
        diffs = [abs(self.moments[k] - self.oracle_moments[k]) for k in self.moments]
        return max(diffs, default=0.0)

    def certify(
        self,
        name: str,
        input_mode: str,
        out_a: str,
        out_b: str,
        axis: str,
        retention: str | None = None,
    ) -> analysis.ChannelReport:
        retention = retention or self.retention or _retention(self.backend)
        report = analysis.verify_coherent_channel(
            self, input_mode, out_a, out_b, axis, retention=retention, eta_F=_eta_F(self.backend)
        )
        self.channels[name] = report
        for label, obs in report.observables.items():
            self.observe(f"{name}.{label}", obs)
        return report


def _run(protocol: str, backend: QndBackend, params: dict, ops: list[Op], retention: str | None = None) -> ScenarioResult:
    res = ScenarioResult(protocol, backend, params, ops, run_symbolic(ops), run_oracle(ops))
    res.retention = retention
    return res


def _input(mode: str, x_var: float = 1.0, p_var: float = 1.0, mean=(0.0, 0.0)) -> Prepare:
    return Prepare(mode, SourceKind.input_signal(x_var, p_var), mean, record=True, group=f"input:{mode}")


def _check_r(r: float, name: str = "r"):
    if not (math.isfinite(r) and r >= 0):
        raise ValueError(f"{name} must be finite and >= 0, got {r}")


def qnd_coherent_channel(r: float, backend: QndBackend = Ideal(), retention: str | None = None) -> ScenarioResult:
    """Position coherent channel from one QND onto an x-squeezed ancilla.

    Ideal outputs: ``x_A, p_A - p_B, x_B + x_A, p_B`` with the ancilla
    quadratures ``x_B`` (variance ``e^{-2r}``) and ``p_B``.
    """
    _check_r(r)
    ops = [
        _input("A"),
        Prepare("B", SourceKind.squeezed_x(r), group="ancilla"),
        qnd("A", "B", backend, X),
    ]
    res = _run("qnd_channel", backend, {"r": r}, ops, retention)
    ch = res.certify("position", "A", "A", "B", X)
    res.figures["epsilon"] = ch.epsilon_budget
    res.figures["epsilon_exact"] = ch.epsilon
    if isinstance(backend, Fma):
        p = backend.params
        res.figures["epsilon_closed_form"] = p.beta * ((1 - p.eta) / (p.eta * p.T) + math.exp(-2 * r)) + math.exp(-2 * r)
    else:
        res.figures["epsilon_closed_form"] = math.exp(-2 * r)
    res.figures["threshold_class"] = analysis.epsilon_threshold_class(ch.epsilon_budget)
    res.checks["exact_within_budget"] = ch.epsilon <= ch.epsilon_budget + 1e-12
    return res


def ccaecc(r: float, eta: float = 1.0, retention: str = "approximate") -> ScenarioResult:
    """Coherent channel from a GHZ-type triple, two homodynes and feedforward.

    Alice mixes her input ``A`` with ``A1`` on a 50/50 beamsplitter, measures
    ``x`` of the difference port and ``p`` of the sum port, displaces ``A2``
    by ``sqrt(2)`` times each outcome and sends the ``x`` outcome to Bob, who
    displaces ``x_B`` by the same amount. ``A2`` becomes ``A'``.

    ``A'`` keeps ``x_A`` only up to tritter noise, so the channel is
    certified with approximate retention unless ``retention='exact'``.
    """
    _check_r(r)
    if not (math.isfinite(eta) and 0 < eta <= 1):
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    ops = [
        _input("A"),
        *ghz_triple("A1", "A2", "B", r),
        Beamsplitter("A", "A1", 0.5),
        # second port is -(x_A - x_A1)/sqrt(2); flip it to the difference mode
        PhaseShift("A1", math.pi),
        Homodyne("A1", X, eta, (("A2", X, SQRT2), ("B", X, SQRT2))),
        Homodyne("A", P, eta, (("A2", P, SQRT2),)),
    ]
    res = _run("ccaecc", Ideal(), {"r": r, "eta": eta}, ops, retention)
    res.symbolic.modes["A'"] = res.symbolic.modes.pop("A2")
    res.symbolic.modes["B'"] = res.symbolic.modes.pop("B")
    res.oracle = _rename(res.oracle, {"A2": "A'", "B": "B'"})
    res.observe("x_diff", {("A'", X): 1.0, ("B'", X): -1.0})
    res.observe("p_sum", {("A'", P): 1.0, ("B'", P): 1.0, (record_label("A"), P): -1.0})
    ch = res.certify("position", "A", "A'", "B'", X)
    res.figures["epsilon"] = ch.epsilon
    res.figures["epsilon_closed_form"] = 3 * math.exp(-2 * r) + 2 * (1 - eta) / eta
    res.figures["threshold_class"] = analysis.epsilon_threshold_class(ch.epsilon)
    return res


def _rename(state: GaussianState, mapping: dict[str, str]) -> GaussianState:
    modes = tuple(mapping.get(m, m) for m in state.modes)
    frozen = frozenset(mapping.get(m, m) for m in state.frozen)
    return GaussianState(modes, state.mean, state.cov, frozen)


def superdense_ops(m1: str, m2: str, m3: str, m4: str, backend: QndBackend) -> list[Op]:
    """Three QNDs turning (m1, m2) plus an EPR pair (m3, m4) into two coherent channels.

    ``m3`` is Alice's half of the pair and travels to Bob; ``m4`` is Bob's.
    The swaps of the optical layout are absorbed into the choice of QND
    control and target.
    """
    return [
        qnd(m2, m3, backend, X),
        qnd(m1, m3, backend, P),
        # pi shifts around Bob's QND turn the position copy into a subtraction
        PhaseShift(m3, math.pi),
        qnd(m3, m4, backend, X),
        PhaseShift(m3, math.pi),
        PhaseShift(m4, math.pi),
    ]


def coherent_superdense(
    pair_r: float,
    backend: QndBackend = Ideal(),
    inputs: tuple[Prepare, Prepare] | None = None,
    retention: str | None = None,
) -> ScenarioResult:
    """Coherent superdense coding: two coherent channels from one pair and one quantum channel.

    Modes 1 and 3 form a momentum channel, modes 2 and 4 a position channel.
    """
    _check_r(pair_r, "pair_r")
    ins = list(inputs) if inputs is not None else [_input("1"), _input("2")]
    ops = [*ins, *epr_pair("3", "4", pair_r), *superdense_ops("1", "2", "3", "4", backend)]
    res = _run("superdense", backend, {"pair_r": pair_r}, ops, retention)
    delta = epr_delta(pair_r)
    res.figures["delta"] = delta
    mom = res.certify("momentum", "1", "1", "3", P)
    pos = res.certify("position", "2", "2", "4", X)
    res.figures["epsilon"] = max(mom.epsilon_budget, pos.epsilon_budget)
    res.figures["epsilon_exact"] = max(mom.epsilon, pos.epsilon)
    res.figures["epsilon_bound"] = delta + 3 * _eta_F(backend)
    res.checks["within_bound"] = res.figures["epsilon_exact"] <= res.figures["epsilon_bound"] + 1e-12
    res.figures["threshold_class"] = analysis.epsilon_threshold_class(res.figures["epsilon_exact"])
    return res


def incoherent_reduction_check(
    p: float,
    x: float,
    encode_r: float,
    pair_r: float = 1.0,
    backend: QndBackend = Ideal(),
    retention: str | None = None,
) -> ScenarioResult:
    """Encode classical ``p`` and ``x`` in squeezed inputs and read them at Bob.

    Mode 1 is p-squeezed with mean momentum ``p``; mode 2 is x-squeezed with
    mean position ``x``. Bob's ``p_3'`` and ``x_4'`` should carry the two
    values with unit gain.
    """
    _check_r(encode_r, "encode_r")
    s = math.exp(-2 * encode_r)
    ins = (
        Prepare("1", SourceKind.input_signal(1 / s, s), (0.0, p), record=True, group="input:1"),
        Prepare("2", SourceKind.input_signal(s, 1 / s), (x, 0.0), record=True, group="input:2"),
    )
    res = coherent_superdense(pair_r, backend, ins, retention)
    res.protocol = "reduction_check"
    res.params.update({"p": p, "x": x, "encode_r": encode_r})
    out_p, out_x = res.outputs["3"].p, res.outputs["4"].x
    res.figures["mean_p"] = out_p.offset
    res.figures["mean_x"] = out_x.offset
    res.figures["oracle_mean_p"] = res.oracle_mean({("3", P): 1.0})
    res.figures["oracle_mean_x"] = res.oracle_mean({("4", X): 1.0})
    res.figures["mean_error"] = max(abs(out_p.offset - p), abs(out_x.offset - x))
    res.figures["var_p"] = res.observe("bob_p3", {("3", P): 1.0})
    res.figures["var_x"] = res.observe("bob_x4", {("4", X): 1.0})
    # input squeezing plus one pair correlation per quadrature
    res.figures["variance_budget"] = s + epr_delta(pair_r)
    res.figures["variance_bound"] = s + epr_delta(pair_r) + 3 * _eta_F(backend)
    return res


def coherent_teleportation(pair_r: float, backend: QndBackend = Ideal()) -> ScenarioResult:
    """Coherent teleportation of mode 1 to Bob's mode 3.

    Uses pairs (2, 3) and (4, 5). Alice flips mode 2, couples 1 into 2, and
    runs both through coherent superdense coding with pair (4, 5). Bob then
    couples his mode 5 into 3 (position) and mode 4 into 3 (momentum).
    """
    _check_r(pair_r, "pair_r")
    ops = [
        _input("1"),
        *epr_pair("2", "3", pair_r),
        *epr_pair("4", "5", pair_r),
        PhaseShift("2", math.pi),
        qnd("1", "2", backend, X),
        *superdense_ops("1", "2", "4", "5", backend),
        qnd("5", "3", backend, X),
        qnd("4", "3", backend, P),
    ]
    res = _run("teleportation", backend, {"pair_r": pair_r}, ops)
    delta = epr_delta(pair_r)
    eta_f = _eta_F(backend)
    res.figures["delta"] = delta
    res.figures["eta_F"] = eta_f

    dx = res.observe("tel_x", {("3", X): 1.0})
    dp = res.observe("tel_p", {("3", P): 1.0})
    res.observe("tel_x_added", {("3", X): 1.0, (record_label("1"), X): -1.0})
    res.observe("tel_p_added", {("3", P): 1.0, (record_label("1"), P): -1.0})
    fid = analysis.teleport_fidelity(dx, dp)
    res.fidelity = fid
    res.figures["F"] = fid.F
    res.figures["F_closed_form"] = 1.0 / (1.0 + delta)
    res.figures["F_bound"] = 1.0 / (1.0 + delta + 6 * eta_f)
    res.figures["F_margin"] = fid.F - res.figures["F_bound"]
    res.figures["threshold_class"] = fid.threshold_class
    res.checks["fidelity_bound"] = fid.F >= res.figures["F_bound"] - 1e-12

    out = res.outputs
    ent14 = analysis.duan_check(out["1"].x, out["1"].p, out["4"].x, out["4"].p, (1, -1), res.registry)
    ent25 = analysis.duan_check(out["2"].x, out["2"].p, out["5"].x, out["5"].p, (-1, 1), res.registry)
    res.entanglement = {"1'4'": ent14, "2'5'": ent25}
    res.observe("corr_x1+x4", {("1", X): 1.0, ("4", X): 1.0})
    res.observe("corr_p1-p4", {("1", P): 1.0, ("4", P): -1.0})
    res.observe("corr_x2-x5", {("2", X): 1.0, ("5", X): -1.0})
    res.observe("corr_p2+p5", {("2", P): 1.0, ("5", P): 1.0})
    bound = delta + 6 * eta_f
    res.figures["entanglement_max"] = max(ent14.x_moment, ent14.p_moment, ent25.x_moment, ent25.p_moment)
    res.figures["entanglement_bound"] = bound
    res.checks["entanglement_within_bound"] = res.figures["entanglement_max"] <= bound + 1e-12
    return res


PROTOCOLS = {
    "qnd_channel": qnd_coherent_channel,
    "ccaecc": ccaecc,
    "superdense": coherent_superdense,
    "teleportation": coherent_teleportation,
    "reduction_check": incoherent_reduction_check,
}
