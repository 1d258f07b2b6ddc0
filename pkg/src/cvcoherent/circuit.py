"""Run a circuit (a list of element ops) through either engine."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from . import gaussian_oracle as go
from .elements import (
    Beamsplitter,
    FmaQnd,
    Homodyne,
    IdealQnd,
    Op,
    PhaseShift,
    Prepare,
    Squeezer,
    Swap,
    beamsplitter,
    beamsplitter_matrix,
    ideal_qnd,
    ideal_qnd_matrix,
    phase_shift,
    phase_shift_matrix,
    squeezer,
    squeezer_matrix,
)
from .fma_qnd import fma_channel, fma_map
from .quad_algebra import P, X, Mode, QuadExpr, SourceKind, SourceRegistry, linear_combine

RECORD_SUFFIX = "@in"

# observable: linear form over (mode label, axis); recorded inputs are "A@in"
Observable = Mapping[tuple[str, str], float]


def record_label(mode: str) -> str:
    return mode + RECORD_SUFFIX


@dataclass
class SymbolicRun:
    """Outcome of the symbolic engine: live modes plus recorded inputs."""

    registry: SourceRegistry = field(default_factory=SourceRegistry)
    modes: dict[str, Mode] = field(default_factory=dict)
    inputs: dict[str, Mode] = field(default_factory=dict)
    fma_groups: list[str] = field(default_factory=list)
    _counter: int = 0

    def mode(self, label: str) -> Mode:
        if label.endswith(RECORD_SUFFIX):
            return self.inputs[label[: -len(RECORD_SUFFIX)]]
        try:
            return self.modes[label]
        except KeyError:
            raise KeyError(f"no live mode {label!r}") from None

    def expr(self, observable: Observable) -> QuadExpr:
        items = list(observable.items())
        return linear_combine([self.mode(m).quad(a) for (m, a), _ in items], [c for _, c in items])

    def _fresh_group(self, prefix: str) -> str:
        self._counter += 1
        return f"{prefix}{self._counter}"


def _need(modes: Mapping[str, object], *labels: str):
    for label in labels:
        if label not in modes:
            raise KeyError(f"circuit refers to unknown mode {label!r}")


def run_symbolic(ops: Iterable[Op], run: SymbolicRun | None = None) -> SymbolicRun:
    run = run or SymbolicRun()
    reg, modes = run.registry, run.modes
    for op in ops:
        if isinstance(op, Prepare):
            if op.mode in modes:
                raise ValueError(f"mode {op.mode!r} already exists")
            sid = reg.add(op.kind, op.mode, op.group or op.mode)
            x, p = reg.quadratures(sid)
            mode = Mode(x + QuadExpr.constant(op.mean[0]), p + QuadExpr.constant(op.mean[1]))
            modes[op.mode] = mode
            if op.record:
                run.inputs[op.mode] = mode
        elif isinstance(op, Beamsplitter):
            _need(modes, op.a, op.b)
            a, b = modes[op.a], modes[op.b]
            xa, pa, xb, pb = beamsplitter(a.x, a.p, b.x, b.p, op.t)
            modes[op.a], modes[op.b] = Mode(xa, pa), Mode(xb, pb)
        elif isinstance(op, PhaseShift):
            _need(modes, op.mode)
            modes[op.mode] = Mode(*phase_shift(modes[op.mode].x, modes[op.mode].p, op.theta))
        elif isinstance(op, Squeezer):
            _need(modes, op.mode)
            modes[op.mode] = Mode(*squeezer(modes[op.mode].x, modes[op.mode].p, op.r, op.axis))
        elif isinstance(op, Swap):
            _need(modes, op.a, op.b)
            modes[op.a], modes[op.b] = modes[op.b], modes[op.a]
        elif isinstance(op, IdealQnd):
            _need(modes, op.control, op.target)
            if op.control == op.target:
                raise ValueError("QND control and target must differ")
            a, b = modes[op.control], modes[op.target]
            xa, pa, xb, pb = ideal_qnd(a.x, a.p, b.x, b.p, op.gain, op.axis)
            modes[op.control], modes[op.target] = Mode(xa, pa), Mode(xb, pb)
        elif isinstance(op, FmaQnd):
            _need(modes, op.control, op.target)
            if op.control == op.target:
                raise ValueError("QND control and target must differ")
            group = run._fresh_group("fma:")
            run.fma_groups.append(group)
            a, b = modes[op.control], modes[op.target]
            xa, pa, xb, pb = fma_map(a.x, a.p, b.x, b.p, op.params, reg, op.axis, group)
            modes[op.control], modes[op.target] = Mode(xa, pa), Mode(xb, pb)
        elif isinstance(op, Homodyne):
            _need(modes, op.mode, *(t[0] for t in op.targets))
            outcome = modes[op.mode].quad(op.axis)
            if op.eta < 1.0:
                v = reg.add(SourceKind.vacuum(), f"loss:{op.mode}", run._fresh_group("homodyne:"))
                outcome = outcome + QuadExpr.unit(v, op.axis) * -math.sqrt((1.0 - op.eta) / op.eta)
            del modes[op.mode]
            for target, axis, gain in op.targets:
                if target == op.mode:
                    raise ValueError("feedforward target cannot be the measured mode")
                m = modes[target]
                if axis == X:
                    modes[target] = Mode(m.x + outcome * gain, m.p)
                else:
                    modes[target] = Mode(m.x, m.p + outcome * gain)
        else:
            raise TypeError(f"unknown circuit op {op!r}")
    return run


def run_oracle(ops: Iterable[Op], state: go.GaussianState | None = None) -> go.GaussianState:
    state = state if state is not None else go.empty_state()
    for op in ops:
        if isinstance(op, Prepare):
            state = go.add_mode(state, op.mode, op.kind, op.mean)
            if op.record:
                state = go.freeze_copy(state, op.mode, record_label(op.mode))
        elif isinstance(op, Beamsplitter):
            state = go.apply_symplectic(state, go.SymplecticMap(beamsplitter_matrix(op.t)), [op.a, op.b])
        elif isinstance(op, PhaseShift):
            state = go.apply_symplectic(state, go.SymplecticMap(phase_shift_matrix(op.theta)), [op.mode])
        elif isinstance(op, Squeezer):
            state = go.apply_symplectic(state, go.SymplecticMap(squeezer_matrix(op.r, op.axis)), [op.mode])
        elif isinstance(op, Swap):
            modes = list(state.modes)
            i, j = modes.index(op.a), modes.index(op.b)
            modes[i], modes[j] = modes[j], modes[i]
            state = go.GaussianState(tuple(modes), state.mean, state.cov, state.frozen)
        elif isinstance(op, IdealQnd):
            if op.control == op.target:
                raise ValueError("QND control and target must differ")
            smap = go.SymplecticMap(ideal_qnd_matrix(op.gain, op.axis))
            state = go.apply_symplectic(state, smap, [op.control, op.target])
        elif isinstance(op, FmaQnd):
            transfer, noise = fma_channel(op.params, op.axis)
            state = go.apply_channel(state, [op.control, op.target], transfer, noise)
        elif isinstance(op, Homodyne):
            state = go.homodyne_feedforward(state, op.mode, op.axis, op.eta, op.targets)
        else:
            raise TypeError(f"unknown circuit op {op!r}")
    return state


def oracle_moment(state: go.GaussianState, observable: Observable) -> float:
    return go.moment_of(state, observable)


__all__ = ["P", "X", "Observable", "SymbolicRun", "oracle_moment", "record_label", "run_oracle", "run_symbolic"]
