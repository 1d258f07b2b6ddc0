import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvcoherent import gaussian_oracle as go
from cvcoherent.circuit import run_oracle, run_symbolic
from cvcoherent.elements import (
    Beamsplitter,
    IdealQnd,
    PhaseShift,
    Prepare,
    Squeezer,
    beamsplitter,
    epr_delta,
    epr_pair,
    ghz_triple,
    ideal_qnd,
    ideal_qnd_matrix,
    is_entangled_pair,
    phase_shift,
    phase_shift_matrix,
    squeezer_matrix,
)
from cvcoherent.quad_algebra import P, X, QuadExpr, SourceKind, SourceRegistry, commutator, second_moment


def _pair(reg=None):
    reg = reg or SourceRegistry()
    a = reg.add(SourceKind.vacuum(), "a")
    b = reg.add(SourceKind.vacuum(), "b")
    return reg, (*reg.quadratures(a), *reg.quadratures(b))


# -- QND ---------------------------------------------------------------------


@pytest.mark.parametrize("axis", [X, P])
def test_qnd_zero_gain_is_identity(axis):
    _, q = _pair()
    assert ideal_qnd(*q, 0.0, axis) == q


def test_qnd_on_squeezed_ancilla_matches_closed_form():
    r = 0.9
    reg = SourceRegistry()
    a = reg.add(SourceKind.input_signal(), "A")
    b = reg.add(SourceKind.vacuum(), "B0")
    xa, pa = reg.quadratures(a)
    # the ancilla written as e^{-r} x_B0, e^{r} p_B0 of a vacuum source
    xb, pb = QuadExpr.unit(b, X) * math.exp(-r), QuadExpr.unit(b, P) * math.exp(r)
    out = ideal_qnd(xa, pa, xb, pb, 1.0, X)
    assert out[0] == xa
    assert out[1].is_close(QuadExpr.from_mapping({(a, P): 1.0, (b, P): -math.exp(r)}))
    assert out[2].is_close(QuadExpr.from_mapping({(b, X): math.exp(-r), (a, X): 1.0}))
    assert out[3].is_close(QuadExpr.from_mapping({(b, P): math.exp(r)}))


@pytest.mark.parametrize("axis", [X, P])
@pytest.mark.parametrize("g", [1.0, -0.4, 2.5])
def test_qnd_outputs_canonical(axis, g):
    _, q = _pair()
    xa, pa, xb, pb = ideal_qnd(*q, g, axis)
    assert commutator(xa, pa) == pytest.approx(1j, abs=1e-12)
    assert commutator(xb, pb) == pytest.approx(1j, abs=1e-12)
    assert commutator(xa, pb) == pytest.approx(0, abs=1e-12)
    assert commutator(xb, pa) == pytest.approx(0, abs=1e-12)


def test_qnd_momentum_copy():
    _, (xa, pa, xb, pb) = _pair()
    out = ideal_qnd(xa, pa, xb, pb, 1.0, P)
    assert out[1] == pa and out[2] == xb
    assert out[3].is_close(pb + pa)
    assert out[0].is_close(xa - xb)


def test_qnd_same_mode_rejected():
    _, (xa, pa, _, _) = _pair()
    with pytest.raises(ValueError):
        ideal_qnd(xa, pa, xa, pa)


# -- beamsplitter / phase ----------------------------------------------------


def test_beamsplitter_full_transmission_is_identity():
    _, q = _pair()
    assert all(o.is_close(i) for o, i in zip(beamsplitter(*q, 1.0), q))


def test_balanced_beamsplitter_gives_sum_and_difference_ports():
    _, (xa, pa, xb, pb) = _pair()
    x1, p1, x2, p2 = beamsplitter(xa, pa, xb, pb, 0.5)
    s = 1 / math.sqrt(2)
    assert x1.is_close(QuadExpr.from_mapping({(0, X): s, (1, X): s}))
    assert x2.is_close(QuadExpr.from_mapping({(0, X): -s, (1, X): s}))
    assert p1.is_close(QuadExpr.from_mapping({(0, P): s, (1, P): s}))


def test_beamsplitter_keeps_vacuum_moments():
    reg, q = _pair()
    assert [second_moment(e, reg) for e in beamsplitter(*q, 0.3)] == pytest.approx([1, 1, 1, 1])


@pytest.mark.parametrize("t", [-0.1, 1.5])
def test_beamsplitter_range(t):
    _, q = _pair()
    with pytest.raises(ValueError):
        beamsplitter(*q, t)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1, allow_nan=False))
def test_beamsplitter_inverse_composition(t):
    _, (xa, pa, xb, pb) = _pair()
    x1, p1, x2, p2 = beamsplitter(xa, pa, xb, pb, t)
    # the same splitter with the ports exchanged undoes it
    y2, q2, y1, q1 = beamsplitter(x2, p2, x1, p1, t)
    assert y1.is_close(xa, 1e-12) and q1.is_close(pa, 1e-12)
    assert y2.is_close(xb, 1e-12) and q2.is_close(pb, 1e-12)


def test_pi_shift_reflects_both_quadratures():
    _, (x, p, _, _) = _pair()
    xo, po = phase_shift(x, p, math.pi)
    assert xo == -x and po == -p


@settings(max_examples=100, deadline=None)
@given(st.floats(-10, 10, allow_nan=False))
def test_pi_shift_is_an_involution_and_rotations_compose(theta):
    _, (x, p, _, _) = _pair()
    assert phase_shift(*phase_shift(x, p, math.pi), math.pi) == (x, p)
    xr, pr = phase_shift(*phase_shift(x, p, theta), -theta)
    assert xr.is_close(x, 1e-12) and pr.is_close(p, 1e-12)


# -- symbolic vs matrix ------------------------------------------------------

kinds = st.one_of(
    st.just(SourceKind.vacuum()),
    st.floats(0, 1.5).map(SourceKind.squeezed_x),
    st.floats(0, 1.5).map(SourceKind.squeezed_p),
    st.tuples(st.floats(1, 3), st.floats(1, 3)).map(lambda v: SourceKind.input_signal(*v)),
)


@st.composite
def element_ops(draw):
    modes = ["a", "b", "c"]
    op = draw(st.sampled_from(["bs", "ps", "sq", "qnd"]))
    i, j = draw(st.permutations(modes))[:2]
    if op == "bs":
        return Beamsplitter(i, j, draw(st.floats(0, 1)))
    if op == "ps":
        return PhaseShift(i, draw(st.floats(-math.pi, math.pi)))
    if op == "sq":
        return Squeezer(i, draw(st.floats(0, 1)), draw(st.sampled_from([X, P])))
    return IdealQnd(i, j, draw(st.floats(-2, 2)), draw(st.sampled_from([X, P])))


@settings(max_examples=150, deadline=None)
@given(st.lists(kinds, min_size=3, max_size=3), st.lists(element_ops(), min_size=1, max_size=6))
def test_symbolic_rewrites_match_matrices(ks, ops):
    circuit = [Prepare(m, k) for m, k in zip("abc", ks)] + ops
    sym, state = run_symbolic(circuit), run_oracle(circuit)
    for m in "abc":
        for n in "abc":
            for qa in (X, P):
                for qb in (X, P):
                    obs = {(m, qa): 1.0}
                    obs[(n, qb)] = obs.get((n, qb), 0.0) + 1.0
                    assert second_moment(sym.expr(obs), sym.registry) == pytest.approx(
                        go.moment_of(state, obs), rel=1e-9, abs=1e-9
                    )


@settings(max_examples=100, deadline=None)
@given(st.lists(kinds, min_size=3, max_size=3), st.lists(element_ops(), min_size=1, max_size=6))
def test_passive_elements_preserve_total_moment(ks, ops):
    passive = [o for o in ops if isinstance(o, (Beamsplitter, PhaseShift))]
    circuit = [Prepare(m, k) for m, k in zip("abc", ks)]
    before = run_symbolic(circuit)
    after = run_symbolic(circuit + passive)

    def total(run):
        return sum(second_moment(run.modes[m].quad(a), run.registry) for m in "abc" for a in (X, P))

    assert total(after) == pytest.approx(total(before), rel=1e-10)


@pytest.mark.parametrize(
    "matrix",
    [
        ideal_qnd_matrix(1.0, X),
        ideal_qnd_matrix(-0.7, P),
        go.beamsplitter_matrix(0.2),
        phase_shift_matrix(1.1),
        squeezer_matrix(0.8, X),
        squeezer_matrix(0.8, P),
    ],
)
def test_element_matrices_are_symplectic(matrix):
    assert go.is_symplectic(matrix)


# -- entangled resources -----------------------------------------------------


@pytest.mark.parametrize(
    "r, delta, entangled",
    [(0.0, 2.0, False), (math.log(2) / 2, 1.0, False), (1.0, 2 * math.exp(-2), True)],
)
def test_epr_delta(r, delta, entangled):
    assert epr_delta(r) == pytest.approx(delta, abs=1e-15)
    assert is_entangled_pair(epr_delta(r)) is entangled


def test_epr_pair_moments_match_delta():
    run = run_symbolic(epr_pair("a", "b", 1.0))
    a, b = run.modes["a"], run.modes["b"]
    assert second_moment(a.x - b.x, run.registry) == pytest.approx(epr_delta(1.0), abs=1e-15)
    assert second_moment(a.p + b.p, run.registry) == pytest.approx(epr_delta(1.0), abs=1e-15)


def test_negative_squeezing_rejected():
    with pytest.raises(ValueError):
        epr_pair("a", "b", -1.0)
    with pytest.raises(ValueError):
        ghz_triple("a", "b", "c", -0.5)


@pytest.mark.parametrize("r", [0.0, 0.5, 1.0, 2.0])
def test_ghz_correlations_hold_verbatim(r):
    run = run_symbolic(ghz_triple("A1", "A2", "B", r))
    reg = run.registry
    # sources in allocation order: P-squeezed first mode, then the two X-squeezed ones
    s1, s2, s3 = (s.index for s in reg)
    assert reg[s1].kind == SourceKind.squeezed_p(r)
    a1, a2, b = run.modes["A1"], run.modes["A2"], run.modes["B"]
    # unit source quadratures already carry the e^{-r} squeezing
    line1 = QuadExpr.from_mapping({(s2, X): math.sqrt(1.5), (s3, X): -math.sqrt(0.5)})
    line2 = QuadExpr.from_mapping({(s3, X): math.sqrt(2)})
    line3 = QuadExpr.from_mapping({(s1, P): math.sqrt(3)})
    assert (a1.x - a2.x).is_close(line1, 1e-12)
    assert (a2.x - b.x).is_close(line2, 1e-12)
    assert (a1.p + a2.p + b.p).is_close(line3, 1e-12)


def test_ghz_examples():
    run0 = run_symbolic(ghz_triple("A1", "A2", "B", 0.0))
    m = run0.modes
    assert second_moment(m["A1"].p + m["A2"].p + m["B"].p, run0.registry) == pytest.approx(3.0)
    run1 = run_symbolic(ghz_triple("A1", "A2", "B", 1.0))
    m = run1.modes
    assert second_moment(m["A2"].x - m["B"].x, run1.registry) == pytest.approx(2 * math.exp(-2))


def test_ghz_outputs_canonical():
    run = run_symbolic(ghz_triple("A1", "A2", "B", 0.7))
    ms = run.modes
    for m in ms.values():
        assert m.commutator() == pytest.approx(1j, abs=1e-12)
    assert commutator(ms["A1"].x, ms["B"].p) == pytest.approx(0, abs=1e-12)
