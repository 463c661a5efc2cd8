from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ddsim import sequences as seqs
from ddsim.engine import propagate
from ddsim.pulses import PulseErrorSample
from ddsim.sequences import Delay, Pulse, SequenceProgram, X, Y
from ddsim.su2 import CARDINAL_STATES, apply
from oracles import brute_force_cancel

GOLDEN = Path(__file__).parent / "golden"
TAU = 11e-6


def as_tuples(program):
    return [("D", ev.duration) if isinstance(ev, Delay) else ("P", ev.axis) for ev in program]


@pytest.mark.parametrize("family,counts", [("XYXY", (4, 20, 84, 340)), ("XZXZ", (6, 30, 126, 510))])
def test_pulse_and_delay_counts(family, counts):
    for level, n in enumerate(counts, 1):
        p = seqs.build_concatenated(family, level, TAU)
        assert seqs.pulse_count(p) == n
        assert seqs.delay_count(p) == 4 ** level
    assert seqs.pulse_count(seqs.build_periodic(family, 3, TAU)) == 3 * counts[0]
    assert seqs.delay_count(seqs.build_periodic(family, 3, TAU)) == 12


@pytest.mark.parametrize("family", seqs.FAMILIES)
def test_level_one_is_one_periodic_cycle(family):
    assert seqs.build_concatenated(family, 1, TAU).events == seqs.build_periodic(family, 1, TAU).events


@pytest.mark.parametrize("family", seqs.FAMILIES)
def test_concatenation_recursion(family):
    p2 = [("P", "Y")] if family == "XYXY" else [("P", "X"), ("P", "Y")]
    prev = [("D", TAU)]
    for level in range(1, 7):
        expect = prev + [("P", "X")] + prev + p2 + prev + [("P", "X")] + prev + p2
        assert as_tuples(seqs.build_concatenated(family, level, TAU)) == expect
        prev = expect


def test_xzxz_expands_z_into_x_then_y():
    assert seqs.build_periodic("XZXZ", 1, TAU).events == (
        Delay(TAU), X, Delay(TAU), X, Y, Delay(TAU), X, Delay(TAU), X, Y)


def test_cpmg_and_hahn():
    assert seqs.build_hahn(TAU).events == (Delay(TAU), Y, Delay(TAU))
    assert seqs.pulse_count(seqs.build_cpmg(2, TAU)) == 2
    with pytest.raises(ValueError):
        seqs.build_cpmg(0, TAU)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        Delay(0.0)
    with pytest.raises(ValueError):
        Pulse("Z")
    with pytest.raises(ValueError):
        seqs.build_concatenated("XXXX", 1, TAU)
    with pytest.raises(ValueError):
        seqs.build_concatenated("XYXY", 0, TAU)
    with pytest.raises(ValueError):
        seqs.build("XYXY", "random", 1, TAU)


# -- cancellation --------------------------------------------------------------

def test_cancel_examples():
    d = Delay(1.0)
    prog = SequenceProgram((d, Y, Y, d))
    assert seqs.cancel_adjacent_identical(prog).events == (d, d)
    prog = SequenceProgram((X, Y, Y, X))
    assert seqs.cancel_adjacent_identical(prog).events == ()
    prog = SequenceProgram((X, d, X))
    assert seqs.cancel_adjacent_identical(prog).events == (X, d, X)
    assert "adjacent-cancelled" in seqs.cancel_adjacent_identical(prog).notes


def test_cancel_on_cdd_xyxy_level_two():
    prog = seqs.build_concatenated("XYXY", 2, TAU)
    out = seqs.cancel_adjacent_identical(prog)
    assert seqs.pulse_count(out) == 16
    assert seqs.delay_count(out) == 16
    assert as_tuples(out) == brute_force_cancel(as_tuples(prog))


events = st.lists(st.sampled_from([("P", "X"), ("P", "Y"), ("D", 1.0)]), max_size=40)


def _program(tuples):
    return SequenceProgram(tuple(Delay(a) if k == "D" else Pulse(a) for k, a in tuples))


@given(events)
def test_cancel_matches_brute_force_and_is_idempotent(tuples):
    once = seqs.cancel_adjacent_identical(_program(tuples))
    assert as_tuples(once) == brute_force_cancel(tuples)
    assert seqs.cancel_adjacent_identical(once).events == once.events


@pytest.mark.parametrize("family", seqs.FAMILIES)
@pytest.mark.parametrize("level", [1, 2, 3, 4])
def test_ideal_programs_are_plus_minus_identity(family, level, ideal):
    prog = seqs.build_concatenated(family, level, TAU)
    q = propagate(prog, PulseErrorSample(), ideal).as_array()
    assert abs(abs(q[0]) - 1.0) < 1e-9
    cancelled = propagate(seqs.cancel_adjacent_identical(prog), PulseErrorSample(), ideal)
    for s in CARDINAL_STATES.values():
        assert np.allclose(apply(cancelled, s).as_array(), s.as_array(), atol=1e-9)


# -- text format ---------------------------------------------------------------

def test_golden_program():
    text = seqs.dumps(seqs.build_periodic("XYXY", 1, TAU))
    assert text == (GOLDEN / "xyxy_periodic_1.txt").read_text()


@pytest.mark.parametrize("family", seqs.FAMILIES)
def test_dumps_loads_roundtrip(family):
    prog = seqs.cancel_adjacent_identical(seqs.build_concatenated(family, 3, 7.3e-6))
    assert seqs.loads(seqs.dumps(prog)).events == prog.events
    with pytest.raises(ValueError):
        seqs.loads("P X Y\n")


def test_durations_and_summary():
    prog = seqs.build_periodic("XYXY", 1, TAU)
    assert seqs.total_delay(prog) == pytest.approx(44e-6)
    assert seqs.total_duration(prog, 180e-9) == pytest.approx(44.72e-6)
    assert seqs.summary_line(prog, 180e-9).startswith("pulses=4 delays=4 duration=")


def test_with_tau_keeps_structure():
    prog = seqs.cancel_adjacent_identical(seqs.build_concatenated("XYXY", 2, TAU))
    moved = seqs.with_tau(prog, 2e-6)
    assert seqs.pulse_count(moved) == 16
    assert seqs.total_delay(moved) == pytest.approx(16 * 2e-6)
