"""
Pulse-sequence intermediate representation and builders.

A program is a flat tuple of delays and nominal pi pulses about X or Y.
Composite Z pulses never appear as primitives: they are expanded to an X
pulse immediately followed by a Y pulse. Preparation and detection pulses
are not part of a program; simulations start from a given Bloch vector.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Union

Family = Literal["CPMG", "XYXY", "XZXZ"]
Construction = Literal["periodic", "concatenated"]

FAMILIES = ("XYXY", "XZXZ")


@dataclass(frozen=True)
class Delay:
    duration: float

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError(f"delay duration must be positive, got {self.duration}")


@dataclass(frozen=True)
class Pulse:
    axis: Literal["X", "Y"]

    def __post_init__(self):
        if self.axis not in ("X", "Y"):
            raise ValueError(f"pulse axis must be X or Y, got {self.axis!r}")


Event = Union[Delay, Pulse]
X = Pulse("X")
Y = Pulse("Y")


@dataclass(frozen=True)
class SequenceProgram:
    events: tuple[Event, ...]
    family: str = "custom"
    construction: str = "custom"
    size: int = 0
    tau: float = 0.0
    notes: tuple[str, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)


def _second_pulse(family: str) -> tuple[Pulse, ...]:
    if family == "XYXY":
        return (Y,)
    if family == "XZXZ":
        return (X, Y)
    raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")


def build_cpmg(n_echoes: int, tau: float) -> SequenceProgram:
    """``n_echoes`` repetitions of ``[tau, Y, tau]``."""
    if n_echoes < 1:
        raise ValueError("n_echoes must be >= 1")
    d = Delay(tau)
    return SequenceProgram((d, Y, d) * n_echoes, "CPMG", "periodic", n_echoes, tau)


def build_hahn(tau: float) -> SequenceProgram:
    return build_cpmg(1, tau)


def build_periodic(family: str, cycles: int, tau: float) -> SequenceProgram:
    if cycles < 1:
        raise ValueError("cycles must be >= 1")
    d = Delay(tau)
    p2 = _second_pulse(family)
    cycle = (d, X, d, *p2, d, X, d, *p2)
    return SequenceProgram(cycle * cycles, family, "periodic", cycles, tau)


def build_concatenated(family: str, level: int, tau: float) -> SequenceProgram:
    """Concatenated sequence ``C_l = C P1 C P2 C P1 C P2`` with ``C_0 = [tau]``."""
    if level < 1:
        raise ValueError("level must be >= 1")
    p2 = _second_pulse(family)
    block: tuple[Event, ...] = (Delay(tau),)
    for _ in range(level):
        block = block + (X,) + block + p2 + block + (X,) + block + p2
    return SequenceProgram(block, family, "concatenated", level, tau)


def build(family: str, construction: str, size: int, tau: float) -> SequenceProgram:
    if family.upper() == "CPMG":
        return build_cpmg(size, tau)
    if construction == "periodic":
        return build_periodic(family, size, tau)
    if construction == "concatenated":
        return build_concatenated(family, size, tau)
    raise ValueError(f"unknown construction {construction!r}")


def cancel_adjacent_identical(program: SequenceProgram) -> SequenceProgram:
    """Remove pairs of identical back-to-back pulses until none remain.

    Delays act as barriers and are never touched. A stack reduction reaches
    the same fixpoint as repeated pairwise removal.
    """
    out: list[Event] = []
    for ev in program.events:
        if isinstance(ev, Pulse) and out and out[-1] == ev:
            out.pop()
        else:
            out.append(ev)
    return SequenceProgram(
        tuple(out), program.family, program.construction, program.size, program.tau,
        program.notes + ("adjacent-cancelled",),
    )


def pulse_count(program: SequenceProgram) -> int:
    return sum(1 for ev in program.events if isinstance(ev, Pulse))


def delay_count(program: SequenceProgram) -> int:
    return sum(1 for ev in program.events if isinstance(ev, Delay))


def total_delay(program: SequenceProgram) -> float:
    return sum(ev.duration for ev in program.events if isinstance(ev, Delay))


def total_duration(program: SequenceProgram, t_pulse: float) -> float:
    return total_delay(program) + pulse_count(program) * t_pulse


def with_tau(program: SequenceProgram, tau: float) -> SequenceProgram:
    """Same program with every delay set to ``tau`` (metadata rebuilt if possible)."""
    if program.family in ("CPMG", *FAMILIES) and program.construction in ("periodic", "concatenated"):
        rebuilt = build(program.family, program.construction, program.size, tau)
        if "adjacent-cancelled" in program.notes:
            rebuilt = cancel_adjacent_identical(rebuilt)
        return rebuilt
    events = tuple(Delay(tau) if isinstance(ev, Delay) else ev for ev in program.events)
    return SequenceProgram(events, program.family, program.construction, program.size, tau,
                           program.notes)


# ---------------------------------------------------------------------------
# text format: one event per line, ``D <seconds>`` or ``P <X|Y>``
# ---------------------------------------------------------------------------

def dumps(program: SequenceProgram) -> str:
    lines = []
    for ev in program.events:
        if isinstance(ev, Delay):
            lines.append(f"D {ev.duration!r}")
        else:
            lines.append(f"P {ev.axis}")
    return "\n".join(lines) + ("\n" if lines else "")


def loads(text: str) -> SequenceProgram:
    events: list[Event] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2 or parts[0] not in ("D", "P"):
            raise ValueError(f"line {lineno}: cannot parse {raw!r}")
        events.append(Delay(float(parts[1])) if parts[0] == "D" else Pulse(parts[1]))
    return SequenceProgram(tuple(events))


def summary_line(program: SequenceProgram, t_pulse: float) -> str:
    return (f"pulses={pulse_count(program)} delays={delay_count(program)} "
            f"duration={total_duration(program, t_pulse)!r}")
