"""
Run configuration files.

INI syntax with fixed sections. Physical keys carry their unit in the name
(``tau_us``, ``eps0_deg`` ...). Unknown sections or keys are rejected so a
misspelled unit never falls back silently to a default.
"""
from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from .pulses import ErrorModelConfig
from .su2 import CARDINAL_STATES


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SequenceSpec:
    family: str
    construction: str
    sizes: tuple[int, ...]
    cancel_adjacent: bool = False


@dataclass(frozen=True)
class VerifyCheck:
    family: str
    direction: str
    sizes: tuple[int, ...]
    expected: float


@dataclass(frozen=True)
class NoiseBlock:
    amplitude_t_per_rthz: float = 50e-9
    dt: float = 1e-6
    low_cutoff_hz: Optional[float] = None
    n_shots: int = 200
    n_spins: int = 1
    total_times: tuple[float, ...] = (0.5e-3, 1e-3, 2e-3, 4e-3, 8e-3)
    sequences: tuple[tuple[str, str, int], ...] = (
        ("CPMG", "periodic", 1), ("XYXY", "concatenated", 2), ("XYXY", "concatenated", 4))
    pulse_errors: bool = False


@dataclass(frozen=True)
class RunConfig:
    error_model: ErrorModelConfig
    n_samples: int = 20_000
    seed: int = 0
    workers: int = 1
    sequences: tuple[SequenceSpec, ...] = ()
    initial_states: tuple[str, ...] = ("SX", "SY", "SZ")
    verify: tuple[VerifyCheck, ...] = ()
    noise: Optional[NoiseBlock] = None
    t1: Optional[float] = None
    t2: Optional[float] = None
    digest: str = ""
    source: str = ""


DEFAULT_CHECKS = (
    VerifyCheck("XYXY", "phase_error", (1, 2, 3, 4), 4.0),
    VerifyCheck("XZXZ", "eps_y", (2, 3, 4), -2.0),
    VerifyCheck("XYXY", "eps", (1, 2, 3, 4), 0.0),
    VerifyCheck("XYXY", "delta_omega", (1, 2, 3, 4), 0.0),
)

_SCHEMA = {
    "error_model": {"delta_omega_fwhm_khz", "width_mode", "eps0_deg", "n0_deg",
                    "phase_error_deg", "t_pulse_ns", "tau_us"},
    "simulation": {"n_samples", "seed", "workers"},
    "sequence": {"families", "constructions", "cycles", "levels", "initial_states",
                 "cancel_adjacent"},
    "verify": {"checks"},
    "noise": {"amplitude_nt_per_rthz", "dt_us", "low_cutoff_hz", "n_shots", "n_spins",
              "total_times_ms", "sequences", "pulse_errors"},
    "relaxation": {"t1_ms", "t2_ms"},
}


def _list(value: str) -> list[str]:
    return [v.strip() for v in value.replace("\n", ",").split(",") if v.strip()]


def _ints(value: str) -> tuple[int, ...]:
    out = []
    for item in _list(value):
        if "-" in item:
            a, b = item.split("-")
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(item))
    return tuple(out)


class _Section:
    def __init__(self, parser: configparser.ConfigParser, name: str):
        self.name = name
        self.data = parser[name] if parser.has_section(name) else {}

    def get(self, key, conv, default):
        if key not in self.data:
            return default
        raw = self.data[key]
        try:
            return conv(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[{self.name}] {key} = {raw!r}: {exc}") from None


def _bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    for sec in parser.sections():
        if sec not in _SCHEMA:
            raise ConfigError(f"{source}: unknown section [{sec}]")
        unknown = set(parser[sec]) - _SCHEMA[sec]
        if unknown:
            raise ConfigError(f"{source}: unknown key(s) in [{sec}]: {', '.join(sorted(unknown))}")

    em = _Section(parser, "error_model")
    try:
        error_model = ErrorModelConfig(
            delta_omega_fwhm=2.0 * math.pi * 1e3 * em.get("delta_omega_fwhm_khz", float, 0.0),
            width_mode=em.get("width_mode", str.strip, "fwhm"),
            eps0=math.radians(em.get("eps0_deg", float, 0.0)),
            n0=math.radians(em.get("n0_deg", float, 0.0)),
            phase_error=math.radians(em.get("phase_error_deg", float, 0.0)),
            t_pulse=1e-9 * em.get("t_pulse_ns", float, 180.0),
            tau=1e-6 * em.get("tau_us", float, 11.0),
        )
    except ValueError as exc:
        raise ConfigError(f"{source}: [error_model] {exc}") from None

    sim = _Section(parser, "simulation")
    n_samples = sim.get("n_samples", int, 20_000)
    if n_samples < 1:
        raise ConfigError(f"{source}: [simulation] n_samples must be >= 1")

    seq = _Section(parser, "sequence")
    families = seq.get("families", _list, ["XZXZ", "XYXY"])
    constructions = seq.get("constructions", _list, ["periodic", "concatenated"])
    cycles = seq.get("cycles", _ints, (1, 2, 3, 4))
    levels = seq.get("levels", _ints, (1, 2, 3, 4))
    cancel = seq.get("cancel_adjacent", _bool, False)
    states = tuple(seq.get("initial_states", _list, ["SX", "SY", "SZ"]))
    for s in states:
        if s not in CARDINAL_STATES:
            raise ConfigError(f"{source}: [sequence] unknown initial state {s!r}")
    specs = []
    for fam in families:
        if fam not in ("XYXY", "XZXZ", "CPMG"):
            raise ConfigError(f"{source}: [sequence] unknown family {fam!r}")
        for con in constructions:
            if con not in ("periodic", "concatenated"):
                raise ConfigError(f"{source}: [sequence] unknown construction {con!r}")
            if fam == "CPMG" and con == "concatenated":
                continue
            specs.append(SequenceSpec(fam, con, cycles if con == "periodic" else levels))
        if cancel and fam == "XYXY" and "concatenated" in constructions:
            specs.append(SequenceSpec(fam, "concatenated", levels, cancel_adjacent=True))

    ver = _Section(parser, "verify")
    checks = ver.get("checks", _parse_checks, DEFAULT_CHECKS)

    noise = None
    if parser.has_section("noise"):
        nz = _Section(parser, "noise")
        noise = NoiseBlock(
            amplitude_t_per_rthz=1e-9 * nz.get("amplitude_nt_per_rthz", float, 50.0),
            dt=1e-6 * nz.get("dt_us", float, 1.0),
            low_cutoff_hz=nz.get("low_cutoff_hz", float, None),
            n_shots=nz.get("n_shots", int, 200),
            n_spins=nz.get("n_spins", int, 1),
            total_times=tuple(1e-3 * float(v) for v in nz.get("total_times_ms", _list,
                                                              ["0.5", "1", "2", "4", "8"])),
            sequences=nz.get("sequences", _parse_seq_triples, NoiseBlock.sequences),
            pulse_errors=nz.get("pulse_errors", _bool, False),
        )

    t1 = t2 = None
    if parser.has_section("relaxation"):
        rx = _Section(parser, "relaxation")
        t1 = 1e-3 * rx.get("t1_ms", float, 0.0)
        t2 = 1e-3 * rx.get("t2_ms", float, 0.0)
        if not (t1 >= t2 > 0):
            raise ConfigError(f"{source}: [relaxation] require t1_ms >= t2_ms > 0")

    return RunConfig(
        error_model=error_model,
        n_samples=n_samples,
        seed=sim.get("seed", int, 0),
        workers=sim.get("workers", int, 1),
        sequences=tuple(specs),
        initial_states=states,
        verify=tuple(checks),
        noise=noise,
        t1=t1,
        t2=t2,
        digest=hashlib.sha256(text.encode()).hexdigest()[:16],
        source=source,
    )


def _parse_seq_triples(value: str) -> tuple[tuple[str, str, int], ...]:
    out = []
    for item in _list(value):
        fam, con, size = item.split(":")
        out.append((fam.strip(), con.strip(), int(size)))
    return tuple(out)


def _parse_checks(value: str) -> tuple[VerifyCheck, ...]:
    """Items ``FAMILY:direction:sizes:expected`` with sizes like ``1-4``."""
    out = []
    for item in _list(value.replace(";", "\n")):
        fam, direction, sizes, expected = item.split(":")
        out.append(VerifyCheck(fam.strip(), direction.strip(), _ints(sizes.replace(" ", ",")),
                               float(expected)))
    return tuple(out)


def preset_text(name: str) -> str:
    return resources.files("ddsim").joinpath("presets", name).read_text()


def load_config(path: str) -> RunConfig:
    """Read a config file; bare preset names (``paper.config``) fall back to the bundled copy."""
    p = Path(path)
    if p.exists():
        text = p.read_text()
    else:
        try:
            text = preset_text(p.name)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
    return parse_config(text, source=str(path))
