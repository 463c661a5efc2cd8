"""
Slow magnetic-field noise and echo-decay scans.

Field noise with a 1/f^2 spectrum is generated as a (optionally leaky)
random walk. It is global: every spin in a shot sees the same trajectory.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
from scipy.signal import lfilter, periodogram

from .engine import propagate_batch
from .pulses import (
    GAMMA_E,
    ErrorBatch,
    ErrorModelConfig,
    PulseErrorSample,
    free_quaternions,
    pulse_quaternions,
    sample_error_batch,
)
from .sequences import Delay, SequenceProgram, build, total_duration
from .su2 import qmul, qnormalize, qrotate

CSV_COLUMNS = ("tau_s", "total_time_s", "mean_inphase", "sd_inphase", "mean_quadrature",
               "mean_magnitude", "n_shots")
PAPER_NOISE_AMPLITUDE = 50e-9  # T/sqrt(Hz) at 10 Hz


@dataclass(frozen=True)
class NoiseTrajectory:
    dt: float
    samples: np.ndarray  # rad/s

    @property
    def duration(self) -> float:
        return self.dt * len(self.samples)

    def value_at(self, t):
        """Sample-and-hold value at absolute time(s) ``t``."""
        k = np.clip(np.floor(np.asarray(t) / self.dt).astype(int), 0, len(self.samples) - 1)
        return self.samples[k]

    @cached_property
    def _cumulative(self) -> np.ndarray:
        return np.concatenate(([0.0], np.cumsum(self.samples) * self.dt))

    def phase_integral(self, t):
        """``int_0^t samples(s) ds`` for the piecewise-constant trajectory."""
        t = np.asarray(t, dtype=float) / self.dt
        k = np.clip(np.floor(t).astype(int), 0, len(self.samples) - 1)
        return self._cumulative[k] + (t - k) * self.dt * self.samples[k]


def step_sigma(amplitude_at_10hz: float, dt: float) -> float:
    """Random-walk step std (Tesla) giving one-sided PSD ``A^2`` at 10 Hz.

    A walk with step variance ``s^2`` per ``dt`` has one-sided PSD
    ``2 s^2 / (dt (2 pi f)^2)`` well below the sampling rate.
    """
    return amplitude_at_10hz * 2.0 * math.pi * 10.0 * math.sqrt(0.5 * dt)


def generate_noise(amplitude_at_10hz: float, duration: float, dt: float,
                   rng: np.random.Generator, low_cutoff: Optional[float] = None,
                   gamma: float = GAMMA_E) -> NoiseTrajectory:
    """Brownian field noise converted to an offset in rad/s.

    ``low_cutoff`` (Hz) turns the walk into an Ornstein-Uhlenbeck process
    whose spectrum flattens below the cutoff; ``None`` uses
    ``1 / (10 * duration)`` and ``0`` gives a pure random walk. The walk
    starts at zero.
    """
    if dt <= 0 or duration < dt:
        raise ValueError("require dt > 0 and duration >= dt")
    n = int(round(duration / dt))
    if low_cutoff is None:
        low_cutoff = 1.0 / (10.0 * duration)
    steps = step_sigma(amplitude_at_10hz, dt) * rng.standard_normal(n)
    if low_cutoff > 0:
        a = math.exp(-2.0 * math.pi * low_cutoff * dt)
        field = lfilter([1.0], [1.0, -a], steps)
    else:
        field = np.cumsum(steps)
    return NoiseTrajectory(dt, gamma * field)


def psd(trajectory: NoiseTrajectory, gamma: float = GAMMA_E):
    """One-sided periodogram of the field in T^2/Hz."""
    f, p = periodogram(trajectory.samples / gamma, fs=1.0 / trajectory.dt, detrend=False)
    return f[1:], p[1:]


def spectral_slope(trajectory: NoiseTrajectory, fmin: float, fmax: float) -> float:
    f, p = psd(trajectory)
    band = (f >= fmin) & (f <= fmax) & (p > 0)
    return float(np.polyfit(np.log(f[band]), np.log(p[band]), 1)[0])


def magnitude_detect(in_phase, quadrature):
    return np.hypot(in_phase, quadrature)


# ---------------------------------------------------------------------------
# shots
# ---------------------------------------------------------------------------

def _ideal_direction(program, config, initial):
    ideal = ErrorBatch.from_samples([PulseErrorSample()])
    return qrotate(propagate_batch(program, ideal, config)[0], initial)


def shot_signals(program: SequenceProgram, trajectory: NoiseTrajectory,
                 shot_starts: Sequence[float], errors: ErrorBatch, config: ErrorModelConfig,
                 initial=(0.0, 1.0, 0.0)) -> tuple[np.ndarray, np.ndarray]:
    """Ensemble-mean in-phase and quadrature echo per shot.

    Shots run in parallel as a batch of shape ``(n_shots, n_spins)``. A
    delay accumulates the exact integral of the piecewise-constant noise
    plus the spin's static offset; a pulse sees the noise value at its
    start. In-phase is measured along the ideal final direction of
    ``initial``, quadrature along the transverse axis perpendicular to it.
    """
    init = np.asarray(initial, dtype=float)
    starts = np.asarray(shot_starts, dtype=float)
    if np.any(starts < 0) or np.any(starts + total_duration(program, config.t_pulse)
                                    > trajectory.duration + 1e-12):
        raise ValueError("shot does not fit within the trajectory")
    n_shots, n_spins = len(starts), len(errors)
    flat = ErrorBatch(**{k: np.tile(v, n_shots) for k, v in errors.__dict__.items()})
    static = errors.delta_omega[None, :]
    q = np.zeros((n_shots * n_spins, 4))
    q[:, 0] = 1.0
    t = starts.copy()
    for ev in program.events:
        if isinstance(ev, Delay):
            phase = trajectory.phase_integral(t + ev.duration) - trajectory.phase_integral(t)
            qe = free_quaternions((static * ev.duration + phase[:, None]).ravel(), 1.0)
            t = t + ev.duration
        else:
            noise_now = np.repeat(trajectory.value_at(t), n_spins)
            shifted = replace(flat, delta_omega=flat.delta_omega + noise_now)
            qe = pulse_quaternions(shifted, ev.axis, config)
            t = t + config.t_pulse
        q = qmul(qe, q)
    final = qrotate(qnormalize(q), init).reshape(n_shots, n_spins, 3).mean(axis=1)
    e = _ideal_direction(program, config, init)
    perp = np.cross([0.0, 0.0, 1.0], e)
    nrm = np.linalg.norm(perp)
    perp = perp / nrm if nrm > 1e-12 else np.array([1.0, 0.0, 0.0])
    return final @ e, final @ perp


def shot_phase(program: SequenceProgram, trajectory: NoiseTrajectory, shot_start: float,
               sample: PulseErrorSample, config: ErrorModelConfig,
               initial=(0.0, 1.0, 0.0)) -> tuple[float, float]:
    """In-phase and quadrature components for one spin in one shot."""
    i, q = shot_signals(program, trajectory, [shot_start], ErrorBatch.from_samples([sample]),
                        config, initial)
    return float(i[0]), float(q[0])


# ---------------------------------------------------------------------------
# decay scans
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NoiseParams:
    amplitude_at_10hz: float = PAPER_NOISE_AMPLITUDE
    dt: float = 1e-6
    low_cutoff: Optional[float] = None


@dataclass(frozen=True)
class DecayRow:
    tau_s: float
    total_time_s: float
    mean_inphase: float
    sd_inphase: float
    mean_quadrature: float
    mean_magnitude: float
    n_shots: int


def decay_scan(family: str, construction: str, size: int, taus: Sequence[float],
               noise: NoiseParams, n_shots: int, config: ErrorModelConfig,
               rng: np.random.Generator, n_spins: int = 1) -> list[DecayRow]:
    """Echo amplitude versus tau at fixed pulse count.

    For each tau a fresh noise record is drawn and ``n_shots`` shots start at
    random offsets in it. Spins come from ``config`` (``n_spins`` draws with
    a seed taken from ``rng``); a zero-error config gives ideal spins.
    """
    taus = list(taus)
    if any(b <= a for a, b in zip(taus, taus[1:])):
        raise ValueError("tau values must be increasing")
    errors = sample_error_batch(config, n_spins, int(rng.integers(2**63)))
    rows = []
    for tau in taus:
        program = build(family, construction, size, tau)
        shot_len = total_duration(program, config.t_pulse)
        span = max(shot_len * n_shots, 10 * shot_len)
        traj = generate_noise(noise.amplitude_at_10hz, span + shot_len, noise.dt, rng,
                              noise.low_cutoff)
        starts = rng.uniform(0.0, traj.duration - shot_len - noise.dt, size=n_shots)
        i, q = shot_signals(program, traj, starts, errors, config)
        rows.append(DecayRow(
            tau_s=tau,
            total_time_s=shot_len,
            mean_inphase=float(np.mean(i)),
            sd_inphase=float(np.std(i, ddof=1)) if n_shots > 1 else 0.0,
            mean_quadrature=float(np.mean(q)),
            mean_magnitude=float(np.mean(magnitude_detect(i, q))),
            n_shots=n_shots,
        ))
    return rows


def rows_to_csv(rows: Sequence[DecayRow], header: str = "") -> str:
    buf = io.StringIO()
    if header:
        buf.write(header)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([repr(getattr(r, c)) if isinstance(getattr(r, c), float) else getattr(r, c)
                    for c in CSV_COLUMNS])
    return buf.getvalue()
