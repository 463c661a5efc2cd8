"""
Exact propagation of pulse programs over spin ensembles.

Every spin's propagator is a product of constant-Hamiltonian rotations, so
it is folded exactly in quaternion form. Ensembles are processed as arrays
of shape ``(n_spins, 4)``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .pulses import (
    ErrorBatch,
    ErrorModelConfig,
    PulseErrorSample,
    free_quaternions,
    pulse_quaternions,
    sample_error_batch,
)
from .sequences import Delay, Pulse, SequenceProgram, build_cpmg, build
from .su2 import (
    AngleAxis,
    BlochVector,
    InvalidArgument,
    Rotation,
    qconj,
    qmul,
    qnormalize,
    qrotate,
)

DEFAULT_SAMPLES = 20_000
REFERENCE_FLOOR = 0.1

#: Net rotation of one ideal cycle. A 2*pi rotation is -1 whatever its axis
#: orientation; these orientations make positive phase errors (XYXY) and
#: negative Y-pulse angle errors (XZXZ) read as positive deviations.
NET_AXIS = {
    "XYXY": AngleAxis(2.0 * math.pi, (0.0, 0.0, -1.0)),
    "XZXZ": AngleAxis(2.0 * math.pi, (0.0, -1.0, 0.0)),
}


class NormalizationError(RuntimeError):
    """The CPMG reference echo collapsed; fidelities cannot be normalized."""


class NonlinearRegime(RuntimeError):
    """First-order fit residual too large at the probed magnitudes."""


# ---------------------------------------------------------------------------
# propagation
# ---------------------------------------------------------------------------

def _event_table(program: SequenceProgram, errors: ErrorBatch, config: ErrorModelConfig):
    table = {}
    for ev in program.events:
        if ev in table:
            continue
        if isinstance(ev, Pulse):
            table[ev] = pulse_quaternions(errors, ev.axis, config)
        else:
            table[ev] = free_quaternions(errors.delta_omega, ev.duration)
    return table


def propagate_batch(program: SequenceProgram, errors: ErrorBatch,
                    config: ErrorModelConfig) -> np.ndarray:
    """Net quaternions, one row per spin."""
    n = len(errors)
    q = np.zeros((n, 4))
    q[:, 0] = 1.0
    table = _event_table(program, errors, config)
    for ev in program.events:
        q = qmul(table[ev], q)
    return qnormalize(q)


def evolve_batch(program: SequenceProgram, errors: ErrorBatch, config: ErrorModelConfig,
                 initial: np.ndarray) -> np.ndarray:
    return qrotate(propagate_batch(program, errors, config), np.asarray(initial, dtype=float))


def propagate(program: SequenceProgram, sample: PulseErrorSample,
              config: ErrorModelConfig) -> Rotation:
    q = propagate_batch(program, ErrorBatch.from_samples([sample]), config)
    return Rotation.from_array(q[0])


def evolve_state(program: SequenceProgram, sample: PulseErrorSample, config: ErrorModelConfig,
                 initial: BlochVector, trajectory: bool = False):
    """Final Bloch vector; with ``trajectory=True`` also the state after every event.

    The trajectory is an array of shape ``(len(program) + 1, 3)`` whose first
    row is ``initial``.
    """
    errors = ErrorBatch.from_samples([sample])
    table = _event_table(program, errors, config)
    v = initial.as_array()
    path = [v]
    for ev in program.events:
        v = qrotate(table[ev][0], v)
        path.append(v)
    final = BlochVector.from_array(v)
    if trajectory:
        return final, np.array(path)
    return final


# ---------------------------------------------------------------------------
# ensemble fidelity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnsembleResult:
    """Ensemble-averaged recovery of one initial state.

    ``raw_signal`` is the mean projection ``initial . final``;
    ``normalized_fidelity`` divides it by ``reference``, the same average
    for ``S_Y`` through a two-echo CPMG train on the same spins.
    """

    raw_signal: float
    normalized_fidelity: float
    std_error: float
    n_samples: int
    seed: int
    reference: float

    @property
    def overlap_probability(self) -> float:
        return 0.5 * (1.0 + self.normalized_fidelity)


def _projections(program, errors, config, initial, workers):
    if workers <= 1 or len(errors) < 2 * workers:
        return evolve_batch(program, errors, config, initial) @ initial
    bounds = np.linspace(0, len(errors), workers + 1).astype(int)
    chunks = [errors.slice(a, b) for a, b in zip(bounds[:-1], bounds[1:])]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda e: evolve_batch(program, e, config, initial) @ initial, chunks))
    return np.concatenate(parts)


def _ordered_mean(x: np.ndarray) -> float:
    return math.fsum(x.tolist()) / len(x)


@lru_cache(maxsize=64)
def _cpmg_reference(config: ErrorModelConfig, n_samples: int, seed: int) -> float:
    errors = sample_error_batch(config, n_samples, seed)
    sy = np.array([0.0, 1.0, 0.0])
    signal = evolve_batch(build_cpmg(2, config.tau), errors, config, sy) @ sy
    return _ordered_mean(signal)


def cpmg_reference(config: ErrorModelConfig, n_samples: int = DEFAULT_SAMPLES,
                   seed: int = 0) -> float:
    return _cpmg_reference(config, int(n_samples), int(seed))


def ensemble_fidelity(program: SequenceProgram, config: ErrorModelConfig, initial: BlochVector,
                      n_samples: int = DEFAULT_SAMPLES, seed: int = 0,
                      workers: int = 1) -> EnsembleResult:
    if n_samples < 1:
        raise InvalidArgument("n_samples must be >= 1")
    if abs(initial.norm() - 1.0) > 1e-9:
        raise InvalidArgument("initial state must be a unit Bloch vector")
    errors = sample_error_batch(config, n_samples, seed)
    init = initial.as_array()
    signal = _projections(program, errors, config, init, workers)
    raw = _ordered_mean(signal)
    ref = cpmg_reference(config, n_samples, seed)
    if ref <= REFERENCE_FLOOR:
        raise NormalizationError(f"CPMG reference signal {ref:.3g} <= {REFERENCE_FLOOR}")
    sd = float(np.std(signal, ddof=1)) if n_samples > 1 else 0.0
    return EnsembleResult(
        raw_signal=raw,
        normalized_fidelity=raw / ref,
        std_error=sd / math.sqrt(n_samples) / ref,
        n_samples=n_samples,
        seed=seed,
        reference=ref,
    )


# ---------------------------------------------------------------------------
# net rotation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NetRotationStats:
    mean_delta_phi: float
    axis_mean: tuple[float, float, float]
    axis_dispersion: float
    n_used: int
    n_excluded: int


def relative_angles(q: np.ndarray, reference: AngleAxis) -> np.ndarray:
    """Batched signed deviations from ``reference``; NaN beyond pi/2."""
    if reference.axis is None:
        raise InvalidArgument("reference axis must be defined")
    ax = np.asarray(reference.axis, dtype=float)
    half = 0.5 * reference.angle
    ref = np.concatenate(([math.cos(half)], math.sin(half) * ax))
    res = qmul(q, qconj(ref))
    res = np.where(res[..., :1] < 0, -res, res)
    angle = 2.0 * np.arctan2(np.linalg.norm(res[..., 1:], axis=-1), res[..., 0])
    sign = np.where(res[..., 1:] @ ax >= 0, 1.0, -1.0)
    return np.where(angle > 0.5 * math.pi, np.nan, sign * angle)


def _rotation_stats(q: np.ndarray, reference: AngleAxis) -> NetRotationStats:
    dphi = relative_angles(q, reference)
    ok = ~np.isnan(dphi)
    ref_axis = np.asarray(reference.axis, dtype=float)
    v = q[ok, 1:]
    vn = np.linalg.norm(v, axis=-1)
    defined = vn > 1e-12
    axes = v[defined] / vn[defined, None]
    axes = np.where((axes @ ref_axis)[:, None] < 0, -axes, axes)
    if len(axes):
        m = axes.mean(axis=0)
        axis_mean = m / np.linalg.norm(m)
        cosines = np.clip(axes @ axis_mean, -1.0, 1.0)
        dispersion = float(np.sqrt(np.mean(np.arccos(cosines) ** 2)))
    else:
        axis_mean, dispersion = ref_axis, 0.0
    used = dphi[ok]
    return NetRotationStats(
        mean_delta_phi=_ordered_mean(used) if len(used) else float("nan"),
        axis_mean=tuple(float(a) for a in axis_mean),
        axis_dispersion=dispersion,
        n_used=int(ok.sum()),
        n_excluded=int((~ok).sum()),
    )


def net_rotation_stats(program: SequenceProgram, config: ErrorModelConfig, n_samples: int,
                       seed: int, reference: AngleAxis,
                       errors: Optional[ErrorBatch] = None) -> NetRotationStats:
    """Statistics of the per-spin deviation from ``reference``.

    Spins outside the small-angle regime are excluded and counted in
    ``n_excluded``. Passing ``errors`` bypasses sampling.
    """
    if errors is None:
        errors = sample_error_batch(config, n_samples, seed)
    return _rotation_stats(propagate_batch(program, errors, config), reference)


# ---------------------------------------------------------------------------
# first-order formulas
# ---------------------------------------------------------------------------

def first_order_phi_xy(n_y: float, m_x: float) -> float:
    return 2.0 * math.pi + 4.0 * (n_y + m_x)


def first_order_phi_xz(n_z: float, eps_x: float, eps_y: float, delta_omega: float,
                       tau: float) -> float:
    phase = delta_omega * tau
    return (2.0 * math.pi + 4.0 * n_z * (1.0 - math.cos(phase))
            - 2.0 * eps_y + 2.0 * eps_x * math.sin(phase))


#: error directions for ``verify_first_order``; ``delta_omega`` is probed
#: through the dimensionless per-delay phase ``delta_omega * tau``.
DIRECTIONS = ("phase_error", "n_y", "m_x", "n_z", "m_z", "eps", "eps_x", "eps_y", "delta_omega")
DEFAULT_MAGNITUDES = (1e-4, 3e-4, 1e-3, 3e-3)


def perturb(sample: PulseErrorSample, direction: str, magnitude: float,
            tau: float) -> PulseErrorSample:
    if direction == "phase_error":
        return replace(sample, m_x=sample.m_x + magnitude)
    if direction == "eps":
        return replace(sample, eps_x=sample.eps_x + magnitude, eps_y=sample.eps_y + magnitude)
    if direction == "delta_omega":
        return replace(sample, delta_omega=sample.delta_omega + magnitude / tau)
    if direction in ("n_y", "m_x", "n_z", "m_z", "eps_x", "eps_y"):
        return replace(sample, **{direction: getattr(sample, direction) + magnitude})
    raise ValueError(f"unknown error direction {direction!r}; expected one of {DIRECTIONS}")


@dataclass(frozen=True)
class FirstOrderFit:
    slope: float
    ols_slope: float
    residual: float
    residual_exponent: float
    magnitudes: tuple[float, ...]
    deltas: tuple[float, ...]

    @property
    def quadratic_residual(self) -> bool:
        """Residuals shrink at least quadratically, or sit at round-off."""
        return self.residual < 1e-11 or self.residual_exponent >= 1.8


def verify_first_order(family: str, size: int, direction: str, config: ErrorModelConfig,
                       magnitudes: Sequence[float] = DEFAULT_MAGNITUDES,
                       construction: str = "concatenated",
                       baseline: Optional[PulseErrorSample] = None) -> FirstOrderFit:
    """Fit the linear response of the net-rotation deviation to one error.

    For each magnitude a single deterministic spin is built from
    ``baseline`` (all-zero by default) with only ``direction`` perturbed;
    its deviation from the family's ideal net rotation, minus the
    baseline's, is fitted by a cubic through the origin. ``slope`` is the
    linear coefficient of that fit and ``ols_slope`` the plain straight-line
    fit; both agree when the response is linear. The remainder after
    removing the linear term must fall off at least quadratically.

    Raises
    ------
    NonlinearRegime
        If the residual at the largest magnitude exceeds 10% of the linear
        term (taken as at least ``magnitude`` so zero slopes are testable).
    """
    mags = np.asarray(sorted(magnitudes), dtype=float)
    if len(mags) < 3 or mags[0] <= 0 or mags[-1] > 1e-2:
        raise InvalidArgument("need >= 3 magnitudes in (0, 1e-2]")
    baseline = baseline or PulseErrorSample()
    program = build(family, construction, size, config.tau)
    reference = NET_AXIS[family]
    samples = [baseline] + [perturb(baseline, direction, m, config.tau) for m in mags]
    q = propagate_batch(program, ErrorBatch.from_samples(samples), config)
    dphi = relative_angles(q, reference)
    if np.isnan(dphi).any():
        raise NonlinearRegime("net rotation outside the small-angle regime")
    deltas = dphi[1:] - dphi[0]
    ols = float(mags @ deltas / (mags @ mags))
    design = np.stack((mags, mags**2, mags**3), axis=1)
    slope = float(np.linalg.lstsq(design, deltas, rcond=None)[0][0])
    resid = np.abs(deltas - slope * mags)
    if np.all(resid > 1e-15):
        exponent = float(np.polyfit(np.log(mags), np.log(resid), 1)[0])
    else:
        exponent = float("inf")
    if resid[-1] > 0.1 * max(abs(slope), 1.0) * mags[-1]:
        raise NonlinearRegime(
            f"residual {resid[-1]:.3g} at magnitude {mags[-1]:.3g} (slope {slope:.4g})")
    return FirstOrderFit(slope, ols, float(resid.max()), exponent,
                         tuple(float(m) for m in mags), tuple(float(d) for d in deltas))


# ---------------------------------------------------------------------------
# phenomenological relaxation
# ---------------------------------------------------------------------------

def relax_batch(program: SequenceProgram, errors: ErrorBatch, config: ErrorModelConfig,
                initial: np.ndarray, t1: float, t2: float) -> np.ndarray:
    """Final Bloch vectors with T1/T2 damping during delays.

    Equilibrium polarization is zero; pulses are instantaneous for relaxation.
    """
    if not (t1 >= t2 > 0):
        raise InvalidArgument("require t1 >= t2 > 0")
    table = _event_table(program, errors, config)
    v = np.tile(np.asarray(initial, dtype=float), (len(errors), 1))
    for ev in program.events:
        v = qrotate(table[ev], v)
        if isinstance(ev, Delay):
            v = v * np.array([math.exp(-ev.duration / t2)] * 2 + [math.exp(-ev.duration / t1)])
    return v


def evolve_with_relaxation(program: SequenceProgram, sample: PulseErrorSample,
                           config: ErrorModelConfig, initial: BlochVector, t1: float,
                           t2: float) -> BlochVector:
    v = relax_batch(program, ErrorBatch.from_samples([sample]), config, initial.as_array(), t1, t2)
    return BlochVector.from_array(v[0])


@dataclass(frozen=True)
class DecayFit:
    decay_time: float
    total_times: tuple[float, ...]
    attenuation: tuple[float, ...]


def apparent_decay_time(family: str, construction: str, size: int, config: ErrorModelConfig,
                        taus: Sequence[float], t1: float, t2: float, initial: BlochVector,
                        n_samples: int = 2000, seed: int = 0) -> DecayFit:
    """Exponential decay constant of an echo train scanned over ``tau``.

    The pulse count is fixed while ``tau`` grows. At each ``tau`` the ensemble
    signal with relaxation is divided by the same signal without relaxation,
    which removes the tau-dependent pulse-error loss and leaves the
    relaxation attenuation; ``log(attenuation)`` is then fitted linearly
    against total delay time through the origin.
    """
    errors = sample_error_batch(config, n_samples, seed)
    init = initial.as_array()
    times, atten = [], []
    for tau in taus:
        cfg = replace(config, tau=tau)
        program = build(family, construction, size, tau)
        with_relax = relax_batch(program, errors, cfg, init, t1, t2) @ init
        without = evolve_batch(program, errors, cfg, init) @ init
        times.append(sum(ev.duration for ev in program.events if isinstance(ev, Delay)))
        atten.append(_ordered_mean(with_relax) / _ordered_mean(without))
    t = np.asarray(times)
    y = np.log(np.asarray(atten))
    rate = -float(t @ y / (t @ t))
    return DecayFit(1.0 / rate, tuple(times), tuple(atten))
