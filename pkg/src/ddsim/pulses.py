"""
Pulse error model and exact rectangular-pulse propagators.

Each simulated spin carries one ``PulseErrorSample`` for the whole
sequence. The rotating-frame Hamiltonian during a pulse is constant,

    H = delta_omega * S_z + omega_1 * (n . S),

so a pulse is a single rotation about ``omega_1 * n + (0, 0, delta_omega)``.
Between pulses only the offset term survives.

All quantities are in rad/s, radians and seconds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Literal, Sequence

import numpy as np
from scipy.special import ndtri

from .su2 import Rotation, qfrom_rotvec

Axis = Literal["X", "Y"]

FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))
#: electron gyromagnetic ratio, rad/(s*T), g ~ 2 (2.8 MHz/G)
GAMMA_E = 2.0 * math.pi * 2.8e10

# number of uniform draws consumed per spin: offset, eps, n_z, m_z
DRAWS_PER_SPIN = 4


@dataclass(frozen=True)
class ErrorModelConfig:
    delta_omega_fwhm: float = 0.0
    eps0: float = 0.0
    n0: float = 0.0
    phase_error: float = 0.0
    t_pulse: float = 180e-9
    tau: float = 11e-6
    width_mode: Literal["fwhm", "sigma"] = "fwhm"

    def __post_init__(self):
        if self.eps0 < 0 or self.n0 < 0 or self.delta_omega_fwhm < 0:
            raise ValueError("error scales must be non-negative")
        if self.t_pulse <= 0 or self.tau <= 0:
            raise ValueError("t_pulse and tau must be positive")
        if self.width_mode not in ("fwhm", "sigma"):
            raise ValueError(f"unknown width_mode {self.width_mode!r}")

    @property
    def offset_sigma(self) -> float:
        if self.width_mode == "fwhm":
            return self.delta_omega_fwhm * FWHM_TO_SIGMA
        return self.delta_omega_fwhm

    @property
    def rabi(self) -> float:
        """Nominal Rabi rate giving a pi rotation in ``t_pulse``."""
        return math.pi / self.t_pulse

    def with_zero_errors(self) -> "ErrorModelConfig":
        return replace(self, delta_omega_fwhm=0.0, eps0=0.0, n0=0.0, phase_error=0.0)


def paper_config(**overrides) -> ErrorModelConfig:
    """Calibrated error scales of the Si:P ensemble experiment."""
    params = dict(
        delta_omega_fwhm=2.0 * math.pi * 140e3,
        eps0=math.radians(7.5),
        n0=math.radians(3.5),
        phase_error=0.0,
        t_pulse=180e-9,
        tau=11e-6,
    )
    params.update(overrides)
    return ErrorModelConfig(**params)


@dataclass(frozen=True)
class PulseErrorSample:
    """Systematic errors seen by one spin.

    ``eps_x`` and ``eps_y`` are the rotation-angle errors of X and Y pulses;
    the sampler draws one value and assigns it to both.
    """

    delta_omega: float = 0.0
    eps_x: float = 0.0
    eps_y: float = 0.0
    n_y: float = 0.0
    n_z: float = 0.0
    m_x: float = 0.0
    m_z: float = 0.0


@dataclass(frozen=True)
class ErrorBatch:
    """Column-wise storage of many ``PulseErrorSample`` draws."""

    delta_omega: np.ndarray
    eps_x: np.ndarray
    eps_y: np.ndarray
    n_y: np.ndarray
    n_z: np.ndarray
    m_x: np.ndarray
    m_z: np.ndarray

    def __len__(self) -> int:
        return len(self.delta_omega)

    @classmethod
    def from_samples(cls, samples: Sequence[PulseErrorSample]) -> "ErrorBatch":
        cols = {f.name: np.array([getattr(s, f.name) for s in samples], dtype=float)
                for f in fields(PulseErrorSample)}
        return cls(**cols)

    def row(self, i: int) -> PulseErrorSample:
        return PulseErrorSample(**{f.name: float(getattr(self, f.name)[i])
                                   for f in fields(PulseErrorSample)})

    def slice(self, start: int, stop: int) -> "ErrorBatch":
        return ErrorBatch(**{f.name: getattr(self, f.name)[start:stop] for f in fields(self)})


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def quadratic_profile(scale, u):
    """Map positions ``u`` in [-1, 1] to ``scale * (1 - 3 u^2)``.

    For uniform ``u`` this is the error distribution produced by a field
    with quadratic inhomogeneity over the sample, supported on
    ``[-2 scale, scale]``.
    """
    return scale * (1.0 - 3.0 * np.square(u))


def quadratic_profile_cdf(e, scale: float):
    """CDF of ``quadratic_profile(scale, U)`` with ``U ~ Uniform(-1, 1)``."""
    e = np.asarray(e, dtype=float)
    arg = np.clip((1.0 - e / scale) / 3.0, 0.0, 1.0)
    return 1.0 - np.sqrt(arg)


def quadratic_profile_pdf(e, scale: float):
    e = np.asarray(e, dtype=float)
    inside = (e > -2.0 * scale) & (e < scale)
    safe = np.where(inside, 1.0 - e / scale, 1.0)
    return np.where(inside, (0.5 / scale) / np.sqrt(3.0 * safe), 0.0)


def draw_uniforms(rng: np.random.Generator, n: int) -> np.ndarray:
    """``(n, DRAWS_PER_SPIN)`` uniforms on the open interval (0, 1).

    Row ``i`` depends only on the generator state and ``i``, not on ``n``.
    """
    k = rng.integers(0, 2**53, size=(n, DRAWS_PER_SPIN), dtype=np.int64)
    return (k + 0.5) / 2.0**53


def errors_from_uniforms(u: np.ndarray, config: ErrorModelConfig) -> ErrorBatch:
    u = np.atleast_2d(u)
    n = u.shape[0]
    offset = config.offset_sigma * ndtri(u[:, 0])
    eps = quadratic_profile(config.eps0, 2.0 * u[:, 1] - 1.0)
    n_z = quadratic_profile(config.n0, 2.0 * u[:, 2] - 1.0)
    m_z = quadratic_profile(config.n0, 2.0 * u[:, 3] - 1.0)
    return ErrorBatch(
        delta_omega=offset,
        eps_x=eps,
        eps_y=eps.copy(),
        n_y=np.zeros(n),
        n_z=n_z,
        m_x=np.full(n, config.phase_error),
        m_z=m_z,
    )


def sample_errors(config: ErrorModelConfig, rng: np.random.Generator) -> PulseErrorSample:
    """Draw the systematic errors of one spin."""
    return errors_from_uniforms(draw_uniforms(rng, 1), config).row(0)


def sample_error_batch(config: ErrorModelConfig, n: int, seed: int) -> ErrorBatch:
    """Errors for spins ``0..n-1``; spin ``i`` is identical for any ``n > i``."""
    rng = np.random.default_rng(seed)
    return errors_from_uniforms(draw_uniforms(rng, n), config)


# ---------------------------------------------------------------------------
# propagators
# ---------------------------------------------------------------------------

def pulse_rotvecs(errors: ErrorBatch, axis: Axis, config: ErrorModelConfig) -> np.ndarray:
    """Rotation vectors ``Omega * t_pulse`` of a nominal pi pulse, one row per spin."""
    if axis == "X":
        eps = errors.eps_x
        n = np.stack((np.ones_like(eps), errors.n_y, errors.n_z), axis=-1)
    elif axis == "Y":
        eps = errors.eps_y
        n = np.stack((errors.m_x, np.ones_like(eps), errors.m_z), axis=-1)
    else:
        raise ValueError(f"pulse axis must be 'X' or 'Y', got {axis!r}")
    n = n / np.linalg.norm(n, axis=-1, keepdims=True)
    omega1 = (math.pi + eps) / config.t_pulse
    omega = omega1[:, None] * n
    omega[:, 2] += errors.delta_omega
    return omega * config.t_pulse


def pulse_quaternions(errors: ErrorBatch, axis: Axis, config: ErrorModelConfig) -> np.ndarray:
    return qfrom_rotvec(pulse_rotvecs(errors, axis, config))


def free_quaternions(delta_omega: np.ndarray, duration: float) -> np.ndarray:
    phi = np.asarray(delta_omega, dtype=float) * duration
    half = 0.5 * phi
    z = np.zeros_like(phi)
    return np.stack((np.cos(half), z, z, np.sin(half)), axis=-1)


def pulse_propagator(sample: PulseErrorSample, nominal_axis: Axis,
                     config: ErrorModelConfig) -> Rotation:
    q = pulse_quaternions(ErrorBatch.from_samples([sample]), nominal_axis, config)
    return Rotation.from_array(q[0])


def free_propagator(delta_omega: float, duration: float) -> Rotation:
    if duration < 0:
        raise ValueError("duration must be non-negative")
    return Rotation.from_array(free_quaternions(np.array([delta_omega]), duration)[0])
