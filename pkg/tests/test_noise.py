import csv
import io
import math

import numpy as np
import pytest

from ddsim import sequences as seqs
from ddsim.noise import (
    CSV_COLUMNS,
    NoiseParams,
    NoiseTrajectory,
    decay_scan,
    generate_noise,
    magnitude_detect,
    psd,
    rows_to_csv,
    shot_phase,
    shot_signals,
    spectral_slope,
)
from ddsim.pulses import GAMMA_E, PulseErrorSample, paper_config, sample_error_batch

A = 50e-9


def test_zero_amplitude_is_silent():
    traj = generate_noise(0.0, 1e-2, 1e-6, np.random.default_rng(0))
    assert not traj.samples.any()


def test_spectrum_slope_and_level():
    rng = np.random.default_rng(1)
    traj = generate_noise(A, 20.0, 1e-3, rng, low_cutoff=0.0)
    assert spectral_slope(traj, 1.0, 100.0) == pytest.approx(-2.0, abs=0.3)
    # stationary walk (corner at 0.1 Hz) avoids end-point leakage in the level
    traj = generate_noise(A, 20.0, 1e-3, rng, low_cutoff=0.1)
    f, p = psd(traj)
    band = (f > 5) & (f < 20)
    level = np.mean(p[band] * (f[band] / 10.0) ** 2)
    assert 1 / 1.5 < level / A**2 < 1.5


def test_walk_variance_grows_linearly():
    rng = np.random.default_rng(2)
    dt, n = 1e-4, 2000
    fields = np.array([generate_noise(A, n * dt, dt, rng, low_cutoff=0.0).samples / GAMMA_E
                       for _ in range(4000)])
    var = fields.var(axis=0)
    t = dt * np.arange(1, n + 1)
    rate = (A * 2 * math.pi * 10) ** 2 / 2  # T^2 per second
    for k in (199, 999, 1999):
        assert var[k] == pytest.approx(rate * t[k], rel=0.05)


def test_phase_integral_is_exact():
    traj = NoiseTrajectory(0.5, np.array([1.0, -2.0, 4.0]))
    assert traj.duration == 1.5
    assert traj.phase_integral(0.25) == pytest.approx(0.25)
    assert traj.phase_integral(0.75) == pytest.approx(0.5 - 0.5)
    assert traj.phase_integral(1.5) == pytest.approx(0.5 - 1.0 + 2.0)
    assert traj.value_at(0.6) == -2.0


def test_hahn_phase_matches_integral_oracle(ideal):
    cfg = ideal.__class__(t_pulse=1e-12, tau=ideal.tau)
    rng = np.random.default_rng(3)
    traj = generate_noise(A, 0.05, 1e-6, rng)
    prog = seqs.build_hahn(1e-3)
    for start in rng.uniform(0, 0.045, 20):
        i, q = shot_phase(prog, traj, start, PulseErrorSample(), cfg)
        phi = (traj.phase_integral(start + 2e-3) - traj.phase_integral(start + 1e-3)) \
            - (traj.phase_integral(start + 1e-3) - traj.phase_integral(start))
        assert i == pytest.approx(math.cos(phi), abs=1e-6)
        assert abs(q) == pytest.approx(abs(math.sin(phi)), abs=1e-6)


def test_static_offset_refocuses(ideal):
    quiet = generate_noise(0.0, 1e-2, 1e-6, np.random.default_rng(0))
    prog = seqs.build_concatenated("XYXY", 2, 20e-6)
    for dw in (0.0, 2 * math.pi * 5e3):
        for start in (0.0, 1.3e-3, 7e-3):
            i, q = shot_phase(prog, quiet, start, PulseErrorSample(delta_omega=dw),
                              ideal.__class__(t_pulse=1e-12))
            assert i == pytest.approx(1.0, abs=1e-9) and q == pytest.approx(0.0, abs=1e-9)


def test_zero_noise_independent_of_start(paper):
    quiet = generate_noise(0.0, 1e-2, 1e-6, np.random.default_rng(0))
    errors = sample_error_batch(paper, 50, 1)
    prog = seqs.build_concatenated("XYXY", 2, paper.tau)
    i, q = shot_signals(prog, quiet, [0.0, 2e-3, 5.5e-3], errors, paper)
    assert np.ptp(i) < 1e-12 and np.ptp(q) < 1e-12


def test_shot_must_fit(ideal):
    quiet = generate_noise(0.0, 1e-3, 1e-6, np.random.default_rng(0))
    with pytest.raises(ValueError):
        shot_phase(seqs.build_hahn(1e-3), quiet, 0.0, PulseErrorSample(), ideal)


def test_magnitude_detect():
    assert magnitude_detect(3.0, 4.0) == 5.0
    assert magnitude_detect(0.0, 0.0) == 0.0
    assert np.allclose(magnitude_detect(np.array([1.0, -1.0]), np.array([0.0, 0.0])), 1.0)


def test_magnitude_ignores_global_phase(paper):
    # noise in the first half only adds a global phase to every spin
    errors = sample_error_batch(paper, 200, 4)
    prog = seqs.build_hahn(200e-6)
    quiet = NoiseTrajectory(1e-6, np.zeros(1000))
    i0, q0 = shot_signals(prog, quiet, [0.0], errors, paper)
    ramp = NoiseTrajectory(1e-6, np.where(np.arange(1000) < 200, 3e3, 0.0))
    i1, q1 = shot_signals(prog, ramp, [0.0], errors, paper)
    assert not np.isclose(i0[0], i1[0], atol=1e-3)
    assert magnitude_detect(i1, q1)[0] == pytest.approx(magnitude_detect(i0, q0)[0], abs=1e-6)


def test_zero_noise_scan_is_flat(ideal):
    rows = decay_scan("XYXY", "concatenated", 2, [10e-6, 50e-6], NoiseParams(0.0), 5, ideal,
                      np.random.default_rng(0))
    for r in rows:
        assert r.mean_inphase == pytest.approx(1.0, abs=1e-9)
        assert r.sd_inphase == pytest.approx(0.0, abs=1e-9)


def _inphase_sd_at(family, construction, size, total, seed=5):
    probe = seqs.build(family, construction, size, 1.0)
    n_p, n_d = seqs.pulse_count(probe), seqs.delay_count(probe)
    tau = (total - n_p * 180e-9) / n_d
    rows = decay_scan(family, construction, size, [tau], NoiseParams(A), 200,
                      paper_config().with_zero_errors(), np.random.default_rng(seed))
    return rows[0]


def test_hahn_scatters_by_one_millisecond():
    row = _inphase_sd_at("CPMG", "periodic", 1, 1e-3)
    assert row.sd_inphase > 0.2


def test_concatenation_delays_onset():
    hahn = _inphase_sd_at("CPMG", "periodic", 1, 2e-3)
    cdd2 = _inphase_sd_at("XYXY", "concatenated", 2, 2e-3)
    cdd4 = _inphase_sd_at("XYXY", "concatenated", 4, 2e-3)
    assert hahn.sd_inphase > cdd2.sd_inphase > cdd4.sd_inphase
    assert cdd4.mean_inphase > 0.95


def test_decay_scan_rejects_unsorted_taus(ideal):
    with pytest.raises(ValueError):
        decay_scan("CPMG", "periodic", 1, [2e-6, 1e-6], NoiseParams(), 2, ideal,
                   np.random.default_rng(0))


def test_csv_schema(ideal):
    rows = decay_scan("CPMG", "periodic", 1, [5e-6, 9e-6], NoiseParams(), 4, ideal,
                      np.random.default_rng(0))
    text = rows_to_csv(rows, "# header\n")
    assert text.startswith("# header\n")
    parsed = list(csv.DictReader(io.StringIO(text.split("\n", 1)[1])))
    assert tuple(parsed[0]) == CSV_COLUMNS
    assert len(parsed) == 2 and int(parsed[1]["n_shots"]) == 4
    assert float(parsed[0]["tau_s"]) == 5e-6
