"""Phasor-sum estimation: identities, floor/line statistics, expectations."""

import csv

import numpy as np
import pytest
from scipy import integrate

from mcfc.photon_channel import (
    PhotonSequence,
    SourceConfig,
    Tone,
    derive_rng,
    sample_event_batch,
    sample_homogeneous,
    sample_modulated,
)
from mcfc.spectral import (
    MAX_GRID_POINTS,
    Band,
    LineStats,
    band_peak,
    batch_amplitudes,
    expected_line,
    floor_channels,
    line_stats,
    periodogram,
    point_dft,
    point_dft_many,
    write_line_stats_csv,
)


def test_band_validation():
    with pytest.raises(ValueError):
        Band(0.0, 10.0)
    with pytest.raises(ValueError):
        Band(10.0, 10.0)
    b = Band(40e3, 60e3)
    assert b.width == pytest.approx(20e3)
    assert b.contains(40e3) and b.contains(60e3) and not b.contains(61e3)


# -----------------------------------------------------------------
# exact identities of the phasor sum
# -----------------------------------------------------------------

def test_dc_value_equals_event_count():
    seq = sample_homogeneous(7e4, 1e-3, derive_rng(40))
    assert point_dft(seq, 0.0) == pytest.approx(len(seq), rel=1e-12)


def test_linearity_over_concatenation():
    rng = derive_rng(41)
    a = np.sort(rng.uniform(0, 1e-3, 500))
    b = np.sort(rng.uniform(0, 1e-3, 700))
    f = 123_456.0
    xa = point_dft(PhotonSequence.from_seconds(a, 1e-3), f)
    xb = point_dft(PhotonSequence.from_seconds(b, 1e-3), f)
    xab = point_dft(PhotonSequence.from_seconds(np.sort(np.concatenate([a, b])), 1e-3), f)
    assert abs(xab - (xa + xb)) / abs(xab) < 1e-9


def test_magnitude_invariant_under_time_shift():
    rng = derive_rng(42)
    t = np.sort(rng.uniform(0, 5e-4, 300))
    f = 50e3
    m0 = abs(point_dft(PhotonSequence.from_seconds(t, 1e-3), f))
    m1 = abs(point_dft(PhotonSequence.from_seconds(t + 4.9e-4, 1e-3), f))
    assert m1 == pytest.approx(m0, rel=1e-9)


def test_point_dft_many_matches_scalar():
    seq = sample_modulated(SourceConfig(5e4, 1e-3, (Tone(50e3),)), derive_rng(43))
    freqs = np.array([10e3, 50e3, 123e3])
    many = point_dft_many(seq, freqs)
    for f, v in zip(freqs, many):
        assert v == pytest.approx(point_dft(seq, f), rel=1e-12)


def test_point_dft_many_chunked_path():
    # few events + a wide grid forces several chunks through the outer product
    seq = sample_homogeneous(2e5, 1e-3, derive_rng(44))
    assert len(seq) > 150
    freqs = np.linspace(1e3, 500e3, 30_000)
    many = point_dft_many(seq, freqs)
    for idx in (0, 17_345, 29_999):
        assert many[idx] == pytest.approx(point_dft(seq, freqs[idx]), rel=1e-12)


def test_empty_sequence_gives_zero_spectrum():
    spec = periodogram(PhotonSequence.empty(1e-3), Band(10e3, 20e3), 1e3)
    assert np.all(spec.values == 0)
    assert spec.count == 0


def test_batch_amplitudes_match_per_trial_dft():
    config = SourceConfig(3e4, 1e-3, (Tone(40e3),))
    batch = sample_event_batch(config, 50, derive_rng(45))
    freqs = np.array([20e3, 40e3])
    amps = batch_amplitudes(batch, freqs)
    for trial in (0, 13, 49):
        mask = batch.trial_ids == trial
        seq = PhotonSequence.from_seconds(np.sort(batch.times[mask]), 1e-3)
        for j, f in enumerate(freqs):
            # from_seconds snaps timestamps onto the picosecond grid, so
            # allow the resulting phase slew instead of exact agreement
            assert amps[trial, j] == pytest.approx(abs(point_dft(seq, f)), rel=1e-5)


# -----------------------------------------------------------------
# statistical levels: white floor and modulation lines
# -----------------------------------------------------------------

def test_white_floor_power_equals_count():
    # E|X(f)|^2 = N for a homogeneous stream at any nonzero frequency
    config = SourceConfig(2e5, 1e-3)
    batch = sample_event_batch(config, 10_000, derive_rng(46))
    amps = batch_amplitudes(batch, np.array([137_531.0]))
    mean_count = batch.counts().mean()
    assert (amps**2).mean() / mean_count == pytest.approx(1.0, abs=0.05)


def test_full_depth_line_is_half_count():
    config = SourceConfig(2e5, 1e-3, (Tone(50e3),))
    batch = sample_event_batch(config, 4000, derive_rng(47))
    amps = batch_amplitudes(batch, np.array([50e3]))
    n = config.expected_count
    # Rician mean exceeds N/2 by ~sigma^2/N; 3% absorbs that comfortably
    assert amps.mean() == pytest.approx(n / 2, rel=0.03)
    assert abs(expected_line(config, 50e3)) == pytest.approx(n / 2, rel=1e-6)


def test_line_and_floor_scaling_with_count():
    line, floor = [], []
    for i, rate in enumerate((40e3, 160e3)):
        config = SourceConfig(rate, 1e-3, (Tone(50e3),))
        batch = sample_event_batch(config, 4000, derive_rng(48, i))
        amps = batch_amplitudes(batch, np.array([50e3, 57e3]))
        line.append(amps[:, 0].mean())
        floor.append(amps[:, 1].mean())
    assert line[1] / line[0] == pytest.approx(4.0, rel=0.05)   # line ~ N
    assert floor[1] / floor[0] == pytest.approx(2.0, rel=0.10)  # floor ~ sqrt(N)


def test_expected_line_matches_quadrature():
    """The closed-form Fourier integral against brute-force quadrature."""
    rng = np.random.default_rng(49)
    for _ in range(5):
        tones = tuple(
            Tone(rng.uniform(5e3, 90e3), rng.uniform(0, 2 * np.pi), rng.uniform(0.2, 1.0))
            for _ in range(rng.integers(1, 4))
        )
        config = SourceConfig(rng.uniform(1e4, 2e5), rng.uniform(2e-4, 2e-3), tones)
        probe = rng.uniform(5e3, 90e3)

        def integrand_re(t):
            return config.rate(t) * np.cos(2 * np.pi * probe * t)

        def integrand_im(t):
            return -config.rate(t) * np.sin(2 * np.pi * probe * t)

        re, _ = integrate.quad(integrand_re, 0, config.duration, limit=400)
        im, _ = integrate.quad(integrand_im, 0, config.duration, limit=400)
        got = expected_line(config, probe)
        assert got.real == pytest.approx(re, abs=1e-6 * max(1.0, abs(re)))
        assert got.imag == pytest.approx(im, abs=1e-6 * max(1.0, abs(im)))


def test_expected_line_at_dc_is_expected_count():
    config = SourceConfig(8e4, 1e-3, (Tone(50e3, phase=0.7, depth=0.9),))
    assert expected_line(config, 0.0) == pytest.approx(config.expected_count, rel=1e-12)


# -----------------------------------------------------------------
# scanning and channel bookkeeping
# -----------------------------------------------------------------

def test_periodogram_grid_and_peak():
    config = SourceConfig(2e5, 1e-3, (Tone(50e3),))
    seq = sample_modulated(config, derive_rng(50))
    spec = periodogram(seq, Band(40e3, 60e3), 1e3)
    assert spec.frequencies.size == 21
    assert spec.frequencies[np.argmax(spec.magnitude)] == pytest.approx(50e3)
    idx, freq, mag = band_peak(seq, spec.frequencies)
    assert (idx, freq) == (10, pytest.approx(50e3))
    assert mag == pytest.approx(spec.magnitude.max(), rel=1e-12)


def test_periodogram_grid_cap():
    seq = PhotonSequence.empty(1e-3)
    with pytest.raises(ValueError, match=str(MAX_GRID_POINTS)):
        periodogram(seq, Band(1.0, 1e9), 0.1)


def test_band_peak_tie_resolves_to_lowest_frequency():
    idx, freq, mag = band_peak(PhotonSequence.empty(1e-3), np.array([10e3, 20e3, 30e3]))
    assert idx == 0 and freq == 10e3 and mag == 0.0


def test_floor_channels_mask():
    band = 200e3 + 1e3 * (np.arange(11) - 5)
    floors = floor_channels(band, 200e3)
    assert floors.size == 8
    assert 200e3 not in floors and 199e3 not in floors and 201e3 not in floors
    # line at the band edge only has one neighbor to drop
    assert floor_channels(band, float(band[0])).size == 9


def test_line_stats_against_theory():
    """Moments of the line and floor magnitudes at a known operating point."""
    n = 80.0
    config = SourceConfig(80e3, 1e-3, (Tone(200e3),))
    band = 200e3 + 1e3 * (np.arange(11) - 5)
    stats = line_stats(config, 200e3, floor_channels(band, 200e3), 10_000, derive_rng(51))
    assert stats.line_mean == pytest.approx(n / 2, rel=0.03)
    assert stats.line_std == pytest.approx(np.sqrt(n / 2), rel=0.10)
    # Rayleigh floor: mean sqrt(pi N / 4), std sqrt((4 - pi) N / 4)
    assert stats.floor_mean == pytest.approx(np.sqrt(np.pi * n / 4), rel=0.05)
    assert stats.floor_std == pytest.approx(np.sqrt((4 - np.pi) * n / 4), rel=0.10)
    assert stats.trials == 10_000


# -----------------------------------------------------------------
# CSV output
# -----------------------------------------------------------------

def test_spectrum_csv_format(tmp_path):
    seq = sample_modulated(SourceConfig(5e4, 1e-3, (Tone(50e3),)), derive_rng(52))
    spec = periodogram(seq, Band(45e3, 55e3), 1e3)
    path = tmp_path / "spec.csv"
    spec.to_csv(path)
    text = path.read_text()
    assert "np." not in text
    rows = list(csv.reader(text.splitlines()))
    assert rows[0] == ["frequency_hz", "re", "im", "abs"]
    assert len(rows) == 1 + 11
    f, re, im, mag = (float(x) for x in rows[6])
    assert f == 50e3
    assert np.hypot(re, im) == pytest.approx(mag, rel=1e-12)


def test_line_stats_csv(tmp_path):
    rows = [("a", LineStats(40.0, 6.3, 7.9, 4.1, 100)),
            ("b", LineStats(20.0, 4.4, 5.6, 2.9, 200))]
    path = tmp_path / "stats.csv"
    write_line_stats_csv(path, rows)
    got = list(csv.reader(path.read_text().splitlines()))
    assert got[0][0] == "label"
    assert got[1][0] == "a" and float(got[1][1]) == 40.0
    assert got[2][5] == "200"
