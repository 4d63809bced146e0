"""Monte-Carlo experiment runner: error-rate sweeps and image transmission.

Each sweep fixes an operating point, varies one parameter over a grid, and
reports per grid point both the empirical decode error (with a Wilson 95%
interval) and the analytic prediction obtained by feeding measured
line/floor moments through the Gaussian error model.  Points whose
empirical error count is zero are flagged analytic-only: the harness never
turns an absence of observed errors into a rate claim.

Reproducibility: every grid point draws from an independent substream
derived from (seed, sweep label, point index[, component count]), so
results do not depend on evaluation order and re-running any single point
in isolation reproduces it bit-exactly.  Trials inside a point are
vectorized over one substream rather than individually seeded; this is a
deliberate trade of per-trial addressing for an order-of-magnitude faster
inner loop.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import __version__ as _pkg_version
from .analysis import ErrorModelInput, channel_error_rate, misdecode_prob
from .codec import FrequencyPlan, Symbol, decode, image_to_symbols, symbols_to_image, DecodeError
from .photon_channel import (
    LinkBudget,
    SourceConfig,
    Tone,
    derive_rng,
    sample_event_batch,
    transmit,
)
from .spectral import batch_amplitudes, floor_channels


# ---------------------------------------------------------------------------
# result containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    """One sweep definition: the swept grid plus the fixed operating point.

    Runners read the subset of fields they need; unused fields are ignored.
    ``components`` lists the tone counts to run (most sweeps use just one).
    """

    grid: tuple[float, ...]
    trials: int = 10_000
    seed: int = 0
    window: float = 1e-3
    signal_rate: float = 80_000.0
    modulation_frequency: float = 200_000.0
    spacing: float = 1_000.0
    channels_per_band: int = 11
    components: tuple[int, ...] = (1,)
    mean_count: float = 80.0
    budget: LinkBudget = LinkBudget()

    def __post_init__(self) -> None:
        if not self.grid:
            raise ValueError("sweep grid must be nonempty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        object.__setattr__(self, "grid", tuple(float(g) for g in self.grid))
        object.__setattr__(self, "components", tuple(int(k) for k in self.components))


@dataclass(frozen=True)
class SweepPoint:
    """Result at one grid point."""

    parameter: str
    value: float
    components: int
    trials: int
    errors: int
    empirical_rate: float
    wilson_low: float
    wilson_high: float
    analytic_rate: float
    line_mean: float
    line_std: float
    floor_mean: float
    floor_std: float

    @property
    def analytic_only(self) -> bool:
        """True when no errors were observed and only the analytic rate is meaningful."""
        return self.errors == 0


@dataclass(frozen=True)
class MomentPoint:
    """Line/floor amplitude moments at one (rate, component-count) point."""

    value: float
    components: int
    trials: int
    line_mean: float
    line_std: float
    floor_mean: float
    floor_std: float


@dataclass(frozen=True)
class ImageReport:
    """Outcome of one image transmission."""

    pixels: int
    pixel_errors: int
    failed_pixels: int
    band_errors: dict[str, int] = field(default_factory=dict)

    @property
    def pixel_error_rate(self) -> float:
        return self.pixel_errors / self.pixels if self.pixels else 0.0


def wilson_interval(errors: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion (95% by default)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= errors <= trials:
        raise ValueError("errors must be in [0, trials]")
    p = errors / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = (z / denom) * float(np.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)))
    return max(0.0, center - half), min(1.0, center + half)


# ---------------------------------------------------------------------------
# shared measurement core
# ---------------------------------------------------------------------------

def _measure_point(
    config: SourceConfig,
    bands: Sequence[np.ndarray],
    line_indices: Sequence[int],
    trials: int,
    rng: np.random.Generator,
    budget: LinkBudget,
) -> tuple[int, float, float, float, float, float]:
    """Decode-error count and moment summary for one operating point.

    ``bands`` holds the channel grid of each band, ``line_indices`` the
    true channel index per band.  Returns (errors, analytic symbol error,
    line/floor moments of the first band).
    """
    all_freqs = np.concatenate([np.asarray(b, dtype=np.float64) for b in bands])
    batch = sample_event_batch(config, trials, rng, budget)
    amps = batch_amplitudes(batch, all_freqs)

    wrong = np.zeros(batch.trials, dtype=bool)
    survival = 1.0
    first_moments: tuple[float, float, float, float] | None = None
    offset = 0
    for band, line_idx in zip(bands, line_indices):
        width = len(band)
        segment = amps[:, offset: offset + width]
        offset += width
        wrong |= np.argmax(segment, axis=1) != line_idx

        line = segment[:, line_idx]
        floor_freqs = floor_channels(np.asarray(band), float(band[line_idx]))
        floor_cols = [i for i, f in enumerate(band) if f in set(floor_freqs.tolist())]
        floor = segment[:, floor_cols].ravel() if floor_cols else segment[:, [line_idx]].ravel()
        model = ErrorModelInput(
            line_mean=float(line.mean()),
            line_std=float(line.std(ddof=1)),
            floor_mean=float(floor.mean()),
            floor_std=float(floor.std(ddof=1)),
            channels=width,
        )
        survival *= 1.0 - channel_error_rate(misdecode_prob(model), width)
        if first_moments is None:
            first_moments = (model.line_mean, model.line_std, model.floor_mean, model.floor_std)

    errors = int(wrong.sum())
    assert first_moments is not None
    return (errors, 1.0 - survival, *first_moments)


def _make_point(parameter: str, value: float, k: int, trials: int, measured) -> SweepPoint:
    errors, analytic, lm, ls, fm, fs = measured
    low, high = wilson_interval(errors, trials)
    return SweepPoint(
        parameter=parameter,
        value=value,
        components=k,
        trials=trials,
        errors=errors,
        empirical_rate=errors / trials,
        wilson_low=low,
        wilson_high=high,
        analytic_rate=analytic,
        line_mean=lm,
        line_std=ls,
        floor_mean=fm,
        floor_std=fs,
    )


def _centered_band(center: float, spacing: float, channels: int) -> np.ndarray:
    """Channel ladder of ``channels`` frequencies centered on ``center``."""
    half = channels // 2
    return center + spacing * (np.arange(channels) - half)


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

def run_error_vs_noise(spec: SweepSpec) -> list[SweepPoint]:
    """Decode error versus background-noise rate at fixed signal rate.

    One full-depth tone at ``modulation_frequency``; the decoder picks the
    strongest of ``channels_per_band`` channels centered on the tone.
    """
    band = _centered_band(spec.modulation_frequency, spec.spacing, spec.channels_per_band)
    line_idx = spec.channels_per_band // 2
    config = SourceConfig(
        spec.signal_rate, spec.window, (Tone(spec.modulation_frequency),)
    )
    points = []
    for i, noise in enumerate(spec.grid):
        rng = derive_rng(spec.seed, "error-vs-noise", i)
        budget = replace(spec.budget, noise_rate=float(noise))
        measured = _measure_point(config, [band], [line_idx], spec.trials, rng, budget)
        points.append(_make_point("noise_rate_cps", float(noise), 1, spec.trials, measured))
    return points


def run_error_vs_integration_time(spec: SweepSpec) -> list[SweepPoint]:
    """Decode error versus window length at fixed per-window mean count.

    The photon budget per window stays at ``mean_count`` while the window
    stretches, so the signal rate falls as 1/window.  Competing channels
    sit at the tone frequency plus 1..(channels_per_band-1) multiples of
    the window's natural grid 1/window, strictly above the line so every
    probe stays positive even for very short windows.
    """
    f_m = spec.modulation_frequency
    points = []
    for i, window in enumerate(spec.grid):
        rng = derive_rng(spec.seed, "error-vs-window", i)
        rate = spec.mean_count / window
        band = f_m + np.arange(spec.channels_per_band) / window
        config = SourceConfig(rate, float(window), (Tone(f_m),))
        measured = _measure_point(config, [band], [0], spec.trials, rng, spec.budget)
        points.append(_make_point("window_s", float(window), 1, spec.trials, measured))
    return points


def run_error_vs_spacing(spec: SweepSpec) -> list[SweepPoint]:
    """Decode error versus channel spacing for one active + one idle channel.

    The active channel stays fixed on the window's natural grid near
    ``modulation_frequency``; a single competitor sits ``spacing`` above
    it.  Leakage from the active line into the competitor produces the
    characteristic damped oscillation as spacing grows.
    """
    base = round(spec.modulation_frequency * spec.window) / spec.window
    config = SourceConfig(spec.signal_rate, spec.window, (Tone(base),))
    points = []
    for i, spacing in enumerate(spec.grid):
        rng = derive_rng(spec.seed, "error-vs-spacing", i)
        band = np.asarray([base, base + float(spacing)])
        batch = sample_event_batch(config, spec.trials, rng, spec.budget)
        amps = batch_amplitudes(batch, band)
        errors = int(np.sum(np.argmax(amps, axis=1) != 0))
        line, floor = amps[:, 0], amps[:, 1]
        model = ErrorModelInput(
            line_mean=float(line.mean()),
            line_std=float(line.std(ddof=1)),
            floor_mean=float(floor.mean()),
            floor_std=float(floor.std(ddof=1)),
            channels=2,
        )
        measured = (
            errors,
            channel_error_rate(misdecode_prob(model), 2),
            model.line_mean,
            model.line_std,
            model.floor_mean,
            model.floor_std,
        )
        points.append(_make_point("spacing_hz", float(spacing), 1, spec.trials, measured))
    return points


def _component_bands(k: int, spacing: float, channels: int) -> tuple[list[np.ndarray], list[int]]:
    """Non-overlapping bands for k simultaneous tones, 20 kHz pitch from 30 kHz."""
    bands, lines = [], []
    for b in range(k):
        center = 30_000.0 + 20_000.0 * b
        bands.append(_centered_band(center, spacing, channels))
        lines.append(channels // 2)
    return bands, lines


def run_error_vs_components(spec: SweepSpec) -> list[SweepPoint]:
    """Symbol error versus signal rate for each tone count in ``spec.components``.

    The total detected rate is held fixed while k tones share it, one tone
    per band; a symbol decodes correctly only if every band's argmax lands
    on its line.
    """
    points = []
    for k in spec.components:
        bands, line_indices = _component_bands(k, spec.spacing, spec.channels_per_band)
        tones = tuple(Tone(float(b[i])) for b, i in zip(bands, line_indices))
        for i, rate in enumerate(spec.grid):
            rng = derive_rng(spec.seed, "error-vs-components", k, i)
            config = SourceConfig(float(rate), spec.window, tones)
            measured = _measure_point(config, bands, line_indices, spec.trials, rng, spec.budget)
            points.append(_make_point("signal_rate_cps", float(rate), k, spec.trials, measured))
    return points


def run_amplitude_nonlinearity(spec: SweepSpec) -> list[MomentPoint]:
    """Line and floor amplitude moments versus signal rate, per tone count.

    Moments are taken on the first band; with k tones sharing the fixed
    total rate the per-band line amplitude shrinks accordingly, which is
    exactly the effect this sweep quantifies.
    """
    points = []
    for k in spec.components:
        bands, line_indices = _component_bands(k, spec.spacing, spec.channels_per_band)
        tones = tuple(Tone(float(b[i])) for b, i in zip(bands, line_indices))
        for i, rate in enumerate(spec.grid):
            rng = derive_rng(spec.seed, "amplitude", k, i)
            config = SourceConfig(float(rate), spec.window, tones)
            band = bands[0]
            batch = sample_event_batch(config, spec.trials, rng, spec.budget)
            amps = batch_amplitudes(batch, band)
            line = amps[:, line_indices[0]]
            floors = floor_channels(band, float(band[line_indices[0]]))
            cols = [j for j, f in enumerate(band) if f in set(floors.tolist())]
            floor = amps[:, cols].ravel()
            points.append(MomentPoint(
                value=float(rate),
                components=k,
                trials=spec.trials,
                line_mean=float(line.mean()),
                line_std=float(line.std(ddof=1)),
                floor_mean=float(floor.mean()),
                floor_std=float(floor.std(ddof=1)),
            ))
    return points


# ---------------------------------------------------------------------------
# image pipeline
# ---------------------------------------------------------------------------

def run_image_transmission(
    pixels: np.ndarray,
    plan: FrequencyPlan,
    signal_rate: float,
    budget: LinkBudget | None = None,
    seed: int = 0,
    window: float = 1e-3,
) -> tuple[np.ndarray, ImageReport]:
    """Encode an image, push every pixel's window through the channel, decode.

    Each pixel is one integration window carrying one tone per band.  The
    received image renders undecodable windows in the sentinel color.
    """
    budget = budget or LinkBudget()
    sent = image_to_symbols(pixels)
    h, w = pixels.shape[:2]
    received: list[Symbol | None] = []
    band_errors = {band.name: 0 for band in plan.bands}
    failures = 0
    for i, sym in enumerate(sent):
        rng = derive_rng(seed, "image", i)
        tones = tuple(Tone(f) for f in plan.frequencies_for(sym))
        seq = transmit(SourceConfig(signal_rate, window, tones), budget, rng)
        try:
            got = decode(seq, plan)
        except DecodeError:
            received.append(None)
            failures += 1
            for name in band_errors:
                band_errors[name] += 1
            continue
        received.append(got)
        for band, a, b in zip(plan.bands, sym.value, got.value):
            if a != b:
                band_errors[band.name] += 1
    errors = sum(
        1 for s, r in zip(sent, received) if r is None or s != r
    )
    report = ImageReport(
        pixels=len(sent),
        pixel_errors=errors,
        failed_pixels=failures,
        band_errors=band_errors,
    )
    return symbols_to_image(received, (h, w)), report


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

_SWEEP_HEADER = [
    "parameter", "value", "components", "trials", "errors", "empirical_rate",
    "wilson_low", "wilson_high", "analytic_rate", "line_mean", "line_std",
    "floor_mean", "floor_std", "analytic_only",
]


def write_sweep_csv(path: str | os.PathLike, points: Sequence[SweepPoint]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_SWEEP_HEADER)
        for p in points:
            writer.writerow([
                p.parameter, repr(p.value), p.components, p.trials, p.errors,
                repr(p.empirical_rate), repr(p.wilson_low), repr(p.wilson_high),
                repr(p.analytic_rate), repr(p.line_mean), repr(p.line_std),
                repr(p.floor_mean), repr(p.floor_std), int(p.analytic_only),
            ])


def write_moments_csv(path: str | os.PathLike, points: Sequence[MomentPoint]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "signal_rate_cps", "components", "trials",
            "line_mean", "line_std", "floor_mean", "floor_std",
        ])
        for p in points:
            writer.writerow([
                repr(p.value), p.components, p.trials, repr(p.line_mean),
                repr(p.line_std), repr(p.floor_mean), repr(p.floor_std),
            ])


def write_manifest(path: str | os.PathLike, config: dict, outputs: Sequence[str]) -> None:
    """Record what produced a result set: version, seed, config digest.

    Deliberately contains no timestamps so identical runs produce
    identical manifests.
    """
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    doc = {
        "version": _pkg_version,
        "seed": config.get("seed"),
        "config_sha256": hashlib.sha256(canonical.encode()).hexdigest(),
        "config": config,
        "outputs": list(outputs),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
