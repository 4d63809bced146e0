"""Photon-stream generation and the detection channel.

Light at the single-photon level is modelled as an inhomogeneous Poisson
point process.  A transmitter superimposes one or more sinusoidal
intensity modulations on a weak coherent beam; the instantaneous rate for
a set of tones is

    rate(t) = (mean_rate / n_tones) * sum_i (1 + depth_i * sin(2*pi*f_i*t + phase_i))

so the time-averaged detection rate stays at ``mean_rate`` no matter how
many tones are active.  Sampling uses thinning of a homogeneous proposal
process, which is exact for bounded rate functions.

The receive side is a chain of independently seeded stages: geometric
loss, background light, timing jitter, detector dead time and (optionally)
a gated detector that quantizes arrival times onto its clock grid.

Timestamps are stored as integer picoseconds (``numpy.uint64``) so that
sequences survive serialization round trips bit-exactly.  The on-disk
container is a small binary format, see :func:`write_pts1`.
"""

from __future__ import annotations

import os
import zlib
from dataclasses import dataclass
from typing import Iterable

import numpy as np

PS_PER_SECOND = 10**12

#: Magic bytes identifying the binary timestamp container.
PTS1_MAGIC = b"PHTS0001"

_HEADER_BYTES = 24  # magic(8) + window_ps(8) + count(8)


class StreamFormatError(ValueError):
    """Raised when a serialized timestamp stream is malformed."""


def fwhm_to_sigma(fwhm: float) -> float:
    """Convert a full-width-at-half-maximum to a Gaussian standard deviation."""
    return float(fwhm) / (2.0 * np.sqrt(2.0 * np.log(2.0)))


# ---------------------------------------------------------------------------
# deterministic stream derivation
# ---------------------------------------------------------------------------

def derive_rng(seed: int, *path: int | str) -> np.random.Generator:
    """Derive an independent random generator for a labelled sub-task.

    Every stochastic stage of the pipeline draws from its own generator,
    derived from a root ``seed`` plus a path of integers or short string
    labels.  Two calls with the same arguments always return generators
    producing identical streams; distinct paths give statistically
    independent streams.  String labels are folded to integers with CRC32
    so the scheme is stable across platforms and sessions.
    """
    key = tuple(
        int(p) if not isinstance(p, str) else zlib.crc32(p.encode("utf-8"))
        for p in path
    )
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))


# ---------------------------------------------------------------------------
# source model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Tone:
    """One sinusoidal intensity modulation component.

    frequency : modulation frequency in Hz
    phase     : initial phase in radians
    depth     : modulation depth, 0..1 (1 = full on/off swing)
    """

    frequency: float
    phase: float = 0.0
    depth: float = 1.0

    def __post_init__(self) -> None:
        if not np.isfinite(self.frequency) or self.frequency <= 0.0:
            raise ValueError(f"tone frequency must be positive, got {self.frequency}")
        if not 0.0 <= self.depth <= 1.0:
            raise ValueError(f"modulation depth must be in [0, 1], got {self.depth}")
        object.__setattr__(self, "phase", float(self.phase) % (2.0 * np.pi))


@dataclass(frozen=True)
class SourceConfig:
    """A modulated weak-light source observed for a fixed window.

    ``mean_rate`` is the time-averaged detected photon rate in counts/s and
    ``duration`` the observation window in seconds.  ``tones`` may be empty,
    in which case the source is homogeneous.
    """

    mean_rate: float
    duration: float
    tones: tuple[Tone, ...] = ()

    def __post_init__(self) -> None:
        if self.mean_rate < 0.0:
            raise ValueError("mean_rate must be >= 0")
        if self.duration <= 0.0:
            raise ValueError("duration must be > 0")
        object.__setattr__(self, "tones", tuple(self.tones))

    def rate(self, t: np.ndarray | float) -> np.ndarray | float:
        """Instantaneous rate in counts/s at time(s) ``t``."""
        if not self.tones:
            return np.broadcast_to(self.mean_rate, np.shape(t)).copy() if np.ndim(t) else self.mean_rate
        k = len(self.tones)
        out = np.zeros_like(np.asarray(t, dtype=float))
        for tone in self.tones:
            out = out + 1.0 + tone.depth * np.sin(2.0 * np.pi * tone.frequency * np.asarray(t) + tone.phase)
        return out * (self.mean_rate / k)

    @property
    def rate_ceiling(self) -> float:
        """Least upper bound of :meth:`rate`, used as the thinning proposal rate."""
        if not self.tones:
            return self.mean_rate
        k = len(self.tones)
        return self.mean_rate / k * sum(1.0 + tone.depth for tone in self.tones)

    @property
    def expected_count(self) -> float:
        """Exact expected number of events, integral of the rate over the window."""
        total = self.mean_rate * self.duration
        if not self.tones:
            return total
        k = len(self.tones)
        for tone in self.tones:
            w = 2.0 * np.pi * tone.frequency
            total += (self.mean_rate / k) * tone.depth * (
                np.cos(tone.phase) - np.cos(w * self.duration + tone.phase)
            ) / w
        return total


# ---------------------------------------------------------------------------
# timestamp container
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhotonSequence:
    """An ordered sequence of detection timestamps within one window.

    ``times_ps`` is a nondecreasing ``uint64`` array of picosecond
    timestamps, all strictly less than ``window_ps``.
    """

    times_ps: np.ndarray
    window_ps: int

    def __post_init__(self) -> None:
        arr = np.asarray(self.times_ps, dtype=np.uint64)
        if arr.ndim != 1:
            raise ValueError("times_ps must be one-dimensional")
        if arr.size and np.any(arr[1:] < arr[:-1]):
            raise ValueError("timestamps must be nondecreasing")
        if arr.size and int(arr[-1]) >= int(self.window_ps):
            raise ValueError("timestamps must lie inside the observation window")
        object.__setattr__(self, "times_ps", arr)
        object.__setattr__(self, "window_ps", int(self.window_ps))

    def __len__(self) -> int:
        return int(self.times_ps.size)

    @property
    def window(self) -> float:
        """Observation window length in seconds."""
        return self.window_ps / PS_PER_SECOND

    @property
    def seconds(self) -> np.ndarray:
        """Timestamps converted to float seconds."""
        return self.times_ps.astype(np.float64) / PS_PER_SECOND

    @classmethod
    def from_seconds(cls, times: Iterable[float], window: float) -> "PhotonSequence":
        """Build a sequence from float-second timestamps.

        Times are quantized to the picosecond grid; an event that rounds up
        to the window edge is clamped one tick inside so the closed
        invariant ``t < window`` holds after quantization.
        """
        window_ps = int(round(float(window) * PS_PER_SECOND))
        t = np.asarray(list(times) if not isinstance(times, np.ndarray) else times, dtype=np.float64)
        if t.size and (np.any(t < 0.0) or np.any(t >= window)):
            raise ValueError("timestamps must lie in [0, window)")
        ps = np.sort(np.round(t * PS_PER_SECOND)).astype(np.uint64)
        if ps.size:
            ps = np.minimum(ps, np.uint64(window_ps - 1))
        return cls(ps, window_ps)

    @classmethod
    def empty(cls, window: float) -> "PhotonSequence":
        return cls(np.empty(0, dtype=np.uint64), int(round(float(window) * PS_PER_SECOND)))


# ---------------------------------------------------------------------------
# receive-side budget
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinkBudget:
    """Impairments applied between source and decoder.

    transmittance : probability a transmitted photon is detected (0..1]
    noise_rate    : homogeneous background rate added before the detector, counts/s
    dark_rate     : detector-generated homogeneous rate, counts/s
    jitter_sigma  : Gaussian timing jitter standard deviation, seconds
    dead_time     : detector paralysis after each registered event, seconds
    rep_period    : optional gated-detector clock period, seconds.  When set,
                    timestamps are quantized down onto the clock grid and
                    events falling into one gate merge into a single count.
    """

    transmittance: float = 1.0
    noise_rate: float = 0.0
    dark_rate: float = 0.0
    jitter_sigma: float = 0.0
    dead_time: float = 0.0
    rep_period: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.transmittance <= 1.0:
            raise ValueError("transmittance must be in (0, 1]")
        for name in ("noise_rate", "dark_rate", "jitter_sigma", "dead_time"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")
        if self.rep_period is not None and self.rep_period <= 0.0:
            raise ValueError("rep_period must be positive when set")

    @property
    def is_identity(self) -> bool:
        return (
            self.transmittance == 1.0
            and self.noise_rate == 0.0
            and self.dark_rate == 0.0
            and self.jitter_sigma == 0.0
            and self.dead_time == 0.0
            and self.rep_period is None
        )


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------

def sample_homogeneous(rate: float, duration: float, rng: np.random.Generator) -> PhotonSequence:
    """Sample a homogeneous Poisson process on [0, duration)."""
    n = rng.poisson(rate * duration)
    times = rng.uniform(0.0, duration, size=n)
    return PhotonSequence.from_seconds(times, duration)


def sample_modulated(config: SourceConfig, rng: np.random.Generator) -> PhotonSequence:
    """Sample the modulated source by thinning a homogeneous proposal.

    Draw ``Poisson(ceiling * T)`` candidate times uniformly on the window
    and keep each with probability ``rate(t) / ceiling``.  The survivors
    are exactly an inhomogeneous Poisson sample of the target rate.
    """
    lam_max = config.rate_ceiling
    if lam_max == 0.0:
        return PhotonSequence.empty(config.duration)
    n = rng.poisson(lam_max * config.duration)
    t = rng.uniform(0.0, config.duration, size=n)
    if not config.tones:
        return PhotonSequence.from_seconds(t, config.duration)
    keep = rng.uniform(size=n) * lam_max < config.rate(t)
    return PhotonSequence.from_seconds(t[keep], config.duration)


def apply_loss(seq: PhotonSequence, transmittance: float, rng: np.random.Generator) -> PhotonSequence:
    """Thin a sequence by an independent Bernoulli survival trial per event."""
    if transmittance >= 1.0 or len(seq) == 0:
        return seq
    keep = rng.uniform(size=len(seq)) < transmittance
    return PhotonSequence(seq.times_ps[keep], seq.window_ps)


def merge_noise(seq: PhotonSequence, budget: LinkBudget, rng: np.random.Generator) -> PhotonSequence:
    """Superimpose background light and dark counts onto a sequence.

    Both contributions are homogeneous Poisson streams, so they merge into
    one stream at the summed rate.
    """
    rate = budget.noise_rate + budget.dark_rate
    if rate <= 0.0:
        return seq
    extra = sample_homogeneous(rate, seq.window, rng)
    merged = np.sort(np.concatenate([seq.times_ps, extra.times_ps]))
    return PhotonSequence(merged, seq.window_ps)


def apply_detector(seq: PhotonSequence, budget: LinkBudget, rng: np.random.Generator) -> PhotonSequence:
    """Apply detector-side impairments: timing jitter, dead time, gating.

    Jittered events are clamped to the observation window and re-sorted.
    Dead time is non-extending: after each registered event the detector
    ignores arrivals for ``dead_time`` seconds.
    """
    window = seq.window
    times = seq.seconds

    if budget.jitter_sigma > 0.0 and times.size:
        times = times + rng.normal(0.0, budget.jitter_sigma, size=times.size)
        times = np.sort(np.clip(times, 0.0, window - 1e-12))

    if budget.dead_time > 0.0 and times.size:
        kept = [times[0]]
        for t in times[1:]:
            if t - kept[-1] >= budget.dead_time:
                kept.append(t)
        times = np.asarray(kept)

    out = PhotonSequence.from_seconds(times, window)

    if budget.rep_period is not None and len(out):
        period_ps = int(round(budget.rep_period * PS_PER_SECOND))
        gated = (out.times_ps // period_ps) * period_ps
        out = PhotonSequence(np.unique(gated), out.window_ps)
    return out


def transmit(config: SourceConfig, budget: LinkBudget, rng: np.random.Generator) -> PhotonSequence:
    """Run the full pipeline: source, loss, background, detector.

    Each stage consumes its own child generator spawned from ``rng``, so
    adding or removing an impairment does not shift the randomness seen by
    the remaining stages.
    """
    streams = rng.spawn(4)
    seq = sample_modulated(config, streams[0])
    seq = apply_loss(seq, budget.transmittance, streams[1])
    seq = merge_noise(seq, budget, streams[2])
    return apply_detector(seq, budget, streams[3])


# ---------------------------------------------------------------------------
# batched sampling for Monte-Carlo studies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EventBatch:
    """Events of many independent trials in flat arrays.

    ``times`` holds float-second timestamps, ``trial_ids`` the owning trial
    of each event.  Events within a trial are unordered; spectral reduction
    does not need them sorted.
    """

    times: np.ndarray
    trial_ids: np.ndarray
    trials: int
    window: float

    def counts(self) -> np.ndarray:
        """Events per trial, shape (trials,)."""
        return np.bincount(self.trial_ids, minlength=self.trials)


def sample_event_batch(
    config: SourceConfig,
    trials: int,
    rng: np.random.Generator,
    budget: LinkBudget | None = None,
) -> EventBatch:
    """Sample many independent realizations of the same source at once.

    Loss is folded into the thinning acceptance (one uniform draw per
    candidate), background and dark counts are appended as homogeneous
    events, and jitter is applied vectorized.  Dead time and gating are
    sequential per-trial effects and are intentionally not supported here;
    use :func:`transmit` for those.
    """
    budget = budget or LinkBudget()
    if budget.dead_time > 0.0 or budget.rep_period is not None:
        raise NotImplementedError(
            "dead time and gating are per-sequence effects; use transmit()"
        )
    T = config.duration
    lam_max = config.rate_ceiling
    eta = budget.transmittance

    counts = rng.poisson(lam_max * T, size=trials)
    total = int(counts.sum())
    t = rng.uniform(0.0, T, size=total)
    tid = np.repeat(np.arange(trials), counts)

    if config.tones:
        accept = rng.uniform(size=total) * lam_max < config.rate(t) * eta
    else:
        accept = rng.uniform(size=total) < eta
    t, tid = t[accept], tid[accept]

    extra_rate = budget.noise_rate + budget.dark_rate
    if extra_rate > 0.0:
        n_extra = rng.poisson(extra_rate * T, size=trials)
        te = rng.uniform(0.0, T, size=int(n_extra.sum()))
        t = np.concatenate([t, te])
        tid = np.concatenate([tid, np.repeat(np.arange(trials), n_extra)])

    if budget.jitter_sigma > 0.0 and t.size:
        t = np.clip(t + rng.normal(0.0, budget.jitter_sigma, size=t.size), 0.0, T - 1e-12)

    return EventBatch(times=t, trial_ids=tid, trials=trials, window=T)


# ---------------------------------------------------------------------------
# binary timestamp container
# ---------------------------------------------------------------------------

def write_pts1(path: str | os.PathLike, seq: PhotonSequence) -> None:
    """Serialize a sequence to the PTS1 container.

    Layout (all little-endian):
      bytes 0..7   magic ``PHTS0001``
      bytes 8..15  observation window, unsigned picoseconds
      bytes 16..23 event count
      bytes 24..   count * uint64 nondecreasing event times, picoseconds
    """
    header = PTS1_MAGIC
    header += int(seq.window_ps).to_bytes(8, "little")
    header += len(seq).to_bytes(8, "little")
    payload = np.ascontiguousarray(seq.times_ps, dtype="<u8").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_pts1(path: str | os.PathLike) -> PhotonSequence:
    """Parse a PTS1 container, validating structure with byte-offset diagnostics."""
    with open(path, "rb") as fh:
        blob = fh.read()

    if len(blob) < _HEADER_BYTES:
        raise StreamFormatError(
            f"offset 0: truncated header, need {_HEADER_BYTES} bytes, got {len(blob)}"
        )
    if blob[:8] != PTS1_MAGIC:
        raise StreamFormatError(f"offset 0: bad magic {blob[:8]!r}, expected {PTS1_MAGIC!r}")

    window_ps = int.from_bytes(blob[8:16], "little")
    count = int.from_bytes(blob[16:24], "little")
    if window_ps == 0:
        raise StreamFormatError("offset 8: observation window must be nonzero")

    expected = _HEADER_BYTES + 8 * count
    if len(blob) < expected:
        raise StreamFormatError(
            f"offset {len(blob)}: truncated payload, header promises {count} events "
            f"({expected} bytes total), file has {len(blob)} bytes"
        )

    times = np.frombuffer(blob, dtype="<u8", count=count, offset=_HEADER_BYTES).copy()
    bad_order = np.nonzero(times[1:] < times[:-1])[0]
    if bad_order.size:
        i = int(bad_order[0]) + 1
        raise StreamFormatError(
            f"offset {_HEADER_BYTES + 8 * i}: event {i} precedes event {i - 1}"
        )
    too_late = np.nonzero(times >= window_ps)[0]
    if too_late.size:
        i = int(too_late[0])
        raise StreamFormatError(
            f"offset {_HEADER_BYTES + 8 * i}: event {i} at {int(times[i])} ps "
            f"is outside the {window_ps} ps window"
        )
    return PhotonSequence(times, window_ps)
