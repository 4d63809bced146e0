"""Analytic error-rate and capacity models, plus photon-statistics diagnostics.

The decoding error model treats the spectral-line magnitude and the local
noise-floor magnitude as Gaussian variables with measured moments.  The
probability that one floor channel beats the line then has the closed form

    p = Phi(-(line_mean - floor_mean) / sqrt(line_std**2 + floor_std**2))

and a band of M channels misdecodes with probability 1 - (1 - p)**M.
Both the closed form and a literal numeric quadrature of the underlying
double Gaussian integral are provided; they agree to machine precision
and the closed form is the reference for rates below Monte-Carlo reach.

Capacity counts distinct k-subsets of the channel grid with exact
big-integer arithmetic, converts to bits per integration window, and
discounts by the binary entropy of the residual symbol error.

The remaining helpers are bench diagnostics: the intensity correlation
g2(tau) and Mandel Q statistics that certify the source's photon
statistics, the two-port interferometric modulator transfer curve, and
the white-floor exceedance boundary used to draw detection thresholds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .photon_channel import PhotonSequence
from .spectral import LineStats


class InsufficientDataError(ValueError):
    """Raised when a statistic is requested from too little data."""


# ---------------------------------------------------------------------------
# decoding error model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ErrorModelInput:
    """Gaussian moments of the line and floor magnitudes, plus band size."""

    line_mean: float
    line_std: float
    floor_mean: float
    floor_std: float
    channels: int

    def __post_init__(self) -> None:
        if self.line_std <= 0.0 or self.floor_std <= 0.0:
            raise ValueError("standard deviations must be positive")
        if self.channels < 1:
            raise ValueError("channels must be >= 1")

    @classmethod
    def from_line_stats(cls, stats: LineStats, channels: int) -> "ErrorModelInput":
        return cls(stats.line_mean, stats.line_std, stats.floor_mean,
                   stats.floor_std, channels)


def _norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def misdecode_prob(model: ErrorModelInput) -> float:
    """Probability that one floor channel outgrows the line, closed form.

    The difference of two independent Gaussians is Gaussian, so
    P(floor > line) reduces to a single normal CDF evaluation.
    """
    gap = model.line_mean - model.floor_mean
    spread = math.hypot(model.line_std, model.floor_std)
    return _norm_cdf(-gap / spread)


def misdecode_prob_quadrature(model: ErrorModelInput) -> float:
    """Same probability by direct numeric integration of the two-Gaussian overlap.

    Integrates P(floor > a) against the line-magnitude density over the
    standardized line variable.  Exists purely to cross-validate the
    closed form; agreement is within 1e-10 absolute.
    """
    mu_s, sd_s = model.line_mean, model.line_std
    mu_b, sd_b = model.floor_mean, model.floor_std

    def integrand(z: float) -> float:
        a = mu_s + sd_s * z
        return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi) * special.ndtr(
            -(a - mu_b) / sd_b
        )

    value, _ = integrate.quad(integrand, -12.0, 12.0, epsabs=1e-16, epsrel=1e-12, limit=200)
    return float(value)


def channel_error_rate(p: float, channels: int) -> float:
    """Band misdecode probability 1 - (1-p)**M in a numerically stable form."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be a probability")
    if channels < 1:
        raise ValueError("channels must be >= 1")
    if p == 1.0:
        return 1.0
    return -math.expm1(channels * math.log1p(-p))


# ---------------------------------------------------------------------------
# capacity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CapacityReport:
    """Channel-counting and throughput summary for one operating point."""

    m_opt: int
    m_max: int
    raw_bps: float
    effective_bps: float
    p_e: float
    entropy_term: float


def binary_entropy(p: float) -> float:
    """Entropy of a Bernoulli(p) in bits, with the 0*log(0) = 0 convention."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be a probability")
    if p == 0.0 or p == 1.0:
        return 0.0
    return float(-p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p))


def capacity(
    bandwidth: float,
    spacing: float,
    window: float,
    components: int,
    symbol_error: float = 0.0,
) -> CapacityReport:
    """Throughput of a k-tone alphabet over the available channel grid.

    The alphabet size is the exact binomial count of k-subsets of the
    channel grid; raw throughput is its log2 per integration window.  A
    nonzero residual symbol error discounts throughput by the binary
    entropy of the confusion probability, where a wrong symbol is assumed
    to land uniformly among the remaining alternatives (this is the source
    of the (m_max/(m_max - 1))/2 scaling).
    """
    if window <= 0.0:
        raise ValueError("window must be positive")
    if not 0.0 <= symbol_error <= 1.0:
        raise ValueError("symbol_error must be a probability")
    from .codec import effective_channels, optimal_channels  # local import avoids a cycle

    m_opt = optimal_channels(bandwidth, spacing)
    if components > m_opt:
        raise ValueError(f"cannot pick {components} tones from {m_opt} channels")
    m_max = effective_channels(m_opt, components)
    raw = math.log2(m_max) / window if m_max > 1 else 0.0
    if m_max > 1:
        p_e = symbol_error * (m_max / (m_max - 1)) / 2.0
    else:
        p_e = 0.0
    entropy = binary_entropy(p_e)
    return CapacityReport(
        m_opt=m_opt,
        m_max=m_max,
        raw_bps=raw,
        effective_bps=raw * (1.0 - entropy),
        p_e=p_e,
        entropy_term=entropy,
    )


# ---------------------------------------------------------------------------
# photon-statistics diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class G2Curve:
    """Second-order intensity correlation estimate on uniform lag bins."""

    lags: np.ndarray
    values: np.ndarray
    pair_counts: np.ndarray


def g2(seq: PhotonSequence, max_lag: float, bin_width: float) -> G2Curve:
    """Estimate g2(tau) by forward pair counting.

    Counts ordered pairs (i, j>i) with lag below ``max_lag`` into uniform
    bins and divides by the pair count a homogeneous stream of the same
    mean rate would produce per bin (count**2 * bin / window).  A
    homogeneous stream gives 1 at all lags; a depth-m tone at frequency f
    gives 1 + (m**2 / 2) * cos(2*pi*f*tau).
    """
    if bin_width <= 0.0 or max_lag < bin_width:
        raise ValueError("need bin_width > 0 and max_lag >= bin_width")
    t = seq.seconds
    n = t.size
    n_bins = int(round(max_lag / bin_width))
    edges = bin_width * np.arange(n_bins + 1)
    hist = np.zeros(n_bins, dtype=np.int64)

    # accumulate forward differences offset by offset; stop once the
    # smallest difference at an offset exceeds the horizon
    offset = 1
    while offset < n:
        d = t[offset:] - t[:-offset]
        inside = d < max_lag
        if not inside.any():
            break
        hist += np.histogram(d[inside], bins=edges)[0]
        offset += 1

    total_pairs = int(hist.sum())
    if total_pairs == 0:
        raise InsufficientDataError("no photon pairs within max_lag; need more events")
    expected_per_bin = n * n * bin_width / seq.window
    centers = edges[:-1] + 0.5 * bin_width
    return G2Curve(lags=centers, values=hist / expected_per_bin, pair_counts=hist)


def mandel_q(counts: np.ndarray | PhotonSequence, window: float | None = None) -> float:
    """Mandel Q = (Var(N) - E[N]) / E[N] over per-window photon counts.

    Accepts either an array of per-window counts or a single sequence plus
    a sub-window length, in which case the sequence is chopped into
    consecutive windows (a trailing partial window is discarded).  At
    least 100 windows are required.
    """
    if isinstance(counts, PhotonSequence):
        if window is None or window <= 0.0:
            raise ValueError("chopping a sequence requires a positive window")
        n_windows = int(np.floor(counts.window / window))
        if n_windows < 100:
            raise InsufficientDataError(
                f"only {n_windows} complete windows fit; need at least 100"
            )
        t = counts.seconds
        idx = np.floor(t / window).astype(np.int64)
        idx = idx[idx < n_windows]
        values = np.bincount(idx, minlength=n_windows).astype(np.float64)
    else:
        values = np.asarray(counts, dtype=np.float64)
        if values.size < 100:
            raise InsufficientDataError(f"{values.size} windows; need at least 100")
    mean = values.mean()
    if mean == 0.0:
        raise InsufficientDataError("all windows empty")
    return float((values.var(ddof=1) - mean) / mean)


def expected_mandel_q(rate: float, depth: float, frequency: float, window: float) -> float:
    """Analytic Q for a single tone observed over random-phase windows.

    By the law of total variance the count variance exceeds the Poisson
    value by the variance of the integrated rate across the uniform phase
    ensemble, giving

        Q = 2 * rate * depth**2 * sin(pi*f*w)**2 / ((2*pi*f)**2 * w)

    which vanishes whenever the window holds an integer number of
    modulation cycles.

    Consecutive windows of one sequence march through phase in steps of
    2*pi*f*w, so they only sample this ensemble when f*w is not close to
    a small rational; at f*w = 1/2, say, windows alternate between two
    fixed phases and the measured excess can reach twice this value.
    """
    w = 2.0 * np.pi * frequency
    swing = 2.0 * rate * depth * np.sin(0.5 * w * window) / w
    return float(swing**2 / (2.0 * rate * window))


def modulator_transfer(theta: float, mean_photons: float) -> tuple[float, float]:
    """Mean photon numbers at the two ports of an interferometric modulator.

    The constructive port passes mu*(1+cos(theta))/2 and the other port
    the complement; the two always sum to mu exactly.
    """
    if mean_photons < 0.0:
        raise ValueError("mean_photons must be >= 0")
    bright = mean_photons * (1.0 + math.cos(theta)) / 2.0
    return bright, mean_photons - bright


def noise_floor_boundary(count: float, n_frequencies: int, miss_prob: float = 0.002) -> float:
    """Magnitude below which a pure-noise scan stays with high probability.

    For a homogeneous stream of N events the squared floor magnitude at
    any fixed frequency is exponential with mean N, so by a union bound
    over n probe frequencies the maximum stays below
    sqrt(N * ln(n / miss_prob)) except with probability about miss_prob.
    """
    if count <= 0.0:
        raise ValueError("count must be positive")
    if n_frequencies < 1:
        raise ValueError("n_frequencies must be >= 1")
    if not 0.0 < miss_prob < 1.0:
        raise ValueError("miss_prob must be in (0, 1)")
    return float(np.sqrt(count * np.log(n_frequencies / miss_prob)))
