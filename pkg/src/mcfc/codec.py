"""Mapping between symbols and sets of modulation frequencies.

A frequency plan divides the usable modulation band into named sub-bands,
each holding a ladder of equally spaced channels, and carries an explicit
bijection between symbols and tone sets (one active channel per band).
The decoder picks, per band, the channel with the strongest phasor-sum
magnitude and maps the recovered frequency set back through the bijection.

Two ready-made plans cover the common cases:

* :func:`rgb_image_plan` — three bands (one per color component) of 11
  channels each, so a pixel quantized to 11 intensity levels per component
  is one symbol carrying three concurrent tones.
* :func:`letter_plan` — a single band of 26 channels, one per uppercase
  letter, i.e. classic one-tone-per-symbol signalling.

Plans serialize to a JSON document that spells out every symbol's
frequencies, so transmit and receive ends can share them as files.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .photon_channel import PhotonSequence, Tone
from .spectral import point_dft_many

#: Color written into a reconstructed image where decoding failed outright.
FAILED_PIXEL = (255, 0, 255)

#: Number of quantization levels per color component in the image plan.
IMAGE_LEVELS = 11

_KINDS = ("gray-level", "character", "raw-index")


class UnknownSymbolError(ValueError):
    """Raised when asked to encode a symbol outside the plan's alphabet."""


class DecodeError(ValueError):
    """Raised when a window cannot be decoded; carries the recovered frequencies."""

    def __init__(self, message: str, frequencies: tuple[float, ...] = ()):
        super().__init__(message)
        self.frequencies = frequencies


# ---------------------------------------------------------------------------
# symbols
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Symbol:
    """One alphabet element: an intensity-level tuple, a character, or an index."""

    kind: str
    value: tuple[int, ...] | str | int

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown symbol kind {self.kind!r}, expected one of {_KINDS}")
        if self.kind == "gray-level":
            object.__setattr__(self, "value", tuple(int(v) for v in self.value))

    @classmethod
    def gray(cls, *levels: int) -> "Symbol":
        return cls("gray-level", tuple(levels))

    @classmethod
    def character(cls, ch: str) -> "Symbol":
        return cls("character", ch)

    @classmethod
    def index(cls, i: int) -> "Symbol":
        return cls("raw-index", int(i))


# ---------------------------------------------------------------------------
# channel counting
# ---------------------------------------------------------------------------

def optimal_channels(bandwidth: float, spacing: float) -> int:
    """Distinct channels a bandwidth supports at a given spacing (fencepost count)."""
    if bandwidth <= 0.0 or spacing <= 0.0:
        raise ValueError("bandwidth and spacing must be positive")
    return int(math.floor(bandwidth / spacing)) + 1


def effective_channels(m_opt: int, k: int) -> int:
    """Distinct k-subsets of m_opt channels, exact arbitrary-precision count."""
    if not 1 <= k <= m_opt:
        raise ValueError(f"need 1 <= k <= m_opt, got k={k}, m_opt={m_opt}")
    return math.comb(m_opt, k)


# ---------------------------------------------------------------------------
# plans
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NamedBand:
    """A named sub-band with its channel ladder.

    ``channels`` are ordered by symbol index: channel ``i`` is the
    frequency transmitted for index ``i`` in this band.
    """

    name: str
    low: float
    high: float
    channels: tuple[float, ...]

    def __post_init__(self) -> None:
        if not 0.0 < self.low < self.high:
            raise ValueError(f"band {self.name!r}: need 0 < low < high")
        if not self.channels:
            raise ValueError(f"band {self.name!r} has no channels")
        for f in self.channels:
            if not (self.low <= f <= self.high):
                raise ValueError(
                    f"band {self.name!r}: channel {f} Hz outside [{self.low}, {self.high}]"
                )
        object.__setattr__(self, "channels", tuple(float(f) for f in self.channels))

    def __len__(self) -> int:
        return len(self.channels)


@dataclass(frozen=True)
class FrequencyPlan:
    """Bands plus an explicit symbol <-> tone-set bijection.

    ``symbol_map`` assigns every symbol a tuple of channel frequencies, one
    per band in band order.  Construction validates that the map is a
    bijection, that every frequency belongs to the owning band's ladder,
    that ladders are uniformly spaced, and that the plan does not promise
    more channels than its bandwidth supports.
    """

    name: str
    spacing: float
    bands: tuple[NamedBand, ...]
    symbol_map: Mapping[Symbol, tuple[float, ...]] = field(repr=False)

    def __post_init__(self) -> None:
        if not self.bands:
            raise ValueError("plan needs at least one band")
        if self.spacing <= 0.0:
            raise ValueError("spacing must be positive")
        object.__setattr__(self, "bands", tuple(self.bands))
        object.__setattr__(self, "symbol_map", dict(self.symbol_map))

        all_channels = [f for band in self.bands for f in band.channels]
        if len(set(all_channels)) != len(all_channels):
            raise ValueError("channel frequencies must be unique across the plan")
        for band in self.bands:
            ladder = np.sort(np.asarray(band.channels))
            if ladder.size > 1 and not np.allclose(np.diff(ladder), self.spacing, rtol=0, atol=1e-6):
                raise ValueError(f"band {band.name!r}: channels not spaced by {self.spacing} Hz")
        if len(all_channels) > optimal_channels(self.total_bandwidth, self.spacing):
            raise ValueError("more channels than the plan bandwidth supports")

        seen: dict[tuple[float, ...], Symbol] = {}
        for sym, freqs in self.symbol_map.items():
            if len(freqs) != len(self.bands):
                raise ValueError(f"symbol {sym} maps to {len(freqs)} tones, plan has "
                                 f"{len(self.bands)} bands")
            for band, f in zip(self.bands, freqs):
                if f not in band.channels:
                    raise ValueError(f"symbol {sym}: {f} Hz is not a channel of band "
                                     f"{band.name!r}")
            key = tuple(freqs)
            if key in seen:
                raise ValueError(f"symbols {seen[key]} and {sym} share tone set {key}")
            seen[key] = sym
        object.__setattr__(self, "_inverse", seen)

    @property
    def components(self) -> int:
        """Tones transmitted per symbol (= number of bands)."""
        return len(self.bands)

    @property
    def total_bandwidth(self) -> float:
        return float(sum(b.high - b.low for b in self.bands))

    def band(self, name: str) -> NamedBand:
        for b in self.bands:
            if b.name == name:
                return b
        raise KeyError(name)

    def frequencies_for(self, symbol: Symbol) -> tuple[float, ...]:
        try:
            return self.symbol_map[symbol]
        except KeyError:
            raise UnknownSymbolError(
                f"symbol {symbol} is not in plan {self.name!r}"
            ) from None

    def symbol_for(self, frequencies: Sequence[float]) -> Symbol:
        key = tuple(float(f) for f in frequencies)
        inverse: dict[tuple[float, ...], Symbol] = getattr(self, "_inverse")
        if key not in inverse:
            raise DecodeError(f"frequency set {key} matches no symbol of plan "
                              f"{self.name!r}", key)
        return inverse[key]


# ---------------------------------------------------------------------------
# stock plans
# ---------------------------------------------------------------------------

def rgb_image_plan(spacing: float = 1000.0) -> FrequencyPlan:
    """Three 11-channel bands for image pixels, one band per color component.

    Level 0 of each component sits near the top of its band and deeper
    levels step downward by one channel spacing.  The alphabet is every
    (red, green, blue) level triple.
    """
    def ladder(top: float) -> tuple[float, ...]:
        return tuple(top - i * spacing for i in range(IMAGE_LEVELS))

    bands = (
        NamedBand("red", 60_000.0, 80_000.0, ladder(75_000.0)),
        NamedBand("green", 40_000.0, 60_000.0, ladder(55_000.0)),
        NamedBand("blue", 20_000.0, 40_000.0, ladder(35_000.0)),
    )
    symbol_map = {
        Symbol.gray(r, g, b): (bands[0].channels[r], bands[1].channels[g], bands[2].channels[b])
        for r, g, b in itertools.product(range(IMAGE_LEVELS), repeat=3)
    }
    return FrequencyPlan("rgb-image", spacing, bands, symbol_map)


def letter_plan(spacing: float = 1000.0) -> FrequencyPlan:
    """One 26-channel band mapping A..Z onto an ascending frequency ladder."""
    channels = tuple(50_000.0 + i * spacing for i in range(26))
    band = NamedBand("letters", 50_000.0, 75_000.0, channels)
    symbol_map = {
        Symbol.character(chr(ord("A") + i)): (channels[i],) for i in range(26)
    }
    return FrequencyPlan("letters", spacing, (band,), symbol_map)


# ---------------------------------------------------------------------------
# encode / decode
# ---------------------------------------------------------------------------

def encode(symbols: Iterable[Symbol], plan: FrequencyPlan, depth: float = 1.0) -> list[tuple[Tone, ...]]:
    """Map symbols to tone sets (full depth, zero phase), one set per window."""
    return [
        tuple(Tone(f, 0.0, depth) for f in plan.frequencies_for(sym))
        for sym in symbols
    ]


def encode_text(plan: FrequencyPlan, text: str, depth: float = 1.0) -> list[tuple[Tone, ...]]:
    """Shortcut for character alphabets."""
    return encode((Symbol.character(ch) for ch in text), plan, depth)


def decode(seq: PhotonSequence, plan: FrequencyPlan) -> Symbol:
    """Decode one window: strongest channel per band, then inverse lookup.

    Ties inside a band resolve to the lowest-index channel.  An empty
    window carries no information and raises :class:`DecodeError`.
    """
    if len(seq) == 0:
        raise DecodeError("empty sequence: no events to decode")
    freqs = []
    for band in plan.bands:
        mags = np.abs(point_dft_many(seq, np.asarray(band.channels)))
        freqs.append(band.channels[int(np.argmax(mags))])
    return plan.symbol_for(freqs)


# ---------------------------------------------------------------------------
# image quantization
# ---------------------------------------------------------------------------

def quantize_level(byte_value: int | np.ndarray) -> int | np.ndarray:
    """Quantize an 8-bit component to the plan's level grid (0..10)."""
    scaled = np.round(np.asarray(byte_value, dtype=np.float64) * (IMAGE_LEVELS - 1) / 255.0)
    out = scaled.astype(np.int64)
    return int(out) if out.ndim == 0 else out


def level_to_byte(level: int | np.ndarray) -> int | np.ndarray:
    """Inverse of :func:`quantize_level` onto the 8-bit grid."""
    scaled = np.round(np.asarray(level, dtype=np.float64) * 255.0 / (IMAGE_LEVELS - 1))
    out = scaled.astype(np.uint8)
    return int(out) if out.ndim == 0 else out


def image_to_symbols(pixels: np.ndarray) -> list[Symbol]:
    """Quantize an (h, w, 3) uint8 image to level-triple symbols, row-major."""
    arr = np.asarray(pixels)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected an (h, w, 3) image, got shape {arr.shape}")
    levels = quantize_level(arr.reshape(-1, 3))
    return [Symbol.gray(*row) for row in levels.tolist()]


def encode_image(pixels: np.ndarray, plan: FrequencyPlan, depth: float = 1.0) -> list[tuple[Tone, ...]]:
    """Quantize and encode an image, one three-tone set per pixel."""
    return encode(image_to_symbols(pixels), plan, depth)


def symbols_to_image(symbols: Sequence[Symbol | None], shape: tuple[int, int]) -> np.ndarray:
    """Rebuild an (h, w, 3) uint8 image from decoded level-triple symbols.

    ``None`` entries mark windows that failed to decode; those pixels
    render as :data:`FAILED_PIXEL`.
    """
    h, w = shape
    if len(symbols) != h * w:
        raise ValueError(f"{len(symbols)} symbols cannot fill a {h}x{w} image")
    out = np.zeros((h * w, 3), dtype=np.uint8)
    for i, sym in enumerate(symbols):
        if sym is None:
            out[i] = FAILED_PIXEL
        else:
            out[i] = [level_to_byte(v) for v in sym.value]
    return out.reshape(h, w, 3)


# ---------------------------------------------------------------------------
# portable pixmap (P6) I/O
# ---------------------------------------------------------------------------

def read_pixmap(path: str | os.PathLike) -> np.ndarray:
    """Read a binary P6 pixmap with maxval 255 into an (h, w, 3) uint8 array."""
    with open(path, "rb") as fh:
        blob = fh.read()

    pos = 0

    def next_token() -> bytes:
        nonlocal pos
        while pos < len(blob):
            if blob[pos:pos + 1].isspace():
                pos += 1
            elif blob[pos:pos + 1] == b"#":
                while pos < len(blob) and blob[pos:pos + 1] != b"\n":
                    pos += 1
            else:
                break
        start = pos
        while pos < len(blob) and not blob[pos:pos + 1].isspace():
            pos += 1
        return blob[start:pos]

    magic = next_token()
    if magic != b"P6":
        raise ValueError(f"not a binary pixmap: magic {magic!r}")
    fields = []
    for _ in range(3):
        token = next_token()
        if not token.isdigit():
            raise ValueError(f"malformed pixmap header near byte {pos}")
        fields.append(int(token))
    width, height, maxval = fields
    if maxval != 255:
        raise ValueError(f"only maxval 255 supported, got {maxval}")
    pos += 1  # single whitespace after maxval
    need = width * height * 3
    data = blob[pos:pos + need]
    if len(data) < need:
        raise ValueError(f"pixmap payload truncated: need {need} bytes, got {len(data)}")
    return np.frombuffer(data, dtype=np.uint8).reshape(height, width, 3).copy()


def write_pixmap(path: str | os.PathLike, pixels: np.ndarray) -> None:
    """Write an (h, w, 3) uint8 array as a binary P6 pixmap."""
    arr = np.ascontiguousarray(pixels, dtype=np.uint8)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected an (h, w, 3) image, got shape {arr.shape}")
    h, w = arr.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(arr.tobytes())


# ---------------------------------------------------------------------------
# plan serialization
# ---------------------------------------------------------------------------

def _symbol_to_json(sym: Symbol) -> dict:
    value = list(sym.value) if isinstance(sym.value, tuple) else sym.value
    return {"kind": sym.kind, "value": value}


def _symbol_from_json(doc: dict) -> Symbol:
    value = doc["value"]
    if doc["kind"] == "gray-level":
        value = tuple(int(v) for v in value)
    return Symbol(doc["kind"], value)


def save_plan(path: str | os.PathLike, plan: FrequencyPlan) -> None:
    """Write a plan as JSON with the full symbol -> frequencies table."""
    doc = {
        "format": "mcfc-plan-1",
        "name": plan.name,
        "bandwidth_hz": plan.total_bandwidth,
        "spacing_hz": plan.spacing,
        "components": plan.components,
        "bands": [
            {"name": b.name, "low_hz": b.low, "high_hz": b.high, "channels_hz": list(b.channels)}
            for b in plan.bands
        ],
        "symbols": [
            {**_symbol_to_json(sym), "frequencies_hz": list(freqs)}
            for sym, freqs in plan.symbol_map.items()
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_plan(path: str | os.PathLike) -> FrequencyPlan:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != "mcfc-plan-1":
        raise ValueError(f"unrecognized plan format tag {doc.get('format')!r}")
    bands = tuple(
        NamedBand(b["name"], float(b["low_hz"]), float(b["high_hz"]),
                  tuple(float(f) for f in b["channels_hz"]))
        for b in doc["bands"]
    )
    symbol_map = {
        _symbol_from_json(s): tuple(float(f) for f in s["frequencies_hz"])
        for s in doc["symbols"]
    }
    return FrequencyPlan(doc["name"], float(doc["spacing_hz"]), bands, symbol_map)
