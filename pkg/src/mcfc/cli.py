"""Command-line interface.

One executable, nine subcommands:

    generate        sample a photon stream to a PTS1 file
    spectrum        scan a PTS1 file over a band, write a CSV spectrum
    encode          write one PTS1 window per symbol of a message
    decode          decode PTS1 windows back to symbols
    transmit-text   end-to-end channel simulation of a text message
    transmit-image  end-to-end channel simulation of a P6 image
    sweep           run a Monte-Carlo sweep from a JSON config
    capacity        print channel-counting and throughput figures
    stats           print photon-statistics diagnostics of a PTS1 file

Conventions: rates in counts/second, times in seconds, frequencies in Hz;
numeric flags accept scientific notation.  ``--seed`` falls back to the
MCFC_SEED environment variable, then to 0.  Exit codes: 0 success, 1 usage
error, 2 data/format error, 3 internal error.  Output files are written to
a temporary name and atomically renamed, so a failed run never leaves a
partial file behind.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys

import numpy as np

from . import __version__
from .analysis import InsufficientDataError, capacity, g2, mandel_q
from .codec import (
    DecodeError,
    FrequencyPlan,
    UnknownSymbolError,
    decode,
    encode_text,
    letter_plan,
    load_plan,
    read_pixmap,
    rgb_image_plan,
    write_pixmap,
)
from .harness import (
    SweepSpec,
    run_amplitude_nonlinearity,
    run_error_vs_components,
    run_error_vs_integration_time,
    run_error_vs_noise,
    run_error_vs_spacing,
    run_image_transmission,
    write_manifest,
    write_moments_csv,
    write_sweep_csv,
)
from .photon_channel import (
    LinkBudget,
    SourceConfig,
    StreamFormatError,
    Tone,
    derive_rng,
    read_pts1,
    transmit,
    write_pts1,
)
from .spectral import Band, periodogram

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class _UsageError(Exception):
    """Flag values that argparse cannot reject on its own."""


class _Parser(argparse.ArgumentParser):
    """argparse exits with code 2 on bad flags; this tool reserves 2 for
    data errors, so usage problems are remapped to exit 1."""

    def error(self, message: str):  # noqa: D102 - argparse override
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


@contextlib.contextmanager
def _atomic(path: str):
    """Yield a temp path; rename onto ``path`` only if the body succeeds."""
    tmp = f"{path}.tmp.{os.getpid()}"
    try:
        yield tmp
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.remove(tmp)
        raise


def _default_seed() -> int:
    return int(os.environ.get("MCFC_SEED", "0"))


def _budget_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--transmittance", type=float, default=1.0)
    parser.add_argument("--noise-rate", type=float, default=0.0, help="background counts/s")
    parser.add_argument("--dark-rate", type=float, default=0.0, help="detector dark counts/s")
    parser.add_argument("--jitter", type=float, default=0.0, help="timing jitter sigma, s")
    parser.add_argument("--dead-time", type=float, default=0.0, help="detector dead time, s")
    parser.add_argument("--rep-period", type=float, default=None,
                        help="gated-detector clock period, s (gating off when omitted)")


def _budget_from(args: argparse.Namespace) -> LinkBudget:
    return LinkBudget(
        transmittance=args.transmittance,
        noise_rate=args.noise_rate,
        dark_rate=args.dark_rate,
        jitter_sigma=args.jitter,
        dead_time=args.dead_time,
        rep_period=args.rep_period,
    )


def _plan_from(name: str) -> FrequencyPlan:
    if name == "rgb":
        return rgb_image_plan()
    if name == "letters":
        return letter_plan()
    if os.path.exists(name):
        return load_plan(name)
    raise _UsageError(f"--plan must be 'rgb', 'letters', or a plan file; got {name!r}")


def _parse_tone(text: str) -> Tone:
    """Parse FREQ[,DEPTH[,PHASE]]."""
    parts = text.split(",")
    try:
        freq = float(parts[0])
        depth = float(parts[1]) if len(parts) > 1 else 1.0
        phase = float(parts[2]) if len(parts) > 2 else 0.0
        return Tone(freq, phase, depth)
    except (ValueError, IndexError) as exc:
        raise _UsageError(f"bad --tone {text!r}: {exc}") from None


# ---------------------------------------------------------------------------
# subcommand bodies
# ---------------------------------------------------------------------------

def _cmd_generate(args) -> int:
    tones = tuple(_parse_tone(t) for t in args.tone or [])
    try:
        config = SourceConfig(args.rate, args.duration, tones)
        budget = _budget_from(args)
    except ValueError as exc:
        raise _UsageError(str(exc)) from None
    seq = transmit(config, budget, derive_rng(args.seed, "generate"))
    with _atomic(args.out) as tmp:
        write_pts1(tmp, seq)
    print(f"wrote {args.out}: {len(seq)} events over {seq.window:g} s")
    return EXIT_OK


def _cmd_spectrum(args) -> int:
    seq = read_pts1(args.input)
    spec = periodogram(seq, Band(args.low, args.high), args.resolution)
    with _atomic(args.out) as tmp:
        spec.to_csv(tmp)
    peak = int(np.argmax(spec.magnitude)) if len(seq) else 0
    print(f"wrote {args.out}: {spec.frequencies.size} points, "
          f"peak {spec.magnitude[peak]:.3f} at {spec.frequencies[peak]:g} Hz")
    return EXIT_OK


def _cmd_encode(args) -> int:
    plan = _plan_from(args.plan)
    tone_sets = encode_text(plan, args.text)
    os.makedirs(args.out_dir, exist_ok=True)
    budget = LinkBudget()
    paths = []
    for i, tones in enumerate(tone_sets):
        rng = derive_rng(args.seed, "encode", i)
        seq = transmit(SourceConfig(args.rate, args.window, tones), budget, rng)
        path = os.path.join(args.out_dir, f"symbol_{i:04d}.pts1")
        with _atomic(path) as tmp:
            write_pts1(tmp, seq)
        paths.append(path)
    print(f"wrote {len(paths)} windows to {args.out_dir}")
    return EXIT_OK


def _cmd_decode(args) -> int:
    plan = _plan_from(args.plan)
    out = []
    for path in args.inputs:
        sym = decode(read_pts1(path), plan)
        out.append(sym.value if isinstance(sym.value, str) else repr(sym.value))
    print("".join(out))
    return EXIT_OK


def _cmd_transmit_text(args) -> int:
    plan = _plan_from(args.plan)
    tone_sets = encode_text(plan, args.text)
    budget = _budget_from(args)
    decoded = []
    for i, tones in enumerate(tone_sets):
        rng = derive_rng(args.seed, "transmit-text", i)
        seq = transmit(SourceConfig(args.rate, args.window, tones), budget, rng)
        try:
            decoded.append(str(decode(seq, plan).value))
        except DecodeError:
            decoded.append("?")
    print("".join(decoded))
    return EXIT_OK


def _cmd_transmit_image(args) -> int:
    pixels = read_pixmap(args.input)
    plan = rgb_image_plan() if args.plan == "rgb" else _plan_from(args.plan)
    received, report = run_image_transmission(
        pixels, plan, args.rate, _budget_from(args), args.seed, args.window
    )
    with _atomic(args.out) as tmp:
        write_pixmap(tmp, received)
    print(f"wrote {args.out}: {report.pixel_errors}/{report.pixels} pixel errors "
          f"({report.pixel_error_rate:.4f}), {report.failed_pixels} undecodable")
    for name, count in report.band_errors.items():
        print(f"  band {name}: {count} symbol errors")
    return EXIT_OK


_SWEEPS = {
    "error-vs-noise": (run_error_vs_noise, write_sweep_csv),
    "error-vs-integration-time": (run_error_vs_integration_time, write_sweep_csv),
    "error-vs-spacing": (run_error_vs_spacing, write_sweep_csv),
    "error-vs-components": (run_error_vs_components, write_sweep_csv),
    "amplitude": (run_amplitude_nonlinearity, write_moments_csv),
}


def _cmd_sweep(args) -> int:
    with open(args.config) as fh:
        doc = json.load(fh)
    kind = doc.get("sweep")
    if kind not in _SWEEPS:
        raise ValueError(f"config 'sweep' must be one of {sorted(_SWEEPS)}, got {kind!r}")
    budget = LinkBudget(**doc.get("budget", {}))
    spec_fields = {
        k: doc[k]
        for k in ("grid", "trials", "seed", "window", "signal_rate",
                  "modulation_frequency", "spacing", "channels_per_band",
                  "components", "mean_count")
        if k in doc
    }
    spec = SweepSpec(budget=budget, **spec_fields)
    runner, writer = _SWEEPS[kind]
    points = runner(spec)

    os.makedirs(args.out_dir, exist_ok=True)
    csv_path = os.path.join(args.out_dir, f"{kind}.csv")
    manifest_path = os.path.join(args.out_dir, "manifest.json")
    with _atomic(csv_path) as tmp:
        writer(tmp, points)
    with _atomic(manifest_path) as tmp:
        write_manifest(tmp, doc, [os.path.basename(csv_path)])
    print(f"wrote {csv_path} ({len(points)} points) and {manifest_path}")
    return EXIT_OK


def _cmd_capacity(args) -> int:
    if args.k < 1:
        raise _UsageError(f"--k must be >= 1, got {args.k}")
    if args.bandwidth <= 0 or args.spacing <= 0 or args.window <= 0:
        raise _UsageError("--bandwidth, --spacing, and --window must be positive")
    if not 0.0 <= args.error <= 1.0:
        raise _UsageError("--error must be a probability in [0, 1]")
    report = capacity(args.bandwidth, args.spacing, args.window, args.k, args.error)
    print(f"channels: {report.m_opt}")
    print(f"symbols: {report.m_max}")
    print(f"raw: {report.raw_bps:.6g} bps")
    print(f"effective: {report.effective_bps:.6g} bps")
    print(f"confusion probability: {report.p_e:.6g}")
    print(f"entropy discount: {report.entropy_term:.6g} bits")
    return EXIT_OK


def _cmd_stats(args) -> int:
    seq = read_pts1(args.input)
    rate = len(seq) / seq.window if seq.window else 0.0
    print(f"events: {len(seq)}")
    print(f"window: {seq.window:g} s")
    print(f"mean rate: {rate:.6g} counts/s")
    if args.mandel_window is not None:
        q = mandel_q(seq, args.mandel_window)
        print(f"mandel_q({args.mandel_window:g} s windows): {q:.6g}")
    if args.g2_max_lag is not None:
        if args.g2_bin is None:
            raise _UsageError("--g2-max-lag requires --g2-bin")
        curve = g2(seq, args.g2_max_lag, args.g2_bin)
        print(f"g2: {curve.lags.size} bins, min {curve.values.min():.4f}, "
              f"max {curve.values.max():.4f}, mean {curve.values.mean():.4f}")
        if args.out:
            with _atomic(args.out) as tmp, open(tmp, "w") as fh:
                fh.write("lag_s,g2,pairs\n")
                for lag, v, n in zip(curve.lags, curve.values, curve.pair_counts):
                    fh.write(f"{float(lag)!r},{float(v)!r},{int(n)}\n")
            print(f"wrote {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser assembly
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mcfc", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"mcfc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="sample a photon stream to a PTS1 file")
    p.add_argument("--rate", type=float, required=True, help="mean detected counts/s")
    p.add_argument("--tone", action="append", metavar="FREQ[,DEPTH[,PHASE]]",
                   help="modulation tone; repeatable")
    p.add_argument("--duration", type=float, required=True, help="window length, s")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", required=True)
    _budget_flags(p)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("spectrum", help="scan a PTS1 file over a band")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--low", type=float, required=True, help="band low edge, Hz")
    p.add_argument("--high", type=float, required=True, help="band high edge, Hz")
    p.add_argument("--resolution", type=float, required=True, help="grid step, Hz")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("encode", help="write one clean PTS1 window per symbol")
    p.add_argument("--plan", default="letters")
    p.add_argument("--rate", type=float, default=160_000.0)
    p.add_argument("--window", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out-dir", required=True)
    p.add_argument("text")
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("decode", help="decode PTS1 windows to symbols")
    p.add_argument("--plan", default="letters")
    p.add_argument("inputs", nargs="+")
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("transmit-text", help="end-to-end text transmission")
    p.add_argument("--plan", default="letters")
    p.add_argument("--rate", type=float, default=80_000.0)
    p.add_argument("--window", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=_default_seed())
    _budget_flags(p)
    p.add_argument("text")
    p.set_defaults(func=_cmd_transmit_text)

    p = sub.add_parser("transmit-image", help="end-to-end image transmission")
    p.add_argument("--in", dest="input", required=True, help="P6 pixmap")
    p.add_argument("--out", required=True, help="received P6 pixmap")
    p.add_argument("--plan", default="rgb")
    p.add_argument("--rate", type=float, default=80_000.0)
    p.add_argument("--window", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=_default_seed())
    _budget_flags(p)
    p.set_defaults(func=_cmd_transmit_image)

    p = sub.add_parser("sweep", help="run a Monte-Carlo sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("capacity", help="channel counting and throughput")
    p.add_argument("--bandwidth", type=float, required=True)
    p.add_argument("--spacing", type=float, required=True)
    p.add_argument("--window", type=float, required=True)
    p.add_argument("--k", type=int, required=True, help="tones per symbol")
    p.add_argument("--error", type=float, default=0.0, help="residual symbol error")
    p.set_defaults(func=_cmd_capacity)

    p = sub.add_parser("stats", help="photon-statistics diagnostics")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--mandel-window", type=float, default=None)
    p.add_argument("--g2-max-lag", type=float, default=None)
    p.add_argument("--g2-bin", type=float, default=None)
    p.add_argument("--out", default=None, help="optional g2 CSV path")
    p.set_defaults(func=_cmd_stats)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse: 0 for --help/--version, 1 for usage
        return int(exc.code or 0)

    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (StreamFormatError, DecodeError, UnknownSymbolError, InsufficientDataError,
            FileNotFoundError, IsADirectoryError, PermissionError,
            json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
