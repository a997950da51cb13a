"""Command-line entry point: defocus-otf <subcommand> [flags].

Exit codes: 0 success, 1 usage error, 2 numeric failure (or partial sweep),
3 I/O failure.
"""
import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from .config import Settings, get_settings, parse_length, setup_logging
from .optics.errors import (
    ConfigError,
    FitError,
    OpticsError,
    QuadratureError,
    TableSchemaError,
)
from .optics.gaussian_fit import fit_sigma_equal_area, gaussian
from .optics.geometry import coc_from_depth, state_from_coc, state_from_wavefront
from .optics.models import CameraConfig, SpectralModel
from .optics.mono_otf import defocus_transfer, defocused_otf_exact, diffraction_otf
from .optics.spectral_otf import mtf, polychromatic_otf
from .services.file_generator import (
    FileGenerator,
    emit_statistics,
    emit_table,
    read_table,
    schema_of,
)
from .services.schemas import FilterCriteria, SweepGrid
from .services.sweep import depth_statistics, filter_records, run_sweep

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2
EXIT_IO = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _length(text: str) -> float:
    try:
        return parse_length(text)
    except ConfigError as e:
        raise argparse.ArgumentTypeError(str(e))


def _lengths(text: str) -> List[float]:
    return [_length(part) for part in text.split(",") if part.strip()]


def _floats(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _fmt(value: float) -> str:
    return f"{value:.10g}"


def _write_rows(path: str, header: Sequence[str], rows) -> None:
    if path == "-":
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _spectral(settings: Settings, args) -> SpectralModel:
    overrides = {
        "lambda_min": args.lambda_min,
        "lambda_max": args.lambda_max,
        "temperature": args.temperature,
        "lambda_samples": args.lambda_samples,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    base = settings.spectral()
    try:
        return SpectralModel(**{**base.model_dump(), **overrides})
    except ValidationError as e:
        raise ConfigError(f"Invalid spectral settings: {e.errors()[0]['msg']}") from e


def cmd_otf_mono(args, settings: Settings) -> int:
    if args.ar_over_lambda < 0:
        raise UsageError("--ar-over-lambda must be non-negative")
    if args.samples < 2:
        raise UsageError("--samples must be at least 2")
    quad = settings.quadrature()
    s = np.linspace(0.0, 1.0, args.samples)
    h_def = np.asarray(defocused_otf_exact(s, args.ar_over_lambda, quad))
    h_o = np.asarray(diffraction_otf(s))
    transfer = defocus_transfer(s, args.ar_over_lambda, quad, mode=args.mode)
    approx = defocus_transfer(s, args.ar_over_lambda, quad, mode="approx")
    rows = [
        [_fmt(s[i]), _fmt(h_def[i]), _fmt(h_o[i]), _fmt(transfer.value[i]), _fmt(approx.value[i])]
        for i in range(s.size)
    ]
    _write_rows(args.out, ("s", "h_def_o", "h_o", "h_transfer", "h_approx"), rows)
    for i in np.flatnonzero(transfer.limit):
        logger.info("[CLI] Row %d (s=%g) holds the limit value of the transfer", i + 1, s[i])
    return EXIT_OK


def cmd_otf_spectral(args, settings: Settings) -> int:
    camera = CameraConfig.build(
        focal_length=args.f,
        f_number=args.fn,
        focus_distance=args.df,
        pixel_pitch=args.pixel,
    )
    if args.depth_offset is not None:
        state = coc_from_depth(camera, args.depth_offset)
    elif args.coc_px is not None:
        state = state_from_coc(camera, args.coc_px * camera.pixel_pitch)
    else:
        state = state_from_wavefront(camera, args.ar_px * camera.pixel_pitch)

    curve = polychromatic_otf(
        camera,
        state,
        _spectral(settings, args),
        args.freq_samples or settings.freq_samples,
        settings.quadrature(),
    )
    filt = mtf(curve)
    fit = fit_sigma_equal_area(filt)
    fitted = gaussian(curve.frequencies, fit.sigma)
    rows = [
        [_fmt(u), _fmt(h), _fmt(m), _fmt(g)]
        for u, h, m, g in zip(curve.frequencies, curve.values, filt.values, fitted)
    ]
    _write_rows(args.out, ("u_cpp", "h_def", "mtf", "gauss_fit"), rows)

    summary = f"sigma={fit.sigma:.4f} px  mae={fit.mae:.4g}  rmse={fit.rmse:.4g}"
    if args.out == "-":
        # stdout carries the CSV; no sidecar
        print(summary, file=sys.stderr)
        return EXIT_OK

    sidecar = Path(args.out).with_suffix(".json")
    with open(sidecar, "w") as f:
        json.dump(
            {
                "sigma_px": fit.sigma,
                "mae": fit.mae,
                "rmse": fit.rmse,
                "matched_area": fit.matched_area,
                "coc_px": state.coc_diameter / camera.pixel_pitch,
                "ar_px": state.wavefront_coefficient / camera.pixel_pitch,
                "depth_offset_m": state.depth_offset,
                "camera": camera.model_dump(),
            },
            f,
            indent=2,
        )
        f.write("\n")
    print(summary)
    return EXIT_OK


def _grid(args, settings: Settings) -> SweepGrid:
    base = SweepGrid.reduced() if args.reduced else SweepGrid.standard()
    overrides = {
        "f_numbers": args.f_numbers,
        "focus_distances": args.focus_distances,
        "c_max_values": args.c_max,
        "pixel_pitches": args.pixels,
        "eta": args.eta,
        "n_depth": args.n_depth or settings.depth_points,
        "reference_focus_distance": args.reference_df,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    try:
        return SweepGrid(**{**base.model_dump(), **overrides})
    except ValidationError as e:
        raise UsageError(f"Invalid sweep grid: {e.errors()[0]['msg']}") from e


def cmd_sweep(args, settings: Settings) -> int:
    grid = _grid(args, settings)
    jobs = args.jobs if args.jobs is not None else settings.jobs
    if jobs < 1:
        raise UsageError("--jobs must be at least 1")
    started = time.perf_counter()
    records = run_sweep(
        grid,
        _spectral(settings, args),
        settings.quadrature(),
        collapse_depth=not args.full,
        jobs=jobs,
        freq_samples=settings.freq_samples,
    )
    emit_table(records, args.format, args.out, schema="full" if args.full else "collapsed")
    if args.full and args.stats:
        emit_statistics(depth_statistics([r for r in records if r.ok]), args.stats)
    failed = sum(1 for r in records if not r.ok)
    print(f"{len(records)} records ({failed} failed) in {time.perf_counter() - started:.1f} s")
    return EXIT_NUMERIC if failed else EXIT_OK


def cmd_filter(args, settings: Settings) -> int:
    try:
        criteria = FilterCriteria(
            mae_threshold=args.mae_max,
            sigma_lower=args.sigma_min,
            sigma_upper=args.sigma_max,
            pixel_max=args.pixel_max,
            focal_max=args.focal_max,
            pixel_exact=args.pixel_exact,
        )
    except ValidationError as e:
        raise UsageError(f"Invalid filter criteria: {e.errors()[0]['msg']}") from e
    records = read_table(args.input)
    kept, counts = filter_records(records, criteria)
    fmt = "json" if Path(args.out).suffix.lower() == ".json" else "csv"
    emit_table(kept, fmt, args.out, schema=schema_of(records))
    stats_path = args.stats or str(Path(args.out).with_name(Path(args.out).stem + "_stats.csv"))
    emit_statistics(depth_statistics(kept), stats_path)
    print(len(kept))
    for d_f, n in counts.items():
        logger.info("[CLI] d_f=%g m: %d records", d_f, n)
    return EXIT_OK


def cmd_plot(args, settings: Settings) -> int:
    FileGenerator().render_csv_plot(
        args.input,
        args.out,
        x_column=args.x,
        y_columns=args.y,
        x_label=args.x_label,
        y_label=args.y_label or "",
        title=args.title or "",
    )
    return EXIT_OK


def _add_spectral_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda-min", type=_length, help="shortest wavelength, e.g. 200nm")
    p.add_argument("--lambda-max", type=_length, help="longest wavelength, e.g. 2um")
    p.add_argument("--temperature", type=float, help="black-body temperature in kelvin")
    p.add_argument("--lambda-samples", type=int, help="wavelength nodes")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="defocus-otf", description="Defocus OTFs, Gaussian blur fits and settings sweeps")
    parser.add_argument("--config", help="key=value file overriding quadrature/spectral settings")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("otf-mono", help="monochrome OTF and transfer over s in [0, 1]")
    p.add_argument("--ar-over-lambda", type=float, required=True, help="defocus severity A_R/lambda")
    p.add_argument("--samples", type=int, default=101)
    p.add_argument("--mode", choices=("exact", "approx"), default="exact", help="h_transfer column mode")
    p.add_argument("--out", default="-", help="CSV path ('-' for stdout)")
    p.set_defaults(handler=cmd_otf_mono)

    p = sub.add_parser("otf-spectral", help="black-body OTF, its MTF and the fitted Gaussian")
    p.add_argument("--f", type=_length, required=True, help="focal length, e.g. 15mm")
    p.add_argument("--fn", type=float, required=True, help="f-number")
    p.add_argument("--df", type=_length, required=True, help="focused depth, e.g. 1m")
    p.add_argument("--pixel", type=_length, required=True, help="pixel pitch, e.g. 5.6um")
    which = p.add_mutually_exclusive_group(required=True)
    which.add_argument("--coc-px", type=float, help="blur-circle diameter in pixels")
    which.add_argument("--depth-offset", type=_length, help="signed depth offset, e.g. --depth-offset=-0.1m")
    which.add_argument("--ar-px", type=float, help="wavefront coefficient A_R in pixels")
    p.add_argument("--freq-samples", type=int)
    p.add_argument("--out", required=True, help="CSV path ('-' for stdout); the sidecar JSON goes next to a file path")
    _add_spectral_flags(p)
    p.set_defaults(handler=cmd_otf_spectral)

    p = sub.add_parser("sweep", help="sigma_max / MAE_max table over a settings grid")
    depth = p.add_mutually_exclusive_group()
    depth.add_argument("--full", action="store_true", help="one record per focused depth")
    depth.add_argument("--collapsed", action="store_true", help="one record per (f_n, C_max, P) (default)")
    p.add_argument("--reduced", action="store_true", help="start from the small grid")
    p.add_argument("--f-numbers", type=_floats)
    p.add_argument("--focus-distances", type=_lengths, help="e.g. 1m,10m")
    p.add_argument("--c-max", type=_floats, help="blur limits in pixels, e.g. 1,3")
    p.add_argument("--pixels", type=_lengths, help="e.g. 2um,5.6um")
    p.add_argument("--eta", type=float)
    p.add_argument("--n-depth", type=int)
    p.add_argument("--reference-df", type=_length, help="focused depth of the collapsed table")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--stats", help="per-depth statistics CSV (full sweeps)")
    p.add_argument("--jobs", type=int, help="worker processes (default DEFOCUS_JOBS or 1)")
    _add_spectral_flags(p)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("filter", help="apply acceptance thresholds to a sweep table")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--stats", help="per-depth statistics CSV (default <out>_stats.csv)")
    p.add_argument("--mae-max", type=float, default=0.01)
    p.add_argument("--sigma-min", type=float, default=1.0, help="pixels")
    p.add_argument("--sigma-max", type=float, default=5.0, help="pixels")
    p.add_argument("--pixel-max", type=_length, default=5.6e-6, help="e.g. 5.6um")
    p.add_argument("--focal-max", type=_length, default=0.1, help="e.g. 100mm")
    p.add_argument("--pixel-exact", type=_length, help="keep only this pixel pitch")
    p.set_defaults(handler=cmd_filter)

    p = sub.add_parser("plot", help="SVG line plot of CSV columns")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--x", help="x column (default: first)")
    p.add_argument("--y", type=lambda t: [c for c in t.split(",") if c], help="y columns (default: all others)")
    p.add_argument("--x-label")
    p.add_argument("--y-label")
    p.add_argument("--title")
    p.set_defaults(handler=cmd_plot)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = get_settings(args.config)
        setup_logging("DEBUG" if args.verbose else settings.log_level)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    try:
        return args.handler(args, settings)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (QuadratureError, FitError) as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, OpticsError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, TableSchemaError) as e:
        print(f"I/O failure: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
