"""``spikit`` command line.

Exit status: 0 success, 2 configuration error, 3 I/O error, 4 numerical
failure.  Library errors carry their own code (see ``errors``).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .color import LED_WAVELENGTHS_NM, SpectralChannel, fuse_rgb, load_spectrum_csv
from .edges import FilterSpec, hpf_trace, threshold_edges
from .errors import ConfigError, IoFailure, ShapeMismatch, SpiError
from .fixtures import make_fixtures
from .forward import MeasurementModel, SamplingPlan, fit_to_grid, measure_planned, read_trace, write_trace
from .images import load_image, save_image, save_rgb
from .metrics import effective_bits, psnr, ssim
from .mls import CyclicSMatrix, read_matrix, write_matrix
from .optics import ApertureModel, aperture_filter, aperture_mask, fourier_plane_intensity
from .pipeline import REPORT_SCHEMA, PipelineConfig, bundled_config, run_pipeline
from .recon import crop_active, interpolate_trace, reconstruct


def _write_json(path, obj) -> None:
    try:
        Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def _parse_wxh(text: str) -> tuple:
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError as exc:
        raise ConfigError(f"crop must look like WxH, got {text!r}") from exc
    return w, h


def _image_on_grid(path, m: CyclicSMatrix) -> np.ndarray:
    img = load_image(path)
    if img.shape[0] > m.p or img.shape[1] > m.q:
        raise ShapeMismatch(f"image {img.shape} does not fit the {m.p}x{m.q} pattern grid")
    return fit_to_grid(img, m.p, m.q)


def _complete_trace(args):
    m = read_matrix(args.matrix)
    t = read_trace(args.trace, args.interpolation)
    if args.gain != 1.0:
        t = replace(t, model=replace(t.model, gain=args.gain))
    return m, t, interpolate_trace(t)


def _crop(img, args):
    if not args.crop:
        return img
    w, h = _parse_wxh(args.crop)
    return crop_active(img, w, h, args.anchor)


# -- subcommands -------------------------------------------------------------
def cmd_gen_matrix(args) -> int:
    m = CyclicSMatrix.from_degree(args.degree, args.rows, args.cols)
    write_matrix(args.out, m)
    print(f"N={m.N} p={m.p} q={m.q} -> {args.out}")
    return 0


def cmd_simulate(args) -> int:
    m = read_matrix(args.matrix)
    img = _image_on_grid(args.image, m)
    model = MeasurementModel(args.gain, args.noise_sigma, args.adc_bits or None, args.full_scale,
                             args.dwell_t, args.seed)
    trace = measure_planned(m, img, model, SamplingPlan(m.N, args.stride))
    write_trace(args.out, trace)
    print(f"{trace.measured_count}/{m.N} samples -> {args.out}")
    return 0


def cmd_reconstruct(args) -> int:
    m, t, full = _complete_trace(args)
    t0 = time.perf_counter()
    img = reconstruct(full, m)
    runtime_ms = (time.perf_counter() - t0) * 1e3
    img = np.clip(_crop(img, args), 0.0, 1.0)
    save_image(img, args.out, args.bits)
    sidecar = {"n": m.N, "stride": t.plan.stride, "runtime_ms": runtime_ms, "psnr_vs": None}
    if args.reference:
        ref = load_image(args.reference)
        h, w = min(ref.shape[0], img.shape[0]), min(ref.shape[1], img.shape[1])
        sidecar["psnr_vs"] = {"reference": str(args.reference), "psnr_db": psnr(ref[:h, :w], img[:h, :w])}
    _write_json(args.sidecar or f"{args.out}.json", sidecar)
    return 0


def cmd_edges(args) -> int:
    m, _, full = _complete_trace(args)
    spec = FilterSpec(args.cutoff_hz, args.order, args.realization)
    grad = _crop(reconstruct(hpf_trace(full, spec), m), args)
    save_image(threshold_edges(grad, args.otsu_scale).astype(np.float64), args.out)
    if args.emit_gradient:
        mag = np.abs(grad)
        peak = mag.max()
        save_image(mag / peak if peak > 0 else mag, args.emit_gradient, args.bits)
    return 0


def cmd_aperture(args) -> int:
    img = load_image(args.image)
    model = ApertureModel(args.detector_um, args.wavelength_um, args.focal_mm, args.extent_mm, args.shape)
    save_image(aperture_filter(img, model), args.out)
    if args.report:
        plane = fourier_plane_intensity(img, model)
        mask = np.fft.fftshift(aperture_mask(img.shape, model))
        total = float(plane.intensity.sum())
        _write_json(args.report, {
            "schema": REPORT_SCHEMA,
            "model": {"detector_side_um": model.detector_side_um, "wavelength_um": model.wavelength_um,
                      "focal_length_mm": model.focal_length_mm, "object_extent_mm": model.object_extent_mm,
                      "shape": model.shape},
            "fourier_extent_um": list(plane.extent_um),
            "cutoff_lp_mm": model.cutoff_lp_mm,
            "collected_energy_fraction": float(plane.intensity[mask].sum()) / total if total > 0 else 0.0,
        })
    return 0


def cmd_fuse(args) -> int:
    try:
        waves = [float(v) for v in args.wavelengths.split(",")]
        gains = [float(v) for v in args.gains.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad number list: {exc}") from exc
    if len(waves) != 3 or len(gains) != 3:
        raise ConfigError("need three wavelengths and three gains")
    csvs = args.spectrum_csv.split(",") if args.spectrum_csv else [None] * 3
    if len(csvs) != 3:
        raise ConfigError("--spectrum-csv takes three comma-separated files (r,g,b)")
    channels = []
    for path, w, g, csv in zip((args.r, args.g, args.b), waves, gains, csvs):
        img = load_image(path)
        if csv:
            channels.append(SpectralChannel(w, load_spectrum_csv(csv), img, g))
        else:
            channels.append(SpectralChannel.led(w, img, args.fwhm_nm, g))
    save_rgb(fuse_rgb(channels, gamma=args.gamma), args.out)
    return 0


def cmd_metrics(args) -> int:
    a, b = load_image(args.a), load_image(args.b)
    rep = {"schema": REPORT_SCHEMA, "psnr_db": psnr(a, b, args.peak), "peak": args.peak}
    rep["ssim"] = ssim(a, b, data_range=args.peak) if min(a.shape) >= 11 else None
    _write_json(args.report, rep)
    print(f"PSNR {rep['psnr_db']:.3f} dB  SSIM {rep['ssim']}")
    return 0


def cmd_bits(args) -> int:
    m = read_matrix(args.matrix)
    n, bits = effective_bits(m, _image_on_grid(args.image, m))
    _write_json(args.report, {"schema": REPORT_SCHEMA, "N": m.N, "n_unique_levels": n, "effective_bits": bits})
    print(f"{n} unique levels, {bits:.3f} bits")
    return 0


def cmd_fixtures(args) -> int:
    paths = make_fixtures(args.out, args.pixels)
    for p in paths.values():
        print(p)
    return 0


def cmd_run(args) -> int:
    overrides = list(args.set or [])
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.out_dir:
        overrides.append(f"output.dir={args.out_dir}")
    if args.config:
        cfg = PipelineConfig.from_file(args.config, overrides)
    else:
        cfg = PipelineConfig.from_mapping(bundled_config(), overrides)
    report = run_pipeline(cfg)
    q = report["quality"]
    print(f"N={report['derived']['N']} PSNR {q['psnr_db']:.3f} dB -> {cfg['output']['dir']}")
    return 0


# -- parser ------------------------------------------------------------------
def _trace_args(p) -> None:
    p.add_argument("--trace", required=True)
    p.add_argument("--matrix", required=True)
    p.add_argument("--crop", help="active area WxH")
    p.add_argument("--anchor", default="top-left", choices=("top-left", "center"))
    p.add_argument("--interpolation", default="linear", choices=("linear", "nearest"))
    p.add_argument("--gain", type=float, default=1.0, help="detector gain used when simulating")
    p.add_argument("--bits", type=int, default=8, choices=(8, 16))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spikit", description="Single-pixel imaging simulator.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-matrix", help="write a cyclic S-matrix first row")
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--rows", type=int)
    p.add_argument("--cols", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_matrix)

    p = sub.add_parser("simulate", help="measure an image with the pattern sequence")
    p.add_argument("--matrix", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--adc-bits", type=int, default=14, help="0 disables quantization")
    p.add_argument("--full-scale", type=float, default=None)
    p.add_argument("--gain", type=float, default=1.0)
    p.add_argument("--dwell-t", type=float, default=1.0 / 22727.0)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct", help="invert a voltage trace")
    _trace_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--reference", help="image to compute psnr_vs against")
    p.add_argument("--sidecar", help="JSON sidecar path (default <out>.json)")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("edges", help="high-pass the trace and threshold the result")
    _trace_args(p)
    p.add_argument("--cutoff-hz", type=float, required=True)
    p.add_argument("--order", type=int, default=1)
    p.add_argument("--realization", default="dft", choices=("dft", "time-domain"))
    p.add_argument("--otsu-scale", type=float, default=0.7)
    p.add_argument("--out", required=True)
    p.add_argument("--emit-gradient", metavar="PATH", help="also write the normalised gradient magnitude")
    p.set_defaults(func=cmd_edges)

    p = sub.add_parser("aperture", help="low-pass an image by a Fourier-plane detector")
    p.add_argument("--image", required=True)
    p.add_argument("--detector-um", type=float, default=170.0)
    p.add_argument("--wavelength-um", type=float, default=0.565)
    p.add_argument("--focal-mm", type=float, default=4.0)
    p.add_argument("--extent-mm", type=float, default=4.8)
    p.add_argument("--shape", default="square", choices=("square", "circle"))
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_aperture)

    p = sub.add_parser("fuse", help="combine three LED channels into RGB")
    p.add_argument("--r", required=True)
    p.add_argument("--g", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--wavelengths", default=",".join(f"{w:g}" for w in LED_WAVELENGTHS_NM))
    p.add_argument("--gains", default="1,1,1")
    p.add_argument("--fwhm-nm", type=float, default=25.0)
    p.add_argument("--spectrum-csv", help="r.csv,g.csv,b.csv measured spectra")
    p.add_argument("--gamma", type=float, default=2.2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("metrics", help="PSNR and SSIM of two images")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--peak", type=float, default=1.0)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("bits", help="effective ADC bits an image demands")
    p.add_argument("--matrix", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_bits)

    p = sub.add_parser("fixtures", help="render the synthetic test objects")
    p.add_argument("--out", required=True)
    p.add_argument("--pixels", type=int, default=768)
    p.set_defaults(func=cmd_fixtures)

    p = sub.add_parser("run", help="full pipeline from a YAML config")
    p.add_argument("--config", help="YAML file (default: bundled demo)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override, e.g. sampling.stride=4")
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_run)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SpiError as exc:
        print(f"spikit {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
