"""End-to-end simulation: configuration, validation and the staged run.

A run is fully described by a nested mapping (usually a YAML file) plus
dotted-key overrides.  Every effective value, defaults included, is echoed
into ``report.json``.  Wall-clock timings live in ``timings.json`` so that
all other artifacts are byte-identical across runs with the same seed.
"""

from __future__ import annotations

import copy
import hashlib
import json
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import fixtures, images
from .edges import FilterSpec, REALIZATIONS, threshold_edges, hpf_trace
from .errors import ConfigInvalid, IoFailure
from .forward import (
    INTERPOLATIONS,
    MeasurementModel,
    SamplingPlan,
    acquisition_time,
    block_average,
    fit_to_grid,
    measure_planned,
    write_trace,
)
from .metrics import SSIM_K1, SSIM_K2, SSIM_SIGMA, SSIM_WIN, effective_bits, psnr, ssim
from .mls import MAX_DEGREE, MIN_DEGREE, CyclicSMatrix, primitive_polynomial, write_matrix
from .optics import SHAPES, ApertureModel, aperture_filter
from .recon import ANCHORS, crop_active, interpolate_trace, reconstruct

REPORT_SCHEMA = "spi-kit-report/1"
FIXTURE_SOURCES = ("usaf", "kangaroo")

DEFAULTS = {
    "seed": 0,
    "matrix": {"degree": 8, "rows": 15, "cols": 17},
    "image": {"source": "kangaroo", "pixels": 768, "block": 1},
    "active": {"width": None, "height": None, "anchor": "top-left"},
    "measurement": {
        "gain": 1.0,
        "noise_sigma": 0.0,
        "adc_bits": None,
        "adc_full_scale": None,
        "dwell_T": 1.0 / 22727.0,
    },
    "sampling": {"stride": 1, "interpolation": "linear"},
    "filter": None,
    "aperture": None,
    "metrics": {"peak": 1.0, "ssim_win": SSIM_WIN, "ssim_sigma": SSIM_SIGMA, "K1": SSIM_K1, "K2": SSIM_K2},
    "output": {"dir": "spi-out", "format": "png", "bits": 8},
}
FILTER_DEFAULTS = {"cutoff_hz": 1000.0, "order": 1, "realization": "dft", "otsu_scale": 0.7}
APERTURE_DEFAULTS = {
    "detector_side_um": 170.0,
    "wavelength_um": 0.565,
    "focal_length_mm": 4.0,
    "object_extent_mm": 4.8,
    "shape": "square",
}


def _merge(base: dict, over: dict, problems: dict, prefix: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in over.items():
        path = f"{prefix}{key}"
        if key not in base:
            problems[path] = "unknown key"
        elif isinstance(base[key], dict):
            if isinstance(value, dict):
                out[key] = _merge(base[key], value, problems, path + ".")
            else:
                problems[path] = "must be a mapping"
        else:
            out[key] = value
    return out


def _optional_section(value, defaults: dict, name: str, problems: dict):
    if value is None or value is False:
        return None
    if value is True:
        return dict(defaults)
    if not isinstance(value, dict):
        problems[name] = "must be a mapping, true or null"
        return None
    return _merge(defaults, value, problems, name + ".")


def apply_override(raw: dict, assignment: str) -> None:
    """Apply one ``dotted.key=value`` override in place (value parsed as YAML)."""
    if "=" not in assignment:
        raise ConfigInvalid({assignment: "override must look like key.path=value"})
    key, text = assignment.split("=", 1)
    value = yaml.safe_load(text) if text.strip() else None
    node = raw
    parts = key.strip().split(".")
    for part in parts[:-1]:
        if not isinstance(node.get(part), dict):
            node[part] = {}
        node = node[part]
    node[parts[-1]] = value


@dataclass(frozen=True)
class PipelineConfig:
    """Validated run configuration; ``data`` holds every effective value."""

    data: dict

    @classmethod
    def from_mapping(cls, raw: dict | None = None, overrides=()) -> "PipelineConfig":
        raw = copy.deepcopy(raw or {})
        if not isinstance(raw, dict):
            raise ConfigInvalid({"<root>": "configuration must be a mapping"})
        for o in overrides:
            apply_override(raw, o)
        problems: dict = {}
        filt, aper = raw.pop("filter", None), raw.pop("aperture", None)
        data = _merge(DEFAULTS, raw, problems)
        data["filter"] = _optional_section(filt, FILTER_DEFAULTS, "filter", problems)
        data["aperture"] = _optional_section(aper, APERTURE_DEFAULTS, "aperture", problems)
        _validate(data, problems)
        if problems:
            raise ConfigInvalid(problems)
        return cls(data)

    @classmethod
    def from_file(cls, path, overrides=()) -> "PipelineConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise IoFailure(str(exc)) from exc
        try:
            raw = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigInvalid({"<file>": f"not valid YAML: {exc}"}) from exc
        return cls.from_mapping(raw, overrides)

    def __getitem__(self, key):
        return self.data[key]

    # -- typed views ---------------------------------------------------------
    @property
    def N(self) -> int:
        return (1 << self["matrix"]["degree"]) - 1

    def measurement_model(self) -> MeasurementModel:
        m = self["measurement"]
        return MeasurementModel(m["gain"], m["noise_sigma"], m["adc_bits"], m["adc_full_scale"],
                                m["dwell_T"], self["seed"])

    def sampling_plan(self) -> SamplingPlan:
        return SamplingPlan(self.N, self["sampling"]["stride"], self["sampling"]["interpolation"])

    def filter_spec(self) -> FilterSpec | None:
        f = self["filter"]
        return None if f is None else FilterSpec(f["cutoff_hz"], f["order"], f["realization"])

    def aperture_model(self) -> ApertureModel | None:
        a = self["aperture"]
        return None if a is None else ApertureModel(**a)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and np.isfinite(v)


def _image_dims(img_cfg: dict) -> tuple | None:
    if img_cfg["source"] in FIXTURE_SOURCES:
        n = img_cfg["pixels"] // img_cfg["block"]
        return n, n
    return None  # known only after loading


def _validate(d: dict, problems: dict) -> None:
    """Cross-field checks; every violation is reported, not just the first."""
    if not _is_int(d["seed"]) or d["seed"] < 0:
        problems["seed"] = "must be a non-negative integer"
    mx = d["matrix"]
    n, p, q = mx["degree"], mx["rows"], mx["cols"]
    if not (_is_int(n) and MIN_DEGREE <= n <= MAX_DEGREE):
        problems["matrix.degree"] = f"must be an integer in [{MIN_DEGREE}, {MAX_DEGREE}]"
    elif not (_is_int(p) and _is_int(q) and p > 0 and q > 0):
        problems["matrix.rows/cols"] = "must be positive integers"
    elif p * q != (1 << n) - 1:
        problems["matrix"] = f"rows*cols = {p * q} must equal 2^degree - 1 = {(1 << n) - 1}"

    im = d["image"]
    if not isinstance(im["source"], str):
        problems["image.source"] = "must be a fixture name or an image path"
    if not (_is_int(im["pixels"]) and im["pixels"] > 0):
        problems["image.pixels"] = "must be a positive integer"
    if not (_is_int(im["block"]) and im["block"] >= 1):
        problems["image.block"] = "must be an integer >= 1"
    if "matrix" not in problems and "matrix.degree" not in problems and isinstance(im["source"], str) \
            and "image.pixels" not in problems and "image.block" not in problems:
        dims = _image_dims(im)
        if dims is not None and (dims[0] > p or dims[1] > q):
            problems["image"] = f"image {dims[0]}x{dims[1]} does not fit the {p}x{q} pattern grid"

    ac = d["active"]
    for k in ("width", "height"):
        if ac[k] is not None and not (_is_int(ac[k]) and ac[k] > 0):
            problems[f"active.{k}"] = "must be a positive integer or null"
    if ac["anchor"] not in ANCHORS:
        problems["active.anchor"] = f"must be one of {ANCHORS}"
    if "matrix" not in problems and _is_int(p) and _is_int(q):
        if _is_int(ac["width"]) and ac["width"] > q:
            problems["active.width"] = f"exceeds pattern columns {q}"
        if _is_int(ac["height"]) and ac["height"] > p:
            problems["active.height"] = f"exceeds pattern rows {p}"

    ms = d["measurement"]
    if not (_is_num(ms["gain"]) and ms["gain"] != 0):
        problems["measurement.gain"] = "must be finite and nonzero"
    if not (_is_num(ms["noise_sigma"]) and ms["noise_sigma"] >= 0):
        problems["measurement.noise_sigma"] = "must be >= 0"
    if ms["adc_bits"] is not None and not (_is_int(ms["adc_bits"]) and 1 <= ms["adc_bits"] <= 24):
        problems["measurement.adc_bits"] = "must be an integer in [1, 24] or null"
    if ms["adc_full_scale"] is not None and not (_is_num(ms["adc_full_scale"]) and ms["adc_full_scale"] > 0):
        problems["measurement.adc_full_scale"] = "must be > 0 or null"
    if not (_is_num(ms["dwell_T"]) and ms["dwell_T"] > 0):
        problems["measurement.dwell_T"] = "must be > 0"

    sp = d["sampling"]
    if not (_is_int(sp["stride"]) and sp["stride"] >= 1):
        problems["sampling.stride"] = "must be an integer >= 1"
    if sp["interpolation"] not in INTERPOLATIONS:
        problems["sampling.interpolation"] = f"must be one of {INTERPOLATIONS}"

    f = d["filter"]
    if f is not None:
        if not (_is_num(f["cutoff_hz"]) and f["cutoff_hz"] > 0):
            problems["filter.cutoff_hz"] = "must be > 0"
        if not (_is_int(f["order"]) and f["order"] >= 1):
            problems["filter.order"] = "must be an integer >= 1"
        if f["realization"] not in REALIZATIONS:
            problems["filter.realization"] = f"must be one of {REALIZATIONS}"
        elif f["realization"] == "time-domain" and f["order"] != 1:
            problems["filter.order"] = "time-domain realization is first order only"
        if not (_is_num(f["otsu_scale"]) and f["otsu_scale"] > 0):
            problems["filter.otsu_scale"] = "must be > 0"
        if not any(k.startswith("filter") or k.startswith("matrix") or k == "measurement.dwell_T"
                   for k in problems):
            kc = f["cutoff_hz"] * ms["dwell_T"] * ((1 << n) - 1)
            if not 1 <= kc < ((1 << n) - 1) / 2:
                problems["filter.cutoff_hz"] = f"pixel cutoff k_c = f_c T N = {kc:.4g} must lie in [1, N/2)"

    a = d["aperture"]
    if a is not None:
        for k in ("detector_side_um", "wavelength_um", "focal_length_mm", "object_extent_mm"):
            if not (_is_num(a[k]) and a[k] > 0):
                problems[f"aperture.{k}"] = "must be > 0"
        if a["shape"] not in SHAPES:
            problems["aperture.shape"] = f"must be one of {SHAPES}"

    mt = d["metrics"]
    if not (_is_num(mt["peak"]) and mt["peak"] > 0):
        problems["metrics.peak"] = "must be > 0"
    if not (_is_int(mt["ssim_win"]) and mt["ssim_win"] >= 1 and mt["ssim_win"] % 2 == 1):
        problems["metrics.ssim_win"] = "must be an odd positive integer"
    for k in ("ssim_sigma", "K1", "K2"):
        if not (_is_num(mt[k]) and mt[k] > 0):
            problems[f"metrics.{k}"] = "must be > 0"

    out = d["output"]
    if not isinstance(out["dir"], str) or not out["dir"]:
        problems["output.dir"] = "must be a non-empty path"
    if out["format"] not in ("png", "pgm"):
        problems["output.format"] = "must be png or pgm"
    if out["bits"] not in (8, 16):
        problems["output.bits"] = "must be 8 or 16"


def bundled_config(name: str = "demo") -> dict:
    """Raw mapping of a config shipped with the package (``demo``)."""
    text = resources.files("spikit").joinpath(f"data/{name}.yaml").read_text()
    return yaml.safe_load(text)


def load_source_image(cfg: PipelineConfig) -> np.ndarray:
    im = cfg["image"]
    if im["source"] == "usaf":
        img = fixtures.usaf_target(im["pixels"]).image
    elif im["source"] == "kangaroo":
        img = fixtures.silhouette(im["pixels"])[0]
    else:
        img = images.load_image(im["source"])
    if im["block"] > 1:
        img = fixtures.to_8bit_grid(block_average(img, im["block"]))
    p, q = cfg["matrix"]["rows"], cfg["matrix"]["cols"]
    if img.shape[0] > p or img.shape[1] > q:
        raise ConfigInvalid({"image": f"image {img.shape[0]}x{img.shape[1]} does not fit the {p}x{q} pattern grid"})
    return img


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _jsonable(v):
    if isinstance(v, float) and not np.isfinite(v):
        return None
    return v


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Run every stage and write artifacts; returns the report mapping."""
    timings = {}
    t_all = time.perf_counter()

    def stage(name, fn, *args):
        t0 = time.perf_counter()
        out = fn(*args)
        timings[name] = (time.perf_counter() - t0) * 1e3
        return out

    outdir = Path(cfg["output"]["dir"])
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    ext, bits = cfg["output"]["format"], cfg["output"]["bits"]
    mx = cfg["matrix"]

    m = stage("generate", CyclicSMatrix.from_degree, mx["degree"], mx["rows"], mx["cols"])
    truth = stage("load_image", load_source_image, cfg)
    h, w = truth.shape
    aw = cfg["active"]["width"] or w
    ah = cfg["active"]["height"] or h
    model = cfg.aperture_model()
    obj = truth if model is None else stage("aperture", aperture_filter, truth, model)
    field_img = fit_to_grid(obj, m.p, m.q)

    trace = stage("measure", measure_planned, m, field_img, cfg.measurement_model(), cfg.sampling_plan())
    full = stage("interpolate", interpolate_trace, trace)
    raw = stage("reconstruct", reconstruct, full, m)
    recon = np.clip(crop_active(raw, aw, ah, cfg["active"]["anchor"]), 0.0, 1.0)

    artifacts = {}

    def save(name, img, b=bits):
        path = outdir / f"{name}.{ext}"
        images.save_image(img, path, b)
        artifacts[name] = path

    write_matrix(outdir / "matrix.spi1", m)
    artifacts["matrix"] = outdir / "matrix.spi1"
    write_trace(outdir / "trace.spiv", trace)
    artifacts["trace"] = outdir / "trace.spiv"
    save("ground_truth", truth)
    save("reconstruction", recon)

    spec = cfg.filter_spec()
    edges_info = None
    if spec is not None:
        grad = stage("hpf", lambda: reconstruct(hpf_trace(full, spec), m))
        grad = crop_active(grad, aw, ah, cfg["active"]["anchor"])
        edge_map = stage("threshold", threshold_edges, grad, cfg["filter"]["otsu_scale"])
        peak = float(np.max(np.abs(grad)))
        save("gradient", np.abs(grad) / peak if peak > 0 else np.abs(grad))
        save("edges", edge_map.astype(np.float64), 8)
        edges_info = {
            "pixel_cutoff": spec.pixel_cutoff(full.dwell_T, m.N),
            "edge_fraction": float(edge_map.mean()),
        }

    # metrics against the (unfiltered) source over the common area
    mt = cfg["metrics"]
    rh, rw = min(h, ah), min(w, aw)
    ref, test = truth[:rh, :rw], recon[:rh, :rw]
    quality = {"psnr_db": psnr(ref, test, mt["peak"])}
    if min(rh, rw) >= mt["ssim_win"]:
        quality["ssim"] = ssim(ref, test, mt["ssim_win"], mt["ssim_sigma"], mt["K1"], mt["K2"], mt["peak"])
    else:
        quality["ssim"] = None
    n_unique, eff_bits = stage("effective_bits", effective_bits, m, fit_to_grid(truth, m.p, m.q))
    quality["n_unique_levels"] = n_unique
    quality["effective_bits"] = eff_bits

    pattern_s, total_s = acquisition_time(trace.plan, 1.0 / trace.dwell_T)
    report = {
        "schema": REPORT_SCHEMA,
        "config": cfg.data,
        "derived": {
            "N": m.N,
            "polynomial": str(primitive_polynomial(m.degree)),
            "image_shape": [h, w],
            "active_shape": [ah, aw],
            "measured_patterns": trace.measured_count,
            "sampling_rate": trace.plan.declared_rate,
            "adc_full_scale": trace.model.adc_full_scale,
            "acquisition_time_s": pattern_s,
            "edges": edges_info,
        },
        "quality": {k: _jsonable(v) for k, v in quality.items()},
        "artifacts": {k: {"file": p.name, "sha256": _sha256(p)} for k, p in sorted(artifacts.items())},
        "timings_file": "timings.json",
    }
    _write_json(outdir / "report.json", report)
    timings["total"] = (time.perf_counter() - t_all) * 1e3
    _write_json(outdir / "timings.json", {"schema": REPORT_SCHEMA, "unit": "ms", "stages": timings})
    return report


def _write_json(path: Path, obj) -> None:
    try:
        path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


__all__ = [
    "DEFAULTS",
    "PipelineConfig",
    "REPORT_SCHEMA",
    "apply_override",
    "bundled_config",
    "load_source_image",
    "run_pipeline",
]
