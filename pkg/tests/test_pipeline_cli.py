import json
import time

import numpy as np
import pytest

from spikit.cli import main
from spikit.errors import ConfigInvalid
from spikit.images import load_image, save_image
from spikit.pipeline import REPORT_SCHEMA, PipelineConfig, bundled_config, run_pipeline


def demo(tmp_path, *overrides):
    return PipelineConfig.from_mapping(bundled_config(), [f"output.dir={tmp_path}", *overrides])


def test_demo_round_trip_is_exact(tmp_path):
    t0 = time.perf_counter()
    report = run_pipeline(demo(tmp_path))
    assert time.perf_counter() - t0 < 1.0
    assert report["schema"] == REPORT_SCHEMA
    assert report["quality"]["psnr_db"] == 99.0
    for name in ("report.json", "timings.json", "reconstruction.png", "trace.spiv", "matrix.spi1", "edges.png"):
        assert (tmp_path / name).exists()


def test_report_lists_every_parameter(tmp_path):
    report = json.loads(json.dumps(run_pipeline(demo(tmp_path))))
    cfg = report["config"]
    assert set(cfg) == {"seed", "matrix", "image", "active", "measurement", "sampling", "filter",
                        "aperture", "metrics", "output"}
    assert cfg["measurement"]["adc_bits"] is None and "dwell_T" in cfg["measurement"]
    assert cfg["filter"]["otsu_scale"] == 0.7


def test_validation_names_constraints():
    with pytest.raises(ConfigInvalid) as err:
        PipelineConfig.from_mapping({"matrix": {"degree": 8, "rows": 16, "cols": 16}})
    assert "2^degree - 1" in str(err.value)
    with pytest.raises(ConfigInvalid) as err:
        PipelineConfig.from_mapping({"image": {"source": "usaf", "pixels": 768}})
    assert "does not fit" in err.value.problems["image"]
    with pytest.raises(ConfigInvalid) as err:
        PipelineConfig.from_mapping({"sampling": {"stride": 0}, "colour": 1, "filter": {"cutoff_hz": 1e-3}})
    assert {"sampling.stride", "colour"} <= set(err.value.problems)


def test_overrides_win(tmp_path):
    cfg = demo(tmp_path, "sampling.stride=2", "measurement.adc_bits=12", "seed=5")
    assert cfg["sampling"]["stride"] == 2 and cfg["measurement"]["adc_bits"] == 12 and cfg["seed"] == 5


def test_aperture_stage(tmp_path):
    report = run_pipeline(demo(tmp_path, "aperture={detector_side_um: 2}"))
    assert report["config"]["aperture"]["wavelength_um"] == 0.565
    assert report["quality"]["psnr_db"] < 99.0


def test_same_seed_same_bytes(tmp_path):
    cfg = demo(tmp_path, "measurement.noise_sigma=0.5", "measurement.adc_bits=14", "sampling.stride=3")
    run_pipeline(cfg)
    first = {p.name: p.read_bytes() for p in tmp_path.iterdir() if p.name != "timings.json"}
    run_pipeline(cfg)
    second = {p.name: p.read_bytes() for p in tmp_path.iterdir() if p.name != "timings.json"}
    assert first == second


# -- command line ------------------------------------------------------------
def test_cli_end_to_end(tmp_path, capsys):
    d = tmp_path
    assert main(["fixtures", "--out", str(d / "fx"), "--pixels", "60"]) == 0
    assert main(["gen-matrix", "--degree", "12", "--rows", "63", "--cols", "65", "--out", str(d / "m.spi1")]) == 0
    assert main(["simulate", "--matrix", str(d / "m.spi1"), "--image", str(d / "fx" / "kangaroo.png"),
                 "--stride", "2", "--noise-sigma", "0", "--seed", "3", "--out", str(d / "t.spiv")]) == 0
    assert main(["reconstruct", "--trace", str(d / "t.spiv"), "--matrix", str(d / "m.spi1"), "--crop", "60x60",
                 "--out", str(d / "r.png"), "--reference", str(d / "fx" / "kangaroo.png")]) == 0
    side = json.loads((d / "r.png.json").read_text())
    assert side["n"] == 4095 and side["stride"] == 2 and side["runtime_ms"] >= 0
    assert 10 < side["psnr_vs"]["psnr_db"] < 99
    assert main(["simulate", "--matrix", str(d / "m.spi1"), "--image", str(d / "fx" / "kangaroo.png"),
                 "--adc-bits", "0", "--out", str(d / "full.spiv")]) == 0
    assert main(["edges", "--trace", str(d / "full.spiv"), "--matrix", str(d / "m.spi1"), "--cutoff-hz", "300",
                 "--crop", "60x60", "--out", str(d / "e.png"), "--emit-gradient", str(d / "g.png")]) == 0
    assert load_image(d / "e.png").shape == (60, 60)
    assert main(["aperture", "--image", str(d / "fx" / "usaf.png"), "--detector-um", "170",
                 "--out", str(d / "a.png"), "--report", str(d / "a.json")]) == 0
    rep = json.loads((d / "a.json").read_text())
    assert rep["fourier_extent_um"][0] == pytest.approx(0.565 * 4000 * 60 / 4800)
    assert main(["metrics", "--a", str(d / "fx" / "kangaroo.png"), "--b", str(d / "r.png"),
                 "--report", str(d / "q.json")]) == 0
    assert json.loads((d / "q.json").read_text())["psnr_db"] == pytest.approx(side["psnr_vs"]["psnr_db"], abs=0.05)  # r.png is 8-bit
    assert main(["bits", "--matrix", str(d / "m.spi1"), "--image", str(d / "fx" / "kangaroo.png"),
                 "--report", str(d / "b.json")]) == 0
    assert json.loads((d / "b.json").read_text())["n_unique_levels"] > 1
    for c in "rgb":
        save_image(np.full((4, 4), 0.5), d / f"c{c}.png")
    assert main(["fuse", "--r", str(d / "r.png"), "--g", str(d / "cg.png"), "--b", str(d / "cb.png"),
                 "--out", str(d / "rgb.png")]) == 2  # r.png is 60x60, the others 4x4
    assert main(["fuse", "--r", str(d / "cr.png"), "--g", str(d / "cg.png"), "--b", str(d / "cb.png"),
                 "--wavelengths", "780,565,450", "--gamma", "2.2", "--out", str(d / "rgb.png")]) == 0
    assert load_image(d / "rgb.png").shape == (4, 4)
    assert main(["run", "--out-dir", str(d / "run"), "--seed", "1"]) == 0


def test_cli_exit_codes(tmp_path):
    assert main(["run", "--set", "matrix.rows=16", "--out-dir", str(tmp_path)]) == 2
    assert main(["metrics", "--a", str(tmp_path / "nope.png"), "--b", str(tmp_path / "nope.png"),
                 "--report", str(tmp_path / "q.json")]) == 3
    (tmp_path / "bad.spi1").write_bytes(b"junk")
    assert main(["bits", "--matrix", str(tmp_path / "bad.spi1"), "--image", "x.png",
                 "--report", str(tmp_path / "b.json")]) == 3
    with pytest.raises(SystemExit) as err:
        main(["gen-matrix"])
    assert err.value.code == 2


def test_cli_numerical_failure_exit_code(tmp_path):
    # a matrix whose first row is all ones has a zero in its spectrum
    from spikit.forward import MeasurementModel, measure_full, write_trace
    from spikit.mls import CyclicSMatrix, MlsSequence, write_matrix

    good = CyclicSMatrix.from_degree(4, 3, 5)
    write_trace(tmp_path / "t.spiv", measure_full(good, np.ones((3, 5)), MeasurementModel()))
    write_matrix(tmp_path / "bad.spi1", CyclicSMatrix(MlsSequence(np.ones(15, dtype=np.uint8), 4), 3, 5))
    code = main(["reconstruct", "--trace", str(tmp_path / "t.spiv"), "--matrix", str(tmp_path / "bad.spi1"),
                 "--out", str(tmp_path / "r.png")])
    assert code == 4
