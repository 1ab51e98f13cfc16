import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from spikit.errors import ConfigError, CorruptFile, NonFiniteInput, ShapeMismatch
from spikit.forward import (
    MeasurementModel,
    SamplingPlan,
    acquisition_time,
    block_average,
    ideal_samples,
    measure_full,
    measure_planned,
    noise_sigma_from_density,
    quantize,
    read_trace,
    write_trace,
)
from spikit.mls import CyclicSMatrix

IDEAL = MeasurementModel(adc_bits=None)
SMALL = {3: (1, 7), 4: (3, 5), 6: (7, 9), 8: (15, 17)}


def direct_samples(m, img, gain=1.0):
    """O(N^2) inner products of every pattern with the image."""
    x = np.asarray(img, dtype=float).ravel()
    return np.array([gain * np.dot(m.row(j).astype(float), x) for j in range(1, m.N + 1)])


@pytest.mark.parametrize("n", [3, 4, 6, 8])
def test_fft_path_matches_inner_products(n, rng):
    m = CyclicSMatrix.from_degree(n, *SMALL[n])
    img = rng.random(m.shape)
    fast = ideal_samples(m, img, 0.7)
    slow = direct_samples(m, img, 0.7)
    assert np.max(np.abs(fast - slow)) <= 1e-10 * np.max(np.abs(slow))


def test_zero_image_gives_zero_samples():
    m = CyclicSMatrix.from_degree(4, 3, 5)
    t = measure_full(m, np.zeros((3, 5)), MeasurementModel())
    assert np.all(t.samples == 0)


def test_uniform_image():
    m = CyclicSMatrix.from_degree(6, 7, 9)
    t = measure_full(m, np.full((7, 9), 0.3), MeasurementModel(gain=2.0, adc_bits=None))
    np.testing.assert_allclose(t.samples, 2.0 * 0.3 * 32, rtol=1e-12)


def test_errors():
    m = CyclicSMatrix.from_degree(4, 3, 5)
    with pytest.raises(ShapeMismatch):
        measure_full(m, np.zeros((5, 3)))
    bad = np.zeros((3, 5))
    bad[1, 1] = np.nan
    with pytest.raises(NonFiniteInput):
        measure_full(m, bad)
    with pytest.raises(ConfigError):
        MeasurementModel(noise_sigma=-1)
    with pytest.raises(ConfigError):
        MeasurementModel(adc_bits=25)
    with pytest.raises(ConfigError):
        MeasurementModel(dwell_T=0)
    with pytest.raises(ConfigError):
        SamplingPlan(15, 0)


def test_quantization_error_within_half_lsb(rng):
    m = CyclicSMatrix.from_degree(8, 15, 17)
    img = rng.random(m.shape)
    ideal = ideal_samples(m, img)
    t = measure_full(m, img, MeasurementModel(adc_bits=14))
    lsb = t.model.adc_full_scale / 2**14
    assert t.model.adc_full_scale == pytest.approx(1.05 * ideal.max())
    assert np.max(np.abs(t.samples - ideal)) <= lsb / 2 + 1e-15


def test_quantize_clips_to_full_scale():
    q = quantize(np.array([-1.0, 0.5, 2.0]), 4, 1.0)
    np.testing.assert_allclose(q, [0.0, 0.5, 15 / 16])


def test_seed_determinism(rng):
    m = CyclicSMatrix.from_degree(8, 15, 17)
    img = rng.random(m.shape)
    model = MeasurementModel(noise_sigma=0.1, rng_seed=9)
    a = measure_full(m, img, model).samples
    b = measure_full(m, img, model).samples
    c = measure_full(m, img, MeasurementModel(noise_sigma=0.1, rng_seed=10)).samples
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, c)


@given(arrays(np.float64, (3, 5), elements=st.floats(0, 1)), st.floats(0.01, 100))
def test_linearity(img, alpha):
    m = CyclicSMatrix.from_degree(4, 3, 5)
    a = measure_full(m, alpha * img, IDEAL).samples
    b = alpha * measure_full(m, img, IDEAL).samples
    assert np.max(np.abs(a - b)) <= 1e-12 * max(1.0, np.max(np.abs(b)))


def test_stride1_plan_equals_full(rng):
    m = CyclicSMatrix.from_degree(8, 15, 17)
    img = rng.random(m.shape)
    model = MeasurementModel(noise_sigma=0.05, rng_seed=3)
    full = measure_full(m, img, model)
    planned = measure_planned(m, img, model, SamplingPlan(m.N, 1))
    assert planned.samples.tobytes() == full.samples.tobytes()
    assert planned.complete


def test_stride2_counts():
    m = CyclicSMatrix.from_degree(4, 3, 5)
    t = measure_planned(m, np.ones((3, 5)), IDEAL, SamplingPlan(15, 2))
    assert t.measured_count == 8
    assert t.missing.sum() == 7
    assert not t.missing[0]  # pattern 1 is measured


def test_planned_samples_equal_full_at_measured_positions(rng):
    m = CyclicSMatrix.from_degree(8, 15, 17)
    img = rng.random(m.shape)
    model = MeasurementModel(noise_sigma=0.05, rng_seed=4)
    full = measure_full(m, img, model)
    t = measure_planned(m, img, model, SamplingPlan(m.N, 3))
    keep = ~t.missing
    np.testing.assert_array_equal(t.samples[keep], full.samples[keep])


def test_stride10_rate_full_resolution():
    plan = SamplingPlan(2**20 - 1, 10)
    assert plan.measured_count == 104_858
    assert plan.declared_rate == pytest.approx(0.1, abs=1e-5)


def test_acquisition_time():
    assert acquisition_time(SamplingPlan(15), 1.0)[0] == 15.0
    pattern, total = acquisition_time(SamplingPlan(2**20 - 1), 22_727, overhead_factor=1.2)
    assert pattern == pytest.approx(46.14, abs=0.01)
    assert total == pytest.approx(1.2 * pattern)
    assert acquisition_time(SamplingPlan(2**20 - 1, 4), 22_727)[0] == pytest.approx(11.53, abs=0.01)
    with pytest.raises(ConfigError):
        acquisition_time(SamplingPlan(15), 0)


def test_noise_sigma_from_density():
    # 2 pA/sqrt(Hz) over 10 kHz through 1 MOhm -> 0.2 mV
    assert noise_sigma_from_density(2e-12, 1e4, 1e6) == pytest.approx(2e-4)


def test_block_average():
    x = np.arange(16.0).reshape(4, 4)
    np.testing.assert_allclose(block_average(x, 2), [[2.5, 4.5], [10.5, 12.5]])


def test_trace_file_round_trip(tmp_path, rng):
    m = CyclicSMatrix.from_degree(8, 15, 17)
    model = MeasurementModel(noise_sigma=0.01, rng_seed=77)
    t = measure_planned(m, rng.random(m.shape), model, SamplingPlan(m.N, 4))
    path = tmp_path / "t.spiv"
    write_trace(path, t)
    raw = path.read_bytes()
    assert raw[:4] == b"SPIV"
    assert len(raw) == 28 + 9 * m.N
    back = read_trace(path)
    assert back.samples.tobytes() == t.samples.tobytes()
    np.testing.assert_array_equal(back.missing, t.missing)
    assert back.plan.stride == 4
    assert back.model.adc_bits == 14 and back.model.rng_seed == 77
    assert back.dwell_T == t.dwell_T
    path.write_bytes(raw[:-3])
    with pytest.raises(CorruptFile):
        read_trace(path)
