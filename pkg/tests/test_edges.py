from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from spikit.edges import (
    FilterSpec,
    between_class_variance,
    bin_response,
    edge_maps,
    hpf_trace,
    otsu_index,
    otsu_threshold,
    spatial_hpf,
    threshold_edges,
    transfer,
)
from spikit.errors import ConfigError, CutoffOutOfRange, IncompleteTrace, ShapeMismatch
from spikit.forward import MeasurementModel, SamplingPlan, fit_to_grid, measure_full, measure_planned
from spikit.mls import CyclicSMatrix
from spikit.recon import reconstruct

IDEAL = MeasurementModel(adc_bits=None)
T = 1 / 22727


def brute_between_class(hist, t):
    """sigma_B^2 for the split {0..t} | {t+1..} by direct sums."""
    h = np.asarray(hist, dtype=float)
    total = h.sum()
    w0 = sum(h[: t + 1]) / total
    w1 = 1 - w0
    if w0 == 0 or w1 == 0:
        return 0.0
    m0 = sum(i * h[i] for i in range(t + 1)) / (w0 * total)
    m1 = sum(i * h[i] for i in range(t + 1, len(h))) / (w1 * total)
    return w0 * w1 * (m0 - m1) ** 2


def test_transfer_values():
    assert transfer(0.0, 100.0) == 0
    assert abs(transfer(100.0, 100.0)) == pytest.approx(1 / np.sqrt(2))
    assert abs(transfer(1e9, 100.0)) == pytest.approx(1.0, abs=1e-6)
    assert transfer(50.0, 100.0, order=2) == pytest.approx(transfer(50.0, 100.0) ** 2)


def test_filter_spec_validation():
    with pytest.raises(CutoffOutOfRange):
        FilterSpec(0.0)
    with pytest.raises(ConfigError):
        FilterSpec(10.0, order=0)
    with pytest.raises(ConfigError):
        FilterSpec(10.0, order=2, realization="time-domain")
    spec = FilterSpec(1000.0)
    assert spec.pixel_cutoff(T, 4095) == pytest.approx(1000 * 4095 / 22727)
    with pytest.raises(CutoffOutOfRange):
        FilterSpec(1.0).check(T, 255)  # k_c << 1
    with pytest.raises(CutoffOutOfRange):
        FilterSpec(20000.0).check(T, 255)  # k_c >= N/2


def test_constant_trace_gives_zero():
    m = CyclicSMatrix.from_degree(8, 15, 17)
    t = measure_full(m, np.full(m.shape, 0.4), IDEAL)
    out = hpf_trace(t, FilterSpec(1000.0))
    assert np.max(np.abs(out.samples)) < 1e-12


def test_low_cutoff_removes_only_dc(rng):
    m = CyclicSMatrix.from_degree(12, 63, 65)
    t = measure_full(m, rng.random(m.shape), IDEAL)
    spec = FilterSpec(6.0)  # k_c ~ 1.08
    out = hpf_trace(t, spec).samples
    ac = t.samples - t.samples.mean()
    # H(k) -> 1 for k >> k_c; the residual lives in the few lowest bins
    assert abs(out.mean()) < 1e-9 * abs(t.samples.mean())
    assert np.linalg.norm(out - ac) < 0.2 * np.linalg.norm(ac)


@given(arrays(np.float64, (15, 17), elements=st.floats(0, 1)), st.floats(100.0, 2800.0))
def test_dc_rejection(img, fc):
    m = CyclicSMatrix.from_degree(8, 15, 17)
    t = measure_full(m, img, IDEAL)
    out = hpf_trace(t, FilterSpec(fc))
    assert abs(out.samples.mean()) <= 1e-9 * max(abs(t.samples.mean()), 1e-300) + 1e-15


@pytest.mark.parametrize("fc", [100.0, 500.0, 2000.0])
def test_temporal_spatial_equivalence(fc, rng):
    m = CyclicSMatrix.from_degree(8, 15, 17)
    img = rng.random(m.shape)
    t = measure_full(m, img, MeasurementModel(gain=0.3, adc_bits=None))
    lhs = reconstruct(hpf_trace(t, FilterSpec(fc, order=2)), m)
    rhs = spatial_hpf(img, FilterSpec(fc, order=2), T, m.N)
    assert np.max(np.abs(lhs - rhs)) < 1e-9


def test_impulse_response_closed_form():
    m = CyclicSMatrix.from_degree(8, 15, 17)
    N = m.N
    spec = FilterSpec(1500.0)
    img = np.zeros(m.shape)
    img.flat[0] = 1.0
    # H on the full signed spectrum, conjugated for the row-major image
    k = np.fft.fftfreq(N, d=1.0 / N)
    H = transfer(k / (T * N), spec.cutoff_hz)
    expected = np.fft.ifft(np.conj(H)).real
    np.testing.assert_allclose(spatial_hpf(img, spec, T, N).ravel(), expected, atol=1e-12)
    np.testing.assert_allclose(bin_response(spec, T, N), H[: N // 2 + 1], atol=0)


def test_constant_image_spatial_zero():
    out = spatial_hpf(np.ones((15, 17)), FilterSpec(1000.0), T, 255)
    assert np.max(np.abs(out)) < 1e-12
    with pytest.raises(ShapeMismatch):
        spatial_hpf(np.ones((15, 16)), FilterSpec(1000.0), T, 255)


def test_hpf_needs_complete_trace():
    m = CyclicSMatrix.from_degree(4, 3, 5)
    t = measure_planned(m, np.ones((3, 5)), IDEAL, SamplingPlan(15, 2))
    with pytest.raises(IncompleteTrace):
        hpf_trace(t, FilterSpec(1e4))


def test_time_domain_realization_close_to_dft(rng):
    m = CyclicSMatrix.from_degree(12, 63, 65)
    img = rng.random(m.shape)
    t = measure_full(m, img, IDEAL)
    for fc in (6.0, 10.0, 15.0):
        td = reconstruct(hpf_trace(t, FilterSpec(fc, realization="time-domain")), m)
        assert np.max(np.abs(td - spatial_hpf(img, FilterSpec(fc), T, m.N))) < 1e-3


def test_time_domain_constant_input_is_zero():
    m = CyclicSMatrix.from_degree(8, 15, 17)
    t = measure_full(m, np.full(m.shape, 0.5), IDEAL)
    out = hpf_trace(replace(t, samples=np.full(m.N, 3.0)), FilterSpec(500.0, realization="time-domain"))
    assert np.max(np.abs(out.samples)) < 1e-12


# -- Otsu --------------------------------------------------------------------
def test_between_class_variance_matches_brute_force(rng):
    hist = rng.integers(0, 50, 32)
    fast = between_class_variance(hist)
    for t in range(31):
        assert fast[t] == pytest.approx(brute_between_class(hist, t), rel=1e-9, abs=1e-12)


def test_bimodal_clusters():
    values = np.concatenate([np.full(400, 0.2), np.full(600, 0.8)])
    tau = otsu_threshold(values)
    assert 0.2 < tau <= 0.8
    hist, _ = np.histogram(values, bins=256, range=(0, 1))
    scan = [brute_between_class(hist, t) for t in range(256)]
    assert scan[otsu_index(hist)] == pytest.approx(max(scan))


def test_constant_input_gives_empty_map():
    assert not threshold_edges(np.full((8, 8), 0.3)).any()
    assert not threshold_edges(np.zeros((8, 8))).any()


def test_both_polarities():
    g = np.zeros((4, 4))
    g[0, 0], g[3, 3] = 1.0, -1.0
    e = threshold_edges(g)
    assert e[0, 0] and e[3, 3] and e.sum() == 2


def test_step_edge_localized():
    m = CyclicSMatrix.from_degree(10, 31, 33)
    N, i0 = m.N, 500
    x = np.zeros(N)
    x[i0:] = 1.0  # rising step at i0, falling at the wrap N -> 0
    t = measure_full(m, x.reshape(m.shape), IDEAL)
    grad, edges = edge_maps(t, m, FilterSpec(5000.0))
    g = np.abs(grad.ravel())
    near = lambda i, c: min((i - c) % N, (c - i) % N)  # noqa: E731
    peak_rise = max(range(i0 - 5, i0 + 5), key=lambda i: g[i])
    peak_fall = max(list(range(N - 5, N)) + list(range(0, 5)), key=lambda i: g[i])
    assert near(peak_rise, i0) <= 1
    assert near(peak_fall, 0) <= 1
    hits = np.flatnonzero(edges.ravel())
    assert hits.size > 0
    # the step sits between pixels i0 - 1 and i0; allow one pixel either side of that gap
    assert all(min(near(i, i0 - 0.5), near(i, -0.5)) <= 1.5 for i in hits)


def test_kangaroo_sharpens_with_cutoff():
    from spikit.fixtures import silhouette

    img, _ = silhouette(255)
    m = CyclicSMatrix.from_degree(16, 255, 257)
    t = measure_full(m, fit_to_grid(img, 255, 257), IDEAL)
    fractions = [edge_maps(t, m, FilterSpec(fc))[1].mean() for fc in (100.0, 300.0, 1000.0)]
    assert fractions[0] >= fractions[1] >= fractions[2]
