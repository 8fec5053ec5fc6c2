import math
import warnings

import numpy as np
import pytest

from nonparaxial.errors import BandLimitError, ConfigurationError, DomainError
from nonparaxial.kernel import KernelValidityWarning
from nonparaxial.model import ComplexField, GridSpec, PropagationParams, gaussian_packet
from nonparaxial.propagate import (
    Method,
    compare_kernel_spectral,
    density_parts,
    first_order_density,
    fphe_envelope_gap,
    fphe_step,
    kernel_convolve,
    l2_relative_error,
    loglog_slope,
    negativity_scan,
    spectral_step,
)

from conftest import band_limited

SIGMA_NARROW = 1 / math.sqrt(2)


def test_spectral_identity_at_zero_distance(grid, rng):
    f = ComplexField(grid, band_limited(grid, rng))
    out = spectral_step(f, 0.0, 0.3).field
    assert np.max(np.abs(out.values - f.values)) < 1e-14


def test_unitarity_random_fields(grid, rng):
    for _ in range(100):
        f = ComplexField(grid, band_limited(grid, rng))
        for res in (spectral_step(f, 1.7, 0.05), fphe_step(f, 3.0, 10.0)):
            assert res.diagnostics["norm_drift"] < 1e-10


def test_spectral_semigroup(grid, rng):
    f = ComplexField(grid, band_limited(grid, rng))
    two = spectral_step(spectral_step(f, 0.4, 0.02).field, 0.9, 0.02).field
    one = spectral_step(f, 1.3, 0.02).field
    assert l2_relative_error(two, one) < 1e-12


def test_spectral_accepts_params(grid):
    f = gaussian_packet(grid, 1.0)
    p = PropagationParams.direct(0.01)
    a = spectral_step(f, 1.0, p).field
    b = spectral_step(f, 1.0, 0.01).field
    assert np.array_equal(a.values, b.values)
    with pytest.raises(DomainError):
        spectral_step(f, 1.0, PropagationParams.temporal(1.0, 0.3, 1.0))
    with pytest.raises(DomainError):
        spectral_step(f, -1.0, 0.01)


def test_aliasing_rejected():
    g = GridSpec.centered(256, 8.0)
    f = gaussian_packet(g, 0.2, k_carrier=0.9 * g.k_nyq)
    with pytest.raises(ConfigurationError):
        spectral_step(f, 1.0, 0.0)


def test_fphe_plane_waves():
    g = GridSpec.centered(256, 10 * math.pi)
    x = g.x
    on_axis = ComplexField(g, np.ones(g.n, dtype=complex))
    out = fphe_step(on_axis, 2.5, 1.0).field.values
    assert np.allclose(out, np.exp(2.5j), atol=1e-13)
    k = 0.6
    assert np.any(np.isclose(g.k, k))
    wave = ComplexField(g, np.exp(1j * k * x))
    out = fphe_step(wave, 1.0, 1.0).field.values
    assert np.allclose(out, np.exp(1j * k * x) * np.exp(0.8j), atol=1e-12)


def test_fphe_rejects_evanescent_power():
    g = GridSpec.centered(256, 10 * math.pi)
    f = gaussian_packet(g, 2.0, k_carrier=1.5)
    with pytest.raises(BandLimitError):
        fphe_step(f, 1.0, 1.0)


def test_fphe_gap_shrinks_with_wavenumber():
    g = GridSpec.centered(2048, 64.0)
    f = gaussian_packet(g, 1.0)
    k0s = np.array([4.0, 8.0, 16.0, 32.0])
    gaps = [fphe_envelope_gap(f, 1.0, k0) for k0 in k0s]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    # neglected terms scale like k^6 / k0^5 over a distance k0
    assert loglog_slope(k0s, gaps) == pytest.approx(-4.0, abs=0.3)


def test_fresnel_limit_all_methods_agree():
    g = GridSpec.centered(2048, 40.0)
    f = gaussian_packet(g, 2.0)
    ref = spectral_step(f, 1.0, 0.0).field
    assert l2_relative_error(kernel_convolve(f, 1.0, 0.0).field, ref) < 1e-6
    d = first_order_density(f, 1.0, 0.0)
    assert np.max(np.abs(d.values - ref.density())) < 1e-6 * ref.density().max()
    # FPHE with carrier removed at large k0 approaches Fresnel propagation
    assert l2_relative_error(fphe_step(f, 1e4, 1e4, remove_carrier=True).field, ref) < 1e-6


def test_kernel_error_second_order():
    g = GridSpec.centered(2048, 32.0)
    res = compare_kernel_spectral(gaussian_packet(g, 2.0), 1.0, [1e-3, 2e-3, 4e-3, 8e-3])
    assert res.slope == pytest.approx(2.0, abs=0.15)


def test_fast_and_direct_paths_agree():
    g = GridSpec.centered(1024, 32.0)
    f = gaussian_packet(g, 1.5, k_carrier=0.5)
    a = kernel_convolve(f, 1.0, 0.01, fast=False).field
    b = kernel_convolve(f, 1.0, 0.01, fast=True).field
    assert l2_relative_error(a, b) < 1e-12


def test_kernel_validity_warning_at_small_distance(grid):
    f = gaussian_packet(grid, 1.0)
    with pytest.warns(KernelValidityWarning):
        kernel_convolve(f, 0.05, 0.5)


def test_kernel_edge_leak_rejected():
    g = GridSpec.centered(512, 8.0)
    f = gaussian_packet(g, 2.0)
    with pytest.raises(ConfigurationError):
        kernel_convolve(f, 1.0, 0.0)


def test_kernel_rejects_nonpositive_distance(grid):
    f = gaussian_packet(grid, 1.0)
    with pytest.raises(DomainError):
        kernel_convolve(f, 0.0, 0.01)


def test_kernel_result_metadata(grid):
    res = kernel_convolve(gaussian_packet(grid, 1.0), 1.0, 0.01)
    assert res.method is Method.KERNEL_CONVOLUTION
    assert {"norm_drift", "edge_leak_in", "edge_leak_out", "validity", "band_occupancy"} <= set(res.diagnostics)


def test_density_split_is_linear_in_epsilon(grid):
    f = gaussian_packet(grid, SIGMA_NARROW)
    _, a, b = density_parts(f, 1.0)
    d = first_order_density(f, 1.0, 0.7)
    assert np.allclose(d.values, a + 0.7 * b, rtol=0, atol=1e-15)


def test_density_integral_second_order(grid):
    f = gaussian_packet(grid, 1.0)
    eps = np.array([0.01, 0.02, 0.04, 0.08])
    # the O(eps) part of the linearized density carries no net probability
    for e in eps:
        assert abs(first_order_density(f, 1.0, e).diagnostics["integral"] - 1.0) < 1e-12
    # the full square of the first-order field gains eps^2 |psi1|^2
    drift = [kernel_convolve(f, 1.0, e).diagnostics["norm_drift"] for e in eps]
    assert loglog_slope(eps, drift) == pytest.approx(2.0, abs=0.2)


@pytest.mark.parametrize("z", [0.5, 1.0, 2.0])
def test_density_positive_for_small_epsilon(grid, z):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", KernelValidityWarning)
        d = first_order_density(gaussian_packet(grid, SIGMA_NARROW), z, 0.05)
    assert d.diagnostics["min_density"] >= 0


def test_density_negative_above_threshold(grid):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", KernelValidityWarning)
        d = first_order_density(gaussian_packet(grid, SIGMA_NARROW), 1.0, 5.0)
    assert d.diagnostics["min_density"] < 0


def test_scan_matches_analytic_threshold(grid):
    # density ratio b/a = 3 (x^2 - 1) / 8 at z = 1 for this width gives 8/3
    res = negativity_scan(SIGMA_NARROW, 1.0, np.arange(1, 41) * 0.25, grid)
    assert res.found
    assert res.threshold == pytest.approx(8 / 3, abs=1e-3)
    lo, hi = res.bracket
    assert hi - lo <= 1e-3


def test_scan_wider_packet_has_higher_threshold(grid):
    narrow = negativity_scan(SIGMA_NARROW, 1.0, np.arange(1, 401) * 0.25, grid)
    wide = negativity_scan(2 * SIGMA_NARROW, 1.0, np.arange(1, 401) * 0.25, grid)
    assert wide.threshold > narrow.threshold


def test_scan_without_negativity(grid):
    res = negativity_scan(SIGMA_NARROW, 1.0, [0.5, 1.0, 1.5], grid)
    assert not res.found
    assert res.threshold is None and res.bracket is None


def test_scan_rejects_bad_grid(grid):
    with pytest.raises(ConfigurationError):
        negativity_scan(SIGMA_NARROW, 1.0, [1.0, 0.5], grid)
    with pytest.raises(ConfigurationError):
        negativity_scan(SIGMA_NARROW, 1.0, [0.0, 0.5], grid)
