"""Field propagation engines and cross-method error metrics.

``spectral_step`` is the exact solution of the quartic envelope equation
and serves as the reference; ``kernel_convolve`` applies the first-order
closed-form kernel in position space; ``fphe_step`` is the exact one-way
Helmholtz propagator.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .dispersion import p_max, quartic_omega
from .errors import BandLimitError, ConfigurationError, DomainError
from .kernel import (
    VALIDITY_WARN,
    KernelValidityWarning,
    closed_form_array,
    correction_bracket,
    fresnel_array,
    validity_figure,
)
from .model import ComplexField, GridSpec, PropagationParams, SpectralField, gaussian_packet, moments, require_nonnegative_epsilon, rms

ALIAS_FRACTION = 0.9
ALIAS_TOL = 1e-8
EVANESCENT_TOL = 1e-8
EDGE_TOL = 1e-8
DIRECT_LIMIT = 4096


class Method(enum.Enum):
    SPECTRAL_QUARTIC = "spectral"
    ANGULAR_SPECTRUM_FPHE = "fphe"
    KERNEL_CONVOLUTION = "kernel"
    FIRST_ORDER_DENSITY = "density"


@dataclass(frozen=True)
class PropagationResult:
    field: ComplexField
    z: float
    method: Method
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class DensityProfile:
    """First-order (possibly negative) intensity on the grid."""

    grid: GridSpec
    values: np.ndarray
    z: float
    epsilon: float
    diagnostics: dict = field(default_factory=dict)


def _epsilon(params) -> float:
    if isinstance(params, PropagationParams):
        params.require_propagatable()
        return params.epsilon
    eps = float(params)
    require_nonnegative_epsilon(eps)
    return eps


def _diagnostics(psi_in: ComplexField, psi_out: ComplexField, eps: float, spec: SpectralField | None = None) -> dict:
    n_in = psi_in.norm2()
    n_out = psi_out.norm2()
    if spec is None:
        spec = psi_in.to_spectral()
    occ = spec.power_beyond(p_max(eps)) if eps > 0 else 0.0
    return {
        "norm_in": n_in,
        "norm_out": n_out,
        "norm_drift": abs(n_out - n_in) / n_in if n_in > 0 else 0.0,
        "band_occupancy": occ,
        "min_density": float(np.min(psi_out.density())),
    }


def check_aliasing(spec: SpectralField) -> float:
    occ = spec.power_beyond(ALIAS_FRACTION * spec.grid.k_nyq)
    if occ >= ALIAS_TOL:
        raise ConfigurationError(
            f"{occ:.3g} of the spectral power lies beyond {ALIAS_FRACTION} k_nyq: refine the grid"
        )
    return occ


def spectral_step(psi: ComplexField, z: float, params: PropagationParams | float) -> PropagationResult:
    """Exact evolution: multiply the spectrum by ``exp(-i (k^2/2 + eps k^4/8) z)``."""
    eps = _epsilon(params)
    if not z >= 0:
        raise DomainError(f"z must be >= 0 (got {z})")
    spec = psi.to_spectral()
    check_aliasing(spec)
    k = psi.grid.k
    out = SpectralField(psi.grid, spec.values * np.exp(-1j * quartic_omega(k, eps) * z)).to_spatial()
    return PropagationResult(out, float(z), Method.SPECTRAL_QUARTIC, _diagnostics(psi, out, eps, spec))


def evanescent_occupancy(psi: ComplexField, k0: float) -> float:
    return psi.to_spectral().power_beyond(np.nextafter(k0, 0.0))


def fphe_step(psi: ComplexField, z: float, k0: float, *, remove_carrier: bool = False) -> PropagationResult:
    """One-way Helmholtz propagation with multiplier ``exp(i sqrt(k0^2 - k^2) z)``.

    Components with ``|k| >= k0`` must carry less than ``EVANESCENT_TOL`` of
    the power; they are passed through with ``kz = 0`` so the step stays
    unitary. ``remove_carrier`` divides out ``exp(i k0 z)``.
    """
    if not k0 > 0:
        raise DomainError("k0 must be positive")
    if not z >= 0:
        raise DomainError(f"z must be >= 0 (got {z})")
    spec = psi.to_spectral()
    occ = spec.power_beyond(np.nextafter(k0, 0.0))
    if occ >= EVANESCENT_TOL:
        raise BandLimitError(f"{occ:.3g} of the power is at |k| >= k0 (evanescent band)")
    k = psi.grid.k
    kz = np.sqrt(np.clip(k0 * k0 - k * k, 0.0, None))
    phase = kz - k0 if remove_carrier else kz
    out = SpectralField(psi.grid, spec.values * np.exp(1j * phase * z)).to_spatial()
    diag = _diagnostics(psi, out, 0.0, spec)
    diag["evanescent_occupancy"] = occ
    return PropagationResult(out, float(z), Method.ANGULAR_SPECTRUM_FPHE, diag)


# ---------------------------------------------------------------------------
# position-space kernel propagation
# ---------------------------------------------------------------------------


def _edge_slice(n: int) -> int:
    return max(1, n // 64)


def edge_leak(values: np.ndarray) -> float:
    """Largest edge amplitude relative to the peak amplitude."""
    a = np.abs(values)
    peak = a.max()
    if peak == 0:
        return 0.0
    m = _edge_slice(a.size)
    return float(max(a[:m].max(), a[-m:].max()) / peak)


def _check_edges(psi: ComplexField) -> float:
    leak = edge_leak(psi.values)
    if leak >= EDGE_TOL:
        raise ConfigurationError(
            f"field reaches the domain edge ({leak:.3g} of peak): widen the grid"
        )
    return leak


def _lag_convolve(kern: np.ndarray, values: np.ndarray, dx: float, fast: bool | None) -> np.ndarray:
    n = values.size
    if fast is None:
        fast = n >= DIRECT_LIMIT
    if not fast:
        return _accel.toeplitz_apply(kern, values) * dx
    m = 1 << (3 * n - 3).bit_length()
    full = np.fft.ifft(np.fft.fft(kern, m) * np.fft.fft(values, m))
    return full[n - 1 : 2 * n - 1] * dx


def _lags(grid: GridSpec) -> np.ndarray:
    return grid.dx * np.arange(-(grid.n - 1), grid.n)


def kernel_convolve(psi: ComplexField, z: float, epsilon: float, *, fast: bool | None = None) -> PropagationResult:
    """``psi(x, z) = int K(x, z; x', 0) psi(x', 0) dx'`` with the closed-form kernel.

    The trapezoid sum runs over the grid without periodic wrap-around.
    ``fast`` selects FFT-based linear convolution (default for n >= 4096);
    both paths compute the same sum.
    """
    eps = _epsilon(epsilon)
    if not z > 0:
        raise DomainError(f"kernel propagation needs z > 0 (got {z})")
    leak = _check_edges(psi)
    kern = closed_form_array(_lags(psi.grid), z, eps)
    out = ComplexField(psi.grid, _lag_convolve(kern, psi.values, psi.grid.dx, fast))
    diag = _diagnostics(psi, out, eps)
    diag["edge_leak_in"] = leak
    diag["edge_leak_out"] = edge_leak(out.values)
    diag["validity"] = _field_validity(psi, z, eps)
    if diag["validity"] > VALIDITY_WARN:
        warnings.warn(
            f"kernel validity figure {diag['validity']:.3g} exceeds {VALIDITY_WARN}",
            KernelValidityWarning,
            stacklevel=2,
        )
    return PropagationResult(out, float(z), Method.KERNEL_CONVOLUTION, diag)


def _field_validity(psi: ComplexField, z: float, eps: float) -> float:
    # kernel figure of merit at a displacement of one field width
    return validity_figure(rms(psi), z, eps)


def density_parts(psi: ComplexField, z: float, *, fast: bool | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Zeroth-order field and the split ``density = a + eps * b``.

    ``a = |psi0|^2`` with ``psi0`` the Fresnel propagation, and
    ``b = 2 Re(conj(psi0) psi1)`` where ``eps * psi1`` is the field produced
    by the first-order part of the kernel.
    """
    if not z > 0:
        raise DomainError(f"z must be > 0 (got {z})")
    _check_edges(psi)
    lags = _lags(psi.grid)
    k0 = fresnel_array(lags, z)
    k1 = k0 * (correction_bracket(lags, z, 1.0) - 1.0)
    psi0 = _lag_convolve(k0, psi.values, psi.grid.dx, fast)
    psi1 = _lag_convolve(k1, psi.values, psi.grid.dx, fast)
    return psi0, np.abs(psi0) ** 2, 2.0 * np.real(np.conj(psi0) * psi1)


def core_mask(grid: GridSpec, density0: np.ndarray, core_rms: float | None) -> np.ndarray:
    """Samples within ``core_rms`` widths of the zeroth-order centroid."""
    if core_rms is None:
        return np.ones(grid.n, dtype=bool)
    mean, var = moments(ComplexField(grid, np.sqrt(density0)))
    return np.abs(grid.x - mean) <= core_rms * math.sqrt(var)


def first_order_density(
    psi: ComplexField,
    z: float,
    epsilon: float,
    *,
    core_rms: float | None = 3.0,
    fast: bool | None = None,
) -> DensityProfile:
    """Intensity linearized in epsilon: ``|psi0|^2 + 2 eps Re(conj(psi0) psi1)``.

    The O(eps^2) term ``eps^2 |psi1|^2`` is dropped so the profile can turn
    negative. ``min_density`` in the diagnostics is taken over the core
    window (``core_rms`` zeroth-order widths around the centroid; ``None``
    means the whole grid); ``min_density_global`` covers every sample.
    """
    eps = _epsilon(epsilon)
    _, a, b = density_parts(psi, z, fast=fast)
    dens = a + eps * b
    mask = core_mask(psi.grid, a, core_rms)
    diag = {
        "min_density": float(dens[mask].min()),
        "min_density_global": float(dens.min()),
        "integral": float(dens.sum() * psi.grid.dx),
        "core_rms": core_rms,
    }
    return DensityProfile(psi.grid, dens, float(z), eps, diag)


# ---------------------------------------------------------------------------
# error metrics and scans
# ---------------------------------------------------------------------------


def l2_relative_error(a: ComplexField | np.ndarray, b: ComplexField | np.ndarray) -> float:
    va = a.values if isinstance(a, ComplexField) else np.asarray(a)
    vb = b.values if isinstance(b, ComplexField) else np.asarray(b)
    return float(np.linalg.norm(va - vb) / np.linalg.norm(vb))


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])


@dataclass(frozen=True)
class ComparisonResult:
    epsilons: tuple[float, ...]
    errors: tuple[float, ...]
    slope: float


def compare_kernel_spectral(psi: ComplexField, z: float, epsilons) -> ComparisonResult:
    """L2 gap between kernel and spectral propagation for each epsilon."""
    errs = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", KernelValidityWarning)
        for eps in epsilons:
            ref = spectral_step(psi, z, eps).field
            errs.append(l2_relative_error(kernel_convolve(psi, z, eps).field, ref))
    eps_t = tuple(float(e) for e in epsilons)
    slope = loglog_slope(eps_t, errs) if len(eps_t) > 1 and min(eps_t) > 0 else float("nan")
    return ComparisonResult(eps_t, tuple(errs), slope)


def fphe_envelope_gap(psi: ComplexField, zeta: float, k0: float) -> float:
    """L2 gap between carrier-free FPHE and quartic envelope propagation.

    Lengths are in units of the beam width, so the diffraction length is
    ``k0`` and ``epsilon = 1 / k0^2``; ``zeta`` is the distance in
    diffraction lengths.
    """
    exact = fphe_step(psi, zeta * k0, k0, remove_carrier=True).field
    envelope = spectral_step(psi, zeta, 1.0 / (k0 * k0)).field
    return l2_relative_error(envelope, exact)


@dataclass(frozen=True)
class ScanResult:
    sigma: float
    z: float
    epsilons: tuple[float, ...]
    min_density: tuple[float, ...]
    threshold: float | None
    bracket: tuple[float, float] | None
    monotone: bool
    core_rms: float | None

    @property
    def found(self) -> bool:
        return self.threshold is not None


def negativity_scan(
    sigma: float,
    z: float,
    eps_grid,
    grid: GridSpec,
    *,
    core_rms: float | None = 3.0,
    tol: float = 1e-3,
) -> ScanResult:
    """Minimum first-order density of a centered Gaussian across epsilon.

    The smallest epsilon with a negative minimum is bracketed on
    ``eps_grid`` and refined by bisection until the bracket is narrower than
    ``tol``; the reported threshold is the bracket midpoint.
    """
    eps_list = [float(e) for e in eps_grid]
    if not eps_list or any(e <= 0 for e in eps_list) or any(
        b <= a for a, b in zip(eps_list, eps_list[1:])
    ):
        raise ConfigurationError("eps_grid must be positive and strictly ascending")
    psi = gaussian_packet(grid, sigma)
    _, a, b = density_parts(psi, z)
    mask = core_mask(grid, a, core_rms)
    a_core, b_core = a[mask], b[mask]

    def min_density(eps: float) -> float:
        return float(np.min(a_core + eps * b_core))

    mins = [min_density(e) for e in eps_list]
    monotone = all(m2 <= m1 for m1, m2 in zip(mins, mins[1:]))
    threshold = bracket = None
    first_neg = next((i for i, m in enumerate(mins) if m < 0), None)
    if first_neg is not None:
        hi = eps_list[first_neg]
        lo = eps_list[first_neg - 1] if first_neg > 0 else 0.0
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if min_density(mid) < 0:
                hi = mid
            else:
                lo = mid
        bracket = (lo, hi)
        threshold = 0.5 * (lo + hi)
    return ScanResult(float(sigma), float(z), tuple(eps_list), tuple(mins), threshold, bracket, monotone, core_rms)
