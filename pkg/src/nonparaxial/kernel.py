"""Propagator of the quartic equation: closed form, quadrature and checks.

The closed-form kernel is first order in epsilon,

    K = (2 pi i dt)^(-1/2) exp(i dx^2 / (2 dt))
        * [1 + 3 i eps / (8 dt) - 3 eps dx^2 / (4 dt^2) - i eps dx^4 / (8 dt^3)],

and is the same expression for a short step and for a finite interval.
The quadrature route evaluates the defining Fourier integral directly and
therefore carries all orders in epsilon.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _accel
from .dispersion import p_max
from .errors import ConfigurationError, DomainError, NonConvergenceError
from .model import require_nonnegative_epsilon

VALIDITY_WARN = 0.1
_ROOT_MINUS_I = complex(math.cos(-math.pi / 4), math.sin(-math.pi / 4))


class KernelMethod(enum.Enum):
    CLOSED_FORM = "closed_form"
    QUADRATURE = "quadrature"
    FRESNEL = "fresnel"


@dataclass(frozen=True)
class KernelQuery:
    x1: float
    x2: float
    dt: float
    epsilon: float = 0.0
    method: KernelMethod = KernelMethod.CLOSED_FORM

    def __post_init__(self):
        if not self.dt > 0:
            raise DomainError(f"kernel interval must be positive (got dt={self.dt})")
        require_nonnegative_epsilon(self.epsilon)

    @property
    def dx(self) -> float:
        return self.x2 - self.x1


@dataclass(frozen=True)
class KernelValue:
    value: complex
    query: KernelQuery
    validity: float


class KernelValidityWarning(UserWarning):
    """The first-order kernel is evaluated outside its trustworthy range."""


def validity_figure(dx, dt, epsilon: float):
    """Size of the first-order correction: ``eps * max(1, dx^4) / dt^3``."""
    dx = np.abs(np.asarray(dx, dtype=float))
    out = epsilon * np.maximum(1.0, dx**4) / np.asarray(dt, dtype=float) ** 3
    return float(out) if np.ndim(out) == 0 else out


def _check_dt(dt):
    if np.any(np.asarray(dt) <= 0):
        raise DomainError("kernel interval must be positive")


def fresnel_array(dx, dt):
    """Undeformed propagator ``(2 pi i dt)^(-1/2) exp(i dx^2 / (2 dt))``.

    ``dx`` may be complex (used on rotated integration contours).
    """
    _check_dt(dt)
    dt = np.asarray(dt, dtype=float)
    return _ROOT_MINUS_I / np.sqrt(2.0 * np.pi * dt) * np.exp(0.5j * np.asarray(dx) ** 2 / dt)


def correction_bracket(dx, dt, epsilon: float):
    """The bracketed first-order factor multiplying the Fresnel kernel."""
    dt = np.asarray(dt, dtype=float)
    d2 = np.asarray(dx) ** 2
    return (
        1.0
        + 3j * epsilon / (8.0 * dt)
        - 3.0 * epsilon * d2 / (4.0 * dt**2)
        - 1j * epsilon * d2 * d2 / (8.0 * dt**3)
    )


def closed_form_array(dx, dt, epsilon: float):
    """Vectorized closed-form kernel; reduces to :func:`fresnel_array` at eps = 0."""
    return fresnel_array(dx, dt) * correction_bracket(dx, dt, epsilon)


def fresnel_kernel(x1: float, x2: float, dt: float) -> complex:
    return complex(fresnel_array(x2 - x1, dt))


def kernel_closed_form(q: KernelQuery) -> KernelValue:
    value = complex(closed_form_array(q.dx, q.dt, q.epsilon))
    fig = validity_figure(q.dx, q.dt, q.epsilon)
    if fig > VALIDITY_WARN:
        warnings.warn(
            f"first-order kernel validity figure {fig:.3g} exceeds {VALIDITY_WARN}",
            KernelValidityWarning,
            stacklevel=2,
        )
    return KernelValue(value, q, fig)


# ---------------------------------------------------------------------------
# quadrature of the Fourier representation
# ---------------------------------------------------------------------------


def default_band(dx: float, dt: float, epsilon: float) -> float:
    """Spectral window for the quadrature route.

    Wide enough to hold the stationary point ``dx/dt`` and the core of
    width ``1/sqrt(dt)``; for positive epsilon never wider than four times
    ``p_max``, beyond which the quartic phase cancels the integrand.
    """
    core = max(40.0 / math.sqrt(dt), 10.0 * abs(dx) / dt)
    if epsilon > 0:
        return min(core, 4.0 * p_max(epsilon))
    return core


MAX_N_QUAD = 1 << 24


def default_n_quad(dx: float, dt: float, epsilon: float, band: float, max_step_phase: float = 0.2) -> int:
    # fastest phase change on [-band, band] sets the step
    slope = abs(dx) + (band + 0.5 * epsilon * band**3) * dt
    n = max(256, int(math.ceil(2.0 * band * slope / max_step_phase)))
    return 1 << (n - 1).bit_length()


def _quadrature(dx, dt, epsilon, band, n_quad, taper_frac):
    k, w = _accel.simpson_nodes(band, n_quad, taper_frac)
    return _accel.quartic_quadrature(dx, dt, epsilon, k, w)


def kernel_quadrature(
    q: KernelQuery,
    band: float | None = None,
    n_quad: int | None = None,
    *,
    tol: float | None = None,
    taper_frac: float = 0.25,
) -> KernelValue:
    """Evaluate ``int exp(i k dx - i (k^2/2 + eps k^4/8) dt) dk / 2pi``.

    The integrand is truncated to ``|k| <= band`` with a cosine taper over
    the outer ``taper_frac`` of the window and integrated by the composite
    Simpson rule. When ``tol`` is given the rule is repeated with twice as
    many nodes and :class:`NonConvergenceError` is raised if the two
    results differ by more than ``tol``.
    """
    if band is None:
        band = default_band(q.dx, q.dt, q.epsilon)
    if not band > 0:
        raise ConfigurationError("band must be positive")
    if n_quad is None:
        n_quad = default_n_quad(q.dx, q.dt, q.epsilon, band)
    if not 256 <= n_quad <= MAX_N_QUAD:
        raise ConfigurationError(f"n_quad must lie in [256, {MAX_N_QUAD}] (got {n_quad})")
    n_quad += n_quad % 2
    value = complex(_quadrature(q.dx, q.dt, q.epsilon, band, n_quad, taper_frac)[0])
    if tol is not None:
        finer = complex(_quadrature(q.dx, q.dt, q.epsilon, band, 2 * n_quad, taper_frac)[0])
        if abs(finer - value) > tol:
            raise NonConvergenceError(
                f"doubling n_quad moved the kernel by {abs(finer - value):.3g} > {tol:.3g}"
            )
        value = finer
    return KernelValue(value, q, validity_figure(q.dx, q.dt, q.epsilon))


def quadrature_lattice(dx, dt, epsilon: float, band: float, n_quad: int, taper_frac: float = 0.25):
    """Quadrature kernel on arrays of ``(dx, dt)`` sharing one band and rule."""
    _check_dt(dt)
    require_nonnegative_epsilon(epsilon)
    if n_quad < 256 or n_quad % 2:
        raise ConfigurationError("n_quad must be even and >= 256")
    dx, dt = np.broadcast_arrays(np.asarray(dx, float), np.asarray(dt, float))
    vals = _quadrature(dx.ravel(), dt.ravel(), epsilon, band, n_quad, taper_frac)
    return vals.reshape(dx.shape)


# ---------------------------------------------------------------------------
# intensity and positivity
# ---------------------------------------------------------------------------


def intensity_first_order(x1, x2, dz, epsilon: float):
    """First-order beam intensity ``(1 - 3 eps dx^2 / (2 dz^2)) / (2 pi dz)``.

    Negative outside the positivity radius; callers inspect the sign.
    """
    _check_dt(dz)
    require_nonnegative_epsilon(epsilon)
    dz = np.asarray(dz, dtype=float)
    d = np.asarray(x2, dtype=float) - np.asarray(x1, dtype=float)
    out = (1.0 - 1.5 * epsilon * d * d / (dz * dz)) / (2.0 * np.pi * dz)
    return float(out) if out.ndim == 0 else out


def positivity_radius(dz: float, epsilon: float) -> float:
    """Largest ``|dx|`` with non-negative first-order intensity, ``dz * p_max``."""
    if not dz > 0:
        raise DomainError("dz must be positive")
    return dz * p_max(epsilon)


# ---------------------------------------------------------------------------
# finite-difference residual of the propagation equation
# ---------------------------------------------------------------------------

_D1 = ((-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0))  # / 12 h
_D2 = ((-2, -1.0), (-1, 16.0), (0, -30.0), (1, 16.0), (2, -1.0))  # / 12 h^2
_D4 = ((-3, -1.0), (-2, 12.0), (-1, -39.0), (0, 56.0), (1, -39.0), (2, 12.0), (3, -1.0))  # / 6 h^4


def pde_residual(q: KernelQuery, h_x: float = 1e-3, h_t: float = 1e-3, *, dps: int | None = 40) -> float:
    """Relative residual ``|i K_t + K_xx / 2 - eps K_xxxx / 8| / |K|``.

    Derivatives of the closed-form kernel are taken with fourth-order
    accurate central stencils. With ``dps`` set the kernel samples are
    evaluated in ``dps``-digit arithmetic (mpmath), which removes the
    cancellation error of the ``h^-4`` stencil; ``dps=None`` uses float64.
    The residual is exactly quadratic in epsilon for fixed steps.
    """
    if not (h_x > 0 and h_t > 0):
        raise ConfigurationError("finite-difference steps must be positive")
    if not q.dt > 2 * h_t:
        raise ConfigurationError(f"dt={q.dt} must exceed 2 h_t={2 * h_t}")
    # local chirp wavenumber of the kernel
    kappa = abs(q.dx) / q.dt + 1.0 / math.sqrt(q.dt)
    if h_x * kappa > 0.1 or h_t * kappa * kappa > 0.1:
        raise ConfigurationError("finite-difference steps too coarse for the kernel's chirp")

    if dps is None:
        def K(x, t):
            return complex(closed_form_array(x, t, q.epsilon))

        ii = 1j
        eps = q.epsilon
        to_float = abs
        dx0, dt0, hx, ht = q.dx, q.dt, h_x, h_t
    else:
        import mpmath

        ctx = mpmath.mp.clone()
        ctx.dps = dps
        eps = ctx.mpf(q.epsilon)
        pref = ctx.exp(-1j * ctx.pi / 4)

        def K(x, t):
            d2 = x * x
            bracket = 1 + 3j * eps / (8 * t) - 3 * eps * d2 / (4 * t**2) - 1j * eps * d2 * d2 / (8 * t**3)
            return pref / ctx.sqrt(2 * ctx.pi * t) * ctx.exp(1j * d2 / (2 * t)) * bracket

        ii = ctx.mpc(0, 1)
        to_float = lambda z: float(abs(z))  # noqa: E731
        dx0, dt0, hx, ht = ctx.mpf(q.dx), ctx.mpf(q.dt), ctx.mpf(h_x), ctx.mpf(h_t)

    k_t = sum(c * K(dx0, dt0 + s * ht) for s, c in _D1) / (12 * ht)
    k_xx = sum(c * K(dx0 + s * hx, dt0) for s, c in _D2) / (12 * hx**2)
    k_xxxx = sum(c * K(dx0 + s * hx, dt0) for s, c in _D4) / (6 * hx**4)
    residual = ii * k_t + k_xx / 2 - eps * k_xxxx / 8
    return to_float(residual) / to_float(K(dx0, dt0))


# ---------------------------------------------------------------------------
# composition of two kernels
# ---------------------------------------------------------------------------


def compose_closed_form(
    x1: float,
    x2: float,
    t1: float,
    t2: float,
    epsilon: float,
    *,
    n_quad: int = 4001,
    damping: float = 0.0,
) -> complex:
    """``int K(x2, t1+t2; x, t1) K(x, t1; x1, 0) dx`` for the closed-form kernel.

    The integrand is a polynomial times a pure chirp, so the real-line
    integral only exists as an oscillatory (Abel) limit. It is evaluated on
    the steepest-descent line ``x = x_s + s exp(i pi/4)`` through the
    stationary point, where the chirp becomes a Gaussian in ``s`` and the
    trapezoid rule converges spectrally. ``damping`` multiplies the integrand
    by ``exp(-damping (x - x_s)^2)`` (analytically continued), which allows
    a direct comparison with a damped real-line integral.
    """
    if not (t1 > 0 and t2 > 0):
        raise DomainError("both intervals must be positive")
    require_nonnegative_epsilon(epsilon)
    a = 0.5 * (1.0 / t1 + 1.0 / t2)
    xs = (x1 * t2 + x2 * t1) / (t1 + t2)
    rot = complex(math.cos(math.pi / 4), math.sin(math.pi / 4))
    # exp(-(a + i damping) s^2) along the line; 60 e-folds plus headroom for s^8
    half = math.sqrt(80.0 / a)
    s = np.linspace(-half, half, n_quad)
    x = xs + rot * s
    f = closed_form_array(x2 - x, t2, epsilon) * closed_form_array(x - x1, t1, epsilon)
    if damping:
        f = f * np.exp(-damping * (x - xs) ** 2)
    return complex(np.trapezoid(f, s) * rot)


def compose_real_line(
    x1: float,
    x2: float,
    t1: float,
    t2: float,
    epsilon: float,
    damping: float,
    *,
    half_width: float | None = None,
    n_quad: int = 200001,
) -> complex:
    """Damped composition integral evaluated on the real axis (cross-check)."""
    if not damping > 0:
        raise ConfigurationError("the real-line integral needs positive damping")
    xs = (x1 * t2 + x2 * t1) / (t1 + t2)
    if half_width is None:
        half_width = math.sqrt(60.0 / damping) + 10.0
    x = np.linspace(xs - half_width, xs + half_width, n_quad)
    f = closed_form_array(x2 - x, t2, epsilon) * closed_form_array(x - x1, t1, epsilon)
    f = f * np.exp(-damping * (x - xs) ** 2)
    return complex(np.trapezoid(f, x))
