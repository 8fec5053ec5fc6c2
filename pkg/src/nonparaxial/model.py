"""Domain types, unit conventions and field utilities.

Units are normalized with hbar = m = c = 1 so the kernel's effective time is
the propagation coordinate (t == z). Fourier transforms follow

    psi~(k) = integral psi(x) exp(-i k x) dx,
    psi(x)  = integral psi~(k) exp(+i k x) dk / 2pi.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError


class Origin(enum.Enum):
    SPATIAL = "spatial"
    TEMPORAL = "temporal"
    DIRECT = "direct"


# ---------------------------------------------------------------------------
# parameter conversions
# ---------------------------------------------------------------------------


def epsilon_from_spatial(k0: float, zd: float) -> float:
    """Quartic coefficient of a beam, ``1 / (k0 * Zd)``."""
    if not (k0 > 0 and zd > 0):
        raise DomainError(f"k0 and Zd must be positive (got k0={k0}, Zd={zd})")
    return 1.0 / (k0 * zd)


def epsilon_from_temporal(beta2: float, beta4: float, t0: float) -> float:
    """Quartic coefficient of a pulse, ``-beta4 / (3 beta2 T0^2)``.

    The result may be negative (anomalous fourth-order dispersion); such
    values are accepted here but refused by the propagation routines.
    """
    if beta2 == 0:
        raise DomainError("beta2 must be nonzero")
    if not t0 > 0:
        raise DomainError(f"T0 must be positive (got {t0})")
    return -beta4 / (3.0 * beta2 * t0 * t0)


@dataclass(frozen=True)
class PropagationParams:
    """Normalized constants of the quartic propagation equation.

    Use the ``spatial``/``temporal``/``direct`` constructors rather than the
    raw initializer so that the defining relation for ``epsilon`` holds.
    """

    epsilon: float
    k0: float = 1.0
    origin: Origin = Origin.DIRECT
    zd: float | None = None
    beta2: float | None = None
    beta4: float | None = None
    t0: float | None = None

    def __post_init__(self):
        if not math.isfinite(self.epsilon):
            raise DomainError("epsilon must be finite")
        if not (math.isfinite(self.k0) and self.k0 > 0):
            raise DomainError("k0 must be positive and finite")
        if self.origin is Origin.SPATIAL:
            if self.zd is None or self.epsilon != epsilon_from_spatial(self.k0, self.zd):
                raise DomainError("spatial params need epsilon == 1/(k0 Zd)")
        elif self.origin is Origin.TEMPORAL:
            if None in (self.beta2, self.beta4, self.t0) or self.epsilon != epsilon_from_temporal(
                self.beta2, self.beta4, self.t0
            ):
                raise DomainError("temporal params need epsilon == -beta4/(3 beta2 T0^2)")

    @classmethod
    def spatial(cls, k0: float, zd: float) -> "PropagationParams":
        return cls(epsilon_from_spatial(k0, zd), k0, Origin.SPATIAL, zd=zd)

    @classmethod
    def temporal(cls, beta2: float, beta4: float, t0: float, k0: float = 1.0) -> "PropagationParams":
        eps = epsilon_from_temporal(beta2, beta4, t0)
        return cls(eps, k0, Origin.TEMPORAL, beta2=beta2, beta4=beta4, t0=t0)

    @classmethod
    def direct(cls, epsilon: float, k0: float = 1.0) -> "PropagationParams":
        return cls(float(epsilon), k0, Origin.DIRECT)

    def require_propagatable(self) -> None:
        """Raise unless epsilon >= 0, which every propagation routine assumes."""
        require_nonnegative_epsilon(self.epsilon)

    def as_dict(self) -> dict:
        d = {"epsilon": self.epsilon, "k0": self.k0, "origin": self.origin.value}
        for name in ("zd", "beta2", "beta4", "t0"):
            value = getattr(self, name)
            if value is not None:
                d[name] = value
        return d


def require_nonnegative_epsilon(epsilon: float) -> None:
    if not (math.isfinite(epsilon) and epsilon >= 0):
        raise DomainError(f"propagation requires a finite epsilon >= 0 (got {epsilon})")


def beta_from_epsilon(params: PropagationParams | float) -> float:
    """GUP deformation ``beta`` matching the quartic coefficient.

    With hbar = m = 1 the coefficient of the fourth derivative is
    ``beta`` in the deformed Schrodinger equation and ``epsilon / 8`` in the
    optical one, hence ``beta = epsilon / 8``.
    """
    eps = params.epsilon if isinstance(params, PropagationParams) else float(params)
    if not math.isfinite(eps):
        raise DomainError("epsilon must be finite")
    return eps / 8.0


def minimal_length(beta: float) -> float:
    """``Delta X_0 ~ hbar sqrt(beta)`` with hbar = 1."""
    if not beta >= 0:
        raise DomainError(f"beta must be >= 0 (got {beta})")
    return math.sqrt(beta)


# ---------------------------------------------------------------------------
# grids and fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic sampling ``x_j = x_min + j dx``, ``j = 0..n-1``."""

    n: int
    x_min: float
    x_max: float

    def __post_init__(self):
        n = self.n
        if not isinstance(n, (int, np.integer)) or n < 8 or n & (n - 1):
            raise ConfigurationError(f"grid size must be a power of two >= 8 (got {n})")
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max) and self.x_max > self.x_min):
            raise ConfigurationError("grid needs finite x_min < x_max")

    @classmethod
    def centered(cls, n: int, half_width: float) -> "GridSpec":
        return cls(n, -half_width, half_width)

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def dk(self) -> float:
        return 2.0 * math.pi / (self.n * self.dx)

    @property
    def k_nyq(self) -> float:
        return math.pi / self.dx

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    @property
    def k(self) -> np.ndarray:
        """Dual grid in ascending order, ``-n/2 .. n/2-1`` times ``dk``."""
        return self.dk * np.arange(-(self.n // 2), self.n // 2)

    def check_band(self, band: float) -> None:
        if not band < self.k_nyq:
            raise ConfigurationError(
                f"band limit {band:.6g} not below the Nyquist wavenumber {self.k_nyq:.6g}"
            )

    def as_dict(self) -> dict:
        return {"n": int(self.n), "x_min": self.x_min, "x_max": self.x_max}


def _frozen(values, n: int) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128)
    if arr.shape != (n,):
        raise ConfigurationError(f"expected {n} samples, got shape {arr.shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ComplexField:
    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, self.grid.n))
        if not math.isfinite(self.norm2()):
            raise DomainError("field norm is not finite")

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.dx)

    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def to_spectral(self) -> "SpectralField":
        g = self.grid
        phase = np.exp(-1j * g.k * g.x_min)
        vals = g.dx * phase * np.fft.fftshift(np.fft.fft(self.values))
        return SpectralField(g, vals)

    def with_values(self, values) -> "ComplexField":
        return ComplexField(self.grid, values)


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, self.grid.n))

    def norm2(self) -> float:
        # (1/2pi) int |psi~|^2 dk, equal to the spatial norm by Parseval
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.dk / (2.0 * math.pi))

    def to_spatial(self) -> ComplexField:
        g = self.grid
        phase = np.exp(1j * g.k * g.x_min)
        vals = np.fft.ifft(np.fft.ifftshift(self.values * phase)) / g.dx
        return ComplexField(g, vals)

    def power_beyond(self, k_cut: float) -> float:
        """Fraction of spectral power at ``|k| > k_cut``."""
        p = np.abs(self.values) ** 2
        total = p.sum()
        if total == 0:
            return 0.0
        return float(p[np.abs(self.grid.k) > k_cut].sum() / total)


def gaussian_packet(grid: GridSpec, sigma: float, x0: float = 0.0, k_carrier: float = 0.0) -> ComplexField:
    """Unit-norm Gaussian whose density has standard deviation ``sigma``.

    ``psi(x) = (2 pi sigma^2)^(-1/4) exp(-(x-x0)^2 / (4 sigma^2)) exp(i k_c (x-x0))``
    """
    if not sigma > 0:
        raise ConfigurationError(f"sigma must be positive (got {sigma})")
    if sigma < 3 * grid.dx:
        raise ConfigurationError(
            f"sigma={sigma:.6g} is under-resolved on dx={grid.dx:.6g} (need sigma >= 3 dx)"
        )
    if not abs(k_carrier) < grid.k_nyq:
        raise ConfigurationError(f"carrier {k_carrier} at or above Nyquist {grid.k_nyq:.6g}")
    u = grid.x - x0
    amp = (2.0 * math.pi * sigma * sigma) ** -0.25
    return ComplexField(grid, amp * np.exp(-u * u / (4.0 * sigma * sigma) + 1j * k_carrier * u))


def moments(f: ComplexField) -> tuple[float, float]:
    """Mean and variance of position under the normalized density."""
    p = f.density()
    total = p.sum()
    if not total > 0:
        raise DomainError("zero-norm field has no moments")
    x = f.grid.x
    mean = float(np.dot(p, x) / total)
    var = float(np.dot(p, (x - mean) ** 2) / total)
    return mean, var


def rms(f: ComplexField) -> float:
    """Root-mean-square width of ``|psi|^2``."""
    return math.sqrt(moments(f)[1])


def shift(f: ComplexField, a: float) -> ComplexField:
    """Translate a field by ``a`` (exact for band-limited periodic samples)."""
    s = f.to_spectral()
    return SpectralField(s.grid, s.values * np.exp(-1j * s.grid.k * a)).to_spatial()
