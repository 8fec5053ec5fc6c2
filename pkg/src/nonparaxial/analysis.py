"""Euclidean action, instanton, quartic modes and Berry-phase loop integrals."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .dispersion import first_order_decay, first_order_wavenumber, mode_roots, p_max
from .errors import AdmissibilityError, ConfigurationError, DomainError
from .model import ComplexField, GridSpec


# ---------------------------------------------------------------------------
# actions and the instanton
# ---------------------------------------------------------------------------


def _velocity(path, dtau: float) -> np.ndarray:
    path = np.asarray(path, dtype=float)
    if path.size < 16:
        raise ConfigurationError(f"action needs at least 16 samples (got {path.size})")
    if not dtau > 0:
        raise ConfigurationError("sample spacing must be positive")
    return np.gradient(path, dtau, edge_order=2)


def euclidean_action(path, dtau: float, epsilon: float) -> float:
    """``S_E = -int (xdot^2/2 + eps xdot^4/8) dtau`` (sign as in the Euclidean weight ``exp(S_E)``).

    Velocities use second-order central differences and the integral the
    trapezoid rule.
    """
    v = _velocity(path, dtau)
    return -float(np.trapezoid(0.5 * v**2 + 0.125 * epsilon * v**4, dx=dtau))


def lorentzian_action(path, dt: float, epsilon: float) -> float:
    """``S = int (xdot^2/2 - eps xdot^4/8) dt``."""
    v = _velocity(path, dt)
    return float(np.trapezoid(0.5 * v**2 - 0.125 * epsilon * v**4, dx=dt))


def conserved_momentum(velocity, epsilon: float):
    """First integral of the Euclidean equation of motion, ``v + eps v^3 / 2``."""
    return velocity + 0.5 * epsilon * velocity**3


@dataclass(frozen=True)
class InstantonResult:
    velocity: complex
    momentum: float
    epsilon: float
    stationarity_residual: float


def instanton(epsilon: float) -> InstantonResult:
    """Velocity at which ``d/dv (v + eps v^3/2) = 1 + 3 eps v^2 / 2`` vanishes.

    The quadratic is solved as a polynomial root problem (companion matrix)
    and polished with one Newton step; the root in the upper half plane is
    returned. The rotated momentum is its modulus.
    """
    if not (math.isfinite(epsilon) and epsilon > 0):
        raise DomainError(f"instanton needs epsilon > 0 (got {epsilon})")
    roots = np.roots([1.5 * epsilon, 0.0, 1.0])
    v = complex(max(roots, key=lambda r: r.imag))
    v -= (1.0 + 1.5 * epsilon * v * v) / (3.0 * epsilon * v)
    residual = abs(1.0 + 1.5 * epsilon * v * v)
    return InstantonResult(v, abs(v), float(epsilon), residual)


def instanton_trajectory(epsilon: float, z) -> np.ndarray:
    """Straight extremal path ``x = p_max z`` (c = 1)."""
    slope = instanton(epsilon).momentum
    return slope * np.asarray(z, dtype=float)


# ---------------------------------------------------------------------------
# quartic modes
# ---------------------------------------------------------------------------


class Constraint(enum.Enum):
    INCOMING = "incoming"  # A = C = 0
    OUTGOING = "outgoing"  # B = D = 0
    CONSTRAINED = "constrained"  # A = -C, B = -D
    STANDING = "standing"  # B = conj(A), C = D = 0


@dataclass(frozen=True)
class ModeSolution:
    """Coefficients of the four-exponential mode with energy ``E = k^2 / 2``.

    Build through :meth:`incoming`, :meth:`outgoing`, :meth:`constrained` or
    :meth:`standing` so the coefficient relations hold.
    """

    A: complex
    B: complex
    C: complex
    D: complex
    k: float
    epsilon: float
    constraint: Constraint

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise DomainError("modes need epsilon > 0")
        if not self.k >= 0:
            raise DomainError("k must be >= 0")
        A, B, C, D = self.A, self.B, self.C, self.D
        ok = {
            Constraint.INCOMING: A == 0 and C == 0,
            Constraint.OUTGOING: B == 0 and D == 0,
            Constraint.CONSTRAINED: A == -C and B == -D,
            Constraint.STANDING: B == np.conj(A) and C == 0 and D == 0,
        }[self.constraint]
        if not ok:
            raise DomainError(f"coefficients violate the {self.constraint.value} relations")

    @property
    def E(self) -> float:
        return 0.5 * self.k * self.k

    @classmethod
    def incoming(cls, B: complex, D: complex, k: float, epsilon: float) -> "ModeSolution":
        return cls(0j, complex(B), 0j, complex(D), k, epsilon, Constraint.INCOMING)

    @classmethod
    def outgoing(cls, A: complex, C: complex, k: float, epsilon: float) -> "ModeSolution":
        return cls(complex(A), 0j, complex(C), 0j, k, epsilon, Constraint.OUTGOING)

    @classmethod
    def constrained(cls, A: complex, B: complex, k: float, epsilon: float) -> "ModeSolution":
        return cls(complex(A), complex(B), -complex(A), -complex(B), k, epsilon, Constraint.CONSTRAINED)

    @classmethod
    def standing(cls, A: complex, k: float, epsilon: float) -> "ModeSolution":
        A = complex(A)
        return cls(A, A.conjugate(), 0j, 0j, k, epsilon, Constraint.STANDING)

    def coefficient_weight(self) -> float:
        return abs(self.A) ** 2 + abs(self.B) ** 2 + abs(self.C) ** 2 + abs(self.D) ** 2

    def exponents(self, exact: bool = False) -> tuple[float, float]:
        """Oscillatory wavenumber and evanescent rate of the mode."""
        if exact:
            r = mode_roots(self.E, self.epsilon)
            return r.wavenumber, r.decay_rate
        return first_order_wavenumber(self.k, self.epsilon), first_order_decay(self.epsilon)


OVERFLOW_LIMIT = 1e8


def build_mode(mode: ModeSolution, grid: GridSpec, *, exact: bool = False, z: float | None = None) -> ComplexField:
    """Sample the four-term mode on the grid.

    The common factor ``exp(-i E z)`` is a global phase and is applied only
    when ``z`` is given. ``exact`` takes the exponents from the closed-form
    quartic roots instead of their first-order expressions.
    """
    kappa, q = mode.exponents(exact)
    x = grid.x
    if mode.C != 0 or mode.D != 0:
        reach = q * max(abs(grid.x_min), abs(grid.x_max))
        if reach > math.log(OVERFLOW_LIMIT):
            raise ConfigurationError(
                f"exp(2|x|/sqrt(eps)) reaches {math.exp(min(reach, 700)):.3g} > {OVERFLOW_LIMIT:g} on this grid"
            )
    psi = mode.A * np.exp(1j * kappa * x) + mode.B * np.exp(-1j * kappa * x)
    if mode.C != 0:
        psi = psi + mode.C * np.exp(q * x)
    if mode.D != 0:
        psi = psi + mode.D * np.exp(-q * x)
    if z is not None:
        psi = psi * np.exp(-1j * mode.E * z)
    return ComplexField(grid, psi)


def quantized_k(m: int, L: float, epsilon: float, *, exact: bool = False) -> float:
    """Mode parameter ``k`` whose oscillatory wavenumber equals ``m / L``.

    That wavenumber makes the mode periodic on a loop of circumference
    ``2 pi L``. Only the branch below the turning point of
    ``k (1 - eps k^2 / 8)`` is used.
    """
    target = m / L
    if target < 0:
        raise DomainError("use m >= 0")
    if target == 0:
        return 0.0

    if exact:
        # exact wavenumber kappa satisfies k^2/2 = kappa^2/2 + eps kappa^4/8
        return math.sqrt(target**2 + 0.25 * epsilon * target**4)
    k_turn = math.sqrt(8.0 / (3.0 * epsilon))
    if target >= first_order_wavenumber(k_turn, epsilon):
        raise DomainError(f"wavenumber {target} is beyond the first-order branch maximum")
    return brentq(lambda k: first_order_wavenumber(k, epsilon) - target, 0.0, k_turn, xtol=1e-15, rtol=1e-15)


# ---------------------------------------------------------------------------
# Berry phases
# ---------------------------------------------------------------------------


class LoopDirection(enum.Enum):
    X = "x"
    Z = "z"


@dataclass(frozen=True)
class BerryResult:
    direction: LoopDirection
    phase: float
    loop: float
    momentum: float | None = None
    tolerance: float = 0.0
    trivial: bool = True
    alpha: float | None = None
    n: int | None = None


PERIODIC_TOL = 1e-9


def berry_phase_x(mode: ModeSolution, L: float, *, n: int = 256, exact: bool = False) -> BerryResult:
    """Loop integral ``i oint psi* dpsi/dx dx`` over ``x in [0, 2 pi L)``.

    The derivative is spectral on the periodic grid. The mode must be
    periodic on the loop (no evanescent terms, wavenumber a multiple of
    ``1/L``); otherwise :class:`AdmissibilityError` is raised. Real modes
    give a vanishing phase; complex ones are evaluated and flagged
    non-trivial. ``momentum`` is ``<p> = -i oint psi* dpsi/dx dx``, so
    ``phase == -momentum``.
    """
    if not L > 0:
        raise DomainError("loop radius must be positive")
    if mode.C != 0 or mode.D != 0:
        raise AdmissibilityError("evanescent terms are not periodic on an x-loop")
    kappa, _ = mode.exponents(exact)
    winding = kappa * L
    if abs(winding - round(winding)) > PERIODIC_TOL * max(1.0, abs(winding)):
        raise AdmissibilityError(
            f"wavenumber {kappa:.12g} is not commensurate with the loop (k L = {winding:.12g})"
        )
    if n < 4 * (abs(round(winding)) + 1):
        raise ConfigurationError("loop grid too coarse for the mode")
    grid = GridSpec(n, 0.0, 2.0 * math.pi * L)
    psi = build_mode(mode, grid, exact=exact).values
    kk = 2.0 * math.pi * np.fft.fftfreq(n, d=grid.dx)
    dpsi = np.fft.ifft(1j * kk * np.fft.fft(psi))
    loop = complex(np.sum(np.conj(psi) * dpsi) * grid.dx)
    theta = 1j * loop
    norm2 = float(np.sum(np.abs(psi) ** 2) * grid.dx)
    real_mode = bool(np.allclose(psi.imag, 0.0, atol=1e-13 * max(1.0, np.abs(psi).max())))
    tolerance = abs(theta.imag) + 1e-13 * max(1.0, norm2 * abs(kappa))
    return BerryResult(
        LoopDirection.X,
        float(theta.real),
        2.0 * math.pi * L,
        momentum=float(-theta.real),
        tolerance=tolerance,
        trivial=real_mode,
    )


def berry_phase_z(mode: ModeSolution | None, T: float, alpha: float, n: int, *, samples: int = 64) -> BerryResult:
    """Phase ``oint alpha E dz`` over one period with ``E = n 2 pi / T``.

    The integral is done by the trapezoid rule over ``[0, T]``; the result
    is ``2 pi alpha n``. ``alpha`` absorbs the mode normalization and is
    never inferred from ``mode``.
    """
    if not T > 0:
        raise DomainError("period must be positive")
    if n < 0 or int(n) != n:
        raise DomainError("n must be a non-negative integer")
    E = n * (2.0 * math.pi / T)
    zs = np.linspace(0.0, T, samples)
    theta = float(np.trapezoid(np.full(samples, alpha * E), zs))
    if alpha != 0:
        ratio = theta / (2.0 * math.pi * alpha)
        if abs(ratio - round(ratio)) > 1e-12 * max(1.0, n):
            raise AssertionError(f"z-loop phase is not a multiple of 2 pi alpha ({ratio!r})")
    return BerryResult(LoopDirection.Z, theta, T, alpha=float(alpha), n=int(n))
