"""Dispersion relations, momentum and wavelength bounds, quartic mode roots."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BandLimitError, DomainError


def exact_kz(kx, k0: float):
    """Forward Helmholtz branch ``+sqrt(k0^2 - kx^2)``; needs ``|kx| < k0``."""
    kx_arr = np.asarray(kx, dtype=float)
    if not k0 > 0:
        raise DomainError("k0 must be positive")
    if np.any(np.abs(kx_arr) >= k0):
        raise BandLimitError(f"|kx| must be below k0={k0} (evanescent waves are excluded)")
    out = np.sqrt(k0 * k0 - kx_arr * kx_arr)
    return float(out) if out.ndim == 0 else out


def quartic_omega(kx, epsilon: float):
    """Evolution symbol ``kx^2/2 + epsilon kx^4/8``."""
    k2 = np.asarray(kx, dtype=float) ** 2
    out = 0.5 * k2 + 0.125 * epsilon * k2 * k2
    return float(out) if out.ndim == 0 else out


def truncation_error(kx, k0: float):
    """Gap between the exact forward ``kz`` and its quartic Taylor truncation."""
    kx_arr = np.asarray(kx, dtype=float)
    kz = np.asarray(exact_kz(kx_arr, k0))
    k2 = kx_arr * kx_arr
    approx = k0 - k2 / (2 * k0) - k2 * k2 / (8 * k0**3)
    out = np.abs(kz - approx)
    return float(out) if out.ndim == 0 else out


def p_max(epsilon: float, *, allow_zero: bool = False) -> float:
    """Largest transverse momentum with non-negative first-order intensity.

    ``sqrt(2 / (3 epsilon))``. With ``allow_zero`` the undeformed limit
    ``epsilon == 0`` returns ``inf`` instead of raising.
    """
    if epsilon == 0 and allow_zero:
        return math.inf
    if not (math.isfinite(epsilon) and epsilon > 0):
        raise DomainError(f"p_max needs epsilon > 0 (got {epsilon})")
    return math.sqrt(2.0 / (3.0 * epsilon))


def lambda_min(k0: float, zd: float) -> float:
    """Shortest admissible wavelength, ``sqrt(6 pi^2 / (k0^3 Zd))``."""
    if not (k0 > 0 and zd > 0):
        raise DomainError("k0 and Zd must be positive")
    return math.sqrt(6.0 * math.pi**2 / (k0**3 * zd))


def wavelength_from_momentum(p: float, k0: float) -> float:
    """Invert ``p = 2 pi / (k0 lambda)``."""
    if not (p > 0 and k0 > 0):
        raise DomainError("p and k0 must be positive")
    return 2.0 * math.pi / (k0 * p)


@dataclass(frozen=True)
class ModeRoots:
    """Roots of ``(eps/8) l^4 - l^2/2 - E = 0`` split into the two pairs.

    ``oscillatory`` is ``(+i kappa, -i kappa)`` and ``evanescent`` is
    ``(+q, -q)``; for ``E > 0`` both kappa and q are real and positive.
    """

    oscillatory: tuple[complex, complex]
    evanescent: tuple[complex, complex]
    energy: float
    epsilon: float

    @property
    def wavenumber(self) -> float:
        """Real wavenumber of the oscillatory pair (zero at E = 0)."""
        return abs(self.oscillatory[0])

    @property
    def decay_rate(self) -> float:
        return abs(self.evanescent[0])

    def all(self) -> tuple[complex, ...]:
        return self.oscillatory + self.evanescent

    def residuals(self) -> np.ndarray:
        lam = np.array(self.all())
        return np.abs(characteristic(lam, self.energy, self.epsilon))


def characteristic(lam, energy: float, epsilon: float):
    """Value of the mode polynomial ``(eps/8) l^4 - l^2/2 - E``."""
    lam = np.asarray(lam, dtype=complex)
    l2 = lam * lam
    return 0.125 * epsilon * l2 * l2 - 0.5 * l2 - energy


def mode_roots(energy: float, epsilon: float) -> ModeRoots:
    """Solve the quartic mode polynomial in closed form.

    The polynomial is quadratic in ``s = l^2``, giving
    ``s = 2 (1 -+ sqrt(1 + 2 eps E)) / eps``. The minus branch is written as
    ``-4E / (1 + sqrt(1 + 2 eps E))`` so that it stays accurate when
    ``eps E`` is small.
    """
    if not (math.isfinite(epsilon) and epsilon > 0):
        raise DomainError(f"mode_roots needs epsilon > 0 (got {epsilon})")
    disc = 1.0 + 2.0 * epsilon * energy
    if disc < 0:
        raise DomainError(f"1 + 2 eps E = {disc:.6g} < 0: no real branch")
    root = math.sqrt(disc)
    s_osc = -4.0 * energy / (1.0 + root)
    s_ev = 2.0 * (1.0 + root) / epsilon
    lo = complex(np.sqrt(complex(s_osc)))
    lo = _upper(lo)
    le = math.sqrt(s_ev)
    # labels follow the branch; for E < 0 the "oscillatory" pair is real
    return ModeRoots((lo, -lo), (complex(le), complex(-le)), float(energy), float(epsilon))


def _upper(z: complex) -> complex:
    # canonical representative: +i kappa for the oscillatory pair
    if z.imag < 0 or (z.imag == 0 and z.real < 0):
        return -z
    return z


def first_order_wavenumber(k: float, epsilon: float) -> float:
    """Leading-order oscillatory wavenumber ``k (1 - eps k^2 / 8)``."""
    return k * (1.0 - epsilon * k * k / 8.0)


def first_order_decay(epsilon: float) -> float:
    """Leading-order evanescent rate ``2 / sqrt(eps)``."""
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    return 2.0 / math.sqrt(epsilon)
