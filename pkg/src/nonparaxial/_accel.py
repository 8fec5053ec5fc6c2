"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports and the environment variable
``NONPARAXIAL_DISABLE_NUMBA`` is unset (or ``0``). Both paths are always
importable so they can be cross-checked and benchmarked against each other.
"""
from __future__ import annotations

import os

import numpy as np


def _noop_jit(*args, **kwargs):
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(f):
        return f

    return wrap


def _have_numba() -> bool:
    try:
        import numba  # noqa: F401

        return True
    except ImportError:
        return False


HAVE_NUMBA = _have_numba()
DISABLED_BY_ENV = os.environ.get("NONPARAXIAL_DISABLE_NUMBA", "0").strip().lower() not in (
    "",
    "0",
    "false",
    "no",
)
USE_NUMBA = HAVE_NUMBA and not DISABLED_BY_ENV

if HAVE_NUMBA:
    from numba import njit
else:
    njit = _noop_jit

# numpy fallback keeps the (queries x nodes) phase matrix under this many entries
_CHUNK_ENTRIES = 1 << 22


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# Toeplitz (lag-indexed) direct convolution
# ---------------------------------------------------------------------------


@njit(cache=True, fastmath=True)
def _toeplitz_apply_numba(kern, psi):
    # reversed, split real/imag copies give unit-stride inner loops that vectorize
    n = psi.shape[0]
    kr = kern.real[::-1].copy()
    ki = kern.imag[::-1].copy()
    pr = psi.real.copy()
    pi = psi.imag.copy()
    out = np.empty(n, dtype=np.complex128)
    for i in range(n):
        s = n - 1 - i
        acc_re = 0.0
        acc_im = 0.0
        for j in range(n):
            a = kr[s + j]
            b = ki[s + j]
            acc_re += a * pr[j] - b * pi[j]
            acc_im += a * pi[j] + b * pr[j]
        out[i] = complex(acc_re, acc_im)
    return out


def _toeplitz_apply_numpy(kern, psi):
    n = psi.shape[0]
    return np.convolve(kern, psi)[n - 1 : 2 * n - 1]


def toeplitz_apply(kern: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Return ``out[i] = sum_j kern[i - j + n - 1] * psi[j]``.

    ``kern`` holds the kernel on lags ``-(n-1) .. (n-1)`` (length ``2n - 1``).
    """
    kern = np.ascontiguousarray(kern, dtype=np.complex128)
    psi = np.ascontiguousarray(psi, dtype=np.complex128)
    if kern.shape[0] != 2 * psi.shape[0] - 1:
        raise ValueError("kernel must be sampled on 2n-1 lags")
    if USE_NUMBA:
        return _toeplitz_apply_numba(kern, psi)
    return _toeplitz_apply_numpy(kern, psi)


# ---------------------------------------------------------------------------
# Tapered composite Simpson rule for the short-time kernel integral
# ---------------------------------------------------------------------------


def simpson_nodes(band: float, n_quad: int, taper_frac: float):
    """Nodes and combined Simpson x cosine-taper weights on ``[-band, band]``."""
    if n_quad % 2:
        raise ValueError("n_quad must be even for Simpson's rule")
    k = np.linspace(-band, band, n_quad + 1)
    h = 2.0 * band / n_quad
    w = np.full(n_quad + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    w *= h / 3.0
    return k, w * cosine_taper(k, band, taper_frac)


def cosine_taper(k, band, taper_frac):
    k = np.asarray(k, dtype=float)
    if taper_frac <= 0.0:
        return np.ones_like(k)
    k_start = band * (1.0 - taper_frac)
    a = np.abs(k)
    t = np.clip((a - k_start) / (band - k_start), 0.0, 1.0)
    return 0.5 * (1.0 + np.cos(np.pi * t))


@njit(cache=True)
def _quartic_quadrature_numba(dx, dt, eps, k, w):
    m = dx.shape[0]
    out = np.empty(m, dtype=np.complex128)
    inv2pi = 1.0 / (2.0 * np.pi)
    for q in range(m):
        acc_re = 0.0
        acc_im = 0.0
        x = dx[q]
        t = dt[q]
        for j in range(k.shape[0]):
            kj = k[j]
            k2 = kj * kj
            ph = kj * x - (0.5 * k2 + 0.125 * eps * k2 * k2) * t
            acc_re += w[j] * np.cos(ph)
            acc_im += w[j] * np.sin(ph)
        out[q] = complex(acc_re * inv2pi, acc_im * inv2pi)
    return out


def _quartic_quadrature_numpy(dx, dt, eps, k, w):
    m = dx.shape[0]
    out = np.empty(m, dtype=np.complex128)
    k2 = k * k
    omega = 0.5 * k2 + 0.125 * eps * k2 * k2
    step = max(1, _CHUNK_ENTRIES // max(1, k.shape[0]))
    for s in range(0, m, step):
        x = dx[s : s + step, None]
        t = dt[s : s + step, None]
        ph = k[None, :] * x - omega[None, :] * t
        out[s : s + step] = (np.exp(1j * ph) @ w) / (2.0 * np.pi)
    return out


def quartic_quadrature(dx, dt, eps: float, k: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Weighted sum of ``exp(i(k dx - (k^2/2 + eps k^4/8) dt)) / 2pi`` per query."""
    dx = np.ascontiguousarray(np.atleast_1d(dx), dtype=np.float64)
    dt = np.ascontiguousarray(np.atleast_1d(dt), dtype=np.float64)
    dx, dt = np.broadcast_arrays(dx, dt)
    dx = np.ascontiguousarray(dx)
    dt = np.ascontiguousarray(dt)
    k = np.ascontiguousarray(k, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    if USE_NUMBA:
        return _quartic_quadrature_numba(dx, dt, float(eps), k, w)
    return _quartic_quadrature_numpy(dx, dt, float(eps), k, w)
