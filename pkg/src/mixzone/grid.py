"""Uniform periodic grids and grid functions.

Everything downstream (kernel quadrature, Fourier multipliers, the time
stepper) works on real samples of a periodic function on ``[-L/2, L/2)``
with a power-of-two number of points, so the FFT conventions live here.
Frequencies are measured in cycles per unit length, matching the
``exp(2*pi*i*x*xi)`` transform convention used by the symbol machinery.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridFunction1D:
    """Real samples ``f_j = f(x_j)`` on ``x_j = -L/2 + j*h``, ``h = L/N``.

    Parameters
    ----------
    values : ndarray
        Real samples, length N with N a power of two, N >= 64.
    length : float
        Period L > 0.
    """

    values: np.ndarray
    length: float

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1:
            raise ValueError("grid values must be one-dimensional")
        if not _is_power_of_two(vals.size) or vals.size < 64:
            raise ValueError(f"grid size must be a power of two >= 64, got {vals.size}")
        if not self.length > 0:
            raise ValueError("domain length must be positive")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid values must be finite")

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def h(self) -> float:
        return self.length / self.n

    @property
    def x(self) -> np.ndarray:
        return -0.5 * self.length + self.h * np.arange(self.n)

    def freqs(self) -> np.ndarray:
        """Mode frequencies ``xi_k = k / L`` in FFT layout (cycles / length)."""
        return np.fft.fftfreq(self.n, d=self.h)

    @classmethod
    def from_callable(cls, fn, n: int, length: float) -> "GridFunction1D":
        x = -0.5 * length + (length / n) * np.arange(n)
        return cls(np.asarray(fn(x), dtype=float), length)

    @classmethod
    def zeros(cls, n: int, length: float) -> "GridFunction1D":
        return cls(np.zeros(n), length)

    def with_values(self, values: np.ndarray) -> "GridFunction1D":
        return GridFunction1D(values, self.length)

    def derivative(self, order: int = 1) -> "GridFunction1D":
        """Spectral derivative; the Nyquist mode is dropped for odd orders."""
        return self.with_values(spectral_derivative(self.values, self.length, order))

    def l2_norm(self) -> float:
        """Grid approximation of the continuum L2 norm, ``sqrt(h * sum f^2)``."""
        return float(np.sqrt(self.h * np.sum(self.values**2)))

    def mean(self) -> float:
        return float(self.values.mean())


def spectral_derivative(values: np.ndarray, length: float, order: int = 1) -> np.ndarray:
    """d^order/dx^order of periodic samples via the FFT."""
    values = np.asarray(values, dtype=float)
    n = values.size
    k = np.fft.rfftfreq(n, d=length / n)
    coeffs = np.fft.rfft(values) * (2j * np.pi * k) ** order
    if order % 2 == 1 and n % 2 == 0:
        coeffs[-1] = 0.0
    return np.fft.irfft(coeffs, n=n)
