"""Natural units, the periodic position grid and its conjugate momentum grid.

Everything in the package works in natural units hbar = c = m_e = 1:
energies in units of the electron rest energy, lengths in reduced Compton
wavelengths, times in Compton times (lambda_C / c = 1).  The elementary
charge is 1, so the electron carries charge q = -1.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

# charge of the electron in natural units (q = -e, e = 1)
ELECTRON_CHARGE = -1.0


@dataclass(frozen=True)
class Grid:
    """Periodic spatial lattice and its discrete-Fourier momentum lattice.

    Attributes
    ----------
    L : float
        Box length.
    N : int
        Number of lattice points (power of two).
    x : ndarray
        Positions x_j = -L/2 + j*dx, j = 0..N-1.
    p : ndarray
        Momenta in standard DFT ordering: (2*pi/L) * [0, 1, .., N/2-1, -N/2, .., -1].
    """

    L: float
    N: int
    x: np.ndarray = field(repr=False)
    p: np.ndarray = field(repr=False)

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def dp(self) -> float:
        return 2.0 * np.pi / self.L

    def inner(self, a: np.ndarray, b: np.ndarray) -> complex:
        """Grid inner product <a|b> = dx * sum_j conj(a_j) b_j.

        Works on single spinors (2, N) as well as plain scalar fields (N,);
        summation runs over every axis.
        """
        return complex(np.sum(np.conj(a) * b) * self.dx)

    def norm(self, a: np.ndarray) -> float:
        """sqrt(<a|a>) under the grid inner product."""
        return float(np.sqrt(np.sum(np.abs(a) ** 2).real * self.dx))


def make_grid(L: float, N: int) -> Grid:
    """Build the periodic grid for a box of length L with N points.

    N must be a power of two (>= 8) so the FFT-based kinetic step is exact
    and fast; L must be positive.  The momentum lattice has spacing
    dp = 2*pi/L and satisfies dx * dp * N = 2*pi exactly.
    """
    if L <= 0:
        raise ConfigError(f"box length must be positive, got L={L}")
    if N < 4 or (N & (N - 1)) != 0:
        raise ConfigError(f"grid size must be a power of two >= 4, got N={N}")
    dx = L / N
    x = -L / 2.0 + dx * np.arange(N)
    p = 2.0 * np.pi * np.fft.fftfreq(N, d=dx)
    return Grid(L=float(L), N=int(N), x=x, p=p)


def free_energy(p) -> np.ndarray:
    """Relativistic free dispersion E(p) = sqrt(1 + p^2), the positive branch.

    Negative-branch energies are -free_energy(p); callers negate.
    """
    return np.sqrt(1.0 + np.asarray(p, dtype=float) ** 2)
