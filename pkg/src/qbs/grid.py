"""Position/momentum lattices for the log-price coordinate.

Conventions shared by every module:

* ``x_i = -x_max + i * delta_x`` with ``delta_x = 2 x_max / (N_x - 1)``, so both
  interval ends are grid points.
* The Fourier matrix is ``F[k, j] = exp(2j*pi*j*k/N) / sqrt(N)``, i.e. the
  textbook QFT map ``|j> -> sum_k w^{jk} |k> / sqrt(N)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Equispaced lattice of ``2**n_qubits`` points on ``[-x_max, x_max]``."""

    n_qubits: int
    x_max: float
    positions: np.ndarray = field(repr=False)

    @property
    def n_points(self) -> int:
        return 1 << self.n_qubits

    @property
    def delta_x(self) -> float:
        return 2.0 * self.x_max / (self.n_points - 1)

    @property
    def s_max(self) -> float:
        """Largest stock price of the physical (post-duplication) window."""
        return math.exp(self.x_max / 2.0)

    def same_as(self, other: "GridSpec") -> bool:
        return self.n_qubits == other.n_qubits and self.x_max == other.x_max


@dataclass(frozen=True, eq=False)
class MomentumSpectrum:
    """Eigenvalues of the central-difference momentum operator, by Fourier index."""

    p: np.ndarray
    delta_x: float


def build_grid(n_qubits: int, x_max: float) -> GridSpec:
    if int(n_qubits) != n_qubits or n_qubits < 2:
        raise ValueError(f"n_qubits must be an integer >= 2, got {n_qubits!r}")
    if not math.isfinite(x_max) or x_max <= 0:
        raise ValueError(f"x_max must be finite and positive, got {x_max!r}")
    n_qubits = int(n_qubits)
    n = 1 << n_qubits
    dx = 2.0 * x_max / (n - 1)
    pos = -x_max + dx * np.arange(n)
    # pin the right end exactly; the product above can be off by an ulp
    pos[-1] = x_max
    pos.setflags(write=False)
    return GridSpec(n_qubits=n_qubits, x_max=float(x_max), positions=pos)


def grid_from_smax(n_qubits: int, s_max: float) -> GridSpec:
    """Grid whose physical half-window maps onto ``S in (1/s_max, s_max)``."""
    if not s_max > 1.0:
        raise ValueError(f"s_max must exceed 1, got {s_max!r}")
    return build_grid(n_qubits, 2.0 * math.log(s_max))


def momentum_eigenvalues(grid: GridSpec) -> MomentumSpectrum:
    n = grid.n_points
    k = np.arange(n)
    p = np.sin(2.0 * np.pi * k / n) / grid.delta_x
    # exact zeros/antisymmetry where sin() is only approximately symmetric
    p[0] = 0.0
    p[n // 2] = 0.0
    p[n // 2 + 1 :] = -p[1 : n // 2][::-1]
    p.setflags(write=False)
    return MomentumSpectrum(p=p, delta_x=grid.delta_x)


def momentum_matrix_fd(grid: GridSpec) -> np.ndarray:
    """Dense periodic central-difference momentum matrix ``-i d/dx``."""
    n = grid.n_points
    shift = np.roll(np.eye(n), 1, axis=1)  # shift[j, j+1] = 1 with wraparound
    return (-1j / (2.0 * grid.delta_x)) * (shift - shift.T)


def dft_matrix(n: int) -> np.ndarray:
    k = np.arange(n)
    return np.exp(2j * np.pi * np.outer(k, k) / n) / math.sqrt(n)


def to_momentum(amplitudes: np.ndarray) -> np.ndarray:
    """Apply ``F`` (the QFT) to a position-basis vector."""
    n = amplitudes.shape[0]
    return np.fft.ifft(amplitudes, axis=0) * math.sqrt(n)


def to_position(amplitudes: np.ndarray) -> np.ndarray:
    """Apply ``F^dagger`` (the inverse QFT) to a momentum-basis vector."""
    n = amplitudes.shape[0]
    return np.fft.fft(amplitudes, axis=0) / math.sqrt(n)


@dataclass(frozen=True)
class NyquistReport:
    position_tail_mass: float
    momentum_tail_mass: float
    band_points: int
    valid: bool


def nyquist_report(
    amplitudes: np.ndarray,
    grid: GridSpec,
    epsilon: float,
    band_fraction: float = 1.0 / 16.0,
    periodic_center: bool = False,
) -> NyquistReport:
    """Squared-amplitude mass in the outer bands of position and momentum space.

    The position band is the ``band_fraction`` outermost lattice points (half on
    each side).  The momentum band is the same number of highest-|p| modes,
    which sit around ``k = N/2`` in Fourier ordering.  ``periodic_center``
    rolls the position vector by ``N/2`` first; use it for mirror-duplicated
    states whose bulk straddles the periodic seam.

    The lattice-spacing criterion ``delta_x <= pi / L`` is not enforced; a
    state is judged only by its measured tails.
    """
    amps = np.asarray(amplitudes, dtype=complex)
    n = grid.n_points
    if amps.shape != (n,):
        raise ValueError(f"expected {n} amplitudes, got shape {amps.shape}")
    if not 0.0 < band_fraction < 1.0:
        raise ValueError("band_fraction must lie in (0, 1)")
    band = max(2, int(round(n * band_fraction)))
    band -= band % 2
    half = band // 2

    prob = np.abs(amps) ** 2
    total = prob.sum()
    if total == 0.0:
        raise ValueError("zero state")
    prob = prob / total
    if periodic_center:
        prob = np.roll(prob, n // 2)
    pos_tail = float(prob[:half].sum() + prob[n - half :].sum())

    mom = np.abs(to_momentum(amps)) ** 2
    mom = np.fft.fftshift(mom / mom.sum())
    mom_tail = float(mom[:half].sum() + mom[n - half :].sum())

    return NyquistReport(
        position_tail_mass=pos_tail,
        momentum_tail_mass=mom_tail,
        band_points=band,
        valid=bool(pos_tail < epsilon and mom_tail < epsilon),
    )
