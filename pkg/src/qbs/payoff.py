"""Contract parameters and the mirror-duplicated payoff state."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

from qbs.grid import GridSpec

Side = Literal["put", "call"]


@dataclass(frozen=True)
class ContractParams:
    """European option under constant-coefficient Black-Scholes.

    ``rate`` must be non-negative: the decaying factor ``exp(-T (sigma^2 p^2/2 + r))``
    has to stay a contraction for the dilation to exist.
    """

    side: Side = "put"
    strike: float = 50.0
    rate: float = 0.3
    sigma: float = 0.2
    maturity: float = 1.0

    def __post_init__(self) -> None:
        if self.side not in ("put", "call"):
            raise ValueError(f"side must be 'put' or 'call', got {self.side!r}")
        for name in ("strike", "rate", "sigma", "maturity"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.strike <= 0:
            raise ValueError("strike must be positive")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.maturity < 0:
            raise ValueError("maturity must be non-negative")
        if self.rate < 0:
            raise ValueError("rate must be non-negative (dilation needs a contraction)")

    def with_(self, **changes) -> "ContractParams":
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class PreparedState:
    """Normalized duplicated payoff vector plus the constants needed for readout."""

    amplitudes: np.ndarray
    lam: float  # squared norm of the unnormalized duplicated payoff
    n_max: int  # largest in-the-money index of the first half (put); first ITM index (call)


def compute_n_max(grid: GridSpec, strike: float) -> int:
    """Largest index ``j`` of the first half with ``strike - S_j >= 0``."""
    half_width = grid.x_max / 2.0
    log_k = math.log(strike)
    if not -half_width <= log_k < half_width:
        raise ValueError(
            f"strike {strike} lies outside the physical window "
            f"({math.exp(-half_width):.6g}, {math.exp(half_width):.6g})"
        )
    n = grid.n_points
    n_max = math.floor((n - 1) * (log_k / (2.0 * grid.x_max) + 0.25))
    # floor() of an exact boundary value can land one ulp low or high
    dx = grid.delta_x
    while n_max + 1 <= (n - 1) // 2 and strike - math.exp(-half_width + (n_max + 1) * dx) >= 0:
        n_max += 1
    while n_max > 0 and strike - math.exp(-half_width + n_max * dx) < 0:
        n_max -= 1
    return n_max


def physical_log_prices(grid: GridSpec) -> np.ndarray:
    """Log-prices ``x_j + x_max/2`` for the first half of the lattice."""
    return grid.positions[: grid.n_points // 2] + grid.x_max / 2.0


def raw_payoff(grid: GridSpec, contract: ContractParams) -> np.ndarray:
    """Unnormalized duplicated payoff, length ``N_x``."""
    n = grid.n_points
    half = n // 2
    s = np.exp(physical_log_prices(grid))
    if contract.side == "put":
        compute_n_max(grid, contract.strike)
        first = np.maximum(contract.strike - s, 0.0)
    else:
        first = np.maximum(s - contract.strike, 0.0)
    out = np.zeros(n)
    out[:half] = first
    out[half:] = first[::-1]
    return out


def prepare_initial_state(grid: GridSpec, contract: ContractParams) -> PreparedState:
    """Normalized ``|phi_0>`` with ``amp[j] = amp[N-1-j]``.

    Put: ``(K - exp(-x_max/2 + j dx)) / sqrt(Lambda)`` for ``j <= N_max``.
    Call: the reflected ``exp(-x_max/2 + j dx) - K`` on the upper part of the
    first half, mirrored the same way.
    """
    f = raw_payoff(grid, contract)
    lam = float(np.dot(f, f))
    if lam == 0.0:
        raise ValueError("payoff vanishes on every grid point; move the strike inside the window")
    if contract.side == "put":
        n_max = compute_n_max(grid, contract.strike)
    else:
        nz = np.flatnonzero(f[: grid.n_points // 2])
        n_max = int(nz[0])
    amps = (f / math.sqrt(lam)).astype(complex)
    amps.setflags(write=False)
    return PreparedState(amplitudes=amps, lam=lam, n_max=n_max)


def log_concavity_check(
    state: PreparedState, grid: GridSpec, strike: float, tol: float = 1e-12
) -> bool:
    """Discrete log-concavity of the first-half support (the mirror seam excluded).

    Only strictly positive entries of the first half enter; a support of fewer
    than three points is vacuously log-concave.
    """
    first = np.real(np.asarray(state.amplitudes))[: grid.n_points // 2]
    support = np.flatnonzero(first > 0)
    if support.size < 3:
        return True
    # the support must be contiguous for second differences to mean anything
    if support[-1] - support[0] + 1 != support.size:
        return False
    logs = np.log(first[support])
    second = logs[2:] - 2.0 * logs[1:-1] + logs[:-2]
    return bool(np.all(second <= tol))
