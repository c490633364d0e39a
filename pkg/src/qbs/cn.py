"""Crank-Nicolson baseline for the log-price Black-Scholes equation.

In time-to-maturity ``tau`` the put value solves
``C_tau = sigma^2/2 C_xx + (r - sigma^2/2) C_x - r C`` with
``C(x, 0) = max(K - e^x, 0)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import solve_banded

from qbs.grid import grid_from_smax
from qbs.payoff import ContractParams
from qbs.pricer import PriceCurve, l1_relative_error, price_exact

DEFAULT_FIXED_STEPS = 8


@dataclass(frozen=True)
class CnConfig:
    space_points: int
    time_steps: int
    domain: tuple[float, float]
    contract: ContractParams

    def __post_init__(self) -> None:
        if self.space_points < 3:
            raise ValueError("need at least 3 space points")
        if self.time_steps < 1:
            raise ValueError("need at least one time step")
        lo, hi = self.domain
        if not lo < hi:
            raise ValueError("domain must satisfy x_lo < x_hi")
        if self.contract.side != "put":
            raise ValueError("the reference solver handles puts only")


def _left_boundary(c: ContractParams, x_lo: float, tau: float) -> float:
    return c.strike * math.exp(-c.rate * tau) - math.exp(x_lo)


def cn_solve(config: CnConfig, keep_history: bool = False) -> PriceCurve:
    """theta = 1/2 stepping with Dirichlet ends; one banded solve per step.

    A singular step matrix surfaces as ``numpy.linalg.LinAlgError``.

    ``keep_history`` stores every time slice in ``metadata["history"]``.
    """
    c = config.contract
    lo, hi = config.domain
    x = np.linspace(lo, hi, config.space_points)
    dx = x[1] - x[0]
    dt = c.maturity / config.time_steps
    values = np.maximum(c.strike - np.exp(x), 0.0)

    a = c.sigma**2 / (2.0 * dx**2)
    b = (c.rate - c.sigma**2 / 2.0) / (2.0 * dx)
    lower, diag, upper = a - b, -2.0 * a - c.rate, a + b

    m = config.space_points - 2
    ab = np.zeros((3, m))
    ab[0, 1:] = -0.5 * dt * upper
    ab[1, :] = 1.0 - 0.5 * dt * diag
    ab[2, :-1] = -0.5 * dt * lower

    history = [values.copy()] if keep_history else None
    for step in range(config.time_steps):
        left_new = _left_boundary(c, lo, (step + 1) * dt)
        inner = values[1:-1]
        rhs = inner + 0.5 * dt * (lower * values[:-2] + diag * inner + upper * values[2:])
        rhs[0] += 0.5 * dt * lower * left_new
        values = values.copy()
        values[1:-1] = solve_banded((1, 1), ab, rhs)
        values[0], values[-1] = left_new, 0.0
        if history is not None:
            history.append(values.copy())

    meta = {"contract": c, "method": "crank-nicolson", "time_steps": config.time_steps}
    if history is not None:
        meta["history"] = np.array(history)
    return PriceCurve(np.exp(x), values, meta)


StepsRule = Callable[[int], int]


def fixed_steps(n: int = DEFAULT_FIXED_STEPS) -> StepsRule:
    return lambda points: n


def quadratic_steps(points: int) -> int:
    """Steps growing like ``points^2`` so time error tracks space error."""
    return max(1, points * points // 64)


@dataclass(frozen=True)
class SweepRow:
    points: int
    time_steps: int
    cn_error: float
    quantum_error: float | None


def convergence_sweep(
    contract: ContractParams,
    point_counts: Sequence[int],
    steps_rule: StepsRule | int = DEFAULT_FIXED_STEPS,
    s_max: float = 135.0,
    with_quantum: bool = True,
) -> list[SweepRow]:
    """CN and exact-propagation L1 errors on matched grids.

    CN runs on ``[-ln S_max, ln S_max]``, the same physical window the
    propagation path reads out.  Quantum errors need power-of-two counts.
    """
    rule = fixed_steps(steps_rule) if isinstance(steps_rule, int) else steps_rule
    lo, hi = -math.log(s_max), math.log(s_max)
    rows = []
    for pts in point_counts:
        steps = rule(pts)
        curve = cn_solve(CnConfig(pts, steps, (lo, hi), contract))
        q_err = None
        if with_quantum:
            # the physical half of a 2*pts lattice holds pts points
            n_q = (2 * pts).bit_length() - 1
            if 1 << n_q != 2 * pts:
                raise ValueError(f"{pts} points is not a power of two")
            q_err = l1_relative_error(price_exact(grid_from_smax(n_q, s_max), contract))
        rows.append(SweepRow(pts, steps, l1_relative_error(curve), q_err))
    return rows


def plateau_ratio(rows: Sequence[SweepRow], attr: str = "cn_error") -> float:
    """Error ratio between the last two rows; near 1 means stuck."""
    if len(rows) < 2:
        raise ValueError("need two rows")
    return getattr(rows[-1], attr) / getattr(rows[-2], attr)

