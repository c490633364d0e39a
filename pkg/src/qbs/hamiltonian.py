"""Momentum-basis Hamiltonians and their Pauli-Z (Cartan) expansions.

Cartan words are bitmasks: bit ``j`` of the word ``I`` set means ``Z`` acts on
register qubit ``j``.  Qubit 0 carries the most significant bit of the
momentum index ``k``, so the Walsh kernel is

    W_I(k) = (-1) ** popcount(I_bits_j & k_bit_(n-1-j))

which equals the natural-order Hadamard kernel at the bit-reversed word.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from scipy import integrate

from qbs.grid import GridSpec, momentum_eigenvalues
from qbs.payoff import ContractParams

Kind = Literal["hermitian", "embedded"]


@dataclass(frozen=True, eq=False)
class SpectralHamiltonian:
    kind: Kind
    h: np.ndarray  # eigenvalue on |p_k>
    grid: GridSpec
    contract: ContractParams


@dataclass(frozen=True, eq=False)
class CartanExpansion:
    kind: Kind
    coeffs: np.ndarray  # coeffs[I] multiplies the Z-word with bitmask I
    n_qubits: int

    def reconstruct(self) -> np.ndarray:
        return inverse_walsh(self.coeffs)


def hermitian_eigenvalues(grid: GridSpec, contract: ContractParams) -> SpectralHamiltonian:
    """``h_k = -(sigma^2/2 - r) p_k``: the drift generator."""
    p = momentum_eigenvalues(grid).p
    h = -(contract.sigma**2 / 2.0 - contract.rate) * p
    return SpectralHamiltonian("hermitian", h, grid, contract)


def decay_exponent(grid: GridSpec, contract: ContractParams) -> np.ndarray:
    """``T (sigma^2/2 p_k^2 + r)`` -- the non-negative log-decay of each mode."""
    p = momentum_eigenvalues(grid).p
    return contract.maturity * (contract.sigma**2 / 2.0 * p**2 + contract.rate)


def embedded_eigenvalues(grid: GridSpec, contract: ContractParams) -> SpectralHamiltonian:
    """``h_k = arccos(exp(-T (sigma^2/2 p_k^2 + r)))``, all in ``[0, pi/2]``."""
    if contract.rate < 0 or contract.maturity < 0:
        raise ValueError("embedding requires rate >= 0 and maturity >= 0")
    h = np.arccos(np.exp(-decay_exponent(grid, contract)))
    return SpectralHamiltonian("embedded", h, grid, contract)


def _fwht(values: np.ndarray) -> np.ndarray:
    """Unnormalized natural-order Walsh-Hadamard transform along axis 0."""
    a = np.array(values, dtype=float, copy=True)
    n = a.shape[0]
    if n & (n - 1):
        raise ValueError("length must be a power of two")
    h = 1
    while h < n:
        a = a.reshape(n // (2 * h), 2, h, *a.shape[1:])
        top = a[:, 0] + a[:, 1]
        bottom = a[:, 0] - a[:, 1]
        a = np.stack((top, bottom), axis=1).reshape(n, *a.shape[3:])
        h *= 2
    return a


def bit_reverse_permutation(n_qubits: int) -> np.ndarray:
    idx = np.arange(1 << n_qubits)
    rev = np.zeros_like(idx)
    for j in range(n_qubits):
        rev |= ((idx >> j) & 1) << (n_qubits - 1 - j)
    return rev


def walsh_transform(h: np.ndarray) -> np.ndarray:
    """``coeffs[I] = (1/N) sum_k h_k W_I(k/N)``."""
    h = np.asarray(h, dtype=float)
    n = h.shape[0]
    n_qubits = n.bit_length() - 1
    return _fwht(h)[bit_reverse_permutation(n_qubits)] / n


def inverse_walsh(coeffs: np.ndarray) -> np.ndarray:
    """``h_k = sum_I coeffs[I] W_I(k/N)``."""
    coeffs = np.asarray(coeffs, dtype=float)
    n_qubits = coeffs.shape[0].bit_length() - 1
    natural = np.empty_like(coeffs)
    natural[bit_reverse_permutation(n_qubits)] = coeffs
    return _fwht(natural)


def walsh_coefficients(ham: SpectralHamiltonian) -> CartanExpansion:
    return CartanExpansion(ham.kind, walsh_transform(ham.h), ham.grid.n_qubits)


def word_qubits(word: int) -> list[int]:
    out = []
    j = 0
    while word >> j:
        if (word >> j) & 1:
            out.append(j)
        j += 1
    return out


def hermitian_scale(grid: GridSpec, contract: ContractParams) -> float:
    """``(2^n - 1)/2^(n+1) * (2r - sigma^2)/x_max`` -- common factor of all drift terms."""
    n = grid.n_points
    return (n - 1) / (2.0 * n) * (2.0 * contract.rate - contract.sigma**2) / grid.x_max


def closed_form_hermitian_coefficient(word: int, grid: GridSpec, contract: ContractParams) -> float:
    """Analytic Cartan coefficient of the drift Hamiltonian for a Z-word.

    With ``0 = j_0 < j_1 < ... `` the word's qubits and ``m`` the number of
    qubits besides 0:

    * ``m`` even (odd-body word, ``m = 2k``):
      ``(-1)^k * scale * cot(pi/2^n) * prod tan(pi/2^(j_l+1))``
    * ``m`` odd (even-body word, ``m = 2k-1``): the same without the cotangent.

    Words that miss qubit 0 vanish by antisymmetry of the spectrum.
    """
    qubits = word_qubits(word)
    if not qubits or qubits[0] != 0:
        return 0.0
    if qubits[-1] >= grid.n_qubits:
        raise ValueError(f"word {word:#b} addresses a qubit beyond n_qubits={grid.n_qubits}")
    rest = qubits[1:]
    m = len(rest)
    tans = math.prod(math.tan(math.pi / 2 ** (j + 1)) for j in rest)
    scale = hermitian_scale(grid, contract)
    if m % 2 == 0:
        k = m // 2
        return (-1) ** k * scale * tans / math.tan(math.pi / grid.n_points)
    k = (m + 1) // 2
    return (-1) ** k * scale * tans


@dataclass(frozen=True)
class EmbeddedAsymptotics:
    identity_term: float
    z1z2_term: float | None  # needs n_qubits >= 8


def embedded_asymptotic_coefficients(grid: GridSpec, contract: ContractParams) -> EmbeddedAsymptotics:
    """Large-register approximations of the two largest embedded coefficients.

    The identity term is ``pi/2`` minus an exponential sum over half the
    spectrum; the ``Z_1 Z_2`` term combines a boundary correction with two
    quadratures of the arccos-decay profile.  Quadrature runs at 1e-8
    relative tolerance.
    """
    n_q = grid.n_qubits
    if n_q < 7:
        raise ValueError(f"asymptotic forms need n_qubits >= 7 (got {n_q}); the identity approximation degrades below")
    n = grid.n_points
    sig2, r, t = contract.sigma**2, contract.rate, contract.maturity
    k = np.arange(0, n // 2 + 1)
    decay = np.exp(-t * (sig2 / 2.0 * np.sin(2 * np.pi * k / n) ** 2 / grid.delta_x**2 + r))
    identity = math.pi / 2.0 - decay.sum() / n

    if n_q < 8:
        return EmbeddedAsymptotics(identity, None)

    inv_dx = (n - 1) / (2.0 * grid.x_max)

    def profile(x: float) -> float:
        return math.acos(math.exp(-t * (sig2 / 2.0 * inv_dx**2 * math.sin(2 * math.pi * x) ** 2 + r)))

    # the integrand has a sharp shoulder of width ~1/(2^n) near x=0; point it out
    knee = min(1.0 / 64.0, 4.0 / n)
    opts = dict(epsrel=1e-8, epsabs=0.0, limit=400)
    lower = integrate.quad(profile, 0.0, 0.125, points=[knee], **opts)[0]
    upper = integrate.quad(profile, 0.125, 0.25, **opts)[0]
    z1z2 = (2.0 * math.acos(math.exp(-t * r)) - math.pi) / n + 4.0 * lower - 4.0 * upper
    return EmbeddedAsymptotics(identity, z1z2)


def average_variance(vol_samples: Sequence[tuple[float, float]], maturity: float) -> float:
    """Time average of ``sigma(t)^2`` over ``[0, T]`` by the trapezoid rule.

    Samples are ``(time, sigma)`` pairs in non-decreasing time order that must
    cover ``[0, T]``; a repeated time encodes a jump.  The average replaces
    ``sigma^2`` in both eigenvalue builders.
    """
    if maturity <= 0:
        raise ValueError("maturity must be positive")
    arr = np.asarray(vol_samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
        raise ValueError("need at least two (time, sigma) samples")
    t, sig = arr[:, 0], arr[:, 1]
    if np.any(np.diff(t) < 0):
        raise ValueError("sample times must be non-decreasing")
    if t[0] > 0.0 or t[-1] < maturity:
        raise ValueError(f"samples span [{t[0]}, {t[-1]}], which does not cover [0, {maturity}]")
    var = sig**2
    total = 0.0
    for t0, t1, v0, v1 in zip(t[:-1], t[1:], var[:-1], var[1:]):
        a, b = max(t0, 0.0), min(t1, maturity)
        if b <= a:
            continue
        slope = (v1 - v0) / (t1 - t0)
        va, vb = v0 + slope * (a - t0), v0 + slope * (b - t0)
        total += 0.5 * (va + vb) * (b - a)
    return float(total / maturity)
