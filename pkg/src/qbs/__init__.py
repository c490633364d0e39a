"""Classical exact-amplitude simulator for a digital quantum Black-Scholes pricer.

The pipeline maps the log-price Black-Scholes PDE onto a Schrodinger-type
evolution, embeds its non-unitary part in a one-ancilla unitary dilation,
expands both generators in the Pauli-Z (Cartan) basis, truncates, compiles
to gates and post-selects the embedding ancilla to read prices.
"""

from qbs.grid import GridSpec, MomentumSpectrum, build_grid, grid_from_smax, momentum_eigenvalues
from qbs.payoff import ContractParams, PreparedState, compute_n_max, prepare_initial_state
from qbs.hamiltonian import (
    CartanExpansion,
    SpectralHamiltonian,
    embedded_eigenvalues,
    hermitian_eigenvalues,
    walsh_coefficients,
)
from qbs.truncation import TruncationPlan, build_truncation_plan, truncation_error_bound
from qbs.pricer import (
    PostSelectionResult,
    PriceCurve,
    analytic_put,
    l1_relative_error,
    price_circuit,
    price_exact,
)

__all__ = [
    "CartanExpansion",
    "ContractParams",
    "GridSpec",
    "MomentumSpectrum",
    "PostSelectionResult",
    "PreparedState",
    "PriceCurve",
    "SpectralHamiltonian",
    "TruncationPlan",
    "analytic_put",
    "build_grid",
    "build_truncation_plan",
    "compute_n_max",
    "embedded_eigenvalues",
    "grid_from_smax",
    "hermitian_eigenvalues",
    "l1_relative_error",
    "momentum_eigenvalues",
    "prepare_initial_state",
    "price_circuit",
    "price_exact",
    "truncation_error_bound",
    "walsh_coefficients",
]

__version__ = "0.1.0"
