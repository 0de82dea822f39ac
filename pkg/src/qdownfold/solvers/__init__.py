"""Ground-state solvers over mapped Hamiltonians."""

from __future__ import annotations

from .adapt import adapt_gradient, adapt_vqe, pool_gradients, qubit_adapt_vqe, reference_state, uccgsd_vqe
from .ansatz import ansatz_circuit, energy_and_gradient, prepare_state
from .exact import exact_ground_state, exact_spectrum, hf_occupation, sector_basis
from .gcim import GcimSubspace, gcim_expand, solve_gev
from .pools import POOL_KINDS, OperatorPool, build_pool
from .trace import IterationRecord, SolverConfig, SolverTrace

__all__ = [
    "adapt_gradient", "adapt_vqe", "pool_gradients", "qubit_adapt_vqe", "reference_state",
    "uccgsd_vqe", "ansatz_circuit", "energy_and_gradient", "prepare_state", "exact_ground_state", "exact_spectrum",
    "hf_occupation", "sector_basis", "GcimSubspace", "gcim_expand", "solve_gev", "POOL_KINDS",
    "OperatorPool", "build_pool", "IterationRecord", "SolverConfig", "SolverTrace",
]
