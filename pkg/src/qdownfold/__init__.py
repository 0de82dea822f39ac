"""Downfolded-Hamiltonian ingestion, qubit mapping and adaptive ground-state solvers."""

from __future__ import annotations

from .errors import (
    ConfigError,
    DegenerateSubspace,
    DimensionError,
    ExternalityError,
    FitError,
    InconsistentIntegral,
    InsufficientShots,
    NonHermitianInput,
    NotAmplifiable,
    ParseError,
    RangeError,
    SolverError,
    SymmetryError,
)
from .fermion import ExcitationGenerator, check_number_symmetry, jordan_wigner, jw_excitation_evolution
from .hamiltonian_io import (
    FermionHamiltonian,
    expand_to_spin_orbitals,
    parse_fcidump,
    read_fcidump,
    validate_symmetries,
    write_fcidump,
)
from .paulis import PauliSum, PauliTerm, commutator, pauli_multiply, prune

__version__ = "0.1.0"
