"""Exact diagonalization, optionally inside a particle-number / spin sector."""

from __future__ import annotations

from math import comb

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from ..errors import NonHermitianInput, SymmetryError
from ..fermion import check_number_symmetry, check_sz_symmetry
from ..paulis import PauliSum
from ..statevector import compile_operator

__all__ = ["sector_basis", "hf_occupation", "exact_ground_state", "exact_spectrum"]

DENSE_FULL_LIMIT = 10


def sector_basis(n_qubits: int, n_electrons: int, ms2: int | None = None) -> np.ndarray:
    """Sorted computational indices with ``n_electrons`` set bits.

    With ``ms2`` given, only indices with ``N_alpha - N_beta == ms2`` are kept,
    alpha modes being the even qubits.
    """
    idx = np.arange(1 << n_qubits, dtype=np.int64)
    keep = np.bitwise_count(idx) == n_electrons
    if ms2 is not None:
        even = sum(1 << q for q in range(0, n_qubits, 2))
        n_a = np.bitwise_count(idx & even).astype(np.int64)
        keep &= (2 * n_a - n_electrons) == ms2
    return idx[keep]


def hf_occupation(n_qubits: int, n_electrons: int, ms2: int = 0) -> list[int]:
    """Lowest alpha and beta spin orbitals in interleaved ordering."""
    if (n_electrons + ms2) % 2:
        raise ValueError(f"ms2={ms2} incompatible with {n_electrons} electrons")
    n_a, n_b = (n_electrons + ms2) // 2, (n_electrons - ms2) // 2
    if min(n_a, n_b) < 0 or max(n_a, n_b) > n_qubits // 2:
        raise ValueError(f"cannot place {n_electrons} electrons with ms2={ms2} in {n_qubits} modes")
    return sorted([2 * k for k in range(n_a)] + [2 * k + 1 for k in range(n_b)])


def _lowest_dense(M: np.ndarray) -> tuple[float, np.ndarray]:
    w, v = scipy.linalg.eigh(M, subset_by_index=[0, 0])
    return float(w[0]), v[:, 0]


def _embed(n_qubits: int, basis: np.ndarray, vec: np.ndarray) -> np.ndarray:
    out = np.zeros(1 << n_qubits, dtype=complex)
    out[basis] = vec
    return out


def exact_spectrum(S: PauliSum, sector: tuple[int, int | None] | None = None) -> np.ndarray:
    """All eigenvalues (ascending) in the requested sector, or the full space."""
    n = S.n_qubits
    if sector is None:
        basis = np.arange(1 << n, dtype=np.int64)
    else:
        _check_sector(S, sector)
        basis = sector_basis(n, *sector)
    return scipy.linalg.eigvalsh(compile_operator(S).matrix_block(basis))


def _check_sector(S: PauliSum, sector, check_symmetry: bool = True):
    if check_symmetry and not check_number_symmetry(S):
        raise SymmetryError("operator does not conserve particle number")
    n_e, ms2 = sector
    if check_symmetry and ms2 is not None and not check_sz_symmetry(S):
        raise SymmetryError("operator does not conserve the spin projection")
    if not 0 <= n_e <= S.n_qubits:
        raise ValueError(f"{n_e} electrons in {S.n_qubits} modes")


def exact_ground_state(S: PauliSum, sector: tuple[int, int | None] | None = None,
                       project: bool = False) -> tuple[float, np.ndarray]:
    """Lowest eigenpair of ``S``; the eigenvector is returned over all ``2**n`` amplitudes.

    ``sector = (n_electrons, ms2)`` restricts the search to that particle
    number (and spin projection unless ``ms2`` is None), which requires the
    operator to conserve them. With ``project=True`` the symmetry check is
    skipped and the lowest eigenpair of the sector block ``P S P`` is returned.
    That is how operators which only approximately conserve the sector, such
    as a Hamiltonian with measurement groups dropped, are compared with the
    full one. Without a sector the minimum runs over every
    number sector when ``S`` conserves particle number, densely over the full
    space up to 10 qubits, and through a sparse Lanczos solve beyond that.
    """
    if not S.is_hermitian():
        raise NonHermitianInput("exact diagonalization needs a Hermitian operator")
    n = S.n_qubits
    op = compile_operator(S)
    if sector is not None:
        _check_sector(S, sector, check_symmetry=not project)
        basis = sector_basis(n, *sector)
        if basis.size == 0:
            raise ValueError(f"sector {sector} is empty on {n} qubits")
        e, v = _lowest_dense(op.matrix_block(basis))
        return e, _embed(n, basis, v)
    if n <= DENSE_FULL_LIMIT:
        basis = np.arange(1 << n, dtype=np.int64)
        e, v = _lowest_dense(op.matrix_block(basis))
        return e, v.astype(complex)
    if check_number_symmetry(S):
        best = None
        for n_e in range(n + 1):
            basis = sector_basis(n, n_e)
            e, v = _lowest_dense(op.matrix_block(basis)) if basis.size <= comb(14, 7) else \
                _lowest_sparse(op, basis)
            if best is None or e < best[0]:
                best = (e, _embed(n, basis, v))
        return best
    dim = 1 << n
    lin = scipy.sparse.linalg.LinearOperator((dim, dim), matvec=op.matvec, dtype=complex)
    w, v = scipy.sparse.linalg.eigsh(lin, k=1, which="SA", tol=1e-12)
    return float(w[0]), v[:, 0]


def _lowest_sparse(op, basis):
    full = 1 << op.n_qubits

    def mv(x):
        y = np.zeros(full, dtype=complex)
        y[basis] = x
        return op.matvec(y)[basis]

    lin = scipy.sparse.linalg.LinearOperator((basis.size, basis.size), matvec=mv, dtype=complex)
    w, v = scipy.sparse.linalg.eigsh(lin, k=1, which="SA", tol=1e-12)
    return float(w[0]), v[:, 0]
