"""Jordan-Wigner mapping and fermionic excitation generators.

Convention: ``a+_p -> 1/2 (X_p - iY_p) Z_{p-1} ... Z_0``, i.e. the parity
string runs over all lower-indexed qubits. Qubit ``p`` is spin orbital ``p``
of the interleaved ordering used by :mod:`qdownfold.hamiltonian_io`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .hamiltonian_io import FermionHamiltonian, expand_to_spin_orbitals
from .paulis import PauliSum, PauliTerm, commutator, prune

__all__ = [
    "ladder",
    "fermion_monomial",
    "number_operator",
    "sz_operator",
    "jordan_wigner",
    "check_number_symmetry",
    "ExcitationGenerator",
    "jw_excitation_evolution",
]

DEFAULT_EPS = 1e-10


@lru_cache(maxsize=None)
def _ladder_terms(p: int, dagger: bool) -> tuple:
    below = (1 << p) - 1
    ysign = -0.5j if dagger else 0.5j
    return (((1 << p), below, 0.5), ((1 << p), below | (1 << p), ysign))


def ladder(p: int, dagger: bool, n_qubits: int) -> PauliSum:
    """JW image of ``a+_p`` (``dagger=True``) or ``a_p``."""
    if not 0 <= p < n_qubits:
        raise IndexError(f"mode {p} outside 0..{n_qubits - 1}")
    return PauliSum(n_qubits, {(x, z): c for x, z, c in _ladder_terms(p, dagger)})


def fermion_monomial(ops: Sequence[tuple[int, bool]], n_qubits: int, coeff: complex = 1.0) -> PauliSum:
    """JW image of ``coeff * prod(ops)``, operators applied right to left as written."""
    out = PauliSum.identity(n_qubits, coeff)
    for p, dagger in ops:
        out = out * ladder(p, dagger, n_qubits)
    return out


def number_operator(n_qubits: int, modes: Sequence[int] | None = None) -> PauliSum:
    modes = range(n_qubits) if modes is None else modes
    out = PauliSum(n_qubits)
    for p in modes:
        out = out + PauliSum(n_qubits, {(0, 0): 0.5, (0, 1 << p): -0.5})
    return out


def sz_operator(n_qubits: int) -> PauliSum:
    """Twice the spin projection, ``N_alpha - N_beta``, for interleaved ordering."""
    return number_operator(n_qubits, range(0, n_qubits, 2)) - number_operator(
        n_qubits, range(1, n_qubits, 2))


def jordan_wigner(H: FermionHamiltonian, eps: float = DEFAULT_EPS) -> PauliSum:
    """Map ``H`` to a Pauli sum; terms below ``eps`` are pruned.

    Spatial Hamiltonians are spin-expanded first. When the integrals are
    Hermitian the result carries real coefficients.
    """
    H = expand_to_spin_orbitals(H)
    n = H.n_qubits
    h1, h2 = H.h1, H.h2
    # E_pq = a+_p a_q as raw (x, z, coeff) triples
    E = {}
    for p in range(n):
        for q in range(n):
            E[p, q] = (fermion_monomial([(p, True), (q, False)], n)).terms

    acc: dict[tuple[int, int], complex] = {(0, 0): H.e_core}

    def add_scaled(terms, scale):
        for k, c in terms.items():
            acc[k] = acc.get(k, 0.0) + scale * c

    for p, q in zip(*np.nonzero(h1)):
        add_scaled(E[p, q], h1[p, q])

    # a+_p a+_r a_s a_q = E_pq E_rs - delta_qr E_ps
    from .paulis import _mul_keys

    idx = np.argwhere(h2 != 0)
    for p, q, r, s in idx:
        v = 0.5 * h2[p, q, r, s]
        for (x1, z1), c1 in E[p, q].items():
            for (x2, z2), c2 in E[r, s].items():
                x, z, ph = _mul_keys(x1, z1, x2, z2)
                acc[(x, z)] = acc.get((x, z), 0.0) + v * c1 * c2 * ph
        if q == r:
            add_scaled(E[p, s], -v)

    out = PauliSum(n, {k: c for k, c in acc.items() if c != 0})
    for coeff, ops in H.extra_terms:
        out = out + fermion_monomial(ops, n, coeff)
    out = prune(out, eps)
    if not H.extra_terms and out.is_hermitian():
        dw = out.discarded_weight
        out = out.real()
        out.discarded_weight = dw
    return out


def check_number_symmetry(S: PauliSum, n_qubits: int | None = None, eps: float = DEFAULT_EPS) -> bool:
    """True iff ``[S, N]`` vanishes after pruning at ``eps``."""
    n = S.n_qubits if n_qubits is None else n_qubits
    return len(prune(commutator(S, number_operator(n)), eps)) == 0


def check_sz_symmetry(S: PauliSum, eps: float = DEFAULT_EPS) -> bool:
    return len(prune(commutator(S, sz_operator(S.n_qubits)), eps)) == 0


@dataclass(frozen=True)
class ExcitationGenerator:
    """Anti-Hermitian generator ``A`` with ``exp(theta A)`` as the ansatz element.

    ``indices=(p, q)`` is ``a+_p a_q - a+_q a_p``; ``indices=(p, r, q, s)`` is
    ``a+_p a+_r a_q a_s - a+_s a+_q a_r a_p``. A qubit generator instead wraps
    one Hermitian Pauli string ``P`` and stands for ``A = iP``.
    """

    indices: tuple[int, ...] = ()
    pauli: PauliTerm | None = None

    def __post_init__(self):
        if self.pauli is None and len(self.indices) not in (2, 4):
            raise ValueError("fermionic generator needs 2 or 4 indices")
        if self.pauli is not None and self.indices:
            raise ValueError("give either indices or a Pauli string, not both")

    @property
    def kind(self) -> str:
        if self.pauli is not None:
            return "pauli"
        return "single" if len(self.indices) == 2 else "double"

    @property
    def realization(self) -> str:
        return "qubit" if self.pauli is not None else "fermionic"

    @property
    def label(self) -> str:
        if self.pauli is not None:
            return self.pauli.label
        return ("s" if len(self.indices) == 2 else "d") + ",".join(map(str, self.indices))

    def check_indices(self, n_qubits: int):
        if self.pauli is not None:
            return
        if len(set(self.indices)) != len(self.indices):
            raise IndexError(f"repeated spin-orbital index in {self.indices}")
        if any(i < 0 or i >= n_qubits for i in self.indices):
            raise IndexError(f"index out of range in {self.indices} for {n_qubits} modes")

    def to_pauli_sum(self, n_qubits: int) -> PauliSum:
        """JW image of ``A``; coefficients are purely imaginary."""
        if self.pauli is not None:
            return PauliSum.from_terms([self.pauli.with_coeff(1j)], n_qubits)
        self.check_indices(n_qubits)
        return _generator_sum(self.indices, n_qubits)

    def to_dict(self) -> dict:
        if self.pauli is not None:
            return {"kind": "pauli", "pauli": self.pauli.label}
        return {"kind": self.kind, "indices": list(self.indices)}

    @classmethod
    def from_dict(cls, data: dict) -> "ExcitationGenerator":
        if data["kind"] == "pauli":
            return cls(pauli=PauliTerm.from_label(data["pauli"]))
        return cls(indices=tuple(data["indices"]))


@lru_cache(maxsize=65536)
def _generator_sum(indices: tuple[int, ...], n_qubits: int) -> PauliSum:
    if len(indices) == 2:
        p, q = indices
        fwd = [(p, True), (q, False)]
        bwd = [(q, True), (p, False)]
    else:
        p, r, q, s = indices
        fwd = [(p, True), (r, True), (q, False), (s, False)]
        bwd = [(s, True), (q, True), (r, False), (p, False)]
    out = fermion_monomial(fwd, n_qubits) - fermion_monomial(bwd, n_qubits)
    return prune(out, 1e-14)


def jw_excitation_evolution(g: ExcitationGenerator, theta: float, n_qubits: int
                            ) -> list[tuple[PauliTerm, float]]:
    """Pauli rotations whose product equals ``exp(theta * A)`` exactly.

    Each entry ``(P, phi)`` stands for ``exp(-i phi/2 P)`` with ``P`` carrying
    a ``+1`` coefficient. The strings of one generator commute, so the order
    is immaterial; a single excitation yields 2 strings with ``|phi| = theta``
    and a double yields 8 with ``|phi| = theta/4``.
    """
    A = g.to_pauli_sum(n_qubits)
    rotations = []
    for term in sorted(A, key=lambda t: (t.x, t.z)):
        c = complex(term.coeff)
        # theta * c * P == -i (phi/2) P  with c = -i a  ->  phi = 2 theta a
        a = (1j * c).real
        rotations.append((term.with_coeff(1.0), 2.0 * theta * a))
    return rotations
