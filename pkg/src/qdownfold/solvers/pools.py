"""Operator pools for adaptive ansatz construction.

Spin orbitals are interleaved, so the spin of mode ``p`` is ``p % 2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from ..fermion import ExcitationGenerator
from ..paulis import PauliTerm
from .exact import hf_occupation

__all__ = ["OperatorPool", "build_pool", "POOL_KINDS"]

POOL_KINDS = ("fermionic-SD", "fermionic-GSD", "qubit-minimal")


@dataclass(frozen=True)
class OperatorPool:
    kind: str
    n_qubits: int
    elements: tuple[ExcitationGenerator, ...]
    provenance: str = ""

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __getitem__(self, i) -> ExcitationGenerator:
        return self.elements[i]

    def labels(self) -> list[str]:
        return [g.label for g in self.elements]


def _spin(p: int) -> int:
    return p % 2


def _sd(n: int, n_electrons: int, ms2: int) -> list[ExcitationGenerator]:
    occ = hf_occupation(n, n_electrons, ms2)
    vir = [p for p in range(n) if p not in occ]
    out = []
    for i in occ:
        for a in vir:
            if _spin(a) == _spin(i):
                out.append(ExcitationGenerator((a, i)))
    for i, j in combinations(occ, 2):
        for a, b in combinations(vir, 2):
            if sorted((_spin(a), _spin(b))) == sorted((_spin(i), _spin(j))):
                # a+_a a+_b a_j a_i
                out.append(ExcitationGenerator((a, b, j, i)))
    return out


def _gsd(n: int) -> list[ExcitationGenerator]:
    out = []
    for q, p in combinations(range(n), 2):
        if _spin(p) == _spin(q):
            out.append(ExcitationGenerator((p, q)))
    pairs = list(combinations(range(n), 2))
    for (i, j), (a, b) in combinations(pairs, 2):
        if len({a, b, i, j}) < 4:
            continue
        if sorted((_spin(a), _spin(b))) != sorted((_spin(i), _spin(j))):
            continue
        # created pair (a, b) is the lexicographically larger one
        out.append(ExcitationGenerator((a, b, j, i)))
    return out


def _strip_z(t: PauliTerm) -> PauliTerm:
    return PauliTerm(t.x, t.z & t.x, t.n_qubits, 1.0)


def _qubit_minimal(n: int) -> list[ExcitationGenerator]:
    seen: set[tuple[int, int]] = set()
    out = []
    for g in _gsd(n):
        for term in sorted(g.to_pauli_sum(n), key=lambda t: (t.x, t.z)):
            s = _strip_z(term)
            if s.n_y % 2 == 1 and s.key not in seen:
                seen.add(s.key)
                out.append(ExcitationGenerator(pauli=s))
    return out


def build_pool(kind: str, n_qubits: int, n_electrons: int, ms2: int = 0) -> OperatorPool:
    """Deterministically enumerated pool.

    ``fermionic-SD``: occupied-to-virtual singles and doubles relative to the
    Hartree-Fock occupation. ``fermionic-GSD``: every spin-conserving single
    ``p > q`` and every spin-conserving double over four distinct modes, one
    generator per unordered pair of pairs. ``qubit-minimal``: the distinct
    strings of the GSD generators' images with Z letters removed and an odd
    number of Y letters.
    """
    if kind == "fermionic-SD":
        elems = _sd(n_qubits, n_electrons, ms2)
        prov = "singles (a,i), doubles (a,b,j,i) with i<j, a<b over HF occupied/virtual"
    elif kind == "fermionic-GSD":
        elems = _gsd(n_qubits)
        prov = "singles (p,q) p>q; doubles (a,b,j,i) with (i,j) < (a,b) lexicographically"
    elif kind == "qubit-minimal":
        elems = _qubit_minimal(n_qubits)
        prov = "Z-stripped odd-Y strings of the fermionic-GSD images, first occurrence order"
    else:
        raise ValueError(f"unknown pool kind {kind!r}; expected one of {POOL_KINDS}")
    return OperatorPool(kind, n_qubits, tuple(elems), prov)
