"""Dense Fock-space similarity transforms for small model systems.

The Fock space of ``n`` spin orbitals is indexed by occupation bitstrings,
bit ``p`` holding mode ``p``. Ladder operators follow the ascending-parity
sign convention: ``a_p`` acting on a determinant picks up ``(-1)`` per
occupied mode below ``p``. Everything here is built directly from bit
manipulation so that it can serve as an independent check on the qubit
pipeline.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from math import factorial
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .errors import ExternalityError

__all__ = [
    "MAX_MODES",
    "DenseOperator",
    "ActiveSpaceDef",
    "ToyHamiltonian",
    "annihilators",
    "number_matrix",
    "build_sigma",
    "bch_transform",
    "project_active",
    "fock_matrix",
    "fock_normal_parts",
    "random_toy_hamiltonian",
]

MAX_MODES = 8


@lru_cache(maxsize=MAX_MODES + 1)
def annihilators(n: int) -> tuple[np.ndarray, ...]:
    """Dense ``a_p`` matrices, ``p = 0..n-1``, on the ``2**n`` Fock space."""
    if not 1 <= n <= MAX_MODES:
        raise ValueError(f"toy Fock space limited to 1..{MAX_MODES} modes, got {n}")
    dim = 1 << n
    out = []
    for p in range(n):
        A = np.zeros((dim, dim))
        for det in range(dim):
            if det >> p & 1:
                sign = -1.0 if bin(det & ((1 << p) - 1)).count("1") % 2 else 1.0
                A[det ^ (1 << p), det] = sign
        A.flags.writeable = False
        out.append(A)
    return tuple(out)


def number_matrix(n: int, modes: Iterable[int] | None = None) -> np.ndarray:
    a = annihilators(n)
    modes = range(n) if modes is None else modes
    return sum((a[p].T @ a[p] for p in modes), np.zeros((1 << n, 1 << n)))


@dataclass(frozen=True)
class DenseOperator:
    """Matrix over the determinants listed in ``basis`` (Fock indices, ascending)."""

    matrix: np.ndarray
    n_modes: int
    basis: tuple[int, ...] | None = None

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def basis_indices(self) -> np.ndarray:
        if self.basis is None:
            return np.arange(1 << self.n_modes)
        return np.array(self.basis, dtype=np.int64)

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return bool(np.abs(self.matrix - self.matrix.conj().T).max(initial=0.0) <= tol)

    def is_antihermitian(self, tol: float = 1e-10) -> bool:
        return bool(np.abs(self.matrix + self.matrix.conj().T).max(initial=0.0) <= tol)

    def eigvalsh(self) -> np.ndarray:
        return scipy.linalg.eigvalsh(self.matrix)

    def to_dict(self) -> dict:
        M = np.asarray(self.matrix, dtype=complex)
        return {"n_modes": self.n_modes, "basis": None if self.basis is None else list(self.basis),
                "re": M.real.tolist(), "im": M.imag.tolist()}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, data: dict) -> "DenseOperator":
        M = np.array(data["re"]) + 1j * np.array(data["im"])
        if not np.any(M.imag):
            M = M.real
        basis = None if data.get("basis") is None else tuple(data["basis"])
        return cls(M, int(data["n_modes"]), basis)

    @classmethod
    def from_json(cls, text: str) -> "DenseOperator":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class ActiveSpaceDef:
    """Active spin orbitals and the reference determinant's occupied modes."""

    n_modes: int
    active: tuple[int, ...]
    reference: tuple[int, ...]

    def __post_init__(self):
        for name, idx in (("active", self.active), ("reference", self.reference)):
            if any(not 0 <= p < self.n_modes for p in idx) or len(set(idx)) != len(idx):
                raise ValueError(f"invalid {name} modes {idx} for {self.n_modes} modes")

    @property
    def inactive(self) -> tuple[int, ...]:
        return tuple(p for p in range(self.n_modes) if p not in self.active)

    @property
    def reference_index(self) -> int:
        return sum(1 << p for p in self.reference)

    def is_external(self, modes: Iterable[int]) -> bool:
        return any(p not in self.active for p in modes)

    def projector_basis(self, sector: int | None = None) -> np.ndarray:
        """Determinants that agree with the reference on every inactive mode."""
        inactive_mask = sum(1 << p for p in self.inactive)
        ref = self.reference_index & inactive_mask
        idx = np.arange(1 << self.n_modes, dtype=np.int64)
        keep = (idx & inactive_mask) == ref
        if sector is not None:
            keep &= np.bitwise_count(idx) == sector
        return idx[keep]


@dataclass(frozen=True)
class ToyHamiltonian:
    """Spin-orbital integrals in chemist notation.

    ``H = e_core + sum h[p,q] a+_p a_q + 1/2 sum g[p,q,r,s] a+_p a+_r a_s a_q``.
    """

    h1: np.ndarray
    h2: np.ndarray
    e_core: float = 0.0

    @property
    def n_modes(self) -> int:
        return self.h1.shape[0]

    def matrix(self) -> np.ndarray:
        n = self.n_modes
        a = annihilators(n)
        ad = [x.T for x in a]
        H = self.e_core * np.eye(1 << n)
        for p, q in zip(*np.nonzero(self.h1)):
            H += self.h1[p, q] * (ad[p] @ a[q])
        for p, q, r, s in zip(*np.nonzero(self.h2)):
            H += 0.5 * self.h2[p, q, r, s] * (ad[p] @ ad[r] @ a[s] @ a[q])
        return H

    def operator(self) -> DenseOperator:
        return DenseOperator(self.matrix(), self.n_modes)


def random_toy_hamiltonian(n_modes: int, rng: np.random.Generator, scale: float = 1.0) -> ToyHamiltonian:
    """Random real Hermitian integrals with the full 8-fold permutational symmetry."""
    h1 = rng.normal(size=(n_modes, n_modes)) * scale
    h1 = 0.5 * (h1 + h1.T)
    g = rng.normal(size=(n_modes,) * 4) * scale
    g = g + g.transpose(1, 0, 2, 3)
    g = g + g.transpose(0, 1, 3, 2)
    g = g + g.transpose(2, 3, 0, 1)
    return ToyHamiltonian(h1, g / 8.0)


def _excitation_matrix(particles: Sequence[int], holes: Sequence[int], n: int) -> np.ndarray:
    """``a+_{p1} a+_{p2} ... a_{h2} a_{h1}``."""
    a = annihilators(n)
    M = np.eye(1 << n)
    for p in particles:
        M = M @ a[p].T
    for h in reversed(holes):
        M = M @ a[h]
    return M


def build_sigma(amplitudes: Sequence[tuple], space: ActiveSpaceDef) -> DenseOperator:
    """``sigma = T - T^+`` from external cluster amplitudes.

    Each amplitude is ``((particles...), (holes...), value)`` standing for
    ``value * a+_{p1} ... a+_{pk} a_{hk} ... a_{h1}``. Every excitation must
    touch at least one inactive mode.
    """
    n = space.n_modes
    T = np.zeros((1 << n, 1 << n))
    for entry in amplitudes:
        particles, holes, value = entry
        if len(particles) != len(holes):
            raise ValueError(f"unbalanced excitation {particles} <- {holes}")
        if not space.is_external(tuple(particles) + tuple(holes)):
            raise ExternalityError(f"excitation {particles} <- {holes} is purely active")
        T = T + value * _excitation_matrix(particles, holes, n)
    return DenseOperator(T - T.T, n)


def _comm(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B - B @ A


def _m(op) -> np.ndarray:
    return op.matrix if isinstance(op, DenseOperator) else np.asarray(op)


def bch_transform(H, sigma, mode: str = "exact", k: int | None = None,
                  parts: tuple | None = None) -> DenseOperator:
    """``exp(-sigma) H exp(sigma)`` exactly or through a commutator expansion.

    ``mode="rank"`` sums ``ad^j / j!`` for ``j <= k`` with ``ad(X) = [X, sigma]``.
    ``mode="a7"`` returns ``H + [H_N, s] + 1/2 [[H_N, s], s] + 1/6 [[[F_N, s], s], s]``
    and needs ``parts = (H_N, F_N)`` from :func:`fock_normal_parts`.
    """
    Hm, S = _m(H), _m(sigma)
    n = H.n_modes if isinstance(H, DenseOperator) else int(Hm.shape[0]).bit_length() - 1
    if mode == "exact":
        U = scipy.linalg.expm(S)
        out = U.conj().T @ Hm @ U if np.iscomplexobj(U) else U.T @ Hm @ U
    elif mode == "rank":
        if k is None or k < 0:
            raise ValueError("rank mode needs k >= 0")
        out = Hm.copy()
        term = Hm
        for j in range(1, k + 1):
            term = _comm(term, S)
            out = out + term / factorial(j)
    elif mode == "a7":
        if parts is None:
            raise ValueError("a7 mode needs (H_N, F_N)")
        HN, FN = _m(parts[0]), _m(parts[1])
        c1 = _comm(HN, S)
        c2 = _comm(c1, S)
        f3 = _comm(_comm(_comm(FN, S), S), S)
        out = Hm + c1 + 0.5 * c2 + f3 / 6.0
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return DenseOperator(out, n)


def project_active(Hbar, space: ActiveSpaceDef, sector: int | None = None) -> DenseOperator:
    """Restrict to determinants whose excitations from the reference are all active.

    ``sector`` additionally keeps only determinants with that electron count.
    """
    basis = space.projector_basis(sector)
    M = _m(Hbar)[np.ix_(basis, basis)]
    return DenseOperator(M, space.n_modes, tuple(int(b) for b in basis))


def fock_matrix(toy: ToyHamiltonian, occupied: Sequence[int]) -> np.ndarray:
    """``f[p,q] = h[p,q] + sum_i (pq|ii) - (pi|iq)`` over the occupied modes."""
    occ = list(occupied)
    g = toy.h2
    f = toy.h1.copy()
    for i in occ:
        f = f + g[:, :, i, i] - g[:, i, i, :]
    return f


def fock_normal_parts(toy: ToyHamiltonian, reference: Sequence[int]
                      ) -> tuple[DenseOperator, DenseOperator]:
    """``H_N = H - <ref|H|ref>`` and ``F_N = sum f[p,q] a+_p a_q - sum_i f[i,i]``."""
    n = toy.n_modes
    H = toy.matrix()
    ref = sum(1 << p for p in reference)
    e_ref = H[ref, ref]
    f = fock_matrix(toy, reference)
    a = annihilators(n)
    F = np.zeros_like(H)
    for p, q in zip(*np.nonzero(f)):
        F += f[p, q] * (a[p].T @ a[q])
    F -= sum(f[i, i] for i in reference) * np.eye(1 << n)
    HN = H - e_ref * np.eye(1 << n)
    return DenseOperator(HN, n), DenseOperator(F, n)
