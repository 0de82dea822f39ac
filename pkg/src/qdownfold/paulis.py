"""Phase-exact Pauli strings in symplectic (x, z) bitmask form.

A term with masks ``(x, z)`` and coefficient ``c`` denotes
``c * i**popcount(x & z) * X**x Z**z``, so a qubit carries X when only its
x-bit is set, Z when only its z-bit is set and Y when both are. Labels are
written with qubit 0 as the rightmost character (``"XIYZ"`` has Z on qubit 0
and X on qubit 3), matching the bitstring convention used for measurement
outcomes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import DimensionError

__all__ = [
    "PauliTerm",
    "PauliSum",
    "pauli_multiply",
    "commutator",
    "prune",
    "popcount",
]

_LETTERS = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
_BITS = {v: k for k, v in _LETTERS.items()}
_IPOW = (1, 1j, -1, -1j)


def popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliTerm:
    x: int
    z: int
    n_qubits: int
    coeff: complex = 1.0

    @classmethod
    def from_label(cls, label: str, coeff: complex = 1.0) -> "PauliTerm":
        n = len(label)
        x = z = 0
        for pos, ch in enumerate(label.upper()):
            q = n - 1 - pos
            try:
                bx, bz = _BITS[ch]
            except KeyError:
                raise ValueError(f"bad Pauli letter {ch!r} in {label!r}") from None
            x |= bx << q
            z |= bz << q
        return cls(x, z, n, coeff)

    @classmethod
    def from_dict(cls, ops: Mapping[int, str], n_qubits: int, coeff: complex = 1.0) -> "PauliTerm":
        """Build from ``{qubit: letter}``."""
        x = z = 0
        for q, ch in ops.items():
            bx, bz = _BITS[ch.upper()]
            x |= bx << q
            z |= bz << q
        return cls(x, z, n_qubits, coeff)

    @property
    def label(self) -> str:
        return "".join(
            _LETTERS[((self.x >> q) & 1, (self.z >> q) & 1)]
            for q in reversed(range(self.n_qubits))
        )

    @property
    def key(self) -> tuple[int, int]:
        return (self.x, self.z)

    @property
    def support(self) -> int:
        return self.x | self.z

    @property
    def weight(self) -> int:
        return popcount(self.x | self.z)

    @property
    def n_y(self) -> int:
        return popcount(self.x & self.z)

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def letter(self, q: int) -> str:
        return _LETTERS[((self.x >> q) & 1, (self.z >> q) & 1)]

    def with_coeff(self, coeff: complex) -> "PauliTerm":
        return PauliTerm(self.x, self.z, self.n_qubits, coeff)

    def commutes_with(self, other: "PauliTerm") -> bool:
        return popcount((self.x & other.z) ^ (self.z & other.x)) % 2 == 0

    def qubitwise_commutes(self, other: "PauliTerm") -> bool:
        """Equal letters or an identity on every qubit."""
        both = self.support & other.support
        return (self.x & both) == (other.x & both) and (self.z & both) == (other.z & both)

    def __mul__(self, other):
        if isinstance(other, PauliTerm):
            return pauli_multiply(self, other)
        return self.with_coeff(self.coeff * other)

    __rmul__ = lambda self, other: self.with_coeff(self.coeff * other)  # noqa: E731

    def to_matrix(self) -> np.ndarray:
        """Dense ``2**n`` matrix; qubit 0 is the least significant index bit."""
        mats = {"I": np.eye(2), "X": np.array([[0, 1], [1, 0]]),
                "Y": np.array([[0, -1j], [1j, 0]]), "Z": np.diag([1, -1])}
        out = np.array([[1.0 + 0j]])
        for ch in self.label:
            out = np.kron(out, mats[ch])
        return self.coeff * out

    def __repr__(self) -> str:
        return f"PauliTerm({self.coeff!r}, {self.label!r})"


def pauli_multiply(a: PauliTerm, b: PauliTerm) -> PauliTerm:
    """Exact product ``a @ b`` including the +-1/+-i phase."""
    if a.n_qubits != b.n_qubits:
        raise DimensionError(f"{a.n_qubits} vs {b.n_qubits} qubits")
    x, z = a.x ^ b.x, a.z ^ b.z
    k = popcount(a.x & a.z) + popcount(b.x & b.z) - popcount(x & z) + 2 * popcount(a.z & b.x)
    return PauliTerm(x, z, a.n_qubits, a.coeff * b.coeff * _IPOW[k % 4])


def _mul_keys(x1, z1, x2, z2):
    """Masks and phase of the product of two unit Pauli strings."""
    x, z = x1 ^ x2, z1 ^ z2
    k = popcount(x1 & z1) + popcount(x2 & z2) - popcount(x & z) + 2 * popcount(z1 & x2)
    return x, z, _IPOW[k % 4]


class PauliSum:
    """Coefficient-merged sum of Pauli strings on a fixed number of qubits.

    Terms are merged on insertion and exact zeros are dropped, so two sums
    are equal iff their term dictionaries are. ``discarded_weight`` records
    the total ``|coeff|`` removed by :func:`prune`.
    """

    __slots__ = ("n_qubits", "terms", "discarded_weight", "_compiled")

    def __init__(self, n_qubits: int, terms: Mapping[tuple[int, int], complex] | None = None,
                 discarded_weight: float = 0.0):
        self.n_qubits = n_qubits
        self.terms: dict[tuple[int, int], complex] = {}
        self.discarded_weight = discarded_weight
        self._compiled = None
        if terms:
            for key, c in terms.items():
                self._add(key, c)

    # construction -------------------------------------------------------
    @classmethod
    def from_terms(cls, terms: Iterable[PauliTerm], n_qubits: int | None = None) -> "PauliSum":
        terms = list(terms)
        if n_qubits is None:
            if not terms:
                raise ValueError("n_qubits is required for an empty sum")
            n_qubits = terms[0].n_qubits
        out = cls(n_qubits)
        for t in terms:
            if t.n_qubits != n_qubits:
                raise DimensionError(f"term on {t.n_qubits} qubits in a {n_qubits}-qubit sum")
            out._add(t.key, t.coeff)
        return out

    @classmethod
    def identity(cls, n_qubits: int, coeff: complex = 1.0) -> "PauliSum":
        return cls(n_qubits, {(0, 0): coeff})

    @classmethod
    def from_labels(cls, pairs: Iterable[tuple[complex, str]]) -> "PauliSum":
        return cls.from_terms(PauliTerm.from_label(lbl, c) for c, lbl in pairs)

    def _add(self, key, c):
        new = self.terms.get(key, 0.0) + c
        if new == 0:
            self.terms.pop(key, None)
        else:
            self.terms[key] = new

    def copy(self) -> "PauliSum":
        out = PauliSum(self.n_qubits, discarded_weight=self.discarded_weight)
        out.terms = dict(self.terms)
        return out

    # views --------------------------------------------------------------
    def __iter__(self) -> Iterator[PauliTerm]:
        for (x, z), c in self.terms.items():
            yield PauliTerm(x, z, self.n_qubits, c)

    def __len__(self) -> int:
        return len(self.terms)

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        return (isinstance(other, PauliSum) and self.n_qubits == other.n_qubits
                and self.terms == other.terms)

    def __repr__(self) -> str:
        return f"PauliSum(n_qubits={self.n_qubits}, n_terms={len(self)})"

    @property
    def constant(self) -> complex:
        return self.terms.get((0, 0), 0.0)

    def non_identity(self) -> list[PauliTerm]:
        return [t for t in self if not t.is_identity()]

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return all(abs(complex(c).imag) <= tol for c in self.terms.values())

    def real(self) -> "PauliSum":
        """Drop imaginary parts (caller has checked they are negligible)."""
        return PauliSum(self.n_qubits, {k: complex(c).real for k, c in self.terms.items()})

    def one_norm(self, include_identity: bool = True) -> float:
        return float(sum(abs(c) for k, c in self.terms.items() if include_identity or k != (0, 0)))

    # algebra ------------------------------------------------------------
    def _check(self, other: "PauliSum"):
        if self.n_qubits != other.n_qubits:
            raise DimensionError(f"{self.n_qubits} vs {other.n_qubits} qubits")

    def __add__(self, other):
        if not isinstance(other, PauliSum):
            other = PauliSum.identity(self.n_qubits, other)
        self._check(other)
        out = self.copy()
        for k, c in other.terms.items():
            out._add(k, c)
        return out

    __radd__ = __add__

    def __neg__(self) -> "PauliSum":
        return self * -1

    def __sub__(self, other):
        return self + (-other if isinstance(other, PauliSum) else -other)

    def __mul__(self, other):
        if isinstance(other, PauliSum):
            self._check(other)
            out = PauliSum(self.n_qubits)
            for (x1, z1), c1 in self.terms.items():
                for (x2, z2), c2 in other.terms.items():
                    x, z, ph = _mul_keys(x1, z1, x2, z2)
                    out._add((x, z), c1 * c2 * ph)
            return out
        if isinstance(other, PauliTerm):
            return self * PauliSum.from_terms([other])
        return PauliSum(self.n_qubits, {k: c * other for k, c in self.terms.items()})

    def __rmul__(self, other):
        return self * other

    def adjoint(self) -> "PauliSum":
        return PauliSum(self.n_qubits, {k: complex(c).conjugate() for k, c in self.terms.items()})

    def to_matrix(self) -> np.ndarray:
        out = np.zeros((2 ** self.n_qubits,) * 2, dtype=complex)
        for t in self:
            out += t.to_matrix()
        return out

    # serialization ------------------------------------------------------
    def sorted_terms(self) -> list[PauliTerm]:
        """Terms by descending |coeff|, ties by (x, z) mask order."""
        return sorted(self, key=lambda t: (-abs(t.coeff), t.x, t.z))

    def to_text(self) -> str:
        lines = []
        for t in sorted(self, key=lambda t: (t.x, t.z)):
            c = complex(t.coeff)
            coeff = repr(c.real) if c.imag == 0 else repr(c)
            lines.append(f"{coeff} {t.label}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str, n_qubits: int | None = None) -> "PauliSum":
        terms = []
        for line in text.splitlines():
            if not line.strip():
                continue
            coeff, label = line.split()
            c = complex(coeff)
            terms.append(PauliTerm.from_label(label, c if c.imag else c.real))
        return cls.from_terms(terms, n_qubits)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "terms": [
                {"pauli": t.label, "re": complex(t.coeff).real, "im": complex(t.coeff).imag}
                for t in sorted(self, key=lambda t: (t.x, t.z))
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PauliSum":
        n = data["n_qubits"]
        out = cls(n)
        for entry in data["terms"]:
            t = PauliTerm.from_label(entry["pauli"])
            c = complex(entry["re"], entry["im"])
            out._add(t.key, c if c.imag else c.real)
        return out

    @classmethod
    def from_json(cls, text: str) -> "PauliSum":
        return cls.from_dict(json.loads(text))


def commutator(A: PauliSum, B: PauliSum) -> PauliSum:
    """``AB - BA``. Commuting string pairs are skipped, anticommuting ones give ``2ab``."""
    A._check(B)
    out = PauliSum(A.n_qubits)
    for (x1, z1), c1 in A.terms.items():
        for (x2, z2), c2 in B.terms.items():
            if popcount((x1 & z2) ^ (z1 & x2)) % 2 == 0:
                continue
            x, z, ph = _mul_keys(x1, z1, x2, z2)
            out._add((x, z), 2 * c1 * c2 * ph)
    return out


def prune(S: PauliSum, eps: float) -> PauliSum:
    """Drop terms with ``|coeff| < eps``; the removed weight accumulates on the result."""
    if eps < 0:
        raise ValueError("eps must be non-negative")
    out = PauliSum(S.n_qubits, discarded_weight=S.discarded_weight)
    for k, c in S.terms.items():
        if abs(c) < eps:
            out.discarded_weight += abs(c)
        else:
            out.terms[k] = c
    return out
