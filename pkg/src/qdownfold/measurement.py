"""Qubit-wise commuting grouping, budget truncation and shot-based energy estimates."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import InsufficientShots, RangeError
from .paulis import PauliSum, PauliTerm

__all__ = [
    "MeasurementGroup",
    "MeasurementPlan",
    "Truncation",
    "qwc_group",
    "build_plan",
    "truncate_groups",
    "allocate_shots",
    "estimate_energy",
    "group_parities",
]


def _term_order(t: PauliTerm):
    return (-abs(t.coeff), t.x, t.z)


@dataclass(frozen=True)
class MeasurementGroup:
    """Mutually qubit-wise commuting strings sharing one product basis.

    ``basis_string`` follows the label convention (qubit 0 rightmost) with
    ``I`` on qubits no member touches.
    """

    members: tuple[PauliTerm, ...]
    basis_string: str

    @property
    def weight(self) -> float:
        return float(sum(abs(t.coeff) for t in self.members))

    @property
    def n_qubits(self) -> int:
        return len(self.basis_string)

    def to_sum(self) -> PauliSum:
        return PauliSum.from_terms(self.members, self.n_qubits)

    def is_consistent(self) -> bool:
        """Pairwise QWC and every member letter agrees with the basis."""
        n = self.n_qubits
        for i, a in enumerate(self.members):
            for q in range(n):
                ch = a.letter(q)
                if ch != "I" and self.basis_string[n - 1 - q] != ch:
                    return False
            for b in self.members[i + 1:]:
                if not a.qubitwise_commutes(b):
                    return False
        return True

    def to_dict(self) -> dict:
        return {
            "basis": self.basis_string,
            "weight": self.weight,
            "members": [
                {"pauli": t.label, "re": complex(t.coeff).real, "im": complex(t.coeff).imag}
                for t in self.members
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MeasurementGroup":
        members = tuple(PauliTerm.from_label(m["pauli"], complex(m["re"], m["im"]))
                        for m in data["members"])
        return cls(members, data["basis"])


def _merge_basis(basis: list[str], t: PauliTerm) -> bool:
    """Try to extend ``basis`` (indexed by qubit) with ``t``; mutate on success."""
    n = len(basis)
    letters = [t.letter(q) for q in range(n)]
    for q, ch in enumerate(letters):
        if ch != "I" and basis[q] != "I" and basis[q] != ch:
            return False
    for q, ch in enumerate(letters):
        if ch != "I":
            basis[q] = ch
    return True


def qwc_group(S: PauliSum) -> list[MeasurementGroup]:
    """Greedy first-fit partition of the non-identity strings of ``S``.

    Strings are visited by descending ``|coeff|`` (ties by mask) and each one
    joins the first group it is compatible with. Groups are returned by
    descending weight, ties by first member's masks.
    """
    n = S.n_qubits
    bases: list[list[str]] = []
    members: list[list[PauliTerm]] = []
    for t in sorted(S.non_identity(), key=_term_order):
        for basis, mem in zip(bases, members):
            if _merge_basis(basis, t):
                mem.append(t)
                break
        else:
            basis = ["I"] * n
            _merge_basis(basis, t)
            bases.append(basis)
            members.append([t])
    groups = [MeasurementGroup(tuple(m), "".join(reversed(b))) for b, m in zip(bases, members)]
    groups.sort(key=lambda g: (-g.weight, g.members[0].x, g.members[0].z))
    return groups


@dataclass
class MeasurementPlan:
    """Ordered groups (heaviest first) plus the separately carried identity term."""

    n_qubits: int
    groups: list[MeasurementGroup]
    identity: float = 0.0
    retained_k: int | None = None
    shots_per_group: int = 1024
    shot_allocation: list[int] | None = None

    def __post_init__(self):
        if self.retained_k is None:
            self.retained_k = len(self.groups)

    @property
    def retained(self) -> list[MeasurementGroup]:
        return self.groups[: self.retained_k]

    def shots(self) -> list[int]:
        if self.shot_allocation is not None:
            return list(self.shot_allocation)
        return [self.shots_per_group] * self.retained_k

    def total_weight(self) -> float:
        return float(sum(g.weight for g in self.groups))

    def to_sum(self, k: int | None = None) -> PauliSum:
        k = self.retained_k if k is None else k
        out = PauliSum.identity(self.n_qubits, self.identity) if self.identity else PauliSum(self.n_qubits)
        for g in self.groups[:k]:
            out = out + g.to_sum()
        return out

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "identity": self.identity,
            "retained_k": self.retained_k,
            "shots_per_group": self.shots_per_group,
            "shot_allocation": self.shot_allocation,
            "groups": [g.to_dict() for g in self.groups],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, data: dict) -> "MeasurementPlan":
        return cls(
            n_qubits=int(data["n_qubits"]),
            groups=[MeasurementGroup.from_dict(g) for g in data["groups"]],
            identity=float(data.get("identity", 0.0)),
            retained_k=data.get("retained_k"),
            shots_per_group=int(data.get("shots_per_group", 1024)),
            shot_allocation=data.get("shot_allocation"),
        )

    @classmethod
    def from_json(cls, text: str) -> "MeasurementPlan":
        return cls.from_dict(json.loads(text))


def build_plan(S: PauliSum, shots_per_group: int = 1024) -> MeasurementPlan:
    if not S.is_hermitian():
        raise ValueError("measurement plans need a Hermitian sum")
    return MeasurementPlan(S.n_qubits, qwc_group(S), float(complex(S.constant).real),
                           shots_per_group=shots_per_group)


@dataclass(frozen=True)
class Truncation:
    operator: PauliSum
    plan: MeasurementPlan
    retained_strings: int
    total_strings: int
    weight_fraction: float


def truncate_groups(plan: MeasurementPlan, k: int) -> Truncation:
    """Keep the ``k`` heaviest groups and the identity term.

    Groups are already sorted by weight, so the first ``k`` carry the largest
    possible weight of any ``k`` groups from this partition.
    """
    if not 1 <= k <= len(plan.groups):
        raise RangeError(f"k={k} outside 1..{len(plan.groups)}")
    kept = MeasurementPlan(plan.n_qubits, list(plan.groups), plan.identity, k,
                           plan.shots_per_group)
    total = plan.total_weight()
    frac = sum(g.weight for g in plan.groups[:k]) / total if total else 1.0
    return Truncation(
        operator=kept.to_sum(k),
        plan=kept,
        retained_strings=sum(len(g.members) for g in plan.groups[:k]),
        total_strings=sum(len(g.members) for g in plan.groups),
        weight_fraction=float(frac),
    )


def allocate_shots(plan: MeasurementPlan, total: int, weighted: bool = False) -> list[int]:
    """Split ``total`` shots over the retained groups.

    Uniform by default; ``weighted`` allocates proportionally to group weight
    with at least one shot each and largest-remainder rounding.
    """
    k = plan.retained_k
    if total < k:
        raise InsufficientShots(f"{total} shots cannot cover {k} groups")
    if not weighted:
        base, extra = divmod(total, k)
        return [base + (i < extra) for i in range(k)]
    w = np.array([g.weight for g in plan.retained])
    spare = total - k
    raw = spare * w / w.sum()
    alloc = np.floor(raw).astype(int)
    order = np.argsort(-(raw - alloc), kind="stable")
    alloc[order[: spare - alloc.sum()]] += 1
    return [int(a) + 1 for a in alloc]


def group_parities(group: MeasurementGroup, outcomes: np.ndarray) -> np.ndarray:
    """Matrix of +-1 eigenvalues, shape (len(outcomes), len(members))."""
    supports = np.array([t.support for t in group.members], dtype=np.int64)
    odd = np.bitwise_count(outcomes[:, None] & supports[None, :]) & 1
    return 1 - 2 * odd.astype(np.int64)


def _histogram_arrays(hist: Mapping[str, int]) -> tuple[np.ndarray, np.ndarray]:
    keys = np.array([int(b, 2) for b in hist], dtype=np.int64)
    counts = np.array(list(hist.values()), dtype=np.int64)
    return keys, counts


def estimate_energy(counts: Sequence[Mapping[str, int]] | Mapping[int, Mapping[str, int]],
                    plan: MeasurementPlan) -> tuple[float, float]:
    """Energy and standard error from per-group bitstring histograms.

    ``counts[i]`` belongs to ``plan.groups[i]`` for each retained group. Each
    shot yields one sample of the group's observable; the group mean's
    variance is the unbiased sample variance over shots divided by the shot
    count, and groups combine in quadrature. A group with a single shot has
    no variance estimate and makes the standard error NaN.
    """
    if isinstance(counts, Mapping):
        counts = [counts.get(i, {}) for i in range(plan.retained_k)]
    if len(counts) < plan.retained_k:
        raise InsufficientShots(f"{len(counts)} histograms for {plan.retained_k} groups")
    energy = plan.identity
    var = 0.0
    for i, group in enumerate(plan.retained):
        hist = counts[i]
        shots = sum(hist.values()) if hist else 0
        if shots < 1:
            raise InsufficientShots(f"group {i} ({group.basis_string}) has no shots")
        keys, c = _histogram_arrays(hist)
        coeffs = np.array([complex(t.coeff).real for t in group.members])
        values = group_parities(group, keys) @ coeffs
        mean = float(c @ values) / shots
        energy += mean
        if shots > 1:
            s2 = float(c @ (values - mean) ** 2) / (shots - 1)
            var += s2 / shots
        else:
            var = float("nan")
    return float(energy), float(np.sqrt(var))
