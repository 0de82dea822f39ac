"""Dense state-vector simulation of Pauli-rotation circuits.

Amplitudes are bit-indexed with qubit 0 least significant, so the reference
state with qubits {0, 1} occupied on 4 qubits is index ``0b0011``. Every
kernel is a single vectorized gather over the mask-conjugate partner
``i ^ x`` of each index.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, NonHermitianInput
from .paulis import PauliSum, PauliTerm, popcount

__all__ = [
    "State",
    "GateTally",
    "NoiseModel",
    "Circuit",
    "CompiledOperator",
    "init_reference",
    "apply_pauli",
    "apply_pauli_exp",
    "expectation",
    "sample_group",
    "run_circuit",
    "rotate_to_basis",
    "outcome_probabilities",
]

_IPOW = (1, 1j, -1, -1j)


@lru_cache(maxsize=32)
def _indices(n: int) -> np.ndarray:
    return np.arange(1 << n, dtype=np.int64)


@lru_cache(maxsize=8192)
def _pauli_action(n: int, x: int, z: int) -> tuple[np.ndarray, np.ndarray]:
    """(src, phase) with ``(P psi)[i] = phase[i] * psi[src[i]]`` for a unit string."""
    idx = _indices(n)
    src = idx ^ x
    sign = 1 - 2 * (np.bitwise_count(src & z) & 1).astype(np.int8)
    phase = _IPOW[popcount(x & z) % 4] * sign.astype(complex)
    src.flags.writeable = False
    phase.flags.writeable = False
    return src, phase


class State:
    """Normalized amplitudes of an n-qubit register. Mutated in place by kernels."""

    __slots__ = ("n_qubits", "amplitudes")

    def __init__(self, amplitudes: np.ndarray, n_qubits: int | None = None):
        amplitudes = np.asarray(amplitudes, dtype=complex)
        if n_qubits is None:
            n_qubits = int(round(math.log2(amplitudes.size)))
        if amplitudes.shape != (1 << n_qubits,):
            raise DimensionError(f"{amplitudes.shape} amplitudes for {n_qubits} qubits")
        self.n_qubits = n_qubits
        self.amplitudes = amplitudes

    def copy(self) -> "State":
        return State(self.amplitudes.copy(), self.n_qubits)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def dump(self, path) -> None:
        """Little-endian interleaved (re, im) float64 pairs."""
        self.amplitudes.astype("<c16").tofile(path)

    @classmethod
    def load(cls, path, n_qubits: int | None = None) -> "State":
        return cls(np.fromfile(path, dtype="<c16"), n_qubits)


def init_reference(n_qubits: int, occupied: Iterable[int]) -> State:
    """Computational basis state with ones on the ``occupied`` qubits."""
    index = 0
    for q in occupied:
        if not 0 <= q < n_qubits:
            raise ValueError(f"qubit {q} outside register of {n_qubits}")
        index |= 1 << q
    amps = np.zeros(1 << n_qubits, dtype=complex)
    amps[index] = 1.0
    return State(amps, n_qubits)


def _vec(state) -> np.ndarray:
    return state.amplitudes if isinstance(state, State) else np.asarray(state)


def apply_pauli(state, P: PauliTerm) -> np.ndarray:
    """Return ``P |psi>`` (coefficient included) as a new array."""
    psi = _vec(state)
    n = int(psi.size).bit_length() - 1
    if P.n_qubits != n:
        raise DimensionError(f"{P.n_qubits}-qubit string on a {n}-qubit state")
    src, phase = _pauli_action(n, P.x, P.z)
    return P.coeff * phase * psi[src]


def apply_pauli_exp(state: State, P: PauliTerm, theta: float) -> State:
    """``state <- exp(-i theta/2 P) state`` for a unit-coefficient Hermitian string."""
    if P.n_qubits != state.n_qubits:
        raise DimensionError(f"{P.n_qubits}-qubit string on a {state.n_qubits}-qubit state")
    c = complex(P.coeff)
    if abs(abs(c) - 1) > 1e-12 or abs(c.imag) > 1e-12:
        raise ValueError(f"rotation string needs coefficient +-1, got {c}")
    if theta == 0:
        return state
    psi = state.amplitudes
    src, phase = _pauli_action(state.n_qubits, P.x, P.z)
    s = math.sin(theta / 2) * c.real
    state.amplitudes = math.cos(theta / 2) * psi - 1j * s * (phase * psi[src])
    return state


class CompiledOperator:
    """A Pauli sum regrouped by X-mask: ``S psi = sum_x d_x * psi[i ^ x]``.

    Strings sharing an X-mask differ only by a diagonal, so the sum needs
    one gather per distinct X-mask rather than per string.
    """

    def __init__(self, S: PauliSum):
        n = S.n_qubits
        self.n_qubits = n
        idx = _indices(n)
        diag: dict[int, np.ndarray] = {}
        for (x, z), c in S.terms.items():
            _, phase = _pauli_action(n, x, z)
            d = diag.get(x)
            if d is None:
                diag[x] = c * phase
            else:
                d += c * phase
        self.xmasks = np.array(sorted(diag), dtype=np.int64)
        self.diagonals = np.array([diag[x] for x in self.xmasks]) if diag else np.zeros((0, idx.size))
        self.sources = idx[None, :] ^ self.xmasks[:, None]

    def matvec(self, psi: np.ndarray) -> np.ndarray:
        if not len(self.xmasks):
            return np.zeros_like(psi)
        return np.einsum("ki,ki->i", self.diagonals, psi[self.sources])

    def matrix_block(self, basis: np.ndarray) -> np.ndarray:
        """Dense matrix restricted to the computational ``basis`` indices.

        Entries coupling into states outside ``basis`` are dropped, which is
        exact when the operator preserves the span of ``basis``.
        """
        dim = 1 << self.n_qubits
        pos = np.full(dim, -1, dtype=np.int64)
        pos[basis] = np.arange(basis.size)
        out = np.zeros((basis.size, basis.size), dtype=complex)
        rows = np.arange(basis.size)
        for x, d in zip(self.xmasks, self.diagonals):
            cols = pos[basis ^ x]
            keep = cols >= 0
            # <i| S |i^x> = d_x[i]
            np.add.at(out, (rows[keep], cols[keep]), d[basis[keep]])
        return out


def compile_operator(S: PauliSum) -> CompiledOperator:
    if S._compiled is None:
        S._compiled = CompiledOperator(S)
    return S._compiled


def expectation(state, S: PauliSum, tol: float = 1e-10) -> float:
    """Exact ``<psi|S|psi>`` for Hermitian ``S``."""
    if not S.is_hermitian(tol):
        raise NonHermitianInput("expectation requires real Pauli coefficients")
    psi = _vec(state)
    if S.n_qubits != int(psi.size).bit_length() - 1:
        raise DimensionError("operator and state sizes differ")
    val = np.vdot(psi, compile_operator(S).matvec(psi))
    scale = max(1.0, S.one_norm())
    if abs(val.imag) > tol * scale:
        raise NonHermitianInput(f"expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


# --------------------------------------------------------------------------
# single-qubit and CNOT kernels used for basis changes and gate-level runs

_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_SDG = np.diag([1, -1j])
_RX_HALF_PI = np.array([[1, -1j], [-1j, 1]], dtype=complex) / math.sqrt(2)


def _apply_1q(psi: np.ndarray, U: np.ndarray, q: int, n: int) -> np.ndarray:
    view = psi.reshape(1 << (n - q - 1), 2, 1 << q)
    return np.einsum("ab,ibj->iaj", U, view).reshape(-1)


def _apply_cnot(psi: np.ndarray, control: int, target: int, n: int) -> np.ndarray:
    idx = _indices(n)
    src = np.where(idx >> control & 1, idx ^ (1 << target), idx)
    return psi[src]


def _apply_rz(psi: np.ndarray, q: int, theta: float, n: int) -> np.ndarray:
    bit = (_indices(n) >> q) & 1
    phases = np.where(bit, np.exp(0.5j * theta), np.exp(-0.5j * theta))
    return psi * phases


def rotate_to_basis(state, basis: str) -> np.ndarray:
    """Amplitudes after rotating each qubit's letter in ``basis`` onto Z.

    ``basis`` uses the Pauli label convention (qubit 0 rightmost); X gets a
    Hadamard and Y gets S-dagger followed by a Hadamard.
    """
    psi = _vec(state).copy()
    n = len(basis)
    for pos, ch in enumerate(basis):
        q = n - 1 - pos
        if ch == "X":
            psi = _apply_1q(psi, _H, q, n)
        elif ch == "Y":
            psi = _apply_1q(psi, _H @ _SDG, q, n)
    return psi


def outcome_probabilities(state, basis: str) -> np.ndarray:
    p = np.abs(rotate_to_basis(state, basis)) ** 2
    return p / p.sum()


def _counts_from_probs(p: np.ndarray, shots: int, rng: np.random.Generator, n: int) -> dict[str, int]:
    counts = rng.multinomial(shots, p)
    nz = np.flatnonzero(counts)
    return {format(int(i), f"0{n}b"): int(counts[i]) for i in nz}


def sample_group(state, group, shots: int, seed=None) -> dict[str, int]:
    """Sample ``shots`` outcomes of measuring ``group``'s joint basis.

    Bitstrings put qubit 0 rightmost. ``seed`` is anything accepted by
    :func:`numpy.random.default_rng`; the same seed gives the same histogram.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    basis = group.basis_string if hasattr(group, "basis_string") else str(group)
    p = outcome_probabilities(state, basis)
    return _counts_from_probs(p, shots, np.random.default_rng(seed), len(basis))


# --------------------------------------------------------------------------
# circuits, gate accounting and Pauli-trajectory noise

@dataclass(frozen=True)
class GateTally:
    one_qubit: int = 0
    two_qubit: int = 0

    def __post_init__(self):
        if self.one_qubit < 0 or self.two_qubit < 0:
            raise ValueError("gate counts must be non-negative")

    def __add__(self, other: "GateTally") -> "GateTally":
        return GateTally(self.one_qubit + other.one_qubit, self.two_qubit + other.two_qubit)


@dataclass(frozen=True)
class NoiseModel:
    """Each two-qubit gate is followed, with probability ``p2``, by a uniformly
    random non-identity two-qubit Pauli on its qubits."""

    p2: float
    rng_seed: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.p2 <= 1.0:
            raise ValueError("p2 must lie in [0, 1]")


def rotation_tally(P: PauliTerm) -> GateTally:
    """CNOT-staircase cost of ``exp(-i phi/2 P)``."""
    w = P.weight
    if w == 0:
        return GateTally()
    if w == 1:
        return GateTally(1, 0)
    basis_changes = popcount(P.x)  # X and Y letters need a change on each side
    return GateTally(2 * basis_changes + 1, 2 * (w - 1))


@dataclass
class Circuit:
    """Ordered Pauli rotations ``exp(-i phi/2 P)``.

    ``padding`` maps the global index of a staircase CNOT to the number of
    identity pairs (CNOT, CNOT) inserted directly after it.
    """

    rotations: list[tuple[PauliTerm, float]] = field(default_factory=list)
    padding: dict[int, int] = field(default_factory=dict)

    @property
    def n_qubits(self) -> int:
        return self.rotations[0][0].n_qubits if self.rotations else 0

    def tally(self) -> GateTally:
        t = GateTally()
        for P, _ in self.rotations:
            t = t + rotation_tally(P)
        return t + GateTally(0, 2 * sum(self.padding.values()))

    def __add__(self, other: "Circuit") -> "Circuit":
        shift = self.tally().two_qubit - 2 * sum(self.padding.values())
        padding = dict(self.padding)
        padding.update({k + shift: v for k, v in other.padding.items()})
        return Circuit(self.rotations + other.rotations, padding)

    def to_dict(self) -> dict:
        return {
            "rotations": [{"pauli": P.label, "angle": phi} for P, phi in self.rotations],
            "padding": {str(k): v for k, v in sorted(self.padding.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "Circuit":
        rots = [(PauliTerm.from_label(r["pauli"]), float(r["angle"])) for r in data["rotations"]]
        return cls(rots, {int(k): int(v) for k, v in data.get("padding", {}).items()})

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        return cls.from_dict(json.loads(text))

    def gate_ops(self):
        """Expand into primitive ops.

        Yields ``("1q", U, q)``, ``("rz", q, phi)`` and ``("cx", c, t, tallied)``;
        ``tallied`` is the global two-qubit gate index for staircase CNOTs and
        ``None`` for inserted padding.
        """
        g = 0
        for P, phi in self.rotations:
            if complex(P.coeff).real < 0:
                phi = -phi
            qubits = [q for q in range(P.n_qubits) if (P.support >> q) & 1]
            if not qubits:
                continue
            if len(qubits) == 1:
                q = qubits[0]
                letter = P.letter(q)
                pre, post = _basis_change(letter)
                if pre is not None:
                    yield ("1q", pre, q)
                yield ("rz", q, phi)
                if post is not None:
                    yield ("1q", post, q)
                continue
            for q in qubits:
                pre, _ = _basis_change(P.letter(q))
                if pre is not None:
                    yield ("1q", pre, q)
            ladder = list(zip(qubits[:-1], qubits[1:]))
            for c, t in ladder:
                yield ("cx", c, t, g)
                yield from self._pad(c, t, g)
                g += 1
            yield ("rz", qubits[-1], phi)
            for c, t in reversed(ladder):
                yield ("cx", c, t, g)
                yield from self._pad(c, t, g)
                g += 1
            for q in qubits:
                _, post = _basis_change(P.letter(q))
                if post is not None:
                    yield ("1q", post, q)

    def _pad(self, c, t, g):
        for _ in range(self.padding.get(g, 0)):
            yield ("cx", c, t, None)
            yield ("cx", c, t, None)


def _basis_change(letter: str):
    if letter == "X":
        return _H, _H
    if letter == "Y":
        return _RX_HALF_PI, _RX_HALF_PI.conj().T
    return None, None


_TWO_QUBIT_PAULIS = [(a, b) for a in "IXYZ" for b in "IXYZ" if (a, b) != ("I", "I")]


def _apply_error(psi: np.ndarray, code: int, c: int, t: int, n: int) -> np.ndarray:
    a, b = _TWO_QUBIT_PAULIS[code]
    P = PauliTerm.from_dict({c: a, t: b} if a != "I" and b != "I" else
                            ({c: a} if b == "I" else {t: b}), n)
    return apply_pauli(psi, P)


def run_gate_level(psi: np.ndarray, circuit: Circuit, n: int,
                   errors: dict[int, int] | None = None) -> np.ndarray:
    """Gate-by-gate evolution; ``errors`` maps a CNOT's position in execution
    order (padding included) to an index into the 15 two-qubit Paulis."""
    errors = errors or {}
    k = 0
    for op in circuit.gate_ops():
        kind = op[0]
        if kind == "1q":
            psi = _apply_1q(psi, op[1], op[2], n)
        elif kind == "rz":
            psi = _apply_rz(psi, op[1], op[2], n)
        else:
            psi = _apply_cnot(psi, op[1], op[2], n)
            if k in errors:
                psi = _apply_error(psi, errors[k], op[1], op[2], n)
            k += 1
    return psi


def cnot_positions(circuit: Circuit) -> list[tuple[int, int]]:
    """(control, target) of every executed CNOT, padding included, in order."""
    return [(op[1], op[2]) for op in circuit.gate_ops() if op[0] == "cx"]


def run_circuit(state: State, circuit: Circuit, noise: NoiseModel | None = None,
                rng: np.random.Generator | None = None) -> tuple[State, GateTally]:
    """Apply ``circuit`` to ``state`` in place.

    Without noise (or with ``p2 == 0``) each rotation is applied as one exact
    Pauli exponential. With noise the circuit runs gate by gate and every
    CNOT is followed by a random two-qubit Pauli with probability ``p2``; one
    call is one trajectory.
    """
    tally = circuit.tally()
    if noise is None or noise.p2 == 0:
        for P, phi in circuit.rotations:
            apply_pauli_exp(state, P.with_coeff(1.0), phi if complex(P.coeff).real > 0 else -phi)
        return state, tally
    if rng is None:
        rng = np.random.default_rng(noise.rng_seed)
    n_cx = len(cnot_positions(circuit))
    hits = np.flatnonzero(rng.random(n_cx) < noise.p2)
    errors = {int(k): int(rng.integers(15)) for k in hits}
    state.amplitudes = run_gate_level(state.amplitudes, circuit, state.n_qubits, errors)
    return state, tally


class TrajectorySampler:
    """Exact shot sampling from a circuit under Pauli-trajectory noise.

    Every shot draws its own error pattern. Shots with identical patterns are
    pooled and simulated once, and finished states are memoized by pattern,
    so low-noise runs cost far fewer simulations than shots.
    """

    def __init__(self, circuit: Circuit, initial: State, noise: NoiseModel | None):
        self.circuit = circuit
        self.initial = initial
        self.noise = noise
        self.n = initial.n_qubits
        self.n_cx = len(cnot_positions(circuit))
        self._cache: dict[tuple, np.ndarray] = {}

    def final_state(self, pattern: tuple = ()) -> np.ndarray:
        psi = self._cache.get(pattern)
        if psi is None:
            if pattern:
                psi = run_gate_level(self.initial.amplitudes.copy(), self.circuit, self.n,
                                     dict(pattern))
            else:
                s, _ = run_circuit(self.initial.copy(), self.circuit)
                psi = s.amplitudes
            self._cache[pattern] = psi
        return psi

    def sample_patterns(self, shots: int, rng: np.random.Generator) -> dict[tuple, int]:
        p2 = 0.0 if self.noise is None else self.noise.p2
        if p2 == 0 or self.n_cx == 0:
            return {(): shots}
        hits = rng.random((shots, self.n_cx)) < p2
        codes = rng.integers(15, size=(shots, self.n_cx))
        out: dict[tuple, int] = {}
        clean = ~hits.any(axis=1)
        n_clean = int(clean.sum())
        if n_clean:
            out[()] = n_clean
        for row in np.flatnonzero(~clean):
            where = np.flatnonzero(hits[row])
            key = tuple((int(k), int(codes[row, k])) for k in where)
            out[key] = out.get(key, 0) + 1
        return out

    def sample(self, basis: str, shots: int, rng: np.random.Generator) -> dict[str, int]:
        counts: dict[str, int] = {}
        for pattern, m in sorted(self.sample_patterns(shots, rng).items()):
            p = outcome_probabilities(self.final_state(pattern), basis)
            for bits, c in _counts_from_probs(p, m, rng, self.n).items():
                counts[bits] = counts.get(bits, 0) + c
        return dict(sorted(counts.items()))

    def noisy_expectation(self, S: PauliSum, n_traj: int, rng: np.random.Generator) -> float:
        """Trajectory-averaged ``<S>`` (exact per trajectory, no shot noise)."""
        total = 0.0
        for pattern, m in self.sample_patterns(n_traj, rng).items():
            total += m * expectation(self.final_state(pattern), S)
        return total / n_traj
