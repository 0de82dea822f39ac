"""Generalized eigenproblems over non-orthogonal bases and adaptive GCIM."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ..errors import DegenerateSubspace, NonHermitianInput
from ..fermion import ExcitationGenerator
from ..paulis import PauliSum
from ..statevector import compile_operator
from .adapt import optimize_parameters, pool_gradients, reference_state
from .ansatz import kernel_for, prepare_state
from .pools import OperatorPool
from .trace import IterationRecord, SolverConfig, SolverTrace

__all__ = ["solve_gev", "GcimSubspace", "gcim_expand"]


def solve_gev(Hmat: np.ndarray, Smat: np.ndarray, cutoff: float = 1e-8,
              return_vectors: bool = False):
    """Eigenvalues of ``H f = eps S f`` by canonical orthogonalization.

    Overlap eigen-directions with eigenvalue below ``cutoff`` are dropped;
    ``H`` is transformed into the remaining orthonormal basis and
    diagonalized. With ``return_vectors`` the coefficient vectors (columns,
    in the original non-orthogonal basis) are returned as well.
    """
    Hmat = np.asarray(Hmat)
    Smat = np.asarray(Smat)
    if Hmat.shape != Smat.shape or Hmat.shape[0] != Hmat.shape[1]:
        raise ValueError("H and S must be square and of equal size")
    s, U = scipy.linalg.eigh(0.5 * (Smat + Smat.conj().T))
    keep = s > cutoff
    if not keep.any():
        raise DegenerateSubspace(f"all overlap eigenvalues below {cutoff:g}")
    X = U[:, keep] / np.sqrt(s[keep])
    Hp = X.conj().T @ Hmat @ X
    w, V = scipy.linalg.eigh(0.5 * (Hp + Hp.conj().T))
    if return_vectors:
        return w, X @ V
    return w


@dataclass
class GcimSubspace:
    """Prepared basis states with projected Hamiltonian and overlap matrices.

    ``labels[i]`` records how state ``i`` was prepared: its generator
    sequence and the fixed parameters.
    """

    n_qubits: int
    states: list[np.ndarray] = field(default_factory=list)
    labels: list[dict] = field(default_factory=list)
    Hmat: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=complex))
    Smat: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=complex))
    cutoff: float = 1e-8
    _hstates: list[np.ndarray] = field(default_factory=list, repr=False)

    def __len__(self) -> int:
        return len(self.states)

    def add(self, psi: np.ndarray, H: PauliSum, label: dict | None = None) -> None:
        """Append a state and extend both matrices by one row and column."""
        hpsi = compile_operator(H).matvec(psi)
        m = len(self.states)
        Hn = np.zeros((m + 1, m + 1), dtype=complex)
        Sn = np.zeros((m + 1, m + 1), dtype=complex)
        Hn[:m, :m], Sn[:m, :m] = self.Hmat, self.Smat
        for i, (phi, hphi) in enumerate(zip(self.states, self._hstates)):
            Hn[i, m] = np.vdot(phi, hpsi)
            Hn[m, i] = np.conj(Hn[i, m])
            Sn[i, m] = np.vdot(phi, psi)
            Sn[m, i] = np.conj(Sn[i, m])
        Hn[m, m] = np.vdot(psi, hpsi).real
        Sn[m, m] = np.vdot(psi, psi).real
        self.Hmat, self.Smat = Hn, Sn
        self.states.append(psi)
        self._hstates.append(hpsi)
        self.labels.append(label or {})

    def n_retained(self) -> int:
        return int((scipy.linalg.eigvalsh(self.Smat) > self.cutoff).sum())

    def spectrum(self) -> np.ndarray:
        return solve_gev(self.Hmat, self.Smat, self.cutoff)

    def ground(self) -> tuple[float, np.ndarray]:
        """Lowest eigenvalue and the normalized full state it represents."""
        w, F = solve_gev(self.Hmat, self.Smat, self.cutoff, return_vectors=True)
        f = F[:, 0]
        vec = np.tensordot(f, np.array(self.states), axes=1)
        return float(w[0]), vec / np.linalg.norm(vec)

    def to_dict(self) -> dict:
        def enc(M):
            return {"re": M.real.tolist(), "im": M.imag.tolist()}
        return {"n_qubits": self.n_qubits, "cutoff": self.cutoff, "labels": self.labels,
                "H": enc(self.Hmat), "S": enc(self.Smat)}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def gcim_expand(H: PauliSum, pool: OperatorPool, n_electrons: int, x: int = 1, y: int = 0,
                theta0: float | None = None, config: SolverConfig | None = None,
                ms2: int = 0, screen: str = "ground", downhill: bool = True,
                exclude_selected: bool = True) -> tuple[GcimSubspace, SolverTrace]:
    """Adaptive GCIM, optionally with ``y`` optimization rounds every ``x`` selections.

    The basis starts at the reference state and a running product ansatz
    ``|psi> = exp(t_L A_L) ... exp(t_1 A_1)|ref>`` with fixed parameters
    supplies one new basis state per iteration.

    Selection screens the pool with ``<Phi|[H, A]|Phi>``, where ``Phi`` is the
    current subspace ground state (``screen="ground"``) or the running product
    state (``screen="state"``). The largest-magnitude generator is appended
    with parameter ``-theta0 * sign(gradient)`` (``downhill``) or ``+theta0``.
    Generators already in the ansatz are skipped when ``exclude_selected``
    is set, since repeating one only rescales its angle.

    When ``y > 0``, after every ``x`` selections the ansatz parameters receive
    up to ``y`` quasi-Newton iterations on the energy; the optimized state
    joins the basis and later selections extend the optimized product.
    """
    config = config or SolverConfig()
    if x < 1 or y < 0:
        raise ValueError("need x >= 1 and y >= 0")
    if screen not in ("ground", "state"):
        raise ValueError(f"unknown screening target {screen!r}")
    if not H.is_hermitian():
        raise NonHermitianInput("GCIM needs a Hermitian Hamiltonian")
    theta0 = config.theta0 if theta0 is None else theta0
    n = H.n_qubits
    psi0 = reference_state(n, n_electrons, ms2)
    sub = GcimSubspace(n, cutoff=config.overlap_cutoff)
    sub.add(psi0, H, {"generators": [], "parameters": []})
    method = "adapt-gcim" if y == 0 else f"adapt-gcim({x},{y})"
    trace = SolverTrace(method, extras={"pool": pool.kind, "x": x, "y": y, "theta0": theta0})
    energy, phi = sub.ground()
    trace.add(IterationRecord(0, energy, note="reference"))
    gens: list[ExcitationGenerator] = []
    thetas: list[float] = []
    used: set[int] = set()
    psi = psi0
    for it in range(1, config.max_iter + 2):
        grads = pool_gradients(psi if screen == "state" else phi, H, pool.elements)
        if exclude_selected and used:
            grads[sorted(used)] = 0.0
        gnorm = float(np.linalg.norm(grads))
        trace.records[-1].gradient_norm = gnorm
        if gnorm < config.grad_tol:
            trace.converged = True
            trace.reason = "pool_exhausted" if len(used) == len(pool) else "gradient_norm"
            break
        if it > config.max_iter:
            trace.reason = "max_iter"
            break
        k = int(np.argmax(np.abs(grads)))
        used.add(k)
        step = -theta0 * np.sign(grads[k]) if downhill else theta0
        gens.append(pool[k])
        thetas.append(float(step))
        psi = kernel_for(pool[k], n).apply_exp(psi, step)
        sub.add(psi, H, {"generators": [g.label for g in gens], "parameters": list(thetas)})
        note = None
        if y > 0 and it % x == 0:
            opt, _, _ = optimize_parameters(H, psi0, gens, np.array(thetas), config, maxiter=y)
            thetas = opt.tolist()
            psi = prepare_state(psi0, gens, thetas, n)
            sub.add(psi, H, {"generators": [g.label for g in gens], "parameters": list(thetas),
                             "optimized": True})
            note = "optimized"
        energy, phi = sub.ground()
        trace.add(IterationRecord(it, energy, pool[k].label, k, float(abs(grads[k])), None,
                                  list(thetas), note))
    trace.ansatz = [g.to_dict() for g in gens]
    trace.extras["basis_size"] = len(sub)
    trace.extras["retained_directions"] = sub.n_retained()
    return sub, trace
