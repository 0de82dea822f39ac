"""Fast kernels for products of generator exponentials.

Every generator used here has an image of the form ``A = D X^x`` with a
single X-mask ``x`` and a diagonal ``D``, and ``A^2 = -Pi`` for a projector
``Pi`` (the states ``A`` connects). Hence

    exp(theta A) = 1 - Pi + cos(theta) Pi + sin(theta) A,

so one exponential costs one gather over the support of ``Pi``.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Sequence

import numpy as np

from ..fermion import ExcitationGenerator
from ..paulis import PauliSum
from ..statevector import compile_operator

__all__ = ["GeneratorKernel", "kernel_for", "prepare_state", "energy_and_gradient", "ansatz_circuit"]


class GeneratorKernel:
    __slots__ = ("n_qubits", "x", "support", "src", "diag", "full")

    def __init__(self, g: ExcitationGenerator, n_qubits: int):
        A = g.to_pauli_sum(n_qubits)
        xs = {t.x for t in A}
        if len(xs) != 1:
            raise ValueError(f"generator {g.label} spans several X-masks")
        self.n_qubits = n_qubits
        self.x = xs.pop()
        d = compile_operator(A).diagonals[0]
        nz = np.abs(d) > 1e-12
        self.full = bool(nz.all())
        self.support = np.flatnonzero(nz)
        self.src = self.support ^ self.x
        self.diag = d[self.support]
        if not np.allclose(self.diag * d[self.src], -1.0, atol=1e-12):
            raise ValueError(f"generator {g.label} does not square to a negative projector")

    def apply_generator(self, psi: np.ndarray) -> np.ndarray:
        out = np.zeros_like(psi)
        out[self.support] = self.diag * psi[self.src]
        return out

    def apply_exp(self, psi: np.ndarray, theta: float) -> np.ndarray:
        """Return ``exp(theta A) psi`` as a new array."""
        if theta == 0:
            return psi.copy()
        c, s = np.cos(theta), np.sin(theta)
        if self.full:
            return c * psi + s * (self.diag * psi[self.src])
        out = psi.copy()
        out[self.support] = c * psi[self.support] + s * self.diag * psi[self.src]
        return out

    def gradient(self, bra: np.ndarray, psi: np.ndarray) -> float:
        """``2 Re <bra| A |psi>``."""
        return 2.0 * float(np.real(np.vdot(bra[self.support], self.diag * psi[self.src])))


@lru_cache(maxsize=16384)
def kernel_for(g: ExcitationGenerator, n_qubits: int) -> GeneratorKernel:
    return GeneratorKernel(g, n_qubits)


def prepare_state(psi0: np.ndarray, gens: Sequence[ExcitationGenerator], thetas: Sequence[float],
                  n_qubits: int) -> np.ndarray:
    """``exp(theta_L A_L) ... exp(theta_1 A_1) psi0`` (first generator acts first)."""
    psi = np.asarray(psi0, dtype=complex)
    for g, t in zip(gens, thetas):
        psi = kernel_for(g, n_qubits).apply_exp(psi, float(t))
    return psi


def energy_and_gradient(H: PauliSum, psi0: np.ndarray, gens: Sequence[ExcitationGenerator],
                        thetas: Sequence[float]) -> tuple[float, np.ndarray]:
    """Energy of the product state and its exact parameter gradient.

    Reverse accumulation: with ``lam = H psi`` carried back through the
    inverse exponentials, ``dE/dtheta_k = 2 Re <lam_k| A_k |psi_k>``.
    """
    n = H.n_qubits
    op = compile_operator(H)
    kernels = [kernel_for(g, n) for g in gens]
    psi = prepare_state(psi0, gens, thetas, n)
    lam = op.matvec(psi)
    energy = float(np.real(np.vdot(psi, lam)))
    grad = np.zeros(len(kernels))
    for k in range(len(kernels) - 1, -1, -1):
        ker = kernels[k]
        grad[k] = ker.gradient(lam, psi)
        t = -float(thetas[k])
        psi = ker.apply_exp(psi, t)
        lam = ker.apply_exp(lam, t)
    return energy, grad


def ansatz_circuit(gens: Sequence[ExcitationGenerator], thetas: Sequence[float], n_qubits: int):
    """The product ansatz as a Pauli-rotation circuit (exact, no Trotter error per element)."""
    from ..fermion import jw_excitation_evolution
    from ..statevector import Circuit

    rotations = []
    for g, t in zip(gens, thetas):
        rotations.extend(jw_excitation_evolution(g, float(t), n_qubits))
    return Circuit(rotations)
