"""ADAPT-VQE, qubit-ADAPT-VQE and single-step UCCGSD-VQE."""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from ..errors import NonHermitianInput, SolverError
from ..fermion import ExcitationGenerator
from ..paulis import PauliSum
from ..statevector import State, compile_operator, init_reference
from .ansatz import energy_and_gradient, kernel_for, prepare_state
from .exact import hf_occupation
from .pools import OperatorPool, build_pool
from .trace import IterationRecord, SolverConfig, SolverTrace

__all__ = [
    "adapt_gradient",
    "pool_gradients",
    "optimize_parameters",
    "adapt_vqe",
    "qubit_adapt_vqe",
    "uccgsd_vqe",
    "reference_state",
]

log = logging.getLogger(__name__)


def reference_state(n_qubits: int, n_electrons: int, ms2: int = 0) -> np.ndarray:
    return init_reference(n_qubits, hf_occupation(n_qubits, n_electrons, ms2)).amplitudes


def _amps(state) -> np.ndarray:
    return state.amplitudes if isinstance(state, State) else np.asarray(state, dtype=complex)


def adapt_gradient(state, H: PauliSum, g: ExcitationGenerator) -> float:
    """``<psi|[H, A]|psi>``, the slope of the energy along ``exp(theta A) psi`` at 0."""
    if not H.is_hermitian():
        raise NonHermitianInput("gradient screening needs a Hermitian Hamiltonian")
    psi = _amps(state)
    lam = compile_operator(H).matvec(psi)
    return kernel_for(g, H.n_qubits).gradient(lam, psi)


def pool_gradients(psi: np.ndarray, H: PauliSum, pool: Sequence[ExcitationGenerator]) -> np.ndarray:
    lam = compile_operator(H).matvec(psi)
    n = H.n_qubits
    return np.array([kernel_for(g, n).gradient(lam, psi) for g in pool])


def optimize_parameters(H: PauliSum, psi0: np.ndarray, gens: Sequence[ExcitationGenerator],
                        theta_init: np.ndarray, config: SolverConfig, maxiter: int | None = None,
                        callback=None) -> tuple[np.ndarray, float, dict]:
    """BFGS on the analytic gradient.

    A run counts as failed when it produces non-finite values, or stops
    unsuccessfully with gradient infinity-norm above ``config.accept_gtol``.
    A failed run is retried once from a perturbed start; a second failure
    raises :class:`SolverError`. A capped ``maxiter`` run is never a failure.
    """
    capped = maxiter is not None

    def fun(t):
        return energy_and_gradient(H, psi0, gens, t)

    def attempt(x0):
        res = minimize(fun, x0, jac=True, method="BFGS", callback=callback,
                       options={"gtol": config.optimizer_gtol,
                                "maxiter": maxiter if capped else config.optimizer_maxiter})
        finite = np.all(np.isfinite(res.x)) and np.isfinite(res.fun)
        gnorm = float(np.max(np.abs(res.jac))) if len(res.jac) else 0.0
        ok = finite and (res.success or capped or gnorm <= config.accept_gtol)
        return res, ok, gnorm

    x0 = np.asarray(theta_init, dtype=float)
    res, ok, gnorm = attempt(x0)
    info = {"nfev": int(res.nfev), "retried": False, "message": str(res.message)}
    if not ok:
        log.warning("optimizer failed (%s, |g|=%.2e); retrying from a perturbed start",
                    res.message, gnorm)
        rng = np.random.default_rng(config.seed)
        res2, ok, gnorm = attempt(x0 + config.retry_scale * rng.standard_normal(x0.size))
        info = {"nfev": int(res.nfev + res2.nfev), "retried": True, "message": str(res2.message)}
        if not ok:
            raise SolverError(f"optimizer failed twice: {res2.message} (|g|={gnorm:.2e})")
        if res2.fun > res.fun and np.isfinite(res.fun):
            res2 = res
        res = res2
    return np.asarray(res.x, dtype=float), float(res.fun), info


def _adapt_loop(H: PauliSum, pool: OperatorPool, n_electrons: int, ms2: int,
                config: SolverConfig, method: str) -> SolverTrace:
    if not H.is_hermitian():
        raise NonHermitianInput("ADAPT needs a Hermitian Hamiltonian")
    if len(pool) == 0:
        raise ValueError("operator pool is empty")
    n = H.n_qubits
    psi0 = reference_state(n, n_electrons, ms2)
    op = compile_operator(H)
    e0 = float(np.real(np.vdot(psi0, op.matvec(psi0))))
    trace = SolverTrace(method, extras={"pool": pool.kind, "pool_size": len(pool)})
    trace.add(IterationRecord(0, e0, note="reference"))
    gens: list[ExcitationGenerator] = []
    thetas = np.zeros(0)
    psi = psi0
    for it in range(1, config.max_iter + 2):
        grads = pool_gradients(psi, H, pool.elements)
        gnorm = float(np.linalg.norm(grads))
        trace.records[-1].gradient_norm = gnorm
        if gnorm < config.grad_tol:
            trace.converged, trace.reason = True, "gradient_norm"
            break
        if it > config.max_iter:
            trace.reason = "max_iter"
            break
        k = int(np.argmax(np.abs(grads)))  # first maximal index wins ties
        gens.append(pool[k])
        try:
            thetas, energy, info = optimize_parameters(H, psi0, gens, np.append(thetas, 0.0), config)
        except SolverError as exc:
            trace.reason = "optimizer_failure"
            exc.trace = trace
            raise
        psi = prepare_state(psi0, gens, thetas, n)
        trace.add(IterationRecord(it, energy, pool[k].label, k, float(abs(grads[k])), None,
                                  thetas.tolist(), "retried" if info["retried"] else None))
        trace.ansatz = [g.to_dict() for g in gens]
        log.debug("%s iteration %d: %s E=%.10f", method, it, pool[k].label, energy)
    return trace


def adapt_vqe(H: PauliSum, pool: OperatorPool, n_electrons: int, ms2: int = 0,
              config: SolverConfig | None = None) -> SolverTrace:
    """Grow ``exp(theta_L A_L) ... exp(theta_1 A_1)|HF>`` one generator per iteration.

    Each iteration screens the pool gradients, stops once their 2-norm is
    below ``grad_tol``, and otherwise appends the largest-magnitude element
    and reoptimizes every parameter warm-started from the previous optimum.
    Record 0 holds the reference energy.
    """
    return _adapt_loop(H, pool, n_electrons, ms2, config or SolverConfig(), "adapt-vqe")


def qubit_adapt_vqe(H: PauliSum, n_electrons: int, ms2: int = 0,
                    config: SolverConfig | None = None,
                    pool: OperatorPool | None = None) -> SolverTrace:
    """ADAPT over single Pauli-string rotations from the qubit-minimal pool."""
    pool = pool or build_pool("qubit-minimal", H.n_qubits, n_electrons, ms2)
    return _adapt_loop(H, pool, n_electrons, ms2, config or SolverConfig(), "qubit-adapt-vqe")


def uccgsd_vqe(H: PauliSum, n_electrons: int, ms2: int = 0,
               config: SolverConfig | None = None,
               pool: OperatorPool | None = None) -> SolverTrace:
    """One first-order Trotter step of the GSD cluster operator, optimized jointly from zero."""
    config = config or SolverConfig()
    if not H.is_hermitian():
        raise NonHermitianInput("VQE needs a Hermitian Hamiltonian")
    n = H.n_qubits
    pool = pool or build_pool("fermionic-GSD", n, n_electrons, ms2)
    gens = list(pool.elements)
    psi0 = reference_state(n, n_electrons, ms2)
    trace = SolverTrace("uccgsd-vqe", extras={"pool": pool.kind, "n_parameters": len(gens)})
    e0, _ = energy_and_gradient(H, psi0, gens, np.zeros(len(gens)))
    trace.add(IterationRecord(0, e0, note="reference"))
    step = [0]

    def cb(xk):
        step[0] += 1
        e, g = energy_and_gradient(H, psi0, gens, xk)
        trace.add(IterationRecord(step[0], e, gradient_norm=float(np.linalg.norm(g))))

    try:
        thetas, energy, info = optimize_parameters(H, psi0, gens, np.zeros(len(gens)), config,
                                                   callback=cb)
    except SolverError as exc:
        trace.reason = "optimizer_failure"
        exc.trace = trace
        raise
    trace.add(IterationRecord(step[0] + 1, energy, parameters=thetas.tolist(), note="final"))
    trace.converged, trace.reason = True, "optimizer"
    trace.ansatz = [g.to_dict() for g in gens]
    trace.extras["nfev"] = info["nfev"]
    return trace
