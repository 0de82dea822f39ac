from __future__ import annotations

from itertools import combinations, permutations

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_number_conserving
from oracles import jw_annihilator, pauli_dense, spin_orbital_hamiltonian_dense
from qdownfold import FermionHamiltonian, expand_to_spin_orbitals
from qdownfold.fermion import (
    ExcitationGenerator,
    check_number_symmetry,
    check_sz_symmetry,
    fermion_monomial,
    jordan_wigner,
    jw_excitation_evolution,
    ladder,
    number_operator,
)
from qdownfold.paulis import PauliSum, commutator, prune

THETAS = (0.3, -0.3, 1.7, -1.7)


def anticommutator(A: PauliSum, B: PauliSum) -> PauliSum:
    return prune(A * B + B * A, 0.0)


@pytest.mark.parametrize("p", range(6))
@pytest.mark.parametrize("q", range(6))
def test_canonical_anticommutation(p, q):
    n = 6
    a_p, ad_q, a_q = ladder(p, False, n), ladder(q, True, n), ladder(q, False, n)
    expect = PauliSum.identity(n) if p == q else PauliSum(n)
    assert anticommutator(a_p, ad_q) == expect
    assert len(anticommutator(a_p, a_q)) == 0


@pytest.mark.parametrize("p", range(5))
def test_ladder_matches_dense_oracle(p):
    n = 5
    np.testing.assert_allclose(ladder(p, False, n).to_matrix(), jw_annihilator(p, n), atol=1e-15)
    np.testing.assert_allclose(ladder(p, True, n).to_matrix(), jw_annihilator(p, n).conj().T,
                               atol=1e-15)


def test_number_operator_on_mode_zero():
    out = fermion_monomial([(0, True), (0, False)], 3)
    assert out == PauliSum.from_labels([(0.5, "III"), (-0.5, "IIZ")])


def test_hopping_term():
    h = 0.37
    H = FermionHamiltonian(1, 1, 0.0, np.array([[0, h], [h, 0]], float), np.zeros((2,) * 4),
                           spin_orbital=True)
    S = jordan_wigner(H)
    assert S == PauliSum.from_labels([(h / 2, "XX"), (h / 2, "YY")])
    dense = h * (jw_annihilator(0, 2).T @ jw_annihilator(1, 2)
                 + jw_annihilator(1, 2).T @ jw_annihilator(0, 2))
    np.testing.assert_allclose(S.to_matrix(), dense, atol=1e-15)


@pytest.mark.parametrize("seed", range(4))
def test_mapping_matches_kron_oracle(seed):
    H = random_number_conserving(2, 2, seed)
    Hs = expand_to_spin_orbitals(H)
    S = jordan_wigner(H, eps=0.0)
    np.testing.assert_allclose(S.to_matrix(), spin_orbital_hamiltonian_dense(Hs.h1, Hs.h2),
                               atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 4))
def test_hermitian_input_gives_real_coefficients(seed, n_spatial):
    S = jordan_wigner(random_number_conserving(n_spatial, 2, seed), eps=0.0)
    coeffs = np.array([complex(t.coeff) for t in S])
    assert np.all(np.abs(coeffs.imag) <= 1e-10)
    assert S.is_hermitian()


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_number_conserving_input_commutes_with_n(seed):
    S = jordan_wigner(random_number_conserving(3, 2, seed))
    assert check_number_symmetry(S)
    assert check_sz_symmetry(S)
    assert len(prune(commutator(S, number_operator(S.n_qubits)), 1e-10)) == 0


def test_pair_creation_breaks_number_symmetry():
    H = random_number_conserving(2, 2, 0).with_extra_terms([(0.2, ((0, True), (1, True)))])
    S = jordan_wigner(H)
    assert not check_number_symmetry(S)


def test_pruned_vs_unpruned_ground_energy_within_discarded_weight():
    H = random_number_conserving(3, 2, 5, scale=0.05)
    full = jordan_wigner(H, eps=0.0)
    cut = jordan_wigner(H, eps=2e-3)
    assert cut.discarded_weight > 0
    e_full = np.linalg.eigvalsh(full.to_matrix())[0]
    e_cut = np.linalg.eigvalsh(cut.to_matrix())[0]
    assert abs(e_full - e_cut) <= cut.discarded_weight


# ---------------------------------------------------------------------------
# generators and their exact exponentials


def dense_generator(idx: tuple[int, ...], n: int) -> np.ndarray:
    a = [jw_annihilator(p, n) for p in range(n)]
    ad = [m.conj().T for m in a]
    if len(idx) == 2:
        p, q = idx
        T = ad[p] @ a[q]
    else:
        p, r, q, s = idx
        T = ad[p] @ ad[r] @ a[q] @ a[s]
    return T - T.conj().T


def rotations_dense(rotations, n: int, block: np.ndarray | None = None) -> np.ndarray:
    """Product of dense ``exp(-i phi/2 P)`` applied to ``block`` (identity by default)."""
    U = np.eye(1 << n, dtype=complex) if block is None else block.astype(complex)
    for P, phi in rotations:
        U = np.cos(phi / 2) * U - 1j * np.sin(phi / 2) * (pauli_dense(P.label) @ U)
    return U


def _all_generators(n: int):
    for q, p in permutations(range(n), 2):
        yield (p, q)
    for created in combinations(range(n), 2):
        rest = [m for m in range(n) if m not in created]
        for removed in combinations(rest, 2):
            yield (created[0], created[1], removed[0], removed[1])


@pytest.mark.parametrize("n", [4, 6, 8])
def test_excitation_evolution_matches_dense_exponential(n):
    block = np.random.default_rng(n).normal(size=(1 << n, 6))
    checked = 0
    for idx in _all_generators(n):
        A = dense_generator(idx, n)
        # A = iK with K Hermitian, so exp(theta A) comes from one eigendecomposition
        w, V = scipy.linalg.eigh(-1j * A)
        for theta in THETAS:
            expect = (V * np.exp(1j * theta * w)) @ (V.conj().T @ block)
            rot = jw_excitation_evolution(ExcitationGenerator(idx), theta, n)
            got = rotations_dense(rot, n, block)
            np.testing.assert_allclose(got, expect, atol=1e-10, err_msg=str((idx, theta)))
            checked += 1
    assert checked == 4 * (n * (n - 1) + len(list(combinations(range(n), 2))) *
                           len(list(combinations(range(n - 2), 2))))


def test_single_excitation_strings():
    rot = jw_excitation_evolution(ExcitationGenerator((1, 0)), 0.4, 2)
    assert {P.label for P, _ in rot} == {"YX", "XY"}
    assert all(abs(phi) == pytest.approx(0.4) for _, phi in rot)
    assert sorted(np.sign(phi) for _, phi in rot) == [-1, 1]


def test_double_excitation_strings():
    rot = jw_excitation_evolution(ExcitationGenerator((3, 2, 1, 0)), 0.8, 4)
    labels = {P.label for P, _ in rot}
    expect = {"XXXY", "XXYX", "XYXX", "YXXX", "YYYX", "YYXY", "YXYY", "XYYY"}
    assert labels == expect
    assert all(abs(phi) == pytest.approx(0.2) for _, phi in rot)


def test_zero_angle_is_identity():
    for idx in [(1, 0), (3, 2, 1, 0)]:
        U = rotations_dense(jw_excitation_evolution(ExcitationGenerator(idx), 0.0, 4), 4)
        np.testing.assert_allclose(U, np.eye(16), atol=0)


@pytest.mark.parametrize("idx", [(1, 1), (0, 2, 0, 1), (2, 5)])
def test_bad_indices_raise(idx):
    with pytest.raises(IndexError):
        ExcitationGenerator(idx).to_pauli_sum(4)


@pytest.mark.parametrize("idx", [(3, 0), (5, 2, 1, 0), (4, 3, 2, 1)])
def test_fermionic_generator_is_antihermitian(idx):
    A = ExcitationGenerator(idx).to_pauli_sum(6)
    assert A.adjoint() == -A
    np.testing.assert_allclose(A.to_matrix(), dense_generator(idx, 6), atol=1e-14)


def test_generator_wrong_arity():
    with pytest.raises(ValueError):
        ExcitationGenerator((1, 2, 3))


def test_generator_dict_round_trip():
    from qdownfold.paulis import PauliTerm

    for g in [ExcitationGenerator((3, 1)), ExcitationGenerator((5, 4, 1, 0)),
              ExcitationGenerator(pauli=PauliTerm.from_label("XIYZ"))]:
        assert ExcitationGenerator.from_dict(g.to_dict()) == g
