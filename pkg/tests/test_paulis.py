from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import pauli_dense
from qdownfold.errors import DimensionError
from qdownfold.paulis import PauliSum, PauliTerm, commutator, pauli_multiply, prune

labels = st.integers(1, 6).flatmap(
    lambda n: st.tuples(st.text("IXYZ", min_size=n, max_size=n),
                        st.text("IXYZ", min_size=n, max_size=n)))


def term(label, c=1.0):
    return PauliTerm.from_label(label, c)


@pytest.mark.parametrize("a,b,coeff,expect", [
    ("X", "X", 1, "I"),
    ("Y", "Y", 1, "I"),
    ("Z", "Z", 1, "I"),
    ("X", "Y", 1j, "Z"),
    ("Y", "Z", 1j, "X"),
    ("Z", "X", 1j, "Y"),
    ("X", "Z", -1j, "Y"),
    ("Z", "Y", -1j, "X"),
    ("Y", "X", -1j, "Z"),
])
def test_single_qubit_table(a, b, coeff, expect):
    out = pauli_multiply(term(a), term(b))
    assert out.label == expect
    assert out.coeff == pytest.approx(coeff)


def test_label_places_qubit_zero_rightmost():
    t = term("XIYZ")
    assert t.letter(0) == "Z" and t.letter(1) == "Y" and t.letter(3) == "X"
    assert t.weight == 3 and t.n_y == 1
    assert t.label == "XIYZ"


def test_bad_letter_rejected():
    with pytest.raises(ValueError):
        term("XQ")


def test_to_matrix_matches_kron_oracle():
    for label in ["XIYZ", "YY", "ZIIX", "I"]:
        np.testing.assert_allclose(term(label).to_matrix(), pauli_dense(label), atol=0)


@settings(max_examples=200, deadline=None)
@given(labels, st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False))
def test_multiply_matches_dense_product(pair, c):
    a, b = term(pair[0], c), term(pair[1])
    out = pauli_multiply(a, b)
    np.testing.assert_allclose(out.to_matrix(), c * pauli_dense(pair[0]) @ pauli_dense(pair[1]),
                               atol=1e-12)


def test_random_five_qubit_pair_dense():
    rng = np.random.default_rng(11)
    for _ in range(20):
        la, lb = ("".join(rng.choice(list("IXYZ"), 5)) for _ in range(2))
        dense = pauli_dense(la) @ pauli_dense(lb)
        np.testing.assert_allclose(pauli_multiply(term(la), term(lb)).to_matrix(), dense, atol=1e-14)


@settings(max_examples=150, deadline=None)
@given(labels)
def test_commutes_with_agrees_with_dense(pair):
    A, B = pauli_dense(pair[0]), pauli_dense(pair[1])
    assert term(pair[0]).commutes_with(term(pair[1])) == np.allclose(A @ B, B @ A)


def test_mismatched_sizes_raise():
    with pytest.raises(DimensionError):
        pauli_multiply(term("X"), term("XX"))


def test_commutator_examples():
    z0, z1 = PauliSum.from_labels([(1.0, "IZ")]), PauliSum.from_labels([(1.0, "ZI")])
    assert len(commutator(z0, z1)) == 0
    x0, zz = PauliSum.from_labels([(1.0, "X")]), PauliSum.from_labels([(1.0, "Z")])
    out = commutator(x0, zz)
    assert out == PauliSum.from_labels([(-2j, "Y")])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_sum_algebra_matches_dense(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))

    def rand_sum():
        k = int(rng.integers(1, 5))
        return PauliSum.from_labels([(complex(rng.normal(), rng.normal()),
                                      "".join(rng.choice(list("IXYZ"), n))) for _ in range(k)])

    A, B = rand_sum(), rand_sum()
    dA, dB = A.to_matrix(), B.to_matrix()
    np.testing.assert_allclose((A * B).to_matrix(), dA @ dB, atol=1e-12)
    np.testing.assert_allclose((A + B).to_matrix(), dA + dB, atol=1e-12)
    np.testing.assert_allclose(commutator(A, B).to_matrix(), dA @ dB - dB @ dA, atol=1e-12)
    np.testing.assert_allclose(A.adjoint().to_matrix(), dA.conj().T, atol=1e-12)


def test_merging_is_eager_and_cancellation_empties():
    S = PauliSum.from_labels([(1.0, "XZ"), (-1.0, "XZ")])
    assert len(S) == 0 and not S
    S = PauliSum.from_labels([(0.5, "XZ"), (0.25, "XZ")])
    assert len(S) == 1 and S.terms[term("XZ").key] == pytest.approx(0.75)


def test_identity_term_has_empty_masks():
    S = PauliSum.identity(3, 2.0)
    (t,) = list(S)
    assert (t.x, t.z) == (0, 0) and t.is_identity
    assert S.constant == 2.0


def test_prune_examples():
    S = PauliSum.from_labels([(1.0, "Z"), (1e-14, "X")])
    assert prune(S, 0.0) == S
    out = prune(S, 1e-12)
    assert out == PauliSum.from_labels([(1.0, "Z")])
    assert out.discarded_weight == pytest.approx(1e-14)
    with pytest.raises(ValueError):
        prune(S, -1.0)


def test_hermiticity_flag():
    assert PauliSum.from_labels([(0.3, "XY"), (-1.0, "ZI")]).is_hermitian()
    assert not PauliSum.from_labels([(0.3j, "XY")]).is_hermitian()


@pytest.mark.parametrize("fmt", ["text", "json"])
def test_serialization_round_trip(fmt):
    S = PauliSum.from_labels([(0.125, "XIYZ"), (-2.5, "IIII"), (1e-3 + 2j, "ZZZZ")])
    if fmt == "text":
        back = PauliSum.from_text(S.to_text())
    else:
        back = PauliSum.from_json(S.to_json())
    assert back == S
    assert back.n_qubits == 4
