from __future__ import annotations

import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SURROGATES, load_mapped, random_number_conserving
from oracles import spatial_ci_ground
from qdownfold import (
    FermionHamiltonian,
    expand_to_spin_orbitals,
    parse_fcidump,
    read_fcidump,
    validate_symmetries,
    write_fcidump,
)
from qdownfold.errors import FcidumpIndexError, InconsistentIntegral, ParseError
from qdownfold.fermion import check_number_symmetry, jordan_wigner, number_operator
from qdownfold.paulis import prune
from qdownfold.solvers import exact_ground_state
from qdownfold.statevector import expectation, init_reference

HEADER = "&FCI NORB={norb},NELEC={nelec},MS2=0,\n ORBSYM=1,1,\n ISYM=1,\n&END\n"


def fcidump(body: str, norb: int = 2, nelec: int = 2) -> str:
    return HEADER.format(norb=norb, nelec=nelec) + body


def test_core_only_file():
    H = parse_fcidump("&FCI NORB=1,NELEC=2 &END\n -1.0 0 0 0 0\n")
    assert H.e_core == -1.0
    assert H.n_spatial == 1 and H.n_electrons == 2
    assert not H.h1.any() and not H.h2.any()


def test_slash_terminator_and_fortran_exponent():
    H = parse_fcidump("&FCI NORB=2, NELEC=2,\n ORBSYM=1,\n 1,\n/\n 0.5D+00 1 1 0 0\n 2.5d-1 0 0 0 0\n")
    assert H.h1[0, 0] == 0.5 and H.e_core == 0.25
    assert H.orbital_symmetries == (1, 1)


@pytest.mark.parametrize("eightfold", [True, False])
def test_round_trip_is_identity(eightfold):
    rng = np.random.default_rng(4)
    H = random_number_conserving(3, 2, 4)
    h2 = H.h2
    if not eightfold:
        # break the (ij|kl) = (ji|kl) relation but keep Hermiticity
        extra = rng.normal(size=h2.shape) * 0.1
        extra = extra + extra.transpose(2, 3, 0, 1)
        extra = extra + extra.transpose(1, 0, 3, 2)
        h2 = h2 + extra
    H = FermionHamiltonian(3, 2, -3.25, H.h1, h2)
    back = parse_fcidump(write_fcidump(H), orbital_basis="spatial")
    assert back.provenance["two_body_symmetry"] == ("8-fold" if eightfold else "4-fold")
    np.testing.assert_allclose(back.h1, H.h1, atol=1e-12, rtol=0)
    np.testing.assert_allclose(back.h2, H.h2, atol=1e-12, rtol=0)
    assert back.e_core == H.e_core


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4))
def test_round_trip_property(seed, n):
    H = random_number_conserving(n, min(2, 2 * n), seed)
    stream = io.StringIO()
    write_fcidump(H, stream)
    back = parse_fcidump(stream.getvalue(), orbital_basis="spatial")
    np.testing.assert_allclose(back.h1, H.h1, atol=1e-12, rtol=0)
    np.testing.assert_allclose(back.h2, H.h2, atol=1e-12, rtol=0)


def test_write_to_path(tmp_path):
    H = random_number_conserving(2, 2, 1)
    write_fcidump(H, tmp_path / "x.fcidump")
    back = read_fcidump(tmp_path / "x.fcidump", orbital_basis="spatial")
    np.testing.assert_allclose(back.h2, H.h2, atol=1e-12)


def test_eightfold_replication_fills_orbit():
    H = parse_fcidump(fcidump(" 0.3 1 2 1 1\n"), orbital_basis="spatial")
    for slot in [(0, 1, 0, 0), (1, 0, 0, 0), (0, 0, 0, 1), (0, 0, 1, 0)]:
        assert H.h2[slot] == 0.3
    assert H.provenance["two_body_symmetry"] == "8-fold"


def test_fourfold_file_keeps_partners_distinct():
    # (12|12) and (21|12) lie in different Hermitian orbits
    H = parse_fcidump(fcidump(" 0.3 1 2 1 2\n 0.4 2 1 1 2\n"), orbital_basis="spatial")
    assert H.provenance["two_body_symmetry"] == "4-fold"
    assert H.h2[0, 1, 0, 1] == 0.3 and H.h2[1, 0, 1, 0] == 0.3
    assert H.h2[1, 0, 0, 1] == 0.4 and H.h2[0, 1, 1, 0] == 0.4


def test_conflicting_duplicates_raise():
    with pytest.raises(InconsistentIntegral) as err:
        parse_fcidump(fcidump(" 0.3 1 2 1 1\n 0.3 2 1 1 1\n 0.3000001 1 1 1 2\n"))
    assert err.value.lineno == 7


def test_consistent_duplicates_accepted():
    H = parse_fcidump(fcidump(" 0.3 1 2 1 1\n 0.3 1 1 1 2\n"), orbital_basis="spatial")
    assert H.h2[0, 1, 0, 0] == 0.3


@pytest.mark.parametrize("line,exc", [
    (" 0.1 3 1 0 0\n", FcidumpIndexError),
    (" 0.1 1 -1 0 0\n", FcidumpIndexError),
    (" 0.1 1 1 0\n", ParseError),
    (" abc 1 1 0 0\n", ParseError),
    (" 0.1 1 0 1 0\n", ParseError),
    (" nan 1 1 0 0\n", ParseError),
])
def test_bad_records_report_line(line, exc):
    with pytest.raises(exc) as err:
        parse_fcidump(fcidump(" 0.5 1 1 0 0\n" + line))
    assert err.value.lineno == 6
    assert "line 6" in str(err.value)


@pytest.mark.parametrize("text", [
    "",
    "NORB=2\n",
    "&FCI NORB=2,NELEC=2\n 0.1 1 1 0 0\n",
    "&FCI NELEC=2 &END\n",
    "&FCI NORB=2,NELEC=2,IUHF=1 &END\n",
])
def test_malformed_headers(text):
    with pytest.raises(ParseError):
        parse_fcidump(text)


def test_orbital_energy_records_are_kept():
    H = parse_fcidump(fcidump(" -0.5 1 0 0 0\n 0.2 2 0 0 0\n"))
    assert H.provenance["orbital_energies"] == [-0.5, 0.2]


def test_spin_expansion_one_orbital():
    eps = -0.7
    H = FermionHamiltonian(1, 2, 0.0, np.array([[eps]]), np.zeros((1,) * 4))
    S = expand_to_spin_orbitals(H)
    assert S.spin_orbital and S.h1.shape == (2, 2)
    assert S.h1[0, 0] == eps and S.h1[1, 1] == eps and S.h1[0, 1] == 0


@pytest.mark.parametrize("occupied", [(0,), (0, 1), (1, 2, 5), (0, 1, 2, 3, 4, 5)])
def test_number_operator_counts_electrons(occupied):
    N = number_operator(6)
    assert expectation(init_reference(6, occupied), N) == pytest.approx(len(occupied), abs=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_spin_expanded_ground_matches_spatial_ci(seed):
    H = random_number_conserving(2, 2, seed)
    e_spin, _ = exact_ground_state(jordan_wigner(H, eps=0.0), (2, 0))
    assert e_spin == pytest.approx(spatial_ci_ground(H.h1, H.h2, 2, 0), abs=1e-12)


def test_spin_orbital_file_detected_by_size_hint():
    H = random_number_conserving(2, 2, 7)
    spin_text = write_fcidump(expand_to_spin_orbitals(H))
    back = parse_fcidump(spin_text, expected_n_spatial=2)
    assert back.spin_orbital and back.n_spatial == 2
    assert back.provenance["orbital_basis"] == "spin-interleaved"
    assert back.provenance["detected_by"] == "expected-size"
    np.testing.assert_allclose(back.h2, expand_to_spin_orbitals(H).h2, atol=1e-12)


def test_spin_orbital_file_detected_by_structure():
    H = random_number_conserving(2, 2, 8)
    back = parse_fcidump(write_fcidump(expand_to_spin_orbitals(H)))
    assert back.provenance["orbital_basis"] == "spin-interleaved"
    assert back.provenance["detected_by"] == "structure"
    assert len(prune(jordan_wigner(back) - jordan_wigner(H), 1e-12)) == 0


def test_spin_blocked_file_is_reordered():
    H = random_number_conserving(2, 2, 9)
    S = expand_to_spin_orbitals(H)
    order = [0, 2, 1, 3]  # blocked position -> interleaved mode
    blocked = FermionHamiltonian(2, 2, 0.0, S.h1[np.ix_(order, order)],
                                 S.h2[np.ix_(order, order, order, order)], spin_orbital=True)
    back = parse_fcidump(write_fcidump(blocked))
    assert back.provenance["orbital_basis"] == "spin-blocked"
    np.testing.assert_allclose(back.h2, S.h2, atol=1e-12)


def test_spatial_file_stays_spatial(data_dir):
    H = read_fcidump(data_dir / "h2_sto3g_2e2o.fcidump")
    assert not H.spin_orbital and H.provenance["orbital_basis"] == "spatial"


def test_asymmetric_one_body_flagged():
    h1 = np.array([[0.0, 0.1], [0.2, 0.0]])
    H = FermionHamiltonian(2, 2, 0.0, h1, np.zeros((2,) * 4))
    report = validate_symmetries(H)
    assert not report.hermitian
    assert report.max_violation == pytest.approx(0.1)
    assert report.worst_entry[0] == "h1"


def test_pair_creation_flagged():
    H = random_number_conserving(2, 2, 3).with_extra_terms([(0.1, ((0, True), (1, True)))])
    report = validate_symmetries(H)
    assert not report.number_conserving


@pytest.mark.parametrize("name", ("h2_sto3g_2e2o", "lih_sto3g_2e3o") + SURROGATES)
def test_corpus_files_are_symmetric(name, data_dir):
    H = read_fcidump(data_dir / f"{name}.fcidump")
    report = validate_symmetries(H)
    assert report.hermitian and report.number_conserving
    assert check_number_symmetry(load_mapped(name)[1])


@pytest.mark.parametrize("name", ("h2_sto3g_2e2o", "lih_sto3g_2e3o") + SURROGATES)
def test_corpus_ground_energy_matches_fixture_casci(name, reference_energies):
    H, S = load_mapped(name)
    e, _ = exact_ground_state(S, (H.n_electrons, H.ms2))
    assert e == pytest.approx(reference_energies[name]["casci_energy"], abs=1e-8)


def test_constructor_validates_shapes():
    with pytest.raises(ValueError):
        FermionHamiltonian(2, 2, 0.0, np.zeros((3, 3)), np.zeros((2,) * 4))
    with pytest.raises(ValueError):
        FermionHamiltonian(1, 3, 0.0, np.zeros((1, 1)), np.zeros((1,) * 4))
