from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qdownfold import FermionHamiltonian, jordan_wigner, read_fcidump  # noqa: E402

DATA = Path(__file__).parent / "data"

SURROGATES = ("n2_1.0re_ccpvdz_6e6o", "n2_1.5re_ccpvdz_6e6o", "n2_2.0re_ccpvdz_6e6o")


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def reference_energies() -> dict:
    return json.loads((DATA / "reference_energies.json").read_text())


_CACHE: dict[str, tuple] = {}


def load_mapped(name: str):
    """(FermionHamiltonian, PauliSum) for a fixture in tests/data, cached per session."""
    if name not in _CACHE:
        H = read_fcidump(DATA / f"{name}.fcidump")
        _CACHE[name] = (H, jordan_wigner(H))
    return _CACHE[name]


@pytest.fixture(scope="session")
def h2_mapped():
    return load_mapped("h2_sto3g_2e2o")


@pytest.fixture(scope="session")
def lih_mapped():
    return load_mapped("lih_sto3g_2e3o")


@pytest.fixture(scope="session", params=SURROGATES)
def n2_mapped(request):
    return (request.param, *load_mapped(request.param))


def random_number_conserving(n_spatial: int, n_electrons: int, seed: int,
                             scale: float = 0.5) -> FermionHamiltonian:
    from oracles import random_spatial_integrals

    h1, h2 = random_spatial_integrals(n_spatial, np.random.default_rng(seed), scale)
    return FermionHamiltonian(n_spatial, n_electrons, 0.0, h1, h2)


def solver_circuit(name: str = "h2_sto3g_2e2o"):
    """(circuit, initial state, mapped sum) from a converged qubit-ADAPT run on a fixture."""
    from qdownfold.fermion import ExcitationGenerator
    from qdownfold.solvers import SolverConfig, ansatz_circuit, hf_occupation, qubit_adapt_vqe
    from qdownfold.statevector import init_reference

    key = f"circuit:{name}"
    if key not in _CACHE:
        H, S = load_mapped(name)
        trace = qubit_adapt_vqe(S, H.n_electrons, H.ms2, SolverConfig(grad_tol=1e-6))
        gens = [ExcitationGenerator.from_dict(d) for d in trace.ansatz]
        circuit = ansatz_circuit(gens, trace.records[-1].parameters, S.n_qubits)
        init = init_reference(S.n_qubits, hf_occupation(S.n_qubits, H.n_electrons, H.ms2))
        _CACHE[key] = (circuit, init, S)
    return _CACHE[key]


# ---------------------------------------------------------------------------
# acceptance reporting: one PASS/FAIL line per criterion in the terminal summary

CRITERIA_ORDER = ("1", "2", "2-surrogate", "3", "4", "5", "6")
_ACCEPTANCE: dict[str, list[tuple[str, bool, str]]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        detail = dict(item.user_properties).get("detail", "")
        if not rep.passed and not detail:
            detail = str(rep.longrepr.reprcrash.message) if hasattr(rep.longrepr, "reprcrash") else ""
        _ACCEPTANCE.setdefault(marker.args[0], []).append((item.name, rep.passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    rank = {c: i for i, c in enumerate(CRITERIA_ORDER)}
    for crit in sorted(_ACCEPTANCE, key=lambda c: rank.get(c, len(rank))):
        entries = _ACCEPTANCE[crit]
        ok = all(passed for _, passed, _ in entries)
        tr.write_line(f"criterion {crit}: {'PASS' if ok else 'FAIL'} ({sum(p for _, p, _ in entries)}"
                      f"/{len(entries)} checks)")
        for name, passed, detail in entries:
            tr.write_line(f"    {'ok  ' if passed else 'FAIL'} {name}: {detail}".rstrip(": "))
