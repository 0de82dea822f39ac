"""Regenerate the molecular test fixtures in tests/data.

Needs pyscf, which is a development-time tool only; the package never
imports it. Each system is an RHF calculation followed by a CASCI in a small
active space. The active-space integrals go to FCIDUMP through pyscf's own
writer and the CASCI energy becomes the reference value.

    python tools/make_fixtures.py
"""

from __future__ import annotations

import json
from pathlib import Path

from pyscf import ao2mo, gto, mcscf, scf
from pyscf.tools import fcidump

OUT = Path(__file__).resolve().parent.parent / "tests" / "data"

# experimental N2 bond length in angstrom
N2_RE = 1.0977

SYSTEMS = {
    "n2_1.0re_ccpvdz_6e6o": dict(atom=f"N 0 0 0; N 0 0 {1.0 * N2_RE}", basis="cc-pvdz", cas=(6, 6)),
    "n2_1.5re_ccpvdz_6e6o": dict(atom=f"N 0 0 0; N 0 0 {1.5 * N2_RE}", basis="cc-pvdz", cas=(6, 6)),
    "n2_2.0re_ccpvdz_6e6o": dict(atom=f"N 0 0 0; N 0 0 {2.0 * N2_RE}", basis="cc-pvdz", cas=(6, 6)),
    "h2_sto3g_2e2o": dict(atom="H 0 0 0; H 0 0 0.7414", basis="sto-3g", cas=(2, 2)),
    "lih_sto3g_2e3o": dict(atom="Li 0 0 0; H 0 0 1.5949", basis="sto-3g", cas=(2, 3)),
}


def build(name: str, atom: str, basis: str, cas: tuple[int, int]) -> dict:
    mol = gto.M(atom=atom, basis=basis, verbose=0)
    mf = scf.RHF(mol)
    mf.conv_tol = 1e-12
    mf.kernel()
    nelec, norb = cas
    mc = mcscf.CASCI(mf, norb, nelec)
    mc.fcisolver.conv_tol = 1e-12
    mc.kernel()
    h1, ecore = mc.get_h1eff()
    h2 = ao2mo.restore(8, mc.get_h2eff(), norb)
    fcidump.from_integrals(str(OUT / f"{name}.fcidump"), h1, h2, norb, nelec, nuc=ecore,
                           ms=0, tol=1e-14)
    return {"atom": atom, "basis": basis, "n_electrons": nelec, "n_orbitals": norb,
            "rhf_energy": float(mf.e_tot), "casci_energy": float(mc.e_tot)}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    refs = {name: build(name, **system) for name, system in SYSTEMS.items()}
    (OUT / "reference_energies.json").write_text(json.dumps(refs, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
