"""FCIDUMP ingestion and the in-memory effective Hamiltonian.

Two-body integrals are stored in chemist notation ``(pq|rs)`` so that the
second-quantized operator reads::

    H = e_core + sum_pq h1[p,q] a+_p a_q + 1/2 sum_pqrs h2[p,q,r,s] a+_p a+_r a_s a_q

Spin orbitals are interleaved: spatial orbital ``k`` gives spin orbitals
``2k`` (alpha) and ``2k+1`` (beta).
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

from .errors import FcidumpIndexError, InconsistentIntegral, ParseError

__all__ = [
    "FermionHamiltonian",
    "SymmetryReport",
    "parse_fcidump",
    "read_fcidump",
    "write_fcidump",
    "expand_to_spin_orbitals",
    "validate_symmetries",
]

CONFLICT_TOL = 1e-10
WRITE_SYMMETRY_TOL = 1e-13


@dataclass(frozen=True, eq=False)
class FermionHamiltonian:
    """Scalar, one- and two-body parts of an active-space Hamiltonian.

    ``h1`` and ``h2`` are indexed by spatial orbitals unless ``spin_orbital``
    is set, in which case they run over ``2 * n_spatial`` interleaved spin
    orbitals. ``extra_terms`` holds arbitrary additional fermionic monomials
    as ``(coeff, ((mode, is_creation), ...))``; it is empty for anything read
    from a file and exists so that symmetry diagnostics can be exercised.
    """

    n_spatial: int
    n_electrons: int
    e_core: float
    h1: np.ndarray
    h2: np.ndarray
    ms2: int = 0
    spin_orbital: bool = False
    orbital_symmetries: tuple[int, ...] = ()
    extra_terms: tuple = ()
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.n_modes
        if self.h1.shape != (n, n) or self.h2.shape != (n, n, n, n):
            raise ValueError(
                f"integral shapes {self.h1.shape}, {self.h2.shape} do not match {n} orbitals"
            )
        if not (np.all(np.isfinite(self.h1)) and np.all(np.isfinite(self.h2))
                and np.isfinite(self.e_core)):
            raise ValueError("non-finite integral")
        if self.n_electrons > 2 * self.n_spatial or self.n_electrons < 0:
            raise ValueError(
                f"{self.n_electrons} electrons do not fit in {self.n_spatial} spatial orbitals"
            )

    @property
    def n_modes(self) -> int:
        """Number of orbitals the integral arrays are indexed by."""
        return 2 * self.n_spatial if self.spin_orbital else self.n_spatial

    @property
    def n_qubits(self) -> int:
        return 2 * self.n_spatial

    def with_extra_terms(self, terms: Iterable) -> "FermionHamiltonian":
        return replace(self, extra_terms=tuple(self.extra_terms) + tuple(terms))


# --------------------------------------------------------------------------
# parsing

_KEY_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=")


def _parse_namelist(lines: list[str]) -> tuple[dict, int]:
    """Return (namelist dict, index of first body line)."""
    start = None
    for idx, line in enumerate(lines):
        if line.strip():
            start = idx
            break
    if start is None:
        raise ParseError("empty input", 1)
    if not lines[start].lstrip().upper().startswith("&FCI"):
        raise ParseError("expected namelist header starting with '&FCI'", start + 1)

    chunks = []
    end = None
    for idx in range(start, len(lines)):
        text = lines[idx]
        if idx == start:
            text = text.lstrip()[4:]
        upper = text.upper()
        stop = None
        for marker in ("&END", "/"):
            pos = upper.find(marker)
            if pos >= 0 and (stop is None or pos < stop):
                stop = pos
        if stop is not None:
            chunks.append((idx, text[:stop]))
            end = idx
            break
        chunks.append((idx, text))
    if end is None:
        raise ParseError("namelist header is not terminated by '&END' or '/'", len(lines))

    entries: dict[str, list] = {}
    for idx, text in chunks:
        pieces = _KEY_RE.split(text)
        # pieces = [lead, key1, val1, key2, val2, ...]
        if pieces[0].strip(" ,\t\r\n"):
            # continuation of the previous key's list (e.g. ORBSYM wrapping)
            if not entries:
                raise ParseError(f"unexpected text {pieces[0].strip()!r} in header", idx + 1)
            last = next(reversed(entries))
            entries[last].extend(_parse_values(pieces[0], idx + 1))
        for key, val in zip(pieces[1::2], pieces[2::2]):
            entries[key.upper()] = _parse_values(val, idx + 1)

    for required in ("NORB", "NELEC"):
        if required not in entries or len(entries[required]) != 1:
            raise ParseError(f"namelist is missing a scalar {required}", start + 1)
    return entries, end + 1


def _parse_values(text: str, lineno: int) -> list:
    out = []
    for tok in re.split(r"[,\s]+", text.strip()):
        if not tok:
            continue
        try:
            out.append(int(tok))
        except ValueError:
            try:
                out.append(float(tok.replace("D", "E").replace("d", "e")))
            except ValueError:
                raise ParseError(f"cannot parse namelist value {tok!r}", lineno) from None
    return out


def _hermitian_orbit(i, j, k, l):
    return {(i, j, k, l), (k, l, i, j), (j, i, l, k), (l, k, j, i)}


def _real_orbit(i, j, k, l):
    """The full 8-fold orbit valid for real orbitals."""
    return _hermitian_orbit(i, j, k, l) | _hermitian_orbit(j, i, k, l)


def _orbit_key(i, j, k, l):
    return min(_hermitian_orbit(i, j, k, l))


def parse_fcidump(
    text: str | TextIO,
    *,
    orbital_basis: str = "auto",
    expected_n_spatial: int | None = None,
) -> FermionHamiltonian:
    """Parse FCIDUMP text into a :class:`FermionHamiltonian`.

    Args:
        text: file contents or an open text stream.
        orbital_basis: ``"auto"``, ``"spatial"`` or ``"spin"``. In auto mode a
            file is treated as spin-orbital when ``NORB == 2 * expected_n_spatial``
            or, lacking that hint, when its integrals show exact spin-orbital
            block structure. The outcome is recorded in ``provenance``.
        expected_n_spatial: optional active-space size hint.

    Raises:
        ParseError: malformed header or body line.
        FcidumpIndexError: an index outside ``[1, NORB]``.
        InconsistentIntegral: symmetry-equivalent entries that disagree.
    """
    if not isinstance(text, str):
        text = text.read()
    lines = text.splitlines()
    header, body_start = _parse_namelist(lines)
    norb = int(header["NORB"][0])
    nelec = int(header["NELEC"][0])
    ms2 = int(header.get("MS2", [0])[0])
    if norb < 0 or nelec < 0:
        raise ParseError("NORB and NELEC must be non-negative", 1)
    if header.get("IUHF", [0])[0]:
        raise ParseError("unrestricted (IUHF) FCIDUMP files are not supported", 1)
    orbsym = tuple(int(v) for v in header.get("ORBSYM", []))

    e_core = None
    one: dict[tuple[int, int], tuple[float, int]] = {}
    two: dict[tuple[int, int, int, int], tuple[float, int]] = {}
    orbital_energies: dict[int, float] = {}

    for idx in range(body_start, len(lines)):
        lineno = idx + 1
        toks = lines[idx].split()
        if not toks:
            continue
        if len(toks) != 5:
            raise ParseError(f"expected 'value i j k l', got {lines[idx].strip()!r}", lineno)
        try:
            value = float(toks[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(t) for t in toks[1:])
        except ValueError:
            raise ParseError(f"cannot parse record {lines[idx].strip()!r}", lineno) from None
        if not np.isfinite(value):
            raise ParseError("non-finite integral value", lineno)
        for v in (i, j, k, l):
            if v < 0 or v > norb:
                raise FcidumpIndexError(f"orbital index {v} outside [1, {norb}]", lineno)

        if i == j == k == l == 0:
            if e_core is not None and abs(e_core[0] - value) > CONFLICT_TOL:
                raise InconsistentIntegral(
                    f"core energy given twice ({e_core[0]!r} vs {value!r})", lineno)
            e_core = (value, lineno)
        elif i and j and k and l:
            key = (i - 1, j - 1, k - 1, l - 1)
            _store(two, key, value, lineno)
        elif i and j and not k and not l:
            _store(one, (i - 1, j - 1), value, lineno)
        elif i and not j and not k and not l:
            orbital_energies[i - 1] = value
        else:
            raise ParseError(f"unsupported index pattern {i} {j} {k} {l}", lineno)

    h1 = np.zeros((norb, norb))
    origin1: dict[tuple[int, int], int] = {}
    for (i, j), (v, lineno) in one.items():
        for slot in {(i, j), (j, i)}:
            _place(h1, origin1, slot, v, lineno)

    eightfold = _file_is_eightfold_unique(two)
    h2 = np.zeros((norb,) * 4)
    origin2: dict[tuple[int, int, int, int], int] = {}
    for key, (v, lineno) in two.items():
        orbit = _real_orbit(*key) if eightfold else _hermitian_orbit(*key)
        for slot in orbit:
            _place(h2, origin2, slot, v, lineno)

    provenance = {"two_body_symmetry": "8-fold" if eightfold else "4-fold"}
    if orbital_energies:
        provenance["orbital_energies"] = [orbital_energies.get(p) for p in range(norb)]

    basis, detected_by = _detect_basis(h1, h2, norb, nelec, orbital_basis, expected_n_spatial)
    provenance["orbital_basis"] = basis
    provenance["detected_by"] = detected_by
    if basis == "spatial":
        return FermionHamiltonian(
            n_spatial=norb, n_electrons=nelec, ms2=ms2,
            e_core=0.0 if e_core is None else e_core[0],
            h1=h1, h2=h2, orbital_symmetries=orbsym, provenance=provenance,
        )
    order = _spin_order(norb, blocked=(basis == "spin-blocked"))
    h1 = h1[np.ix_(order, order)]
    h2 = h2[np.ix_(order, order, order, order)]
    return FermionHamiltonian(
        n_spatial=norb // 2, n_electrons=nelec, ms2=ms2,
        e_core=0.0 if e_core is None else e_core[0],
        h1=h1, h2=h2, spin_orbital=True, orbital_symmetries=orbsym, provenance=provenance,
    )


def _store(table, key, value, lineno):
    if key in table and abs(table[key][0] - value) > CONFLICT_TOL:
        raise InconsistentIntegral(
            f"integral {tuple(x + 1 for x in key)} given twice with different values "
            f"(first on line {table[key][1]})", lineno)
    table[key] = (value, lineno)


def _place(arr, origin, slot, value, lineno):
    if slot in origin and abs(arr[slot] - value) > CONFLICT_TOL:
        raise InconsistentIntegral(
            f"entry conflicts with symmetry-equivalent value from line {origin[slot]} "
            f"at {tuple(x + 1 for x in slot)}", lineno)
    arr[slot] = value
    origin.setdefault(slot, lineno)


def _file_is_eightfold_unique(two) -> bool:
    """True when no listed entry has its real-orbital partner orbit listed too.

    Writers that exploit full 8-fold symmetry list one representative per
    8-fold orbit. If any entry's (ji|kl) partner appears explicitly, the file
    spells out its 4-fold orbits and only Hermitian replication is safe.
    """
    listed = {_orbit_key(*key) for key in two}
    for (i, j, k, l) in two:
        partner = _orbit_key(j, i, k, l)
        if partner != _orbit_key(i, j, k, l) and partner in listed:
            return False
    return True


def _spin_order(norb: int, blocked: bool) -> np.ndarray:
    """Permutation from file order to interleaved spin-orbital order."""
    if not blocked:
        return np.arange(norb)
    half = norb // 2
    order = np.empty(norb, dtype=int)
    order[0::2] = np.arange(half)
    order[1::2] = np.arange(half, norb)
    return order


def _spin_structure(h1, h2, spin) -> bool:
    """Do the integrals vanish across spins and repeat per spin block?"""
    same1 = spin[:, None] == spin[None, :]
    if np.any(np.abs(h1[~same1]) > CONFLICT_TOL):
        return False
    same2 = same1[:, :, None, None] & same1[None, None, :, :]
    if np.any(np.abs(h2[~same2]) > CONFLICT_TOL):
        return False
    a = np.flatnonzero(spin == 0)
    b = np.flatnonzero(spin == 1)
    if not np.allclose(h1[np.ix_(a, a)], h1[np.ix_(b, b)], atol=CONFLICT_TOL, rtol=0):
        return False
    blocks = [h2[np.ix_(s, s, t, t)] for s in (a, b) for t in (a, b)]
    return all(np.allclose(blocks[0], blk, atol=CONFLICT_TOL, rtol=0) for blk in blocks[1:])


def _detect_basis(h1, h2, norb, nelec, requested, expected):
    if requested == "spatial":
        return "spatial", "forced"
    if requested not in ("auto", "spin"):
        raise ValueError(f"orbital_basis must be 'auto', 'spatial' or 'spin', not {requested!r}")
    even = norb % 2 == 0 and norb > 0
    inter = even and _spin_structure(h1, h2, np.arange(norb) % 2)
    block = even and _spin_structure(h1, h2, (np.arange(norb) >= norb // 2).astype(int))
    if requested == "spin":
        if not even:
            raise ParseError("spin-orbital file must have an even NORB", 1)
        return ("spin-blocked" if block and not inter else "spin-interleaved"), "forced"
    if expected is not None:
        if norb == expected:
            return "spatial", "expected-size"
        if norb == 2 * expected:
            return ("spin-blocked" if block and not inter else "spin-interleaved"), "expected-size"
    if nelec > norb or not np.any(h2):
        return "spatial", "default"
    if inter:
        return "spin-interleaved", "structure"
    if block:
        return "spin-blocked", "structure"
    return "spatial", "structure"


def read_fcidump(path: str | Path, **kwargs) -> FermionHamiltonian:
    with open(path) as fh:
        return parse_fcidump(fh.read(), **kwargs)


# --------------------------------------------------------------------------
# writing

def write_fcidump(H: FermionHamiltonian, dest: str | Path | TextIO | None = None,
                  tol: float = 0.0) -> str:
    """Serialize ``H`` to FCIDUMP text (17 significant digits).

    Spin-orbital Hamiltonians are written with ``NORB = 2 * n_spatial`` in
    interleaved order. Returns the text; also writes it to ``dest`` if given.
    """
    n = H.n_modes
    h1, h2 = H.h1, H.h2
    out = io.StringIO()
    syms = list(H.orbital_symmetries) if len(H.orbital_symmetries) == n else [1] * n
    out.write(f"&FCI NORB={n},NELEC={H.n_electrons},MS2={H.ms2},\n")
    out.write(" ORBSYM=" + ",".join(str(s) for s in syms) + ",\n")
    out.write(" ISYM=1,\n&END\n")

    def emit(v, i, j, k, l):
        out.write(f"{v: .16e} {i:4d} {j:4d} {k:4d} {l:4d}\n")

    # a representative per 8-fold orbit is exact to WRITE_SYMMETRY_TOL
    eightfold = bool(np.allclose(h2, h2.transpose(1, 0, 2, 3), atol=WRITE_SYMMETRY_TOL, rtol=0)
                     and np.allclose(h2, h2.transpose(0, 1, 3, 2), atol=WRITE_SYMMETRY_TOL, rtol=0))
    seen = set()
    for i, j, k, l in np.ndindex(*h2.shape):
        key = _orbit_key(i, j, k, l)
        if eightfold:
            key = min(_real_orbit(i, j, k, l))
        if key in seen:
            continue
        seen.add(key)
        if eightfold:
            if abs(h2[key]) > tol:
                emit(h2[key], *(x + 1 for x in key))
            continue
        # 4-fold file: spell out both halves of every 8-fold orbit that is
        # nonzero anywhere, so a reader cannot mistake it for 8-fold input.
        partner = _orbit_key(key[1], key[0], key[2], key[3])
        orbit_vals = [h2[s] for s in _real_orbit(*key)]
        if max(abs(v) for v in orbit_vals) > tol:
            emit(h2[key], *(x + 1 for x in key))
            if partner not in seen:
                seen.add(partner)
                emit(h2[partner], *(x + 1 for x in partner))
    for i in range(n):
        for j in range(i + 1):
            if abs(h1[i, j]) > tol:
                emit(h1[i, j], i + 1, j + 1, 0, 0)
    emit(H.e_core, 0, 0, 0, 0)
    text = out.getvalue()
    if dest is not None:
        if hasattr(dest, "write"):
            dest.write(text)
        else:
            Path(dest).write_text(text)
    return text


# --------------------------------------------------------------------------
# spin expansion and diagnostics

def expand_to_spin_orbitals(H: FermionHamiltonian) -> FermionHamiltonian:
    """Spatial integrals -> interleaved spin-orbital integrals.

    One-body terms are copied per spin; ``(pq|rs)`` survives only when
    ``p, q`` share a spin and ``r, s`` share a spin.
    """
    if H.spin_orbital:
        return H
    delta = np.eye(2)
    h1 = np.kron(H.h1, delta)
    spin_pairs = np.einsum("ab,cd->abcd", delta, delta)
    h2 = np.kron(H.h2, spin_pairs)
    return replace(H, h1=h1, h2=h2, spin_orbital=True,
                   orbital_symmetries=tuple(s for s in H.orbital_symmetries for _ in (0, 1)))


@dataclass(frozen=True)
class SymmetryReport:
    hermitian: bool
    number_conserving: bool
    max_violation: float
    worst_entry: tuple | None
    orbital_basis: str | None = None

    def to_dict(self) -> dict:
        return {
            "hermitian": self.hermitian,
            "number_conserving": self.number_conserving,
            "max_violation": self.max_violation,
            "worst_entry": None if self.worst_entry is None else list(self.worst_entry),
            "orbital_basis": self.orbital_basis,
        }


def validate_symmetries(H: FermionHamiltonian, tol: float = CONFLICT_TOL) -> SymmetryReport:
    """Check Hermiticity of the integrals and particle-number conservation.

    Number conservation is decided on the Jordan-Wigner image, so injected
    ``extra_terms`` that create or destroy electron pairs are caught.
    """
    from .fermion import check_number_symmetry, jordan_wigner  # avoid import cycle

    worst = 0.0
    worst_entry = None
    diffs = [
        (np.abs(H.h1 - H.h1.T), "h1"),
        (np.abs(H.h2 - H.h2.transpose(1, 0, 3, 2)), "h2"),
        (np.abs(H.h2 - H.h2.transpose(2, 3, 0, 1)), "h2"),
    ]
    for d, name in diffs:
        if d.size and d.max() > worst:
            worst = float(d.max())
            worst_entry = (name,) + tuple(int(v) for v in np.unravel_index(np.argmax(d), d.shape))

    mapped = jordan_wigner(expand_to_spin_orbitals(H), eps=0.0)
    coeffs = np.array(list(mapped.terms.values()), dtype=complex)
    imag = float(np.max(np.abs(coeffs.imag))) if coeffs.size else 0.0
    if imag > worst:
        worst, worst_entry = imag, ("pauli-imag",)
    return SymmetryReport(
        hermitian=worst <= tol,
        number_conserving=check_number_symmetry(mapped),
        max_violation=worst,
        worst_entry=worst_entry,
        orbital_basis=H.provenance.get("orbital_basis"),
    )
