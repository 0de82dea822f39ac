"""Command-line driver: ``qdownfold <verb> [options]``.

Every verb prints one JSON document (sorted keys) and optionally writes it to
``--output``. Wall-clock timings live under their own ``timings`` key so that
two runs with the same seed differ only there. Exit codes: 0 success, 2 input
or configuration error, 3 solver failure, 4 mitigation failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .errors import ConfigError, FitError, NotAmplifiable, ParseError, RangeError, SolverError
from .fermion import DEFAULT_EPS, ExcitationGenerator, check_number_symmetry, jordan_wigner
from .hamiltonian_io import FermionHamiltonian, read_fcidump, validate_symmetries
from .measurement import build_plan, estimate_energy, truncate_groups
from .paulis import PauliSum

log = logging.getLogger("qdownfold")

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_MITIGATION = 0, 2, 3, 4
SOLVERS = ("fci", "adapt-vqe", "qubit-adapt-vqe", "adapt-gcim", "uccgsd")


@dataclass
class RunConfig:
    """Declarative run settings; a config file supplies these keys and flags override them."""

    input: str | None = None
    output: str | None = None
    csv: str | None = None
    solver: str = "fci"
    pool: str | None = None
    grad_tol: float = 1e-3
    max_iter: int = 100
    theta0: float = 0.1
    x: int = 1
    y: int = 0
    eps: float = DEFAULT_EPS
    k: int | None = None
    weight_fraction: float | None = None
    shots: int = 1024
    seed: int = 0
    p2: float = 0.0
    lambdas: list[float] = field(default_factory=lambda: [1.0, 1.5, 2.0])
    circuit: str | None = None
    iterations: int | None = None
    threads: int | None = None
    orbital_basis: str = "auto"
    n_active: int | None = None
    modes: int = 6
    active: list[int] | None = None
    reference: list[int] | None = None
    amplitudes: str | None = None
    scale: float = 0.1

    def validate(self) -> "RunConfig":
        if self.solver not in SOLVERS:
            raise ConfigError(f"solver must be one of {SOLVERS}, not {self.solver!r}")
        if self.shots < 1:
            raise ConfigError("shots must be >= 1")
        if not 0.0 <= self.p2 <= 1.0:
            raise ConfigError("p2 must lie in [0, 1]")
        if self.x < 1 or self.y < 0:
            raise ConfigError("need x >= 1 and y >= 0")
        if self.eps < 0:
            raise ConfigError("eps must be >= 0")
        if self.max_iter < 0:
            raise ConfigError("max_iter must be >= 0")
        if self.threads is not None and self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.weight_fraction is not None and not 0 < self.weight_fraction <= 1:
            raise ConfigError("weight_fraction must lie in (0, 1]")
        return self

    @classmethod
    def from_sources(cls, file_values: dict, overrides: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(file_values) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        merged = dict(file_values)
        merged.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**merged).validate()


# --------------------------------------------------------------------------
# helpers

def _load_hamiltonian(cfg: RunConfig) -> FermionHamiltonian:
    if cfg.input is None:
        raise ConfigError("an input FCIDUMP path is required")
    try:
        return read_fcidump(cfg.input, orbital_basis=cfg.orbital_basis,
                            expected_n_spatial=cfg.n_active)
    except OSError as exc:
        raise ConfigError(f"cannot read {cfg.input}: {exc}") from exc


def _mapped(cfg: RunConfig) -> tuple[FermionHamiltonian, PauliSum]:
    H = _load_hamiltonian(cfg)
    return H, jordan_wigner(H, eps=cfg.eps)


def _solver_config(cfg: RunConfig):
    from .solvers import SolverConfig

    return SolverConfig(grad_tol=cfg.grad_tol, max_iter=cfg.max_iter, theta0=cfg.theta0,
                        seed=cfg.seed)


def _limit_threads(n: int | None):
    if n is None:
        return None
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


# --------------------------------------------------------------------------
# verbs

def cmd_inspect(cfg: RunConfig) -> dict:
    H, S = _mapped(cfg)
    report = validate_symmetries(H)
    plan = build_plan(S)
    return {
        "n_spatial": H.n_spatial,
        "n_qubits": H.n_qubits,
        "n_electrons": H.n_electrons,
        "ms2": H.ms2,
        "e_core": H.e_core,
        "orbital_basis": H.provenance.get("orbital_basis"),
        "two_body_symmetry": H.provenance.get("two_body_symmetry"),
        "eps": cfg.eps,
        "n_terms": len(S),
        "n_pauli_strings": len(S.non_identity()),
        "discarded_weight": S.discarded_weight,
        "n_groups": len(plan.groups),
        "symmetry": report.to_dict(),
    }


def cmd_map(cfg: RunConfig) -> dict:
    _, S = _mapped(cfg)
    return {"n_qubits": S.n_qubits, "n_terms": len(S), "discarded_weight": S.discarded_weight,
            "operator": S.to_dict()}


def cmd_group(cfg: RunConfig) -> dict:
    _, S = _mapped(cfg)
    plan = build_plan(S, cfg.shots)
    return {"n_groups": len(plan.groups), "n_pauli_strings": len(S.non_identity()),
            "plan": plan.to_dict()}


def _choose_k(plan, cfg: RunConfig) -> int:
    if cfg.k is not None:
        return cfg.k
    if cfg.weight_fraction is not None:
        total = plan.total_weight()
        acc = 0.0
        for i, g in enumerate(plan.groups, 1):
            acc += g.weight
            if acc >= cfg.weight_fraction * total - 1e-15:
                return i
        return len(plan.groups)
    raise ConfigError("truncate needs k or weight_fraction")


def cmd_truncate(cfg: RunConfig) -> dict:
    from .solvers import exact_ground_state

    H, S = _mapped(cfg)
    plan = build_plan(S, cfg.shots)
    tr = truncate_groups(plan, _choose_k(plan, cfg))
    sector = (H.n_electrons, H.ms2)
    e_full, _ = exact_ground_state(S, sector)
    e_trunc, _ = exact_ground_state(tr.operator, sector, project=True)
    return {
        "k": tr.plan.retained_k,
        "n_groups": len(plan.groups),
        "retained_strings": tr.retained_strings,
        "total_strings": tr.total_strings,
        "weight_fraction": tr.weight_fraction,
        "exact_energy": e_full,
        "truncated_energy": e_trunc,
        "energy_shift": e_trunc - e_full,
        "number_conserving": check_number_symmetry(tr.operator),
        "operator": tr.operator.to_dict(),
    }


def _run_solver(cfg: RunConfig, H: FermionHamiltonian, S: PauliSum) -> dict:
    from .solvers import (SolverTrace, adapt_vqe, build_pool, exact_ground_state, gcim_expand,
                          qubit_adapt_vqe, uccgsd_vqe)

    n_e, ms2, n = H.n_electrons, H.ms2, S.n_qubits
    sc = _solver_config(cfg)
    if cfg.solver == "fci":
        e, _ = exact_ground_state(S, (n_e, ms2))
        trace = SolverTrace("fci", final_energy=e, converged=True, reason="exact")
        return {"energy": e, "trace": trace}
    if cfg.solver == "adapt-vqe":
        trace = adapt_vqe(S, build_pool(cfg.pool or "fermionic-GSD", n, n_e, ms2), n_e, ms2, sc)
    elif cfg.solver == "qubit-adapt-vqe":
        pool = build_pool(cfg.pool, n, n_e, ms2) if cfg.pool else None
        trace = qubit_adapt_vqe(S, n_e, ms2, sc, pool)
    elif cfg.solver == "uccgsd":
        pool = build_pool(cfg.pool, n, n_e, ms2) if cfg.pool else None
        trace = uccgsd_vqe(S, n_e, ms2, sc, pool)
    else:
        pool = build_pool(cfg.pool or "fermionic-GSD", n, n_e, ms2)
        sub, trace = gcim_expand(S, pool, n_e, cfg.x, cfg.y, cfg.theta0, sc, ms2)
        trace.extras["gcim_spectrum"] = sub.spectrum()[:5].tolist()
    return {"energy": trace.final_energy, "trace": trace}


def cmd_solve(cfg: RunConfig) -> dict:
    H, S = _mapped(cfg)
    out = _run_solver(cfg, H, S)
    trace = out["trace"]
    if cfg.csv:
        Path(cfg.csv).write_text(trace.to_csv())
    return {"solver": cfg.solver, "energy": out["energy"], "n_qubits": S.n_qubits,
            "trace": trace.to_dict()}


def _circuit_and_state(cfg: RunConfig, H: FermionHamiltonian, S: PauliSum):
    """Circuit from ``--circuit`` JSON, or from a qubit-ADAPT run of ``--iterations`` steps."""
    from .solvers import ansatz_circuit, hf_occupation, qubit_adapt_vqe
    from .statevector import Circuit, init_reference

    init = init_reference(S.n_qubits, hf_occupation(S.n_qubits, H.n_electrons, H.ms2))
    if cfg.circuit:
        return Circuit.from_json(Path(cfg.circuit).read_text()), init
    sc = _solver_config(cfg)
    if cfg.iterations is not None:
        sc.max_iter = cfg.iterations
    trace = qubit_adapt_vqe(S, H.n_electrons, H.ms2, sc)
    gens = [ExcitationGenerator.from_dict(d) for d in trace.ansatz]
    thetas = trace.records[-1].parameters if gens else []
    return ansatz_circuit(gens, thetas, S.n_qubits), init


def cmd_sample(cfg: RunConfig) -> dict:
    from .mitigation import measure_energy
    from .statevector import NoiseModel, expectation, run_circuit

    H, S = _mapped(cfg)
    circuit, init = _circuit_and_state(cfg, H, S)
    plan = build_plan(S, cfg.shots)
    if cfg.k is not None or cfg.weight_fraction is not None:
        plan = truncate_groups(plan, _choose_k(plan, cfg)).plan
    noise = NoiseModel(cfg.p2) if cfg.p2 > 0 else None
    e, se = measure_energy(circuit, init, plan, cfg.shots, noise, cfg.seed)
    exact = expectation(run_circuit(init.copy(), circuit)[0], plan.to_sum())
    return {"energy": e, "se": se, "exact_expectation": exact, "shots_per_group": cfg.shots,
            "n_groups": plan.retained_k, "gates": asdict(circuit.tally()),
            "circuit": circuit.to_dict()}


def cmd_zne(cfg: RunConfig) -> dict:
    from .mitigation import run_zne
    from .statevector import expectation, run_circuit

    H, S = _mapped(cfg)
    if len(cfg.lambdas) < 2:
        raise ConfigError("zne needs at least two noise factors")
    circuit, init = _circuit_and_state(cfg, H, S)
    plan = build_plan(S, cfg.shots)
    if cfg.k is not None or cfg.weight_fraction is not None:
        plan = truncate_groups(plan, _choose_k(plan, cfg)).plan
    series = run_zne(circuit, init, plan, cfg.lambdas, cfg.p2, cfg.shots, cfg.seed)
    if cfg.csv:
        Path(cfg.csv).write_text(series.to_csv())
    exact = expectation(run_circuit(init.copy(), circuit)[0], plan.to_sum())
    return {"series": series.to_dict(), "noiseless_expectation": exact,
            "gates": asdict(circuit.tally()), "circuit": circuit.to_dict()}


def cmd_downfold_toy(cfg: RunConfig) -> dict:
    from . import downfold_toy as dt

    rng = np.random.default_rng(cfg.seed)
    n = cfg.modes
    active = tuple(cfg.active) if cfg.active is not None else tuple(range(min(4, n)))
    reference = tuple(cfg.reference) if cfg.reference is not None else (0, 1)
    space = dt.ActiveSpaceDef(n, active, reference)
    toy = dt.random_toy_hamiltonian(n, rng)
    if cfg.amplitudes:
        raw = json.loads(Path(cfg.amplitudes).read_text())
        amps = [(tuple(a["particles"]), tuple(a["holes"]), float(a["value"])) for a in raw]
    else:
        amps = _random_external_amplitudes(space, rng, cfg.scale)
    sigma = dt.build_sigma(amps, space)
    H = toy.operator()
    HN, FN = dt.fock_normal_parts(toy, reference)
    n_e = len(reference)
    results = {}
    for label, Hbar in (("bare", H), ("exact", dt.bch_transform(H, sigma)),
                        ("a7", dt.bch_transform(H, sigma, "a7", parts=(HN, FN)))):
        heff = dt.project_active(Hbar, space, sector=n_e)
        results[label] = float(heff.eigvalsh()[0])
    full = dt.project_active(H, dt.ActiveSpaceDef(n, tuple(range(n)), reference), sector=n_e)
    return {"n_modes": n, "active": list(active), "reference": list(reference),
            "n_amplitudes": len(amps), "lowest_eigenvalues": results,
            "full_space_ground": float(full.eigvalsh()[0])}


def _random_external_amplitudes(space, rng, scale):
    occ = list(space.reference)
    vir = [p for p in range(space.n_modes) if p not in occ]
    amps = []
    for i in occ:
        for a in vir:
            if (a - i) % 2 == 0 and space.is_external((a, i)):
                amps.append(((a,), (i,), scale * rng.normal()))
    for i in occ:
        for j in occ:
            if i >= j:
                continue
            for a in vir:
                for b in vir:
                    if a < b and sorted((a % 2, b % 2)) == sorted((i % 2, j % 2)) \
                            and space.is_external((a, b, i, j)):
                        amps.append(((a, b), (i, j), scale * rng.normal()))
    return amps


COMMANDS = {
    "inspect": cmd_inspect,
    "map": cmd_map,
    "group": cmd_group,
    "truncate": cmd_truncate,
    "solve": cmd_solve,
    "sample": cmd_sample,
    "zne": cmd_zne,
    "downfold-toy": cmd_downfold_toy,
}


# --------------------------------------------------------------------------
# argument handling

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with run settings")
    common.add_argument("--seed", type=int)
    common.add_argument("--shots", type=int)
    common.add_argument("--threads", type=int)
    common.add_argument("--output", "-o", help="write the result JSON here as well")
    common.add_argument("--eps", type=float, help="Pauli pruning threshold")
    common.add_argument("--orbital-basis", dest="orbital_basis",
                        choices=["auto", "spatial", "spin"])
    common.add_argument("--n-active", dest="n_active", type=int,
                        help="expected active-space size in spatial orbitals")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="qdownfold", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def verb(name, helptext, needs_input=True):
        sp = sub.add_parser(name, parents=[common], help=helptext)
        if needs_input:
            sp.add_argument("input", nargs="?", help="FCIDUMP file")
        return sp

    verb("inspect", "orbital counts, string/group counts and symmetry checks")
    verb("map", "Jordan-Wigner Pauli sum as JSON")
    verb("group", "qubit-wise commuting measurement plan")
    t = verb("truncate", "keep the heaviest groups and report the energy shift")
    t.add_argument("--k", type=int)
    t.add_argument("--weight-fraction", dest="weight_fraction", type=float)

    s = verb("solve", "ground-state energy with one solver")
    s.add_argument("--solver", choices=SOLVERS)
    s.add_argument("--pool", choices=["fermionic-SD", "fermionic-GSD", "qubit-minimal"])
    s.add_argument("--grad-tol", dest="grad_tol", type=float)
    s.add_argument("--max-iter", dest="max_iter", type=int)
    s.add_argument("--theta0", type=float)
    s.add_argument("--x", type=int)
    s.add_argument("--y", type=int)
    s.add_argument("--csv", help="per-iteration energies")

    for name, helptext in (("sample", "shot-based energy of a circuit"),
                           ("zne", "zero-noise extrapolated energy")):
        z = verb(name, helptext)
        z.add_argument("--circuit", help="circuit JSON; default runs qubit-ADAPT")
        z.add_argument("--iterations", type=int, help="qubit-ADAPT iterations for the circuit")
        z.add_argument("--p2", type=float)
        z.add_argument("--k", type=int)
        z.add_argument("--weight-fraction", dest="weight_fraction", type=float)
        if name == "zne":
            z.add_argument("--lambdas", type=float, nargs="+")
            z.add_argument("--csv", help="(lambda, energy, se) table")

    d = verb("downfold-toy", "dense DUCC transform on a random model", needs_input=False)
    d.add_argument("--modes", type=int)
    d.add_argument("--active", type=int, nargs="+")
    d.add_argument("--reference", type=int, nargs="+")
    d.add_argument("--amplitudes", help="JSON list of {particles, holes, value}")
    d.add_argument("--scale", type=float)
    return p


_NOT_CONFIG = {"command", "config", "verbose"}


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    file_values: dict[str, Any] = {}
    if args.config:
        try:
            file_values = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load config {args.config}: {exc}") from exc
        if not isinstance(file_values, dict):
            raise ConfigError("config file must hold a JSON object")
    overrides = {k: v for k, v in vars(args).items() if k not in _NOT_CONFIG}
    return RunConfig.from_sources(file_values, overrides)


def _emit(doc: dict, cfg: RunConfig | None) -> None:
    text = json.dumps(doc, sort_keys=True, indent=2, default=_json_default)
    print(text)
    if cfg is not None and cfg.output:
        Path(cfg.output).write_text(text + "\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _error(command: str, exc: BaseException, code: int, cfg: RunConfig | None, extra=None) -> int:
    doc = {"command": command, "version": __version__, "status": "error",
           "error": {"type": type(exc).__name__, "message": str(exc)}}
    if extra:
        doc.update(extra)
    print(json.dumps(doc, sort_keys=True, indent=2, default=_json_default), file=sys.stderr)
    if cfg is not None and cfg.output:
        Path(cfg.output).write_text(json.dumps(doc, sort_keys=True, indent=2,
                                               default=_json_default) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = None
    try:
        cfg = _config_from_args(args)
        limiter = _limit_threads(cfg.threads)
        t0 = time.perf_counter()
        result = COMMANDS[args.command](cfg)
        elapsed = time.perf_counter() - t0
        if limiter is not None:
            limiter.unregister()
    except SolverError as exc:
        partial = {"trace": exc.trace.to_dict()} if getattr(exc, "trace", None) else None
        return _error(args.command, exc, EXIT_SOLVER, cfg, partial)
    except (NotAmplifiable, FitError) as exc:
        return _error(args.command, exc, EXIT_MITIGATION, cfg)
    except (ParseError, ConfigError, RangeError, ValueError, IndexError) as exc:
        return _error(args.command, exc, EXIT_INPUT, cfg)
    doc = {"command": args.command, "version": __version__, "status": "ok",
           "config": asdict(cfg), "result": result,
           "timings": {"wall_seconds": elapsed}}
    _emit(doc, cfg)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
