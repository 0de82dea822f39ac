"""Solver configuration and per-iteration traces."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field, fields

from ..errors import ConfigError

__all__ = ["SolverConfig", "IterationRecord", "SolverTrace"]


@dataclass
class SolverConfig:
    grad_tol: float = 1e-3
    max_iter: int = 100
    optimizer_gtol: float = 1e-8
    optimizer_maxiter: int = 2000
    accept_gtol: float = 1e-4
    theta0: float = 0.1
    overlap_cutoff: float = 1e-8
    retry_scale: float = 1e-2
    seed: int = 0

    def __post_init__(self):
        if self.grad_tol <= 0 or self.optimizer_gtol <= 0:
            raise ConfigError("tolerances must be positive")
        if self.max_iter < 0:
            raise ConfigError("max_iter must be >= 0")
        if self.overlap_cutoff < 0:
            raise ConfigError("overlap_cutoff must be >= 0")

    @classmethod
    def from_dict(cls, data: dict) -> "SolverConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown solver settings: {sorted(unknown)}")
        return cls(**data)


@dataclass
class IterationRecord:
    iteration: int
    energy: float
    selected: str | None = None
    pool_index: int | None = None
    gradient: float | None = None
    gradient_norm: float | None = None
    parameters: list[float] = field(default_factory=list)
    note: str | None = None


@dataclass
class SolverTrace:
    method: str
    records: list[IterationRecord] = field(default_factory=list)
    final_energy: float | None = None
    converged: bool = False
    reason: str = ""
    ansatz: list[dict] = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    @property
    def energies(self) -> list[float]:
        return [r.energy for r in self.records]

    def add(self, record: IterationRecord) -> None:
        self.records.append(record)
        self.final_energy = record.energy

    def is_non_increasing(self, tol: float = 1e-10) -> bool:
        e = self.energies
        return all(b <= a + tol for a, b in zip(e, e[1:]))

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "final_energy": self.final_energy,
            "converged": self.converged,
            "reason": self.reason,
            "ansatz": self.ansatz,
            "records": [asdict(r) for r in self.records],
            "extras": self.extras,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, data: dict) -> "SolverTrace":
        recs = [IterationRecord(**r) for r in data.get("records", [])]
        return cls(data["method"], recs, data.get("final_energy"), data.get("converged", False),
                   data.get("reason", ""), data.get("ansatz", []), data.get("extras", {}))

    @classmethod
    def from_json(cls, text: str) -> "SolverTrace":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "energy", "selected", "gradient", "gradient_norm"])
        for r in self.records:
            w.writerow([r.iteration, repr(r.energy), r.selected or "",
                        "" if r.gradient is None else repr(r.gradient),
                        "" if r.gradient_norm is None else repr(r.gradient_norm)])
        return buf.getvalue()
