"""Zero-noise extrapolation by identity-pair folding of second-half entanglers."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import FitError, NotAmplifiable
from .measurement import MeasurementPlan, estimate_energy
from .statevector import Circuit, GateTally, NoiseModel, State, TrajectorySampler

__all__ = [
    "amplify_circuit",
    "noise_factor",
    "ZnePoint",
    "ZneFit",
    "ZneSeries",
    "zne_extrapolate",
    "measure_energy",
    "run_zne",
]


def amplify_circuit(circuit: Circuit, target_factor: float) -> tuple[Circuit, GateTally]:
    """Pad second-half CNOTs with identity pairs to approach ``target_factor``.

    With ``T`` tallied two-qubit gates, ``m`` pairs give the factor
    ``1 + 2m/T``; ``m`` is the count whose factor is nearest the target (ties
    round up). Pairs go round-robin onto gates with index ``>= ceil(T/2)``.
    """
    if target_factor < 1:
        raise ValueError("noise factor must be >= 1")
    if circuit.padding:
        raise ValueError("circuit is already amplified")
    T = circuit.tally().two_qubit
    if T == 0:
        raise NotAmplifiable("circuit has no two-qubit gates")
    m = math.floor((target_factor - 1) * T / 2 + 0.5)
    eligible = list(range(math.ceil(T / 2), T))
    padding: dict[int, int] = {}
    for j in range(m):
        g = eligible[j % len(eligible)]
        padding[g] = padding.get(g, 0) + 1
    out = Circuit(list(circuit.rotations), padding)
    return out, out.tally()


def noise_factor(original: GateTally, amplified: GateTally) -> float:
    if original.two_qubit < 1:
        raise ZeroDivisionError("original circuit has no two-qubit gates")
    return amplified.two_qubit / original.two_qubit


@dataclass(frozen=True)
class ZnePoint:
    noise_factor: float
    energy: float
    se: float | None = None


@dataclass(frozen=True)
class ZneFit:
    intercept: float
    slope: float
    intercept_se: float
    r2: float
    rmse: float
    weighted: bool


@dataclass
class ZneSeries:
    points: list[ZnePoint] = field(default_factory=list)
    fit: ZneFit | None = None

    def to_dict(self) -> dict:
        return {
            "points": [{"lambda": p.noise_factor, "energy": p.energy, "se": p.se}
                       for p in self.points],
            "fit": None if self.fit is None else {
                "intercept": self.fit.intercept, "slope": self.fit.slope,
                "intercept_se": _nan_to_none(self.fit.intercept_se),
                "r2": _nan_to_none(self.fit.r2), "rmse": self.fit.rmse,
                "weighted": self.fit.weighted,
            },
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, data: dict) -> "ZneSeries":
        pts = [ZnePoint(p["lambda"], p["energy"], p.get("se")) for p in data["points"]]
        f = data.get("fit")
        fit = None if f is None else ZneFit(
            f["intercept"], f["slope"], _none_to_nan(f["intercept_se"]), _none_to_nan(f["r2"]),
            f["rmse"], f["weighted"])
        return cls(pts, fit)

    @classmethod
    def from_json(cls, text: str) -> "ZneSeries":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lambda", "energy", "se"])
        for p in self.points:
            w.writerow([repr(p.noise_factor), repr(p.energy), "" if p.se is None else repr(p.se)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ZneSeries":
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls([ZnePoint(float(r["lambda"]), float(r["energy"]),
                             float(r["se"]) if r["se"] else None) for r in rows])


def _nan_to_none(v: float):
    return None if v is None or (isinstance(v, float) and math.isnan(v)) else v


def _none_to_nan(v):
    return float("nan") if v is None else v


def zne_extrapolate(points: Sequence[ZnePoint | tuple], weighted: bool | None = None) -> ZneSeries:
    """Linear fit of energy against noise factor, extrapolated to zero.

    With every standard error supplied and positive (and ``weighted`` not
    False) the fit is weighted by ``1/SE^2`` and the intercept error comes from
    ``(X^T W X)^-1``. Otherwise plain least squares is used with the residual
    variance ``RSS/(n-2)``, which leaves the intercept error undefined (NaN)
    for two points. R^2 and RMSE describe the unweighted residuals.
    """
    pts = [p if isinstance(p, ZnePoint) else ZnePoint(*p) for p in points]
    lam = np.array([p.noise_factor for p in pts], dtype=float)
    y = np.array([p.energy for p in pts], dtype=float)
    if len(pts) < 2 or len(set(lam.tolist())) < 2:
        raise FitError("need at least two distinct noise factors")
    if len(set(lam.tolist())) != len(lam):
        raise FitError("noise factors must be distinct")
    if np.any(lam < 1):
        raise FitError("noise factors must be >= 1")
    ses = [p.se for p in pts]
    have_se = all(s is not None and s > 0 for s in ses)
    if weighted and not have_se:
        raise FitError("weighted fit needs a positive SE for every point")
    use_w = have_se if weighted is None else bool(weighted)
    X = np.column_stack([np.ones_like(lam), lam])
    if use_w:
        w = 1.0 / np.array(ses, dtype=float) ** 2
        XtW = X.T * w
        cov = np.linalg.inv(XtW @ X)
        beta = cov @ (XtW @ y)
        intercept_se = math.sqrt(cov[0, 0])
    else:
        cov0 = np.linalg.inv(X.T @ X)
        beta = cov0 @ (X.T @ y)
        resid = y - X @ beta
        dof = len(y) - 2
        intercept_se = math.sqrt(cov0[0, 0] * float(resid @ resid) / dof) if dof > 0 else float("nan")
    resid = y - X @ beta
    rss = float(resid @ resid)
    tss = float(((y - y.mean()) ** 2).sum())
    if tss > 0:
        r2 = 1.0 - rss / tss
    else:
        r2 = 1.0 if rss == 0 else float("nan")
    rmse = math.sqrt(rss / len(y))
    fit = ZneFit(float(beta[0]), float(beta[1]), float(intercept_se), float(r2), rmse, use_w)
    return ZneSeries(pts, fit)


def _group_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def measure_energy(circuit: Circuit, initial: State, plan: MeasurementPlan, shots: int,
                   noise: NoiseModel | None, seed: int, stream: int = 0) -> tuple[float, float]:
    """Shot-based energy of ``circuit`` applied to ``initial``.

    Group ``i`` draws from the stream ``(stream, i)`` of the root ``seed``, so
    results do not depend on the order groups are processed in.
    """
    sampler = TrajectorySampler(circuit, initial, noise)
    counts = []
    for i, group in enumerate(plan.retained):
        counts.append(sampler.sample(group.basis_string, shots, _group_rng(seed, stream, i)))
    return estimate_energy(counts, plan)


def run_zne(circuit: Circuit, initial: State, plan: MeasurementPlan, lambdas: Sequence[float],
            p2: float, shots: int, seed: int, weighted: bool | None = None) -> ZneSeries:
    """Measure at each noise factor under Pauli-trajectory noise, then extrapolate."""
    if len(lambdas) < 2:
        raise FitError("need at least two noise factors")
    base = circuit.tally()
    noise = NoiseModel(p2)
    pts = []
    for j, lam in enumerate(lambdas):
        amp, tally = amplify_circuit(circuit, lam)
        e, se = measure_energy(amp, initial, plan, shots, noise, seed, stream=j)
        pts.append(ZnePoint(noise_factor(base, tally), e, se))
    return zne_extrapolate(pts, weighted)
