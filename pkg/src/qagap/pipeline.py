"""End-to-end analysis of one instance: sweep, min-gap, overlap traces, anti-crossing verdict."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .anticross import (
    DEFAULT_EPSILON,
    DEFAULT_GAMMA,
    DEFAULT_GAMMA_PRIME,
    DEFAULT_LEVELS,
    AntiCrossingReport,
    FinalBasis,
    OverlapTraces,
    detect,
    make_probe,
    overlaps,
)
from .hamiltonian import DriverSpec, SystemHamiltonian
from .instances import IsingModel, WeightedGraph, mis_to_ising
from .spectra import DEFAULT_STEP, MinGap, SpectralSweep, default_grid, locate_min_gap, sweep


@dataclass
class Analysis:
    sys: SystemHamiltonian
    sweep: SpectralSweep
    min_gap: MinGap
    final: FinalBasis
    traces: OverlapTraces
    report: AntiCrossingReport

    def summary(self) -> dict:
        return {
            "schema_version": "1",
            "n": self.sys.n,
            "driver": self.sys.driver.to_json(),
            "alpha": self.sys.alpha,
            "s_star": self.min_gap.s_star,
            "min_gap": self.min_gap.min_gap,
            "candidates": [{"s": s, "gap": g} for s, g in self.min_gap.candidates],
            "m0": self.final.m0,
            "m1": self.final.m1,
            "verdict": self.report.verdict,
        }


def as_ising(inst: WeightedGraph | IsingModel) -> IsingModel:
    """Ising model of an instance; graphs without penalties get the default rule."""
    if isinstance(inst, IsingModel):
        return inst
    g = inst if inst.penalties is not None else inst.with_penalties()
    return mis_to_ising(g)


def analyze(
    ising: IsingModel,
    driver: DriverSpec | None = None,
    alpha: float = 1.0,
    *,
    step: float = DEFAULT_STEP,
    k: int = 5,
    K: int = DEFAULT_LEVELS,
    gamma: float = DEFAULT_GAMMA,
    epsilon: float = DEFAULT_EPSILON,
    gamma_prime: float = DEFAULT_GAMMA_PRIME,
    workers: int = 1,
    seed: int = 0,
    refine: bool = True,
) -> Analysis:
    sys = SystemHamiltonian(ising, driver or DriverSpec.x(), alpha)
    grid = default_grid(step)
    final = FinalBasis.from_ising(ising)
    K = min(K, len(final.levels))
    k = max(k, final.m0 + 1)
    sw = sweep(sys, grid, k, workers=workers, seed=seed)
    mg = locate_min_gap(sys, grid=grid, seed=seed)
    traces = overlaps(sw, final, K)
    probe = make_probe(sys, final) if refine else None
    report = detect(traces, mg, gamma, epsilon, gamma_prime, probe=probe)
    return Analysis(sys, sw, mg, final, traces, report)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, set):
        return sorted(_plain(v) for v in obj)
    return obj


def dumps(doc) -> str:
    """Deterministic JSON text: sorted keys, numpy scalars converted, trailing newline."""
    return json.dumps(_plain(doc), indent=2, sort_keys=True) + "\n"


def write_json(path: str | Path, doc) -> Path:
    path = Path(path)
    path.write_text(dumps(doc))
    return path
