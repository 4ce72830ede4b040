"""Driver neighborhoods, low-energy neighboring eigenstates (LENS) and the anti-crossing predictor.

Level labels are indices of distinct problem energies (degenerate states
share a label), counted from 0 at the ground level.  A neighbor of an
anchor state is any basis state one driver term away; LENS keeps the
neighbors that sit above the anchor's own level and pass the low-energy
cutoff.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hamiltonian import DriverSpec
from .instances import BasisState, IsingModel, brute_force_ising, level_of_states

DEFAULT_RANK_CUT = 8


def neighbors(state: BasisState, driver: DriverSpec) -> set[BasisState]:
    """Basis states reachable from ``state`` by one driver term (single flips, plus pair flips for XX)."""
    n = state.n
    out = {BasisState(state.index ^ (1 << i), n) for i in range(n)}
    if driver.kind == "XX" and driver.lam:
        for i, j in driver.edges:
            if j >= n:
                raise ValueError(f"driver edge ({i},{j}) outside 0..{n - 1}")
            out.add(BasisState(state.index ^ (1 << i) ^ (1 << j), n))
    return out


@dataclass(frozen=True)
class Cutoff:
    """Low-energy rule: level index <= rank_cut, or energy <= E_1 + window when ``window`` is set."""

    rank_cut: int = DEFAULT_RANK_CUT
    window: float | None = None

    def admits(self, level: int, energy: float, e1: float) -> bool:
        if self.window is not None:
            return energy <= e1 + self.window
        return level <= self.rank_cut

    def describe(self) -> str:
        if self.window is not None:
            return f"energy <= E_1 + {self.window:g}"
        return f"level <= {self.rank_cut}"


@dataclass
class LensSet:
    anchor_level: int
    anchor: list[BasisState]
    neighbors: list[tuple[BasisState, float, int]]
    cutoff: Cutoff
    all_neighbor_levels: list[int] = field(default_factory=list)

    @property
    def levels(self) -> list[int]:
        return sorted({lvl for _, _, lvl in self.neighbors})

    def to_json(self) -> dict:
        return {
            "anchor_level": self.anchor_level,
            "anchor": [s.bits for s in self.anchor],
            "neighbors": [{"bits": s.bits, "energy": e, "level": lvl} for s, e, lvl in self.neighbors],
            "all_neighbor_levels": self.all_neighbor_levels,
            "cutoff": self.cutoff.describe(),
        }


def lens_set(
    anchor_level: int,
    ising: IsingModel,
    driver: DriverSpec,
    cutoff: Cutoff = Cutoff(),
    spectrum: list[tuple[float, list[int]]] | None = None,
) -> LensSet:
    if anchor_level not in (0, 1):
        raise ValueError("anchor level must be 0 (GS) or 1 (FS)")
    spectrum = brute_force_ising(ising) if spectrum is None else spectrum
    if len(spectrum) < 2:
        raise ValueError("problem Hamiltonian has a single energy level")
    level = level_of_states(spectrum, ising.n)
    energies = ising.energies()
    anchor = [BasisState(i, ising.n) for i in spectrum[anchor_level][1]]
    reached: set[BasisState] = set()
    for a in anchor:
        reached |= neighbors(a, driver)
    above = [s for s in reached if level[s.index] > anchor_level]
    e1 = spectrum[1][0]
    kept = [
        (s, float(energies[s.index]), int(level[s.index]))
        for s in above
        if cutoff.admits(int(level[s.index]), float(energies[s.index]), e1)
    ]
    kept.sort(key=lambda t: (t[1], t[0].index))
    return LensSet(anchor_level, anchor, kept, cutoff, sorted({int(level[s.index]) for s in above}))


@dataclass
class Prediction:
    outcome: str  # no-anticrossing | anticrossing | inconclusive
    rationale: str
    gs: LensSet
    fs: LensSet

    def to_json(self) -> dict:
        return {
            "schema_version": "1",
            "prediction": self.outcome,
            "rationale": self.rationale,
            "cutoff": self.gs.cutoff.describe(),
            "gs": self.gs.to_json(),
            "fs": self.fs.to_json(),
        }


def predict(ising: IsingModel, driver: DriverSpec, cutoff: Cutoff = Cutoff()) -> Prediction:
    """Compare lens(GS) with lens(FS): the side with the lower-lying neighbor (then more neighbors) dominates."""
    if not driver.is_stoquastic:
        raise ValueError(
            "LENS prediction assumes the uniform initial ground state; "
            f"XX driver with lambda={driver.lam} > 0 does not have it"
        )
    spectrum = brute_force_ising(ising)
    gs = lens_set(0, ising, driver, cutoff, spectrum)
    fs = lens_set(1, ising, driver, cutoff, spectrum)
    g_min = min(gs.levels, default=np.inf)
    f_min = min(fs.levels, default=np.inf)
    if g_min < f_min:
        winner, why = "gs", f"lowest GS neighbor level {g_min} < lowest FS neighbor level {f_min}"
    elif f_min < g_min:
        winner, why = "fs", f"lowest FS neighbor level {f_min} < lowest GS neighbor level {g_min}"
    elif len(gs.neighbors) != len(fs.neighbors):
        winner = "gs" if len(gs.neighbors) > len(fs.neighbors) else "fs"
        why = f"tied lowest level {g_min}; counts GS={len(gs.neighbors)} FS={len(fs.neighbors)}"
    else:
        return Prediction("inconclusive", f"tied lowest level {g_min} and equal counts", gs, fs)
    outcome = "no-anticrossing" if winner == "gs" else "anticrossing"
    return Prediction(outcome, f"{winner.upper()} has more LENS: {why}", gs, fs)


def spectrum_table(ising: IsingModel, driver: DriverSpec, levels: int = 17) -> list[dict]:
    """Lowest levels with markers for states adjacent (by one driver term) to GS or FS states."""
    spectrum = brute_force_ising(ising)
    n = ising.n
    near_gs: set[int] = set()
    near_fs: set[int] = set()
    for target, anchor in ((near_gs, spectrum[0][1]), (near_fs, spectrum[1][1] if len(spectrum) > 1 else [])):
        for i in anchor:
            target.update(s.index for s in neighbors(BasisState(i, n), driver))
    rows = []
    for k, (e, states) in enumerate(spectrum[:levels]):
        for i in states:
            rows.append({
                "level": k,
                "bits": BasisState(i, n).bits,
                "energy": e,
                "gs_neighbor": i in near_gs,
                "fs_neighbor": i in near_fs,
            })
    return rows
