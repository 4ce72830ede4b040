"""Lowest eigenpairs of H(s), s-grid sweeps, min-gap location and gap-scaling fits."""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .hamiltonian import SystemHamiltonian, driver_ground_state
from .krylov import EigensolverError, block_lanczos

logger = logging.getLogger(__name__)

DENSE_THRESHOLD = 10
LEVEL_TOL = 1e-10
DEFAULT_STEP = 1e-3
GOLDEN_XTOL = 1e-9


@dataclass
class EigenSolution:
    s: float
    values: np.ndarray
    vectors: np.ndarray | None = None
    residuals: np.ndarray | None = None

    @property
    def gap(self) -> float:
        return level_gap(self.values)

    def level_one_index(self) -> int:
        """Column of the first eigenvector above the (possibly degenerate) ground level."""
        above = np.flatnonzero(self.values > self.values[0] + LEVEL_TOL)
        if not above.size:
            raise ValueError(f"all {len(self.values)} tracked eigenvalues are degenerate at s={self.s}")
        return int(above[0])


def level_gap(values: np.ndarray) -> float:
    """E_1 - E_0 where eigenvalues within LEVEL_TOL of E_0 count as the same level."""
    above = values[values > values[0] + LEVEL_TOL]
    if not above.size:
        raise ValueError("no eigenvalue above the ground level among the tracked ones")
    return float(above[0] - values[0])


def default_grid(step: float = DEFAULT_STEP) -> np.ndarray:
    count = int(round(1.0 / step))
    if not math.isclose(count * step, 1.0, rel_tol=1e-9):
        raise ValueError("grid step must divide 1")
    return np.linspace(0.0, 1.0, count + 1)


def lowest_eigenpairs(
    sys: SystemHamiltonian,
    s: float,
    k: int,
    *,
    vectors: bool = True,
    dense_threshold: int = DENSE_THRESHOLD,
    method: str = "auto",
    seed: int = 0,
    start: np.ndarray | None = None,
    tol: float = 1e-10,
) -> EigenSolution:
    """k lowest eigenpairs of H(s): LAPACK for small n, block Lanczos above ``dense_threshold``."""
    if not 1 <= k < sys.dim:
        raise ValueError(f"need 1 <= k < 2**n, got k={k}")
    if method == "auto":
        method = "dense" if sys.n <= dense_threshold else "lanczos"
    if method == "dense":
        H = sys.dense(s)
        if vectors:
            w, v = scipy.linalg.eigh(H, subset_by_index=[0, k - 1])
        else:
            w = scipy.linalg.eigh(H, eigvals_only=True, subset_by_index=[0, k - 1])
            v = None
        return EigenSolution(s, w, v)
    if method != "lanczos":
        raise ValueError(f"unknown eigensolver method {method!r}")
    scale = max(sys.norm_bound(s), 1.0)
    # a wanted level inside a near-degenerate cluster (the n single flips near s=0)
    # converges only once the block spans the cluster, so retry with a wider block
    blocks = [k + 2, min(max(2 * (k + 2), sys.n + k + 2), sys.dim - 1)]
    for b in blocks:
        try:
            w, v, res = block_lanczos(
                lambda X: sys.apply(s, X), sys.dim, k, block=b, tol=tol * scale, seed=seed, start=start
            )
            break
        except EigensolverError as exc:
            if b == blocks[-1]:
                raise EigensolverError(f"at s={s}: {exc}", exc.residuals, s) from None
            logger.info("block size %d did not converge at s=%g; widening", b, s)
    return EigenSolution(s, w, v if vectors else None, res)


@dataclass
class SpectralSweep:
    grid: np.ndarray
    solutions: list[EigenSolution]
    k: int

    @property
    def values(self) -> np.ndarray:
        return np.array([sol.values for sol in self.solutions])

    @property
    def gaps(self) -> np.ndarray:
        return np.array([sol.gap for sol in self.solutions])

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["s", *[f"E_{i}" for i in range(self.k)], "gap"])
            for sol in self.solutions:
                w.writerow([_g17(sol.s), *map(_g17, sol.values), _g17(sol.gap)])


def _g17(x: float) -> str:
    return f"{float(x):.17g}"


def fix_phases(solutions: Sequence[EigenSolution], sys: SystemHamiltonian) -> None:
    """Flip eigenvector signs for continuity along the grid (in place)."""
    prev = None
    for sol in solutions:
        if sol.vectors is None:
            return
        V = sol.vectors
        if prev is None:
            if sol.s == 0.0 and sys.driver.is_stoquastic:
                ref = driver_ground_state(sys.driver, sys.n)[0]
                signs = np.where(ref @ V < 0, -1.0, 1.0)
            else:
                signs = np.where(V.sum(axis=0) < 0, -1.0, 1.0)
        else:
            signs = np.where(np.einsum("ij,ij->j", prev, V) < 0, -1.0, 1.0)
        V *= signs
        prev = V


def sweep(
    sys: SystemHamiltonian,
    grid: Sequence[float] | None = None,
    k: int = 5,
    *,
    workers: int = 1,
    keep_vectors: bool = True,
    **solver,
) -> SpectralSweep:
    """Solve every grid point; sequential runs warm-start the iterative solver from the previous point."""
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly ascending with at least two points")
    if grid[0] < 0 or grid[-1] > 1:
        raise ValueError("grid must lie within [0, 1]")

    def solve(s, start=None):
        try:
            return lowest_eigenpairs(sys, float(s), k, vectors=True, start=start, **solver)
        except EigensolverError:
            raise
        except Exception as exc:
            raise EigensolverError(f"solver failed at s={s}: {exc}", s=float(s)) from exc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            solutions = list(pool.map(solve, grid))
    else:
        solutions = []
        prev = None
        for s in grid:
            sol = solve(s, prev)
            solutions.append(sol)
            prev = sol.vectors
    fix_phases(solutions, sys)
    if not keep_vectors:
        for sol in solutions:
            sol.vectors = None
    return SpectralSweep(grid, solutions, k)


def golden_section(f: Callable[[float], float], a: float, b: float, xtol: float) -> tuple[float, float]:
    """Minimize a unimodal function on [a, b]; returns (x, f(x))."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > xtol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    fx = f(x)
    for xx, ff in ((c, fc), (d, fd)):
        if ff < fx:
            x, fx = xx, ff
    return x, fx


@dataclass
class MinGap:
    s_star: float
    min_gap: float
    candidates: list[tuple[float, float]] = field(default_factory=list)
    coarse_grid: np.ndarray | None = None
    coarse_gaps: np.ndarray | None = None

    def to_json(self) -> dict:
        return {
            "s_star": self.s_star,
            "min_gap": self.min_gap,
            "candidates": [{"s": s, "gap": g} for s, g in self.candidates],
        }


def gap_at(sys: SystemHamiltonian, s: float, k: int = 2, **solver) -> float:
    return lowest_eigenpairs(sys, s, k, vectors=False, **solver).gap


def locate_min_gap(
    sys: SystemHamiltonian,
    k: int = 2,
    *,
    grid: Sequence[float] | None = None,
    xtol: float = GOLDEN_XTOL,
    max_refine: int = 8,
    near: float = 0.10,
    **solver,
) -> MinGap:
    """Coarse scan over [0, 1) then golden-section refinement of each local minimum.

    Local minima whose refined gap lies within ``near`` (relative) of the best
    are all reported in ``candidates``; the smallest is primary.
    """
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    pts = grid[grid < 1.0]
    if len(pts) < 3:
        raise ValueError("coarse grid needs at least three points below s=1")
    warm = {"start": None}
    iterative = solver.get("method", "auto") == "lanczos" or (
        solver.get("method", "auto") == "auto" and sys.n > solver.get("dense_threshold", DENSE_THRESHOLD)
    )

    def g(s):
        # iterative solves keep vectors only to warm-start the next point
        sol = lowest_eigenpairs(sys, float(s), k, vectors=iterative, start=warm["start"], **solver)
        if sol.vectors is not None:
            warm["start"] = sol.vectors
        return sol.gap

    coarse = np.array([g(s) for s in pts])
    interior = [
        i
        for i in range(len(pts))
        if (i == 0 or coarse[i] <= coarse[i - 1]) and (i == len(pts) - 1 or coarse[i] <= coarse[i + 1])
    ]
    interior.sort(key=lambda i: coarse[i])
    refined = []
    for i in interior[:max_refine]:
        lo = pts[max(i - 1, 0)]
        hi = pts[i + 1] if i + 1 < len(pts) else min(1.0 - 1e-12, pts[i] + (pts[i] - pts[i - 1]))
        warm["start"] = None
        refined.append(golden_section(g, float(lo), float(hi), xtol))
    refined.sort(key=lambda p: p[1])
    best_s, best_g = refined[0]
    cands = [(float(s), float(v)) for s, v in refined if v <= (1.0 + near) * best_g]
    return MinGap(float(best_s), float(best_g), cands, pts, coarse)


def fit_gap_exponent(points: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Least-squares slope c of ln(gap) against n (gap ~ A e^{c n}) and the R^2 of the fit."""
    if len(points) < 4:
        raise ValueError("need at least four (n, gap) points")
    n = np.array([p[0] for p in points], dtype=float)
    gap = np.array([p[1] for p in points], dtype=float)
    if np.any(gap <= 0):
        raise ValueError("gaps must be positive")
    y = np.log(gap)
    A = np.vstack([n, np.ones_like(n)]).T
    (c, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (c * n + b)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0 else 1.0 - float((resid**2).sum()) / ss_tot
    return float(c), r2
