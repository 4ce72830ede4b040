"""Overlap traces a_k(s), b_k(s) and the (gamma, epsilon) anti-crossing detector.

``a_k(s)`` is the weight of the instantaneous ground state on the level-k
eigenspace of the problem Hamiltonian, ``b_k(s)`` the same for the
instantaneous first excited state.  Weights are projector norms, so they do
not depend on how a degenerate level is represented.

Detector
--------
The avoided-crossing point is where the ground state holds equal GS and FS
weight, i.e. where ``a_0 - a_1`` changes sign (only crossings where
``a_0 + a_1 >= 1 - gamma'`` count, which drops the trivial equal-weight
region near s = 0).  At that point the two-state weights ``a_0/(a_0+a_1)``
and, at the matching crossing of ``b_0 - b_1``, ``b_1/(b_0+b_1)`` must be
within ``epsilon`` of 1/2.  A window of half-width delta (a multiple of the
grid step) around the crossing certifies the anti-crossing when

* ``a_0+a_1`` and ``b_0+b_1`` stay >= 1 - gamma throughout,
* at the left edge a_0, b_1 <= gamma and a_1, b_0 >= 1 - gamma, with the
  mirror image at the right edge,
* the window contains the min-gap position and the b-crossing.

A *weak* anti-crossing passes the right half with gamma but the left half
only with gamma' (sums and edge values).  The reported delta is the
smallest certifying half-width; ``delta_max`` is the largest found.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.optimize import brentq, least_squares

from .hamiltonian import SystemHamiltonian
from .instances import IsingModel, brute_force_ising
from .spectra import MinGap, SpectralSweep, lowest_eigenpairs

DEFAULT_GAMMA = 0.15
DEFAULT_EPSILON = 0.001
DEFAULT_GAMMA_PRIME = 0.5
DEFAULT_LEVELS = 5


class DetectionError(ValueError):
    pass


@dataclass(frozen=True)
class FinalBasis:
    n: int
    levels: tuple[float, ...]
    subspaces: tuple[tuple[int, ...], ...]

    @classmethod
    def from_ising(cls, ising: IsingModel, K: int | None = None) -> "FinalBasis":
        spectrum = brute_force_ising(ising)
        if K is not None:
            spectrum = spectrum[:K]
        return cls(ising.n, tuple(e for e, _ in spectrum), tuple(tuple(s) for _, s in spectrum))

    @property
    def m0(self) -> int:
        return len(self.subspaces[0])

    @property
    def m1(self) -> int:
        return len(self.subspaces[1])

    def lowest_states(self, count: int) -> frozenset[int]:
        """The ``count`` lowest basis states counted with multiplicity; must not split a level."""
        out: list[int] = []
        for states in self.subspaces:
            if len(out) >= count:
                break
            out.extend(states)
        if len(out) != count:
            raise ValueError(f"{count} states would split a degenerate level (or exceed the stored levels)")
        return frozenset(out)

    def weights(self, vec: np.ndarray, K: int) -> np.ndarray:
        """Squared norm of the projection of ``vec`` on each of the first K levels."""
        sq = np.asarray(vec) ** 2
        return np.array([sq[list(self.subspaces[k])].sum() for k in range(K)])


@dataclass
class OverlapTraces:
    grid: np.ndarray
    a: np.ndarray  # (K, len(grid))
    b: np.ndarray

    @property
    def K(self) -> int:
        return self.a.shape[0]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["s", *[f"a_{k}" for k in range(self.K)], *[f"b_{k}" for k in range(self.K)]])
            for j, s in enumerate(self.grid):
                w.writerow([f"{v:.17g}" for v in (s, *self.a[:, j], *self.b[:, j])])


def overlaps(sweep: SpectralSweep, final: FinalBasis, K: int = DEFAULT_LEVELS) -> OverlapTraces:
    if sweep.k < 2:
        raise ValueError("sweep must track at least two levels")
    if K > len(final.levels):
        raise ValueError(f"K={K} exceeds the {len(final.levels)} final levels available")
    a = np.empty((K, len(sweep.grid)))
    b = np.empty_like(a)
    for j, sol in enumerate(sweep.solutions):
        if sol.vectors is None:
            raise ValueError("sweep was run without eigenvectors")
        if sol.vectors.shape[0] != 1 << final.n:
            raise ValueError("sweep and final basis have different dimensions")
        a[:, j] = final.weights(sol.vectors[:, 0], K)
        b[:, j] = final.weights(sol.vectors[:, sol.level_one_index()], K)
    return OverlapTraces(np.asarray(sweep.grid), a, b)


def make_probe(sys: SystemHamiltonian, final: FinalBasis, k: int = 4) -> Callable[[float], np.ndarray]:
    """s -> (a_0, a_1, b_0, b_1) by a fresh eigensolve; used to refine crossing points."""
    k = max(k, final.m0 + 1)

    def probe(s: float) -> np.ndarray:
        sol = lowest_eigenpairs(sys, float(s), k)
        a = final.weights(sol.vectors[:, 0], 2)
        b = final.weights(sol.vectors[:, sol.level_one_index()], 2)
        return np.array([a[0], a[1], b[0], b[1]])

    return probe


@dataclass
class AntiCrossingReport:
    verdict: str
    s_star: float
    min_gap: float
    s_cross: float | None
    s_cross_b: float | None
    delta: float | None
    delta_max: float | None
    gamma: float
    epsilon: float
    gamma_prime: float
    epsilon_attained: float | None
    witness: dict = field(default_factory=dict)
    at_min_gap: dict = field(default_factory=dict)
    reason: str = ""

    def to_json(self) -> dict:
        doc = asdict(self)
        doc["schema_version"] = "1"
        return doc


def _sign_changes(diff: np.ndarray, ok: np.ndarray) -> list[int]:
    sd = np.sign(diff)
    return [i for i in range(len(diff) - 1) if sd[i] != sd[i + 1] and ok[i] and ok[i + 1]]


def _values_at(traces: OverlapTraces, j: int) -> dict:
    a0, a1 = traces.a[0, j], traces.a[1, j]
    b0, b1 = traces.b[0, j], traces.b[1, j]
    return {
        "s": float(traces.grid[j]),
        "a0": float(a0), "a1": float(a1), "b0": float(b0), "b1": float(b1),
        "sum_a": float(a0 + a1), "sum_b": float(b0 + b1),
    }


def detect(
    traces: OverlapTraces,
    gap: MinGap,
    gamma: float = DEFAULT_GAMMA,
    epsilon: float = DEFAULT_EPSILON,
    gamma_prime: float = DEFAULT_GAMMA_PRIME,
    probe: Callable[[float], np.ndarray] | None = None,
) -> AntiCrossingReport:
    """Classify the min-gap region as a strong, weak or absent anti-crossing."""
    if not (0 <= gamma <= gamma_prime and epsilon >= 0):
        raise ValueError("need 0 <= gamma <= gamma_prime and epsilon >= 0")
    grid = traces.grid
    steps = np.diff(grid)
    h = float(np.median(steps))
    if not np.allclose(steps, h, rtol=1e-6, atol=1e-12):
        raise DetectionError("detector needs a uniform grid")
    s_star = gap.s_star
    if s_star - grid[0] < h or grid[-1] - s_star < h:
        raise DetectionError(f"min-gap position {s_star} within one grid step of the grid ends")

    a0, a1 = traces.a[0], traces.a[1]
    b0, b1 = traces.b[0], traces.b[1]
    sum_a, sum_b = a0 + a1, b0 + b1
    nearest = int(np.argmin(np.abs(grid - s_star)))
    report = AntiCrossingReport(
        "none", s_star, gap.min_gap, None, None, None, None,
        gamma, epsilon, gamma_prime, None, at_min_gap=_values_at(traces, nearest),
    )
    if probe is not None:
        va = probe(s_star)
        report.at_min_gap = {
            "s": s_star, "a0": float(va[0]), "a1": float(va[1]), "b0": float(va[2]), "b1": float(va[3]),
            "sum_a": float(va[0] + va[1]), "sum_b": float(va[2] + va[3]),
        }

    a_cross = _sign_changes(a0 - a1, sum_a >= 1 - gamma_prime)
    if not a_cross:
        report.reason = "ground state never exchanges GS and FS weight"
        return report
    i = min(a_cross, key=lambda i: abs(grid[i] - s_star))
    s_x, a_hat = _refine(grid, i, a0, a1, probe, lambda v: v[0] - v[1], lambda v: (v[0], v[1]))
    b_cross = _sign_changes(b0 - b1, sum_b >= 1 - gamma_prime)
    if not b_cross:
        report.s_cross = s_x
        report.reason = "first excited state never exchanges GS and FS weight"
        return report
    ib = min(b_cross, key=lambda i: abs(grid[i] - s_x))
    s_xb, b_hat = _refine(grid, ib, b0, b1, probe, lambda v: v[2] - v[3], lambda v: (v[2], v[3]))
    eps_att = max(abs(a_hat - 0.5), abs(b_hat - 0.5))
    report.s_cross, report.s_cross_b, report.epsilon_attained = s_x, s_xb, eps_att
    if eps_att > epsilon:
        report.reason = f"equal-weight condition needs epsilon >= {eps_att:.3g}"
        return report

    c = int(np.argmin(np.abs(grid - s_x)))
    strong, weak = [], []
    for k in range(2, min(c, len(grid) - 1 - c) + 1):
        L, R = c - k, c + k
        if abs(s_xb - s_x) > k * h or not grid[L] <= s_star <= grid[R]:
            continue
        right = (
            min(sum_a[c : R + 1].min(), sum_b[c : R + 1].min()) >= 1 - gamma
            and a0[R] >= 1 - gamma and a1[R] <= gamma and b0[R] <= gamma and b1[R] >= 1 - gamma
        )
        if not right:
            continue

        def left_ok(g):
            return (
                min(sum_a[L : c + 1].min(), sum_b[L : c + 1].min()) >= 1 - g
                and a0[L] <= g and a1[L] >= 1 - g and b0[L] >= 1 - g and b1[L] <= g
            )

        if left_ok(gamma):
            strong.append(k)
        elif left_ok(gamma_prime):
            weak.append(k)
    chosen = strong or weak
    if not chosen:
        report.reason = "no window satisfies the composition and exchange conditions"
        return report
    report.verdict = "strong" if strong else "weak"
    k_min, k_max = min(chosen), max(chosen)
    report.delta, report.delta_max = k_min * h, k_max * h
    report.witness = {
        "left": _values_at(traces, c - k_min),
        "center": _values_at(traces, c),
        "right": _values_at(traces, c + k_min),
    }
    report.reason = (
        "all conditions hold" if strong else "left half only within gamma_prime"
    )
    return report


def _refine(grid, i, x0, x1, probe, diff, pair) -> tuple[float, float]:
    """Crossing of x0 and x1 inside [grid[i], grid[i+1]] and the two-state weight there."""
    if probe is None:
        d_lo, d_hi = x0[i] - x1[i], x0[i + 1] - x1[i + 1]
        t = d_lo / (d_lo - d_hi)
        s = grid[i] + t * (grid[i + 1] - grid[i])
        p = (1 - t) * x0[i] + t * x0[i + 1]
        q = (1 - t) * x1[i] + t * x1[i + 1]
        return float(s), float(p / (p + q))
    s = brentq(lambda s: diff(probe(s)), grid[i], grid[i + 1], xtol=1e-13)
    p, q = pair(probe(s))
    return float(s), float(p / (p + q))


# ---------------------------------------------------------------------------
# Wilkinson hyperbola


@dataclass
class HyperbolaFit:
    delta_min: float
    A: float
    B: float
    e_star: float
    s_star: float
    rms_residual: float
    condition: float


class HyperbolaFitError(ValueError):
    pass


def hyperbola(s, e_star, B, delta, A, s0):
    root = 0.5 * np.sqrt(delta**2 + A**2 * (s - s0) ** 2)
    mid = e_star + B * (s - s0)
    return mid - root, mid + root


def hyperbola_fit(sweep: SpectralSweep, s_star: float, window: float, max_condition: float = 1e12) -> HyperbolaFit:
    """Least-squares fit of the two lowest levels near s* to the avoided-crossing hyperbola."""
    sel = [j for j, s in enumerate(sweep.grid) if abs(s - s_star) <= window + 1e-15]
    if len(sel) < 7:
        raise ValueError(f"hyperbola fit needs >= 7 points in the window, got {len(sel)}")
    s = np.asarray(sweep.grid)[sel]
    E = sweep.values[sel]
    lo, hi = E[:, 0], E[:, 1]
    gap = hi - lo
    mid = 0.5 * (lo + hi)
    j0 = int(np.argmin(gap))
    slope_mid = np.polyfit(s - s[j0], mid, 1)[0]
    edge = max(abs(s[0] - s[j0]), abs(s[-1] - s[j0]), 1e-12)
    A0 = max(np.sqrt(max(gap.max() ** 2 - gap[j0] ** 2, 0.0)) / edge, 1e-12)
    x0 = np.array([mid[j0], slope_mid, gap[j0], A0, s[j0]])
    scale = np.array([max(abs(mid[j0]), 1.0), max(abs(slope_mid), 1.0), max(gap[j0], 1e-12), A0, max(window, 1e-12)])

    def resid(p):
        m, pl = hyperbola(s, *(p * scale))
        return np.concatenate([m - lo, pl - hi]) / max(gap[j0], 1e-15)

    fit = least_squares(resid, x0 / scale, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=20000)
    sv = np.linalg.svd(fit.jac, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
    if cond > max_condition:
        raise HyperbolaFitError(f"ill-conditioned hyperbola fit (condition {cond:.3g}); gap curve too flat")
    e_star, B, delta, A, s0 = fit.x * scale
    rms = float(np.sqrt(np.mean((fit.fun * max(gap[j0], 1e-15)) ** 2)))
    return HyperbolaFit(abs(float(delta)), abs(float(A)), float(B), float(e_star), float(s0), rms, cond)


# ---------------------------------------------------------------------------
# Hamming-weight signal


def hamming_distance_fs_gs(final: FinalBasis) -> int:
    return min(bin(x ^ y).count("1") for x in final.subspaces[1] for y in final.subspaces[0])


def hamming_weight_signal(traces: OverlapTraces, final: FinalBasis) -> list[tuple[float, float]]:
    """a_1(s) times the GS-FS Hamming distance, one value per grid point."""
    d = hamming_distance_fs_gs(final)
    return [(float(s), float(traces.a[1, j] * d)) for j, s in enumerate(traces.grid)]
