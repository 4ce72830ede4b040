"""Problem-scale reparametrization of the anneal and the min-gap scale factor.

With H(s) = (1-s) H_D + s H_P and H^a(t) = (1-t) H_D + t a H_P one has
H^a(t) = (1 + (a-1) t) H(s(t)) for s(t) = t a / (1 + (a-1) t).  Spectra
scale by that factor and eigenvectors are shared, so with s* and t* the
min-gap positions of H and H^a,

    1 + (a-1) t*  <=  gap^a / gap  <=  1 + (a-1) t(s*),   t* <= t(s*) < s*.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .hamiltonian import SystemHamiltonian
from .spectra import GOLDEN_XTOL, gap_at, locate_min_gap, lowest_eigenpairs

DEFAULT_SHARPNESS = 1.0
DEFAULT_FACTOR_RTOL = 5e-3


def _check_alpha(alpha: float) -> None:
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")


def t_of_s(alpha: float, s):
    """t(s) = s / (alpha (1-s) + s); t(1) = 1."""
    _check_alpha(alpha)
    s = np.asarray(s, dtype=float)
    t = s / (alpha * (1.0 - s) + s)
    return float(t) if t.ndim == 0 else t


def s_of_t(alpha: float, t):
    """Inverse of t_of_s: s(t) = alpha t / (alpha t + 1 - t); s(1) = 1."""
    _check_alpha(alpha)
    t = np.asarray(t, dtype=float)
    # same form as t_of_s with 1/alpha; rounds better than t alpha / (1 + (alpha-1) t)
    s = alpha * t / (alpha * t + (1.0 - t))
    return float(s) if s.ndim == 0 else s


def _groups(values: np.ndarray, tol: float) -> list[tuple[int, int]]:
    out, start = [], 0
    for i in range(1, len(values) + 1):
        if i == len(values) or values[i] - values[start] > tol:
            out.append((start, i))
            start = i
    return out


def eigen_scaling_check(sys: SystemHamiltonian, alpha: float, t: float, k: int = 4, **solver) -> tuple[float, float]:
    """Max |E_i^a(t) - (1+(a-1)t) E_i(s(t))| over i < k, and max eigenvector misalignment.

    Misalignment is 1 - (smallest principal cosine) between matching
    eigenspaces, which reduces to 1 - |<v^a, v>| for non-degenerate levels.
    """
    _check_alpha(alpha)
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    kk = min(k + 3, sys.dim - 1)
    s = s_of_t(alpha, t)
    scaled = sys.with_alpha(sys.alpha * alpha)
    A = lowest_eigenpairs(scaled, t, kk, **solver)
    B = lowest_eigenpairs(sys, s, kk, **solver)
    mult = 1.0 + (alpha - 1.0) * t
    resid = float(np.max(np.abs(A.values[:k] - mult * B.values[:k])))
    tol = 1e-8 * max(1.0, float(np.abs(B.values).max()))
    mis = 0.0
    for lo, hi in _groups(B.values, tol):
        if lo >= k or hi >= kk:
            continue
        sv = np.linalg.svd(A.vectors[:, lo:hi].T @ B.vectors[:, lo:hi], compute_uv=False)
        mis = max(mis, float(1.0 - sv.min()))
    return resid, mis


@dataclass
class ScalingReport:
    alpha: float
    s_star: float
    t_star: float
    t_of_s_star: float
    gap1: float
    gap_alpha: float
    factor: float
    predicted_factor: float
    lower_bound: float
    sharpness: float
    sharp: bool
    checks: dict = field(default_factory=dict)
    requested_alpha: float | None = None

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_json(self) -> dict:
        doc = asdict(self)
        doc["passed"] = self.passed
        doc["schema_version"] = "1"
        return doc


def curvature_ratio(sys: SystemHamiltonian, s_star: float, gap: float, h: float = 1e-3, **solver) -> float:
    """(g(s*+h) + g(s*-h) - 2 g(s*)) / g(s*): large for the narrow minimum of an avoided crossing."""
    lo, hi = max(s_star - h, 0.0), min(s_star + h, 1.0 - 1e-12)
    return (gap_at(sys, lo, **solver) + gap_at(sys, hi, **solver) - 2.0 * gap) / gap


def min_gap_scale_report(
    sys: SystemHamiltonian,
    alpha: float,
    *,
    grid=None,
    xtol: float = GOLDEN_XTOL,
    sharpness_threshold: float = DEFAULT_SHARPNESS,
    factor_rtol: float = DEFAULT_FACTOR_RTOL,
    **solver,
) -> ScalingReport:
    """Locate both min-gaps independently and test the scale-factor claims.

    ``sys`` plays the role of H^1 and ``sys.with_alpha(sys.alpha * alpha)``
    of H^alpha.  For alpha < 1 the roles are swapped, comparing H^alpha with
    its 1/alpha multiple, so the report always has alpha >= 1.
    """
    _check_alpha(alpha)
    requested = None
    if alpha < 1.0:
        requested = alpha
        sys, alpha = sys.with_alpha(sys.alpha * alpha), 1.0 / alpha
    base = locate_min_gap(sys, grid=grid, xtol=xtol, **solver)
    scaled = locate_min_gap(sys.with_alpha(sys.alpha * alpha), grid=grid, xtol=xtol, **solver)
    ts = t_of_s(alpha, base.s_star)
    factor = scaled.min_gap / base.min_gap
    predicted = 1.0 + (alpha - 1.0) * ts
    lower = 1.0 + (alpha - 1.0) * scaled.s_star
    kappa = curvature_ratio(sys, base.s_star, base.min_gap, **solver)
    sharp = kappa > sharpness_threshold
    pos_tol = 10 * xtol + 1e-9
    f_tol = 1e-6 * factor
    checks = {
        "ordering_t_star_le_t_of_s_star": scaled.s_star <= ts + pos_tol,
        "ordering_t_of_s_star_lt_s_star": alpha == 1.0 or ts < base.s_star,
        "sandwich_lower": lower <= factor + f_tol,
        "sandwich_upper": factor <= predicted + f_tol,
    }
    if sharp:
        checks["factor_matches_prediction"] = abs(factor - predicted) <= factor_rtol * predicted
    return ScalingReport(
        alpha, base.s_star, scaled.s_star, ts, base.min_gap, scaled.min_gap,
        factor, predicted, lower, float(kappa), bool(sharp), checks, requested,
    )
