"""Matrix-free annealing Hamiltonians  H(s) = (1-s) H_driver + s * alpha * H_Ising.

Drivers
-------
``X``:   H_X = - sum_i sigma^x_i
``XX``:  H_XX = - sum_i sigma^x_i + lam * sum_{ij in E_driver} sigma^x_i sigma^x_j

``lam`` is signed.  The stoquastic XX driver (all off-diagonal entries
non-positive) is ``lam = -1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import numpy as np

from .instances import IsingModel, _norm_edge


@dataclass(frozen=True)
class DriverSpec:
    kind: str = "X"
    lam: float = -1.0
    edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.kind not in ("X", "XX"):
            raise ValueError(f"driver kind must be 'X' or 'XX', got {self.kind!r}")
        edges = tuple(sorted({_norm_edge(i, j) for i, j in self.edges}))
        if any(i == j for i, j in edges):
            raise ValueError("driver edge with identical endpoints")
        if self.kind == "X":
            edges = ()
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "lam", float(self.lam))

    @classmethod
    def x(cls) -> "DriverSpec":
        return cls("X")

    @classmethod
    def xx(cls, edges: Iterable[tuple[int, int]], lam: float = -1.0) -> "DriverSpec":
        return cls("XX", lam, tuple(edges))

    @property
    def is_stoquastic(self) -> bool:
        return self.kind == "X" or self.lam <= 0 or not self.edges

    def to_json(self) -> dict:
        if self.kind == "X":
            return {"driver": "X"}
        return {"driver": "XX", "lambda": self.lam, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_json(cls, doc: dict, problem_edges: Iterable[tuple[int, int]] = ()) -> "DriverSpec":
        kind = doc.get("driver", "X")
        if kind == "X":
            return cls.x()
        edges = doc.get("edges", "same-as-problem")
        if edges == "same-as-problem":
            edges = list(problem_edges)
        return cls.xx([tuple(e) for e in edges], float(doc.get("lambda", -1.0)))


def _flip(v: np.ndarray, n: int, bit: int) -> np.ndarray:
    """Permute amplitudes so that out[z] = v[z ^ (1 << bit)]; works on (N,) and (N, b)."""
    tail = v.shape[1:]
    w = v.reshape((1 << (n - 1 - bit), 2, 1 << bit) + tail)
    return w[:, ::-1].reshape(v.shape)


def apply_driver(driver: DriverSpec, n: int, v: np.ndarray) -> np.ndarray:
    out = np.zeros_like(v)
    flipped = [_flip(v, n, i) for i in range(n)]
    for f in flipped:
        out -= f
    if driver.kind == "XX" and driver.lam:
        for i, j in driver.edges:
            out += driver.lam * _flip(flipped[i], n, j)
    return out


def driver_norm_bound(driver: DriverSpec, n: int) -> float:
    return n + (abs(driver.lam) * len(driver.edges) if driver.kind == "XX" else 0.0)


def dense_driver(driver: DriverSpec, n: int) -> np.ndarray:
    N = 1 << n
    idx = np.arange(N)
    D = np.zeros((N, N))
    for i in range(n):
        D[idx, idx ^ (1 << i)] -= 1.0
    if driver.kind == "XX":
        for i, j in driver.edges:
            D[idx, idx ^ (1 << i) ^ (1 << j)] += driver.lam
    return D


@dataclass(frozen=True)
class SystemHamiltonian:
    """The interpolated operator; ``alpha`` scales the problem part only."""

    ising: IsingModel
    driver: DriverSpec = field(default_factory=DriverSpec.x)
    alpha: float = 1.0

    def __post_init__(self):
        for i, j in self.driver.edges:
            if j >= self.ising.n:
                raise ValueError(f"driver edge ({i},{j}) outside 0..{self.ising.n - 1}")

    @property
    def n(self) -> int:
        return self.ising.n

    @property
    def dim(self) -> int:
        return 1 << self.ising.n

    @cached_property
    def diagonal(self) -> np.ndarray:
        """alpha * E_Ising(z) for every basis index."""
        return self.alpha * self.ising.energies()

    def with_alpha(self, alpha: float) -> "SystemHamiltonian":
        return SystemHamiltonian(self.ising, self.driver, alpha)

    def norm_bound(self, s: float) -> float:
        """Cheap upper bound on ||H(s)||, used to scale tolerances."""
        return (1 - s) * driver_norm_bound(self.driver, self.n) + s * float(np.abs(self.diagonal).max())

    def apply(self, s: float, v: np.ndarray) -> np.ndarray:
        """H(s) v without forming the matrix; ``v`` may be a vector or an (N, b) block."""
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"s must lie in [0, 1], got {s}")
        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.dim:
            raise ValueError(f"vector length {v.shape[0]} != 2**n = {self.dim}")
        diag = self.diagonal if v.ndim == 1 else self.diagonal[:, None]
        out = s * diag * v
        if s < 1.0:
            out += (1.0 - s) * apply_driver(self.driver, self.n, v)
        return out

    def dense(self, s: float) -> np.ndarray:
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"s must lie in [0, 1], got {s}")
        H = (1.0 - s) * dense_driver(self.driver, self.n)
        H[np.diag_indices_from(H)] += s * self.diagonal
        return H


def driver_ground_state(driver: DriverSpec, n: int) -> tuple[np.ndarray, float]:
    """Uniform superposition and its driver energy, for drivers where it is the ground state.

    The uniform vector is an eigenvector of every X and XX driver; it is the
    ground state when all off-diagonal entries are non-positive (lam <= 0).
    """
    if not driver.is_stoquastic:
        raise ValueError(
            f"XX driver with lambda={driver.lam} > 0 is non-stoquastic; "
            "its ground state is not the uniform superposition"
        )
    N = 1 << n
    energy = -float(n) + (driver.lam * len(driver.edges) if driver.kind == "XX" else 0.0)
    return np.full(N, 1.0 / np.sqrt(N)), energy
