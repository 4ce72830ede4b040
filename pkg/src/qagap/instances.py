"""Problem instances: weighted graphs, Ising models, generators and exhaustive oracles.

Basis convention used throughout the package: bit ``i`` of a basis index is
the boolean variable ``x_i`` of vertex ``i`` (0-based), and the spin is
``s_i = 2 x_i - 1``.  Bit strings are written with vertex 0 first, so the
chain-5 state ``|10101>`` is the independent set {1, 3, 5} in 1-based labels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

MAX_BRUTE_FORCE_N = 24
DEGENERACY_TOL = 1e-12

Edge = tuple[int, int]


def _norm_edge(i: int, j: int) -> Edge:
    i, j = int(i), int(j)
    return (i, j) if i < j else (j, i)


# ---------------------------------------------------------------------------
# basis states


def index_to_bits(index: int, n: int) -> str:
    """Bit string of a basis index, vertex 0 first."""
    return "".join("1" if (index >> i) & 1 else "0" for i in range(n))


def bits_to_index(bits: str) -> int:
    return sum(1 << i for i, c in enumerate(bits) if c == "1")


@dataclass(frozen=True, order=True)
class BasisState:
    index: int
    n: int

    def __post_init__(self):
        if not 0 <= self.index < (1 << self.n):
            raise ValueError(f"basis index {self.index} out of range for n={self.n}")

    @classmethod
    def from_bits(cls, bits: str) -> "BasisState":
        if set(bits) - {"0", "1"}:
            raise ValueError(f"not a bit string: {bits!r}")
        return cls(bits_to_index(bits), len(bits))

    @property
    def bits(self) -> str:
        return index_to_bits(self.index, self.n)

    @property
    def spins(self) -> np.ndarray:
        return 2 * np.array([(self.index >> i) & 1 for i in range(self.n)]) - 1

    def __str__(self) -> str:
        return f"|{self.bits}>"


def spin_table(n: int) -> np.ndarray:
    """(n, 2**n) array of spins, column ``z`` holds the spins of basis index ``z``."""
    idx = np.arange(1 << n, dtype=np.int64)
    return (((idx[None, :] >> np.arange(n)[:, None]) & 1) * 2 - 1).astype(np.int8)


def spin_column(n: int, i: int) -> np.ndarray:
    """Spin of vertex ``i`` for every basis index."""
    idx = np.arange(1 << n, dtype=np.int64)
    return (((idx >> i) & 1) * 2 - 1).astype(np.int8)


def bit_table(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    return ((idx[None, :] >> np.arange(n)[:, None]) & 1).astype(np.int8)


# ---------------------------------------------------------------------------
# weighted graphs


@dataclass(frozen=True)
class WeightedGraph:
    """Vertex-weighted undirected graph, optionally carrying edge penalties."""

    n: int
    weights: tuple[float, ...]
    edges: tuple[Edge, ...]
    penalties: Mapping[Edge, float] | None = None

    def __post_init__(self):
        weights = tuple(float(w) for w in self.weights)
        if len(weights) != self.n:
            raise ValueError(f"expected {self.n} weights, got {len(weights)}")
        if any(not w > 0 for w in weights):
            raise ValueError("vertex weights must be positive")
        edges = []
        seen = set()
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"self-loop at vertex {i}")
            e = _norm_edge(i, j)
            if e[0] < 0 or e[1] >= self.n:
                raise ValueError(f"edge {e} has an endpoint outside 0..{self.n - 1}")
            if e in seen:
                raise ValueError(f"duplicate edge {e}")
            seen.add(e)
            edges.append(e)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "edges", tuple(edges))
        if self.penalties is not None:
            pen = {_norm_edge(*e): float(v) for e, v in self.penalties.items()}
            if set(pen) != seen:
                raise ValueError("penalties must be given for exactly the graph edges")
            for (i, j), lam in pen.items():
                if not lam > min(weights[i], weights[j]):
                    raise ValueError(
                        f"penalty {lam} on edge ({i},{j}) must exceed min(w_i, w_j)"
                    )
            object.__setattr__(self, "penalties", pen)

    def neighbors(self, i: int) -> list[int]:
        return [b if a == i else a for a, b in self.edges if i in (a, b)]

    def with_penalties(
        self,
        default: float | None = None,
        overrides: Iterable[tuple[int, int, float]] = (),
    ) -> "WeightedGraph":
        """Attach penalties: a uniform ``default`` (or min(w_i, w_j) + 1 when None) plus per-edge overrides."""
        pen = {}
        for i, j in self.edges:
            pen[(i, j)] = (
                min(self.weights[i], self.weights[j]) + 1.0 if default is None else float(default)
            )
        for i, j, lam in overrides:
            e = _norm_edge(i, j)
            if e not in pen:
                raise ValueError(f"override for non-edge {e}")
            pen[e] = float(lam)
        return WeightedGraph(self.n, self.weights, self.edges, pen)

    def set_weight(self, vertices: Iterable[int]) -> float:
        return sum(self.weights[v] for v in vertices)

    def is_independent(self, vertices: Iterable[int]) -> bool:
        vs = set(vertices)
        return not any(i in vs and j in vs for i, j in self.edges)


# ---------------------------------------------------------------------------
# Ising models


@dataclass(frozen=True)
class IsingModel:
    """Diagonal problem Hamiltonian  sum h_i s_i + sum J_ij s_i s_j + offset."""

    n: int
    h: tuple[float, ...]
    J: Mapping[Edge, float] = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self):
        h = tuple(float(x) for x in self.h)
        if len(h) != self.n:
            raise ValueError(f"expected {self.n} local fields, got {len(h)}")
        J = {}
        for (i, j), v in dict(self.J).items():
            if i == j:
                raise ValueError(f"self-coupling at {i}")
            e = _norm_edge(i, j)
            if e[0] < 0 or e[1] >= self.n:
                raise ValueError(f"coupling {e} outside 0..{self.n - 1}")
            if e in J:
                raise ValueError(f"duplicate coupling {e}")
            J[e] = float(v)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def edges(self) -> tuple[Edge, ...]:
        return tuple(self.J)

    def energy(self, spins: Sequence[int]) -> float:
        if len(spins) != self.n:
            raise ValueError("spin assignment has wrong length")
        e = self.offset
        for i, hi in enumerate(self.h):
            e += hi * spins[i]
        for (i, j), v in self.J.items():
            e += v * spins[i] * spins[j]
        return e

    def energies(self) -> np.ndarray:
        """Energies of all 2**n basis states, indexed by basis index."""
        e = np.full(1 << self.n, self.offset)
        for i, hi in enumerate(self.h):
            if hi:
                e += hi * spin_column(self.n, i)
        for (i, j), v in self.J.items():
            e += v * (spin_column(self.n, i) * spin_column(self.n, j))
        return e

    def scaled(self, factor: float) -> "IsingModel":
        return IsingModel(
            self.n,
            tuple(factor * x for x in self.h),
            {e: factor * v for e, v in self.J.items()},
            factor * self.offset,
        )

    def max_abs_term(self) -> float:
        return max([abs(x) for x in self.h] + [abs(v) for v in self.J.values()] + [0.0])


# ---------------------------------------------------------------------------
# generators


def gen_chain5(w4: float) -> WeightedGraph:
    """Five-vertex path with weights (1, 1.5, 1, w4, 1).

    ``w4 = 1.49`` makes {1,3,5} the MIS; ``w4 = 1.51`` makes {2,4} (weight 3.01) the MIS.
    """
    if not w4 > 0:
        raise ValueError("w4 must be positive")
    return WeightedGraph(5, (1.0, 1.5, 1.0, float(w4), 1.0), tuple((i, i + 1) for i in range(4)))


def gen_chain7() -> WeightedGraph:
    """Seven-vertex path, unit weights except vertex 4 (1-based) with 1.99."""
    w = [1.0] * 7
    w[3] = 1.99
    return WeightedGraph(7, tuple(w), tuple((i, i + 1) for i in range(6)))


def gen_loop_gadget(n: int, R: float, normalize: bool = False) -> IsingModel:
    """Ferromagnetic loop gadget on ``n`` spins.

    Vertex 0 carries field R-1 and vertex n-1 carries -R.  Two branches of
    (n-2)/2 vertices each join them; every coupling is -R except the two
    couplings touching vertex n-1, which are -R/2.  For n=4 this is
    ``(R-1) z1 - R z4 - R z1 z2 - R z1 z3 - R/2 z2 z4 - R/2 z3 z4``.

    With ``normalize`` the model is divided by R so the largest field or
    coupling magnitude is 1.
    """
    if R < 4:
        raise ValueError("loop gadget needs R >= 4")
    if n < 4 or n % 2:
        raise ValueError("loop gadget needs an even n >= 4")
    m = (n - 2) // 2
    h = [0.0] * n
    h[0] = R - 1.0
    h[n - 1] = -float(R)
    J = {}
    for branch in (range(1, 1 + m), range(1 + m, n - 1)):
        path = [0, *branch, n - 1]
        for a, b in zip(path, path[1:]):
            J[_norm_edge(a, b)] = -R / 2.0 if b == n - 1 else -float(R)
    model = IsingModel(n, tuple(h), J)
    return model.scaled(1.0 / R) if normalize else model


# ---------------------------------------------------------------------------
# MIS <-> Ising


def mis_qubo_value(g: WeightedGraph, x: Sequence[int]) -> float:
    """Y(x) = sum w_i x_i - sum lambda_ij x_i x_j."""
    if g.penalties is None:
        raise ValueError("graph has no penalties")
    y = sum(w * xi for w, xi in zip(g.weights, x))
    for (i, j), lam in g.penalties.items():
        y -= lam * x[i] * x[j]
    return y


def mis_energy_constant(g: WeightedGraph) -> float:
    """Constant C with  E(z) = -4 Y(x) + C  for the model built by :func:`mis_to_ising`."""
    return 2.0 * sum(g.weights) - sum(g.penalties.values())


def mis_to_ising(g: WeightedGraph) -> IsingModel:
    """MIS-Ising model: h_i = sum_nbr lambda_ij - 2 w_i, J_ij = lambda_ij, zero offset.

    Its energy satisfies E(z) = -4 Y(x) + mis_energy_constant(g), so the
    ground state decodes (bit = 1 means "in the set") to the maximum-weight
    independent set; the graph guarantees every penalty exceeds min(w_i, w_j).
    """
    if g.penalties is None:
        raise ValueError("mis_to_ising needs edge penalties; call with_penalties() first")
    h = [-2.0 * w for w in g.weights]
    for (i, j), lam in g.penalties.items():
        h[i] += lam
        h[j] += lam
    return IsingModel(g.n, tuple(h), dict(g.penalties))


# ---------------------------------------------------------------------------
# exhaustive oracles


def _check_size(n: int) -> None:
    if n > MAX_BRUTE_FORCE_N:
        raise ValueError(f"exhaustive enumeration limited to n <= {MAX_BRUTE_FORCE_N}, got {n}")


def brute_force_mis(g: WeightedGraph, tol: float = DEGENERACY_TOL) -> tuple[float, list[frozenset[int]]]:
    """Maximum independent-set weight and every maximizing set (0-based vertices)."""
    _check_size(g.n)
    idx = np.arange(1 << g.n, dtype=np.int64)
    ok = np.ones(idx.shape, dtype=bool)
    for i, j in g.edges:
        ok &= ~(((idx >> i) & 1).astype(bool) & ((idx >> j) & 1).astype(bool))
    weight = np.zeros(idx.shape)
    for i, w in enumerate(g.weights):
        weight += w * ((idx >> i) & 1)
    weight[~ok] = -np.inf
    best = weight.max()
    winners = np.flatnonzero(weight >= best - tol)
    sets = [frozenset(i for i in range(g.n) if (m >> i) & 1) for m in winners.tolist()]
    return float(best), sets


def brute_force_ising(m: IsingModel, tol: float = DEGENERACY_TOL) -> list[tuple[float, list[int]]]:
    """All 2**n energies grouped into levels, ascending: [(energy, [basis indices]), ...]."""
    _check_size(m.n)
    e = m.energies()
    order = np.argsort(e, kind="stable")
    levels: list[tuple[float, list[int]]] = []
    start = 0
    es = e[order]
    for k in range(1, len(es) + 1):
        if k == len(es) or es[k] - es[start] > tol:
            levels.append((float(es[start]), sorted(order[start:k].tolist())))
            start = k
    return levels


def level_of_states(levels: list[tuple[float, list[int]]], n: int) -> np.ndarray:
    """Array mapping basis index -> level index."""
    out = np.empty(1 << n, dtype=np.int64)
    for k, (_, states) in enumerate(levels):
        out[states] = k
    return out


# ---------------------------------------------------------------------------
# JSON


def graph_to_json(g: WeightedGraph) -> dict:
    doc = {
        "kind": "graph",
        "n": g.n,
        "weights": list(g.weights),
        "edges": [list(e) for e in g.edges],
    }
    if g.penalties is not None:
        doc["penalties"] = {"default": None, "overrides": [[i, j, lam] for (i, j), lam in g.penalties.items()]}
    return doc


def ising_to_json(m: IsingModel) -> dict:
    return {
        "kind": "ising",
        "n": m.n,
        "h": list(m.h),
        "J": [[i, j, v] for (i, j), v in m.J.items()],
        "offset": m.offset,
    }


def instance_to_json(inst: WeightedGraph | IsingModel) -> dict:
    return graph_to_json(inst) if isinstance(inst, WeightedGraph) else ising_to_json(inst)


def instance_from_json(doc: Mapping) -> WeightedGraph | IsingModel:
    kind = doc.get("kind")
    n = int(doc["n"])
    if kind == "graph":
        g = WeightedGraph(n, tuple(doc["weights"]), tuple(tuple(e) for e in doc.get("edges", [])))
        pen = doc.get("penalties")
        if pen is not None:
            g = g.with_penalties(pen.get("default"), [tuple(o) for o in pen.get("overrides", [])])
        return g
    if kind == "ising":
        J = {(int(i), int(j)): float(v) for i, j, v in doc.get("J", [])}
        return IsingModel(n, tuple(doc["h"]), J, float(doc.get("offset", 0.0)))
    raise ValueError(f"unknown instance kind {kind!r}")


def load_instance(path: str | Path) -> WeightedGraph | IsingModel:
    return instance_from_json(json.loads(Path(path).read_text()))


def save_instance(inst: WeightedGraph | IsingModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance_to_json(inst), indent=2) + "\n")
