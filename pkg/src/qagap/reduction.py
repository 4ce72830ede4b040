"""Ising -> QUBO -> posiform -> conflict graph -> MIS instance, with decoding and exhaustive checks.

A posiform writes a pseudo-boolean function as a constant plus positive
multiples of products of literals.  Its conflict graph has one vertex per
term (weight = coefficient) and an edge between terms that hold a variable
with opposite polarity.  The maximum of the posiform equals its constant
plus the maximum-weight independent set of that graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .instances import (
    IsingModel,
    WeightedGraph,
    bit_table,
    brute_force_ising,
    brute_force_mis,
    graph_to_json,
    mis_to_ising,
)

Literal = tuple[int, bool]  # (variable, negated)
Term = frozenset  # frozenset[Literal]

MAX_VERIFY_N = 12


def literal_name(lit: Literal) -> str:
    v, neg = lit
    return f"~x{v}" if neg else f"x{v}"


def term_name(term: Term) -> str:
    return "".join(literal_name(l) for l in sorted(term)) or "1"


@dataclass
class Qubo:
    """Maximize  constant + sum linear_i x_i + sum quadratic_ij x_i x_j  over x in {0,1}^n."""

    n: int
    linear: list[float]
    quadratic: dict[tuple[int, int], float] = field(default_factory=dict)
    constant: float = 0.0

    def __post_init__(self):
        if len(self.linear) != self.n:
            raise ValueError("linear coefficients do not match n")
        for i, j in self.quadratic:
            if not 0 <= i < j < self.n:
                raise ValueError(f"invalid quadratic key {(i, j)}")

    def value(self, x) -> float:
        y = self.constant
        for i, c in enumerate(self.linear):
            y += c * x[i]
        for (i, j), c in self.quadratic.items():
            y += c * x[i] * x[j]
        return y

    def values(self) -> np.ndarray:
        X = bit_table(self.n).T.astype(float)
        y = np.full(X.shape[0], self.constant)
        for i, c in enumerate(self.linear):
            y += c * X[:, i]
        for (i, j), c in self.quadratic.items():
            y += c * X[:, i] * X[:, j]
        return y


def ising_to_qubo(m: IsingModel) -> Qubo:
    """Y(x) = -E(2x - 1) / 4, so maximizing Y minimizes E."""
    lin = [-0.5 * hi for hi in m.h]
    quad: dict[tuple[int, int], float] = {}
    const = 0.25 * (sum(m.h) - m.offset)
    for (i, j), v in m.J.items():
        if v == 0:
            continue
        quad[(i, j)] = -v
        lin[i] += 0.5 * v
        lin[j] += 0.5 * v
        const -= 0.25 * v
    return Qubo(m.n, lin, quad, const)


@dataclass
class Posiform:
    n: int
    a_empty: float
    terms: list[tuple[Term, float]]

    def __post_init__(self):
        seen = set()
        for t, c in self.terms:
            if not c > 0:
                raise ValueError(f"non-positive coefficient {c} on {term_name(t)}")
            if any((v, not neg) in t for v, neg in t):
                raise ValueError(f"term {term_name(t)} holds a literal and its complement")
            if t in seen:
                raise ValueError(f"duplicate term {term_name(t)}")
            seen.add(t)

    def value(self, x) -> float:
        y = self.a_empty
        for t, c in self.terms:
            if all(bool(x[v]) != neg for v, neg in t):
                y += c
        return y

    def values(self) -> np.ndarray:
        X = bit_table(self.n).T.astype(bool)
        y = np.full(X.shape[0], self.a_empty)
        for t, c in self.terms:
            on = np.ones(X.shape[0], dtype=bool)
            for v, neg in t:
                on &= ~X[:, v] if neg else X[:, v]
            y += c * on
        return y

    def __str__(self) -> str:
        return " + ".join([f"{self.a_empty:g}"] + [f"{c:g}*{term_name(t)}" for t, c in self.terms])


def qubo_to_posiform(q: Qubo) -> Posiform:
    """Canonical rewriting: -c x_i x_j -> c ~x_i x_j - c x_j (i < j), then -c x_i -> c ~x_i - c."""
    lin = list(q.linear)
    acc: dict[Term, float] = {}
    order: list[Term] = []

    def add(t: Term, c: float) -> None:
        if t not in acc:
            acc[t] = 0.0
            order.append(t)
        acc[t] += c

    for (i, j), c in q.quadratic.items():
        if c > 0:
            add(frozenset({(i, False), (j, False)}), c)
        elif c < 0:
            add(frozenset({(i, True), (j, False)}), -c)
            lin[j] += c
    const = q.constant
    for i, c in enumerate(lin):
        if c > 0:
            add(frozenset({(i, False)}), c)
        elif c < 0:
            add(frozenset({(i, True)}), -c)
            const += c
    terms = [(t, acc[t]) for t in order if acc[t] != 0]
    terms.sort(key=lambda tc: (len(tc[0]), sorted(tc[0])))
    return Posiform(q.n, const, terms)


@dataclass
class ConflictGraph:
    graph: WeightedGraph
    terms: list[Term]
    a_empty: float
    n_vars: int

    def to_json(self) -> dict:
        doc = graph_to_json(self.graph)
        doc["terms"] = [[[v, neg] for v, neg in sorted(t)] for t in self.terms]
        doc["term_names"] = [term_name(t) for t in self.terms]
        doc["a_empty"] = self.a_empty
        doc["n_vars"] = self.n_vars
        return doc

    def to_dot(self) -> str:
        lines = ["graph conflict {"]
        for k, t in enumerate(self.terms):
            lines.append(f'  v{k} [label="{term_name(t)}\\n{self.graph.weights[k]:g}"];')
        for i, j in self.graph.edges:
            lines.append(f"  v{i} -- v{j};")
        lines.append("}")
        return "\n".join(lines) + "\n"

    def decode(self, chosen) -> dict[int, bool]:
        """Literal assignment forced by a set of term vertices (must be independent)."""
        fixed: dict[int, bool] = {}
        for k in chosen:
            for v, neg in self.terms[k]:
                val = not neg
                if fixed.get(v, val) != val:
                    raise ValueError(f"chosen terms conflict on x{v}")
                fixed[v] = val
        return fixed


def conflict_graph(p: Posiform) -> ConflictGraph:
    if not p.terms:
        raise ValueError("posiform has no non-constant terms")
    terms = [t for t, _ in p.terms]
    edges = [
        (a, b)
        for a, b in combinations(range(len(terms)), 2)
        if any((v, not neg) in terms[b] for v, neg in terms[a])
    ]
    g = WeightedGraph(len(terms), tuple(c for _, c in p.terms), tuple(edges))
    return ConflictGraph(g, terms, p.a_empty, p.n)


def _greedy_complete(m: IsingModel, fixed: dict[int, bool]) -> list[int]:
    """Bits for all variables: forced ones from ``fixed``, the rest by single-flip energy descent."""
    x = [int(fixed.get(i, False)) for i in range(m.n)]
    free = [i for i in range(m.n) if i not in fixed]

    def energy(bits):
        return m.energy([2 * b - 1 for b in bits])

    improved = True
    while improved:
        improved = False
        for i in free:
            y = list(x)
            y[i] ^= 1
            if energy(y) < energy(x) - 1e-12:
                x, improved = y, True
    return x


@dataclass
class ReductionReport:
    n: int
    n_terms: int
    n_edges: int
    a_empty: float
    mis_weight: float
    max_phi: float
    verified: bool
    mis_terms: list[str]
    decoded_bits: str
    decoded_energy: float
    ground_energy: float
    decoded_is_ground: bool

    def to_json(self) -> dict:
        doc = dict(self.__dict__)
        doc["schema_version"] = "1"
        return doc


class ReductionError(RuntimeError):
    pass


def reduce(m: IsingModel) -> tuple[Qubo, Posiform, ConflictGraph]:
    q = ising_to_qubo(m)
    p = qubo_to_posiform(q)
    return q, p, conflict_graph(p)


def reduce_and_verify(m: IsingModel) -> tuple[ConflictGraph, ReductionReport]:
    """Run the pipeline and check it exhaustively; any mismatch raises ReductionError."""
    if m.n > MAX_VERIFY_N:
        raise ValueError(f"exhaustive verification limited to n <= {MAX_VERIFY_N}")
    q, p, cg = reduce(m)
    E = m.energies()
    Y = q.values()
    phi = p.values()
    if not np.allclose(-4.0 * Y, E, rtol=0, atol=1e-9 * max(1.0, np.abs(E).max())):
        raise ReductionError("QUBO does not equal -E/4 on every assignment")
    if not np.allclose(phi, Y, rtol=0, atol=1e-9 * max(1.0, np.abs(Y).max())):
        raise ReductionError("posiform differs from QUBO on some assignment")
    mis, sets = brute_force_mis(cg.graph)
    max_phi = float(phi.max())
    total = p.a_empty + mis
    if abs(max_phi - total) > 1e-9 * max(1.0, abs(max_phi)):
        raise ReductionError(f"max phi {max_phi} != a_empty + mis = {total}")
    chosen = sorted(min(sets, key=sorted))
    bits = _greedy_complete(m, cg.decode(chosen))
    e_dec = m.energy([2 * b - 1 for b in bits])
    e_min = float(E.min())
    ok = abs(e_dec - e_min) <= 1e-9 * max(1.0, abs(e_min))
    if not ok:
        raise ReductionError(f"decoded assignment has energy {e_dec}, ground energy is {e_min}")
    report = ReductionReport(
        m.n, len(cg.terms), len(cg.graph.edges), p.a_empty, mis, max_phi, True,
        [term_name(cg.terms[k]) for k in chosen], "".join(map(str, bits)), e_dec, e_min, ok,
    )
    return cg, report


def reduced_instance_to_mis_ising(
    cg: ConflictGraph, default: float | None = None, overrides=()
) -> IsingModel:
    """MIS-Ising model of the conflict graph; penalties default to min(w_i, w_j) + 1."""
    return mis_to_ising(cg.graph.with_penalties(default, overrides))


def decode_reduced_ground_state(cg: ConflictGraph, reduced: IsingModel, original: IsingModel) -> list[int]:
    """Bits of the original model recovered from a ground state of the reduced model."""
    idx = brute_force_ising(reduced)[0][1][0]
    chosen = [k for k in range(reduced.n) if (idx >> k) & 1]
    return _greedy_complete(original, cg.decode(chosen))
