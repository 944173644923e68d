"""Qubit coupling graphs: bipartite layout, couplings, static frequency shifts."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SUBLATTICES = ("A", "B")


@dataclass(frozen=True)
class QubitGraph:
    """Sparse bipartite coupling graph with Ising couplings on every edge.

    Qubits are indexed 1..n to match the usual chain-position convention.
    Every edge must join sublattice A to sublattice B.
    """

    n_qubits: int
    edges: tuple[tuple[int, int, float], ...]  # (i, j, J_ij), i < j
    sublattice: tuple[str, ...]  # label per qubit, length n_qubits

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("graph needs at least one qubit")
        if len(self.sublattice) != self.n_qubits:
            raise ValueError("sublattice labels must cover every qubit")
        for lab in self.sublattice:
            if lab not in SUBLATTICES:
                raise ValueError(f"unknown sublattice label {lab!r}")
        for i, j, _ in self.edges:
            self._check_index(i)
            self._check_index(j)
            if i == j:
                raise ValueError("self-loops are not allowed")
            if self.label(i) == self.label(j):
                raise ValueError(
                    f"edge ({i},{j}) joins two {self.label(i)} qubits; "
                    "graph must be bipartite w.r.t. the stored labels"
                )

    def _check_index(self, q: int):
        if not 1 <= q <= self.n_qubits:
            raise ValueError(f"qubit index {q} out of range 1..{self.n_qubits}")

    def label(self, q: int) -> str:
        self._check_index(q)
        return self.sublattice[q - 1]

    def coupling(self, i: int, j: int) -> float:
        """J_ij, symmetric; 0.0 if (i, j) is not an edge."""
        a, b = min(i, j), max(i, j)
        for u, v, J in self.edges:
            if (u, v) == (a, b):
                return J
        return 0.0

    def has_edge(self, i: int, j: int) -> bool:
        a, b = min(i, j), max(i, j)
        return any((u, v) == (a, b) for u, v, _ in self.edges)

    def neighbors(self, q: int) -> list[int]:
        self._check_index(q)
        out = []
        for u, v, _ in self.edges:
            if u == q:
                out.append(v)
            elif v == q:
                out.append(u)
        return sorted(out)

    def qubits(self, sublattice: str | None = None) -> list[int]:
        if sublattice is None:
            return list(range(1, self.n_qubits + 1))
        return [q for q in range(1, self.n_qubits + 1) if self.label(q) == sublattice]


@dataclass(frozen=True)
class ShiftAssignment:
    """Static per-qubit z-frequency offsets drawn from a zero-mean Gaussian."""

    shifts: tuple[float, ...]  # Delta_i per qubit, 1-based order
    rms: float
    seed: int | None = None

    def __getitem__(self, q: int) -> float:
        return self.shifts[q - 1]

    @property
    def n_qubits(self) -> int:
        return len(self.shifts)


def build_chain(n: int, J: float) -> QubitGraph:
    """Nearest-neighbour chain 1-2-...-n with uniform coupling J.

    Odd positions get sublattice A, even positions B, so the chain is
    2-coloured by construction.
    """
    if n < 1:
        raise ValueError("chain needs n >= 1 qubits")
    edges = tuple((i, i + 1, float(J)) for i in range(1, n))
    labels = tuple("A" if q % 2 == 1 else "B" for q in range(1, n + 1))
    return QubitGraph(n_qubits=n, edges=edges, sublattice=labels)


def validate_parallel_set(
    g: QubitGraph, targets: list[int | tuple[int, int]]
) -> list[tuple[int, int]]:
    """Check that gate targets may run in the same layer.

    Each element of ``targets`` is either a single qubit or a coupled pair
    (must be an edge). Returns the list of offending edges joining two
    distinct target groups; an empty list means the layer is valid.
    """
    groups: dict[int, int] = {}
    for gi, t in enumerate(targets):
        if isinstance(t, tuple):
            a, b = t
            if not g.has_edge(a, b):
                raise ValueError(f"pair {t} is not an edge of the graph")
            members = (a, b)
        else:
            g._check_index(t)
            members = (t,)
        for q in members:
            if q in groups:
                raise ValueError(f"qubit {q} appears in more than one target group")
            groups[q] = gi

    violations = []
    for u, v, _ in g.edges:
        if u in groups and v in groups and groups[u] != groups[v]:
            violations.append((u, v))
    return violations


def draw_shifts(
    g: QubitGraph, delta_rms: float, seed: int | None = None
) -> ShiftAssignment:
    """Draw i.i.d. zero-mean Gaussian shifts with standard deviation delta_rms."""
    if delta_rms < 0:
        raise ValueError("delta_rms must be >= 0")
    if delta_rms == 0:
        vals = np.zeros(g.n_qubits)
    else:
        rng = np.random.default_rng(seed)
        vals = rng.normal(0.0, delta_rms, size=g.n_qubits)
    return ShiftAssignment(shifts=tuple(float(v) for v in vals), rms=delta_rms, seed=seed)


def save_graph(g: QubitGraph, path) -> None:
    """Write the graph in the line-oriented text format (qubit/edge records)."""
    lines = ["# qubit <index> <sublattice>", "# edge <i> <j> <J>"]
    for q in range(1, g.n_qubits + 1):
        lines.append(f"qubit {q} {g.label(q)}")
    for i, j, J in g.edges:
        lines.append(f"edge {i} {j} {J!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_graph(source: str) -> QubitGraph:
    """Load a graph from a file path or the ``chain:n[:J]`` shorthand."""
    if source.startswith("chain:"):
        parts = source.split(":")
        n = int(parts[1])
        J = float(parts[2]) if len(parts) > 2 else 0.0
        return build_chain(n, J)

    labels: dict[int, str] = {}
    edges: list[tuple[int, int, float]] = []
    with open(source) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            if tok[0] == "qubit" and len(tok) == 3:
                labels[int(tok[1])] = tok[2]
            elif tok[0] == "edge" and len(tok) == 4:
                i, j = int(tok[1]), int(tok[2])
                edges.append((min(i, j), max(i, j), float(tok[3])))
            else:
                raise ValueError(f"unrecognised graph line: {raw.rstrip()}")
    if not labels:
        raise ValueError("graph file defines no qubits")
    n = max(labels)
    if sorted(labels) != list(range(1, n + 1)):
        raise ValueError("qubit indices must be contiguous from 1")
    return QubitGraph(
        n_qubits=n,
        edges=tuple(edges),
        sublattice=tuple(labels[q] for q in range(1, n + 1)),
    )
