"""Undirected multigraphs and the combinatorics every other module leans on.

Edge subsets are plain ``int`` bitmasks over the graph's edge indices: bit ``i``
set means edge ``i`` is present.  Symmetric difference is ``^``, union ``|``,
set-minus ``a & ~b`` and cardinality ``popcount``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from math import comb
from pathlib import Path
from typing import Iterable, Iterator, Sequence

DEFAULT_MAX_EDGES = 20
DEFAULT_MAX_VERTICES = 20


class GraphError(ValueError):
    """Malformed graph input (self-loop, bad endpoint, unparsable line)."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


class GuardError(RuntimeError):
    """An enumeration would exceed the configured size limit."""


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def bits(mask: int) -> Iterator[int]:
    """Indices of set bits, ascending."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def check_guard(g: "Graph", max_edges: int | None = None, what: str = "enumeration") -> None:
    limit = DEFAULT_MAX_EDGES if max_edges is None else max_edges
    if g.m > limit:
        raise GuardError(f"{what} refused: m={g.m} exceeds edge limit {limit}")


@dataclass(frozen=True)
class Graph:
    """Immutable undirected multigraph on vertices ``0..n-1``.

    Edge order is fixed at construction and defines the edge indices.
    Parallel edges are allowed, self-loops are not.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise GraphError(f"vertex count must be positive, got {self.n}")
        normalized = []
        for i, (u, v) in enumerate(self.edges):
            u, v = int(u), int(v)
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise GraphError(f"edge {i} = ({u},{v}) has an endpoint outside 0..{self.n - 1}")
            if u == v:
                raise GraphError(f"edge {i} = ({u},{v}) is a self-loop")
            normalized.append((u, v))
        object.__setattr__(self, "edges", tuple(normalized))

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def full(self) -> int:
        """Bitmask of the whole edge set."""
        return (1 << self.m) - 1

    @cached_property
    def endpoint_masks(self) -> tuple[int, ...]:
        # vertex bitmask of each edge's endpoints; XOR-ing these gives odd vertices
        return tuple((1 << u) | (1 << v) for u, v in self.edges)

    @cached_property
    def incidence(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """For each vertex, the ``(edge index, other endpoint)`` pairs, by edge index."""
        inc: list[list[tuple[int, int]]] = [[] for _ in range(self.n)]
        for i, (u, v) in enumerate(self.edges):
            inc[u].append((i, v))
            inc[v].append((i, u))
        return tuple(tuple(lst) for lst in inc)

    def describe(self) -> str:
        return self.name or f"n{self.n}m{self.m}"

    def __repr__(self) -> str:
        label = f"{self.name!r}, " if self.name else ""
        return f"Graph({label}n={self.n}, edges={list(self.edges)})"


def build_graph(n: int, edge_list: Iterable[Sequence[int]], name: str = "") -> Graph:
    return Graph(n, tuple((int(e[0]), int(e[1])) for e in edge_list), name=name)


def subset(g: Graph, indices: Iterable[int]) -> int:
    """Bitmask for the given edge indices, validated against ``g``."""
    mask = 0
    for i in indices:
        if not 0 <= i < g.m:
            raise IndexError(f"edge index {i} out of range for m={g.m}")
        mask |= 1 << i
    return mask


def edge_indices(mask: int) -> list[int]:
    return list(bits(mask))


# ---------------------------------------------------------------------------
# Connectivity
# ---------------------------------------------------------------------------


class UnionFind:
    """Disjoint sets over ``0..size-1`` with path halving and union by size."""

    def __init__(self, size: int):
        self.parent = list(range(size))
        self.size = [1] * size
        self.components = size

    def find(self, a: int) -> int:
        parent = self.parent
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.components -= 1
        return True

    def connected(self, a: int, b: int) -> bool:
        return self.find(a) == self.find(b)


def union_find(g: Graph, s: int) -> UnionFind:
    uf = UnionFind(g.n)
    for i in bits(s):
        u, v = g.edges[i]
        uf.union(u, v)
    return uf


def component_count(g: Graph, s: int) -> int:
    """Number of connected components of the spanning subgraph ``(V, s)``."""
    return union_find(g, s).components


def component_sizes(g: Graph, s: int) -> list[int]:
    uf = union_find(g, s)
    return [uf.size[v] for v in range(g.n) if uf.find(v) == v]


def connected_in(g: Graph, s: int, a: int, b: int) -> bool:
    """Whether ``a`` and ``b`` are joined by a path of edges in ``s`` (BFS)."""
    if a == b:
        return True
    seen = 1 << a
    frontier = [a]
    inc = g.incidence
    while frontier:
        nxt = []
        for v in frontier:
            for i, w in inc[v]:
                if (s >> i) & 1 and not (seen >> w) & 1:
                    if w == b:
                        return True
                    seen |= 1 << w
                    nxt.append(w)
        frontier = nxt
    return False


def odd_mask(g: Graph, s: int) -> int:
    """Vertex bitmask of odd-degree vertices in ``(V, s)``."""
    out = 0
    ends = g.endpoint_masks
    for i in bits(s):
        out ^= ends[i]
    return out


def odd_vertices(g: Graph, s: int) -> frozenset[int]:
    return frozenset(bits(odd_mask(g, s)))


def pair_count(g: Graph, s: int) -> int:
    """Sum over components of ``C(size, 2)``: vertex pairs sharing a component."""
    return sum(comb(k, 2) for k in component_sizes(g, s))


# ---------------------------------------------------------------------------
# Cycles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Cycle:
    """A simple cycle traversed from ``vertices[0]``.

    ``edges[i]`` joins ``vertices[i]`` and ``vertices[i+1]`` (cyclically).
    """

    edges: tuple[int, ...]
    vertices: tuple[int, ...]

    @cached_property
    def mask(self) -> int:
        m = 0
        for e in self.edges:
            m |= 1 << e
        return m

    @property
    def key(self) -> tuple[int, tuple[int, ...]]:
        return len(self.edges), tuple(sorted(self.edges))

    def __len__(self) -> int:
        return len(self.edges)


def _orient(g: Graph, edge_set: frozenset[int]) -> Cycle:
    # start at the smallest vertex, leave along the smaller-indexed incident edge
    touched = sorted({v for e in edge_set for v in g.edges[e]})
    start = touched[0]
    first = min(e for e in edge_set if start in g.edges[e])
    order = [first]
    verts = [start]
    u, v = g.edges[first]
    cur = v if u == start else u
    remaining = set(edge_set) - {first}
    while remaining:
        verts.append(cur)
        nxt = min(e for e in remaining if cur in g.edges[e])
        remaining.discard(nxt)
        order.append(nxt)
        a, b = g.edges[nxt]
        cur = b if a == cur else a
    assert cur == start
    return Cycle(tuple(order), tuple(verts))


def _simple_cycle_edge_sets(g: Graph) -> set[frozenset[int]]:
    found: set[frozenset[int]] = set()
    inc = g.incidence
    for s in range(g.n):
        # cycles whose smallest vertex is s: walk only through vertices > s
        stack = [(s, 1 << s, ())]
        while stack:
            v, visited, path = stack.pop()
            for i, w in inc[v]:
                if i in path:
                    continue
                if w == s:
                    if path:
                        found.add(frozenset(path + (i,)))
                elif w > s and not (visited >> w) & 1:
                    stack.append((w, visited | (1 << w), path + (i,)))
    return found


class CycleInventory(tuple):
    """Deterministically ordered tuple of every simple cycle of a graph."""

    def index_of(self, cycle: Cycle) -> int:
        return self.index(cycle)


@lru_cache(maxsize=256)
def _inventory(g: Graph) -> CycleInventory:
    cycles = sorted((_orient(g, es) for es in _simple_cycle_edge_sets(g)), key=lambda c: c.key)
    return CycleInventory(cycles)


def cycle_inventory(g: Graph, max_edges: int | None = None) -> CycleInventory:
    """All simple cycles of ``g`` ordered by ``(length, sorted edge indices)``.

    Parallel edge pairs count as cycles of length 2.
    """
    check_guard(g, max_edges, "cycle enumeration")
    return _inventory(g)


def is_even(g: Graph, s: int) -> bool:
    return odd_mask(g, s) == 0


def even_decomposition(g: Graph, s: int, max_edges: int | None = None) -> list[Cycle]:
    """First edge-disjoint cycle cover of the even subgraph ``s`` in inventory order.

    Takes the earliest inventory cycle contained in the remainder, repeatedly.
    Removing a cycle from an even subgraph leaves an even subgraph, which always
    has a cover, so the greedy choice never needs to be undone.
    """
    if not is_even(g, s):
        raise ValueError(f"subset {s:#b} is not even: odd vertices {sorted(odd_vertices(g, s))}")
    inventory = cycle_inventory(g, max_edges)
    out: list[Cycle] = []
    rest = s
    start = 0
    while rest:
        for idx in range(start, len(inventory)):
            cm = inventory[idx].mask
            if cm & rest == cm:
                out.append(inventory[idx])
                rest &= ~cm
                start = idx + 1
                break
        else:  # pragma: no cover - unreachable for even input
            raise AssertionError("even remainder without a covering cycle")
    return out


def unwinding_order(g: Graph, s: int) -> list[int]:
    """Edges of ``s`` in the order the canonical path flips them."""
    return [e for c in even_decomposition(g, s) for e in c.edges]


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------


def parse_graph(text: str, name: str = "") -> Graph:
    """Read ``"n m"`` then ``m`` lines ``"u v"``; ``#`` comments and blanks skipped."""
    header = None
    edges: list[tuple[int, int]] = []
    expected = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        try:
            nums = [int(x) for x in parts]
        except ValueError:
            raise GraphError(f"line {lineno}: expected integers, got {line!r}", lineno) from None
        if len(nums) != 2:
            raise GraphError(f"line {lineno}: expected two integers, got {line!r}", lineno)
        if header is None:
            header = nums
            if nums[0] < 1 or nums[1] < 0:
                raise GraphError(f"line {lineno}: bad header {line!r}", lineno)
            expected = nums[1]
            continue
        u, v = nums
        if u == v:
            raise GraphError(f"line {lineno}: self-loop ({u},{v})", lineno)
        if not (0 <= u < header[0] and 0 <= v < header[0]):
            raise GraphError(f"line {lineno}: endpoint out of range in ({u},{v})", lineno)
        edges.append((u, v))
    if header is None:
        raise GraphError("empty graph file")
    if len(edges) != expected:
        raise GraphError(f"header declares {expected} edges, found {len(edges)}")
    return Graph(header[0], tuple(edges), name=name)


def read_graph(path: str | Path) -> Graph:
    p = Path(path)
    return parse_graph(p.read_text(), name=p.stem)


def format_graph(g: Graph) -> str:
    lines = [f"{g.n} {g.m}"] + [f"{u} {v}" for u, v in g.edges]
    return "\n".join(lines) + "\n"
