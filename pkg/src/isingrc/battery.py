"""Small named graphs used by the verification suite."""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations

from .graph import Graph, UnionFind, build_graph

P_EVEN_BATTERY = (Fraction(1, 10), Fraction(1, 4), Fraction(2, 5), Fraction(1, 2))
# the single-bond-flip chain needs p_rc < 1, so the last value is dropped there
P_EVEN_CHAIN = P_EVEN_BATTERY[:3]
P_RC_MIXING = (Fraction(1, 5), Fraction(1, 2), Fraction(4, 5))


def single_edge() -> Graph:
    return build_graph(2, [(0, 1)], name="single_edge")


def parallel_pair() -> Graph:
    return build_graph(2, [(0, 1), (0, 1)], name="parallel_pair")


def path(n: int = 3) -> Graph:
    return build_graph(n, [(i, i + 1) for i in range(n - 1)], name=f"P{n}")


def cycle(n: int) -> Graph:
    return build_graph(n, [(i, (i + 1) % n) for i in range(n)], name=f"C{n}")


def complete(n: int) -> Graph:
    return build_graph(n, list(combinations(range(n), 2)), name=f"K{n}")


def triangle() -> Graph:
    return build_graph(3, [(0, 1), (1, 2), (0, 2)], name="K3")


def k4_minus_edge() -> Graph:
    return build_graph(4, [e for e in combinations(range(4), 2) if e != (2, 3)], name="K4-e")


def bowtie() -> Graph:
    return build_graph(5, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4)], name="bowtie")


def random_connected(n: int = 5, m: int = 8, seed: int = 7) -> Graph:
    """Random simple connected graph: a random spanning tree plus random extra edges."""
    rng = random.Random(seed)
    order = list(range(n))
    rng.shuffle(order)
    edges = []
    for i in range(1, n):
        edges.append(tuple(sorted((order[i], order[rng.randrange(i)]))))
    rest = [e for e in combinations(range(n), 2) if e not in edges]
    rng.shuffle(rest)
    edges += rest[: m - len(edges)]
    edges.sort()
    g = build_graph(n, edges, name=f"random_n{n}_m{m}_s{seed}")
    uf = UnionFind(n)
    for u, v in g.edges:
        uf.union(u, v)
    assert uf.components == 1
    return g


def standard_battery() -> list[Graph]:
    return [
        single_edge(),
        parallel_pair(),
        path(3),
        triangle(),
        cycle(4),
        k4_minus_edge(),
        complete(4),
        random_connected(),
    ]


NAMED = {
    "single_edge": single_edge,
    "parallel_pair": parallel_pair,
    "P3": lambda: path(3),
    "K3": triangle,
    "C4": lambda: cycle(4),
    "K4-e": k4_minus_edge,
    "K4": lambda: complete(4),
    "bowtie": bowtie,
    "random": random_connected,
}
