"""Configuration weights and exact partition functions.

Everything here is exact: parameters are ``Fraction`` and every sum runs over
the full state space.  The Ising, random-cluster, even-subgraph and worm
measures all live on the same graph, so per-subset combinatorics (size,
component count, odd vertices) are tabulated once per graph.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import comb
from numbers import Rational
from typing import Sequence

from .graph import (
    DEFAULT_MAX_VERTICES,
    Graph,
    GuardError,
    UnionFind,
    bits,
    check_guard,
    component_count,
    odd_mask,
    popcount,
)
from .reports import Check

Number = Fraction | int | float | str


def as_fraction(x: Number) -> Fraction:
    """Exact rational from an int, Fraction, decimal string or float.

    Floats go through their shortest repr, so ``0.1`` becomes ``1/10``.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(str(x).strip())


@dataclass(frozen=True)
class Params:
    """Model parameters with their conversion relations.

    ``p_rc = 1 - 1/beta`` and ``p_even = p_rc / 2``.  ``beta`` is ``None`` at
    ``p_rc = 1`` (infinite coupling).
    """

    p_rc: Fraction
    n: int
    q: Fraction = Fraction(2)

    def __post_init__(self):
        object.__setattr__(self, "p_rc", as_fraction(self.p_rc))
        object.__setattr__(self, "q", as_fraction(self.q))
        if not 0 < self.p_rc <= 1:
            raise ValueError(f"p_rc must lie in (0, 1], got {self.p_rc}")
        if self.q <= 0:
            raise ValueError(f"q must be positive, got {self.q}")
        if self.n < 1:
            raise ValueError("n must be positive")
        assert self.p_even == self.p_rc / 2
        assert 0 < self.p_prime <= 1

    @classmethod
    def from_beta(cls, beta: Number, n: int, q: Number = 2) -> "Params":
        beta = as_fraction(beta)
        if beta <= 1:
            raise ValueError(f"beta must exceed 1 (ferromagnetic), got {beta}")
        return cls(1 - 1 / beta, n, as_fraction(q))

    @classmethod
    def from_p_even(cls, p_even: Number, n: int, q: Number = 2) -> "Params":
        return cls(2 * as_fraction(p_even), n, as_fraction(q))

    @property
    def beta(self) -> Fraction | None:
        return None if self.p_rc == 1 else 1 / (1 - self.p_rc)

    @property
    def p_even(self) -> Fraction:
        return self.p_rc / 2

    @property
    def p_prime(self) -> Fraction:
        return self.p_even / (1 - self.p_even)

    @property
    def penalty(self) -> Fraction:
        return Fraction(1, self.n * self.n)

    def as_dict(self) -> dict:
        return {
            "beta": self.beta,
            "p_rc": self.p_rc,
            "p_even": self.p_even,
            "p_prime": self.p_prime,
            "q": self.q,
        }


# ---------------------------------------------------------------------------
# Per-graph subset tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SubsetTable:
    """For each edge bitmask: size, component count, odd-vertex mask, pair count."""

    size: tuple[int, ...]
    kappa: tuple[int, ...]
    odd: tuple[int, ...]
    pairs: tuple[int, ...]

    def stratum(self, k: int) -> list[int]:
        return [s for s, o in enumerate(self.odd) if popcount(o) == k]


@lru_cache(maxsize=64)
def _table(g: Graph) -> SubsetTable:
    total = 1 << g.m
    size = [0] * total
    odd = [0] * total
    kappa = [0] * total
    pairs = [0] * total
    ends = g.endpoint_masks
    for s in range(1, total):
        low = (s & -s).bit_length() - 1
        prev = s & (s - 1)
        size[s] = size[prev] + 1
        odd[s] = odd[prev] ^ ends[low]
    for s in range(total):
        uf = UnionFind(g.n)
        for i in bits(s):
            u, v = g.edges[i]
            uf.union(u, v)
        kappa[s] = uf.components
        pairs[s] = sum(comb(uf.size[v], 2) for v in range(g.n) if uf.find(v) == v)
    return SubsetTable(tuple(size), tuple(kappa), tuple(odd), tuple(pairs))


def subset_table(g: Graph, max_edges: int | None = None) -> SubsetTable:
    check_guard(g, max_edges)
    return _table(g)


def _powers(x: Fraction, upto: int) -> list[Fraction]:
    out = [Fraction(1)]
    for _ in range(upto):
        out.append(out[-1] * x)
    return out


# ---------------------------------------------------------------------------
# Weights
# ---------------------------------------------------------------------------


def subset_weight(g: Graph, s: int, p: Number) -> Fraction:
    """``p^|s| (1-p)^(m-|s|)``."""
    p = as_fraction(p)
    if not 0 <= p <= 1:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    k = popcount(s)
    return p**k * (1 - p) ** (g.m - k)


def rc_weight(g: Graph, s: int, p: Number, q: Number = 2) -> Fraction:
    return subset_weight(g, s, p) * as_fraction(q) ** component_count(g, s)


def worm_weight(g: Graph, s: int, p: Number) -> Fraction:
    """Even subsets weigh ``w_p``, two-hole subsets ``w_p / n^2``, the rest 0."""
    holes = popcount(odd_mask(g, s))
    if holes == 0:
        return subset_weight(g, s, p)
    if holes == 2:
        return subset_weight(g, s, p) / (g.n * g.n)
    return Fraction(0)


def _wp_vector(g: Graph, p: Fraction, table: SubsetTable) -> list[Fraction]:
    pw = _powers(p, g.m)
    qw = _powers(1 - p, g.m)
    return [pw[k] * qw[g.m - k] for k in table.size]


# ---------------------------------------------------------------------------
# Partition functions
# ---------------------------------------------------------------------------


def ising_partition(g: Graph, beta: Number, max_vertices: int = DEFAULT_MAX_VERTICES) -> Fraction:
    """Sum of ``beta^(monochromatic edges)`` over all 2^n spin assignments."""
    if g.n > max_vertices:
        raise GuardError(f"spin enumeration refused: n={g.n} exceeds vertex limit {max_vertices}")
    beta = as_fraction(beta)
    bw = _powers(beta, g.m)
    total = Fraction(0)
    counts = [0] * (g.m + 1)
    for sigma in range(1 << g.n):
        mono = sum(1 for u, v in g.edges if ((sigma >> u) ^ (sigma >> v)) & 1 == 0)
        counts[mono] += 1
    for k, c in enumerate(counts):
        total += c * bw[k]
    return total


def rc_partition(g: Graph, p: Number, q: Number = 2, max_edges: int | None = None) -> Fraction:
    p, q = as_fraction(p), as_fraction(q)
    t = subset_table(g, max_edges)
    qw = _powers(q, g.n)
    return sum((w * qw[k] for w, k in zip(_wp_vector(g, p, t), t.kappa)), Fraction(0))


def rc_measure(g: Graph, p: Number, q: Number = 2, max_edges: int | None = None) -> list[Fraction]:
    """Normalized random-cluster probabilities indexed by edge bitmask."""
    p, q = as_fraction(p), as_fraction(q)
    t = subset_table(g, max_edges)
    qw = _powers(q, g.n)
    raw = [w * qw[k] for w, k in zip(_wp_vector(g, p, t), t.kappa)]
    z = sum(raw, Fraction(0))
    return [x / z for x in raw]


def stratum_partition(g: Graph, p: Number, k: int, max_edges: int | None = None) -> Fraction:
    """Total ``w_p`` over subsets with exactly ``k`` odd-degree vertices."""
    p = as_fraction(p)
    t = subset_table(g, max_edges)
    wp = _wp_vector(g, p, t)
    return sum((wp[s] for s in range(len(wp)) if popcount(t.odd[s]) == k), Fraction(0))


def even_partition(g: Graph, p: Number, max_edges: int | None = None) -> Fraction:
    return stratum_partition(g, p, 0, max_edges)


def worm_partition(g: Graph, p: Number, max_edges: int | None = None) -> Fraction:
    p = as_fraction(p)
    t = subset_table(g, max_edges)
    wp = _wp_vector(g, p, t)
    pen = Fraction(1, g.n * g.n)
    total = Fraction(0)
    for s, o in enumerate(t.odd):
        holes = popcount(o)
        if holes == 0:
            total += wp[s]
        elif holes == 2:
            total += pen * wp[s]
    return total


def hole_partition(g: Graph, p: Number, u: int, v: int, max_edges: int | None = None) -> Fraction:
    """Total ``w_p`` over subsets whose odd vertices are exactly ``{u, v}``."""
    if u == v:
        raise ValueError("hole_partition needs two distinct vertices")
    p = as_fraction(p)
    t = subset_table(g, max_edges)
    wp = _wp_vector(g, p, t)
    target = (1 << u) | (1 << v)
    return sum((wp[s] for s, o in enumerate(t.odd) if o == target), Fraction(0))


def even_states(g: Graph, max_edges: int | None = None) -> list[int]:
    return subset_table(g, max_edges).stratum(0)


def worm_states(g: Graph, max_edges: int | None = None) -> list[int]:
    t = subset_table(g, max_edges)
    return [s for s, o in enumerate(t.odd) if popcount(o) in (0, 2)]


def even_measure(g: Graph, p: Number, max_edges: int | None = None) -> dict[int, Fraction]:
    p = as_fraction(p)
    t = subset_table(g, max_edges)
    wp = _wp_vector(g, p, t)
    states = t.stratum(0)
    z = sum((wp[s] for s in states), Fraction(0))
    return {s: wp[s] / z for s in states}


def worm_measure(g: Graph, p: Number, max_edges: int | None = None) -> dict[int, Fraction]:
    p = as_fraction(p)
    t = subset_table(g, max_edges)
    wp = _wp_vector(g, p, t)
    pen = Fraction(1, g.n * g.n)
    raw = {}
    for s, o in enumerate(t.odd):
        holes = popcount(o)
        if holes == 0:
            raw[s] = wp[s]
        elif holes == 2:
            raw[s] = pen * wp[s]
    z = sum(raw.values(), Fraction(0))
    return {s: w / z for s, w in raw.items()}


# ---------------------------------------------------------------------------
# Identities and inequalities
# ---------------------------------------------------------------------------


def verify_equivalence(g: Graph, beta: Number, max_edges: int | None = None) -> list[Check]:
    """Ising, random-cluster (q=2) and even-subgraph partition functions, rescaled, coincide."""
    beta = as_fraction(beta)
    if beta <= 1:
        raise ValueError("equivalence is checked in the ferromagnetic regime beta > 1")
    p_rc = 1 - 1 / beta
    z_ising = ising_partition(g, beta)
    rc_side = beta**g.m * rc_partition(g, p_rc, 2, max_edges)
    even_side = 2**g.n * beta**g.m * even_partition(g, p_rc / 2, max_edges)
    params = {"beta": beta, "p_rc": p_rc, "p_even": p_rc / 2, "q": 2}
    name = g.describe()
    return [
        Check("equivalence.ising_vs_rc", name, params, z_ising, rc_side),
        Check("equivalence.ising_vs_even", name, params, z_ising, even_side),
    ]


def even_count_check(g: Graph, max_edges: int | None = None) -> list[Check]:
    """``|Omega_even(V, r)| = 2^(|r| - n + kappa(r))`` for ``r = E`` and for every ``r``."""
    t = subset_table(g, max_edges)
    # count even subsets of every r at once: N(r) = #{s subset of r : s even}
    even = [1 if o == 0 else 0 for o in t.odd]
    counts = even[:]
    for i in range(g.m):
        bit = 1 << i
        for r in range(1 << g.m):
            if r & bit:
                counts[r] += counts[r ^ bit]
    name = g.describe()
    full = g.full
    checks = [
        Check(
            "even_count.graph",
            name,
            {},
            counts[full],
            2 ** (g.m - g.n + t.kappa[full]),
        )
    ]
    agree = sum(1 for r in range(1 << g.m) if counts[r] == 2 ** (t.size[r] - g.n + t.kappa[r]))
    checks.append(
        Check("even_count.all_spanning_subgraphs", name, {}, agree, 1 << g.m, detail={"subgraphs": 1 << g.m})
    )
    return checks


def hat_pi(g: Graph, p: Number, max_edges: int | None = None) -> list[Fraction]:
    """Law of a worm sample after adding each absent edge with probability ``p/(1-p)``.

    Closed form: proportional to ``p^|R| (1-2p)^|E-R| (N(R) + N'(R)/n^2)`` with
    ``N = 2^(|R|-n+kappa)`` and ``N' = N * c(R)``.
    """
    p = as_fraction(p)
    if not 0 < p <= Fraction(1, 2):
        raise ValueError("hat_pi needs 0 < p <= 1/2")
    t = subset_table(g, max_edges)
    pw = _powers(p, g.m)
    qw = _powers(1 - 2 * p, g.m)
    n2 = g.n * g.n
    raw = []
    for r in range(1 << g.m):
        exponent = t.size[r] - g.n + t.kappa[r]
        count = Fraction(2) ** exponent
        raw.append(pw[t.size[r]] * qw[g.m - t.size[r]] * count * (1 + Fraction(t.pairs[r], n2)))
    z = sum(raw, Fraction(0))
    return [x / z for x in raw]


def hat_pi_convolution(g: Graph, p: Number, max_edges: int | None = None) -> list[Fraction]:
    """Same law computed by pushing the worm measure through the lifting kernel."""
    from .paths import delta

    p = as_fraction(p)
    pp = p / (1 - p)
    out = [Fraction(0)] * (1 << g.m)
    for w, pw in worm_measure(g, p, max_edges).items():
        free = g.full & ~w
        sub = free
        while True:
            z = w | sub
            out[z] += pw * delta(g, w, z, pp)
            if sub == 0:
                break
            sub = (sub - 1) & free
    return out


def lifted_law(g: Graph, p: Number, max_edges: int | None = None) -> list[Fraction]:
    """Exact law of an even-subgraph sample lifted by the coupling, by enumeration."""
    from .paths import delta

    p = as_fraction(p)
    pp = p / (1 - p)
    out = [Fraction(0)] * (1 << g.m)
    for w, pw in even_measure(g, p, max_edges).items():
        free = g.full & ~w
        sub = free
        while True:
            out[w | sub] += pw * delta(g, w, w | sub, pp)
            if sub == 0:
                break
            sub = (sub - 1) & free
    return out


def distortion_checks(g: Graph, p: Number, max_edges: int | None = None) -> list[Check]:
    """Lifted worm law against the random-cluster law at ``(2p, 2)``."""
    p = as_fraction(p)
    t = subset_table(g, max_edges)
    closed = hat_pi(g, p, max_edges)
    conv = hat_pi_convolution(g, p, max_edges)
    rc = rc_measure(g, 2 * p, 2, max_edges)
    name = g.describe()
    params = {"p_even": p, "p_rc": 2 * p, "q": 2}
    support = [r for r in range(1 << g.m) if rc[r] > 0]
    ratios = {r: closed[r] / rc[r] for r in support}
    max_r = max(ratios, key=lambda r: (ratios[r], -r))
    # hat_pi / pi_RC must be proportional to 1 + c(R)/n^2
    n2 = g.n * g.n
    shapes = {ratios[r] / (1 + Fraction(t.pairs[r], n2)) for r in support}
    leaked = sum((closed[r] for r in range(1 << g.m) if rc[r] == 0), Fraction(0))
    return [
        Check("distortion.routes_agree", name, params, closed == conv, True),
        Check(
            "distortion.max_ratio",
            name,
            params,
            ratios[max_r],
            Fraction(3, 2),
            "<=",
            detail={"argmax_subset": max_r},
        ),
        Check("distortion.ratio_shape", name, params, len(shapes), 1),
        Check("distortion.support", name, params, leaked, Fraction(0)),
    ]


def hole_checks(g: Graph, p: Number, max_edges: int | None = None) -> list[Check]:
    """Two-hole sums never exceed the even sum; ``Z_2 <= C(n,2) Z_0``; ``Z_worm <= 3/2 Z_0``."""
    p = as_fraction(p)
    name = g.describe()
    params = {"p_even": p}
    z0 = even_partition(g, p, max_edges)
    z2 = stratum_partition(g, p, 2, max_edges)
    zw = worm_partition(g, p, max_edges)
    worst = Fraction(0)
    worst_pair = None
    for u, v in combinations(range(g.n), 2):
        zuv = hole_partition(g, p, u, v, max_edges)
        if worst_pair is None or zuv > worst:
            worst, worst_pair = zuv, (u, v)
    checks = []
    if worst_pair is not None:
        checks.append(Check("holes.max_pair_vs_even", name, params, worst, z0, "<=", detail={"pair": worst_pair}))
    checks += [
        Check("holes.two_hole_total", name, params, z2, comb(g.n, 2) * z0, "<="),
        Check("holes.worm_identity", name, params, zw, z0 + z2 / (g.n * g.n)),
        Check("holes.worm_vs_even", name, params, zw, Fraction(3, 2) * z0, "<="),
    ]
    return checks


def empty_state_check(g: Graph, p_rc: Number, max_edges: int | None = None) -> Check:
    """At ``q = 2`` the empty configuration carries at least ``(1-p)^m`` mass."""
    p_rc = as_fraction(p_rc)
    pi0 = rc_measure(g, p_rc, 2, max_edges)[0]
    return Check("rc.empty_state_mass", g.describe(), {"p_rc": p_rc, "q": 2}, (1 - p_rc) ** g.m, pi0, "<=")


def require_q2(q: Number) -> None:
    if as_fraction(q) != 2:
        raise ValueError(f"these checks are defined for q = 2 only, got q = {q}")


def rc_flip_ratios_global(g: Graph, s: int, p: Fraction, q: Fraction) -> Sequence[Fraction]:
    """``pi_RC(s xor e) / pi_RC(s)`` for every edge, from whole-subset weights."""
    base = rc_weight(g, s, p, q)
    return [rc_weight(g, s ^ (1 << e), p, q) / base for e in range(g.m)]
