"""Worm canonical paths, their lift to random-cluster flows, and exact traffic.

Canonical paths between even subgraphs ``I`` and ``F`` unwind the cycles of
``I xor F`` one at a time in inventory order, so every intermediate state is
even or has exactly two odd vertices.  Lifting a path adds absent edges with
probability ``p' = p / (1 - p)`` at the start, mimics each flip, and ends with
a re-randomization tail over the edges outside the final state.  Traffic
through each random-cluster transition is computed two ways:

* the closed per-``w`` sums (polynomial in the worm state space), and
* brute-force enumeration of every lifted trajectory (tiny graphs only).

All arithmetic is in ``Fraction``.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator

from .graph import Graph, GuardError, bits, check_guard, is_even, odd_mask, popcount, unwinding_order
from .measures import Number, as_fraction, even_measure, rc_measure, worm_measure, worm_states

BRUTE_FORCE_MAX_EDGES = 6

Transition = tuple[int, int]


def delta(g: Graph, w: int, z: int, pp: Number) -> Fraction:
    """Probability that lifting ``w`` yields exactly ``z``: ``p'^|z-w| (1-p')^|E-z|``."""
    if w & ~z:
        raise ValueError(f"lift target {z:#b} does not contain {w:#b}")
    pp = as_fraction(pp)
    return pp ** popcount(z & ~w) * (1 - pp) ** (g.m - popcount(z))


@dataclass(frozen=True)
class WormPath:
    """States ``w_0 .. w_l`` of one canonical path, with its flipped edges."""

    states: tuple[int, ...]
    edges: tuple[int, ...]
    weight: Fraction | None = None

    @property
    def start(self) -> int:
        return self.states[0]

    @property
    def end(self) -> int:
        return self.states[-1]

    def __len__(self) -> int:
        return len(self.edges)

    def transitions(self) -> Iterator[Transition]:
        return zip(self.states, self.states[1:])

    def position(self, w: int) -> int:
        return self.states.index(w)


@lru_cache(maxsize=4096)
def _order(g: Graph, diff: int) -> tuple[int, ...]:
    return tuple(unwinding_order(g, diff))


def worm_path(g: Graph, I: int, F: int, p: Number | None = None) -> WormPath:
    """Canonical path from ``I`` to ``F`` (both even), weighted by the even measure if ``p`` is given."""
    if not is_even(g, I) or not is_even(g, F):
        raise ValueError("canonical paths join even subgraphs only")
    order = _order(g, I ^ F)
    states = [I]
    cur = I
    for e in order:
        cur ^= 1 << e
        states.append(cur)
    assert cur == F
    weight = None
    if p is not None:
        law = even_measure(g, p)
        weight = law[I] * law[F]
    return WormPath(tuple(states), order, weight)


def encode(g: Graph, I: int, F: int, w: int, e_flip: int) -> int:
    """``I xor F xor w`` for a transition ``(w, w xor {e_flip})`` on the path from ``I`` to ``F``."""
    path = worm_path(g, I, F)
    nxt = w ^ (1 << e_flip)
    if (w, nxt) not in set(path.transitions()):
        raise ValueError("transition does not lie on the canonical path of (I, F)")
    return I ^ F ^ w


class DecodeError(ValueError):
    pass


def decode(g: Graph, w: int, w_next: int, U: int) -> tuple[int, int]:
    """Recover the endpoints ``(I, F)`` of the unique path through ``(w, w_next)`` encoded by ``U``."""
    flipped = w ^ w_next
    if popcount(flipped) != 1:
        raise DecodeError("not a single-edge transition")
    diff = w ^ U
    if not is_even(g, diff) or not diff & flipped:
        raise DecodeError(f"{U:#b} is not an encoding for this transition")
    order = _order(g, diff)
    pos = order.index(flipped.bit_length() - 1)
    before = 0
    for e in order[:pos]:
        before |= 1 << e
    # edges already flipped carry I's value in U; the rest carry it in w
    I = (U & before) | (w & ~before)
    F = I ^ diff
    if not (is_even(g, I) and is_even(g, F)):
        raise DecodeError(f"{U:#b} decodes to non-even endpoints")
    path = worm_path(g, I, F)
    if (w, w_next) not in set(path.transitions()):
        raise DecodeError(f"{U:#b} is not in the image of the encoding for this transition")
    return I, F


# ---------------------------------------------------------------------------
# Worm path family and its traffic
# ---------------------------------------------------------------------------


@dataclass
class WormFlow:
    """All canonical paths between ordered pairs of even subgraphs, with traffic."""

    graph: Graph
    p: Fraction
    paths: list[WormPath]
    traffic: dict[Transition, Fraction]
    ending: dict[int, Fraction]  # total weight of paths ending at each state

    @property
    def max_length(self) -> int:
        return max((len(pth) for pth in self.paths), default=0)


@lru_cache(maxsize=64)
def worm_flow(g: Graph, p: Fraction, max_edges: int | None = None) -> WormFlow:
    p = as_fraction(p)
    check_guard(g, max_edges, "worm path enumeration")
    law = even_measure(g, p, max_edges)
    evens = sorted(law)
    paths = []
    traffic: dict[Transition, Fraction] = defaultdict(Fraction)
    ending: dict[int, Fraction] = defaultdict(Fraction)
    for I in evens:
        for F in evens:
            base = worm_path(g, I, F)
            path = WormPath(base.states, base.edges, law[I] * law[F])
            paths.append(path)
            for tr in path.transitions():
                traffic[tr] += path.weight
            ending[F] += path.weight
    return WormFlow(g, p, paths, dict(traffic), dict(ending))


@dataclass
class TrafficReport:
    """Aggregated flow weight through one transition, against named upper bounds."""

    transition: Transition
    kind: str  # "insert" | "delete" | "loop"
    traffic: Fraction
    bounds: dict[str, Fraction] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.traffic >= 0 and all(self.traffic <= b for b in self.bounds.values())

    def to_record(self) -> dict:
        return {
            "from": self.transition[0],
            "to": self.transition[1],
            "kind": self.kind,
            "traffic": self.traffic,
            "bounds": self.bounds,
            "pass": self.passed,
        }


def _kind(z: int, z2: int) -> str:
    if z == z2:
        return "loop"
    return "insert" if z2 & ~z else "delete"


def path_legality(g: Graph, path: WormPath) -> list[str]:
    """Violated path invariants, if any."""
    problems = []
    for a, b in path.transitions():
        if popcount(a ^ b) != 1:
            problems.append("non-adjacent step")
    for s in path.states:
        if popcount(odd_mask(g, s)) not in (0, 2):
            problems.append(f"state {s:#b} outside worm space")
    if len(set(path.states)) != len(path.states):
        problems.append("repeated state")
    if len(path) > g.m:
        problems.append("longer than m")
    return problems


def worm_traffic(g: Graph, p: Number, transition: Transition, max_edges: int | None = None) -> TrafficReport:
    """Traffic of the worm path family through ``(w, w')`` with its two bounds:
    ``n^4 pi_worm(w)`` always, and ``n^4 pi_worm(w) p/(1-p)`` for insertions."""
    p = as_fraction(p)
    w, w2 = transition
    if popcount(w ^ w2) != 1:
        raise ValueError("worm transitions flip exactly one edge")
    flow = worm_flow(g, p, max_edges)
    pw = worm_measure(g, p, max_edges).get(w, Fraction(0))
    n4 = g.n**4
    bounds = {"n4_pi_worm": n4 * pw}
    kind = _kind(w, w2)
    if kind == "insert":
        bounds["n4_pi_worm_odds"] = n4 * pw * p / (1 - p)
    return TrafficReport(transition, kind, flow.traffic.get(transition, Fraction(0)), bounds)


def worm_certificates(g: Graph, p: Number, max_edges: int | None = None) -> list[TrafficReport]:
    """Traffic report for every single-edge transition out of every worm state."""
    p = as_fraction(p)
    out = []
    for w in worm_states(g, max_edges):
        for e in range(g.m):
            out.append(worm_traffic(g, p, (w, w ^ (1 << e)), max_edges))
    return out


# ---------------------------------------------------------------------------
# Lifted flow: closed form
# ---------------------------------------------------------------------------


def _supersets(w: int, full: int) -> Iterator[int]:
    free = full & ~w
    sub = free
    while True:
        yield w | sub
        if sub == 0:
            return
        sub = (sub - 1) & free


@lru_cache(maxsize=64)
def lifted_traffic_table(g: Graph, p: Fraction, max_edges: int | None = None) -> dict[Transition, Fraction]:
    """Exact traffic of the lifted flow through every transition, by the per-``w`` sums.

    A state ``z`` is occupied at position ``i`` of a lifted path with
    probability ``delta(w_i, z)``; the next step is then determined by the
    worm step taken (or, in the tail, by the re-randomized edge) and one coin.
    """
    p = as_fraction(p)
    if not 0 < p <= Fraction(1, 2):
        raise ValueError("lifting needs 0 < p <= 1/2")
    flow = worm_flow(g, p, max_edges)
    m = g.m
    pp = p / (1 - p)
    qq = 1 - pp
    pp_pow = [pp**k for k in range(m + 1)]
    qq_pow = [qq**k for k in range(m + 1)]
    full = g.full
    out: dict[Transition, Fraction] = defaultdict(Fraction)
    per_w: dict[int, tuple[dict[int, Fraction], dict[int, Fraction]]] = {}
    for (w, w2), t in flow.traffic.items():
        ins, dele = per_w.setdefault(w, ({}, {}))
        e = (w ^ w2).bit_length() - 1
        (ins if w2 & ~w else dele)[e] = t
    states = set(per_w) | set(flow.ending)
    for w in sorted(states):
        ins, dele = per_w.get(w, ({}, {}))
        end = flow.ending.get(w, Fraction(0))
        size_w = popcount(w)
        for z in _supersets(w, full):
            size_z = popcount(z)
            d = pp_pow[size_z - size_w] * qq_pow[m - size_z]
            if not d:
                continue
            loop = Fraction(0)
            for e in range(m):
                bit = 1 << e
                a_ins = ins.get(e)
                a_del = dele.get(e)
                if not z & bit:
                    # absent from z: path insertions and tail additions both move in
                    mass = (a_ins or 0) + pp * end
                    if mass:
                        out[(z, z | bit)] += d * mass
                    loop += d * qq * end
                elif w & bit:
                    if a_del:
                        out[(z, z & ~bit)] += d * qq * a_del
                        loop += d * pp * a_del
                else:
                    # in z but not in w: a path insertion is absorbed, the tail may remove it
                    if a_ins:
                        loop += d * a_ins
                    if end:
                        out[(z, z & ~bit)] += d * qq * end
                        loop += d * pp * end
            if loop:
                out[(z, z)] += loop
    return dict(out)


def lifted_bounds(g: Graph, p: Fraction, transition: Transition, pi_rc: list[Fraction]) -> dict[str, Fraction]:
    z, z2 = transition
    pp = p / (1 - p)
    n4 = g.n**4
    kind = _kind(z, z2)
    if kind == "insert":
        return {"insert": pp * 2 * n4 * pi_rc[z]}
    if kind == "delete":
        return {"delete": (1 - 2 * p) / (1 - p) * 2 * n4 * pi_rc[z]}
    return {"loop": 2 * g.m * n4 * pi_rc[z]}


def lifted_traffic(g: Graph, p: Number, transition: Transition, max_edges: int | None = None) -> TrafficReport:
    """Closed-form traffic of the lifted flow through ``(z, z')`` against its bound."""
    p = as_fraction(p)
    z, z2 = transition
    if z != z2 and popcount(z ^ z2) != 1:
        raise ValueError("lifted transitions flip at most one edge")
    table = lifted_traffic_table(g, p, max_edges)
    pi_rc = rc_measure(g, 2 * p, 2, max_edges)
    return TrafficReport(transition, _kind(z, z2), table.get(transition, Fraction(0)), lifted_bounds(g, p, transition, pi_rc))


def lifted_certificates(g: Graph, p: Number, max_edges: int | None = None) -> list[TrafficReport]:
    """Reports for every transition ``(z, z xor {e})`` and every loop ``(z, z)``."""
    p = as_fraction(p)
    table = lifted_traffic_table(g, p, max_edges)
    pi_rc = rc_measure(g, 2 * p, 2, max_edges)
    out = []
    for z in range(1 << g.m):
        for tr in [(z, z)] + [(z, z ^ (1 << e)) for e in range(g.m)]:
            out.append(TrafficReport(tr, _kind(*tr), table.get(tr, Fraction(0)), lifted_bounds(g, p, tr, pi_rc)))
    return out


# ---------------------------------------------------------------------------
# Lifted flow: brute-force trajectory enumeration
# ---------------------------------------------------------------------------


def lifted_trajectories(g: Graph, path: WormPath, tail: bool = True) -> Iterator[tuple[tuple[int, ...], int, int]]:
    """Every lifted trajectory of ``path`` as ``(states, a, b)``.

    The trajectory's probability is ``p'^a (1-p')^b``.  Tail edges are the
    edges outside the final worm state, in ascending index order.
    """
    full = g.full
    w0 = path.start
    steps = []
    for k, e in enumerate(path.edges):
        steps.append(("ins" if path.states[k + 1] & (1 << e) else "del", e))
    if tail:
        steps += [("tail", e) for e in bits(full & ~path.end)]

    def walk(k: int, states: tuple[int, ...], a: int, b: int):
        if k == len(steps):
            yield states, a, b
            return
        z = states[-1]
        how, e = steps[k]
        bit = 1 << e
        if how == "ins":
            yield from walk(k + 1, states + (z | bit,), a, b)
        elif how == "del":
            yield from walk(k + 1, states + (z,), a + 1, b)
            yield from walk(k + 1, states + (z & ~bit,), a, b + 1)
        else:
            base = z & ~bit
            yield from walk(k + 1, states + (base | bit,), a + 1, b)
            yield from walk(k + 1, states + (base,), a, b + 1)

    free = full & ~w0
    for z0 in _supersets(w0, full):
        extra = popcount(z0 & ~w0)
        yield from walk(0, (z0,), extra, popcount(free) - extra)


@dataclass
class BruteForceFlow:
    traffic: dict[Transition, Fraction]
    endpoints: dict[Transition, Fraction]
    marginal_failures: int
    max_length: int


def brute_force_flow(g: Graph, p: Number, tail: bool = True, max_edges: int = BRUTE_FORCE_MAX_EDGES) -> BruteForceFlow:
    """Enumerate every lifted trajectory of every worm path.

    Also checks that position ``k`` of each lifted path is distributed as
    ``delta(w_k, .)`` (``w_l`` throughout the tail).
    """
    if g.m > max_edges:
        raise GuardError(f"trajectory enumeration refused: m={g.m} exceeds edge limit {max_edges}")
    p = as_fraction(p)
    pp = p / (1 - p)
    pp_pow = [pp**k for k in range(2 * g.m + 1)]
    qq_pow = [(1 - pp) ** k for k in range(2 * g.m + 1)]
    flow = worm_flow(g, p)
    traffic: dict[Transition, Fraction] = defaultdict(Fraction)
    endpoints: dict[Transition, Fraction] = defaultdict(Fraction)
    failures = 0
    longest = 0
    for path in flow.paths:
        # counts keyed by (transition or endpoint pair, a, b), weighted once at the end
        tcount: dict[tuple[Transition, int, int], int] = defaultdict(int)
        ecount: dict[tuple[Transition, int, int], int] = defaultdict(int)
        marg: dict[tuple[int, int, int, int], int] = defaultdict(int)
        for states, a, b in lifted_trajectories(g, path, tail):
            longest = max(longest, len(states) - 1)
            for tr in zip(states, states[1:]):
                tcount[(tr, a, b)] += 1
            ecount[((states[0], states[-1]), a, b)] += 1
            for k, z in enumerate(states):
                marg[(k, z, a, b)] += 1
        for (tr, a, b), c in tcount.items():
            traffic[tr] += path.weight * c * pp_pow[a] * qq_pow[b]
        for (pair, a, b), c in ecount.items():
            endpoints[pair] += path.weight * c * pp_pow[a] * qq_pow[b]
        law: dict[int, dict[int, Fraction]] = defaultdict(lambda: defaultdict(Fraction))
        for (k, z, a, b), c in marg.items():
            law[k][z] += c * pp_pow[a] * qq_pow[b]
        n_pos = len(path.states) + (popcount(g.full & ~path.end) if tail else 0)
        for k in range(n_pos):
            wk = path.states[min(k, len(path.states) - 1)]
            expected = {z: delta(g, wk, z, pp) for z in _supersets(wk, g.full)}
            got = law[k]
            for z in set(expected) | set(got):
                if got.get(z, Fraction(0)) != expected.get(z, Fraction(0)):
                    failures += 1
    return BruteForceFlow(
        {k: v for k, v in traffic.items() if v},
        {k: v for k, v in endpoints.items() if v},
        failures,
        longest,
    )


@dataclass
class FlowValidity:
    graph: str
    p: Fraction
    pairs: int
    mismatches: int
    marginal_failures: int
    truncated_mismatches: int

    @property
    def passed(self) -> bool:
        return self.mismatches == 0 and self.marginal_failures == 0

    @property
    def truncation_breaks(self) -> bool:
        return self.truncated_mismatches > 0

    def to_record(self) -> dict:
        return {
            "graph": self.graph,
            "p": self.p,
            "pairs": self.pairs,
            "mismatches": self.mismatches,
            "marginal_failures": self.marginal_failures,
            "truncated_mismatches": self.truncated_mismatches,
            "truncation_breaks": self.truncation_breaks,
            "pass": self.passed,
        }


def _pair_mismatches(g: Graph, endpoints: dict[Transition, Fraction], pi: list[Fraction]) -> int:
    bad = 0
    for x in range(1 << g.m):
        for y in range(1 << g.m):
            if endpoints.get((x, y), Fraction(0)) != pi[x] * pi[y]:
                bad += 1
    return bad


def flow_validity(g: Graph, p: Number, max_edges: int = BRUTE_FORCE_MAX_EDGES) -> FlowValidity:
    """Lifted flow carries ``pi_RC(x) pi_RC(y)`` from every ``x`` to every ``y``;
    the flow without its re-randomization tail does not."""
    p = as_fraction(p)
    pi = rc_measure(g, 2 * p, 2)
    full = brute_force_flow(g, p, tail=True, max_edges=max_edges)
    cut = brute_force_flow(g, p, tail=False, max_edges=max_edges)
    return FlowValidity(
        g.describe(),
        p,
        (1 << g.m) ** 2,
        _pair_mismatches(g, full.endpoints, pi),
        full.marginal_failures,
        _pair_mismatches(g, cut.endpoints, pi),
    )


# ---------------------------------------------------------------------------
# Congestion
# ---------------------------------------------------------------------------


@dataclass
class CongestionReport:
    graph: str
    p: Fraction  # even/worm parameter; the random-cluster chain runs at 2p
    family: str
    max_congestion: Fraction
    bound: Fraction | None
    witness: Transition | None
    path_length: int
    off_support: int = 0  # traffic landing on transitions the chain cannot make
    per_transition: list[TrafficReport] = field(default_factory=list, repr=False)

    @property
    def passed(self) -> bool:
        if self.off_support:
            return False
        if self.family == "worm":
            return all(r.passed for r in self.per_transition)
        return self.max_congestion <= self.bound

    def to_record(self) -> dict:
        return {
            "graph": self.graph,
            "p": 2 * self.p,
            "p_even": self.p,
            "family": self.family,
            "max_congestion": self.max_congestion,
            "bound": self.bound,
            "witness_transition": list(self.witness) if self.witness is not None else None,
            "path_length": self.path_length,
            "pass": self.passed,
        }


def lifted_path_length(g: Graph, p: Fraction) -> int:
    """Longest lifted path: worm steps plus one tail step per edge outside the end state."""
    flow = worm_flow(g, p)
    return max((len(pth) + g.m - popcount(pth.end) for pth in flow.paths), default=0)


@lru_cache(maxsize=64)
def congestion(g: Graph, p: Fraction, which: str = "rc") -> CongestionReport:
    """Exact congestion of the lifted random-cluster flow (``which="rc"``) or
    per-transition certificates for the worm family (``which="worm"``).

    ``p`` is the even/worm parameter; the random-cluster chain runs at ``2p``.
    """
    from .analysis import build_matrix
    from .measures import Params

    p = as_fraction(p)
    if which == "worm":
        reports = worm_certificates(g, p)
        pw = worm_measure(g, p)
        n4 = g.n**4
        best, witness = Fraction(0), None
        for r in reports:
            scale = n4 * pw[r.transition[0]]
            ratio = r.traffic / scale
            if witness is None or ratio > best:
                best, witness = ratio, r.transition
        flow = worm_flow(g, p)
        return CongestionReport(g.describe(), p, "worm", best, Fraction(1), witness, flow.max_length, 0, reports)
    if which != "rc":
        raise ValueError(f"unknown path family {which!r}")
    if not 0 < 2 * p < 1:
        raise ValueError("congestion of the single-bond-flip chain needs 0 < 2p < 1")
    params = Params(2 * p, g.n)
    mat = build_matrix(g, params, "rc", max_edges=g.m)
    table = lifted_traffic_table(g, p)
    L = lifted_path_length(g, p)
    best, witness = Fraction(0), None
    off = 0
    for (z, z2), t in sorted(table.items()):
        if not t:
            continue
        cap = mat.pi[z] * mat.entry(z, z2)
        if cap == 0:
            off += 1
            continue
        rho = L * t / cap
        if witness is None or rho > best:
            best, witness = rho, (z, z2)
    bound = Fraction(8 * g.m**2 * g.n**4)
    return CongestionReport(g.describe(), p, "rc", best, bound, witness, L, off)
