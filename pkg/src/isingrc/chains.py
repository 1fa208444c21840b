"""Markov chains on edge subsets.

* ``rc``: lazy single-bond-flip Metropolis dynamics for the random-cluster measure.
* ``worm``: the same lazy Metropolis kernel targeting the worm measure, with
  proposals that leave the even/two-hole space rejected.
* ``sw``: Swendsen-Wang at q = 2 (colour clusters, then re-percolate).

Each chain draws from its own ``numpy`` PCG64 stream seeded explicitly, so a
``(config, initial state)`` pair determines the whole run.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterator

import numpy as np

from .graph import Graph, GuardError, UnionFind, connected_in, odd_mask, popcount, union_find
from .measures import Params

KINDS = ("rc", "worm", "sw")


@dataclass(frozen=True)
class ChainConfig:
    graph: Graph
    params: Params
    kind: str = "rc"
    seed: int = 0
    steps: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown chain kind {self.kind!r}; expected one of {KINDS}")
        if self.steps < 0:
            raise ValueError("steps must be nonnegative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.kind in ("rc", "sw") and not 0 < self.params.p_rc < 1:
            raise ValueError(f"{self.kind} chain needs 0 < p_rc < 1, got {self.params.p_rc}")
        if self.kind == "sw" and self.params.q != 2:
            raise ValueError("Swendsen-Wang is implemented for q = 2 only")
        if self.kind == "worm" and not 0 < self.params.p_even <= Fraction(1, 2):
            raise ValueError("worm chain needs 0 < p_even <= 1/2")

    def rng(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.seed))

    @cached_property
    def _floats(self) -> dict[str, float]:
        p = float(self.params.p_rc)
        pe = float(self.params.p_even)
        q = float(self.params.q)
        n2 = float(self.graph.n * self.graph.n)
        odds_rc = p / (1 - p) if p < 1 else float("inf")
        return {
            "p_rc": p,
            "p_prime": float(self.params.p_prime),
            # insertion ratios keyed by whether the endpoints were already joined
            "ins_joined": odds_rc,
            "ins_split": odds_rc / q,
            "del_joined": 1 / odds_rc,
            "del_split": q / odds_rc,
            "p_even": pe,
            "n2": n2,
        }


@dataclass
class StepTrace:
    t: int
    edge: int | None
    kind: str  # "insert" | "delete" | "hold" | "sweep"
    accepted: bool
    pre: int
    post: int

    def to_record(self) -> dict:
        return {"t": self.t, "edge": self.edge, "kind": self.kind, "accepted": self.accepted}


# ---------------------------------------------------------------------------
# Acceptance ratios
# ---------------------------------------------------------------------------


def rc_flip_ratio(g: Graph, x: int, e: int, p, q=2, uf: UnionFind | None = None):
    """``pi_RC(x xor {e}) / pi_RC(x)`` from the local change in component count.

    Exact when ``p`` and ``q`` are ``Fraction``.  ``uf`` may hold the
    components of ``x`` to answer insertion queries without a search.
    """
    u, v = g.edges[e]
    bit = 1 << e
    if x & bit:
        joined = connected_in(g, x & ~bit, u, v)
        inv_odds = (1 - p) / p
        return inv_odds if joined else inv_odds * q
    joined = uf.connected(u, v) if uf is not None else connected_in(g, x, u, v)
    odds = p / (1 - p)
    return odds if joined else odds / q


def worm_flip_ratio(g: Graph, x: int, e: int, p, x_odd: int | None = None):
    """``w_worm(x xor {e}) / w_worm(x)``; zero when the flip leaves the worm space."""
    if x_odd is None:
        x_odd = odd_mask(g, x)
    y_odd = x_odd ^ g.endpoint_masks[e]
    holes_y = popcount(y_odd)
    if holes_y not in (0, 2):
        return 0
    holes_x = popcount(x_odd)
    n2 = g.n * g.n
    pen = 1
    if holes_x == 0 and holes_y == 2:
        pen = Fraction(1, n2) if isinstance(p, Fraction) else 1.0 / n2
    elif holes_x == 2 and holes_y == 0:
        pen = n2
    odds = p / (1 - p)
    return pen * (odds if not x & (1 << e) else 1 / odds)


# ---------------------------------------------------------------------------
# Single steps
# ---------------------------------------------------------------------------


def rc_step(
    state: int, cfg: ChainConfig, rng: np.random.Generator, t: int = 0, uf: UnionFind | None = None
) -> tuple[int, StepTrace]:
    """One transition of the lazy single-bond-flip chain."""
    g = cfg.graph
    if g.m == 0 or rng.random() < 0.5:
        return state, StepTrace(t, None, "hold", False, state, state)
    e = int(rng.integers(g.m))
    f = cfg._floats
    u, v = g.edges[e]
    bit = 1 << e
    if state & bit:
        joined = connected_in(g, state & ~bit, u, v)
        ratio = f["del_joined"] if joined else f["del_split"]
        kind = "delete"
    else:
        joined = uf.connected(u, v) if uf is not None else connected_in(g, state, u, v)
        ratio = f["ins_joined"] if joined else f["ins_split"]
        kind = "insert"
    accepted = ratio >= 1 or rng.random() < ratio
    post = state ^ bit if accepted else state
    return post, StepTrace(t, e, kind, accepted, state, post)


def worm_step(
    state: int, cfg: ChainConfig, rng: np.random.Generator, t: int = 0, odd: int | None = None
) -> tuple[int, StepTrace]:
    """One lazy Metropolis step targeting the worm measure."""
    g = cfg.graph
    if odd is None:
        odd = odd_mask(g, state)
    if popcount(odd) not in (0, 2):
        raise ValueError(f"state {state:#b} is outside the worm space")
    if g.m == 0 or rng.random() < 0.5:
        return state, StepTrace(t, None, "hold", False, state, state)
    e = int(rng.integers(g.m))
    bit = 1 << e
    kind = "delete" if state & bit else "insert"
    ratio = worm_flip_ratio(g, state, e, cfg._floats["p_even"], odd)
    accepted = ratio > 0 and (ratio >= 1 or rng.random() < ratio)
    post = state ^ bit if accepted else state
    return post, StepTrace(t, e, kind, accepted, state, post)


def lift_even(w: int, cfg: ChainConfig, rng: np.random.Generator) -> int:
    """Add each absent edge independently with probability ``p_even / (1 - p_even)``."""
    g = cfg.graph
    pp = cfg._floats["p_prime"]
    coins = rng.random(g.m) < pp
    out = w
    for e in range(g.m):
        if coins[e]:
            out |= 1 << e
    return out


def sw_step(state: int, cfg: ChainConfig, rng: np.random.Generator) -> int:
    """Colour every cluster of ``state`` with a fair bit, then keep each
    monochromatic edge with probability ``p_rc``."""
    if cfg.params.q != 2:
        raise ValueError("Swendsen-Wang is implemented for q = 2 only")
    g = cfg.graph
    uf = union_find(g, state)
    roots = sorted({uf.find(v) for v in range(g.n)})
    flips = rng.integers(2, size=len(roots))
    colour_of_root = dict(zip(roots, flips))
    colour = [colour_of_root[uf.find(v)] for v in range(g.n)]
    keep = rng.random(g.m) < cfg._floats["p_rc"]
    out = 0
    for e, (u, v) in enumerate(g.edges):
        if colour[u] == colour[v] and keep[e]:
            out |= 1 << e
    return out


# ---------------------------------------------------------------------------
# Drivers
# ---------------------------------------------------------------------------


def iterate_chain(cfg: ChainConfig, initial: int = 0, rng: np.random.Generator | None = None) -> Iterator[StepTrace]:
    """Endless stream of steps; the caller decides when to stop."""
    g = cfg.graph
    rng = cfg.rng() if rng is None else rng
    state = initial
    t = 0
    if cfg.kind == "rc":
        uf = None
        while True:
            t += 1
            if uf is None:
                uf = union_find(g, state)
            state, tr = rc_step(state, cfg, rng, t, uf)
            if tr.accepted:
                if tr.kind == "insert":
                    uf.union(*g.edges[tr.edge])
                else:
                    uf = None
            yield tr
    elif cfg.kind == "worm":
        odd = odd_mask(g, state)
        while True:
            t += 1
            state, tr = worm_step(state, cfg, rng, t, odd)
            if tr.accepted:
                odd ^= g.endpoint_masks[tr.edge]
            yield tr
    else:
        while True:
            t += 1
            post = sw_step(state, cfg, rng)
            yield StepTrace(t, None, "sweep", True, state, post)
            state = post


def run_chain(cfg: ChainConfig, initial: int = 0, trace: bool = False) -> tuple[int, list[StepTrace]]:
    """Run ``cfg.steps`` steps from ``initial``; return the final state and optional trace."""
    if cfg.kind == "worm" and popcount(odd_mask(cfg.graph, initial)) not in (0, 2):
        raise ValueError("worm chain must start inside the worm space")
    state = initial
    out: list[StepTrace] = []
    if cfg.steps == 0:
        return state, out
    for tr in iterate_chain(cfg, initial):
        state = tr.post
        if trace:
            out.append(tr)
        if tr.t >= cfg.steps:
            break
    return state, out


def empirical_distribution(
    cfg: ChainConfig,
    initial: int = 0,
    samples: int = 1000,
    thinning: int = 1,
    burn_in: int = 0,
    max_edges: int = 20,
) -> Counter:
    """Counts of visited states, recording every ``thinning``-th state after burn-in."""
    if cfg.graph.m > max_edges:
        raise GuardError(f"histogram refused: m={cfg.graph.m} exceeds edge limit {max_edges}")
    if thinning < 1:
        raise ValueError("thinning must be at least 1")
    counts: Counter = Counter()
    stream = iterate_chain(cfg, initial)
    for _ in range(burn_in):
        next(stream)
    taken = 0
    while taken < samples:
        for _ in range(thinning):
            tr = next(stream)
        counts[tr.post] += 1
        taken += 1
    return counts


def histogram_rows(counts: Counter) -> list[tuple[int, int, float]]:
    total = sum(counts.values())
    return [(s, c, c / total) for s, c in sorted(counts.items())]


def empirical_tv(counts: Counter, exact) -> float:
    """Total variation between a histogram and an exact law indexed by bitmask."""
    total = sum(counts.values())
    if isinstance(exact, dict):
        keys = set(exact) | set(counts)
        get = exact.get
    else:
        keys = set(range(len(exact))) | set(counts)
        get = lambda s: exact[s] if s < len(exact) else 0  # noqa: E731
    return 0.5 * sum(abs(counts.get(s, 0) / total - float(get(s) or 0)) for s in keys)


def integrated_autocorrelation(series: np.ndarray, max_lag: int | None = None) -> float:
    """Integrated autocorrelation time with Sokal's self-consistent window (c = 5)."""
    x = np.asarray(series, dtype=float)
    x = x - x.mean()
    n = len(x)
    var = float(np.dot(x, x)) / n
    if var == 0:
        return 1.0
    f = np.fft.rfft(x, n=2 * n)
    acf = np.fft.irfft(f * np.conj(f))[:n] / (n * var)
    max_lag = n // 2 if max_lag is None else max_lag
    tau = 1.0
    for lag in range(1, max_lag):
        tau += 2 * acf[lag]
        if lag >= 5 * tau:
            break
    return float(tau)


def observable_series(cfg: ChainConfig, initial: int, steps: int, observable: str = "edges") -> np.ndarray:
    g = cfg.graph
    out = np.empty(steps)
    for i, tr in zip(range(steps), iterate_chain(cfg, initial)):
        if observable == "edges":
            out[i] = popcount(tr.post)
        else:
            out[i] = union_find(g, tr.post).components
    return out
