"""Exact transition matrices, total-variation mixing times and spectral gaps.

Matrices are stored as sparse rows of ``Fraction`` so stochasticity,
reversibility and stationarity can be asserted exactly.  Mixing times are
computed by powering: in rationals while the state space and denominators
stay small, in float64 afterwards (the report records which).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Sequence

import numpy as np

from .chains import rc_flip_ratio, worm_flip_ratio
from .graph import Graph, GuardError, union_find
from .measures import Number, Params, as_fraction, rc_measure, worm_measure, worm_states
from .reports import Check

MATRIX_MAX_EDGES = 12
FLOAT_TOLERANCE = 1e-12
GAP_TOLERANCE = 1e-9


@dataclass
class TransitionMatrix:
    graph: Graph
    kind: str
    params: Params
    states: list[int]
    rows: list[dict[int, Fraction]]  # column index -> probability
    pi: list[Fraction]
    index: dict[int, int] = field(init=False)

    def __post_init__(self):
        self.index = {s: i for i, s in enumerate(self.states)}

    def __len__(self) -> int:
        return len(self.states)

    def entry(self, x: int, y: int) -> Fraction:
        """``P(x, y)`` addressed by edge bitmasks."""
        return self.rows[self.index[x]].get(self.index[y], Fraction(0))

    def dense(self) -> np.ndarray:
        out = np.zeros((len(self), len(self)))
        for i, row in enumerate(self.rows):
            for j, v in row.items():
                out[i, j] = float(v)
        return out

    @property
    def is_lazy_kind(self) -> bool:
        return self.kind in ("rc", "worm")


def _check_matrix_guard(g: Graph, max_edges: int | None) -> None:
    limit = MATRIX_MAX_EDGES if max_edges is None else max_edges
    if g.m > limit:
        raise GuardError(f"matrix construction refused: m={g.m} exceeds edge limit {limit}")


def _metropolis_rows(g: Graph, states: list[int], ratio_fn) -> list[dict[int, Fraction]]:
    index = {s: i for i, s in enumerate(states)}
    half_m = Fraction(1, 2 * g.m) if g.m else Fraction(0)
    rows = []
    for i, x in enumerate(states):
        row: dict[int, Fraction] = {}
        stay = Fraction(1)
        for e in range(g.m):
            r = ratio_fn(x, e)
            if r == 0:
                continue
            prob = half_m * min(Fraction(1), r)
            row[index[x ^ (1 << e)]] = prob
            stay -= prob
        row[i] = stay
        rows.append(row)
    return rows


def _sw_rows(g: Graph, p: Fraction) -> list[dict[int, Fraction]]:
    total = 1 << g.m
    pw = [p**k for k in range(g.m + 1)]
    qw = [(1 - p) ** k for k in range(g.m + 1)]
    rows = []
    for x in range(total):
        uf = union_find(g, x)
        roots = sorted({uf.find(v) for v in range(g.n)})
        colour_prob = Fraction(1, 2 ** len(roots))
        # group colourings by the set of monochromatic edges they produce
        mono_counts: dict[int, int] = {}
        for bits_ in product((0, 1), repeat=len(roots)):
            col = dict(zip(roots, bits_))
            mono = 0
            for e, (u, v) in enumerate(g.edges):
                if col[uf.find(u)] == col[uf.find(v)]:
                    mono |= 1 << e
            mono_counts[mono] = mono_counts.get(mono, 0) + 1
        row: dict[int, Fraction] = {}
        for mono, cnt in mono_counts.items():
            k = bin(mono).count("1")
            sub = mono
            while True:
                j = bin(sub).count("1")
                row[sub] = row.get(sub, Fraction(0)) + cnt * colour_prob * pw[j] * qw[k - j]
                if sub == 0:
                    break
                sub = (sub - 1) & mono
        rows.append(row)
    return rows


def build_matrix(g: Graph, params: Params, kind: str = "rc", max_edges: int | None = None) -> TransitionMatrix:
    """Exact transition matrix of the ``rc``, ``worm`` or ``sw`` chain.

    The worm matrix is restricted to even and two-hole states.
    """
    _check_matrix_guard(g, max_edges)
    if kind == "rc":
        p, q = params.p_rc, params.q
        if not 0 < p < 1:
            raise ValueError("rc chain needs 0 < p_rc < 1")
        states = list(range(1 << g.m))
        rows = _metropolis_rows(g, states, lambda x, e: rc_flip_ratio(g, x, e, p, q))
        pi = rc_measure(g, p, q, max_edges=g.m)
    elif kind == "worm":
        p = params.p_even
        states = worm_states(g, max_edges=g.m)
        rows = _metropolis_rows(g, states, lambda x, e: worm_flip_ratio(g, x, e, p))
        law = worm_measure(g, p, max_edges=g.m)
        pi = [law[s] for s in states]
    elif kind == "sw":
        if params.q != 2:
            raise ValueError("Swendsen-Wang matrix is defined for q = 2 only")
        if not 0 < params.p_rc < 1:
            raise ValueError("sw chain needs 0 < p_rc < 1")
        states = list(range(1 << g.m))
        rows = _sw_rows(g, params.p_rc)
        pi = rc_measure(g, params.p_rc, 2, max_edges=g.m)
    else:
        raise ValueError(f"unknown chain kind {kind!r}")
    return TransitionMatrix(g, kind, params, states, rows, pi)


def matrix_checks(mat: TransitionMatrix) -> list[Check]:
    """Stochastic rows, nonnegativity, laziness, reversibility and stationarity, all exact."""
    name = mat.graph.describe()
    params = {"kind": mat.kind, "p_rc": mat.params.p_rc, "q": mat.params.q}
    n = len(mat)
    bad_rows = sum(1 for row in mat.rows if sum(row.values(), Fraction(0)) != 1)
    negative = sum(1 for row in mat.rows for v in row.values() if v < 0)
    checks = [
        Check("matrix.rows_sum_to_one", name, params, bad_rows, 0),
        Check("matrix.nonnegative", name, params, negative, 0),
    ]
    if mat.is_lazy_kind:
        min_diag = min(mat.rows[i].get(i, Fraction(0)) for i in range(n))
        checks.append(Check("matrix.lazy_diagonal", name, params, Fraction(1, 2), min_diag, "<="))
        asym = 0
        for i, row in enumerate(mat.rows):
            for j, v in row.items():
                if mat.pi[i] * v != mat.pi[j] * mat.rows[j].get(i, Fraction(0)):
                    asym += 1
        checks.append(Check("matrix.detailed_balance", name, params, asym, 0))
    pushed = [Fraction(0)] * n
    for i, row in enumerate(mat.rows):
        for j, v in row.items():
            pushed[j] += mat.pi[i] * v
    drift = sum(1 for j in range(n) if pushed[j] != mat.pi[j])
    checks.append(Check("matrix.stationary", name, params, drift, 0))
    return checks


def tv_distance(d1: Sequence, d2: Sequence):
    """Half the L1 distance; exact for ``Fraction`` inputs."""
    if len(d1) != len(d2):
        raise ValueError(f"distributions over different index sets: {len(d1)} vs {len(d2)}")
    total = sum((abs(a - b) for a, b in zip(d1, d2)), type(d1[0])(0) if len(d1) else 0)
    return total / 2


def _log_inverse(x: Fraction) -> float:
    return math.log(x.denominator) - math.log(x.numerator)


def polynomial_bound(g: Graph, p_rc: Number, eps: Number) -> float:
    """``8 n^4 m^2 (m ln(1/(1-p)) + ln(1/eps))`` for the single-bond-flip chain."""
    p = as_fraction(p_rc)
    eps = as_fraction(eps)
    n, m = g.n, g.m
    return 8 * n**4 * m**2 * (m * _log_inverse(1 - p) + _log_inverse(eps))


def congestion_bound(rho: Fraction, pi_start: Fraction, eps: Number) -> float:
    """``rho (ln 1/pi(x0) + ln 1/eps)``."""
    return float(rho) * (_log_inverse(pi_start) + _log_inverse(as_fraction(eps)))


@dataclass
class MixingReport:
    graph: str
    kind: str
    p: Fraction
    eps: Fraction
    tau_exact: int
    tau_from_empty: int
    gap: float
    mode: str
    bound_polynomial: float | None = None
    bound_congestion: float | None = None
    rho: Fraction | None = None
    tolerance: float | None = None
    near_threshold: bool = False

    @property
    def passed(self) -> bool:
        ok = True
        if self.bound_polynomial is not None:
            ok &= self.tau_exact <= self.bound_polynomial
        if self.bound_congestion is not None:
            ok &= self.tau_from_empty <= self.bound_congestion
        return ok

    def to_record(self) -> dict:
        return {
            "graph": self.graph,
            "kind": self.kind,
            "p": self.p,
            "eps": self.eps,
            "tau_exact": self.tau_exact,
            "tau_from_empty": self.tau_from_empty,
            "bound_polynomial": self.bound_polynomial,
            "bound_congestion": self.bound_congestion,
            "rho": self.rho,
            "gap": self.gap,
            "mode": self.mode,
            "tolerance": self.tolerance,
            "near_threshold": self.near_threshold,
            "pass": self.passed,
        }


def _tv_rows_exact(dists: list[list[Fraction]], pi: list[Fraction]) -> list[Fraction]:
    return [sum((abs(a - b) for a, b in zip(d, pi)), Fraction(0)) / 2 for d in dists]


def _step_exact(dists: list[list[Fraction]], rows: list[dict[int, Fraction]]) -> list[list[Fraction]]:
    n = len(rows)
    out = []
    for d in dists:
        nd = [Fraction(0)] * n
        for i, di in enumerate(d):
            if di:
                for j, pij in rows[i].items():
                    nd[j] += di * pij
        out.append(nd)
    return out


def _max_denominator_bits(dists: list[list[Fraction]]) -> int:
    return max(x.denominator.bit_length() for d in dists for x in d)


def tv_profile(
    mat: TransitionMatrix,
    eps: Number,
    max_t: int = 1_000_000,
    exact_states: int = 16,
    max_denominator_bits: int = 2048,
) -> tuple[int, int, str, bool]:
    """Smallest ``t`` with worst-start TV <= eps, the same from the empty state,
    the arithmetic mode used, and whether a float decision fell within tolerance."""
    eps = as_fraction(eps)
    if not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    n = len(mat)
    start = mat.index.get(0, 0)
    tau_worst = tau_start = None
    near = False
    t = 0
    if n <= exact_states:
        dists = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
        while t <= max_t:
            tvs = _tv_rows_exact(dists, mat.pi)
            if tau_worst is None and max(tvs) <= eps:
                tau_worst = t
            if tau_start is None and tvs[start] <= eps:
                tau_start = t
            if tau_worst is not None and tau_start is not None:
                return tau_worst, tau_start, "rational", False
            if _max_denominator_bits(dists) > max_denominator_bits:
                break
            dists = _step_exact(dists, mat.rows)
            t += 1
        current = np.array([[float(x) for x in d] for d in dists])
    else:
        current = np.eye(n)
    P = mat.dense()
    pi = np.array([float(x) for x in mat.pi])
    e = float(eps)
    while t <= max_t:
        tvs = 0.5 * np.abs(current - pi).sum(axis=1)
        if tau_worst is None and tvs.max() <= e + FLOAT_TOLERANCE:
            tau_worst = t
            near |= abs(tvs.max() - e) <= FLOAT_TOLERANCE
        if tau_start is None and tvs[start] <= e + FLOAT_TOLERANCE:
            tau_start = t
            near |= abs(tvs[start] - e) <= FLOAT_TOLERANCE
        if tau_worst is not None and tau_start is not None:
            return tau_worst, tau_start, "float", near
        current = current @ P
        t += 1
    raise RuntimeError(f"chain did not mix to eps={eps} within {max_t} steps")


def spectral_gap(mat: TransitionMatrix) -> float:
    """``1 - lambda_2`` for reversible chains; ``1 - max |lambda|`` over the
    non-unit spectrum otherwise."""
    P = mat.dense()
    n = len(mat)
    if n == 1:
        return 1.0
    pi = np.array([float(x) for x in mat.pi])
    if mat.is_lazy_kind and np.all(pi > 0):
        s = np.sqrt(pi)
        sym = (s[:, None] * P) / s[None, :]
        sym = 0.5 * (sym + sym.T)
        eig = np.sort(np.linalg.eigvalsh(sym))[::-1]
        return float(1 - eig[1])
    eig = np.linalg.eigvals(P)
    mods = np.sort(np.abs(eig))[::-1]
    return float(1 - mods[1])


def spectrum(mat: TransitionMatrix) -> np.ndarray:
    return np.sort(np.linalg.eigvals(mat.dense()).real)


def mixing_time(mat: TransitionMatrix, eps: Number, rho: Fraction | None = None, **kw) -> MixingReport:
    """Exact mixing time with the polynomial bound and, given a measured
    congestion ``rho``, the congestion bound from the empty start."""
    eps = as_fraction(eps)
    tau, tau0, mode, near = tv_profile(mat, eps, **kw)
    gap = spectral_gap(mat)
    report = MixingReport(
        graph=mat.graph.describe(),
        kind=mat.kind,
        p=mat.params.p_rc,
        eps=eps,
        tau_exact=tau,
        tau_from_empty=tau0,
        gap=gap,
        mode=mode,
        tolerance=FLOAT_TOLERANCE if mode == "float" else None,
        near_threshold=near,
    )
    if mat.kind == "rc" and mat.graph.m > 0:
        report.bound_polynomial = polynomial_bound(mat.graph, mat.params.p_rc, eps)
        if rho is not None:
            report.rho = rho
            report.bound_congestion = congestion_bound(rho, mat.pi[mat.index[0]], eps)
    return report
