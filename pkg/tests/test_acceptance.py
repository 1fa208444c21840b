"""One test per acceptance criterion, each timed against its runtime limit.

Every test prints a single PASS/FAIL line; the lines are repeated in the
terminal summary.
"""

from __future__ import annotations

import time
from fractions import Fraction as F

import pytest

from isingrc import analysis, chains, cli, graph, measures, paths
from isingrc.battery import P_EVEN_BATTERY, P_EVEN_CHAIN, P_RC_MIXING, single_edge, standard_battery, triangle
from isingrc.measures import Params

pytestmark = pytest.mark.acceptance

BATTERY = standard_battery()
SMALL = [g for g in BATTERY if g.m <= 6]
TINY = [g for g in BATTERY if g.m <= 4]
SAMPLER_SEED = 20240607


def clear_caches() -> None:
    for module in (graph, measures, paths, analysis):
        for value in vars(module).values():
            if hasattr(value, "cache_clear"):
                value.cache_clear()


class Timer:
    def __enter__(self):
        clear_caches()
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.start


def test_criterion_01_equivalence(acceptance_line):
    failures = []
    with Timer() as t:
        for g in BATTERY:
            for p_rc in P_RC_MIXING:
                for c in measures.verify_equivalence(g, 1 / (1 - p_rc)):
                    if not c.passed:
                        failures.append((c.check, c.graph, p_rc))
    ok = not failures and t.seconds < 1
    acceptance_line(1, "three partition functions agree exactly", ok, f"{t.seconds:.2f}s, failures={failures}")
    assert not failures
    assert t.seconds < 1


def test_criterion_02_even_subgraph_count(acceptance_line):
    failures = []
    with Timer() as t:
        for g in BATTERY:
            failures += [c.graph for c in measures.even_count_check(g) if not c.passed]
    ok = not failures and t.seconds < 10
    acceptance_line(2, "even-subgraph count for every spanning subgraph", ok, f"{t.seconds:.2f}s")
    assert not failures
    assert t.seconds < 10


def test_criterion_03_coupling_exactness(acceptance_line):
    failures = []
    with Timer() as t:
        for g in SMALL:
            for p in P_EVEN_BATTERY:
                if measures.lifted_law(g, p) != measures.rc_measure(g, 2 * p, 2):
                    failures.append((g.describe(), p))
    ok = not failures and t.seconds < 5
    acceptance_line(3, "lifted even law equals random-cluster law", ok, f"{t.seconds:.2f}s, failures={failures}")
    assert not failures
    assert t.seconds < 5


def test_criterion_04_distortion(acceptance_line):
    failures = []
    worst = F(0)
    with Timer() as t:
        for g in BATTERY:
            for p in P_EVEN_BATTERY:
                for c in measures.distortion_checks(g, p) + measures.hole_checks(g, p):
                    if not c.passed:
                        failures.append((c.check, c.graph, p))
                    if c.check == "distortion.max_ratio":
                        worst = max(worst, c.lhs)
    ok = not failures and worst <= F(3, 2) and t.seconds < 10
    acceptance_line(4, "distortion ratio and hole inequalities", ok, f"{t.seconds:.2f}s, max ratio {float(worst):.4f}")
    assert not failures
    assert t.seconds < 10


def test_criterion_05_worm_certificates(acceptance_line):
    failures = []
    with Timer() as t:
        for g in SMALL:
            for p in P_EVEN_BATTERY:
                failures += [(g.describe(), p, r.transition) for r in paths.worm_certificates(g, p) if not r.passed]
                for pth in paths.worm_flow(g, p).paths:
                    if paths.path_legality(g, pth):
                        failures.append((g.describe(), p, pth.states))
    ok = not failures and t.seconds < 60
    acceptance_line(5, "worm path traffic bounds and path legality", ok, f"{t.seconds:.2f}s, failures={len(failures)}")
    assert not failures
    assert t.seconds < 60


def test_criterion_06_flow_validity(acceptance_line):
    failures = []
    broken_by_truncation = []
    with Timer() as t:
        for g in SMALL:
            for p in P_EVEN_BATTERY:
                fv = paths.flow_validity(g, p)
                if not fv.passed:
                    failures.append(fv.to_record())
                if fv.truncation_breaks:
                    broken_by_truncation.append((g.describe(), p))
    ok = not failures and bool(broken_by_truncation) and t.seconds < 120
    detail = f"{t.seconds:.2f}s, truncated flow invalid on {len(broken_by_truncation)} graph/parameter cases"
    acceptance_line(6, "lifted flow has product endpoint law; truncated flow does not", ok, detail)
    assert not failures
    assert broken_by_truncation
    assert t.seconds < 120


def test_criterion_07_lifted_traffic_and_congestion(acceptance_line):
    failures = []
    with Timer() as t:
        for g in BATTERY:
            for p in P_EVEN_BATTERY:
                failures += [("bound", g.describe(), p, r.transition) for r in paths.lifted_certificates(g, p) if not r.passed]
            for p in P_EVEN_CHAIN:
                rep = paths.congestion(g, p)
                if not (rep.passed and rep.max_congestion <= 8 * g.m**2 * g.n**4):
                    failures.append(("congestion", g.describe(), p))
        for g in TINY:
            for p in P_EVEN_BATTERY:
                closed = {k: v for k, v in paths.lifted_traffic_table(g, p).items() if v}
                if closed != paths.brute_force_flow(g, p).traffic:
                    failures.append(("brute_force", g.describe(), p))
    ok = not failures and t.seconds < 300
    acceptance_line(7, "lifted traffic and congestion bounds; closed form vs enumeration", ok, f"{t.seconds:.2f}s, failures={failures}")
    assert not failures
    assert t.seconds < 300


def test_criterion_08_mixing_bound(acceptance_line):
    failures = []
    modes = set()
    with Timer() as t:
        for g in BATTERY:
            if g.m > analysis.MATRIX_MAX_EDGES:
                continue
            for p_rc in P_RC_MIXING:
                mat = analysis.build_matrix(g, Params(p_rc, g.n), "rc")
                rho = paths.congestion(g, p_rc / 2).max_congestion
                for eps in (F(1, 4), F(1, 10)):
                    rep = analysis.mixing_time(mat, eps, rho)
                    modes.add(rep.mode)
                    if rep.mode == "float":
                        assert rep.tolerance == analysis.FLOAT_TOLERANCE
                    if not (rep.tau_exact <= rep.bound_polynomial and rep.tau_from_empty <= rep.bound_congestion):
                        failures.append(rep.to_record())
    ok = not failures and t.seconds < 300
    acceptance_line(8, "exact mixing time within both bounds", ok, f"{t.seconds:.2f}s, modes={sorted(modes)}")
    assert not failures
    assert t.seconds < 300


def test_criterion_09_chain_correctness(acceptance_line):
    failures = []
    with Timer() as t:
        for g in BATTERY:
            if g.m > analysis.MATRIX_MAX_EDGES:
                continue
            for p_rc in P_RC_MIXING:
                for kind in ("rc", "worm", "sw"):
                    mat = analysis.build_matrix(g, Params(p_rc, g.n), kind)
                    checks = analysis.matrix_checks(mat)
                    names = {c.check for c in checks}
                    if kind != "sw":
                        assert {"matrix.detailed_balance", "matrix.lazy_diagonal"} <= names
                    failures += [(c.check, g.describe(), kind, p_rc) for c in checks if not c.passed]
    ok = not failures and t.seconds < 30
    acceptance_line(9, "exact transition matrices satisfy the chain invariants", ok, f"{t.seconds:.2f}s, failures={failures}")
    assert not failures
    assert t.seconds < 30


def test_criterion_10_sampler_sanity(acceptance_line):
    distances = {}
    with Timer() as t:
        for g in (single_edge(), triangle()):
            cfg = chains.ChainConfig(g, Params(F(1, 2), g.n), "rc", seed=SAMPLER_SEED)
            counts = chains.empirical_distribution(cfg, 0, samples=100_000, burn_in=1000)
            distances[g.describe()] = chains.empirical_tv(counts, measures.rc_measure(g, F(1, 2)))
    ok = all(d <= 0.02 for d in distances.values()) and t.seconds < 30
    detail = f"{t.seconds:.2f}s, seed {SAMPLER_SEED}, " + ", ".join(f"TV[{k}]={v:.4f}" for k, v in distances.items())
    acceptance_line(10, "rc sampler histogram close to exact law", ok, detail)
    assert all(d <= 0.02 for d in distances.values())
    assert t.seconds < 30


def test_criterion_11_reproducibility(acceptance_line, tmp_path):
    runs = [
        ["verify", "--builtin", "K3", "--beta", "2"],
        ["sample", "--builtin", "K4", "--p", "1/2", "--steps", "2000", "--trace", "--seed", "42"],
        ["sample", "--builtin", "K3", "--p", "1/2", "--samples", "5000", "--seed", "42", "--format", "csv"],
        ["mix", "--builtin", "C4", "--p", "1/2", "--eps", "1/4"],
        ["congestion", "--builtin", "K3", "--p", "1/5"],
        ["bench", "--builtin", "K3", "--p", "1/2", "--steps", "2000", "--seed", "42"],
    ]
    differing = []
    with Timer() as t:
        for i, argv in enumerate(runs):
            outs = []
            for rep in range(2):
                clear_caches()
                target = tmp_path / f"run{i}_{rep}"
                assert cli.main(argv + ["--out", str(target)]) == 0
                outs.append(target.read_bytes())
            if outs[0] != outs[1]:
                differing.append(argv[0])
    ok = not differing and t.seconds < 10
    acceptance_line(11, "identical flags and seed give byte-identical output", ok, f"{t.seconds:.2f}s, differing={differing}")
    assert not differing
    assert t.seconds < 10
