from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isingrc.battery import complete, single_edge, triangle
from isingrc.chains import (
    ChainConfig,
    empirical_distribution,
    empirical_tv,
    histogram_rows,
    integrated_autocorrelation,
    iterate_chain,
    lift_even,
    rc_flip_ratio,
    run_chain,
    sw_step,
    worm_flip_ratio,
)
from isingrc.graph import GuardError, build_graph, odd_vertices
from isingrc.measures import Params, rc_flip_ratios_global, rc_measure

from strategies import small_multigraphs


def cfg(g, p_rc, kind="rc", seed=0, steps=0):
    return ChainConfig(g, Params(p_rc, g.n), kind, seed, steps)


def test_rc_ratio_examples():
    g = single_edge()
    assert rc_flip_ratio(g, 0, 0, F(1, 2), 2) == F(1, 2)
    assert rc_flip_ratio(g, 1, 0, F(1, 2), 2) == 2
    k3 = triangle()
    # e2 closes the cycle on {e0, e1}: no component change
    assert rc_flip_ratio(k3, 0b011, 2, F(1, 3), 2) == F(1, 2)


@given(small_multigraphs(max_m=6), st.sampled_from([F(1, 5), F(1, 2), F(4, 5)]), st.sampled_from([F(2), F(3, 2)]), st.data())
def test_local_ratio_equals_global_ratio(g, p, q, data):
    if g.m == 0:
        return
    s = data.draw(st.integers(0, g.full))
    glob = rc_flip_ratios_global(g, s, p, q)
    assert [rc_flip_ratio(g, s, e, p, q) for e in range(g.m)] == list(glob)


def test_worm_ratio_examples():
    k3 = triangle()
    p = F(1, 4)
    assert worm_flip_ratio(k3, 0, 0, p) == F(1, 27)
    assert worm_flip_ratio(k3, 1, 0, p) == 27
    assert worm_flip_ratio(k3, 1, 1, p) == F(1, 3)
    # from two holes, a flip creating four holes is forbidden
    k4 = complete(4)
    x = 1 << 0  # edge (0,1)
    e = 5  # edge (2,3)
    assert len(odd_vertices(k4, x ^ (1 << e))) == 4
    assert worm_flip_ratio(k4, x, e, p) == 0


def test_config_validation():
    with pytest.raises(ValueError):
        cfg(single_edge(), 1)
    with pytest.raises(ValueError):
        cfg(single_edge(), F(1, 2), kind="glauber")
    with pytest.raises(ValueError):
        cfg(single_edge(), F(1, 2), steps=-1)
    cfg(single_edge(), 1, kind="worm")  # p_even = 1/2 is allowed


def test_zero_steps_returns_initial():
    for kind in ("rc", "worm", "sw"):
        final, trace = run_chain(cfg(triangle(), F(1, 2), kind, seed=3, steps=0), initial=0b111, trace=True)
        assert final == 0b111 and trace == []


@pytest.mark.parametrize("kind", ["rc", "worm", "sw"])
def test_same_seed_same_trace(kind):
    c = cfg(complete(4), F(1, 2), kind, seed=11, steps=500)
    a = run_chain(c, 0, trace=True)
    b = run_chain(c, 0, trace=True)
    assert a[0] == b[0]
    assert [t.to_record() for t in a[1]] == [t.to_record() for t in b[1]]
    other = run_chain(cfg(complete(4), F(1, 2), kind, seed=12, steps=500), 0, trace=True)
    assert [t.post for t in other[1]] != [t.post for t in a[1]]


def test_trace_records_are_consistent():
    g = complete(4)
    _, trace = run_chain(cfg(g, F(1, 2), seed=1, steps=300), 0, trace=True)
    holds = 0
    for tr in trace:
        assert set(tr.to_record()) == {"t", "edge", "kind", "accepted"}
        if tr.accepted:
            assert tr.post == tr.pre ^ (1 << tr.edge)
            assert tr.kind == ("insert" if tr.post & (1 << tr.edge) else "delete")
        else:
            assert tr.post == tr.pre
        holds += tr.kind == "hold"
    assert 100 < holds < 200  # fair laziness coin over 300 steps


def test_rc_union_find_cache_tracks_state():
    g = complete(4)
    from isingrc.graph import component_count

    for tr in iterate_chain(cfg(g, F(4, 5), seed=2)):
        if tr.accepted:
            expected = rc_flip_ratio(g, tr.pre, tr.edge, F(4, 5), 2)
            assert expected > 0
        assert component_count(g, tr.post) >= 1
        if tr.t > 2000:
            break


def test_worm_chain_stays_in_worm_space():
    g = complete(4)
    for tr in iterate_chain(cfg(g, F(4, 5), "worm", seed=5)):
        assert len(odd_vertices(g, tr.post)) in (0, 2)
        if tr.t > 3000:
            break
    with pytest.raises(ValueError):
        run_chain(cfg(g, F(1, 2), "worm", steps=1), initial=0b100001)  # four odd vertices


def test_lift_probability_single_edge():
    g = single_edge()
    c = cfg(g, F(1, 2))  # p_even = 1/4, p' = 1/3
    rng = c.rng()
    draws = 40000
    hits = sum(lift_even(0, c, rng) for _ in range(draws))
    # 5 standard deviations of a Bernoulli(1/3) mean
    assert abs(hits / draws - 1 / 3) < 5 * np.sqrt(2 / 9 / draws)
    assert all(lift_even(0b111, cfg(triangle(), F(1, 2)), rng) == 0b111 for _ in range(10))


def test_sw_transition_probabilities_single_edge():
    assert sw_step(0, cfg(build_graph(3, []), F(1, 2), "sw"), np.random.default_rng(0)) == 0
    g = single_edge()
    c = cfg(g, F(2, 5), "sw", seed=6)
    rng = c.rng()
    draws = 40000
    # from {e0}: one cluster, edge kept with probability p
    kept = sum(sw_step(1, c, rng) for _ in range(draws)) / draws
    # from {}: same colour with probability 1/2, then kept with probability p
    made = sum(sw_step(0, c, rng) for _ in range(draws)) / draws
    assert abs(kept - 0.4) < 5 * np.sqrt(0.24 / draws)
    assert abs(made - 0.2) < 5 * np.sqrt(0.16 / draws)


def test_sw_empirical_law_single_edge():
    g = single_edge()
    counts = empirical_distribution(cfg(g, F(1, 2), "sw", seed=4), samples=20000, burn_in=10)
    # stationary law (2/3, 1/3)
    assert empirical_tv(counts, rc_measure(g, F(1, 2))) < 5 * np.sqrt(2 / 9 / 20000)


def test_rc_empirical_law_single_edge():
    g = single_edge()
    counts = empirical_distribution(cfg(g, F(1, 2), seed=8), samples=100_000, burn_in=1000)
    assert empirical_tv(counts, rc_measure(g, F(1, 2))) <= 0.02
    rows = histogram_rows(counts)
    assert sum(r[1] for r in rows) == 100_000
    assert abs(sum(r[2] for r in rows) - 1) < 1e-12


def test_histogram_guard():
    with pytest.raises(GuardError):
        empirical_distribution(cfg(complete(4), F(1, 2)), samples=10, max_edges=5)


def test_autocorrelation_of_white_noise_is_near_one():
    rng = np.random.default_rng(0)
    assert abs(integrated_autocorrelation(rng.normal(size=20000)) - 1) < 0.1
    # AR(1) with coefficient a has tau = (1 + a) / (1 - a)
    a = 0.8
    x = np.zeros(100_000)
    noise = rng.normal(size=x.size)
    for i in range(1, x.size):
        x[i] = a * x[i - 1] + noise[i]
    assert abs(integrated_autocorrelation(x) - 9) < 1.0
    assert integrated_autocorrelation(np.ones(10)) == 1.0
