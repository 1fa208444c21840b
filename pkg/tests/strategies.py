"""Hypothesis strategies for small graphs."""

from hypothesis import strategies as st

from isingrc.graph import build_graph


@st.composite
def small_multigraphs(draw, max_n: int = 5, max_m: int = 6, min_m: int = 0):
    """Loopless multigraphs with at most ``max_m`` edges."""
    n = draw(st.integers(2, max_n))
    pairs = st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda e: e[0] != e[1])
    edges = draw(st.lists(pairs, min_size=min_m, max_size=max_m))
    return build_graph(n, edges, name="drawn")


@st.composite
def small_simple_graphs(draw, max_n: int = 5, max_m: int = 7):
    n = draw(st.integers(2, max_n))
    all_pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    chosen = draw(st.lists(st.sampled_from(all_pairs), unique=True, max_size=min(max_m, len(all_pairs))))
    return build_graph(n, sorted(chosen), name="drawn_simple")
