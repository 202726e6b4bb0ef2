import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from _oracles import explicit_view
from conftest import graphs
from topoadvice.families import LollipopSpec, make_lollipop, random_connected
from topoadvice.graph import build_graph, port_isomorphism
from topoadvice.views import (
    DecoratedViewTree,
    LabeledMap,
    ReconstructionError,
    ViewBudgetError,
    ViewStore,
    decorated_view,
    reconstruct_from_injective_decoration,
    view_colors,
    views_equal,
)


def empty(g):
    return [""] * g.n


def injective(g, seed=0):
    labels = [format(i, "b") for i in range(g.n)]
    random.Random(seed).shuffle(labels)
    return labels


class TestDecoratedView:
    def test_depth_zero(self, triangle):
        t = decorated_view(triangle, ["a", "b", "c"], 1, 0)
        assert t == DecoratedViewTree("b", 2)
        assert t.depth == 0 and t.size() == 1

    def test_single_edge_is_a_path(self, edge):
        t = decorated_view(edge, empty(edge), 0, 2)
        assert t.size() == 3
        assert list(t.children) == [(0, 0)]
        assert list(t.children[(0, 0)].children) == [(0, 0)]

    def test_triangle_depth_one(self, triangle):
        t = decorated_view(triangle, empty(triangle), 0, 1)
        assert sorted(p for p, _ in t.children) == [0, 1]
        assert all(c.depth == 0 for c in t.children.values())

    def test_budget(self, triangle):
        with pytest.raises(ViewBudgetError, match="views_equal"):
            decorated_view(triangle, empty(triangle), 0, 30, budget=1000)

    def test_json_roundtrip(self, triangle):
        t = decorated_view(triangle, ["0", "1", "10"], 2, 3)
        assert DecoratedViewTree.from_dict(t.to_dict()) == t
        assert set(t.to_dict()["kids"]) == {"0,1", "1,1"}

    @given(graphs(max_n=7), st.integers(0, 4), st.data())
    def test_matches_walk_enumeration(self, g, depth, data):
        u = data.draw(st.integers(0, g.n - 1))
        f = data.draw(st.lists(st.sampled_from(["", "0", "1"]), min_size=g.n, max_size=g.n))

        def flatten(t):
            return (t.val, t.deg, tuple((p, q, flatten(c)) for (p, q), c in t.children.items()))

        assert flatten(decorated_view(g, f, u, depth)) == explicit_view(g, f, u, depth)


class TestColors:
    def test_regular_graph_one_color(self, triangle):
        assert len(set(view_colors(triangle, empty(triangle), 0).colors)) == 1

    def test_lollipop_stick(self):
        lol = make_lollipop(LollipopSpec(6, 3))
        colors = view_colors(lol.graph, empty(lol.graph), 1).colors
        assert colors[lol.stick[1]] != colors[lol.u]

    def test_round_recorded(self, triangle):
        assert view_colors(triangle, empty(triangle), 3).round == 3


class TestViewsEqual:
    def test_reflexive(self, triangle):
        assert views_equal(triangle, empty(triangle), 0, triangle, empty(triangle), 0, 5)

    def test_distinct_values(self, edge):
        assert not views_equal(edge, ["0", "1"], 0, edge, ["0", "1"], 1, 0)

    def test_lollipop_stick_ends(self):
        a = make_lollipop(LollipopSpec(8, 3, seed=0))
        b = make_lollipop(LollipopSpec(8, 3, seed=1))
        assert a.graph != b.graph
        assert views_equal(a.graph, empty(a.graph), a.u, b.graph, empty(b.graph), b.u, 3)

    @given(graphs(max_n=6), graphs(max_n=6), st.integers(0, 4))
    def test_refinement_matches_trees_across_graphs(self, g, h, depth):
        fg, fh = empty(g), empty(h)
        for u in range(g.n):
            for v in range(h.n):
                expect = explicit_view(g, fg, u, depth) == explicit_view(h, fh, v, depth)
                assert views_equal(g, fg, u, h, fh, v, depth) == expect

    @given(graphs(max_n=8))
    def test_fixpoint_depth(self, g):
        # equality at the fixpoint equals equality at depth 2n - 1
        f = empty(g)
        for u in range(g.n):
            for v in range(g.n):
                assert views_equal(g, f, u, g, f, v, None) == views_equal(g, f, u, g, f, v, 2 * g.n - 1)


class TestLabeledMap:
    def test_from_codes_sorted_labels(self):
        m = LabeledMap.from_codes([("1", 0, 0, "0")], "1")
        assert m.labels == ("0", "1") and m.self == 1
        assert m.codes() == {("0", 0, 0, "1")}

    def test_conflict(self):
        with pytest.raises(ReconstructionError):
            LabeledMap.from_codes([("a", 0, 0, "b"), ("a", 0, 0, "c")])

    def test_dict_roundtrip(self):
        m = LabeledMap.from_codes([("x", 0, 0, "y")], "y")
        assert LabeledMap.from_dict(m.to_dict()) == m


class TestReconstruction:
    def test_single_edge(self, edge):
        out = reconstruct_from_injective_decoration(decorated_view(edge, ["0", "1"], 0, 2))
        assert out.labels == ("0", "1") and out.self == 0
        assert out.graph == edge

    def test_triangle(self, triangle):
        out = reconstruct_from_injective_decoration(decorated_view(triangle, ["0", "1", "10"], 1, 2))
        assert port_isomorphism(out.graph, triangle) is not None
        assert out.labels[out.self] == "1"

    def test_lollipop(self):
        g = make_lollipop(LollipopSpec(6, 3, seed=2)).graph
        f = injective(g)
        out = reconstruct_from_injective_decoration(decorated_view(g, f, 0, 4))
        assert port_isomorphism(out.graph, g) is not None

    def test_too_shallow(self, triangle):
        with pytest.raises(ReconstructionError, match="too shallow"):
            reconstruct_from_injective_decoration(decorated_view(triangle, ["0", "1", "10"], 0, 0))

    def test_non_injective_evidence(self):
        # star center and a leaf share a value but not a degree
        g = build_graph(3, [(0, 0, 1, 0), (0, 1, 2, 0)])
        with pytest.raises(ReconstructionError):
            reconstruct_from_injective_decoration(decorated_view(g, ["a", "a", "b"], 0, 3))

    @given(graphs(max_n=12), st.integers(0, 1000))
    def test_roundtrip(self, g, seed):
        f = injective(g, seed)
        for u in range(g.n):
            out = reconstruct_from_injective_decoration(decorated_view(g, f, u, g.diameter + 1, budget=10**7))
            # labels name the source nodes, so they induce the only admissible bijection
            phi = [f.index(lab) for lab in out.labels]
            table = {(x, p): (y, q) for x, p, y, q in g.edges} | {(y, q): (x, p) for x, p, y, q in g.edges}
            assert out.graph.num_edges == g.num_edges
            assert all(table[(phi[a], p)] == (phi[b], q) for a, p, b, q in out.graph.edges)
            assert phi[out.self] == u


class TestStore:
    @given(graphs(max_n=7), st.integers(0, 4))
    def test_ids_are_view_equality(self, g, depth):
        store = ViewStore()
        f = empty(g)
        ids = [store.intern_tree(decorated_view(g, f, u, depth)) for u in range(g.n)]
        colors = view_colors(g, f, depth).colors
        for u in range(g.n):
            for v in range(g.n):
                assert (ids[u] == ids[v]) == (colors[u] == colors[v])

    def test_truncate_and_expand(self, triangle):
        store = ViewStore()
        f = ["0", "1", "10"]
        deep = store.intern_tree(decorated_view(triangle, f, 0, 4))
        assert store.expand(store.truncate(deep, 2)) == decorated_view(triangle, f, 0, 2)

    def test_nearest(self, triangle):
        store = ViewStore()
        vid = store.intern_tree(decorated_view(triangle, ["0", "0", "1"], 0, 3))
        assert store.nearest(vid, lambda v: v == "1") == (1, ((1, 1),), "1")
        assert store.nearest(vid, lambda v: v == "x") is None

    def test_digest_stable(self, triangle):
        a, b = ViewStore(), ViewStore()
        ta = decorated_view(triangle, empty(triangle), 0, 3)
        assert a.digest(a.intern_tree(ta)) == b.digest(b.intern_tree(ta))

    def test_memory_budget(self):
        from topoadvice.views import MemoryBudgetError

        g = random_connected(12, 4, seed=3)
        store = ViewStore(mem_budget_mb=0.001)
        with pytest.raises(MemoryBudgetError):
            for u in range(g.n):
                store.intern_tree(decorated_view(g, injective(g), u, 4))
