import itertools
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from topoadvice.families import (
    BroomSpec,
    FamilyError,
    GadgetPair,
    LollipopSpec,
    derive_prime_pair,
    enumerate_matchings,
    make_broom,
    make_h_pair,
    make_lollipop,
    random_connected,
    search_yk,
    verify_gadget_pair,
)
from topoadvice.graph import build_graph, port_isomorphism
from topoadvice.views import union_view_colors, views_equal


def double_factorial(m):
    return math.prod(range(m - 1, 0, -2))


class TestBroom:
    def test_figure_instance(self):
        b = make_broom(BroomSpec(23, 6, 3))
        assert b.spec.m == 6
        assert sum(len(x) for x in b.bristles) == 18
        assert len(b.stick) == 3 and len(b.handle) == 2
        assert b.graph.n == 23 and b.graph.diameter == 6
        assert b.graph.num_edges == 25

    def test_single_node_bristles(self):
        b = make_broom(BroomSpec(11, 4, 1))
        assert b.spec.m == 6
        assert all(len(x) == 1 for x in b.bristles)
        assert b.graph.diameter == 4

    def test_handle_ports(self):
        b = make_broom(BroomSpec(23, 6, 3))
        for x in b.handle:
            assert b.graph.degree(x) == 1
        assert b.graph.adj[b.h][0] == (b.u, 0)

    def test_u_equals_v(self):
        # D - k = 1: the stick is a single node
        b = make_broom(BroomSpec(8, 2, 1))
        assert b.u == b.v
        ports = sorted(p for p, (y, _) in enumerate(b.graph.adj[b.u]) if y in b.handle)
        assert ports == [0] + list(range(b.spec.m + 1, b.spec.m + len(b.handle)))

    def test_matching_edges_use_port_one(self):
        b = make_broom(BroomSpec(23, 6, 3))
        for i, j in b.matching:
            assert b.graph.adj[b.bristles[i][0]][1] == (b.bristles[j][0], 1)

    def test_rejects_long_bristles(self):
        with pytest.raises(FamilyError, match="k <= D/2"):
            make_broom(BroomSpec(20, 4, 3))

    def test_long_bristles_break_diameter(self):
        b = make_broom(BroomSpec(20, 4, 3, check=False))
        assert b.graph.diameter > 4

    def test_infeasible(self):
        with pytest.raises(FamilyError):
            make_broom(BroomSpec(6, 4, 2))

    @given(st.integers(8, 40), st.integers(2, 12), st.integers(1, 6), st.data())
    def test_generated_brooms(self, n, D, k, data):
        spec = BroomSpec(n, D, k)
        try:
            spec.validate()
        except FamilyError:
            return
        assert spec.k * spec.m + D - k < n and spec.m % 2 == 0
        b = make_broom(spec)
        assert b.graph.n == n and b.graph.diameter == D
        assert n - spec.k * spec.m - (D - k) == len(b.handle) >= 1

    def test_matchings_differ_only_in_matching_edges(self):
        spec = BroomSpec(11, 4, 1)
        graphs = [make_broom(spec, m) for m in itertools.islice(enumerate_matchings(6), 5)]
        for a, b in itertools.combinations(graphs, 2):
            match_a = {e for e in a.graph.edges if e[1] == 1 and e[3] == 1 and e[0] in {x[0] for x in a.bristles}}
            match_b = {e for e in b.graph.edges if e[1] == 1 and e[3] == 1 and e[0] in {x[0] for x in b.bristles}}
            assert set(a.graph.edges) - match_a == set(b.graph.edges) - match_b


class TestMatchings:
    @pytest.mark.parametrize("m", [2, 4, 6, 8])
    def test_count(self, m):
        ms = list(enumerate_matchings(m))
        assert len(ms) == double_factorial(m) == len(set(ms))
        for match in ms:
            assert sorted(x for p in match for x in p) == list(range(m))

    def test_deterministic_order(self):
        assert list(enumerate_matchings(4)) == [((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))]

    def test_odd(self):
        with pytest.raises(FamilyError):
            list(enumerate_matchings(5))


class TestLollipop:
    def test_figure_instance(self):
        lol = make_lollipop(LollipopSpec(6, 3))
        assert lol.graph.n == 6 and lol.graph.num_edges == 8 and lol.graph.diameter == 3

    def test_seeds(self):
        a = make_lollipop(LollipopSpec(6, 3, seed=1))
        b = make_lollipop(LollipopSpec(6, 3, seed=2))
        assert a.graph != b.graph
        assert views_equal(a.graph, [""] * 6, a.u, b.graph, [""] * 6, b.u, 3)

    def test_d1(self):
        lol = make_lollipop(LollipopSpec(6, 1))
        assert lol.u == lol.v
        assert lol.graph.num_edges == 15

    def test_candy_ports(self):
        lol = make_lollipop(LollipopSpec(9, 4, seed=5))
        c = 9 - 4
        for w in lol.candy:
            row = lol.graph.adj[w]
            assert row[c - 1][0] == lol.v
            assert {y for y, _ in row[: c - 1]} == set(lol.candy) - {w}

    def test_alpha(self):
        with pytest.raises(FamilyError):
            make_lollipop(LollipopSpec(8, 7))

    @given(st.integers(4, 40), st.integers(1, 30), st.integers(0, 100))
    def test_generated(self, n, D, seed):
        spec = LollipopSpec(n, D, seed=seed)
        try:
            spec.validate()
        except FamilyError:
            return
        g = make_lollipop(spec).graph
        assert g.n == n and g.diameter == D


class TestGadgets:
    def test_fixture_is_valid(self):
        pair = search_yk()
        rep = verify_gadget_pair(pair)
        assert rep.ok, rep.failures()
        assert pair.kind == "G" and all(g.n == 6 and g.diameter == 3 for g in pair.graphs)
        assert port_isomorphism(*pair.graphs) is None

    def test_fresh_search_finds_a_valid_pair(self):
        pair = search_yk(use_fixture=False)
        assert verify_gadget_pair(pair).ok

    def test_black_colors_at_fixpoint(self):
        pair = search_yk()
        c1, c2 = union_view_colors(pair.graphs, [[""] * 6, [""] * 6], 11)
        blacks = [c1[x] for x in pair.black[0]] + [c2[x] for x in pair.black[1]]
        assert len(set(blacks)) == 1

    def test_budget_exhausted(self):
        with pytest.raises(FamilyError):
            search_yk(budget=3, use_fixture=False)

    def test_prime_pair(self):
        prime = derive_prime_pair(search_yk())
        assert all(g.n == 8 and g.diameter <= 4 for g in prime.graphs)
        for g, (a, b) in zip(prime.graphs, prime.black):
            assert g.distance_matrix[a][b] == 2
        assert verify_gadget_pair(prime).ok

    @pytest.mark.parametrize("n, D, core", [(10, 3, 6), (12, 4, 8), (14, 5, 6), (16, 6, 8)])
    def test_h_pair(self, n, D, core):
        pair = make_h_pair(n, D, search_yk())
        k = (D - 1) // 2 if D % 2 else (D - 2) // 2
        clique = (n - 2 * k - core) // 2
        assert core + 2 * k + 2 * clique == n
        assert all(g.n == n and g.diameter == D for g in pair.graphs)
        assert verify_gadget_pair(pair).ok

    def test_h_pair_all_small(self):
        base = search_yk()
        prime = derive_prime_pair(base)
        for n in range(10, 17, 2):
            for D in range(3, n - 5):
                pair = make_h_pair(n, D, base, prime)
                rep = verify_gadget_pair(pair)
                assert rep.ok, (n, D, rep.failures())

    @pytest.mark.parametrize("n, D", [(11, 3), (8, 3), (10, 2)])
    def test_h_pair_infeasible(self, n, D):
        with pytest.raises(FamilyError):
            make_h_pair(n, D, search_yk())

    def test_identical_graphs_fail(self):
        g = search_yk().graphs[0]
        rep = verify_gadget_pair(GadgetPair((g, g), ((0, 1), (0, 1)), "G", 6))
        assert not rep.checks["non_isomorphic"]

    def test_port_swap_flagged(self):
        pair = search_yk()
        g1, g2 = pair.graphs
        # move the black edge to port 1 at one black node only
        swap = {0: 1, 1: 0}
        edges = []
        for u, p, v, q in g1.edges:
            p = swap.get(p, p) if u == 0 else p
            q = swap.get(q, q) if v == 0 else q
            edges.append((u, p, v, q))
        broken = GadgetPair((build_graph(6, edges), g2), pair.black, "G", 6)
        assert not verify_gadget_pair(broken).ok

    def test_dict_roundtrip(self):
        pair = search_yk()
        assert GadgetPair.from_dict(pair.to_dict()) == pair


class TestRandom:
    def test_two_nodes(self):
        g = random_connected(2, seed=0)
        assert g.edges == ((0, 0, 1, 0),)

    def test_deterministic(self):
        assert random_connected(12, 4, seed=9) == random_connected(12, 4, seed=9)

    def test_many_seeds(self):
        for s in range(100):
            g = random_connected(12, 4, seed=s)
            assert g.n == 12 and max(g.degree(u) for u in range(12)) <= 4

    def test_rejects_tiny(self):
        with pytest.raises(FamilyError):
            random_connected(1)
