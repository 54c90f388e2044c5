import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from posheaf.errors import CycleDetected, DuplicateElement, EmptyHyperedge, UnknownElement, UnknownVertex
from posheaf.linalg import QQ
from posheaf.poset import (
    RedundantCoversWarning,
    build_poset,
    classify,
    down_set,
    hypergraph_to_poset,
    order_complex,
    simplicial_complex_poset,
    topological_sort,
    transitive_reduction,
)

from helpers import brute_force_chains, random_dag_poset, seeded_rng


def test_build_path_graph_poset():
    p = build_poset(["1", "2", "a"], [("1", "a"), ("2", "a")])
    assert p.lt("1", "a") and p.lt("2", "a")
    assert not p.lt("1", "2")
    assert p.covers == (("1", "a"), ("2", "a"))


def test_build_empty_poset():
    p = build_poset([], [])
    assert len(p) == 0
    assert topological_sort(p) == []


def test_build_rejects_cycle():
    with pytest.raises(CycleDetected):
        build_poset(["a", "b"], [("a", "b"), ("b", "a")])


def test_build_rejects_unknown_and_duplicate():
    with pytest.raises(UnknownElement):
        build_poset(["a"], [("a", "b")])
    with pytest.raises(DuplicateElement):
        build_poset(["a", "a"], [])


def test_redundant_covers_are_reduced_with_warning():
    with pytest.warns(RedundantCoversWarning):
        p = build_poset(["a", "b", "c"], [("a", "b"), ("b", "c"), ("a", "c")])
    assert p.covers == (("a", "b"), ("b", "c"))
    assert p.lt("a", "c")


def test_transitive_reduction_chain():
    assert transitive_reduction([("a", "b"), ("b", "c"), ("a", "c")]) == {
        ("a", "b"),
        ("b", "c"),
    }


def test_transitive_reduction_already_reduced():
    assert transitive_reduction([("a", "b")]) == {("a", "b")}


def test_transitive_reduction_diamond():
    pairs = [("0", "x"), ("0", "y"), ("x", "1"), ("y", "1"), ("0", "1")]
    assert transitive_reduction(pairs) == {
        ("0", "x"),
        ("0", "y"),
        ("x", "1"),
        ("y", "1"),
    }


def test_transitive_reduction_rejects_cycles():
    with pytest.raises(CycleDetected):
        transitive_reduction([("a", "b"), ("b", "a")])


@st.composite
def dag_edges(draw):
    n = draw(st.integers(min_value=1, max_value=8))
    edges = draw(
        st.sets(
            st.tuples(
                st.integers(min_value=0, max_value=n - 1),
                st.integers(min_value=0, max_value=n - 1),
            ).filter(lambda ab: ab[0] < ab[1]),
            max_size=12,
        )
    )
    return n, edges


@settings(max_examples=200, deadline=None)
@given(dag_edges())
def test_reduction_preserves_closure(data):
    n, edges = data
    pairs = [(f"n{a}", f"n{b}") for a, b in edges]
    reduced = transitive_reduction(pairs)

    def closure(edge_set):
        nodes = {x for e in edge_set for x in e} | {x for e in pairs for x in e}
        adj = {v: set() for v in nodes}
        for a, b in edge_set:
            adj[a].add(b)
        out = set()
        for start in nodes:
            stack = list(adj[start])
            seen = set()
            while stack:
                v = stack.pop()
                if v in seen:
                    continue
                seen.add(v)
                out.add((start, v))
                stack.extend(adj[v])
        return out

    assert closure(reduced) == closure(set(pairs))


def test_topological_sort_examples():
    p = build_poset(["1", "2", "a"], [("1", "a"), ("2", "a")])
    assert topological_sort(p) == ["1", "2", "a"]
    antichain = build_poset(["x", "y", "z"], [])
    assert topological_sort(antichain) == ["x", "y", "z"]
    chain = build_poset(["a", "b", "c"], [("c", "b"), ("b", "a")])
    assert topological_sort(chain) == ["c", "b", "a"]


def test_topological_sort_respects_closure_randomized():
    rng = seeded_rng(11)
    for _ in range(40):
        p = random_dag_poset(rng)
        order = topological_sort(p)
        assert sorted(order) == sorted(p.elements)
        position = {e: i for i, e in enumerate(order)}
        for (a, b) in p.closure_pairs():
            assert position[a] < position[b]


def test_down_set_of_edge_is_antichain():
    p = simplicial_complex_poset([["1", "2"]])
    sub = down_set(p, "1,2", strict=True)
    assert set(sub.elements) == {"1", "2"}
    assert sub.covers == ()


def test_down_set_of_minimal_is_empty():
    p = build_poset(["a", "b"], [("a", "b")])
    assert len(down_set(p, "a", strict=True)) == 0


def test_down_set_example_from_named_covers():
    p = build_poset(
        ["1", "2", "3", "a", "b"],
        [("1", "a"), ("2", "a"), ("2", "b"), ("3", "b")],
    )
    sub = down_set(p, "b", strict=True)
    assert set(sub.elements) == {"2", "3"}
    assert sub.covers == ()


def test_down_set_unknown_element():
    p = build_poset(["a"], [])
    with pytest.raises(UnknownElement):
        down_set(p, "zz", strict=True)


def test_order_complex_antichain_and_chain():
    antichain = build_poset(["x", "y"], [])
    groups = order_complex(antichain)
    assert [len(g) for g in groups] == [2]
    chain = build_poset(["a", "b"], [("a", "b")])
    groups = order_complex(chain)
    assert [[c.elements for c in g] for g in groups] == [
        [("a",), ("b",)],
        [("a", "b")],
    ]


def test_order_complex_path_counts():
    p = build_poset(["1", "2", "a"], [("1", "a"), ("2", "a")])
    groups = order_complex(p)
    assert [len(g) for g in groups] == [3, 2]
    assert {c.elements for c in groups[1]} == {("1", "a"), ("2", "a")}


def test_order_complex_matches_brute_force_enumeration():
    rng = seeded_rng(5)
    for _ in range(25):
        p = random_dag_poset(rng, max_elements=7)
        groups = order_complex(p)
        found = {c.elements for g in groups for c in g}
        assert found == set(brute_force_chains(p))
        # each listed once
        assert sum(len(g) for g in groups) == len(found)


def test_classify_triangle_boundary_is_cell_poset():
    p = simplicial_complex_poset([["1", "2"], ["2", "3"], ["1", "3"]])
    result = classify(p, QQ)
    assert result.graded
    assert result.homology_cell
    assert result.morse_cell
    assert result.rank == {e: e.count(",") for e in p.elements}


def test_classify_morse_example_not_graded():
    p = build_poset(
        ["1", "2", "3", "a", "b"],
        [("1", "a"), ("2", "a"), ("a", "b"), ("3", "b")],
    )
    result = classify(p, QQ)
    assert not result.graded
    assert result.morse_cell
    assert not result.homology_cell
    assert result.cell_dims == {"1": 0, "2": 0, "3": 0, "a": 1, "b": 1}


def test_classify_hypergraph_triple_not_morse():
    p = hypergraph_to_poset(["1", "2", "3"], [["1", "2", "3"]])
    result = classify(p, QQ)
    assert not result.morse_cell
    assert not result.homology_cell


def test_classify_simplicial_posets_are_homology_cell():
    rng = seeded_rng(23)
    from helpers import random_simplicial_poset

    for _ in range(10):
        p = random_simplicial_poset(rng)
        result = classify(p, QQ)
        assert result.homology_cell
        assert result.morse_cell  # monotone consistency
        assert result.rank == {e: e.count(",") for e in p.elements}


def test_hypergraph_to_poset_shapes():
    p = hypergraph_to_poset(["1", "2", "3"], [["1", "2", "3"]])
    assert len(p) == 4
    assert len(p.covers) == 3
    edge = hypergraph_to_poset(["1", "2"], [["1", "2"]])
    assert len(edge) == 3
    path = hypergraph_to_poset(["1", "2", "3"], [["1", "2"], ["2", "3"]])
    assert len(path) == 5
    assert len(path.covers) == 4


def test_hypergraph_to_poset_errors():
    with pytest.raises(EmptyHyperedge):
        hypergraph_to_poset(["1"], [[]])
    with pytest.raises(UnknownVertex):
        hypergraph_to_poset(["1"], [["2"]])
