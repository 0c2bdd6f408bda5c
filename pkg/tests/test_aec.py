import itertools

import pytest
from hypothesis import given, settings, strategies as st

from aeclab.aec import (ClassMembershipError, CoherenceError, EmbeddingSystem, audit_closure_oracle,
                        audit_intersections, audit_order_axioms, audit_transport, colimit,
                        finite_character_witness, generic_closure, transport_closure_check)
from aeclab.catalog import get_entry
from aeclab.structures import PartialMap, make_graph, make_unary

small_graphs = st.integers(1, 6).flatmap(lambda n: st.tuples(
    st.just(n), st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda e: e[0] < e[1])),
    st.sets(st.integers(0, n - 1)), st.sets(st.integers(0, n - 1))))


def test_closure_examples(cg, us1):
    g = make_graph(4, [(0, 1), (1, 2)])
    assert generic_closure(cg, g, {0}) == {0, 1, 2}
    assert cg.closure(g, {0}) == {0, 1, 2}
    assert generic_closure(cg, g, range(4)) == set(range(4))
    assert generic_closure(us1, make_unary([1, 2, 2]), {0}) == {0, 1, 2}


def test_closure_rejects_non_member(cg):
    with pytest.raises(ClassMembershipError):
        generic_closure(cg, make_unary([0]), ())


@given(small_graphs)
@settings(max_examples=60, deadline=None)
def test_closure_operator_laws(cg, data):
    n, edges, a, b = data
    g = make_graph(n, edges)
    ca = cg.closure(g, a)
    assert a <= ca
    assert cg.closure(g, ca) == ca
    assert cg.closure(g, a) <= cg.closure(g, a | b)
    assert generic_closure(cg, g, a) == ca


def test_finite_character_examples(cg, us1):
    g = make_graph(4, [(0, 1), (2, 3)])
    assert finite_character_witness(cg, g, {0, 2}, 1) == {0}
    assert finite_character_witness(cg, g, {0, 2}, 0) == {0}
    assert finite_character_witness(us1, make_unary([1, 1]), {0}, 1) == {0}
    with pytest.raises(ValueError):
        finite_character_witness(cg, g, {0}, 3)


def test_transport_examples(cg):
    g = make_graph(5, [(0, 1), (1, 2), (3, 4)])
    comp, incl = g.induced({0, 1, 2})
    for r in range(4):
        for a in itertools.combinations(range(3), r):
            assert transport_closure_check(cg, comp, g, incl, a)
    assert transport_closure_check(cg, g, g, PartialMap.identity(range(5)), {3})


def test_intersection_audit_positive_and_empty(cg):
    corpus = list(get_entry("CG").members(4))
    assert audit_intersections(cg, corpus).passed
    rep = audit_intersections(cg, [])
    assert rep.checked == 0 and rep.passed


def test_controls_fail_with_witness():
    noi = get_entry("NOI")
    rep = audit_intersections(noi.klass, list(noi.members(4)))
    assert rep.violations
    w = rep.violations[0]
    assert w.check == "closure-is-strong" and w.structure_id.startswith("#")
    mix = get_entry("EQMIX2")
    assert audit_transport(mix.klass, list(mix.members(mix.exhaustive_bound))).violations


def test_order_axioms(cg):
    assert audit_order_axioms(cg, list(get_entry("CG").members(3))).passed


def test_closure_oracle_small(us1):
    rep = audit_closure_oracle(us1, get_entry("US1").iso_members(4))
    assert rep.passed and rep.checked > 0


def test_colimit_single_structure(cycle4):
    top, cocone = colimit(EmbeddingSystem([cycle4], {(0, 0): PartialMap.identity(range(4))}))
    assert top == cycle4 and cocone[0] == PartialMap.identity(range(4))


def test_colimit_chain_of_components(cg):
    m0, m1, m2 = make_graph(2, [(0, 1)]), make_graph(3, [(0, 1)]), make_graph(5, [(0, 1), (3, 4)])
    inc = lambda n: PartialMap.identity(range(n))
    sys_ = EmbeddingSystem([m0, m1, m2], {(0, 0): inc(2), (1, 1): inc(3), (2, 2): inc(5),
                                          (0, 1): inc(2), (1, 2): inc(3), (0, 2): inc(2)})
    top, cocone = colimit(sys_, cg)
    assert top == m2 and cocone[2] == inc(5) and cocone[0] == inc(2)


def test_colimit_equal_parallel_maps(path3):
    f = PartialMap({0: 0, 1: 1})
    edge = make_graph(2, [(0, 1)])
    top, _ = colimit(EmbeddingSystem([edge, path3], {(0, 1): [f, f]}))
    assert top == path3


def test_colimit_rejects_non_commuting(path3):
    edge = make_graph(2, [(0, 1)])
    inc = PartialMap.identity(range(2))
    bad = EmbeddingSystem([edge, edge, path3], {(0, 1): inc, (1, 2): inc, (0, 2): PartialMap({0: 2, 1: 1})})
    with pytest.raises(CoherenceError, match="triangle 0->1->2"):
        colimit(bad)
