import itertools
import json

import pytest
from hypothesis import given, settings, strategies as st

from aeclab.corpus import CorpusError, dumps, emit_corpus, parse_corpus, parse_locator, structure_from_doc, \
    structure_to_doc
from aeclab.structures import (BudgetExceeded, FiniteStructure, PartialMap, StructureError, Vocabulary,
                               VocabularyMismatch, enumerate_all_structures, is_isomorphism, is_substructure,
                               make_graph, make_unary)

GRAPH = Vocabulary(relations=(("E", 2),))
UNARY = Vocabulary(functions=(("s", 1),))


def simple(g):
    e = set(g.rel("E"))
    return all((b, a) in e and a != b for a, b in e)


def test_enumerate_graphs_size_three():
    graphs = [g for g in enumerate_all_structures(GRAPH, 3, simple, min_size=3)]
    assert len(graphs) == 8


def test_enumerate_empty_only():
    assert len(list(enumerate_all_structures(GRAPH, 0))) == 1


def test_enumerate_unary_up_to_two():
    assert len(list(enumerate_all_structures(UNARY, 2, min_size=1))) == 5


def test_enumerate_dedup_counts_unary_iso_types():
    # functional digraphs on 3 points: 7 isomorphism types
    assert len(list(enumerate_all_structures(UNARY, 3, min_size=3, dedup=True))) == 7


def test_enumerate_budget():
    with pytest.raises(BudgetExceeded):
        list(enumerate_all_structures(GRAPH, 6, budget=1000))


def test_substructure_examples():
    edge = make_graph(2, [(0, 1)])
    point = make_graph(1, [])
    assert is_substructure(point, edge, PartialMap({0: 0}))
    assert is_substructure(edge, edge, PartialMap.identity(range(2)))
    big = make_unary([1, 1])
    small = make_unary([0])
    assert not is_substructure(small, big, PartialMap({0: 0}))
    assert big.induced({0}) is None


def test_substructure_vocab_mismatch():
    with pytest.raises(VocabularyMismatch):
        is_substructure(make_graph(1, []), make_unary([0]), PartialMap({0: 0}))


def test_non_induced_is_rejected():
    assert not is_substructure(make_graph(2, []), make_graph(2, [(0, 1)]), PartialMap.identity(range(2)))


def test_build_rejects_bad_tables():
    with pytest.raises(StructureError):
        FiniteStructure.build(UNARY, 2, funs={"s": [0, 2]})
    with pytest.raises(StructureError):
        make_graph(2, [(1, 1)])


def test_partial_map_algebra():
    f = PartialMap({0: 1, 1: 2})
    g = PartialMap({1: 5, 2: 6})
    assert g.compose(f) == PartialMap({0: 5, 1: 6})
    assert f.inverse() == PartialMap({1: 0, 2: 1})
    assert f.restrict({0}) == PartialMap({0: 1})
    assert f.image == frozenset({1, 2})


@given(st.lists(st.integers(0, 5), min_size=1, max_size=6).flatmap(
    lambda t: st.tuples(st.just([x % len(t) for x in t]), st.permutations(range(len(t))))))
@settings(max_examples=60, deadline=None)
def test_relabel_is_isomorphism(data):
    table, perm = data
    m = make_unary(table)
    assert is_isomorphism(m, m.relabel(perm), PartialMap(dict(enumerate(perm))))


def test_corpus_round_trip(tmp_path, cycle4):
    p = tmp_path / "c.jsonl"
    emit_corpus([cycle4, make_unary([1, 2, 2])], p)
    back = [m for _, m in parse_corpus(p)]
    assert back == [cycle4, make_unary([1, 2, 2])]
    assert dumps(back[0]) == dumps(cycle4)
    q = tmp_path / "c.json"
    emit_corpus([cycle4], q)
    assert parse_corpus(q)[0] == ("c.json#0", cycle4)


def test_corpus_rejects_missing_row():
    doc = structure_to_doc(make_unary([1, 0, 2]))
    doc["funs"]["s"].pop()
    with pytest.raises(CorpusError, match="not total"):
        structure_from_doc(doc)


def test_corpus_rejects_index_equal_to_size():
    doc = structure_to_doc(make_graph(3, [(0, 1)]))
    doc["rels"]["E"].append([0, 3])
    with pytest.raises(CorpusError, match="outside universe"):
        structure_from_doc(doc)


def test_corpus_rejects_duplicate_row():
    doc = structure_to_doc(make_unary([0, 0]))
    doc["funs"]["s"].append([0, 1])
    with pytest.raises(CorpusError, match="duplicate"):
        structure_from_doc(doc)


def test_corpus_positioned_json_error(tmp_path):
    p = tmp_path / "bad.jsonl"
    p.write_text(json.dumps(structure_to_doc(make_graph(1, []))) + "\n{oops\n")
    with pytest.raises(CorpusError, match=r"bad.jsonl:2"):
        parse_corpus(p)


def test_parse_locator():
    assert parse_locator("a/b.jsonl@3#0,2") == (__import__("pathlib").Path("a/b.jsonl"), 3, (0, 2))
    assert parse_locator("x.json#")[2] == ()
    with pytest.raises(ValueError):
        parse_locator("x.json")
