import pytest

from aeclab.catalog import get_entry
from aeclab.iso import find_isomorphisms
from aeclab.shortness import (GlueBudgetExceeded, GluingProblem, NotInP, audit_shortness, check_finite_restrictions,
                              glue, glue_staged_stream, mapping_family, orbit_tuples)
from aeclab.structures import PartialMap, is_isomorphism, make_graph


def test_restrictions(cg, cycle4, path3):
    assert check_finite_restrictions(GluingProblem(cg, cycle4, cycle4, (0, 1), (0, 1))) is None
    assert check_finite_restrictions(GluingProblem(cg, cycle4, cycle4, (0, 1), (0, 2))) == (0, 1)
    assert check_finite_restrictions(GluingProblem(cg, path3, path3, (0,), (2,))) is None


def test_mapping_family_examples(cg, cycle4):
    p = GluingProblem(cg, cycle4, cycle4, (0,), (0,))
    fam = mapping_family(p, {0, 1})
    assert set(fam.maps) == {PartialMap({0: 0, 1: 1}), PartialMap({0: 0, 1: 3})}
    assert mapping_family(p, set()).maps == (PartialMap(),)
    assert mapping_family(p, {0}).maps == (PartialMap({0: 0}),)


def test_mapping_family_not_in_p(cg):
    g = make_graph(4, [(0, 1), (2, 3)])
    p = GluingProblem(cg, g, g, (0, 2), (0, 2))
    assert len(mapping_family(p, {0, 1})) == 1
    with pytest.raises(NotInP):
        mapping_family(p, {1})


def test_glue_cycle_all(cg, cycle4):
    res = glue(GluingProblem(cg, cycle4, cycle4, (0,), (0,)), all_solutions=True)
    assert res.success and len(res.maps) == 2
    assert set(res.maps) == set(find_isomorphisms(cycle4, cycle4, {0: 0}))


def test_glue_path_reversal(cg, path3):
    res = glue(GluingProblem(cg, path3, path3, (0,), (2,)))
    assert res.isomorphism == PartialMap({0: 2, 1: 1, 2: 0})
    assert is_isomorphism(path3, path3, res.isomorphism)


def test_glue_failure_certificate(cg, cycle4):
    res = glue(GluingProblem(cg, cycle4, cycle4, (0, 1), (0, 2)))
    assert not res.success
    assert res.failure.restriction == (0, 1) and not res.failure.contradicts_shortness


def test_glue_budget(cg):
    k5 = make_graph(5, [(i, j) for i in range(5) for j in range(i + 1, 5)])
    with pytest.raises(GlueBudgetExceeded):
        glue(GluingProblem(cg, k5, k5, (0,), (0,)), all_solutions=True, budget=3)
    assert len(glue(GluingProblem(cg, k5, k5, (0,), (0,)), all_solutions=True).maps) == 24


def test_stream(cg, cycle4):
    p = GluingProblem(cg, cycle4, cycle4, (0,), (0,))
    assert glue_staged_stream(p, 0).survivors == [1]
    stats = glue_staged_stream(p, 3)
    assert stats.survivors == [1, 2, 2, 2] and stats.glued
    bad = GluingProblem(cg, cycle4, cycle4, (0, 1), (0, 2))
    assert glue_staged_stream(bad, 0).survivors == [0]
    with pytest.raises(ValueError):
        glue_staged_stream(p, 10)


def test_orbit_tuples(cycle4):
    assert orbit_tuples(cycle4, 1) == [(0,)]
    assert orbit_tuples(cycle4, 2)[1:] == [(0, 0), (0, 1), (0, 2)]


@pytest.mark.parametrize("name", ["US1", "CG", "EQ3"])
def test_audit_small(name):
    e = get_entry(name)
    rep = audit_shortness(e.klass, e.iso_members(4), max_tuple=2, cross_sample=200)
    assert rep.passed and rep.stats["same_type_pairs"] > 0
