import random

import pytest

from aeclab.galois import (OutOfClosure, ParameterMismatch, TypeLocator, audit_multiuniversal,
                           audit_type_machinery, canonical_certificate, is_eta_algebraic, realizations,
                           stabilizer_orbit, type_equal)
from aeclab.catalog import get_entry
from aeclab.structures import make_equivalence, make_graph, make_unary


def loc(m, params, tup):
    return TypeLocator(m, frozenset(params), tuple(tup))


def test_type_equal_path(cg, path3):
    assert type_equal(cg, loc(path3, (), (0,)), loc(path3, (), (2,)))
    assert not type_equal(cg, loc(path3, (), (0,)), loc(path3, (), (1,)))
    assert type_equal(cg, loc(path3, (), (1,)), loc(path3, (), (1,)))


def test_type_equal_parameter_mismatch(cg, path3):
    with pytest.raises(ParameterMismatch):
        type_equal(cg, loc(path3, {0}, (1,)), loc(path3, (), (1,)))


def test_certificates_track_types(cg, path3):
    c0, c1, c2 = (canonical_certificate(cg, loc(path3, (), (x,))) for x in range(3))
    assert c0 == c2 and c0.to_text() == c2.to_text()
    assert c0 != c1


def test_certificate_relabel_invariant(cg):
    rng = random.Random(3)
    for _ in range(20):
        g = get_entry("CG").generator(6, rng.randrange(1000))
        rest = list(range(2, 6))
        rng.shuffle(rest)
        perm = [0, 1] + rest  # parameters keep their labels
        h = g.relabel(perm)
        assert canonical_certificate(cg, loc(g, {0, 1}, (2, 3))) == canonical_certificate(
            cg, loc(h, {0, 1}, (perm[2], perm[3])))


def test_certificate_relabel_fixing_params(cg):
    g = make_graph(5, [(0, 1), (1, 2), (3, 4)])
    perm = [0, 2, 1, 4, 3]
    h = g.relabel(perm)
    assert canonical_certificate(cg, loc(g, {0}, (3,))) == canonical_certificate(cg, loc(h, {0}, (4,)))


def test_realizations_examples(cg, eq3, cycle4):
    cert = canonical_certificate(cg, loc(cycle4, {0}, (1,)))
    assert realizations(cg, cycle4, {0}, cert) == [(1,), (3,)]
    cert = canonical_certificate(cg, loc(cycle4, {0}, (0,)))
    assert realizations(cg, cycle4, {0}, cert) == [(0,)]
    eq = make_equivalence(6, [(0, 1, 2), (3, 4, 5)])
    assert realizations(eq3, eq, {0}, canonical_certificate(eq3, loc(eq, {0}, (1,)))) == [(1,), (2,)]


def test_eta_algebraic_examples(cg, us1, cycle4):
    t = loc(cycle4, {0}, (1,))
    assert is_eta_algebraic(cg, t, 3) and not is_eta_algebraic(cg, t, 2)
    assert is_eta_algebraic(cg, loc(cycle4, {0}, (0,)), 2)
    u = make_unary([1, 2, 2])
    assert is_eta_algebraic(us1, loc(u, {0}, (1,)), 2)
    with pytest.raises(OutOfClosure):
        is_eta_algebraic(cg, loc(make_graph(2, []), {0}, (1,)), 2)


def test_stabilizer_orbit(cg, cycle4):
    group, orbit = stabilizer_orbit(cg, cycle4, {0}, 1)
    assert len(group) == 2 and orbit == {1, 3}
    group, orbit = stabilizer_orbit(cg, cycle4, range(4), 1)
    assert len(group) == 1 and orbit == {1}


def test_multiuniversal_examples(us1, eq3):
    assert audit_multiuniversal(us1, get_entry("US1").iso_members(4), 2).passed
    reps = get_entry("EQ3").iso_members(6)
    assert audit_multiuniversal(eq3, reps, 3).passed
    assert audit_multiuniversal(eq3, reps, 2).violations
    assert audit_multiuniversal(eq3, [], 2).checked == 0


def test_type_machinery_small(cg):
    rep = audit_type_machinery(cg, get_entry("CG").iso_members(3))
    assert rep.passed and rep.stats["types"] > 0
