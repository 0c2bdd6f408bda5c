import pytest

from aeclab.catalog import get_entry
from aeclab.galois import OutOfClosure
from aeclab.isolation import audit_isolation, find_isolating_base, isolates
from aeclab.structures import make_graph


@pytest.fixture
def path5():
    return make_graph(5, [(0, 1), (1, 2), (2, 3), (3, 4)])


def test_isolates_examples(cg, cycle4, path5):
    assert isolates(cg, cycle4, {0, 2}, {0}, (1,))
    assert isolates(cg, path5, {0, 4}, {0}, (1,))
    assert not isolates(cg, path5, {0, 4}, set(), (1,))
    assert isolates(cg, path5, {0, 4}, {0, 4}, (3,))
    with pytest.raises(ValueError):
        isolates(cg, path5, {0}, {4}, (1,))


def test_find_base_examples(cg, cycle4, path5):
    res = find_isolating_base(cg, path5, {0, 4}, (1,))
    assert res.isolating == {0}
    res = find_isolating_base(cg, cycle4, {0, 1}, (3,))
    assert res.base == {0} and res.isolating == {0, 1} and res.added == [1]
    assert sorted(res.realizations) == [(1,), (3,)]
    assert len(res.added) <= res.budget
    assert isolates(cg, cycle4, {0, 1}, res.isolating, (3,))


def test_find_base_subtuple(cg, path5):
    # the minimal witness {0} already pins 2 down by distance
    res = find_isolating_base(cg, path5, {0, 2, 4}, (2,))
    assert res.isolating == {0} and isolates(cg, path5, {0, 2, 4}, res.isolating, (2,))
    g = make_graph(4, [(0, 1), (2, 3)])
    assert find_isolating_base(cg, g, {0, 2}, (2,)).isolating == {2}


def test_out_of_closure(cg):
    with pytest.raises(OutOfClosure):
        find_isolating_base(cg, make_graph(2, []), {0}, (1,))


@pytest.mark.parametrize("name", ["US1", "CG", "EQ3", "PC2"])
def test_audit(name):
    e = get_entry(name)
    rep = audit_isolation(e.klass, e.iso_members(4 if name != "PC2" else 5))
    assert rep.passed and rep.checked > 0
