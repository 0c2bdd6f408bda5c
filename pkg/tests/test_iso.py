import itertools

from hypothesis import given, settings, strategies as st

from aeclab.iso import automorphisms, canonical_form, find_isomorphisms
from aeclab.structures import PartialMap, is_isomorphism, make_graph, make_unary

graphs = st.integers(1, 6).flatmap(lambda n: st.tuples(
    st.just(n), st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda e: e[0] < e[1]))))


def brute(m1, m2, anchor=None):
    anchor = anchor or {}
    out = []
    for perm in itertools.permutations(range(m2.size)):
        if len(perm) != m1.size or any(perm[x] != y for x, y in anchor.items()):
            continue
        f = PartialMap(dict(enumerate(perm)))
        if is_isomorphism(m1, m2, f):
            out.append(f)
    return out


def test_cycle_anchored(cycle4):
    isos = find_isomorphisms(cycle4, cycle4, {0: 0})
    assert len(isos) == 2
    assert set(isos) == set(brute(cycle4, cycle4, {0: 0}))


def test_path_vs_triangle(path3):
    assert find_isomorphisms(path3, make_graph(3, [(0, 1), (1, 2), (0, 2)])) == []


def test_full_anchor_is_identity(cycle4):
    assert find_isomorphisms(cycle4, cycle4, {x: x for x in range(4)}) == [PartialMap.identity(range(4))]


def test_limit_and_determinism(cycle4):
    assert len(find_isomorphisms(cycle4, cycle4, limit=3)) == 3
    assert find_isomorphisms(cycle4, cycle4) == find_isomorphisms(cycle4, cycle4)


@given(graphs)
@settings(max_examples=80, deadline=None)
def test_matches_brute_force(g):
    n, edges = g
    m = make_graph(n, edges)
    assert set(automorphisms(m)) == set(brute(m, m))


@given(graphs, st.randoms(use_true_random=False))
@settings(max_examples=80, deadline=None)
def test_canonical_form_invariant(g, rnd):
    n, edges = g
    m = make_graph(n, edges)
    perm = list(range(n))
    rnd.shuffle(perm)
    assert canonical_form(m).key == canonical_form(m.relabel(perm)).key


def test_canonical_form_separates():
    assert canonical_form(make_unary([1, 1])).key != canonical_form(make_unary([1, 0])).key


def test_automorphisms_form_group(cycle4):
    group = set(automorphisms(cycle4))
    assert len(group) == 8
    for f, g in itertools.product(group, repeat=2):
        assert f.compose(g) in group
