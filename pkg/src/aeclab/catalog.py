"""Built-in finite-scale classes and negative controls."""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterator

import numpy as np

from . import kernels
from .aec import AecClass
from .iso import canonical_form
from .kernels import elems_of, mask_of
from .structures import (
    GRAPH,
    UNARY_FUNCTION,
    FiniteStructure,
    PartialMap,
    Vocabulary,
    enumerate_all_structures,
    is_substructure,
    make_equivalence,
    make_graph,
    make_unary,
)

EQUIV = Vocabulary(relations=(("E", 2),))


@dataclass(eq=False)
class CatalogEntry:
    klass: AecClass
    generator: Callable[[int, int], FiniteStructure]
    members: Callable[[int], Iterator[FiniteStructure]]
    iso_members: Callable[[int], list[FiniteStructure]]
    exhaustive_bound: int
    expected_eta: int | None = None
    provenance: str = ""
    must_fail: tuple[str, ...] = ()
    witness: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        return self.klass.name

    @property
    def is_control(self) -> bool:
        return bool(self.must_fail)


# ---------------------------------------------------------------- helpers

def _adjacency(n: FiniteStructure, names=("E",)) -> np.ndarray:
    adj = np.zeros((n.size, n.size), dtype=np.uint8)
    for name in names:
        for t in n.rel(name):
            adj[t[0], t[1]] = 1
            adj[t[1], t[0]] = 1
    return adj


def _component_closure(names):
    def closure(n: FiniteStructure, a: frozenset) -> frozenset:
        adj = n.__dict__.get("_adj")
        if adj is None:
            adj = n.__dict__["_adj"] = _adjacency(n, names)
        return elems_of(kernels.component_closure(mask_of(a), adj))
    return closure


def _function_closure(n: FiniteStructure, a: frozenset) -> frozenset:
    e = n.encoded
    return elems_of(kernels.function_closure(mask_of(a), n.size, e.fun_arity, e.fun_off, e.fun_data))


def set_partitions(elems: list, max_block: int | None = None, exact: int | None = None) -> Iterator[list[list]]:
    """All set partitions of ``elems`` with bounded (or exact) block size."""
    if not elems:
        yield []
        return
    first, rest = elems[0], elems[1:]
    lo = (exact - 1) if exact else 0
    hi = (exact - 1) if exact else ((max_block - 1) if max_block else len(rest))
    for r in range(lo, min(hi, len(rest)) + 1):
        for mates in itertools.combinations(rest, r):
            remaining = [x for x in rest if x not in mates]
            for tail in set_partitions(remaining, max_block, exact):
                yield [[first, *mates]] + tail


def _dedup(structs) -> list[FiniteStructure]:
    seen, out = set(), []
    for s in structs:
        key = canonical_form(s).key
        if key not in seen:
            seen.add(key)
            out.append(s)
    return out


# ---------------------------------------------------------------- graphs

def is_simple_graph(g: FiniteStructure) -> bool:
    edges = g._rel_sets[0]
    return all(a != b and (b, a) in edges for a, b in edges)


def all_graphs(n: int) -> Iterator[FiniteStructure]:
    pairs = list(itertools.combinations(range(n), 2))
    for mask in range(1 << len(pairs)):
        yield make_graph(n, [p for i, p in enumerate(pairs) if mask >> i & 1])


@lru_cache(maxsize=None)
def graph_reps(n: int) -> tuple[FiniteStructure, ...]:
    """Graphs on ``n`` vertices up to isomorphism, by vertex augmentation."""
    if n == 0:
        return (make_graph(0, []),)
    cands = []
    for g in graph_reps(n - 1):
        old = [tuple(e) for e in g.rel("E") if e[0] < e[1]]
        for mask in range(1 << (n - 1)):
            cands.append(make_graph(n, old + [(x, n - 1) for x in range(n - 1) if mask >> x & 1]))
    return tuple(_dedup(cands))


def _component_sub(m: FiniteStructure, n: FiniteStructure, f: PartialMap) -> bool:
    if not is_substructure(m, n, f):
        return False
    image = f.image
    return all(b in image for a, b in n.rel("E") if a in image)


def component_graphs() -> CatalogEntry:
    k = AecClass(
        "CG", GRAPH, is_simple_graph, _component_sub, _component_closure(("E",)),
        docs="Finite graphs; M is strong in N when it is an induced subgraph that is a union "
             "of connected components of N. Closure is the union of the components meeting A.",
    )

    def gen(size, seed):
        rng = random.Random(seed)
        return make_graph(size, [p for p in itertools.combinations(range(size), 2) if rng.random() < 0.4])

    return CatalogEntry(
        k, gen,
        members=lambda max_size: (g for n in range(max_size + 1) for g in all_graphs(n)),
        iso_members=lambda max_size: [g for n in range(max_size + 1) for g in graph_reps(n)],
        exhaustive_bound=5,
        provenance="locally finite graphs ordered by 'components do not grow'",
    )


# ---------------------------------------------------------------- unary functions

def forward_orbit_sizes(u: FiniteStructure) -> list[int]:
    s = u.funs[0]
    out = []
    for x in range(u.size):
        seen = {x}
        y = s[x]
        while y not in seen:
            seen.add(y)
            y = s[y]
        out.append(len(seen))
    return out


def _permutation_tables(n: int) -> Iterator[list[int]]:
    """One fixed-point-free permutation per cycle type."""
    def parts(rem, mx):
        if rem == 0:
            yield []
            return
        for p in range(min(rem, mx), 1, -1):
            for tail in parts(rem - p, p):
                yield [p] + tail
    for cycle_type in parts(n, n):
        table, start = [0] * n, 0
        for length in cycle_type:
            for i in range(length):
                table[start + i] = start + (i + 1) % length
            start += length
        yield table


@lru_cache(maxsize=None)
def unary_reps(n: int) -> tuple[FiniteStructure, ...]:
    """Unary-function structures on ``n`` points up to isomorphism.

    Any such structure either has a point with no preimage besides itself,
    whose removal leaves a substructure on ``n - 1`` points, or is a
    fixed-point-free permutation.
    """
    if n == 0:
        return (make_unary([]),)
    cands = []
    for u in unary_reps(n - 1):
        old = list(u.funs[0])
        for target in range(n):
            cands.append(make_unary(old + [target]))
    cands += [make_unary(t) for t in _permutation_tables(n)]
    return tuple(_dedup(cands))


def _substructure(m, n, f):
    return is_substructure(m, n, f)


def unary_successor() -> CatalogEntry:
    k = AecClass(
        "US1", UNARY_FUNCTION, lambda m: m.vocab == UNARY_FUNCTION, _substructure, _function_closure,
        docs="All structures with one unary function, ordered by substructure (a universal class). "
             "Closure is the forward orbit closure under s.",
    )

    def gen(size, seed):
        rng = random.Random(seed)
        return make_unary([rng.randrange(size) for _ in range(size)])

    return CatalogEntry(
        k, gen,
        members=lambda max_size: enumerate_all_structures(UNARY_FUNCTION, max_size),
        iso_members=lambda max_size: [u for n in range(max_size + 1) for u in unary_reps(n)],
        exhaustive_bound=5,
        expected_eta=2,
        provenance="universal classes are 2-multiuniversal",
    )


def locally_finite(bound: int = 3) -> CatalogEntry:
    def member(m):
        return m.vocab == UNARY_FUNCTION and all(o <= bound for o in forward_orbit_sizes(m))

    k = AecClass(
        f"LF{bound}", UNARY_FUNCTION, member, _substructure, _function_closure,
        docs=f"Unary-function structures in which every forward orbit has at most {bound} points, "
             "ordered by substructure. The closure of a finite set is finite and bounded.",
    )

    def gen(size, seed):
        rng = random.Random(seed)
        if size == 0:
            return make_unary([])
        # levels: roots are fixed points, level d maps to level d-1
        order = list(range(size))
        rng.shuffle(order)
        level = {order[0]: 0}
        table = [0] * size
        table[order[0]] = order[0]
        for x in order[1:]:
            parent = rng.choice([y for y in level if level[y] < bound - 1] + [x])
            level[x] = 0 if parent == x else level[parent] + 1
            table[x] = parent
        return make_unary(table)

    return CatalogEntry(
        k, gen,
        members=lambda max_size: enumerate_all_structures(UNARY_FUNCTION, max_size, member),
        iso_members=lambda max_size: [u for n in range(max_size + 1) for u in unary_reps(n) if member(u)],
        exhaustive_bound=5,
        expected_eta=2,
        provenance="classes whose closure operator is locally finite",
    )


# ---------------------------------------------------------------- equivalence relations

def blocks_of(m: FiniteStructure) -> list[frozenset] | None:
    """Blocks of an equivalence relation, or ``None`` if ``E`` is not one."""
    e = m._rel_sets[0]
    blocks: dict[int, set] = {}
    for x in range(m.size):
        if (x, x) not in e:
            return None
        blocks.setdefault(min(y for y in range(m.size) if (x, y) in e), set()).add(x)
    for a, b in e:
        if (b, a) not in e:
            return None
    out = [frozenset(b) for b in blocks.values()]
    for blk in out:
        if any((a, b) not in e for a in blk for b in blk):
            return None
    if sum(len(b) ** 2 for b in out) != len(e):
        return None
    return out


def _blocks_closed(m, n, f):
    if not is_substructure(m, n, f):
        return False
    image = f.image
    return all(b in image for a, b in n.rel("E") if a in image)


def fixed_blocks(k_size: int = 3) -> CatalogEntry:
    def member(m):
        blocks = blocks_of(m)
        return blocks is not None and all(len(b) == k_size for b in blocks)

    k = AecClass(
        f"EQ{k_size}", EQUIV, member, _blocks_closed, _component_closure(("E",)),
        docs=f"Equivalence relations all of whose classes have exactly {k_size} elements, ordered "
             "so that classes do not grow. A finite stand-in for the toy quasiminimal class; the "
             "infinite-class version is not represented.",
    )

    def gen(size, seed):
        if size % k_size:
            raise ValueError(f"EQ{k_size} members have size divisible by {k_size}")
        rng = random.Random(seed)
        order = list(range(size))
        rng.shuffle(order)
        return make_equivalence(size, [order[i:i + k_size] for i in range(0, size, k_size)])

    def members(max_size):
        for n in range(0, max_size + 1, k_size):
            for part in set_partitions(list(range(n)), exact=k_size):
                yield make_equivalence(n, part)

    return CatalogEntry(
        k, gen, members,
        iso_members=lambda max_size: [gen(n, 0) for n in range(0, max_size + 1, k_size)],
        exhaustive_bound=6,
        expected_eta=k_size,
        provenance="finite analog of equivalence classes that do not grow",
    )


# ---------------------------------------------------------------- partition codes

def partition_code_vocab(m_max: int) -> Vocabulary:
    return Vocabulary(relations=(("P", 1), ("Q", 1), ("E", 2)) + tuple((f"R{m}", 2) for m in range(2, m_max + 1)))


def partition_code_member(m: FiniteStructure, m_max: int) -> bool:
    if m.vocab != partition_code_vocab(m_max):
        return False
    p = {t[0] for t in m.rel("P")}
    q = {t[0] for t in m.rel("Q")}
    if p | q != set(m.universe) or p & q:
        return False
    owner: dict[int, int] = {}
    count = {s: 0 for s in q}
    for x, s in m.rel("E"):
        if x not in p or s not in q or x in owner:
            return False
        owner[x] = s
        count[s] += 1
    if set(owner) != p or any(not 1 <= c <= m_max for c in count.values()):
        return False
    singles = {s for s, c in count.items() if c == 1}
    for mm in range(2, m_max + 1):
        graph = m.rel(f"R{mm}")
        dom = [a for a, _ in graph]
        rng = [b for _, b in graph]
        targets = {s for s, c in count.items() if c == mm}
        if len(set(dom)) != len(dom) or len(set(rng)) != len(rng):
            return False
        if set(dom) != singles or set(rng) != targets:
            return False
    return True


def partition_code_unit(m_max: int) -> int:
    return 2 + sum(mm + 1 for mm in range(2, m_max + 1))


def make_partition_code(units: int, m_max: int, perm: list[int] | None = None) -> FiniteStructure:
    """``units`` singletons, each paired by ``R_m`` with one ``m``-set for every ``m``."""
    vocab = partition_code_vocab(m_max)
    rels: dict[str, set] = {name: set() for name, _ in vocab.relations}
    nxt = 0

    def new():
        nonlocal nxt
        nxt += 1
        return nxt - 1

    for _ in range(units):
        sets = {}
        for mm in range(1, m_max + 1):
            s = new()
            rels["Q"].add((s,))
            for _ in range(mm):
                x = new()
                rels["P"].add((x,))
                rels["E"].add((x, s))
            sets[mm] = s
        for mm in range(2, m_max + 1):
            rels[f"R{mm}"].add((sets[1], sets[mm]))
    size = nxt
    s = FiniteStructure.build(vocab, size, rels)
    return s.relabel(perm) if perm is not None else s


def _sets_do_not_grow(m, n, f):
    if not is_substructure(m, n, f):
        return False
    image = f.image
    return all((x in image) == (s in image) for x, s in n.rel("E"))


def partition_codes(m_max: int = 2) -> CatalogEntry:
    vocab = partition_code_vocab(m_max)
    unit = partition_code_unit(m_max)
    rel_names = ("E",) + tuple(f"R{mm}" for mm in range(2, m_max + 1))
    k = AecClass(
        f"PC{m_max}", vocab, lambda m: partition_code_member(m, m_max), _sets_do_not_grow,
        _component_closure(rel_names),
        docs=f"Partitions of P into coded finite sets with bijections R_m (2 <= m <= {m_max}) from the "
             f"singletons onto the m-sets, ordered so that sets do not grow. Truncated at m <= {m_max}: "
             "exact models with every m are infinite.",
    )

    def gen(size, seed):
        if size % unit:
            raise ValueError(f"PC{m_max} members have size divisible by {unit}")
        rng = random.Random(seed)
        perm = list(range(size))
        rng.shuffle(perm)
        return make_partition_code(size // unit, m_max, perm)

    def members(max_size):
        for n in range(0, max_size + 1, unit):
            base = make_partition_code(n // unit, m_max)
            seen = set()
            for perm in itertools.permutations(range(n)):
                s = base.relabel(list(perm))
                if s not in seen:
                    seen.add(s)
                    yield s

    return CatalogEntry(
        k, gen, members,
        iso_members=lambda max_size: [make_partition_code(n // unit, m_max) for n in range(0, max_size + 1, unit)],
        exhaustive_bound=unit,
        expected_eta=None,
        provenance="partition codes with bijections between set sizes, truncated",
    )


# ---------------------------------------------------------------- negative controls

def no_intersections() -> CatalogEntry:
    def member(g):
        return is_simple_graph(g) and len(g.rel("E")) > 0

    k = AecClass(
        "NOI", GRAPH, member, _substructure, None,
        docs="Negative control: graphs with at least one edge ordered by induced subgraph. "
             "Intersections of strong substructures can be edgeless, hence non-members.",
    )
    return CatalogEntry(
        k, component_graphs().generator,
        members=lambda max_size: (g for n in range(max_size + 1) for g in all_graphs(n) if member(g)),
        iso_members=lambda max_size: [g for n in range(max_size + 1) for g in graph_reps(n) if member(g)],
        exhaustive_bound=4,
        provenance="control without intersections",
        must_fail=("intersections",),
        witness={"structure": make_graph(3, [(0, 1), (1, 2)]), "subset": (1,)},
    )


def eq_mixed(k_size: int = 2) -> CatalogEntry:
    def member(m):
        blocks = blocks_of(m)
        return blocks is not None and all(len(b) <= k_size for b in blocks)

    def strong(m, n, f):
        if not is_substructure(m, n, f):
            return False
        image = f.image
        return all(any(x in image for x in blk) for blk in blocks_of(n))

    k = AecClass(
        f"EQMIX{k_size}", EQUIV, member, strong, None,
        docs=f"Negative control: equivalence relations with classes of size at most {k_size}; M is "
             "strong in N when it meets every class of N, so classes may grow. Closures are not "
             "preserved by strong embeddings.",
    )

    def gen(size, seed):
        rng = random.Random(seed)
        order = list(range(size))
        rng.shuffle(order)
        blocks, i = [], 0
        while i < size:
            w = rng.randint(1, k_size)
            blocks.append(order[i:i + w])
            i += w
        return make_equivalence(size, blocks)

    def members(max_size):
        for n in range(max_size + 1):
            for part in set_partitions(list(range(n)), max_block=k_size):
                yield make_equivalence(n, part)

    return CatalogEntry(
        k, gen, members,
        iso_members=lambda max_size: _dedup(members(max_size)),
        exhaustive_bound=5,
        provenance="control breaking closure transport",
        must_fail=("transport",),
        witness={
            "small": make_equivalence(1, [[0]]),
            "big": make_equivalence(2, [[0, 1]]),
            "map": PartialMap(((0, 0),)),
            "subset": (),
        },
    )


# ---------------------------------------------------------------- registry

def register_builtin_catalog() -> list[CatalogEntry]:
    return [
        unary_successor(),
        locally_finite(3),
        component_graphs(),
        fixed_blocks(2),
        fixed_blocks(3),
        partition_codes(2),
    ]


def adversarial_variants() -> list[CatalogEntry]:
    return [no_intersections(), eq_mixed(2)]


@lru_cache(maxsize=None)
def full_catalog() -> dict[str, CatalogEntry]:
    # one instance per class so closure and certificate caches are shared
    return {e.name: e for e in register_builtin_catalog() + adversarial_variants()}


def get_entry(name: str) -> CatalogEntry:
    cat = full_catalog()
    if name not in cat:
        raise KeyError(f"unknown class {name!r}; known: {', '.join(sorted(cat))}")
    return cat[name]
