"""Classes of finite structures with a strong-substructure ordering, and their closure operator."""
from __future__ import annotations

import itertools
import random
import threading
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import kernels
from .kernels import elems_of, mask_of
from .structures import FiniteStructure, PartialMap, StructureError, Vocabulary, is_substructure

EXHAUSTIVE_SUBSETS = 7
SAMPLED_SUBSETS = 256


class ClassMembershipError(ValueError):
    pass


class CoherenceError(ValueError):
    pass


StrongSub = Callable[[FiniteStructure, FiniteStructure, PartialMap], bool]
FastClosure = Callable[[FiniteStructure, frozenset], frozenset]


@dataclass(eq=False)
class AecClass:
    """A class ``K`` given by a membership test and a strong-substructure test.

    ``strong_sub(M, N, f)`` receives the inclusion ``f`` of ``M`` into
    ``N``.  The ordering is checked on induced substructures only: the
    closure ranges over subsets of ``N`` whose induced structure qualifies.
    """

    name: str
    vocab: Vocabulary
    member: Callable[[FiniteStructure], bool]
    strong_sub: StrongSub
    fast_closure: FastClosure | None = None
    docs: str = ""
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def is_strong(self, m: FiniteStructure, n: FiniteStructure, f: PartialMap) -> bool:
        return (
            m.vocab == n.vocab == self.vocab
            and is_substructure(m, n, f)
            and self.member(m)
            and self.member(n)
            and self.strong_sub(m, n, f)
        )

    def strong_subset(self, n: FiniteStructure, subset: Iterable[int]) -> bool:
        """Does the induced structure on ``subset`` qualify as strong in ``n``?"""
        ind = n.induced(subset)
        if ind is None:
            return False
        m, incl = ind
        return self.member(m) and self.strong_sub(m, n, incl)

    def closure(self, n: FiniteStructure, a: Iterable[int]) -> frozenset:
        """``cl^N(A)``; uses the class override when present, memoized per structure."""
        a = frozenset(a)
        key = (n, a)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if self.fast_closure is not None:
            result = frozenset(self.fast_closure(n, a))
        else:
            result = generic_closure(self, n, a)
        with self._lock:
            if len(self._cache) > 200_000:
                self._cache.clear()
            self._cache[key] = result
        return result

    def closure_structure(self, n: FiniteStructure, a: Iterable[int]) -> tuple[FiniteStructure, PartialMap]:
        ind = n.induced(self.closure(n, a))
        if ind is None:
            raise StructureError("closure is not closed under the functions")
        return ind


def _check_member(k: AecClass, n: FiniteStructure):
    if n.vocab != k.vocab:
        raise ClassMembershipError(f"structure is not over the vocabulary of {k.name}")
    if not k.member(n):
        raise ClassMembershipError(f"structure is not a member of {k.name}")


def closure_scan(k: AecClass, n: FiniteStructure, a: Iterable[int]) -> tuple[frozenset, bool]:
    """Intersect qualifying supersets of ``A`` in increasing size.

    Returns ``(closure, found)``; ``found`` is False when no qualifying
    superset exists, in which case the full universe is returned.
    """
    a = frozenset(a)
    if not a <= frozenset(n.universe):
        raise ValueError("parameter set is not inside the universe")
    rest = [x for x in n.universe if x not in a]
    inter: frozenset | None = None
    for r in range(len(rest) + 1):
        for extra in itertools.combinations(rest, r):
            s = a.union(extra)
            if k.strong_subset(n, s):
                inter = s if inter is None else inter & s
                if inter == a:
                    return a, True
    if inter is None:
        return frozenset(n.universe), False
    return inter, True


def generic_closure(k: AecClass, n: FiniteStructure, a: Iterable[int]) -> frozenset:
    """``cl^N(A)`` as the intersection of all strong substructures of ``N`` containing ``A``."""
    _check_member(k, n)
    result, _ = closure_scan(k, n, a)
    return result


def strong_masks(k: AecClass, n: FiniteStructure) -> np.ndarray:
    """0/1 array over all ``2**|N|`` subsets flagging the strong ones."""
    size = n.size
    flags = np.zeros(1 << size, dtype=np.uint8)
    for s in range(1 << size):
        if k.strong_subset(n, elems_of(s)):
            flags[s] = 1
    return flags


def all_generic_closures(k: AecClass, n: FiniteStructure) -> np.ndarray:
    """Generic closure of every subset, indexed by bitmask.

    Same intersection as :func:`generic_closure`, computed for all subsets
    at once with a superset transform; ``-1`` marks subsets with no strong
    superset.
    """
    _check_member(k, n)
    return kernels.superset_meet(strong_masks(k, n), n.size)


def subsets_to_audit(n: FiniteStructure, rng: random.Random, bound: int = EXHAUSTIVE_SUBSETS,
                     samples: int = SAMPLED_SUBSETS) -> list[frozenset]:
    if n.size <= bound:
        return [elems_of(s) for s in range(1 << n.size)]
    out = []
    for _ in range(samples):
        out.append(frozenset(x for x in n.universe if rng.random() < 0.5))
    return out


@dataclass(frozen=True)
class AuditRecord:
    klass: str
    structure_id: str
    subset: tuple[int, ...]
    check: str
    verdict: str
    claim: str = ""
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "class": self.klass,
            "structure_id": self.structure_id,
            "subset": list(self.subset),
            "check": self.check,
            "verdict": self.verdict,
            "claim": self.claim,
            "detail": self.detail,
        }


@dataclass
class AuditReport:
    name: str
    checked: int = 0
    records: list[AuditRecord] = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    @property
    def violations(self) -> list[AuditRecord]:
        return [r for r in self.records if r.verdict == "fail"]

    @property
    def passed(self) -> bool:
        return not self.violations


def _ids(corpus, ids):
    corpus = list(corpus)
    if ids is None:
        ids = [f"#{i}" for i in range(len(corpus))]
    return corpus, list(ids)


def audit_intersections(
    k: AecClass,
    corpus: Iterable[FiniteStructure],
    ids: Sequence[str] | None = None,
    *,
    seed: int = 0,
    bound: int = EXHAUSTIVE_SUBSETS,
    samples: int = SAMPLED_SUBSETS,
) -> AuditReport:
    """Check that ``cl^N(A)`` is itself strong in ``N`` for every audited ``(N, A)``."""
    corpus, ids = _ids(corpus, ids)
    report = AuditReport("intersections")
    rng = random.Random(seed)
    for n, sid in zip(corpus, ids):
        if not k.member(n):
            report.records.append(AuditRecord(k.name, sid, (), "member", "fail", "corpus membership"))
            continue
        if n.size <= bound:
            flags = strong_masks(k, n)
            closures = kernels.superset_meet(flags, n.size)
            for s in range(1 << n.size):
                report.checked += 1
                c = int(closures[s])
                if c < 0 or not flags[c]:
                    report.records.append(AuditRecord(
                        k.name, sid, tuple(sorted(elems_of(s))), "closure-is-strong", "fail",
                        "intersection of strong substructures is strong",
                        f"closure={sorted(elems_of(c)) if c >= 0 else None}",
                    ))
        else:
            for a in subsets_to_audit(n, rng, bound, samples):
                report.checked += 1
                c, found = closure_scan(k, n, a)
                if not found or not k.strong_subset(n, c):
                    report.records.append(AuditRecord(
                        k.name, sid, tuple(sorted(a)), "closure-is-strong", "fail",
                        "intersection of strong substructures is strong", f"closure={sorted(c)}",
                    ))
    return report


def finite_character_witness(k: AecClass, n: FiniteStructure, a: Iterable[int], b) -> frozenset:
    """Smallest-then-lexicographically-first ``A0 ⊆ A`` with ``b ∈ cl(A0)``.

    ``b`` may be a single element or an iterable of elements, all of which
    must land in the closure.
    """
    a = sorted(set(a))
    targets = {b} if isinstance(b, (int, np.integer)) else set(b)
    if not targets <= k.closure(n, a):
        raise ValueError(f"{sorted(targets)} is not inside the closure of {a}")
    for r in range(len(a) + 1):
        for sub in itertools.combinations(a, r):
            if targets <= k.closure(n, sub):
                return frozenset(sub)
    raise AssertionError("unreachable: A itself works")


def transport_closure_check(k: AecClass, m: FiniteStructure, n: FiniteStructure, f: PartialMap,
                            a: Iterable[int]) -> bool:
    """Does ``f`` carry ``cl^M(A)`` onto ``cl^N(f[A])``?"""
    a = frozenset(a)
    return f.image_of(k.closure(m, a)) == k.closure(n, f.image_of(a))


def audit_transport(
    k: AecClass,
    corpus: Iterable[FiniteStructure],
    ids: Sequence[str] | None = None,
) -> AuditReport:
    """Transport check over every strong induced substructure ``M ≤ N`` and every ``A ⊆ M``."""
    corpus, ids = _ids(corpus, ids)
    report = AuditReport("transport")
    for n, sid in zip(corpus, ids):
        if not k.member(n):
            continue
        for s in range(1 << n.size):
            sub = elems_of(s)
            ind = n.induced(sub)
            if ind is None:
                continue
            m, incl = ind
            if not (k.member(m) and k.strong_sub(m, n, incl)):
                continue
            for t in range(1 << m.size):
                a = elems_of(t)
                report.checked += 1
                if not transport_closure_check(k, m, n, incl, a):
                    report.records.append(AuditRecord(
                        k.name, sid, tuple(sorted(incl.image_of(a))), "closure-transport", "fail",
                        "strong embeddings carry closures to closures",
                        f"embedded={sorted(sub)}",
                    ))
    return report


def audit_order_axioms(k: AecClass, corpus: Iterable[FiniteStructure], ids=None) -> AuditReport:
    """Reflexivity of ``strong_sub`` on members and transitivity along induced chains."""
    corpus, ids = _ids(corpus, ids)
    report = AuditReport("order-axioms")
    for n, sid in zip(corpus, ids):
        if not k.member(n):
            continue
        report.checked += 1
        if not k.strong_sub(n, n, PartialMap.identity(n.universe)):
            report.records.append(AuditRecord(k.name, sid, tuple(n.universe), "reflexive", "fail"))
        strong = [s for s in range(1 << n.size) if k.strong_subset(n, elems_of(s))]
        strong_set = set(strong)
        for mid in strong:
            mid_struct, mid_incl = n.induced(elems_of(mid))
            for low in strong:
                if low & mid != low or low == mid:
                    continue
                # low ≤ mid inside mid's own labels
                low_in_mid = frozenset(i for i, x in mid_incl.pairs if low >> x & 1)
                ind = mid_struct.induced(low_in_mid)
                report.checked += 1
                if ind is not None and k.member(ind[0]) and k.strong_sub(ind[0], mid_struct, ind[1]):
                    if low not in strong_set:
                        report.records.append(AuditRecord(
                            k.name, sid, tuple(sorted(elems_of(low))), "transitive", "fail",
                            detail=f"via {sorted(elems_of(mid))}",
                        ))
    return report


@dataclass
class EmbeddingSystem:
    """A finite diagram of structures and maps.

    For a chain, ``maps[(i, j)]`` holds ``f_{i,j}`` for every ``i <= j``;
    general diagrams list only their generating arrows.  ``tuples`` are the
    optional marked sequences ``b_i``.
    """

    structures: list[FiniteStructure]
    maps: dict[tuple[int, int], PartialMap | list[PartialMap]]
    tuples: list[tuple[int, ...]] = field(default_factory=list)

    def arrows(self) -> list[tuple[int, int, PartialMap]]:
        out = []
        for (i, j), fs in sorted(self.maps.items()):
            for f in fs if isinstance(fs, list) else [fs]:
                out.append((i, j, f))
        return out

    def check_coherence(self, k: AecClass | None = None) -> None:
        """Raise :class:`CoherenceError` on a missing identity, a non-commuting triangle or a non-strong map."""
        for i, j, f in self.arrows():
            if f.domain != frozenset(self.structures[i].universe):
                raise CoherenceError(f"map {i}->{j} is not total")
            if i == j and f != PartialMap.identity(self.structures[i].universe):
                raise CoherenceError(f"map {i}->{i} is not the identity")
            if k is not None and not _strong_embedding(k, self.structures[i], self.structures[j], f):
                raise CoherenceError(f"map {i}->{j} is not a strong embedding")
        single = {key: v for key, v in self.maps.items() if not isinstance(v, list)}
        for (i, j), fij in single.items():
            for (j2, l), fjl in single.items():
                if j2 != j or i == j or j == l:
                    continue
                fil = single.get((i, l))
                if fil is not None and fjl.compose(fij) != fil:
                    raise CoherenceError(f"triangle {i}->{j}->{l} does not commute")


def _strong_embedding(k: AecClass, m: FiniteStructure, n: FiniteStructure, f: PartialMap) -> bool:
    """Strong after transporting ``M`` onto its image in ``N``."""
    if not is_substructure(m, n, f):
        return False
    image, incl = n.induced(f.image)
    return k.member(m) and k.member(image) and k.strong_sub(image, n, incl)


def colimit(system: EmbeddingSystem, k: AecClass | None = None) -> tuple[FiniteStructure, list[PartialMap]]:
    """Colimit as a quotient of the disjoint union.

    Elements are identified along every arrow.  Classes are labeled in the
    order of their representative in the latest structure, so a chain
    collapses onto its top with the top cocone map the identity.
    """
    system.check_coherence(k)
    structs = system.structures
    if not structs:
        raise CoherenceError("empty diagram")
    vocab = structs[0].vocab
    nodes = [(i, x) for i, s in enumerate(structs) for x in s.universe]
    parent = {v: v for v in nodes}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for i, j, f in system.arrows():
        for x, y in f.pairs:
            ra, rb = find((i, x)), find((j, y))
            if ra != rb:
                parent[ra] = rb
    classes: dict = {}
    for v in nodes:
        classes.setdefault(find(v), []).append(v)
    last = len(structs) - 1
    ordered = sorted(classes.values(), key=lambda vs: min((last - i, x) for i, x in vs))
    label = {}
    for c, vs in enumerate(ordered):
        for v in vs:
            label[v] = c
    size = len(ordered)
    rels = []
    for r in range(len(vocab.relations)):
        rels.append({tuple(label[(i, x)] for x in t) for i, s in enumerate(structs) for t in s.rels[r]})
    funs = []
    for fi, (name, arity) in enumerate(vocab.functions):
        table: dict = {}
        for i, s in enumerate(structs):
            for args, v in s.fun_rows(fi):
                key = tuple(label[(i, x)] for x in args)
                val = label[(i, v)]
                if table.setdefault(key, val) != val:
                    raise CoherenceError(f"function {name} is not well defined on the colimit")
        if len(table) != size**arity:
            raise CoherenceError(f"function {name} is not total on the colimit")
        funs.append(table)
    top = FiniteStructure.build(
        vocab, size, {n: r for (n, _), r in zip(vocab.relations, rels)},
        {n: t for (n, _), t in zip(vocab.functions, funs)},
    )
    cocone = [PartialMap(tuple((x, label[(i, x)]) for x in s.universe)) if _injective(s, i, label) else None
              for i, s in enumerate(structs)]
    if any(c is None for c in cocone):
        # non-injective cocones arise from coequalizing distinct parallel arrows
        raise CoherenceError("diagram identifies distinct elements of one structure")
    return top, cocone


def _injective(s: FiniteStructure, i: int, label: dict) -> bool:
    return len({label[(i, x)] for x in s.universe}) == s.size


def audit_closure_oracle(k: AecClass, corpus: Iterable[FiniteStructure], ids=None) -> AuditReport:
    """``fast_closure`` against :func:`generic_closure` on every subset of every structure."""
    corpus, ids = _ids(corpus, ids)
    report = AuditReport("closure-oracle")
    if k.fast_closure is None:
        return report
    for n, sid in zip(corpus, ids):
        generic = all_generic_closures(k, n)
        for s in range(1 << n.size):
            a = elems_of(s)
            report.checked += 1
            fast = frozenset(k.fast_closure(n, a))
            g = int(generic[s])
            slow = elems_of(g) if g >= 0 else None
            if fast != slow:
                report.records.append(AuditRecord(
                    k.name, sid, tuple(sorted(a)), "fast-closure", "fail",
                    "override agrees with the intersection of strong supersets",
                    f"fast={sorted(fast)} generic={None if slow is None else sorted(slow)}",
                ))
    return report
