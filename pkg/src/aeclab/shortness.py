"""Gluing finite partial mappings into an isomorphism of closures.

Given tuples ``a1`` in ``N1`` and ``a2`` in ``N2``, the engine searches for
an isomorphism ``cl(a1) -> cl(a2)`` sending ``a1`` to ``a2`` by growing a
chain ``ran(a1) = B_0 ⊆ B_1 ⊆ ...`` of subsets of ``M1 = cl(a1)`` and, at
each stage, choosing a map in ``F_B``: the injections on ``B`` that agree
with ``a1 -> a2`` and preserve the type over the empty set of an
enumeration of ``B``.  Algebraicity keeps every ``F_B`` finite, which is
what makes the depth-first search terminate with either a gluing or a
concrete failing restriction.
"""
from __future__ import annotations

import itertools
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .aec import AecClass, AuditRecord, AuditReport
from .galois import TypeLocator, canonical_certificate, type_equal
from .iso import automorphisms, find_isomorphisms
from .structures import FiniteStructure, PartialMap, is_isomorphism


class NotInP(ValueError):
    """A proposed domain ``B`` is not generated by its intersection with ``ran(a1)``."""


class GlueBudgetExceeded(RuntimeError):
    pass


class GluingProblem:
    def __init__(self, k: AecClass, n1: FiniteStructure, n2: FiniteStructure,
                 a1: Sequence[int], a2: Sequence[int]):
        if len(a1) != len(a2):
            raise ValueError("tuples have different lengths")
        self.k, self.n1, self.n2 = k, n1, n2
        self.a1, self.a2 = tuple(a1), tuple(a2)
        self.A1 = frozenset(self.a1)
        self.M1 = k.closure(n1, self.A1)
        self.M2 = k.closure(n2, frozenset(self.a2))
        self.m1, self.incl1 = n1.induced(self.M1)
        self.m2, self.incl2 = n2.induced(self.M2)
        self.back1, self.back2 = self.incl1.inverse(), self.incl2.inverse()
        f0: dict[int, int] = {}
        ok = True
        for x, y in zip(self.a1, self.a2):
            if f0.setdefault(x, y) != y:
                ok = False
        if len(set(f0.values())) != len(f0):
            ok = False
        self.f0: PartialMap | None = PartialMap(tuple(f0.items())) if ok else None
        self._memo: dict = {}
        self.tests = 0

    def __repr__(self):
        return f"GluingProblem({self.k.name}, {self.a1} -> {self.a2})"

    def is_mapping(self, f: PartialMap) -> bool:
        """``gtp(b/∅; M1) = gtp(f(b)/∅; M2)`` for the sorted enumeration ``b`` of ``dom f``."""
        dom = sorted(f.domain)
        key = tuple((x, f(x)) for x in dom)
        hit = self._memo.get(key)
        if hit is None:
            self.tests += 1
            b1 = tuple(self.back1(x) for x in dom)
            b2 = tuple(self.back2(f(x)) for x in dom)
            hit = self._memo[key] = type_equal(
                self.k, TypeLocator(self.m1, frozenset(), b1), TypeLocator(self.m2, frozenset(), b2))
        return hit

    def in_p(self, b: Iterable[int]) -> bool:
        b = frozenset(b)
        if not b <= self.M1:
            return False
        base = b & self.A1
        # closure inside M1, in N1's labels
        local = self.k.closure(self.m1, {self.back1(x) for x in base})
        return {self.back1(x) for x in b} <= local

    def stage_order(self) -> list[int]:
        """Elements of ``M1 \\ ran(a1)``, breadth first from ``ran(a1)`` in the Gaifman graph, ties by index."""
        nbrs = self.m1.gaifman
        seen = {self.back1(x) for x in self.A1}
        queue = deque(sorted(seen))
        order = []
        pending = sorted(set(self.m1.universe) - seen)
        while queue or pending:
            if not queue:
                start = next(x for x in pending if x not in seen)
                seen.add(start)
                order.append(start)
                queue.append(start)
            x = queue.popleft()
            for y in sorted(nbrs[x]):
                if y not in seen:
                    seen.add(y)
                    order.append(y)
                    queue.append(y)
            pending = [p for p in pending if p not in seen]
        return [self.incl1(x) for x in order]

    def chain(self) -> list[frozenset]:
        order = self.stage_order()
        return [self.A1 | frozenset(order[:i]) for i in range(len(order) + 1)]


@dataclass(frozen=True)
class MappingFamily:
    domain: frozenset
    maps: tuple[PartialMap, ...]

    def __len__(self):
        return len(self.maps)


def check_finite_restrictions(problem: GluingProblem, max_window: int | None = None) -> tuple[int, ...] | None:
    """First ``I`` (by size, then lexicographically) with ``gtp(a1|I) != gtp(a2|I)``, or ``None``."""
    alpha = len(problem.a1)
    max_window = alpha if max_window is None else min(max_window, alpha)
    k = problem.k
    for r in range(max_window + 1):
        for idx in itertools.combinations(range(alpha), r):
            t1 = TypeLocator(problem.n1, frozenset(), tuple(problem.a1[i] for i in idx))
            t2 = TypeLocator(problem.n2, frozenset(), tuple(problem.a2[i] for i in idx))
            if not type_equal(k, t1, t2):
                return idx
    return None


def mapping_family(problem: GluingProblem, b: Iterable[int]) -> MappingFamily:
    """``F_B``: all injections ``B -> M2`` agreeing with ``a1 -> a2`` that preserve the type of ``B``."""
    b = frozenset(b)
    if not problem.in_p(b):
        raise NotInP(f"{sorted(b)} is not inside the closure of its intersection with the tuple")
    if problem.f0 is None:
        return MappingFamily(b, ())
    fixed = problem.f0.restrict(b & problem.A1)
    free = sorted(b - problem.A1)
    targets = sorted(problem.M2 - fixed.image)
    maps = []
    for img in itertools.permutations(targets, len(free)):
        f = PartialMap(fixed.pairs + tuple(zip(free, img)))
        if problem.is_mapping(f):
            maps.append(f)
    return MappingFamily(b, tuple(maps))


@dataclass
class GlueFailure:
    stage: int
    restriction: tuple[int, ...] | None

    @property
    def contradicts_shortness(self) -> bool:
        # every finite restriction agreed yet no gluing exists
        return self.restriction is None


@dataclass
class GlueResult:
    maps: list[PartialMap]
    profile: list[int]
    stages: list[frozenset]
    failure: GlueFailure | None = None
    tests: int = 0

    @property
    def success(self) -> bool:
        return bool(self.maps)

    @property
    def isomorphism(self) -> PartialMap | None:
        return self.maps[0] if self.maps else None


def glue(problem: GluingProblem, *, all_solutions: bool = False, budget: int | None = None) -> GlueResult:
    """Depth-first staged search for an isomorphism ``M1 -> M2`` sending ``a1`` to ``a2``.

    ``profile[k]`` counts the maps accepted at stage ``k`` over the whole
    search.  ``budget`` bounds the number of candidate maps examined.
    """
    stages = problem.chain()
    profile = [0] * len(stages)
    found: list[PartialMap] = []
    result = GlueResult(found, profile, stages)
    if problem.f0 is None or not problem.is_mapping(problem.f0):
        result.failure = GlueFailure(0, check_finite_restrictions(problem))
        result.tests = problem.tests
        return result
    profile[0] = 1
    order = [min(b - a) for a, b in zip(stages, stages[1:])]
    targets = sorted(problem.M2)
    examined = 0
    deepest = 0

    def extend(stage: int, current: PartialMap) -> bool:
        nonlocal examined, deepest
        deepest = max(deepest, stage)
        if stage == len(stages) - 1:
            _verify(problem, current)
            found.append(current)
            return not all_solutions
        c = order[stage]
        used = current.image
        for y in targets:
            if y in used:
                continue
            examined += 1
            if budget is not None and examined > budget:
                raise GlueBudgetExceeded(
                    f"examined more than {budget} candidate maps at stage {stage + 1} "
                    f"(|B|={len(stages[stage + 1])}); the class may not be multiuniversal")
            f = PartialMap(current.pairs + ((c, y),))
            if problem.is_mapping(f):
                profile[stage + 1] += 1
                if extend(stage + 1, f):
                    return True
        return False

    extend(0, problem.f0)
    if not found:
        result.failure = GlueFailure(deepest, check_finite_restrictions(problem))
    result.tests = problem.tests
    return result


def _verify(problem: GluingProblem, f: PartialMap) -> None:
    local = PartialMap(tuple((problem.back1(x), problem.back2(y)) for x, y in f.pairs))
    if not is_isomorphism(problem.m1, problem.m2, local):
        raise AssertionError(f"glued map {f} is not an isomorphism")
    if any(f(x) != y for x, y in zip(problem.a1, problem.a2)):
        raise AssertionError("glued map does not send a1 to a2")


@dataclass
class StreamStats:
    depth: int
    family_sizes: list[int]
    survivors: list[int]
    levels: list[list[PartialMap]] = field(repr=False, default_factory=list)

    @property
    def glued(self) -> bool:
        return all(s > 0 for s in self.survivors)


def glue_staged_stream(problem: GluingProblem, depth: int,
                       growth: Sequence[Iterable[int]] | None = None) -> StreamStats:
    """Survivor counts per level of the chain ``B_0 ⊆ ... ⊆ B_depth``.

    A map in ``F_{B_k}`` survives when it extends to some map in
    ``F_{B_depth}``; counts are non-increasing in ``depth`` level by level.
    """
    chain = [frozenset(b) for b in (growth if growth is not None else problem.chain())]
    if depth >= len(chain):
        raise ValueError(f"depth {depth} exceeds the growth sequence ({len(chain)} levels)")
    for i, b in enumerate(chain[: depth + 1]):
        if not problem.in_p(b):
            raise NotInP(f"level {i}: {sorted(b)} is not in P")
        if i and not chain[i - 1] <= b:
            raise ValueError(f"level {i} does not extend level {i - 1}")
    levels = [list(mapping_family(problem, chain[0]).maps)]
    for i in range(1, depth + 1):
        new = sorted(chain[i] - chain[i - 1])
        nxt = []
        for f in levels[-1]:
            targets = sorted(problem.M2 - f.image)
            for img in itertools.permutations(targets, len(new)):
                g = PartialMap(f.pairs + tuple(zip(new, img)))
                if problem.is_mapping(g):
                    nxt.append(g)
        levels.append(nxt)
    sizes = [len(level) for level in levels]
    alive = [set(levels[depth])]
    for i in range(depth - 1, -1, -1):
        dom = chain[i]
        restricted = {g.restrict(dom) for g in alive[0]}
        alive.insert(0, {f for f in levels[i] if f in restricted})
    return StreamStats(depth, sizes, [len(a) for a in alive], levels)


def orbit_tuples(m: FiniteStructure, max_len: int) -> list[tuple[int, ...]]:
    """One tuple per ``Aut(M)``-orbit, lengths ``1..max_len``, lexicographically least representatives."""
    autos = automorphisms(m)
    out = []
    for length in range(1, max_len + 1):
        seen: set = set()
        for t in itertools.product(range(m.size), repeat=length):
            if t in seen:
                continue
            seen.update(tuple(g(x) for x in t) for g in autos)
            out.append(t)
    return out


def check_pair(problem: GluingProblem, budget: int | None = None) -> list[str]:
    """Problems found when comparing glue, the restriction check and anchored isomorphism search."""
    try:
        res = glue(problem, budget=budget)
    except GlueBudgetExceeded as exc:
        return [f"budget: {exc}"]
    restrictions_agree = check_finite_restrictions(problem) is None
    if problem.f0 is None:
        oracle = False
    else:
        anchor = {problem.back1(x): problem.back2(y) for x, y in problem.f0.pairs}
        oracle = bool(find_isomorphisms(problem.m1, problem.m2, anchor, limit=1))
    issues = []
    if res.success != restrictions_agree:
        issues.append(f"glue={res.success} but restrictions agree={restrictions_agree}")
    if res.success != oracle:
        issues.append(f"glue={res.success} but anchored search={oracle}")
    if res.success:
        f = res.isomorphism
        local = {problem.back1(x): problem.back2(y) for x, y in f.pairs}
        if len(find_isomorphisms(problem.m1, problem.m2, local, limit=2)) != 1:
            issues.append("glued map is not confirmed by isomorphism search")
    return issues


def audit_shortness(
    k: AecClass,
    structures,
    ids=None,
    *,
    max_tuple: int = 3,
    cross_sample: int = 2000,
    seed: int = 0,
    budget: int | None = None,
) -> AuditReport:
    """Glue versus restriction types versus anchored search over tuple pairs.

    Tuples are taken up to automorphism of their structure (all three
    verdicts are invariant).  Pairs with equal certificates are all run;
    pairs with distinct certificates are run on a seeded sample drawn from
    pairs sharing length, equality pattern and closure size.
    """
    structures = list(structures)
    ids = list(ids) if ids is not None else [f"#{i}" for i in range(len(structures))]
    items = []
    for m, sid in zip(structures, ids):
        for t in orbit_tuples(m, max_tuple):
            items.append((m, sid, t))
    buckets: dict = {}
    groups: dict = {}
    for idx, (m, sid, t) in enumerate(items):
        buckets.setdefault(canonical_certificate(k, TypeLocator(m, (), t)), []).append(idx)
        pattern = tuple(t.index(x) for x in t)
        groups.setdefault((pattern, len(k.closure(m, t))), []).append(idx)
    same = [(i, j) for b in buckets.values() for i in b for j in b]
    cert_of = {i: c for c, b in buckets.items() for i in b}
    cross_total = sum(len(g) ** 2 for g in groups.values()) - sum(
        1 for g in groups.values() for i in g for j in g if cert_of[i] == cert_of[j])
    rng = random.Random(seed)
    cross: set = set()
    pool = [g for g in groups.values() if len({cert_of[i] for i in g}) > 1]
    attempts = 0
    while pool and len(cross) < min(cross_sample, cross_total) and attempts < 50 * cross_sample:
        attempts += 1
        g = rng.choice(pool)
        i, j = rng.choice(g), rng.choice(g)
        if cert_of[i] != cert_of[j]:
            cross.add((i, j))
    report = AuditReport("shortness", stats={
        "tuples": len(items), "types": len(buckets), "same_type_pairs": len(same),
        "cross_type_pairs": cross_total, "cross_type_sampled": len(cross), "glued": 0, "seed": seed,
    })
    for i, j in same + sorted(cross):
        m1, sid1, t1 = items[i]
        m2, sid2, t2 = items[j]
        report.checked += 1
        problem = GluingProblem(k, m1, m2, t1, t2)
        issues = check_pair(problem, budget)
        if cert_of[i] == cert_of[j] and not issues:
            report.stats["glued"] += 1
        if issues:
            report.records.append(AuditRecord(
                k.name, f"{sid1}|{sid2}", (), "shortness", "fail",
                "agreeing finite restrictions glue to an isomorphism",
                f"tuples={list(t1)}->{list(t2)}: " + "; ".join(issues)))
    return report
