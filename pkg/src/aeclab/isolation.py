"""Finitary isolation of types over finite parameter sets.

For ``b`` inside ``cl^M(A)`` we look for a finite ``A1 ⊆ A`` such that
every realization of ``gtp(b/A1; M)`` also realizes ``gtp(b/A; M)``.  The
search starts from a minimal ``A0`` whose closure contains ``b``; the
realizations of ``gtp(b/A0)`` then all lie in ``cl(A0)`` and are finitely
many, so it suffices to add parameters until every pair of them with
different types over ``A`` is told apart.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .aec import AecClass, AuditRecord, AuditReport, EXHAUSTIVE_SUBSETS, SAMPLED_SUBSETS, \
    finite_character_witness, subsets_to_audit
from .galois import OutOfClosure, TypeLocator, canonical_certificate, realizations, type_equal
from .structures import FiniteStructure


class IsolationContradiction(RuntimeError):
    """All of ``A`` was added and two realizations still could not be separated."""


def _realizations_of(k: AecClass, m: FiniteStructure, params: frozenset, tup: tuple) -> list[tuple]:
    return realizations(k, m, params, canonical_certificate(k, TypeLocator(m, params, tup)))


def isolates(k: AecClass, m: FiniteStructure, a: Iterable[int], small: Iterable[int],
             tup: Sequence[int]) -> bool:
    """Does ``gtp(b/B_small; M)`` isolate ``gtp(b/A; M)`` in ``M``?"""
    a, small, tup = frozenset(a), frozenset(small), tuple(tup)
    if not small <= a:
        raise ValueError("the small parameter set must be inside A")
    target = TypeLocator(m, a, tup)
    for other in _realizations_of(k, m, small, tup):
        if not type_equal(k, TypeLocator(m, a, other), target):
            return False
    return True


@dataclass
class IsolationResult:
    base: frozenset          # A0
    isolating: frozenset     # A1
    realizations: list[tuple[int, ...]]
    classes: list[int]       # type-over-A class index per realization
    added: list[int] = field(default_factory=list)

    @property
    def budget(self) -> int:
        n = len(self.realizations)
        return len(self.base) + n * (n - 1) // 2

    def table(self) -> list[dict]:
        return [{"tuple": list(t), "class_over_A": c} for t, c in zip(self.realizations, self.classes)]


def find_isolating_base(k: AecClass, m: FiniteStructure, a: Iterable[int], tup: Sequence[int]) -> IsolationResult:
    """Finite ``A1 ⊆ A`` isolating ``gtp(b/A; M)``, grown greedily from a minimal ``A0``.

    Each round adds the smallest-index parameter that separates a pending
    pair, or the smallest unused one when none does on its own.
    """
    a, tup = frozenset(a), tuple(tup)
    if not set(tup) <= k.closure(m, a):
        raise OutOfClosure(f"tuple {tup} is outside cl({sorted(a)})")
    a0 = finite_character_witness(k, m, a, tup)
    reals = _realizations_of(k, m, a0, tup)
    full = [canonical_certificate(k, TypeLocator(m, a, r)) for r in reals]
    ids: dict = {}
    classes = [ids.setdefault(c, len(ids)) for c in full]
    pairs = [(i, j) for i, j in itertools.combinations(range(len(reals)), 2) if classes[i] != classes[j]]

    def pending(base: frozenset) -> list[tuple[int, int]]:
        certs = [canonical_certificate(k, TypeLocator(m, base, r)) for r in reals]
        return [(i, j) for i, j in pairs if certs[i] == certs[j]]

    a1 = a0
    added = []
    todo = pending(a1)
    while todo:
        rest = sorted(a - a1)
        if not rest:
            raise IsolationContradiction(
                f"realizations {[reals[i] for i in todo[0]]} differ over A but not over A itself")
        pick = next((x for x in rest if len(pending(a1 | {x})) < len(todo)), rest[0])
        a1 = a1 | {pick}
        added.append(pick)
        todo = pending(a1)
    return IsolationResult(a0, a1, reals, classes, added)


def audit_isolation(
    k: AecClass,
    corpus: Iterable[FiniteStructure],
    ids: Sequence[str] | None = None,
    *,
    max_params: int = 6,
    max_tuple: int = 1,
    seed: int = 0,
    bound: int = EXHAUSTIVE_SUBSETS,
    samples: int = SAMPLED_SUBSETS,
) -> AuditReport:
    """Run ``find_isolating_base`` on every ``(M, A, b)`` with ``b`` in ``cl(A)`` and ``|A| <= max_params``."""
    corpus = list(corpus)
    ids = list(ids) if ids is not None else [f"#{i}" for i in range(len(corpus))]
    report = AuditReport("isolation", stats={"max_added": 0, "max_realizations": 0})
    rng = random.Random(seed)
    for m, sid in zip(corpus, ids):
        for a in subsets_to_audit(m, rng, bound, samples):
            if len(a) > max_params:
                continue
            base = sorted(k.closure(m, a))
            for length in range(1, max_tuple + 1):
                for tup in itertools.product(base, repeat=length):
                    report.checked += 1
                    params = tuple(sorted(a))
                    try:
                        res = find_isolating_base(k, m, a, tup)
                    except IsolationContradiction as exc:
                        report.records.append(AuditRecord(
                            k.name, sid, params, "isolation", "fail",
                            "some finite part of A isolates the type", f"tuple={list(tup)} {exc}"))
                        continue
                    report.stats["max_added"] = max(report.stats["max_added"], len(res.added))
                    report.stats["max_realizations"] = max(report.stats["max_realizations"], len(res.realizations))
                    problems = []
                    if not isolates(k, m, a, res.isolating, tup):
                        problems.append("returned base does not isolate")
                    if len(res.isolating) > res.budget:
                        problems.append(f"base size {len(res.isolating)} exceeds budget {res.budget}")
                    if problems:
                        report.records.append(AuditRecord(
                            k.name, sid, params, "isolation", "fail",
                            "some finite part of A isolates the type",
                            f"tuple={list(tup)} A1={sorted(res.isolating)}: " + "; ".join(problems)))
    return report
