"""Galois types at finite scale.

In a class with intersections, ``gtp(b/A; N)`` is determined by the
isomorphism type of the pointed closure ``cl^N(A b)`` with ``A`` fixed
pointwise.  Type equality is decided by anchored isomorphism search;
certificates canonicalize the same data so equal types compare equal as
plain values.
"""
from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from .aec import AecClass, AuditRecord, AuditReport, EXHAUSTIVE_SUBSETS, SAMPLED_SUBSETS, subsets_to_audit
from .iso import automorphisms, canonical_form, find_isomorphisms
from .structures import FiniteStructure, PartialMap, Vocabulary


class ParameterMismatch(ValueError):
    pass


class OutOfClosure(ValueError):
    pass


@dataclass(frozen=True)
class TypeLocator:
    """``gtp(b/A; N)``: a structure, a parameter set and a tuple (repeats allowed)."""

    structure: FiniteStructure
    params: frozenset
    tup: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "params", frozenset(self.params))
        object.__setattr__(self, "tup", tuple(int(x) for x in self.tup))
        n = self.structure.size
        if any(not 0 <= x < n for x in self.params | set(self.tup)):
            raise ValueError("locator elements outside the universe")


def locate(n: FiniteStructure, params: Iterable[int], tup: Sequence[int]) -> TypeLocator:
    return TypeLocator(n, frozenset(params), tuple(tup))


@dataclass(frozen=True)
class GaloisTypeCertificate:
    """Canonical pointed closure.

    ``tables`` is the canonically relabeled structure; ``params`` pairs each
    parameter label with its canonical position; ``positions`` gives the
    canonical position of each tuple entry.
    """

    vocab: Vocabulary
    size: int
    tables: tuple
    params: tuple[tuple[int, int], ...]
    positions: tuple[int, ...]

    def structure(self) -> FiniteStructure:
        _, rels, funs, _ = self.tables
        return FiniteStructure(self.vocab, self.size, rels, funs)

    def to_text(self) -> str:
        _, rels, funs, _ = self.tables
        doc = {
            "vocab": self.vocab.to_dict(),
            "size": self.size,
            "rels": {n: [list(t) for t in r] for (n, _), r in zip(self.vocab.relations, rels)},
            "funs": {n: list(f) for (n, _), f in zip(self.vocab.functions, funs)},
            "params": [list(p) for p in self.params],
            "tuple": list(self.positions),
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def _pointed(k: AecClass, n: FiniteStructure, params: frozenset, tup: tuple, closure=None):
    base = k.closure(n, params | set(tup)) if closure is None else closure
    sub, incl = n.induced(base)
    back = incl.inverse()
    return sub, incl, back


def _marks(size: int, params_local: dict[int, int], tup_local: Sequence[int]) -> list:
    marks = []
    for x in range(size):
        marks.append((params_local.get(x, -1), tuple(i for i, y in enumerate(tup_local) if y == x)))
    return marks


def certificate_of(k: AecClass, n: FiniteStructure, params: Iterable[int], tup: Sequence[int],
                   *, closure: Iterable[int] | None = None) -> GaloisTypeCertificate:
    """Certificate of the pointed structure induced on ``closure``.

    ``closure`` defaults to ``cl^N(A b)``; passing the generated
    substructure instead yields quantifier-free type certificates.
    """
    params = frozenset(params)
    tup = tuple(tup)
    sub, incl, back = _pointed(k, n, params, tup, None if closure is None else frozenset(closure))
    params_local = {back(a): a for a in params}
    tup_local = [back(x) for x in tup]
    cf = canonical_form(sub, _marks(sub.size, params_local, tup_local))
    lab = cf.labeling
    return GaloisTypeCertificate(
        sub.vocab,
        sub.size,
        cf.key,
        tuple(sorted((a, lab[back(a)]) for a in params)),
        tuple(lab[x] for x in tup_local),
    )


_CERT_CACHE: dict = {}


def canonical_certificate(k: AecClass, t: TypeLocator) -> GaloisTypeCertificate:
    key = (id(k), t.structure, t.params, t.tup)
    hit = _CERT_CACHE.get(key)
    if hit is None:
        if len(_CERT_CACHE) > 500_000:
            _CERT_CACHE.clear()
        hit = _CERT_CACHE[key] = certificate_of(k, t.structure, t.params, t.tup)
    return hit


def type_equal(k: AecClass, t1: TypeLocator, t2: TypeLocator) -> bool:
    """Is there an isomorphism ``cl(A b1) -> cl(A b2)`` fixing ``A`` with ``b1 -> b2``?"""
    if t1.params != t2.params:
        raise ParameterMismatch(f"parameter sets differ: {sorted(t1.params)} vs {sorted(t2.params)}")
    if len(t1.tup) != len(t2.tup):
        return False
    m1, _, back1 = _pointed(k, t1.structure, t1.params, t1.tup)
    m2, _, back2 = _pointed(k, t2.structure, t2.params, t2.tup)
    if m1.size != m2.size:
        return False
    anchor: dict[int, int] = {}
    for a in t1.params:
        anchor[back1(a)] = back2(a)
    for x, y in zip(t1.tup, t2.tup):
        x, y = back1(x), back2(y)
        if anchor.setdefault(x, y) != y:
            return False
    if len(set(anchor.values())) != len(anchor):
        return False
    return bool(find_isomorphisms(m1, m2, anchor, limit=1))


def _tuple_in_closure(k: AecClass, cert: GaloisTypeCertificate) -> bool:
    s = cert.structure()
    base = k.closure(s, {pos for _, pos in cert.params})
    return set(cert.positions) <= base


def realizations(k: AecClass, n: FiniteStructure, params: Iterable[int],
                 cert: GaloisTypeCertificate) -> list[tuple[int, ...]]:
    """All tuples of ``N`` whose type over ``A`` has certificate ``cert``.

    When the certificate's tuple lies in the closure of its parameters every
    realization lies in ``cl^N(A)``, so only that set is searched.
    """
    params = frozenset(params)
    if {a for a, _ in cert.params} != params:
        raise ParameterMismatch("certificate was built over a different parameter set")
    length = len(cert.positions)
    space = sorted(k.closure(n, params)) if _tuple_in_closure(k, cert) else list(n.universe)
    pattern = [cert.positions.index(p) for p in cert.positions]
    out = []
    for tup in itertools.product(space, repeat=length):
        if [tup.index(x) for x in tup] != pattern:
            continue
        if canonical_certificate(k, TypeLocator(n, params, tup)) == cert:
            out.append(tup)
    return out


def is_eta_algebraic(k: AecClass, t: TypeLocator, eta: int) -> bool:
    """Fewer than ``eta`` realizations, counted inside ``cl^N(A)``.

    Only defined when the tuple lies in ``cl^N(A)``; there the count does
    not depend on the ambient model.
    """
    base = k.closure(t.structure, t.params)
    if not set(t.tup) <= base:
        raise OutOfClosure(f"tuple {t.tup} is outside cl({sorted(t.params)})")
    return len(realizations(k, t.structure, t.params, canonical_certificate(k, t))) < eta


def stabilizer_orbit(k: AecClass, n: FiniteStructure, params: Iterable[int], b: int) -> tuple[list[PartialMap], frozenset]:
    """``Aut_A(cl^N(A))`` (all elements, in ``N``'s labels) and the orbit of ``b``."""
    params = frozenset(params)
    base = k.closure(n, params)
    if b not in base:
        raise OutOfClosure(f"{b} is outside cl({sorted(params)})")
    sub, incl = n.induced(base)
    back = incl.inverse()
    group = automorphisms(sub, fixed=[back(a) for a in params])
    lifted = [PartialMap(tuple((incl(x), incl(g(x))) for x in sub.universe)) for g in group]
    return lifted, frozenset(g(b) for g in lifted)


def audit_multiuniversal(
    k: AecClass,
    corpus: Iterable[FiniteStructure],
    eta: int,
    ids: Sequence[str] | None = None,
    *,
    seed: int = 0,
    bound: int = EXHAUSTIVE_SUBSETS,
    samples: int = SAMPLED_SUBSETS,
) -> AuditReport:
    """Realization counts of ``gtp(b/A; M)`` inside ``cl^M(A)`` for every ``b`` in the closure."""
    corpus = list(corpus)
    ids = list(ids) if ids is not None else [f"#{i}" for i in range(len(corpus))]
    report = AuditReport("multiuniversality", stats={"max_count": 0, "eta": eta})
    rng = random.Random(seed)
    for m, sid in zip(corpus, ids):
        for a in subsets_to_audit(m, rng, bound, samples):
            base = k.closure(m, a)
            groups: dict = {}
            for b in sorted(base):
                groups.setdefault(canonical_certificate(k, TypeLocator(m, a, (b,))), []).append(b)
            for members in groups.values():
                count = len(members)
                report.checked += len(members)
                report.stats["max_count"] = max(report.stats["max_count"], count)
                if count >= eta:
                    for b in members:
                        report.records.append(AuditRecord(
                            k.name, sid, tuple(sorted(a)), "eta-algebraic", "fail",
                            f"closure elements have fewer than {eta} realizations",
                            f"element={b} realizations={count}",
                        ))
    return report


def audit_type_machinery(
    k: AecClass,
    corpus: Iterable[FiniteStructure],
    ids: Sequence[str] | None = None,
    *,
    max_tuple: int = 2,
) -> AuditReport:
    """Certificates against :func:`type_equal`, and realizations against stabilizer orbits.

    For each parameter set ``A`` the locators of every structure are
    bucketed by certificate.  Each member is compared with its bucket's
    representative (must be equal); representatives of distinct buckets
    sharing the closure size and equality pattern are compared pairwise
    (must differ).  Buckets differing in either invariant cannot be
    isomorphic, so this covers every pair.
    """
    corpus = list(corpus)
    ids = list(ids) if ids is not None else [f"#{i}" for i in range(len(corpus))]
    report = AuditReport("type-machinery", stats={"locators": 0, "types": 0, "orbit_checks": 0})
    by_params: dict = {}
    for m, sid in zip(corpus, ids):
        for s in range(1 << m.size):
            a = frozenset(x for x in m.universe if s >> x & 1)
            by_params.setdefault(a, []).append((m, sid))
            base = k.closure(m, a)
            orbit_of: dict = {}
            for b in sorted(base):
                report.stats["orbit_checks"] += 1
                cert = canonical_certificate(k, TypeLocator(m, a, (b,)))
                real = {t[0] for t in realizations(k, m, a, cert)}
                if b not in orbit_of:
                    _, orbit = stabilizer_orbit(k, m, a, b)
                    for x in orbit:
                        orbit_of[x] = orbit
                if real != orbit_of[b]:
                    report.records.append(AuditRecord(
                        k.name, sid, tuple(sorted(a)), "realizations-are-orbits", "fail",
                        detail=f"element={b} realizations={sorted(real)} orbit={sorted(orbit_of[b])}",
                    ))
    for a, members in sorted(by_params.items(), key=lambda kv: (len(kv[0]), sorted(kv[0]))):
        buckets: dict = {}
        for m, sid in members:
            for length in range(1, max_tuple + 1):
                for tup in itertools.product(m.universe, repeat=length):
                    loc = TypeLocator(m, a, tup)
                    report.stats["locators"] += 1
                    buckets.setdefault(canonical_certificate(k, loc), []).append((loc, sid))
        report.stats["types"] += len(buckets)
        coarse: dict = {}
        for cert, locs in buckets.items():
            rep, _ = locs[0]
            for loc, sid in locs[1:]:
                report.checked += 1
                if not type_equal(k, rep, loc):
                    report.records.append(AuditRecord(
                        k.name, sid, tuple(sorted(a)), "certificate-implies-type", "fail",
                        detail=f"tuple={list(loc.tup)} representative={list(rep.tup)}",
                    ))
            pattern = tuple(cert.positions.index(p) for p in cert.positions)
            coarse.setdefault((cert.size, pattern), []).append(locs[0])
        for group in coarse.values():
            for (l1, s1), (l2, s2) in itertools.combinations(group, 2):
                report.checked += 1
                if type_equal(k, l1, l2):
                    report.records.append(AuditRecord(
                        k.name, s2, tuple(sorted(a)), "type-implies-certificate", "fail",
                        detail=f"tuple={list(l2.tup)} equals {s1} tuple={list(l1.tup)} with a different certificate",
                    ))
    return report
