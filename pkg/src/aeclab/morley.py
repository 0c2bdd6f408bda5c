"""Morleyization, quantifier-free types and the compactness chain.

A :class:`TypeCatalog` gives every Galois type over the empty set of
arity at most ``r`` realized in a corpus its own relation symbol.  The
expanded class interprets each symbol as the set of realizations of its
type, so Galois types can be compared through quantifier-free data: the
diagram of the substructure generated by the parameters and the tuple.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from . import kernels
from .aec import AecClass, AuditRecord, AuditReport, EmbeddingSystem, colimit
from .galois import GaloisTypeCertificate, TypeLocator, canonical_certificate, certificate_of, type_equal
from .iso import find_isomorphisms
from .kernels import elems_of, mask_of
from .structures import FiniteStructure, PartialMap, Vocabulary, is_isomorphism


class IncompleteCatalog(KeyError):
    pass


class CompletenessViolation(ValueError):
    def __init__(self, index_set, other, message=""):
        self.index_set = tuple(sorted(index_set))
        self.other = tuple(sorted(other))
        super().__init__(message or f"witness for I={list(self.index_set)} disagrees with J={list(self.other)}")


class AmalgamationFailure(RuntimeError):
    pass


def generated(n: FiniteStructure, a: Iterable[int]) -> frozenset:
    """Universe of the substructure generated by ``a`` (closure under the functions)."""
    e = n.encoded
    return elems_of(kernels.function_closure(mask_of(a), n.size, e.fun_arity, e.fun_off, e.fun_data))


def _tuples(n: FiniteStructure, max_arity: int):
    for r in range(1, max_arity + 1):
        yield from itertools.product(range(n.size), repeat=r)


@dataclass
class TypeCatalog:
    """Realized types over the empty set with their relation symbol names.

    Names are ``R{arity}_{index}`` assigned in order of first appearance
    (corpus order, then arity, then lexicographic tuple).
    """

    klass: AecClass
    max_arity: int
    corpus: list[FiniteStructure]
    entries: list[GaloisTypeCertificate] = field(default_factory=list)
    names: list[str] = field(default_factory=list)

    @classmethod
    def build(cls, k: AecClass, corpus: Iterable[FiniteStructure], max_arity: int) -> "TypeCatalog":
        cat = cls(k, max_arity, list(corpus))
        seen: dict = {}
        counts: dict[int, int] = {}
        for n in cat.corpus:
            for t in _tuples(n, max_arity):
                cert = canonical_certificate(k, TypeLocator(n, (), t))
                if cert not in seen:
                    r = len(t)
                    seen[cert] = len(cat.entries)
                    cat.entries.append(cert)
                    cat.names.append(f"R{r}_{counts.get(r, 0)}")
                    counts[r] = counts.get(r, 0) + 1
        cat._index = seen
        return cat

    def __post_init__(self):
        self._index = {c: i for i, c in enumerate(self.entries)}

    def symbol_of(self, cert: GaloisTypeCertificate) -> str | None:
        i = self._index.get(cert)
        return None if i is None else self.names[i]

    @property
    def vocab(self) -> Vocabulary:
        return self.klass.vocab.expand((name, len(c.positions)) for name, c in zip(self.names, self.entries))

    def symbol_table(self) -> list[dict]:
        return [{"symbol": name, "arity": len(c.positions), "certificate": c.to_text()}
                for name, c in zip(self.names, self.entries)]

    def marks(self, n: FiniteStructure, strict: bool = True) -> dict[str, list[tuple]] | None:
        """``R_p(N) = p(N)`` for every catalog entry; ``None`` (or an error) on an unknown type."""
        out: dict[str, list[tuple]] = {name: [] for name in self.names}
        for t in _tuples(n, self.max_arity):
            sym = self.symbol_of(canonical_certificate(self.klass, TypeLocator(n, (), t)))
            if sym is None:
                if strict:
                    raise IncompleteCatalog(f"tuple {t} realizes no catalog type")
                return None
            out[sym].append(t)
        return out


@dataclass
class Morleyization:
    base: AecClass
    catalog: TypeCatalog
    klass: AecClass
    expansions: list[FiniteStructure]

    def expand(self, n: FiniteStructure) -> FiniteStructure:
        return n.expand(self.klass.vocab, self.catalog.marks(n))

    def reduct(self, n: FiniteStructure) -> FiniteStructure:
        return n.reduct(self.base.vocab)


def morleyize(k: AecClass, catalog: TypeCatalog) -> Morleyization:
    """Expanded class over ``vocab ∪ {R_p}``; its members are the reducts in ``K`` marked by their types."""
    vocab = catalog.vocab
    base_vocab = k.vocab

    def member(n: FiniteStructure) -> bool:
        if n.vocab != vocab:
            return False
        red = n.reduct(base_vocab)
        if not k.member(red):
            return False
        marks = catalog.marks(red, strict=False)
        if marks is None:
            return False
        return all(n.rel(name) == tuple(sorted(marks[name])) for name in catalog.names)

    def strong_sub(m: FiniteStructure, n: FiniteStructure, f: PartialMap) -> bool:
        return k.strong_sub(m.reduct(base_vocab), n.reduct(base_vocab), f)

    def fast_closure(n: FiniteStructure, a: frozenset) -> frozenset:
        return k.closure(n.reduct(base_vocab), a)

    expanded = AecClass(
        name=f"{k.name}+M{catalog.max_arity}",
        vocab=vocab,
        member=member,
        strong_sub=strong_sub,
        fast_closure=fast_closure,
        docs=f"{k.name} expanded by {len(catalog.names)} type relations of arity <= {catalog.max_arity}",
    )
    expansions = [n.expand(vocab, catalog.marks(n)) for n in catalog.corpus]
    return Morleyization(k, catalog, expanded, expansions)


@dataclass(frozen=True)
class QfType:
    """Quantifier-free type: the certificate of the generated substructure with markings."""

    arity: int
    certificate: GaloisTypeCertificate

    def to_text(self) -> str:
        return self.certificate.to_text()


def qf_type(k: AecClass, n: FiniteStructure, params: Iterable[int], tup: Sequence[int]) -> QfType:
    params, tup = frozenset(params), tuple(tup)
    return QfType(len(tup), certificate_of(k, n, params, tup, closure=generated(n, params | set(tup))))


def _locators(corpus, ids, max_tuple, max_params):
    for n, sid in zip(corpus, ids):
        for s in range(1 << n.size):
            a = elems_of(s)
            if max_params is not None and len(a) > max_params:
                continue
            for r in range(1, max_tuple + 1):
                for t in itertools.product(range(n.size), repeat=r):
                    yield n, sid, a, t


def check_qf_equals_galois(
    k: AecClass,
    corpus: Iterable[FiniteStructure],
    max_tuple: int = 2,
    ids: Sequence[str] | None = None,
    *,
    max_params: int | None = None,
) -> AuditReport:
    """Compare quantifier-free and Galois type equality over every common parameter set.

    Locators are bucketed by both certificates; the two partitions must
    coincide.  Inside each Galois bucket every member is also checked
    against the bucket's first member by direct isomorphism search.
    """
    corpus = list(corpus)
    ids = list(ids) if ids is not None else [f"#{i}" for i in range(len(corpus))]
    report = AuditReport("qf-equals-galois", stats={"locators": 0, "galois_types": 0, "qf_types": 0})
    by_pair: dict = {}
    first_gal: dict = {}
    first_qf: dict = {}
    for n, sid, a, t in _locators(corpus, ids, max_tuple, max_params):
        report.stats["locators"] += 1
        loc = TypeLocator(n, a, t)
        gal = canonical_certificate(k, loc)
        qf = qf_type(k, n, a, t).certificate
        key = (a, len(t))
        first_gal.setdefault((key, gal), (loc, sid, qf))
        first_qf.setdefault((key, qf), (loc, sid, gal))
        by_pair.setdefault((key, gal, qf), (loc, sid))
    report.stats["galois_types"] = len(first_gal)
    report.stats["qf_types"] = len(first_qf)
    for (key, gal, qf), (loc, sid) in by_pair.items():
        report.checked += 1
        rep_loc, rep_sid, rep_qf = first_gal[(key, gal)]
        if not type_equal(k, rep_loc, loc):
            report.records.append(AuditRecord(
                k.name, sid, tuple(sorted(loc.params)), "certificate-vs-search", "fail",
                "equal certificates mean equal Galois types", f"tuple={list(loc.tup)} vs {rep_sid}:{list(rep_loc.tup)}"))
        if rep_qf != qf:
            report.records.append(AuditRecord(
                k.name, sid, tuple(sorted(loc.params)), "galois-implies-qf", "fail",
                "equal Galois types have equal quantifier-free types",
                f"tuple={list(loc.tup)} vs {rep_sid}:{list(rep_loc.tup)}"))
        q_loc, q_sid, q_gal = first_qf[(key, qf)]
        if q_gal != gal:
            report.records.append(AuditRecord(
                k.name, sid, tuple(sorted(loc.params)), "qf-implies-galois", "fail",
                "equal quantifier-free types have equal Galois types",
                f"tuple={list(loc.tup)} vs {q_sid}:{list(q_loc.tup)}"))
    return report


def check_model_complete(k: AecClass, corpus: Iterable[FiniteStructure], ids: Sequence[str] | None = None) -> AuditReport:
    """Every induced substructure that is a member must be strong."""
    corpus = list(corpus)
    ids = list(ids) if ids is not None else [f"#{i}" for i in range(len(corpus))]
    report = AuditReport("model-complete")
    for n, sid in zip(corpus, ids):
        if not k.member(n):
            continue
        for s in range(1 << n.size):
            sub = elems_of(s)
            ind = n.induced(sub)
            if ind is None:
                continue
            m, incl = ind
            if not k.member(m):
                continue
            report.checked += 1
            if not k.strong_sub(m, n, incl):
                report.records.append(AuditRecord(
                    k.name, sid, tuple(sorted(sub)), "model-complete", "fail",
                    "member substructures are strong", "induced member substructure is not strong"))
    return report


# ---------------------------------------------------------------- compactness chain

@dataclass
class OracleRecord:
    indices: tuple[int, ...]
    witness: FiniteStructure
    tup: tuple[int, ...]


class ChainOracle:
    """Witnesses for finite restrictions ``p|I``: a member and a tuple indexed by sorted ``I``."""

    def __init__(self, records: Iterable[OracleRecord]):
        self.records: dict[frozenset, OracleRecord] = {}
        for rec in records:
            key = frozenset(rec.indices)
            if len(rec.tup) != len(key):
                raise ValueError(f"witness tuple for I={sorted(key)} has length {len(rec.tup)}")
            self.records[key] = OracleRecord(tuple(sorted(key)), rec.witness, tuple(rec.tup))

    def witness(self, index_set: Iterable[int]) -> OracleRecord:
        key = frozenset(index_set)
        if key not in self.records:
            raise KeyError(f"oracle has no witness for I={sorted(key)}")
        return self.records[key]

    @classmethod
    def from_function(cls, fn: Callable[[tuple[int, ...]], tuple[FiniteStructure, Sequence[int]]],
                      index_sets: Iterable[Iterable[int]]) -> "ChainOracle":
        recs = []
        for idx in index_sets:
            idx = tuple(sorted(idx))
            w, t = fn(idx)
            recs.append(OracleRecord(idx, w, tuple(t)))
        return cls(recs)

    @classmethod
    def load(cls, path: str | Path, vocab: Vocabulary | None = None) -> "ChainOracle":
        """Script format: a JSON list of ``{"indices", "witness", "tuple"}``; witness is inline or a file path."""
        from .corpus import parse_corpus, structure_from_doc

        path = Path(path)
        doc = json.loads(path.read_text())
        recs = []
        for pos, item in enumerate(doc):
            w = item["witness"]
            if isinstance(w, str):
                structs = parse_corpus(path.parent / w)
                if len(structs) != 1:
                    raise ValueError(f"record {pos}: witness file must hold one structure")
                w = structs[0][1]
            else:
                w = structure_from_doc(w, where=f"{path}[{pos}].witness")
            recs.append(OracleRecord(tuple(item["indices"]), w, tuple(item["tuple"])))
        return cls(recs)


def _restrict(rec: OracleRecord, sub: Iterable[int]) -> tuple[int, ...]:
    pos = {i: p for p, i in enumerate(rec.indices)}
    return tuple(rec.tup[pos[i]] for i in sorted(sub))


def check_oracle(k: AecClass, oracle: ChainOracle) -> None:
    """Every witness restricted to a smaller recorded ``J`` must realize the witness type for ``J``."""
    keys = sorted(oracle.records, key=lambda s: (len(s), sorted(s)))
    for big in keys:
        rb = oracle.records[big]
        for small in keys:
            if not small < big:
                continue
            rs = oracle.records[small]
            t1 = TypeLocator(rb.witness, (), _restrict(rb, small))
            t2 = TypeLocator(rs.witness, (), rs.tup)
            if not type_equal(k, t1, t2):
                raise CompletenessViolation(big, small)


@dataclass
class ChainResult:
    system: EmbeddingSystem
    top: FiniteStructure
    cocone: list[PartialMap]
    certificate: GaloisTypeCertificate
    expected: GaloisTypeCertificate

    @property
    def matches(self) -> bool:
        return self.certificate == self.expected


def compactness_chain(k: AecClass, oracle: ChainOracle, depth: int) -> ChainResult:
    """Chain ``M_1 ≤ ... ≤ M_depth`` with ``b_j`` realizing ``p|{0..j-1}``.

    ``M_j`` is the closure of the oracle's tuple for the prefix, relabeled
    so ``M_{j-1}`` sits inside as the identity; the identification is the
    isomorphism witnessing equality of the prefix types.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    check_oracle(k, oracle)
    structs: list[FiniteStructure] = []
    tuples: list[tuple[int, ...]] = []
    for j in range(1, depth + 1):
        rec = oracle.witness(range(j))
        cl_sub, incl = k.closure_structure(rec.witness, rec.tup)
        back = incl.inverse()
        local = tuple(back(x) for x in rec.tup)
        if not structs:
            structs.append(cl_sub)
            tuples.append(local)
            continue
        prev, prev_t = structs[-1], tuples[-1]
        prefix = local[: len(prev_t)]
        target, tincl = k.closure_structure(cl_sub, prefix)
        anchor = {}
        for x, y in zip(prev_t, prefix):
            anchor[x] = tincl.inverse()(y)
        isos = find_isomorphisms(prev, target, anchor, limit=1)
        if not isos:
            raise CompletenessViolation(range(j), range(j - 1), f"prefix types of I={list(range(j))} do not match")
        g = isos[0]
        # relabel cl_sub: image of prev takes prev's labels, the rest follow in order
        label = {tincl(g(x)): x for x in prev.universe}
        nxt = prev.size
        for y in cl_sub.universe:
            if y not in label:
                label[y] = nxt
                nxt += 1
        perm = [label[y] for y in cl_sub.universe]
        new = cl_sub.relabel(perm)
        ident = PartialMap.identity(prev.universe)
        if not k.is_strong(prev, new, ident):
            raise AmalgamationFailure(f"stage {j}: the previous stage is not strong in the next witness closure")
        structs.append(new)
        tuples.append(tuple(label[y] for y in local))
    maps = {}
    for i in range(len(structs)):
        for j in range(i, len(structs)):
            maps[(i, j)] = PartialMap.identity(structs[i].universe)
    system = EmbeddingSystem(structs, maps, tuples)
    top, cocone = colimit(system, k)
    if not is_isomorphism(structs[-1], top, cocone[-1]):
        raise AssertionError("chain colimit does not collapse onto the top stage")
    final = tuple(cocone[-1](x) for x in tuples[-1])
    rec = oracle.witness(range(depth))
    return ChainResult(
        system, top, cocone,
        canonical_certificate(k, TypeLocator(top, (), final)),
        canonical_certificate(k, TypeLocator(rec.witness, (), rec.tup)),
    )
