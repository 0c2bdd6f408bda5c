"""Finite structures over finite vocabularies, partial maps and substructure tests.

Universes are always ``range(n)``.  Relations are stored as sorted tuples of
tuples and functions as flat tables indexed by the base-``n`` encoding of the
argument tuple, so two structures are equal exactly when their tables are.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np


class StructureError(ValueError):
    """Malformed vocabulary, structure or map."""


class VocabularyMismatch(StructureError):
    """Two structures over distinct signatures were compared."""


class BudgetExceeded(RuntimeError):
    def __init__(self, count: int, budget: int):
        super().__init__(f"enumeration needs {count} candidate structures, budget is {budget}")
        self.count = count
        self.budget = budget


@dataclass(frozen=True)
class Vocabulary:
    relations: tuple[tuple[str, int], ...] = ()
    functions: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "relations", tuple((str(n), int(k)) for n, k in self.relations))
        object.__setattr__(self, "functions", tuple((str(n), int(k)) for n, k in self.functions))
        names = [n for n, _ in self.relations] + [n for n, _ in self.functions]
        if len(set(names)) != len(names):
            raise StructureError(f"duplicate symbol names in {names}")
        for name, arity in self.relations + self.functions:
            if arity < 0:
                raise StructureError(f"negative arity for {name}")

    @property
    def has_constants(self) -> bool:
        return any(k == 0 for _, k in self.functions)

    def rel_index(self, name: str) -> int:
        for i, (n, _) in enumerate(self.relations):
            if n == name:
                return i
        raise KeyError(name)

    def fun_index(self, name: str) -> int:
        for i, (n, _) in enumerate(self.functions):
            if n == name:
                return i
        raise KeyError(name)

    def expand(self, relations: Iterable[tuple[str, int]]) -> "Vocabulary":
        return Vocabulary(self.relations + tuple(relations), self.functions)

    def to_dict(self) -> dict:
        return {
            "relations": [[n, k] for n, k in self.relations],
            "functions": [[n, k] for n, k in self.functions],
        }


GRAPH = Vocabulary(relations=(("E", 2),))
UNARY_FUNCTION = Vocabulary(functions=(("s", 1),))


def _encode(args: Sequence[int], n: int) -> int:
    idx = 0
    for a in args:
        idx = idx * n + a
    return idx


@dataclass(frozen=True)
class FiniteStructure:
    """An immutable finite structure with universe ``range(size)``."""

    vocab: Vocabulary
    size: int
    rels: tuple[tuple[tuple[int, ...], ...], ...]
    funs: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        n = self.size
        if n < 0:
            raise StructureError("negative universe size")
        if len(self.rels) != len(self.vocab.relations) or len(self.funs) != len(self.vocab.functions):
            raise StructureError("tables do not match vocabulary")
        if n == 0 and self.vocab.has_constants:
            raise StructureError("empty universe with constant symbols")
        for (name, k), table in zip(self.vocab.relations, self.rels):
            for t in table:
                if len(t) != k or any(not 0 <= x < n for x in t):
                    raise StructureError(f"tuple {t} of {name} outside universe of size {n}")
        for (name, k), table in zip(self.vocab.functions, self.funs):
            if len(table) != n**k:
                raise StructureError(f"function {name} is not total")
            if any(not 0 <= v < n for v in table):
                raise StructureError(f"function {name} takes values outside the universe")

    @classmethod
    def build(
        cls,
        vocab: Vocabulary,
        size: int,
        rels: Mapping[str, Iterable[Sequence[int]]] | None = None,
        funs: Mapping[str, Mapping[tuple, int] | Sequence[int] | Callable] | None = None,
    ) -> "FiniteStructure":
        """Build from name-keyed tables.

        Function tables may be given as a flat sequence (base-``size``
        order), a mapping from argument tuples to values, or a callable.
        """
        rels = dict(rels or {})
        funs = dict(funs or {})
        unknown = set(rels) - {n for n, _ in vocab.relations} | set(funs) - {n for n, _ in vocab.functions}
        if unknown:
            raise StructureError(f"unknown symbols {sorted(unknown)}")
        rel_tables = tuple(
            tuple(sorted({tuple(int(x) for x in t) for t in rels.get(name, ())})) for name, _ in vocab.relations
        )
        fun_tables = []
        for name, k in vocab.functions:
            spec = funs.get(name)
            if spec is None:
                raise StructureError(f"missing table for function {name}")
            if callable(spec):
                table = [spec(*args) for args in itertools.product(range(size), repeat=k)]
            elif isinstance(spec, Mapping):
                # unary tables may be keyed by bare ints
                keyed = {(a,) if isinstance(a, int) else tuple(a): v for a, v in spec.items()}
                try:
                    table = [keyed[args] for args in itertools.product(range(size), repeat=k)]
                except KeyError as exc:
                    raise StructureError(f"function {name} is not total: missing {exc}") from None
            else:
                table = list(spec)
            fun_tables.append(tuple(int(v) for v in table))
        return cls(vocab, size, rel_tables, tuple(fun_tables))

    @cached_property
    def _rel_sets(self) -> tuple[frozenset, ...]:
        return tuple(frozenset(t) for t in self.rels)

    @cached_property
    def _hash(self) -> int:
        return hash((self.vocab, self.size, self.rels, self.funs))

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if not isinstance(other, FiniteStructure):
            return NotImplemented
        return (self.size, self.rels, self.funs, self.vocab) == (other.size, other.rels, other.funs, other.vocab)

    @property
    def universe(self) -> range:
        return range(self.size)

    def holds(self, name: str, *args: int) -> bool:
        return tuple(args) in self._rel_sets[self.vocab.rel_index(name)]

    def rel(self, name: str) -> tuple[tuple[int, ...], ...]:
        return self.rels[self.vocab.rel_index(name)]

    def apply(self, name: str, *args: int) -> int:
        return self.funs[self.vocab.fun_index(name)][_encode(args, self.size)]

    def fun_rows(self, i: int) -> Iterator[tuple[tuple[int, ...], int]]:
        k = self.vocab.functions[i][1]
        for args, v in zip(itertools.product(range(self.size), repeat=k), self.funs[i]):
            yield args, v

    def rel_contains(self, i: int, t: tuple[int, ...]) -> bool:
        return t in self._rel_sets[i]

    @cached_property
    def gaifman(self) -> tuple[frozenset, ...]:
        """Neighbours in the Gaifman graph (co-occurrence in a tuple or function row)."""
        nbrs = [set() for _ in range(self.size)]
        rows = [t for table in self.rels for t in table]
        rows += [args + (v,) for i in range(len(self.funs)) for args, v in self.fun_rows(i)]
        for row in rows:
            for x in row:
                nbrs[x].update(row)
        for x in range(self.size):
            nbrs[x].discard(x)
        return tuple(frozenset(s) for s in nbrs)

    def function_closed(self, subset: Iterable[int]) -> bool:
        s = set(subset)
        for i, (_, k) in enumerate(self.vocab.functions):
            for args in itertools.product(sorted(s), repeat=k):
                if self.funs[i][_encode(args, self.size)] not in s:
                    return False
        return True

    def relabel(self, perm: Sequence[int]) -> "FiniteStructure":
        """Image of the structure under the bijection ``x -> perm[x]``."""
        n = self.size
        if sorted(perm) != list(range(n)):
            raise StructureError("relabeling is not a permutation")
        inv = [0] * n
        for x, y in enumerate(perm):
            inv[y] = x
        rels = tuple(tuple(sorted(tuple(perm[x] for x in t) for t in table)) for table in self.rels)
        funs = []
        for i, (_, k) in enumerate(self.vocab.functions):
            table = self.funs[i]
            funs.append(tuple(
                perm[table[_encode([inv[y] for y in args], n)]]
                for args in itertools.product(range(n), repeat=k)
            ))
        return FiniteStructure(self.vocab, n, rels, tuple(funs))

    def induced(self, subset: Iterable[int]) -> tuple["FiniteStructure", "PartialMap"] | None:
        """Substructure on ``subset`` relabeled in increasing order.

        Returns the structure together with its inclusion map, or ``None``
        when the subset is not closed under the functions.
        """
        key = frozenset(subset)
        memo = self.__dict__.setdefault("_induced_memo", {})
        hit = memo.get(key, False)
        if hit is not False:
            return hit
        if len(memo) > 4096:
            memo.clear()
        memo[key] = out = self._induced(sorted(key))
        return out

    def _induced(self, elems: list[int]):
        if not self.function_closed(elems):
            return None
        if not elems and self.vocab.has_constants:
            return None
        pos = {x: i for i, x in enumerate(elems)}
        rels = tuple(
            tuple(sorted(tuple(pos[x] for x in t) for t in table if all(x in pos for x in t)))
            for table in self.rels
        )
        m = len(elems)
        funs = []
        for i, (_, k) in enumerate(self.vocab.functions):
            table = self.funs[i]
            funs.append(tuple(
                pos[table[_encode([elems[a] for a in args], self.size)]]
                for args in itertools.product(range(m), repeat=k)
            ))
        return FiniteStructure(self.vocab, m, rels, tuple(funs)), PartialMap.from_pairs(enumerate(elems))

    def reduct(self, vocab: Vocabulary) -> "FiniteStructure":
        rels = tuple(self.rels[self.vocab.rel_index(n)] for n, _ in vocab.relations)
        funs = tuple(self.funs[self.vocab.fun_index(n)] for n, _ in vocab.functions)
        return FiniteStructure(vocab, self.size, rels, funs)

    def expand(self, vocab: Vocabulary, extra: Mapping[str, Iterable[Sequence[int]]]) -> "FiniteStructure":
        """Add interpretations for the relation symbols of ``vocab`` missing here."""
        rels = []
        for name, _ in vocab.relations:
            try:
                rels.append(self.rels[self.vocab.rel_index(name)])
            except KeyError:
                rels.append(tuple(sorted({tuple(t) for t in extra.get(name, ())})))
        funs = tuple(self.funs[self.vocab.fun_index(n)] for n, _ in vocab.functions)
        return FiniteStructure(vocab, self.size, tuple(rels), funs)

    @cached_property
    def encoded(self) -> "EncodedStructure":
        return EncodedStructure.from_structure(self)

    def __repr__(self):
        parts = [f"{n}={list(t)}" for (n, _), t in zip(self.vocab.relations, self.rels)]
        parts += [f"{n}={list(t)}" for (n, _), t in zip(self.vocab.functions, self.funs)]
        return f"FiniteStructure(size={self.size}, {', '.join(parts)})"


@dataclass(frozen=True)
class EncodedStructure:
    """Flat numpy tables consumed by the compiled kernels."""

    n: int
    rel_arity: np.ndarray
    rel_off: np.ndarray
    rel_data: np.ndarray
    fun_arity: np.ndarray
    fun_off: np.ndarray
    fun_data: np.ndarray

    @classmethod
    def from_structure(cls, m: FiniteStructure) -> "EncodedStructure":
        n = m.size
        rel_arity = np.array([k for _, k in m.vocab.relations], dtype=np.int64)
        offs, chunks, off = [], [], 0
        for (_, k), table in zip(m.vocab.relations, m.rels):
            chunk = np.zeros(n**k, dtype=np.uint8)
            for t in table:
                chunk[_encode(t, n)] = 1
            offs.append(off)
            chunks.append(chunk)
            off += chunk.size
        rel_data = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.uint8)
        fun_arity = np.array([k for _, k in m.vocab.functions], dtype=np.int64)
        foffs, fchunks, off = [], [], 0
        for table in m.funs:
            foffs.append(off)
            fchunks.append(np.asarray(table, dtype=np.int64))
            off += len(table)
        fun_data = np.concatenate(fchunks) if fchunks else np.zeros(0, dtype=np.int64)
        return cls(
            n, rel_arity, np.array(offs, dtype=np.int64), rel_data,
            fun_arity, np.array(foffs, dtype=np.int64), fun_data,
        )


@dataclass(frozen=True)
class PartialMap:
    """A finite injective partial function, stored as sorted pairs.

    Also accepts a mapping in place of the pair sequence.
    """

    pairs: tuple[tuple[int, int], ...] = ()
    _fwd: dict = field(default=None, compare=False, hash=False, repr=False)

    def __post_init__(self):
        raw = self.pairs.items() if isinstance(self.pairs, Mapping) else self.pairs
        pairs = tuple(sorted((int(a), int(b)) for a, b in raw))
        fwd = dict(pairs)
        if len(fwd) != len(pairs):
            raise StructureError(f"not a function: {pairs}")
        if len(set(fwd.values())) != len(fwd):
            raise StructureError(f"not injective: {pairs}")
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "_fwd", fwd)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]]) -> "PartialMap":
        return cls(tuple(pairs))

    @classmethod
    def identity(cls, elems: Iterable[int]) -> "PartialMap":
        return cls(tuple((x, x) for x in elems))

    def __call__(self, x: int) -> int:
        return self._fwd[x]

    def __contains__(self, x: int) -> bool:
        return x in self._fwd

    def __len__(self):
        return len(self.pairs)

    def get(self, x: int, default=None):
        return self._fwd.get(x, default)

    @property
    def domain(self) -> frozenset:
        return frozenset(self._fwd)

    @property
    def image(self) -> frozenset:
        return frozenset(self._fwd.values())

    def as_dict(self) -> dict[int, int]:
        return dict(self._fwd)

    def compose(self, first: "PartialMap") -> "PartialMap":
        """``self ∘ first`` on the elements where both are defined."""
        return PartialMap(tuple((a, self._fwd[b]) for a, b in first.pairs if b in self._fwd))

    def inverse(self) -> "PartialMap":
        inv = self.__dict__.get("_inverse")
        if inv is None:
            inv = PartialMap(tuple(sorted((b, a) for a, b in self.pairs)))
            self.__dict__["_inverse"] = inv
        return inv

    def restrict(self, elems: Iterable[int]) -> "PartialMap":
        s = set(elems)
        return PartialMap(tuple(p for p in self.pairs if p[0] in s))

    def extends(self, other: "PartialMap") -> bool:
        return all(self._fwd.get(a) == b for a, b in other.pairs)

    def image_of(self, elems: Iterable[int]) -> frozenset:
        return frozenset(self._fwd[x] for x in elems)

    def __repr__(self):
        return "{" + ", ".join(f"{a}->{b}" for a, b in self.pairs) + "}"


def is_substructure(small: FiniteStructure, big: FiniteStructure, inclusion: PartialMap) -> bool:
    """True iff ``inclusion`` embeds ``small`` into ``big`` as an induced substructure."""
    if small.vocab != big.vocab:
        raise VocabularyMismatch("structures have distinct signatures")
    f = inclusion
    if f.domain != frozenset(small.universe) or not f.image <= frozenset(big.universe):
        return False
    for i, (_, k) in enumerate(small.vocab.relations):
        for t in itertools.product(range(small.size), repeat=k):
            if small.rel_contains(i, t) != big.rel_contains(i, tuple(f(x) for x in t)):
                return False
    for i in range(len(small.vocab.functions)):
        big_table = big.funs[i]
        for args, v in small.fun_rows(i):
            if big_table[_encode([f(x) for x in args], big.size)] != f(v):
                return False
    return True


def is_isomorphism(m1: FiniteStructure, m2: FiniteStructure, f: PartialMap) -> bool:
    return m1.size == m2.size and is_substructure(m1, m2, f)


def _candidate_count(vocab: Vocabulary, n: int) -> int:
    count = 1
    for _, k in vocab.relations:
        count *= 2 ** (n**k)
    for _, k in vocab.functions:
        count *= n ** (n**k)
    return count


def enumerate_all_structures(
    vocab: Vocabulary,
    max_size: int,
    filter: Callable[[FiniteStructure], bool] | None = None,
    *,
    budget: int = 2_000_000,
    dedup: bool = False,
    min_size: int = 0,
) -> Iterator[FiniteStructure]:
    """Yield every structure of size ``min_size..max_size`` passing ``filter``.

    Structures are distinct as labeled tables; with ``dedup`` only the first
    member of each isomorphism class is yielded.
    """
    total = sum(_candidate_count(vocab, n) for n in range(min_size, max_size + 1))
    if total > budget:
        raise BudgetExceeded(total, budget)
    seen: set = set()
    if dedup:
        from .iso import canonical_form
    for n in range(min_size, max_size + 1):
        if n == 0 and vocab.has_constants:
            continue
        rel_spaces = [list(itertools.product(range(n), repeat=k)) for _, k in vocab.relations]
        fun_sizes = [n**k for _, k in vocab.functions]
        rel_choices = [range(2 ** len(space)) for space in rel_spaces]
        fun_choices = [list(itertools.product(range(n), repeat=m)) for m in fun_sizes]
        for masks in itertools.product(*rel_choices):
            rels = tuple(
                tuple(t for j, t in enumerate(space) if mask >> j & 1)
                for space, mask in zip(rel_spaces, masks)
            )
            for tables in itertools.product(*fun_choices):
                m = FiniteStructure(vocab, n, rels, tuple(tables))
                if filter is not None and not filter(m):
                    continue
                if dedup:
                    key = canonical_form(m).key
                    if key in seen:
                        continue
                    seen.add(key)
                yield m


def make_graph(n: int, edges: Iterable[tuple[int, int]]) -> FiniteStructure:
    """Simple undirected graph with the symmetric closure of ``edges``."""
    sym = set()
    for a, b in edges:
        if a == b:
            raise StructureError("loops are not allowed")
        sym.add((a, b))
        sym.add((b, a))
    return FiniteStructure.build(GRAPH, n, {"E": sym})


def make_unary(table: Sequence[int]) -> FiniteStructure:
    return FiniteStructure.build(UNARY_FUNCTION, len(table), funs={"s": list(table)})


def make_equivalence(n: int, blocks: Iterable[Iterable[int]]) -> FiniteStructure:
    pairs = []
    for block in blocks:
        block = list(block)
        pairs += [(a, b) for a in block for b in block]
    return FiniteStructure.build(Vocabulary(relations=(("E", 2),)), n, {"E": pairs})
