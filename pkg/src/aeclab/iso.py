"""Isomorphism search and canonical forms.

Both rest on colour refinement: elements start with caller-supplied marks
and are repeatedly split by the multiset of coloured table rows they occur
in.  Colour ids are ranks of sorted signatures, so they are invariant under
relabeling; two structures can share colour ids only when their refinement
traces agree.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from . import kernels
from .structures import FiniteStructure, PartialMap, VocabularyMismatch, _encode


def _rows(m: FiniteStructure):
    # (kind, symbol, tuple, value) rows, built once per structure
    cached = m.__dict__.get("_iso_rows")
    if cached is not None:
        return cached
    rows = []
    for i, table in enumerate(m.rels):
        for t in table:
            rows.append((0, i, t, -1))
    for i in range(len(m.funs)):
        for args, v in m.fun_rows(i):
            rows.append((1, i, args, v))
    m.__dict__["_iso_rows"] = rows
    return rows


def refine(m: FiniteStructure, marks: Sequence[Hashable]) -> tuple[list[int], tuple]:
    """Equitable colouring refining ``marks``; returns ``(colours, trace)``."""
    marks = tuple(marks)
    memo = m.__dict__.setdefault("_refine_memo", {})
    hit = memo.get(marks)
    if hit is None:
        if len(memo) > 4096:
            memo.clear()
        hit = memo[marks] = _refine(m, marks)
    return list(hit[0]), hit[1]


def _refine(m: FiniteStructure, marks: tuple) -> tuple[tuple[int, ...], tuple]:
    n = m.size
    keys = sorted(set(marks))
    rank = {k: i for i, k in enumerate(keys)}
    colors = [rank[k] for k in marks]
    trace = [tuple((k, marks.count(k)) for k in keys)]
    rows = _rows(m)
    num = len(keys)
    while True:
        contrib = [[] for _ in range(n)]
        for kind, sym, t, v in rows:
            ct = tuple(colors[x] for x in t)
            cv = colors[v] if kind else -1
            for pos, x in enumerate(t):
                contrib[x].append((kind, sym, pos, ct, cv))
            if kind:
                contrib[v].append((2, sym, -1, ct, cv))
        sigs = [(colors[x], tuple(sorted(contrib[x]))) for x in range(n)]
        keys = sorted(set(sigs))
        if len(keys) == num:
            return tuple(colors), tuple(trace)
        rank = {k: i for i, k in enumerate(keys)}
        counts: dict = {}
        for s in sigs:
            counts[s] = counts.get(s, 0) + 1
        trace.append(tuple((k, counts[k]) for k in keys))
        colors = [rank[s] for s in sigs]
        num = len(keys)


def _anchor_marks(m: FiniteStructure, fixed: dict[int, int]) -> list:
    marks = []
    for x in range(m.size):
        marks.append((0, fixed[x]) if x in fixed else (1, -1))
    return marks


def find_isomorphisms(
    m1: FiniteStructure,
    m2: FiniteStructure,
    anchor: PartialMap | dict | None = None,
    limit: int | None = None,
) -> list[PartialMap]:
    """Isomorphisms ``m1 -> m2`` extending ``anchor``, at most ``limit`` of them.

    Enumeration order is deterministic: elements of ``m1`` are assigned
    anchored-first, then by increasing candidate count and index, and
    candidate images are tried in increasing index.
    """
    if m1.vocab != m2.vocab:
        raise VocabularyMismatch("structures have distinct signatures")
    if limit is not None and limit <= 0:
        return []
    anchor = anchor.as_dict() if isinstance(anchor, PartialMap) else dict(anchor or {})
    if len(set(anchor.values())) != len(anchor):
        raise ValueError("anchor is not injective")
    n = m1.size
    if n != m2.size:
        return []
    if any(not (0 <= a < n and 0 <= b < n) for a, b in anchor.items()):
        return []
    for (_, k), t1, t2 in zip(m1.vocab.relations, m1.rels, m2.rels):
        if k == 0 and t1 != t2:
            return []
        if len(t1) != len(t2):
            return []
    if n == 0:
        return [PartialMap()]

    # joint anchor ids: anchored pair i gets the same mark on both sides
    marks1 = [(1, -1)] * n
    marks2 = [(1, -1)] * n
    for i, (a, b) in enumerate(sorted(anchor.items())):
        marks1[a] = (0, i)
        marks2[b] = (0, i)
    c1, tr1 = refine(m1, marks1)
    c2, tr2 = refine(m2, marks2)
    if tr1 != tr2:
        return []
    allowed = np.equal.outer(np.asarray(c1), np.asarray(c2))
    counts = allowed.sum(axis=1)
    order = sorted(range(n), key=lambda x: (x not in anchor, int(counts[x]), x))
    e1, e2 = m1.encoded, m2.encoded
    cap = limit if limit is not None else 64
    while True:
        out = np.zeros((cap, n), dtype=np.int64)
        found = kernels.iso_backtrack(
            n, np.asarray(order, dtype=np.int64), allowed,
            e1.rel_arity, e1.rel_off, e1.rel_data, e2.rel_data,
            e1.fun_arity, e1.fun_off, e1.fun_data, e2.fun_data,
            out, cap,
        )
        if found < cap or limit is not None:
            break
        cap *= 8
    return [PartialMap(tuple(enumerate(int(v) for v in row))) for row in out[:found]]


def automorphisms(m: FiniteStructure, fixed=(), limit: int | None = None) -> list[PartialMap]:
    """Automorphisms of ``m`` fixing ``fixed`` pointwise."""
    return find_isomorphisms(m, m, {x: x for x in fixed}, limit)


def isomorphic(m1: FiniteStructure, m2: FiniteStructure, anchor=None) -> bool:
    return bool(find_isomorphisms(m1, m2, anchor, limit=1))


@dataclass(frozen=True)
class CanonicalForm:
    """Result of canonical labeling.

    ``labeling[x]`` is the canonical position of element ``x``; ``key`` is
    the relabeled table encoding together with the relabeled marks, so two
    marked structures are isomorphic (marks preserved) iff keys are equal.
    """

    key: tuple
    labeling: tuple[int, ...]


def _leaf_key(m: FiniteStructure, perm: Sequence[int], marks: Sequence[Hashable]) -> tuple:
    n = m.size
    inv = [0] * n
    for x, y in enumerate(perm):
        inv[y] = x
    rels = tuple(tuple(sorted(tuple(perm[x] for x in t) for t in table)) for table in m.rels)
    funs = []
    for i, (_, k) in enumerate(m.vocab.functions):
        table = m.funs[i]
        funs.append(tuple(perm[table[_encode([inv[y] for y in args], n)]]
                          for args in itertools.product(range(n), repeat=k)))
    return (n, rels, tuple(funs), tuple(marks[inv[y]] for y in range(n)))


def canonical_form(m: FiniteStructure, marks: Sequence[Hashable] | None = None) -> CanonicalForm:
    """Canonical labeling by individualization-refinement.

    The search tree branches on the first smallest non-singleton cell;
    subtrees whose branching element lies in the orbit of an already
    explored one (under automorphisms found so far that fix the current
    prefix) are skipped.
    """
    n = m.size
    marks = list(marks) if marks is not None else [0] * n
    if n == 0:
        return CanonicalForm((0, m.rels, m.funs, ()), ())
    best: list = [None, None]  # key, perm
    autos: list[list[int]] = []

    def search(colors: list[int], prefix: list[int]):
        cells: dict[int, list[int]] = {}
        for x, c in enumerate(colors):
            cells.setdefault(c, []).append(x)
        if len(cells) == n:
            perm = colors
            key = _leaf_key(m, perm, marks)
            if best[0] is None or key < best[0]:
                best[0], best[1] = key, list(perm)
            elif key == best[0]:
                # perm^-1 . best maps this leaf onto the best one: an automorphism
                inv = [0] * n
                for x, y in enumerate(perm):
                    inv[y] = x
                autos.append([inv[best[1][x]] for x in range(n)])
            return
        target = min(cells, key=lambda c: (len(cells[c]) if len(cells[c]) > 1 else n + 1, c))
        explored: list[int] = []
        for x in cells[target]:
            if explored and _same_orbit(x, explored, prefix, autos):
                continue
            explored.append(x)
            sub = [(colors[y], 0 if y == x else 1) for y in range(n)]
            new_colors, _ = refine(m, sub)
            search(new_colors, prefix + [x])

    base, _ = refine(m, marks)
    search(base, [])
    return CanonicalForm(best[0], tuple(best[1]))


def _same_orbit(x: int, explored: list[int], prefix: list[int], autos: list[list[int]]) -> bool:
    gens = [g for g in autos if all(g[p] == p for p in prefix)]
    if not gens:
        return False
    seen = set(explored)
    stack = list(explored)
    while stack:
        y = stack.pop()
        for g in gens:
            z = g[y]
            if z not in seen:
                if z == x:
                    return True
                seen.add(z)
                stack.append(z)
    return x in seen


def canonical_key(m: FiniteStructure) -> tuple:
    return canonical_form(m).key
