"""Hot loops: anchored isomorphism backtracking and bitmask closure transforms.

Every kernel is written once against plain numpy arrays.  When numba is
importable and ``AECLAB_NO_JIT`` is unset (or ``0``) the kernels are compiled
with ``@njit``; otherwise the same functions run as ordinary Python over numpy.
The uncompiled originals stay reachable through :data:`PY_KERNELS` so tests
and the benchmark can compare both paths.
"""
from __future__ import annotations

import os

import numpy as np

_NO_JIT = os.environ.get("AECLAB_NO_JIT", "0").lower() not in ("", "0", "false", "no")

try:
    if _NO_JIT:
        raise ImportError
    from numba import njit as _njit

    USE_NUMBA = True
except ImportError:
    USE_NUMBA = False

PY_KERNELS: dict = {}


def kernel(fn):
    PY_KERNELS[fn.__name__] = fn
    if USE_NUMBA:
        return _njit(cache=True, nogil=True)(fn)
    return fn


@kernel
def _tuple_digits(idx, n, k, out):
    for j in range(k - 1, -1, -1):
        out[j] = idx % n
        idx //= n


@kernel
def _consistent(depth, order, img, used2, n,
                rel_arity, rel_off, rel1, rel2,
                fun_arity, fun_off, fun1, fun2, digits):
    """Check every table row whose entries are all among the first ``depth+1`` assigned elements."""
    x = order[depth]
    for r in range(rel_arity.shape[0]):
        k = rel_arity[r]
        if k == 0:
            continue
        total = n**k
        for idx in range(total):
            _tuple_digits(idx, n, k, digits)
            ok = True
            has_x = False
            idx2 = 0
            for j in range(k):
                e = digits[j]
                if img[e] < 0:
                    ok = False
                    break
                if e == x:
                    has_x = True
                idx2 = idx2 * n + img[e]
            if not ok or not has_x:
                continue
            if rel1[rel_off[r] + idx] != rel2[rel_off[r] + idx2]:
                return False
    for f in range(fun_arity.shape[0]):
        k = fun_arity[f]
        total = n**k
        for idx in range(total):
            _tuple_digits(idx, n, k, digits)
            ok = True
            has_x = False
            idx2 = 0
            for j in range(k):
                e = digits[j]
                if img[e] < 0:
                    ok = False
                    break
                if e == x:
                    has_x = True
                idx2 = idx2 * n + img[e]
            if not ok:
                continue
            v1 = fun1[fun_off[f] + idx]
            if not has_x and v1 != x:
                continue
            v2 = fun2[fun_off[f] + idx2]
            if img[v1] >= 0:
                if img[v1] != v2:
                    return False
            elif used2[v2]:
                return False
    return True


@kernel
def iso_backtrack(n, order, allowed,
                  rel_arity, rel_off, rel1, rel2,
                  fun_arity, fun_off, fun1, fun2,
                  out, limit):
    """Enumerate bijections respecting ``allowed`` that preserve every table.

    Elements are assigned in ``order``; candidates are tried in increasing
    index.  Up to ``limit`` solutions are written to ``out`` (one row per
    solution, ``row[x]`` the image of ``x``).  Returns the number written.
    """
    if n == 0:
        return 1 if limit > 0 else 0
    img = -np.ones(n, dtype=np.int64)
    used2 = np.zeros(n, dtype=np.bool_)
    cand = np.zeros(n, dtype=np.int64)
    digits = np.zeros(max(1, max_arity(rel_arity, fun_arity)), dtype=np.int64)
    found = 0
    depth = 0
    cand[0] = 0
    while depth >= 0:
        x = order[depth]
        if img[x] >= 0:
            used2[img[x]] = False
            img[x] = -1
        placed = False
        y = cand[depth]
        while y < n:
            if allowed[x, y] and not used2[y]:
                img[x] = y
                used2[y] = True
                if _consistent(depth, order, img, used2, n, rel_arity, rel_off, rel1, rel2,
                               fun_arity, fun_off, fun1, fun2, digits):
                    placed = True
                    break
                used2[y] = False
                img[x] = -1
            y += 1
        if not placed:
            cand[depth] = 0
            depth -= 1
            continue
        cand[depth] = y + 1
        if depth == n - 1:
            for e in range(n):
                out[found, e] = img[e]
            found += 1
            if found >= limit:
                return found
            continue
        depth += 1
        cand[depth] = 0
    return found


@kernel
def max_arity(rel_arity, fun_arity):
    m = 0
    for k in rel_arity:
        if k > m:
            m = k
    for k in fun_arity:
        if k > m:
            m = k
    return m


@kernel
def superset_meet(strong, nbits):
    """For every mask ``A`` return the AND of all strong masks containing ``A``.

    ``strong[S]`` flags whether subset ``S`` qualifies.  Masks with no
    qualifying superset map to ``-1``.  Runs the superset-zeta transform over
    the AND semilattice in ``nbits * 2**nbits`` steps.
    """
    size = 1 << nbits
    full = size - 1
    acc = np.empty(size, dtype=np.int64)
    for s in range(size):
        acc[s] = s if strong[s] else -1
    for b in range(nbits):
        bit = 1 << b
        for s in range(size):
            if s & bit == 0:
                other = acc[s | bit]
                if other != -1:
                    if acc[s] == -1:
                        acc[s] = other
                    else:
                        acc[s] = acc[s] & other
    for s in range(size):
        if acc[s] != -1:
            acc[s] = acc[s] & full
    return acc


@kernel
def function_closure(mask, n, fun_arity, fun_off, fun_data):
    """Smallest superset of ``mask`` closed under every function table."""
    digits = np.zeros(max(1, max_arity(fun_arity, fun_arity)), dtype=np.int64)
    changed = True
    while changed:
        changed = False
        for f in range(fun_arity.shape[0]):
            k = fun_arity[f]
            for idx in range(n**k):
                _tuple_digits(idx, n, k, digits)
                inside = True
                for j in range(k):
                    if (mask >> digits[j]) & 1 == 0:
                        inside = False
                        break
                if inside:
                    v = fun_data[fun_off[f] + idx]
                    if (mask >> v) & 1 == 0:
                        mask |= 1 << v
                        changed = True
    return mask


@kernel
def component_closure(mask, adj):
    """Union of the connected components (of the symmetric 0/1 matrix ``adj``) meeting ``mask``."""
    n = adj.shape[0]
    frontier = mask
    result = mask
    while frontier:
        nxt = 0
        for x in range(n):
            if (frontier >> x) & 1:
                for y in range(n):
                    if adj[x, y] and (result >> y) & 1 == 0:
                        nxt |= 1 << y
        result |= nxt
        frontier = nxt
    return result


@kernel
def component_closure_all(adj):
    """``component_closure`` for every mask at once."""
    n = adj.shape[0]
    comp = np.zeros(n, dtype=np.int64)
    for x in range(n):
        comp[x] = component_closure(np.int64(1) << x, adj)
    out = np.zeros(1 << n, dtype=np.int64)
    for s in range(1, 1 << n):
        low = s & -s
        b = 0
        while (low >> b) != 1:
            b += 1
        out[s] = out[s & (s - 1)] | comp[b]
    return out


@kernel
def function_closure_all(n, fun_arity, fun_off, fun_data):
    out = np.zeros(1 << n, dtype=np.int64)
    for s in range(1 << n):
        out[s] = function_closure(np.int64(s), n, fun_arity, fun_off, fun_data)
    return out


def mask_of(elems) -> int:
    m = 0
    for x in elems:
        m |= 1 << x
    return m


def elems_of(mask: int) -> frozenset:
    out = []
    x = 0
    mask = int(mask)
    while mask:
        if mask & 1:
            out.append(x)
        mask >>= 1
        x += 1
    return frozenset(out)
