"""Corpus files: one JSON document per structure.

A document has keys ``vocab`` (``{"relations": [[name, arity], ...],
"functions": [[name, arity], ...]}``), ``size``, ``rels`` (name -> list of
tuples) and ``funs`` (name -> list of ``[args..., value]`` rows covering
every argument tuple exactly once).  A corpus is a ``.jsonl`` file, a
``.json`` file holding one document or a list of them, or a directory of
such files read in name order.
"""
from __future__ import annotations

import itertools
import json
from pathlib import Path
from typing import Iterable

from .structures import FiniteStructure, StructureError, Vocabulary


class CorpusError(ValueError):
    """Malformed corpus document; the message starts with its position."""

    def __init__(self, where: str, message: str):
        self.where = where
        super().__init__(f"{where}: {message}")


def _int(v, where: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise CorpusError(where, f"expected an integer, got {v!r}")
    return v


def _vocab(doc, where: str) -> Vocabulary:
    if not isinstance(doc, dict):
        raise CorpusError(where, "vocab must be an object")
    parts = []
    for key in ("relations", "functions"):
        items = doc.get(key, [])
        if not isinstance(items, list):
            raise CorpusError(f"{where}.{key}", "expected a list of [name, arity]")
        out = []
        for i, item in enumerate(items):
            if not (isinstance(item, list) and len(item) == 2 and isinstance(item[0], str)):
                raise CorpusError(f"{where}.{key}[{i}]", "expected [name, arity]")
            arity = _int(item[1], f"{where}.{key}[{i}]")
            if arity < 0:
                raise CorpusError(f"{where}.{key}[{i}]", "arity must be non-negative")
            out.append((item[0], arity))
        parts.append(tuple(out))
    try:
        return Vocabulary(*parts)
    except (StructureError, ValueError) as exc:
        raise CorpusError(where, str(exc)) from None


def structure_from_doc(doc, where: str = "<doc>") -> FiniteStructure:
    if not isinstance(doc, dict):
        raise CorpusError(where, "document must be an object")
    for key in ("vocab", "size"):
        if key not in doc:
            raise CorpusError(where, f"missing key {key!r}")
    vocab = _vocab(doc["vocab"], f"{where}.vocab")
    size = _int(doc["size"], f"{where}.size")
    if size < 0:
        raise CorpusError(f"{where}.size", "size must be non-negative")

    def elem(v, pos):
        v = _int(v, pos)
        if not 0 <= v < size:
            raise CorpusError(pos, f"element {v} outside universe of size {size}")
        return v

    rels_doc = doc.get("rels", {})
    funs_doc = doc.get("funs", {})
    if not isinstance(rels_doc, dict) or not isinstance(funs_doc, dict):
        raise CorpusError(where, "rels and funs must be objects")
    rels = {}
    arities = dict(vocab.relations)
    for name, rows in rels_doc.items():
        pos = f"{where}.rels.{name}"
        if name not in arities:
            raise CorpusError(pos, "unknown relation symbol")
        if not isinstance(rows, list):
            raise CorpusError(pos, "expected a list of tuples")
        tuples = []
        for i, t in enumerate(rows):
            if not isinstance(t, list) or len(t) != arities[name]:
                raise CorpusError(f"{pos}[{i}]", f"expected a tuple of length {arities[name]}")
            tuples.append(tuple(elem(x, f"{pos}[{i}]") for x in t))
        rels[name] = tuples
    funs = {}
    farities = dict(vocab.functions)
    for name in funs_doc:
        if name not in farities:
            raise CorpusError(f"{where}.funs.{name}", "unknown function symbol")
    for name, k in vocab.functions:
        pos = f"{where}.funs.{name}"
        rows = funs_doc.get(name)
        if not isinstance(rows, list):
            raise CorpusError(pos, "missing function table")
        table: dict = {}
        for i, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != k + 1:
                raise CorpusError(f"{pos}[{i}]", f"expected a row of length {k + 1}")
            args = tuple(elem(x, f"{pos}[{i}]") for x in row[:k])
            if args in table:
                raise CorpusError(f"{pos}[{i}]", f"duplicate row for arguments {list(args)}")
            table[args] = elem(row[k], f"{pos}[{i}]")
        missing = [a for a in itertools.product(range(size), repeat=k) if a not in table]
        if missing:
            raise CorpusError(pos, f"table is not total; no row for arguments {list(missing[0])}")
        funs[name] = table
    if size == 0 and vocab.has_constants:
        raise CorpusError(where, "empty universe with constants")
    try:
        return FiniteStructure.build(vocab, size, rels, funs)
    except StructureError as exc:
        raise CorpusError(where, str(exc)) from None


def structure_to_doc(m: FiniteStructure) -> dict:
    return {
        "vocab": m.vocab.to_dict(),
        "size": m.size,
        "rels": {name: [list(t) for t in table] for (name, _), table in zip(m.vocab.relations, m.rels)},
        "funs": {name: [list(args) + [v] for args, v in m.fun_rows(i)]
                 for i, (name, _) in enumerate(m.vocab.functions)},
    }


def dumps(m: FiniteStructure) -> str:
    return json.dumps(structure_to_doc(m), sort_keys=True, separators=(",", ":"))


def _parse_file(path: Path) -> list[tuple[str, FiniteStructure]]:
    text = path.read_text()
    out = []
    if path.suffix == ".jsonl":
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(where, f"invalid JSON ({exc.msg} at column {exc.colno})") from None
            out.append((f"{path.name}#{len(out)}", structure_from_doc(doc, where)))
        return out
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"{path}:{exc.lineno}", f"invalid JSON ({exc.msg} at column {exc.colno})") from None
    docs = doc if isinstance(doc, list) else [doc]
    for i, d in enumerate(docs):
        out.append((f"{path.name}#{i}", structure_from_doc(d, f"{path}[{i}]")))
    return out


def parse_corpus(path: str | Path) -> list[tuple[str, FiniteStructure]]:
    """``(structure_id, structure)`` pairs; raises ``OSError`` or :class:`CorpusError`."""
    path = Path(path)
    if path.is_dir():
        out = []
        for p in sorted(path.iterdir()):
            if p.suffix in (".json", ".jsonl"):
                out.extend(_parse_file(p))
        return out
    return _parse_file(path)


def emit_corpus(structures: Iterable[FiniteStructure], path: str | Path) -> None:
    """Write ``.jsonl`` (one document per line) or a ``.json`` list."""
    path = Path(path)
    structures = list(structures)
    if path.suffix == ".jsonl":
        path.write_text("".join(dumps(m) + "\n" for m in structures))
    else:
        path.write_text(json.dumps([structure_to_doc(m) for m in structures], sort_keys=True, indent=1) + "\n")


def parse_locator(spec: str) -> tuple[Path, int, tuple[int, ...]]:
    """``file[@index]#i,j,...`` -> (path, structure index, tuple)."""
    if "#" not in spec:
        raise ValueError(f"expected file#tuple, got {spec!r}")
    head, tup = spec.rsplit("#", 1)
    index = 0
    if "@" in head:
        head, idx = head.rsplit("@", 1)
        index = int(idx)
    return Path(head), index, parse_indices(tup)


def parse_indices(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(int(x) for x in text.split(","))
