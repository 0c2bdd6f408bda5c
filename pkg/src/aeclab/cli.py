"""Command line front end (``aeclab``).

Exit codes: 0 pass, 1 violations (or a failed gluing/chain), 2 usage,
3 I/O or corpus parse error, 4 budget exceeded.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .catalog import full_catalog, get_entry
from .corpus import CorpusError, emit_corpus, parse_corpus, parse_indices, parse_locator
from .galois import OutOfClosure, ParameterMismatch, TypeLocator, audit_multiuniversal, canonical_certificate, \
    realizations, type_equal
from .isolation import IsolationContradiction, find_isolating_base, isolates
from .morley import ChainOracle, CompletenessViolation, AmalgamationFailure, IncompleteCatalog, TypeCatalog, \
    compactness_chain, morleyize
from .shortness import GlueBudgetExceeded, GluingProblem, glue
from .structures import BudgetExceeded, FiniteStructure
from .suite import EXIT_BUDGET, EXIT_IO, EXIT_OK, EXIT_USAGE, EXIT_VIOLATIONS, SUITES, SuiteConfig, UnknownSuite, \
    run_suite


class UsageError(ValueError):
    pass


def _emit(obj, out: str | None) -> None:
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    sys.stdout.write(text)


def _load_one(spec: str) -> FiniteStructure:
    """``file[@index]`` -> structure."""
    path, index = spec, 0
    if "@" in spec:
        path, idx = spec.rsplit("@", 1)
        index = int(idx)
    structs = parse_corpus(path)
    if not 0 <= index < len(structs):
        raise UsageError(f"{path} holds {len(structs)} structures; index {index} is out of range")
    return structs[index][1]


def _load_located(spec: str) -> tuple[FiniteStructure, tuple[int, ...]]:
    path, index, tup = parse_locator(spec)
    return _load_one(f"{path}@{index}"), tup


def _klass(name: str | None):
    if not name:
        raise UsageError("--class is required")
    try:
        return get_entry(name)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None


# ---------------------------------------------------------------- commands

def cmd_classes(args) -> int:
    rows = []
    for name, e in full_catalog().items():
        rows.append({
            "name": name,
            "vocab": e.klass.vocab.to_dict(),
            "exhaustive_bound": e.exhaustive_bound,
            "expected_eta": e.expected_eta,
            "control_for": list(e.must_fail),
            "provenance": e.provenance,
            "docs": e.klass.docs,
        })
    if args.out:
        Path(args.out).write_text(json.dumps(rows, sort_keys=True, indent=2) + "\n")
    for r in rows:
        kind = f"control (must fail {', '.join(r['control_for'])})" if r["control_for"] else "positive"
        eta = r["expected_eta"] if r["expected_eta"] is not None else "-"
        print(f"{r['name']:<8} {kind:<34} bound={r['exhaustive_bound']} eta={eta}")
        print(f"         {r['docs']}")
    return EXIT_OK


def cmd_suite(args) -> int:
    corpus = tuple(parse_corpus(args.corpus)) if args.corpus else None
    cfg = SuiteConfig(
        classes=tuple(args.klass) if args.klass else None,
        corpus=corpus,
        max_size=args.max_size,
        eta=args.eta,
        budget=args.budget,
        seed=args.seed,
        jobs=args.jobs,
    )
    for name in cfg.classes or ():
        _klass(name)
    print(f"seed={args.seed}", file=sys.stderr)
    res = run_suite(args.name, cfg, args.out)
    sys.stdout.write(res.summary())
    return res.exit_code


def cmd_corpus(args) -> int:
    entry = _klass(args.klass[0] if args.klass else None)
    size = args.max_size if args.max_size is not None else entry.exhaustive_bound
    structs = entry.iso_members(size) if args.iso else list(entry.members(size))
    if not args.out:
        raise UsageError("--out is required")
    emit_corpus(structs, args.out)
    print(f"wrote {len(structs)} structures to {args.out}")
    return EXIT_OK


def cmd_type_eq(args) -> int:
    k = _klass(args.klass[0] if args.klass else None).klass
    m1, t1 = _load_located(args.left)
    m2, t2 = _load_located(args.right)
    params = parse_indices(args.params)
    l1, l2 = TypeLocator(m1, params, t1), TypeLocator(m2, params, t2)
    eq = type_equal(k, l1, l2)
    _emit({
        "equal": eq,
        "left": canonical_certificate(k, l1).to_text(),
        "right": canonical_certificate(k, l2).to_text(),
    }, args.out)
    return EXIT_OK


def cmd_algebraic(args) -> int:
    k = _klass(args.klass[0] if args.klass else None).klass
    m = _load_one(args.model)
    params, tup = parse_indices(args.params), parse_indices(args.tuple)
    if args.eta is None:
        raise UsageError("--eta is required")
    loc = TypeLocator(m, params, tup)
    if not set(tup) <= k.closure(m, params):
        raise OutOfClosure(f"tuple {tup} is outside cl({sorted(params)})")
    reals = realizations(k, m, params, canonical_certificate(k, loc))
    _emit({"realizations": [list(r) for r in reals], "count": len(reals), "eta": args.eta,
           "algebraic": len(reals) < args.eta}, args.out)
    return EXIT_OK


def cmd_audit_multi(args) -> int:
    entry = _klass(args.klass[0] if args.klass else None)
    eta = args.eta if args.eta is not None else entry.expected_eta
    if eta is None:
        raise UsageError(f"{entry.name} has no expected eta; pass --eta")
    if args.corpus:
        pairs = parse_corpus(args.corpus)
        corpus, ids = [m for _, m in pairs], [i for i, _ in pairs]
    else:
        size = args.max_size if args.max_size is not None else entry.exhaustive_bound
        corpus = entry.iso_members(size)
        ids = [f"{entry.name}/R{i}" for i in range(len(corpus))]
    rep = audit_multiuniversal(entry.klass, corpus, eta, ids, seed=args.seed)
    _emit({"checked": rep.checked, "stats": rep.stats, "violations": [r.to_dict() for r in rep.violations],
           "seed": args.seed}, args.out)
    return EXIT_OK if rep.passed else EXIT_VIOLATIONS


def cmd_glue(args) -> int:
    k = _klass(args.klass[0] if args.klass else None).klass
    m1, t1 = _load_located(args.left)
    m2, t2 = _load_located(args.right)
    res = glue(GluingProblem(k, m1, m2, t1, t2), all_solutions=args.all, budget=args.budget)
    doc = {
        "glued": res.success,
        "maps": [{str(x): y for x, y in f.pairs} for f in res.maps],
        "profile": res.profile,
        "stages": [sorted(b) for b in res.stages],
    }
    if res.failure is not None:
        doc["failure"] = {"stage": res.failure.stage,
                          "restriction": None if res.failure.restriction is None else list(res.failure.restriction)}
    _emit(doc, args.out)
    return EXIT_OK if res.success else EXIT_VIOLATIONS


def cmd_isolate(args) -> int:
    k = _klass(args.klass[0] if args.klass else None).klass
    m = _load_one(args.model)
    params, tup = parse_indices(args.params), parse_indices(args.tuple)
    res = find_isolating_base(k, m, params, tup)
    _emit({
        "A0": sorted(res.base),
        "A1": sorted(res.isolating),
        "added": res.added,
        "realizations": res.table(),
        "verified": isolates(k, m, params, res.isolating, tup),
    }, args.out)
    return EXIT_OK


def cmd_morleyize(args) -> int:
    entry = _klass(args.klass[0] if args.klass else None)
    if not args.corpus or not args.out:
        raise UsageError("--corpus and --out are required")
    pairs = parse_corpus(args.corpus)
    cat = TypeCatalog.build(entry.klass, [m for _, m in pairs], args.arity)
    mor = morleyize(entry.klass, cat)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    emit_corpus(mor.expansions, out / "expanded.jsonl")
    (out / "symbols.json").write_text(json.dumps(cat.symbol_table(), sort_keys=True, indent=2) + "\n")
    print(f"{len(cat.names)} symbols, {len(mor.expansions)} structures written to {out}")
    return EXIT_OK


def cmd_chain(args) -> int:
    k = _klass(args.klass[0] if args.klass else None).klass
    oracle = ChainOracle.load(args.type)
    try:
        res = compactness_chain(k, oracle, args.depth)
    except CompletenessViolation as exc:
        _emit({"ok": False, "completeness_violation": list(exc.index_set), "against": list(exc.other),
               "message": str(exc)}, args.out)
        return EXIT_VIOLATIONS
    except AmalgamationFailure as exc:
        _emit({"ok": False, "amalgamation_failure": str(exc)}, args.out)
        return EXIT_VIOLATIONS
    _emit({
        "ok": res.matches,
        "sizes": [s.size for s in res.system.structures],
        "tuples": [list(t) for t in res.system.tuples],
        "certificate": res.certificate.to_text(),
    }, args.out)
    return EXIT_OK if res.matches else EXIT_VIOLATIONS


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--class", dest="klass", action="append", help="catalog class name (repeatable for suite)")
    common.add_argument("--corpus", help="corpus file or directory")
    common.add_argument("--max-size", type=int, help="largest structure size to enumerate")
    common.add_argument("--eta", type=int, help="algebraicity bound")
    common.add_argument("--budget", type=int, help="search budget")
    common.add_argument("--seed", type=int, default=0, help="seed for sampled audits (default 0)")
    common.add_argument("--out", help="output file or directory")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")

    p = argparse.ArgumentParser(prog="aeclab", description="Finite-scale audits of classes with intersections.")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("classes", parents=[common], help="list catalog classes").set_defaults(fn=cmd_classes)

    s = sub.add_parser("suite", parents=[common], help="run an audit suite")
    s.add_argument("name", choices=SUITES + ("all",))
    s.set_defaults(fn=cmd_suite)

    s = sub.add_parser("corpus", parents=[common], help="write the enumerated corpus of a class")
    s.add_argument("--iso", action="store_true", help="one structure per isomorphism type")
    s.set_defaults(fn=cmd_corpus)

    s = sub.add_parser("type-eq", parents=[common], help="compare two Galois types")
    s.add_argument("--left", required=True, help="file[@i]#tuple")
    s.add_argument("--right", required=True, help="file[@i]#tuple")
    s.add_argument("--params", default="", help="comma-separated parameter set")
    s.set_defaults(fn=cmd_type_eq)

    s = sub.add_parser("algebraic", parents=[common], help="count realizations inside cl(A)")
    s.add_argument("--model", required=True)
    s.add_argument("--params", default="")
    s.add_argument("--tuple", required=True)
    s.set_defaults(fn=cmd_algebraic)

    sub.add_parser("audit-multi", parents=[common], help="multiuniversality audit").set_defaults(fn=cmd_audit_multi)

    s = sub.add_parser("glue", parents=[common], help="glue two tuples into an isomorphism of closures")
    s.add_argument("--left", required=True, help="file[@i]#tuple")
    s.add_argument("--right", required=True, help="file[@i]#tuple")
    s.add_argument("--all", action="store_true", help="enumerate every gluing")
    s.set_defaults(fn=cmd_glue)

    s = sub.add_parser("isolate", parents=[common], help="find a finite isolating parameter set")
    s.add_argument("--model", required=True)
    s.add_argument("--params", required=True)
    s.add_argument("--tuple", required=True)
    s.set_defaults(fn=cmd_isolate)

    s = sub.add_parser("morleyize", parents=[common], help="expand a corpus by type relations")
    s.add_argument("--arity", type=int, default=2)
    s.set_defaults(fn=cmd_morleyize)

    s = sub.add_parser("chain", parents=[common], help="build a chain from an oracle script")
    s.add_argument("--type", required=True, help="oracle script (JSON)")
    s.add_argument("--depth", type=int, required=True)
    s.set_defaults(fn=cmd_chain)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (OSError, CorpusError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (BudgetExceeded, GlueBudgetExceeded) as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except IsolationContradiction as exc:
        print(f"violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATIONS
    except (UsageError, UnknownSuite, ParameterMismatch, OutOfClosure, IncompleteCatalog, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
