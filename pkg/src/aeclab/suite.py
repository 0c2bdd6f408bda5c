"""Audit suites over the catalog, with deterministic reports.

A suite is split into independent units (one per class, or one per
scripted scenario).  Units may run in a process pool; results are
assembled in unit order and records are sorted before writing, so the
report bytes do not depend on scheduling.
"""
from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .aec import AuditRecord, AuditReport, audit_intersections, audit_order_axioms, audit_transport
from .catalog import CatalogEntry, full_catalog, get_entry
from .galois import audit_multiuniversal
from .isolation import audit_isolation
from .morley import (ChainOracle, CompletenessViolation, TypeCatalog, check_model_complete,
                     check_qf_equals_galois, compactness_chain, morleyize)
from .shortness import audit_shortness
from .structures import FiniteStructure, make_equivalence, make_graph, make_unary

SUITES = ("intersections", "multiuniversality", "shortness", "isolation", "morleyization", "chain")

# PC2 has no nonempty members below size 5
SHORTNESS_SIZE = {"PC2": 5}

EXIT_OK, EXIT_VIOLATIONS, EXIT_USAGE, EXIT_IO, EXIT_BUDGET = 0, 1, 2, 3, 4


class UnknownSuite(ValueError):
    pass


@dataclass(frozen=True)
class SuiteConfig:
    classes: tuple[str, ...] | None = None
    corpus: tuple[tuple[str, FiniteStructure], ...] | None = None
    max_size: int | None = None
    eta: int | None = None
    budget: int | None = None
    seed: int = 0
    jobs: int = 1
    max_tuple: int | None = None


@dataclass
class UnitResult:
    suite: str
    unit: str
    ok: bool
    control: bool
    lines: list[str]
    records: list[dict] = field(default_factory=list)


# ---------------------------------------------------------------- corpora

def _size(entry: CatalogEntry, cfg: SuiteConfig, default: int) -> int:
    size = min(entry.exhaustive_bound, default)
    return size if cfg.max_size is None else min(size, cfg.max_size)


def _labeled(entry: CatalogEntry, cfg: SuiteConfig, default: int):
    if cfg.corpus is not None:
        return [m for _, m in cfg.corpus], [sid for sid, _ in cfg.corpus]
    corpus = list(entry.members(_size(entry, cfg, default)))
    return corpus, [f"{entry.name}/L{i}" for i in range(len(corpus))]


def _reps(entry: CatalogEntry, cfg: SuiteConfig, default: int):
    if cfg.corpus is not None:
        return [m for _, m in cfg.corpus], [sid for sid, _ in cfg.corpus]
    corpus = list(entry.iso_members(_size(entry, cfg, default)))
    return corpus, [f"{entry.name}/R{i}" for i in range(len(corpus))]


def _records(report: AuditReport, control: bool) -> list[dict]:
    out = []
    for r in report.records:
        d = r.to_dict()
        d["suite_check"] = report.name
        if control:
            d["control"] = True
        out.append(d)
    return out


def _positive(suite: str, entry: CatalogEntry, reports: list[AuditReport], extra: list[str] = ()) -> UnitResult:
    lines = []
    records = []
    ok = True
    for rep in reports:
        lines.append(f"{rep.name}: checked={rep.checked} violations={len(rep.violations)}"
                     + (f" stats={json.dumps(rep.stats, sort_keys=True)}" if rep.stats else ""))
        records += _records(rep, False)
        ok &= rep.passed
    lines += list(extra)
    return UnitResult(suite, entry.name, ok, False, lines, records)


def _control(suite: str, entry: CatalogEntry, reports: list[AuditReport]) -> UnitResult:
    lines = []
    records = []
    ok = True
    for rep in reports:
        designated = rep.name in entry.must_fail
        failed = not rep.passed
        if designated:
            ok &= failed
        first = rep.violations[0] if failed else None
        lines.append(f"{rep.name}: checked={rep.checked} violations={len(rep.violations)}"
                     + (" (designated control)" if designated else "")
                     + (f" first={first.structure_id}:{list(first.subset)}" if first else ""))
        records += _records(rep, True)
    return UnitResult(suite, entry.name, ok, True, lines, records)


# ---------------------------------------------------------------- units

def _unit_intersections(entry: CatalogEntry, cfg: SuiteConfig) -> UnitResult:
    corpus, ids = _labeled(entry, cfg, entry.exhaustive_bound)
    k = entry.klass
    reports = [
        audit_intersections(k, corpus, ids, seed=cfg.seed),
        audit_transport(k, corpus, ids),
        audit_order_axioms(k, corpus, ids),
    ]
    if entry.is_control:
        return _control("intersections", entry, reports)
    return _positive("intersections", entry, reports)


def _unit_multi(entry: CatalogEntry, cfg: SuiteConfig) -> UnitResult:
    corpus, ids = _reps(entry, cfg, entry.exhaustive_bound)
    k = entry.klass
    eta = cfg.eta if cfg.eta is not None else entry.expected_eta
    if eta is None:
        # no claimed bound: record the largest count only
        rep = audit_multiuniversal(k, corpus, 10**9, ids, seed=cfg.seed)
        rep.stats["eta"] = None
        return _positive("multiuniversality", entry, [rep])
    rep = audit_multiuniversal(k, corpus, eta, ids, seed=cfg.seed)
    extra = []
    ok_below = True
    if eta > 2 and cfg.eta is None:
        below = audit_multiuniversal(k, corpus, eta - 1, ids, seed=cfg.seed)
        ok_below = not below.passed
        extra.append(f"below eta={eta - 1}: violations={len(below.violations)} (expected > 0)")
    res = _positive("multiuniversality", entry, [rep], extra)
    res.ok &= ok_below
    return res


def _unit_shortness(entry: CatalogEntry, cfg: SuiteConfig) -> UnitResult:
    corpus, ids = _reps(entry, cfg, SHORTNESS_SIZE.get(entry.name, 4))
    rep = audit_shortness(entry.klass, corpus, ids, max_tuple=cfg.max_tuple or 2,
                          cross_sample=500, seed=cfg.seed, budget=cfg.budget)
    return _positive("shortness", entry, [rep])


def _unit_isolation(entry: CatalogEntry, cfg: SuiteConfig) -> UnitResult:
    corpus, ids = _reps(entry, cfg, 5)
    rep = audit_isolation(entry.klass, corpus, ids, max_tuple=cfg.max_tuple or 1, seed=cfg.seed)
    return _positive("isolation", entry, [rep])


def _unit_morley(entry: CatalogEntry, cfg: SuiteConfig) -> UnitResult:
    corpus, ids = _labeled(entry, cfg, 4 if entry.name == "CG" else 3)
    k = entry.klass
    cat = TypeCatalog.build(k, corpus, 2)
    mor = morleyize(k, cat)
    qf = check_qf_equals_galois(mor.klass, mor.expansions, cfg.max_tuple or 2, ids)
    mc = check_model_complete(mor.klass, mor.expansions, ids)
    return _positive("morleyization", entry, [qf, mc], [f"catalog: {len(cat.names)} relation symbols"])


def _unit_raw_cg(cfg: SuiteConfig) -> UnitResult:
    k = get_entry("CG").klass
    qf = check_qf_equals_galois(k, [make_graph(2, [(0, 1)]), make_graph(1, [])], 1, ["edge", "point"], max_params=0)
    mc = check_model_complete(k, [make_graph(3, [(0, 1), (1, 2)])], ["path3"])
    ok = not qf.passed and not mc.passed
    lines = [f"raw qf-equals-galois: violations={len(qf.violations)} (expected > 0)",
             f"raw model-complete: violations={len(mc.violations)} (expected > 0)"]
    return UnitResult("morleyization", "CG-raw", ok, True, lines, _records(qf, True) + _records(mc, True))


def chain_scenarios() -> dict[str, tuple[str, ChainOracle, bool]]:
    """Scripted oracles: name -> (class, oracle, expected to succeed)."""

    def cg(idx):
        n = len(idx)
        return make_graph(2 * n, [(2 * i, 2 * i + 1) for i in range(n)]), tuple(2 * i for i in range(n))

    def us(idx):
        return make_unary([1, 1]), tuple(0 for _ in idx)

    def eq(idx):
        n = len(idx)
        return make_equivalence(3 * n, [range(3 * i, 3 * i + 3) for i in range(n)]), tuple(3 * i for i in range(n))

    def bad(idx):
        if len(idx) == 1:
            return make_graph(2, [(0, 1)]), (0,)
        n = len(idx)
        g = make_graph(2 * n + 1, [(2 * i, 2 * i + 1) for i in range(n)])
        # first variable now sits on an isolated vertex
        return g, (2 * n,) + tuple(2 * i for i in range(1, n))

    prefixes = [range(j) for j in range(1, 4)]
    return {
        "CG-disjoint-edges": ("CG", ChainOracle.from_function(cg, prefixes), True),
        "US1-constant": ("US1", ChainOracle.from_function(us, prefixes), True),
        "EQ3-inequivalent": ("EQ3", ChainOracle.from_function(eq, prefixes), True),
        "CG-incompatible": ("CG", ChainOracle.from_function(bad, prefixes), False),
    }


def _unit_chain(name: str, cfg: SuiteConfig, depth: int = 3) -> UnitResult:
    cls, oracle, expect = chain_scenarios()[name]
    k = get_entry(cls).klass
    try:
        res = compactness_chain(k, oracle, depth)
    except CompletenessViolation as exc:
        ok = not expect
        rec = AuditRecord(cls, name, exc.index_set, "chain", "fail", "compatible witnesses give a chain", str(exc))
        return UnitResult("chain", name, ok, not expect, [f"completeness violation at I={list(exc.index_set)}"],
                          [dict(rec.to_dict(), suite_check="chain", **({"control": True} if not expect else {}))])
    ok = expect and res.matches
    lines = [f"depth={depth} top_size={res.top.size} tuple={list(res.system.tuples[-1])} "
             f"certificate_match={res.matches}"]
    records = []
    if not res.matches:
        records.append(dict(AuditRecord(cls, name, (), "chain", "fail", "chain realizes the oracle type",
                                        "certificate mismatch").to_dict(), suite_check="chain"))
    return UnitResult("chain", name, ok, not expect, lines, records)


def _entries(cfg: SuiteConfig) -> list[CatalogEntry]:
    cat = full_catalog()
    if cfg.classes:
        return [get_entry(c) for c in cfg.classes]
    return list(cat.values())


def plan(suite: str, cfg: SuiteConfig) -> list[tuple[str, str]]:
    """Units as ``(suite, unit name)`` pairs, in report order."""
    if suite == "all":
        return [u for s in SUITES for u in plan(s, cfg)]
    if suite not in SUITES:
        raise UnknownSuite(f"unknown suite {suite!r}; choose from {', '.join(SUITES + ('all',))}")
    entries = _entries(cfg)
    if suite == "intersections":
        return [(suite, e.name) for e in entries]
    if suite == "multiuniversality":
        return [(suite, e.name) for e in entries if not e.is_control]
    if suite in ("shortness", "isolation"):
        return [(suite, e.name) for e in entries if not e.is_control]
    if suite == "morleyization":
        names = [e.name for e in entries if e.name in ("CG", "US1", "EQ3")]
        return [(suite, n) for n in names] + ([(suite, "CG-raw")] if "CG" in names else [])
    return [(suite, n) for n in chain_scenarios()
            if cfg.classes is None or chain_scenarios()[n][0] in cfg.classes]


def run_unit(suite: str, unit: str, cfg: SuiteConfig) -> UnitResult:
    if suite == "chain":
        return _unit_chain(unit, cfg)
    if suite == "morleyization" and unit == "CG-raw":
        return _unit_raw_cg(cfg)
    entry = get_entry(unit)
    fn = {
        "intersections": _unit_intersections,
        "multiuniversality": _unit_multi,
        "shortness": _unit_shortness,
        "isolation": _unit_isolation,
        "morleyization": _unit_morley,
    }[suite]
    return fn(entry, cfg)


def _run_unit_packed(args):
    return run_unit(*args)


@dataclass
class SuiteResult:
    suite: str
    units: list[UnitResult]
    seed: int

    @property
    def ok(self) -> bool:
        return all(u.ok for u in self.units)

    @property
    def exit_code(self) -> int:
        return EXIT_OK if self.ok else EXIT_VIOLATIONS

    def records(self) -> list[dict]:
        out = []
        for u in self.units:
            for r in u.records:
                out.append(dict(r, suite=u.suite, unit=u.unit))
        return sorted(out, key=lambda r: json.dumps(r, sort_keys=True))

    def summary(self) -> str:
        lines = [f"suite {self.suite} seed={self.seed}"]
        for u in self.units:
            tag = "control" if u.control else "positive"
            lines.append(f"[{'PASS' if u.ok else 'FAIL'}] {u.suite}/{u.unit} ({tag})")
            lines += [f"    {x}" for x in u.lines]
        lines.append(f"result: {'PASS' if self.ok else 'FAIL'} "
                     f"({sum(u.ok for u in self.units)}/{len(self.units)} units)")
        return "\n".join(lines) + "\n"

    def write(self, out: str | Path) -> None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / f"{self.suite}.jsonl", "w") as fh:
            for r in self.records():
                fh.write(json.dumps(r, sort_keys=True) + "\n")
        (out / "summary.txt").write_text(self.summary())


def run_suite(suite: str, cfg: SuiteConfig | None = None, out: str | Path | None = None) -> SuiteResult:
    """Run ``suite`` (one of :data:`SUITES` or ``all``); write reports to ``out`` when given."""
    cfg = cfg or SuiteConfig()
    units = plan(suite, cfg)
    if cfg.jobs > 1 and len(units) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_run_unit_packed, [(s, u, cfg) for s, u in units]))
    else:
        results = [run_unit(s, u, cfg) for s, u in units]
    res = SuiteResult(suite, results, cfg.seed)
    if out is not None:
        res.write(out)
    return res
