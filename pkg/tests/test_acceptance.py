"""Acceptance criteria 1-9, one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines inline;
they are also echoed past pytest's capture.
"""
from __future__ import annotations

import filecmp
import time

import pytest

from aeclab.aec import audit_closure_oracle, audit_intersections, audit_transport
from aeclab.catalog import full_catalog, get_entry
from aeclab.galois import TypeLocator, audit_multiuniversal, audit_type_machinery, canonical_certificate
from aeclab.isolation import audit_isolation
from aeclab.morley import CompletenessViolation, compactness_chain, qf_type
from aeclab.shortness import audit_shortness
from aeclab.structures import make_graph
from aeclab.suite import SuiteConfig, chain_scenarios, run_suite, run_unit

LIMIT_INTERSECTIONS = 120.0
LIMIT_CLOSURE_ORACLE = 300.0
LIMIT_SHORTNESS = 600.0


@pytest.fixture
def verdict(capsys):
    def emit(number: int, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} {detail}")
    return emit


def positive_entries():
    return [e for e in full_catalog().values() if not e.is_control]


def control_entries():
    return [e for e in full_catalog().values() if e.is_control]


def test_criterion_1_intersections(verdict):
    t0 = time.perf_counter()
    notes, ok = [], True
    for e in positive_entries():
        corpus = list(e.members(e.exhaustive_bound))
        rep = audit_intersections(e.klass, corpus)
        ok &= rep.passed and rep.checked > 0
        notes.append(f"{e.name}:{len(corpus)}/{len(rep.violations)}")
    for name in ("CG", "EQ3", "US1"):
        ok &= get_entry(name).exhaustive_bound >= 4
    for e in control_entries():
        corpus = list(e.members(e.exhaustive_bound))
        audits = {"intersections": audit_intersections, "transport": audit_transport}
        rep = audits[next(iter(e.must_fail))](e.klass, corpus)
        witness = rep.violations[0] if rep.violations else None
        ok &= witness is not None
        notes.append(f"{e.name}:witness={witness.structure_id + str(list(witness.subset)) if witness else None}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed <= LIMIT_INTERSECTIONS
    verdict(1, ok, f"{elapsed:.1f}s " + " ".join(notes))
    assert ok


def test_criterion_2_closure_oracle(verdict):
    t0 = time.perf_counter()
    notes, ok = [], True
    for e in full_catalog().values():
        if e.klass.fast_closure is None:
            continue
        corpus = list(e.iso_members(7))
        rep = audit_closure_oracle(e.klass, corpus)
        ok &= rep.passed and rep.checked > 0
        notes.append(f"{e.name}:{rep.checked}/{len(rep.violations)}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed <= LIMIT_CLOSURE_ORACLE
    verdict(2, ok, f"{elapsed:.1f}s " + " ".join(notes))
    assert ok


def test_criterion_3_type_machinery(verdict):
    notes, ok = [], True
    for e in positive_entries():
        rep = audit_type_machinery(e.klass, e.iso_members(5), max_tuple=2)
        ok &= rep.passed and rep.stats["orbit_checks"] > 0
        notes.append(f"{e.name}:{rep.checked}/{len(rep.violations)}")
    verdict(3, ok, " ".join(notes))
    assert ok


def test_criterion_4_eta_hierarchy(verdict):
    us1, eq3 = get_entry("US1"), get_entry("EQ3")
    us_corpus = us1.iso_members(us1.exhaustive_bound)
    eq_corpus = eq3.iso_members(eq3.exhaustive_bound)
    us2 = audit_multiuniversal(us1.klass, us_corpus, 2)
    eq3_ok = audit_multiuniversal(eq3.klass, eq_corpus, 3)
    eq2 = audit_multiuniversal(eq3.klass, eq_corpus, 2)
    ok = us2.passed and eq3_ok.passed and len(eq2.violations) >= 1
    verdict(4, ok, f"US1@2 violations={len(us2.violations)} EQ3@3 violations={len(eq3_ok.violations)} "
                   f"EQ3@2 violations={len(eq2.violations)}")
    assert ok


def test_criterion_5_shortness(verdict):
    t0 = time.perf_counter()
    notes, ok = [], True
    for e in positive_entries():
        rep = audit_shortness(e.klass, e.iso_members(5), max_tuple=3, cross_sample=20000, seed=0)
        ok &= rep.passed
        s = rep.stats
        notes.append(f"{e.name}:same={s['same_type_pairs']} cross={s['cross_type_sampled']}/{s['cross_type_pairs']}"
                     f" violations={len(rep.violations)}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed <= LIMIT_SHORTNESS
    verdict(5, ok, f"{elapsed:.1f}s " + " ".join(notes))
    assert ok


def test_criterion_6_isolation(verdict):
    notes, ok = [], True
    for e in positive_entries():
        rep = audit_isolation(e.klass, e.iso_members(5), max_params=6, max_tuple=2)
        ok &= rep.passed and rep.checked > 0
        notes.append(f"{e.name}:{rep.checked - len(rep.violations)}/{rep.checked}")
    verdict(6, ok, " ".join(notes))
    assert ok


def test_criterion_7_morleyization(verdict):
    cfg = SuiteConfig()
    expanded = run_unit("morleyization", "CG", cfg)
    raw = run_unit("morleyization", "CG-raw", cfg)
    k = get_entry("CG").klass
    path, point = make_graph(3, [(0, 1), (1, 2)]), make_graph(1, [])
    same_qf = qf_type(k, path, (), (0,)) == qf_type(k, point, (), (0,))
    same_galois = (canonical_certificate(k, TypeLocator(path, (), (0,)))
                   == canonical_certificate(k, TypeLocator(point, (), (0,))))
    ok = expanded.ok and raw.ok and same_qf and not same_galois
    verdict(7, ok, "; ".join(expanded.lines + raw.lines)
            + f"; endpoint-vs-isolated qf_equal={same_qf} galois_equal={same_galois}")
    assert ok


def test_criterion_8_compactness_chain(verdict):
    notes, ok = [], True
    for name, (cls, oracle, expect) in chain_scenarios().items():
        k = get_entry(cls).klass
        try:
            res = compactness_chain(k, oracle, 3)
        except CompletenessViolation as exc:
            ok &= not expect and tuple(exc.index_set) == (0, 1)
            notes.append(f"{name}:violation I={list(exc.index_set)}")
            continue
        ok &= expect and res.matches and len(res.system.structures) == 3
        res.system.check_coherence(k)
        notes.append(f"{name}:match={res.matches}")
    verdict(8, ok, " ".join(notes))
    assert ok


def test_criterion_9_determinism(verdict, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    r1 = run_suite("all", SuiteConfig(seed=0), a)
    r2 = run_suite("all", SuiteConfig(seed=0), b)
    files = sorted(p.name for p in a.iterdir())
    same = sorted(p.name for p in b.iterdir()) == files
    match, mismatch, errors = filecmp.cmpfiles(a, b, files, shallow=False)
    ok = same and not mismatch and not errors and r1.exit_code == r2.exit_code == 0
    verdict(9, ok, f"files={len(files)} identical={len(match)} exit={r1.exit_code},{r2.exit_code}")
    assert ok
