import json
import subprocess
import sys

import pytest

from aeclab.cli import main
from aeclab.corpus import emit_corpus, structure_to_doc
from aeclab.structures import make_graph, make_unary


@pytest.fixture
def files(tmp_path, cycle4, path3):
    emit_corpus([cycle4, path3], tmp_path / "g.jsonl")
    k5 = make_graph(5, [(i, j) for i in range(5) for j in range(i + 1, 5)])
    emit_corpus([k5], tmp_path / "k5.json")
    return tmp_path


def run(argv, capsys):
    code = main(argv)
    return code, capsys.readouterr()


def test_classes(capsys):
    code, out = run(["classes"], capsys)
    assert code == 0 and "NOI" in out.out and "control" in out.out


def test_suite_control_only(tmp_path, capsys):
    code, out = run(["suite", "intersections", "--class", "NOI", "--out", str(tmp_path / "r")], capsys)
    assert code == 0
    assert (tmp_path / "r" / "intersections.jsonl").exists() and (tmp_path / "r" / "summary.txt").exists()


def test_suite_corrupt_corpus(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"vocab": {"relations": [["E", 2]]}, "size": 2, "rels": {"E": [[0, 2]]}}\n')
    code, out = run(["suite", "intersections", "--class", "CG", "--corpus", str(bad)], capsys)
    assert code == 3 and "bad.jsonl:1" in out.err


def test_missing_corpus_file(tmp_path, capsys):
    code, _ = run(["suite", "intersections", "--class", "CG", "--corpus", str(tmp_path / "none.jsonl")], capsys)
    assert code == 3


def test_unknown_class(capsys):
    code, out = run(["audit-multi", "--class", "XX"], capsys)
    assert code == 2


def test_unknown_suite(capsys):
    with pytest.raises(SystemExit) as info:
        main(["suite", "nope"])
    assert info.value.code == 2


def test_type_eq(files, capsys):
    g = files / "g.jsonl"
    code, out = run(["type-eq", "--class", "CG", "--left", f"{g}@1#0", "--right", f"{g}@1#2"], capsys)
    assert code == 0 and json.loads(out.out)["equal"] is True
    code, out = run(["type-eq", "--class", "CG", "--left", f"{g}@1#0", "--right", f"{g}@1#1"], capsys)
    assert json.loads(out.out)["equal"] is False


def test_algebraic(files, capsys):
    g = files / "g.jsonl"
    code, out = run(["algebraic", "--class", "CG", "--model", f"{g}", "--params", "0", "--tuple", "1",
                     "--eta", "3"], capsys)
    doc = json.loads(out.out)
    assert code == 0 and doc["count"] == 2 and doc["algebraic"]
    code, _ = run(["algebraic", "--class", "CG", "--model", f"{g}", "--params", "0", "--tuple", "1"], capsys)
    assert code == 2


def test_audit_multi_exit_codes(capsys):
    assert run(["audit-multi", "--class", "EQ3", "--eta", "3"], capsys)[0] == 0
    assert run(["audit-multi", "--class", "EQ3", "--eta", "2"], capsys)[0] == 1


def test_glue(files, capsys):
    g = files / "g.jsonl"
    code, out = run(["glue", "--class", "CG", "--left", f"{g}@0#0", "--right", f"{g}@0#0", "--all"], capsys)
    doc = json.loads(out.out)
    assert code == 0 and len(doc["maps"]) == 2 and doc["maps"][0]["0"] == 0
    code, out = run(["glue", "--class", "CG", "--left", f"{g}@0#0,1", "--right", f"{g}@0#0,2"], capsys)
    assert code == 1 and json.loads(out.out)["failure"]["restriction"] == [0, 1]


def test_glue_budget(files, capsys):
    k5 = files / "k5.json"
    code, _ = run(["glue", "--class", "CG", "--left", f"{k5}#0", "--right", f"{k5}#0", "--all", "--budget", "2"],
                  capsys)
    assert code == 4


def test_isolate(files, capsys):
    g = files / "g.jsonl"
    code, out = run(["isolate", "--class", "CG", "--model", f"{g}", "--params", "0,1", "--tuple", "3"], capsys)
    doc = json.loads(out.out)
    assert code == 0 and doc["A1"] == [0, 1] and doc["verified"]


def test_isolate_out_of_closure(tmp_path, capsys):
    emit_corpus([make_graph(2, [])], tmp_path / "e.jsonl")
    code, _ = run(["isolate", "--class", "CG", "--model", str(tmp_path / "e.jsonl"), "--params", "0",
                   "--tuple", "1"], capsys)
    assert code == 2


def test_morleyize(files, capsys):
    out_dir = files / "m"
    code, _ = run(["morleyize", "--class", "CG", "--corpus", str(files / "g.jsonl"), "--arity", "1",
                   "--out", str(out_dir)], capsys)
    assert code == 0
    symbols = json.loads((out_dir / "symbols.json").read_text())
    assert [s["symbol"] for s in symbols] == ["R1_0", "R1_1", "R1_2"]


def test_chain_script(tmp_path, capsys):
    script = [{"indices": list(range(j)), "witness": structure_to_doc(make_unary([1, 1])), "tuple": [0] * j}
              for j in range(1, 4)]
    p = tmp_path / "o.json"
    p.write_text(json.dumps(script))
    code, out = run(["chain", "--class", "US1", "--type", str(p), "--depth", "3"], capsys)
    doc = json.loads(out.out)
    assert code == 0 and doc["ok"] and doc["tuples"][-1] == [0, 0, 0]


def test_chain_incompatible(tmp_path, capsys):
    edge, point = make_graph(2, [(0, 1)]), make_graph(3, [(0, 1)])
    script = [{"indices": [0], "witness": structure_to_doc(edge), "tuple": [0]},
              {"indices": [0, 1], "witness": structure_to_doc(point), "tuple": [2, 0]}]
    p = tmp_path / "o.json"
    p.write_text(json.dumps(script))
    code, out = run(["chain", "--class", "CG", "--type", str(p), "--depth", "2"], capsys)
    assert code == 1 and json.loads(out.out)["completeness_violation"] == [0, 1]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "aeclab", "classes"], capture_output=True, text=True)
    assert proc.returncode == 0 and "US1" in proc.stdout
