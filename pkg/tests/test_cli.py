from __future__ import annotations

import io
import json

import jsonschema
import pytest

from mcpp.cli import main
from mcpp.verifier import DERIVATION_SCHEMA


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(map(str, argv)), out, err)
    return code, out.getvalue(), err.getvalue()


def test_verify_node(corpus_dir):
    code, out, err = run("verify", corpus_dir / "node.mcpp")
    assert code == 0 and err == ""
    assert "refinement(N,T,dtor): pass  [AMovePred, APredDef, APredDef]" in out
    assert out.rstrip().endswith("all obligations verified")


def test_verify_failure_exit_1(corpus_dir):
    code, out, err = run("verify", corpus_dir / "fail_method_leak.mcpp")
    assert code == 1
    assert "method(A,m): fail" in out
    assert err.startswith("mcpp: ")


def test_verify_ill_formed_exit_2(corpus_dir):
    code, _, err = run("verify", corpus_dir / "mut_drop_override.mcpp")
    assert code == 2 and "override" in err


def test_parse_error_has_location(tmp_path):
    f = tmp_path / "bad.mcpp"
    f.write_text("class A {\n  field ;\n}\n")
    code, _, err = run("verify", f)
    assert code == 2
    assert f"{f}:2:" in err and "error:" in err


def test_missing_file(tmp_path):
    code, _, err = run("verify", tmp_path / "nope.mcpp")
    assert code == 2 and "no such file" in err


def test_multiple_files_take_worst_code(corpus_dir):
    code, out, _ = run("verify", corpus_dir / "leaf.mcpp", corpus_dir / "fail_ctor_post.mcpp")
    assert code == 1
    assert "leaf.mcpp: all obligations verified" in out


def test_emit_derivation_matches_schema(corpus_dir, tmp_path):
    path = tmp_path / "d.json"
    code, _, _ = run("verify", corpus_dir / "node.mcpp", "--emit-derivation", path)
    assert code == 0
    doc = json.loads(path.read_text())
    assert doc["verdict"] == "verified"
    for ob in doc["obligations"]:
        jsonschema.validate(ob["derivation"], DERIVATION_SCHEMA)


def test_emit_derivation_to_stdout_is_pure_json(corpus_dir):
    code, out, _ = run("verify", corpus_dir / "leaf.mcpp", "--emit-derivation", "-")
    assert code == 0
    assert json.loads(out)["verdict"] == "verified"


def test_run_terminates(corpus_dir):
    code, out, _ = run("run", corpus_dir / "node.mcpp")
    assert code == 0
    assert out.startswith("terminated after ")
    assert "heap: " in out


def test_run_stuck_exit_1(corpus_dir):
    code, out, err = run("run", corpus_dir / "stuck_double_delete.mcpp")
    assert code == 1
    assert "missing cted" in err


def test_run_fuel_exit_3(corpus_dir):
    code, _, err = run("run", corpus_dir / "divergent.mcpp", "--fuel", 500)
    assert code == 3 and "fuel exhausted" in err


def test_run_ill_formed_exit_2(corpus_dir):
    code, _, _ = run("run", corpus_dir / "mut_drop_override.mcpp")
    assert code == 2


def test_emit_trace_json_lines(corpus_dir):
    code, out, _ = run("run", corpus_dir / "leaf.mcpp", "--emit-trace", "-")
    assert code == 0
    rows = [json.loads(line) for line in out.splitlines()]
    assert rows and [r["step"] for r in rows] == list(range(len(rows)))
    assert all(set(r) == {"step", "rule", "depth", "detail"} for r in rows)


def test_check_proves_with_frame(corpus_dir):
    code, out, _ = run("check", corpus_dir / "node.mcpp",
                       "--pre", "x->source |-> v * dyn(x, T)", "--post", "x->source |-> v")
    assert code == 0
    assert "frame: dyn(x, T)" in out


def test_check_exact_rejects_frame(corpus_dir):
    code, _, _ = run("check", corpus_dir / "node.mcpp", "--exact",
                     "--pre", "x->source |-> v * dyn(x, T)", "--post", "x->source |-> v")
    assert code == 1


def test_check_this_and_oracle(corpus_dir):
    code, out, _ = run("check", corpus_dir / "node.mcpp", "--this", "N", "--oracle",
                       "--pre", "this->Tok@N()", "--post", "this.T->Tok@T()")
    assert code == 0
    assert "APredDef" in out and "oracle: holds" in out


def test_check_oracle_counterexample(corpus_dir):
    code, out, _ = run("check", corpus_dir / "node.mcpp", "--oracle",
                       "--pre", "true", "--post", "dyn((0:N*), N)")
    assert code == 1
    assert "oracle: counterexample" in out


def test_check_unknown_this_class(corpus_dir):
    code, _, err = run("check", corpus_dir / "node.mcpp", "--this", "Q", "--pre", "true", "--post", "true")
    assert code == 2 and "undeclared class Q" in err


def test_corpus_command(corpus_dir, tmp_path):
    rep = tmp_path / "rep.json"
    code, out, _ = run("corpus", corpus_dir, "--seed", 1, "--generated", 3, "--report", rep)
    assert code == 0
    assert "entries as expected" in out
    assert json.loads(rep.read_text())["ok"]


@pytest.mark.parametrize("argv", [["frobnicate"], ["run"], ["run", "x.mcpp", "--fuel", "0"]])
def test_usage_errors_exit_2(argv):
    code, _, _ = run(*argv)
    assert code == 2
