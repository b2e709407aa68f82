import io
import json

import pytest

from fo2trees.cli import main


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue().splitlines(), err.getvalue()


@pytest.fixture
def tree_file(tmp_path):
    def make(text, name="t.tree"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return make


def test_solve_sat():
    code, lines, _ = run("solve", "--formula", "exists x. P(x)")
    assert code == 0
    assert lines[0].split()[0] == "SAT"
    assert lines[1] == "(P ;)"


def test_solve_unsat():
    code, lines, _ = run("solve", "--formula", "forall x. exists y. ParentOf(y,x)")
    assert code == 1 and lines[0].startswith("UNSAT") and "complete=true" in lines[0]


def test_solve_bounded_unsat_exit_two():
    code, lines, _ = run("solve", "--formula", "exists x. exists y. (AncOf(x,y) & P(y))", "--node-budget", "1",)
    assert code == 2 and lines[0].startswith("BOUNDED_UNSAT")


def test_solve_json():
    code, lines, _ = run("solve", "--formula", "exists x. P(x)", "--json")
    data = json.loads("\n".join(lines))
    assert code == 0 and data["verdict"] == "SAT" and data["tree"] == "(P ;)" and "dag" in data


def test_check(tree_file):
    path = tree_file("(P ;)\n", "single_p.tree")
    code, lines, _ = run("check", "--tree", path, "--formula", "forall x. P(x)")
    assert (code, lines) == (0, ["true"])
    code, lines, _ = run("check", "--tree", path, "--formula", "exists x. Q(x)")
    assert (code, lines) == (1, ["false"])


def test_check_accepts_dag_files(tree_file):
    code, lines, _ = run("solve", "--formula", "exists x. (P(x) & exists y. (ParentOf(x,y) & Q(y)))", "--json")
    dag = json.loads(lines[0])["dag"]
    path = tree_file(dag, "w.dag")
    code, lines, _ = run("check", "--tree", path, "--formula", "exists x. Q(x)")
    assert (code, lines) == (0, ["true"])


def test_usage_errors():
    assert run()[0] == 64
    assert run("frobnicate")[0] == 64
    assert run("solve")[0] == 64
    assert run("shrink", "--tree", "x", "--formula", "true", "--method", "sideways")[0] == 64


def test_input_errors(tree_file):
    assert run("parse", "--formula", "exists x. (P(x)")[0] == 65
    assert run("check", "--tree", "/nonexistent/file", "--formula", "true")[0] == 65
    bad = tree_file("(P ; (Q ;)")
    assert run("check", "--tree", bad, "--formula", "true")[0] == 65
    assert run("gen", "tiling-parof", "--colors", "c", "--h", "c,d")[0] == 65


def test_parse_and_translate():
    code, lines, _ = run("parse", "--formula", "exists y. P(y)")
    assert code == 0 and lines[0].startswith("OK") and "sentence=true" in lines[0]
    assert lines[1] == "exists x. P(x)"
    code, lines, _ = run("translate", "--formula", "exists x. P(x)")
    assert code == 0 and lines[0].startswith("OK") and len(lines) == 2


def test_shrink_methods(tree_file):
    chain = "(P ; " * 12 + "(P ;)" + ")" * 12
    path = tree_file(chain)
    for method in ("vertical", "stutter", "update"):
        code, lines, _ = run("shrink", "--tree", path, "--formula", "exists x. P(x)", "--method", method)
        assert code == 0 and "preserved=true" in lines[0], method
    code, lines, _ = run("shrink", "--tree", path, "--formula", "exists x. Q(x)", "--method", "vertical")
    assert code == 65
    leaves = tree_file("(P ; " + "(P ;) " * 20 + ")", "wide.tree")
    code, lines, _ = run("shrink", "--tree", leaves, "--formula", "exists x. P(x)", "--method", "horizontal",
                         "--emit-dag")
    assert code == 0 and "root #" in "\n".join(lines)
    uar = tree_file("(a ; (a ; (a ; (a ;))))", "uar.tree")
    code, lines, _ = run("shrink", "--tree", uar, "--formula", "exists x. a(x)", "--method", "promote")
    assert code == 0 and lines[1] == "(a ; (a ;))"


def test_gen_families():
    code, lines, _ = run("gen", "tiling-parof", "--n", "1", "--colors", "c", "--h", "c,c", "--v", "c,c")
    assert code == 0 and lines[0].startswith("OK")
    code, lines, _ = run("gen", "counter", "--n", "2")
    assert code == 0 and "a_2" in lines[1]
    a = run("gen", "random-sentence", "--seed", "3")[1]
    b = run("gen", "random-sentence", "--seed", "3")[1]
    assert a == b
    code, lines, _ = run("gen", "random-tree", "--n", "7", "--uar", "--dot")
    assert code == 0 and "nodes=7" in lines[0] and any("digraph" in x for x in lines)


def test_oracle():
    code, lines, _ = run("oracle", "--formula", "exists x. exists y. ParentOf(x,y)", "--max-nodes", "3")
    assert code == 0 and lines[1] == "(; (;))"
    code, lines, _ = run("oracle", "--formula", "exists x. (P(x) & !P(x))", "--max-nodes", "3")
    assert code == 1
    assert run("oracle", "--formula", "exists x. P(x)", "--max-nodes", "20")[0] == 65
