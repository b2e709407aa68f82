"""Command-line front end.

Every subcommand prints one verdict line first (``SAT``, ``UNSAT``,
``BOUNDED_UNSAT``, ``true``, ``false`` or ``OK``), followed by its
artifacts.  ``--json`` replaces this with a single JSON object.

Exit status: 0 Sat / true / success, 1 Unsat / false, 2 BoundedUnsat,
64 usage error, 65 bad input.
"""
from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

from . import generators as G
from . import modal as M
from . import sampling
from . import shrink as SH
from . import solver as V
from . import syntax as S
from .automata import AutomatonError, parse_automaton
from .checker import eval_fo2
from .trees import Tree, TreeError, parse_dag, parse_tree, render_tree, to_dag, tree_to_dot, unfold

EXIT_OK, EXIT_NO, EXIT_BOUNDED, EXIT_USAGE, EXIT_INPUT = 0, 1, 2, 64, 65

INPUT_ERRORS = (S.FormulaError, TreeError, AutomatonError, V.OptionError, G.GeneratorError,
                SH.ShrinkError, OSError, ValueError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


class _Out:
    """Collects the verdict line, artifacts and JSON fields of one command."""

    def __init__(self, as_json):
        self.as_json = as_json
        self.fields = {}
        self.lines = []

    def verdict(self, word, **extra):
        self.fields["verdict"] = word
        self.fields.update(extra)
        tail = " ".join(f"{k}={_plain(v)}" for k, v in extra.items())
        self.lines.insert(0, f"{word} {tail}".rstrip())

    def artifact(self, name, text):
        self.fields[name] = text
        self.lines.append(text)

    def emit(self, stream):
        if self.as_json:
            stream.write(json.dumps(self.fields, sort_keys=True) + "\n")
        else:
            for line in self.lines:
                stream.write(line + "\n")


def _plain(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


# ---------------------------------------------------------------- inputs

def _formula(args):
    return S.parse_fo2(args.formula)


def _read_tree(path) -> Tree:
    text = Path(path).read_text()
    if "root #" in text:
        return unfold(parse_dag(text))
    return parse_tree(text)


def _schema(args):
    if getattr(args, "schema", None) is None:
        return None
    return parse_automaton(Path(args.schema).read_text())


def _names(text):
    return [p.strip() for p in (text or "").split(",") if p.strip()]


def _emit_tree(out, args, t: Tree, dag=None):
    out.artifact("tree", render_tree(t))
    if dag is not None:
        out.artifact("dag", dag.render())
    if args.dot:
        out.artifact("dot", tree_to_dot(t))


# ---------------------------------------------------------------- commands

def cmd_parse(args, out):
    f = _formula(args)
    out.verdict("OK", sentence=S.is_sentence(f), closure=len(S.one_var_closure(f)))
    out.artifact("formula", S.render(S.normalize_var(f)))
    return EXIT_OK


def cmd_check(args, out):
    t = _read_tree(args.tree)
    f = _formula(args)
    if S.free_vars(f):
        raise S.FormulaError("check expects a sentence")
    value = eval_fo2(t, f)
    out.verdict("true" if value else "false")
    return EXIT_OK if value else EXIT_NO


def _solve_options(args):
    vocab = S.Vocabulary.parse(args.vocab) if args.vocab else None
    return V.SolveOptions(vocabulary=vocab, uar=args.uar, rank=args.rank, schema=_schema(args),
                          depth_limit=args.max_depth, branching_limit=args.max_branching,
                          node_budget=args.node_budget, time_budget=args.time_budget,
                          signature=frozenset(_names(args.signature)))


def cmd_solve(args, out):
    f = _formula(args)
    r = V.decide(f, _solve_options(args))
    if isinstance(r, V.Sat):
        out.verdict("SAT", nodes=r.witness.unfolded_size(), depth=r.witness.unfolded_depth())
        _emit_tree(out, args, r.tree(), r.witness)
        return EXIT_OK
    if isinstance(r, V.Unsat):
        out.verdict("UNSAT", complete=r.complete, depth=r.depth, branching=r.branching)
        return EXIT_NO
    out.verdict("BOUNDED_UNSAT", depth=r.depth, branching=r.branching, reason=r.reason)
    return EXIT_BOUNDED


def cmd_translate(args, out):
    f = _formula(args)
    m = M.fo2_to_modal(f)
    out.verdict("OK", size=M.dag_size(m))
    out.artifact("modal", M.render_modal(m))
    return EXIT_OK


def cmd_shrink(args, out):
    t = _read_tree(args.tree)
    f = _formula(args)
    if not eval_fo2(t, f):
        raise SH.ShrinkError("the input tree does not satisfy the formula")
    basis = S.one_var_closure(f)
    dag = None
    if args.method == "vertical":
        res = SH.collapse_vertical(t, basis, _schema(args))
    elif args.method == "horizontal":
        res = SH.collapse_horizontal(t, basis)
    elif args.method == "stutter":
        res = SH.collapse_stutter(t, M.fo2_to_modal(f))
    elif args.method == "promote":
        res = SH.promote_shrink(t, f)
    else:
        dag = SH.update_to_dag(t, f, args.variant, _schema(args))
        res = unfold(dag)
    if args.emit_dag and dag is None:
        dag = to_dag(res)
    out.verdict("OK", before=t.size, after=res.size, preserved=eval_fo2(res, f))
    _emit_tree(out, args, res, dag)
    return EXIT_OK


def cmd_gen(args, out):
    if args.family in ("tiling-parof", "tiling-ancof"):
        colors = _names(args.colors)
        h, v = G.parse_pairs(args.h), G.parse_pairs(args.v)
        make = G.gen_tiling_parof if args.family == "tiling-parof" else G.gen_tiling_ancof
        f = make(args.n, colors, h, v)
    elif args.family == "counter":
        f = G.gen_counter_depth(args.n)
    elif args.family == "random-sentence":
        f = sampling.random_sentence(random.Random(args.seed), args.depth, preds=_names(args.preds) or ("P", "Q"))
    else:
        t = sampling.random_tree(random.Random(args.seed), args.n, preds=_names(args.preds) or ("P", "Q"),
                                 uar=args.uar)
        out.verdict("OK", nodes=t.size)
        _emit_tree(out, args, t)
        return EXIT_OK
    out.verdict("OK", closure=len(S.one_var_closure(f)))
    out.artifact("formula", S.render(f))
    return EXIT_OK


def cmd_oracle(args, out):
    f = _formula(args)
    opts = V.SolveOptions(uar=args.uar, rank=args.rank, schema=_schema(args),
                          signature=frozenset(_names(args.signature)))
    t = V.brute_force(f, args.max_nodes, args.max_depth or args.max_nodes, opts)
    if t is None:
        out.verdict("UNSAT", complete=False, nodes=args.max_nodes)
        return EXIT_NO
    out.verdict("SAT", nodes=t.size)
    _emit_tree(out, args, t)
    return EXIT_OK


# ---------------------------------------------------------------- argument grammar

def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--json", action="store_true", help="print one JSON object instead of lines")
    common.add_argument("--dot", action="store_true", help="also print trees in Graphviz DOT")
    common.add_argument("--seed", type=int, default=0, help="seed for randomised choices")

    p = _Parser(prog="fo2trees", description="Two-variable logic on finite ordered trees.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def formula_cmd(name, fn, help_text):
        c = sub.add_parser(name, parents=[common], help=help_text)
        c.add_argument("--formula", required=True)
        c.set_defaults(fn=fn)
        return c

    formula_cmd("parse", cmd_parse, "echo the normalised formula")

    c = formula_cmd("check", cmd_check, "model-check a sentence on a tree")
    c.add_argument("--tree", required=True, help="file in tree or DAG text format")

    c = formula_cmd("solve", cmd_solve, "decide satisfiability")
    c.add_argument("--vocab", help="Full, NoAncOf, ParOf, NoParOf or AncOf")
    c.add_argument("--uar", action="store_true", help="exactly one label per node")
    c.add_argument("--rank", type=int)
    c.add_argument("--schema", help="file with a tree automaton")
    c.add_argument("--signature", help="extra labels, comma separated")
    c.add_argument("--max-depth", type=int)
    c.add_argument("--max-branching", type=int)
    c.add_argument("--node-budget", type=int, default=2_000_000)
    c.add_argument("--time-budget", type=float, default=120.0)

    formula_cmd("translate", cmd_translate, "translate to the modal language")

    c = formula_cmd("shrink", cmd_shrink, "shrink a model while keeping the formula true")
    c.add_argument("--tree", required=True)
    c.add_argument("--method", required=True, choices=["vertical", "horizontal", "stutter", "promote", "update"])
    c.add_argument("--variant", default="AncOf", choices=["AncOf", "NoAncOf"], help="for --method update")
    c.add_argument("--schema")
    c.add_argument("--emit-dag", action="store_true")

    c = sub.add_parser("gen", parents=[common], help="generate instances")
    c.add_argument("family", choices=["tiling-parof", "tiling-ancof", "counter", "random-sentence", "random-tree"])
    c.add_argument("--n", type=int, default=1)
    c.add_argument("--colors", default="c")
    c.add_argument("--h", default="", help='horizontal pairs, e.g. "a,b;b,a"')
    c.add_argument("--v", default="", help="vertical pairs")
    c.add_argument("--depth", type=int, default=5, help="for random-sentence")
    c.add_argument("--preds", default="", help="predicates for random instances")
    c.add_argument("--uar", action="store_true", help="for random-tree")
    c.set_defaults(fn=cmd_gen)

    c = formula_cmd("oracle", cmd_oracle, "brute-force model search")
    c.add_argument("--max-nodes", type=int, required=True)
    c.add_argument("--max-depth", type=int)
    c.add_argument("--uar", action="store_true")
    c.add_argument("--rank", type=int)
    c.add_argument("--schema")
    c.add_argument("--signature")
    return p


def main(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    out = _Out(args.json)
    try:
        code = args.fn(args, out)
    except INPUT_ERRORS as exc:
        stderr.write(f"input error: {exc}\n")
        return EXIT_INPUT
    out.emit(stdout)
    return code


if __name__ == "__main__":
    sys.exit(main())
