"""Two-variable logic on finite ordered trees: checking, satisfiability and model surgery."""
import sys

# Trees and formulas are processed recursively in a few places; deep chains
# (e.g. collapse inputs with hundreds of levels) need more headroom.
if sys.getrecursionlimit() < 20000:
    sys.setrecursionlimit(20000)

from .syntax import Vocabulary, parse_fo2, render, one_var_closure, vocabulary_of  # noqa: E402
from .trees import Tree, TreeDag, parse_tree, render_tree, to_dag, unfold  # noqa: E402
from .checker import eval_fo2, eval_fo2_dag, phi_type, type_sets  # noqa: E402

__all__ = [
    "Vocabulary", "parse_fo2", "render", "one_var_closure", "vocabulary_of",
    "Tree", "TreeDag", "parse_tree", "render_tree", "to_dag", "unfold",
    "eval_fo2", "eval_fo2_dag", "phi_type", "type_sets",
]
