"""Exhaustive small-tree sweeps, evaluated one shape at a time over all labellings."""
from __future__ import annotations

import itertools

import numpy as np

from fo2trees import modal as M
from fo2trees.checker import Structure, eval_batch
from fo2trees.solver import tree_shapes
from fo2trees.trees import Tree


def _shape_tree(shape):
    return Tree((), [_shape_tree(c) for c in shape])


class Sweep:
    """All ordered trees up to ``max_nodes`` nodes, every node labelled by any subset of preds."""

    def __init__(self, max_nodes, preds=("P", "Q")):
        self.preds = tuple(preds)
        self.groups = []
        for shape in tree_shapes(max_nodes):
            ix = _shape_tree(shape).index
            n = ix.n
            combos = np.array(list(itertools.product([False, True], repeat=n * len(self.preds))), dtype=bool)
            combos = combos.reshape(len(combos), len(self.preds), n)
            labels = {p: combos[:, k, :] for k, p in enumerate(self.preds)}
            self.groups.append((ix, labels, len(combos)))

    @property
    def count(self):
        return sum(size for _, _, size in self.groups)

    def fo2(self, f):
        """Concatenated truth values of sentence f over every tree of the sweep."""
        return np.concatenate([np.broadcast_to(eval_batch(Structure(ix, labels), f), (size,))
                               for ix, labels, size in self.groups])

    def modal_at_root(self, m):
        return np.concatenate([M.eval_modal_batch(ix, labels, m, size)[m.uid][:, 0]
                               for ix, labels, size in self.groups])
