"""Seeded random trees and formulas for property checks and the CLI."""
from __future__ import annotations

import random

from . import modal as M
from . import syntax as S
from .trees import Tree

ALL_RELATIONS = ("ParentOf", "AncOf", "LeftSibOf", "LeftOf")


def random_tree(rng: random.Random, n: int, preds=("P", "Q"), *, uar=False, max_children=None):
    """Random tree on ``n`` nodes built by attaching each new node to an earlier one.

    With ``uar`` every node carries exactly one predicate; otherwise each
    predicate is present with probability 1/2.
    """
    if n < 1:
        raise ValueError("a tree needs at least one node")
    preds = tuple(preds)

    def labels():
        if uar:
            return frozenset([rng.choice(preds)])
        return frozenset(p for p in preds if rng.random() < 0.5)

    nodes = [(labels(), [])]
    for i in range(1, n):
        while True:
            par = rng.randrange(i)
            if max_children is None or len(nodes[par][1]) < max_children:
                break
        nodes.append((labels(), []))
        nodes[par][1].append(i)
    built = [None] * n
    for i in reversed(range(n)):
        built[i] = Tree(nodes[i][0], [built[c] for c in nodes[i][1]])
    return built[0]


def random_formula(rng: random.Random, depth: int, free=frozenset(), preds=("P", "Q"),
                   relations=ALL_RELATIONS, equality=True):
    if depth == 0 or rng.random() < 0.2:
        if not free:
            return S.Const(rng.random() < 0.5)
        v = rng.choice(sorted(free))
        r = rng.random()
        if r < 0.5 or not relations and not equality:
            return S.Pred(rng.choice(preds), v)
        if r < 0.6 and equality or not relations:
            return S.Eq("x", "y")
        return S.Rel(rng.choice(relations), *rng.sample(["x", "y"], 2))
    r = rng.random()
    sub = lambda fr=free: random_formula(rng, depth - 1, fr, preds, relations, equality)  # noqa: E731
    if r < 0.2:
        return S.Not(sub())
    if r < 0.45:
        return S.And(sub(), sub())
    if r < 0.6:
        return S.Or(sub(), sub())
    v = rng.choice("xy")
    q = S.Exists if rng.random() < 0.6 else S.Forall
    return q(v, sub(frozenset(free) | {v}))


def random_sentence(rng: random.Random, depth: int = 5, preds=("P", "Q"),
                    relations=ALL_RELATIONS, equality=True, max_closure=None):
    """Random sentence; free variables left over are closed existentially/universally."""
    while True:
        f = random_formula(rng, depth, frozenset(), preds, relations, equality)
        if S.free_vars(f):
            f = S.Exists("x", f)
        if S.free_vars(f):
            f = S.Forall("y", f)
        if max_closure is None or len(S.one_var_closure(f)) <= max_closure:
            return f


def random_unary(rng: random.Random, depth: int = 4, preds=("P", "Q"),
                 relations=("AncOf",), equality=True):
    """Random formula with free variable x only (or none)."""
    while True:
        f = random_formula(rng, depth, frozenset({"x"}), preds, relations, equality)
        if S.free_vars(f) <= {"x"}:
            return f


TL_KINDS = (M.F_CH, M.P_CH, M.F_NS, M.P_NS)


def random_modal(rng: random.Random, depth: int, atoms=("P", "Q"), kinds=TL_KINDS):
    """Random modal formula over the given modality kinds."""
    if depth == 0 or rng.random() < 0.25:
        a = M.atom(rng.choice(atoms))
        return M.neg(a) if rng.random() < 0.3 else a
    r = rng.random()
    if r < 0.15:
        return M.neg(random_modal(rng, depth - 1, atoms, kinds))
    if r < 0.4:
        return M.conj(random_modal(rng, depth - 1, atoms, kinds), random_modal(rng, depth - 1, atoms, kinds))
    if r < 0.6:
        return M.disj(random_modal(rng, depth - 1, atoms, kinds), random_modal(rng, depth - 1, atoms, kinds))
    return M.modality(rng.choice(kinds), random_modal(rng, depth - 1, atoms, kinds))
