"""Naive reference implementations used as test oracles.

Everything here works directly on node paths and the textbook definitions,
sharing no evaluation code with the library.
"""
from __future__ import annotations

import itertools
from functools import lru_cache

from fo2trees import modal as M
from fo2trees import syntax as S
from fo2trees.trees import Tree


def nodes(t: Tree):
    out = []

    def go(s, p):
        out.append(p)
        for i, c in enumerate(s.children):
            go(c, p + (i,))

    go(t, ())
    return out


def rel(name, u, v):
    if name == "ParentOf":
        return len(v) == len(u) + 1 and v[:-1] == u
    if name == "AncOf":
        return len(u) < len(v) and v[:len(u)] == u
    same_parent = len(u) == len(v) and u and u[:-1] == v[:-1]
    if name == "LeftSibOf":
        return bool(same_parent) and u[-1] + 1 == v[-1]
    if name == "LeftOf":
        return bool(same_parent) and u[-1] < v[-1]
    raise ValueError(name)


def eval_fo2(t: Tree, f, env=None):
    """Direct recursive first-order evaluation."""
    ns = nodes(t)
    lab = {p: t.node(p).labels for p in ns}
    memo = {}

    def ev(g, x, y):
        key = (g, x, y)
        if key in memo:
            return memo[key]
        val = {"x": x, "y": y}
        if isinstance(g, S.Const):
            r = g.value
        elif isinstance(g, S.Pred):
            r = g.name in lab[val[g.var]]
        elif isinstance(g, S.Eq):
            r = val[g.left] == val[g.right]
        elif isinstance(g, S.Rel):
            r = rel(g.name, val[g.left], val[g.right])
        elif isinstance(g, S.Not):
            r = not ev(g.sub, x, y)
        elif isinstance(g, S.And):
            r = ev(g.left, x, y) and ev(g.right, x, y)
        elif isinstance(g, S.Or):
            r = ev(g.left, x, y) or ev(g.right, x, y)
        elif isinstance(g, S.Implies):
            r = (not ev(g.left, x, y)) or ev(g.right, x, y)
        elif isinstance(g, S.Iff):
            r = ev(g.left, x, y) == ev(g.right, x, y)
        elif isinstance(g, (S.Exists, S.Forall)):
            vals = (ev(g.body, n, y) if g.var == "x" else ev(g.body, x, n) for n in ns)
            r = any(vals) if isinstance(g, S.Exists) else all(vals)
        else:
            raise TypeError(g)
        memo[key] = r
        return r

    env = env or {}
    return ev(f, env.get("x", ()), env.get("y", ()))


def type_vector(t: Tree, basis, p):
    return tuple(eval_fo2(t, m, {"x": p}) for m in basis)


def eval_modal(t: Tree, m, p=()):
    ns = nodes(t)
    lab = {q: t.node(q).labels for q in ns}

    def kids(q):
        return [q + (i,) for i in range(len(t.node(q).children))]

    @lru_cache(maxsize=None)
    def ev(g, q):
        k = g.kind
        if k == M.TRUE:
            return True
        if k == M.FALSE:
            return False
        if k == M.ATOM:
            return g.name in lab[q]
        if k == M.NOT:
            return not ev(g.args[0], q)
        if k == M.AND:
            return all(ev(a, q) for a in g.args)
        if k == M.OR:
            return any(ev(a, q) for a in g.args)
        a = g.args[0]
        if k == M.X_CH:
            return any(ev(a, c) for c in kids(q))
        if k == M.Y_CH:
            return bool(q) and ev(a, q[:-1])
        if k == M.F_CH:
            return any(ev(a, r) for r in ns if rel("AncOf", q, r))
        if k == M.P_CH:
            return any(ev(a, r) for r in ns if rel("AncOf", r, q))
        if not q:
            return False
        sibs = [s for s in ns if len(s) == len(q) and s[:-1] == q[:-1]]
        i = q[-1]
        if k == M.X_NS:
            return any(ev(a, s) for s in sibs if s[-1] == i + 1)
        if k == M.Y_NS:
            return any(ev(a, s) for s in sibs if s[-1] == i - 1)
        if k == M.F_NS:
            return any(ev(a, s) for s in sibs if s[-1] > i)
        if k == M.P_NS:
            return any(ev(a, s) for s in sibs if s[-1] < i)
        raise ValueError(k)

    return ev(m, tuple(p))


def all_trees(max_nodes, preds):
    """Every ordered tree with at most max_nodes nodes, labels any subset of preds."""
    label_sets = [frozenset(c) for r in range(len(preds) + 1) for c in itertools.combinations(preds, r)]

    @lru_cache(maxsize=None)
    def forests(n):
        if n == 0:
            return [()]
        out = []
        for first in range(1, n + 1):
            for t in trees(first):
                for rest in forests(n - first):
                    out.append((t,) + rest)
        return out

    @lru_cache(maxsize=None)
    def trees(n):
        return [Tree(lab, kids) for kids in forests(n - 1) for lab in label_sets]

    for n in range(1, max_nodes + 1):
        yield from trees(n)


def run_automaton(t: Tree, a):
    """Recursive bottom-up reachable state set of the root."""

    def go(s):
        (sym,) = s.labels
        kid_sets = [go(c) for c in s.children]
        out = set()
        for (sym2, tup), targets in a.transitions.items():
            if sym2 == sym and len(tup) == len(kid_sets) and all(q in ks for q, ks in zip(tup, kid_sets)):
                out |= set(targets)
        return out

    return bool(go(t) & set(a.accepting))
