"""Model checking FO2 on trees and DAGs, phi-types and type-set abstractions."""
from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from . import syntax as S
from .syntax import ClosureBasis, Formula, FormulaError, Vocabulary
from .trees import Tree, TreeDag, TreeError, is_uar


# ---------------------------------------------------------------- batched evaluation
#
# Arrays broadcast against shape (L, N, N): axis 0 enumerates labellings of a
# single tree shape, axis 1 is the value of x, axis 2 the value of y.

class Structure:
    """One tree shape together with L labellings of it."""

    def __init__(self, index, labels):
        self.index = index
        self.labels = labels  # pred -> bool array (L, N)
        self.n = index.n
        self.batch = next(iter(labels.values())).shape[0] if labels else 1

    @classmethod
    def of_tree(cls, t: Tree, preds=()):
        ix = t.index
        labs = {p: ix.label_vector(p)[None, :] for p in set(preds) | set().union(*ix.labels)}
        return cls(ix, labs)

    def label(self, pred):
        if pred in self.labels:
            return self.labels[pred]
        return np.zeros((self.batch, self.n), dtype=bool)


def _eval(f, st: Structure, memo):
    hit = memo.get(f)
    if hit is not None:
        return hit
    ix = st.index
    if isinstance(f, S.Const):
        out = np.full((1, 1, 1), f.value)
    elif isinstance(f, S.Pred):
        lab = st.label(f.name)
        out = lab[:, :, None] if f.var == "x" else lab[:, None, :]
    elif isinstance(f, S.Eq):
        out = np.eye(ix.n, dtype=bool)[None] if f.left != f.right else np.ones((1, 1, 1), bool)
    elif isinstance(f, S.Rel):
        m = ix.relation(f.name)
        if f.left == f.right:
            out = np.zeros((1, 1, 1), bool)  # all tree relations are irreflexive
        elif f.left == "x":
            out = m[None]
        else:
            out = m.T[None]
    elif isinstance(f, S.Not):
        out = ~_eval(f.sub, st, memo)
    elif isinstance(f, S.And):
        out = _eval(f.left, st, memo) & _eval(f.right, st, memo)
    elif isinstance(f, S.Or):
        out = _eval(f.left, st, memo) | _eval(f.right, st, memo)
    elif isinstance(f, S.Implies):
        out = ~_eval(f.left, st, memo) | _eval(f.right, st, memo)
    elif isinstance(f, S.Iff):
        out = _eval(f.left, st, memo) == _eval(f.right, st, memo)
    elif isinstance(f, (S.Exists, S.Forall)):
        body = _eval(f.body, st, memo)
        axis = 1 if f.var == "x" else 2
        red = np.any if isinstance(f, S.Exists) else np.all
        out = red(body, axis=axis, keepdims=True)
    else:
        raise FormulaError(f"not a formula: {f!r}")
    memo[f] = out
    return out


def evaluate_structure(st: Structure, f: Formula, memo=None):
    """Raw broadcastable truth array of f on a batched structure."""
    return _eval(f, st, {} if memo is None else memo)


def eval_batch(st: Structure, f: Formula):
    """Truth of sentence f for every labelling in the batch -> bool array (L,)."""
    if S.free_vars(f):
        raise FormulaError("eval_batch expects a sentence")
    out = _eval(f, st, {})
    return np.broadcast_to(out, (max(st.batch, out.shape[0]), 1, 1))[:, 0, 0]


def eval_fo2(t: Tree, f: Formula, assignment=None) -> bool:
    assignment = dict(assignment or {})
    missing = S.free_vars(f) - set(assignment)
    if missing:
        raise FormulaError(f"unbound free variable(s): {', '.join(sorted(missing))}")
    st = Structure.of_tree(t)
    out = _eval(f, st, {})
    i = t.index.pos[tuple(assignment["x"])] if "x" in assignment and out.shape[1] > 1 else 0
    j = t.index.pos[tuple(assignment["y"])] if "y" in assignment and out.shape[2] > 1 else 0
    return bool(out[0, i, j])


def closure_table(t: Tree, basis: ClosureBasis):
    """Bool matrix (N, |basis|): entry [i, k] is basis[k] at node i (pre-order)."""
    st = Structure.of_tree(t)
    memo = {}
    n = t.index.n
    cols = []
    for m in basis:
        v = _eval(m, st, memo)
        cols.append(np.broadcast_to(v[0, :, 0], (n,)) if v.shape[1] > 1 else np.full(n, bool(v[0, 0, 0])))
    return np.stack(cols, axis=1) if cols else np.zeros((n, 0), bool)


def type_masks(t: Tree, basis: ClosureBasis):
    """Integer-coded phi-type of every node, in pre-order."""
    table = closure_table(t, basis)
    weights = [1 << k for k in range(table.shape[1])]
    return [sum(w for w, b in zip(weights, row) if b) for row in table.tolist()]


@dataclass(frozen=True)
class PhiType:
    """Set of basis members true at a node, stored as a bit mask."""

    mask: int
    basis: ClosureBasis

    def __contains__(self, f):
        return bool(self.mask >> self.basis.position(f) & 1)

    def members(self):
        return [m for k, m in enumerate(self.basis) if self.mask >> k & 1]

    def __repr__(self):
        return "{" + ", ".join(S.render(m) for m in self.members()) + "}"


def phi_type(t: Tree, n, basis: ClosureBasis) -> PhiType:
    masks = type_masks(t, basis)
    return PhiType(masks[t.index.pos[tuple(n)]], basis)


# ---------------------------------------------------------------- type sets

def quantifier_bodies(basis: ClosureBasis):
    """(position, existential body) for each quantified one-variable member.

    A universal member forall y. b contributes the body !b, whose satisfiers
    are the counter-witnesses.
    """
    out = []
    for k, m in enumerate(basis):
        if isinstance(m, (S.Exists, S.Forall)) and S.free_vars(m) == {"x"} and m.var == "y":
            body = m.body if isinstance(m, S.Exists) else S.Not(m.body)
            out.append((k, body))
    return out


def body_matrices(t: Tree, basis: ClosureBasis):
    st = Structure.of_tree(t)
    memo = {}
    n = t.index.n
    return [(k, np.broadcast_to(_eval(b, st, memo)[0], (n, n)))
            for k, b in quantifier_bodies(basis)]


@dataclass(frozen=True)
class TypeSets:
    """Per-node type-set abstractions, keyed by node path; values are masks."""

    basis: ClosureBasis
    types: dict
    anc: dict
    desc: dict
    incomp: dict
    selected: dict

    def as_phi_types(self, which, path):
        return {PhiType(m, self.basis) for m in getattr(self, which)[tuple(path)]}


def _type_sets_arrays(t, basis, masks, seed=None, with_selected=True):
    ix = t.index
    n = ix.n
    m = np.array(masks, dtype=object)
    anc, desc, inc, sel = [], [], [], []
    for i in range(n):
        anc.append(frozenset(m[ix.anc[:, i]].tolist()))
        desc.append(frozenset(m[ix.anc[i, :]].tolist()))
        inc.append(frozenset(m[ix.incomp[i, :]].tolist()))
    if with_selected:
        sel = selected_desc_types(t, basis, masks, seed)
    return anc, desc, inc, sel


def selected_desc_types(t, basis, masks, seed=None, bodies=None):
    """SelectedDescTypes per node (pre-order list of frozensets of masks).

    For every type realized by a proper ancestor m' of m and every quantified
    member with body b, one proper descendant w of m with b(m', w) is chosen
    (first in document order, or seeded-random when ``seed`` is given).
    """
    ix = t.index
    n = ix.n
    rng = random.Random(seed) if seed is not None else None
    if bodies is None:
        bodies = body_matrices(t, basis)
    out = []
    for i in range(n):
        chosen = set()
        ancestors = np.nonzero(ix.anc[:, i])[0]
        descendants = np.nonzero(ix.anc[i, :])[0]
        if len(ancestors) and len(descendants):
            by_type = {}
            for a in ancestors.tolist():
                by_type.setdefault(masks[a], []).append(a)
            for _, body in bodies:
                sub = body[:, descendants]
                for group in by_type.values():
                    hits = np.nonzero(sub[group].any(axis=0))[0]
                    if len(hits):
                        w = descendants[hits[0] if rng is None else rng.choice(hits.tolist())]
                        chosen.add(masks[w])
        out.append(frozenset(chosen))
    return out


def type_sets(t: Tree, basis: ClosureBasis, witness_selection=None) -> TypeSets:
    ix = t.index
    masks = type_masks(t, basis)
    anc, desc, inc, sel = _type_sets_arrays(t, basis, masks, witness_selection)
    key = ix.paths
    return TypeSets(basis, dict(zip(key, masks)), dict(zip(key, anc)), dict(zip(key, desc)),
                    dict(zip(key, inc)), dict(zip(key, sel)))


# ---------------------------------------------------------------- path diagnostics

def _path_nodes(t: Tree, p):
    """Accept a leaf path or an explicit top-down list of node paths."""
    if p and isinstance(p[0], (tuple, list)):
        nodes = [tuple(q) for q in p]
    else:
        leaf = tuple(p)
        nodes = [leaf[:k] for k in range(len(leaf) + 1)]
    for q in nodes:
        if not t.has_node(q):
            raise TreeError(f"invalid node path {q}")
    return nodes


def interval_profile(t: Tree, p, psi: Formula, a: str) -> int:
    """Minimal number of a-intervals covering {i : p_i |= psi & a(x)} on path p."""
    if not is_uar(t):
        raise TreeError("interval_profile requires a UAR tree")
    if Vocabulary.ANC_OF not in S.vocabulary_of(psi):
        raise FormulaError("psi must be an FO2[AncOf] formula")
    if len(S.free_vars(psi)) > 1:
        raise FormulaError("psi must have at most one free variable")
    psi = S.normalize_var(psi)
    nodes = _path_nodes(t, p)
    col = closure_table(t, ClosureBasis([psi]))[:, 0]
    runs = 0
    inside = False
    for q in nodes:
        i = t.index.pos[q]
        if a not in t.index.labels[i]:
            continue  # other letters do not break an a-interval
        if col[i]:
            if not inside:
                runs += 1
            inside = True
        else:
            inside = False
    return runs


def vertical_type_changes(t: Tree, p, m) -> dict:
    """Truth-value flips along p of every <CH>/<-CH> subformula of the modal formula m."""
    from . import modal as M

    if M.uses_step_ch(m):
        raise FormulaError("vertical_type_changes requires a TL_tree formula (no child/parent steps)")
    nodes = _path_nodes(t, p)
    vals = M.eval_modal_all(t, m)
    out = {}
    for g in M.subformulas(m):
        if g.kind in (M.F_CH, M.P_CH):
            seq = [bool(vals[g][t.index.pos[q]]) for q in nodes]
            out[g] = sum(1 for u, v in zip(seq, seq[1:]) if u != v)
    return out


# ---------------------------------------------------------------- DAG evaluation

EQ, PARENT, CHILD, ANC_FAR, DESC_FAR, PREV, NEXT, LEFT_FAR, RIGHT_FAR, INC = range(10)
ORDER_TYPES = range(10)

# order types (position of y relative to x) at which each atom R(x, y) holds
_ATOM_TRUTH = {
    ("ParentOf", "xy"): {CHILD}, ("ParentOf", "yx"): {PARENT},
    ("AncOf", "xy"): {CHILD, DESC_FAR}, ("AncOf", "yx"): {PARENT, ANC_FAR},
    ("LeftSibOf", "xy"): {NEXT}, ("LeftSibOf", "yx"): {PREV},
    ("LeftOf", "xy"): {NEXT, RIGHT_FAR}, ("LeftOf", "yx"): {PREV, LEFT_FAR},
}


def atom_truth(atom, order_type):
    """Truth of a two-variable atom (Eq / Rel over x, y) at an order type."""
    if isinstance(atom, S.Eq):
        return atom.left == atom.right or order_type == EQ
    if atom.left == atom.right:
        return False
    d = "xy" if atom.left == "x" else "yx"
    return order_type in _ATOM_TRUTH[(atom.name, d)]


def split_body(beta):
    """Classify the leaves of a quantifier body.

    Returns (rel_atoms, x_props, y_props): two-variable atoms; maximal
    subformulas whose free variables are within {x} (incl. closed ones);
    maximal subformulas with free variable y only.
    """
    rels, xs, ys = {}, {}, {}

    def walk(g):
        if isinstance(g, (S.Not, S.And, S.Or, S.Implies, S.Iff)):
            for c in S.children(g):
                walk(c)
            return
        fv = S.free_vars(g)
        if isinstance(g, (S.Eq, S.Rel)) and len(fv) == 2:
            rels.setdefault(g, None)
        elif isinstance(g, (S.Eq, S.Rel)):
            rels.setdefault(g, None)
        elif fv == {"y"}:
            ys.setdefault(g, None)
        else:
            xs.setdefault(g, None)

    walk(beta)
    return list(rels), list(xs), list(ys)


def substitute(f, env):
    """Evaluate the boolean skeleton of f with leaves looked up in env; None = unknown."""
    if f in env:
        return env[f]
    if isinstance(f, S.Const):
        return f.value
    if isinstance(f, S.Not):
        v = substitute(f.sub, env)
        return None if v is None else not v
    if isinstance(f, (S.And, S.Or, S.Implies, S.Iff)):
        a = substitute(f.left, env)
        b = substitute(f.right, env)
        if isinstance(f, S.And):
            if a is False or b is False:
                return False
            return None if a is None or b is None else True
        if isinstance(f, S.Or):
            if a is True or b is True:
                return True
            return None if a is None or b is None else False
        if isinstance(f, S.Implies):
            if a is False or b is True:
                return True
            return None if a is None or b is None else False
        return None if a is None or b is None else a == b
    return None


def eval_fo2_dag(d: TreeDag, f: Formula) -> bool:
    """Decide a sentence on the tree unfolded from d without unfolding it.

    One-variable subformulas are computed one at a time.  Downward facts
    are per DAG entry; facts about ancestors, siblings and incomparable
    nodes depend on the occurrence, so each step splits entries by their
    context summary (sets of realized valuations), then re-merges entries
    that have become indistinguishable.
    """
    if S.free_vars(f):
        raise FormulaError("eval_fo2_dag expects a sentence")
    basis = S.one_var_closure(f)
    # entries carry (labels, kids, values) where values: member -> bool
    entries = [(labels, kids, {}) for labels, kids in d.entries]
    root = d.root
    entries, root = _restrict_reachable(entries, root)
    for member in basis:
        if S.free_vars(member):
            entries, root = _dag_step(entries, root, member)
        else:
            val = _closed_value(entries, root, member)
            for e in entries:
                e[2][member] = val
    return bool(_closed_value(entries, root, f))


def _restrict_reachable(entries, root):
    seen = set()
    stack = [root]
    while stack:
        k = stack.pop()
        if k in seen:
            continue
        seen.add(k)
        stack.extend(entries[k][1])
    order = sorted(seen)
    remap = {k: i for i, k in enumerate(order)}
    out = [(entries[k][0], tuple(remap[c] for c in entries[k][1]), dict(entries[k][2])) for k in order]
    return out, remap[root]


def _leaf_value(g, values, labels):
    """Value at a node of a unary leaf formula (free var x or closed)."""
    if isinstance(g, S.Pred):
        return g.name in labels
    if isinstance(g, S.Eq):
        return True
    if isinstance(g, S.Rel):
        return False
    if isinstance(g, S.Const):
        return g.value
    return _lookup(values, g)


def _lookup(values, g):
    g = S.normalize_var(g)
    try:
        return values[g]
    except KeyError:
        # closed subformulas of a renamed member appear with x and y swapped
        return values[S.swap_vars(g)]


def _node_value(member, labels, values):
    """Value of a one-var member from already-known leaves (boolean layer only)."""
    if isinstance(member, (S.Exists, S.Forall)):
        return values[member]
    if isinstance(member, (S.Not, S.And, S.Or, S.Implies, S.Iff)):
        env = {}

        def leaves(g):
            if isinstance(g, (S.Not, S.And, S.Or, S.Implies, S.Iff)):
                for c in S.children(g):
                    leaves(c)
            else:
                env[g] = _leaf_value(g, values, labels)

        leaves(member)
        return substitute(member, env)
    return _leaf_value(member, values, labels)


def _closed_value(entries, root, member):
    if isinstance(member, S.Const):
        return member.value
    if isinstance(member, (S.Exists, S.Forall)):
        body = S.normalize_var(member.body)
        vals = [_lookup(e[2], body) if S.free_vars(body) else _closed_value(entries, root, body)
                for e in entries]
        return any(vals) if isinstance(member, S.Exists) else all(vals)
    env = {}

    def leaves(g):
        if isinstance(g, (S.Not, S.And, S.Or, S.Implies, S.Iff)):
            for c in S.children(g):
                leaves(c)
        else:
            env[g] = _closed_value(entries, root, g)

    leaves(member)
    return substitute(member, env)


def _dag_step(entries, root, member):
    if not isinstance(member, (S.Exists, S.Forall)):
        for labels, kids, values in entries:
            values[member] = _node_value(member, labels, values)
        return entries, root
    existential = isinstance(member, S.Exists)
    beta = member.body if existential else S.Not(member.body)
    rels, xprops, yprops = split_body(beta)

    def yval(e):
        labels, _, values = entries[e]
        code = 0
        for k, g in enumerate(yprops):
            if _leaf_value(S.swap_vars(g), values, labels):
                code |= 1 << k
        return code

    yv = [yval(e) for e in range(len(entries))]
    # downward summaries (entries are listed children-first)
    below = []  # valuations at proper descendants
    below_far = []  # valuations at descendants that are not children
    for e, (_, kids, _) in enumerate(entries):
        s = frozenset()
        far = frozenset()
        for c in kids:
            s = s | {yv[c]} | below[c]
            far = far | below[c]
        below.append(s)
        below_far.append(far)

    def holds(e, ctx):
        labels, kids, values = entries[e]
        xenv = {g: _leaf_value(g, values, labels) for g in xprops}
        parent, anc_far, prev, nxt, left_far, right_far, inc = ctx
        sets = {
            PARENT: {parent} if parent is not None else set(),
            CHILD: {yv[c] for c in kids},
            ANC_FAR: anc_far, DESC_FAR: below_far[e],
            PREV: {prev} if prev is not None else set(),
            NEXT: {nxt} if nxt is not None else set(),
            LEFT_FAR: left_far, RIGHT_FAR: right_far, INC: inc,
        }
        # y = x
        env = dict(xenv)
        env.update({a: atom_truth(a, EQ) for a in rels})
        env.update({g: _leaf_value(S.swap_vars(g), values, labels) for g in yprops})
        if substitute(beta, env):
            return True
        for o, vals in sets.items():
            if not vals:
                continue
            env = dict(xenv)
            env.update({a: atom_truth(a, o) for a in rels})
            for v in vals:
                env.update({g: bool(v >> k & 1) for k, g in enumerate(yprops)})
                if substitute(beta, env):
                    return True
        return False

    new_entries = []
    table = {}
    root_ctx = (None, frozenset(), None, None, frozenset(), frozenset(), frozenset())
    # iterative top-down expansion, then bottom-up construction
    order = []
    stack = [(root, root_ctx)]
    seen = set()
    child_states = {}
    while stack:
        st = stack.pop()
        if st in seen:
            continue
        seen.add(st)
        order.append(st)
        e, ctx = st
        _, kids, _ = entries[e]
        parent, anc_far, prev, nxt, left_far, right_far, inc = ctx
        me = yv[e]
        sib_all = left_far | right_far | ({prev} if prev is not None else set()) | (
            {nxt} if nxt is not None else set())
        kid_states = []
        for i, c in enumerate(kids):
            others = frozenset().union(*[below[kids[j]] for j in range(len(kids)) if j != i])
            cctx = (
                me,
                anc_far | ({parent} if parent is not None else frozenset()),
                yv[kids[i - 1]] if i > 0 else None,
                yv[kids[i + 1]] if i + 1 < len(kids) else None,
                frozenset(yv[kids[j]] for j in range(i - 1)),
                frozenset(yv[kids[j]] for j in range(i + 2, len(kids))),
                inc | sib_all | others,
            )
            kid_states.append((c, cctx))
            stack.append((c, cctx))
        child_states[st] = kid_states
    # build bottom-up: process states so that children come first
    done = {}

    def build(st0):
        work = [(st0, False)]
        while work:
            st, expanded = work.pop()
            if st in done:
                continue
            if not expanded:
                work.append((st, True))
                for cs in child_states[st]:
                    if cs not in done:
                        work.append((cs, False))
                continue
            e, ctx = st
            labels, _, values = entries[e]
            v = holds(e, ctx)
            nv = dict(values)
            nv[member] = v if existential else not v
            kid_ids = tuple(done[cs] for cs in child_states[st])
            key = (labels, kid_ids, tuple(nv.values()))
            if key not in table:
                table[key] = len(new_entries)
                new_entries.append((labels, kid_ids, nv))
            done[st] = table[key]
        return done[st0]

    new_root = build((root, root_ctx))
    return new_entries, new_root
