"""Modal tree logics (UTL / TL over trees), navigational XPath, and translations into them.

Modalities, all strict:

=========  ==========  ==========================================
kind       text        holds at n when ...
=========  ==========  ==========================================
F_CH       ``<CH>``    some proper descendant satisfies the body
P_CH       ``<-CH>``   some proper ancestor does
X_CH       ``(X CH)``  some child does
Y_CH       ``(X -CH)`` the parent does
F_NS       ``<NS>``    some later sibling does
P_NS       ``<-NS>``   some earlier sibling does
X_NS       ``(X NS)``  the next sibling does
Y_NS       ``(X -NS)`` the previous sibling does
=========  ==========  ==========================================
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from . import syntax as S
from .syntax import FormulaError
from .trees import Tree

ATOM, TRUE, FALSE, NOT, AND, OR = "atom", "true", "false", "not", "and", "or"
F_CH, P_CH, X_CH, Y_CH = "F_CH", "P_CH", "X_CH", "Y_CH"
F_NS, P_NS, X_NS, Y_NS = "F_NS", "P_NS", "X_NS", "Y_NS"
MODALITIES = (F_CH, P_CH, X_CH, Y_CH, F_NS, P_NS, X_NS, Y_NS)
VERTICAL = (F_CH, P_CH)
STEP_CH = (X_CH, Y_CH)

_TEXT = {F_CH: "<CH>", P_CH: "<-CH>", X_CH: "(X CH)", Y_CH: "(X -CH)",
         F_NS: "<NS>", P_NS: "<-NS>", X_NS: "(X NS)", Y_NS: "(X -NS)"}


class Modal:
    """Hash-consed modal formula; structurally equal formulas are the same object."""

    __slots__ = ("kind", "name", "args", "uid", "__weakref__")
    _table: dict = {}

    def __new__(cls, kind, name=None, args=()):
        key = (kind, name, tuple(a.uid for a in args))
        hit = cls._table.get(key)
        if hit is not None:
            return hit
        self = object.__new__(cls)
        self.kind, self.name, self.args = kind, name, tuple(args)
        self.uid = len(cls._table)
        cls._table[key] = self
        return self

    def __reduce__(self):
        return (Modal, (self.kind, self.name, self.args))

    def __repr__(self):
        return f"Modal({render_modal(self)!r})"

    def __str__(self):
        return render_modal(self)

    def __lt__(self, other):
        return self.uid < other.uid


TOP = Modal(TRUE)
BOTTOM = Modal(FALSE)


def atom(name):
    return Modal(ATOM, name)


def neg(a):
    if a is TOP:
        return BOTTOM
    if a is BOTTOM:
        return TOP
    if a.kind == NOT:
        return a.args[0]
    return Modal(NOT, None, (a,))


def _flatten(kind, items):
    out = []
    for a in items:
        if a.kind == kind:
            out.extend(_flatten(kind, a.args))
        else:
            out.append(a)
    return out


def conj(*items):
    absorbing, unit = BOTTOM, TOP
    parts = []
    for a in _flatten(AND, items):
        if a is absorbing:
            return absorbing
        if a is unit or a in parts:
            continue
        parts.append(a)
    if any(neg(a) in parts for a in parts):
        return absorbing
    if not parts:
        return unit
    out = parts[0]
    for a in parts[1:]:
        out = Modal(AND, None, (out, a))
    return out


def disj(*items):
    absorbing, unit = TOP, BOTTOM
    parts = []
    for a in _flatten(OR, items):
        if a is absorbing:
            return absorbing
        if a is unit or a in parts:
            continue
        parts.append(a)
    if any(neg(a) in parts for a in parts):
        return absorbing
    if not parts:
        return unit
    out = parts[0]
    for a in parts[1:]:
        out = Modal(OR, None, (out, a))
    return out


def modality(kind, a):
    if kind not in MODALITIES:
        raise FormulaError(f"unknown modality {kind!r}")
    if a is BOTTOM:
        return BOTTOM
    return Modal(kind, None, (a,))


def subformulas(m):
    """Distinct subformulas in post-order."""
    seen = {}
    stack = [(m, False)]
    while stack:
        g, done = stack.pop()
        if g.uid in seen:
            continue
        if done:
            seen[g.uid] = g
            continue
        stack.append((g, True))
        for c in reversed(g.args):
            if c.uid not in seen:
                stack.append((c, False))
    return list(seen.values())


def dag_size(m):
    return len(subformulas(m))


def tree_size(m):
    memo = {}
    for g in subformulas(m):
        memo[g.uid] = 1 + sum(memo[c.uid] for c in g.args)
    return memo[m.uid]


def uses_step_ch(m):
    return any(g.kind in STEP_CH for g in subformulas(m))


def modalities_used(m):
    return frozenset(g.kind for g in subformulas(m) if g.kind in MODALITIES)


def atoms_of(m):
    return frozenset(g.name for g in subformulas(m) if g.kind == ATOM)


# ---------------------------------------------------------------- text syntax

def render_modal(m):
    memo = {}
    for g in subformulas(m):
        if g.kind == ATOM:
            s = g.name
        elif g.kind == TRUE:
            s = "true"
        elif g.kind == FALSE:
            s = "false"
        elif g.kind == NOT:
            s = "!" + memo[g.args[0].uid]
        elif g.kind in (AND, OR):
            op = " & " if g.kind == AND else " | "
            s = "(" + memo[g.args[0].uid] + op + memo[g.args[1].uid] + ")"
        else:
            s = _TEXT[g.kind] + memo[g.args[0].uid]
        memo[g.uid] = s
    return memo[m.uid]


_MTOK = re.compile(r"\s*(?:(<-?(?:CH|NS)>|\(X\s+-?(?:CH|NS)\))|([!&|()])|([A-Za-z_][A-Za-z0-9_]*))")
_BY_TEXT = {re.sub(r"\s+", " ", v): k for k, v in _TEXT.items()}


def _lex(text, pattern):
    toks = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        mt = pattern.match(text, pos)
        if not mt or mt.end() == pos:
            raise FormulaError(f"unexpected character {text[pos:].lstrip()[:1]!r}", pos)
        toks.append((mt.group(mt.lastindex), mt.start(mt.lastindex), mt.lastindex))
        pos = mt.end()
    return toks


def parse_modal(text) -> Modal:
    toks = _lex(text, _MTOK)
    i = 0

    def peek():
        return toks[i][0] if i < len(toks) else None

    def take(expected=None):
        nonlocal i
        if i >= len(toks):
            raise FormulaError("unexpected end of input", len(text))
        tok, pos, _ = toks[i]
        if expected is not None and tok != expected:
            raise FormulaError(f"expected {expected!r}, found {tok!r}", pos)
        i += 1
        return tok

    def disjunction():
        out = conjunction()
        while peek() == "|":
            take()
            out = Modal(OR, None, (out, conjunction()))
        return out

    def conjunction():
        out = unary()
        while peek() == "&":
            take()
            out = Modal(AND, None, (out, unary()))
        return out

    def unary():
        tok = peek()
        if tok is None:
            raise FormulaError("unexpected end of input", len(text))
        if tok == "!":
            take()
            return Modal(NOT, None, (unary(),))
        if toks[i][2] == 1:
            take()
            kind = _BY_TEXT[re.sub(r"\s+", " ", tok)]
            return Modal(kind, None, (unary(),))
        if tok == "(":
            take()
            out = disjunction()
            take(")")
            return out
        if toks[i][2] == 3:
            take()
            if tok == "true":
                return TOP
            if tok == "false":
                return BOTTOM
            return atom(tok)
        raise FormulaError(f"unexpected token {tok!r}", toks[i][1])

    out = disjunction()
    if i != len(toks):
        raise FormulaError(f"trailing input {toks[i][0]!r}", toks[i][1])
    return out


# ---------------------------------------------------------------- semantics

def _relation_matrices(ix):
    a = ix.anc.astype(np.int32)
    p = ix.par.astype(np.int32)
    ls = ix.lsib.astype(np.int32)
    lf = ix.left.astype(np.int32)
    # value at node i = any over j of M[i, j] & body[j]
    return {F_CH: a, P_CH: a.T.copy(), X_CH: p, Y_CH: p.T.copy(),
            F_NS: lf, P_NS: lf.T.copy(), X_NS: ls, Y_NS: ls.T.copy()}


def eval_modal_batch(index, labels, m, batch=1):
    """Truth of every subformula of m: uid -> bool array (L, N).

    ``labels`` maps atom names to (L, N) arrays (missing atoms are false).
    """
    mats = _relation_matrices(index)
    n = index.n
    out = {}
    for g in subformulas(m):
        k = g.kind
        if k == ATOM:
            v = labels.get(g.name)
            v = np.zeros((batch, n), bool) if v is None else np.broadcast_to(v, (max(batch, v.shape[0]), n))
        elif k == TRUE:
            v = np.ones((batch, n), bool)
        elif k == FALSE:
            v = np.zeros((batch, n), bool)
        elif k == NOT:
            v = ~out[g.args[0].uid]
        elif k == AND:
            v = out[g.args[0].uid] & out[g.args[1].uid]
        elif k == OR:
            v = out[g.args[0].uid] | out[g.args[1].uid]
        else:
            v = (out[g.args[0].uid].astype(np.int32) @ mats[k].T) > 0
        out[g.uid] = v
    return out


def eval_modal_all(t: Tree, m: Modal):
    """Truth vector (pre-order) of every subformula of m on t, keyed by formula."""
    ix = t.index
    labels = {p: ix.label_vector(p)[None, :] for p in atoms_of(m)}
    raw = eval_modal_batch(ix, labels, m)
    return {g: raw[g.uid][0] for g in subformulas(m)}


def eval_modal(t: Tree, m: Modal, n=()) -> bool:
    return bool(eval_modal_all(t, m)[m][t.index.pos[tuple(n)]])


# ---------------------------------------------------------------- NavXP

AXIS_NAMES = ("self", "child", "descendant", "descendant-or-self", "ancestor-or-self",
              "next-sibling", "following-sibling", "preceding-sibling", "previous-sibling")


@dataclass(frozen=True)
class Axis:
    name: str


@dataclass(frozen=True)
class Step:
    step: object
    test: object


@dataclass(frozen=True)
class Seq:
    first: object
    second: object


@dataclass(frozen=True)
class Union:
    left: object
    right: object


@dataclass(frozen=True)
class PathFilter:
    path: object


@dataclass(frozen=True)
class Lab:
    name: str


@dataclass(frozen=True)
class FAnd:
    left: object
    right: object


@dataclass(frozen=True)
class FOr:
    left: object
    right: object


@dataclass(frozen=True)
class FNot:
    sub: object


def navxp_size(q):
    if isinstance(q, (Axis, Lab)):
        return 1
    if isinstance(q, (PathFilter, FNot)):
        return 1 + navxp_size(q.path if isinstance(q, PathFilter) else q.sub)
    if isinstance(q, Step):
        return 1 + navxp_size(q.step) + navxp_size(q.test)
    if isinstance(q, (Seq, Union, FAnd, FOr)):
        a, b = (q.first, q.second) if isinstance(q, Seq) else (q.left, q.right)
        return 1 + navxp_size(a) + navxp_size(b)
    raise FormulaError(f"not a NavXP expression: {q!r}")


_XTOK = re.compile(r"\s*(?:(lab\(\))|([/|\[\]()=])|([A-Za-z_][A-Za-z0-9_-]*))")


def parse_navxp(text):
    """Parse a NavXP filter, e.g. ``descendant[lab()=P]/child[not lab()=Q]``."""
    toks = _lex(text, _XTOK)
    i = 0

    def peek(k=0):
        return toks[i + k][0] if i + k < len(toks) else None

    def take(expected=None):
        nonlocal i
        if i >= len(toks):
            raise FormulaError("unexpected end of input", len(text))
        tok, pos, _ = toks[i]
        if expected is not None and tok != expected:
            raise FormulaError(f"expected {expected!r}, found {tok!r}", pos)
        i += 1
        return tok

    def filt():
        out = f_and()
        while peek() == "or":
            take()
            out = FOr(out, f_and())
        return out

    def f_and():
        out = f_not()
        while peek() == "and":
            take()
            out = FAnd(out, f_not())
        return out

    def f_not():
        nonlocal i
        tok = peek()
        if tok == "not":
            take()
            return FNot(f_not())
        if tok == "lab()":
            take()
            take("=")
            name = take()
            if toks[i - 1][2] != 3:
                raise FormulaError("label name expected", toks[i - 1][1])
            return Lab(name)
        if tok == "(":
            save = i
            try:
                return PathFilter(path())
            except FormulaError:
                i = save
            take("(")
            out = filt()
            take(")")
            return out
        return PathFilter(path())

    def path():
        out = seq()
        while peek() == "|":
            take()
            out = Union(out, seq())
        return out

    def seq():
        out = step()
        while peek() == "/":
            take()
            out = Seq(out, step())
        return out

    def step():
        tok = peek()
        if tok == "(":
            take()
            out = path()
            take(")")
        else:
            if tok is None:
                raise FormulaError("unexpected end of input", len(text))
            pos = toks[i][1]
            take()
            if tok not in AXIS_NAMES:
                raise FormulaError(f"unsupported axis {tok!r}", pos)
            out = Axis(tok)
        while peek() == "[":
            take()
            out = Step(out, filt())
            take("]")
        return out

    out = filt()
    if i != len(toks):
        raise FormulaError(f"trailing input {toks[i][0]!r}", toks[i][1])
    return out


def render_navxp(q):
    if isinstance(q, Axis):
        return q.name
    if isinstance(q, Step):
        return f"{_render_step_base(q.step)}[{render_navxp(q.test)}]"
    if isinstance(q, Seq):
        return f"{_render_seq_part(q.first)}/{_render_seq_part(q.second)}"
    if isinstance(q, Union):
        return f"({render_navxp(q.left)} | {render_navxp(q.right)})"
    if isinstance(q, PathFilter):
        return render_navxp(q.path)
    if isinstance(q, Lab):
        return f"lab()={q.name}"
    if isinstance(q, FAnd):
        return f"({render_navxp(q.left)} and {render_navxp(q.right)})"
    if isinstance(q, FOr):
        return f"({render_navxp(q.left)} or {render_navxp(q.right)})"
    if isinstance(q, FNot):
        return f"not {render_navxp(q.sub)}"
    raise FormulaError(f"not a NavXP expression: {q!r}")


def _render_step_base(p):
    return render_navxp(p) if isinstance(p, (Axis, Step, Union)) else f"({render_navxp(p)})"


def _render_seq_part(p):
    return render_navxp(p) if isinstance(p, (Axis, Step, Union, Seq)) else f"({render_navxp(p)})"


def _axis_matrix(ix, name):
    eye = np.eye(ix.n, dtype=bool)
    return {
        "self": eye, "child": ix.par, "descendant": ix.anc,
        "descendant-or-self": ix.anc | eye, "ancestor-or-self": ix.anc.T | eye,
        "next-sibling": ix.lsib, "following-sibling": ix.left,
        "preceding-sibling": ix.left.T, "previous-sibling": ix.lsib.T,
    }[name]


def navxp_path_matrix(t: Tree, p):
    """Denotation of a path: bool matrix M[i, j] iff (node i, node j) in [[p]]."""
    ix = t.index
    if isinstance(p, Axis):
        if p.name not in AXIS_NAMES:
            raise FormulaError(f"unsupported axis {p.name!r}")
        return _axis_matrix(ix, p.name)
    if isinstance(p, Step):
        return navxp_path_matrix(t, p.step) & navxp_filter_vector(t, p.test)[None, :]
    if isinstance(p, Seq):
        a = navxp_path_matrix(t, p.first).astype(np.int32)
        b = navxp_path_matrix(t, p.second).astype(np.int32)
        return (a @ b) > 0
    if isinstance(p, Union):
        return navxp_path_matrix(t, p.left) | navxp_path_matrix(t, p.right)
    raise FormulaError(f"not a NavXP path: {p!r}")


def navxp_filter_vector(t: Tree, q):
    ix = t.index
    if isinstance(q, PathFilter):
        return navxp_path_matrix(t, q.path).any(axis=1)
    if isinstance(q, (Axis, Step, Seq, Union)):
        return navxp_path_matrix(t, q).any(axis=1)
    if isinstance(q, Lab):
        return ix.label_vector(q.name)
    if isinstance(q, FAnd):
        return navxp_filter_vector(t, q.left) & navxp_filter_vector(t, q.right)
    if isinstance(q, FOr):
        return navxp_filter_vector(t, q.left) | navxp_filter_vector(t, q.right)
    if isinstance(q, FNot):
        return ~navxp_filter_vector(t, q.sub)
    raise FormulaError(f"not a NavXP filter: {q!r}")


def eval_navxp(t: Tree, q):
    """Set of node paths at which the filter q holds."""
    v = navxp_filter_vector(t, q)
    return {t.index.paths[i] for i in np.nonzero(v)[0].tolist()}


def holds(t: Tree, q) -> bool:
    return bool(navxp_filter_vector(t, q)[0])


_AXIS_STEP = {
    "child": lambda a: modality(X_CH, a),
    "descendant": lambda a: modality(F_CH, a),
    "descendant-or-self": lambda a: disj(a, modality(F_CH, a)),
    "ancestor-or-self": lambda a: disj(a, modality(P_CH, a)),
    "next-sibling": lambda a: modality(X_NS, a),
    "following-sibling": lambda a: modality(F_NS, a),
    "preceding-sibling": lambda a: modality(P_NS, a),
    "previous-sibling": lambda a: modality(Y_NS, a),
    "self": lambda a: a,
}


def navxp_to_modal(q) -> Modal:
    """Compile a NavXP filter to an equivalent modal formula (linear DAG size)."""
    memo = {}

    def path(p, target):
        key = (id(p), target.uid)
        if key in memo:
            return memo[key]
        if isinstance(p, Axis):
            if p.name not in _AXIS_STEP:
                raise FormulaError(f"unsupported axis {p.name!r}")
            out = _AXIS_STEP[p.name](target)
        elif isinstance(p, Step):
            out = path(p.step, conj(target, filt(p.test)))
        elif isinstance(p, Seq):
            out = path(p.first, path(p.second, target))
        elif isinstance(p, Union):
            out = disj(path(p.left, target), path(p.right, target))
        else:
            raise FormulaError(f"not a NavXP path: {p!r}")
        memo[key] = out
        return out

    def filt(f):
        if isinstance(f, PathFilter):
            return path(f.path, TOP)
        if isinstance(f, (Axis, Step, Seq, Union)):
            return path(f, TOP)
        if isinstance(f, Lab):
            return atom(f.name)
        if isinstance(f, FAnd):
            return conj(filt(f.left), filt(f.right))
        if isinstance(f, FOr):
            return disj(filt(f.left), filt(f.right))
        if isinstance(f, FNot):
            return neg(filt(f.sub))
        raise FormulaError(f"not a NavXP filter: {f!r}")

    return filt(q)


# ---------------------------------------------------------------- FO2 -> modal

from .checker import (ANC_FAR, CHILD, DESC_FAR, EQ, INC, LEFT_FAR, NEXT, PARENT, PREV,  # noqa: E402
                      RIGHT_FAR, atom_truth, split_body, substitute)

_PAIR_COVERS = (
    ({CHILD, DESC_FAR}, lambda a: modality(F_CH, a)),
    ({PARENT, ANC_FAR}, lambda a: modality(P_CH, a)),
    ({NEXT, RIGHT_FAR}, lambda a: modality(F_NS, a)),
    ({PREV, LEFT_FAR}, lambda a: modality(P_NS, a)),
)
_SINGLE = {
    CHILD: lambda a: modality(X_CH, a),
    DESC_FAR: lambda a: modality(X_CH, modality(F_CH, a)),
    PARENT: lambda a: modality(Y_CH, a),
    ANC_FAR: lambda a: modality(Y_CH, modality(P_CH, a)),
    NEXT: lambda a: modality(X_NS, a),
    RIGHT_FAR: lambda a: modality(X_NS, modality(F_NS, a)),
    PREV: lambda a: modality(Y_NS, a),
    LEFT_FAR: lambda a: modality(Y_NS, modality(P_NS, a)),
}
_ALL_INCOMPARABLE = {PREV, NEXT, LEFT_FAR, RIGHT_FAR, INC}


def _sib(a):
    return disj(modality(F_NS, a), modality(P_NS, a))


def _self_or_below(a):
    return disj(a, modality(F_CH, a))


def somewhere(kinds, a):
    """Modal formula: some node at one of the given order types satisfies a."""
    kinds = set(kinds)
    parts = []
    if _ALL_INCOMPARABLE <= kinds:
        b = _sib(_self_or_below(a))
        parts.append(disj(b, modality(P_CH, b)))
        kinds -= _ALL_INCOMPARABLE
    if INC in kinds:
        parts.append(disj(_sib(modality(F_CH, a)), modality(P_CH, _sib(_self_or_below(a)))))
        kinds.discard(INC)
    for cover, op in _PAIR_COVERS:
        if cover <= kinds:
            parts.append(op(a))
            kinds -= cover
    for k in sorted(kinds):
        if k == EQ:
            parts.append(a)
        else:
            parts.append(_SINGLE[k](a))
    return disj(*parts)


ROOT = neg(modality(P_CH, TOP))


def _anywhere(a):
    """Holds at every node iff some node of the tree satisfies a."""
    at_root = conj(ROOT, _self_or_below(a))
    return disj(at_root, modality(P_CH, at_root))


def fo2_to_modal(f) -> Modal:
    """Translate an FO2 sentence into a modal formula equivalent at the root."""
    if S.free_vars(f):
        raise FormulaError("fo2_to_modal expects a sentence")
    tr = _Translator()
    return tr.closed(S.check_well_formed(f), at_root=True)


class _Translator:
    def __init__(self):
        self.memo = {}

    def closed(self, f, at_root=False):
        """A sentence as a modal formula valid at the root (or everywhere)."""
        if isinstance(f, (S.Exists, S.Forall)):
            body = S.normalize_var(f.body)
            if isinstance(f, S.Forall):
                inner = neg(self.unary(body))
                found = _self_or_below(inner) if at_root else _anywhere(inner)
                return neg(found)
            inner = self.unary(body)
            return _self_or_below(inner) if at_root else _anywhere(inner)
        if isinstance(f, S.Const):
            return TOP if f.value else BOTTOM
        if isinstance(f, S.Not):
            return neg(self.closed(f.sub, at_root))
        if isinstance(f, (S.And, S.Or, S.Implies, S.Iff)):
            a = self.closed(f.left, at_root)
            b = self.closed(f.right, at_root)
            return _boolean(f, a, b)
        raise FormulaError(f"unexpected closed formula {S.render(f)}")

    def unary(self, f):
        """Formula with free variables within {x}, evaluated at the node named x."""
        f = S.normalize_var(f)
        hit = self.memo.get(f)
        if hit is not None:
            return hit
        if not S.free_vars(f):
            out = self.closed(f)
        elif isinstance(f, S.Pred):
            out = atom(f.name)
        elif isinstance(f, S.Eq):
            out = TOP
        elif isinstance(f, S.Rel):
            out = BOTTOM
        elif isinstance(f, S.Not):
            out = neg(self.unary(f.sub))
        elif isinstance(f, (S.And, S.Or, S.Implies, S.Iff)):
            out = _boolean(f, self.unary(f.left), self.unary(f.right))
        elif isinstance(f, S.Forall):
            out = neg(self.exists(S.Not(f.body)))
        elif isinstance(f, S.Exists):
            out = self.exists(f.body)
        else:
            raise FormulaError(f"not a formula: {f!r}")
        self.memo[f] = out
        return out

    def exists(self, beta):
        """exists y. beta(x, y) evaluated at x."""
        rels, xprops, yprops = split_body(beta)
        xmods = {g: self.unary(g) for g in xprops}
        ymods = {g: self.unary(S.swap_vars(g)) for g in yprops}
        parts = []
        groups = {}
        for o in (PARENT, CHILD, ANC_FAR, DESC_FAR, PREV, NEXT, LEFT_FAR, RIGHT_FAR, INC):
            key = tuple(atom_truth(a, o) for a in rels)
            groups.setdefault(key, []).append(o)
        eq_key = tuple(atom_truth(a, EQ) for a in rels)
        if len(groups) == 1 and eq_key in groups:
            # the relations cannot tell y apart from x: a global search from the root
            env = dict(zip(rels, eq_key))
            return self._shannon(beta, env, xprops, xmods, ymods, None)
        # y = x: every leaf becomes a property of x itself
        env = dict(zip(rels, eq_key))
        parts.append(self._expand(beta, env, {**xmods, **ymods}))
        for key, kinds in groups.items():
            env = dict(zip(rels, key))
            parts.append(self._shannon(beta, env, xprops, xmods, ymods, kinds))
        return disj(*parts)

    def _shannon(self, beta, env, xprops, xmods, ymods, kinds):
        """Case split on the x-properties; ``kinds=None`` ranges over every node."""
        place = _anywhere if kinds is None else (lambda a: somewhere(kinds, a))
        residual = substitute(beta, env)
        if residual is False:
            return BOTTOM
        if residual is True:
            return TOP if kinds is None else somewhere(kinds, TOP)
        pending = [g for g in xprops if g not in env]
        if not pending:
            return place(self._expand(beta, env, ymods))
        g = pending[0]
        pos = self._shannon(beta, {**env, g: True}, xprops, xmods, ymods, kinds)
        negb = self._shannon(beta, {**env, g: False}, xprops, xmods, ymods, kinds)
        return disj(conj(xmods[g], pos), conj(neg(xmods[g]), negb))

    def _expand(self, f, env, mods):
        """Boolean skeleton of f with fixed leaves from env and others from mods."""
        if f in env:
            return TOP if env[f] else BOTTOM
        if f in mods:
            return mods[f]
        if isinstance(f, S.Const):
            return TOP if f.value else BOTTOM
        if isinstance(f, S.Not):
            return neg(self._expand(f.sub, env, mods))
        if isinstance(f, (S.And, S.Or, S.Implies, S.Iff)):
            return _boolean(f, self._expand(f.left, env, mods), self._expand(f.right, env, mods))
        raise FormulaError(f"unclassified leaf {S.render(f)}")


def _boolean(f, a, b):
    if isinstance(f, S.And):
        return conj(a, b)
    if isinstance(f, S.Or):
        return disj(a, b)
    if isinstance(f, S.Implies):
        return disj(neg(a), b)
    return disj(conj(a, b), conj(neg(a), neg(b)))


# ---------------------------------------------------------------- modal -> FO2 (for re-checking)

_STANDARD = {
    F_CH: ("AncOf", False), P_CH: ("AncOf", True), X_CH: ("ParentOf", False),
    Y_CH: ("ParentOf", True), F_NS: ("LeftOf", False), P_NS: ("LeftOf", True),
    X_NS: ("LeftSibOf", False), Y_NS: ("LeftSibOf", True),
}


def modal_to_fo2(m: Modal, var="x"):
    """Standard two-variable translation: a formula with free variable ``var``."""
    memo = {}
    for g in subformulas(m):
        for v, w in (("x", "y"), ("y", "x")):
            if g.kind == ATOM:
                out = S.Pred(g.name, v)
            elif g.kind == TRUE:
                out = S.TRUE
            elif g.kind == FALSE:
                out = S.FALSE
            elif g.kind == NOT:
                out = S.Not(memo[g.args[0].uid, v])
            elif g.kind in (AND, OR):
                ctor = S.And if g.kind == AND else S.Or
                out = ctor(memo[g.args[0].uid, v], memo[g.args[1].uid, v])
            else:
                rel, inverse = _STANDARD[g.kind]
                atom_ = S.Rel(rel, w, v) if inverse else S.Rel(rel, v, w)
                out = S.Exists(w, S.And(atom_, memo[g.args[0].uid, w]))
            memo[g.uid, v] = out
    return memo[m.uid, var]


def modal_sentence_at_root(m: Modal):
    """FO2 sentence: m holds at the root."""
    return S.Exists("x", S.And(S.Not(S.Exists("y", S.Rel("ParentOf", "y", "x"))), modal_to_fo2(m)))
