"""FO2 formulas over tree signatures: AST, parser, printer and structural helpers.

Binary atoms read top-down / left-to-right: ``ParentOf(u, v)`` says u is the
parent of v, ``AncOf(u, v)`` that u is a proper ancestor of v,
``LeftSibOf(u, v)`` that u is the immediate left sibling of v and
``LeftOf(u, v)`` its transitive closure.  ``ChildOf`` and ``DescOf`` are
accepted on input and normalized by swapping arguments.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterator

VARS = ("x", "y")
RELATIONS = ("ParentOf", "AncOf", "LeftSibOf", "LeftOf")
INVERSES = {"ChildOf": "ParentOf", "DescOf": "AncOf"}
KEYWORDS = {"exists", "forall", "true", "false"} | set(RELATIONS) | set(INVERSES)


class FormulaError(ValueError):
    """Raised for malformed formula text or ill-formed ASTs."""

    def __init__(self, msg, pos=None):
        if pos is not None:
            msg = f"{msg} (at position {pos})"
        super().__init__(msg)
        self.pos = pos


class Formula:
    __slots__ = ()

    def __and__(self, other):
        return And(self, other)

    def __or__(self, other):
        return Or(self, other)

    def __invert__(self):
        return Not(self)

    def __str__(self):
        return render(self)


@dataclass(frozen=True, eq=True)
class Const(Formula):
    value: bool


@dataclass(frozen=True)
class Pred(Formula):
    name: str
    var: str


@dataclass(frozen=True)
class Eq(Formula):
    left: str
    right: str


@dataclass(frozen=True)
class Rel(Formula):
    name: str
    left: str
    right: str


@dataclass(frozen=True)
class Not(Formula):
    sub: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Iff(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula


def _cached_hash(self):
    try:
        return self.__dict__["_h"]
    except KeyError:
        h = hash((type(self).__name__,) + tuple(self.__dict__[k] for k in self.__dataclass_fields__))
        object.__setattr__(self, "_h", h)
        return h


# generated dataclass hashes recurse through the whole formula on every call;
# large generated formulas are hashed constantly, so memoize per node
for _cls in (Const, Pred, Eq, Rel, Not, And, Or, Implies, Iff, Exists, Forall):
    _cls.__hash__ = _cached_hash

TRUE = Const(True)
FALSE = Const(False)
BINARY = (And, Or, Implies, Iff)
QUANTIFIERS = (Exists, Forall)


class Vocabulary(enum.Enum):
    FULL = "Full"
    NO_ANC_OF = "NoAncOf"
    PAR_OF = "ParOf"
    NO_PAR_OF = "NoParOf"
    ANC_OF = "AncOf"

    @classmethod
    def parse(cls, text):
        for v in cls:
            if v.value.lower() == text.lower():
                return v
        raise ValueError(f"unknown vocabulary {text!r}")

    def admits(self, relations):
        relations = set(relations)
        if self is Vocabulary.FULL:
            return True
        if self is Vocabulary.NO_ANC_OF:
            return "AncOf" not in relations
        if self is Vocabulary.PAR_OF:
            return relations <= {"ParentOf"}
        if self is Vocabulary.NO_PAR_OF:
            return "ParentOf" not in relations
        return relations <= {"AncOf"}


# ---------------------------------------------------------------- helpers

def conj(items):
    items = list(items)
    if not items:
        return TRUE
    out = items[0]
    for f in items[1:]:
        out = And(out, f)
    return out


def disj(items):
    items = list(items)
    if not items:
        return FALSE
    out = items[0]
    for f in items[1:]:
        out = Or(out, f)
    return out


def children(f):
    if isinstance(f, Not):
        return (f.sub,)
    if isinstance(f, BINARY):
        return (f.left, f.right)
    if isinstance(f, QUANTIFIERS):
        return (f.body,)
    return ()


def subformulas(f) -> Iterator[Formula]:
    """Post-order traversal (children before parents), duplicates included."""
    stack = [(f, False)]
    while stack:
        g, done = stack.pop()
        if done:
            yield g
            continue
        stack.append((g, True))
        for c in reversed(children(g)):
            stack.append((c, False))


def size(f):
    return sum(1 for _ in subformulas(f))


_FV_CACHE: dict = {}


def free_vars(f) -> frozenset:
    try:
        return _FV_CACHE[f]
    except KeyError:
        pass
    if isinstance(f, Pred):
        out = frozenset((f.var,))
    elif isinstance(f, (Eq, Rel)):
        out = frozenset((f.left, f.right))
    elif isinstance(f, Const):
        out = frozenset()
    elif isinstance(f, QUANTIFIERS):
        out = free_vars(f.body) - {f.var}
    else:
        out = frozenset().union(*(free_vars(c) for c in children(f)))
    if len(_FV_CACHE) > 200_000:
        _FV_CACHE.clear()
    _FV_CACHE[f] = out
    return out


def is_sentence(f):
    return not free_vars(f)


def predicates(f):
    return frozenset(g.name for g in subformulas(f) if isinstance(g, Pred))


def relations(f):
    return frozenset(g.name for g in subformulas(f) if isinstance(g, Rel))


def swap_vars(f):
    """Rename x <-> y everywhere (bound and free); preserves meaning up to the swap."""
    s = {"x": "y", "y": "x"}
    if isinstance(f, Pred):
        return Pred(f.name, s[f.var])
    if isinstance(f, Eq):
        return Eq(s[f.left], s[f.right])
    if isinstance(f, Rel):
        return Rel(f.name, s[f.left], s[f.right])
    if isinstance(f, Const):
        return f
    if isinstance(f, Not):
        return Not(swap_vars(f.sub))
    if isinstance(f, BINARY):
        return type(f)(swap_vars(f.left), swap_vars(f.right))
    if isinstance(f, QUANTIFIERS):
        return type(f)(s[f.var], swap_vars(f.body))
    raise FormulaError(f"not a formula: {f!r}")


def _first_var(f):
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Pred):
            return g.var
        if isinstance(g, (Eq, Rel)):
            return g.left
        if isinstance(g, QUANTIFIERS):
            return g.var
        stack.extend(reversed(children(g)))
    return None


def normalize_var(f):
    """Return f with its single free variable renamed to x.

    A sentence means the same after swapping x and y, so of the two variants
    the one whose first variable occurrence (pre-order) is x is chosen; that
    keeps the renamed children of normalized formulas canonical too.
    """
    fv = free_vars(f)
    if fv == {"y"} or (not fv and _first_var(f) == "y"):
        return swap_vars(f)
    return f


def check_well_formed(f):
    for g in subformulas(f):
        if isinstance(g, Pred) and g.var not in VARS:
            raise FormulaError(f"third variable {g.var!r}")
        if isinstance(g, (Eq, Rel)) and not {g.left, g.right} <= set(VARS):
            raise FormulaError("third variable in atom")
        if isinstance(g, Rel) and g.name not in RELATIONS:
            raise FormulaError(f"unknown relation {g.name!r}")
        if isinstance(g, QUANTIFIERS) and g.var not in VARS:
            raise FormulaError(f"third variable {g.var!r}")
    return f


# ---------------------------------------------------------------- vocabulary / closure

def vocabulary_of(f) -> frozenset:
    """All vocabulary tags admitting every binary atom of f."""
    rels = relations(f)
    return frozenset(v for v in Vocabulary if v.admits(rels))


class ClosureBasis:
    """Ordered, duplicate-free one-variable subformulas of a sentence.

    Members are normalized to free variable x; the order (post-order, first
    occurrence) fixes the bit positions of phi-types.
    """

    def __init__(self, members):
        self.members = tuple(members)
        self.index = {m: i for i, m in enumerate(self.members)}
        self._hash = hash(self.members)

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, i):
        return self.members[i]

    def __eq__(self, other):
        return isinstance(other, ClosureBasis) and self.members == other.members

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"ClosureBasis([{', '.join(render(m) for m in self.members)}])"

    def position(self, f):
        return self.index[normalize_var(f)]


def one_var_closure(f) -> ClosureBasis:
    seen = {}
    for g in subformulas(f):
        if len(free_vars(g)) <= 1:
            g = normalize_var(g)
            seen.setdefault(g, None)
    return ClosureBasis(seen)


# ---------------------------------------------------------------- rendering

_BIN_OP = {And: "&", Or: "|", Implies: "->", Iff: "<->"}


def render(f) -> str:
    return _render(f, top=True)


def _render(f, top=False):
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Pred):
        return f"{f.name}({f.var})"
    if isinstance(f, Eq):
        return f"{f.left} = {f.right}"
    if isinstance(f, Rel):
        return f"{f.name}({f.left},{f.right})"
    if isinstance(f, Not):
        inner = f.sub
        if isinstance(inner, Eq):
            return f"!({_render(inner)})"
        return "!" + _render(inner)
    if isinstance(f, BINARY):
        return f"({_render(f.left)} {_BIN_OP[type(f)]} {_render(f.right)})"
    if isinstance(f, QUANTIFIERS):
        kw = "exists" if isinstance(f, Exists) else "forall"
        text = f"{kw} {f.var}. {_render(f.body, top=True)}"
        return text if top else f"({text})"
    raise FormulaError(f"not a formula: {f!r}")


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(r"\s*(?:(<->|->|[!&|().,=])|([A-Za-z_][A-Za-z0-9_]*))")


def _tokenize(text):
    pos = 0
    out = []
    while True:
        m = _TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise FormulaError(f"unexpected character {text[pos:].strip()[0]!r}", pos)
            break
        start = m.start(1) if m.group(1) else m.start(2)
        out.append((m.group(1) or m.group(2), start))
        pos = m.end()
    out.append(("<eof>", len(text)))
    return out


class _Parser:
    def __init__(self, text, signature):
        self.toks = _tokenize(text)
        self.i = 0
        self.signature = None if signature is None else set(signature)

    def peek(self):
        return self.toks[self.i][0]

    def take(self, expected=None):
        tok, pos = self.toks[self.i]
        if expected is not None and tok != expected:
            raise FormulaError(f"expected {expected!r}, found {tok!r}", pos)
        self.i += 1
        return tok

    def pos(self):
        return self.toks[self.i][1]

    def var(self):
        pos = self.pos()
        tok = self.take()
        if tok not in VARS:
            if re.fullmatch(r"[A-Za-z_]\w*", tok) and tok not in KEYWORDS:
                raise FormulaError(f"third variable {tok!r}: only x and y are allowed", pos)
            raise FormulaError(f"expected variable, found {tok!r}", pos)
        return tok

    def formula(self):
        left = self.implication()
        while self.peek() == "<->":
            self.take()
            left = Iff(left, self.implication())
        return left

    def implication(self):
        left = self.disjunction()
        if self.peek() == "->":
            self.take()
            return Implies(left, self.implication())
        return left

    def disjunction(self):
        left = self.conjunction()
        while self.peek() == "|":
            self.take()
            left = Or(left, self.conjunction())
        return left

    def conjunction(self):
        left = self.unary()
        while self.peek() == "&":
            self.take()
            left = And(left, self.unary())
        return left

    def unary(self):
        tok = self.peek()
        pos = self.pos()
        if tok == "!":
            self.take()
            return Not(self.unary())
        if tok in ("exists", "forall"):
            self.take()
            v = self.var()
            self.take(".")
            body = self.formula()
            return Exists(v, body) if tok == "exists" else Forall(v, body)
        if tok == "(":
            self.take()
            f = self.formula()
            self.take(")")
            return f
        if tok in ("true", "false"):
            self.take()
            return Const(tok == "true")
        if tok in VARS:
            left = self.var()
            self.take("=")
            return Eq(left, self.var())
        if re.fullmatch(r"[A-Za-z_]\w*", tok):
            self.take()
            self.take("(")
            a = self.var()
            if tok in RELATIONS or tok in INVERSES:
                self.take(",")
                b = self.var()
                self.take(")")
                if tok in INVERSES:
                    return Rel(INVERSES[tok], b, a)
                return Rel(tok, a, b)
            if self.peek() == ",":
                raise FormulaError(f"unknown binary predicate {tok!r}", pos)
            self.take(")")
            if self.signature is not None and tok not in self.signature:
                raise FormulaError(f"unknown predicate {tok!r}", pos)
            return Pred(tok, a)
        raise FormulaError(f"unexpected token {tok!r}", pos)


def parse_fo2(text, signature=None) -> Formula:
    """Parse formula text; ``signature`` (if given) restricts unary predicate names."""
    p = _Parser(text, signature)
    f = p.formula()
    if p.peek() != "<eof>":
        raise FormulaError(f"trailing input {p.peek()!r}", p.pos())
    return f
