"""Finite ordered labelled trees, node paths, axis relations and DAG compression.

Trees are immutable.  A node is addressed by its ``NodePath``: the tuple of
child indices leading to it from the root (the root is ``()``).
"""
from __future__ import annotations

import re
from functools import cached_property

import numpy as np

DEFAULT_UNFOLD_LIMIT = 10**6

AXES = ("ParentOf", "ChildOf", "AncOf", "DescOf", "LeftSibOf", "NextSib",
        "LeftOf", "RightOf", "Incomparable")


class TreeError(ValueError):
    pass


class UnfoldLimitError(TreeError):
    pass


class Tree:
    """Node with a label set and an ordered tuple of child trees."""

    __slots__ = ("labels", "children", "_hash", "size", "height", "__dict__")

    def __init__(self, labels=(), children=()):
        self.labels = frozenset(labels)
        self.children = tuple(children)
        self._hash = hash((self.labels, tuple(c._hash for c in self.children)))
        self.size = 1 + sum(c.size for c in self.children)
        self.height = 1 + max((c.height for c in self.children), default=-1)

    @property
    def depth(self):
        """Number of edges on the longest root-to-leaf path."""
        return self.height

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Tree) or self._hash != other._hash or self.size != other.size:
            return False
        return self.labels == other.labels and self.children == other.children

    def __repr__(self):
        return f"Tree({render_tree(self)!r})"

    def __str__(self):
        return render_tree(self)

    # -- addressing
    def node(self, path):
        t = self
        for i in path:
            try:
                t = t.children[i]
            except IndexError:
                raise TreeError(f"invalid node path {tuple(path)}") from None
        return t

    def has_node(self, path):
        t = self
        for i in path:
            if not 0 <= i < len(t.children):
                return False
            t = t.children[i]
        return True

    def paths(self):
        """All node paths in pre-order (document order)."""
        out = []
        stack = [((), self)]
        while stack:
            p, t = stack.pop()
            out.append(p)
            for i in range(len(t.children) - 1, -1, -1):
                stack.append((p + (i,), t.children[i]))
        return out

    def replace(self, path, sub):
        """Return a copy with the subtree at ``path`` replaced by ``sub``."""
        path = tuple(path)
        if not path:
            return sub
        head, rest = path[0], path[1:]
        if not 0 <= head < len(self.children):
            raise TreeError(f"invalid node path {path}")
        kids = list(self.children)
        kids[head] = kids[head].replace(rest, sub)
        return Tree(self.labels, kids)

    def with_children(self, children):
        return Tree(self.labels, children)

    def leaves(self):
        return [p for p in self.paths() if not self.node(p).children]

    def root_to_leaf_paths(self):
        """Each root-to-leaf path as a list of node paths, top-down."""
        return [[leaf[:k] for k in range(len(leaf) + 1)] for leaf in self.leaves()]

    def max_outdegree(self):
        return max(len(self.node(p).children) for p in self.paths())

    @cached_property
    def index(self) -> "TreeIndex":
        return TreeIndex(self)


class TreeIndex:
    """Flattened pre-order view of a tree with dense relation matrices."""

    def __init__(self, t: Tree):
        paths = []
        nodes = []
        parent = []
        end = []
        stack = [((), t, -1)]
        order = []
        while stack:
            p, sub, par = stack.pop()
            i = len(paths)
            paths.append(p)
            nodes.append(sub)
            parent.append(par)
            order.append(i)
            for k in range(len(sub.children) - 1, -1, -1):
                stack.append((p + (k,), sub.children[k], i))
        n = len(paths)
        self.n = n
        self.paths = paths
        self.nodes = nodes
        self.pos = {p: i for i, p in enumerate(paths)}
        self.parent = np.array(parent, dtype=np.int64)
        self.depth = np.array([len(p) for p in paths], dtype=np.int64)
        self.labels = [s.labels for s in nodes]
        self.child_ids = [[] for _ in range(n)]
        for i in range(1, n):
            self.child_ids[parent[i]].append(i)
        sizes = np.array([s.size for s in nodes], dtype=np.int64)
        self.end = np.arange(n) + sizes  # subtree of i is [i, end[i])
        idx = np.arange(n)
        self.anc = (idx[:, None] < idx[None, :]) & (idx[None, :] < self.end[:, None])
        par = np.zeros((n, n), dtype=bool)
        for i in range(1, n):
            par[parent[i], i] = True
        self.par = par
        lsib = np.zeros((n, n), dtype=bool)
        left = np.zeros((n, n), dtype=bool)
        for kids in self.child_ids:
            for a, b in zip(kids, kids[1:]):
                lsib[a, b] = True
            for ka in range(len(kids)):
                for kb in range(ka + 1, len(kids)):
                    left[kids[ka], kids[kb]] = True
        self.lsib = lsib
        self.left = left
        eye = np.eye(n, dtype=bool)
        self.incomp = ~(self.anc | self.anc.T | eye)

    def relation(self, name):
        return {"ParentOf": self.par, "AncOf": self.anc,
                "LeftSibOf": self.lsib, "LeftOf": self.left}[name]

    def label_vector(self, pred):
        return np.array([pred in lab for lab in self.labels], dtype=bool)


def axis_pairs(t: Tree, axis: str):
    ix = t.index
    mats = {
        "ParentOf": ix.par, "ChildOf": ix.par.T, "AncOf": ix.anc, "DescOf": ix.anc.T,
        "LeftSibOf": ix.lsib, "NextSib": ix.lsib, "LeftOf": ix.left, "RightOf": ix.left.T,
        "Incomparable": ix.incomp,
    }
    if axis not in mats:
        raise TreeError(f"unknown axis {axis!r}")
    rows, cols = np.nonzero(mats[axis])
    return {(ix.paths[i], ix.paths[j]) for i, j in zip(rows, cols)}


def is_uar(t: Tree):
    return all(len(t.node(p).labels) == 1 for p in t.paths())


def signature_of(t: Tree):
    return frozenset().union(*(t.node(p).labels for p in t.paths()))


def is_ancestor(p, q):
    """p is a proper ancestor of q (node paths)."""
    return len(p) < len(q) and tuple(q[: len(p)]) == tuple(p)


# ---------------------------------------------------------------- text format

_TREE_TOK = re.compile(r"\s*([();]|[A-Za-z_][A-Za-z0-9_]*)")


def parse_tree(text, signature=None) -> Tree:
    toks = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TREE_TOK.match(text, pos)
        if not m:
            raise TreeError(f"unexpected character {text[pos:].strip()[:1]!r} at {pos}")
        toks.append((m.group(1), m.start(1)))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    sig = None if signature is None else set(signature)
    i = 0

    def node():
        nonlocal i
        if i >= len(toks) or toks[i][0] != "(":
            where = toks[i][1] if i < len(toks) else len(text)
            raise TreeError(f"expected '(' at {where}")
        i += 1
        labels = []
        while i < len(toks) and toks[i][0] not in ("(", ")", ";"):
            lab, at = toks[i]
            if sig is not None and lab not in sig:
                raise TreeError(f"label {lab!r} not in signature (at {at})")
            labels.append(lab)
            i += 1
        if i >= len(toks) or toks[i][0] != ";":
            raise TreeError("expected ';' after labels" + ("" if i < len(toks) else ": unbalanced parenthesis"))
        i += 1
        kids = []
        while i < len(toks) and toks[i][0] == "(":
            kids.append(node())
        if i >= len(toks):
            raise TreeError("unbalanced parenthesis: missing ')'")
        if toks[i][0] != ")":
            raise TreeError(f"unexpected {toks[i][0]!r} at {toks[i][1]}")
        i += 1
        return Tree(labels, kids)

    t = node()
    if i != len(toks):
        raise TreeError(f"trailing input at {toks[i][1]}")
    return t


def render_tree(t: Tree) -> str:
    memo = {}

    def go(s):
        key = id(s)
        if key not in memo:
            parts = sorted(s.labels) + [";"] + [go(c) for c in s.children]
            memo[key] = "(" + " ".join(parts) + ")"
        return memo[key]

    return go(t)


def tree_to_dot(t: Tree, name="T"):
    lines = [f"digraph {name} {{", "  node [shape=box];"]
    for i, p in enumerate(t.index.paths):
        lab = " ".join(sorted(t.node(p).labels)) or "-"
        lines.append(f'  n{i} [label="{lab}"];')
        if p:
            lines.append(f"  n{t.index.pos[p[:-1]]} -> n{i};")
    lines.append("}")
    return "\n".join(lines)


# ---------------------------------------------------------------- DAGs

class TreeDag:
    """Hash-consed table of distinct subtree shapes.

    ``entries[k] = (labels, (child entry ids...))``; children always have
    smaller ids than their parent, so the table is acyclic by construction.
    """

    def __init__(self, entries, root):
        self.entries = tuple((frozenset(l), tuple(c)) for l, c in entries)
        self.root = root
        for k, (_, kids) in enumerate(self.entries):
            if any(not 0 <= c < k for c in kids):
                raise TreeError(f"entry #{k} refers to a later or missing entry")
        if not 0 <= root < len(self.entries):
            raise TreeError("root entry out of range")

    def __len__(self):
        return len(self.entries)

    def __eq__(self, other):
        return isinstance(other, TreeDag) and self.entries == other.entries and self.root == other.root

    def __hash__(self):
        return hash((self.entries, self.root))

    def __repr__(self):
        return f"TreeDag({len(self.entries)} entries, root #{self.root})"

    def unfolded_size(self):
        sizes = []
        for _, kids in self.entries:
            sizes.append(1 + sum(sizes[c] for c in kids))
        return sizes[self.root]

    def unfolded_depth(self):
        h = []
        for _, kids in self.entries:
            h.append(1 + max((h[c] for c in kids), default=-1))
        return h[self.root]

    def reachable(self):
        seen = {self.root}
        stack = [self.root]
        while stack:
            for c in self.entries[stack.pop()][1]:
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return seen

    def render(self):
        lines = []
        for k, (labels, kids) in enumerate(self.entries):
            parts = sorted(labels) + [";"] + [f"#{c}" for c in kids]
            lines.append(f"#{k} = (" + " ".join(parts) + ")")
        lines.append(f"root #{self.root}")
        return "\n".join(lines)


def to_dag(t: Tree) -> TreeDag:
    table = {}
    entries = []
    memo = {}

    def go(s):
        if id(s) in memo:
            return memo[id(s)]
        kids = tuple(go(c) for c in s.children)
        key = (s.labels, kids)
        if key not in table:
            table[key] = len(entries)
            entries.append(key)
        memo[id(s)] = table[key]
        return table[key]

    # iterative post-order to survive deep chains
    order = []
    stack = [t]
    while stack:
        s = stack.pop()
        order.append(s)
        stack.extend(s.children)
    for s in reversed(order):
        go(s)
    return TreeDag(entries, go(t))


def unfold(d: TreeDag, limit=DEFAULT_UNFOLD_LIMIT) -> Tree:
    if d.unfolded_size() > limit:
        raise UnfoldLimitError(f"unfolding has {d.unfolded_size()} nodes (limit {limit})")
    built = []
    for labels, kids in d.entries:
        built.append(Tree(labels, [built[c] for c in kids]))
    return built[d.root]


def parse_dag(text) -> TreeDag:
    entries = {}
    root = None
    for raw in text.strip().splitlines():
        line = raw.strip()
        if not line:
            continue
        m = re.fullmatch(r"root\s+#(\d+)", line)
        if m:
            root = int(m.group(1))
            continue
        m = re.fullmatch(r"#(\d+)\s*=\s*\((.*)\)", line)
        if not m or ";" not in m.group(2):
            raise TreeError(f"bad DAG line: {line!r}")
        labels, kids = m.group(2).split(";", 1)
        ids = []
        for tok in kids.split():
            if not re.fullmatch(r"#\d+", tok):
                raise TreeError(f"bad entry reference {tok!r}")
            ids.append(int(tok[1:]))
        entries[int(m.group(1))] = (labels.split(), ids)
    if root is None:
        raise TreeError("missing 'root #k' line")
    if sorted(entries) != list(range(len(entries))):
        raise TreeError("entry numbers must be 0..k-1")
    return TreeDag([entries[k] for k in range(len(entries))], root)
