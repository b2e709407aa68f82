"""Satisfiability of FO2 / modal tree formulas by bounded branch-at-a-time search.

The search builds a tree in document order, keeping only the current branch
open.  Every node is given a full *type*: the truth value of every
subformula of the modal formula.  Types are locally checkable: the values
of parent/ancestor and previous/earlier-sibling modalities are determined
by the parent and previous sibling, and the downward / rightward
modalities become obligations on the children and following siblings.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import modal as M
from . import syntax as S
from .automata import TreeAutomaton, run_automaton
from .checker import Structure, eval_batch, eval_fo2_dag
from .syntax import FormulaError, Vocabulary
from .trees import Tree, TreeDag, TreeError, to_dag, unfold

DEFAULT_DEPTH_CAP = 4096
BRUTE_FORCE_GUARD = 8
PRUNE_LIMIT = 64  # witnesses up to this many nodes get a greedy pruning pass


class OptionError(ValueError):
    """Raised when the solver options do not fit the formula."""


@dataclass(frozen=True)
class SolveOptions:
    vocabulary: Optional[Vocabulary] = None
    uar: bool = False
    rank: Optional[int] = None
    schema: Optional[TreeAutomaton] = None
    depth_limit: Optional[int] = None
    branching_limit: Optional[int] = None
    node_budget: int = 2_000_000
    time_budget: float = 120.0
    signature: frozenset = frozenset()

    def __post_init__(self):
        for name in ("depth_limit", "branching_limit"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise OptionError(f"{name} must be positive")
        if self.rank is not None and self.rank < 1:
            raise OptionError("rank must be at least 1")
        object.__setattr__(self, "signature", frozenset(self.signature))


# ---------------------------------------------------------------- verdicts

@dataclass(frozen=True)
class Sat:
    witness: TreeDag
    stats: dict = field(default_factory=dict, compare=False)
    tag = "SAT"

    def tree(self, limit=10**6) -> Tree:
        return unfold(self.witness, limit)


@dataclass(frozen=True)
class Unsat:
    """No model.  ``complete`` means no model of any size exists;
    otherwise there is none within ``depth`` x ``branching``."""

    complete: bool
    depth: Optional[int] = None
    branching: Optional[int] = None
    stats: dict = field(default_factory=dict, compare=False)
    tag = "UNSAT"


@dataclass(frozen=True)
class BoundedUnsat:
    """The budget ran out before the bounded search space was exhausted."""

    depth: int
    branching: int
    reason: str = "budget"
    stats: dict = field(default_factory=dict, compare=False)
    tag = "BOUNDED_UNSAT"


# ---------------------------------------------------------------- bounds

class Bounds(NamedTuple):
    depth: int
    branching: int
    saturated: bool


def depth_bound(basis_size, opts: SolveOptions = SolveOptions(), cap=DEFAULT_DEPTH_CAP) -> Bounds:
    """Closed-form witness depth and outdegree bounds for a closure of the given size.

    ``V_ancOf`` with UAR (and no rank or schema) uses the polynomial
    ``2 |Sigma| c^2 + 2``; every other variant the exponential
    ``(3T + 1) T + 1`` with ``T = 2^c``.  Values above ``cap`` saturate and
    set the ``saturated`` flag.
    """
    if basis_size < 1:
        raise OptionError("basis size must be at least 1")
    c = basis_size
    if c < 64:
        t = 2 ** c
        expo = (3 * t + 1) * t + 1
    else:
        expo = cap + 1
    poly_case = (opts.vocabulary == Vocabulary.ANC_OF and opts.uar
                 and opts.rank is None and opts.schema is None)
    if poly_case:
        sigma = max(1, len(opts.signature))
        depth = 2 * sigma * c * c + 2
    else:
        depth = expo
    branching = expo
    if opts.rank is not None:
        branching = min(branching, opts.rank)
    if opts.schema is not None:
        branching = min(branching, opts.schema.rank)
    saturated = depth > cap or branching > cap
    return Bounds(min(depth, cap), min(branching, cap), saturated)


# ---------------------------------------------------------------- bounded search

class _Budget(Exception):
    pass


class _Compiled:
    """Index-based view of the modal formula used by the search."""

    def __init__(self, m, labels, uar):
        self.subs = M.subformulas(m)
        self.pos = {g.uid: i for i, g in enumerate(self.subs)}
        self.root = self.pos[m.uid]
        self.n = len(self.subs)
        self.kind = [g.kind for g in self.subs]
        self.arg = [[self.pos[c.uid] for c in g.args] for g in self.subs]
        self.labels = sorted(labels)
        self.uar = uar
        atoms = [i for i, g in enumerate(self.subs) if g.kind == M.ATOM]
        self.atom_of = {self.subs[i].name: i for i in atoms}
        self.future = [i for i, k in enumerate(self.kind) if k in (M.F_CH, M.X_CH, M.F_NS, M.X_NS)]
        self.past = [i for i, k in enumerate(self.kind) if k in (M.P_CH, M.Y_CH, M.P_NS, M.Y_NS)]
        self.fch = [i for i in self.future if self.kind[i] == M.F_CH]
        self.xch = [i for i in self.future if self.kind[i] == M.X_CH]
        self.fns = [i for i in self.future if self.kind[i] == M.F_NS]
        self.xns = [i for i in self.future if self.kind[i] == M.X_NS]
        self.ch_mask = sum(1 << i for i in self.fch + self.xch)
        self.ns_mask = sum(1 << i for i in self.fns + self.xns)
        # the part of a node's type that its next sibling can observe
        proj = set(self.fns + self.xns)
        for i in self.past:
            if self.kind[i] in (M.P_NS, M.Y_NS):
                proj.add(self.arg[i][0])
                if self.kind[i] == M.P_NS:
                    proj.add(i)
        self.ns_proj_mask = sum(1 << i for i in proj)
        # the part of a node's type that its children can observe
        proj = set(self.fch + self.xch + atoms)
        for i in self.past:
            if self.kind[i] in (M.P_CH, M.Y_CH):
                proj.add(self.arg[i][0])
                if self.kind[i] == M.P_CH:
                    proj.add(i)
        self.key_mask = sum(1 << i for i in proj)
        self.parents = [[] for _ in range(self.n)]
        for i, k in enumerate(self.kind):
            if k in (M.NOT, M.AND, M.OR):
                for j in set(self.arg[i]):
                    self.parents[j].append(i)
        self.dead = self._dead_modalities()
        # the free choices at each node: labels, then forward modalities
        if uar:
            self.label_vars = []
        else:
            self.label_vars = [self.atom_of[a] for a in self.labels if a in self.atom_of]

    def _dead_modalities(self):
        """Modalities whose argument is false at every node, found by a fixpoint.

        The argument is checked propositionally with the modal subformulas
        below it as free leaves (at most one label under UAR).
        """
        modal = [i for i in range(self.n) if self.arg[i] and self.kind[i] not in (M.NOT, M.AND, M.OR)]
        dead = set()
        changed = True
        while changed:
            changed = False
            for i in modal:
                if i not in dead and not self._locally_satisfiable(self.arg[i][0], dead):
                    dead.add(i)
                    changed = True
        return frozenset(dead)

    def _locally_satisfiable(self, j, dead):
        nodes, leaves, stack = set(), [], [j]
        while stack:
            i = stack.pop()
            if i in nodes:
                continue
            nodes.add(i)
            if self.kind[i] in (M.NOT, M.AND, M.OR):
                stack.extend(self.arg[i])
            elif self.kind[i] == M.ATOM or (self.arg[i] and i not in dead):
                leaves.append(i)
        order = sorted(nodes)
        asg = {}

        def value():
            vals = {}
            for i in order:
                k = self.kind[i]
                if k == M.TRUE:
                    v = True
                elif k == M.FALSE or i in dead:
                    v = False
                elif k == M.NOT:
                    a = vals[self.arg[i][0]]
                    v = None if a is None else not a
                elif k == M.AND:
                    a, b = (vals[c] for c in self.arg[i])
                    v = False if a is False or b is False else (None if None in (a, b) else True)
                elif k == M.OR:
                    a, b = (vals[c] for c in self.arg[i])
                    v = True if a is True or b is True else (None if None in (a, b) else False)
                else:
                    v = asg.get(i)
                vals[i] = v
            return vals[j]

        def search(k):
            v = value()
            if v is not None:
                return v
            leaf = leaves[k]
            for b in (True, False):
                if b and self.uar and self.kind[leaf] == M.ATOM and any(
                        asg.get(o) for o in leaves if o != leaf and self.kind[o] == M.ATOM):
                    continue
                asg[leaf] = b
                if search(k + 1):
                    del asg[leaf]
                    return True
            del asg[leaf]
            return False

        return search(0)

    def past_values(self, parent, prev):
        out = {}
        for i in self.past:
            k = self.kind[i]
            j = self.arg[i][0]
            if k in (M.P_CH, M.Y_CH):
                src = parent
            else:
                src = prev
            if src is None:
                out[i] = False
            elif k in (M.Y_CH, M.Y_NS):
                out[i] = bool(src >> j & 1)
            else:
                out[i] = bool(src >> j & 1 or src >> i & 1)
        return out

    def label_set(self, mask, label):
        if self.uar:
            return frozenset({label})
        return frozenset(a for a in self.labels if a in self.atom_of and mask >> self.atom_of[a] & 1)


_NO_DEPS = frozenset()
_CONNECTIVES = (M.NOT, M.AND, M.OR)


def _bits(x):
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


class _Candidates:
    """Lazily enumerated child types for one (parent, previous sibling) context.

    The enumeration is shared by every sibling-list search in that context.
    ``pruned`` collects the reasons of the branches the enumeration cut off;
    ``derivation`` explains each bit of a produced type in terms of the
    parent's and the previous sibling's bits.
    """

    def __init__(self, search, parent, prev, is_root, leaf, depth):
        self.search = search
        self.parent, self.prev, self.is_root, self.leaf, self.depth = parent, prev, is_root, leaf, depth
        self.items = []
        self.done = False
        self.pruned = 0
        self.constraints = search.constraints(parent, prev, is_root, leaf)
        self.gen = search.enumerate(self)
        self.derived = {}

    def __iter__(self):
        k = 0
        while True:
            if k < len(self.items):
                yield k, self.items[k]
                k += 1
            elif self.done:
                return
            else:
                try:
                    self.items.append(next(self.gen))
                except StopIteration:
                    self.done = True

    def derivation(self, k):
        der = self.derived.get(k)
        if der is None:
            der = self.derived[k] = self.search.derive(self, self.items[k][0])
        return der

    def explain(self, k, care):
        """Reason, over parent and previous-sibling bits, for the bits ``care`` of item k."""
        der = self.derivation(k)
        r = 0
        for j in _bits(care):
            r |= der[j]
        return r


class _Search:
    """Depth-first realization of types with failure memo and learned nogoods.

    Failure reasons are bit sets over three spaces of width n: bits of the
    parent (P), bits of the previous sibling (S, shifted by n) and pending
    parent obligations (shifted by 2n).  A failed subtree yields a cube over
    its own type: every type agreeing with it on the cube fails as well, at
    the same or smaller height.
    """

    def __init__(self, m, depth, branching, schema, uar, signature, node_budget, time_budget):
        labels = set(M.atoms_of(m)) | set(signature)
        if schema is not None:
            uar = True
            labels |= set(schema.alphabet)
        if uar and not labels:
            raise OptionError("UAR search needs a non-empty signature")
        self.c = _Compiled(m, labels, uar)
        self.depth = depth
        self.branching = branching
        self.schema = schema
        self.uar = uar
        if uar:
            # labels outside the formula are interchangeable; keep one representative
            inside = [a for a in self.c.labels if a in self.c.atom_of]
            outside = [a for a in self.c.labels if a not in self.c.atom_of]
            if schema is not None:
                self.uar_labels = sorted(labels)
            else:
                self.uar_labels = inside + outside[:1]
        self.node_budget = node_budget
        self.deadline = time.monotonic() + time_budget
        self.steps = 0
        self.peak = 0
        self.depth_hits = 0
        self.branch_hits = 0
        self.cuts = 0
        self.learned = 0
        self.entries = []
        self.entry_ids = {}
        self.success = {}        # projected (type, label, state) -> (entry id, height)
        self.failed = {}         # projected key -> [(height it fails up to, deps, cube)]
        self.dead_keys = {}      # projected key -> height up to which it fails unconditionally
        self.dead_tokens = set() # sibling states that fail unconditionally
        self.nogoods = {}        # (label, state) -> [(cube, values, height)]
        self.suffix_ok = {}      # sibling state -> (child list, largest count it was found at)
        self.suffix_failed = {}  # sibling state -> [(count, deps, hit the width limit, reason)]
        self.cand_cache = {}
        n = self.c.n
        self.P = (1 << n) - 1
        self.S_SHIFT = n
        self.PEND_SHIFT = 2 * n

    # -- bookkeeping

    def tick(self):
        self.steps += 1
        if self.steps > self.node_budget:
            raise _Budget("node budget exhausted")
        if self.steps % 256 == 0 and time.monotonic() > self.deadline:
            raise _Budget("time budget exhausted")

    def entry(self, labels, kids):
        key = (labels, tuple(kids))
        k = self.entry_ids.get(key)
        if k is None:
            k = len(self.entries)
            self.entry_ids[key] = k
            self.entries.append(key)
        return k

    # -- local types

    def constraints(self, parent, prev, is_root, leaf):
        """Fixed past values, requirements and sibling disjunctions, each with a reason.

        Returns ``(fixed, require, either, conflict)``; ``conflict`` is the
        reason of two clashing requirements, or None.
        """
        c = self.c
        s = self.S_SHIFT
        fixed = {}
        for i in c.past:
            k = c.kind[i]
            j = c.arg[i][0]
            src, sh = (parent, 0) if k in (M.P_CH, M.Y_CH) else (prev, s)
            if src is None:
                fixed[i] = (False, 0)
            elif k in (M.Y_CH, M.Y_NS):
                fixed[i] = (bool(src >> j & 1), 1 << (sh + j))
            elif src >> j & 1:
                fixed[i] = (True, 1 << (sh + j))
            elif src >> i & 1:
                fixed[i] = (True, 1 << (sh + i))
            else:
                fixed[i] = (False, (1 << (sh + j)) | (1 << (sh + i)))
        require = {}
        conflict = None

        def need(i, v, r):
            nonlocal conflict
            old = require.get(i)
            if old is None:
                require[i] = (v, r)
            elif old[0] != v and conflict is None:
                conflict = old[1] | r

        for i in c.dead:
            need(i, False, 0)
        if leaf:
            for i in c.fch + c.xch:
                need(i, False, 0)
        if is_root:
            need(c.root, True, 0)
            for i in c.fns + c.xns:
                need(i, False, 0)
        if parent is not None:
            for i in c.fch:
                if not parent >> i & 1:
                    need(c.arg[i][0], False, 1 << i)
                    need(i, False, 1 << i)
            for i in c.xch:
                if not parent >> i & 1:
                    need(c.arg[i][0], False, 1 << i)
        either = []  # (i, j, v, reason): value(i) or value(j) == v
        if prev is not None:
            for i in c.fns:
                either.append((c.arg[i][0], i, bool(prev >> i & 1), 1 << (s + i)))
            for i in c.xns:
                need(c.arg[i][0], bool(prev >> i & 1), 1 << (s + i))
        return fixed, require, either, conflict

    def candidates(self, parent, prev, is_root, leaf=False):
        """Yield (type mask, label) for nodes under ``parent`` after sibling ``prev``.

        With ``leaf`` only types without downward obligations are produced.
        """
        for _, item in _Candidates(self, parent, prev, is_root, leaf, 0):
            yield item

    def cached_candidates(self, parent, prev, is_root, leaf, depth):
        key = (parent, prev, is_root, leaf, depth)
        cands = self.cand_cache.get(key)
        if cands is None:
            cands = self.cand_cache[key] = _Candidates(self, parent, prev, is_root, leaf, depth)
        return cands

    def _no_child_reason(self, parent, prev, depth):
        """Reason why no child type at all fits this context, or None if one does.

        Leaf-level searches use leaf types only; when even the unrestricted
        enumeration is empty the depth limit played no part in the failure.
        """
        cands = self.cached_candidates(parent, prev, False, False, depth)
        if next(iter(cands), None) is not None:
            return None
        return cands.pruned

    def enumerate(self, cands):
        fixed, require, either, conflict = cands.constraints
        if conflict is not None:
            cands.pruned |= conflict
            return
        c = self.c
        for label in (self.uar_labels if self.uar else [None]):
            asg = dict(fixed)
            if self.uar:
                for a, i in c.atom_of.items():
                    asg[i] = (a == label, 0)
            yield from self._complete(cands, asg, require, either, label)

    def _complete(self, cands, assigned, require, either, label):
        """Enumerate full types extending ``assigned``, false before true.

        Values and their reasons are propagated incrementally; branches
        that clash with a requirement or a learned nogood are cut and their
        reasons recorded in ``cands.pruned``.
        """
        c = self.c
        n = c.n
        kind, arg, parents = c.kind, c.arg, c.parents
        vals = [None] * n
        why = [0] * n
        tm = fm = 0
        asg = dict(assigned)
        for i in c.label_vars + c.future:
            if i not in asg and i in require:
                asg[i] = require[i]
        watch = {}
        for e in either:
            watch.setdefault(e[0], []).append(e)
            watch.setdefault(e[1], []).append(e)
        # reasons carry context bits below dec_shift and one bit per decision level above
        dec_shift = 3 * n
        ctx = (1 << dec_shift) - 1
        nogoods = []
        if self.schema is None:
            nogoods = self.nogoods.setdefault((label, None), [])
        depth = cands.depth

        def compute(i):
            k = kind[i]
            if k == M.NOT:
                j = arg[i][0]
                a = vals[j]
                return (None, 0) if a is None else (not a, why[j])
            ja, jb = arg[i]
            a, b = vals[ja], vals[jb]
            if k == M.AND:
                if a is False:
                    return False, why[ja]
                if b is False:
                    return False, why[jb]
                if a is None or b is None:
                    return None, 0
                return True, why[ja] | why[jb]
            if a is True:
                return True, why[ja]
            if b is True:
                return True, why[jb]
            if a is None or b is None:
                return None, 0
            return False, why[ja] | why[jb]

        def violated(i):
            req = require.get(i)
            if req is not None and vals[i] is not None and vals[i] != req[0]:
                return why[i] | req[1]
            for x, y, v, r in watch.get(i, ()):
                p, q = vals[x], vals[y]
                if v:
                    if p is False and q is False:
                        return why[x] | why[y] | r
                elif p is True:
                    return why[x] | r
                elif q is True:
                    return why[y] | r
            return None

        def setv(i, v, r):
            nonlocal tm, fm
            vals[i] = v
            why[i] = r
            if v:
                tm |= 1 << i
            else:
                fm |= 1 << i
            trail.append(i)

        # Each nogood watches two of its bits, normally ones that do not match
        # it yet; when only one unmatched bit is left it is forced the other way.
        watchers = {}
        pair = {}
        seen = 0

        def blame(cube):
            r = 0
            while cube:
                low = cube & -cube
                r |= why[low.bit_length() - 1]
                cube ^= low
            return r

        def force(j, v, r):
            setv(j, v, r)
            cands.pruned |= r & ctx

        def watch_new():
            nonlocal seen
            while seen < len(nogoods):
                k = seen
                seen += 1
                cube, values, fd = nogoods[k]
                if fd < depth:
                    continue
                matched = (tm & values) | (fm & cube & ~values)
                free = cube & ~matched
                if not free:
                    seen = k  # watch it once the clash has been undone
                    return blame(cube)
                a = (free & -free).bit_length() - 1
                rest = free & ~(1 << a)
                if rest:
                    b = (rest & -rest).bit_length() - 1
                else:
                    b = matched.bit_length() - 1 if matched else a
                    if vals[a] is None:
                        force(a, not (values >> a & 1), blame(cube & ~(1 << a)))
                pair[k] = (a, b)
                watchers.setdefault(a, []).append(k)
                if b != a:
                    watchers.setdefault(b, []).append(k)
            return None

        def on_set(i):
            """Nogood bookkeeping after bit i got its value; returns a clash reason."""
            lst = watchers.get(i)
            if not lst:
                return None
            v = vals[i]
            keep = []
            for pos, k in enumerate(lst):
                cube, values, _ = nogoods[k]
                if bool(values >> i & 1) != v:
                    keep.append(k)
                    continue
                a, b = pair[k]
                other = b if a == i else a
                free = cube & ~((tm & values) | (fm & cube & ~values)) & ~(1 << other)
                if free:
                    j = (free & -free).bit_length() - 1
                    pair[k] = (j, other)
                    watchers.setdefault(j, []).append(k)
                    continue
                keep.append(k)
                w = vals[other]
                if w is None:
                    force(other, not (values >> other & 1), blame(cube & ~(1 << other)))
                elif w == bool(values >> other & 1):
                    keep.extend(lst[pos + 1:])
                    watchers[i] = keep
                    return blame(cube)
            watchers[i] = keep
            return None

        def propagate(start):
            """Close the trail from ``start`` under connectives and nogoods."""
            q = start
            while True:
                r = watch_new()
                if r is not None:
                    return r
                if q >= len(trail):
                    return None
                i = trail[q]
                q += 1
                r = violated(i)
                if r is not None:
                    return r
                for p in parents[i]:
                    if vals[p] is None:
                        w, r = compute(p)
                        if w is not None:
                            setv(p, w, r)
                r = on_set(i)
                if r is not None:
                    return r

        trail = []
        for i in range(n):
            k = kind[i]
            if i in asg:
                setv(i, *asg[i])
            elif k == M.TRUE:
                setv(i, True, 0)
            elif k == M.FALSE:
                setv(i, False, 0)
            elif k == M.ATOM and (self.uar or c.subs[i].name not in c.labels):
                setv(i, False, 0)
        r = propagate(0)
        if r is not None:
            cands.pruned |= r & ctx
            return
        order = [v for v in c.label_vars + c.future if vals[v] is None]

        def assign(i, v, k):
            start = len(trail)
            setv(i, v, 1 << (dec_shift + k))
            return propagate(start)

        def undo(mark):
            nonlocal tm, fm
            while len(trail) > mark:
                i = trail.pop()
                if vals[i]:
                    tm &= ~(1 << i)
                else:
                    fm &= ~(1 << i)
                vals[i] = None

        def rec(k):
            """Yield the solutions below decision level k.

            Returns None if some were found, else the decision bits the
            failure depends on; a failure that does not involve level k
            makes the other value of its variable fail too.
            """
            if k == len(order):
                self.tick()
                yield tm, label
                return None
            v = order[k]
            if vals[v] is not None:
                # forced by a nogood earlier on this branch
                return (yield from rec(k + 1))
            mine = 1 << (dec_shift + k)
            fails = 0
            found = False
            for b in (False, True):
                mark = len(trail)
                r = assign(v, b, k)
                if r is None:
                    sub = yield from rec(k + 1)
                else:
                    cands.pruned |= r & ctx
                    sub = r & ~ctx
                undo(mark)
                if sub is None:
                    found = True
                elif not sub & mine and not found:
                    return sub
                else:
                    fails |= sub & ~mine
            return None if found else fails

        yield from rec(0)

    def derive(self, cands, tp):
        """Reason for every bit of a produced type (decisions explain nothing)."""
        c = self.c
        fixed, require, _, _ = cands.constraints
        free = set(c.label_vars) | set(c.future)
        why = [0] * c.n
        for i in range(c.n):
            k = c.kind[i]
            if i in fixed:
                why[i] = fixed[i][1]
            elif i in free:
                why[i] = require[i][1] if i in require else 0
            elif k in _CONNECTIVES:
                v = tp >> i & 1
                if k == M.NOT:
                    why[i] = why[c.arg[i][0]]
                    continue
                ja, jb = c.arg[i]
                a, b = tp >> ja & 1, tp >> jb & 1
                decisive = 0 if k == M.AND else 1
                if v == decisive:
                    why[i] = why[ja] if a == decisive else why[jb]
                else:
                    why[i] = why[ja] | why[jb]
        return why

    def fulfilled(self, child):
        """Indices of the parent's downward obligations met by this child."""
        c = self.c
        out = 0
        for i in c.fch:
            j = c.arg[i][0]
            if child >> j & 1 or child >> i & 1:
                out |= 1 << i
        for i in c.xch:
            if child >> c.arg[i][0] & 1:
                out |= 1 << i
        return out

    def _unfulfilling(self, pend):
        """Child bits showing that the obligations in ``pend`` stay open."""
        c = self.c
        care = 0
        for i in _bits(pend):
            care |= 1 << c.arg[i][0]
            if c.kind[i] == M.F_CH:
                care |= 1 << i
        return care

    # -- subtree realization

    def _discharged(self, deps, d):
        """Do the cut-off repetitions in ``deps`` fail outright by now?

        A failure that relied on cutting a repeated key K still holds once K
        itself is known to fail: a subtree containing K would realize K.
        """
        for dep in deps:
            if dep[0] == "seq":
                if dep not in self.dead_tokens:
                    return False
            elif self.dead_keys.get(dep, -1) < d:
                return False
        return True

    def _nogood(self, tp, label, state, d):
        for cube, values, fd in self.nogoods.get((label, state), ()):
            if fd >= d and tp & cube == values:
                return cube
        return None

    def realize(self, tp, label, state, d, ancestors):
        """A subtree for a node of type tp with height <= d.

        Returns ``(entry id or None, deps, cube)``.  On failure ``deps``
        lists the ancestor keys whose repetition was cut below (the failure
        holds on every branch where those keys are open) and ``cube`` the
        bits of tp the failure depends on.
        """
        c = self.c
        key = (tp & c.key_mask, label, state)
        hit = self.success.get(key)
        if hit is not None and hit[1] <= d:
            return hit[0], _NO_DEPS, 0
        for fd, deps, cube in self.failed.get(key, ()):
            if fd >= d:
                if deps <= ancestors:
                    return None, deps, cube
                if self._discharged(deps, d):
                    # the recorded cube leaves out the cut-off loops; blame the whole key
                    return None, _NO_DEPS, c.key_mask
        cube = self._nogood(tp, label, state, d)
        if cube is not None:
            return None, _NO_DEPS, cube
        labels = c.label_set(tp, label)
        obligations = tp & c.ch_mask
        if not obligations and (self.schema is None or state in self.schema.targets(label, ())):
            e = self.entry(labels, ())
            self.success[key] = (e, 0)
            return e, _NO_DEPS, 0
        if d == 0:
            self.depth_hits += 1
            return None, _NO_DEPS, obligations
        if key in ancestors:
            # a repeated key on one branch can always be shortcut
            self.cuts += 1
            return None, frozenset((key,)), 0
        hits0 = self.depth_hits
        ancestors.add(key)
        self.peak = max(self.peak, len(ancestors))
        try:
            kids, deps, reason = self.suffix(tp & c.key_mask, label, state, d, None, obligations, (), 0, ancestors)
        finally:
            ancestors.discard(key)
        if kids is not None:
            e = self.entry(labels, [k for k, _ in kids])
            h = 1 + max(hh for _, hh in kids)
            self.success[key] = (e, h)
            return e, _NO_DEPS, 0
        deps = deps - {key}
        cube = (reason & self.P) | (reason >> self.PEND_SHIFT & self.P)
        fd = d if self.depth_hits != hits0 else 1 << 60
        entries = self.failed.setdefault(key, [])
        if not any(f >= fd and dd <= deps and cc == cube for f, dd, cc in entries):
            entries.append((fd, deps, cube))
        if not deps:
            self.dead_keys[key] = max(fd, self.dead_keys.get(key, -1))
            self.nogoods.setdefault((label, state), []).append((cube, tp & cube, fd))
            self.learned += 1
        return None, deps, cube

    def suffix(self, tp, label, state, d, prev, pending, states, count, active):
        """Complete a child list whose last child so far projects to ``prev``.

        Returns ``(list of (entry id, height) or None, deps, reason)``.
        """
        c = self.c
        reason = pending << self.PEND_SHIFT
        if count > 0 and not pending:
            blocking = prev & c.ns_mask
            if not blocking:
                if self.schema is None or state in self.schema.targets(label, states):
                    return [], _NO_DEPS, 0
            reason |= blocking << self.S_SHIFT
        limit = self.branching
        if self.schema is not None:
            limit = min(limit, self.schema.rank)
        if count >= limit:
            self.branch_hits += 1
            return None, _NO_DEPS, reason
        token = ("seq", tp, label, state, d, prev, pending, states)
        everything = self.P | ((prev or 0) << self.S_SHIFT) | reason
        if token in active:
            # the same sibling state again: the shorter list covers this one
            self.cuts += 1
            return None, frozenset((token,)), 0
        self.tick()
        ok = self.suffix_ok.get(token)
        if ok is not None and ok[1] >= count:
            return ok[0], _NO_DEPS, 0
        for fc, deps, by_width, why in self.suffix_failed.get(token, ()):
            if not by_width or count >= fc:
                if deps <= active:
                    return None, deps, why
                if self._discharged(deps, d):
                    return None, _NO_DEPS, everything
        width0 = self.branch_hits
        active.add(token)
        deps = set()
        found = None
        try:
            leaf = d <= 1
            cands = self.cached_candidates(tp, prev, False, leaf, d - 1)
            child_states = self.schema.states if self.schema is not None else (None,)
            for k, (ctp, clabel) in cands:
                rest = pending & ~self.fulfilled(ctp)
                for q in child_states:
                    if self.schema is not None and not self.schema.is_prefix(label, state, states + (q,)):
                        continue
                    sub, sub_deps, cube = self.realize(ctp, clabel, q, d - 1, active)
                    if sub is None:
                        deps.update(sub_deps)
                        reason |= cands.explain(k, cube)
                        continue
                    tail, tail_deps, tail_why = self.suffix(
                        tp, label, state, d, ctp & c.ns_proj_mask, rest,
                        states + (q,) if self.schema is not None else states, count + 1, active)
                    if tail is None:
                        deps.update(tail_deps)
                        pend = tail_why >> self.PEND_SHIFT & self.P
                        care = (tail_why >> self.S_SHIFT & self.P) | self._unfulfilling(pend)
                        reason |= (tail_why & self.P) | (pend << self.PEND_SHIFT) | cands.explain(k, care)
                        continue
                    height = self.success[(ctp & c.key_mask, clabel, q)][1]
                    found = [(sub, height)] + tail
                    break
                if found is not None:
                    break
            if found is None:
                reason |= cands.pruned
                if leaf:
                    none = self._no_child_reason(tp, prev, d - 1)
                    if none is None:
                        self.depth_hits += 1
                    else:
                        reason |= none
        finally:
            active.discard(token)
        if found is not None:
            if ok is None or ok[1] < count:
                self.suffix_ok[token] = (found, count)
            return found, _NO_DEPS, 0
        deps = frozenset(deps) - {token}
        by_width = self.branch_hits != width0
        entries = self.suffix_failed.setdefault(token, [])
        if not any((not bw or (by_width and fc <= count)) and dd <= deps and w == reason
                   for fc, dd, bw, w in entries):
            entries.append((count, deps, by_width, reason))
        if not deps and not by_width:
            self.dead_tokens.add(token)
        return None, deps, reason

    def run(self):
        roots_states = sorted(self.schema.accepting) if self.schema is not None else [None]
        leaf = self.depth == 0
        if leaf:
            self.depth_hits += 1
        cands = self.cached_candidates(None, None, True, leaf, self.depth)
        for _, (tp, label) in cands:
            for q in roots_states:
                e, _, _ = self.realize(tp, label, q, self.depth, set())
                if e is not None:
                    return e
        return None


def _restrict(entries, root):
    keep = set()
    stack = [root]
    while stack:
        k = stack.pop()
        if k not in keep:
            keep.add(k)
            stack.extend(entries[k][1])
    order = sorted(keep)
    remap = {k: i for i, k in enumerate(order)}
    return TreeDag([(entries[k][0], [remap[c] for c in entries[k][1]]) for k in order], remap[root])


def _schedule(limit, start=1):
    out = [start] if start < 1 else []
    k = 1
    while k < limit:
        out.append(k)
        k *= 2
    out.append(limit)
    return out


def solve_bounded(m, depth, branching, schema=None, *, uar=False, signature=(),
                  node_budget=2_000_000, time_budget=120.0, verify=True):
    """Search for a tree of height <= depth and outdegree <= branching satisfying m at its root.

    The limits are approached by iterative deepening so that witnesses stay
    small.  Returns Sat(witness DAG), Unsat (``complete`` when some round
    never hit the depth or branching limit), or BoundedUnsat when the budget
    ran out.
    """
    if depth < 1 or branching < 1:
        raise OptionError("depth and branching must be at least 1")
    deadline = time.monotonic() + time_budget
    steps = 0
    peak = 0
    depths = _schedule(depth, start=0)
    widths = _schedule(branching)
    rounds = list(dict.fromkeys(
        (depths[min(k, len(depths) - 1)], widths[min(k, len(widths) - 1)])
        for k in range(max(len(depths), len(widths)))))
    search = None
    for d, b in rounds:
        left = deadline - time.monotonic()
        search = _Search(m, d, b, schema, uar, signature, node_budget - steps, max(left, 0.0))
        try:
            root = search.run()
        except _Budget as exc:
            return BoundedUnsat(depth, branching, str(exc), _stats(search, steps, peak))
        steps += search.steps
        peak = max(peak, search.peak)
        if root is not None:
            break
        if search.depth_hits == 0 and search.branch_hits == 0:
            return Unsat(True, depth, branching, _stats(search, steps, peak))
    else:
        return Unsat(False, depth, branching, _stats(search, steps, peak))
    stats = _stats(search, steps, peak)
    dag = _restrict(search.entries, root)
    if dag.unfolded_size() <= PRUNE_LIMIT:
        dag = to_dag(_prune(unfold(dag), m, schema))
    if verify:
        if not eval_fo2_dag(dag, M.modal_sentence_at_root(m)):
            raise AssertionError("solver produced a witness that does not satisfy the formula")
        if schema is not None and dag.unfolded_size() <= 10**5:
            if not run_automaton(unfold(dag), schema)[0]:
                raise AssertionError("solver witness rejected by the schema")
    return Sat(dag, stats)


def _without(t: Tree, path):
    if len(path) == 1:
        return t.with_children(t.children[:path[0]] + t.children[path[0] + 1:])
    kids = list(t.children)
    kids[path[0]] = _without(kids[path[0]], path[1:])
    return t.with_children(kids)


def _prune(t: Tree, m, schema):
    """One pre-order sweep dropping every subtree the formula (and schema) can do without."""
    i = 1
    while i < t.size:
        p = t.index.paths[i]
        cand = _without(t, p)
        if M.eval_modal(cand, m) and (schema is None or run_automaton(cand, schema)[0]):
            t = cand  # the next node in pre-order now sits at position i
        else:
            i += 1
    return t


def _stats(search, steps, peak):
    return {"steps": steps + search.steps, "peak_branch": max(peak, search.peak), "cycle_cuts": search.cuts,
            "depth_hits": search.depth_hits, "branch_hits": search.branch_hits,
            "types": len(search.success) + len(search.failed), "nogoods": search.learned}


# ---------------------------------------------------------------- FO2 pipeline

def uar_constraint(signature):
    """Modal formula: every node carries exactly one label from signature."""
    sig = sorted(signature)
    one = M.disj(*[M.conj(M.atom(a), *[M.neg(M.atom(b)) for b in sig if b != a]) for a in sig])
    return M.conj(one, M.neg(M.modality(M.F_CH, M.neg(one))))


def check_options(f, opts: SolveOptions):
    if S.free_vars(f):
        raise FormulaError("decide expects a sentence")
    if opts.vocabulary is not None and opts.vocabulary not in S.vocabulary_of(f):
        raise OptionError(f"formula uses relations outside vocabulary {opts.vocabulary.value}")
    if opts.schema is not None and opts.rank is not None and opts.rank < opts.schema.rank:
        pass  # the smaller rank wins; nothing to reject


def decide(f, opts: SolveOptions = SolveOptions()):
    """Decide satisfiability of an FO2 sentence over finite ordered trees."""
    check_options(f, opts)
    basis = S.one_var_closure(f)
    signature = S.predicates(f) | opts.signature
    if opts.schema is not None:
        signature |= opts.schema.alphabet
    eff = SolveOptions(**{**opts.__dict__, "signature": signature})
    bound = depth_bound(len(basis), eff)
    depth = min(bound.depth, opts.depth_limit) if opts.depth_limit else bound.depth
    branching = min(bound.branching, opts.branching_limit) if opts.branching_limit else bound.branching
    m = M.fo2_to_modal(f)
    uar = opts.uar or opts.schema is not None
    verdict = solve_bounded(m, depth, branching, opts.schema, uar=uar, signature=signature,
                            node_budget=opts.node_budget, time_budget=opts.time_budget)
    if isinstance(verdict, Sat):
        if not eval_fo2_dag(verdict.witness, f):
            raise AssertionError("witness fails the FO2 re-check")
        if uar:
            t_ok = all(len(lab) == 1 for lab, _ in verdict.witness.entries)
            if not t_ok:
                raise AssertionError("witness violates the unary alphabet restriction")
        return verdict
    if isinstance(verdict, Unsat) and not verdict.complete:
        within = (not bound.saturated and depth >= bound.depth and branching >= bound.branching)
        if within:
            return Unsat(True, depth, branching, verdict.stats)
    return verdict


# ---------------------------------------------------------------- brute force oracle

def tree_shapes(max_nodes, max_depth=None, max_children=None):
    """All ordered unlabelled tree shapes, as nested tuples, by node count."""
    memo = {}

    def forests(n, d):
        # ordered forests with n nodes total, each tree of height <= d
        key = (n, d)
        if key in memo:
            return memo[key]
        out = []
        if n == 0:
            out = [()]
        elif d >= 0:
            for first in range(1, n + 1):
                for t in trees(first, d):
                    for rest in forests(n - first, d):
                        out.append((t,) + rest)
        memo[key] = out
        return out

    def trees(n, d):
        if d < 0:
            return []
        return [kids for kids in forests(n - 1, d - 1)]

    for n in range(1, max_nodes + 1):
        for shape in trees(n, max_depth if max_depth is not None else n):
            if max_children is None or _max_out(shape) <= max_children:
                yield shape


def _max_out(shape):
    return max([len(shape)] + [_max_out(c) for c in shape])


def _build(shape, labels):
    """Tree from a shape and a pre-order list of label sets."""
    it = iter(labels)

    def go(s):
        lab = next(it)
        return Tree(lab, tuple(go(c) for c in s))

    return go(shape)


def brute_force(f, max_nodes, max_depth, opts: SolveOptions = SolveOptions(), guard=BRUTE_FORCE_GUARD):
    """First model (canonical order: size, shape, labelling) within the bounds, or None."""
    if max_nodes > guard:
        raise OptionError(f"brute force limited to {guard} nodes")
    check_options(f, opts)
    sig = sorted(S.predicates(f) | opts.signature | (opts.schema.alphabet if opts.schema else frozenset()))
    uar = opts.uar or opts.schema is not None
    if uar and not sig:
        return None
    rank = opts.rank
    if opts.schema is not None:
        rank = opts.schema.rank if rank is None else min(rank, opts.schema.rank)
    for shape in tree_shapes(max_nodes, max_depth, rank):
        skeleton = _build(shape, [frozenset()] * 10**3)
        ix = skeleton.index
        n = ix.n
        if uar:
            combos = np.array(list(itertools.product(range(len(sig)), repeat=n)), dtype=np.int64)
            labels = {p: combos == k for k, p in enumerate(sig)}
        else:
            k = len(sig) * n
            if k == 0:
                labels = {}
            else:
                codes = np.arange(2 ** k, dtype=np.int64)
                bits = (codes[:, None] >> np.arange(k)[None, :]) & 1
                labels = {p: bits[:, j * n:(j + 1) * n].astype(bool) for j, p in enumerate(sig)}
        st = Structure(ix, labels) if labels else Structure(ix, {})
        ok = eval_batch(st, f)
        for row in np.nonzero(ok)[0].tolist():
            labs = [frozenset(p for p in sig if labels[p][row, i]) for i in range(n)] if labels else [frozenset()] * n
            # pre-order label list matches the index order of skeleton
            t = _build(shape, labs)
            if opts.schema is not None and not run_automaton(t, opts.schema)[0]:
                continue
            return t
    return None
