"""Model surgeries that shrink a satisfying tree while keeping node types intact.

Every surgery here is a pure function from trees to trees.  Each individual
step can be checked: the nodes that survive a step (through a ``CopyMap``) must
keep the truth value of every one-variable subformula, and a violation raises
``PreservationError`` instead of silently returning a broken model.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import modal as M
from . import syntax as S
from .automata import TreeAutomaton, state_abstraction
from .checker import selected_desc_types, type_masks, body_matrices
from .syntax import ClosureBasis, Formula, FormulaError, Vocabulary
from .trees import Tree, TreeDag, TreeError, is_ancestor, is_uar, render_tree, to_dag


class PreservationError(AssertionError):
    """A surgery step changed the type of a node it promised to preserve."""


class ShrinkError(ValueError):
    pass


# ---------------------------------------------------------------- overwrite

@dataclass(frozen=True)
class CopyMap:
    """Where each source node ends up after a surgery.

    ``images[m]`` lists the result paths that are copies of source node ``m``
    (zero, one or two of them).  ``t1`` holds the result nodes that sit outside
    the rewritten subtree, ``t2`` the nodes of the freshly copied subtree; for
    ``t2`` nodes ``preimage`` names the source node they were copied from.
    """

    images: dict
    t1: frozenset
    t2: frozenset
    preimage: dict = field(default_factory=dict)

    def domain(self):
        return [m for m, out in self.images.items() if out]

    def pairs(self):
        for m, out in self.images.items():
            for r in out:
                yield m, r


def _check_path(t, p):
    p = tuple(p)
    if not t.has_node(p):
        raise TreeError(f"invalid node path {p}")
    return p


def overwrite(t: Tree, n0, n1):
    """Replace the subtree at ``n0`` by a copy of the subtree at ``n1``."""
    n0, n1 = _check_path(t, n0), _check_path(t, n1)
    if n0 == n1:
        ident = {p: (p,) for p in t.paths()}
        return t, CopyMap(ident, frozenset(ident), frozenset(), {})
    if is_ancestor(n1, n0):
        raise TreeError(f"cannot overwrite {n0} by its ancestor {n1}")
    result = t.replace(n0, t.node(n1))
    images = {}
    t1, t2, pre = set(), set(), {}
    below = is_ancestor(n0, n1)
    for p in t.paths():
        inside = p[:len(n0)] == n0
        if p[:len(n1)] == n1:
            rel = p[len(n1):]
            copy = n0 + rel
            t2.add(copy)
            pre[copy] = p
            images[p] = (copy,) if below else (p, copy)
            if not below:
                t1.add(p)
        elif inside:
            images[p] = ()
        else:
            images[p] = (p,)
            t1.add(p)
    return result, CopyMap(images, frozenset(t1), frozenset(t2), pre)


def _mask_table(t, basis):
    return dict(zip(t.index.paths, type_masks(t, basis)))


def _assert_copies(before, after, cmap, what):
    for m, r in cmap.pairs():
        if before[m] != after[r]:
            raise PreservationError(f"{what}: node {r} (copy of {m}) changed type")


# ---------------------------------------------------------------- equivalence

def _full_keys(t, basis, masks=None):
    ix = t.index
    if masks is None:
        masks = type_masks(t, basis)
    m = np.array(masks, dtype=object)
    keys = []
    for i in range(ix.n):
        keys.append((masks[i],
                     frozenset(m[ix.anc[i, :]].tolist()),
                     frozenset(m[ix.anc[:, i]].tolist()),
                     frozenset(m[ix.incomp[i, :]].tolist())))
    return keys


def equiv_full(t: Tree, basis: ClosureBasis):
    """Classes of nodes agreeing on type, descendant, ancestor and incomparable type sets.

    Classes are listed by first member in document order; members in document order.
    """
    keys = _full_keys(t, basis)
    classes = {}
    for p, k in zip(t.index.paths, keys):
        classes.setdefault(k, []).append(p)
    return list(classes.values())


def _schema_states(t, schema):
    if schema is None:
        return None
    return state_abstraction(t, schema)


# ---------------------------------------------------------------- vertical collapse

def _paths_deepest_first(t):
    leaves = t.leaves()
    leaves.sort(key=lambda p: (-len(p), p))
    return [[leaf[:k] for k in range(len(leaf) + 1)] for leaf in leaves]


def _vertical_pair(t, keys, states, depth_bound):
    cls = dict(zip(t.index.paths, keys))
    for path in _paths_deepest_first(t):
        if depth_bound is not None and len(path) - 1 <= depth_bound:
            continue
        for i, n0 in enumerate(path):
            for n1 in path[i + 1:]:
                if cls[n1] == cls[n0] and (states is None or states[n0] == states[n1]):
                    return n0, n1
    return None


def collapse_vertical(t: Tree, basis: ClosureBasis, schema: TreeAutomaton | None = None, *,
                      depth_bound=None, check=True, trace=None, max_steps=None):
    """Overwrite ancestors by equivalent descendants until no path needs it.

    With ``depth_bound`` only paths longer than the bound are collapsed.  Each
    step is recorded in ``trace`` (if given) as ``(n0, n1, CopyMap)``.
    """
    steps = 0
    while max_steps is None or steps < max_steps:
        masks = type_masks(t, basis)
        states = _schema_states(t, schema)
        pair = _vertical_pair(t, _full_keys(t, basis, masks), states, depth_bound)
        if pair is None:
            break
        n0, n1 = pair
        new, cmap = overwrite(t, n0, n1)
        if check:
            _assert_copies(dict(zip(t.index.paths, masks)), _mask_table(new, basis), cmap,
                           "vertical collapse")
        if trace is not None:
            trace.append((n0, n1, cmap))
        t = new
        steps += 1
    return t


# ---------------------------------------------------------------- horizontal collapse

def _sibling_keys(t, masks):
    """Equivalence key of every non-root node among its siblings."""
    ix = t.index
    keys = {}
    for kids in ix.child_ids:
        if len(kids) < 2:
            continue
        own = [masks[c] for c in kids]
        below = [frozenset(masks[j] for j in range(c, ix.end[c])) for c in kids]
        for k, c in enumerate(kids):
            left_types = frozenset(own[:k])
            right_types = frozenset(own[k + 1:])
            left_desc = frozenset().union(*below[:k])
            right_desc = frozenset().union(*below[k + 1:])
            keys[ix.paths[c]] = (own[k], left_types, right_types, left_desc, right_desc,
                                 own[k - 1] if k else None,
                                 own[k + 1] if k + 1 < len(kids) else None)
    return keys


def collapse_horizontal(t: Tree, basis: ClosureBasis, *, width_bound=None, check=True,
                        trace=None, max_steps=None):
    """Cut repeated stretches out of long child lists.

    In a child list with two equivalent siblings, take the leftmost member n'
    of the class and its nearest equivalent n to the right, and drop every
    sibling after n' up to and including n.  Child lists no longer than
    ``width_bound`` are left alone.
    """
    steps = 0
    while max_steps is None or steps < max_steps:
        masks = type_masks(t, basis)
        keys = _sibling_keys(t, masks)
        found = None
        for p in t.paths():
            kids = t.node(p).children
            if len(kids) < 2 or (width_bound is not None and len(kids) <= width_bound):
                continue
            seen = {}
            for k in range(len(kids)):
                key = keys[p + (k,)]
                if key in seen:
                    found = (p, seen[key], k)
                    break
                seen[key] = k
            if found:
                break
        if found is None:
            break
        parent, keep, cut = found
        node = t.node(parent)
        kids = node.children
        new = t.replace(parent, node.with_children(kids[:keep + 1] + kids[cut + 1:]))
        shift = cut - keep
        images = {}
        for q in t.paths():
            if q[:len(parent)] == parent and len(q) > len(parent):
                k = q[len(parent)]
                if keep < k <= cut:
                    images[q] = ()
                    continue
                if k > cut:
                    images[q] = (parent + (k - shift,) + q[len(parent) + 1:],)
                    continue
            images[q] = (q,)
        kept = frozenset(r for out in images.values() for r in out)
        cmap = CopyMap(images, kept, frozenset(), {})
        if check:
            _assert_copies(dict(zip(t.index.paths, masks)), _mask_table(new, basis), cmap,
                           "horizontal collapse")
        if trace is not None:
            trace.append((parent, keep, cut, cmap))
        t = new
        steps += 1
    return t


# ---------------------------------------------------------------- stutter collapse

def _modal_rows(t, m, subs):
    vals = M.eval_modal_all(t, m)
    ix = t.index
    return {ix.paths[i]: tuple(bool(vals[g][i]) for g in subs) for i in range(ix.n)}


def collapse_stutter(t: Tree, m: M.Modal, *, check=True, trace=None, max_steps=None):
    """Collapse runs of equal-typed nodes on vertical paths of a TL_tree formula.

    A run is a maximal stretch of a root-to-leaf path whose nodes agree on every
    subformula of ``m`` (which implies agreeing on the label and on all
    descendant/ancestor diamonds); its highest node is overwritten by its lowest.
    """
    if M.uses_step_ch(m):
        raise FormulaError("collapse_stutter needs a formula without child/parent steps")
    subs = list(M.subformulas(m))
    steps = 0
    while max_steps is None or steps < max_steps:
        rows = _modal_rows(t, m, subs)
        pair = None
        for path in _paths_deepest_first(t):
            i = 0
            while i < len(path):
                j = i
                while j + 1 < len(path) and rows[path[j + 1]] == rows[path[i]]:
                    j += 1
                if j > i:
                    pair = (path[i], path[j])
                    break
                i = j + 1
            if pair:
                break
        if pair is None:
            break
        new, cmap = overwrite(t, *pair)
        if check:
            _assert_copies(rows, _modal_rows(new, m, subs), cmap, "stutter collapse")
        if trace is not None:
            trace.append((pair[0], pair[1], cmap))
        t = new
        steps += 1
    return t


# ---------------------------------------------------------------- promotion surgery

def promotion_keep(labels_on_path, masks_on_path):
    """Indices of a path that the promotion surgery keeps.

    For each letter b, the b-nodes of the path (other letters skipped) split
    into maximal runs of constant type; the first and last node of each run
    are kept.
    """
    keep = set()
    last = {}
    for i, (b, tp) in enumerate(zip(labels_on_path, masks_on_path)):
        run = last.get(b)
        if run is None or run[1] != tp:
            if run is not None:
                keep.add(run[2])
            keep.add(i)
            last[b] = [i, tp, i]
        else:
            run[2] = i
    for run in last.values():
        keep.add(run[2])
    return sorted(keep)


def _promote_path(t, path, keep):
    """Rebuild ``t`` keeping only the ``keep`` indices of ``path``.

    Returns the new tree and the map from surviving source paths to new paths.
    """
    position = {p: i for i, p in enumerate(path)}
    kept = set(path[i] for i in keep)
    images = {}

    def build(p, at):
        node = t.node(p)
        images[p] = at
        i = position.get(p)
        succ = path[i + 1] if i is not None and i + 1 < len(path) else None
        kids = []
        for k in range(len(node.children)):
            c = p + (k,)
            if c != succ or succ in kept:
                kids.append(build(c, at + (len(kids),)))
                continue
            r = succ
            while r not in kept:  # promote the off-path children of removed nodes
                nxt = path[position[r] + 1]
                for kk in range(len(t.node(r).children)):
                    if r + (kk,) != nxt:
                        kids.append(build(r + (kk,), at + (len(kids),)))
                r = nxt
            kids.append(build(r, at + (len(kids),)))
        return Tree(node.labels, kids)

    return build((), ()), images


def promote_shrink(t: Tree, f: Formula, *, check=True, trace=None, max_steps=None):
    """Shorten every path of a UAR model of an FO2[AncOf] sentence.

    On one path at a time the non-kept nodes (see ``promotion_keep``) are
    removed; each child of a removed node that is off the path is re-attached
    to the closest kept node above it.
    """
    if not is_uar(t):
        raise TreeError("promote_shrink requires a UAR tree")
    if Vocabulary.ANC_OF not in S.vocabulary_of(f):
        raise FormulaError("promote_shrink requires an FO2[AncOf] sentence")
    if not S.is_sentence(f):
        raise FormulaError("promote_shrink requires a sentence")
    basis = S.one_var_closure(f)
    masks = _mask_table(t, basis)
    if not masks[()] >> basis.position(f) & 1:
        raise ShrinkError("the tree does not satisfy the formula")
    steps = 0
    while max_steps is None or steps < max_steps:
        work = None
        for path in _paths_deepest_first(t):
            labels = [next(iter(t.node(p).labels)) for p in path]
            keep = promotion_keep(labels, [masks[p] for p in path])
            if len(keep) < len(path):
                work = (path, keep)
                break
        if work is None:
            break
        new, images = _promote_path(t, *work)
        after = _mask_table(new, basis)
        if check:
            for src, dst in images.items():
                if masks[src] != after[dst]:
                    raise PreservationError(f"promotion: node {src} (now {dst}) changed type")
        if trace is not None:
            trace.append((work[0], work[1], images))
        t, masks = new, after
        steps += 1
    return t


def promotion_depth_bound(f: Formula, signature_size: int) -> int:
    n = S.size(f)
    return 2 * signature_size * n * n + 2


# ---------------------------------------------------------------- subtree order

def order_key(t: Tree):
    text = render_tree(t).encode("utf-8")
    return (t.size, len(text), text)


def subtree_order(a: Tree, b: Tree) -> int:
    """-1, 0 or 1 as ``a`` precedes, equals or follows ``b`` in the shrink order."""
    ka, kb = order_key(a), order_key(b)
    return (ka > kb) - (ka < kb)


def precedes(a: Tree, b: Tree) -> bool:
    return order_key(a) < order_key(b)


# ---------------------------------------------------------------- update to DAG

BASIC, ANCESTOR, INCOMPARABLE, CHILD = "basic", "ancestor-of-basic", "incomparable", "child"
_TAG_RANK = {BASIC: 0, ANCESTOR: 1, INCOMPARABLE: 2, CHILD: 3}


@dataclass(frozen=True)
class WitnessSet:
    """Protected node paths with the reason each one is protected."""

    tags: dict

    def __contains__(self, p):
        return tuple(p) in self.tags

    def __len__(self):
        return len(self.tags)

    def __iter__(self):
        return iter(self.tags)

    def members(self, tag):
        return sorted(p for p, g in self.tags.items() if g == tag)


def _add(tags, p, tag):
    old = tags.get(p)
    if old is None or _TAG_RANK[tag] < _TAG_RANK[old]:
        tags[p] = tag


def witness_set(t: Tree, basis: ClosureBasis, variant: str, masks=None, bodies=None) -> WitnessSet:
    """Protected witnesses of the update procedure on the current tree."""
    ix = t.index
    if masks is None:
        masks = type_masks(t, basis)
    deepest = {}
    for i in range(ix.n):
        tp = masks[i]
        if tp not in deepest or ix.depth[i] > ix.depth[deepest[tp]]:
            deepest[tp] = i
    tags = {}
    basics = set()
    for i in deepest.values():
        p = ix.paths[i]
        _add(tags, p, BASIC)
        for k in range(len(p)):
            _add(tags, p[:k], ANCESTOR)
            basics.add(ix.pos[p[:k]])
        basics.add(i)
    if variant == "AncOf":
        if bodies is None:
            bodies = body_matrices(t, basis)
        for m in sorted(basics):
            for _, body in bodies:
                hits = np.nonzero(body[m] & ix.incomp[m])[0]
                if len(hits):
                    w = ix.paths[int(hits[0])]
                    _add(tags, w, INCOMPARABLE)
                    for k in range(len(w)):
                        _add(tags, w[:k], INCOMPARABLE)
    elif variant == "NoAncOf":
        for i in deepest.values():
            for c in ix.child_ids[i]:
                _add(tags, ix.paths[c], CHILD)
    else:
        raise ShrinkError(f"unknown update variant {variant!r}")
    h = int(ix.depth.max()) + 1
    q = len(bodies) if bodies is not None else len(basis)
    bound = len(deepest) * h * (2 + q * h)
    assert len(tags) <= bound, "witness set exceeds its size bound"
    return WitnessSet(tags)


def _sibling_context(ix, masks, i):
    if i == 0:
        return None
    kids = ix.child_ids[ix.parent[i]]
    k = kids.index(i)
    own = [masks[c] for c in kids]
    return (frozenset(own[:k]), frozenset(own[k + 1:]),
            own[k - 1] if k else None, own[k + 1] if k + 1 < len(own) else None)


def _update_candidates(t, basis, variant, masks, states, bodies):
    """(n, n') for the next update step, or None at the fixpoint."""
    ix = t.index
    w = witness_set(t, basis, variant, masks, bodies)
    if variant == "AncOf":
        sel = selected_desc_types(t, basis, masks, bodies=bodies)
        m = np.array(masks, dtype=object)
        key = [(masks[i], frozenset(m[ix.anc[:, i]].tolist()), sel[i]) for i in range(ix.n)]
    else:
        # the copy of n' lands among the siblings of n, so their types must match too
        key = [(masks[i], masks[ix.parent[i]] if i else None, _sibling_context(ix, masks, i))
               for i in range(ix.n)]
    if states is not None:
        key = [k + (states[ix.paths[i]],) for i, k in enumerate(key)]
    groups = {}
    for i in range(ix.n):
        if ix.paths[i] not in w:
            groups.setdefault(key[i], []).append(i)
    order = {}
    best = {}
    for k, members in groups.items():
        if len(members) < 2:
            continue
        ks = [order_key(ix.nodes[i]) for i in members]
        for i, kk in zip(members, ks):
            order[i] = kk
        best[k] = min(members, key=lambda i: order[i])
    for i in range(ix.n):  # shallowest-in-document order first
        k = key[i]
        if k in best and order.get(i) is not None:
            j = best[k]
            if order[j] < order[i]:
                return ix.paths[i], ix.paths[j], w
    return None, None, w


def update_to_dag(t: Tree, basis, variant: str = "AncOf", schema: TreeAutomaton | None = None, *,
                  verify="auto", check_formula=False, trace=None, max_steps=None) -> TreeDag:
    """Repeatedly replace unprotected subtrees by smaller equivalent ones; return the DAG.

    ``basis`` is either the sentence itself or its one-variable closure (whose
    last member is the sentence).  ``verify`` controls the per-step type check:
    ``True`` always, ``False`` never, ``"auto"`` on trees of at most 60 nodes and
    on every tenth step beyond.  Each step is appended to ``trace`` as
    ``(n, n', key before, key after)``.
    """
    if isinstance(basis, Formula):
        sentence = basis
        basis = S.one_var_closure(basis)
    else:
        sentence = basis[len(basis) - 1]
    if variant not in ("AncOf", "NoAncOf"):
        raise ShrinkError(f"unknown update variant {variant!r}")
    needed = Vocabulary.ANC_OF if variant == "AncOf" else Vocabulary.NO_ANC_OF
    if needed not in S.vocabulary_of(sentence):
        raise FormulaError(f"the {variant} update needs an FO2[{needed.value}] sentence")
    masks = type_masks(t, basis)
    top = basis.position(sentence)
    if not masks[0] >> top & 1:
        raise ShrinkError("the tree does not satisfy the formula")
    if schema is not None:
        state_abstraction(t, schema)  # raises if the tree is rejected
    steps = 0
    while max_steps is None or steps < max_steps:
        states = _schema_states(t, schema)
        bodies = body_matrices(t, basis)
        n, n2, _ = _update_candidates(t, basis, variant, masks, states, bodies)
        if n is None:
            break
        new, cmap = overwrite(t, n, n2)
        new_masks = type_masks(new, basis)
        do_check = verify is True or (verify == "auto" and (t.size <= 60 or steps % 10 == 0))
        if do_check:
            before = dict(zip(t.index.paths, masks))
            after = dict(zip(new.index.paths, new_masks))
            for r in cmap.t1:
                if before[r] != after[r]:
                    raise PreservationError(f"update: node {r} outside the rewrite changed type")
            for r in cmap.t2:
                if before[cmap.preimage[r]] != after[r]:
                    raise PreservationError(f"update: copied node {r} changed type")
        if check_formula and not new_masks[0] >> top & 1:
            raise PreservationError("update step broke the formula")
        if trace is not None:
            trace.append((n, n2, order_key(t), order_key(new)))
        t, masks = new, new_masks
        steps += 1
    return to_dag(t)
