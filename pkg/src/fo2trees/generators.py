"""Hard-instance families: exponential-grid tilings and a counter forcing deep models."""
from __future__ import annotations

import itertools

from . import syntax as S
from .syntax import And, Exists, Forall, Iff, Implies, Not, Or, Pred, Rel, conj, disj


class GeneratorError(ValueError):
    pass


def _other(v):
    return "y" if v == "x" else "x"


def _exists_rel(rel, v, body_of, upward):
    """exists w. (rel(w, v) & body(w)) when upward, else exists w. (rel(v, w) & body(w))."""
    w = _other(v)
    atom = Rel(rel, w, v) if upward else Rel(rel, v, w)
    return Exists(w, And(atom, body_of(w)))


def _level(k, v, rel="ParentOf"):
    """v sits at depth exactly k (root = 0), written with parent steps only."""
    if k == 0:
        return Not(Exists(_other(v), Rel(rel, _other(v), v)))
    return _exists_rel(rel, v, lambda w: _level(k - 1, w, rel), upward=True)


def _ancestor_at(k, v, pred):
    """The ancestor of v exactly k parent steps up carries pred."""
    if k == 0:
        return Pred(pred, v)
    return _exists_rel("ParentOf", v, lambda w: _ancestor_at(k - 1, w, pred), upward=True)


def _succ(bits_x, bits_y):
    """Binary successor: value(y) = value(x) + 1, bit 1 most significant.

    ``bits_x[i]`` / ``bits_y[i]`` are one-variable formulas for bit i+1.
    """
    n = len(bits_x)
    cases = []
    for k in range(n):
        same = [Iff(bits_x[i], bits_y[i]) for i in range(k)]
        flip = [Not(bits_x[k]), bits_y[k]]
        carry = [And(bits_x[i], Not(bits_y[i])) for i in range(k + 1, n)]
        cases.append(conj(same + flip + carry))
    return disj(cases)


def _same(bits_x, bits_y):
    return conj([Iff(a, b) for a, b in zip(bits_x, bits_y)])


def _check_tiling(n, colors, H, V):
    if n < 1:
        raise GeneratorError("n must be at least 1")
    colors = list(dict.fromkeys(colors))
    if not colors:
        raise GeneratorError("at least one colour is needed")
    known = set(colors)
    for a, b in list(H) + list(V):
        if a not in known or b not in known:
            raise GeneratorError(f"constraint pair ({a}, {b}) uses an unknown colour")
    return colors


def _tile_name(c):
    return f"T_{c}"


def _tiling_constraints(leaf, colors, H, V, xbits, ybits, tile):
    """Grid constraints over leaves x, y given bit formula builders."""
    x, y = "x", "y"
    bx, by = xbits(x), xbits(y)
    cx, cy = ybits(x), ybits(y)
    pair = And(leaf(x), leaf(y))
    out = []
    for c in colors:
        out.append(Forall(x, Forall(y, Implies(conj([pair, _same(bx, by), _same(cx, cy), tile(c, x)]),
                                                tile(c, y)))))
        horiz = [d for (a, d) in H if a == c]
        vert = [d for (a, d) in V if a == c]
        out.append(Forall(x, Forall(y, Implies(conj([pair, _same(cx, cy), _succ(bx, by), tile(c, x)]),
                                                disj([tile(d, y) for d in horiz])))))
        out.append(Forall(x, Forall(y, Implies(conj([pair, _same(bx, by), _succ(cx, cy), tile(c, x)]),
                                                disj([tile(d, y) for d in vert])))))
    return out


def gen_tiling_parof(n, colors, H, V):
    """Sentence over ParentOf: satisfiable iff the 2^n x 2^n grid has a valid tiling.

    Levels 1..n carry the x-coordinate bits (ZeroX_i / OneX_i), levels
    n+1..2n the y bits, level 2n+1 holds the tile leaves T_c; the root is
    unlabelled and every node carries at most one predicate.
    """
    colors = _check_tiling(n, colors, H, V)
    x = "x"
    zx = [f"ZeroX_{i}" for i in range(1, n + 1)]
    ox = [f"OneX_{i}" for i in range(1, n + 1)]
    zy = [f"ZeroY_{i}" for i in range(1, n + 1)]
    oy = [f"OneY_{i}" for i in range(1, n + 1)]
    tiles = [_tile_name(c) for c in colors]
    level_labels = [[]] + [[zx[i], ox[i]] for i in range(n)] + [[zy[i], oy[i]] for i in range(n)] + [tiles]
    preds = [p for labs in level_labels for p in labs]
    parts = []
    # at most one predicate per node
    for p, q in itertools.combinations(preds, 2):
        parts.append(Forall(x, Not(And(Pred(p, x), Pred(q, x)))))
    top = 2 * n + 1
    for k, labs in enumerate(level_labels):
        here = disj([Pred(p, x) for p in labs]) if labs else Not(disj([Pred(p, x) for p in preds]))
        parts.append(Forall(x, Implies(_level(k, x), here)))
        for p in labs:
            parts.append(Forall(x, Implies(Pred(p, x), _level(k, x))))
        if k < top - 1:
            for p in level_labels[k + 1]:
                parts.append(Forall(x, Implies(_level(k, x), _exists_rel("ParentOf", x, lambda w, p=p: Pred(p, w),
                                                                          upward=False))))
        elif k == top - 1:
            parts.append(Forall(x, Implies(_level(k, x), _exists_rel(
                "ParentOf", x, lambda w: disj([Pred(t, w) for t in tiles]), upward=False))))
    for t in tiles:
        parts.append(Forall(x, Implies(Pred(t, x), Not(_exists_rel("ParentOf", x, lambda w: S.TRUE, upward=False)))))
    parts.append(Exists(x, _level(0, x)))

    def xbits(v):
        return [_ancestor_at(top - (i + 1), v, ox[i]) for i in range(n)]

    def ybits(v):
        return [_ancestor_at(top - (n + i + 1), v, oy[i]) for i in range(n)]

    def leaf(v):
        return disj([Pred(t, v) for t in tiles])

    parts += _tiling_constraints(leaf, colors, H, V, xbits, ybits, lambda c, v: Pred(_tile_name(c), v))
    return conj(parts)


def gen_tiling_ancof(n, colors, H, V):
    """Sentence over AncOf: satisfiable over UAR trees iff the grid has a valid tiling.

    Every grid cell is a root-to-leaf branch r, X bits 1..n, Y bits 1..n,
    colour leaf C_c.
    """
    colors = _check_tiling(n, colors, H, V)
    x, y = "x", "y"
    Xs = [(f"ZeroX_{i}", f"OneX_{i}") for i in range(1, n + 1)]
    Ys = [(f"ZeroY_{i}", f"OneY_{i}") for i in range(1, n + 1)]
    cols = [f"C_{c}" for c in colors]
    layers = [["r"]] + [list(p) for p in Xs] + [list(p) for p in Ys] + [cols]

    def is_layer(k, v):
        return disj([Pred(p, v) for p in layers[k]])

    def below(v, body_of):
        return _exists_rel("AncOf", v, body_of, upward=False)

    def above(v, body_of):
        return _exists_rel("AncOf", v, body_of, upward=True)

    def no_below(v, body_of):
        return Not(below(v, body_of))

    parts = []
    root = Not(Exists(y, Rel("AncOf", y, x)))
    parts.append(Exists(x, And(root, Pred("r", x))))
    parts.append(Forall(x, Implies(Pred("r", x), root)))
    last = len(layers) - 1
    for k in range(last):
        for p in layers[k + 1]:
            # each node of layer k has descendants of both kinds from layer k + 1
            if k + 1 < last:
                parts.append(Forall(x, Implies(is_layer(k, x), below(x, lambda w, p=p: Pred(p, w)))))
        if k + 1 == last:
            # the last bit layer sees exactly one colour below it
            parts.append(Forall(x, Implies(is_layer(k, x), disj([
                And(below(x, lambda w, c=c: Pred(c, w)),
                    no_below(x, lambda w, c=c: Not(Pred(c, w)))) for c in cols]))))
        # descendants live strictly deeper in the layer order
        earlier = [p for j in range(k + 1) for p in layers[j]]
        parts.append(Forall(x, Implies(is_layer(k, x), no_below(x, lambda w: disj([Pred(p, w) for p in earlier])))))
        # and every node of layer k + 1 has a layer-k ancestor
        parts.append(Forall(x, Implies(is_layer(k + 1, x), above(x, lambda w, k=k: is_layer(k, w)))))
    for c in cols:
        parts.append(Forall(x, Implies(Pred(c, x), no_below(x, lambda w: S.TRUE))))

    def xbits(v):
        return [above(v, lambda w, p=p[1]: Pred(p, w)) for p in Xs]

    def ybits(v):
        return [above(v, lambda w, p=p[1]: Pred(p, w)) for p in Ys]

    def leaf(v):
        return disj([Pred(c, v) for c in cols])

    parts += _tiling_constraints(leaf, colors, H, V, xbits, ybits, lambda c, v: Pred(f"C_{c}", v))
    return conj(parts)


def gen_counter_depth(n):
    """Sentence over AncOf whose binary UAR models need depth at least 2^n.

    Labels: b (a single spine from the root), s (pairwise incomparable
    nodes hanging off the spine) and a_1..a_n below s-nodes.  The set of
    i with an a_i below an s-node is its n-bit address; address 0^n must
    occur and every address except 1^n needs a successor.
    """
    if n < 1:
        raise GeneratorError("n must be at least 1")
    x, y = "x", "y"
    a = [f"a_{i}" for i in range(1, n + 1)]
    b = lambda v: Pred("b", v)  # noqa: E731
    s = lambda v: Pred("s", v)  # noqa: E731

    def bit(i, v):
        w = _other(v)
        return Exists(w, And(Rel("AncOf", v, w), Pred(a[i], w)))

    comparable = Or(Rel("AncOf", x, y), Rel("AncOf", y, x))
    parts = [
        # the root is labelled b
        Forall(x, Implies(Not(Exists(y, Rel("AncOf", y, x))), b(x))),
        # b-nodes form a chain
        Forall(x, Forall(y, Implies(conj([b(x), b(y), Not(S.Eq(x, y))]), comparable))),
        # s-nodes are pairwise incomparable
        Forall(x, Forall(y, Implies(And(s(x), s(y)), Not(comparable)))),
        # every ancestor of a b-node or an s-node is a b-node
        Forall(x, Implies(Or(b(x), s(x)), Forall(y, Implies(Rel("AncOf", y, x), b(y))))),
        # below an s-node only a-labels occur
        Forall(x, Implies(s(x), Forall(y, Implies(Rel("AncOf", x, y), disj([Pred(p, y) for p in a]))))),
        # every a-node hangs below some s-node
        Forall(x, Implies(disj([Pred(p, x) for p in a]), Exists(y, And(Rel("AncOf", y, x), s(y))))),
        # address 0^n exists
        Exists(x, And(s(x), conj([Not(bit(i, x)) for i in range(n)]))),
    ]
    bx = [bit(i, x) for i in range(n)]
    by = [bit(i, y) for i in range(n)]
    parts.append(Forall(x, Implies(And(s(x), Not(conj(bx))),
                                   Exists(y, And(s(y), _succ(bx, by))))))
    return conj(parts)


def counter_signature(n):
    return frozenset({"b", "s"} | {f"a_{i}" for i in range(1, n + 1)})


def tiling_ancof_signature(n, colors):
    return frozenset({"r"} | {f"{z}{ax}_{i}" for z in ("Zero", "One") for ax in "XY" for i in range(1, n + 1)}
                     | {f"C_{c}" for c in colors})


def solve_tiling_brute(n, colors, H, V, guard=4):
    """Exhaustive search for a valid tiling of the 2^n x 2^n grid."""
    side = 2 ** n
    if side > guard:
        raise GeneratorError(f"grid side {side} exceeds the guard {guard}")
    colors = _check_tiling(n, colors, H, V)
    H, V = set(map(tuple, H)), set(map(tuple, V))
    cells = [(i, j) for j in range(side) for i in range(side)]
    grid = {}

    def ok(i, j):
        c = grid[i, j]
        if i > 0 and (grid[i - 1, j], c) not in H:
            return False
        if j > 0 and (grid[i, j - 1], c) not in V:
            return False
        return True

    def go(k):
        if k == len(cells):
            return True
        i, j = cells[k]
        for c in colors:
            grid[i, j] = c
            if ok(i, j) and go(k + 1):
                return True
        del grid[i, j]
        return False

    return go(0)


def parse_pairs(text):
    """``"a,b;b,a"`` -> {("a", "b"), ("b", "a")}."""
    out = set()
    for chunk in (text or "").split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = [p.strip() for p in chunk.split(",")]
        if len(parts) != 2:
            raise GeneratorError(f"bad colour pair {chunk!r}")
        out.add(tuple(parts))
    return out
