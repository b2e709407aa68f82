"""Ranked bottom-up tree automata used as schemas over UAR trees."""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .trees import Tree, TreeError, is_uar


class AutomatonError(ValueError):
    pass


@dataclass(frozen=True)
class TreeAutomaton:
    """Nondeterministic ranked bottom-up automaton.

    ``transitions`` maps ``(symbol, (q_1, ..., q_j))`` with ``j <= rank`` to a
    frozenset of target states.
    """

    rank: int
    states: tuple
    accepting: frozenset
    transitions: dict = field(hash=False, compare=True)

    def __post_init__(self):
        if self.rank < 0:
            raise AutomatonError("rank must be non-negative")
        if not self.states:
            raise AutomatonError("automaton needs at least one state")
        known = set(self.states)
        if not self.accepting <= known:
            raise AutomatonError("accepting states must be declared")
        for (sym, kids), targets in self.transitions.items():
            if len(kids) > self.rank:
                raise AutomatonError(f"transition {sym}{kids} exceeds rank {self.rank}")
            if not set(kids) <= known or not set(targets) <= known:
                raise AutomatonError(f"transition {sym}{kids} uses an undeclared state")
        if not self.alphabet:
            raise AutomatonError("automaton alphabet is empty")
        by_symbol = {}
        for (sym, kids), targets in self.transitions.items():
            by_symbol.setdefault(sym, {})[kids] = frozenset(targets)
        object.__setattr__(self, "_by_symbol", by_symbol)
        prefixes = {}
        for sym, table in by_symbol.items():
            for kids, targets in table.items():
                for q in targets:
                    for k in range(len(kids) + 1):
                        prefixes.setdefault((sym, q), set()).add(kids[:k])
        object.__setattr__(self, "_prefixes", prefixes)

    @property
    def alphabet(self):
        return frozenset(sym for sym, _ in self.transitions)

    def targets(self, symbol, kids):
        return self._by_symbol.get(symbol, {}).get(tuple(kids), frozenset())

    def is_prefix(self, symbol, state, kids):
        """Can a child-state sequence starting with ``kids`` still lead to ``state``?"""
        return tuple(kids) in self._prefixes.get((symbol, state), ())

    def __hash__(self):
        return hash((self.rank, self.states, self.accepting,
                     frozenset((k, frozenset(v)) for k, v in self.transitions.items())))


def parse_automaton(text) -> TreeAutomaton:
    """Text format::

        rank 2
        states q0 q1
        accept q0
        P() -> q1
        Q(q1, q1) -> q0
    """
    rank = None
    states = None
    accept = None
    trans = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        if head == "rank":
            try:
                rank = int(rest)
            except ValueError:
                raise AutomatonError(f"line {lineno}: bad rank {rest!r}") from None
        elif head == "states":
            states = tuple(rest.split())
        elif head == "accept":
            accept = frozenset(rest.split())
        else:
            m = re.fullmatch(r"([A-Za-z_][A-Za-z0-9_]*)\s*\(([^)]*)\)\s*->\s*([A-Za-z0-9_]+)", line)
            if not m:
                raise AutomatonError(f"line {lineno}: cannot parse {line!r}")
            kids = tuple(s.strip() for s in m.group(2).split(",") if s.strip())
            trans.setdefault((m.group(1), kids), set()).add(m.group(3))
    if rank is None or states is None or accept is None:
        raise AutomatonError("automaton needs 'rank', 'states' and 'accept' lines")
    return TreeAutomaton(rank, states, accept, {k: frozenset(v) for k, v in trans.items()})


def render_automaton(a: TreeAutomaton) -> str:
    lines = [f"rank {a.rank}", "states " + " ".join(a.states), "accept " + " ".join(sorted(a.accepting))]
    for (sym, kids), targets in sorted(a.transitions.items()):
        for q in sorted(targets):
            lines.append(f"{sym}({', '.join(kids)}) -> {q}")
    return "\n".join(lines)


def _symbol(t_labels, a):
    if len(t_labels) != 1:
        raise TreeError("schema runs require a UAR tree (exactly one label per node)")
    (sym,) = t_labels
    if sym not in a.alphabet:
        raise TreeError(f"symbol {sym!r} is outside the automaton alphabet")
    return sym


def run_automaton(t: Tree, a: TreeAutomaton):
    """Bottom-up run: (accepted, {node path: frozenset of reachable states})."""
    if not is_uar(t):
        raise TreeError("schema runs require a UAR tree (exactly one label per node)")
    ix = t.index
    reach = [None] * ix.n
    for i in reversed(range(ix.n)):
        kids = ix.child_ids[i]
        if len(kids) > a.rank:
            raise TreeError(f"node {ix.paths[i]} has {len(kids)} children, rank is {a.rank}")
        sym = _symbol(ix.labels[i], a)
        out = set()
        for (s, tup), targets in a.transitions.items():
            if s == sym and len(tup) == len(kids) and all(q in reach[c] for q, c in zip(tup, kids)):
                out |= targets
        reach[i] = frozenset(out)
    return bool(reach[0] & a.accepting), {ix.paths[i]: reach[i] for i in range(ix.n)}


def state_abstraction(t: Tree, a: TreeAutomaton):
    """Fix one accepting run: top-down, each node takes the least state that works."""
    accepted, reach = run_automaton(t, a)
    if not accepted:
        raise AutomatonError("the automaton has no accepting run on this tree")
    ix = t.index
    order = {q: k for k, q in enumerate(a.states)}
    chosen = {}

    def pick(path, allowed):
        return min(allowed & reach[path], key=lambda q: order[q])

    chosen[()] = pick((), a.accepting)
    for i in range(ix.n):
        p = ix.paths[i]
        kids = [ix.paths[c] for c in ix.child_ids[i]]
        sym = next(iter(ix.labels[i]))
        q = chosen[p]
        # least child-state tuple (lexicographic by state order) producing q
        best = None
        for (s, tup), targets in a.transitions.items():
            if s != sym or len(tup) != len(kids) or q not in targets:
                continue
            if all(qq in reach[c] for qq, c in zip(tup, kids)):
                key = tuple(order[qq] for qq in tup)
                if best is None or key < best[0]:
                    best = (key, tup)
        for c, qq in zip(kids, best[1] if best else ()):
            chosen[c] = qq
    return chosen


def universal_automaton(alphabet, rank, state="q"):
    """One-state automaton accepting every UAR tree of outdegree <= rank over alphabet."""
    trans = {(sym, (state,) * k): frozenset({state}) for sym in alphabet for k in range(rank + 1)}
    return TreeAutomaton(rank, (state,), frozenset({state}), trans)
