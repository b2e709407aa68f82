"""The ten acceptance criteria, each at its stated count and tolerance.

Every test records one PASS/FAIL line (see ``acceptance_log``); the lines are
repeated in pytest's terminal summary.
"""
import random
import time

import pytest

import oracles
from acceptance_log import criterion
from exhaustive import Sweep
from fo2trees import generators as G
from fo2trees import modal as M
from fo2trees import sampling
from fo2trees import shrink as Sh
from fo2trees import solver as V
from fo2trees import syntax as S
from fo2trees.checker import eval_fo2, eval_fo2_dag, interval_profile, type_masks, vertical_type_changes
from fo2trees.syntax import Vocabulary
from fo2trees.trees import unfold

pytestmark = pytest.mark.acceptance


def _masks(t, basis):
    return dict(zip(t.index.paths, type_masks(t, basis)))


@criterion(1, "decide vs brute force on 200 sentences")
def test_c1_oracle_soundness_and_completeness():
    rng = random.Random(101)
    t0 = time.monotonic()
    verdicts = {"SAT": 0, "UNSAT": 0, "BOUNDED_UNSAT": 0}
    complete_unsat = 0
    for _ in range(200):
        f = sampling.random_sentence(rng, 5, max_closure=12)
        assert len(S.one_var_closure(f)) <= 12 and S.predicates(f) <= {"P", "Q"}
        r = V.decide(f, V.SolveOptions(time_budget=30))
        verdicts[r.tag] += 1
        if isinstance(r, V.Sat):
            t = r.tree()
            assert eval_fo2(t, f) and oracles.eval_fo2(t, f), S.render(f)
        elif isinstance(r, V.Unsat) and r.complete:
            complete_unsat += 1
            # (b) read contrapositively: a complete Unsat must leave brute force empty
            assert V.brute_force(f, 6, 4) is None, S.render(f)
    elapsed = time.monotonic() - t0
    assert elapsed < 600, f"took {elapsed:.0f}s"
    return f"{verdicts}, {complete_unsat} complete Unsat cross-checked, {elapsed:.0f}s"


@criterion(2, "fo2_to_modal coherence on all trees <= 5 nodes over {P,Q}")
def test_c2_translation_coherence():
    sweep = Sweep(5, ("P", "Q"))
    rng = random.Random(102)
    for _ in range(100):
        f = sampling.random_sentence(rng, 5)
        got = sweep.modal_at_root(M.fo2_to_modal(f))
        assert (sweep.fo2(f) == got).all(), S.render(f)
    return f"100 sentences x {sweep.count} trees"


@criterion(3, "collapse_vertical pathwise preservation over 500 steps")
def test_c3_pathwise_preservation():
    rng = random.Random(103)
    steps = runs = 0
    while steps < 500:
        f = sampling.random_sentence(rng, 4, max_closure=10)
        basis = S.one_var_closure(f)
        t = sampling.random_tree(rng, rng.randint(5, 40), preds=rng.choice([("P",), ("P", "Q")]),
                                 max_children=rng.choice([None, 2, 1]))
        trace = []
        result = Sh.collapse_vertical(t, basis, check=False, trace=trace)
        cur = t
        for n0, n1, cmap in trace:
            new, again = Sh.overwrite(cur, n0, n1)
            assert again == cmap
            before, after = _masks(cur, basis), _masks(new, basis)
            for m, r in cmap.pairs():
                assert before[m] == after[r], (S.render(f), n0, n1, m, r)
            cur = new
            steps += 1
        assert cur == result
        runs += 1
    return f"{steps} steps over {runs} runs"


def _satisfying_pair(rng, relations, max_nodes=60, uar=False):
    while True:
        f = sampling.random_sentence(rng, 4, relations=relations, max_closure=10)
        t = sampling.random_tree(rng, rng.randint(5, max_nodes), preds=rng.choice([("P",), ("P", "Q")]),
                                 uar=uar, max_children=rng.choice([None, 3, 2]))
        if eval_fo2(t, f):
            return f, t


VARIANTS = [("AncOf", ("AncOf",)), ("NoAncOf", ("ParentOf", "LeftSibOf", "LeftOf"))]


def _update_runs(seed):
    """300 update_to_dag runs split over both variants, replayed step by step."""
    rng = random.Random(seed)
    for k in range(300):
        variant, rels = VARIANTS[k % 2]
        f, t = _satisfying_pair(rng, rels)
        trace = []
        d = Sh.update_to_dag(t, f, variant, verify=False, trace=trace)
        yield f, t, variant, d, trace


def _replay(f, t, trace):
    basis = S.one_var_closure(f)
    cur = t
    for n, n2, key_before, key_after in trace:
        new, cmap = Sh.overwrite(cur, n, n2)
        assert Sh.order_key(cur) == key_before and Sh.order_key(new) == key_after
        before, after = _masks(cur, basis), _masks(new, basis)
        for r in cmap.t1:
            assert before[r] == after[r], ("T1", S.render(f), n, n2, r)
        for r in cmap.t2:
            assert before[cmap.preimage[r]] == after[r], ("T2", S.render(f), n, n2, r)
        yield cur, new
        cur = new


@criterion(4, "update_to_dag global preservation, 300 runs")
def test_c4_global_preservation():
    steps = 0
    for f, t, variant, d, trace in _update_runs(104):
        last = t
        for _, new in _replay(f, t, trace):
            last = new
            steps += 1
        u = unfold(d)
        assert u == last
        assert eval_fo2(u, f) and oracles.eval_fo2(u, f), (variant, S.render(f))
    return f"{steps} update steps checked"


@criterion(10, "update_to_dag DAG machinery, 300 runs")
def test_c10_dag_machinery():
    rng = random.Random(110)
    shrunk = 0
    for f, t, variant, d, trace in _update_runs(104):
        assert len(d.entries) <= t.size
        assert len(trace) <= t.size
        for _, _, before, after in trace:
            assert after < before
        u = unfold(d)
        shrunk += u.size < t.size
        assert eval_fo2_dag(d, f) == eval_fo2(u, f) is True
        for _ in range(3):
            g = sampling.random_sentence(rng, 4, max_closure=10)
            assert eval_fo2_dag(d, g) == eval_fo2(u, g), S.render(g)
    return f"300 runs, {shrunk} strictly smaller unfoldings"


@criterion(5, "promotion surgery, 200 satisfying UAR pairs")
def test_c5_promotion():
    rng = random.Random(105)
    deepest = 0
    removed = 0
    for _ in range(200):
        f, t = _satisfying_pair(rng, ("AncOf",), max_nodes=80, uar=True)
        sigma = len({lab for p in t.paths() for lab in t.node(p).labels} | {"P", "Q"})
        r = Sh.promote_shrink(t, f)
        assert eval_fo2(r, f) and oracles.eval_fo2(r, f), S.render(f)
        assert r.depth <= Sh.promotion_depth_bound(f, sigma), (S.render(f), r.depth)
        deepest = max(deepest, r.depth)
        removed += t.size - r.size
    return f"max result depth {deepest}, {removed} nodes removed in total"


@criterion(6, "interval_profile <= |psi|^2 on 1000 UAR trees")
def test_c6_interval_bound():
    rng = random.Random(106)
    worst = 0.0
    checked = 0
    for _ in range(1000):
        t = sampling.random_tree(rng, rng.randint(1, 200), uar=True, max_children=rng.choice([None, 2, 1]))
        psi = sampling.random_unary(rng, 4)
        bound = S.size(psi) ** 2
        leaves = sorted(t.leaves(), key=len, reverse=True)[:3]
        for leaf in leaves:
            for a in ("P", "Q"):
                k = interval_profile(t, leaf, psi, a)
                assert k <= bound, (S.render(psi), leaf, a, k, bound)
                worst = max(worst, k / bound)
                checked += 1
    return f"{checked} (path, letter) profiles, worst ratio {worst:.3f}"


@criterion(7, "vertical flips and stutter collapse on 500 trees")
def test_c7_stutter():
    rng = random.Random(107)
    collapsed = 0
    for _ in range(500):
        t = sampling.random_tree(rng, rng.randint(1, 40), max_children=rng.choice([None, 2, 1]))
        m = sampling.random_modal(rng, 4)
        for leaf in t.leaves():
            flips = vertical_type_changes(t, leaf, m)
            assert all(v <= 1 for v in flips.values()), (M.render_modal(m), leaf, flips)
        r = Sh.collapse_stutter(t, m)
        assert M.eval_modal(r, m) == M.eval_modal(t, m), M.render_modal(m)
        collapsed += r.size < t.size
    return f"500 trees, {collapsed} shrunk by stutter collapse"


@criterion(8, "counter family depth 2^n for n = 1, 2")
def test_c8_counter_depth():
    t0 = time.monotonic()
    out = []
    for n in (1, 2):
        f = G.gen_counter_depth(n)
        sig = G.counter_signature(n)
        r = V.decide(f, V.SolveOptions(uar=True, vocabulary=Vocabulary.ANC_OF, signature=sig,
                                       branching_limit=2, time_budget=120))
        assert isinstance(r, V.Sat), r
        w = r.tree()
        assert eval_fo2(w, f)
        assert all(len(w.node(p).labels) == 1 and len(w.node(p).children) <= 2 for p in w.paths())
        # bounded-exhaustive search over binary UAR trees of height 2^n - 1
        m = M.fo2_to_modal(f)
        low = V.solve_bounded(m, 2 ** n - 1, 2, uar=True, signature=sig, time_budget=120)
        assert isinstance(low, V.Unsat), low
        assert w.depth >= 2 ** n
        out.append(f"n={n}: witness depth {w.depth}, none at depth <= {2 ** n - 1}")
    assert V.brute_force(G.gen_counter_depth(1), 3, 1, V.SolveOptions(uar=True, rank=2,
                                                                      signature=G.counter_signature(1))) is None
    elapsed = time.monotonic() - t0
    assert elapsed < 300, f"took {elapsed:.0f}s"
    return "; ".join(out) + f"; {elapsed:.0f}s"


def tiling_instances():
    """4 one-colour sets, the 16 two-colour sets with H = V, and 20 random two-colour sets."""
    out = []
    one = {("c", "c")}
    for h in (set(), one):
        for v in (set(), one):
            out.append((["c"], set(h), set(v)))
    cols = ["c1", "c2"]
    pairs = [(a, b) for a in cols for b in cols]
    for k in range(16):
        s = {p for i, p in enumerate(pairs) if k >> i & 1}
        out.append((cols, s, set(s)))
    rng = random.Random(2024)
    for _ in range(20):
        out.append((cols, {p for p in pairs if rng.random() < 0.5}, {p for p in pairs if rng.random() < 0.5}))
    return out


@criterion(9, "tiling reductions agree with solve_tiling_brute")
def test_c9_tiling():
    counts = {"sat": 0, "unsat": 0}
    for cols, h, v in tiling_instances():
        expected = G.solve_tiling_brute(1, cols, h, v)
        counts["sat" if expected else "unsat"] += 1
        rp = V.decide(G.gen_tiling_parof(1, cols, h, v), V.SolveOptions(time_budget=900))
        ra = V.decide(G.gen_tiling_ancof(1, cols, h, v),
                      V.SolveOptions(uar=True, vocabulary=Vocabulary.ANC_OF,
                                     signature=G.tiling_ancof_signature(1, cols), time_budget=900))
        for name, r in (("parof", rp), ("ancof", ra)):
            if expected:
                assert isinstance(r, V.Sat), (name, cols, sorted(h), sorted(v), r.tag)
            else:
                assert isinstance(r, V.Unsat) and r.complete, (name, cols, sorted(h), sorted(v), r.tag)
    return f"40 instances ({counts['sat']} tileable, {counts['unsat']} not), both reductions"
