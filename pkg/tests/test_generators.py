import pytest

from fo2trees import generators as G
from fo2trees import modal as M
from fo2trees import solver as V
from fo2trees import syntax as S
from fo2trees.checker import eval_fo2
from fo2trees.syntax import Vocabulary


def ancof_options(colors):
    return V.SolveOptions(uar=True, vocabulary=Vocabulary.ANC_OF, signature=G.tiling_ancof_signature(1, colors))


def test_vocabularies():
    assert Vocabulary.PAR_OF in S.vocabulary_of(G.gen_tiling_parof(1, ["c"], set(), set()))
    assert Vocabulary.ANC_OF in S.vocabulary_of(G.gen_tiling_ancof(1, ["c"], set(), set()))
    assert Vocabulary.ANC_OF in S.vocabulary_of(G.gen_counter_depth(2))


def test_sizes_are_polynomial():
    sizes = [S.size(G.gen_counter_depth(n)) for n in range(1, 7)]
    # the successor encoding is quadratic in n
    for n, s in enumerate(sizes, 1):
        assert s <= 40 * n * n + 100
    t = [S.size(G.gen_tiling_ancof(n, ["a", "b"], {("a", "b")}, {("b", "a")})) for n in (1, 2, 3)]
    assert t[2] < 30 * t[0]


def test_argument_errors():
    with pytest.raises(G.GeneratorError):
        G.gen_tiling_parof(1, [], set(), set())
    with pytest.raises(G.GeneratorError):
        G.gen_tiling_ancof(0, ["c"], set(), set())
    with pytest.raises(G.GeneratorError):
        G.gen_tiling_parof(1, ["c"], {("c", "d")}, set())
    with pytest.raises(G.GeneratorError):
        G.gen_counter_depth(0)
    with pytest.raises(G.GeneratorError):
        G.solve_tiling_brute(3, ["c"], set(), set())


def test_brute_force_tiling_examples():
    assert G.solve_tiling_brute(1, ["c"], {("c", "c")}, {("c", "c")})
    assert not G.solve_tiling_brute(1, ["c"], set(), {("c", "c")})
    alt = {("c1", "c2"), ("c2", "c1")}
    assert G.solve_tiling_brute(1, ["c1", "c2"], alt, alt)
    assert G.solve_tiling_brute(2, ["c1", "c2"], alt, alt)
    assert not G.solve_tiling_brute(2, ["c1", "c2"], {("c1", "c2")}, alt)


def test_parse_pairs():
    assert G.parse_pairs("a,b; b,a") == {("a", "b"), ("b", "a")}
    assert G.parse_pairs("") == set()
    with pytest.raises(G.GeneratorError):
        G.parse_pairs("a,b,c")


def test_parof_monochrome_sat():
    f = G.gen_tiling_parof(1, ["c"], {("c", "c")}, {("c", "c")})
    r = V.decide(f)
    assert isinstance(r, V.Sat) and eval_fo2(r.tree(), f)
    t = r.tree()
    leaves = [p for p in t.paths() if "T_c" in t.node(p).labels]
    assert len(leaves) >= 4 and all(len(p) == 3 for p in leaves)


def test_parof_without_horizontal_pairs_unsat():
    r = V.decide(G.gen_tiling_parof(1, ["c"], set(), {("c", "c")}), V.SolveOptions(time_budget=300))
    assert isinstance(r, V.Unsat) and r.complete


def test_ancof_monochrome_sat_with_full_branches():
    f = G.gen_tiling_ancof(1, ["c"], {("c", "c")}, {("c", "c")})
    r = V.decide(f, ancof_options(["c"]))
    assert isinstance(r, V.Sat)
    t = r.tree()
    assert eval_fo2(t, f)
    # each grid cell is a branch of 2n + 2 = 4 nodes: r, X bit, Y bit, colour
    assert all(len(p) + 1 == 4 for p in t.leaves())


def test_ancof_checkerboard_sat():
    alt = {("c1", "c2"), ("c2", "c1")}
    f = G.gen_tiling_ancof(1, ["c1", "c2"], alt, alt)
    r = V.decide(f, ancof_options(["c1", "c2"]))
    assert isinstance(r, V.Sat) and eval_fo2(r.tree(), f)


def test_counter_one():
    f = G.gen_counter_depth(1)
    sig = G.counter_signature(1)
    r = V.decide(f, V.SolveOptions(uar=True, vocabulary=Vocabulary.ANC_OF, signature=sig, branching_limit=2))
    assert isinstance(r, V.Sat) and r.tree().depth >= 2
    assert eval_fo2(r.tree(), f)
    # binary UAR trees of depth at most 1 have at most 3 nodes
    opts = V.SolveOptions(uar=True, rank=2, signature=sig)
    assert V.brute_force(f, 3, 1, opts) is None
    m = M.fo2_to_modal(f)
    assert isinstance(V.solve_bounded(m, 1, 2, uar=True, signature=sig), V.Unsat)


def test_counter_two_needs_depth_four():
    f = G.gen_counter_depth(2)
    sig = G.counter_signature(2)
    m = M.fo2_to_modal(f)
    assert isinstance(V.solve_bounded(m, 3, 2, uar=True, signature=sig, time_budget=120), V.Unsat)
    r = V.solve_bounded(m, 4, 2, uar=True, signature=sig, time_budget=120)
    assert isinstance(r, V.Sat) and r.tree().depth == 4 and eval_fo2(r.tree(), f)


def test_counter_three_is_satisfiable():
    # slow (a few minutes): the witness needs depth 2^3 = 8
    f = G.gen_counter_depth(3)
    r = V.decide(f, V.SolveOptions(uar=True, vocabulary=Vocabulary.ANC_OF, signature=G.counter_signature(3),
                                   branching_limit=2, time_budget=900))
    assert isinstance(r, V.Sat)
    t = r.tree()
    assert t.depth >= 8 and eval_fo2(t, f)
