import random

import pytest

import oracles
from exhaustive import Sweep
from fo2trees import modal as M
from fo2trees import sampling
from fo2trees import syntax as S
from fo2trees.checker import eval_fo2
from fo2trees.modal import (F_CH, P_CH, X_CH, atom, eval_modal, eval_navxp, fo2_to_modal, holds, modality,
                            navxp_size, navxp_to_modal, parse_modal, parse_navxp, render_modal, render_navxp)
from fo2trees.syntax import FormulaError, parse_fo2
from fo2trees.trees import Tree, parse_tree

# measured maximum of DAG size / NavXP size over the generated corpus below
NAVXP_SIZE_FACTOR = 3


def test_eval_modal_examples():
    t = parse_tree("(P ; (Q ;))")
    assert eval_modal(t, modality(X_CH, atom("Q")))
    assert eval_modal(t, modality(P_CH, atom("P")), (0,))
    assert not eval_modal(Tree({"P"}), modality(F_CH, M.TOP))


def test_eval_modal_matches_naive_semantics():
    rng = random.Random(2)
    kinds = M.MODALITIES
    for _ in range(300):
        t = sampling.random_tree(rng, rng.randint(1, 10))
        m = sampling.random_modal(rng, 4, kinds=kinds)
        got = M.eval_modal_all(t, m)[m]
        for i, p in enumerate(t.index.paths):
            assert bool(got[i]) == oracles.eval_modal(t, m, p)


def test_modal_text_roundtrip():
    rng = random.Random(3)
    for _ in range(300):
        m = sampling.random_modal(rng, 5, kinds=M.MODALITIES)
        assert parse_modal(render_modal(m)) is m


def test_navxp_examples():
    t = parse_tree("(Q ; (P ;))")
    assert holds(t, parse_navxp("descendant[lab()=P]"))
    t2 = parse_tree("(Q ; (P ;) (Q ; (Q ;)))")
    assert eval_navxp(t2, parse_navxp("self[lab()=Q]")) == {(), (1,), (1, 0)}


def test_navxp_union_is_set_union():
    rng = random.Random(4)
    for _ in range(100):
        t = sampling.random_tree(rng, rng.randint(1, 10))
        a, b = "descendant[lab()=P]", "following-sibling[lab()=Q]/child"
        u = eval_navxp(t, parse_navxp(f"({a} | {b})"))
        assert u == eval_navxp(t, parse_navxp(a)) | eval_navxp(t, parse_navxp(b))


def test_navxp_unsupported_axis():
    with pytest.raises(FormulaError, match="axis"):
        parse_navxp("parent[lab()=P]")


def _all_small_trees():
    return list(oracles.all_trees(4, ("P",)))


def test_navxp_child_is_next_child_modality():
    m = navxp_to_modal(parse_navxp("child[lab()=P]"))
    target = modality(X_CH, atom("P"))
    for t in _all_small_trees():
        assert eval_modal(t, m) == eval_modal(t, target)


def test_navxp_self_label():
    assert navxp_to_modal(parse_navxp("self[lab()=P]")) is atom("P")


NAVXP_CORPUS = [
    "descendant[lab()=P]/child[lab()=Q]",
    "child[not lab()=P]/following-sibling[lab()=Q]",
    "(descendant | ancestor-or-self)[lab()=Q]",
    "descendant-or-self[child[lab()=P] and not next-sibling]",
    "child/previous-sibling[preceding-sibling[lab()=P] or lab()=Q]",
    "descendant[child[child[lab()=P]]]/ancestor-or-self[lab()=Q]",
]


@pytest.mark.parametrize("text", NAVXP_CORPUS)
def test_navxp_translation_coevaluates(text):
    q = parse_navxp(text)
    assert parse_navxp(render_navxp(q)) == q
    m = navxp_to_modal(q)
    assert M.dag_size(m) <= NAVXP_SIZE_FACTOR * navxp_size(q)
    rng = random.Random(len(text))
    for _ in range(500):
        t = sampling.random_tree(rng, rng.randint(1, 12))
        assert holds(t, q) == eval_modal(t, m)


def test_fo2_exists_translation():
    m = fo2_to_modal(parse_fo2("exists x. P(x)"))
    target = M.disj(atom("P"), modality(F_CH, atom("P")))
    for t in _all_small_trees():
        assert eval_modal(t, m) == eval_modal(t, target)


def test_fo2_forall_translation():
    m = fo2_to_modal(parse_fo2("forall x. P(x)"))
    target = M.neg(M.disj(M.neg(atom("P")), modality(F_CH, M.neg(atom("P")))))
    for t in _all_small_trees():
        assert eval_modal(t, m) == eval_modal(t, target)


@pytest.mark.parametrize("text", [
    "exists x. P(x)",
    "forall x. (P(x) -> exists y. (AncOf(x,y) & Q(y)))",
    "forall x. (Q(x) -> exists y. (AncOf(y,x) & P(y)))",
    "exists x. (P(x) & !exists y. AncOf(y,x))",
])
def test_ancof_translation_is_vertical(text):
    used = M.modalities_used(fo2_to_modal(parse_fo2(text)))
    assert used <= {F_CH, P_CH}


def test_fo2_translation_needs_sentence():
    with pytest.raises(FormulaError):
        fo2_to_modal(parse_fo2("P(x)"))


def test_fo2_translation_exhaustive():
    sweep = Sweep(5)
    rng = random.Random(77)
    done = 0
    while done < 200:
        f = sampling.random_sentence(rng, 5, max_closure=12)
        done += 1
        assert (sweep.fo2(f) == sweep.modal_at_root(fo2_to_modal(f))).all(), S.render(f)


def test_fo2_translation_random_larger_trees():
    rng = random.Random(78)
    for _ in range(200):
        f = sampling.random_sentence(rng, 6)
        m = fo2_to_modal(f)
        t = sampling.random_tree(rng, rng.randint(6, 25))
        assert eval_fo2(t, f) == eval_modal(t, m)


def test_modal_to_fo2_roundtrip_semantics():
    rng = random.Random(5)
    for _ in range(100):
        m = sampling.random_modal(rng, 4, kinds=M.MODALITIES)
        f = M.modal_to_fo2(m)
        t = sampling.random_tree(rng, rng.randint(1, 10))
        for p in t.index.paths:
            assert eval_fo2(t, f, {"x": p}) == eval_modal(t, m, p)
