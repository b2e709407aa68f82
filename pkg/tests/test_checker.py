import random
import time

import pytest

import oracles
from fo2trees import modal as M
from fo2trees import sampling
from fo2trees import syntax as S
from fo2trees.checker import (eval_fo2, eval_fo2_dag, interval_profile, phi_type, type_masks, type_sets,
                              vertical_type_changes)
from fo2trees.syntax import FormulaError, parse_fo2
from fo2trees.trees import Tree, TreeDag, TreeError, parse_tree, to_dag, unfold


def test_eval_examples():
    assert eval_fo2(parse_tree("(P ;)"), parse_fo2("forall x. P(x)"))
    assert eval_fo2(parse_tree("(P ; (Q ;))"), parse_fo2("exists x. exists y. (ParentOf(x,y) & Q(y))"))
    assert eval_fo2(parse_tree("(P ; (Q ;) (Q ;))"), parse_fo2("exists x. exists y. LeftSibOf(x,y)"))


def test_eval_with_assignment():
    t = parse_tree("(P ; (Q ;) (Q ; (P ;)))")
    f = parse_fo2("exists y. (ParentOf(x,y) & P(y))")
    assert eval_fo2(t, f, {"x": (1,)})
    assert not eval_fo2(t, f, {"x": (0,)})


def test_unbound_variable():
    with pytest.raises(FormulaError):
        eval_fo2(Tree({"P"}), parse_fo2("P(x)"))


def test_eval_matches_naive_oracle():
    rng = random.Random(1)
    for _ in range(400):
        t = sampling.random_tree(rng, rng.randint(1, 9))
        f = sampling.random_sentence(rng, 5)
        assert eval_fo2(t, f) == oracles.eval_fo2(t, f), S.render(f)


def test_dag_eval_agrees_with_unfolding():
    rng = random.Random(3)
    for _ in range(500):
        t = sampling.random_tree(rng, rng.randint(1, 40), preds=rng.choice([("P",), ("P", "Q")]))
        d = to_dag(t)
        assert d.unfolded_size() <= 200
        f = sampling.random_sentence(rng, 5)
        assert eval_fo2_dag(d, f) == eval_fo2(t, f), S.render(f)


def test_dag_eval_exhaustive_small_trees():
    rng = random.Random(9)
    sentences = [sampling.random_sentence(rng, 4) for _ in range(15)]
    for t in oracles.all_trees(4, ("P",)):
        d = to_dag(t)
        for f in sentences:
            assert eval_fo2_dag(d, f) == eval_fo2(t, f)


def test_single_entry_dag():
    d = TreeDag([({"P"}, ())], 0)
    assert eval_fo2_dag(d, parse_fo2("forall x. (P(x) & !exists y. AncOf(x,y))"))


def test_deep_shared_dag_without_unfolding():
    # 2^20 leaves by doubling, and a chain of 2^10 entries
    entries = [({"Q"}, ())]
    for _ in range(20):
        entries.append(({"Q"}, (len(entries) - 1, len(entries) - 1)))
    entries.append(({"P"}, (len(entries) - 1,)))
    wide = TreeDag(entries, len(entries) - 1)
    chain = [({"Q"}, ())] + [({"Q"} if k < 1023 else {"P"}, (k,)) for k in range(1024)]
    deep = TreeDag(chain, len(chain) - 1)
    t0 = time.perf_counter()
    assert eval_fo2_dag(wide, parse_fo2("exists x. P(x)"))
    assert eval_fo2_dag(deep, parse_fo2("exists x. P(x)"))
    assert not eval_fo2_dag(deep, parse_fo2("exists x. (P(x) & exists y. AncOf(y,x))"))
    assert time.perf_counter() - t0 < 1.0


def test_phi_type_examples():
    f = parse_fo2("exists x. (P(x) & exists y. AncOf(y,x))")
    basis = S.one_var_closure(f)
    anc = parse_fo2("exists y. AncOf(y,x)")
    root = phi_type(Tree({"P"}), (), basis)
    assert S.Pred("P", "x") in root and anc not in root
    assert anc in phi_type(parse_tree("(P ; (P ;))"), (0,), basis)


def test_phi_type_bits_match_per_subformula_oracle():
    rng = random.Random(6)
    for _ in range(500):
        t = sampling.random_tree(rng, rng.randint(1, 8))
        f = sampling.random_sentence(rng, 4)
        basis = S.one_var_closure(f)
        p = rng.choice(oracles.nodes(t))
        tp = phi_type(t, p, basis)
        assert [m in tp for m in basis] == list(oracles.type_vector(t, basis, p))


def test_root_type_holds_sentence_bit():
    rng = random.Random(12)
    for _ in range(200):
        t = sampling.random_tree(rng, rng.randint(1, 12))
        f = sampling.random_sentence(rng, 5)
        basis = S.one_var_closure(f)
        assert (f in phi_type(t, (), basis)) == eval_fo2(t, f)


def test_type_sets_single_node_and_chain():
    basis = S.one_var_closure(parse_fo2("exists x. P(x)"))
    ts = type_sets(Tree({"P"}), basis)
    assert ts.anc[()] == ts.desc[()] == ts.incomp[()] == ts.selected[()] == frozenset()
    t = parse_tree("(P ; (;))")
    ts = type_sets(t, basis)
    assert ts.anc[(0,)] == {ts.types[()]}


def test_type_sets_against_all_pairs_oracle():
    rng = random.Random(15)
    for _ in range(30):
        t = sampling.random_tree(rng, 15)
        f = sampling.random_sentence(rng, 4, relations=("AncOf",))
        basis = S.one_var_closure(f)
        ts = type_sets(t, basis)
        ns = oracles.nodes(t)
        tv = {p: oracles.type_vector(t, basis, p) for p in ns}
        code = {p: sum(1 << k for k, b in enumerate(tv[p]) if b) for p in ns}
        assert ts.types == code
        for p in ns:
            assert ts.anc[p] == {code[q] for q in ns if oracles.rel("AncOf", q, p)}
            assert ts.desc[p] == {code[q] for q in ns if oracles.rel("AncOf", p, q)}
            assert ts.incomp[p] == {code[q] for q in ns if q != p and not oracles.rel("AncOf", p, q)
                                    and not oracles.rel("AncOf", q, p)}


def test_selected_desc_types_against_definition():
    rng = random.Random(21)
    for _ in range(30):
        t = sampling.random_tree(rng, 12)
        f = sampling.random_sentence(rng, 4, relations=("AncOf",))
        basis = S.one_var_closure(f)
        ts = type_sets(t, basis)
        ns = oracles.nodes(t)
        bodies = [(m.body if isinstance(m, S.Exists) else S.Not(m.body))
                  for m in basis if isinstance(m, (S.Exists, S.Forall)) and m.var == "y"
                  and S.free_vars(m) == {"x"}]
        for m in ns:
            want = set()
            ancestors = [a for a in ns if oracles.rel("AncOf", a, m)]
            below = [w for w in ns if oracles.rel("AncOf", m, w)]
            groups = {}
            for a in ancestors:
                groups.setdefault(ts.types[a], []).append(a)
            for body in bodies:
                for group in groups.values():
                    hits = [w for w in below if any(oracles.eval_fo2(t, body, {"x": a, "y": w}) for a in group)]
                    if hits:
                        want.add(ts.types[hits[0]])
            assert ts.selected[m] == want


def _path_tree(labels):
    t = Tree({labels[-1]})
    for lab in reversed(labels[:-1]):
        t = Tree({lab}, [t])
    return t


def test_interval_profile_examples():
    t = _path_tree("aabaa")
    leaf = (0, 0, 0, 0)
    assert interval_profile(t, leaf, parse_fo2("a(x)"), "a") == 1
    t = _path_tree("aba")
    psi = parse_fo2("a(x) & exists y. (AncOf(y,x) & b(y))")
    assert interval_profile(t, (0, 0), psi, "a") == 1


def test_interval_profile_errors():
    with pytest.raises(TreeError):
        interval_profile(parse_tree("(a b ;)"), (), parse_fo2("a(x)"), "a")
    with pytest.raises(FormulaError):
        interval_profile(_path_tree("aa"), (0,), parse_fo2("exists y. ParentOf(y,x)"), "a")


def test_vertical_type_changes_example():
    t = _path_tree("aab")
    m = M.modality(M.F_CH, M.atom("b"))
    assert vertical_type_changes(t, (0, 0), m) == {m: 1}


def test_vertical_type_changes_constant_path():
    t = _path_tree("aaaa")
    for m in (M.modality(M.F_CH, M.atom("a")), M.modality(M.P_CH, M.atom("a"))):
        assert vertical_type_changes(t, (0, 0, 0), m)[m] <= 1


def test_vertical_type_changes_rejects_step_modalities():
    with pytest.raises(FormulaError):
        vertical_type_changes(_path_tree("ab"), (0,), M.modality(M.X_CH, M.atom("b")))


def test_type_masks_consistency_for_boolean_members():
    rng = random.Random(30)
    for _ in range(100):
        t = sampling.random_tree(rng, rng.randint(1, 10))
        f = sampling.random_sentence(rng, 5)
        basis = S.one_var_closure(f)
        masks = type_masks(t, basis)
        for m in basis:
            k = basis.position(m)
            for mask in masks:
                if isinstance(m, S.Not) and S.normalize_var(m.sub) in basis.index:
                    assert (mask >> k & 1) != (mask >> basis.position(m.sub) & 1)
                if isinstance(m, S.And) and S.normalize_var(m.left) in basis.index \
                        and S.normalize_var(m.right) in basis.index and len(S.free_vars(m)) == 1 \
                        and S.free_vars(m.left) == S.free_vars(m.right) == {"x"}:
                    assert (mask >> k & 1) == (mask >> basis.position(m.left) & mask >> basis.position(m.right) & 1)


def test_unfold_of_dag_evaluates_same_as_dag_for_generated_models():
    d = to_dag(parse_tree("(r ; (a ; (b ;)) (a ; (b ;)))"))
    f = parse_fo2("forall x. (a(x) -> exists y. (ParentOf(x,y) & b(y)))")
    assert eval_fo2_dag(d, f) and eval_fo2(unfold(d), f)
