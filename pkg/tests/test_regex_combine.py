import pytest
from hypothesis import given, settings, strategies as st

from kepler.ast import Chr, Concat, Star, Union, var
from kepler.reduce import build_tree, check_model, enumerate_walks, walk_model
from kepler.regex_combine import CapExceeded, TreeTooLarge, evaluate_leaf, widen_tree

from conftest import eqs

A_STAR = Star(Chr("a"))

GOLDEN_LOG = [
    "(e0,e3) x=ax1 ∧ x1=ε ∧ x∈a* SAT",
    "(e0,e8) x=ax1 ∧ x1=bx2 ∧ x2=x3 ∧ x3=ax4 ∧ x4=ε ∧ x∈a* UNSAT",
    "(e0,e13) x=ax1 ∧ x1=bx2 ∧ x2=x3 ∧ x3=ax4 ∧ x4=bx5 ∧ x5=x6 ∧ x6=ax7 ∧ x7=ε ∧ x∈a* UNSAT",
]


def test_abx_xba_with_a_star(abx_xba):
    t, info = widen_tree(build_tree(abx_xba), [(var("x"), A_STAR)])
    assert (info.m, info.M) == (1, 1)
    assert t.log == GOLDEN_LOG
    leaves = t.sat_leaves()
    assert len(leaves) == 1
    walks = list(enumerate_walks(t, 20))
    models = {walk_model(t, w)[var("x")] for w in walks}
    assert models == {"a"}


def test_cap_is_enforced(abx_xba):
    # (aa)* ∩ ... : three live states already give 3 + 3! = 9 copies
    r = Concat(Chr("a"), Star(Concat(Chr("a"), Concat(Chr("b"), Chr("a")))))
    with pytest.raises(CapExceeded):
        widen_tree(build_tree(abx_xba), [(var("x"), r)], cap=2)


def test_widen_keeps_all_solutions_of_length_bound(abx_xba):
    # x ∈ (ab)*a keeps every solution; nothing may be pruned away
    r = Concat(Star(Concat(Chr("a"), Chr("b"))), Chr("a"))
    t, info = widen_tree(build_tree(abx_xba), [(var("x"), r)])
    assert all(v == "SAT" for _, _, v in info.log)
    got = {walk_model(t, w)[var("x")] for w in enumerate_walks(t, 30)}
    assert {"a", "aba", "ababa"} <= got


def test_evaluate_leaf_direct():
    t = build_tree(eqs("abx=xba"))
    leaf = t.sat_leaves()[0]
    from kepler.reduce import trace_labels
    assert evaluate_leaf(trace_labels(t, leaf), [(var("x"), A_STAR)]) == "sat"
    assert evaluate_leaf(trace_labels(t, leaf), [(var("x"), Star(Chr("b")))]) == "unsat"


REGEXES = [A_STAR, Star(Chr("b")), Star(Union(Chr("a"), Chr("b"))),
           Concat(Chr("a"), Star(Chr("b"))), Star(Concat(Chr("a"), Chr("b")))]


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(["abx=xba", "ax=xa", "xy=yx", "axb=ayb", "xab=bax"]),
       st.sampled_from(REGEXES))
def test_surviving_walks_satisfy_memberships(eq, r):
    from kepler.automata import accepts, regex_to_dfa
    es = eqs(eq)
    x = sorted(es.vars(), key=lambda v: v.name)[0]
    try:
        t, _ = widen_tree(build_tree(es), [(x, r)], cap=200, max_nodes=20000)
    except (CapExceeded, TreeTooLarge):
        return
    d = regex_to_dfa(r, ("a", "b"))
    for w in enumerate_walks(t, 25, limit=50):
        m = walk_model(t, w)
        assert check_model(es, m)
        assert accepts(d, m.get(x, ""))


def test_node_cap_stops_nested_unrolling():
    # free variables become nested cycles; two live states already explode
    with pytest.raises(TreeTooLarge):
        widen_tree(build_tree(eqs("xy=yx")), [(var("x"), Star(Concat(Chr("a"), Chr("b"))))],
                   max_nodes=5000)
