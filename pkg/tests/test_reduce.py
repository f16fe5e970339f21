import random

import pytest
from hypothesis import given, settings, strategies as st

from kepler.ast import (EquationSystem, WordEquation, letter, parse_term,
                        var)
from kepler.reduce import (SAT_LEAF, UNSAT_LEAF, Budget, BudgetExhausted, NotReducible,
                           build_tree, canonical_system, check_model,
                           check_tree, classify, complete, cycle_lengths,
                           enumerate_walks, extract_model, match, postpro,
                           walk_model)

from conftest import brute_solutions, eqs

GOLDEN_VARS = ["x", "y"] + [f"{v}{i}" for v in "xy" for i in range(1, 7)]


def canon(*specs):
    out = []
    for s in specs:
        l, r = s.split("=")
        e = WordEquation(parse_term(l, GOLDEN_VARS), parse_term(r, GOLDEN_VARS))
        out.append(canonical_system(() if e.trivial else (e,)))
    return sorted(out)


# -------------------------------------------------------------- primitives

def test_match_strips_common_prefix():
    e = eqs("abx=abya").equations[0]
    assert str(match(e)) == "x=ya"


def test_classify_three_ways():
    assert classify(eqs("ab=ab").equations) == SAT_LEAF
    assert classify(eqs("ab=ba").equations) == UNSAT_LEAF
    assert classify(eqs("=ax").equations) == UNSAT_LEAF
    assert classify(eqs("ax=xa").equations) == "Open"


def test_complete_letter_var_head():
    e = match(eqs("abx=xba").equations[0])
    kids = complete(e)
    assert [str(s[0]) for _, s in kids] == ["[ε/x]", "[ax_1/x]"]
    assert str(kids[0][0]) == "ab=ba"
    assert str(kids[1][0]) == "bax_1=x_1ba"


def test_complete_var_var_head_has_four_children():
    e = eqs("xaby=ybax").equations[0]
    kids = complete(e)
    assert [str(s[0]) for _, s in kids] == ["[ε/x]", "[yx_1/x]", "[ε/y]", "[xy_1/y]"]


def test_complete_single_step_case():
    kids = complete(eqs("ay=ya").equations[0])
    assert [str(k) for k, _ in kids] == ["a=a", "ay_1=y_1a"] or [str(k) for k, _ in kids][1] == "ay_1=y_1a"


def test_complete_rejects_trivial_and_clashes():
    with pytest.raises(NotReducible):
        complete(eqs("ab=ab").equations[0])
    with pytest.raises(NotReducible):
        complete(eqs("ax=bx").equations[0])


# -------------------------------------------------------------- goldens

def test_abx_xba_golden(abx_xba):
    t = build_tree(abx_xba)
    assert len(t) == 5
    assert len(t.backlinks) == 1
    (b, bl), = t.backlinks.items()
    assert bl.companion == 0
    assert [str(s) for s in bl.renaming] == ["[x/x_2]"]
    assert [str(t[i]) for i in t.sat_leaves()] == ["ε=ε"]


def test_abx_ay_golden(abx_ay):
    t = build_tree(abx_ay)
    links = sorted(str(s) for bl in t.backlinks.values() for s in bl.renaming)
    assert links == ["[x/x_2]", "[y/y_1]"]
    # the ay=ya cycle starts at the node where x is used up
    assert len(t) == 7
    assert check_tree(t) == []


def test_xaby_ybax_golden(xaby_ybax):
    t = build_tree(xaby_ybax)
    assert len(t) - 1 == 24
    assert len(t.backlinks) == 6
    expected = canon(
        "xaby=ybax",
        "aby=yba", "x1aby=bayx1", "xab=bax", "abxy1=y1bax",
        "ab=ba", "bay3=y3ba", "aby=bay", "x2aby=aybx2",
        "ab=ba", "x4ab=abx4", "abx=bax", "bxay5=y5bax",
        "ε=ε", "aby4=y4ba", "by=yb", "x3aby=ybax3",
        "ε=ε", "x5ab=bax5", "xa=ax",
        # bud back to the root, then the ε child of by=yb
        "xaby6=y6bax", "ε=ε",
        "by2=y2b", "ε=ε", "x6a=ax6")
    assert sorted(canonical_system(n.system) for n in t.nodes) == expected
    companions = sorted(canonical_system(t[bl.companion].system) for bl in t.backlinks.values())
    assert companions == canon("aby=yba", "xaby=ybax", "xab=bax", "xaby=ybax", "by=yb", "xa=ax")


def test_unsat_instance_has_no_satisfiable_leaf():
    t = build_tree(eqs("xaay=ybax"))
    assert t.sat_leaves() == []
    assert len(t) == 21


def test_budget_exhaustion_is_reported():
    with pytest.raises(BudgetExhausted) as info:
        build_tree(eqs("xaby=ybax"), Budget(max_nodes=3))
    assert info.value.reason == "max-nodes"


# -------------------------------------------------------------- models

def test_abx_xba_model_with_zero_cycles(abx_xba):
    t = build_tree(abx_xba)
    leaf = t.sat_leaves()[0]
    assert {k.name: v for k, v in extract_model(t, leaf).items()} == {"x": "a"}


def test_walk_solutions_match_brute_force(abx_xba):
    # [DERIVED] brute force over {a,b}^≤9: x ∈ {a, aba, ababa, abababa, ababababa}
    t = build_tree(abx_xba)
    got = set()
    for w in enumerate_walks(t, 40):
        m = walk_model(t, w)
        if len(m[var("x")]) <= 9:
            got.add(m[var("x")])
    brute = {s[var("x")] for s in brute_solutions(abx_xba, max_len=9)}
    assert got == brute == {"a", "aba", "ababa", "abababa", "ababababa"}


def test_postpro_makes_free_variables_enumerable():
    t = build_tree(eqs("xy=xy"))
    assert t[t.root].status == SAT_LEAF
    postpro(t, ("a", "b"))
    assert all(not t[i].tracked for i in t.sat_leaves())
    values = {walk_model(t, w)[var("x")] for w in enumerate_walks(t, 8)}
    assert {"", "a", "b", "ab", "ba"} <= values


def test_xaby_ybax_models_verify(xaby_ybax):
    t = build_tree(xaby_ybax)
    postpro(t, ("a", "b"))
    n = 0
    for w in enumerate_walks(t, 30, limit=300):
        assert check_model(xaby_ybax, walk_model(t, w))
        n += 1
    assert n > 10


# -------------------------------------------------------------- properties

def random_quadratic(rng: random.Random, max_n=12):
    """Random quadratic equation with N <= max_n over letters a, b."""
    while True:
        nvars = rng.randint(1, 3)
        vs = [var(v) for v in "xyz"[:nvars]]
        syms = []
        for v in vs:
            syms += [v] * rng.randint(1, 2)
        syms += [letter(rng.choice("ab")) for _ in range(rng.randint(0, max_n - len(syms)))]
        rng.shuffle(syms)
        cut = rng.randint(0, len(syms))
        e = WordEquation(tuple(syms[:cut]), tuple(syms[cut:]))
        if e.N <= max_n:
            return EquationSystem((e,))


def _trees(count, seed=11):
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        es = random_quadratic(rng)
        try:
            out.append((es, build_tree(es, Budget(max_nodes=3000, wall_time=5))))
        except BudgetExhausted:
            pytest.fail(f"quadratic {es} did not close")
    return out


TREES = None


def trees():
    global TREES
    if TREES is None:
        TREES = _trees(500)
    return TREES


def test_quadratic_preservation_and_size_bound():
    for es, t in trees():
        n0 = es.N
        for n in t.nodes:
            sys_ = EquationSystem(n.system)
            assert sys_.is_quadratic(), (es, n)
            assert sys_.N <= n0, (es, n)


def test_edges_and_backlinks_rederive():
    for es, t in trees():
        assert check_tree(t) == [], es


def test_cycle_length_below_n():
    for es, t in trees():
        for bud, length, n in cycle_lengths(t):
            assert length < max(n, 1) or n == 0, (es, bud, length, n)


def test_verdicts_agree_with_brute_force():
    # a solution of length <= 4 exists  =>  some satisfiable leaf
    for es, t in trees()[:150]:
        if brute_solutions(es, max_len=4):
            assert t.sat_leaves(), es


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_walk_models_always_solve_the_root(seed):
    es = random_quadratic(random.Random(seed), 10)
    t = build_tree(es, Budget(max_nodes=3000))
    postpro(t, ("a", "b"))
    for w in enumerate_walks(t, 25, limit=40):
        assert check_model(es, walk_model(t, w))
