from hypothesis import given, strategies as st

from kepler.ast import (EPS, LETTER_CONS, RENAME, VAR_CONS, FreshNames,
                        Substitution, apply_subst, fresh_var, letter, parse_term,
                        term, var)
from kepler.reduce import match

from conftest import eqs

x, y, x1 = var("x"), var("y"), var("x1")


def test_interning_gives_identical_symbols():
    assert letter("a") is letter("a")
    assert var("x") is var("x")
    assert letter("x") != var("x")


def test_parse_term_longest_name_wins():
    t = parse_term("abx1y", ["x", "x1", "y"])
    assert t == (letter("a"), letter("b"), var("x1"), y)
    assert parse_term("ε", ["x"]) == ()


def test_fresh_var_counter():
    names = FreshNames({"x", "y", "y_2"})
    assert fresh_var(x, names).name == "x_1"
    assert fresh_var(x, names).name == "x_2"
    # derived names reuse the origin's counter and skip taken ones
    assert names.fresh("x_2").name == "x_3"
    assert names.fresh("y").name == "y_1"
    assert names.fresh("y").name == "y_3"


def test_apply_subst_examples():
    s = Substitution(x, (letter("a"), x1))
    assert apply_subst(term("ab", x), s) == term("ab", "a", x1)
    assert apply_subst((x,), Substitution(x, ())) == ()
    vc = Substitution(x, (y, x1))
    assert apply_subst(term(x, "ab", y), vc) == term(y, x1, "ab", y)


def test_substitution_shapes():
    assert Substitution(x, ()).shape == EPS
    assert Substitution(x, (letter("a"), x1)).shape == LETTER_CONS
    assert Substitution(x, (y, x1)).shape == VAR_CONS
    assert Substitution(x, (y,)).shape == RENAME
    assert str(Substitution(x, (letter("a"), x1))) == "[ax1/x]"


def test_equation_measures():
    e = eqs("abx=xba")
    assert e.N == 6
    assert e.is_quadratic()
    assert not eqs("axbx=xbxa").is_quadratic()
    assert str(eqs()) == "ε=ε"


words = st.text(alphabet="ab", max_size=5)
terms = st.lists(st.sampled_from(["a", "b", "x", "y"]), max_size=8)


def _t(tokens):
    return tuple(var(c) if c in "xy" else letter(c) for c in tokens)


@given(terms)
def test_eps_substitutions_commute(tokens):
    t = _t(tokens)
    ex, ey = Substitution(x, ()), Substitution(y, ())
    assert apply_subst(apply_subst(t, ex), ey) == apply_subst(apply_subst(t, ey), ex)


@given(terms, st.sampled_from("ab"))
def test_letter_cons_length(tokens, c):
    t = _t(tokens)
    s = Substitution(x, (letter(c), x1))
    assert len(apply_subst(t, s)) == len(t) + t.count(x)


@given(terms)
def test_flattening_has_no_empty_symbols(tokens):
    t = apply_subst(_t(tokens), Substitution(y, ()))
    assert all(isinstance(s.name, str) and s.name for s in t)


@given(terms, terms)
def test_match_removes_common_prefix_only(l, r):
    from kepler.ast import WordEquation
    e = WordEquation(_t(l), _t(r))
    m = match(e)
    k = len(e.lhs) - len(m.lhs)
    assert k == len(e.rhs) - len(m.rhs)
    assert e.lhs[:k] == e.rhs[:k]
    assert not (m.lhs and m.rhs and m.lhs[0] == m.rhs[0])
