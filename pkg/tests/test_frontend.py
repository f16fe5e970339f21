import pytest

from kepler.frontend import (SAT, UNKNOWN, UNSAT, SolveConfig, UnsupportedConstruct,
                             gen_bench, oracle_script, parse, smt_string,
                             solve_script, solve_text)
from kepler.normalize import StrEq
from kepler.sexp import ParseError

HEAD = "(declare-fun x () String)\n(declare-fun y () String)\n"

PI = HEAD + """
(assert (= (str.++ "ab" x) (str.++ x "ba")))
(assert (= (str.++ "a" y) (str.++ y "a")))
(assert (exists ((k Int)) (= (str.len x) (+ (* 4 k) 3))))
(assert (= (str.len x) (* 2 (str.len y))))
(check-sat)
"""


def run(body, **kw):
    return solve_text(HEAD + body, SolveConfig(**kw) if kw else None)


def test_parse_declarations_and_equation():
    s = parse(HEAD + '(assert (= (str.++ "ab" x) (str.++ x "ba")))\n(check-sat)\n')
    assert s.strings == ["x", "y"]
    (f,) = s.formula.args
    assert isinstance(f, StrEq) and str(f) == "abx=xba"


def test_parse_rejects_unknown_things():
    with pytest.raises(UnsupportedConstruct):
        parse(HEAD + "(assert (str.contains x y))")
    with pytest.raises(ParseError):
        parse(HEAD + "(assert (= x")


def test_parse_regex_sugar():
    s = parse(HEAD + '(assert (str.in_re x (re.+ (re.range "a" "b"))))\n'
              '(assert (str.in_re y (re.opt (str.to_re "ab"))))')
    assert len(s.formula.args) == 2


def test_motivating_example_unsat():
    assert solve_text(PI).status == UNSAT


def test_without_mod4_it_is_sat():
    rep = run('(assert (= (str.++ "ab" x) (str.++ x "ba")))\n(assert (= (str.++ "a" y) (str.++ y "a")))\n'
              '(assert (= (* 2 (str.len x)) (str.len y)))')
    assert rep.status == SAT
    assert rep.model["y"] == "a" * (2 * len(rep.model["x"]))


def test_membership_sat_with_model():
    rep = run('(assert (= (str.++ "ab" x) (str.++ x "ba")))\n(assert (str.in_re x (re.* (str.to_re "a"))))')
    assert (rep.status, rep.model["x"]) == (SAT, "a")


def test_membership_unsat():
    rep = run('(assert (= (str.++ "ab" x) (str.++ x "ba")))\n(assert (str.in_re x (re.* (str.to_re "b"))))')
    assert rep.status == UNSAT


def test_disequality():
    rep = run('(assert (not (= x y)))\n(assert (= (str.len x) 1))\n(assert (= (str.len y) 1))')
    assert rep.status == SAT
    assert sorted(rep.model) == ["x", "y"]
    assert rep.model["x"] != rep.model["y"] and len(rep.model["x"]) == len(rep.model["y"]) == 1


def test_non_quadratic_cases_run_out_of_budget():
    # x != y against ay = ya puts y three times into some case
    rep = run('(assert (= (str.++ "a" y) (str.++ y "a")))\n(assert (not (= x y)))', max_nodes=2000)
    assert rep.status == UNKNOWN and rep.reason == "reduce:max-nodes"


def test_disjunction_cases():
    rep = run('(assert (or (= (str.++ "a" x) (str.++ x "b")) (= x "ba")))')
    assert (rep.status, rep.model["x"]) == (SAT, "ba")


def test_budget_gives_unknown():
    rep = run('(assert (= (str.++ x "ab" y) (str.++ y "ba" x)))', max_nodes=3)
    assert rep.status == UNKNOWN and rep.reason.startswith("reduce")


def test_smt_string_escapes():
    assert smt_string('a"b') == '"a""b"'
    assert smt_string("é") == '"\\u{e9}"'


def test_oracle_agrees_on_small_cases():
    s = parse(HEAD + '(assert (= (str.++ "ab" x) (str.++ x "ba")))')
    st, m = oracle_script(s, 4)
    assert (st, m["x"]) == (SAT, "a")
    s = parse(HEAD + '(assert (= (str.++ x "aa") (str.++ "ba" x)))')
    assert oracle_script(s, 6)[0] == "unsat-within-bound"


def test_gen_bench_layout(tmp_path):
    files = gen_bench(tmp_path, 2, 8)
    names = [f.name for f in files]
    assert names[:4] == ["quad-001-1-sat.smt2", "quad-002-1-unsat.smt2",
                         "quad-003-2-sat.smt2", "quad-004-2-unsat.smt2"]
    for f in files:
        want = SAT if f.stem.endswith("-sat") else UNSAT
        assert solve_script(parse(f.read_text())).status == want, f.name
