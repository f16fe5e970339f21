import itertools

import pytest

from kepler.ast import EquationSystem, WordEquation, parse_term

VARS = ("x", "y", "z", "w")


def eqs(*specs, variables=VARS):
    out = []
    for s in specs:
        l, r = s.split("=")
        out.append(WordEquation(parse_term(l.strip(), variables), parse_term(r.strip(), variables)))
    return EquationSystem(tuple(out))


def all_words(alphabet, max_len):
    for n in range(max_len + 1):
        for t in itertools.product(alphabet, repeat=n):
            yield "".join(t)


def brute_solutions(system, alphabet="ab", max_len=5):
    """Every assignment of the system's variables (words up to max_len)
    satisfying all equations, by plain string concatenation."""
    xs = list(system.vars())
    words = list(all_words(alphabet, max_len))
    out = []
    for combo in itertools.product(words, repeat=len(xs)):
        env = dict(zip(xs, combo))
        ok = True
        for e in system:
            l = "".join(s.name if s.is_letter else env[s] for s in e.lhs)
            r = "".join(s.name if s.is_letter else env[s] for s in e.rhs)
            if l != r:
                ok = False
                break
        if ok:
            out.append(env)
    return out


@pytest.fixture
def abx_xba():
    return eqs("abx=xba")


@pytest.fixture
def abx_ay():
    return eqs("abx=xba", "ay=ya")


@pytest.fixture
def xaby_ybax():
    return eqs("xaby=ybax")


ACCEPTANCE: dict = {}


def record(n, what, ok, detail=""):
    ACCEPTANCE[n] = (what, ok, detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {what}  [{detail}]")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        what, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {what}  [{detail}]")
