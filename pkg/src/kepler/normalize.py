"""Rewriting raw string formulas into conjunctive normal triples: equations, memberships, arithmetic."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product as iproduct
from typing import Iterable

from .ast import (TRUE, Complement, EquationSystem, Formula, FreshNames, NormalizedFormula,
                  Regex, WordEquation, conj, letter, negate, regex_letters)
from .automata import accepts, dfa_to_regex, regex_to_dfa, with_endpoints

RESERVED = "abcdefghijklmnopqrstuvwxyz0123456789"


class Unsupported(ValueError):
    pass


class AlphabetTooSmall(ValueError):
    pass


class TooManyCases(Exception):
    pass


# ---------------------------------------------------------------- raw syntax

@dataclass(frozen=True)
class StrEq:
    lhs: tuple
    rhs: tuple

    def __str__(self):
        return f"{_t(self.lhs)}={_t(self.rhs)}"


@dataclass(frozen=True)
class InRe:
    term: tuple
    regex: Regex

    def __str__(self):
        return f"{_t(self.term)}∈{self.regex}"


@dataclass(frozen=True)
class Arith:
    f: Formula

    def __str__(self):
        return str(self.f)


@dataclass(frozen=True)
class Not:
    arg: object

    def __str__(self):
        return f"¬({self.arg})"


@dataclass(frozen=True)
class AndF:
    args: tuple

    def __str__(self):
        return "(" + " ∧ ".join(map(str, self.args)) + ")" if self.args else "true"


@dataclass(frozen=True)
class OrF:
    args: tuple

    def __str__(self):
        return "(" + " ∨ ".join(map(str, self.args)) + ")" if self.args else "false"


BTRUE, BFALSE = AndF(()), OrF(())


def _t(t: tuple) -> str:
    return "".join(s.name for s in t) or "ε"


def alphabet_for(letters: Iterable[str]) -> tuple:
    """Letters of the input plus one reserved letter standing for the rest
    of the alphabet; never fewer than two."""
    out = set(letters)
    spare = [c for c in RESERVED if c not in out]
    out.add(spare[0])
    if len(out) < 2:
        out.add(spare[1])
    return tuple(sorted(out))


def raw_letters(f) -> set:
    if isinstance(f, StrEq):
        return {s.name for s in f.lhs + f.rhs if s.is_letter}
    if isinstance(f, InRe):
        return {s.name for s in f.term if s.is_letter} | regex_letters(f.regex)
    if isinstance(f, Not):
        return raw_letters(f.arg)
    if isinstance(f, (AndF, OrF)):
        out = set()
        for a in f.args:
            out |= raw_letters(a)
        return out
    return set()


def raw_vars(f) -> set:
    if isinstance(f, StrEq):
        return {s.name for s in f.lhs + f.rhs if s.is_var}
    if isinstance(f, InRe):
        return {s.name for s in f.term if s.is_var}
    if isinstance(f, Not):
        return raw_vars(f.arg)
    if isinstance(f, (AndF, OrF)):
        out = set()
        for a in f.args:
            out |= raw_vars(a)
        return out
    return set()


# ---------------------------------------------------------------- rules

def _trivially_false(e: StrEq) -> bool:
    for a, b in ((e.lhs, e.rhs), (e.rhs, e.lhs)):
        if not a and any(s.is_letter for s in b):
            return True
    return False


def eliminate_disequality(s1: tuple, s2: tuple, names: FreshNames, alphabet) -> object:
    if len(alphabet) < 2:
        raise AlphabetTooSmall(f"need two letters, have {alphabet}")
    out = []
    x = names.fresh("d")
    for a in alphabet:
        c = letter(a)
        for e in (StrEq(s1, s2 + (c, x)), StrEq(s2, s1 + (c, x))):
            if not _trivially_false(e):
                out.append(e)
    y, z = names.fresh("d"), names.fresh("d")
    for a, b in iproduct(alphabet, alphabet):
        if a != b:
            e1 = StrEq(s1, (x, letter(a), y))
            e2 = StrEq(s2, (x, letter(b), z))
            if not (_trivially_false(e1) or _trivially_false(e2)):
                out.append(AndF((e1, e2)))
    return OrF(tuple(out))


def merge_conjunction(e1: WordEquation, e2: WordEquation, a: str, b: str) -> WordEquation:
    """u=v ∧ u'=v'  iff  u a u' u b u' = v a v' v b v'  (a != b)."""
    A, B = letter(a), letter(b)
    return WordEquation(e1.lhs + (A,) + e2.lhs + e1.lhs + (B,) + e2.lhs,
                        e1.rhs + (A,) + e2.rhs + e1.rhs + (B,) + e2.rhs)


class NoMergeTemplate(Unsupported):
    pass


def merge_disjunction(e1: WordEquation, e2: WordEquation, names: FreshNames | None = None,
                      alphabet=("a", "b")) -> WordEquation:
    """Single equation equisatisfiable with e1 ∨ e2.

    Only the degenerate cases are handled: a disjunct that is trivially true
    or trivially false. No general template survived bounded validation
    (scripts/merge_template_search.py), so the rest is refused."""
    for e, other in ((e1, e2), (e2, e1)):
        if e.lhs == e.rhs:
            return WordEquation((), ())
        if _trivially_false(StrEq(e.lhs, e.rhs)) or _letter_clash(e):
            return other
    raise NoMergeTemplate(f"cannot merge {e1} ∨ {e2} into one equation")


def _letter_clash(e: WordEquation) -> bool:
    l, r = e.lhs, e.rhs
    while l and r and l[0] == r[0]:
        l, r = l[1:], r[1:]
    while l and r and l[-1] == r[-1]:
        l, r = l[:-1], r[:-1]
    if l and r and l[0].is_letter and r[0].is_letter:
        return True
    if l and r and l[-1].is_letter and r[-1].is_letter:
        return True
    return (not l and any(s.is_letter for s in r)) or (not r and any(s.is_letter for s in l))


def push_regex_negation(f):
    """Negation normal form; negated memberships become complements and
    ground memberships are decided on the spot."""
    return _nnf(f, False)


def _nnf(f, neg: bool):
    if isinstance(f, Not):
        return _nnf(f.arg, not neg)
    if isinstance(f, AndF):
        args = tuple(_nnf(a, neg) for a in f.args)
        return OrF(args) if neg else AndF(args)
    if isinstance(f, OrF):
        args = tuple(_nnf(a, neg) for a in f.args)
        return AndF(args) if neg else OrF(args)
    if isinstance(f, InRe):
        r = f.regex
        if neg:
            r = r.inner if isinstance(r, Complement) else Complement(r)
        if all(s.is_letter for s in f.term):
            letters = sorted(raw_letters(InRe(f.term, r)) | {"a"})
            ok = accepts(regex_to_dfa(r, letters), "".join(s.name for s in f.term))
            return BTRUE if ok else BFALSE
        return InRe(f.term, r)
    if isinstance(f, StrEq):
        if f.lhs == f.rhs:
            return BFALSE if neg else BTRUE
        return Not(f) if neg else f
    if isinstance(f, Arith):
        if not neg:
            return f
        try:
            return Arith(negate(f.f))
        except (TypeError, ValueError) as exc:
            raise Unsupported(f"negated quantified arithmetic: {f.f}") from exc
    raise Unsupported(f"unknown formula node {f!r}")


def split_membership(term: tuple, r: Regex, alphabet) -> object:
    """s1·s2 ∈ R as a disjunction over the intermediate DFA states."""
    d = regex_to_dfa(r, alphabet)
    return _split(term, d, d.initial, d.accepting, alphabet)


def _split(term, d, start, finals, alphabet):
    live = d.live_states()
    if start not in live:
        return BFALSE
    if not term:
        return BTRUE if start in finals else BFALSE
    head, rest = term[0], term[1:]
    if head.is_letter:
        if head.name not in d.alphabet:
            return BFALSE
        return _split(rest, d, d.step(start, head.name), finals, alphabet)
    if not rest:
        return InRe((head,), dfa_to_regex(with_endpoints(d, start, finals)))
    out = []
    for q in sorted(live):
        first = InRe((head,), dfa_to_regex(with_endpoints(d, start, {q})))
        tail = _split(rest, d, q, finals, alphabet)
        if tail == BFALSE:
            continue
        out.append(first if tail == BTRUE else AndF((first, tail)))
    return OrF(tuple(out))


# ---------------------------------------------------------------- driver

def _prepare(f, names: FreshNames, alphabet):
    """NNF, disequalities expanded, memberships split to single variables."""
    f = push_regex_negation(f)

    def go(g):
        if isinstance(g, Not):  # only over StrEq after nnf
            return eliminate_disequality(g.arg.lhs, g.arg.rhs, names, alphabet)
        if isinstance(g, AndF):
            return AndF(tuple(go(a) for a in g.args))
        if isinstance(g, OrF):
            return OrF(tuple(go(a) for a in g.args))
        if isinstance(g, InRe):
            if len(g.term) == 1:
                return g
            return split_membership(g.term, g.regex, alphabet)
        return g

    return go(f)


def _has_strings(g) -> bool:
    if isinstance(g, (StrEq, InRe)):
        return True
    if isinstance(g, (AndF, OrF)):
        return any(_has_strings(a) for a in g.args)
    return False


def _arith_of(g) -> Formula:
    if isinstance(g, Arith):
        return g.f
    if isinstance(g, AndF):
        return conj(*[_arith_of(a) for a in g.args])
    if isinstance(g, OrF):
        from .ast import disj
        return disj(*[_arith_of(a) for a in g.args])
    raise Unsupported(f"string atom inside arithmetic: {g}")


def _cases(g, cap: int) -> list[list]:
    """DNF over string structure: list of cases, each a list of atoms."""
    if isinstance(g, (StrEq, InRe, Arith)):
        return [[g]]
    if not _has_strings(g):
        return [[Arith(_arith_of(g))]]
    if isinstance(g, AndF):
        out = [[]]
        for a in g.args:
            sub = _cases(a, cap)
            out = [x + y for x in out for y in sub]
            if len(out) > cap:
                raise TooManyCases(f"more than {cap} cases")
        return out
    if isinstance(g, OrF):
        out = []
        for a in g.args:
            out.extend(_cases(a, cap))
            if len(out) > cap:
                raise TooManyCases(f"more than {cap} cases")
        return out
    raise Unsupported(f"unexpected node {g!r}")


def _assemble(atoms: list, alphabet, int_vars) -> NormalizedFormula:
    eqs, mems, ar = [], [], []
    for a in atoms:
        if isinstance(a, StrEq):
            eqs.append(WordEquation(a.lhs, a.rhs))
        elif isinstance(a, InRe):
            mems.append((a.term[0], a.regex))
        else:
            ar.append(a.f)
    return NormalizedFormula(EquationSystem(tuple(eqs)), mems, conj(*ar), tuple(alphabet), tuple(int_vars))


def normalize_cases(f, alphabet=None, names: FreshNames | None = None, cap: int = 4096,
                    int_vars=()) -> list[NormalizedFormula]:
    if alphabet is None:
        alphabet = alphabet_for(raw_letters(f))
    names = names or FreshNames(raw_vars(f))
    g = _prepare(f, names, alphabet)
    return [_assemble(c, alphabet, int_vars) for c in _cases(g, cap)]


def normalize(f, alphabet=None, names: FreshNames | None = None, int_vars=()) -> NormalizedFormula:
    """Single normal triple. Disjunctions are accepted only where they can be
    folded into one equation."""
    if alphabet is None:
        alphabet = alphabet_for(raw_letters(f))
    names = names or FreshNames(raw_vars(f))
    g = _prepare(f, names, alphabet)

    def fold(h):
        if isinstance(h, AndF):
            return AndF(tuple(fold(a) for a in h.args))
        if isinstance(h, OrF) and _has_strings(h):
            eqs = []
            for a in h.args:
                a = fold(a)
                parts = a.args if isinstance(a, AndF) else (a,)
                if not all(isinstance(p, StrEq) for p in parts):
                    raise Unsupported(f"disjunction mixing memberships or arithmetic: {h}")
                es = [WordEquation(p.lhs, p.rhs) for p in parts]
                if not es:
                    return BTRUE
                e = es[0]
                for e2 in es[1:]:
                    e = merge_conjunction(e, e2, alphabet[0], alphabet[1])
                eqs.append(e)
            if not eqs:
                return BFALSE
            e = eqs[0]
            for e2 in eqs[1:]:
                e = merge_disjunction(e, e2, names, alphabet)
            return StrEq(e.lhs, e.rhs)
        return h

    cases = _cases(fold(g), 1)
    if not cases:
        # the whole formula folded to false
        return NormalizedFormula(EquationSystem((WordEquation((letter(alphabet[0]),), (letter(alphabet[1]),)),)),
                                 [], TRUE, tuple(alphabet), tuple(int_vars))
    return _assemble(cases[0], alphabet, int_vars)


__all__ = ["StrEq", "InRe", "Arith", "Not", "AndF", "OrF", "BTRUE", "BFALSE",
           "Unsupported", "TooManyCases", "eliminate_disequality", "merge_disjunction",
           "merge_conjunction", "push_regex_negation", "split_membership", "normalize",
           "normalize_cases", "alphabet_for"]
