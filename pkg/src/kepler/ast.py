"""Core types: symbols, terms, word equations, substitutions, regexes and
linear arithmetic formulas."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

LETTER = "L"
VAR = "V"


@dataclass(frozen=True, slots=True)
class Symbol:
    kind: str
    name: str

    @property
    def is_var(self) -> bool:
        return self.kind == VAR

    @property
    def is_letter(self) -> bool:
        return self.kind == LETTER

    def __repr__(self):
        return self.name

    def __lt__(self, other):
        return (self.kind, self.name) < (other.kind, other.name)


_interned: dict[tuple[str, str], Symbol] = {}


def _intern(kind, name):
    key = (kind, name)
    sym = _interned.get(key)
    if sym is None:
        sym = _interned.setdefault(key, Symbol(kind, name))
    return sym


def letter(c: str) -> Symbol:
    return _intern(LETTER, c)


def var(name: str) -> Symbol:
    return _intern(VAR, name)


Term = tuple  # tuple[Symbol, ...]; () is the empty word


def term(*parts) -> Term:
    """Build a flattened term. Strings are split into letters unless they are
    prefixed with '$' (variables); Symbols and terms are spliced in."""
    out: list[Symbol] = []
    for p in parts:
        if isinstance(p, Symbol):
            out.append(p)
        elif isinstance(p, tuple):
            out.extend(p)
        elif isinstance(p, str):
            if p.startswith("$"):
                out.append(var(p[1:]))
            else:
                out.extend(letter(c) for c in p)
        else:
            raise TypeError(f"cannot build a term from {p!r}")
    return tuple(out)


def parse_term(text: str, variables: Iterable[str]) -> Term:
    """Parse compact notation like ``abx1`` given the variable names.

    Longest variable name wins; everything else is a letter. ``ε`` or ``""``
    is the empty word."""
    text = text.strip()
    if text in ("", "ε", "eps"):
        return ()
    names = sorted(set(variables), key=len, reverse=True)
    out = []
    i = 0
    while i < len(text):
        for n in names:
            if text.startswith(n, i):
                out.append(var(n))
                i += len(n)
                break
        else:
            out.append(letter(text[i]))
            i += 1
    return tuple(out)


def show_term(t: Term) -> str:
    if not t:
        return "ε"
    return "".join(s.name for s in t)


def term_vars(t: Term) -> list[Symbol]:
    seen = []
    for s in t:
        if s.is_var and s not in seen:
            seen.append(s)
    return seen


def word_of(t: Term) -> str | None:
    if any(s.is_var for s in t):
        return None
    return "".join(s.name for s in t)


@dataclass(frozen=True, slots=True)
class WordEquation:
    lhs: Term
    rhs: Term

    @property
    def N(self) -> int:
        # '=' is not counted
        return len(self.lhs) + len(self.rhs)

    @property
    def trivial(self) -> bool:
        return self.lhs == self.rhs

    def vars(self) -> list[Symbol]:
        return term_vars(self.lhs + self.rhs)

    def subst(self, sigma: "Substitution") -> "WordEquation":
        return WordEquation(apply_subst(self.lhs, sigma), apply_subst(self.rhs, sigma))

    def __str__(self):
        return f"{show_term(self.lhs)}={show_term(self.rhs)}"

    __repr__ = __str__


@dataclass(frozen=True, slots=True)
class EquationSystem:
    equations: tuple = ()

    def __iter__(self) -> Iterator[WordEquation]:
        return iter(self.equations)

    def __len__(self):
        return len(self.equations)

    def vars(self) -> list[Symbol]:
        out = []
        for e in self.equations:
            for v in e.vars():
                if v not in out:
                    out.append(v)
        return out

    def occurrences(self) -> dict[Symbol, int]:
        occ: dict[Symbol, int] = {}
        for e in self.equations:
            for s in e.lhs + e.rhs:
                if s.is_var:
                    occ[s] = occ.get(s, 0) + 1
        return occ

    def is_quadratic(self) -> bool:
        return all(n <= 2 for n in self.occurrences().values())

    @property
    def N(self) -> int:
        return sum(e.N for e in self.equations)

    def __str__(self):
        if not self.equations:
            return "ε=ε"
        return " ∧ ".join(map(str, self.equations))


def is_quadratic(e) -> bool:
    if isinstance(e, WordEquation):
        e = EquationSystem((e,))
    return e.is_quadratic()


# ---------------------------------------------------------------- substitutions

EPS, LETTER_CONS, VAR_CONS, RENAME, GENERAL = "Eps", "LetterCons", "VarCons", "Rename", "General"


@dataclass(frozen=True, slots=True)
class Substitution:
    target: Symbol
    repl: Term

    @property
    def shape(self) -> str:
        r = self.repl
        if not r:
            return EPS
        if len(r) == 1 and r[0].is_var:
            return RENAME
        if len(r) == 2 and r[1].is_var:
            return LETTER_CONS if r[0].is_letter else VAR_CONS
        return GENERAL

    @property
    def progressing(self) -> bool:
        return self.shape in (LETTER_CONS, VAR_CONS)

    def __str__(self):
        return f"[{show_term(self.repl)}/{self.target.name}]"

    __repr__ = __str__


def apply_subst(t: Term, sigma: Substitution) -> Term:
    if sigma.target not in t:
        return t
    out = []
    for s in t:
        if s == sigma.target:
            out.extend(sigma.repl)
        else:
            out.append(s)
    return tuple(out)


def apply_substs(t: Term, sigmas: Sequence[Substitution]) -> Term:
    for s in sigmas:
        t = apply_subst(t, s)
    return t


def apply_map(t: Term, env: Mapping[Symbol, Term]) -> Term:
    """Simultaneous substitution."""
    out = []
    for s in t:
        out.extend(env.get(s, (s,)))
    return tuple(out)


class FreshNames:
    """Counter-suffix fresh variables that never collide with taken names.

    Fresh names derived from a fresh name reuse its origin's counter, so the
    chain x -> x_1 -> x_2 stays short."""

    def __init__(self, taken: Iterable[str] = ()):
        self.taken = set(taken)
        self.counter: dict[str, int] = {}
        self.origin: dict[str, str] = {}

    def reserve(self, names: Iterable[str]):
        self.taken.update(names)

    def fresh(self, base: Symbol | str, sep: str = "_") -> Symbol:
        name = base.name if isinstance(base, Symbol) else base
        root = self.origin.get(name, name)
        k = self.counter.get(root, 0)
        while True:
            k += 1
            cand = f"{root}{sep}{k}"
            if cand not in self.taken:
                break
        self.counter[root] = k
        self.taken.add(cand)
        self.origin[cand] = root
        return var(cand)


def fresh_var(base: Symbol, names: FreshNames) -> Symbol:
    return names.fresh(base)


# ---------------------------------------------------------------- regexes

class Regex:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Empty(Regex):
    def __str__(self):
        return "∅"


@dataclass(frozen=True, slots=True)
class Epsilon(Regex):
    def __str__(self):
        return "ε"


@dataclass(frozen=True, slots=True)
class Chr(Regex):
    c: str

    def __str__(self):
        return self.c


@dataclass(frozen=True, slots=True)
class Word(Regex):
    w: str

    def __str__(self):
        return self.w or "ε"


@dataclass(frozen=True, slots=True)
class AnyChar(Regex):
    def __str__(self):
        return "Σ"


@dataclass(frozen=True, slots=True)
class Concat(Regex):
    left: Regex
    right: Regex

    def __str__(self):
        return f"({self.left}·{self.right})"


@dataclass(frozen=True, slots=True)
class Union(Regex):
    left: Regex
    right: Regex

    def __str__(self):
        return f"({self.left}+{self.right})"


@dataclass(frozen=True, slots=True)
class Intersect(Regex):
    left: Regex
    right: Regex

    def __str__(self):
        return f"({self.left}∩{self.right})"


@dataclass(frozen=True, slots=True)
class Complement(Regex):
    inner: Regex

    def __str__(self):
        return f"({self.inner})^C"


@dataclass(frozen=True, slots=True)
class Star(Regex):
    inner: Regex

    def __str__(self):
        if isinstance(self.inner, (Chr, AnyChar, Epsilon, Empty)):
            return f"{self.inner}*"
        return f"({self.inner})*"


def regex_letters(r: Regex) -> set[str]:
    if isinstance(r, Chr):
        return {r.c}
    if isinstance(r, Word):
        return set(r.w)
    if isinstance(r, (Concat, Union, Intersect)):
        return regex_letters(r.left) | regex_letters(r.right)
    if isinstance(r, (Complement, Star)):
        return regex_letters(r.inner)
    return set()


# ---------------------------------------------------------------- arithmetic

def lenvar(x: Symbol | str) -> str:
    name = x.name if isinstance(x, Symbol) else x
    return f"|{name}|"


def is_lenvar(name: str) -> bool:
    return name.startswith("|") and name.endswith("|") and len(name) > 2


def lenvar_target(name: str) -> str:
    return name[1:-1]


class Lin:
    """Integer linear expression: sum of coef*var plus a constant."""

    __slots__ = ("coeffs", "const", "_hash")

    def __init__(self, coeffs: Mapping[str, int] | None = None, const: int = 0):
        self.coeffs = {v: c for v, c in (coeffs or {}).items() if c != 0}
        self.const = int(const)
        self._hash = None

    @staticmethod
    def v(name: str, coef: int = 1) -> "Lin":
        return Lin({name: coef})

    @staticmethod
    def c(value: int) -> "Lin":
        return Lin({}, value)

    @staticmethod
    def lift(x) -> "Lin":
        if isinstance(x, Lin):
            return x
        if isinstance(x, int):
            return Lin.c(x)
        if isinstance(x, str):
            return Lin.v(x)
        raise TypeError(x)

    def __add__(self, other):
        other = Lin.lift(other)
        d = dict(self.coeffs)
        for v, c in other.coeffs.items():
            d[v] = d.get(v, 0) + c
        return Lin(d, self.const + other.const)

    __radd__ = __add__

    def __neg__(self):
        return Lin({v: -c for v, c in self.coeffs.items()}, -self.const)

    def __sub__(self, other):
        return self + (-Lin.lift(other))

    def __rsub__(self, other):
        return Lin.lift(other) - self

    def __mul__(self, k: int):
        if not isinstance(k, int):
            raise TypeError("non-linear multiplication")
        return Lin({v: c * k for v, c in self.coeffs.items()}, self.const * k)

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, Lin) and self.coeffs == other.coeffs and self.const == other.const

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((frozenset(self.coeffs.items()), self.const))
        return self._hash

    def vars(self) -> set[str]:
        return set(self.coeffs)

    @property
    def is_const(self) -> bool:
        return not self.coeffs

    def subst(self, env: Mapping[str, "Lin"]) -> "Lin":
        out = Lin.c(self.const)
        for v, c in self.coeffs.items():
            out = out + (env[v] * c if v in env else Lin.v(v, c))
        return out

    def eval(self, model: Mapping[str, int]) -> int:
        return self.const + sum(c * model.get(v, 0) for v, c in self.coeffs.items())

    def __repr__(self):
        parts = []
        for v in sorted(self.coeffs):
            c = self.coeffs[v]
            if c == 1:
                parts.append(f"+{v}")
            elif c == -1:
                parts.append(f"-{v}")
            else:
                parts.append(f"{c:+d}{v}")
        if self.const or not parts:
            parts.append(f"{self.const:+d}")
        s = "".join(parts)
        return s[1:] if s.startswith("+") else s


class Formula:
    __slots__ = ()

    def __and__(self, other):
        return conj(self, other)

    def __or__(self, other):
        return disj(self, other)


_FLIP = {"=": "=", "<=": ">=", ">=": "<=", "<": ">", ">": "<"}
_NEG = {"<=": ">", ">=": "<", "<": ">=", ">": "<="}


@dataclass(frozen=True)
class Atom(Formula):
    op: str
    left: Lin
    right: Lin = field(default_factory=lambda: Lin.c(0))

    def __post_init__(self):
        assert self.op in _FLIP, self.op

    def normal(self) -> tuple[str, Lin]:
        """('eq', t) meaning t = 0 or ('le', t) meaning t <= 0."""
        d = self.left - self.right
        if self.op == "=":
            return "eq", d
        if self.op == "<=":
            return "le", d
        if self.op == "<":
            return "le", d + 1
        if self.op == ">=":
            return "le", -d
        return "le", -d + 1

    def vars(self) -> set[str]:
        return self.left.vars() | self.right.vars()

    def __str__(self):
        return f"{self.left} {self.op} {self.right}"


@dataclass(frozen=True)
class And(Formula):
    args: tuple = ()

    def __str__(self):
        if not self.args:
            return "true"
        return "(" + " ∧ ".join(map(str, self.args)) + ")"


@dataclass(frozen=True)
class Or(Formula):
    args: tuple = ()

    def __str__(self):
        if not self.args:
            return "false"
        return "(" + " ∨ ".join(map(str, self.args)) + ")"


@dataclass(frozen=True)
class Exists(Formula):
    vars: tuple
    body: Formula

    def __str__(self):
        return f"∃{','.join(self.vars)}. {self.body}"


@dataclass(frozen=True)
class Pred(Formula):
    name: str
    args: tuple  # tuple[Lin, ...]

    def __str__(self):
        return f"{self.name}({', '.join(map(str, self.args))})"


TRUE = And(())
FALSE = Or(())


def eq(a, b) -> Atom:
    return Atom("=", Lin.lift(a), Lin.lift(b))


def le(a, b) -> Atom:
    return Atom("<=", Lin.lift(a), Lin.lift(b))


def ge(a, b) -> Atom:
    return Atom(">=", Lin.lift(a), Lin.lift(b))


def lt(a, b) -> Atom:
    return Atom("<", Lin.lift(a), Lin.lift(b))


def gt(a, b) -> Atom:
    return Atom(">", Lin.lift(a), Lin.lift(b))


def conj(*fs) -> Formula:
    out = []
    for f in fs:
        if isinstance(f, And):
            out.extend(f.args)
        elif f == FALSE:
            return FALSE
        else:
            out.append(f)
    if len(out) == 1:
        return out[0]
    return And(tuple(out))


def disj(*fs) -> Formula:
    out = []
    for f in fs:
        if isinstance(f, Or):
            out.extend(f.args)
        elif f == TRUE:
            return TRUE
        else:
            out.append(f)
    if len(out) == 1:
        return out[0]
    return Or(tuple(out))


def exists(vs, body: Formula) -> Formula:
    vs = tuple(v for v in vs if v in free_vars(body))
    if not vs:
        return body
    return Exists(vs, body)


def free_vars(f: Formula) -> set[str]:
    if isinstance(f, Atom):
        return f.vars()
    if isinstance(f, (And, Or)):
        out = set()
        for a in f.args:
            out |= free_vars(a)
        return out
    if isinstance(f, Exists):
        return free_vars(f.body) - set(f.vars)
    if isinstance(f, Pred):
        out = set()
        for a in f.args:
            out |= a.vars()
        return out
    raise TypeError(f)


def negate(f: Formula) -> Formula:
    """Negation pushed to atoms; quantifiers are not supported."""
    if isinstance(f, Atom):
        if f.op == "=":
            return disj(Atom("<", f.left, f.right), Atom(">", f.left, f.right))
        return Atom(_NEG[f.op], f.left, f.right)
    if isinstance(f, And):
        return disj(*[negate(a) for a in f.args]) if f.args else FALSE
    if isinstance(f, Or):
        return conj(*[negate(a) for a in f.args]) if f.args else TRUE
    raise ValueError(f"cannot negate {type(f).__name__}")


_bound_counter = [0]


def _fresh_bound(v: str) -> str:
    _bound_counter[0] += 1
    base = v.split("#")[0]
    return f"{base}#{_bound_counter[0]}"


def subst_formula(f: Formula, env: Mapping[str, Lin]) -> Formula:
    """Capture-avoiding substitution of free variables by linear terms."""
    if not env:
        return f
    if isinstance(f, Atom):
        return Atom(f.op, f.left.subst(env), f.right.subst(env))
    if isinstance(f, And):
        return And(tuple(subst_formula(a, env) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(subst_formula(a, env) for a in f.args))
    if isinstance(f, Pred):
        return Pred(f.name, tuple(a.subst(env) for a in f.args))
    if isinstance(f, Exists):
        inner = {k: v for k, v in env.items() if k not in f.vars}
        clash = set()
        for t in inner.values():
            clash |= t.vars()
        ren = {}
        for v in f.vars:
            if v in clash:
                ren[v] = _fresh_bound(v)
        body = f.body
        if ren:
            body = subst_formula(body, {k: Lin.v(n) for k, n in ren.items()})
        return Exists(tuple(ren.get(v, v) for v in f.vars), subst_formula(body, inner))
    raise TypeError(f)


def rename_apart(f: Formula) -> Formula:
    """Give every bound variable a globally unique name."""
    if isinstance(f, Exists):
        ren = {v: _fresh_bound(v) for v in f.vars}
        body = subst_formula(f.body, {k: Lin.v(n) for k, n in ren.items()})
        return Exists(tuple(ren[v] for v in f.vars), rename_apart(body))
    if isinstance(f, And):
        return And(tuple(rename_apart(a) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(rename_apart(a) for a in f.args))
    return f


def has_pred(f: Formula) -> bool:
    if isinstance(f, Pred):
        return True
    if isinstance(f, (And, Or)):
        return any(has_pred(a) for a in f.args)
    if isinstance(f, Exists):
        return has_pred(f.body)
    return False


def eval_qf(f: Formula, model: Mapping[str, int]) -> bool:
    """Evaluate a quantifier-free, predicate-free formula."""
    if isinstance(f, Atom):
        kind, t = f.normal()
        val = t.eval(model)
        return val == 0 if kind == "eq" else val <= 0
    if isinstance(f, And):
        return all(eval_qf(a, model) for a in f.args)
    if isinstance(f, Or):
        return any(eval_qf(a, model) for a in f.args)
    raise ValueError(f"cannot evaluate {type(f).__name__} directly")


def atoms(f: Formula) -> Iterator[Atom]:
    if isinstance(f, Atom):
        yield f
    elif isinstance(f, (And, Or)):
        for a in f.args:
            yield from atoms(a)
    elif isinstance(f, Exists):
        yield from atoms(f.body)


def length_vars(f: Formula) -> set[str]:
    return {v for v in free_vars(f) if is_lenvar(v)}


# ---------------------------------------------------------------- formulas

@dataclass
class NormalizedFormula:
    eqs: EquationSystem
    memberships: list = field(default_factory=list)  # (Symbol, Regex)
    arith: Formula = TRUE
    alphabet: tuple = ()
    int_vars: tuple = ()

    def string_vars(self) -> list[Symbol]:
        out = list(self.eqs.vars())
        for x, _ in self.memberships:
            if x not in out:
                out.append(x)
        for n in sorted(length_vars(self.arith)):
            x = var(lenvar_target(n))
            if x not in out:
                out.append(x)
        return out

    def __str__(self):
        parts = [str(self.eqs)]
        parts += [f"{x} ∈ {r}" for x, r in self.memberships]
        if self.arith != TRUE:
            parts.append(str(self.arith))
        return " ∧ ".join(parts)
