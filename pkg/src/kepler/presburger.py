"""Existential linear integer arithmetic: satisfiability with models, and
LIA script export/import."""
from __future__ import annotations

import math
import re
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .ast import (FALSE, TRUE, And, Atom, Exists, Formula, Lin, Or, Pred,
                  eval_qf, free_vars, has_pred, is_lenvar, lenvar,
                  lenvar_target, rename_apart)
from .sexp import ParseError, Sym, read_all

SAT, UNSAT, UNKNOWN = "sat", "unsat", "unknown"


@dataclass
class Result:
    status: str
    model: dict = field(default_factory=dict)
    reason: str = ""

    def __bool__(self):
        return self.status == SAT


class _Budget(Exception):
    pass


# ---------------------------------------------------------------- rational LP

def _lp_feasible(rows: list[tuple[dict, Fraction]], nvars: list[str]):
    """Find x with sum(a_i x_i) <= b for every row, x free. Returns a dict of
    Fractions for a basic solution or None if infeasible. Dense two-phase
    simplex with Bland's rule."""
    if not rows:
        return {v: Fraction(0) for v in nvars}
    n = len(nvars)
    col = {v: i for i, v in enumerate(nvars)}
    m = len(rows)
    # columns: x+ (n), x- (n), slack (m), artificial (m, only where needed)
    art_rows = [i for i, (_, b) in enumerate(rows) if b < 0]
    na = len(art_rows)
    width = 2 * n + m + na
    T = []
    basis = []
    ai = 0
    for i, (coef, b) in enumerate(rows):
        row = [Fraction(0)] * (width + 1)
        sign = -1 if b < 0 else 1
        for v, c in coef.items():
            j = col[v]
            row[j] = Fraction(sign * c)
            row[n + j] = Fraction(-sign * c)
        row[2 * n + i] = Fraction(sign)
        row[width] = Fraction(sign) * b
        if b < 0:
            row[2 * n + m + ai] = Fraction(1)
            basis.append(2 * n + m + ai)
            ai += 1
        else:
            basis.append(2 * n + i)
        T.append(row)
    if na:
        # phase one objective: minimise sum of artificials (stored as max of -sum)
        obj = [Fraction(0)] * (width + 1)
        for r in range(m):
            if basis[r] >= 2 * n + m:
                for j in range(width + 1):
                    obj[j] += T[r][j]
        for j in range(2 * n + m, width):
            obj[j] = Fraction(0)
        while True:
            enter = next((j for j in range(width) if obj[j] > 0), None)
            if enter is None:
                break
            best, leave = None, None
            for r in range(m):
                a = T[r][enter]
                if a > 0:
                    ratio = T[r][width] / a
                    if best is None or ratio < best or (ratio == best and basis[r] < basis[leave]):
                        best, leave = ratio, r
            if leave is None:
                break
            _pivot(T, obj, leave, enter, width)
            basis[leave] = enter
        if obj[width] > 0:
            return None
    x = {v: Fraction(0) for v in nvars}
    for r, bvar in enumerate(basis):
        val = T[r][width]
        if bvar < n:
            x[nvars[bvar]] += val
        elif bvar < 2 * n:
            x[nvars[bvar - n]] -= val
        elif bvar >= 2 * n + m and val != 0:
            return None
    return x


def _pivot(T, obj, r, c, width):
    pr = T[r]
    p = pr[c]
    if p != 1:
        for j in range(width + 1):
            pr[j] /= p
    for i, row in enumerate(T):
        if i != r:
            f = row[c]
            if f:
                for j in range(width + 1):
                    if pr[j]:
                        row[j] -= f * pr[j]
    f = obj[c]
    if f:
        for j in range(width + 1):
            if pr[j]:
                obj[j] -= f * pr[j]


# ---------------------------------------------------------------- integer core

class _Conj:
    """A conjunction of eq/le constraints over integers."""

    def __init__(self, eqs: list[Lin], les: list[Lin]):
        self.eqs = eqs
        self.les = les


def _eliminate_equalities(eqs: list[Lin], les: list[Lin], counter: list[int]):
    """Exact integer elimination. Returns (les, history) or None if the
    equalities have no integer solution. history is a list of (var, Lin)."""
    history: list[tuple[str, Lin]] = []
    eqs = list(eqs)
    while eqs:
        e = eqs.pop()
        if e.is_const:
            if e.const != 0:
                return None
            continue
        g = 0
        for c in e.coeffs.values():
            g = math.gcd(g, abs(c))
        if e.const % g:
            return None
        if g > 1:
            e = Lin({v: c // g for v, c in e.coeffs.items()}, e.const // g)
        v, a = min(e.coeffs.items(), key=lambda kv: (abs(kv[1]), kv[0]))
        if abs(a) == 1:
            # v = -(rest)/a
            rest = Lin({u: c for u, c in e.coeffs.items() if u != v}, e.const)
            sol = rest * (-a)
        else:
            # v = t - sum floor(c/a) u - floor(const/a); remaining coefficients shrink mod a
            counter[0] += 1
            t = f"_t{counter[0]}"
            sol = Lin.v(t)
            for u, c in e.coeffs.items():
                if u != v:
                    sol = sol - Lin.v(u, c // a)
            sol = sol - (e.const // a)
        env = {v: sol}
        history.append((v, sol))
        eqs = [x.subst(env) for x in eqs]
        les = [x.subst(env) for x in les]
        if abs(a) != 1:
            eqs.append(e.subst(env))
    return les, history


def _tighten(les: list[Lin]):
    out = []
    for t in les:
        if t.is_const:
            if t.const > 0:
                return None
            continue
        g = 0
        for c in t.coeffs.values():
            g = math.gcd(g, abs(c))
        if g > 1:
            t = Lin({v: c // g for v, c in t.coeffs.items()}, -((-t.const) // g))
        out.append(t)
    return out


def _rows(les: list[Lin]):
    return [(dict(t.coeffs), Fraction(-t.const)) for t in les]


class _Solver:
    def __init__(self, budget: int, box: int, deadline: float | None):
        self.budget = budget
        self.box = box
        self.deadline = deadline
        self.nodes = 0
        self.counter = [0]

    def tick(self):
        self.nodes += 1
        if self.nodes > self.budget:
            raise _Budget("branch-and-bound node budget exhausted")
        if self.deadline is not None and self.nodes % 64 == 0 and time.monotonic() > self.deadline:
            raise _Budget("timeout")

    def rational_ok(self, eqs, les) -> bool:
        rows = _rows(les)
        for e in eqs:
            rows += _rows([e, -e])
        vs = sorted({v for t in list(eqs) + list(les) for v in t.coeffs})
        const_bad = any(not c and b < 0 for c, b in rows)
        if const_bad:
            return False
        rows = [(c, b) for c, b in rows if c]
        return _lp_feasible(rows, vs) is not None

    def solve_conj(self, eqs: list[Lin], les: list[Lin]):
        """Returns a model dict, None (unsat) or raises _Budget."""
        r = _eliminate_equalities(eqs, les, self.counter)
        if r is None:
            return None
        les, history = r
        les = _tighten(les)
        if les is None:
            return None
        vs = sorted({v for t in les for v in t.coeffs})
        if _lp_feasible(_rows(les), vs) is None:
            return None
        sol = None
        if self.box:
            box = []
            for v in vs:
                box.append(Lin.v(v) - self.box)
                box.append(-Lin.v(v) - self.box)
            sol = self._bb(les + box, vs)
        if sol is None:
            sol = self._bb(les, vs)
        if sol is None:
            return None
        model = dict(sol)
        for v, t in reversed(history):
            model[v] = t.eval(model)
        return model

    def _bb(self, les: list[Lin], vs: list[str]):
        stack = [les]
        while stack:
            self.tick()
            cur = stack.pop()
            x = _lp_feasible(_rows(cur), vs)
            if x is None:
                continue
            frac = next((v for v in vs if x[v].denominator != 1), None)
            if frac is None:
                return {v: int(x[v]) for v in vs}
            fl = math.floor(x[frac])
            stack.append(cur + [-Lin.v(frac) + (fl + 1)])  # v >= fl+1
            stack.append(cur + [Lin.v(frac) - fl])         # v <= fl
        return None


def _strip(f: Formula) -> Formula:
    if isinstance(f, Exists):
        return _strip(f.body)
    if isinstance(f, And):
        return And(tuple(_strip(a) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(_strip(a) for a in f.args))
    if isinstance(f, Pred):
        raise ValueError(f"unsolved predicate {f.name}")
    return f


def sat(f: Formula, budget: int = 100000, box: int = 16, timeout: float | None = None) -> Result:
    """Decide an existential Presburger formula; models cover every variable,
    bound ones included (under their renamed-apart names)."""
    if has_pred(f):
        raise ValueError("formula still contains predicate applications")
    qf = _strip(rename_apart(f))
    deadline = time.monotonic() + timeout if timeout else None
    solver = _Solver(budget, box, deadline)
    unknown = [None]

    def dfs(todo: list, eqs: list, les: list, checked: bool):
        # consume conjunctive material first
        todo = list(todo)
        branch = None
        while todo:
            g = todo.pop()
            if isinstance(g, Atom):
                kind, t = g.normal()
                (eqs if kind == "eq" else les).append(t)
                checked = False
            elif isinstance(g, And):
                todo.extend(g.args)
            elif isinstance(g, Or):
                if not g.args:
                    return None
                if branch is None:
                    branch = g
                else:
                    todo.insert(0, g)
                    if all(isinstance(x, Or) for x in todo):
                        break
            else:
                raise TypeError(g)
        if branch is None:
            try:
                return solver.solve_conj(eqs, les)
            except _Budget as e:
                unknown[0] = str(e)
                return None
        if not checked:
            try:
                solver.tick()
            except _Budget as e:
                unknown[0] = str(e)
                return None
            if not solver.rational_ok(eqs, les):
                return None
        for alt in branch.args:
            m = dfs(todo + [alt], list(eqs), list(les), True)
            if m is not None:
                return m
            if unknown[0] and solver.nodes > solver.budget:
                return None
        return None

    model = dfs([qf], [], [], False)
    if model is not None:
        for v in free_vars(qf):
            model.setdefault(v, 0)
        model = {k: v for k, v in model.items() if not k.startswith("_t")}
        assert eval_qf(qf, model), "internal: model does not satisfy the formula"
        return Result(SAT, model)
    if unknown[0]:
        return Result(UNKNOWN, reason=unknown[0])
    return Result(UNSAT)


def implies(f: Formula, g: Formula, **kw) -> Result:
    """Validity of f => g for quantifier-free g (checked as unsat of f ∧ ¬g)."""
    from .ast import negate
    r = sat(And((f, negate(g))), **kw)
    if r.status == UNSAT:
        return Result(SAT)
    if r.status == SAT:
        return Result(UNSAT, r.model)
    return r


# ---------------------------------------------------------------- LIA scripts

_SIMPLE = re.compile(r"^[A-Za-z~!@$%^&*_+=<>.?/\-][A-Za-z0-9~!@$%^&*_+=<>.?/\-]*$")
_RESERVED = {"and", "or", "not", "exists", "forall", "let", "true", "false", "assert",
             "ite", "Int", "check-sat", "declare-fun", "set-logic"}


def smt_name(v: str) -> str:
    if is_lenvar(v):
        return f"|len({lenvar_target(v)})|"
    if _SIMPLE.match(v) and v not in _RESERVED and not v[0].isdigit():
        return v
    return f"|{v}|"


def _unname(s: str) -> str:
    m = re.fullmatch(r"len\((.+)\)", s)
    if m:
        return lenvar(m.group(1))
    return s


def _lin_smt(t: Lin) -> str:
    parts = []
    for v in sorted(t.coeffs):
        c = t.coeffs[v]
        name = smt_name(v)
        if c == 1:
            parts.append(name)
        elif c < 0:
            parts.append(f"(* (- {-c}) {name})")
        else:
            parts.append(f"(* {c} {name})")
    if t.const or not parts:
        parts.append(str(t.const) if t.const >= 0 else f"(- {-t.const})")
    if len(parts) == 1:
        return parts[0]
    return "(+ " + " ".join(parts) + ")"


def formula_smt(f: Formula) -> str:
    if isinstance(f, Atom):
        return f"({f.op} {_lin_smt(f.left)} {_lin_smt(f.right)})"
    if isinstance(f, And):
        if not f.args:
            return "true"
        return "(and " + " ".join(formula_smt(a) for a in f.args) + ")"
    if isinstance(f, Or):
        if not f.args:
            return "false"
        return "(or " + " ".join(formula_smt(a) for a in f.args) + ")"
    if isinstance(f, Exists):
        decls = " ".join(f"({smt_name(v)} Int)" for v in f.vars)
        return f"(exists ({decls}) {formula_smt(f.body)})"
    if isinstance(f, Pred):
        args = " ".join(_lin_smt(a) for a in f.args)
        return f"({smt_name(f.name)} {args})" if f.args else smt_name(f.name)
    raise TypeError(f)


def export_lia(f: Formula) -> str:
    if has_pred(f):
        raise ValueError("export requires a predicate-free formula")
    lines = ["(set-logic LIA)"]
    for v in sorted(free_vars(f)):
        lines.append(f"(declare-fun {smt_name(v)} () Int)")
    lines.append(f"(assert {formula_smt(f)})")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def _parse_lin(x) -> Lin:
    if isinstance(x, Sym):
        if re.fullmatch(r"-?\d+", x.name):
            return Lin.c(int(x.name))
        return Lin.v(_unname(x.name))
    if isinstance(x, list) and x:
        head = x[0]
        args = [_parse_lin(a) for a in x[1:]]
        if head == "+":
            out = Lin.c(0)
            for a in args:
                out = out + a
            return out
        if head == "-":
            if len(args) == 1:
                return -args[0]
            out = args[0]
            for a in args[1:]:
                out = out - a
            return out
        if head == "*":
            out = Lin.c(1)
            for a in args:
                if a.is_const:
                    out = out * a.const
                elif out.is_const:
                    out = a * out.const
                else:
                    raise ParseError("non-linear product", *_pos(x))
            return out
    raise ParseError(f"bad linear term {x!r}", *_pos(x))


def _pos(x):
    from .sexp import where
    return where(x)


def _parse_formula(x) -> Formula:
    if isinstance(x, Sym):
        if x == "true":
            return TRUE
        if x == "false":
            return FALSE
        return Pred(_unname(x.name), ())
    head = x[0]
    if head in ("=", "<=", ">=", "<", ">"):
        return Atom(head.name, _parse_lin(x[1]), _parse_lin(x[2]))
    if head == "and":
        return And(tuple(_parse_formula(a) for a in x[1:]))
    if head == "or":
        return Or(tuple(_parse_formula(a) for a in x[1:]))
    if head == "exists":
        vs = tuple(_unname(d[0].name) for d in x[1])
        return Exists(vs, _parse_formula(x[2]))
    if isinstance(head, Sym):
        return Pred(_unname(head.name), tuple(_parse_lin(a) for a in x[1:]))
    raise ParseError(f"unexpected form {x!r}", *_pos(x))


def parse_lia(text: str) -> Formula:
    asserts = []
    for form in read_all(text):
        if isinstance(form, list) and form and form[0] == "assert":
            asserts.append(_parse_formula(form[1]))
    if len(asserts) == 1:
        return asserts[0]
    return And(tuple(asserts))
