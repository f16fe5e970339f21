"""Length constraints from reduction trees: Horn clauses over per-node length
predicates and a closed-form solver for the flat (DPI) case."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import count
from typing import Sequence

from .ast import (EPS, FALSE, LETTER_CONS, RENAME, TRUE, VAR_CONS, And, Atom,
                  EquationSystem, Exists, Formula, Lin, Or, Pred, Substitution,
                  WordEquation, conj, disj, eq, exists, ge, lenvar,
                  subst_formula)
from .reduce import SAT_LEAF, UNSAT_LEAF, ReductionTree


class UnsupportedShape(ValueError):
    pass


class NotDpi(Exception):
    pass


def gen_sigma(sigma: Substitution) -> Formula:
    shape = sigma.shape
    n = Lin.v(lenvar(sigma.target))
    if shape == EPS:
        return eq(n, 0)
    if shape == LETTER_CONS:
        return eq(n, Lin.v(lenvar(sigma.repl[1])) + 1)
    if shape == VAR_CONS:
        return eq(n, Lin.v(lenvar(sigma.repl[0])) + Lin.v(lenvar(sigma.repl[1])))
    raise UnsupportedShape(f"{sigma} has shape {shape}")


def _edge_constraint(sigma: Substitution) -> Formula:
    if sigma.shape in (EPS, LETTER_CONS, VAR_CONS):
        return gen_sigma(sigma)
    # renames (unrolled copies) and anything longer: plain length arithmetic
    rhs = Lin.c(0)
    for s in sigma.repl:
        rhs = rhs + (Lin.v(lenvar(s)) if s.is_var else 1)
    return eq(Lin.v(lenvar(sigma.target)), rhs)


@dataclass
class Clause:
    head: int
    body: int | None
    constraint: Formula
    locals: tuple
    kind: str  # edge | cycle | leaf


@dataclass
class ChcSystem:
    preds: dict               # node id -> tuple of length-variable names
    clauses: list
    query: Formula
    root: int
    depth: dict = field(default_factory=dict)

    def pred(self, i: int) -> Pred:
        return Pred(f"P{i}", tuple(Lin.v(v) for v in self.preds[i]))

    def dump(self) -> str:
        lines = []
        for c in self.clauses:
            body = [str(c.constraint)] if c.constraint != TRUE else []
            if c.body is not None:
                body.append(str(self.pred(c.body)))
            text = " ∧ ".join(body) or "true"
            if c.locals:
                text = f"∃{','.join(c.locals)}. {text}"
            lines.append(f"{text} => {self.pred(c.head)}")
        lines.append(f"? {self.query}")
        return "\n".join(lines) + "\n"


def _args(tree: ReductionTree, i: int) -> tuple:
    return tuple(lenvar(v) for v in tree[i].tracked)


def extract_chc(tree: ReductionTree, arith: Formula = TRUE) -> ChcSystem:
    preds: dict[int, tuple] = {}
    for n in tree.nodes:
        if n.status == UNSAT_LEAF:
            continue
        if n.status == SAT_LEAF and not n.tracked:
            continue
        preds[n.id] = _args(tree, n.id)
    clauses: list[Clause] = []
    for n in tree.nodes:
        if n.id not in preds:
            continue
        head_args = set(preds[n.id])
        if n.status == SAT_LEAF:
            clauses.append(Clause(n.id, None, conj(*[ge(Lin.v(v), 0) for v in preds[n.id]]), (), "leaf"))
        for c in n.children:
            child = tree[c]
            if child.status == UNSAT_LEAF:
                continue
            cons = conj(*[_edge_constraint(s) for s in child.label])
            if c in preds:
                locals_ = tuple(v for v in preds[c] if v not in head_args)
                clauses.append(Clause(n.id, c, cons, locals_, "edge"))
            else:
                clauses.append(Clause(n.id, None, cons, (), "edge"))
        if n.id in tree.backlinks:
            bl = tree.backlinks[n.id]
            comp_args = preds.get(bl.companion, ())
            parts = [eq(Lin.v(lenvar(s.target)), Lin.v(lenvar(s.repl[0]))) for s in bl.renaming]
            linked = {lenvar(s.target) for s in bl.renaming} | set(comp_args)
            parts += [ge(Lin.v(v), 0) for v in preds[n.id] if v not in linked]
            locals_ = tuple(v for v in comp_args if v not in head_args)
            clauses.append(Clause(n.id, bl.companion, conj(*parts), locals_, "cycle"))
    root = tree.root
    if root in preds:
        query = conj(Pred(f"P{root}", tuple(Lin.v(v) for v in preds[root])), arith)
    elif tree[root].status == SAT_LEAF:
        query = arith
    else:
        query = FALSE
    depth = {i: tree[i].depth for i in preds}
    return ChcSystem(preds, clauses, query, root, depth)


# ---------------------------------------------------------------- DPI solving

_ctr = count(1)


def _conjuncts(f: Formula) -> list[Formula]:
    if isinstance(f, And):
        out = []
        for a in f.args:
            out.extend(_conjuncts(a))
        return out
    return [f]


def solve_dpi(chc: ChcSystem) -> dict[int, Formula]:
    """Closed forms for every predicate, each over its own parameters."""
    by_head: dict[int, list[Clause]] = {}
    for c in chc.clauses:
        by_head.setdefault(c.head, []).append(c)
    companions = {c.body for c in chc.clauses if c.kind == "cycle"}
    solved: dict[int, Formula] = {}

    def unfold(p, env, conds, head, loops, exits, fresh_vars):
        for cl in by_head.get(p, []):
            local_env = dict(env)
            new_conds = list(conds)
            pending = []
            for atom in _conjuncts(cl.constraint):
                if atom == TRUE:
                    continue
                if not isinstance(atom, Atom):
                    raise NotDpi(f"non-atomic constraint {atom}")
                kind, t = atom.normal()
                undefined = [v for v in t.coeffs if v not in local_env]
                if kind == "eq" and len(undefined) == 1 and abs(t.coeffs[undefined[0]]) == 1:
                    u = undefined[0]
                    a = t.coeffs[u]
                    rest = Lin({v: c for v, c in t.coeffs.items() if v != u}, t.const)
                    local_env[u] = rest.subst(local_env) * (-a)
                    new_conds.append(("ge", local_env[u]))
                elif not undefined:
                    new_conds.append((kind, t.subst(local_env)))
                else:
                    pending.append((kind, t, undefined))
            for kind, t, undefined in pending:
                if kind == "eq":
                    raise NotDpi(f"cannot orient {t} = 0")
                for u in undefined:
                    if u not in local_env:
                        name = f"w{next(_ctr)}"
                        fresh_vars.append(name)
                        local_env[u] = Lin.v(name)
                        new_conds.append(("ge", local_env[u]))
                new_conds.append((kind, t.subst(local_env)))
            q = cl.body
            if cl.kind == "cycle":
                w = {v: local_env[v] for v in chc.preds[q]}
                if q == head:
                    loops.append((w, new_conds))
                elif q in solved:
                    exits.append(_cond_formula(new_conds, _inst(solved[q], chc.preds[q], w)))
                else:
                    raise NotDpi(f"cycle into P{q} while solving P{head}: nested cycles")
                continue
            if q is None:
                exits.append(_cond_formula(new_conds, TRUE))
                continue
            w = {v: local_env[v] for v in chc.preds[q]}
            if q in solved:
                exits.append(_cond_formula(new_conds, _inst(solved[q], chc.preds[q], w)))
            else:
                unfold(q, {v: w[v] for v in chc.preds[q]}, new_conds, head, loops, exits, fresh_vars)

    def solve_one(h):
        params = chc.preds[h]
        env = {v: Lin.v(v) for v in params}
        loops, exits, fresh_vars = [], [], []
        unfold(h, env, [], h, loops, exits, fresh_vars)
        base = exists(fresh_vars, disj(*exits)) if exits else disj()
        counters, shifts = [], {v: Lin.v(v) for v in params}
        for w, conds in loops:
            delta = {}
            for v in params:
                d = Lin.v(v) - w[v]
                if not d.is_const:
                    raise NotDpi(f"P{h}: loop update {v} -> {w[v]} is not a constant translation")
                if d.const < 0:
                    raise NotDpi(f"P{h}: loop decreases {v}")
                delta[v] = d.const
            shift = {v: Lin.v(v) + delta[v] for v in params}
            for kind, g in conds:
                if kind == "eq":
                    if not g.is_const or g.const != 0:
                        raise NotDpi(f"P{h}: guarded loop ({g} = 0)")
                    continue
                t = g.subst(shift)
                # guards must follow from the non-negativity of the next state
                if kind == "ge":
                    if any(c < 0 for c in t.coeffs.values()) or t.const < 0:
                        raise NotDpi(f"P{h}: loop guard {g} >= 0 not implied")
                else:
                    if any(c > 0 for c in t.coeffs.values()) or t.const > 0:
                        raise NotDpi(f"P{h}: loop guard {g} <= 0 not implied")
            if all(d == 0 for d in delta.values()):
                continue
            i = f"i{h}_{len(counters) + 1}"
            counters.append(i)
            for v in params:
                if delta[v]:
                    shifts[v] = shifts[v] - Lin.v(i, delta[v])
        nonneg = [ge(Lin.v(v), 0) for v in params]
        body = conj(subst_formula(base, shifts) if counters else base, *nonneg)
        if counters:
            body = Exists(tuple(counters), conj(*[ge(Lin.v(i), 0) for i in counters], body))
        return body

    order = sorted(chc.preds, key=lambda i: -chc.depth.get(i, 0))
    for h in order:
        if h in companions:
            solved[h] = solve_one(h)
    for h in order:
        if h not in solved:
            solved[h] = solve_one(h)
    return solved


def _inst(f: Formula, params: Sequence[str], args: dict) -> Formula:
    return subst_formula(f, {v: args[v] for v in params})


def _cond_formula(conds, tail: Formula) -> Formula:
    parts = []
    for kind, t in conds:
        if kind == "eq":
            parts.append(Atom("=", t, Lin.c(0)))
        elif kind == "ge":
            if t.is_const and t.const >= 0:
                continue
            parts.append(Atom(">=", t, Lin.c(0)))
        else:
            parts.append(Atom("<=", t, Lin.c(0)))
    return conj(*parts, tail)


def length_formula(tree: ReductionTree, arith: Formula = TRUE) -> tuple[Formula, ChcSystem, dict]:
    """The query with every predicate replaced by its closed form."""
    chc = extract_chc(tree, arith)
    sol = solve_dpi(chc)
    return substitute_solutions(chc.query, chc, sol), chc, sol


def substitute_solutions(f: Formula, chc: ChcSystem, sol: dict) -> Formula:
    if isinstance(f, Pred):
        i = int(f.name[1:])
        return subst_formula(sol[i], dict(zip(chc.preds[i], f.args)))
    if isinstance(f, And):
        return And(tuple(substitute_solutions(a, chc, sol) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(substitute_solutions(a, chc, sol) for a in f.args))
    if isinstance(f, Exists):
        return Exists(f.vars, substitute_solutions(f.body, chc, sol))
    return f


# ---------------------------------------------------------------- fragments

@dataclass
class FlatnessWitness:
    checks: dict  # bud -> bool

    @property
    def flat(self) -> bool:
        return all(self.checks.values())


def flatness(tree: ReductionTree) -> FlatnessWitness:
    checks = {}
    for b in tree.backlinks:
        seg = tree.cycle_path(b)[1:]
        checks[b] = all(s.shape in (LETTER_CONS, RENAME) for i in seg for s in tree[i].label)
    return FlatnessWitness(checks)


def _phase_regular(l: tuple, r: tuple) -> bool:
    occ: dict = {}
    for s in l + r:
        if s.is_var:
            occ[s] = occ.get(s, 0) + 1
    if all(n <= 1 for n in occ.values()):
        return True
    letters_only = lambda t: all(s.is_letter for s in t)  # noqa: E731
    # X w1 = w2 X (either orientation)
    if l and r and l[0].is_var and r[-1] == l[0] and letters_only(l[1:]) and letters_only(r[:-1]):
        return True
    if l and r and r[0].is_var and l[-1] == r[0] and letters_only(r[1:]) and letters_only(l[:-1]):
        return True
    # X w1 Y = Y w2 X, the two-variable dual
    if len(l) >= 2 and len(r) >= 2:
        x, y = l[0], l[-1]
        if (x.is_var and y.is_var and x != y and r[0] == y and r[-1] == x
                and letters_only(l[1:-1]) and letters_only(r[1:-1])):
            return True
    return False


def is_phased_regular(es) -> bool:
    if isinstance(es, WordEquation):
        es = EquationSystem((es,))
    es = EquationSystem(tuple(es))
    if not es.is_quadratic():
        return False
    for e in es:
        if not _split_phases(e.lhs, e.rhs):
            return False
    return True


def _split_phases(l: tuple, r: tuple) -> bool:
    if not l and not r:
        return True
    for total in range(1, len(l) + len(r) + 1):
        for i in range(max(0, total - len(r)), min(len(l), total) + 1):
            j = total - i
            pl, pr = l[:i], r[:j]
            rest = {s for s in l[i:] + r[j:] if s.is_var}
            if any(s.is_var and s in rest for s in pl + pr):
                continue
            if _phase_regular(pl, pr) and _split_phases(l[i:], r[j:]):
                return True
    return False
