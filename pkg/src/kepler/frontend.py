"""SMT-LIB front end, the top-level solving strategy, the benchmark generator
and a brute-force oracle."""
from __future__ import annotations

import logging
import random
import time
from dataclasses import dataclass, field
from itertools import islice, product as iproduct
from pathlib import Path

from . import presburger
from .ast import (TRUE, AnyChar, Chr, Complement, Concat, EquationSystem,
                  Epsilon, Exists, Empty, Formula, FreshNames, Intersect, Lin,
                  NormalizedFormula, Star, Union, WordEquation, Word, conj,
                  disj, eq, eval_qf, ge, gt, le, lenvar, length_vars, letter,
                  lt, subst_formula, var)
from .automata import accepts
from .grammar import table_union_cfg
from .lengths import NotDpi, extract_chc, flatness, solve_dpi, substitute_solutions
from .normalize import (AndF, Arith, InRe, Not, OrF, StrEq, TooManyCases,
                        Unsupported, alphabet_for, normalize_cases, raw_letters)
from .parikh import length_constraint
from .reduce import (Budget, BudgetExhausted, build_tree, check_model,
                     enumerate_walks, postpro, walk_model, walk_with_counts)
from .regex_combine import CapExceeded, TreeTooLarge, membership_dfas, widen_tree
from .sexp import ParseError, Str, Sym, read_all, where

log = logging.getLogger(__name__)

SAT, UNSAT, UNKNOWN = "sat", "unsat", "unknown"


class UnsupportedConstruct(ParseError):
    pass


# ---------------------------------------------------------------- parsing

@dataclass
class Script:
    formula: object
    strings: list = field(default_factory=list)
    ints: list = field(default_factory=list)
    get_model: bool = False


def _lit(s: str) -> tuple:
    return tuple(letter(c) for c in _unescape(s))


def _unescape(s: str) -> str:
    out, i = [], 0
    while i < len(s):
        if s.startswith("\\u{", i):
            j = s.index("}", i)
            out.append(chr(int(s[i + 3:j], 16)))
            i = j + 1
        else:
            out.append(s[i])
            i += 1
    return "".join(out)


class _Parser:
    def __init__(self):
        self.strings: dict[str, None] = {}
        self.ints: dict[str, None] = {}
        self.bound: list[set] = []

    def err(self, msg, x, cls=ParseError):
        line, col = where(x)
        raise cls(msg, line, col)

    def is_int_var(self, name):
        return name in self.ints or any(name in b for b in self.bound)

    def sort(self, x) -> str:
        if isinstance(x, Str):
            return "String"
        if isinstance(x, Sym):
            if x.name in self.strings:
                return "String"
            if self.is_int_var(x.name) or x.name.lstrip("-").isdigit():
                return "Int"
            self.err(f"unknown symbol {x.name}", x)
        if isinstance(x, list) and x and isinstance(x[0], Sym):
            h = x[0].name
            if h == "str.++":
                return "String"
            if h in ("str.len", "+", "-", "*"):
                return "Int"
        self.err(f"cannot infer the sort of {x}", x)

    def term(self, x) -> tuple:
        if isinstance(x, Str):
            return _lit(x.value)
        if isinstance(x, Sym):
            if x.name in self.strings:
                return (var(x.name),)
            self.err(f"{x.name} is not a string variable", x)
        if isinstance(x, list) and x and x[0] == "str.++":
            out = ()
            for a in x[1:]:
                out += self.term(a)
            return out
        if isinstance(x, list) and x and isinstance(x[0], Sym):
            self.err(f"unsupported string operator {x[0].name}", x, UnsupportedConstruct)
        self.err(f"bad string term {x}", x)

    def lin(self, x) -> Lin:
        if isinstance(x, Sym):
            if x.name.isdigit():
                return Lin.c(int(x.name))
            if self.is_int_var(x.name):
                return Lin.v(x.name)
            self.err(f"{x.name} is not an integer", x)
        if isinstance(x, list) and x and isinstance(x[0], Sym):
            h, args = x[0].name, x[1:]
            if h == "str.len":
                t = self.term(args[0])
                out = Lin.c(0)
                for s in t:
                    out = out + (Lin.v(lenvar(s)) if s.is_var else 1)
                return out
            if h == "+":
                out = Lin.c(0)
                for a in args:
                    out = out + self.lin(a)
                return out
            if h == "-":
                if len(args) == 1:
                    return -self.lin(args[0])
                out = self.lin(args[0])
                for a in args[1:]:
                    out = out - self.lin(a)
                return out
            if h == "*":
                out = Lin.c(1)
                for a in args:
                    t = self.lin(a)
                    if out.is_const:
                        out = t * out.const
                    elif t.is_const:
                        out = out * t.const
                    else:
                        self.err("non-linear multiplication", x, UnsupportedConstruct)
                return out
            self.err(f"unsupported integer operator {h}", x, UnsupportedConstruct)
        self.err(f"bad integer term {x}", x)

    def regex(self, x):
        if isinstance(x, Sym):
            n = x.name
            if n == "re.none":
                return Empty()
            if n == "re.allchar":
                return AnyChar()
            if n == "re.all":
                return Star(AnyChar())
            self.err(f"unknown regex {n}", x)
        if not (isinstance(x, list) and x and isinstance(x[0], Sym)):
            self.err(f"bad regex {x}", x)
        h, args = x[0].name, x[1:]
        if h in ("str.to_re", "str.to.re"):
            if not isinstance(args[0], Str):
                self.err("str.to_re expects a literal", x, UnsupportedConstruct)
            w = _unescape(args[0].value)
            return Word(w) if len(w) != 1 else Chr(w)
        rs = [self.regex(a) for a in args] if h not in ("re.range",) else []
        if h == "re.++":
            return _fold(Concat, rs, Epsilon())
        if h == "re.union":
            return _fold(Union, rs, Empty())
        if h == "re.inter":
            return _fold(Intersect, rs, Star(AnyChar()))
        if h == "re.comp":
            return Complement(rs[0])
        if h == "re.*":
            return Star(rs[0])
        if h == "re.+":
            return Concat(rs[0], Star(rs[0]))
        if h == "re.opt":
            return Union(Epsilon(), rs[0])
        if h == "re.range":
            lo, hi = _unescape(args[0].value), _unescape(args[1].value)
            if len(lo) != 1 or len(hi) != 1:
                return Empty()
            return _fold(Union, [Chr(chr(c)) for c in range(ord(lo), ord(hi) + 1)], Empty())
        self.err(f"unsupported regex operator {h}", x, UnsupportedConstruct)

    def formula(self, x):
        if isinstance(x, Sym):
            if x.name == "true":
                return AndF(())
            if x.name == "false":
                return OrF(())
            self.err(f"unsupported boolean {x.name}", x, UnsupportedConstruct)
        if not (isinstance(x, list) and x and isinstance(x[0], Sym)):
            self.err(f"bad formula {x}", x)
        h, args = x[0].name, x[1:]
        if h == "and":
            return AndF(tuple(self.formula(a) for a in args))
        if h == "or":
            return OrF(tuple(self.formula(a) for a in args))
        if h == "not":
            return Not(self.formula(args[0]))
        if h == "=>":
            return OrF((Not(self.formula(args[0])), self.formula(args[1])))
        if h in ("=", "distinct"):
            if len(args) != 2:
                self.err(f"{h} with {len(args)} arguments", x, UnsupportedConstruct)
            if self.sort(args[0]) == "String" or self.sort(args[1]) == "String":
                f = StrEq(self.term(args[0]), self.term(args[1]))
            else:
                f = Arith(eq(self.lin(args[0]), self.lin(args[1])))
            return Not(f) if h == "distinct" else f
        if h in ("<=", "<", ">=", ">"):
            op = {"<=": le, "<": lt, ">=": ge, ">": gt}[h]
            return Arith(op(self.lin(args[0]), self.lin(args[1])))
        if h in ("str.in_re", "str.in.re"):
            return InRe(self.term(args[0]), self.regex(args[1]))
        if h == "exists":
            names = []
            for b in args[0]:
                if not (isinstance(b, list) and len(b) == 2 and b[1] == "Int"):
                    self.err("only integer existentials are supported", b, UnsupportedConstruct)
                names.append(b[0].name)
            self.bound.append(set(names))
            body = self.formula(args[1])
            self.bound.pop()
            if not isinstance(body, Arith):
                body = Arith(_arith_only(body, x, self))
            return Arith(Exists(tuple(names), body.f))
        self.err(f"unsupported operator {h}", x, UnsupportedConstruct)


def _arith_only(f, x, p: _Parser) -> Formula:
    if isinstance(f, Arith):
        return f.f
    if isinstance(f, AndF):
        return conj(*[_arith_only(a, x, p) for a in f.args])
    if isinstance(f, OrF):
        return disj(*[_arith_only(a, x, p) for a in f.args])
    p.err("string constraint under a quantifier", x, UnsupportedConstruct)


def _fold(ctor, rs, unit):
    if not rs:
        return unit
    out = rs[0]
    for r in rs[1:]:
        out = ctor(out, r)
    return out


def parse(text: str) -> Script:
    p = _Parser()
    asserts = []
    get_model = False
    for cmd in read_all(text):
        if not (isinstance(cmd, list) and cmd and isinstance(cmd[0], Sym)):
            raise ParseError(f"expected a command, got {cmd}", *where(cmd))
        h = cmd[0].name
        if h in ("set-logic", "set-info", "set-option", "check-sat", "exit"):
            continue
        if h == "get-model":
            get_model = True
        elif h in ("declare-fun", "declare-const"):
            name = cmd[1].name
            sort = cmd[-1]
            if h == "declare-fun" and cmd[2]:
                raise UnsupportedConstruct("functions with arguments", *where(cmd))
            if sort == "String":
                p.strings[name] = None
            elif sort == "Int":
                p.ints[name] = None
            else:
                raise UnsupportedConstruct(f"sort {sort}", *where(cmd))
        elif h == "assert":
            asserts.append(p.formula(cmd[1]))
        else:
            raise UnsupportedConstruct(f"command {h}", *where(cmd))
    return Script(AndF(tuple(asserts)), list(p.strings), list(p.ints), get_model)


# ---------------------------------------------------------------- solving

@dataclass
class SolveConfig:
    max_depth: int = 512
    max_nodes: int = 100000
    max_unroll: int = 5040
    timeout: float = 30.0
    presburger_budget: int = 100000
    model_walks: int = 20000
    model_walk_len: int = 200
    max_cases: int = 4096


@dataclass
class Outcome:
    status: str
    model: dict = field(default_factory=dict)
    ints: dict = field(default_factory=dict)
    reason: str = ""
    tree: object = None
    chc: object = None
    solutions: dict = field(default_factory=dict)
    cfg: object = None
    lia: Formula | None = None
    widen: object = None


def _with_all_vars(nf: NormalizedFormula) -> EquationSystem:
    es = list(nf.eqs)
    have = set(nf.eqs.vars())
    for x in nf.string_vars():
        if x not in have:
            es.append(WordEquation((x,), (x,)))
    return EquationSystem(tuple(es))


def _check_all(nf: NormalizedFormula, model: dict, dfas: dict, cfg: SolveConfig):
    """Verify a string model against everything; returns integer values or None."""
    if not check_model(nf.eqs, model):
        return None
    for x, d in dfas.items():
        if not accepts(d, model.get(x, "")):
            return None
    if nf.arith == TRUE:
        return {}
    env = {lenvar(x): Lin.c(len(w)) for x, w in model.items()}
    for n in length_vars(nf.arith):
        env.setdefault(n, Lin.c(0))
    r = presburger.sat(subst_formula(nf.arith, env), budget=cfg.presburger_budget)
    if r.status != presburger.SAT:
        return None
    return {k: v for k, v in r.model.items() if k in nf.int_vars}


def _length_formula(tree, nf: NormalizedFormula, out: Outcome) -> Formula:
    A = nf.arith
    if flatness(tree).flat:
        try:
            chc = extract_chc(tree, A)
            sol = solve_dpi(chc)
            out.chc, out.solutions = chc, sol
            return substitute_solutions(chc.query, chc, sol)
        except NotDpi as exc:
            log.info("flat route failed: %s", exc)
    g = table_union_cfg(tree)
    out.cfg = g
    wanted = [var(n[1:-1]) for n in sorted(length_vars(A))]
    wanted = [x for x in wanted if x in g.nonterminals]
    return conj(length_constraint(g, wanted), A)


def solve(nf: NormalizedFormula, cfg: SolveConfig | None = None) -> Outcome:
    cfg = cfg or SolveConfig()
    start = time.monotonic()
    out = Outcome(UNKNOWN)
    es = _with_all_vars(nf)
    names = FreshNames({v.name for v in es.vars()} | set(nf.int_vars))
    try:
        tree = build_tree(es, Budget(cfg.max_depth, cfg.max_nodes, cfg.timeout),
                          names=names, alphabet=nf.alphabet)
    except BudgetExhausted as exc:
        out.reason, out.tree = f"reduce:{exc.reason}", exc.tree
        return out
    out.tree = tree
    if not tree.sat_leaves():
        out.status = UNSAT
        return out
    postpro(tree, nf.alphabet)
    if nf.memberships:
        try:
            tree, out.widen = widen_tree(tree, nf.memberships, cap=cfg.max_unroll,
                                         max_nodes=cfg.max_nodes)
        except CapExceeded as exc:
            out.reason = f"widen:unroll-cap m={exc.m}"
            return out
        except TreeTooLarge as exc:
            out.reason = f"widen:max-nodes {exc.size}"
            return out
        if not tree.sat_leaves():
            out.status = UNSAT
            return out
    dfas = membership_dfas(nf.memberships, nf.alphabet)
    if nf.arith == TRUE:
        f = TRUE
    else:
        f = _length_formula(tree, nf, out)
    out.lia = f
    remaining = max(0.1, cfg.timeout - (time.monotonic() - start))
    r = presburger.sat(f, budget=cfg.presburger_budget, timeout=remaining) if f != TRUE \
        else presburger.Result(presburger.SAT, {})
    if r.status == presburger.UNSAT:
        out.status = UNSAT
        return out
    if r.status == presburger.UNKNOWN:
        out.reason = f"presburger:{r.reason or 'budget'}"
        return out
    found = _search_model(tree, nf, dfas, cfg, start)
    if found is None:
        out.reason = "model-search"
        return out
    out.status, (out.model, out.ints) = SAT, found
    return out


def _search_model(tree, nf, dfas, cfg: SolveConfig, start: float):
    roots = [x for x in tree.root_vars()]
    seen = set()
    for k, walk in enumerate(enumerate_walks(tree, cfg.model_walk_len, cfg.model_walks)):
        model = walk_model(tree, walk)
        key = tuple(model.get(x, "") for x in roots)
        if key in seen:
            continue
        seen.add(key)
        ints = _check_all(nf, model, dfas, cfg)
        if ints is not None:
            return model, ints
        if time.monotonic() - start > cfg.timeout:
            return None
    # longer models: pump the cycles met on each leaf path
    for leaf in tree.sat_leaves():
        buds = [b for i in tree.path(leaf) for b in tree.buds_of(i)]
        if not buds:
            continue
        for total in range(1, 65):
            for counts in _compositions(total, len(buds), limit=2000):
                model = walk_model(tree, walk_with_counts(tree, leaf, dict(zip(buds, counts))))
                ints = _check_all(nf, model, dfas, cfg)
                if ints is not None:
                    return model, ints
                if time.monotonic() - start > cfg.timeout:
                    return None
    return None


def _compositions(total: int, parts: int, limit: int):
    if parts == 1:
        yield (total,)
        return
    n = 0
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1, limit):
            yield (first,) + rest
            n += 1
            if n >= limit:
                return


@dataclass
class Report:
    status: str
    model: dict = field(default_factory=dict)
    ints: dict = field(default_factory=dict)
    reason: str = ""
    outcomes: list = field(default_factory=list)


def solve_script(script: Script, cfg: SolveConfig | None = None) -> Report:
    cfg = cfg or SolveConfig()
    letters = raw_letters(script.formula)
    alphabet = alphabet_for(letters)
    names = FreshNames(set(script.strings) | set(script.ints))
    try:
        cases = normalize_cases(script.formula, alphabet, names, cfg.max_cases, script.ints)
    except TooManyCases as exc:
        return Report(UNKNOWN, reason=f"normalize:{exc}")
    rep = Report(UNSAT)
    reasons = []
    for nf in cases:
        o = solve(nf, cfg)
        rep.outcomes.append(o)
        if o.status == SAT:
            model = {x.name: w for x, w in o.model.items() if x.name in script.strings}
            rep.status, rep.model, rep.ints = SAT, model, o.ints
            return rep
        if o.status == UNKNOWN:
            reasons.append(o.reason)
    if reasons:
        rep.status, rep.reason = UNKNOWN, reasons[0]
    return rep


def solve_text(text: str, cfg: SolveConfig | None = None) -> Report:
    return solve_script(parse(text), cfg)


# ---------------------------------------------------------------- oracle

def oracle(nf: NormalizedFormula, max_len: int = 6, letters=None):
    """Exhaustive search over lengths ≤ max_len. Returns (SAT, model) or
    ("unsat-within-bound", None)."""
    xs = nf.string_vars()
    alphabet = tuple(letters or nf.alphabet or ("a", "b"))
    dfas = membership_dfas(nf.memberships, alphabet)
    for lens in iproduct(range(max_len + 1), repeat=len(xs)):
        L = dict(zip(xs, lens))
        if nf.arith != TRUE:
            env = {lenvar(x): Lin.c(n) for x, n in L.items()}
            g = subst_formula(nf.arith, env)
            if length_vars(g):
                continue
            if presburger.sat(g).status != presburger.SAT:
                continue
        classes = _unify(nf.eqs, L)
        if classes is None:
            continue
        model = _fill(classes, L, xs, alphabet, dfas)
        if model is not None:
            return SAT, model
    return "unsat-within-bound", None


def _unify(es, L: dict):
    parent: dict = {}

    def find(a):
        while parent.get(a, a) != a:
            parent[a] = parent.get(parent[a], parent[a])
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra == rb:
            return True
        if isinstance(ra, str) and isinstance(rb, str):
            return False
        if isinstance(ra, str):
            ra, rb = rb, ra
        parent[ra] = rb
        return True

    def cells(t):
        for s in t:
            if s.is_letter:
                yield s.name
            else:
                for i in range(L[s]):
                    yield (s, i)

    for e in es:
        l, r = list(cells(e.lhs)), list(cells(e.rhs))
        if len(l) != len(r):
            return None
        for a, b in zip(l, r):
            if not union(a, b):
                return None
    return find


FILL_CAP = 4096


def _fill(find, L, xs, alphabet, dfas):
    positions = [(x, i) for x in xs for i in range(L[x])]
    free = []
    for p in positions:
        r = find(p)
        if not isinstance(r, str) and r not in free:
            free.append(r)
    # capped: the oracle is a bounded check in any case
    for choice in islice(iproduct(alphabet, repeat=len(free)), FILL_CAP):
        val = dict(zip(free, choice))
        model = {}
        for x in xs:
            w = []
            for i in range(L[x]):
                r = find((x, i))
                w.append(r if isinstance(r, str) else val[r])
            model[x] = "".join(w)
        if all(accepts(d, model.get(x, "")) for x, d in dfas.items()):
            return model
        if not dfas:
            break
    return None


def oracle_script(script: Script, max_len: int = 6):
    alphabet = alphabet_for(raw_letters(script.formula))
    names = FreshNames(set(script.strings) | set(script.ints))
    for nf in normalize_cases(script.formula, alphabet, names, int_vars=script.ints):
        st, model = oracle(nf, max_len, alphabet)
        if st == SAT:
            return SAT, {x.name: w for x, w in model.items()}
    return "unsat-within-bound", None


# ---------------------------------------------------------------- benchmarks

SAT_PHASES = [("xaby", "ybax"), ("xab", "bax")]
UNSAT_PHASES = [("xaay", "ybax"), ("xaa", "bax")]


def _phase(tmpl, k: int):
    l, r = tmpl
    ren = lambda s: "".join(f"{c}{k}" if c in "xy" else c for c in s)  # noqa: E731
    return ren(l), ren(r)


def _smt_term(s: str) -> str:
    parts = []
    buf = ""
    i = 0
    while i < len(s):
        c = s[i]
        if c in "xy":
            j = i + 1
            while j < len(s) and s[j].isdigit():
                j += 1
            if buf:
                parts.append(f'"{buf}"')
                buf = ""
            parts.append(s[i:j])
            i = j
        else:
            buf += c
            i += 1
    if buf:
        parts.append(f'"{buf}"')
    return parts[0] if len(parts) == 1 else "(str.++ " + " ".join(parts) + ")"


def bench_instance(phases: int, sat: bool, rng: random.Random):
    tmpls = []
    bad = rng.randrange(phases) if not sat else -1
    for k in range(phases):
        pool = UNSAT_PHASES if k == bad else SAT_PHASES
        tmpls.append(_phase(rng.choice(pool), k + 1))
    lhs = "".join(l for l, _ in tmpls)
    rhs = "".join(r for _, r in tmpls)
    vs = sorted({m for l, r in tmpls for m in _vars_of(l + r)})
    lines = ["(set-logic QF_S)"]
    lines += [f"(declare-fun {v} () String)" for v in vs]
    lines.append(f"(assert (= {_smt_term(lhs)} {_smt_term(rhs)}))")
    lines += ["(check-sat)", ""]
    return "\n".join(lines), lhs, rhs


def _vars_of(s: str):
    i = 0
    while i < len(s):
        if s[i] in "xy":
            j = i + 1
            while j < len(s) and s[j].isdigit():
                j += 1
            yield s[i:j]
            i = j
        else:
            i += 1


def gen_bench(out_dir, phases: int, count: int, seed: int = 0) -> list[Path]:
    """Half sat, half unsat; phase counts cycle through 1..phases. The first
    single-phase instances use each template once so both unsat shapes occur."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)
    files = []
    for i in range(count):
        p = 1 + (i // 2) % phases
        sat = i % 2 == 0
        if p == 1:
            k = (i // (2 * phases)) % 2
            tmpl = (SAT_PHASES if sat else UNSAT_PHASES)[k]
            l, r = _phase(tmpl, 1)
            vs = sorted(set(_vars_of(l + r)))
            text = "\n".join(["(set-logic QF_S)"] + [f"(declare-fun {v} () String)" for v in vs]
                             + [f"(assert (= {_smt_term(l)} {_smt_term(r)}))", "(check-sat)", ""])
        else:
            text, _, _ = bench_instance(p, sat, rng)
        path = out / f"quad-{i + 1:03d}-{p}-{'sat' if sat else 'unsat'}.smt2"
        path.write_text(text)
        files.append(path)
    return files


# ---------------------------------------------------------------- output

def smt_string(w: str) -> str:
    out = []
    for c in w:
        if c == '"':
            out.append('""')
        elif 32 <= ord(c) < 127:
            out.append(c)
        else:
            out.append(f"\\u{{{ord(c):x}}}")
    return '"' + "".join(out) + '"'


def model_lines(script: Script, rep: Report) -> list[str]:
    lines = []
    for x in script.strings:
        lines.append(f"(define-fun {x} () String {smt_string(rep.model.get(x, ''))})")
    for k in script.ints:
        v = rep.ints.get(k, 0)
        lines.append(f"(define-fun {k} () Int {v if v >= 0 else f'(- {-v})'})")
    return lines


__all__ = ["parse", "solve", "solve_script", "solve_text", "oracle", "oracle_script",
           "gen_bench", "SolveConfig", "Outcome", "Report", "Script", "UnsupportedConstruct",
           "SAT", "UNSAT", "UNKNOWN", "model_lines", "eval_qf", "Unsupported"]
