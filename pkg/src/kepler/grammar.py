"""Solution-set grammars read off closed reduction trees."""
from __future__ import annotations

import copy
from collections import deque
from dataclasses import dataclass

from .ast import Symbol, letter, var
from .reduce import SAT_LEAF, ReductionTree, postpro


class NotFlat(ValueError):
    pass


@dataclass
class Cfg:
    start: Symbol
    productions: list            # (lhs Symbol, rhs tuple)
    alphabet: tuple = ()

    @property
    def nonterminals(self) -> set:
        out = {self.start}
        for l, r in self.productions:
            out.add(l)
            out.update(s for s in r if s.is_var)
        return out

    def rules_of(self, x: Symbol) -> list:
        return [r for l, r in self.productions if l == x]

    def restart(self, x: Symbol) -> "Cfg":
        """Same productions, new start, unreachable ones pruned."""
        reach = {x}
        todo = [x]
        while todo:
            y = todo.pop()
            for l, r in self.productions:
                if l == y:
                    for s in r:
                        if s.is_var and s not in reach:
                            reach.add(s)
                            todo.append(s)
        prods = [(l, r) for l, r in self.productions if l in reach]
        return Cfg(x, prods, self.alphabet)

    def dump(self) -> str:
        return "".join(_prod_line(l, r) for l, r in self.productions)


@dataclass
class Edt0l:
    start: Symbol
    tables: list                 # list of dict lhs -> rhs tuple
    alphabet: tuple = ()
    index: int = 0

    @property
    def nonterminals(self) -> set:
        out = {self.start}
        for t in self.tables:
            for l, r in t.items():
                out.add(l)
                out.update(s for s in r if s.is_var)
        return out

    def dump(self) -> str:
        out = []
        for k, t in enumerate(self.tables, 1):
            out.append(f"-- table {k}\n")
            out.extend(_prod_line(l, r) for l, r in t.items())
        return "".join(out)


def _prod_line(l, r) -> str:
    rhs = " ".join(s.name for s in r) if r else "<eps>"
    return f"{l.name} -> {rhs}\n"


def _start_name(tree: ReductionTree, base: str = "S") -> str:
    taken = {v.name for n in tree.nodes for v in n.tracked} | set(tree.names.taken)
    name = base
    while name in taken:
        name += "'"
    return name


def _root_lhs(tree: ReductionTree) -> tuple:
    sys_ = tree[tree.root].system
    return sys_[0].lhs if sys_ else ()


def _closed(tree: ReductionTree) -> ReductionTree:
    if any(tree[i].tracked for i in tree.sat_leaves()):
        tree = copy.deepcopy(tree)
        postpro(tree)
    return tree


def extract_edtl(tree: ReductionTree) -> Edt0l:
    tree = _closed(tree)
    S = var(_start_name(tree))
    lhs = _root_lhs(tree)
    ends = [n.id for n in tree.nodes if n.status == SAT_LEAF and not n.children]
    ends += sorted(tree.backlinks)
    tables = []
    for end in sorted(ends):
        t = {S: lhs}
        for i in tree.path(end):
            for s in tree[i].label:
                t[s.target] = s.repl
        if end in tree.backlinks:
            for s in tree.backlinks[end].renaming:
                t[s.target] = s.repl
        tables.append(t)
    index = max([len(n.tracked) for n in tree.nodes] + [1])
    return Edt0l(S, tables, tree.alphabet, index)


def table_union_cfg(tree: ReductionTree) -> Cfg:
    """Every table production as an ordinary CFG rule, plus free rules for
    variables a bud drops without linking them back."""
    tree = _closed(tree)
    g = extract_edtl(tree)
    prods: list = []
    seen = set()
    for t in g.tables:
        for l, r in t.items():
            if (l, r) not in seen:
                seen.add((l, r))
                prods.append((l, r))
    for b, bl in sorted(tree.backlinks.items()):
        linked = {s.target for s in bl.renaming}
        for v in tree[b].tracked:
            if v not in linked:
                for rule in [()] + [(letter(c), v) for c in tree.alphabet]:
                    if (v, rule) not in seen:
                        seen.add((v, rule))
                        prods.append((v, rule))
    return Cfg(g.start, prods, tree.alphabet)


def extract_cfg(tree: ReductionTree) -> Cfg:
    """Per satisfiable leaf: S_i -> lhs(root), the cycle rules met along the
    path, and staged copies of each variable between successive cycles."""
    tree = _closed(tree)
    S = _start_name(tree)
    start = var(S)
    leaves = [n.id for n in tree.nodes if n.status == SAT_LEAF and not n.children]
    prods: list = []
    multi = len(leaves) > 1
    roots = set(tree.root_vars())
    for k, leaf in enumerate(leaves, 1):
        path = tree.path(leaf)

        def ns(v: Symbol, k=k) -> Symbol:
            if not multi or v in roots:
                return v
            return var(f"{v.name}#{k}")

        cur: dict = {}

        def name(v: Symbol) -> Symbol:
            return cur.get(v, ns(v))

        Si = var(f"{S}{k}")
        local = [(start, (Si,)), (Si, tuple(name(s) if s.is_var else s for s in _root_lhs(tree)))]
        for idx, i in enumerate(path):
            n = tree[i]
            staged = set()
            for b in tree.buds_of(i):
                bl = tree.backlinks[b]
                ren = {s.target: s.repl[0] for s in bl.renaming}
                for j in tree.cycle_path(b)[1:]:
                    for s in tree[j].label:
                        tgt = name(s.target) if s.target in n.tracked else ns(s.target)
                        rhs = tuple((name(x) if x in n.tracked else ns(x)) if x.is_var else x
                                    for x in s.repl)
                        local.append((tgt, rhs))
                        if s.target in n.tracked:
                            staged.add(s.target)
                for t, c in ren.items():
                    local.append((ns(t), (name(c),)))
            for v in sorted(staged, key=lambda s: s.name):
                nv = ns(tree.names.fresh(v))
                local.append((name(v), (nv,)))
                cur[v] = nv
            if idx + 1 < len(path):
                for s in tree[path[idx + 1]].label:
                    local.append((name(s.target),
                                  tuple(name(x) if x.is_var else x for x in s.repl)))
        for p in local:
            if p not in prods:
                prods.append(p)
    return Cfg(start, prods, tree.alphabet)


# ---------------------------------------------------------------- enumeration

def _word(form: tuple) -> str | None:
    if all(s.is_letter for s in form):
        return "".join(s.name for s in form)
    return None


def _letters(form) -> int:
    return sum(1 for s in form if s.is_letter)


def enumerate_words(g, max_len: int, start: Symbol | None = None, limit: int = 200000) -> set:
    """All terminal words of length <= max_len derivable from ``start``."""
    if max_len > 16:
        raise ValueError("max_len is capped at 16")
    s0 = g.start if start is None else start
    out: set = set()
    seen = {(s0,)}
    queue = deque([(s0,)])
    steps = 0
    while queue and steps < limit:
        form = queue.popleft()
        steps += 1
        w = _word(form)
        if w is not None:
            out.add(w)
            continue
        for nxt in _successors(g, form):
            if _letters(nxt) <= max_len and nxt not in seen:
                if isinstance(g, Cfg) and len(nxt) > 2 * max_len + 8:
                    continue
                seen.add(nxt)
                queue.append(nxt)
    return out


def _successors(g, form: tuple):
    if isinstance(g, Edt0l):
        for t in g.tables:
            nxt = []
            for s in form:
                nxt.extend(t.get(s, (s,)) if s.is_var else (s,))
            nxt = tuple(nxt)
            if nxt != form:
                yield nxt
        return
    # leftmost derivation
    for i, s in enumerate(form):
        if s.is_var:
            for r in g.rules_of(s):
                yield form[:i] + tuple(r) + form[i + 1:]
            return
