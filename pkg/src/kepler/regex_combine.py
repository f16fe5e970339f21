"""Refining a reduction tree against regular memberships by unrolling cycles."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .ast import Substitution, Symbol, regex_letters
from .automata import (Dfa, joint_automaton, joint_live_count, regex_to_dfa)
from .reduce import (BUD, INTERIOR, SAT_LEAF, UNSAT_LEAF, WIDEN, BackLink,
                     ReductionTree, postpro, trace_labels)

SAT, UNSAT = "sat", "unsat"


class CapExceeded(Exception):
    def __init__(self, m, M, cap):
        super().__init__(f"m+M = {m}+{M} exceeds the unroll cap {cap}")
        self.m, self.M, self.cap = m, M, cap


class TreeTooLarge(Exception):
    def __init__(self, size, cap):
        super().__init__(f"widened tree has {size} nodes, cap {cap}")
        self.size, self.cap = size, cap


@dataclass
class WidenInfo:
    m: int
    M: int
    log: list


def membership_dfas(upsilon, alphabet) -> dict[Symbol, Dfa]:
    from .automata import product_intersection
    out: dict[Symbol, Dfa] = {}
    for x, r in upsilon:
        d = regex_to_dfa(r, alphabet)
        out[x] = product_intersection(out[x], d) if x in out else d
    return out


def _root_name(tree: ReductionTree, name: str) -> str:
    while True:
        if name in tree.names.origin:
            name = tree.names.origin[name]
        elif "@" in name:
            name = name.rsplit("@", 1)[0]
        else:
            return name


def pretty_trace(tree: ReductionTree, sigmas: Sequence[Substitution], upsilon=()) -> str:
    """Straight-line formula of a trace with fresh variables renumbered per
    origin in order of appearance (x, x1, x2, ...)."""
    roots = {v.name for v in tree.root_vars()}
    names: dict[str, str] = {}
    count: dict[str, int] = {}

    def nm(v: Symbol) -> str:
        if v.name in roots:
            return v.name
        if v.name not in names:
            base = _root_name(tree, v.name)
            count[base] = count.get(base, 0) + 1
            names[v.name] = f"{base}{count[base]}"
        return names[v.name]

    parts = []
    for s in sigmas:
        lhs = nm(s.target)
        rhs = "".join(nm(x) if x.is_var else x.name for x in s.repl) or "ε"
        parts.append(f"{lhs}={rhs}")
    for x, r in upsilon:
        parts.append(f"{x.name}∈{r}")
    return " ∧ ".join(parts)


def evaluate_leaf(trace: Sequence[Substitution], upsilon, alphabet=None,
                  dfas: dict | None = None) -> str:
    """Compose the straight-line definitions X_i = s_i of a trace and check
    the memberships. Undefined variables range over Σ*."""
    if not upsilon:
        return SAT
    if dfas is None:
        letters = set(alphabet or ())
        for _, r in upsilon:
            letters |= regex_letters(r)
        for s in trace:
            letters |= {x.name for x in s.repl if x.is_letter}
        dfas = membership_dfas(upsilon, sorted(letters))
    defs: dict[Symbol, tuple] = {}
    for s in trace:
        defs.setdefault(s.target, s.repl)
    memo: dict[Symbol, tuple] = {}

    def expand(v: Symbol, depth=0) -> tuple:
        if v in memo:
            return memo[v]
        if v not in defs or depth > 10000:
            return (v,)
        out = []
        for x in defs[v]:
            out.extend(expand(x, depth + 1) if x.is_var else (x,))
        memo[v] = tuple(out)
        return memo[v]

    for x, d in dfas.items():
        pattern = expand(x)
        states = {d.initial}
        for sym in pattern:
            if sym.is_letter:
                if sym.name not in d.alphabet:
                    states = set()
                else:
                    states = {d.step(q, sym.name) for q in states}
            else:
                # free variable: every state reachable from the current ones
                todo = list(states)
                while todo:
                    q = todo.pop()
                    for r in d.delta[q]:
                        if r not in states:
                            states.add(r)
                            todo.append(r)
            if not states:
                break
        if not (states & d.accepting):
            return UNSAT
    return SAT


def _clone_subtree(tree: ReductionTree, c: int, sub: list, k: int, rename_vars: set,
                   attach_to: int, attach_label: tuple, done: set):
    """Copy the subtree rooted at c below ``attach_to`` with variables renamed."""
    rho: dict[Symbol, Symbol] = {}

    def r(v: Symbol) -> Symbol:
        if v.is_letter or v not in rename_vars:
            return v
        if v not in rho:
            rho[v] = tree.names.fresh(f"{v.name}@{k}")
        return rho[v]

    def rs(t: tuple) -> tuple:
        return tuple(r(x) for x in t)

    from .ast import WordEquation
    inside = set(sub)
    idmap: dict[int, int] = {}
    for i in sub:
        n = tree[i]
        if i == c:
            parent, label = attach_to, attach_label
        else:
            parent = idmap[n.parent]
            label = tuple(Substitution(r(s.target), rs(s.repl)) for s in n.label)
        system = tuple(WordEquation(rs(e.lhs), rs(e.rhs)) for e in n.system)
        new = tree.add(system, n.status, parent, label, rs(n.tracked))
        idmap[i] = new.id
    for i in sub:
        if i in tree.backlinks:
            bl = tree.backlinks[i]
            if bl.companion in inside:
                ren = tuple(Substitution(r(s.target), (r(s.repl[0]),)) for s in bl.renaming)
                tgt = idmap[bl.companion]
            else:
                ren = tuple(Substitution(r(s.target), s.repl) for s in bl.renaming)
                tgt = bl.companion
            tree.backlinks[idmap[i]] = BackLink(tgt, ren, bl.kind)
            if i in done:
                done.add(idmap[i])
    return idmap, r


def _unroll(tree: ReductionTree, bud: int, times: int, m: int, done: set):
    bl = tree.backlinks.pop(bud)
    c = bl.companion
    sub = tree.subtree(c)
    below = set()
    for i in sub:
        if i != c:
            below |= set(tree[i].tracked)
    rename_vars = (below - set(tree[c].tracked)) | {s.repl[0] for s in bl.renaming}
    copies = []
    prev_bud, prev_r = bud, (lambda v: v)
    for k in range(1, times + 1):
        idmap, r = _clone_subtree(tree, c, sub, k, rename_vars, prev_bud, (), done)
        # edge from the previous bud into the new companion copy: [ρ_k(c_v)/b_v]
        tree[idmap[c]].label = tuple(Substitution(prev_r(s.target), (r(s.repl[0]),))
                                     for s in bl.renaming)
        tree[prev_bud].status = INTERIOR
        copies.append((idmap, r))
        prev_bud, prev_r = idmap[bud], r
    # the last bud links back to the companion of copy m+1
    tgt_idmap, tgt_r = copies[min(m + 1, times) - 1]
    ren = tuple(Substitution(prev_r(s.target), (tgt_r(s.repl[0]),)) for s in bl.renaming)
    tree[prev_bud].status = BUD
    tree.backlinks[prev_bud] = BackLink(tgt_idmap[c], ren, WIDEN)
    done.add(prev_bud)


def widen_tree(tree: ReductionTree, upsilon, cap: int = 5040,
               max_nodes: int = 200000) -> tuple[ReductionTree, WidenInfo]:
    """Unroll every cycle m+M times and prune leaves whose straight-line
    formula violates the memberships."""
    letters = set(tree.alphabet)
    for _, r in upsilon:
        letters |= regex_letters(r)
    alphabet = tuple(sorted(letters))
    if any(tree[i].tracked for i in tree.sat_leaves()):
        postpro(tree, alphabet)
    dfas = membership_dfas(upsilon, alphabet)
    joint, accs = joint_automaton(list(dfas.values()))
    m = joint_live_count(joint, accs)
    M = math.factorial(m)
    if m + M > cap:
        raise CapExceeded(m, M, cap)
    done: set[int] = set()
    times = m + M
    while True:
        todo = [b for b in tree.backlinks if b not in done]
        if not todo:
            break
        # innermost first: deepest companion, then smallest bud id
        b = max(todo, key=lambda b: (tree[tree.backlinks[b].companion].depth, -b))
        _unroll(tree, b, times, m, done)
        if len(tree) > max_nodes:
            # nested cycles multiply: every copy of an outer cycle holds the inner ones
            raise TreeTooLarge(len(tree), max_nodes)
    log = []
    for leaf in [n.id for n in tree.nodes if not n.children and n.status == SAT_LEAF]:
        trace = trace_labels(tree, leaf)
        verdict = evaluate_leaf(trace, upsilon, dfas=dfas)
        log.append((leaf, pretty_trace(tree, trace, upsilon), verdict.upper()))
        if verdict == UNSAT:
            tree[leaf].status = UNSAT_LEAF
    tree.log.extend(f"(e{tree.root},e{leaf}) {text} {v}" for leaf, text, v in log)
    return tree, WidenInfo(m, M, log)
