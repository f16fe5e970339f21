"""Cyclic reduction trees: match, complete, link_back, and the tree builder."""
from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .ast import (EquationSystem, FreshNames, Substitution, Symbol, WordEquation,
                  letter, term_vars)

OPEN, SAT_LEAF, UNSAT_LEAF, BUD, INTERIOR = "Open", "SatLeaf", "UnsatLeaf", "Bud", "Interior"

# back-link provenance
REDUCE, FREE, WIDEN = "reduce", "free", "widen"


class NotReducible(ValueError):
    pass


class InternalUnsound(AssertionError):
    pass


class BudgetExhausted(Exception):
    def __init__(self, reason: str, tree: "ReductionTree"):
        super().__init__(reason)
        self.reason = reason
        self.tree = tree


@dataclass
class Budget:
    max_depth: int = 512
    max_nodes: int = 100000
    wall_time: float = 30.0


@dataclass
class Node:
    id: int
    system: tuple
    status: str
    parent: int | None
    label: tuple = ()
    depth: int = 0
    tracked: tuple = ()
    children: list = field(default_factory=list)

    @property
    def eqs(self) -> EquationSystem:
        return EquationSystem(self.system)

    def __str__(self):
        return str(self.eqs)


@dataclass
class BackLink:
    companion: int
    renaming: tuple  # Rename substitutions [c/b]
    kind: str = REDUCE


@dataclass
class ReductionTree:
    nodes: list = field(default_factory=list)
    backlinks: dict = field(default_factory=dict)
    root: int = 0
    created: dict = field(default_factory=dict)   # var -> node id where it first appears
    names: FreshNames = field(default_factory=FreshNames)
    alphabet: tuple = ()
    log: list = field(default_factory=list)

    def __getitem__(self, i) -> Node:
        return self.nodes[i]

    def __len__(self):
        return len(self.nodes)

    def add(self, system, status, parent, label, tracked) -> Node:
        depth = 0 if parent is None else self.nodes[parent].depth + 1
        n = Node(len(self.nodes), tuple(system), status, parent, tuple(label), depth, tuple(tracked))
        self.nodes.append(n)
        if parent is not None:
            self.nodes[parent].children.append(n.id)
        for v in n.tracked:
            self.created.setdefault(v, n.id)
        return n

    def path(self, i: int) -> list[int]:
        out = []
        while i is not None:
            out.append(i)
            i = self.nodes[i].parent
        return out[::-1]

    def ancestors(self, i: int) -> list[int]:
        """Strict ancestors, nearest first."""
        return self.path(i)[-2::-1]

    def is_ancestor(self, a: int, b: int) -> bool:
        while b is not None:
            if b == a:
                return True
            b = self.nodes[b].parent
        return False

    def leaves(self, status=None) -> list[int]:
        return [n.id for n in self.nodes if not n.children and (status is None or n.status == status)]

    def sat_leaves(self) -> list[int]:
        return [n.id for n in self.nodes if n.status == SAT_LEAF]

    def buds_of(self, c: int) -> list[int]:
        return sorted(b for b, bl in self.backlinks.items() if bl.companion == c)

    def companions(self) -> list[int]:
        return sorted({bl.companion for bl in self.backlinks.values()})

    def edges(self):
        for n in self.nodes:
            if n.parent is not None:
                yield n.parent, n.label, n.id

    def root_vars(self) -> tuple:
        return self.nodes[self.root].tracked

    def subtree(self, i: int) -> list[int]:
        out = [i]
        k = 0
        while k < len(out):
            out.extend(self.nodes[out[k]].children)
            k += 1
        return out

    def cycle_path(self, bud: int) -> list[int]:
        """Nodes from the companion down to the bud, both included."""
        c = self.backlinks[bud].companion
        p = self.path(bud)
        return p[p.index(c):]

    def is_closed(self) -> bool:
        return all(n.status != OPEN for n in self.nodes)


# ---------------------------------------------------------------- primitives

def match(e: WordEquation) -> WordEquation:
    lhs, rhs = e.lhs, e.rhs
    i = 0
    while i < len(lhs) and i < len(rhs) and lhs[i] == rhs[i]:
        i += 1
    if i == 0:
        return e
    return WordEquation(lhs[i:], rhs[i:])


def _unsat_shape(e: WordEquation) -> bool:
    l, r = e.lhs, e.rhs
    if l and r:
        return l[0].is_letter and r[0].is_letter and l[0] != r[0]
    side = l or r
    return bool(side) and side[0].is_letter


def classify(es) -> str:
    eqs = [e for e in es if not e.trivial]
    if not eqs:
        return SAT_LEAF
    if any(_unsat_shape(e) for e in eqs):
        return UNSAT_LEAF
    return OPEN


def complete_substs(e: WordEquation, names: FreshNames) -> list[Substitution]:
    """The case split on the head symbols of a match-normalised equation."""
    l, r = e.lhs, e.rhs
    if e.trivial or _unsat_shape(e):
        raise NotReducible(str(e))
    if not l or not r:
        x = (l or r)[0]
        return [Substitution(x, ())]
    hl, hr = l[0], r[0]
    if hl == hr:
        raise NotReducible(f"{e} is not match-normalised")
    if hl.is_var and hr.is_var:
        x, y = hl, hr
        x1 = names.fresh(x)
        y1 = names.fresh(y)
        return [Substitution(x, ()), Substitution(x, (y, x1)),
                Substitution(y, ()), Substitution(y, (x, y1))]
    x, c = (hl, hr) if hl.is_var else (hr, hl)
    return [Substitution(x, ()), Substitution(x, (c, names.fresh(x)))]


def complete(e: WordEquation, names: FreshNames | None = None) -> list[tuple[WordEquation, list]]:
    names = names or FreshNames(v.name for v in e.vars())
    return [(match(e.subst(s)), [s]) for s in complete_substs(e, names)]


def step_system(system: Sequence[WordEquation], sigmas: Iterable[Substitution]) -> tuple:
    out = list(system)
    for s in sigmas:
        out = [e.subst(s) for e in out]
    out = [match(e) for e in out]
    return tuple(e for e in out if not e.trivial)


def normalize_system(es) -> tuple:
    return tuple(e for e in (match(e) for e in es) if not e.trivial)


def _renaming(bud: tuple, comp: tuple, renameable) -> dict | None:
    if len(bud) != len(comp):
        return None
    rho: dict[Symbol, Symbol] = {}
    used: dict[Symbol, Symbol] = {}
    for eb, ec in zip(bud, comp):
        if len(eb.lhs) != len(ec.lhs) or len(eb.rhs) != len(ec.rhs):
            return None
        for sb, sc in zip(eb.lhs + eb.rhs, ec.lhs + ec.rhs):
            if sb.is_letter or sc.is_letter:
                if sb != sc:
                    return None
                continue
            if sb in rho:
                if rho[sb] != sc:
                    return None
                continue
            if not renameable(sb) and sb != sc:
                return None
            if sc in used and used[sc] != sb:
                return None
            rho[sb] = sc
            used[sc] = sb
    return rho


def link_back(tree: ReductionTree, node: int):
    """Nearest strict ancestor equal to ``node`` up to renaming of the variables
    introduced below it, provided the cycle makes progress."""
    n = tree[node]
    for anc in tree.ancestors(node):
        a = tree[anc]
        if len(a.system) != len(n.system):
            continue

        def renameable(v, _d=a.depth):
            c = tree.created.get(v)
            return c is not None and tree[c].depth > _d

        rho = _renaming(n.system, a.system, renameable)
        if rho is None:
            continue
        p = tree.path(node)
        seg = p[p.index(anc) + 1:]
        if not any(s.progressing for i in seg for s in tree[i].label):
            continue
        sigma = tuple(Substitution(b, (c,)) for b, c in rho.items() if b != c)
        return anc, sigma
    return None


def _tracked_after(tracked: tuple, sigmas: Sequence[Substitution]) -> tuple:
    out = list(tracked)
    for s in sigmas:
        if s.target in out:
            i = out.index(s.target)
            out.pop(i)
            for v in term_vars(s.repl):
                if v not in out:
                    out.insert(i, v)
                    i += 1
        else:
            for v in term_vars(s.repl):
                if v not in out:
                    out.append(v)
    return tuple(out)


def build_tree(es, budget: Budget | None = None, names: FreshNames | None = None,
               alphabet: Iterable[str] = ()) -> ReductionTree:
    budget = budget or Budget()
    if isinstance(es, WordEquation):
        es = EquationSystem((es,))
    system = normalize_system(es)
    root_vars = EquationSystem(tuple(es)).vars()
    if names is None:
        names = FreshNames(v.name for v in root_vars)
    letters = set(alphabet)
    for e in es:
        letters |= {s.name for s in e.lhs + e.rhs if s.is_letter}
    tree = ReductionTree(names=names, alphabet=tuple(sorted(letters)))
    tree.add(system, OPEN, None, (), tuple(root_vars))
    deadline = time.monotonic() + budget.wall_time
    queue = deque([0])
    while queue:
        i = queue.popleft()
        n = tree[i]
        status = classify(n.system)
        if status != OPEN:
            n.status = status
            continue
        lb = link_back(tree, i)
        if lb is not None:
            n.status = BUD
            tree.backlinks[i] = BackLink(lb[0], lb[1], REDUCE)
            continue
        if n.depth >= budget.max_depth:
            raise BudgetExhausted("max-depth", tree)
        if len(tree) >= budget.max_nodes:
            raise BudgetExhausted("max-nodes", tree)
        if time.monotonic() > deadline:
            raise BudgetExhausted("timeout", tree)
        n.status = INTERIOR
        for s in complete_substs(n.system[0], names):
            child = step_system(n.system, [s])
            c = tree.add(child, OPEN, i, (s,), _tracked_after(n.tracked, [s]))
            queue.append(c.id)
    return tree


# ---------------------------------------------------------------- post-processing

def postpro(tree: ReductionTree, alphabet: Iterable[str] | None = None) -> ReductionTree:
    """Expand every satisfiable leaf that still carries unconstrained variables
    into a subtree enumerating them: one ε base edge and one letter cycle per
    letter, chaining through the variables in order."""
    letters = sorted(set(alphabet) if alphabet is not None else tree.alphabet)
    tree.alphabet = tuple(sorted(set(tree.alphabet) | set(letters)))
    for leaf in list(tree.sat_leaves()):
        cur = leaf
        while tree[cur].tracked:
            node = tree[cur]
            v = node.tracked[0]
            rest = node.tracked[1:]
            node.status = INTERIOR
            base = tree.add((), SAT_LEAF, cur, (Substitution(v, ()),), rest)
            for c in letters:
                v1 = tree.names.fresh(v)
                bud = tree.add((), BUD, cur, (Substitution(v, (letter(c), v1)),), (v1,) + rest)
                tree.backlinks[bud.id] = BackLink(cur, (Substitution(v1, (v,)),), FREE)
            cur = base.id
    return tree


# ---------------------------------------------------------------- walks and models

def walk_model(tree: ReductionTree, walk: Sequence[int]) -> dict:
    """Evaluate a root-to-leaf walk (tree edges plus bud->companion jumps)
    backwards into an assignment of the root variables."""
    last = tree[walk[-1]]
    env = {v: "" for v in last.tracked}
    for k in range(len(walk) - 2, -1, -1):
        p, q = tree[walk[k]], tree[walk[k + 1]]
        new = {}
        if q.parent == p.id:
            cur = dict(env)
            for s in reversed(q.label):
                cur[s.target] = "".join(sym.name if sym.is_letter else cur.get(sym, "")
                                        for sym in s.repl)
            for v in p.tracked:
                new[v] = cur.get(v, "")
        elif p.id in tree.backlinks and tree.backlinks[p.id].companion == q.id:
            ren = {s.target: s.repl[0] for s in tree.backlinks[p.id].renaming}
            for v in p.tracked:
                src = ren.get(v, v)
                new[v] = env.get(src, "")
        else:
            raise ValueError(f"{p.id} -> {q.id} is not a step of the tree")
        env = new
    return {v: env.get(v, "") for v in tree[walk[0]].tracked}


def check_model(es, model: dict) -> bool:
    for e in es:
        l = "".join(s.name if s.is_letter else model.get(s, "") for s in e.lhs)
        r = "".join(s.name if s.is_letter else model.get(s, "") for s in e.rhs)
        if l != r:
            return False
    return True


@dataclass
class TraceStep:
    node: int
    labels: tuple
    cycles: tuple = ()  # (bud, labels along the cycle, renaming)

    def __str__(self):
        s = ",".join(map(str, self.labels))
        if self.cycles:
            s += " {" + "; ".join(
                f"{','.join(map(str, ls))} ↺ {','.join(map(str, r))}" for _, ls, r in self.cycles) + "}"
        return s


def solution_traces(tree: ReductionTree, leaf: int) -> list[TraceStep]:
    out = []
    for i in tree.path(leaf):
        n = tree[i]
        cycles = []
        for b in tree.buds_of(i):
            seg = tree.cycle_path(b)[1:]
            labels = tuple(s for j in seg for s in tree[j].label)
            cycles.append((b, labels, tree.backlinks[b].renaming))
        out.append(TraceStep(i, n.label, tuple(cycles)))
    return out


def trace_labels(tree: ReductionTree, leaf: int) -> list[Substitution]:
    return [s for i in tree.path(leaf) for s in tree[i].label]


def walk_with_counts(tree: ReductionTree, leaf: int, counts: dict | None = None) -> list[int]:
    counts = counts or {}
    walk = []
    for i in tree.path(leaf):
        walk.append(i)
        for b in tree.buds_of(i):
            seg = tree.cycle_path(b)[1:]
            for _ in range(counts.get(b, 0)):
                walk.extend(seg)
                walk.append(i)
    return walk


def extract_model(tree: ReductionTree, leaf: int, counts: dict | None = None,
                  root_system=None) -> dict:
    if tree[leaf].status != SAT_LEAF:
        raise ValueError("model extraction needs a satisfiable leaf")
    model = walk_model(tree, walk_with_counts(tree, leaf, counts))
    system = root_system if root_system is not None else tree[tree.root].system
    if not check_model(system, model):
        raise InternalUnsound(f"extracted model {model} violates {EquationSystem(tuple(system))}")
    return model


def enumerate_walks(tree: ReductionTree, max_len: int, limit: int = 100000):
    """Root-to-SatLeaf walks in order of increasing length."""
    queue = deque([(tree.root,)])
    seen = 0
    while queue:
        w = queue.popleft()
        n = tree[w[-1]]
        if n.status == SAT_LEAF:
            yield list(w)
            seen += 1
            if seen >= limit:
                return
            continue
        if len(w) >= max_len:
            continue
        if n.id in tree.backlinks:
            queue.append(w + (tree.backlinks[n.id].companion,))
            continue
        for c in n.children:
            if tree[c].status != UNSAT_LEAF:
                queue.append(w + (c,))


# ---------------------------------------------------------------- checks

def check_tree(tree: ReductionTree, original_system=None) -> list[str]:
    """Structural invariants; returns a list of violations."""
    bad = []
    for p, label, c in tree.edges():
        if tree[c].status == OPEN:
            continue
        derived = step_system(tree[p].system, label)
        if derived != tree[c].system:
            bad.append(f"edge {p}->{c}: {EquationSystem(derived)} != {tree[c]}")
    for b, bl in tree.backlinks.items():
        if not tree.is_ancestor(bl.companion, b) or bl.companion == b:
            bad.append(f"back-link {b}->{bl.companion} does not target a strict ancestor")
            continue
        ren = tuple(bl.renaming)
        got = step_system(tree[b].system, ren) if ren else tree[b].system
        if got != tree[bl.companion].system:
            bad.append(f"back-link {b}->{bl.companion}: renamed bud != companion")
        seg = tree.cycle_path(b)[1:]
        if bl.kind != WIDEN and not any(s.progressing for i in seg for s in tree[i].label):
            bad.append(f"back-link {b}->{bl.companion}: no progressing substitution")
    return bad


def cycle_lengths(tree: ReductionTree, kinds=(REDUCE,)) -> list[tuple[int, int, int]]:
    """(bud, cycle length in edges, N of the companion) per back-link."""
    out = []
    for b, bl in tree.backlinks.items():
        if bl.kind in kinds:
            out.append((b, len(tree.cycle_path(b)) - 1, EquationSystem(tree[bl.companion].system).N))
    return out


# ---------------------------------------------------------------- canonical forms

def canonical_system(system) -> str:
    ren = {}
    parts = []
    for e in system:
        sides = []
        for side in (e.lhs, e.rhs):
            buf = []
            for s in side:
                if s.is_var:
                    if s not in ren:
                        ren[s] = f"V{len(ren)}"
                    buf.append(ren[s])
                else:
                    buf.append(s.name)
            sides.append(".".join(buf) or "ε")
        parts.append("=".join(sides))
    return " & ".join(parts) or "ε=ε"


def canonical_nodes(tree: ReductionTree) -> list[str]:
    return sorted(canonical_system(n.system) for n in tree.nodes)


def _shape_labels(tree, i, ren):
    out = []
    for s in tree[i].label:
        out.append((s.shape, tuple(x.name if x.is_letter else "v" for x in s.repl)))
    return tuple(out)


def canonical_shape(tree: ReductionTree, i: int | None = None):
    """Renaming-invariant structure: (system, status, back-link depth offset,
    child shapes in order)."""
    i = tree.root if i is None else i
    n = tree[i]
    link = None
    if i in tree.backlinks:
        link = n.depth - tree[tree.backlinks[i].companion].depth
    return (canonical_system(n.system), n.status, link,
            tuple((_shape_labels(tree, c, None), canonical_shape(tree, c)) for c in n.children))


# ---------------------------------------------------------------- dumps

_COLORS = {SAT_LEAF: "green", UNSAT_LEAF: "red", BUD: "blue", INTERIOR: "black", OPEN: "gray"}


def to_dot(tree: ReductionTree) -> str:
    lines = ["digraph reduction_tree {", '  node [shape=box, fontname="monospace"];']
    for n in tree.nodes:
        text = str(n).replace('"', '\\"')
        lines.append(f'  n{n.id} [label="e{n.id}: {text}", color={_COLORS[n.status]}];')
    for p, label, c in tree.edges():
        lab = ",".join(map(str, label))
        lines.append(f'  n{p} -> n{c} [label="{lab}"];')
    for b, bl in sorted(tree.backlinks.items()):
        lab = ",".join(map(str, bl.renaming))
        lines.append(f'  n{b} -> n{bl.companion} [style=dashed, label="{lab}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def describe(tree: ReductionTree) -> str:
    out = []
    for n in tree.nodes:
        lab = ",".join(map(str, n.label))
        extra = ""
        if n.id in tree.backlinks:
            bl = tree.backlinks[n.id]
            extra = f" -> e{bl.companion} {','.join(map(str, bl.renaming))}"
        out.append(f"{'  ' * n.depth}e{n.id} {lab} {n} [{n.status}]{extra}")
    return "\n".join(out)
