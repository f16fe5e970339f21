"""Regex compilation to minimal complete DFAs and the usual closure operations."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import product as iproduct
from typing import Iterable, Sequence

from .ast import (AnyChar, Chr, Complement, Concat, Empty, Epsilon, Intersect,
                  Regex, Star, Union, Word)


@dataclass(frozen=True)
class Dfa:
    """Complete DFA; states are 0..n-1 and delta[q][i] is the successor of q on
    alphabet[i]."""
    alphabet: tuple
    delta: tuple
    initial: int
    accepting: frozenset

    @property
    def n_states(self) -> int:
        return len(self.delta)

    def step(self, q: int, c: str) -> int:
        return self.delta[q][self.alphabet.index(c)]

    def run(self, w: str, q: int | None = None) -> int | None:
        q = self.initial if q is None else q
        idx = {c: i for i, c in enumerate(self.alphabet)}
        for c in w:
            if c not in idx:
                return None
            q = self.delta[q][idx[c]]
        return q

    def reachable(self) -> set[int]:
        seen = {self.initial}
        todo = [self.initial]
        while todo:
            q = todo.pop()
            for r in self.delta[q]:
                if r not in seen:
                    seen.add(r)
                    todo.append(r)
        return seen

    def coreachable(self) -> set[int]:
        rev: dict[int, set[int]] = {q: set() for q in range(self.n_states)}
        for q, row in enumerate(self.delta):
            for r in row:
                rev[r].add(q)
        seen = set(self.accepting)
        todo = list(seen)
        while todo:
            q = todo.pop()
            for p in rev[q]:
                if p not in seen:
                    seen.add(p)
                    todo.append(p)
        return seen

    def live_states(self) -> set[int]:
        return self.reachable() & self.coreachable()

    @property
    def m(self) -> int:
        """Number of useful states (reachable and co-reachable); the sink is not counted."""
        return len(self.live_states())


def accepts(d: Dfa, w: str) -> bool:
    q = d.run(w)
    return q is not None and q in d.accepting


def is_empty(d: Dfa) -> bool:
    return not (d.reachable() & d.accepting)


# ---------------------------------------------------------------- NFA plumbing

class _Nfa:
    def __init__(self):
        self.n = 0
        self.eps: dict[int, set[int]] = {}
        self.trans: dict[int, dict[str, set[int]]] = {}

    def new(self) -> int:
        q = self.n
        self.n += 1
        self.eps[q] = set()
        self.trans[q] = {}
        return q

    def add(self, p, c, q):
        if c is None:
            self.eps[p].add(q)
        else:
            self.trans[p].setdefault(c, set()).add(q)

    def closure(self, states: Iterable[int]) -> frozenset:
        seen = set(states)
        todo = list(seen)
        while todo:
            q = todo.pop()
            for r in self.eps[q]:
                if r not in seen:
                    seen.add(r)
                    todo.append(r)
        return frozenset(seen)


def _thompson(r: Regex, nfa: _Nfa, alphabet: tuple) -> tuple[int, int]:
    s, f = nfa.new(), nfa.new()
    if isinstance(r, Empty):
        pass
    elif isinstance(r, Epsilon):
        nfa.add(s, None, f)
    elif isinstance(r, Chr):
        nfa.add(s, r.c, f)
    elif isinstance(r, AnyChar):
        for c in alphabet:
            nfa.add(s, c, f)
    elif isinstance(r, Word):
        cur = s
        for c in r.w:
            nxt = nfa.new()
            nfa.add(cur, c, nxt)
            cur = nxt
        nfa.add(cur, None, f)
    elif isinstance(r, Concat):
        s1, f1 = _thompson(r.left, nfa, alphabet)
        s2, f2 = _thompson(r.right, nfa, alphabet)
        nfa.add(s, None, s1)
        nfa.add(f1, None, s2)
        nfa.add(f2, None, f)
    elif isinstance(r, Union):
        for sub in (r.left, r.right):
            s1, f1 = _thompson(sub, nfa, alphabet)
            nfa.add(s, None, s1)
            nfa.add(f1, None, f)
    elif isinstance(r, Star):
        s1, f1 = _thompson(r.inner, nfa, alphabet)
        nfa.add(s, None, s1)
        nfa.add(f1, None, s1)
        nfa.add(s, None, f)
        nfa.add(f1, None, f)
    elif isinstance(r, (Complement, Intersect)):
        # built structurally as a DFA, then embedded back as an NFA fragment
        d = regex_to_dfa(r, alphabet)
        base = nfa.n
        for _ in range(d.n_states):
            nfa.new()
        for q, row in enumerate(d.delta):
            for i, t in enumerate(row):
                nfa.add(base + q, d.alphabet[i], base + t)
        nfa.add(s, None, base + d.initial)
        for q in d.accepting:
            nfa.add(base + q, None, f)
    else:
        raise TypeError(f"unknown regex node {r!r}")
    return s, f


def _subset(nfa: _Nfa, start: int, final: int, alphabet: tuple) -> Dfa:
    init = nfa.closure([start])
    index = {init: 0}
    order = [init]
    delta = []
    i = 0
    while i < len(order):
        cur = order[i]
        row = []
        for c in alphabet:
            tgt = set()
            for q in cur:
                tgt |= nfa.trans[q].get(c, set())
            nxt = nfa.closure(tgt)
            if nxt not in index:
                index[nxt] = len(order)
                order.append(nxt)
            row.append(index[nxt])
        delta.append(tuple(row))
        i += 1
    acc = frozenset(k for k, st in enumerate(order) if final in st)
    return Dfa(alphabet, tuple(delta), 0, acc)


def minimize(d: Dfa, classes: Sequence[frozenset] | None = None) -> Dfa:
    """Hopcroft partition refinement on the reachable part.

    ``classes`` optionally gives an initial partition key per acceptance set
    (used for multi-language product automata)."""
    reach = sorted(d.reachable())
    remap = {q: i for i, q in enumerate(reach)}
    n = len(reach)
    k = len(d.alphabet)
    delta = [[remap[d.delta[q][a]] for a in range(k)] for q in reach]
    acc_sets = [frozenset(remap[q] for q in d.accepting if q in remap)]
    if classes:
        acc_sets = [frozenset(remap[q] for q in c if q in remap) for c in classes]
    sig: dict[tuple, set[int]] = {}
    for q in range(n):
        key = tuple(q in a for a in acc_sets)
        sig.setdefault(key, set()).add(q)
    partition = [frozenset(b) for b in sig.values()]
    inv = [[[] for _ in range(k)] for _ in range(n)]
    for q in range(n):
        for a in range(k):
            inv[delta[q][a]][a].append(q)
    work = set(range(len(partition)))
    blocks = list(partition)
    while work:
        bi = work.pop()
        splitter = blocks[bi]
        for a in range(k):
            pre = set()
            for q in splitter:
                pre.update(inv[q][a])
            if not pre:
                continue
            new_blocks = []
            for j, blk in enumerate(blocks):
                inter = blk & pre
                if inter and inter != blk:
                    rest = blk - inter
                    blocks[j] = frozenset(inter)
                    new_blocks.append((j, frozenset(rest)))
            for j, rest in new_blocks:
                blocks.append(rest)
                nj = len(blocks) - 1
                if j in work:
                    work.add(nj)
                else:
                    work.add(j if len(blocks[j]) <= len(rest) else nj)
    owner = {}
    # canonical numbering by BFS from the initial state for determinism
    for j, blk in enumerate(blocks):
        for q in blk:
            owner[q] = j
    start = owner[remap[d.initial]]
    order = {start: 0}
    queue = deque([start])
    rep = {j: min(blk) for j, blk in enumerate(blocks)}
    while queue:
        j = queue.popleft()
        for a in range(k):
            t = owner[delta[rep[j]][a]]
            if t not in order:
                order[t] = len(order)
                queue.append(t)
    new_delta = [None] * len(order)
    for j, idx in order.items():
        new_delta[idx] = tuple(order[owner[delta[rep[j]][a]]] for a in range(k))
    acc = frozenset(order[owner[remap[q]]] for q in d.accepting if q in remap)
    return Dfa(d.alphabet, tuple(new_delta), 0, acc)


def regex_to_dfa(r: Regex, alphabet: Iterable[str]) -> Dfa:
    alphabet = tuple(sorted(set(alphabet)))
    if isinstance(r, Complement):
        return complement(regex_to_dfa(r.inner, alphabet))
    if isinstance(r, Intersect):
        return product_intersection(regex_to_dfa(r.left, alphabet), regex_to_dfa(r.right, alphabet))
    nfa = _Nfa()
    s, f = _thompson(r, nfa, alphabet)
    return minimize(_subset(nfa, s, f, alphabet))


def complement(d: Dfa) -> Dfa:
    return minimize(Dfa(d.alphabet, d.delta, d.initial,
                        frozenset(range(d.n_states)) - d.accepting))


def _product(ds: Sequence[Dfa]) -> tuple[Dfa, list[tuple]]:
    alphabet = ds[0].alphabet
    for d in ds:
        if d.alphabet != alphabet:
            raise ValueError("product requires a shared alphabet")
    init = tuple(d.initial for d in ds)
    index = {init: 0}
    order = [init]
    delta = []
    i = 0
    while i < len(order):
        cur = order[i]
        row = []
        for a in range(len(alphabet)):
            nxt = tuple(d.delta[q][a] for d, q in zip(ds, cur))
            if nxt not in index:
                index[nxt] = len(order)
                order.append(nxt)
            row.append(index[nxt])
        delta.append(tuple(row))
        i += 1
    return Dfa(alphabet, tuple(delta), 0, frozenset()), order


def product_intersection(d1: Dfa, d2: Dfa) -> Dfa:
    prod, order = _product([d1, d2])
    acc = frozenset(i for i, (p, q) in enumerate(order) if p in d1.accepting and q in d2.accepting)
    return minimize(Dfa(prod.alphabet, prod.delta, 0, acc))


def product_union(d1: Dfa, d2: Dfa) -> Dfa:
    prod, order = _product([d1, d2])
    acc = frozenset(i for i, (p, q) in enumerate(order) if p in d1.accepting or q in d2.accepting)
    return minimize(Dfa(prod.alphabet, prod.delta, 0, acc))


def joint_automaton(ds: Sequence[Dfa]) -> tuple[Dfa, list[frozenset]]:
    """One automaton that recognises every d_i with its own accepting set.

    Minimised against the tuple of acceptance predicates; returns the automaton
    and the accepting set of each input language."""
    prod, order = _product(ds)
    accs = [frozenset(i for i, st in enumerate(order) if st[k] in d.accepting)
            for k, d in enumerate(ds)]
    base = minimize(Dfa(prod.alphabet, prod.delta, 0, frozenset()), classes=accs)
    # recover the per-language accepting sets on the quotient
    per = []
    for k, d in enumerate(ds):
        acc = set()
        for q in range(base.n_states):
            # any word reaching q decides membership in language k
            w = _some_word_to(base, q)
            if accepts(d, w):
                acc.add(q)
        per.append(frozenset(acc))
    return base, per


def _some_word_to(d: Dfa, target: int) -> str:
    prev = {d.initial: None}
    queue = deque([d.initial])
    while queue:
        q = queue.popleft()
        if q == target:
            break
        for a, r in enumerate(d.delta[q]):
            if r not in prev:
                prev[r] = (q, d.alphabet[a])
                queue.append(r)
    out = []
    q = target
    while prev[q] is not None:
        q, c = prev[q]
        out.append(c)
    return "".join(reversed(out))


def joint_live_count(d: Dfa, accs: Sequence[frozenset]) -> int:
    union = frozenset().union(*accs) if accs else frozenset()
    return Dfa(d.alphabet, d.delta, d.initial, union).m


def with_endpoints(d: Dfa, initial: int, accepting: Iterable[int]) -> Dfa:
    return minimize(Dfa(d.alphabet, d.delta, initial, frozenset(accepting)))


# ---------------------------------------------------------------- DFA -> regex

def _mk_union(a, b):
    if a is None:
        return b
    if b is None:
        return a
    if a == b:
        return a
    return Union(a, b)


def _mk_concat(a, b):
    if a is None or b is None:
        return None
    if isinstance(a, Epsilon):
        return b
    if isinstance(b, Epsilon):
        return a
    if isinstance(a, (Chr, Word)) and isinstance(b, (Chr, Word)):
        return Word(_w(a) + _w(b))
    return Concat(a, b)


def _w(r):
    return r.c if isinstance(r, Chr) else r.w


def _mk_star(a):
    if a is None or isinstance(a, Epsilon):
        return Epsilon()
    if isinstance(a, Star):
        return a
    return Star(a)


def dfa_to_regex(d: Dfa) -> Regex:
    """State elimination over the live part; None stands for ∅ internally."""
    live = d.live_states()
    if d.initial not in live:
        return Empty()
    states = sorted(live)
    S, F = "S", "F"
    edge: dict[tuple, Regex | None] = {}

    def add(p, q, r):
        edge[(p, q)] = _mk_union(edge.get((p, q)), r)

    add(S, d.initial, Epsilon())
    for q in states:
        if q in d.accepting:
            add(q, F, Epsilon())
        for a, t in enumerate(d.delta[q]):
            if t in live:
                add(q, t, Chr(d.alphabet[a]))
    nodes = [S] + states + [F]
    for k in states:
        loop = _mk_star(edge.get((k, k)))
        ins = [p for p in nodes if p != k and edge.get((p, k)) is not None]
        outs = [q for q in nodes if q != k and edge.get((k, q)) is not None]
        for p in ins:
            for q in outs:
                add(p, q, _mk_concat(_mk_concat(edge[(p, k)], loop), edge[(k, q)]))
        nodes.remove(k)
        for key in [key for key in edge if k in key]:
            del edge[key]
    r = edge.get((S, F))
    return Empty() if r is None else r


def universal(alphabet: Iterable[str]) -> Dfa:
    alphabet = tuple(sorted(set(alphabet)))
    return Dfa(alphabet, (tuple(0 for _ in alphabet),), 0, frozenset({0}))


def words(alphabet: Iterable[str], max_len: int):
    alphabet = sorted(set(alphabet))
    for n in range(max_len + 1):
        for t in iproduct(alphabet, repeat=n):
            yield "".join(t)
