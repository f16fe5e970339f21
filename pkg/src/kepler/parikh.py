"""Parikh images of context-free grammars as existential Presburger formulas,
via the communication-free Petri net of the grammar."""
from __future__ import annotations

from dataclasses import dataclass

from .ast import (TRUE, Exists, Formula, Lin, Symbol, conj, disj, eq, ge, gt,
                  lenvar, letter)
from .grammar import Cfg


class UnknownVariable(KeyError):
    pass


@dataclass
class PetriNet:
    places: tuple                # nonterminals first, then letters
    transitions: list            # productions (lhs, rhs)
    pre: list                    # per transition: dict place -> weight
    post: list
    marking: dict

    def communication_free(self) -> bool:
        return all(len(p) <= 1 and all(w == 1 for w in p.values()) for p in self.pre)


def cfg_to_net(g: Cfg) -> PetriNet:
    nts = sorted(g.nonterminals, key=lambda s: s.name)
    letters = sorted({s for _, r in g.productions for s in r if s.is_letter}
                     | {letter(c) for c in g.alphabet},
                     key=lambda s: s.name)
    pre, post = [], []
    for l, r in g.productions:
        pre.append({l: 1})
        out: dict = {}
        for s in r:
            out[s] = out.get(s, 0) + 1
        post.append(out)
    marking = {p: 0 for p in nts + letters}
    marking[g.start] = 1
    return PetriNet(tuple(nts + letters), list(g.productions), pre, post, marking)


def _yname(k: int) -> str:
    return f"y{k}"


def _zname(s: Symbol) -> str:
    return f"z_{s.name}"


def _xname(s: Symbol) -> str:
    return f"x_{s.name}"


def net_to_presburger(net: PetriNet, g: Cfg, total: Lin | None = None) -> Formula:
    """The existential Parikh formula of the net. ``total`` stands for |s0|;
    without it the formula constrains the letter counts only."""
    ys = [_yname(k) for k in range(1, len(net.transitions) + 1)]
    Y = [Lin.v(y) for y in ys]
    nts = [p for p in net.places if p.is_var]
    letters = [p for p in net.places if p.is_letter]
    parts: list[Formula] = [ge(y, 0) for y in Y]
    # letter counts
    for c in letters:
        parts.append(ge(Lin.v(_xname(c)), 0))
    # flow balance per nonterminal
    for X in nts:
        flow = Lin.c(net.marking.get(X, 0))
        for k, t in enumerate(net.transitions):
            flow = flow + Y[k] * net.post[k].get(X, 0) - Y[k] * net.pre[k].get(X, 0)
        parts.append(eq(flow, 0))
    for c in letters:
        cnt = Lin.c(0)
        for k in range(len(net.transitions)):
            cnt = cnt + Y[k] * net.post[k].get(c, 0)
        parts.append(eq(Lin.v(_xname(c)), cnt))
        parts.append(disj(eq(Lin.v(_xname(c)), 0), gt(Lin.v(_zname(c)), 0)))
    # every rule that fires needs its left-hand side reached
    for X in nts:
        fired = Lin.c(0)
        for k, t in enumerate(net.transitions):
            if t[0] == X:
                fired = fired + Y[k]
        if fired.coeffs:
            parts.append(disj(eq(fired, 0), gt(Lin.v(_zname(X)), 0)))
    # distances from the start along firing rules
    for s in net.places:
        z = Lin.v(_zname(s))
        opts = [eq(z, 0)]
        if s == g.start:
            opts.append(eq(z, 1))
        for k, t in enumerate(net.transitions):
            if net.post[k].get(s, 0) > 0:
                zl = Lin.v(_zname(t[0]))
                opts.append(conj(eq(z, zl + 1), gt(Y[k], 0), gt(zl, 0)))
        parts.append(disj(*opts))
        parts.append(ge(z, 0))
    if total is not None:
        s = Lin.c(0)
        for c in letters:
            s = s + Lin.v(_xname(c))
        parts.append(eq(total, s))
    bound = ys + [_xname(c) for c in letters] + [_zname(p) for p in net.places]
    return Exists(tuple(bound), conj(*parts))


def parikh_formula(g: Cfg, total: Lin | None = None) -> Formula:
    net = cfg_to_net(g)
    assert net.communication_free()
    return net_to_presburger(net, g, total)


def length_constraint(g: Cfg, vars) -> Formula:
    nts = g.nonterminals
    parts = []
    for v in vars:
        if v not in nts:
            raise UnknownVariable(v.name if isinstance(v, Symbol) else v)
        sub = g.restart(v)
        parts.append(parikh_formula(sub, Lin.v(lenvar(v))))
    return conj(*parts) if parts else TRUE
