"""Search for a single-equation encoding of e1 ∨ e2 in two fresh unknowns.

Candidate equations L = R are built from the sides u, v (of e1), p, q (of e2),
two fresh variables X, Y and letters a, b. A candidate is kept only if, on a
battery of ground instances, the equation in X, Y is solvable exactly when
u = v or p = q (decided with the reduction-tree solver, which terminates on
quadratic equations).
"""
from __future__ import annotations

import argparse
import itertools
import json
import random
import sys
import time
from dataclasses import dataclass
from multiprocessing import Pool

from kepler.ast import EquationSystem, WordEquation, letter, var
from kepler.reduce import Budget, BudgetExhausted, build_tree

X, Y = var("X"), var("Y")


@dataclass
class SearchConfig:
    max_letters: int = 2
    instances: int = 40
    seed: int = 7
    workers: int = 4
    budget_nodes: int = 4000


def _word(rng, n):
    return "".join(rng.choice("ab") for _ in range(n))


def battery(cfg: SearchConfig):
    rng = random.Random(cfg.seed)
    out = []
    words = [""] + ["".join(w) for k in (1, 2, 3) for w in itertools.product("ab", repeat=k)]
    while len(out) < cfg.instances:
        u, v, p, q = (rng.choice(words) for _ in range(4))
        kind = rng.randrange(3)
        if kind == 0:
            v = u
        elif kind == 1:
            q = p
        out.append((u, v, p, q, u == v or p == q))
    return out


def instantiate(tmpl, inst):
    u, v, p, q, _ = inst
    sub = {"u": u, "v": v, "p": p, "q": q}

    def side(s):
        t = []
        for tok in s:
            if tok in sub:
                t.extend(letter(c) for c in sub[tok])
            elif tok == "X":
                t.append(X)
            elif tok == "Y":
                t.append(Y)
            else:
                t.append(letter(tok))
        return tuple(t)

    return WordEquation(side(tmpl[0]), side(tmpl[1]))


def decide(e, nodes):
    try:
        t = build_tree(EquationSystem((e,)), Budget(max_depth=200, max_nodes=nodes, wall_time=2.0))
    except BudgetExhausted:
        return None
    return bool(t.sat_leaves())


def candidates(cfg: SearchConfig):
    letters = ["a", "b"]
    for extra in range(cfg.max_letters + 1):
        for lets in itertools.product(letters, repeat=extra):
            base = ["u", "p", "X", "Y"] + list(lets)
            for perm in set(itertools.permutations(base)):
                L = perm
                ren = {"u": "v", "p": "q", "X": "Y", "Y": "X"}
                for swap in (True, False):
                    R = tuple(ren.get(t, t) if (swap or t not in "XY") else t for t in L)
                    for rev in (False, True):
                        RR = R[::-1] if rev else R
                        yield (L, RR)


def check(args):
    tmpl, bat, nodes = args
    for inst in bat:
        got = decide(instantiate(tmpl, inst), nodes)
        if got is None or got != inst[4]:
            return None
    return tmpl


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--max-letters", type=int, default=2)
    ap.add_argument("--instances", type=int, default=40)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--out", default="merge_search.json")
    a = ap.parse_args(argv)
    cfg = SearchConfig(max_letters=a.max_letters, instances=a.instances, workers=a.workers)
    bat = battery(cfg)
    cands = sorted(set(candidates(cfg)))
    t0 = time.time()
    found = []
    with Pool(cfg.workers) as pool:
        for r in pool.imap_unordered(check, [(c, bat, cfg.budget_nodes) for c in cands], chunksize=16):
            if r is not None:
                found.append(r)
                print("candidate:", " ".join(r[0]), "=", " ".join(r[1]), flush=True)
    summary = {"searched": len(cands), "found": [[list(l), list(r)] for l, r in found],
               "instances": len(bat), "seconds": round(time.time() - t0, 1)}
    with open(a.out, "w") as fh:
        json.dump(summary, fh, indent=1)
    print(json.dumps({k: v for k, v in summary.items() if k != "found"}), f"found={len(found)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
