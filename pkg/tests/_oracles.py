"""Independent reference implementations used by the tests.

Nothing here imports the kernels; truth values come from plain recursion
and itertools, closures from repeated boolean-matrix squaring.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from atomkg.logic import And, Atom, Implies, Not, Or, variables

VARS3 = ("A", "B", "C")


def holds(phi, env: dict[str, bool]) -> bool:
    if isinstance(phi, Atom):
        return env[phi.name]
    if isinstance(phi, Not):
        return not holds(phi.child, env)
    a, b = holds(phi.left, env), holds(phi.right, env)
    if isinstance(phi, And):
        return a and b
    if isinstance(phi, Or):
        return a or b
    return (not a) or b


def assignments(names):
    for bits in itertools.product((False, True), repeat=len(names)):
        yield dict(zip(names, bits))


def models(phi, names) -> frozenset[tuple[bool, ...]]:
    return frozenset(tuple(env[n] for n in names) for env in assignments(names) if holds(phi, env))


def info_ratio(phi, names) -> Fraction | None:
    """|worlds| / |models| as an exact fraction; None stands for infinity."""
    m = len(models(phi, names))
    return None if m == 0 else Fraction(2 ** len(names), m)


def more_informative(x, y, names) -> bool:
    """I(x) > I(y), decided without floating point."""
    rx, ry = info_ratio(x, names), info_ratio(y, names)
    if rx is None:
        return ry is not None
    if ry is None:
        return False
    return rx > ry


def independent(a, b, names) -> bool:
    seen = {(holds(a, env), holds(b, env)) for env in assignments(names)}
    return len(seen) == 4


def clause_equivalent_exists(phi) -> bool:
    """Brute force: is phi equivalent to some nonempty clause over its own variables?"""
    names = sorted(variables(phi))
    target = models(phi, names)
    for codes in itertools.product((0, 1, 2), repeat=len(names)):
        if not any(codes):
            continue
        lits = [(n, c == 1) for n, c in zip(names, codes) if c]
        clause_models = frozenset(
            tuple(env[n] for n in names)
            for env in assignments(names)
            if any(env[n] == pos for n, pos in lits)
        )
        if clause_models == target:
            return True
    return False


# ---------------------------------------------------------------------------
# formula enumeration


def all_formulas(max_depth: int, names=VARS3) -> list:
    """Every AST of depth <= max_depth over ``names``."""
    level = [Atom(n) for n in names]
    everything = list(level)
    for _ in range(max_depth):
        prev = everything
        nxt = [Not(x) for x in prev]
        for op in (And, Or, Implies):
            nxt.extend(op(x, y) for x in prev for y in prev)
        everything = [Atom(n) for n in names] + nxt
    return everything


def table_bits(phi, names) -> int:
    """Truth table as an int: bit w set when phi holds in the w-th assignment."""
    out = 0
    for w, env in enumerate(assignments(names)):
        if holds(phi, env):
            out |= 1 << w
    return out


def representatives(max_depth: int, names=VARS3) -> dict:
    """One shortest AST per (variable set, truth table) reachable within ``max_depth``.

    Built level by level from representatives only; every AST of depth d is
    an operator applied to ASTs of depth < d, and swapping a child for its
    representative leaves the parent's key unchanged. Keys of composites are
    computed from the children's keys with bitwise operations.
    """
    full = (1 << (1 << len(names))) - 1
    reps: dict = {}
    for n in names:
        reps.setdefault((frozenset((n,)), table_bits(Atom(n), names)), Atom(n))
    for _ in range(max_depth):
        prev = list(reps.items())
        new = {}
        for (vs, t), x in prev:
            k = (vs, full ^ t)
            if k not in reps:
                new.setdefault(k, Not(x))
        for (vx, tx), x in prev:
            for (vy, ty), y in prev:
                vs = vx | vy
                for k, f in (
                    ((vs, tx & ty), And),
                    ((vs, tx | ty), Or),
                    ((vs, (full ^ tx) | ty), Implies),
                ):
                    if k not in reps and k not in new:
                        new[k] = f(x, y)
        if not new:
            break
        reps.update(new)
    return reps


def random_formula(rng: random.Random, max_depth: int, names=VARS3):
    if max_depth == 0 or rng.random() < 0.2:
        return Atom(rng.choice(names))
    kind = rng.randrange(4)
    if kind == 0:
        return Not(random_formula(rng, max_depth - 1, names))
    op = (And, Or, Implies)[kind - 1]
    return op(random_formula(rng, max_depth - 1, names), random_formula(rng, max_depth - 1, names))


# ---------------------------------------------------------------------------
# graphs and metrics


def matrix_closure(n: int, edges) -> set[tuple[int, int]]:
    """Pairs (i, j) joined by a path of length >= 1, by squaring until stable."""
    m = [[False] * n for _ in range(n)]
    for a, b in edges:
        m[a][b] = True
    while True:
        sq = [[m[i][j] or any(m[i][k] and m[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
        if sq == m:
            return {(i, j) for i in range(n) for j in range(n) if m[i][j]}
        m = sq


def pr_auc(scored: list[tuple[float, set]], n_gold: int) -> tuple[float, float, float]:
    """Brute-force precision, recall and PR-AUC.

    ``scored`` holds (confidence, gold indices this prediction matches).
    Thresholds are every distinct confidence, highest first, preceded by
    the point (recall 0, precision of the top threshold).
    """
    def at(tau):
        kept = [m for c, m in scored if c >= tau]
        p = Fraction(sum(1 for m in kept if m), len(kept))
        covered = set().union(*kept) if kept else set()
        return p, Fraction(len(covered), n_gold)

    taus = sorted({c for c, _ in scored}, reverse=True)
    curve = [at(t) for t in taus]
    auc = Fraction(0)
    prev_p, prev_r = curve[0][0], Fraction(0)
    for p, r in curve:
        auc += (r - prev_r) * (p + prev_p) / 2
        prev_p, prev_r = p, r
    p, r = at(-1.0)
    return float(p), float(r), float(auc)
