"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import importlib
import random
import timeit

from atomkg._core import _pykernels
from atomkg.logic import And, Atom, Implies, Not, Or, _compile


def random_formula(rng, depth, names):
    if depth == 0 or rng.random() < 0.15:
        return Atom(rng.choice(names))
    k = rng.randrange(4)
    if k == 0:
        return Not(random_formula(rng, depth - 1, names))
    op = (And, Or, Implies)[k - 1]
    return op(random_formula(rng, depth - 1, names), random_formula(rng, depth - 1, names))


def program(phi, names):
    ops, args = [], []
    _compile(phi, {n: i for i, n in enumerate(names)}, ops, args)
    return ops, args


def workloads(rng):
    names12 = tuple(f"x{i}" for i in range(12))
    progs = [program(random_formula(rng, 8, names12), names12) for _ in range(20)]
    names16 = tuple(f"x{i}" for i in range(16))
    wide = [program(random_formula(rng, 8, names16), names16) for _ in range(5)]
    tables = [rng.getrandbits(1 << 8) for _ in range(20)]  # 8 variables: no clause, full 3^8 scan
    graph = [(rng.randrange(200), rng.randrange(200)) for _ in range(600)]
    diffs = [rng.choice((-1, 0, 1)) for _ in range(200)]
    return {
        "truth_table k=12 x20": lambda k: [k.truth_table(o, a, 12) for o, a in progs],
        "truth_table k=16 x5": lambda k: [k.truth_table(o, a, 16) for o, a in wide],
        "find_clause k=8 x20": lambda k: [k.find_clause(t, 8) for t in tables],
        "closure n=200": lambda k: k.closure(200, graph),
        "bootstrap n=200 10k": lambda k: k.bootstrap_count(diffs, 10_000, 7),
    }


def same(a, b):
    # closure returns a sequence type that differs between the two builds
    if isinstance(a, int):
        return a == b
    return list(a) == list(b)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    try:
        compiled = importlib.import_module("atomkg._core._ckernels")
    except ImportError:
        compiled = None
        print("compiled extension not built; timing the fallback only")

    print(f"{'kernel':<24}{'python (ms)':>14}{'compiled (ms)':>16}{'speedup':>10}")
    for name, fn in workloads(random.Random(0)).items():
        t_py = min(timeit.repeat(lambda: fn(_pykernels), number=1, repeat=args.repeat)) * 1e3
        if compiled is None:
            print(f"{name:<24}{t_py:>14.2f}{'-':>16}{'-':>10}")
            continue
        assert same(fn(compiled), fn(_pykernels)), name
        t_c = min(timeit.repeat(lambda: fn(compiled), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<24}{t_py:>14.2f}{t_c:>16.2f}{t_py / t_c:>9.1f}x")


if __name__ == "__main__":
    main()
