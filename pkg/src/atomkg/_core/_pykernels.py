"""Pure-Python implementations of the hot kernels.

Truth tables are Python ints used as bitsets: bit ``w`` is set when world
``w`` satisfies the formula, and variable ``j`` is true in world ``w`` iff
bit ``j`` of ``w`` is set.
"""

from __future__ import annotations

import numpy as np

# opcodes of the postfix formula program
OP_VAR = 0
OP_NOT = 1
OP_AND = 2
OP_OR = 3
OP_IMPLIES = 4

_GAMMA = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


def var_mask(j: int, nvars: int) -> int:
    """Worlds where variable ``j`` is true: runs of 2**j zeros then 2**j ones."""
    half = 1 << j
    mask = ((1 << half) - 1) << half
    width = half << 1
    total = 1 << nvars
    while width < total:
        mask |= mask << width
        width <<= 1
    return mask


def truth_table(ops, args, nvars: int) -> int:
    full = (1 << (1 << nvars)) - 1
    masks = [var_mask(j, nvars) for j in range(nvars)]
    stack: list[int] = []
    try:
        for op, arg in zip(ops, args):
            if op == OP_VAR:
                stack.append(masks[arg])
            elif op == OP_NOT:
                stack.append(full ^ stack.pop())
            else:
                right = stack.pop()
                left = stack.pop()
                if op == OP_AND:
                    stack.append(left & right)
                elif op == OP_OR:
                    stack.append(left | right)
                elif op == OP_IMPLIES:
                    stack.append((full ^ left) | right)
                else:
                    raise ValueError(f"unknown opcode {op}")
    except IndexError:
        raise ValueError("malformed formula program") from None
    if len(stack) != 1:
        raise ValueError("malformed formula program")
    return stack[0]


def find_clause(table: int, nvars: int):
    """First clause (in base-3 counting order) whose truth table is ``table``.

    Returns a tuple with one code per variable (0 absent, 1 positive,
    2 negated) or None. The empty clause is never a candidate.
    """
    full = (1 << (1 << nvars)) - 1
    pos = [var_mask(j, nvars) for j in range(nvars)]
    neg = [full ^ m for m in pos]
    codes = [0] * nvars
    for _ in range(3**nvars - 1):
        # base-3 increment
        j = 0
        while codes[j] == 2:
            codes[j] = 0
            j += 1
        codes[j] += 1
        t = 0
        for v in range(nvars):
            c = codes[v]
            if c == 1:
                t |= pos[v]
            elif c == 2:
                t |= neg[v]
        if t == table:
            return tuple(codes)
    return None


def closure(n: int, edges) -> list[int]:
    """Warshall closure over ``n`` nodes.

    Returns a flat ``n*n`` list: -2 unreachable, -1 direct edge, otherwise
    the intermediate node through which the pair was first connected.
    """
    via = [-2] * (n * n)
    reach = [0] * n
    for i, j in edges:
        via[i * n + j] = -1
        reach[i] |= 1 << j
    for k in range(n):
        bit_k = 1 << k
        row_k = reach[k]
        for i in range(n):
            if reach[i] & bit_k:
                new = row_k & ~reach[i]
                if new:
                    reach[i] |= new
                    base = i * n
                    while new:
                        low = new & -new
                        via[base + low.bit_length() - 1] = k
                        new ^= low
    return via


def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def bootstrap_count(diffs, iterations: int, seed: int) -> int:
    """Count resamples whose summed paired difference is <= 0.

    The index stream of resample ``t`` is counter-based, keyed on
    ``(seed, t)``, so any chunking of iterations gives the same answer.
    """
    d = np.asarray(diffs, dtype=np.int64)
    n = d.shape[0]
    count = 0
    chunk = max(1, 1_000_000 // max(n, 1))
    gamma = np.uint64(_GAMMA)
    j = np.arange(1, n + 1, dtype=np.uint64)
    seed64 = np.uint64((seed * _GAMMA) & _MASK64)
    with np.errstate(over="ignore"):
        for start in range(0, iterations, chunk):
            t = np.arange(start, min(start + chunk, iterations), dtype=np.uint64)
            base = _mix64(seed64 + t)
            r = _mix64(base[:, None] + j[None, :] * gamma)
            idx = ((r >> np.uint64(32)) * np.uint64(n)) >> np.uint64(32)
            sums = d[idx.astype(np.int64)].sum(axis=1)
            count += int((sums <= 0).sum())
    return count
