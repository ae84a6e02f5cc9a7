# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Same contracts and bit layout as ``_pykernels``."""

from libc.stdint cimport uint64_t, int64_t
from libc.stdlib cimport malloc, free
from libc.string cimport memset

cdef uint64_t _LOW_PATTERNS[6]
_LOW_PATTERNS[0] = 0xAAAAAAAAAAAAAAAAULL
_LOW_PATTERNS[1] = 0xCCCCCCCCCCCCCCCCULL
_LOW_PATTERNS[2] = 0xF0F0F0F0F0F0F0F0ULL
_LOW_PATTERNS[3] = 0xFF00FF00FF00FF00ULL
_LOW_PATTERNS[4] = 0xFFFF0000FFFF0000ULL
_LOW_PATTERNS[5] = 0xFFFFFFFF00000000ULL


cdef inline uint64_t _var_word(int j, int nvars, Py_ssize_t word) nogil:
    cdef uint64_t m
    if j < 6:
        m = _LOW_PATTERNS[j]
        if nvars < 6:
            m &= (1ULL << (1 << nvars)) - 1
        return m
    if (word >> (j - 6)) & 1:
        return 0xFFFFFFFFFFFFFFFFULL
    return 0


cdef inline uint64_t _full_word(int nvars) nogil:
    if nvars >= 6:
        return 0xFFFFFFFFFFFFFFFFULL
    return (1ULL << (1 << nvars)) - 1


cdef object _words_to_int(uint64_t* words, Py_ssize_t nwords):
    cdef bytes raw = (<char*>words)[:nwords * 8]
    return int.from_bytes(raw, "little")


cdef void _int_to_words(object value, uint64_t* words, Py_ssize_t nwords):
    cdef bytes raw = value.to_bytes(nwords * 8, "little")
    cdef const unsigned char* src = raw
    cdef Py_ssize_t i, b
    for i in range(nwords):
        words[i] = 0
        for b in range(8):
            words[i] |= (<uint64_t>src[i * 8 + b]) << (8 * b)


def truth_table(ops, args, int nvars):
    # evaluate one opcode across every word before moving on, so each step
    # is a tight loop over the table instead of a dispatch per word
    cdef Py_ssize_t nprog = len(ops)
    cdef Py_ssize_t nwords = 1 if nvars <= 6 else (1 << (nvars - 6))
    cdef Py_ssize_t i, w, depth = 0, need = 0
    cdef int op, j
    for i in range(nprog):
        op = ops[i]
        if op == 0:
            depth += 1
        elif op != 1:
            depth -= 1
        if depth > need:
            need = depth
    if need == 0:
        raise ValueError("malformed formula program")
    cdef int* cops = <int*>malloc(nprog * sizeof(int))
    cdef int* cargs = <int*>malloc(nprog * sizeof(int))
    cdef uint64_t* stack = <uint64_t*>malloc(need * nwords * sizeof(uint64_t))
    cdef uint64_t* top
    cdef uint64_t* below
    cdef Py_ssize_t sp = 0
    cdef uint64_t full = _full_word(nvars)
    cdef uint64_t pattern
    cdef bint bad = False
    try:
        for i in range(nprog):
            cops[i] = ops[i]
            cargs[i] = args[i]
        with nogil:
            for i in range(nprog):
                op = cops[i]
                if op == 0:
                    top = stack + sp * nwords
                    j = cargs[i]
                    if j < 0 or j >= nvars:
                        bad = True
                        break
                    if j < 6:
                        pattern = _var_word(j, nvars, 0)
                        for w in range(nwords):
                            top[w] = pattern
                    else:
                        for w in range(nwords):
                            top[w] = 0xFFFFFFFFFFFFFFFFULL if (w >> (j - 6)) & 1 else 0
                    sp += 1
                elif op == 1:
                    if sp < 1:
                        bad = True
                        break
                    top = stack + (sp - 1) * nwords
                    for w in range(nwords):
                        top[w] = full ^ top[w]
                else:
                    if sp < 2:
                        bad = True
                        break
                    top = stack + (sp - 1) * nwords
                    below = stack + (sp - 2) * nwords
                    if op == 2:
                        for w in range(nwords):
                            below[w] = below[w] & top[w]
                    elif op == 3:
                        for w in range(nwords):
                            below[w] = below[w] | top[w]
                    elif op == 4:
                        for w in range(nwords):
                            below[w] = (full ^ below[w]) | top[w]
                    else:
                        bad = True
                        break
                    sp -= 1
        if bad or sp != 1:
            raise ValueError("malformed formula program")
        return _words_to_int(stack, nwords)
    finally:
        free(cops)
        free(cargs)
        free(stack)


def find_clause(table, int nvars):
    cdef Py_ssize_t nwords = 1 if nvars <= 6 else (1 << (nvars - 6))
    cdef uint64_t* target = <uint64_t*>malloc(nwords * sizeof(uint64_t))
    cdef int* codes = <int*>malloc((nvars + 1) * sizeof(int))
    cdef uint64_t full = _full_word(nvars)
    cdef Py_ssize_t w
    cdef long long total = 1, step
    cdef int j, v, c
    cdef bint match
    cdef uint64_t t, m
    try:
        _int_to_words(table, target, nwords)
        for j in range(nvars):
            total *= 3
            codes[j] = 0
        with nogil:
            match = False
            for step in range(total - 1):
                j = 0
                while codes[j] == 2:
                    codes[j] = 0
                    j += 1
                codes[j] += 1
                match = True
                for w in range(nwords):
                    t = 0
                    for v in range(nvars):
                        c = codes[v]
                        if c != 0:
                            m = _var_word(v, nvars, w)
                            if c == 2:
                                m = full ^ m
                            t |= m
                    if t != target[w]:
                        match = False
                        break
                if match:
                    break
        if not match:
            return None
        return tuple(codes[v] for v in range(nvars))
    finally:
        free(target)
        free(codes)


def closure(int n, edges):
    cdef Py_ssize_t nn = <Py_ssize_t>n * n
    cdef int* via = <int*>malloc(nn * sizeof(int)) if nn else NULL
    cdef unsigned char* reach = <unsigned char*>malloc(nn) if nn else NULL
    cdef Py_ssize_t i, j, k
    try:
        for i in range(nn):
            via[i] = -2
        if nn:
            memset(reach, 0, nn)
        for i, j in edges:
            via[i * n + j] = -1
            reach[i * n + j] = 1
        with nogil:
            for k in range(n):
                for i in range(n):
                    if reach[i * n + k]:
                        for j in range(n):
                            if reach[k * n + j] and not reach[i * n + j]:
                                reach[i * n + j] = 1
                                via[i * n + j] = <int>k
        return [via[i] for i in range(nn)]
    finally:
        free(via)
        free(reach)


cdef inline uint64_t _mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def bootstrap_count(diffs, long long iterations, seed):
    cdef Py_ssize_t n = len(diffs)
    cdef int64_t* d = <int64_t*>malloc((n if n else 1) * sizeof(int64_t))
    cdef uint64_t gamma = 0x9E3779B97F4A7C15ULL
    cdef uint64_t seed64 = (seed * 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    cdef uint64_t base, r, idx
    cdef long long t, count = 0
    cdef Py_ssize_t j
    cdef int64_t total
    try:
        for j in range(n):
            d[j] = diffs[j]
        with nogil:
            for t in range(iterations):
                base = _mix64(seed64 + <uint64_t>t)
                total = 0
                for j in range(n):
                    r = _mix64(base + <uint64_t>(j + 1) * gamma)
                    idx = ((r >> 32) * <uint64_t>n) >> 32
                    total += d[idx]
                if total <= 0:
                    count += 1
        return count
    finally:
        free(d)
