"""Propositional formulas and the information calculus over them.

Formulas are immutable ASTs. Semantic questions (content, information,
independence, equivalence, atomicity) are answered by exhaustive truth
tables over a :class:`WorldSpace`, computed by the kernels in
:mod:`atomkg._core`.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Union

from . import _core

MAX_VARIABLES = 16
MAX_CLAUSE_VARIABLES = 10


class LogicError(ValueError):
    """Base class for logic-core errors."""


class FormulaSyntaxError(LogicError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class ScopeError(LogicError):
    """A formula mentions a variable the world space does not contain."""


class VariableCapError(LogicError):
    """Too many variables for exhaustive enumeration."""


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Atom:
    name: str

    def __post_init__(self):
        if not self.name:
            raise LogicError("atom names must be nonempty")

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class Not:
    child: "Formula"

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return to_text(self)


Formula = Union[Atom, Not, And, Or, Implies]
_BINARY = (And, Or, Implies)


def variables(phi: Formula) -> frozenset[str]:
    return frozenset(node.name for node in subformulas(phi) if isinstance(node, Atom))


def subformulas(phi: Formula) -> Iterator[Formula]:
    """Yield ``phi`` and every structural subformula, preorder."""
    stack = [phi]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Not):
            stack.append(node.child)
        elif isinstance(node, _BINARY):
            stack.append(node.right)
            stack.append(node.left)


def depth(phi: Formula) -> int:
    deepest = 0
    stack = [(phi, 0)]
    while stack:
        node, d = stack.pop()
        deepest = max(deepest, d)
        if isinstance(node, Not):
            stack.append((node.child, d + 1))
        elif isinstance(node, _BINARY):
            stack.append((node.left, d + 1))
            stack.append((node.right, d + 1))
    return deepest


def evaluate(phi: Formula, assignment: dict[str, bool]) -> bool:
    """Evaluate ``phi`` under one assignment by direct recursion."""
    if isinstance(phi, Atom):
        return assignment[phi.name]
    if isinstance(phi, Not):
        return not evaluate(phi.child, assignment)
    left = evaluate(phi.left, assignment)
    right = evaluate(phi.right, assignment)
    if isinstance(phi, And):
        return left and right
    if isinstance(phi, Or):
        return left or right
    return (not left) or right


# ---------------------------------------------------------------------------
# concrete syntax

_TOKEN = re.compile(r"\s*(?:(?P<atom>[A-Za-z][A-Za-z0-9_]*)|(?P<op>->|[!&|()]))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    raw = text.encode("utf-8")
    # atoms and operators are ASCII, so char offsets equal byte offsets up to
    # the first non-ASCII character, which is always a syntax error
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            offset = len(text[:pos].encode("utf-8"))
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", offset)
        kind = "atom" if m.group("atom") else "op"
        value = m.group(kind)
        tokens.append((kind, value, m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(raw)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.pos]

    def take(self, value: str) -> bool:
        kind, v, _ = self.peek()
        if kind == "op" and v == value:
            self.pos += 1
            return True
        return False

    def implication(self) -> Formula:
        left = self.disjunction()
        if self.take("->"):
            return Implies(left, self.implication())
        return left

    def disjunction(self) -> Formula:
        node = self.conjunction()
        while self.take("|"):
            node = Or(node, self.conjunction())
        return node

    def conjunction(self) -> Formula:
        node = self.unary()
        while self.take("&"):
            node = And(node, self.unary())
        return node

    def unary(self) -> Formula:
        if self.take("!"):
            return Not(self.unary())
        kind, value, offset = self.peek()
        if kind == "atom":
            self.pos += 1
            return Atom(value)
        if self.take("("):
            inner = self.implication()
            if not self.take(")"):
                _, got, off = self.peek()
                raise FormulaSyntaxError(f"expected ')' but found {got or 'end of input'!r}", off)
            return inner
        raise FormulaSyntaxError(f"expected a formula but found {value or 'end of input'!r}", offset)


def parse_formula(text: str) -> Formula:
    """Parse ``!``, ``&``, ``|``, ``->`` and parentheses into a formula.

    Precedence runs ``!`` > ``&`` > ``|`` > ``->``; ``&`` and ``|`` associate
    left, ``->`` associates right.
    """
    if not text.strip():
        raise FormulaSyntaxError("empty formula", 0)
    parser = _Parser(text)
    phi = parser.implication()
    kind, value, offset = parser.peek()
    if kind != "end":
        raise FormulaSyntaxError(f"unexpected token {value!r}", offset)
    return phi


_PRECEDENCE = {Implies: 1, Or: 2, And: 3, Not: 4, Atom: 5}
_SYMBOL = {And: "&", Or: "|", Implies: "->"}


def to_text(phi: Formula) -> str:
    """Canonical printer; ``parse_formula(to_text(phi)) == phi``."""
    done: list[str] = []
    stack: list[tuple[Formula, bool]] = [(phi, False)]
    while stack:
        node, expanded = stack.pop()
        if isinstance(node, Atom):
            done.append(node.name)
        elif not expanded:
            stack.append((node, True))
            if isinstance(node, Not):
                stack.append((node.child, False))
            else:
                stack.append((node.right, False))
                stack.append((node.left, False))
        elif isinstance(node, Not):
            inner = done.pop()
            if isinstance(node.child, _BINARY):
                inner = f"({inner})"
            done.append("!" + inner)
        else:
            right = done.pop()
            left = done.pop()
            prec = _PRECEDENCE[type(node)]
            lp = _PRECEDENCE[type(node.left)]
            rp = _PRECEDENCE[type(node.right)]
            # -> associates right, the others left
            right_assoc = isinstance(node, Implies)
            if lp < prec or (lp == prec and right_assoc):
                left = f"({left})"
            if rp < prec or (rp == prec and not right_assoc):
                right = f"({right})"
            done.append(f"{left} {_SYMBOL[type(node)]} {right}")
    return done[0]


# ---------------------------------------------------------------------------
# worlds and truth tables


@dataclass(frozen=True)
class WorldSpace:
    """All truth assignments over an ordered variable list.

    World ``w`` makes ``variables[j]`` true iff bit ``j`` of ``w`` is set.
    """

    variables: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.variables)) != len(self.variables):
            raise LogicError("duplicate variable in world space")
        if len(self.variables) > MAX_VARIABLES:
            raise VariableCapError(
                f"{len(self.variables)} variables exceeds the cap of {MAX_VARIABLES}"
            )

    @classmethod
    def of(cls, *formulas: Formula) -> "WorldSpace":
        names: set[str] = set()
        for phi in formulas:
            names |= variables(phi)
        return cls(tuple(sorted(names)))

    @property
    def size(self) -> int:
        return 1 << len(self.variables)

    @cached_property
    def full(self) -> int:
        return (1 << self.size) - 1

    def world(self, index: int) -> tuple[bool, ...]:
        return tuple(bool((index >> j) & 1) for j in range(len(self.variables)))

    @property
    def worlds(self) -> list[tuple[bool, ...]]:
        return [self.world(w) for w in range(self.size)]

    def assignment(self, index: int) -> dict[str, bool]:
        return dict(zip(self.variables, self.world(index)))

    def table(self, phi: Formula) -> int:
        """Truth table of ``phi`` as a bitset over world indices."""
        missing = variables(phi) - set(self.variables)
        if missing:
            raise ScopeError(f"variables {sorted(missing)} are not in the world space")
        index = {name: j for j, name in enumerate(self.variables)}
        ops: list[int] = []
        args: list[int] = []
        _compile(phi, index, ops, args)
        return _core.truth_table(ops, args, len(self.variables))


def _compile(phi: Formula, index: dict[str, int], ops: list[int], args: list[int]) -> None:
    # iterative postfix emission; deep right-nested formulas would blow the
    # recursion limit otherwise
    stack: list[tuple[Formula, bool]] = [(phi, False)]
    while stack:
        node, expanded = stack.pop()
        if isinstance(node, Atom):
            ops.append(_core.OP_VAR)
            args.append(index[node.name])
        elif expanded:
            ops.append(_OPCODE[type(node)])
            args.append(0)
        elif isinstance(node, Not):
            stack.append((node, True))
            stack.append((node.child, False))
        else:
            stack.append((node, True))
            stack.append((node.right, False))
            stack.append((node.left, False))


_OPCODE = {Not: _core.OP_NOT, And: _core.OP_AND, Or: _core.OP_OR, Implies: _core.OP_IMPLIES}


def _space_for(*formulas: Formula, space: WorldSpace | None) -> WorldSpace:
    return space if space is not None else WorldSpace.of(*formulas)


def content(phi: Formula, space: WorldSpace | None = None) -> frozenset[tuple[bool, ...]]:
    """Worlds of ``space`` in which ``phi`` is true."""
    space = _space_for(phi, space=space)
    table = space.table(phi)
    return frozenset(space.world(w) for w in range(space.size) if (table >> w) & 1)


def information(phi: Formula, space: WorldSpace | None = None) -> float:
    """Bits of information carried by ``phi``: ``-log2(|content| / |worlds|)``.

    Contradictions carry ``math.inf``.
    """
    space = _space_for(phi, space=space)
    models = space.table(phi).bit_count()
    return _bits(models, space.size)


def _bits(models: int, worlds: int) -> float:
    if models == 0:
        return math.inf
    return math.log2(worlds) - math.log2(models)


def is_independent(a: Formula, b: Formula, space: WorldSpace | None = None) -> bool:
    """True iff all four truth-value combinations of ``a`` and ``b`` occur."""
    space = _space_for(a, b, space=space)
    ta, tb = space.table(a), space.table(b)
    na, nb = space.full ^ ta, space.full ^ tb
    return bool(ta & tb) and bool(ta & nb) and bool(na & tb) and bool(na & nb)


class CutClass(enum.Enum):
    SAFE = "safe"
    BAD = "bad"
    NOT_SUBFORMULA = "not-subformula"


def is_subformula(psi: Formula, phi: Formula) -> bool:
    return any(node == psi for node in subformulas(phi))


def classify_cut(phi: Formula, psi: Formula, space: WorldSpace | None = None) -> CutClass:
    """Classify cutting ``phi`` down to ``psi``.

    Safe when ``phi`` strictly out-informs ``psi``, bad otherwise; the
    comparison is on structural subformulas only.
    """
    space = _space_for(phi, psi, space=space)
    # scope check both before the structural test so errors are uniform
    i_phi = information(phi, space)
    i_psi = information(psi, space)
    if not is_subformula(psi, phi):
        return CutClass.NOT_SUBFORMULA
    return CutClass.SAFE if i_phi > i_psi else CutClass.BAD


def is_literal(phi: Formula) -> bool:
    return isinstance(phi, Atom) or (isinstance(phi, Not) and isinstance(phi.child, Atom))


def is_clause(phi: Formula) -> bool:
    if isinstance(phi, Or):
        return is_clause(phi.left) and is_clause(phi.right)
    return is_literal(phi)


def equivalent(a: Formula, b: Formula) -> bool:
    space = WorldSpace.of(a, b)
    return space.table(a) == space.table(b)


def _clause_from_codes(names: tuple[str, ...], codes) -> Formula:
    literals: list[Formula] = []
    for name, code in zip(names, codes):
        if code == 1:
            literals.append(Atom(name))
        elif code == 2:
            literals.append(Not(Atom(name)))
    node = literals[0]
    for lit in literals[1:]:
        node = Or(node, lit)
    return node


def equivalent_clause(phi: Formula) -> Formula | None:
    """A clause over ``phi``'s variables with the same truth table, if any.

    Candidates are all ``3**k - 1`` nonempty clauses in which each variable
    occurs positively, negatively, or not at all.
    """
    names = tuple(sorted(variables(phi)))
    if len(names) > MAX_CLAUSE_VARIABLES:
        raise VariableCapError(
            f"{len(names)} variables exceeds the clause-enumeration cap of {MAX_CLAUSE_VARIABLES}"
        )
    space = WorldSpace(names)
    codes = _core.find_clause(space.table(phi), len(names))
    if codes is None:
        return None
    return _clause_from_codes(names, codes)


def is_atomic(phi: Formula, space: WorldSpace | None = None) -> bool:
    """True iff ``phi`` is logically equivalent to a nonempty clause."""
    if space is not None:
        space.table(phi)  # scope check
    return equivalent_clause(phi) is not None


def _prime_implicate_cubes(falsifying: list[int], nvars: int) -> set[tuple[int, int]]:
    # Quine-McCluskey over the falsifying worlds. A cube is (care, value):
    # worlds w with w & care == value. Each prime cube of the falsifying set
    # negates to a prime implicate clause.
    full_care = (1 << nvars) - 1
    current = {(full_care, w) for w in falsifying}
    primes: set[tuple[int, int]] = set()
    while current:
        merged: set[tuple[int, int]] = set()
        used: set[tuple[int, int]] = set()
        by_care: dict[int, set[int]] = {}
        for care, value in current:
            by_care.setdefault(care, set()).add(value)
        for care, values in by_care.items():
            bits = care
            while bits:
                bit = bits & -bits
                bits ^= bit
                for value in values:
                    if not value & bit and (value | bit) in values:
                        merged.add((care & ~bit, value))
                        used.add((care, value))
                        used.add((care, value | bit))
        primes |= current - used
        current = merged
    return primes


def to_cnf(phi: Formula) -> Formula:
    """Conjunction of all prime implicates of ``phi`` (Blake-style CNF).

    Built from the falsifying worlds of the truth table, so the result is
    canonical for the truth function over ``phi``'s variables. A tautology
    becomes ``V | !V`` and a contradiction ``V & !V`` for the first variable.
    """
    space = WorldSpace.of(phi)
    names = space.variables
    nvars = len(names)
    table = space.table(phi)
    first = Atom(names[0])
    if table == space.full:
        return Or(first, Not(first))
    if table == 0:
        return And(first, Not(first))
    falsifying = [w for w in range(space.size) if not (table >> w) & 1]
    cubes = _prime_implicate_cubes(falsifying, nvars)
    clauses = []
    for care, value in cubes:
        # the clause is false exactly on the cube: a variable true on the
        # cube appears negated
        codes = tuple(
            0 if not (care >> j) & 1 else (2 if (value >> j) & 1 else 1) for j in range(nvars)
        )
        clauses.append(codes)
    clauses.sort(key=lambda codes: tuple((c - 1) % 3 for c in codes))
    node = _clause_from_codes(names, clauses[0])
    for codes in clauses[1:]:
        node = And(node, _clause_from_codes(names, codes))
    return node


def conjuncts(phi: Formula) -> list[Formula]:
    if isinstance(phi, And):
        return conjuncts(phi.left) + conjuncts(phi.right)
    return [phi]


def disjuncts(phi: Formula) -> list[Formula]:
    if isinstance(phi, Or):
        return disjuncts(phi.left) + disjuncts(phi.right)
    return [phi]
