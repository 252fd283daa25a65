"""Shared building blocks for cardinality encodings.

Literals follow the DIMACS convention: variable v is the literal v, its negation is -v, and 0 is never a literal.
Every encoder receives the positive literals of x1..xn plus a VarPool, and returns a list of clauses over those
literals and fresh auxiliaries. Encoders only see 0 < k < n; the trivial bounds are handled by the caller.
"""

from __future__ import annotations

Clause = tuple[int, ...]


class VarPool:
    """Allocator of fresh variables, strictly increasing above the original variables.

    Attributes:
        top: Highest variable allocated so far.
    """

    def __init__(self, top: int) -> None:
        """Initialize the pool so the first fresh variable is top + 1."""
        if top < 0:
            raise ValueError(f"Pool must start at a non-negative variable, got {top}")
        self.top = top

    def fresh(self) -> int:
        """Allocate one new variable."""
        self.top += 1
        return self.top

    def fresh_many(self, count: int) -> list[int]:
        """Allocate several new variables in increasing order."""
        return [self.fresh() for _ in range(count)]


def xor_clauses(literals: list[int], parity: int) -> list[Clause]:
    """Expand XOR(literals) = parity into its 2^(w-1) CNF clauses.

    Each clause rules out one assignment with the wrong parity. An empty literal list with parity 1 yields the
    empty clause, and with parity 0 yields nothing.
    """
    width = len(literals)
    clauses = []
    for assignment in range(1 << width):
        if assignment.bit_count() & 1 == parity:
            continue
        clauses.append(tuple(-lit if (assignment >> index) & 1 else lit for index, lit in enumerate(literals)))
    return clauses
