"""Cardinality network encoding of at-most-k.

The inputs are split into blocks of p wires, where p is k + 1 rounded up to a power of two. Each block is sorted by an
odd-even merge sorting network, and blocks are folded together with simplified merges that only keep the top p
outputs. Outputs are sorted in decreasing order, so output j (1-based) is true when at least j inputs are true, and
the constraint is the single unit clause "not output(k + 1)".

Only the input-to-output half of every 2-comparator is encoded:
    a -> max(a, b)    b -> max(a, b)    a and b -> min(a, b)
which is enough for an at-most constraint and keeps arc-consistency under unit propagation. The network uses
O(n·log²(k)) clauses.

Padding wires are the constant false, written as None. A comparator with a constant input needs no clauses and no
new variables, so padding costs nothing.
"""

from __future__ import annotations

from cardxor.encoders.shared import Clause
from cardxor.encoders.shared import VarPool

Wire = int | None


class _Network:
    """Builds comparators into a shared clause list."""

    def __init__(self, pool: VarPool) -> None:
        """Initialize an empty network drawing variables from the pool."""
        self.pool = pool
        self.clauses: list[Clause] = []

    def comparator(self, a: Wire, b: Wire) -> tuple[Wire, Wire]:
        """Return (max, min) of two wires."""
        if a is None:
            return b, None
        if b is None:
            return a, None
        high, low = self.pool.fresh(), self.pool.fresh()
        self.clauses.extend([(-a, high), (-b, high), (-a, -b, low)])
        return high, low

    def merge(self, a: list[Wire], b: list[Wire]) -> list[Wire]:
        """Batcher odd-even merge of two sorted sequences of equal power-of-two length."""
        if len(a) == 1:
            return list(self.comparator(a[0], b[0]))
        odd = self.merge(a[0::2], b[0::2])
        even = self.merge(a[1::2], b[1::2])
        out = [odd[0]]
        for i in range(1, len(odd)):
            out.extend(self.comparator(even[i - 1], odd[i]))
        out.append(even[-1])
        return out

    def sort(self, wires: list[Wire]) -> list[Wire]:
        """Odd-even merge sort of a power-of-two number of wires."""
        if len(wires) == 1:
            return list(wires)
        half = len(wires) // 2
        return self.merge(self.sort(wires[:half]), self.sort(wires[half:]))

    def simplified_merge(self, a: list[Wire], b: list[Wire]) -> list[Wire]:
        """Merge two sorted sequences of equal power-of-two length p, keeping the top p + 1 outputs."""
        if len(a) == 1:
            return list(self.comparator(a[0], b[0]))
        odd = self.simplified_merge(a[0::2], b[0::2])
        even = self.simplified_merge(a[1::2], b[1::2])
        out = [odd[0]]
        for i in range(1, len(a) // 2 + 1):
            out.extend(self.comparator(odd[i], even[i - 1]))
        return out

    def card(self, wires: list[Wire], p: int) -> list[Wire]:
        """Top p outputs of a network sorting wires, whose length is a multiple of p."""
        if len(wires) == p:
            return self.sort(wires)
        head = self.card(wires[:p], p)
        tail = self.card(wires[p:], p)
        return self.simplified_merge(head, tail)[:p]


def block_size(k: int) -> int:
    """Smallest power of two that can count up to k + 1."""
    size = 1
    while size < k + 1:
        size *= 2
    return size


def encode(literals: list[int], k: int, pool: VarPool) -> list[Clause]:
    """Encode "at most k of literals are true" with a cardinality network."""
    p = block_size(k)
    wires: list[Wire] = list(literals)
    wires.extend([None] * (-len(wires) % p))
    network = _Network(pool)
    outputs = network.card(wires, p)
    overflow = outputs[k]
    if overflow is not None:
        network.clauses.append((-overflow,))
    return network.clauses
