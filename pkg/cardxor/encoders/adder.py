"""Adder encoding of at-most-k.

The inputs are summed by a network of full and half adders into binary sum bits, then the sum is compared against
the constant k. Adders are encoded in both directions, so every auxiliary is a function of the inputs, but the
encoding does not maintain arc-consistency under unit propagation.

Bits are processed in buckets by weight: bucket i holds literals worth 2^i. While a bucket holds three literals a
full adder replaces them by one sum (same bucket) and one carry (next bucket); two literals go through a half
adder. Each full adder removes one literal and each bucket sees at most one half adder, so there are fewer than n
adders and fewer than 14n clauses.

For sum bits s and the bits of k, the comparison sum <= k is one clause per bit position i where k has a 0:
    not s(i) or (not s(j) for every j > i where k has a 1)
"""

from cardxor.encoders.shared import Clause
from cardxor.encoders.shared import VarPool


def _full_adder(a: int, b: int, c: int, pool: VarPool, clauses: list[Clause]) -> tuple[int, int]:
    """Add sum = a xor b xor c and carry = majority(a, b, c). Returns (sum, carry)."""
    total, carry = pool.fresh(), pool.fresh()
    for sa in (1, -1):
        for sb in (1, -1):
            for sc in (1, -1):
                # Odd number of true inputs sets the sum, even clears it.
                odd = (sa > 0) ^ (sb > 0) ^ (sc > 0)
                clauses.append((-sa * a, -sb * b, -sc * c, total if odd else -total))
    clauses.extend(
        [
            (-a, -b, carry),
            (-a, -c, carry),
            (-b, -c, carry),
            (a, b, -carry),
            (a, c, -carry),
            (b, c, -carry),
        ]
    )
    return total, carry


def _half_adder(a: int, b: int, pool: VarPool, clauses: list[Clause]) -> tuple[int, int]:
    """Add sum = a xor b and carry = a and b. Returns (sum, carry)."""
    total, carry = pool.fresh(), pool.fresh()
    clauses.extend(
        [
            (-a, -b, -total),
            (a, b, -total),
            (-a, b, total),
            (a, -b, total),
            (-a, -b, carry),
            (a, -carry),
            (b, -carry),
        ]
    )
    return total, carry


def sum_bits(literals: list[int], pool: VarPool, clauses: list[Clause]) -> list[int]:
    """Build the adder network and return the sum bits, least significant first."""
    buckets: list[list[int]] = [list(literals)]
    index = 0
    while index < len(buckets):
        bucket = buckets[index]
        while len(bucket) > 1:
            if len(buckets) == index + 1:
                buckets.append([])
            if len(bucket) >= 3:
                total, carry = _full_adder(bucket.pop(0), bucket.pop(0), bucket.pop(0), pool, clauses)
            else:
                total, carry = _half_adder(bucket.pop(0), bucket.pop(0), pool, clauses)
            bucket.append(total)
            buckets[index + 1].append(carry)
        index += 1
    # Every bucket ends with exactly one literal: the top bucket only ever receives carries.
    return [bucket[0] for bucket in buckets]


def encode(literals: list[int], k: int, pool: VarPool) -> list[Clause]:
    """Encode "at most k of literals are true" with an adder network and a comparator."""
    clauses: list[Clause] = []
    bits = sum_bits(literals, pool, clauses)
    for i, bit in enumerate(bits):
        if (k >> i) & 1:
            continue
        higher = tuple(-bits[j] for j in range(i + 1, len(bits)) if (k >> j) & 1)
        clauses.append((-bit,) + higher)
    return clauses
