"""Sequential counter encoding of at-most-k, equivalent to the BDD encoding.

Auxiliary s(i, j) means "at least j of x1..xi are true", for i in 1..n-1 and j in 1..k. Only the implications from
inputs towards counters are encoded, which is all an at-most constraint needs:
    x1 -> s(1,1)                 not s(1,j) for j > 1
    xi -> s(i,1)                 s(i-1,j) -> s(i,j)
    xi and s(i-1,j-1) -> s(i,j)  xi -> not s(i-1,k)
The clause count is 2nk + n - 3k - 1, and unit propagation maintains arc-consistency.
"""

from cardxor.encoders.shared import Clause
from cardxor.encoders.shared import VarPool


def encode(literals: list[int], k: int, pool: VarPool) -> list[Clause]:
    """Encode "at most k of literals are true" with a sequential counter."""
    n = len(literals)
    counters = [pool.fresh_many(k) for _ in range(n - 1)]
    clauses: list[Clause] = []

    first = counters[0]
    clauses.append((-literals[0], first[0]))
    clauses.extend((-first[j],) for j in range(1, k))

    for i in range(1, n - 1):
        x, previous, current = literals[i], counters[i - 1], counters[i]
        clauses.append((-x, current[0]))
        clauses.append((-previous[0], current[0]))
        for j in range(1, k):
            clauses.append((-x, -previous[j - 1], current[j]))
            clauses.append((-previous[j], current[j]))
        clauses.append((-x, -previous[k - 1]))

    clauses.append((-literals[n - 1], -counters[n - 2][k - 1]))
    return clauses
