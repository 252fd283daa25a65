"""Cardinality encodings, one module per encoding, looked up by name.

Every module exposes encode(literals, k, pool) -> list of clauses, valid for 0 < k < len(literals).
"""

from types import ModuleType

from cardxor.encoders import adder
from cardxor.encoders import cardnet
from cardxor.encoders import seqcounter

# "bdd" is the sequential counter: the two encodings produce the same clauses for at-most-k.
ENCODERS: dict[str, ModuleType] = {
    "adder": adder,
    "bdd": seqcounter,
    "cardnet": cardnet,
}
