"""Translation of 1-CARD-XOR instances into CNF, or CNF plus native XOR clauses, for external solvers.

Variables are numbered in a 1-based pool: the originals x1..xn come first, then auxiliaries in strictly increasing
order, so a model restricted to 1..n is always an assignment of the original instance.

XOR rows are either kept as native XOR clauses (for solvers that understand the extended DIMACS "x" lines) or
blasted into plain CNF: a long row is cut into a chain of short XORs joined by fresh link variables, and each short
XOR expands into the 2^(w-1) clauses that rule out its wrong-parity assignments.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from dataclasses import field
from typing import Iterable
from typing import TextIO

from cardxor.encoders import ENCODERS
from cardxor.encoders.shared import Clause
from cardxor.encoders.shared import VarPool
from cardxor.encoders.shared import xor_clauses
from cardxor.errors import InvalidConfigError
from cardxor.instance import CardConstraint
from cardxor.instance import CardXorInstance

DEFAULT_CUT = 4


class CardEncoding(str, enum.Enum):
    """Available at-most-k encodings."""

    ADDER = "adder"
    BDD = "bdd"
    CARDNET = "cardnet"


class XorMode(str, enum.Enum):
    """How XOR rows reach the solver."""

    NATIVE = "native"
    BLAST = "blast"


class PropagationStatus(str, enum.Enum):
    """Outcome of unit propagation."""

    OK = "ok"
    CONFLICT = "conflict"


@dataclass(frozen=True)
class EncodingChoice:
    """Encoding options for the cardinality and XOR parts.

    Attributes:
        card: Cardinality encoding.
        xor_mode: Native XOR clauses, or blasting into CNF.
        cut: Maximum width of a blasted XOR piece.
    """

    card: CardEncoding = CardEncoding.CARDNET
    xor_mode: XorMode = XorMode.NATIVE
    cut: int = DEFAULT_CUT

    def __post_init__(self) -> None:
        """Normalize enum values and validate the cut width."""
        object.__setattr__(self, "card", CardEncoding(self.card))
        object.__setattr__(self, "xor_mode", XorMode(self.xor_mode))
        if self.cut < 3:
            raise InvalidConfigError(f"XOR cut width must be at least 3, got {self.cut}")

    @property
    def label(self) -> str:
        """Short name used in sweep records, e.g. "cardnet/native"."""
        return f"{self.card.value}/{self.xor_mode.value}"


@dataclass
class CnfFormula:
    """Clauses over a 1-based variable pool, with optional native XOR clauses.

    Attributes:
        num_vars: Highest variable in use. Originals occupy 1..n.
        clauses: CNF clauses as tuples of non-zero literals.
        xor_clauses: Native XOR clauses as (positive variables, parity). The XOR of the variables equals parity.
    """

    num_vars: int
    clauses: list[Clause] = field(default_factory=list)
    xor_clauses: list[tuple[tuple[int, ...], int]] = field(default_factory=list)

    def __post_init__(self) -> None:
        """Validate literals against the variable pool."""
        for clause in self.clauses:
            for lit in clause:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ValueError(f"Literal {lit} invalid for a pool of {self.num_vars} variables")
        for variables, parity in self.xor_clauses:
            if parity not in (0, 1):
                raise ValueError(f"XOR parity must be 0 or 1, got {parity}")
            for var in variables:
                if not 0 < var <= self.num_vars:
                    raise ValueError(f"XOR variable {var} invalid for a pool of {self.num_vars} variables")


@dataclass(frozen=True)
class PropagationResult:
    """Fixed point of unit propagation.

    Attributes:
        status: ok, or conflict when some clause was falsified.
        forced: Every variable assigned by the assumptions or by propagation.
        propagations: Number of literals derived by propagation (assumptions excluded).
    """

    status: PropagationStatus
    forced: dict[int, bool]
    propagations: int = 0


@dataclass(frozen=True)
class EncodingStats:
    """Size of a cardinality encoding.

    Attributes:
        aux_vars: Auxiliary variables beyond x1..xn.
        clauses: Clause count.
    """

    aux_vars: int
    clauses: int


def encode_card(card: CardConstraint, choice: EncodingChoice, pool: VarPool | None = None) -> CnfFormula:
    """Encode an at-most-k constraint over x1..xn.

    Args:
        card: The constraint.
        choice: Which cardinality encoding to use.
        pool: Fresh variable allocator, positioned at or past n. A new pool starting at n is used if omitted.

    Returns:
        Clauses satisfiable, by extending an assignment of 1..n to the auxiliaries, iff at most k originals are true.
        k = n gives no clauses, and k = 0 gives the unit clauses "not xi" for every encoding.
    """
    if pool is None:
        pool = VarPool(card.n)
    if pool.top < card.n:
        raise InvalidConfigError(f"Variable pool at {pool.top} overlaps the original variables 1..{card.n}")
    literals = list(range(1, card.n + 1))
    if card.k >= card.n:
        clauses: list[Clause] = []
    elif card.k == 0:
        clauses = [(-lit,) for lit in literals]
    else:
        clauses = ENCODERS[choice.card.value].encode(literals, card.k, pool)
    return CnfFormula(pool.top, clauses)


def blast_xor(variables: list[int], parity: int, cut: int, pool: VarPool) -> list[Clause]:
    """Split one XOR constraint into a chain of XORs of width at most cut, expanded into CNF.

    Each link variable t carries the parity of the piece before it:
        XOR(v1..v(cut-1), t1) = 0,  XOR(t1, ..., t2) = 0,  ...,  XOR(t_last, ...) = parity
    """
    clauses = []
    rest = list(variables)
    while len(rest) > cut:
        link = pool.fresh()
        clauses.extend(xor_clauses(rest[: cut - 1] + [link], 0))
        rest = [link] + rest[cut - 1 :]
    clauses.extend(xor_clauses(rest, parity))
    return clauses


def encode_instance(instance: CardXorInstance, choice: EncodingChoice) -> CnfFormula:
    """Encode a whole instance: the cardinality constraint followed by every XOR row.

    Rows without variables never become XOR clauses: with rhs 1 they become the empty clause, with rhs 0 nothing.

    Returns:
        A formula equisatisfiable with the instance, whose models restricted to 1..n are its solutions.
    """
    pool = VarPool(instance.n)
    formula = encode_card(instance.card, choice, pool)
    clauses = list(formula.clauses)
    native = []
    for index, row in enumerate(instance.xors.rows):
        variables = [col + 1 for col in range(instance.n) if (row.bits >> col) & 1]
        parity = instance.xors.rhs_bit(index)
        if not variables:
            if parity:
                clauses.append(())
        elif choice.xor_mode is XorMode.NATIVE:
            native.append((tuple(variables), parity))
        else:
            clauses.extend(blast_xor(variables, parity, choice.cut, pool))
    return CnfFormula(pool.top, clauses, native)


def encoding_stats(n: int, k: int, choice: EncodingChoice) -> EncodingStats:
    """Auxiliary variable and clause counts of the cardinality part alone."""
    formula = encode_card(CardConstraint(n, k), choice)
    return EncodingStats(formula.num_vars - n, len(formula.clauses))


def unit_propagate(cnf: CnfFormula, assumptions: Iterable[int] = ()) -> PropagationResult:
    """Run unit propagation to its fixed point over the CNF clauses. XOR clauses are ignored.

    Args:
        cnf: The formula.
        assumptions: Literals assumed true before propagating.

    Returns:
        Every forced assignment, and whether a clause became falsified.
    """
    values: dict[int, bool] = {}
    queue: list[int] = []
    propagations = 0

    def assign(lit: int) -> bool:
        var, value = abs(lit), lit > 0
        if var in values:
            return values[var] == value
        values[var] = value
        queue.append(lit)
        return True

    def visit(clause: Clause) -> bool:
        """Propagate one clause. Returns False on conflict."""
        nonlocal propagations
        free = None
        free_count = 0
        for lit in clause:
            value = values.get(abs(lit))
            if value is None:
                free_count += 1
                free = lit
            elif value == (lit > 0):
                return True
        if free_count == 0:
            return False
        if free_count == 1:
            propagations += 1
            return assign(free)
        return True

    for lit in assumptions:
        if not assign(lit):
            return PropagationResult(PropagationStatus.CONFLICT, values, propagations)

    watch: dict[int, list[Clause]] = {}
    for clause in cnf.clauses:
        for lit in clause:
            watch.setdefault(-lit, []).append(clause)

    pending: Iterable[Clause] = cnf.clauses
    while True:
        for clause in pending:
            if not visit(clause):
                return PropagationResult(PropagationStatus.CONFLICT, values, propagations)
        if not queue:
            break
        # Only clauses containing the negation of the newest literal can become unit or falsified.
        pending = watch.get(queue.pop(), [])
    return PropagationResult(PropagationStatus.OK, values, propagations)


def write_dimacs(cnf: CnfFormula, sink: TextIO) -> None:
    """Write a formula as extended DIMACS.

    The header counts CNF clauses and XOR lines together. A native XOR clause is written as "x l1 l2 ... 0", meaning
    the XOR of the literals is true, so parity 0 is written by negating the first literal.
    """
    sink.write(f"p cnf {cnf.num_vars} {len(cnf.clauses) + len(cnf.xor_clauses)}\n")
    for clause in cnf.clauses:
        sink.write(" ".join([str(lit) for lit in clause] + ["0"]) + "\n")
    for variables, parity in cnf.xor_clauses:
        literals = list(variables)
        if not parity:
            literals[0] = -literals[0]
        sink.write("x " + " ".join([str(lit) for lit in literals] + ["0"]) + "\n")
