"""Linear algebra over GF(2) on bit-packed rows.

Rows are stored as Python integers used as arbitrary-width bitsets. Column j of a row is bit j of the integer,
so column 0 is the lowest bit of the lowest machine word. XOR of two rows is a single integer XOR, which keeps
elimination cheap. The right-hand side of a system is packed the same way: bit i is the value for row i.

Elimination always produces the reduced row-echelon form, so back-substitution is a pure read:
    - Pivot row i holds a 1 in pivot_cols[i] and 0 in every other pivot column.
    - Rows after the last pivot row are all zero, and are kept so the row count stays stable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable
from typing import Sequence


def parity(bits: int) -> int:
    """Return the XOR of all bits in a packed vector."""
    return bits.bit_count() & 1


def pack_bits(values: Iterable[int]) -> int:
    """Pack a sequence of 0/1 values into an integer, lowest index first."""
    packed = 0
    for index, value in enumerate(values):
        if value & 1:
            packed |= 1 << index
    return packed


def unpack_bits(bits: int, width: int) -> list[int]:
    """Unpack an integer into a list of 0/1 values of the given width, lowest index first."""
    return [(bits >> index) & 1 for index in range(width)]


@dataclass(frozen=True, slots=True)
class BitRow:
    """Fixed-width vector in GF(2)^width.

    Attributes:
        bits: Packed bit values. Column j is bit j.
        width: Number of columns. Immutable after creation.
    """

    bits: int
    width: int

    def __post_init__(self) -> None:
        """Validate the packed value fits the width."""
        if self.width < 0:
            raise ValueError(f"BitRow width must be non-negative, got {self.width}")
        if self.bits < 0 or self.bits >> self.width:
            raise ValueError(f"BitRow bits {self.bits:#x} do not fit in width {self.width}")

    @classmethod
    def from_bits(cls, values: Sequence[int]) -> BitRow:
        """Create a row from explicit 0/1 values."""
        return cls(pack_bits(values), len(values))

    @classmethod
    def zero(cls, width: int) -> BitRow:
        """Create the all-zero row."""
        return cls(0, width)

    @classmethod
    def unit(cls, index: int, width: int) -> BitRow:
        """Create the standard unit vector with a single 1 at index."""
        return cls(1 << index, width)

    def __xor__(self, other: BitRow) -> BitRow:
        if self.width != other.width:
            raise ValueError(f"Cannot XOR rows of width {self.width} and {other.width}")
        return BitRow(self.bits ^ other.bits, self.width)

    def __getitem__(self, index: int) -> int:
        if not 0 <= index < self.width:
            raise IndexError(f"Column {index} out of range for width {self.width}")
        return (self.bits >> index) & 1

    def __len__(self) -> int:
        return self.width

    def popcount(self) -> int:
        """Hamming weight of the row."""
        return self.bits.bit_count()

    def to_bits(self) -> list[int]:
        """Unpack into explicit 0/1 values."""
        return unpack_bits(self.bits, self.width)


@dataclass(frozen=True)
class Gf2System:
    """Linear system A·x = b over GF(2).

    Attributes:
        rows: Rows of A, each of width n.
        rhs: Packed right-hand side b. Bit i belongs to rows[i].
        n: Column (variable) count.
    """

    rows: tuple[BitRow, ...]
    rhs: int
    n: int

    def __post_init__(self) -> None:
        """Validate row widths and right-hand side length."""
        if self.n < 1:
            raise ValueError(f"System must have at least one column, got n={self.n}")
        for index, row in enumerate(self.rows):
            if row.width != self.n:
                raise ValueError(f"Row {index} has width {row.width}, expected {self.n}")
        if self.rhs < 0 or self.rhs >> len(self.rows):
            raise ValueError(f"Right-hand side {self.rhs:#x} does not fit {len(self.rows)} rows")

    @classmethod
    def from_lists(cls, rows: Sequence[Sequence[int]], rhs: Sequence[int], n: int | None = None) -> Gf2System:
        """Build a system from explicit 0/1 rows and right-hand side values."""
        if n is None:
            if not rows:
                raise ValueError("Column count must be given for an empty system")
            n = len(rows[0])
        if len(rows) != len(rhs):
            raise ValueError(f"Row count {len(rows)} does not match right-hand side length {len(rhs)}")
        return cls(tuple(BitRow.from_bits(row) for row in rows), pack_bits(rhs), n)

    @property
    def m(self) -> int:
        """Row (equation) count."""
        return len(self.rows)

    def rhs_bit(self, index: int) -> int:
        """Right-hand side value of a single row."""
        return (self.rhs >> index) & 1


@dataclass(frozen=True)
class EchelonForm:
    """Reduced row-echelon form of a system.

    Attributes:
        pivot_cols: Pivot column of each of the first `rank` rows, strictly increasing.
        reduced_rows: All m rows after reduction. Rows at index >= rank are zero.
        reduced_rhs: Packed right-hand side after reduction.
        rank: Number of pivots.
        consistent: False iff some zero row has right-hand side 1.
        n: Column count.
    """

    pivot_cols: tuple[int, ...]
    reduced_rows: tuple[BitRow, ...]
    reduced_rhs: int
    rank: int
    consistent: bool
    n: int

    @property
    def free_cols(self) -> list[int]:
        """Columns without a pivot, in increasing order."""
        pivots = set(self.pivot_cols)
        return [col for col in range(self.n) if col not in pivots]

    def as_system(self) -> Gf2System:
        """The reduced rows as a system with the same solution set as the original."""
        return Gf2System(self.reduced_rows, self.reduced_rhs, self.n)


def eliminate(system: Gf2System) -> EchelonForm:
    """Reduce a system to reduced row-echelon form by Gauss-Jordan elimination.

    Args:
        system: The system to reduce. Left untouched.

    Returns:
        The reduced form, with the same row space and solution set as the input.
    """
    rows = [row.bits for row in system.rows]
    rhs = [system.rhs_bit(index) for index in range(system.m)]
    pivot_cols = []
    rank = 0
    for col in range(system.n):
        if rank == len(rows):
            break
        mask = 1 << col
        pivot = next((index for index in range(rank, len(rows)) if rows[index] & mask), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        rhs[rank], rhs[pivot] = rhs[pivot], rhs[rank]
        pivot_row = rows[rank]
        pivot_rhs = rhs[rank]
        # Clear the column above and below the pivot to reach the reduced form.
        for index, row in enumerate(rows):
            if index != rank and row & mask:
                rows[index] = row ^ pivot_row
                rhs[index] ^= pivot_rhs
        pivot_cols.append(col)
        rank += 1

    consistent = not any(rhs[index] for index in range(rank, len(rows)))
    return EchelonForm(
        pivot_cols=tuple(pivot_cols),
        reduced_rows=tuple(BitRow(bits, system.n) for bits in rows),
        reduced_rhs=pack_bits(rhs),
        rank=rank,
        consistent=consistent,
        n=system.n,
    )


def particular_solution(form: EchelonForm) -> BitRow | None:
    """Find one solution of the reduced system, with every free column set to 0.

    Args:
        form: A reduced system.

    Returns:
        A solution x0 with A·x0 = b, or None if the system is inconsistent.
    """
    if not form.consistent:
        return None
    solution = 0
    for index, col in enumerate(form.pivot_cols):
        if (form.reduced_rhs >> index) & 1:
            solution |= 1 << col
    return BitRow(solution, form.n)


def null_basis(form: EchelonForm) -> list[BitRow]:
    """Basis of the kernel {v : A·v = 0}, one vector per free column.

    Each vector has its own free column set to 1, every other free column set to 0, and pivot columns that follow.
    """
    basis = []
    for free in form.free_cols:
        vector = 1 << free
        for index, col in enumerate(form.pivot_cols):
            if (form.reduced_rows[index].bits >> free) & 1:
                vector |= 1 << col
        basis.append(BitRow(vector, form.n))
    return basis


def multiply(system: Gf2System, x: int | BitRow) -> int:
    """Compute the syndrome A·x as a packed vector over the rows."""
    bits = x.bits if isinstance(x, BitRow) else x
    syndrome = 0
    for index, row in enumerate(system.rows):
        if parity(row.bits & bits):
            syndrome |= 1 << index
    return syndrome


def is_solution(system: Gf2System, x: int | BitRow) -> bool:
    """Check whether x satisfies every row of the system."""
    return multiply(system, x) == system.rhs


def solution_count(form: EchelonForm) -> int:
    """Number of solutions of the reduced system: 2^(n - rank) when consistent, else 0."""
    return 1 << (form.n - form.rank) if form.consistent else 0
