"""Domain model, seeded random generation, and native serialization of 1-CARD-XOR instances.

A 1-CARD-XOR instance is the conjunction of one at-most-k cardinality constraint over x1..xn and a system of
m random XOR constraints A·x = b. Every entry of A and b is an independent fair coin, so an XOR row contains n/2
variables on expectation, and all-zero rows are kept (with rhs 1 such a row makes the instance unsatisfiable).

The native ".cx" format is line oriented:
    cardxor <n> <m> <k> <s> <seed>
    <hex row> <rhs bit>        (repeated m times)

Rows are written as zero-padded lowercase hex of the packed integer, so column 0 is the lowest bit of the
last hex digit. The density s is written as an exact fraction, e.g. "1/2".
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable
from typing import TextIO

import numpy as np

from cardxor import gf2core
from cardxor.errors import InvalidConfigError
from cardxor.errors import ParseError
from cardxor.gf2core import BitRow
from cardxor.gf2core import Gf2System

# The random XOR part of an instance. Same type, named for its role.
XorSystem = Gf2System

MAGIC = "cardxor"
MASK64 = (1 << 64) - 1

# SplitMix64 constants.
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX_1 = 0xBF58476D1CE4E5B9
_MIX_2 = 0x94D049BB133111EB


def as_fraction(value: Fraction | int | float | str) -> Fraction:
    """Convert a density into an exact fraction.

    Floats go through their shortest decimal repr so that 0.45 stays 9/20 instead of the nearest binary fraction.
    """
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True)
class CardConstraint:
    """At-most-k constraint over variables x1..xn.

    Attributes:
        n: Variable count.
        k: Upper bound on the number of true variables.
    """

    n: int
    k: int

    def __post_init__(self) -> None:
        """Validate the bound."""
        if self.n < 1:
            raise InvalidConfigError(f"Cardinality constraint needs n >= 1, got n={self.n}")
        if not 0 <= self.k <= self.n:
            raise InvalidConfigError(f"Cardinality bound k={self.k} outside [0, {self.n}]")

    @property
    def solution_count(self) -> int:
        """Volume of the Hamming ball of radius k: sum of C(n, w) for w in 0..k."""
        return sum(math.comb(self.n, weight) for weight in range(self.k + 1))

    def is_satisfied(self, x: int | BitRow) -> bool:
        """Check whether at most k bits of an assignment are set."""
        bits = x.bits if isinstance(x, BitRow) else x
        return bits.bit_count() <= self.k


@dataclass(frozen=True)
class CardXorInstance:
    """The formula F ∧ Q: an at-most-k constraint conjoined with an XOR system.

    Attributes:
        xors: The XOR constraints A·x = b.
        card: The cardinality constraint.
        seed: Seed the instance was generated from. 0 for hand-built instances.
        s: Declared XOR density m/n.
    """

    xors: XorSystem
    card: CardConstraint
    seed: int = 0
    s: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        """Validate that both parts range over the same variables."""
        if self.xors.n != self.card.n:
            raise InvalidConfigError(f"XOR system has n={self.xors.n} but cardinality constraint has n={self.card.n}")
        if not 0 <= self.seed <= MASK64:
            raise InvalidConfigError(f"Seed must be an unsigned 64-bit value, got {self.seed}")

    @classmethod
    def from_lists(
        cls,
        rows: list[list[int]],
        rhs: list[int],
        k: int,
        n: int | None = None,
        seed: int = 0,
    ) -> CardXorInstance:
        """Build an instance from explicit 0/1 rows. Convenient for tests and small hand examples."""
        xors = Gf2System.from_lists(rows, rhs, n)
        return cls(xors, CardConstraint(xors.n, k), seed, Fraction(xors.m, xors.n))

    @property
    def n(self) -> int:
        """Variable count."""
        return self.card.n

    @property
    def m(self) -> int:
        """XOR row count."""
        return self.xors.m

    @property
    def k(self) -> int:
        """Cardinality bound."""
        return self.card.k

    def check_witness(self, x: int | BitRow) -> bool:
        """Check whether an assignment satisfies every XOR row and the cardinality bound."""
        return self.card.is_satisfied(x) and gf2core.is_solution(self.xors, x)


@dataclass(frozen=True)
class GenConfig:
    """Parameters of one generated instance.

    Exactly one of m or s must be given. When s is given, m = ceil(s·n).

    Attributes:
        n: Variable count.
        k: Cardinality bound.
        master_seed: 64-bit seed shared by every instance of an experiment.
        m: XOR row count.
        s: XOR density.
        trial: Index of the repetition within a grid cell.
    """

    n: int
    k: int
    master_seed: int
    m: int | None = None
    s: Fraction | float | str | None = None
    trial: int = 0

    def __post_init__(self) -> None:
        """Validate the configuration."""
        if self.n < 1:
            raise InvalidConfigError(f"Instance needs n >= 1, got n={self.n}")
        if not 0 <= self.k <= self.n:
            raise InvalidConfigError(f"Cardinality bound k={self.k} outside [0, {self.n}]")
        if (self.m is None) == (self.s is None):
            raise InvalidConfigError("Exactly one of m or s must be provided")
        if self.m is not None and self.m < 0:
            raise InvalidConfigError(f"XOR row count must be non-negative, got m={self.m}")
        if self.s is not None and as_fraction(self.s) < 0:
            raise InvalidConfigError(f"XOR density must be non-negative, got s={self.s}")
        if not 0 <= self.master_seed <= MASK64:
            raise InvalidConfigError(f"Master seed must be an unsigned 64-bit value, got {self.master_seed}")
        if self.trial < 0:
            raise InvalidConfigError(f"Trial index must be non-negative, got {self.trial}")

    @property
    def rows(self) -> int:
        """The resolved XOR row count."""
        if self.m is not None:
            return self.m
        return math.ceil(as_fraction(self.s) * self.n)

    @property
    def density(self) -> Fraction:
        """The declared density: s when given, else m/n."""
        if self.s is not None:
            return as_fraction(self.s)
        return Fraction(self.m, self.n)


def _splitmix64(value: int) -> int:
    """SplitMix64 finalizer: a bijective 64-bit avalanche mix."""
    value = (value + _GOLDEN_GAMMA) & MASK64
    value = ((value ^ (value >> 30)) * _MIX_1) & MASK64
    value = ((value ^ (value >> 27)) * _MIX_2) & MASK64
    return value ^ (value >> 31)


def derive_seed(master_seed: int, n: int, k: int, m: int, trial: int) -> int:
    """Derive the per-instance stream seed from the experiment coordinates.

    The result depends only on the tuple, never on generation order, so parallel sweeps reproduce serial runs.
    """
    state = _splitmix64(master_seed & MASK64)
    for value in (n, k, m, trial):
        state = _splitmix64(state ^ (value & MASK64))
    return state


def generate(cfg: GenConfig) -> CardXorInstance:
    """Generate a random 1-CARD-XOR instance.

    Every entry of A and every bit of b is an independent fair coin drawn from a numpy generator seeded with the
    derived seed, so the instance is a pure function of (master_seed, n, k, m, trial).

    Args:
        cfg: Generation parameters.

    Returns:
        An instance with exactly cfg.rows XOR rows.
    """
    m = cfg.rows
    seed = derive_seed(cfg.master_seed, cfg.n, cfg.k, m, cfg.trial)
    rng = np.random.default_rng(seed)
    coins = rng.integers(0, 2, size=(m, cfg.n + 1), dtype=np.uint8)
    rows = tuple(BitRow(_pack_row(coins[index, : cfg.n]), cfg.n) for index in range(m))
    rhs = _pack_row(coins[:, cfg.n]) if m else 0
    xors = Gf2System(rows, rhs, cfg.n)
    return CardXorInstance(xors, CardConstraint(cfg.n, cfg.k), seed, cfg.density)


def _pack_row(coins: np.ndarray) -> int:
    """Pack a vector of 0/1 coins into an integer, index 0 as the lowest bit."""
    packed = np.packbits(coins, bitorder="little")
    return int.from_bytes(packed.tobytes(), byteorder="little")


def write_native(instance: CardXorInstance, sink: TextIO) -> None:
    """Write an instance in the native ".cx" text format.

    Args:
        instance: The instance to write.
        sink: Open text stream.
    """
    digits = (instance.n + 3) // 4
    sink.write(f"{MAGIC} {instance.n} {instance.m} {instance.k} {instance.s} {instance.seed}\n")
    for index, row in enumerate(instance.xors.rows):
        sink.write(f"{row.bits:0{digits}x} {instance.xors.rhs_bit(index)}\n")


def read_native(source: TextIO | Iterable[str]) -> CardXorInstance:
    """Read an instance written by write_native.

    Args:
        source: Open text stream, or any iterable of lines.

    Returns:
        The instance, bit-exact with the one that was written.

    Raises:
        ParseError if the header or any row is malformed, or the row count does not match the header.
    """
    lines = [(number, line.strip()) for number, line in enumerate(source, start=1)]
    lines = [(number, line) for number, line in lines if line]
    if not lines:
        raise ParseError("empty input, expected a cardxor header", 1)

    number, header = lines[0]
    fields = header.split()
    if len(fields) != 6 or fields[0] != MAGIC:
        raise ParseError(f"expected '{MAGIC} n m k s seed', found {header!r}", number)
    try:
        n, m, k = int(fields[1]), int(fields[2]), int(fields[3])
        s = Fraction(fields[4])
        seed = int(fields[5])
    except ValueError as error:
        raise ParseError(f"invalid header value: {error}", number) from error
    if n < 1 or m < 0:
        raise ParseError(f"invalid dimensions n={n} m={m}", number)
    if not 0 <= k <= n:
        raise ParseError(f"cardinality bound k={k} outside [0, {n}]", number)
    if not 0 <= seed <= MASK64:
        raise ParseError(f"seed {seed} is not an unsigned 64-bit value", number)

    body = lines[1:]
    if len(body) != m:
        last = body[-1][0] if body else number
        raise ParseError(f"header declares {m} rows, found {len(body)}", last)
    rows = []
    rhs = 0
    for index, (number, line) in enumerate(body):
        parts = line.split()
        if len(parts) != 2 or parts[1] not in ("0", "1"):
            raise ParseError(f"expected '<hex row> <0|1>', found {line!r}", number)
        try:
            bits = int(parts[0], 16)
        except ValueError as error:
            raise ParseError(f"invalid hex row {parts[0]!r}", number) from error
        if bits >> n:
            raise ParseError(f"row {parts[0]} has bits beyond column {n - 1}", number)
        rows.append(BitRow(bits, n))
        if parts[1] == "1":
            rhs |= 1 << index
    return CardXorInstance(Gf2System(tuple(rows), rhs, n), CardConstraint(n, k), seed, s)


def write_witness(x: int, n: int, sink: TextIO) -> None:
    """Write an assignment of x1..xn as one zero-padded hex bit vector, the row format of ".cx" files."""
    sink.write(f"{x:0{(n + 3) // 4}x}\n")


def read_witness(source: TextIO | Iterable[str], n: int) -> int:
    """Read an assignment of x1..xn.

    Two layouts are accepted: a single hex bit vector as written by write_witness, or solver style "v" lines of
    DIMACS literals. Literals above n (auxiliary variables) are ignored, "c" and "s" lines are skipped.

    Raises:
        ParseError if the input matches neither layout.
    """
    hex_lines = []
    literals = []
    for number, line in enumerate(source, start=1):
        line = line.strip()
        if not line or line == "c" or line.startswith(("c ", "s ")):
            continue
        if line.startswith("v"):
            try:
                literals.extend(int(token) for token in line[1:].split())
            except ValueError as error:
                raise ParseError(f"invalid value line {line!r}", number) from error
        else:
            hex_lines.append((number, line))
    if hex_lines and literals:
        raise ParseError("witness mixes a hex vector with 'v' lines", hex_lines[0][0])
    if literals:
        return sum(1 << (lit - 1) for lit in set(literals) if 0 < lit <= n)
    if len(hex_lines) != 1:
        raise ParseError(f"expected one hex bit vector, found {len(hex_lines)} lines", hex_lines[-1][0] if hex_lines else 1)
    number, text = hex_lines[0]
    try:
        x = int(text, 16)
    except ValueError as error:
        raise ParseError(f"invalid hex witness {text!r}", number) from error
    if x < 0 or x >> n:
        raise ParseError(f"witness {text} has bits beyond column {n - 1}", number)
    return x
