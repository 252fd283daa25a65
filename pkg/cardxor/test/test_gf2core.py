"""Unit tests for GF(2) elimination utilities."""

from typing import Callable

import numpy as np
import pytest

from cardxor import gf2core
from cardxor.gf2core import BitRow
from cardxor.gf2core import Gf2System

IDENTITY = Gf2System.from_lists([[1, 0, 0], [0, 1, 0], [0, 0, 1]], [1, 0, 1])
DUPLICATE = Gf2System.from_lists([[1, 1, 0], [1, 1, 0]], [0, 1])
CHAIN = Gf2System.from_lists([[1, 1, 0], [0, 1, 1]], [1, 1])
EMPTY = Gf2System.from_lists([], [], n=4)

TEST_CASES = {
    "bit_row": {
        "from bits": {
            "args": [[1, 0, 1, 1]],
            "attributes": {"bits": 0b1101, "width": 4},
        },
        "empty": {
            "args": [[]],
            "attributes": {"bits": 0, "width": 0},
        },
    },
    "bit_row_invalid": {
        "bits beyond width": {
            "args": [0b100, 2],
            "raises": ValueError,
        },
        "negative bits": {
            "args": [-1, 4],
            "raises": ValueError,
        },
        "negative width": {
            "args": [0, -1],
            "raises": ValueError,
        },
    },
    "eliminate": {
        "identity": {
            "args": [IDENTITY],
            "attributes": {"rank": 3, "consistent": True, "pivot_cols": (0, 1, 2), "free_cols": []},
        },
        "duplicate row with contradictory rhs": {
            "args": [DUPLICATE],
            "attributes": {"rank": 1, "consistent": False, "pivot_cols": (0,)},
        },
        "chain": {
            "args": [CHAIN],
            "attributes": {"rank": 2, "consistent": True, "pivot_cols": (0, 1), "free_cols": [2]},
        },
        "empty system": {
            "args": [EMPTY],
            "attributes": {"rank": 0, "consistent": True, "pivot_cols": (), "free_cols": [0, 1, 2, 3]},
        },
        "zero row with rhs 1": {
            "args": [Gf2System.from_lists([[0, 0, 0]], [1])],
            "attributes": {"rank": 0, "consistent": False},
        },
    },
    "particular_solution": {
        "identity": {
            "args": [IDENTITY],
            "returns": [1, 0, 1],
        },
        "inconsistent": {
            "args": [DUPLICATE],
            "returns": None,
        },
        "chain with free column cleared": {
            "args": [CHAIN],
            "returns": [0, 1, 0],
        },
        "empty system": {
            "args": [EMPTY],
            "returns": [0, 0, 0, 0],
        },
    },
    "null_basis": {
        "identity": {
            "args": [IDENTITY],
            "returns": [],
        },
        "chain": {
            "args": [CHAIN],
            "returns": [[1, 1, 1]],
        },
        "empty system": {
            "args": [EMPTY],
            "returns": [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]],
        },
    },
    "multiply": {
        "identity": {
            "args": [IDENTITY, 0b101],
            "returns": 0b101,
        },
        "chain with all ones": {
            "args": [CHAIN, BitRow(0b111, 3)],
            "returns": 0b00,
        },
        "chain with single variable": {
            "args": [CHAIN, 0b010],
            "returns": 0b11,
        },
        "empty system": {
            "args": [EMPTY, 0b1111],
            "returns": 0,
        },
    },
    "solution_count": {
        "identity": {
            "args": [IDENTITY],
            "returns": 1,
        },
        "inconsistent": {
            "args": [DUPLICATE],
            "returns": 0,
        },
        "chain": {
            "args": [CHAIN],
            "returns": 2,
        },
        "empty system": {
            "args": [EMPTY],
            "returns": 16,
        },
    },
}


def _random_system(rng: np.random.Generator, n: int, m: int) -> Gf2System:
    """Build a system with fair-coin entries."""
    coins = rng.integers(0, 2, size=(m, n + 1))
    return Gf2System.from_lists(coins[:, :n].tolist(), coins[:, n].tolist(), n=n)


def _span(basis: list[BitRow]) -> set[int]:
    """Every XOR combination of the basis vectors."""
    vectors = {0}
    for vector in basis:
        vectors |= {existing ^ vector.bits for existing in vectors}
    return vectors


@pytest.mark.parametrize_test_case("test_case", TEST_CASES["bit_row"])
def test_bit_row(test_case: dict, function_tester: Callable) -> None:
    """Unit tests for BitRow.from_bits."""
    function_tester(test_case, BitRow.from_bits)


@pytest.mark.parametrize_test_case("test_case", TEST_CASES["bit_row_invalid"])
def test_bit_row_invalid(test_case: dict, function_tester: Callable) -> None:
    """Ensure rows that do not fit their width are rejected."""
    function_tester(test_case, BitRow)


def test_bit_row_operations() -> None:
    """Ensure XOR, indexing, and weights operate on the packed bits."""
    row = BitRow.from_bits([1, 1, 0, 1])
    assert (row ^ BitRow.unit(0, 4)).to_bits() == [0, 1, 0, 1]
    assert row[3] == 1 and row[2] == 0
    assert len(row) == 4
    assert row.popcount() == 3
    assert BitRow.zero(4).popcount() == 0
    with pytest.raises(IndexError):
        _ = row[4]
    with pytest.raises(ValueError):
        _ = row ^ BitRow.zero(5)


@pytest.mark.parametrize_test_case("test_case", TEST_CASES["eliminate"])
def test_eliminate(test_case: dict, function_tester: Callable) -> None:
    """Unit tests for eliminate."""
    function_tester(test_case, gf2core.eliminate)


@pytest.mark.parametrize_test_case("test_case", TEST_CASES["particular_solution"])
def test_particular_solution(test_case: dict, function_tester: Callable) -> None:
    """Unit tests for particular_solution."""

    def _solve(system: Gf2System) -> list[int] | None:
        solution = gf2core.particular_solution(gf2core.eliminate(system))
        if solution is not None:
            assert gf2core.is_solution(system, solution)
            return solution.to_bits()
        return None

    function_tester(test_case, _solve)


@pytest.mark.parametrize_test_case("test_case", TEST_CASES["null_basis"])
def test_null_basis(test_case: dict, function_tester: Callable) -> None:
    """Unit tests for null_basis."""

    def _basis(system: Gf2System) -> list[list[int]]:
        basis = gf2core.null_basis(gf2core.eliminate(system))
        for vector in basis:
            assert gf2core.multiply(system, vector) == 0
        return [vector.to_bits() for vector in basis]

    function_tester(test_case, _basis)


@pytest.mark.parametrize_test_case("test_case", TEST_CASES["multiply"])
def test_multiply(test_case: dict, function_tester: Callable) -> None:
    """Unit tests for multiply."""
    function_tester(test_case, gf2core.multiply)


@pytest.mark.parametrize_test_case("test_case", TEST_CASES["solution_count"])
def test_solution_count(test_case: dict, function_tester: Callable) -> None:
    """Unit tests for solution_count."""
    function_tester(test_case, lambda system: gf2core.solution_count(gf2core.eliminate(system)))


def test_reduced_form() -> None:
    """Ensure every pivot column is zero outside its own row, and rows past the rank are zero."""
    rng = np.random.default_rng(11)
    for _ in range(50):
        system = _random_system(rng, 12, int(rng.integers(1, 16)))
        form = gf2core.eliminate(system)
        for index, col in enumerate(form.pivot_cols):
            column = [(row.bits >> col) & 1 for row in form.reduced_rows]
            assert column == [int(other == index) for other in range(system.m)]
        assert all(row.bits == 0 for row in form.reduced_rows[form.rank :])
        assert list(form.pivot_cols) == sorted(form.pivot_cols)


@pytest.mark.parametrize("n", [1, 5, 10])
def test_solution_set_matches_enumeration(n: int) -> None:
    """Ensure x0 + span(null_basis) is exactly the set of solutions found by enumeration."""
    rng = np.random.default_rng(n)
    for _ in range(100):
        system = _random_system(rng, n, int(rng.integers(0, n + 3)))
        form = gf2core.eliminate(system)
        expected = {x for x in range(1 << n) if gf2core.is_solution(system, x)}
        x0 = gf2core.particular_solution(form)
        if x0 is None:
            assert not form.consistent
            assert not expected
            continue
        solutions = {x0.bits ^ vector for vector in _span(gf2core.null_basis(form))}
        assert solutions == expected
        assert len(expected) == gf2core.solution_count(form) == 1 << (n - form.rank)


@pytest.mark.slow
def test_solution_set_matches_membership() -> None:
    """Ensure x0 + span(null_basis) is exactly the solution set on random systems with up to 20 variables.

    Systems up to 12 variables are enumerated in full. Wider ones check every spanned vector plus random assignments.
    """
    rng = np.random.default_rng(20)
    for trial in range(1000):
        n = 1 + trial % 20
        system = _random_system(rng, n, int(rng.integers(max(0, n - 10), n + 3)))
        form = gf2core.eliminate(system)
        candidates = range(1 << n) if n <= 12 else rng.integers(0, 1 << n, size=256).tolist()
        x0 = gf2core.particular_solution(form)
        if x0 is None:
            assert not form.consistent, trial
            assert not any(gf2core.is_solution(system, x) for x in candidates), trial
            continue
        solutions = {x0.bits ^ vector for vector in _span(gf2core.null_basis(form))}
        assert len(solutions) == gf2core.solution_count(form) == 1 << (n - form.rank), trial
        assert all(gf2core.is_solution(system, x) for x in solutions), trial
        assert all((x in solutions) == gf2core.is_solution(system, x) for x in candidates), trial


def test_eliminate_idempotent() -> None:
    """Ensure reducing an already reduced system keeps rank, pivots, and consistency."""
    rng = np.random.default_rng(3)
    for _ in range(100):
        system = _random_system(rng, 15, int(rng.integers(1, 20)))
        form = gf2core.eliminate(system)
        again = gf2core.eliminate(form.as_system())
        assert (again.rank, again.pivot_cols, again.consistent) == (form.rank, form.pivot_cols, form.consistent)
        assert again.reduced_rows == form.reduced_rows


def test_eliminate_leaves_input() -> None:
    """Ensure elimination does not modify the input system."""
    before = CHAIN.rows
    gf2core.eliminate(CHAIN)
    assert CHAIN.rows == before
    assert CHAIN.rhs == 0b11
