"""Global fixtures for pytest."""

import shlex
import sys
from pathlib import Path
from typing import Callable

import pytest

from cardxor.encode import CnfFormula
from cardxor.encode import PropagationStatus
from cardxor.encode import unit_propagate


@pytest.fixture
def function_tester() -> Callable:
    """Create a reusable fixture to run a basic test case against a function."""

    def function_tester(test: dict, func: Callable, compare: Callable | None = None) -> None:
        """Run a basic test case against a function.

        Test case guidelines:
            - If testing function output, use: args and/or kwargs + returns
            - If testing function exceptions, use: args and/or kwargs + raises
            - If testing class creation, use class' __call__ in the test, and use: args and/or kwargs + attributes

        Args:
            test: Configuration parameters for testing a callable.
                Optional keys: "args" and/or "kwargs"
                Mandatory keys: "returns" or "raises" or "attributes"
            func: A callable to pass args and kwargs to, and capture results/errors from.
            compare: A function to use for comparing the actual result and expected result.
                Defaults to a "==" comparison.
        """
        result_types_found = [name in test for name in ("returns", "raises", "attributes")]
        if not result_types_found.count(True):
            raise ValueError("Test must declare one of: returns, raises, attributes")
        if result_types_found.count(True) > 1:
            raise ValueError("Test must declare only one of: returns, raises, attributes")

        args = test.get("args", [])
        kwargs = test.get("kwargs", {})
        raises = test.get("raises")
        if raises:
            with pytest.raises(raises):
                func(*args, **kwargs)
        else:
            expected = test.get("returns")
            attributes = test.get("attributes")
            if attributes is not None and not attributes:
                raise ValueError("Test attributes result type must have values")
            result = func(*args, **kwargs)
            if attributes:
                attribute_results = {name: getattr(result, name) for name in attributes.keys()}
                equals = compare(attribute_results, attributes) if compare else attribute_results == attributes
                assert equals, f"\nResult:\n\t{attribute_results}\nExpected:\n\t{attributes}"
            else:
                equals = compare(result, expected) if compare else expected == result
                assert equals, f"\nResult:\n\t{result}\nExpected:\n\t{expected}"

    return function_tester


def _satisfiable(cnf: CnfFormula, assumptions: list[int]) -> bool:
    """Decide the CNF part of a formula by propagation and branching, trying all-false and all-true completions first."""
    result = unit_propagate(cnf, assumptions)
    if result.status is PropagationStatus.CONFLICT:
        return False
    values = result.forced
    for default in (False, True):
        if all(any(values.get(abs(lit), default) == (lit > 0) for lit in clause) for clause in cnf.clauses):
            return True
    var = next(abs(lit) for clause in cnf.clauses for lit in clause if abs(lit) not in values)
    forced = [known if value else -known for known, value in values.items()]
    return _satisfiable(cnf, forced + [-var]) or _satisfiable(cnf, forced + [var])


def _extends(cnf: CnfFormula, x: int, n: int) -> bool:
    """Check whether the packed assignment x of x1..xn extends to a model of the formula.

    Native XOR clauses must range over x1..xn only, and are checked directly on x.
    """
    if any(sum((x >> (var - 1)) & 1 for var in variables) % 2 != parity for variables, parity in cnf.xor_clauses):
        return False
    assumptions = [var if (x >> (var - 1)) & 1 else -var for var in range(1, n + 1)]
    return _satisfiable(cnf, assumptions)


@pytest.fixture
def extends_to_model() -> Callable:
    """Create a reusable fixture checking whether one assignment of x1..xn extends to a model of a formula."""
    return _extends


@pytest.fixture
def projected_models() -> Callable:
    """Create a reusable fixture listing the assignments of x1..xn that extend to a model of a formula."""

    def projected_models(cnf: CnfFormula, n: int) -> list[int]:
        """Enumerate the models of a formula projected onto its first n variables.

        Args:
            cnf: Formula to check.
            n: Number of original variables. Every assignment of x1..xn is tried, so n must be small.

        Returns:
            Packed assignments of x1..xn, in increasing order, for which some auxiliary extension satisfies cnf.
        """
        return [x for x in range(1 << n) if _extends(cnf, x, n)]

    return projected_models


@pytest.fixture
def fake_solver(tmp_path: Path) -> Callable:
    """Create a reusable fixture that writes a Python script standing in for an external SAT solver."""

    def fake_solver(body: str) -> str:
        """Write the script and return a command template that runs it on "{path}".

        Args:
            body: Python source of the script. The DIMACS path is sys.argv[-1].
        """
        script = tmp_path / "solver.py"
        script.write_text(body, encoding="utf-8")
        return f"{shlex.quote(sys.executable)} {shlex.quote(str(script))} {{path}}"

    return fake_solver


def pytest_generate_tests(metafunc: pytest.Metafunc) -> None:
    """Process custom paramtrize options to streamline sets of tests with easily identifiable ids."""
    mark = metafunc.definition.get_closest_marker("parametrize_test_case")
    if mark:
        args = list(mark.args)
        test_case = args[1]
        args[1] = [value for value in (list(test_case.values()) if isinstance(test_case, dict) else test_case)]
        kwargs = mark.kwargs
        kwargs["ids"] = [str(value) for value in (list(test_case.keys()) if isinstance(test_case, dict) else test_case)]
        metafunc.parametrize(*args, **kwargs)
