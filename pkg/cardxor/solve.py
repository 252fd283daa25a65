"""Decision procedures for 1-CARD-XOR instances.

Three engines are available:
    - brute: exhaustive Gray-code scan, the ground-truth oracle for small n.
    - bnb: branch and bound over the coset x0 + kernel(A). Deciding the instance is the maximum-likelihood
      decoding question "does the coset of solutions of A·x = b contain a vector of weight <= k".
    - external: extended DIMACS handed to a SAT solver process that follows the competition output format.

Every satisfiable result is checked against the instance when it is built, whatever engine produced it.
"""

from __future__ import annotations

import enum
import logging
import os
import shlex
import subprocess  # nosec B404
import tempfile
import time
from dataclasses import dataclass
from dataclasses import field

from cardxor import gf2core
from cardxor.encode import EncodingChoice
from cardxor.encode import encode_instance
from cardxor.encode import write_dimacs
from cardxor.errors import InstanceTooLargeError
from cardxor.errors import InvalidConfigError
from cardxor.errors import OutputParseError
from cardxor.errors import SpawnError
from cardxor.errors import WitnessVerificationError
from cardxor.instance import CardXorInstance

logger = logging.getLogger(__name__)

BRUTE_FORCE_MAX_N = 26
# Timeouts are checked once per 2^12 search nodes.
CHECK_INTERVAL_MASK = (1 << 12) - 1
SOLVER_CMD_ENV = "CARDXOR_SOLVER_CMD"

# Polarity keywords understood by CryptoMiniSat's --polar option.
POLARITY_KEYWORDS = {
    "false-first": "false",
    "true-first": "true",
    "cached": "auto",
}


class Status(str, enum.Enum):
    """Verdict of a solve call."""

    SAT = "sat"
    UNSAT = "unsat"
    TIMEOUT = "timeout"


class Engine(str, enum.Enum):
    """Available decision procedures."""

    BRUTE = "brute"
    BNB = "bnb"
    EXTERNAL = "external"


class Polarity(str, enum.Enum):
    """Branch order: which value a decision tries first."""

    FALSE_FIRST = "false-first"
    TRUE_FIRST = "true-first"
    CACHED = "cached"


@dataclass(frozen=True)
class SolveStats:
    """Search statistics.

    Attributes:
        decisions: Branching decisions (bnb), or assignments visited (brute).
        propagations: Propagated literals. Always 0 for internal engines.
        elapsed: Wall time in seconds.
    """

    decisions: int = 0
    propagations: int = 0
    elapsed: float = 0.0


@dataclass(frozen=True)
class SolveResult:
    """Outcome of a solve call.

    Attributes:
        status: sat, unsat, or timeout.
        witness: Packed assignment of x1..xn when status is sat.
        min_weight: Minimum weight of the solution coset, only when the search proved it.
        stats: Search statistics.
    """

    status: Status
    witness: int | None = None
    min_weight: int | None = None
    stats: SolveStats = field(default_factory=SolveStats)


@dataclass(frozen=True)
class EngineConfig:
    """Engine selection and limits.

    Attributes:
        engine: Which decision procedure to run.
        timeout: Wall time limit in seconds.
        polarity: Value tried first at each branch (bnb), or passed to the external solver.
        external_cmd: Command template for the external engine. "{path}" is replaced by the DIMACS file, and
            "{polarity}" by the solver's polarity keyword. Falls back to the CARDXOR_SOLVER_CMD environment variable.
        minimize: Run bnb to completion and report the coset minimum weight.
        strong_bound: Add unavoidable dependent-variable weight to the bnb pruning bound.
    """

    engine: Engine = Engine.BNB
    timeout: float = 10.0
    polarity: Polarity = Polarity.FALSE_FIRST
    external_cmd: str | None = None
    minimize: bool = False
    strong_bound: bool = False

    def __post_init__(self) -> None:
        """Normalize enum values and validate limits."""
        object.__setattr__(self, "engine", Engine(self.engine))
        object.__setattr__(self, "polarity", Polarity(self.polarity))
        if not self.timeout > 0:
            raise InvalidConfigError(f"Timeout must be positive, got {self.timeout}")

    def command_template(self) -> str | None:
        """The external command template, from the config or the environment."""
        return self.external_cmd or os.environ.get(SOLVER_CMD_ENV)


class _Timeout(Exception):
    """Raised inside a search when the deadline passes."""


def _make_result(
    instance: CardXorInstance,
    status: Status,
    stats: SolveStats,
    witness: int | None = None,
    min_weight: int | None = None,
) -> SolveResult:
    """Build a result, verifying any witness against the instance."""
    if witness is not None and not instance.check_witness(witness):
        raise WitnessVerificationError(
            f"Witness {witness:#x} violates the instance (weight {witness.bit_count()}, k={instance.k})"
        )
    return SolveResult(status, witness, min_weight, stats)


def brute_force(instance: CardXorInstance, cfg: EngineConfig) -> SolveResult:
    """Scan every assignment in Gray-code order.

    Consecutive assignments differ in one variable, so the syndrome A·x is updated with a single XOR of that
    variable's column.

    Raises:
        InstanceTooLargeError if n exceeds the exhaustive search guard.
    """
    n = instance.n
    if n > BRUTE_FORCE_MAX_N:
        raise InstanceTooLargeError(f"Brute force supports n <= {BRUTE_FORCE_MAX_N}, got n={n}")
    start = time.monotonic()
    deadline = start + cfg.timeout
    columns = [0] * n
    for index, row in enumerate(instance.xors.rows):
        for col in range(n):
            if (row.bits >> col) & 1:
                columns[col] |= 1 << index
    target = instance.xors.rhs
    k = instance.k

    x = 0
    syndrome = 0
    weight = 0
    if syndrome == target:
        return _make_result(instance, Status.SAT, SolveStats(1, 0, time.monotonic() - start), x)
    for step in range(1, 1 << n):
        if not step & CHECK_INTERVAL_MASK and time.monotonic() > deadline:
            return SolveResult(Status.TIMEOUT, stats=SolveStats(step, 0, time.monotonic() - start))
        col = (step & -step).bit_length() - 1
        x ^= 1 << col
        syndrome ^= columns[col]
        weight += 1 if (x >> col) & 1 else -1
        if syndrome == target and weight <= k:
            return _make_result(instance, Status.SAT, SolveStats(step + 1, 0, time.monotonic() - start), x)
    return SolveResult(Status.UNSAT, stats=SolveStats(1 << n, 0, time.monotonic() - start))


class _CosetSearch:
    """Depth-first search over the free variables of a reduced system.

    Each dependent (pivot) variable equals its reduced rhs bit XOR the parity of the free variables in its row.
    A dependent becomes decided once the last free variable of its row, in branch order, is assigned.
    """

    def __init__(self, form: gf2core.EchelonForm, k: int, cfg: EngineConfig, deadline: float) -> None:
        """Prepare branch order and the per-depth dependents."""
        self.k = k
        self.cfg = cfg
        self.deadline = deadline
        self.nodes = 0
        self.decisions = 0
        self.best_weight: int | None = None
        self.best_x: int | None = None

        free_cols = form.free_cols
        dependents = []
        for index, col in enumerate(form.pivot_cols):
            mask = form.reduced_rows[index].bits & ~(1 << col)
            dependents.append((col, mask, (form.reduced_rhs >> index) & 1))

        # Branch first on free variables that influence the most dependents, ties by column.
        influence = {free: sum(1 for _, mask, _ in dependents if (mask >> free) & 1) for free in free_cols}
        self.order = sorted(free_cols, key=lambda free: (-influence[free], free))
        position = {free: depth for depth, free in enumerate(self.order)}

        self.decided_at: list[list[tuple[int, int, int]]] = [[] for _ in self.order]
        self.root_weight = 0
        self.root_x = 0
        for col, mask, rhs in dependents:
            cols = [free for free in free_cols if (mask >> free) & 1]
            if not cols:
                self.root_weight += rhs
                self.root_x |= rhs << col
            else:
                self.decided_at[max(position[free] for free in cols)].append((col, mask, rhs))
        # Dependents still open after each depth, for the strong bound.
        self.open_after: list[list[tuple[int, int, int]]] = []
        remaining = [dep for deps in self.decided_at for dep in deps]
        for depth in range(len(self.order)):
            decided = set(dep[0] for dep in self.decided_at[depth])
            remaining = [dep for dep in remaining if dep[0] not in decided]
            self.open_after.append(remaining)
        self.assigned_masks = []
        assigned = 0
        for free in self.order:
            assigned |= 1 << free
            self.assigned_masks.append(assigned)
        # Cached polarity: the value of each free variable on the path to the latest improved leaf.
        self.saved_phase = {free: 0 for free in free_cols}
        self.improvements = 0

    def unavoidable(self, depth: int, x: int) -> int:
        """Weight every completion must add: dependents sharing open support can never all be false."""
        groups: dict[int, list[int]] = {}
        assigned_mask = self.assigned_masks[depth]
        for _, mask, rhs in self.open_after[depth]:
            current = rhs ^ gf2core.parity(x & mask)
            counts = groups.setdefault(mask & ~assigned_mask, [0, 0])
            counts[current] += 1
        return sum(min(counts) for counts in groups.values())

    def values(self, free: int) -> tuple[int, int]:
        """Branch order for one free variable."""
        if self.cfg.polarity is Polarity.TRUE_FIRST:
            return 1, 0
        if self.cfg.polarity is Polarity.CACHED:
            first = self.saved_phase[free]
            return first, 1 - first
        return 0, 1

    def run(self) -> bool:
        """Search until a witness is found (decision mode) or the space is exhausted.

        Returns:
            True if the search stopped early on a witness of weight <= k.
        """
        return self._search(0, self.root_x, self.root_weight)

    def _search(self, depth: int, x: int, weight: int) -> bool:
        self.nodes += 1
        if not self.nodes & CHECK_INTERVAL_MASK and time.monotonic() > self.deadline:
            raise _Timeout()
        if depth == len(self.order):
            if self.best_weight is None or weight < self.best_weight:
                self.best_weight, self.best_x = weight, x
                self.improvements += 1
            return not self.cfg.minimize and weight <= self.k

        free = self.order[depth]
        for value in self.values(free):
            self.decisions += 1
            child = x | (value << free)
            child_weight = weight + value
            for col, mask, rhs in self.decided_at[depth]:
                bit = rhs ^ gf2core.parity(child & mask)
                child |= bit << col
                child_weight += bit
            bound = child_weight
            if self.cfg.strong_bound:
                bound += self.unavoidable(depth, child)
            if self.cfg.minimize:
                if self.best_weight is not None and bound >= self.best_weight:
                    continue
            elif bound > self.k:
                continue
            improvements = self.improvements
            found = self._search(depth + 1, child, child_weight)
            if found or self.improvements > improvements:
                self.saved_phase[free] = value
            if found:
                return True
        return False


def coset_bnb(instance: CardXorInstance, cfg: EngineConfig) -> SolveResult:
    """Decide an instance by branch and bound over the solutions of A·x = b.

    The system is reduced first. An inconsistent system is unsatisfiable at once. Otherwise the free variables are
    branched on, dependent variables follow by back-substitution, and a node is pruned when the weight already
    forced among decided positions exceeds k. With cfg.minimize the search runs to completion as a minimum-weight
    decoder and the proven minimum is reported.
    """
    start = time.monotonic()
    form = gf2core.eliminate(instance.xors)
    if not form.consistent:
        return SolveResult(Status.UNSAT, stats=SolveStats(0, 0, time.monotonic() - start))

    search = _CosetSearch(form, instance.k, cfg, start + cfg.timeout)
    try:
        found = search.run()
    except _Timeout:
        return SolveResult(Status.TIMEOUT, stats=SolveStats(search.decisions, 0, time.monotonic() - start))
    stats = SolveStats(search.decisions, 0, time.monotonic() - start)

    if cfg.minimize:
        # Minimization never prunes the optimum, so the incumbent is the coset minimum.
        best = search.best_weight
        if best is not None and best <= instance.k:
            return _make_result(instance, Status.SAT, stats, search.best_x, best)
        return SolveResult(Status.UNSAT, min_weight=best, stats=stats)
    if found:
        return _make_result(instance, Status.SAT, stats, search.best_x)
    return SolveResult(Status.UNSAT, stats=stats)


def parse_solver_output(stdout: str, n: int) -> tuple[Status, int | None]:
    """Parse competition-format solver output.

    Args:
        stdout: Full standard output of the solver.
        n: Number of original variables to extract from "v" lines.

    Returns:
        The status, and the packed assignment of x1..xn if the solver printed one.

    Raises:
        OutputParseError if there is no recognizable status line.
    """
    status = None
    literals: list[int] = []
    for line in stdout.splitlines():
        line = line.strip()
        if line.startswith("s "):
            answer = line[2:].strip().upper()
            if answer == "SATISFIABLE":
                status = Status.SAT
            elif answer == "UNSATISFIABLE":
                status = Status.UNSAT
            else:
                raise OutputParseError(f"Solver gave no verdict: {line!r}")
        elif line.startswith("v "):
            try:
                literals.extend(int(token) for token in line[2:].split())
            except ValueError as error:
                raise OutputParseError(f"Invalid value line: {line!r}") from error
    if status is None:
        raise OutputParseError("Solver output has no 's' status line")
    if status is not Status.SAT or not literals:
        return status, None
    witness = 0
    for lit in literals:
        if 0 < lit <= n:
            witness |= 1 << (lit - 1)
    return status, witness


def _build_command(template: str, path: str, polarity: Polarity) -> list[str]:
    """Expand a command template into an argument list."""
    if "{path}" not in template:
        template = f"{template} {{path}}"
    command = template.format(path=shlex.quote(path), polarity=POLARITY_KEYWORDS[polarity.value])
    return shlex.split(command)


def external(instance: CardXorInstance, cfg: EngineConfig, choice: EncodingChoice | None = None) -> SolveResult:
    """Decide an instance with an external SAT solver process.

    Exit codes of the solver are not trusted: the "s" status line is authoritative. Inconsistent XOR systems are
    reported unsatisfiable without starting the solver.

    Raises:
        InvalidConfigError if no command template is configured.
        SpawnError, OutputParseError, WitnessVerificationError on solver failures, after logging them at WARNING.
    """
    start = time.monotonic()
    template = cfg.command_template()
    if not template:
        raise InvalidConfigError(f"External engine needs a command template (--solver-cmd or {SOLVER_CMD_ENV})")
    if not gf2core.eliminate(instance.xors).consistent:
        return SolveResult(Status.UNSAT, stats=SolveStats(0, 0, time.monotonic() - start))

    formula = encode_instance(instance, choice or EncodingChoice())
    with tempfile.TemporaryDirectory(prefix="cardxor-") as workdir:
        path = os.path.join(workdir, "instance.cnf")
        with open(path, "w", encoding="utf-8") as sink:
            write_dimacs(formula, sink)
        command = _build_command(template, path, cfg.polarity)
        logger.debug(f"Running external solver: {command}")
        try:
            process = subprocess.run(  # nosec B603
                command,
                capture_output=True,
                text=True,
                timeout=cfg.timeout,
                check=False,
            )
        except subprocess.TimeoutExpired:
            return SolveResult(Status.TIMEOUT, stats=SolveStats(0, 0, time.monotonic() - start))
        except OSError as error:
            logger.warning(f"Could not start solver {command[0]!r}: {error}")
            raise SpawnError(f"Could not start solver {command[0]!r}: {error}") from error

    try:
        status, witness = parse_solver_output(process.stdout, instance.n)
        stats = SolveStats(0, 0, time.monotonic() - start)
        if status is Status.SAT:
            return _make_result(instance, status, stats, witness)
    except (OutputParseError, WitnessVerificationError) as error:
        logger.warning(f"Solver {command[0]!r} failed: {error}")
        raise
    return SolveResult(status, stats=stats)


def solve(instance: CardXorInstance, cfg: EngineConfig, choice: EncodingChoice | None = None) -> SolveResult:
    """Run the configured engine on an instance."""
    logger.debug(f"Solving n={instance.n} m={instance.m} k={instance.k} with {cfg.engine.value}")
    if cfg.engine is Engine.BRUTE:
        result = brute_force(instance, cfg)
    elif cfg.engine is Engine.BNB:
        result = coset_bnb(instance, cfg)
    else:
        result = external(instance, cfg, choice)
    logger.debug(f"Verdict {result.status.value} after {result.stats.decisions} decisions")
    return result
