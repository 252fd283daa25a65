"""Grid experiments over (k, m) at a fixed n.

Every cell (k, m, trial) is generated from a seed derived from the cell coordinates alone, solved, and stored as one
SweepRecord. Records are sorted by (k, m, trial) after solving, so the output does not depend on the worker count or
on completion order. Per-cell failures become records with status "error" and never abort the sweep.

Summaries aggregate the trials of each cell and can be rendered as an SVG heatmap over x = k/n and y = s = m/n with
the transition curve phi(k/n) drawn on top.
"""

from __future__ import annotations

import csv
import enum
import logging
import math
import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace
from fractions import Fraction
from typing import Iterable
from typing import Sequence
from typing import TextIO

import numpy as np
from matplotlib.figure import Figure

from cardxor import transition
from cardxor.encode import EncodingChoice
from cardxor.errors import InvalidConfigError
from cardxor.errors import PreconditionError
from cardxor.instance import GenConfig
from cardxor.instance import as_fraction
from cardxor.instance import derive_seed
from cardxor.instance import generate
from cardxor.solve import Engine
from cardxor.solve import EngineConfig
from cardxor.solve import Polarity
from cardxor.solve import Status
from cardxor.solve import solve

logger = logging.getLogger(__name__)

CSV_HEADER = [
    "master_seed",
    "n",
    "k",
    "m",
    "trial",
    "seed",
    "engine",
    "encoding",
    "status",
    "time_ms",
    "decisions",
    "min_weight",
]
ERROR_STATUS = "error"
NO_ENCODING = "none"
# Allowance, in binomial standard deviations, before a statistical floor counts as violated.
SIGMA_ALLOWANCE = 3.0


class Metric(str, enum.Enum):
    """Cell value rendered in a heatmap."""

    SAT_FRACTION = "sat_fraction"
    MEDIAN_TIME = "median_time"
    TIMEOUT_FRACTION = "timeout_fraction"


_COLORMAPS = {
    Metric.SAT_FRACTION: "Blues",
    Metric.MEDIAN_TIME: "Purples",
    Metric.TIMEOUT_FRACTION: "Purples",
}


@dataclass(frozen=True)
class SweepPlan:
    """A full grid experiment.

    Attributes:
        n: Variable count.
        master_seed: Seed shared by every cell.
        k_values: Cardinality bounds to visit. Defaults to 0..n.
        m_values: XOR row counts to visit. Defaults to 1..n.
        trials: Instances per cell.
        engine: Engine used on every cell.
        encoding: Encoding handed to the external engine.
        margin: Distance from phi used when classifying cells.
    """

    n: int
    master_seed: int
    k_values: tuple[int, ...] = ()
    m_values: tuple[int, ...] = ()
    trials: int = 20
    engine: EngineConfig = field(default_factory=EngineConfig)
    encoding: EncodingChoice = field(default_factory=EncodingChoice)
    margin: float = 0.2

    def __post_init__(self) -> None:
        """Fill default ranges and validate the grid."""
        if self.n < 1:
            raise InvalidConfigError(f"Sweep needs n >= 1, got n={self.n}")
        if not self.k_values:
            object.__setattr__(self, "k_values", tuple(range(self.n + 1)))
        if not self.m_values:
            object.__setattr__(self, "m_values", tuple(range(1, self.n + 1)))
        object.__setattr__(self, "k_values", tuple(self.k_values))
        object.__setattr__(self, "m_values", tuple(self.m_values))
        if self.trials < 1:
            raise InvalidConfigError(f"Sweep needs at least one trial per cell, got {self.trials}")
        if any(not 0 <= k <= self.n for k in self.k_values):
            raise InvalidConfigError(f"Every k must lie in [0, {self.n}], got {self.k_values}")
        if any(m < 1 for m in self.m_values):
            raise InvalidConfigError(f"Every m must be at least 1, got {self.m_values}")
        if self.margin < 0:
            raise InvalidConfigError(f"Margin must be non-negative, got {self.margin}")

    @property
    def encoding_label(self) -> str:
        """Encoding recorded for this plan. Internal engines do not encode."""
        return self.encoding.label if self.engine.engine is Engine.EXTERNAL else NO_ENCODING

    def cells(self) -> list[tuple[int, int, int]]:
        """Every (k, m, trial) of the grid, in record order."""
        return [(k, m, trial) for k in sorted(self.k_values) for m in sorted(self.m_values) for trial in range(self.trials)]


@dataclass(frozen=True)
class SweepRecord:
    """One solved instance of a sweep.

    Attributes:
        master_seed: Seed shared by the sweep.
        n: Variable count.
        k: Cardinality bound.
        m: XOR row count.
        trial: Repetition index within the cell.
        seed: Derived per-instance seed.
        engine: Engine name.
        encoding: Encoding label, or "none" for internal engines.
        status: sat, unsat, timeout, or error.
        time_ms: Wall time in whole milliseconds.
        decisions: Engine decision count.
        min_weight: Proven coset minimum weight, when the engine reported one.
    """

    master_seed: int
    n: int
    k: int
    m: int
    trial: int
    seed: int
    engine: str
    encoding: str
    status: str
    time_ms: int
    decisions: int
    min_weight: int | None = None

    @property
    def key(self) -> tuple[int, int, int]:
        """Sort key (k, m, trial)."""
        return self.k, self.m, self.trial


@dataclass(frozen=True)
class CellSummary:
    """Aggregate of every trial of one (k, m) cell.

    Attributes:
        n: Variable count.
        k: Cardinality bound.
        m: XOR row count.
        k_over_n: k/n, the heatmap x coordinate.
        s: m/n, the heatmap y coordinate.
        trials: Records in the cell.
        sat: Satisfiable records.
        unsat: Unsatisfiable records.
        timeouts: Timed out records.
        errors: Failed records.
        sat_fraction: Satisfiable share of the cell.
        timeout_fraction: Timed out share of the cell.
        median_time: Median wall time in milliseconds.
        median_decisions: Median engine decision count.
        phi: Transition density at (n, k).
    """

    n: int
    k: int
    m: int
    k_over_n: float
    s: float
    trials: int
    sat: int
    unsat: int
    timeouts: int
    errors: int
    sat_fraction: float
    timeout_fraction: float
    median_time: float
    median_decisions: float
    phi: float


@dataclass(frozen=True)
class StatTestReport:
    """Empirical check of the conditional satisfiability probability floor.

    Attributes:
        side: "sat" when #F >= 2^(ceil(sn) + alpha), "unsat" when #F <= 2^(ceil(sn) - alpha).
        n: Variable count.
        k: Cardinality bound.
        m: XOR row count ceil(s·n).
        alpha: Requested alpha.
        log2_count: log2(#F).
        floor: Theoretical probability floor 1 - 2^-alpha.
        trials: Instances run.
        hits: Instances on the predicted side (satisfiable, or unsatisfiable).
        timeouts: Instances without a verdict. They never count as hits.
        rate: hits / trials.
        sigma: Binomial standard deviation at the floor.
        violated: True when rate < floor - 3·sigma.
    """

    side: str
    n: int
    k: int
    m: int
    alpha: float
    log2_count: float
    floor: float
    trials: int
    hits: int
    timeouts: int
    rate: float
    sigma: float
    violated: bool


@dataclass(frozen=True)
class PolarityReport:
    """Aggregate engine effort of the same grid under different branch polarities.

    Attributes:
        decisions: Total decisions per polarity.
        time_ms: Total wall time per polarity.
        timeouts: Timed out instances per polarity.
    """

    decisions: dict[str, int]
    time_ms: dict[str, int]
    timeouts: dict[str, int]


def _solve_cell(plan: SweepPlan, k: int, m: int, trial: int) -> SweepRecord:
    """Generate and solve one grid cell. Runs inside worker processes."""
    seed = derive_seed(plan.master_seed, plan.n, k, m, trial)
    base = {
        "master_seed": plan.master_seed,
        "n": plan.n,
        "k": k,
        "m": m,
        "trial": trial,
        "seed": seed,
        "engine": plan.engine.engine.value,
        "encoding": plan.encoding_label,
    }
    try:
        instance = generate(GenConfig(plan.n, k, plan.master_seed, m=m, trial=trial))
        result = solve(instance, plan.engine, plan.encoding)
    except Exception as error:  # pylint: disable=broad-exception-caught
        logger.warning(f"Cell k={k} m={m} trial={trial} failed: {error}")
        return SweepRecord(**base, status=ERROR_STATUS, time_ms=0, decisions=0)
    return SweepRecord(
        **base,
        status=result.status.value,
        time_ms=round(result.stats.elapsed * 1000),
        decisions=result.stats.decisions,
        min_weight=result.min_weight,
    )


def _solve_cell_args(args: tuple[SweepPlan, int, int, int]) -> SweepRecord:
    """Unpack a cell for executor map calls."""
    return _solve_cell(*args)


def run_sweep(plan: SweepPlan, jobs: int | None = None) -> list[SweepRecord]:
    """Generate and solve every cell of a plan.

    Args:
        plan: The grid to run.
        jobs: Worker processes. Defaults to the available CPU count. 1 runs in the current process.

    Returns:
        One record per (k, m, trial), sorted by (k, m, trial).
    """
    jobs = jobs or os.cpu_count() or 1
    cells = plan.cells()
    logger.info(f"Sweep n={plan.n}: {len(cells)} instances on {jobs} worker(s)")
    if jobs == 1:
        records = [_solve_cell(plan, k, m, trial) for k, m, trial in cells]
    else:
        # Spawned workers share nothing with the parent beyond the pickled plan.
        context = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=jobs, mp_context=context) as pool:
            chunksize = max(1, len(cells) // (jobs * 8))
            records = list(pool.map(_solve_cell_args, [(plan, *cell) for cell in cells], chunksize=chunksize))
    records.sort(key=lambda record: record.key)
    logger.info(f"Sweep n={plan.n} finished: {sum(1 for record in records if record.status == ERROR_STATUS)} error record(s)")
    return records


def summarize(records: Iterable[SweepRecord], exclude_timeouts: bool = False) -> list[CellSummary]:
    """Aggregate records per (k, m) cell.

    Args:
        records: Records of one sweep, with a single n.
        exclude_timeouts: Drop timeouts from the sat_fraction denominator. By default timeouts count as not
            satisfiable and are reported separately in timeout_fraction.

    Returns:
        One summary per cell, sorted by (k, m).
    """
    cells: dict[tuple[int, int], list[SweepRecord]] = {}
    for record in records:
        cells.setdefault((record.k, record.m), []).append(record)

    summaries = []
    for (k, m), group in sorted(cells.items()):
        n = group[0].n
        counts = {status: sum(1 for record in group if record.status == status) for status in Status}
        sat, unsat, timeouts = counts[Status.SAT], counts[Status.UNSAT], counts[Status.TIMEOUT]
        errors = len(group) - sat - unsat - timeouts
        denominator = len(group) - timeouts if exclude_timeouts else len(group)
        summaries.append(
            CellSummary(
                n=n,
                k=k,
                m=m,
                k_over_n=k / n,
                s=m / n,
                trials=len(group),
                sat=sat,
                unsat=unsat,
                timeouts=timeouts,
                errors=errors,
                sat_fraction=sat / denominator if denominator else 0.0,
                timeout_fraction=timeouts / len(group),
                median_time=float(np.median([record.time_ms for record in group])),
                median_decisions=float(np.median([record.decisions for record in group])),
                phi=transition.phi(n, k),
            )
        )
    return summaries


def stat_test(
    n: int,
    k: int,
    s: Fraction | float | str,
    alpha: float,
    trials: int,
    engine: EngineConfig,
    master_seed: int = 0,
    side: str | None = None,
) -> StatTestReport:
    """Check the conditional satisfiability floor 1 - 2^-alpha on random instances.

    The satisfiable side applies when log2(#F) >= ceil(s·n) + alpha, the unsatisfiable side when
    log2(#F) <= ceil(s·n) - alpha. The side is picked automatically unless given.

    Raises:
        PreconditionError if the conditioning inequality of the requested (or any) side fails.
    """
    if trials < 1:
        raise InvalidConfigError(f"Statistical test needs at least one trial, got {trials}")
    m = math.ceil(as_fraction(s) * n)
    log2_count = transition.binom_sum_log2(n, k)
    sat_side = log2_count >= m + alpha
    unsat_side = log2_count <= m - alpha
    if side is None:
        side = "sat" if sat_side else "unsat" if unsat_side else None
    if side == "sat" and not sat_side or side == "unsat" and not unsat_side or side is None:
        raise PreconditionError(
            f"log2(#F)={log2_count:.4f} with ceil(sn)={m} and alpha={alpha} meets neither "
            f"log2(#F) >= ceil(sn) + alpha nor log2(#F) <= ceil(sn) - alpha for side {side or 'auto'}"
        )

    wanted = Status.SAT if side == "sat" else Status.UNSAT
    hits = 0
    timeouts = 0
    for trial in range(trials):
        instance = generate(GenConfig(n, k, master_seed, m=m, trial=trial))
        status = solve(instance, engine).status
        hits += status is wanted
        timeouts += status is Status.TIMEOUT
    floor = 1 - 2.0**-alpha
    rate = hits / trials
    sigma = math.sqrt(floor * (1 - floor) / trials)
    return StatTestReport(
        side=side,
        n=n,
        k=k,
        m=m,
        alpha=alpha,
        log2_count=log2_count,
        floor=floor,
        trials=trials,
        hits=hits,
        timeouts=timeouts,
        rate=rate,
        sigma=sigma,
        violated=rate < floor - SIGMA_ALLOWANCE * sigma,
    )


def check_separation(
    summaries: Iterable[CellSummary],
    margin: float = 0.2,
    sat_floor: float = 0.9,
    unsat_ceiling: float = 0.1,
) -> list[CellSummary]:
    """Cells that contradict the predicted regions.

    A cell with s <= phi - margin must have sat_fraction >= sat_floor, and a cell with s >= phi + margin must have
    sat_fraction <= unsat_ceiling.
    """
    violations = []
    for cell in summaries:
        if cell.s <= cell.phi - margin and cell.sat_fraction < sat_floor:
            violations.append(cell)
        elif cell.s >= cell.phi + margin and cell.sat_fraction > unsat_ceiling:
            violations.append(cell)
    return violations


def hardest_cell(summaries: Sequence[CellSummary]) -> CellSummary:
    """Cell with the largest median decision count. Ties go to the first cell in (k, m) order."""
    if not summaries:
        raise ValueError("No cells to choose from")
    return max(summaries, key=lambda cell: cell.median_decisions)


def compare_polarity(
    plan: SweepPlan,
    polarities: Sequence[Polarity] = tuple(Polarity),
    jobs: int | None = None,
) -> PolarityReport:
    """Run the same grid under each branch polarity and total the engine effort."""
    decisions, time_ms, timeouts = {}, {}, {}
    for polarity in polarities:
        variant = replace(plan, engine=replace(plan.engine, polarity=polarity))
        records = run_sweep(variant, jobs)
        label = Polarity(polarity).value
        decisions[label] = sum(record.decisions for record in records)
        time_ms[label] = sum(record.time_ms for record in records)
        timeouts[label] = sum(1 for record in records if record.status == Status.TIMEOUT.value)
    return PolarityReport(decisions, time_ms, timeouts)


def emit_csv(records: Iterable[SweepRecord], sink: TextIO) -> None:
    """Write records as CSV with the fixed header. An empty min_weight is written as an empty field."""
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for record in records:
        row = [getattr(record, name) for name in CSV_HEADER]
        row[-1] = "" if record.min_weight is None else record.min_weight
        writer.writerow(row)


def read_csv(source: TextIO) -> list[SweepRecord]:
    """Read records written by emit_csv.

    Raises:
        ValueError if the header does not match.
    """
    reader = csv.reader(source)
    header = next(reader, None)
    if header != CSV_HEADER:
        raise ValueError(f"Unexpected sweep CSV header: {header}")
    records = []
    for row in reader:
        values = dict(zip(CSV_HEADER, row))
        records.append(
            SweepRecord(
                master_seed=int(values["master_seed"]),
                n=int(values["n"]),
                k=int(values["k"]),
                m=int(values["m"]),
                trial=int(values["trial"]),
                seed=int(values["seed"]),
                engine=values["engine"],
                encoding=values["encoding"],
                status=values["status"],
                time_ms=int(values["time_ms"]),
                decisions=int(values["decisions"]),
                min_weight=int(values["min_weight"]) if values["min_weight"] else None,
            )
        )
    return records


def _edges(centers: list[float]) -> np.ndarray:
    """Cell edges around sorted cell centers, for pcolormesh."""
    values = np.asarray(centers, dtype=float)
    if len(values) == 1:
        return np.array([values[0] - 0.5, values[0] + 0.5])
    middles = (values[:-1] + values[1:]) / 2
    return np.concatenate([[2 * values[0] - middles[0]], middles, [2 * values[-1] - middles[-1]]])


def emit_heatmap(summaries: Sequence[CellSummary], metric: Metric | str, sink: TextIO) -> None:
    """Render summaries as a self-contained SVG heatmap with the transition curve overlaid.

    Args:
        summaries: Cells of one sweep, with a single n.
        metric: Value used to color each cell.
        sink: Open text or binary stream receiving the SVG document.
    """
    metric = Metric(metric)
    if not summaries:
        raise ValueError("Cannot render a heatmap without cells")
    n = summaries[0].n
    k_values = sorted({cell.k for cell in summaries})
    m_values = sorted({cell.m for cell in summaries})
    grid = np.full((len(m_values), len(k_values)), np.nan)
    for cell in summaries:
        grid[m_values.index(cell.m), k_values.index(cell.k)] = getattr(cell, metric.value)

    figure = Figure(figsize=(6, 5))
    axes = figure.add_subplot()
    mesh = axes.pcolormesh(
        _edges([k / n for k in k_values]),
        _edges([m / n for m in m_values]),
        np.ma.masked_invalid(grid),
        cmap=_COLORMAPS[metric],
        shading="flat",
    )
    figure.colorbar(mesh, ax=axes, label=metric.value)
    curve = transition.transition_curve(n, k_values)
    axes.plot([point[0] for point in curve], [point[1] for point in curve], color="red", linewidth=1.5)
    axes.set_xlabel("k/n")
    axes.set_ylabel("s = m/n")
    axes.set_title(f"n={n}")
    figure.savefig(sink, format="svg")
