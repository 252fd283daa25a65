"""Unit tests for grid experiments, aggregation, and reporting."""

import io
from fractions import Fraction
from typing import Callable

import pytest

from cardxor import gf2core
from cardxor import sweep
from cardxor import transition
from cardxor.errors import InvalidConfigError
from cardxor.errors import PreconditionError
from cardxor.instance import GenConfig
from cardxor.instance import derive_seed
from cardxor.instance import generate
from cardxor.solve import Engine
from cardxor.solve import EngineConfig
from cardxor.solve import Polarity
from cardxor.sweep import CellSummary
from cardxor.sweep import SweepPlan
from cardxor.sweep import SweepRecord

BNB = EngineConfig(engine=Engine.BNB)


def _record(status: str, k: int = 2, m: int = 3, trial: int = 0, time_ms: int = 1, decisions: int = 0) -> SweepRecord:
    """Build a record of a 10-variable sweep."""
    return SweepRecord(
        master_seed=1,
        n=10,
        k=k,
        m=m,
        trial=trial,
        seed=derive_seed(1, 10, k, m, trial),
        engine="bnb",
        encoding="none",
        status=status,
        time_ms=time_ms,
        decisions=decisions,
    )


def _cell(k: int, m: int, sat_fraction: float, median_decisions: float = 0.0, n: int = 40) -> CellSummary:
    """Build a summary with the given coordinates and sat fraction."""
    return CellSummary(
        n=n,
        k=k,
        m=m,
        k_over_n=k / n,
        s=m / n,
        trials=10,
        sat=round(sat_fraction * 10),
        unsat=10 - round(sat_fraction * 10),
        timeouts=0,
        errors=0,
        sat_fraction=sat_fraction,
        timeout_fraction=0.0,
        median_time=1.0,
        median_decisions=median_decisions,
        phi=transition.phi(n, k),
    )


TEST_CASES = {
    "sweep_plan": {
        "default ranges": {
            "kwargs": {"n": 4, "master_seed": 1},
            "attributes": {"k_values": (0, 1, 2, 3, 4), "m_values": (1, 2, 3, 4), "encoding_label": "none"},
        },
        "explicit ranges": {
            "kwargs": {"n": 10, "master_seed": 1, "k_values": [2, 4], "m_values": [5]},
            "attributes": {"k_values": (2, 4), "m_values": (5,)},
        },
        "external engine records the encoding": {
            "kwargs": {"n": 10, "master_seed": 1, "engine": EngineConfig(engine=Engine.EXTERNAL)},
            "attributes": {"encoding_label": "cardnet/native"},
        },
    },
    "sweep_plan_invalid": {
        "no variables": {
            "kwargs": {"n": 0, "master_seed": 1},
            "raises": InvalidConfigError,
        },
        "no trials": {
            "kwargs": {"n": 4, "master_seed": 1, "trials": 0},
            "raises": InvalidConfigError,
        },
        "k above n": {
            "kwargs": {"n": 4, "master_seed": 1, "k_values": [5]},
            "raises": InvalidConfigError,
        },
        "zero rows": {
            "kwargs": {"n": 4, "master_seed": 1, "m_values": [0]},
            "raises": InvalidConfigError,
        },
        "negative margin": {
            "kwargs": {"n": 4, "master_seed": 1, "margin": -0.1},
            "raises": InvalidConfigError,
        },
    },
    "summarize": {
        "all sat": {
            "args": [[_record("sat", trial=trial) for trial in range(10)]],
            "returns": [(10, 0, 0, 0, 1.0, 0.0)],
        },
        "four of ten sat": {
            "args": [[_record("sat" if trial < 4 else "unsat", trial=trial) for trial in range(10)]],
            "returns": [(4, 6, 0, 0, 0.4, 0.0)],
        },
        "timeouts count as not sat": {
            "args": [[_record(["sat", "unsat", "timeout"][min(trial // 4, 2)], trial=trial) for trial in range(10)]],
            "returns": [(4, 4, 2, 0, 0.4, 0.2)],
        },
        "timeouts excluded": {
            "args": [[_record(["sat", "unsat", "timeout"][min(trial // 4, 2)], trial=trial) for trial in range(10)]],
            "kwargs": {"exclude_timeouts": True},
            "returns": [(4, 4, 2, 0, 0.5, 0.2)],
        },
        "errors are counted": {
            "args": [[_record("sat"), _record("error", trial=1)]],
            "returns": [(1, 0, 0, 1, 0.5, 0.0)],
        },
        "cells sorted": {
            "args": [[_record("sat", k=3, m=1), _record("unsat", k=1, m=5), _record("sat", k=1, m=2)]],
            "returns": [(1, 0, 0, 0, 1.0, 0.0), (0, 1, 0, 0, 0.0, 0.0), (1, 0, 0, 0, 1.0, 0.0)],
        },
        "empty": {
            "args": [[]],
            "returns": [],
        },
    },
}


@pytest.mark.parametrize_test_case("test_case", TEST_CASES["sweep_plan"])
def test_sweep_plan(test_case: dict, function_tester: Callable) -> None:
    """Unit tests for SweepPlan defaults."""
    function_tester(test_case, SweepPlan)


@pytest.mark.parametrize_test_case("test_case", TEST_CASES["sweep_plan_invalid"])
def test_sweep_plan_invalid(test_case: dict, function_tester: Callable) -> None:
    """Ensure invalid plans are rejected."""
    function_tester(test_case, SweepPlan)


@pytest.mark.parametrize_test_case("test_case", TEST_CASES["summarize"])
def test_summarize(test_case: dict, function_tester: Callable) -> None:
    """Unit tests for summarize."""

    def _summarize(records: list[SweepRecord], exclude_timeouts: bool = False) -> list[tuple]:
        summaries = sweep.summarize(records, exclude_timeouts=exclude_timeouts)
        for cell in summaries:
            assert cell.sat + cell.unsat + cell.timeouts + cell.errors == cell.trials
        return [
            (cell.sat, cell.unsat, cell.timeouts, cell.errors, cell.sat_fraction, cell.timeout_fraction)
            for cell in summaries
        ]

    function_tester(test_case, _summarize)


def test_summarize_medians() -> None:
    """Ensure medians and coordinates are filled per cell."""
    records = [_record("sat", trial=trial, time_ms=trial * 10, decisions=trial) for trial in range(5)]
    (cell,) = sweep.summarize(records)
    assert (cell.median_time, cell.median_decisions) == (20.0, 2.0)
    assert (cell.k_over_n, cell.s) == (0.2, 0.3)
    assert cell.phi == transition.phi(10, 2)


def test_plan_cells() -> None:
    """Ensure cells are listed in (k, m, trial) order."""
    plan = SweepPlan(n=5, master_seed=0, k_values=(3, 1), m_values=(2, 1), trials=2)
    assert plan.cells()[:3] == [(1, 1, 0), (1, 1, 1), (1, 2, 0)]
    assert len(plan.cells()) == 8


def test_run_sweep_full_cube() -> None:
    """Ensure k = n cells are satisfiable exactly when the XOR system is consistent."""
    plan = SweepPlan(n=8, master_seed=3, k_values=(8,), m_values=tuple(range(1, 9)), trials=3, engine=BNB)
    records = sweep.run_sweep(plan, jobs=1)
    assert len(records) == 24
    for record in records:
        instance = generate(GenConfig(8, 8, 3, m=record.m, trial=record.trial))
        consistent = gf2core.eliminate(instance.xors).consistent
        assert record.status == ("sat" if consistent else "unsat")
        assert record.seed == instance.seed
        assert record.encoding == "none"


def test_run_sweep_zero_bound() -> None:
    """Ensure k = 0 cells are satisfiable exactly when the right-hand side is zero."""
    plan = SweepPlan(n=6, master_seed=11, k_values=(0,), m_values=(6,), trials=20, engine=BNB)
    for record in sweep.run_sweep(plan, jobs=1):
        instance = generate(GenConfig(6, 0, 11, m=6, trial=record.trial))
        assert record.status == ("sat" if instance.xors.rhs == 0 else "unsat")


def test_run_sweep_records_errors(monkeypatch: pytest.MonkeyPatch) -> None:
    """Ensure a failing cell becomes an error record instead of aborting the sweep."""
    original = sweep.solve

    def _flaky(instance, cfg, choice=None):  # type: ignore[no-untyped-def]
        if instance.k == 1:
            raise RuntimeError("engine crashed")
        return original(instance, cfg, choice)

    monkeypatch.setattr(sweep, "solve", _flaky)
    plan = SweepPlan(n=4, master_seed=0, k_values=(1, 2), m_values=(2,), trials=2, engine=BNB)
    statuses = [record.status for record in sweep.run_sweep(plan, jobs=1)]
    assert statuses[:2] == ["error", "error"]
    assert "error" not in statuses[2:]


def test_run_sweep_deterministic() -> None:
    """Ensure statuses do not depend on the worker count."""
    plan = SweepPlan(n=10, master_seed=42, k_values=(1, 3, 5), m_values=(2, 5, 8), trials=3, engine=BNB)
    serial = sweep.run_sweep(plan, jobs=1)
    parallel = sweep.run_sweep(plan, jobs=2)
    assert [(r.key, r.seed, r.status, r.decisions) for r in serial] == [
        (r.key, r.seed, r.status, r.decisions) for r in parallel
    ]


def test_stat_test_sat_side() -> None:
    """Ensure the satisfiable side meets its floor on a small instance family."""
    report = sweep.stat_test(12, 12, "1/4", 8, 50, BNB)
    assert (report.side, report.m) == ("sat", 3)
    assert report.floor == pytest.approx(1 - 2**-8)
    assert not report.violated
    assert report.hits + report.timeouts <= report.trials


def test_stat_test_unsat_side() -> None:
    """Ensure the unsatisfiable side meets its floor on a small instance family."""
    report = sweep.stat_test(12, 1, 1, 8, 50, BNB)
    assert (report.side, report.m) == ("unsat", 12)
    assert report.log2_count == pytest.approx(transition.binom_sum_log2(12, 1))
    assert not report.violated


def test_stat_test_precondition() -> None:
    """Ensure the test refuses parameters where neither conditioning inequality holds."""
    with pytest.raises(PreconditionError):
        sweep.stat_test(40, 5, Fraction(1, 2), 8, 10, BNB)
    with pytest.raises(PreconditionError):
        sweep.stat_test(12, 12, "1/4", 8, 10, BNB, side="unsat")
    with pytest.raises(InvalidConfigError):
        sweep.stat_test(12, 12, "1/4", 8, 0, BNB)


@pytest.mark.slow
def test_stat_test_acceptance() -> None:
    """Ensure both floors hold at n = 40 over 400 trials."""
    sat_side = sweep.stat_test(40, 40, 0.5, 8, 400, BNB)
    assert (sat_side.side, sat_side.m, sat_side.violated) == ("sat", 20, False)
    unsat_side = sweep.stat_test(40, 2, 0.45, 8, 400, BNB)
    assert (unsat_side.side, unsat_side.m, unsat_side.violated) == ("unsat", 18, False)


def test_check_separation() -> None:
    """Ensure cells contradicting their predicted region are reported."""
    phi = transition.phi(40, 20)
    good_sat = _cell(20, 10, 1.0)
    bad_sat = _cell(20, 12, 0.5)
    good_unsat = _cell(4, 30, 0.0)
    bad_unsat = _cell(4, 32, 0.5)
    critical = _cell(20, round(phi * 40), 0.5)
    violations = sweep.check_separation([good_sat, bad_sat, good_unsat, bad_unsat, critical])
    assert violations == [bad_sat, bad_unsat]


def test_hardest_cell() -> None:
    """Ensure the cell with the largest median decision count wins, first in order on ties."""
    cells = [_cell(2, 5, 1.0, 3.0), _cell(2, 6, 1.0, 9.0), _cell(4, 1, 1.0, 9.0)]
    assert sweep.hardest_cell(cells) is cells[1]
    with pytest.raises(ValueError):
        sweep.hardest_cell([])


def test_compare_polarity() -> None:
    """Ensure every polarity is run on the same grid and totaled."""
    plan = SweepPlan(n=8, master_seed=5, k_values=(2, 4), m_values=(2, 4), trials=2, engine=BNB)
    report = sweep.compare_polarity(plan, jobs=1)
    assert set(report.decisions) == {polarity.value for polarity in Polarity}
    assert all(count >= 0 for count in report.decisions.values())
    assert report.timeouts == {polarity.value: 0 for polarity in Polarity}


def test_emit_csv_empty() -> None:
    """Ensure an empty sweep writes only the header."""
    sink = io.StringIO()
    sweep.emit_csv([], sink)
    assert sink.getvalue() == "master_seed,n,k,m,trial,seed,engine,encoding,status,time_ms,decisions,min_weight\n"


def test_csv_round_trip() -> None:
    """Ensure CSV written from parsed records is byte-identical to the original."""
    plan = SweepPlan(n=6, master_seed=9, k_values=(1, 3), m_values=(2, 4), trials=2, engine=EngineConfig(minimize=True))
    first = io.StringIO()
    sweep.emit_csv(sweep.run_sweep(plan, jobs=1), first)
    records = sweep.read_csv(io.StringIO(first.getvalue()))
    second = io.StringIO()
    sweep.emit_csv(records, second)
    assert second.getvalue() == first.getvalue()
    assert len(records) == 8
    assert any(record.min_weight is not None for record in records)


def test_read_csv_bad_header() -> None:
    """Ensure CSV files with another header are rejected."""
    with pytest.raises(ValueError):
        sweep.read_csv(io.StringIO("n,k,m\n1,2,3\n"))


def test_emit_heatmap() -> None:
    """Ensure the heatmap is a standalone SVG document with the transition curve."""
    cells = [_cell(k, m, 1.0 if m / 40 < transition.phi(40, k) else 0.0) for k in (4, 20, 36) for m in (5, 20, 35)]
    sink = io.StringIO()
    sweep.emit_heatmap(cells, "sat_fraction", sink)
    svg = sink.getvalue()
    assert "<svg" in svg and svg.rstrip().endswith("</svg>")
    assert "#ff0000" in svg


def test_emit_heatmap_invalid() -> None:
    """Ensure heatmaps need cells and a known metric."""
    with pytest.raises(ValueError):
        sweep.emit_heatmap([], "sat_fraction", io.StringIO())
    with pytest.raises(ValueError):
        sweep.emit_heatmap([_cell(2, 2, 1.0)], "median_weight", io.StringIO())


@pytest.mark.slow
def test_phase_separation() -> None:
    """Ensure cells away from the transition curve fall into their predicted region at n = 40."""
    plan = SweepPlan(
        n=40,
        master_seed=2024,
        k_values=tuple(range(2, 39, 2)),
        m_values=tuple(range(1, 41)),
        trials=50,
        engine=EngineConfig(timeout=10.0),
    )
    summaries = sweep.summarize(sweep.run_sweep(plan))
    assert sweep.check_separation(summaries, margin=0.2) == []
    hardest = sweep.hardest_cell(summaries)
    assert abs(hardest.s - hardest.phi) <= 0.25
