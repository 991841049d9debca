from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clonesim.circuits import CloneTask, run_circuit
from clonesim.circuits.task import FAILURE, SUCCESS, OutcomeBranch
from clonesim.montecarlo import COUNT_COLUMNS, CountTable, ShotPlan, estimate_interval, sample
from clonesim.verify import coverage_misses

COIN = [OutcomeBranch("heads", None, 0.5, SUCCESS), OutcomeBranch("tails", None, 0.5, FAILURE)]


def test_single_branch_takes_every_shot():
    table = sample([OutcomeBranch("only", None, 1.0, SUCCESS)], ShotPlan(100, 7))
    assert table.count("only") == 100
    assert table.interval("only") == (1.0, 1.0)


def test_fair_coin_stays_within_three_sigma():
    n = 10_000
    heads = sample(COIN, ShotPlan(n, 0)).count("heads")
    assert abs(heads - n / 2) <= 3 * math.sqrt(n / 4)


def test_lpc_max_rate_is_near_its_probability():
    run = run_circuit("lpc-max", CloneTask.maximal(math.pi / 3))
    table = sample(run.branches, ShotPlan(100_000, 1))
    assert table.rate("path_a") + table.rate("path_b") == pytest.approx(1 / 3, abs=0.01)


def test_interval_examples():
    assert estimate_interval(0, 10) == (0.0, 0.0)
    assert estimate_interval(10, 10) == (1.0, 1.0)
    lo, hi = estimate_interval(50, 100)
    assert lo == pytest.approx(0.35) and hi == pytest.approx(0.65)
    assert estimate_interval(1, 100)[0] == 0.0
    with pytest.raises(ValueError):
        estimate_interval(5, 3)


def test_shot_plan_validation():
    for bad in ((0, 0), (1.5, 0), (10, -1), (10, 2**64)):
        with pytest.raises(ValueError):
            ShotPlan(*bad)


def test_same_seed_same_counts():
    run = run_circuit("nlopc-partial", CloneTask(1.0, 1, 0.5))
    a = sample(run.branches, ShotPlan(50_000, 42))
    b = sample(run.branches, ShotPlan(50_000, 42))
    c = sample(run.branches, ShotPlan(50_000, 43))
    assert a == b
    assert a != c
    assert a.n_shots == 50_000


def test_counts_do_not_depend_on_worker_count():
    run = run_circuit("lpc-partial", CloneTask(1.0, -1, 0.4))
    plan = ShotPlan(30_001, 5)
    one = sample(run.branches, plan, chunks=8, workers=1)
    many = sample(run.branches, plan, chunks=8, workers=4)
    assert one == many
    assert one.n_shots == 30_001


def test_unnormalized_branches_are_rejected():
    with pytest.raises(ValueError):
        sample([OutcomeBranch("x", None, 0.9, SUCCESS)], ShotPlan(10))
    with pytest.raises(ValueError):
        sample(COIN, ShotPlan(10), chunks=0)
    with pytest.raises(ValueError):
        sample([], ShotPlan(10))


counts = st.lists(st.integers(min_value=0, max_value=1000), min_size=3, max_size=3)


@given(counts, counts, counts)
def test_merge_is_associative(x, y, z):
    labels = ("a", "b", "c")
    tx, ty, tz = (CountTable(labels, tuple(v)) for v in (x, y, z))
    assert tx.merge(ty).merge(tz) == tx.merge(ty.merge(tz))
    assert tx.merge(ty).n_shots == sum(x) + sum(y)


def test_merge_pools_label_union():
    merged = CountTable(("a", "b"), (1, 2)).merge(CountTable(("c", "a"), (4, 8)))
    assert merged == CountTable(("a", "b", "c"), (9, 2, 4))
    with pytest.raises(ValueError):
        CountTable(("a", "a"), (1, 1))


def test_rows_and_json():
    table = CountTable(("a", "b"), (3, 1))
    rows = table.rows()
    assert [tuple(r) for r in rows] == [COUNT_COLUMNS] * 2
    assert rows[0]["rate"] == 0.75
    assert table.to_json()["n_shots"] == 4
    assert table.covers({"a": 0.75, "b": 0.25}) == {"a": True, "b": True}


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=1, max_value=5000), st.integers(min_value=1, max_value=16), st.integers(0, 2**32))
def test_chunked_shots_add_up(n, chunks, seed):
    assert sample(COIN, ShotPlan(n, seed), chunks=chunks).n_shots == n


@pytest.mark.parametrize(
    "circuit, task",
    [
        ("oracle", CloneTask(math.pi / 3)),
        ("lpc-partial", CloneTask(math.pi / 3, 1, 0.6)),
        ("nlopc-partial", CloneTask(math.pi / 3, 1, 0.6)),
    ],
)
def test_coverage_on_every_circuit(circuit, task):
    # a 3-sigma interval misses about 0.3% of the time, so with 100 seeds a
    # branch can miss once or twice by chance; more than three points to bias
    branches = run_circuit(circuit, task).branches
    misses = coverage_misses(branches)
    assert max(misses.values()) <= 3, misses
    assert sum(misses.values()) <= len(misses) * 100 * 0.01, misses
