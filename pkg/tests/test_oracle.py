"""Closed-form checkers and the rank-agreement study."""

import csv
import io
import json

import pytest

from infplace.anf import BooleanFunctionANF
from infplace.oracle import (
    check_lemma1,
    check_lemma2,
    check_theorem,
    corollary_study,
    disjoint_products,
)
from infplace.placement import EnumerationBudgetError, PlacementConfig


def test_disjoint_products_layout():
    f = disjoint_products(3, 2)
    assert f.num_datasets == 6
    assert str(f) == "W1W2 + W3W4 + W5W6"


def test_lemma1_default_grid_passes():
    report = check_lemma1()
    assert report.passed
    # all subsets for d <= 4 (1 + 3 + 7 + 15), capped at 20 beyond
    assert len(report.cases) == 106
    assert report.summary["failures"] == "0"
    assert report.seed == 0


def test_lemma1_small_degrees_enumerate_every_subset():
    report = check_lemma1(d_range=[1, 2], subset_trials=20)
    labels = [c.label for c in report.cases]
    assert labels == [
        "d=1 S={1}",
        "d=2 S={1}",
        "d=2 S={2}",
        "d=2 S={1,2}",
    ]
    assert [c.expected for c in report.cases] == ["1", "1/2", "1/2", "1/2"]
    assert report.passed


def test_lemma1_same_seed_same_report():
    a = check_lemma1(d_range=[6], subset_trials=12, seed=42)
    b = check_lemma1(d_range=[6], subset_trials=12, seed=42)
    assert a.to_json_text() == b.to_json_text()
    assert len(a.cases) == 12
    assert check_lemma1(d_range=[6], subset_trials=12, seed=7).passed


def test_lemma2_default_grid_passes():
    report = check_lemma2()
    assert report.passed
    # per degree d: (d-1) comparisons + closed form + monotonicity
    assert len(report.cases) == sum(d - 1 + 2 for d in range(2, 6))
    assert report.summary["failures"] == "0"


def test_lemma2_swap_values_collapse_to_one_value():
    # Observed at every tested degree: all swap counts give the same
    # influence, so the monotone case shows one repeated fraction.
    report = check_lemma2(d_range=[4])
    by_label = {c.label: c for c in report.cases}
    closed = by_label["d=4 one-swap closed form"]
    assert closed.expected == "7/32"
    assert closed.observed == "7/32"
    monotone = by_label["d=4 monotone in swap count"]
    assert monotone.observed == "7/32,7/32,7/32"
    assert monotone.passed


def test_lemma2_degree_two_boundary():
    report = check_lemma2(d_range=[2])
    by_label = {c.label: c for c in report.cases}
    assert by_label["d=2 one-swap closed form"].observed == "1/2"
    assert by_label["d=2 swaps=1 >= baseline"].passed


def test_theorem_three_servers_pairs():
    report = check_theorem(3, 2)
    assert report.passed
    assert report.summary["placements"] == "3375"
    assert report.summary["computable"] == "90"
    assert report.summary["min_as"] == "3/2"
    assert report.summary["aligned_as"] == "3/2"
    assert report.summary["aligned_T"] == "3"
    assert report.summary["min_T"] == "3"


def test_theorem_two_servers_triples():
    report = check_theorem(2, 3)
    assert report.passed
    assert report.summary["placements"] == "400"
    assert report.summary["computable"] == "20"
    assert report.summary["min_as"] == "1/2"
    assert report.summary["min_T"] == "2"
    assert report.summary["min_T_placement"] == "{1,2,3}; {4,5,6}"


def test_theorem_respects_enumeration_budget():
    with pytest.raises(EnumerationBudgetError):
        check_theorem(4, 4)


def test_corollary_study_records_but_never_fails():
    f = BooleanFunctionANF.from_indices(5, [[1], [2, 3, 4, 5]])
    low_as_high_t = PlacementConfig.from_indices(3, [[1, 2, 3], [4, 5]])
    high_as_low_t = PlacementConfig.from_indices(4, [[1], [2, 3, 4, 5]])
    report = corollary_study(f, [high_as_low_t, low_as_high_t])
    assert report.passed  # report-only by design
    assert report.summary["ordering_violations"] == "1"
    assert report.summary["violation_examples"] == (
        "#0(as=9/8,T=2) vs #1(as=1,T=3)"
    )
    assert float(report.summary["spearman_rho"]) == pytest.approx(-1.0)
    assert report.cases[0].observed == "as=9/8 T=2 inf=[1;1/8] pieces=[1, 1]"
    assert report.cases[1].observed == "as=1 T=3 inf=[7/8;1/8] pieces=[2, 1]"


def test_corollary_study_constant_columns_have_no_rho():
    f = disjoint_products(2, 2)
    p1 = PlacementConfig.from_indices(2, [[1, 2], [3, 4]])
    p2 = PlacementConfig.from_indices(2, [[3, 4], [1, 2]])
    report = corollary_study(f, [p1, p2])
    assert report.summary["spearman_rho"] == "n/a"
    assert report.summary["ordering_violations"] == "0"
    assert report.summary["violation_examples"] == "none"


def test_report_json_and_csv_shapes():
    report = check_lemma2(d_range=[2, 3])
    obj = json.loads(report.to_json_text())
    assert set(obj) == {"claim", "grid", "cases", "summary", "seed", "passed"}
    assert obj["passed"] is True
    assert obj["seed"] is None
    assert len(obj["cases"]) == len(report.cases)
    assert set(obj["cases"][0]) == {"label", "expected", "observed", "pass"}

    rows = list(csv.reader(io.StringIO(report.to_csv_text())))
    assert rows[0] == ["label", "expected", "observed", "pass"]
    assert len(rows) == len(report.cases) + 1
    assert all(row[3] in ("true", "false") for row in rows[1:])
