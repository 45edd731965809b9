"""Brute-force checks of the closed-form claims, reported case by case.

Each checker builds the smallest function family the claim speaks
about, computes exact influences by enumeration, and compares them as
rationals.  Nothing here trusts the closed forms being tested: the
observed side always comes from truth tables.

The placement/transmission relationship study (``corollary_study``) is
deliberately report-only.  It records rank correlation and any ordering
violations between average joint sensitivity and the optimal piece
count, but never fails: that ordering is not something this code base
guarantees.
"""

from __future__ import annotations

import csv
import io
import json
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

from .anf import BooleanFunctionANF, indices_from_mask, mask_from_indices
from .influence import (
    analytic_influence_one_swap,
    analytic_influence_product,
    avg_joint_sensitivity,
    joint_influence_exact,
)
from .placement import (
    ENUMERATION_BUDGET,
    EnumerationBudgetError,
    PlacementConfig,
    PlacementConstraints,
    aligned_placement,
    count_placements,
    enumerate_placements,
)
from .transmission import count_transmissions, synthesize_exact

LEMMA1_DEGREES = range(1, 9)
LEMMA1_SUBSET_TRIALS = 20
LEMMA2_DEGREES = range(2, 6)
DEGREE_SLACK = 2  # spare datasets beyond the product's support


@dataclass(frozen=True)
class OracleCase:
    label: str
    expected: str
    observed: str
    passed: bool


@dataclass(frozen=True)
class OracleReport:
    claim: str
    grid: dict[str, str]
    cases: tuple[OracleCase, ...]
    summary: dict[str, str]
    seed: int | None
    passed: bool

    def to_json_text(self) -> str:
        obj = {
            "claim": self.claim,
            "grid": self.grid,
            "cases": [
                {
                    "label": c.label,
                    "expected": c.expected,
                    "observed": c.observed,
                    "pass": c.passed,
                }
                for c in self.cases
            ],
            "summary": self.summary,
            "seed": self.seed,
            "passed": self.passed,
        }
        return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["label", "expected", "observed", "pass"])
        for c in self.cases:
            writer.writerow([c.label, c.expected, c.observed, str(c.passed).lower()])
        return buf.getvalue()


def _report(
    claim: str,
    grid: dict[str, str],
    cases: Sequence[OracleCase],
    summary: dict[str, str],
    seed: int | None,
    force_pass: bool = False,
) -> OracleReport:
    passed = True if force_pass else all(c.passed for c in cases)
    return OracleReport(claim, dict(grid), tuple(cases), dict(summary), seed, passed)


def _single_product(degree: int, num_datasets: int) -> BooleanFunctionANF:
    return BooleanFunctionANF.from_indices(num_datasets, [range(1, degree + 1)])


def disjoint_products(num_products: int, degree: int) -> BooleanFunctionANF:
    """XOR of ``num_products`` products on consecutive disjoint supports."""
    k = num_products * degree
    supports = [
        range(n * degree + 1, (n + 1) * degree + 1) for n in range(num_products)
    ]
    return BooleanFunctionANF.from_indices(k, supports)


def _subset_label(mask: int) -> str:
    return "{" + ",".join(map(str, indices_from_mask(mask))) + "}"


def check_lemma1(
    d_range: Iterable[int] = LEMMA1_DEGREES,
    subset_trials: int = LEMMA1_SUBSET_TRIALS,
    seed: int = 0,
) -> OracleReport:
    """Every nonempty flip subset inside a degree-d product's support has
    exact influence 2^(1-d).

    Small d: all nonempty subsets.  Larger d: all singletons plus random
    distinct subsets up to ``subset_trials`` total.
    """
    degrees = list(d_range)
    rng = random.Random(seed)
    cases = []
    for d in degrees:
        k = d + DEGREE_SLACK
        f = _single_product(d, k)
        expected = analytic_influence_product(d)
        total = (1 << d) - 1
        if total <= subset_trials:
            masks = list(range(1, 1 << d))
        else:
            picked = {1 << i for i in range(d)}
            while len(picked) < subset_trials:
                picked.add(rng.randrange(1, 1 << d))
            masks = sorted(picked)
        for mask in masks:
            observed = joint_influence_exact(f, mask).fraction
            cases.append(
                OracleCase(
                    label=f"d={d} S={_subset_label(mask)}",
                    expected=str(expected),
                    observed=str(observed),
                    passed=observed == expected,
                )
            )
    summary = {
        "degrees": ",".join(map(str, degrees)),
        "cases": str(len(cases)),
        "failures": str(sum(not c.passed for c in cases)),
    }
    grid = {"d": ",".join(map(str, degrees)), "subset_trials": str(subset_trials)}
    return _report("single-product influence", grid, cases, summary, seed)


def _swap_subset(degree: int, swaps: int) -> int:
    """The first product's support with ``swaps`` datasets exchanged for
    datasets of the second (disjoint) product."""
    kept = range(swaps + 1, degree + 1)
    taken = range(degree + 1, degree + swaps + 1)
    return mask_from_indices(list(kept) + list(taken))


def check_lemma2(d_range: Iterable[int] = LEMMA2_DEGREES) -> OracleReport:
    """On an XOR of two disjoint degree-d products, swapping s of one
    support's datasets for the other's never lowers the influence.

    The one-swap value must equal 2 * 2^(1-d) * (1 - 2^(1-d)) exactly.
    """
    degrees = list(d_range)
    cases = []
    for d in degrees:
        f = disjoint_products(2, d)
        baseline = analytic_influence_product(d)
        closed = analytic_influence_one_swap(d)
        values = []
        for swaps in range(1, d):
            observed = joint_influence_exact(f, _swap_subset(d, swaps)).fraction
            values.append(observed)
            cases.append(
                OracleCase(
                    label=f"d={d} swaps={swaps} >= baseline",
                    expected=f">= {baseline}",
                    observed=str(observed),
                    passed=observed >= baseline,
                )
            )
        cases.append(
            OracleCase(
                label=f"d={d} one-swap closed form",
                expected=str(closed),
                observed=str(values[0]),
                passed=values[0] == closed,
            )
        )
        cases.append(
            OracleCase(
                label=f"d={d} monotone in swap count",
                expected="nondecreasing",
                observed=",".join(map(str, values)),
                passed=all(a <= b for a, b in zip(values, values[1:])),
            )
        )
    summary = {
        "degrees": ",".join(map(str, degrees)),
        "cases": str(len(cases)),
        "failures": str(sum(not c.passed for c in cases)),
    }
    return _report(
        "influence increase under support swaps",
        {"d": ",".join(map(str, degrees))},
        cases,
        summary,
        None,
    )


def check_theorem(
    num_servers: int,
    cache_size: int,
    budget: int = ENUMERATION_BUDGET,
) -> OracleReport:
    """For the XOR of N disjoint degree-M products on K = N*M datasets:
    the minimum average joint sensitivity over all strict placements is
    N/2^(M-1), the aligned placement attains it, and no placement that
    admits a scheme beats the aligned piece count of N.
    """
    n, m = num_servers, cache_size
    k = n * m
    f = disjoint_products(n, m)
    constraints = PlacementConstraints(k, n, m)
    total = count_placements(constraints)
    if total > budget:
        raise EnumerationBudgetError(
            f"{total} strict placements exceed the budget {budget}"
        )
    target_as = Fraction(n, 1 << (m - 1))

    # Per-subset influence cache: every placement's value is a sum of these.
    subset_influence = {}
    for combo in combinations(range(1, k + 1), m):
        mask = mask_from_indices(combo)
        subset_influence[mask] = joint_influence_exact(f, mask).fraction

    support = f.support_mask
    min_as = None
    num_computable = 0
    min_t = None
    min_t_placement = None
    for placement in enumerate_placements(constraints, budget=budget):
        value = sum(subset_influence[s] for s in placement.subset_masks)
        if min_as is None or value < min_as:
            min_as = value
        union = placement.union_mask()
        if support & ~union:
            continue
        num_computable += 1
        t = count_transmissions(synthesize_exact(f, placement)).total
        if min_t is None or t < min_t:
            min_t = t
            min_t_placement = placement

    aligned = aligned_placement(f, constraints)
    aligned_as = avg_joint_sensitivity(f, aligned).fraction
    aligned_t = count_transmissions(synthesize_exact(f, aligned)).total

    cases = [
        OracleCase(
            label=f"min as over {total} strict placements",
            expected=str(target_as),
            observed=str(min_as),
            passed=min_as == target_as,
        ),
        OracleCase(
            label="aligned placement attains the minimum",
            expected=str(target_as),
            observed=str(aligned_as),
            passed=aligned_as == target_as,
        ),
        OracleCase(
            label="piece count at the aligned placement",
            expected=str(n),
            observed=str(aligned_t),
            passed=aligned_t == n,
        ),
        OracleCase(
            label=f"min piece count over {num_computable} computable placements",
            expected=f">= {n}",
            observed=str(min_t),
            passed=min_t is not None and min_t >= n,
        ),
    ]
    summary = {
        "placements": str(total),
        "computable": str(num_computable),
        "min_as": str(min_as),
        "aligned_as": str(aligned_as),
        "aligned_T": str(aligned_t),
        "min_T": str(min_t),
        "min_T_placement": str(min_t_placement),
    }
    grid = {"N": str(n), "M": str(m), "K": str(k)}
    return _report("optimal placement at desk scale", grid, cases, summary, None)


def corollary_study(
    f: BooleanFunctionANF,
    placements: Sequence[PlacementConfig],
    max_recorded_violations: int = 10,
) -> OracleReport:
    """Record (average joint sensitivity, optimal piece count) per placement
    plus per-server influence and piece breakdowns, then report how well
    the two columns agree in rank.  Report-only: passed is always True.
    """
    rows = []
    cases = []
    for placement in placements:
        as_value = avg_joint_sensitivity(f, placement).fraction
        scheme = synthesize_exact(f, placement)
        counts = count_transmissions(scheme, num_servers=placement.num_servers)
        per_inf = [
            str(joint_influence_exact(f, s).fraction) for s in placement.subset_masks
        ]
        rows.append((as_value, counts.total))
        cases.append(
            OracleCase(
                label=str(placement),
                expected="-",
                observed=(
                    f"as={as_value} T={counts.total}"
                    f" inf=[{';'.join(per_inf)}]"
                    f" pieces={list(counts.per_server)}"
                ),
                passed=True,
            )
        )

    violations = []
    for i in range(len(rows)):
        for j in range(i + 1, len(rows)):
            da = rows[i][0] - rows[j][0]
            dt = rows[i][1] - rows[j][1]
            if (da < 0 and dt > 0) or (da > 0 and dt < 0):
                violations.append((i, j))

    rho = None
    as_col = [float(a) for a, _ in rows]
    t_col = [float(t) for _, t in rows]
    if len(set(as_col)) > 1 and len(set(t_col)) > 1:
        from scipy.stats import spearmanr

        value = spearmanr(as_col, t_col).statistic
        if not math.isnan(value):
            rho = float(value)

    recorded = "; ".join(
        f"#{i}(as={rows[i][0]},T={rows[i][1]}) vs #{j}(as={rows[j][0]},T={rows[j][1]})"
        for i, j in violations[:max_recorded_violations]
    )
    summary = {
        "placements": str(len(rows)),
        "spearman_rho": "n/a" if rho is None else repr(rho),
        "ordering_violations": str(len(violations)),
        "violation_examples": recorded or "none",
    }
    grid = {"K": str(f.num_datasets), "placements": str(len(placements))}
    return _report(
        "sensitivity vs piece count (study)", grid, cases, summary, None, force_pass=True
    )
