"""Joint sensitivity and joint influence, exact and estimated.

The exact path is checked against a slow reference loop that never
touches numpy, and against hand-derived closed forms for single
products and two-product swaps.
"""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infplace.anf import BooleanFunctionANF, evaluate, flip_assignment
from infplace.influence import (
    EstimatorConfig,
    ExactLimitError,
    InfluenceValue,
    analytic_influence_one_swap,
    analytic_influence_product,
    avg_joint_sensitivity,
    joint_influence_exact,
    joint_influence_mc,
    joint_sensitivity,
    sum_influences,
)
from infplace.placement import PlacementConfig


def slow_influence(f, flip_mask):
    """Reference count of assignments where the joint flip changes f."""
    changed = 0
    for w in range(1 << f.num_datasets):
        if evaluate(f, w) != evaluate(f, w ^ flip_mask):
            changed += 1
    return Fraction(changed, 1 << f.num_datasets)


@st.composite
def function_and_flip(draw, max_k=7):
    k = draw(st.integers(1, max_k))
    masks = draw(st.lists(st.integers(0, (1 << k) - 1), max_size=4))
    flip = draw(st.integers(0, (1 << k) - 1))
    return BooleanFunctionANF.from_masks(k, masks), flip


@given(function_and_flip())
@settings(max_examples=80)
def test_exact_influence_matches_reference(case):
    f, flip = case
    assert joint_influence_exact(f, flip).fraction == slow_influence(f, flip)


def test_exact_influence_fixture(example_function):
    # Enumerated over all 512 assignments before the fast path existed.
    v = joint_influence_exact(example_function, 0b001001001)
    assert (v.count, v.denominator) == (160, 512)
    assert v.fraction == Fraction(5, 16)


def test_empty_flip_set_has_zero_influence(example_function):
    v = joint_influence_exact(example_function, 0)
    assert v.count == 0 and v.denominator == 512


def test_single_product_closed_form():
    for d in range(1, 7):
        f = BooleanFunctionANF.from_indices(d + 1, [list(range(1, d + 1))])
        expected = analytic_influence_product(d)
        assert expected == Fraction(1, 2 ** (d - 1))
        # every singleton inside the support
        for i in range(d):
            assert joint_influence_exact(f, 1 << i).fraction == expected
        # the full support
        assert joint_influence_exact(f, (1 << d) - 1).fraction == expected


def test_one_swap_closed_form():
    # f = W1..Wd xor W(d+1)..W(2d); swap W1 for W(d+1) in the first support.
    for d in range(2, 6):
        f = BooleanFunctionANF.from_indices(
            2 * d, [list(range(1, d + 1)), list(range(d + 1, 2 * d + 1))]
        )
        swap = (((1 << d) - 2) | (1 << d))
        got = joint_influence_exact(f, swap).fraction
        assert got == analytic_influence_one_swap(d)
        assert got >= analytic_influence_product(d)


def test_influence_flip_mask_validation(example_function):
    with pytest.raises(ValueError):
        joint_influence_exact(example_function, 1 << 9)
    with pytest.raises(ValueError):
        joint_influence_exact(example_function, -1)


def test_exact_limit_enforced():
    f = BooleanFunctionANF.from_indices(30, [[1, 2, 3]])
    with pytest.raises(ExactLimitError):
        joint_influence_exact(f, 0b111)


@given(function_and_flip())
@settings(max_examples=40)
def test_complement_invariance(case):
    # XORing in the constant-1 term never changes any influence.
    f, flip = case
    g = BooleanFunctionANF.from_masks(f.num_datasets, f.monomials + (0,))
    assert joint_influence_exact(f, flip) == joint_influence_exact(g, flip)


@given(function_and_flip(), st.randoms(use_true_random=False))
@settings(max_examples=40)
def test_relabeling_invariance(case, rnd):
    f, flip = case
    k = f.num_datasets
    perm = list(range(1, k + 1))
    rnd.shuffle(perm)

    def relabel(mask):
        out = 0
        for i in range(k):
            if mask >> i & 1:
                out |= 1 << (perm[i] - 1)
        return out

    g = BooleanFunctionANF.from_masks(k, [relabel(m) for m in f.monomials])
    assert (
        joint_influence_exact(f, flip).count
        == joint_influence_exact(g, relabel(flip)).count
    )


def test_joint_sensitivity_by_hand():
    f = BooleanFunctionANF.from_indices(2, [[1, 2]])
    flips = [0b01, 0b10]
    assert joint_sensitivity(f, flips, 0b11) == 2
    assert joint_sensitivity(f, flips, 0b00) == 0
    assert joint_sensitivity(f, flips, 0b01) == 1
    assert joint_sensitivity(f, [], 0b11) == 0
    # repeated flip sets count independently
    assert joint_sensitivity(f, [0b01, 0b01], 0b11) == 2


@given(function_and_flip(max_k=6))
@settings(max_examples=30)
def test_influence_equals_mean_sensitivity(case):
    # Def-by-counting vs expectation of the pointwise sensitivity.
    f, flip = case
    k = f.num_datasets
    total = sum(joint_sensitivity(f, [flip], w) for w in range(1 << k))
    assert joint_influence_exact(f, flip).fraction == Fraction(total, 1 << k)


def test_avg_sensitivity_counts_repeats(disjoint_pairs):
    p = PlacementConfig.from_indices(2, [[1, 2], [1, 2]])
    v = avg_joint_sensitivity(disjoint_pairs, p)
    assert v.fraction == Fraction(1)  # 1/2 + 1/2, same subset twice


def test_avg_sensitivity_fixture(example_function, window_placement):
    v = avg_joint_sensitivity(example_function, window_placement)
    assert (v.count, v.denominator) == (608, 512)
    assert v.fraction == Fraction(19, 16)


def test_avg_sensitivity_rejects_out_of_range_subsets(disjoint_pairs):
    p = PlacementConfig.from_indices(2, [[1, 7]])
    with pytest.raises(ValueError):
        avg_joint_sensitivity(disjoint_pairs, p)


def test_avg_sensitivity_needs_estimator_past_limit():
    f = BooleanFunctionANF.from_indices(30, [[1, 2, 3]])
    p = PlacementConfig.from_indices(3, [[1, 2, 3]])
    with pytest.raises(ExactLimitError):
        avg_joint_sensitivity(f, p)
    est = avg_joint_sensitivity(f, p, estimator=EstimatorConfig(0.02, 1e-2, seed=5))
    assert not est.is_exact
    assert abs(est.mean - 0.25) <= 0.02


# --- InfluenceValue / EstimatorConfig -------------------------------------


def test_influence_value_exact_formatting():
    v = InfluenceValue.exact_value(2, 8)
    assert str(v) == "2/8"
    assert v.fraction == Fraction(1, 4)
    assert v.value == 0.25
    assert v.to_json_dict() == {"kind": "exact", "count": 2, "denominator": 8}


def test_influence_value_estimate_formatting():
    v = InfluenceValue.estimate_value(0.0625, 0.01, 38005, 2024)
    assert not v.is_exact
    assert "samples=38005" in str(v) and "seed=2024" in str(v)
    with pytest.raises(ValueError):
        _ = v.fraction


def test_influence_value_rejects_bad_denominator():
    with pytest.raises(ValueError):
        InfluenceValue.exact_value(1, 6)
    with pytest.raises(ValueError):
        InfluenceValue.exact_value(-1, 8)


def test_sum_influences_exact_common_denominator():
    total = sum_influences(
        [InfluenceValue.exact_value(1, 4), InfluenceValue.exact_value(1, 16)]
    )
    assert (total.count, total.denominator) == (5, 16)
    empty = sum_influences([])
    assert (empty.count, empty.denominator) == (0, 1)


def test_sum_influences_mixes_into_estimate():
    total = sum_influences(
        [
            InfluenceValue.exact_value(1, 4),
            InfluenceValue.estimate_value(0.5, 0.01, 100, 1),
        ]
    )
    assert not total.is_exact
    assert total.mean == pytest.approx(0.75)
    assert total.half_width == pytest.approx(0.01)


def test_sample_count_from_hoeffding_bound():
    cfg = EstimatorConfig(epsilon=0.01, delta=1e-3, seed=0)
    # ceil(ln(2/delta) / (2 eps^2)) computed independently
    assert cfg.sample_count == math.ceil(math.log(2 / 1e-3) / (2 * 0.01**2))
    assert cfg.sample_count == 38005


@pytest.mark.parametrize("eps,delta", [(0.0, 0.1), (1.0, 0.1), (0.1, 0.0), (0.1, 1.0)])
def test_estimator_config_validation(eps, delta):
    with pytest.raises(ValueError):
        EstimatorConfig(epsilon=eps, delta=delta, seed=0)


# --- Monte Carlo ----------------------------------------------------------


def test_mc_deterministic_across_threads():
    f = BooleanFunctionANF.from_indices(30, [[1, 2, 3, 4, 5]])
    cfg = EstimatorConfig(epsilon=0.01, delta=1e-3, seed=2024)
    one = joint_influence_mc(f, f.support_mask, cfg, threads=1)
    four = joint_influence_mc(f, f.support_mask, cfg, threads=4)
    assert one == four
    assert one.samples == 38005 and one.seed == 2024


def test_mc_seed_changes_stream():
    f = BooleanFunctionANF.from_indices(30, [[1, 2, 3, 4, 5]])
    a = joint_influence_mc(f, 0b11, EstimatorConfig(0.01, 1e-3, seed=1))
    b = joint_influence_mc(f, 0b11, EstimatorConfig(0.01, 1e-3, seed=2))
    assert a.mean != b.mean  # overwhelmingly likely for 38005 samples


def test_mc_honors_contract_on_known_value():
    f = BooleanFunctionANF.from_indices(28, [[1, 2, 3, 4]])
    cfg = EstimatorConfig(epsilon=0.01, delta=1e-3, seed=77)
    est = joint_influence_mc(f, 0b1, cfg)
    assert abs(est.mean - 0.125) <= cfg.epsilon
    assert est.half_width == pytest.approx(
        math.sqrt(math.log(2 / 1e-3) / (2 * est.samples))
    )


def test_mc_small_k_agrees_with_exact_loosely():
    f = BooleanFunctionANF.from_indices(10, [[1, 2], [3, 4, 5]])
    exact = joint_influence_exact(f, 0b10011).value
    est = joint_influence_mc(f, 0b10011, EstimatorConfig(0.02, 1e-3, seed=3))
    assert abs(est.mean - exact) <= 0.02
