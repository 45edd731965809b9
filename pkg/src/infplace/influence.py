"""Joint sensitivity and joint influence of dataset subsets.

Joint sensitivity at one assignment counts how many of the given flip
sets change the function output when flipped together.  Joint influence
is the probability of a change over uniform inputs; the exact path
counts changed assignments over all 2^K inputs and stores the result as
an integer count over 2^K (lemma checks need exact equality, floats
would not do).  Above the enumeration limit a Hoeffding-calibrated
Monte Carlo estimator takes over.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .anf import BooleanFunctionANF, evaluate, evaluate_batch, flip_assignment, truth_table

if TYPE_CHECKING:
    from .placement import PlacementConfig

# 2^24 evaluations per influence; above this the MC path is mandatory.
EXACT_ENUMERATION_LIMIT = 24
# Samples per deterministic RNG block; the block grid, not the thread
# count, defines the sample stream.
MC_BLOCK_SIZE = 8192


class ExactLimitError(RuntimeError):
    """Exact enumeration refused; use the Monte Carlo path instead."""


@dataclass(frozen=True)
class InfluenceValue:
    """An influence (or summed-influence) value, exact or estimated.

    Exact values are ``count / denominator`` with a power-of-two
    denominator.  Estimates carry the sample mean plus a Hoeffding
    half-width; summed estimates lose ``samples``/``seed`` (set to None)
    and add half-widths conservatively.
    """

    kind: str  # "exact" | "estimate"
    count: int | None = None
    denominator: int | None = None
    mean: float | None = None
    half_width: float | None = None
    samples: int | None = None
    seed: int | None = None

    @classmethod
    def exact_value(cls, count: int, denominator: int) -> "InfluenceValue":
        if denominator <= 0 or denominator & (denominator - 1):
            raise ValueError(f"denominator must be a power of two, got {denominator}")
        if count < 0:
            raise ValueError(f"negative count {count}")
        return cls(kind="exact", count=count, denominator=denominator)

    @classmethod
    def estimate_value(
        cls, mean: float, half_width: float, samples: int | None, seed: int | None
    ) -> "InfluenceValue":
        return cls(kind="estimate", mean=mean, half_width=half_width, samples=samples, seed=seed)

    @property
    def is_exact(self) -> bool:
        return self.kind == "exact"

    @property
    def fraction(self) -> Fraction:
        if not self.is_exact:
            raise ValueError("not an exact value")
        return Fraction(self.count, self.denominator)

    @property
    def value(self) -> float:
        return self.count / self.denominator if self.is_exact else self.mean

    def __str__(self) -> str:
        if self.is_exact:
            return f"{self.count}/{self.denominator}"
        return (
            f"{self.mean!r} ± {self.half_width!r}"
            f" (samples={self.samples}, seed={self.seed})"
        )

    def to_json_dict(self) -> dict:
        if self.is_exact:
            return {"kind": "exact", "count": self.count, "denominator": self.denominator}
        return {
            "kind": "estimate",
            "mean": self.mean,
            "half_width": self.half_width,
            "samples": self.samples,
            "seed": self.seed,
        }


def sum_influences(values: Sequence[InfluenceValue]) -> InfluenceValue:
    """Sum influence values; exact stays exact, any estimate makes the sum one."""
    if all(v.is_exact for v in values):
        denom = max((v.denominator for v in values), default=1)
        count = sum(v.count * (denom // v.denominator) for v in values)
        return InfluenceValue.exact_value(count, denom)
    mean = sum(v.value for v in values)
    half = sum(v.half_width for v in values if not v.is_exact)
    return InfluenceValue.estimate_value(mean, half, None, None)


@dataclass(frozen=True)
class EstimatorConfig:
    """(epsilon, delta) contract for the Monte Carlo estimator.

    The sample count comes from the Hoeffding bound, rounded up, so the
    estimate lands within ``epsilon`` of the true influence with
    probability at least ``1 - delta`` under no distributional
    assumptions.
    """

    epsilon: float
    delta: float
    seed: int

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must be in (0, 1), got {self.epsilon}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")

    @property
    def sample_count(self) -> int:
        return math.ceil(math.log(2.0 / self.delta) / (2.0 * self.epsilon**2))


def joint_sensitivity(
    f: BooleanFunctionANF, flip_masks: Sequence[int], assignment: int
) -> int:
    """Number of flip sets whose joint flip changes f at this assignment.

    Overlapping or repeated flip sets count independently; an empty
    list yields 0.
    """
    base = evaluate(f, assignment)
    k = f.num_datasets
    total = 0
    for mask in flip_masks:
        flipped = flip_assignment(assignment, mask, k)
        if evaluate(f, flipped) != base:
            total += 1
    return total


def joint_influence_exact(
    f: BooleanFunctionANF, flip_mask: int, limit: int = EXACT_ENUMERATION_LIMIT
) -> InfluenceValue:
    """Exact joint influence: changed assignments counted over all 2^K inputs."""
    k = f.num_datasets
    if k > limit:
        raise ExactLimitError(
            f"K={k} exceeds the exact enumeration limit {limit};"
            " use joint_influence_mc"
        )
    if flip_mask < 0 or flip_mask >> k:
        raise ValueError(f"flip set {flip_mask!r} not within [1, {k}]")
    tt = truth_table(f)
    if flip_mask == 0:
        return InfluenceValue.exact_value(0, 1 << k)
    flipped_idx = np.arange(1 << k, dtype=np.uint32) ^ np.uint32(flip_mask)
    changed = int(np.count_nonzero(tt[flipped_idx] != tt))
    return InfluenceValue.exact_value(changed, 1 << k)


def _mc_block_mismatches(
    f: BooleanFunctionANF, flip_mask: int, seed: int, block_index: int, block_len: int
) -> int:
    """Mismatch count for one deterministic sample block.

    Each block owns an independent RNG stream keyed by (seed, block
    index), so the result is the same no matter which worker runs it.
    """
    rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(block_index,)))
    )
    k = f.num_datasets
    if k <= 63:
        w = rng.integers(0, 1 << k, size=block_len, dtype=np.uint64)
    else:
        hi = rng.integers(0, 1 << (k - 32), size=block_len, dtype=np.uint64)
        lo = rng.integers(0, 1 << 32, size=block_len, dtype=np.uint64)
        w = (hi << np.uint64(32)) | lo
    base = evaluate_batch(f, w)
    flipped = evaluate_batch(f, w ^ np.uint64(flip_mask))
    return int(np.count_nonzero(base != flipped))


def joint_influence_mc(
    f: BooleanFunctionANF, flip_mask: int, config: EstimatorConfig, threads: int = 1
) -> InfluenceValue:
    """Monte Carlo joint influence under the (epsilon, delta) Hoeffding contract.

    Deterministic for a fixed seed regardless of ``threads``: samples
    are partitioned into fixed blocks with per-block RNG streams and the
    per-block counts are summed in block order.
    """
    k = f.num_datasets
    if flip_mask < 0 or flip_mask >> k:
        raise ValueError(f"flip set {flip_mask!r} not within [1, {k}]")
    n = config.sample_count
    blocks = [
        (b, min(MC_BLOCK_SIZE, n - b * MC_BLOCK_SIZE))
        for b in range((n + MC_BLOCK_SIZE - 1) // MC_BLOCK_SIZE)
    ]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            counts = list(
                pool.map(
                    lambda blk: _mc_block_mismatches(f, flip_mask, config.seed, blk[0], blk[1]),
                    blocks,
                )
            )
    else:
        counts = [_mc_block_mismatches(f, flip_mask, config.seed, b, ln) for b, ln in blocks]
    mismatches = sum(counts)
    mean = mismatches / n
    half_width = math.sqrt(math.log(2.0 / config.delta) / (2.0 * n))
    return InfluenceValue.estimate_value(mean, half_width, n, config.seed)


def avg_joint_sensitivity(
    f: BooleanFunctionANF,
    placement: "PlacementConfig",
    estimator: EstimatorConfig | None = None,
    limit: int = EXACT_ENUMERATION_LIMIT,
    threads: int = 1,
) -> InfluenceValue:
    """Sum of the joint influences of the placed subsets.

    Overlapping and repeated subsets count independently.  Exact up to
    the enumeration limit; beyond it an estimator config is required
    and per-subset estimates are summed with half-widths added.
    """
    k = f.num_datasets
    full = (1 << k) - 1
    for mask in placement.subset_masks:
        if mask < 0 or mask & ~full:
            raise ValueError(
                f"placement subset {mask!r} references datasets outside [1, {k}]"
            )
    if f.num_datasets <= limit:
        per = [joint_influence_exact(f, mask, limit) for mask in placement.subset_masks]
    else:
        if estimator is None:
            raise ExactLimitError(
                f"K={k} exceeds the exact enumeration limit {limit};"
                " pass an EstimatorConfig for the Monte Carlo path"
            )
        per = [
            joint_influence_mc(f, mask, estimator, threads=threads)
            for mask in placement.subset_masks
        ]
    if not per:
        return InfluenceValue.exact_value(0, 1 << k)
    return sum_influences(per)


def analytic_influence_product(degree: int) -> Fraction:
    """Closed-form joint influence of any nonempty flip set inside one product: 2^(1-d)."""
    if degree < 1:
        raise ValueError(f"degree must be >= 1, got {degree}")
    return Fraction(1, 1 << (degree - 1))


def analytic_influence_one_swap(degree: int) -> Fraction:
    """Closed-form influence of a one-swap subset on an XOR of two disjoint
    degree-d products: 2 * 2^(1-d) * (1 - 2^(1-d))."""
    if degree < 2:
        raise ValueError(f"degree must be >= 2, got {degree}")
    p = Fraction(1, 1 << (degree - 1))
    return 2 * p * (1 - p)
