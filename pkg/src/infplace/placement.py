"""Placement configurations: construction, validation, enumeration, search.

A placement assigns each of N servers a subset of the K datasets under
a cache size M.  Strict mode demands exactly M datasets per server;
relaxed mode only caps the size.  The two deterministic generators are
the cyclic baseline (circularly shifted index windows) and the aligned
placement (one monomial support per server, padded in strict mode).
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations, product
from math import comb
from typing import Iterator, Sequence

from .anf import (
    BooleanFunctionANF,
    ParseError,
    indices_from_mask,
    mask_from_indices,
)
from .influence import (
    EXACT_ENUMERATION_LIMIT,
    InfluenceValue,
    joint_influence_exact,
)

ENUMERATION_BUDGET = 10**7

SEARCH_EXHAUSTIVE = "exhaustive"
SEARCH_GREEDY_ALIGNED = "greedy-aligned"


class EnumerationBudgetError(RuntimeError):
    """The requested placement grid exceeds the enumeration budget."""


@dataclass(frozen=True)
class PlacementConstraints:
    """Problem-size parameters for placement generation and search."""

    num_datasets: int
    num_servers: int
    cache_size: int
    strict_cache: bool = True

    def __post_init__(self) -> None:
        for name in ("num_datasets", "num_servers", "cache_size"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")


@dataclass(frozen=True)
class PlacementConfig:
    """The ordered server subsets of one placement, as bitmasks."""

    num_servers: int
    cache_size: int
    subset_masks: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.num_servers != len(self.subset_masks):
            raise ValueError(
                f"{len(self.subset_masks)} subsets for {self.num_servers} servers"
            )
        for m in self.subset_masks:
            if not isinstance(m, int) or m < 0:
                raise ValueError(f"bad subset mask {m!r}")

    @classmethod
    def from_indices(
        cls, cache_size: int, subsets: Sequence[Sequence[int]]
    ) -> "PlacementConfig":
        masks = tuple(mask_from_indices(s) for s in subsets)
        return cls(len(masks), cache_size, masks)

    def subsets_as_indices(self) -> tuple[tuple[int, ...], ...]:
        return tuple(indices_from_mask(m) for m in self.subset_masks)

    def union_mask(self) -> int:
        out = 0
        for m in self.subset_masks:
            out |= m
        return out

    def __str__(self) -> str:
        return "; ".join(
            "{" + ",".join(map(str, s)) + "}" for s in self.subsets_as_indices()
        )


def parse_placement(text: str) -> PlacementConfig:
    """Parse the JSON placement format: {"N": int, "M": int, "subsets": [[int,...],...]}."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ParseError("placement file must be a JSON object")
    for key in ("N", "M", "subsets"):
        if key not in obj:
            raise ParseError(f'placement file needs field "{key}"')
    n, m, subsets = obj["N"], obj["M"], obj["subsets"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ParseError(f'"N" must be a positive integer, got {n!r}')
    if not isinstance(m, int) or isinstance(m, bool) or m < 1:
        raise ParseError(f'"M" must be a positive integer, got {m!r}')
    if not isinstance(subsets, list) or any(not isinstance(s, list) for s in subsets):
        raise ParseError('"subsets" must be an array of arrays of indices')
    if len(subsets) != n:
        raise ParseError(f'"subsets" has {len(subsets)} entries for N={n}')
    return PlacementConfig(n, m, tuple(mask_from_indices(s) for s in subsets))


def placement_to_json(p: PlacementConfig) -> str:
    """Canonical serialization; subsets listed in server order, indices ascending."""
    obj = {
        "N": p.num_servers,
        "M": p.cache_size,
        "subsets": [list(s) for s in p.subsets_as_indices()],
    }
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


@dataclass(frozen=True)
class PlacementReport:
    """Validation findings; report-style, nothing raises."""

    cache_violations: tuple[tuple[int, int], ...]  # (server, subset size)
    index_violations: tuple[int, ...]  # servers referencing datasets > K
    computable: bool
    uncovered_indices: tuple[int, ...]  # support datasets on no server

    @property
    def ok(self) -> bool:
        return not self.cache_violations and not self.index_violations and self.computable


def validate(
    p: PlacementConfig, c: PlacementConstraints, f: BooleanFunctionANF
) -> PlacementReport:
    """Check cache sizes, index ranges, and computability of f.

    Computability means every dataset appearing in f is held by at
    least one server; single-dataset pieces then always suffice, so
    this is exactly what any partial-product scheme needs.
    """
    full = (1 << c.num_datasets) - 1
    cache, index = [], []
    for server, mask in enumerate(p.subset_masks, start=1):
        size = mask.bit_count()
        if (c.strict_cache and size != c.cache_size) or size > c.cache_size:
            cache.append((server, size))
        if mask & ~full:
            index.append(server)
    uncovered = f.support_mask & ~p.union_mask()
    return PlacementReport(
        cache_violations=tuple(cache),
        index_violations=tuple(index),
        computable=uncovered == 0,
        uncovered_indices=indices_from_mask(uncovered),
    )


def cyclic_placement(c: PlacementConstraints) -> PlacementConfig:
    """Baseline placement: server n holds an M-wide index window shifted by
    ceil(K/N) per server (the shift rule also covers K != N*M)."""
    k, n, m = c.num_datasets, c.num_servers, c.cache_size
    if m > k:
        raise ValueError(f"cache size {m} exceeds dataset count {k}")
    shift = -(-k // n)
    masks = []
    for server in range(n):
        start = server * shift
        masks.append(mask_from_indices([(start + j) % k + 1 for j in range(m)]))
    return PlacementConfig(n, m, tuple(masks))


def _padded(mask: int, target_size: int, prefer_mask: int, num_datasets: int) -> int:
    """Pad a subset up to target_size, preferred datasets first, then lowest index."""
    for pool in (prefer_mask & ~mask, ~mask):
        k = 1
        while mask.bit_count() < target_size and k <= num_datasets:
            bit = 1 << (k - 1)
            if pool & bit and not mask & bit:
                mask |= bit
            k += 1
    return mask


def aligned_placement(
    f: BooleanFunctionANF, c: PlacementConstraints
) -> PlacementConfig:
    """Support-aligned placement: server n caches the variables of monomial n.

    Monomials are taken in canonical order.  In strict mode short
    subsets are padded to M, preferring datasets that appear in no
    monomial (padding with those never changes the subset's influence);
    only when none remain does padding fall back to the lowest-index
    datasets missing from the subset.  Servers beyond the monomial
    count get padding-only subsets.
    """
    k, n, m = c.num_datasets, c.num_servers, c.cache_size
    if len(f.monomials) > n:
        raise ValueError(
            f"{len(f.monomials)} monomials cannot be aligned onto {n} servers"
        )
    unused = ((1 << k) - 1) & ~f.support_mask
    masks = []
    for server in range(n):
        mask = f.monomials[server] if server < len(f.monomials) else 0
        if mask.bit_count() > m:
            raise ValueError(
                f"monomial {indices_from_mask(mask)} has degree {mask.bit_count()} > M={m}"
            )
        if c.strict_cache:
            mask = _padded(mask, m, unused, k)
        masks.append(mask)
    return PlacementConfig(n, m, tuple(masks))


def count_placements(c: PlacementConstraints) -> int:
    return comb(c.num_datasets, c.cache_size) ** c.num_servers


def enumerate_placements(
    c: PlacementConstraints, budget: int = ENUMERATION_BUDGET
) -> Iterator[PlacementConfig]:
    """Every ordered N-tuple of size-M subsets of [K], lexicographic, exactly once."""
    total = count_placements(c)
    if total > budget:
        raise EnumerationBudgetError(
            f"{total} placements exceed the enumeration budget {budget}"
        )
    k, n, m = c.num_datasets, c.num_servers, c.cache_size
    subsets = [mask_from_indices(ix) for ix in combinations(range(1, k + 1), m)]
    for combo in product(subsets, repeat=n):
        yield PlacementConfig(n, m, combo)


def _exhaustive_min(
    f: BooleanFunctionANF, c: PlacementConstraints, budget: int, threads: int
) -> tuple[PlacementConfig, InfluenceValue]:
    total = count_placements(c)
    if total > budget:
        raise EnumerationBudgetError(
            f"{total} placements exceed the enumeration budget {budget}"
        )
    k, n, m = c.num_datasets, c.num_servers, c.cache_size
    subsets = [mask_from_indices(ix) for ix in combinations(range(1, k + 1), m)]
    counts = [joint_influence_exact(f, s).count for s in subsets]
    support = f.support_mask
    num_subsets = len(subsets)

    def scan_block(first: int) -> tuple[int, tuple[int, ...]] | None:
        # Placements sharing the first subset, in lexicographic order.
        best: tuple[int, tuple[int, ...]] | None = None
        for rest in product(range(num_subsets), repeat=n - 1):
            combo = (first, *rest)
            union = 0
            for i in combo:
                union |= subsets[i]
            if support & ~union:
                continue  # not computable for f
            as_count = sum(counts[i] for i in combo)
            if best is None or as_count < best[0]:
                best = (as_count, combo)
        return best

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            block_bests = list(pool.map(scan_block, range(num_subsets)))
    else:
        block_bests = [scan_block(first) for first in range(num_subsets)]

    best = None
    for cand in block_bests:  # block order preserves lexicographic tie-breaking
        if cand is not None and (best is None or cand[0] < best[0]):
            best = cand
    if best is None:
        raise ValueError("no placement can cover the function's datasets")
    placement = PlacementConfig(n, m, tuple(subsets[i] for i in best[1]))
    return placement, InfluenceValue.exact_value(best[0], 1 << k)


def search_min_as(
    f: BooleanFunctionANF,
    c: PlacementConstraints,
    method: str = SEARCH_EXHAUSTIVE,
    budget: int = ENUMERATION_BUDGET,
    threads: int = 1,
) -> tuple[PlacementConfig, InfluenceValue]:
    """Find a placement minimizing the summed joint influence.

    ``exhaustive`` scans every strict placement that can compute f
    (lexicographic first wins ties); ``greedy-aligned`` returns the
    aligned placement directly.  K must be within the exact enumeration
    limit.
    """
    if f.num_datasets > EXACT_ENUMERATION_LIMIT:
        raise EnumerationBudgetError(
            f"search requires K <= {EXACT_ENUMERATION_LIMIT}, got {f.num_datasets}"
        )
    if method == SEARCH_EXHAUSTIVE:
        return _exhaustive_min(f, c, budget, threads)
    if method == SEARCH_GREEDY_ALIGNED:
        from .influence import avg_joint_sensitivity

        placement = aligned_placement(f, c)
        return placement, avg_joint_sensitivity(f, placement)
    raise ValueError(f"unknown search method {method!r}")
