"""Boolean functions in algebraic normal form over F2.

A function on K binary datasets is an XOR of AND-monomials.  Each
monomial is stored as a bitmask: bit ``k - 1`` set means dataset ``k``
is a factor (datasets are 1-based everywhere outside this module, to
match the usual W_1..W_K naming).  The empty mask is the constant-1
term.  Input assignments and flip sets use the same bitmask encoding.

All values are immutable; every operation here is a pure function.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np

# Masks are machine words; desk-scale tool, larger inputs are rejected.
MAX_DATASETS = 64
# Hard memory stop for dense truth tables (2^26 bytes each).
MAX_TRUTH_TABLE_DATASETS = 26

UNIFORM_DEGREE_DISJOINT = "uniform-degree-disjoint"
GENERAL_XOR_OF_MONOMIALS = "general-xor-of-monomials"


class ParseError(ValueError):
    """Malformed function, placement, or scheme input."""


def mask_from_indices(indices: Iterable[int], num_datasets: int | None = None) -> int:
    """Build a bitmask from 1-based dataset indices.

    Duplicate indices are rejected rather than collapsed so that input
    mistakes do not silently disappear.
    """
    mask = 0
    for idx in indices:
        if not isinstance(idx, int) or isinstance(idx, bool):
            raise ParseError(f"dataset index must be an integer, got {idx!r}")
        if idx < 1:
            raise ParseError(f"dataset index {idx} out of range (must be >= 1)")
        if num_datasets is not None and idx > num_datasets:
            raise ParseError(f"dataset index {idx} out of range [1, {num_datasets}]")
        if idx > MAX_DATASETS:
            raise ParseError(f"dataset index {idx} exceeds the {MAX_DATASETS}-dataset limit")
        bit = 1 << (idx - 1)
        if mask & bit:
            raise ParseError(f"duplicate dataset index {idx} in one monomial/subset")
        mask |= bit
    return mask


def indices_from_mask(mask: int) -> tuple[int, ...]:
    """1-based dataset indices of a bitmask, ascending."""
    out = []
    k = 1
    while mask:
        if mask & 1:
            out.append(k)
        mask >>= 1
        k += 1
    return tuple(out)


def monomial_sort_key(mask: int) -> tuple[int, tuple[int, ...]]:
    """Canonical monomial order: by degree, then lexicographic on indices."""
    return (mask.bit_count(), indices_from_mask(mask))


def assignment_from_bits(text: str) -> tuple[int, int]:
    """Parse a bit string like ``"101"`` (W_1 first) into (mask, length)."""
    if not text or any(c not in "01" for c in text):
        raise ParseError(f"assignment must be a nonempty 0/1 string, got {text!r}")
    if len(text) > MAX_DATASETS:
        raise ParseError(f"assignment longer than {MAX_DATASETS} bits")
    mask = 0
    for pos, c in enumerate(text):
        if c == "1":
            mask |= 1 << pos
    return mask, len(text)


def bits_from_assignment(mask: int, num_datasets: int) -> str:
    """Render an assignment mask as a bit string, W_1 first."""
    return "".join("1" if mask >> k & 1 else "0" for k in range(num_datasets))


@dataclass(frozen=True)
class BooleanFunctionANF:
    """Canonical ANF: XOR of distinct monomials over ``num_datasets`` inputs.

    The monomial tuple is canonical: XOR-cancelled (a monomial listed an
    even number of times is gone) and sorted by (degree, index order).
    Use :meth:`from_masks` or :meth:`from_indices` to canonicalize raw
    input; direct construction requires already-canonical data.
    """

    num_datasets: int
    monomials: tuple[int, ...]

    def __post_init__(self) -> None:
        k = self.num_datasets
        if not isinstance(k, int) or k < 1:
            raise ParseError(f"number of datasets must be a positive integer, got {k!r}")
        if k > MAX_DATASETS:
            raise ParseError(f"number of datasets {k} exceeds the {MAX_DATASETS} limit")
        full = (1 << k) - 1
        for m in self.monomials:
            if not isinstance(m, int) or m < 0 or m & ~full:
                raise ParseError(f"monomial mask {m!r} not within [1, {k}]")
        keys = [monomial_sort_key(m) for m in self.monomials]
        if keys != sorted(set(keys)):
            raise ValueError("monomials not in canonical order (use from_masks)")

    @classmethod
    def from_masks(cls, num_datasets: int, masks: Iterable[int]) -> "BooleanFunctionANF":
        """Canonicalize: cancel pairs (XOR), sort by (degree, indices)."""
        parity: dict[int, int] = {}
        for m in masks:
            parity[m] = parity.get(m, 0) ^ 1
        kept = [m for m, p in parity.items() if p]
        kept.sort(key=monomial_sort_key)
        return cls(num_datasets, tuple(kept))

    @classmethod
    def from_indices(cls, num_datasets: int, index_lists: Iterable[Iterable[int]]) -> "BooleanFunctionANF":
        masks = [mask_from_indices(ix, num_datasets) for ix in index_lists]
        return cls.from_masks(num_datasets, masks)

    @property
    def support_mask(self) -> int:
        """Union of all monomial variables."""
        out = 0
        for m in self.monomials:
            out |= m
        return out

    @property
    def constant_term(self) -> int:
        """1 if the constant-1 monomial is present."""
        return 1 if self.monomials and self.monomials[0] == 0 else 0

    @property
    def non_constant_monomials(self) -> tuple[int, ...]:
        return self.monomials[self.constant_term:]

    def __str__(self) -> str:
        if not self.monomials:
            return "0"
        parts = []
        for m in self.monomials:
            if m == 0:
                parts.append("1")
            else:
                parts.append("".join(f"W{k}" for k in indices_from_mask(m)))
        return " + ".join(parts)


def parse_function(text: str) -> BooleanFunctionANF:
    """Parse the JSON function format: {"K": int, "monomials": [[int,...],...]}.

    An empty inner array is the constant-1 term.  Duplicate monomials
    cancel pairwise (XOR over F2).
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ParseError("function file must be a JSON object")
    if "K" not in obj or "monomials" not in obj:
        raise ParseError('function file needs fields "K" and "monomials"')
    k = obj["K"]
    if not isinstance(k, int) or isinstance(k, bool) or k <= 0:
        raise ParseError(f'"K" must be a positive integer, got {k!r}')
    mon = obj["monomials"]
    if not isinstance(mon, list) or any(not isinstance(row, list) for row in mon):
        raise ParseError('"monomials" must be an array of arrays of indices')
    return BooleanFunctionANF.from_indices(k, mon)


def function_to_json(f: BooleanFunctionANF) -> str:
    """Canonical serialization; parse(function_to_json(f)) round-trips bit-exactly."""
    obj = {
        "K": f.num_datasets,
        "monomials": [list(indices_from_mask(m)) for m in f.monomials],
    }
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def _check_assignment(f: BooleanFunctionANF, assignment: int) -> None:
    if not isinstance(assignment, int) or assignment < 0 or assignment >> f.num_datasets:
        raise ValueError(
            f"assignment {assignment!r} does not fit {f.num_datasets} datasets"
        )


def evaluate(f: BooleanFunctionANF, assignment: int) -> int:
    """Evaluate f at one assignment mask: XOR over monomials of their ANDed bits."""
    _check_assignment(f, assignment)
    out = 0
    for m in f.monomials:
        if assignment & m == m:
            out ^= 1
    return out


def evaluate_batch(f: BooleanFunctionANF, assignments: np.ndarray) -> np.ndarray:
    """Vectorized :func:`evaluate` over an unsigned integer array of masks."""
    out = np.zeros(assignments.shape, dtype=bool)
    for m in f.monomials:
        mm = assignments.dtype.type(m)
        out ^= (assignments & mm) == mm
    return out


@lru_cache(maxsize=8)
def truth_table(f: BooleanFunctionANF) -> np.ndarray:
    """Dense truth table of f over all 2^K assignments (index = assignment mask).

    Cached; callers must treat the returned array as read-only.
    """
    k = f.num_datasets
    if k > MAX_TRUTH_TABLE_DATASETS:
        raise ValueError(f"truth table for K={k} exceeds the K<={MAX_TRUTH_TABLE_DATASETS} cap")
    idx = np.arange(1 << k, dtype=np.uint32)
    return evaluate_batch(f, idx)


def flip_assignment(assignment: int, flip_mask: int, num_datasets: int) -> int:
    """Flip the datasets in ``flip_mask`` jointly; an involution, identity for 0."""
    if assignment < 0 or assignment >> num_datasets:
        raise ValueError(f"assignment {assignment!r} does not fit {num_datasets} datasets")
    if flip_mask < 0 or flip_mask >> num_datasets:
        raise ValueError(f"flip set {flip_mask!r} not within [1, {num_datasets}]")
    return assignment ^ flip_mask


def classify_linearly_separable(f: BooleanFunctionANF, cache_size: int) -> str:
    """Classify f against the degree-``cache_size`` XOR-of-disjoint-products shape.

    Returns :data:`UNIFORM_DEGREE_DISJOINT` iff f has at least one
    monomial, every monomial has degree exactly ``cache_size``, and the
    monomial supports are pairwise disjoint.  A constant term (degree 0)
    always classifies as general.
    """
    if cache_size < 1:
        raise ValueError(f"cache size must be positive, got {cache_size}")
    if not f.monomials:
        return GENERAL_XOR_OF_MONOMIALS
    seen = 0
    for m in f.monomials:
        if m.bit_count() != cache_size:
            return GENERAL_XOR_OF_MONOMIALS
        if seen & m:
            return GENERAL_XOR_OF_MONOMIALS
        seen |= m
    return UNIFORM_DEGREE_DISJOINT
