"""Per-server transmission schemes: synthesis, counting, decoding, verification.

A scheme sends partial products ("pieces"): each piece is a nonempty
set of datasets held by one server.  The user multiplies the pieces
assigned to a monomial and XORs across monomials, so correctness only
needs every monomial's support exactly partitioned by its pieces.
Identical (server, vars) pieces are transmitted once and reused.

The exact synthesizer minimizes the number of distinct pieces within
this class.  Server choice never affects the optimum (a var-set reused
on one server costs one piece; spread over two it costs two), so the
search runs over var-set partitions and servers are assigned afterwards
(lowest covering index, for determinism).  Cost grows superexponentially
with monomial degree; the degree limit is enforced, not advisory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .anf import (
    BooleanFunctionANF,
    ParseError,
    bits_from_assignment,
    evaluate_batch,
    indices_from_mask,
    mask_from_indices,
    truth_table,
)
from .placement import PlacementConfig

EXACT_SYNTHESIS_DEGREE_LIMIT = 16
VERIFY_EXHAUSTIVE_LIMIT = 20
VERIFY_SAMPLE_COUNT = 100_000


class UncomputablePlacementError(ValueError):
    """No partial-product scheme exists: some needed dataset is on no server."""

    def __init__(self, monomial_indices: tuple[int, ...], missing: tuple[int, ...]):
        self.monomial_indices = monomial_indices
        self.missing = missing
        super().__init__(
            f"monomial W{'W'.join(map(str, monomial_indices))} is uncoverable:"
            f" dataset(s) {','.join(map(str, missing))} held by no server"
        )


class SynthesisLimitError(RuntimeError):
    """A monomial degree exceeds the exact-synthesis limit."""


@dataclass(frozen=True)
class Piece:
    """One transmitted unit: a partial product of ``vars_mask`` sent by ``server``."""

    server: int  # 1-based
    vars_mask: int

    def sort_key(self) -> tuple[int, tuple[int, ...]]:
        return (self.server, indices_from_mask(self.vars_mask))


@dataclass(frozen=True)
class TransmissionScheme:
    """Pieces plus, per non-constant monomial of f (canonical order), the
    piece indices whose var sets partition that monomial's support."""

    pieces: tuple[Piece, ...]
    plan: tuple[tuple[int, ...], ...]
    constant: int = 0

    def __post_init__(self) -> None:
        if self.constant not in (0, 1):
            raise ValueError(f"constant term must be 0 or 1, got {self.constant}")
        if len(set(self.pieces)) != len(self.pieces):
            raise ValueError("duplicate (server, vars) piece")
        for refs in self.plan:
            for r in refs:
                if not 0 <= r < len(self.pieces):
                    raise ValueError(f"dangling piece reference {r}")

    def canonical(self) -> "TransmissionScheme":
        """Pieces sorted by (server, vars), plan indices remapped and ascending."""
        order = sorted(range(len(self.pieces)), key=lambda i: self.pieces[i].sort_key())
        remap = {old: new for new, old in enumerate(order)}
        return TransmissionScheme(
            pieces=tuple(self.pieces[i] for i in order),
            plan=tuple(tuple(sorted(remap[r] for r in refs)) for refs in self.plan),
            constant=self.constant,
        )


@dataclass(frozen=True)
class TransmissionCount:
    total: int
    per_server: tuple[int, ...]


def parse_scheme(text: str) -> TransmissionScheme:
    """Parse the JSON scheme format:
    {"pieces":[{"server":int,"vars":[int,...]},...], "plan":[[int,...],...], "constant":0|1}."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ParseError("scheme file must be a JSON object")
    for key in ("pieces", "plan", "constant"):
        if key not in obj:
            raise ParseError(f'scheme file needs field "{key}"')
    pieces = []
    if not isinstance(obj["pieces"], list):
        raise ParseError('"pieces" must be an array')
    for entry in obj["pieces"]:
        if not isinstance(entry, dict) or "server" not in entry or "vars" not in entry:
            raise ParseError(f"bad piece entry {entry!r}")
        server = entry["server"]
        if not isinstance(server, int) or isinstance(server, bool) or server < 1:
            raise ParseError(f"piece server must be a positive integer, got {server!r}")
        vmask = mask_from_indices(entry["vars"])
        if vmask == 0:
            raise ParseError("piece with empty vars")
        pieces.append(Piece(server, vmask))
    plan_obj = obj["plan"]
    if not isinstance(plan_obj, list) or any(not isinstance(row, list) for row in plan_obj):
        raise ParseError('"plan" must be an array of arrays of piece indices')
    plan = []
    for row in plan_obj:
        for r in row:
            if not isinstance(r, int) or isinstance(r, bool) or not 0 <= r < len(pieces):
                raise ParseError(f"plan references unknown piece {r!r}")
        plan.append(tuple(row))
    constant = obj["constant"]
    if constant not in (0, 1):
        raise ParseError(f'"constant" must be 0 or 1, got {constant!r}')
    return TransmissionScheme(tuple(pieces), tuple(plan), constant)


def scheme_to_json(s: TransmissionScheme) -> str:
    """Canonical serialization (pieces ordered by (server, vars))."""
    cs = s.canonical()
    obj = {
        "constant": cs.constant,
        "pieces": [
            {"server": p.server, "vars": list(indices_from_mask(p.vars_mask))}
            for p in cs.pieces
        ],
        "plan": [list(refs) for refs in cs.plan],
    }
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def scheme_structure_errors(s: TransmissionScheme, f: BooleanFunctionANF) -> list[str]:
    """Structural invariant check: one plan row per non-constant monomial,
    each row's pieces pairwise disjoint and uniting to the monomial support."""
    errors = []
    monomials = f.non_constant_monomials
    if s.constant != f.constant_term:
        errors.append(f"constant term {s.constant} != function's {f.constant_term}")
    if len(s.plan) != len(monomials):
        errors.append(f"plan has {len(s.plan)} rows for {len(monomials)} monomials")
        return errors
    for row, (refs, monomial) in enumerate(zip(s.plan, monomials)):
        seen = 0
        for r in refs:
            v = s.pieces[r].vars_mask
            if seen & v:
                errors.append(f"plan row {row}: overlapping pieces")
            seen |= v
        if seen != monomial:
            errors.append(
                f"plan row {row}: pieces cover {indices_from_mask(seen)}"
                f" instead of {indices_from_mask(monomial)}"
            )
    return errors


def _check_computable(f: BooleanFunctionANF, p: PlacementConfig) -> None:
    union = p.union_mask()
    for m in f.non_constant_monomials:
        missing = m & ~union
        if missing:
            raise UncomputablePlacementError(
                indices_from_mask(m), indices_from_mask(missing)
            )


def _coverable_blocks(monomial: int, subset_masks: Sequence[int]) -> set[int]:
    """All nonempty sub-products of the monomial that fit on one server."""
    blocks = set()
    sub = monomial
    while sub:
        if any(sub & ~s == 0 for s in subset_masks):
            blocks.add(sub)
        sub = (sub - 1) & monomial
    return blocks


def _greedy_partitions(
    monomials: Sequence[int], subset_masks: Sequence[int]
) -> list[list[int]]:
    """Largest-held-block partition per monomial, reusing earlier blocks.

    Tie order: block size descending, then lowest server index, then
    variable order.  Always valid for a computable placement; may use
    more distinct blocks than the exact search.
    """
    chosen: list[list[int]] = []
    existing: set[int] = set()
    for monomial in monomials:
        blocks = []
        remaining = monomial
        while remaining:
            best = None
            for server, s in enumerate(subset_masks, start=1):
                cand = remaining & s
                if not cand:
                    continue
                key = (-cand.bit_count(), server, indices_from_mask(cand))
                if best is None or key < best[0]:
                    best = (key, cand)
            if best is None:
                raise UncomputablePlacementError(
                    indices_from_mask(monomial), indices_from_mask(remaining)
                )
            block = best[1]
            blocks.append(block)
            existing.add(block)
            remaining &= ~block
        chosen.append(blocks)
    return chosen


def _min_new_blocks(remaining: int, blocks: set[int], used: set[int]) -> int:
    """Fewest not-yet-used blocks that can complete a partition of ``remaining``."""
    memo = {0: 0}

    def solve(mask: int) -> int:
        if mask in memo:
            return memo[mask]
        low = mask & -mask
        best = mask.bit_count() + 1  # singletons are always coverable blocks
        sub = mask
        while sub:
            if sub & low and sub in blocks:
                cost = (0 if sub in used else 1) + solve(mask & ~sub)
                if cost < best:
                    best = cost
            sub = (sub - 1) & mask
        memo[mask] = best
        return best

    return solve(remaining)


def _search_min_distinct(
    monomials: Sequence[int],
    block_sets: Sequence[set[int]],
    init: list[list[int]],
) -> list[list[int]]:
    """Exact branch-and-bound over per-monomial partitions.

    Minimizes the number of distinct var-set blocks across monomials.
    The incumbent starts at the greedy solution, so the result never
    uses more distinct blocks than greedy.  Bound: used-so-far plus the
    largest per-monomial count of unavoidable new blocks (any block a
    later monomial still must introduce is itself a distinct piece).
    """
    best_choice = [list(blocks) for blocks in init]
    best_count = len({b for blocks in init for b in blocks})
    n = len(monomials)
    path: list[list[int]] = [[] for _ in range(n)]

    def bound(i: int, remaining: int, used: set[int]) -> int:
        worst = 0
        for j in range(i, n):
            rem = remaining if j == i else monomials[j]
            need = _min_new_blocks(rem, block_sets[j], used)
            if need > worst:
                worst = need
        return len(used) + worst

    def go(i: int, remaining: int, used: set[int]) -> None:
        nonlocal best_choice, best_count
        if remaining == 0:
            if i + 1 == n:
                if len(used) < best_count:
                    best_count = len(used)
                    best_choice = [list(blocks) for blocks in path]
                return
            go(i + 1, monomials[i + 1], used)
            return
        if bound(i, remaining, used) >= best_count:
            return
        low = remaining & -remaining
        candidates = []
        sub = remaining
        while sub:
            if sub & low and sub in block_sets[i]:
                candidates.append(sub)
            sub = (sub - 1) & remaining
        # Reusable blocks first, then larger, then variable order.
        candidates.sort(key=lambda b: (b not in used, -b.bit_count(), indices_from_mask(b)))
        for block in candidates:
            added = block not in used
            if added:
                used.add(block)
            path[i].append(block)
            go(i, remaining & ~block, used)
            path[i].pop()
            if added:
                used.remove(block)

    if n:
        go(0, monomials[0], set())
    return best_choice


def _scheme_from_blocks(
    f: BooleanFunctionANF,
    p: PlacementConfig,
    per_monomial_blocks: list[list[int]],
) -> TransmissionScheme:
    """Assign each distinct block the lowest covering server and build the scheme."""

    def server_for(block: int) -> int:
        for server, s in enumerate(p.subset_masks, start=1):
            if block & ~s == 0:
                return server
        raise UncomputablePlacementError(indices_from_mask(block), indices_from_mask(block))

    distinct = sorted({b for blocks in per_monomial_blocks for b in blocks})
    pieces = [Piece(server_for(b), b) for b in distinct]
    index_of = {b: i for i, b in enumerate(distinct)}
    plan = tuple(
        tuple(sorted(index_of[b] for b in blocks)) for blocks in per_monomial_blocks
    )
    return TransmissionScheme(tuple(pieces), plan, f.constant_term).canonical()


def synthesize_greedy(
    f: BooleanFunctionANF, p: PlacementConfig
) -> TransmissionScheme:
    """Fast heuristic scheme; valid whenever the placement is computable,
    never fewer pieces than the exact synthesizer."""
    _check_computable(f, p)
    blocks = _greedy_partitions(f.non_constant_monomials, p.subset_masks)
    return _scheme_from_blocks(f, p, blocks)


def synthesize_exact(
    f: BooleanFunctionANF,
    p: PlacementConfig,
    degree_limit: int = EXACT_SYNTHESIS_DEGREE_LIMIT,
) -> TransmissionScheme:
    """Minimum-piece scheme within the partial-product class (see module doc)."""
    _check_computable(f, p)
    monomials = f.non_constant_monomials
    for m in monomials:
        if m.bit_count() > degree_limit:
            raise SynthesisLimitError(
                f"monomial degree {m.bit_count()} exceeds the exact-synthesis"
                f" limit {degree_limit}"
            )
    block_sets = [_coverable_blocks(m, p.subset_masks) for m in monomials]
    greedy = _greedy_partitions(monomials, p.subset_masks)
    best = _search_min_distinct(monomials, block_sets, greedy)
    return _scheme_from_blocks(f, p, best)


def count_transmissions(
    s: TransmissionScheme, num_servers: int | None = None
) -> TransmissionCount:
    """Total distinct pieces and the per-server breakdown.

    ``num_servers`` extends the per-server list with silent servers; by
    default the highest transmitting server index is used.
    """
    highest = max((p.server for p in s.pieces), default=0)
    n = highest if num_servers is None else num_servers
    if n < highest:
        raise ValueError(f"num_servers={n} below highest piece server {highest}")
    per = [0] * n
    for p in s.pieces:
        per[p.server - 1] += 1
    return TransmissionCount(total=len(s.pieces), per_server=tuple(per))


def decode(s: TransmissionScheme, f: BooleanFunctionANF, assignment: int) -> int:
    """User-side decoding from piece values only: per monomial multiply its
    pieces, XOR across monomials, XOR the constant term."""
    if len(s.plan) != len(f.non_constant_monomials):
        raise ValueError(
            f"plan has {len(s.plan)} rows for {len(f.non_constant_monomials)} monomials"
        )
    piece_values = [
        1 if assignment & p.vars_mask == p.vars_mask else 0 for p in s.pieces
    ]
    out = s.constant
    for refs in s.plan:
        prod = 1
        for r in refs:
            prod &= piece_values[r]
        out ^= prod
    return out


def _decode_batch(s: TransmissionScheme, assignments: np.ndarray) -> np.ndarray:
    piece_vals = []
    for p in s.pieces:
        mm = assignments.dtype.type(p.vars_mask)
        piece_vals.append((assignments & mm) == mm)
    out = np.full(assignments.shape, bool(s.constant))
    for refs in s.plan:
        prod = np.ones(assignments.shape, dtype=bool)
        for r in refs:
            prod &= piece_vals[r]
        out ^= prod
    return out


@dataclass(frozen=True)
class VerifyResult:
    passed: bool
    mode: str  # "exhaustive" | "sampled"
    inputs_checked: int
    counterexample: int | None
    seed: int | None

    def counterexample_bits(self, num_datasets: int) -> str | None:
        if self.counterexample is None:
            return None
        return bits_from_assignment(self.counterexample, num_datasets)


def verify_scheme(
    s: TransmissionScheme,
    f: BooleanFunctionANF,
    exhaustive_limit: int = VERIFY_EXHAUSTIVE_LIMIT,
    sample_count: int = VERIFY_SAMPLE_COUNT,
    seed: int = 0,
) -> VerifyResult:
    """Check decode == evaluate: every input for K <= exhaustive_limit,
    a seeded uniform sample otherwise.  Reports the first failing input."""
    if len(s.plan) != len(f.non_constant_monomials):
        raise ValueError(
            f"plan has {len(s.plan)} rows for {len(f.non_constant_monomials)} monomials"
        )
    k = f.num_datasets
    if k <= exhaustive_limit:
        expect = truth_table(f)
        got = _decode_batch(s, np.arange(1 << k, dtype=np.uint32))
        bad = np.nonzero(expect != got)[0]
        counter = int(bad[0]) if bad.size else None
        return VerifyResult(counter is None, "exhaustive", 1 << k, counter, None)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed)))
    if k <= 63:
        w = rng.integers(0, 1 << k, size=sample_count, dtype=np.uint64)
    else:
        hi = rng.integers(0, 1 << (k - 32), size=sample_count, dtype=np.uint64)
        lo = rng.integers(0, 1 << 32, size=sample_count, dtype=np.uint64)
        w = (hi << np.uint64(32)) | lo
    expect = evaluate_batch(f, w)
    got = _decode_batch(s, w)
    bad = np.nonzero(expect != got)[0]
    counter = int(w[bad[0]]) if bad.size else None
    return VerifyResult(counter is None, "sampled", sample_count, counter, seed)
