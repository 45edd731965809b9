"""Command line front end.

Every command is deterministic given its inputs, --seed, and flags.
Randomized paths (Monte Carlo estimation, sampled verification, oracle
subset sampling) draw all randomness from --seed, and --threads never
changes results.  Each completed run emits a RunManifest: as a
``<output>.manifest.json`` sidecar when the command writes a file, on
stderr otherwise.

Exit codes: 0 success, 2 bad input, 3 infeasible mode (exact paths past
their limits, enumeration budgets), 4 placement cannot compute the
function, 5 a verification or oracle assertion failed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import time
from dataclasses import dataclass, field
from itertools import combinations, islice
from pathlib import Path
from typing import Sequence

from . import __version__
from .anf import (
    BooleanFunctionANF,
    ParseError,
    function_to_json,
    mask_from_indices,
    parse_function,
)
from .influence import (
    EstimatorConfig,
    ExactLimitError,
    avg_joint_sensitivity,
    joint_influence_exact,
    joint_influence_mc,
    sum_influences,
)
from .placement import (
    ENUMERATION_BUDGET,
    EnumerationBudgetError,
    PlacementConfig,
    PlacementConstraints,
    count_placements,
    enumerate_placements,
    parse_placement,
    placement_to_json,
    search_min_as,
)
from .oracle import (
    LEMMA1_SUBSET_TRIALS,
    check_lemma1,
    check_lemma2,
    check_theorem,
    corollary_study,
    disjoint_products,
)
from .transmission import (
    SynthesisLimitError,
    UncomputablePlacementError,
    count_transmissions,
    parse_scheme,
    scheme_structure_errors,
    scheme_to_json,
    synthesize_exact,
    synthesize_greedy,
    verify_scheme,
)

DEFAULT_SEED = 2024

EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_INFEASIBLE = 3
EXIT_UNCOMPUTABLE = 4
EXIT_ASSERTION_FAILED = 5


@dataclass
class RunManifest:
    command: str
    arguments: list[str]
    seed: int
    version: str
    inputs: dict[str, str]  # path -> sha256 of the canonical serialization
    duration_seconds: float
    extras: dict = field(default_factory=dict)

    def to_json_text(self) -> str:
        obj = {
            "command": self.command,
            "arguments": self.arguments,
            "seed": self.seed,
            "version": self.version,
            "inputs": self.inputs,
            "duration_seconds": self.duration_seconds,
        }
        obj.update(self.extras)
        return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _load_function(path: str, inputs: dict[str, str]) -> BooleanFunctionANF:
    f = parse_function(Path(path).read_text())
    inputs[path] = _sha256(function_to_json(f))
    return f


def _load_placement(path: str, inputs: dict[str, str]) -> PlacementConfig:
    p = parse_placement(Path(path).read_text())
    inputs[path] = _sha256(placement_to_json(p))
    return p


def _parse_subset(text: str, num_datasets: int) -> int:
    text = text.strip()
    if not text:
        return 0
    try:
        indices = [int(part) for part in text.split(",")]
    except ValueError as exc:
        raise ParseError(f"bad subset spec {text!r}: {exc}") from exc
    return mask_from_indices(indices, num_datasets=num_datasets)


def _write_primary(path: str | None, text: str, note: str) -> None:
    """File outputs keep notes on stdout; stdout outputs push notes to stderr."""
    if path is not None:
        Path(path).write_text(text)
        sys.stdout.write(note)
    else:
        sys.stdout.write(text)
        sys.stderr.write(note)


def _estimator(args: argparse.Namespace) -> EstimatorConfig:
    return EstimatorConfig(epsilon=args.epsilon, delta=args.delta, seed=args.seed)


def _cmd_influence(args, inputs):
    f = _load_function(args.function, inputs)
    flip = _parse_subset(args.subset, f.num_datasets)
    if args.mc:
        value = joint_influence_mc(f, flip, _estimator(args), threads=args.threads)
    else:
        value = joint_influence_exact(f, flip)
    sys.stdout.write(str(value) + "\n")
    return EXIT_OK, None, {}


def _cmd_avg_sensitivity(args, inputs):
    f = _load_function(args.function, inputs)
    p = _load_placement(args.placement, inputs)
    if args.mc:
        cfg = _estimator(args)
        per = [
            joint_influence_mc(f, s, cfg, threads=args.threads)
            for s in p.subset_masks
        ]
        value = sum_influences(per)
        sys.stdout.write(str(value) + "\n")
    else:
        value = avg_joint_sensitivity(f, p, threads=args.threads)
        sys.stdout.write(str(value.fraction) + "\n")
    return EXIT_OK, None, {}


def _cmd_place(args, inputs):
    f = _load_function(args.function, inputs)
    constraints = PlacementConstraints(f.num_datasets, args.num_servers, args.cache_size)
    method = "exhaustive" if args.method == "exhaustive" else "greedy-aligned"
    placement, value = search_min_as(
        f, constraints, method=method, budget=args.budget, threads=args.threads
    )
    note = f"as = {value.fraction if value.is_exact else value}\n"
    _write_primary(args.output, placement_to_json(placement), note)
    return EXIT_OK, args.output, {}


def _cmd_synthesize(args, inputs):
    f = _load_function(args.function, inputs)
    p = _load_placement(args.placement, inputs)
    if args.greedy:
        scheme = synthesize_greedy(f, p)
    else:
        scheme = synthesize_exact(f, p)
    counts = count_transmissions(scheme, num_servers=p.num_servers)
    _write_primary(args.output, scheme_to_json(scheme), f"T = {counts.total}\n")
    return EXIT_OK, args.output, {"transmissions": counts.total}


def _cmd_verify(args, inputs):
    scheme = parse_scheme(Path(args.scheme).read_text())
    inputs[args.scheme] = _sha256(scheme_to_json(scheme))
    f = _load_function(args.function, inputs)
    for problem in scheme_structure_errors(scheme, f):
        sys.stderr.write(f"structure: {problem}\n")
    result = verify_scheme(scheme, f, seed=args.seed)
    if result.mode == "sampled":
        mode = f"sampled, seed={result.seed}"
    else:
        mode = "exhaustive"
    if result.passed:
        n = result.inputs_checked
        sys.stdout.write(f"PASS {n}/{n} inputs ({mode})\n")
        return EXIT_OK, None, {}
    bits = result.counterexample_bits(f.num_datasets)
    sys.stdout.write(f"FAIL counterexample={bits} ({mode})\n")
    return EXIT_ASSERTION_FAILED, None, {}


def _parse_degrees(text: str) -> list[int]:
    """Accept "3", "2..5", or "2,4,6"."""
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            out = list(range(int(lo), int(hi) + 1))
        else:
            out = [int(part) for part in text.split(",")]
    except ValueError as exc:
        raise ParseError(f"bad degree range {text!r}: {exc}") from exc
    if not out or any(d < 1 for d in out):
        raise ParseError(f"bad degree range {text!r}")
    return out


def _require(args, names: Sequence[str], claim: str) -> None:
    missing = [n for n in names if getattr(args, n.replace("-", "_"), None) is None]
    if missing:
        raise ParseError(f"oracle {claim} needs {', '.join('--' + n for n in missing)}")


def _cmd_oracle(args, inputs):
    if args.claim == "lemma1":
        degrees = _parse_degrees(args.degrees or "1..8")
        report = check_lemma1(degrees, subset_trials=args.trials, seed=args.seed)
    elif args.claim == "lemma2":
        degrees = _parse_degrees(args.degrees or "2..5")
        report = check_lemma2(degrees)
    elif args.claim == "theorem":
        _require(args, ["num-servers", "cache-size"], "theorem")
        report = check_theorem(args.num_servers, args.cache_size)
    else:
        _require(args, ["num-servers", "cache-size"], "corollary")
        if args.function:
            f = _load_function(args.function, inputs)
        else:
            f = disjoint_products(args.num_servers, args.cache_size)
        constraints = PlacementConstraints(
            f.num_datasets, args.num_servers, args.cache_size
        )
        support = f.support_mask
        placements = []
        for p in enumerate_placements(constraints):
            if support & ~p.union_mask():
                continue
            placements.append(p)
            if len(placements) >= args.limit:
                break
        report = corollary_study(f, placements)

    summary = "; ".join(f"{k}={v}" for k, v in sorted(report.summary.items()))
    note = f"{report.claim}: {'pass' if report.passed else 'FAIL'}; {summary}\n"
    _write_primary(args.output, report.to_json_text(), note)
    if args.csv:
        Path(args.csv).write_text(report.to_csv_text())
    code = EXIT_OK if report.passed else EXIT_ASSERTION_FAILED
    return code, args.output, {"claim": report.claim, "passed": report.passed}


def _cmd_sweep(args, inputs):
    f = _load_function(args.function, inputs)
    k = f.num_datasets
    constraints = PlacementConstraints(k, args.num_servers, args.cache_size)
    total = count_placements(constraints)
    emit = min(total, args.budget)

    influences = {}
    for combo in combinations(range(1, k + 1), args.cache_size):
        mask = mask_from_indices(combo)
        influences[mask] = joint_influence_exact(f, mask).fraction

    support = f.support_mask
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    servers = range(1, args.num_servers + 1)
    writer.writerow(
        ["placement_id", "subsets", "as", "as_decimal", "T_exact", "T_greedy"]
        + [f"inf_server_{n}" for n in servers]
        + [f"pieces_server_{n}" for n in servers]
    )
    for pid, placement in enumerate(
        islice(enumerate_placements(constraints, budget=max(total, 1)), emit)
    ):
        per = [influences[s] for s in placement.subset_masks]
        as_value = sum(per)
        if support & ~placement.union_mask():
            t_exact = t_greedy = ""
            pieces = [""] * args.num_servers
        else:
            exact = synthesize_exact(f, placement)
            t_exact = count_transmissions(exact, num_servers=args.num_servers).total
            greedy = synthesize_greedy(f, placement)
            t_greedy = count_transmissions(greedy).total
            pieces = list(
                count_transmissions(exact, num_servers=args.num_servers).per_server
            )
        writer.writerow(
            [pid, str(placement), str(as_value), repr(float(as_value)), t_exact, t_greedy]
            + [str(v) for v in per]
            + pieces
        )
    note = f"{emit} placements swept\n"
    _write_primary(args.output, buf.getvalue(), note)
    extras = {
        "placements_total": total,
        "placements_emitted": emit,
        "truncated": emit < total,
    }
    return EXIT_OK, args.output, extras


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--seed", type=int, default=DEFAULT_SEED, help="seed for all randomized paths"
    )
    common.add_argument(
        "--threads", type=int, default=1, help="internal parallelism bound"
    )

    parser = argparse.ArgumentParser(
        prog="infplace",
        description=(
            "Influence analysis, placement search, and transmission-scheme"
            " synthesis for XOR-of-monomial Boolean functions over"
            " distributed datasets."
        ),
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "influence", parents=[common], help="joint influence of one flip set"
    )
    p.add_argument("-f", "--function", required=True, metavar="FILE")
    p.add_argument(
        "--subset",
        required=True,
        help='comma separated 1-based dataset indices ("" for the empty set)',
    )
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", help="exact enumeration (default)")
    mode.add_argument("--mc", action="store_true", help="Monte Carlo estimate")
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--delta", type=float, default=1e-3)
    p.set_defaults(func=_cmd_influence)

    p = sub.add_parser(
        "avg-sensitivity",
        parents=[common],
        help="summed joint influence of a placement's subsets",
    )
    p.add_argument("-f", "--function", required=True, metavar="FILE")
    p.add_argument("-p", "--placement", required=True, metavar="FILE")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", help="exact enumeration (default)")
    mode.add_argument("--mc", action="store_true", help="Monte Carlo estimate")
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--delta", type=float, default=1e-3)
    p.set_defaults(func=_cmd_avg_sensitivity)

    p = sub.add_parser(
        "place", parents=[common], help="search for a minimum-sensitivity placement"
    )
    p.add_argument("-f", "--function", required=True, metavar="FILE")
    p.add_argument("-N", "--num-servers", type=int, required=True)
    p.add_argument("-M", "--cache-size", type=int, required=True)
    p.add_argument("--method", choices=["exhaustive", "aligned"], default="exhaustive")
    p.add_argument("--budget", type=int, default=ENUMERATION_BUDGET)
    p.add_argument("-o", "--output", metavar="FILE", help="placement file (default stdout)")
    p.set_defaults(func=_cmd_place)

    p = sub.add_parser(
        "synthesize", parents=[common], help="build a transmission scheme"
    )
    p.add_argument("-f", "--function", required=True, metavar="FILE")
    p.add_argument("-p", "--placement", required=True, metavar="FILE")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--exact", action="store_true", help="minimum piece count")
    mode.add_argument("--greedy", action="store_true", help="fast heuristic")
    p.add_argument("-o", "--output", metavar="FILE", help="scheme file (default stdout)")
    p.set_defaults(func=_cmd_synthesize)

    p = sub.add_parser(
        "verify", parents=[common], help="check that a scheme decodes the function"
    )
    p.add_argument("-s", "--scheme", required=True, metavar="FILE")
    p.add_argument("-f", "--function", required=True, metavar="FILE")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser(
        "oracle", parents=[common], help="brute-force checks of the closed-form claims"
    )
    p.add_argument("claim", choices=["lemma1", "lemma2", "theorem", "corollary"])
    p.add_argument("-d", "--degrees", help='degree grid, e.g. "2..5" or "3,4"')
    p.add_argument("--trials", type=int, default=LEMMA1_SUBSET_TRIALS)
    p.add_argument("-N", "--num-servers", type=int)
    p.add_argument("-M", "--cache-size", type=int)
    p.add_argument("-f", "--function", metavar="FILE", help="corollary study input")
    p.add_argument("--limit", type=int, default=200, help="corollary placement cap")
    p.add_argument("-o", "--output", metavar="FILE", help="JSON report (default stdout)")
    p.add_argument("--csv", metavar="FILE", help="also write per-case CSV")
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser(
        "sweep",
        parents=[common],
        help="per-placement CSV of sensitivities and piece counts",
    )
    p.add_argument("-f", "--function", required=True, metavar="FILE")
    p.add_argument("-N", "--num-servers", type=int, required=True)
    p.add_argument("-M", "--cache-size", type=int, required=True)
    p.add_argument("--budget", type=int, default=ENUMERATION_BUDGET)
    p.add_argument("-o", "--output", metavar="FILE", help="CSV file (default stdout)")
    p.set_defaults(func=_cmd_sweep)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    raw_args = list(sys.argv[1:]) if argv is None else list(argv)
    parser = _build_parser()
    args = parser.parse_args(raw_args)
    inputs: dict[str, str] = {}
    start = time.perf_counter()
    try:
        code, output_path, extras = args.func(args, inputs)
    except ParseError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT_ERROR
    except UncomputablePlacementError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_UNCOMPUTABLE
    except (ExactLimitError, EnumerationBudgetError, SynthesisLimitError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        sys.stderr.write("hint: use --mc, raise the budget, or shrink the instance\n")
        return EXIT_INFEASIBLE
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT_ERROR
    duration = time.perf_counter() - start
    manifest = RunManifest(
        command=args.command,
        arguments=raw_args,
        seed=args.seed,
        version=__version__,
        inputs=inputs,
        duration_seconds=duration,
        extras=extras,
    )
    text = manifest.to_json_text()
    if output_path is not None:
        Path(str(output_path) + ".manifest.json").write_text(text)
    else:
        sys.stderr.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
