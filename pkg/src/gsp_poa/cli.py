"""Command-line surface for the GSP auction toolkit.

All file reading and writing for the package happens here.  Numbers in
input files may be JSON numbers (treated as decimal literals) or
"p/q" strings; by default everything is converted to exact rationals,
and ``--float`` switches to binary floats with a 1e-9 comparison
tolerance.

Exit codes, stable across versions:

* 0 - success, or the queried property holds
* 1 - analytic failure (profile not Nash, system infeasible, a
      reproduction check failed, degenerate zero-welfare instance)
* 2 - input error (missing or malformed file, schema or shape problem)
* 3 - contract violation (a bid above the bidder's value)
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__, equilibrium, feasibility, report
from .auction import (
    Assignment,
    efficiency_ratio,
    make_bids,
    make_instance,
    optimal_welfare,
    settle,
)
from .bounds import bounds_sweep
from .errors import (
    ConservativenessError,
    DegenerateInstanceError,
    GspError,
)
from .numeric import FLOAT_EPSILON, exact_number, fmt, num_to_json
from .reproduce import TITLES, format_rows, run_checks
from .search import (
    SearchConfig,
    enumerate_ne_permutations,
    frontier_columns,
    poa_lower_bound,
)


class _CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _load_json(path: str) -> dict:
    try:
        with open(path) as handle:
            data = json.load(handle)
    except OSError as exc:
        raise _CliError(2, f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise _CliError(2, f"{path} is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise _CliError(2, f"{path}: expected a JSON object")
    return data


def _numbers(data: dict, key: str, path: str, exact: bool) -> tuple:
    raw = data.get(key)
    if not isinstance(raw, list) or not raw:
        raise _CliError(2, f"{path}: field '{key}' must be a non-empty array")
    out = []
    for x in raw:
        if isinstance(x, bool) or not isinstance(x, (int, float, str)):
            raise _CliError(2, f"{path}: '{key}' entry {x!r} is not a number")
        try:
            out.append(exact_number(x) if exact else float(Fraction(str(x))))
        except (ValueError, ZeroDivisionError):
            raise _CliError(2, f"{path}: cannot parse '{key}' entry {x!r}")
    return tuple(out)


def _read_instance(path: str, exact: bool, normalize: bool):
    data = _load_json(path)
    values = _numbers(data, "values", path, exact)
    ctrs = _numbers(data, "ctrs", path, exact)
    try:
        return make_instance(values, ctrs, normalize=normalize)
    except GspError as exc:
        raise _CliError(2, f"{path}: {exc}")


def _read_bids(path: str, exact: bool):
    data = _load_json(path)
    return make_bids(_numbers(data, "bids", path, exact))


def _parse_perm(text: str) -> Assignment:
    try:
        parts = [int(p) for p in text.replace("-", ",").split(",") if p]
        return Assignment(tuple(parts))
    except (ValueError, GspError) as exc:
        raise _CliError(2, f"bad permutation '{text}': {exc}")


def _digest(path: str) -> str:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]
    except OSError:
        return "unreadable"


def _manifest(command: str, args, inputs: list[str],
              outputs: list[str]) -> dict:
    config = {
        k: v for k, v in sorted(vars(args).items())
        if k != "func" and v is not None and not callable(v)
    }
    return {
        "command": command,
        "config": {k: str(v) for k, v in config.items()},
        "inputs": {p: _digest(p) for p in inputs},
        "version": __version__,
        "seed": getattr(args, "seed", 0),
        "outputs": list(outputs),
    }


def _write_csv(path: Path, columns, rows, manifest: dict) -> None:
    with open(path, "w", newline="") as handle:
        handle.write("# " + json.dumps(manifest, sort_keys=True) + "\n")
        writer = csv.DictWriter(handle, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def _emit(payload: dict, as_json: bool, text: str) -> None:
    if as_json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_eval(args) -> int:
    exact = not args.float
    instance = _read_instance(args.instance, exact, args.normalize)
    bids = _read_bids(args.bids, exact)
    outcome = settle(instance, bids)
    ratio = efficiency_ratio(instance, outcome.assignment)
    lines = []
    for slot, adv in enumerate(outcome.assignment.slot_to_adv, start=1):
        lines.append(f"slot {slot}: advertiser {adv} "
                     f"(bid {fmt(bids.bids[adv - 1])}, "
                     f"pays {fmt(outcome.payments[slot - 1])}/click, "
                     f"utility {fmt(outcome.utilities[adv - 1])})")
    lines.append(f"welfare {fmt(outcome.welfare)} of optimal "
                 f"{fmt(optimal_welfare(instance))}")
    lines.append(f"efficiency ratio {fmt(ratio)}")
    manifest = _manifest("eval", args, [args.instance, args.bids], [])
    payload = {
        "assignment": list(outcome.assignment.slot_to_adv),
        "payments": [num_to_json(p) for p in outcome.payments],
        "utilities": [num_to_json(u) for u in outcome.utilities],
        "welfare": num_to_json(outcome.welfare),
        "efficiency_ratio": num_to_json(ratio),
        "manifest": manifest,
    }
    _emit(payload, args.json, "\n".join(lines))
    return 0


def cmd_verify(args) -> int:
    exact = not args.float
    instance = _read_instance(args.instance, exact, args.normalize)
    bids = _read_bids(args.bids, exact)
    epsilon = None
    if args.epsilon is not None:
        epsilon = exact_number(args.epsilon) if exact else float(args.epsilon)
    rep = equilibrium.verify_nash(instance, bids, epsilon=epsilon)
    manifest = _manifest("verify", args, [args.instance, args.bids], [])
    payload = rep.to_json_dict()
    payload["manifest"] = manifest
    _emit(payload, args.json, rep.pretty())
    return 0 if rep.is_nash else 1


def cmd_feasible(args) -> int:
    inputs = []
    if args.system:
        data = _load_json(args.system)
        try:
            system = equilibrium.LinearSystem.from_json_dict(data)
        except (KeyError, TypeError, ValueError) as exc:
            raise _CliError(2, f"{args.system}: bad system: {exc}")
        inputs.append(args.system)
        context = None
    else:
        exact = not args.float
        instance = _read_instance(args.instance, exact, args.normalize)
        assignment = _parse_perm(args.perm)
        if assignment.n != instance.n:
            raise _CliError(2, "permutation size does not match instance")
        system = equilibrium.support_system(instance, assignment)
        inputs.append(args.instance)
        context = (instance, assignment)
    result = feasibility.solve(system)
    lines = []
    if args.show_system:
        lines.append(system.pretty())
    if result.feasible:
        witness = ", ".join(fmt(w) for w in result.witness)
        lines.append(f"feasible; witness bids ({witness})")
        if context is not None:
            rep = equilibrium.verify_nash(
                context[0], make_bids(result.witness), epsilon=0)
            lines.append(f"witness max regret {fmt(rep.max_regret)}")
    else:
        lines.append("infeasible")
        if result.conflict is not None:
            lines.append(f"conflict: {result.conflict}")
    manifest = _manifest("feasible", args, inputs, [])
    payload = {
        "feasible": result.feasible,
        "witness": ([num_to_json(w) for w in result.witness]
                    if result.feasible else None),
        "system": system.to_json_dict(),
        "manifest": manifest,
    }
    _emit(payload, args.json, "\n".join(lines))
    return 0 if result.feasible else 1


def cmd_poa(args) -> int:
    target = _parse_perm(args.perm) if args.perm else None
    grid_step = Fraction(args.grid_step) if args.grid_step else None
    config = SearchConfig(
        n=args.n,
        target=target,
        seed=args.seed,
        random_candidates=args.budget,
        grid_step=grid_step,
        use_grid=not args.no_grid,
        use_seeds=not args.no_seeds,
        refine_top=args.refine_top,
        workers=args.workers,
    )
    result = poa_lower_bound(config)
    outputs = []
    if args.out:
        out_dir = Path(args.out)
        csv_path = out_dir / "frontier.csv"
        json_path = out_dir / "result.json"
        fig_path = out_dir / "frontier.png"
        outputs = [str(csv_path), str(json_path)]
        if not args.no_figure:
            outputs.append(str(fig_path))
    manifest = _manifest("poa", args, [], outputs)
    if args.out:
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_csv(csv_path, frontier_columns(config.n),
                   (r.to_row() for r in result.frontier), manifest)
        doc = result.to_json_dict()
        doc["manifest"] = manifest
        json_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        if not args.no_figure:
            report.save_frontier_figure(
                result.frontier, str(fig_path), manifest,
                title=f"certified efficiency ratios (n={config.n})")
    payload = result.to_json_dict()
    payload["manifest"] = manifest
    best = result.best
    text = (f"n={config.n} evaluated={result.evaluated} "
            f"certified={result.certified}\n"
            f"best ratio {fmt(best.ratio)} via assignment "
            f"{'-'.join(str(a) for a in best.assignment.slot_to_adv)}\n"
            f"values ({', '.join(fmt(v) for v in best.values)}); "
            f"ctrs ({', '.join(fmt(a) for a in best.ctrs)})")
    if outputs:
        text += "\nwrote " + ", ".join(outputs)
    _emit(payload, args.json, text)
    return 0


def cmd_bounds(args) -> int:
    try:
        lo, hi = (int(p) for p in args.k_range.split(":"))
    except ValueError:
        raise _CliError(2, f"bad k range '{args.k_range}', expected LO:HI")
    if not 3 <= lo <= hi:
        raise _CliError(2, "k range must satisfy 3 <= LO <= HI")
    records = bounds_sweep(range(lo, hi + 1), args.samples, args.seed)
    outputs = []
    if args.out:
        out_dir = Path(args.out)
        csv_path = out_dir / "bounds.csv"
        fig_path = out_dir / "bounds.png"
        outputs = [str(csv_path)]
        if not args.no_figure:
            outputs.append(str(fig_path))
    manifest = _manifest("bounds", args, [], outputs)
    if args.out:
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_csv(csv_path, list(records[0].to_row().keys()),
                   (r.to_row() for r in records), manifest)
        if not args.no_figure:
            report.save_bounds_figure(records, str(fig_path), manifest)
    lines = []
    summary = []
    for k in range(lo, hi + 1):
        block = [r for r in records if r.k == k]
        worst = max(block, key=lambda r: r.ratio)
        exceed = sum(1 for r in block if not r.within_min_bound)
        lines.append(f"k={k}: max ratio {fmt(worst.ratio)}, "
                     f"{exceed}/{len(block)} samples above min bound")
        summary.append({"k": k, "max_ratio": float(worst.ratio),
                        "above_min_bound": exceed, "samples": len(block)})
    if outputs:
        lines.append("wrote " + ", ".join(outputs))
    _emit({"sweep": summary, "manifest": manifest}, args.json,
          "\n".join(lines))
    return 0


def cmd_permutations(args) -> int:
    exact = not args.float
    instance = _read_instance(args.instance, exact, args.normalize)
    result = enumerate_ne_permutations(instance)
    lines = [f"{len(result.feasible)} of {len(result.feasible) + len(result.infeasible)} "
             "assignments admit a supporting equilibrium"]
    for assignment in result.feasible:
        perm = assignment.slot_to_adv
        bids = result.witnesses[perm]
        ratio = efficiency_ratio(instance, assignment)
        lines.append(f"  {'-'.join(str(a) for a in perm)}: ratio {fmt(ratio)}, "
                     f"witness ({', '.join(fmt(b) for b in bids)})")
    for assignment in result.infeasible:
        lines.append(f"  {'-'.join(str(a) for a in assignment.slot_to_adv)}: "
                     "not supportable")
    manifest = _manifest("permutations", args, [args.instance], [])
    payload = {
        "feasible": [list(a.slot_to_adv) for a in result.feasible],
        "infeasible": [list(a.slot_to_adv) for a in result.infeasible],
        "witnesses": {"-".join(str(x) for x in perm):
                      [num_to_json(b) for b in bids]
                      for perm, bids in result.witnesses.items()},
        "manifest": manifest,
    }
    _emit(payload, args.json, "\n".join(lines))
    return 0


def cmd_reproduce(args) -> int:
    keys = None
    if args.only:
        keys = [k.strip().upper() for k in args.only.split(",") if k.strip()]
        unknown = [k for k in keys if k not in TITLES]
        if unknown:
            raise _CliError(2, f"unknown check keys: {', '.join(unknown)}")
    if args.list:
        for key, title in TITLES.items():
            if keys is None or key in keys:
                print(f"{key:<4} {title}")
        return 0
    rows = run_checks(keys, seed=args.seed)
    print(format_rows(rows))
    if args.out:
        out_dir = Path(args.out)
        csv_path = out_dir / "checks.csv"
        fig_path = out_dir / "checks.png"
        outputs = [str(csv_path)]
        if not args.no_figure:
            outputs.append(str(fig_path))
        manifest = _manifest("reproduce", args, [], outputs)
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_csv(csv_path,
                   ["key", "title", "expected", "observed", "passed", "seconds"],
                   ({"key": r.key, "title": r.title, "expected": r.expected,
                     "observed": r.observed,
                     "passed": "true" if r.passed else "false",
                     "seconds": f"{r.seconds:.3f}"} for r in rows),
                   manifest)
        if not args.no_figure:
            report.save_check_figure(rows, str(fig_path), manifest)
        print("wrote " + ", ".join(outputs))
    return 0 if all(r.passed for r in rows) else 1


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_io_flags(sub, bids: bool = True) -> None:
    sub.add_argument("--instance", required=True,
                     help="instance JSON: {\"values\": [...], \"ctrs\": [...]}")
    if bids:
        sub.add_argument("--bids", required=True,
                         help="bid JSON: {\"bids\": [...]}")
    sub.add_argument("--normalize", action="store_true",
                     help="divide values and ctrs by their leading entries")
    sub.add_argument("--float", action="store_true",
                     help=f"binary floats with tolerance {FLOAT_EPSILON:g} "
                          "instead of exact rationals")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gsp-poa",
        description="GSP auction equilibria and price-of-anarchy toolkit",
    )
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for every random draw (default 0)")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="allocate, settle, and price one profile")
    _add_io_flags(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("verify", help="pure Nash check (exit 0 iff Nash)")
    _add_io_flags(p)
    p.add_argument("--epsilon", help="regret tolerance (default: 0 exact, "
                                     "1e-9 float)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("feasible",
                       help="can some conservative equilibrium induce the "
                            "assignment? (exit 0 iff yes)")
    p.add_argument("--instance", help="instance JSON (with --perm)")
    p.add_argument("--perm", help="target assignment, e.g. 2,3,1,4")
    p.add_argument("--system", help="solve a serialized inequality system "
                                    "instead")
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--float", action="store_true")
    p.add_argument("--show-system", action="store_true",
                   help="print the inequality system with provenance")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_feasible)

    p = sub.add_parser("poa", help="certified lower-bound search")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--perm", help="restrict to one target assignment")
    p.add_argument("--budget", type=int, default=10_000,
                   help="random candidates (default 10000)")
    p.add_argument("--grid-step", help="structured grid step, e.g. 0.01")
    p.add_argument("--no-grid", action="store_true")
    p.add_argument("--no-seeds", action="store_true",
                   help="skip the built-in reference equilibria")
    p.add_argument("--refine-top", type=int, default=3)
    p.add_argument("--workers", type=int,
                   help="parallel workers (default: GSP_POA_WORKERS or 1)")
    p.add_argument("--out", help="directory for frontier.csv / result.json / "
                                 "frontier.png")
    p.add_argument("--no-figure", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_poa)

    p = sub.add_parser("bounds", help="closed-form ratio vs. bound sweep")
    p.add_argument("--k-range", default="5:10", help="LO:HI inclusive")
    p.add_argument("--samples", type=int, default=2000,
                   help="CTR vectors per k (default 2000)")
    p.add_argument("--out", help="directory for bounds.csv / bounds.png")
    p.add_argument("--no-figure", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("permutations",
                       help="which assignments admit supporting equilibria")
    _add_io_flags(p, bids=False)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_permutations)

    p = sub.add_parser("reproduce",
                       help="re-run the frozen-value reproduction checks")
    p.add_argument("--list", action="store_true",
                   help="print the checks without running them")
    p.add_argument("--only", help="comma-separated keys, e.g. C1,C5")
    p.add_argument("--out", help="directory for checks.csv / checks.png")
    p.add_argument("--no-figure", action="store_true")
    p.set_defaults(func=cmd_reproduce)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "feasible":
        if bool(args.system) == bool(args.perm):
            parser.error("feasible needs exactly one of --perm or --system")
        if args.perm and not args.instance:
            parser.error("--perm requires --instance")
    try:
        return args.func(args)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ConservativenessError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except DegenerateInstanceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except GspError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
