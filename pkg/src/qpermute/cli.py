"""Command-line front end.

Subcommands: ``schedule``, ``simulate``, ``verify``, ``drift-sweep``.
Exit codes: 0 success, 1 validation or timing infeasibility, 2 internal
invariant violation (routing leak, bin collision, failed verification).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .config import dump_config, load_config
from .errors import InvariantViolation, QPermuteError, ValidationError
from .network import build_network, run_device
from .noise import DriftParams, drift_fidelity_sweep, drifted_bank, format_table
from .oracle import meta_operator_output
from .schedule import build_schedule, dumps_schedule, routing_discrepancies, summarize
from .state import fidelity, norm
from .verify import DEFAULT_BIN_BUDGET, run_suite

EXIT_OK, EXIT_INVALID, EXIT_INTERNAL = 0, 1, 2


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        out.write_text(text if text.endswith("\n") else text + "\n")


def _fail(message: str) -> None:
    print(message, file=sys.stderr)


def _pair(z) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def cmd_schedule(args) -> int:
    config = load_config(args.config)
    params = config.scheduler_params()
    schedule = build_schedule(params, build_network(config.n), config.occupied_bins, rule=args.rule)
    doc = dumps_schedule(schedule)
    if args.out:
        Path(args.out).write_text(doc + "\n")
    if args.format == "machine" and not args.out:
        print(doc)
    else:
        print(summarize(schedule))
        if args.out:
            print(f"schedule written to {args.out}")
    if args.compare_literal:
        rows = routing_discrepancies(max_n=max(8, config.n), m=config.m)
        print(f"literal-rule disagreements with path routing: {len(rows)}")
        for r in rows:
            when = "" if r["pass"] is None else f" pass={r['pass']}"
            print(f"  N={r['n']} {r['switch']:<9} l={r['l']}{when}: literal={'on' if r['literal'] else 'off'}"
                  f" derived={'on' if r['derived'] else 'off'}")
    return EXIT_OK


def simulation_report(config) -> dict:
    schedule = build_schedule(config.scheduler_params(), occupied_bins=config.occupied_bins)
    bank = None
    if config.drift_sigma:
        bank = drifted_bank(config, DriftParams(config.drift_sigma, config.seed))
    out = run_device(config, schedule, pass_operators=bank)
    ref = meta_operator_output(
        config.operators, config.normalized_control(), config.normalized_polarization(), config.n, config.m
    )
    f = fidelity(out, ref)
    return {
        "n": config.n,
        "m": config.m,
        "seed": config.seed,
        "drift_sigma": config.drift_sigma,
        "occupied_bins": len(config.occupied_bins),
        "fidelity": f,
        "norm_residual": abs(norm(out) - 1.0),
        "output": [
            {"bin": t, "mode": x, "spinor": [_pair(v[0]), _pair(v[1])]}
            for (t, x), v in sorted(out.amps.items())
        ],
    }


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    report = simulation_report(config)
    out = Path(args.out) if args.out else Path(args.config).with_suffix(".report.json")
    out.write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")
    if args.format == "machine":
        print(json.dumps(report, indent=1, sort_keys=True))
    else:
        print(f"N={report['n']} M={report['m']} occupied bins={report['occupied_bins']}")
        print(f"fidelity vs oracle = {report['fidelity']:.15f}")
        print(f"norm residual      = {report['norm_residual']:.3e}")
        for row in report["output"][: args.max_rows]:
            (hr, hi), (vr, vi) = row["spinor"]
            print(f"  t{row['bin']:<6} x{row['mode']}  h={hr:+.6f}{hi:+.6f}j  v={vr:+.6f}{vi:+.6f}j")
        if len(report["output"]) > args.max_rows:
            print(f"  ... {len(report['output']) - args.max_rows} more rows in {out}")
        print(f"report written to {out}")
    if not config.drift_sigma and report["fidelity"] < 1 - 1e-9:
        _fail(f"ideal device disagrees with the oracle (fidelity {report['fidelity']:.15f})")
        return EXIT_INTERNAL
    return EXIT_OK


def cmd_verify(args) -> int:
    start = time.perf_counter()
    result = run_suite(args.n, args.m, args.trials, args.seed, args.budget)
    elapsed = time.perf_counter() - start
    summary = {
        "n": args.n, "m": args.m, "trials": args.trials, "seed": args.seed, "ok": result.ok,
        "seconds": round(elapsed, 3),
        "checks": {name: {"passed": t.passed, "failed": t.failed} for name, t in result.tallies.items()},
    }
    if args.format == "machine":
        print(json.dumps(summary, indent=1, sort_keys=True))
    else:
        for name, t in result.tallies.items():
            status = "PASS" if t.failed == 0 else "FAIL"
            print(f"[{status}] {name}: {t.passed} passed, {t.failed} failed")
        print(f"{'all checks passed' if result.ok else 'FAILURES'} in {elapsed:.2f} s")
    if result.ok:
        return EXIT_OK
    name, detail, cfg = result.failures[0]
    _fail(f"first failure: {name} {detail}")
    if cfg is not None:
        dump = Path(args.out or "verify-failure.json")
        dump_config(cfg, dump)
        _fail(f"failing config written to {dump}")
    return EXIT_INTERNAL


def cmd_drift_sweep(args) -> int:
    config = load_config(args.config)
    sigmas = [float(s) for s in args.sigmas.split(",")]
    rows = drift_fidelity_sweep(config, sigmas, args.trials)
    if args.format == "machine":
        text = json.dumps(
            [{"sigma": r.sigma, "mean_fidelity": r.mean_fidelity, "std_fidelity": r.std_fidelity,
              "trials": r.trials} for r in rows],
            indent=1,
        )
    else:
        text = format_table(rows, delimiter=args.delimiter)
    _emit(text, Path(args.out) if args.out else None)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qpermute", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="simulation config (JSON)")
        p.add_argument("--out", help="output path")
        p.add_argument("--format", choices=["text", "machine"], default="text")

    p = sub.add_parser("schedule", help="compile the pulse schedule for a config")
    common(p)
    p.add_argument("--rule", choices=["derived", "literal"], default="derived",
                   help="routing rule used to compile settings")
    p.add_argument("--compare-literal", action="store_true",
                   help="also list where the literal activation rules disagree with path routing")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("simulate", help="run the device and compare with the brute-force oracle")
    common(p)
    p.add_argument("--max-rows", type=int, default=32, help="output rows printed in text mode")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="randomized property suite")
    common(p, config=False)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=DEFAULT_BIN_BUDGET, help="maximum N^M")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("drift-sweep", help="fidelity versus operator drift magnitude")
    common(p)
    p.add_argument("--sigmas", default="0,0.01,0.02,0.05,0.1", help="comma-separated drift magnitudes (rad)")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--delimiter", default=",")
    p.set_defaults(func=cmd_drift_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        _fail(f"error: {exc}")
        return EXIT_INVALID
    except InvariantViolation as exc:
        _fail(f"internal invariant violated: {exc}")
        return EXIT_INTERNAL
    except QPermuteError as exc:
        _fail(f"error: {exc}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
