"""Command-line front end: demo-split, calibrate, bootstrap, bench, selftest.

Exit codes: 0 success, 1 validation error, 2 golden/selftest failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import loglog_slope, rows_to_csv, run_bench
from .errors import GeobootError
from .harness import (
    ExperimentConfig,
    check_golden,
    demo_split_record,
    load_golden,
    run_bootstrap_batch,
    run_calibration,
)
from .ideals import GeneratorSet

EXIT_OK, EXIT_VALIDATION, EXIT_GOLDEN, EXIT_IO = 0, 1, 2, 3


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    changes = {"seed": args.seed, "mode": args.mode, "out": args.out}
    if args.preset:
        changes.update(preset=args.preset, N=None, q=None, q_factors=None, p=None)
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), **changes})
        return cfg
    return cfg.with_overrides(**changes)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_demo_split(args) -> int:
    record = demo_split_record()
    print(f"x^8 + 1 mod {record['prime']}")
    print(f"roots: {record['roots']}")
    print(f"components: {record['n_components']} x dim {record['component_dims'][0]}")
    print(f"sample: {record['sample']}")
    print(f"slots: {record['slots']}")
    print(f"identity: {str(record['identity']).lower()}")
    for sub in record["subproblems"]:
        print(f"  root {sub['root']:>2}: round {sub['target']:>2} to a multiple of "
              f"{sub['spacing']} -> {sub['solution']}")
    if args.out:
        Path(args.out).write_text(json.dumps(record, indent=1, sort_keys=True) + "\n")
    try:
        golden = load_golden(args.golden)
    except (OSError, ValueError) as exc:
        print(f"golden record unreadable: {exc}", file=sys.stderr)
        return EXIT_GOLDEN
    bad = check_golden(record, golden)
    if bad:
        print(f"golden mismatch in: {', '.join(bad)}", file=sys.stderr)
        return EXIT_GOLDEN
    print("golden: match")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    cfg = _config(args)
    gens = run_calibration(cfg)
    _emit(gens.dumps() + "\n", cfg.out)
    cal = gens.calibration
    print(f"relations: {len(gens)}  trials: {cal['trials']}  "
          f"holdout pass rate: {cal['holdout_pass_rate']:.3f}", file=sys.stderr)
    return EXIT_OK


def cmd_bootstrap(args) -> int:
    cfg = _config(args)
    gens = GeneratorSet.loads(Path(args.gens).read_text())
    doc = run_bootstrap_batch(cfg, gens)
    _emit(json.dumps(doc, indent=1, sort_keys=True) + "\n", cfg.out)
    header = f"{'noise':>22} {'geo keep':>9} {'oracle keep':>11} {'rel before':>10} {'rel after':>9}"
    print(header, file=sys.stderr)
    for row in doc["aggregate"]:
        print(f"{row['noise_target']:>22} {row['geometric_preservation_rate']:>9.3f} "
              f"{row['oracle_preservation_rate']:>11.3f} {row['relation_pass_rate_before']:>10.3f} "
              f"{row['relation_pass_rate_after']:>9.3f}", file=sys.stderr)
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _config(args)
    rows = run_bench(cfg.bench_dims, cfg.bench_modes, cfg.bench_batches, cfg.bench_iterations,
                     seed=cfg.seed)
    _emit(rows_to_csv(rows), cfg.out)
    for mode in cfg.bench_modes:
        try:
            print(f"slope[{mode}] = {loglog_slope(rows, mode):.3f}", file=sys.stderr)
        except ValueError:
            pass
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    results = run_selftest(golden_path=args.golden)
    failed = []
    for name, (ok, count, detail) in results.items():
        print(f"{name:<8} {'ok' if ok else 'FAIL':<4} {count:>5} checks  {detail}")
        if not ok:
            failed.append(name)
    if failed:
        print(f"failed suites: {', '.join(failed)}", file=sys.stderr)
        return EXIT_GOLDEN
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH")
    common.add_argument("--seed", type=int, metavar="U64")
    common.add_argument("--out", metavar="PATH")
    common.add_argument("--preset", choices=("tiny", "small", "medium"))
    common.add_argument("--mode", choices=("coefficient", "evaluation", "consistency"))

    parser = argparse.ArgumentParser(prog="geoboot", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("demo-split", parents=[common], help="x^8+1 mod 17 worked example")
    p.add_argument("--golden", metavar="PATH")
    p.set_defaults(func=cmd_demo_split)
    sub.add_parser("calibrate", parents=[common], help="calibrate a generator set").set_defaults(
        func=cmd_calibrate)
    p = sub.add_parser("bootstrap", parents=[common], help="geometric vs oracle batch")
    p.add_argument("--gens", metavar="PATH", required=True)
    p.set_defaults(func=cmd_bootstrap)
    sub.add_parser("bench", parents=[common], help="fold_project scaling table").set_defaults(
        func=cmd_bench)
    p = sub.add_parser("selftest", parents=[common], help="invariant suites")
    p.add_argument("--golden", metavar="PATH")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (GeobootError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
