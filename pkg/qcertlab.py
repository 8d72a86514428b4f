"""
qcertlab.py

Command-line entry point of the quantum certification lab.
Runs a protocol experiment, the verification suite, or a calibration sweep.

Usage:
    python qcertlab.py <protocol> [--d D] [--t T] [--eps EPS] [--n N] [--trials K] [--seed S]
                                  [--mode {mc,exact}] [--profile NAME] [--out PATH]
                                  [--arm {null,alt,both}] [--jobs J] [--scenario FILE] [-v]
    python qcertlab.py verify [--scope SCOPE] [--fault NAME] [-v]
    python qcertlab.py calibrate --grid FILE --target P [--profile NAME] [--trials K] [--max-n N] [-v]

Exit codes: 0 pass, 1 invariant failure or error budget exceeded, 2 resource limit, 3 config error.
"""

import argparse
import json
import logging
import sys

from src.config import LOG_DATEFMT, LOG_FORMAT, ensure_directories, get_path_string
from src.errors import CalibrationFailure, QCertLabError

# =========================
# CONFIGURATION
# =========================

PROTOCOL_COMMANDS = [
    "verify-moments",
    "purity",
    "mixedness",
    "certify",
    "closeness-unif",
    "closeness-tcopy",
    "bow",
    "chi2",
]


# =========================
# HELPER FUNCTIONS
# =========================

def print_header(text: str):
    """Print a formatted header."""
    print("\n" + "=" * 60)
    print(f"  {text}")
    print("=" * 60)


def print_step(step_num: int, total: int, name: str, description: str):
    """Print step information."""
    print(f"\n[{step_num}/{total}] {name}")
    print(f"    → {description}")


def configure_logging(verbose: bool):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format=LOG_FORMAT,
        datefmt=LOG_DATEFMT,
    )


# =========================
# COMMANDS
# =========================

def run_protocol(args) -> int:
    from src.harness.experiment import ExperimentConfig
    from src.harness.runner import run

    config = ExperimentConfig(
        protocol=args.command,
        d=args.d,
        t=args.t,
        eps=args.eps,
        n=args.n,
        trials=args.trials,
        seed=args.seed,
        mode=args.mode,
        out=args.out,
        profile=args.profile,
        arm=args.arm,
        n_jobs=args.jobs,
        scenario=args.scenario,
    )
    print_header(f"Protocol: {config.protocol}")
    print(f"\n🚀 d={config.d}  t={config.t}  eps={config.eps}  trials={config.trials}  seed={config.seed}  mode={config.mode}")

    result = run(config)
    arms = result.summary["arms"]
    print(f"\n📊 Batches per trial: {result.summary['n_batches']}")
    for i, (arm, summary) in enumerate(arms.items(), 1):
        status = "✅" if summary["passed"] else "❌"
        if summary["mode"] == "exact":
            detail = (
                f"mean {summary['mean']:.4g}, variance {summary['variance']:.3g}, "
                f"Chebyshev error bound {summary['chebyshev_error_bound']:.3f}"
            )
        else:
            detail = (
                f"error rate {summary['error_rate']:.3f} ± {summary['error_stderr']:.3f}, "
                f"mean statistic {summary['mean']:.4g}, mean copies {summary['mean_copies']:.0f}"
            )
        print_step(i, len(arms), f"{status} arm {arm}", detail)

    if result.csv_path is not None:
        print(f"\n📍 Trials:  {get_path_string(result.csv_path)}")
        print(f"📍 Summary: {get_path_string(result.json_path)}")
    if result.passed:
        print("\n🎉 All arms within the error budget")
        return 0
    print("\n⚠️  At least one arm exceeded the error budget")
    return 1


def run_verify(args) -> int:
    from src.harness.verify import verify_suite

    print_header(f"Verification suite: {args.scope}")
    if args.fault:
        print(f"\n⚠️  Injected faults: {', '.join(args.fault)}")
    report = verify_suite(args.scope, faults=args.fault or (), seed=args.seed)
    checks = report["checks"]
    for i, item in enumerate(checks, 1):
        status = "✅" if item["passed"] else "❌"
        print_step(i, len(checks), f"{status} {item['module']}/{item['name']}", f"{item['detail']} ({item['seconds']:.2f}s)")

    print_header("Verification Summary")
    passed = len(checks) - len(report["failures"])
    print(f"\n📊 Results:")
    print(f"   ✅ Passed: {passed}/{len(checks)}")
    print(f"   ❌ Failed: {len(report['failures'])}/{len(checks)}")
    if report["failures"]:
        print(f"\n⚠️  Failed checks:")
        for name in report["failures"]:
            print(f"   - {name}")
        return 1
    print(f"\n🎉 Every check passed")
    return 0


def run_calibrate(args) -> int:
    from src.harness.calibration import calibrate

    print_header(f"Calibration: target {args.target}")
    try:
        profile = calibrate(
            args.grid,
            args.target,
            profile_name=args.profile,
            trials=args.trials,
            max_n=args.max_n,
            seed=args.seed,
            n_jobs=args.jobs,
        )
    except CalibrationFailure as exc:
        print(f"\n❌ {exc}")
        print(json.dumps(exc.diagnostics, indent=4))
        return exc.exit_code
    entries = profile["entries"]
    for i, entry in enumerate(entries, 1):
        print_step(
            i,
            len(entries),
            f"{entry['protocol']} d={entry['d']} t={entry['t']} eps={entry['eps']}",
            f"n = {entry['n']} (success {entry['success']:.3f})",
        )
    print(f"\n🎉 Saved profile '{profile['name']}'")
    return 0


# =========================
# CLI ENTRY POINT
# =========================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Quantum state certification and testing lab")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in PROTOCOL_COMMANDS:
        p = sub.add_parser(name, help=f"Run the {name} experiment")
        p.add_argument("--d", type=int, default=2, help="Local dimension")
        p.add_argument("--t", type=int, default=2, help="Copies per joint measurement")
        p.add_argument("--eps", type=float, default=0.6, help="Distance parameter")
        p.add_argument("--n", type=int, default=None, help="Batch count (default: from the profile)")
        p.add_argument("--trials", type=int, default=200, help="Trials per arm")
        p.add_argument("--seed", type=int, default=0, help="Master seed")
        p.add_argument("--mode", choices=["mc", "exact"], default="mc", help="Monte Carlo or exact moments")
        p.add_argument("--profile", default="default", help="Calibration profile name")
        p.add_argument("--out", default=None, help="CSV output path (JSON written alongside)")
        p.add_argument("--arm", default="both", help="Arm to run (null, alt or both)")
        p.add_argument("--jobs", type=int, default=1, help="Parallel trial workers")
        p.add_argument("--scenario", default=None, help="chi2 scenario JSON file")
        p.add_argument("--verbose", "-v", action="store_true", help="Debug logging")

    p = sub.add_parser("verify", help="Run the verification suite")
    p.add_argument("--scope", default="all", choices=["all", "qcore", "schurweyl", "estimators", "testers", "chi2lab"])
    p.add_argument("--fault", action="append", default=None, help="Inject a named fault (repeatable)")
    p.add_argument("--seed", type=int, default=0, help="Master seed")
    p.add_argument("--verbose", "-v", action="store_true", help="Debug logging")

    p = sub.add_parser("calibrate", help="Calibrate batch counts on a grid")
    p.add_argument("--grid", required=True, help="Grid JSON file")
    p.add_argument("--target", type=float, required=True, help="Target success probability")
    p.add_argument("--profile", default="calibrated", help="Name of the saved profile")
    p.add_argument("--trials", type=int, default=200, help="Trials per batch count tried")
    p.add_argument("--max-n", type=int, default=4096, help="Largest batch count tried")
    p.add_argument("--seed", type=int, default=0, help="Master seed")
    p.add_argument("--jobs", type=int, default=1, help="Parallel trial workers")
    p.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    ensure_directories()
    try:
        if args.command == "verify":
            return run_verify(args)
        if args.command == "calibrate":
            return run_calibrate(args)
        return run_protocol(args)
    except QCertLabError as exc:
        print(f"\n❌ {exc.code}: {exc}")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
