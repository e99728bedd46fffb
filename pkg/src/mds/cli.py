"""mds <check> --structure SPEC --samples N --seed S --out PATH --format json|csv [--tol-* ...]"""
import argparse
import sys

from .errors import MdsError
from .harness import CHECKS, build_config, emit_report, parse_config_file, run_experiment


def build_parser():
    p = argparse.ArgumentParser(prog="mds", description="Sampled checks on Moebius structures of the circle.")
    p.add_argument("check", choices=list(CHECKS))
    p.add_argument("--config", help="flat key = value file; flags given here override it")
    p.add_argument("--structure", help="canonical | snowflake(a) | ellipse(a,b) | perturbed(eta) | "
                                       "rescaled(k) | table:<path>")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--format", choices=["json", "csv"])
    p.add_argument("--workers", type=int)
    p.add_argument("--chunk-size", type=int)
    p.add_argument("--min-gap", type=float)
    for name in ("eps-pt", "delta-min", "tau-rel", "tau-root", "eps-root"):
        p.add_argument(f"--tol-{name}", type=float)
    p.add_argument("--tol-max-iter", type=int)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        values = parse_config_file(args.config) if args.config else {}
        flags = {k: v for k, v in vars(args).items() if v is not None and k != "config"}
        values.update(flags)
        config = build_config(values)
        report = run_experiment(config)
        text = emit_report(report, config.format, config.out)
    except MdsError as exc:
        print(f"mds: error: {exc}", file=sys.stderr)
        return 2
    if not config.out:
        sys.stdout.write(text)
    status = "PASS" if report.passed else "FAIL"
    print(f"{status} {report.check} on {report.structure}: tested={report.tested} "
          f"violations={report.violations} worst={report.worst_margin}", file=sys.stderr)
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
