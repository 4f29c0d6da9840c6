"""Command line entry point: ``qeom-thermal {run,census,sample} --config PATH``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

from . import io as qio
from .errors import QeomError, ValidationFailed
from .pipeline import format_census, observable_census, run_pipeline, write_records

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_UNSTABLE = 3
UNSTABLE_THRESHOLD = 0.5


def _parser():
    parser = argparse.ArgumentParser(prog="qeom-thermal", description=__doc__)
    parser.add_argument("--eta", type=float, default=None, help="override the metric cutoff of the GEP solver")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the beta/shot sweep and write CSV + JSON results")
    run.add_argument("--config", required=True)
    run.add_argument("--out", default=None, help="results CSV (defaults to output_path in the config)")
    run.add_argument("--records", default=None, help="directory of pre-generated outcome records")

    census = sub.add_parser("census", help="report basis and observable counts without sampling")
    census.add_argument("--config", required=True)
    census.add_argument("--json", action="store_true")

    sample = sub.add_parser("sample", help="pre-generate outcome records for every finite shot count")
    sample.add_argument("--config", required=True)
    sample.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = qio.load_run_config(args.config)
        if args.eta is not None:
            if not args.eta > 0:
                raise ValidationFailed("eta", f"must be positive, got {args.eta}")
            cfg = dataclasses.replace(cfg, eta=args.eta)
    except ValidationFailed as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    try:
        if args.command == "census":
            report = observable_census(cfg)
            print(json.dumps(report, indent=2) if args.json else format_census(report))
            return EXIT_OK

        if args.command == "sample":
            paths = write_records(cfg, args.out)
            print(f"wrote {len(paths)} outcome records to {args.out}")
            return EXIT_OK

        out = args.out or cfg.output_path
        if out is None:
            print("invalid configuration: output_path: required for 'run' (or pass --out)", file=sys.stderr)
            return EXIT_VALIDATION
        table = run_pipeline(cfg, record_dir=args.records)
        qio.write_results(table, out)
        worst = 0.0
        for shots in table.shot_counts():
            frac = table.status_fractions(shots)
            worst = max(worst, frac["failed"])
            print(f"shots={qio.format_shots(shots)}: ok={frac['ok']:.2f} unstable={frac['unstable']:.2f} failed={frac['failed']:.2f}")
        print(f"results written to {out}")
        if worst > UNSTABLE_THRESHOLD:
            print(f"more than {UNSTABLE_THRESHOLD:.0%} of repetitions failed", file=sys.stderr)
            return EXIT_UNSTABLE
        return EXIT_OK
    except ValidationFailed as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (QeomError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
