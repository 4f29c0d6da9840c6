"""Run the census and the full sweep for every shipped configuration.

    python3 scripts/run_experiments.py [--only ethylene] [--repetitions N]

Results land next to each config's ``output_path`` (``results/`` by default).
"""
import argparse
import dataclasses
import logging
import time
from pathlib import Path

from qeom_thermal import io as qio
from qeom_thermal.pipeline import format_census, observable_census, run_pipeline

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--only", default=None, help="config stem to run (default: all)")
    parser.add_argument("--repetitions", type=int, default=None, help="override repetitions")
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    for path in sorted(CONFIGS.glob("*.toml")):
        if args.only and path.stem != args.only:
            continue
        cfg = qio.load_run_config(path)
        if args.repetitions:
            cfg = dataclasses.replace(cfg, repetitions=args.repetitions)
        print(f"== {path.name}")
        print(format_census(observable_census(cfg)))
        t0 = time.perf_counter()
        table = run_pipeline(cfg)
        qio.write_results(table, cfg.output_path)
        for row in table.summary():
            print(
                f"beta={row['beta']:<8.4g} shots={qio.format_shots(row['shots']):>6}  "
                f"D={row['trace_distance_median']:.3e} [{row['trace_distance_lo']:.2e}, {row['trace_distance_hi']:.2e}]  "
                f"dE={row['delta_E_median']:.3e}  failed={row['n_failed']} unstable={row['n_unstable']}"
            )
        print(f"wrote {cfg.output_path} in {time.perf_counter() - t0:.1f}s\n")


if __name__ == "__main__":
    main()
