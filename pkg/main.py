"""Main entry point for the correlated Wishart one-point function toolkit."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from src.cli import run_job
from src.config import LOG_FILE, LOG_LEVEL
from src.job import COMMANDS, DEFAULT_JOB, JobConfig, load_job_from_yaml, save_job_to_yaml

# flag name -> JobConfig field
FLAG_FIELDS = {
    "spectrum": "spectrum_path",
    "out": "output_path",
    "grid": "grid",
    "samples": "samples",
    "bins": "bins",
    "bin_width": "bin_width",
    "seed": "seed",
    "abs_tol": "abs_tol",
    "rel_tol": "rel_tol",
    "threads": "threads",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="One-point eigenvalue density of correlated Wishart ensembles"
    )
    parser.add_argument("command", nargs="?", choices=COMMANDS, help="Job to run")
    parser.add_argument("--spectrum", type=str, metavar="PATH", help="Spectrum JSON file")
    parser.add_argument("--out", type=str, metavar="PATH", help="Output file")
    parser.add_argument("--grid", type=str, metavar="MIN:MAX:N|auto", help="Density grid")
    parser.add_argument("--samples", type=int, help="Monte-Carlo sample count")
    parser.add_argument("--bins", type=int, help="Histogram bin count")
    parser.add_argument("--bin-width", type=float, help="Histogram bin width (overrides --bins)")
    parser.add_argument("--seed", type=int, help="Monte-Carlo seed")
    parser.add_argument("--abs-tol", type=float, help="Absolute quadrature tolerance")
    parser.add_argument("--rel-tol", type=float, help="Relative quadrature tolerance")
    parser.add_argument("--threads", type=int, help="Monte-Carlo worker threads")
    parser.add_argument("--config", type=str, metavar="PATH", help="YAML job file")
    parser.add_argument(
        "--init-config",
        type=str,
        metavar="PATH",
        help="Write a default YAML job file and exit",
    )
    return parser


def job_from_args(args: argparse.Namespace) -> JobConfig:
    """Job file values first, then every flag given on the command line."""
    job = load_job_from_yaml(Path(args.config)) if args.config else JobConfig()
    if args.command:
        job.command = args.command
    for flag, field_name in FLAG_FIELDS.items():
        value = getattr(args, flag)
        if value is not None:
            setattr(job, field_name, value)
    return job


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.init_config:
        path = Path(args.init_config)
        if path.exists():
            print(f"⚠️  Job file already exists at {path}")
            return 0
        save_job_to_yaml(DEFAULT_JOB, path)
        print(f"✅ Created default job file at {path}")
        return 0

    if not args.command and not args.config:
        parser.error("a command or --config is required")

    LOG_FILE.parent.mkdir(parents=True, exist_ok=True)
    logging.basicConfig(
        level=getattr(logging, LOG_LEVEL),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[logging.FileHandler(LOG_FILE)],
    )

    job = job_from_args(args)
    result = job.validate()
    for warning in result["warnings"]:
        print(warning)
    if result["errors"]:
        for error in result["errors"]:
            print(error, file=sys.stderr)
        return 2

    print(f"🔬 Running '{job.command}' on {job.spectrum_path}")
    path, code = run_job(job)
    if path is None:
        print("❌ Job failed; see the error document on stderr")
    elif code == 0:
        print(f"💾 Output saved to: {path}")
        print("✨ Done!")
    else:
        print(f"❌ Checks failed; report saved to: {path}")
    return code


if __name__ == "__main__":
    sys.exit(main())
