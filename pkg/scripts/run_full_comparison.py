#!/usr/bin/env python3
"""Run every correction pipeline on one synthetic cohort and compare them.

Generates the cohort from a JSON config, applies all four pipelines,
computes the QC-FC report for each (plus the uncorrected timeseries),
and writes a side-by-side comparison table and CSV. All outputs land
under --workdir; rerunning with the same config reproduces the same
bytes.
"""

import argparse
import sys
from pathlib import Path

from qcfc.cli import main as qcfc_main
from qcfc.pipelines import PipelineKind

DEFAULT_CONFIG = Path(__file__).resolve().parent.parent / "configs" / "reference_cohort.json"


def run(argv: list[str]) -> None:
    rc = qcfc_main(argv)
    if rc != 0:
        sys.exit(rc)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--config", default=str(DEFAULT_CONFIG), help="cohort config JSON"
    )
    parser.add_argument(
        "--workdir", default="comparison_run", help="directory for all outputs"
    )
    parser.add_argument("--bins", type=int, default=50, help="histogram bin count")
    args = parser.parse_args()

    work = Path(args.workdir)
    data = work / "cohort"
    run(["phantom", "--config", args.config, "--out", str(data)])
    manifest = str(data / "manifest.json")

    reports = []
    raw_report = work / "qc_raw.json"
    run(
        ["qc", "--manifest", manifest, "--raw", "--report", str(raw_report)]
        + ["--bins", str(args.bins)]
    )
    reports.append(raw_report)

    for kind in PipelineKind:
        name = kind.value
        corrected = work / f"corrected_{name}"
        run(["correct", "--manifest", manifest, "--pipeline", name, "--out", str(corrected)])
        report = work / f"qc_{name}.json"
        run(
            ["qc", "--manifest", manifest, "--corrected", str(corrected)]
            + ["--report", str(report), "--bins", str(args.bins)]
        )
        reports.append(report)

    print()
    run(["report", *[str(r) for r in reports], "--csv", str(work / "comparison.csv")])


if __name__ == "__main__":
    main()
