"""Grouped bar charts from experiment metrics CSVs.

Consumes the sweep output of the teamcoord CLI (one row per run) purely
through its CSV schema: rows are grouped by (sensing_factor,
communication_factor), aggregated over graph seeds, and drawn as one bar
per algorithm variant.  Every chart gets a sidecar text table with the
exact aggregated values.
"""

from __future__ import annotations

import argparse
import csv
import os
import statistics
import sys
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

METRICS = ("total_cost", "runtime_ms")
GROUP_COLUMNS = ("sensing_factor", "communication_factor")
AGGREGATIONS = ("mean", "median")
# canonical bar order; variants outside this list are appended sorted
VARIANT_ORDER = ("naive", "full", "no_c3", "epsilon")
METRIC_LABELS = {"total_cost": "total cost", "runtime_ms": "runtime [ms]"}

GroupKey = Tuple[str, str]


class MetricsFormatError(Exception):
    """The CSV does not look like sweep output."""


@dataclass(frozen=True)
class PlotSpec:
    csv_path: str
    out_dir: str
    metrics: Tuple[str, ...] = METRICS
    group_by: Tuple[str, ...] = GROUP_COLUMNS
    aggregation: str = "mean"

    def __post_init__(self) -> None:
        for metric in self.metrics:
            if metric not in METRICS:
                raise ValueError("unknown metric: %s" % metric)
        if self.aggregation not in AGGREGATIONS:
            raise ValueError("unknown aggregation: %s" % self.aggregation)


@dataclass(frozen=True)
class ChartInfo:
    metric: str
    aggregation: str
    image_path: str
    table_path: str
    groups: Tuple[GroupKey, ...]
    variants: Tuple[str, ...]
    bar_count: int


def load_rows(csv_path: str,
              required: Sequence[str]) -> List[Dict[str, str]]:
    """Read the CSV and check that every required column is present."""
    with open(csv_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise MetricsFormatError(
                "%s: missing column(s) %s" % (csv_path, ", ".join(missing)))
        return list(reader)


def aggregate(rows: Sequence[Dict[str, str]], metric: str, aggregation: str,
              group_by: Sequence[str] = GROUP_COLUMNS,
              ) -> Tuple[List[GroupKey], List[str], Dict[Tuple[GroupKey, str], float]]:
    """Collapse per-run rows into one value per (setting, variant).

    Rows whose status is not "ok" carry no usable measurements and are
    skipped.  Group keys keep the CSV's string form so the sidecar table
    reproduces the input values byte for byte.
    """
    fold = statistics.fmean if aggregation == "mean" else statistics.median
    samples: Dict[Tuple[GroupKey, str], List[float]] = {}
    seen_variants = set()
    for row in rows:
        if row["status"] != "ok":
            continue
        key = tuple(row[c] for c in group_by)
        seen_variants.add(row["variant"])
        samples.setdefault((key, row["variant"]), []).append(
            float(row[metric]))
    if not samples:
        raise MetricsFormatError("no rows with status ok")
    groups = sorted({key for key, _ in samples},
                    key=lambda key: tuple(float(v) for v in key))
    variants = [v for v in VARIANT_ORDER if v in seen_variants]
    variants += sorted(seen_variants.difference(VARIANT_ORDER))
    table = {cell: fold(values) for cell, values in samples.items()}
    return groups, variants, table


def _write_table(path: str, group_by: Sequence[str], groups: Sequence[GroupKey],
                 variants: Sequence[str],
                 table: Dict[Tuple[GroupKey, str], float]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        writer.writerow(list(group_by) + list(variants))
        for group in groups:
            cells = [repr(table[(group, v)]) if (group, v) in table else ""
                     for v in variants]
            writer.writerow(list(group) + cells)


def render(spec: PlotSpec) -> List[ChartInfo]:
    """Draw one grouped bar chart per metric and return what was written."""
    required = list(spec.group_by) + ["variant", "status"] + list(spec.metrics)
    rows = load_rows(spec.csv_path, required)
    os.makedirs(spec.out_dir, exist_ok=True)
    charts = []
    for metric in spec.metrics:
        groups, variants, table = aggregate(rows, metric, spec.aggregation,
                                            spec.group_by)
        stem = "%s_%s" % (metric, spec.aggregation)
        image_path = os.path.join(spec.out_dir, stem + ".png")
        table_path = os.path.join(spec.out_dir, stem + ".tsv")
        _write_table(table_path, spec.group_by, groups, variants, table)

        fig, ax = plt.subplots(
            figsize=(max(6.0, 1.2 * len(groups)), 4.0))
        width = 0.8 / len(variants)
        for i, variant in enumerate(variants):
            offsets = [g + (i + 0.5) * width - 0.4
                       for g in range(len(groups))]
            # a setting missing this variant still gets a (zero-height)
            # bar so groups stay aligned; the sidecar cell is left empty
            heights = [table.get((group, variant), 0.0) for group in groups]
            ax.bar(offsets, heights, width, label=variant)
        ax.set_xticks(range(len(groups)))
        ax.set_xticklabels(["s=%s\nc=%s" % group for group in groups])
        ax.set_ylabel("%s (%s over graphs)"
                      % (METRIC_LABELS[metric], spec.aggregation))
        ax.legend()
        fig.tight_layout()
        fig.savefig(image_path, dpi=150)
        bar_count = len(ax.patches)
        plt.close(fig)

        charts.append(ChartInfo(
            metric=metric, aggregation=spec.aggregation,
            image_path=image_path, table_path=table_path,
            groups=tuple(groups), variants=tuple(variants),
            bar_count=bar_count))
    return charts


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="coordplot",
        description="render grouped bar charts from a metrics CSV")
    parser.add_argument("--csv", required=True, help="metrics CSV to read")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--metric", action="append", choices=METRICS,
                        help="metric to chart (repeatable; default: all)")
    parser.add_argument("--agg", choices=AGGREGATIONS, default="mean")
    args = parser.parse_args(argv)

    metrics = tuple(dict.fromkeys(args.metric)) if args.metric else METRICS
    spec = PlotSpec(csv_path=args.csv, out_dir=args.out, metrics=metrics,
                    aggregation=args.agg)
    try:
        charts = render(spec)
    except OSError as exc:
        print("coordplot: %s" % exc, file=sys.stderr)
        return 2
    except MetricsFormatError as exc:
        print("coordplot: %s" % exc, file=sys.stderr)
        return 2
    for chart in charts:
        print("wrote %s (%d bars) and %s"
              % (chart.image_path, chart.bar_count, chart.table_path))
    return 0


if __name__ == "__main__":
    sys.exit(main())
