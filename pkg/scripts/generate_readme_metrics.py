#!/usr/bin/env python3
"""Render the metrics table in README.md from the run registry.

    python scripts/generate_readme_metrics.py            # rewrite README.md
    python scripts/generate_readme_metrics.py --check    # exit 1 if it is stale
"""
from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path
from typing import Iterator, NamedTuple, Tuple

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT))

from prometheus_client.metrics import MetricWrapperBase  # noqa: E402

from prodcredit import metrics  # noqa: E402

BLOCK = re.compile(r"(<!-- METRICS_START -->\n).*?(\n<!-- METRICS_END -->)", re.DOTALL)


class MetricDoc(NamedTuple):
    name: str
    kind: str
    help: str
    labels: Tuple[str, ...]


def registered_metrics() -> Iterator[MetricDoc]:
    """Metrics in prodcredit.metrics that belong to its REGISTRY."""
    registered = {family.name for family in metrics.REGISTRY.collect()}
    for value in vars(metrics).values():
        if not isinstance(value, MetricWrapperBase):
            continue
        for family in value.describe():
            if family.name not in registered:
                continue
            # exposition adds the suffix to counter samples
            name = f"{family.name}_total" if family.type == "counter" else family.name
            yield MetricDoc(name, family.type, family.documentation, tuple(value._labelnames))


def render(docs) -> str:
    rows = ["| Metric | Description | Labels |", "|---|---|---|"]
    rows += [f"| `{d.name}` | {d.help} | {', '.join(d.labels)} |" for d in sorted(docs)]
    return "\n".join(rows)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--readme", type=Path, default=ROOT / "README.md")
    parser.add_argument("--check", action="store_true", help="only report whether the table is current")
    args = parser.parse_args(argv)

    text = args.readme.read_text()
    if not BLOCK.search(text):
        print(f"{args.readme}: no METRICS_START/METRICS_END markers", file=sys.stderr)
        return 2
    table = render(registered_metrics())
    updated = BLOCK.sub(lambda m: m.group(1) + table + m.group(2), text)
    if args.check:
        if updated != text:
            print(f"{args.readme}: metrics table is out of date", file=sys.stderr)
            return 1
        return 0
    if updated != text:
        args.readme.write_text(updated)
        print(f"{args.readme}: metrics table updated")
    return 0


if __name__ == "__main__":
    sys.exit(main())
