"""JSON / CSV serialization of analysis reports."""

from __future__ import annotations

import csv
import io
import json
from importlib import resources
from pathlib import Path

from .quantify import CHANNELS, AnalysisReport, AssayMeasurement

SCHEMA_VERSION = 1


def load_schema() -> dict:
    return json.loads(resources.files("assayvision").joinpath("report_schema.json").read_text())


def _measurement(m: AssayMeasurement) -> dict:
    return {
        "centroid": [m.centroid[0], m.centroid[1]],
        "area_px": m.filled_area,
        "bbox": m.bbox.as_list(),
        "mean": m.means.as_dict(),
    }


def report_to_dict(report: AnalysisReport) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "params": report.params.as_dict(),
        "inputs": report.inputs,
        "assays": [
            {
                "index": a.index,
                "base": _measurement(a.base),
                "exposed": _measurement(a.exposed),
                "delta": a.delta.as_dict(),
            }
            for a in report.assays
        ],
        "warnings": list(report.warnings),
    }


def dumps_json(report: AnalysisReport) -> str:
    return json.dumps(report_to_dict(report), indent=2) + "\n"


def dumps_csv(report: AnalysisReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["assay", "channel", "base", "exposed", "delta"])
    for a in report.assays:
        delta = a.delta.as_dict()
        base, exposed = a.base.means.as_dict(), a.exposed.means.as_dict()
        for ch in CHANNELS:
            w.writerow([a.index, ch, repr(base[ch]), repr(exposed[ch]), repr(delta[ch])])
    return buf.getvalue()


def format_table(report: AnalysisReport) -> str:
    """Assay x channel table of base, exposed and delta, rounded to 2 decimals."""
    head = f"{'assay':>5}  " + "  ".join(f"{ch:^26}" for ch in CHANNELS)
    sub = f"{'':>5}  " + "  ".join(f"{'base':>8}{'exposed':>9}{'delta':>9}" for _ in CHANNELS)
    lines = [head, sub]
    for a in report.assays:
        base, exposed, delta = a.base.means.as_dict(), a.exposed.means.as_dict(), a.delta.as_dict()
        cells = "  ".join(f"{base[ch]:8.2f}{exposed[ch]:9.2f}{delta[ch]:9.2f}" for ch in CHANNELS)
        lines.append(f"{a.index:>5}  {cells}")
    return "\n".join(lines)


def write_report(report: AnalysisReport, out_dir: str | Path, fmt: str = "json") -> list[Path]:
    """Write ``report.json`` and, for ``fmt="csv"``, ``report.csv`` next to it."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [out_dir / "report.json"]
    written[0].write_text(dumps_json(report), encoding="utf-8")
    if fmt == "csv":
        written.append(out_dir / "report.csv")
        written[1].write_text(dumps_csv(report), encoding="utf-8")
    return written
