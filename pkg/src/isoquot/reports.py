"""Report writers: coefficient CSV tables, JSON reports and static SVG plots.

Output is bit-stable for a fixed configuration: floats are serialized with
shortest round-trip repr, dictionary keys are sorted, and SVG metadata that
would otherwise embed a timestamp is suppressed.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

SCHEMA_VERSION = 1

CSV_COLUMNS = ["n", "case", "A1", "A2", "A3", "K", "a_n", "b_n", "err",
               "positive", "exploratory"]

REPORT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["schema_version", "kind", "config", "passed", "results"],
    "properties": {
        "schema_version": {"type": "integer", "const": SCHEMA_VERSION},
        "kind": {"type": "string", "enum": ["verify", "solve", "coeffs"]},
        "config": {"type": "object"},
        "passed": {"type": "boolean"},
        "results": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name"],
                "properties": {
                    "name": {"type": "string"},
                    "passed": {"type": "boolean"},
                    "n": {"type": ["integer", "null"]},
                    "case": {"type": ["string", "null"]},
                    "A1": {"type": ["number", "null"]},
                    "A2": {"type": ["number", "null"]},
                    "A3": {"type": ["number", "null"]},
                    "K": {"type": ["number", "null"]},
                    "a_n": {"type": ["number", "null"]},
                    "b_n": {"type": ["number", "null"]},
                    "error_bar": {"type": ["number", "null"]},
                    "positive": {"type": ["boolean", "null"]},
                    "exploratory": {"type": ["boolean", "null"]},
                    "detail": {"type": ["string", "null"]},
                },
            },
        },
    },
}


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_coeffs_csv(rows: list[dict]) -> str:
    """Stable-order CSV for coefficient sweeps."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row.get(col)) for col in CSV_COLUMNS])
    return buf.getvalue()


def write_coeffs_csv(path, rows: list[dict]) -> None:
    Path(path).write_text(render_coeffs_csv(rows), encoding="utf-8")


def build_report(kind: str, config: dict, results: list[dict],
                 passed: bool) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "config": config,
        "passed": passed,
        "results": results,
    }


def render_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def write_json(path, report: dict) -> None:
    Path(path).write_text(render_json(report), encoding="utf-8")


def write_coeffs_svg(path, rows: list[dict], case: str) -> None:
    """Line plot of the assembled coefficients against dimension, with a zero
    line, written as deterministic SVG."""
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    ns = [row["n"] for row in rows]
    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=100)
    if case == "nonumbilic":
        ax.plot(ns, [row["K"] for row in rows], marker="o", label="K(n)")
        err = [row["err"] for row in rows]
        ax.errorbar(ns, [row["K"] for row in rows], yerr=err, fmt="none",
                    ecolor="gray", capsize=3)
    else:
        ax.plot(ns, [row["a_n"] for row in rows], marker="o", label="a(n)")
        ax.plot(ns, [row["b_n"] for row in rows], marker="s", label="b(n)")
        err = [row["err"] for row in rows]
        ax.errorbar(ns, [row["a_n"] for row in rows], yerr=err, fmt="none",
                    ecolor="gray", capsize=3)
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_xlabel("dimension n")
    ax.set_ylabel("expansion coefficient")
    ax.set_title(f"{case} quotient expansion coefficients")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
