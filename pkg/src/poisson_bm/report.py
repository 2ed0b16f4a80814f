"""Run reports: canonical JSON, CSV assertion tables, and plot data.

The JSON report is canonical: for a fixed configuration and master seed
its bytes are identical across runs and worker counts. Wall-clock
timings therefore live in a sidecar file (timings.txt), never in the
JSON. Every numeric cell in CSV output is written with 17 significant
digits so identical doubles round-trip identically.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

__all__ = [
    "RunReport",
    "emit_plot_data",
    "PLOT_RATE_LOGLOG",
    "PLOT_COV_HEATMAP",
    "PLOT_MARGINAL_HIST",
]

PLOT_RATE_LOGLOG = "RATE_LOGLOG"
PLOT_COV_HEATMAP = "COV_HEATMAP"
PLOT_MARGINAL_HIST = "MARGINAL_HIST"

REPORT_FILENAME = "report.json"
ASSERTIONS_FILENAME = "assertions.csv"
TIMINGS_FILENAME = "timings.txt"


def fmt17(x: float) -> str:
    return f"{x:.17g}"


@dataclass
class RunReport:
    """Full experiment outcome: config echo, per-epsilon checks, summary.

    ``results`` is a list of {"epsilon": e, "checks": [...]} entries in
    the epsilon order of the run; each check carries scalar assertions
    of the form {name, value, std_error, target, band, pass} plus
    optional plot payloads under "data". ``timings`` is excluded from
    the canonical JSON.
    """

    tool: dict
    config: dict
    hypothesis: dict
    results: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return bool(self.summary.get("all_pass", False))

    def canonical_dict(self) -> dict:
        return {
            "tool": self.tool,
            "config": self.config,
            "hypothesis": self.hypothesis,
            "results": self.results,
            "summary": self.summary,
        }

    def to_json_text(self) -> str:
        return json.dumps(self.canonical_dict(), indent=2) + "\n"

    def assertions_csv_text(self) -> str:
        buf = io.StringIO()
        buf.write("epsilon,check,assertion,value,std_error,target,band,pass\n")
        for block in self.results:
            eps = block["epsilon"]
            for check in block["checks"]:
                for a in check.get("assertions", []):
                    row = [
                        fmt17(eps),
                        check["name"],
                        a["name"],
                        fmt17(a["value"]),
                        fmt17(a["std_error"]) if a.get("std_error") is not None else "",
                        fmt17(a["target"]) if a.get("target") is not None else "",
                        fmt17(a["band"]) if a.get("band") is not None else "",
                        "1" if a["pass"] else "0",
                    ]
                    buf.write(",".join(row) + "\n")
        return buf.getvalue()

    def timings_text(self) -> str:
        lines = ["# wall-clock timings (seconds); not part of the canonical report"]
        for key, seconds in self.timings.items():
            lines.append(f"{key} = {seconds:.3f}")
        return "\n".join(lines) + "\n"

    def write(self, output_dir: str | Path) -> Path:
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / REPORT_FILENAME).write_text(self.to_json_text(), encoding="utf-8")
        (out / ASSERTIONS_FILENAME).write_text(self.assertions_csv_text(), encoding="utf-8")
        (out / TIMINGS_FILENAME).write_text(self.timings_text(), encoding="utf-8")
        return out / REPORT_FILENAME

    @classmethod
    def from_json_file(cls, path: str | Path) -> "RunReport":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            tool=doc["tool"],
            config=doc["config"],
            hypothesis=doc["hypothesis"],
            results=doc["results"],
            summary=doc["summary"],
        )


def _find_check(report: RunReport, epsilon: float | None, name: str) -> dict:
    blocks = report.results
    if epsilon is None:
        block = blocks[-1]  # smallest epsilon: runs go large to small
    else:
        matches = [b for b in blocks if b["epsilon"] == epsilon]
        if not matches:
            raise ValueError(f"no results for epsilon {epsilon!r}")
        block = matches[0]
    for check in block["checks"]:
        if check["name"] == name:
            return check
    raise ValueError(f"check {name!r} missing from the report at epsilon {block['epsilon']}")


def _rate_csv(report: RunReport, pair: tuple[int, int] | None) -> str:
    fits = report.summary.get("rate_fits")
    if not fits:
        raise ValueError("report has no rate summary (need >= 3 epsilons and cross_moments)")
    if pair is None:
        entry = fits[0]
    else:
        matches = [f for f in fits if (f["i"], f["j"]) == pair]
        if not matches:
            raise ValueError(f"no rate fit for component pair {pair}")
        entry = matches[0]
    buf = io.StringIO()
    buf.write("log_epsilon,log_abs_estimate,log_bound_total\n")
    for point in entry["points"]:
        buf.write(
            ",".join(
                [
                    fmt17(math.log(point["epsilon"])),
                    fmt17(math.log(point["floored_abs_estimate"])),
                    fmt17(math.log(point["bound_total"])),
                ]
            )
            + "\n"
        )
    return buf.getvalue()


def _cov_csv(report: RunReport, epsilon: float | None) -> str:
    check = _find_check(report, epsilon, "covariance")
    matrix = check["data"]["matrix"]
    buf = io.StringIO()
    buf.write("i,j,value,std_error\n")
    for i, row in enumerate(matrix, start=1):
        for j, cell in enumerate(row, start=1):
            buf.write(f"{i},{j},{fmt17(cell['value'])},{fmt17(cell['std_error'])}\n")
    return buf.getvalue()


def _hist_csv(report: RunReport, epsilon: float | None, component: int) -> str:
    check = _find_check(report, epsilon, "normality")
    hists = check["data"]["histograms"]
    key = f"comp_{component}"
    if key not in hists:
        raise ValueError(f"no histogram for component {component}")
    h = hists[key]
    buf = io.StringIO()
    buf.write("bin_left,bin_right,count\n")
    edges = h["edges"]
    for k, count in enumerate(h["counts"]):
        buf.write(f"{fmt17(edges[k])},{fmt17(edges[k + 1])},{count}\n")
    return buf.getvalue()


def emit_plot_data(
    report: RunReport,
    kind: str,
    epsilon: float | None = None,
    pair: tuple[int, int] | None = None,
    component: int = 1,
) -> str:
    """Plot-ready CSV for one of the three supported plot kinds.

    RATE_LOGLOG: one row per epsilon with (log eps, log |estimate|,
    log bound total) for one component pair (default: the first).
    COV_HEATMAP: d*d rows of (i, j, value, std_error).
    MARGINAL_HIST: 50 bins spanning +-5 standard deviations, counts
    summing to the replication count.
    """
    if kind == PLOT_RATE_LOGLOG:
        return _rate_csv(report, pair)
    if kind == PLOT_COV_HEATMAP:
        return _cov_csv(report, epsilon)
    if kind == PLOT_MARGINAL_HIST:
        return _hist_csv(report, epsilon, component)
    raise ValueError(f"unknown plot kind {kind!r}")
