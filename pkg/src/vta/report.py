"""Fuzz reports on disk: JSON summary, per-program CSV, and figures."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .metatheory import FuzzResult  # noqa: E402

CSV_FIELDS = ("index", "seed", "size", "r", "sr_states", "sr_violations",
              "progress_states", "progress_violations", "program")


def summary_json(result: FuzzResult, params: dict) -> dict:
    return {"params": params, "passed": result.passed,
            "suites": {k: r.to_json() for k, r in result.reports.items()}}


def write_csv(result: FuzzResult, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.DictWriter(f, fieldnames=CSV_FIELDS, extrasaction="ignore")
        w.writeheader()
        for row in result.records:
            w.writerow({k: row.get(k, "") for k in CSV_FIELDS})


def plot(result: FuzzResult, path: Path) -> None:
    """States explored per program against program size, one panel per suite."""
    suites = [k for k in ("sr", "progress") if k in result.reports]
    fig, axes = plt.subplots(1, max(1, len(suites)), figsize=(5 * max(1, len(suites)), 4),
                             squeeze=False)
    for ax, key in zip(axes[0], suites):
        rep = result.reports[key]
        sizes = [row["size"] for row in result.records]
        states = [row[f"{key}_states"] for row in result.records]
        bad = [row[f"{key}_violations"] > 0 for row in result.records]
        ax.scatter([s for s, b in zip(sizes, bad) if not b],
                   [n for n, b in zip(states, bad) if not b],
                   s=12, alpha=0.5, label="no violation")
        if any(bad):
            ax.scatter([s for s, b in zip(sizes, bad) if b],
                       [n for n, b in zip(states, bad) if b],
                       s=24, marker="x", color="tab:red", label="violation")
        ax.set_xlabel("program size (AST nodes)")
        ax.set_ylabel("states explored")
        ax.set_yscale("symlog")
        ax.set_title(f"{rep.name}: {rep.status}, {len(rep.violations)} violations")
        ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_report(result: FuzzResult, out_dir, params: dict) -> dict:
    """Write summary.json, programs.csv and states.png; return their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"json": out / "summary.json", "csv": out / "programs.csv",
             "figure": out / "states.png"}
    with open(paths["json"], "w", encoding="utf-8") as f:
        json.dump(summary_json(result, params), f, indent=2, sort_keys=True)
        f.write("\n")
    write_csv(result, paths["csv"])
    if result.records:
        plot(result, paths["figure"])
    else:
        del paths["figure"]
    return {k: str(v) for k, v in paths.items()}
