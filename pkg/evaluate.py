#!/usr/bin/env python3
"""
Evaluation script for persisted experiment results.

Recomputes the screening and strategy metric tables from the audit and trace
logs of a results directory, and re-runs the acceptance checks on its
summary.json.
"""

from pathlib import Path

import pandas as pd
import typer
from rich.console import Console
from rich.table import Table

from core.telemetry import read_trace_log
from harness.acceptance import run_checks
from harness.config import ConfigError, load_config
from harness.experiments import ground_truth, pools_for
from harness.results import CONFIG_ECHO_FILE, display_checks, read_summary
from metrics.formulas import RATE_NAMES, compute_metrics
from registry.audit import read_audit

console = Console()
app = typer.Typer(help="Capability governance - results evaluation tool")

# metric table -> audit/trace file stem per (label, seed)
RECOMPUTABLE = {
    "e1_metrics": lambda label, seed: f"e1_seed{seed}",
    "e2_metrics": lambda label, seed: f"e2_{label}_seed{seed}",
}


def recompute_table(results_dir: Path, table: str) -> list[dict[str, object]]:
    """Compare every row of a metric table with metrics recomputed from its logs."""
    config = load_config(results_dir / CONFIG_ECHO_FILE)
    df = pd.read_csv(results_dir / f"{table}.csv")
    stem_of = RECOMPUTABLE[table]

    mismatches = []
    pools: dict[int, dict[tuple[str, str], bool]] = {}
    for row in df.to_dict("records"):
        seed, label = int(row["seed"]), str(row["label"])
        if seed not in pools:
            pools[seed] = ground_truth(
                [spec for specs in pools_for(config, seed).values() for spec in specs]
            )
        stem = stem_of(label, seed)
        events = read_audit(results_dir / "audit" / f"{stem}.jsonl")
        live = read_trace_log(results_dir / "traces" / f"{stem}.jsonl")
        proposed = {(e.family_id, e.version_id) for e in events}
        truth = {key: faulty for key, faulty in pools[seed].items() if key in proposed}

        metrics = compute_metrics(events, live, truth)
        for name in RATE_NAMES:
            stored = (int(row[f"{name}_num"]), int(row[f"{name}_den"]))
            recomputed = metrics.counts.get(name, (0, 0))
            if stored != recomputed:
                mismatches.append(
                    {
                        "table": table,
                        "seed": seed,
                        "label": label,
                        "metric": name,
                        "stored": stored,
                        "recomputed": recomputed,
                    }
                )
    return mismatches


@app.command()
def recompute(
    results_dir: Path = typer.Argument(..., help="Results directory"),
) -> None:
    """Recompute metric tables from persisted audit and trace logs."""
    mismatches = []
    checked = 0
    for table in RECOMPUTABLE:
        if not (results_dir / f"{table}.csv").exists():
            continue
        try:
            mismatches.extend(recompute_table(results_dir, table))
        except (ConfigError, OSError, ValueError) as e:
            console.print(f"[red]Cannot recompute {table}: {e}[/red]")
            raise typer.Exit(code=1)
        checked += 1

    if checked == 0:
        console.print(f"[yellow]No recomputable metric tables in {results_dir}[/yellow]")
        return

    if not mismatches:
        console.print(f"[green]{checked} metric table(s) match their logs[/green]")
        return

    columns = ("table", "seed", "label", "metric", "stored", "recomputed")
    report = Table(title="Metric mismatches")
    for column in columns:
        report.add_column(column)
    for m in mismatches:
        report.add_row(*(str(m[c]) for c in columns))
    console.print(report)
    raise typer.Exit(code=1)


@app.command()
def check(
    results_dir: Path = typer.Argument(..., help="Results directory"),
) -> None:
    """Re-run the acceptance checks on a persisted summary.json."""
    summary = read_summary(results_dir)
    if not summary["experiments"]:
        console.print(f"[yellow]No experiment summaries in {results_dir}[/yellow]")
        raise typer.Exit(code=1)

    checks = run_checks(summary["experiments"])
    display_checks(checks)
    failed = [c for c in checks if not c.passed]
    if failed:
        console.print(f"[red]{len(failed)} acceptance check(s) failed[/red]")
        raise typer.Exit(code=2)
    console.print("[green]All acceptance checks passed[/green]")


if __name__ == "__main__":
    app()
