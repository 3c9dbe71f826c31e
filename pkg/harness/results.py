"""
Results directory: CSV tables, JSONL logs, summary.json and the config echo.
"""

import json
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from rich.console import Console
from rich.table import Table

from core.telemetry import write_trace_log
from harness.acceptance import AcceptanceCheck
from harness.config import HarnessConfig
from harness.experiments import ExperimentResult
from metrics.summary import Summary
from pipeline.evidence import write_evidence
from pipeline.upgrade_manager import StageTimer
from registry.audit import write_audit

console = Console()

FLOAT_FORMAT = "%.6f"
SUMMARY_FILE = "summary.json"
CONFIG_ECHO_FILE = "config_echo.json"
DISPLAY_RATES = ("badr_screen", "badr_pipeline", "far", "uar", "sr", "rsr", "pvr", "benign_reject_rate")


def _json_default(obj: Any) -> Any:
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, set):
        return sorted(obj)
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def write_json(path: Path, data: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True, default=_json_default)
        f.write("\n")


def write_table(path: Path, df: pd.DataFrame) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT)


def write_experiment(result: ExperimentResult, out: Path) -> list[Path]:
    """Write every table and per-seed log of one experiment."""
    written = []
    for name, df in result.tables.items():
        path = out / f"{name}.csv"
        write_table(path, df)
        written.append(path)
    for seed_result in result.seeds:
        for stem, events in seed_result.audits.items():
            write_audit(out / "audit" / f"{stem}.jsonl", events)
        for stem, entries in seed_result.traces.items():
            write_trace_log(out / "traces" / f"{stem}.jsonl", entries)
        for stem, evidence in seed_result.evidence.items():
            write_evidence(out / "evidence" / f"{stem}.jsonl", evidence)
    return written


def read_summary(out: Path) -> dict[str, Any]:
    path = out / SUMMARY_FILE
    if not path.exists():
        return {"experiments": {}, "checks": []}
    with open(path) as f:
        data: dict[str, Any] = json.load(f)
    return data


def write_summary(
    out: Path, results: list[ExperimentResult], checks: list[AcceptanceCheck]
) -> Path:
    """Merge the experiments into summary.json, replacing earlier runs of the same name."""
    summary = read_summary(out)
    for result in results:
        summary["experiments"][result.name] = result.summary
    names = {result.name for result in results}
    summary["checks"] = [c for c in summary["checks"] if c["experiment"] not in names] + [
        c.to_dict() for c in checks
    ]
    path = out / SUMMARY_FILE
    write_json(path, summary)
    return path


def write_config_echo(out: Path, config: HarnessConfig) -> Path:
    path = out / CONFIG_ECHO_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        f.write(config.to_json() + "\n")
    return path


def write_timings(out: Path, timer: StageTimer) -> Path:
    rows = [{"stage": stage, **values} for stage, values in timer.summary().items()]
    path = out / "timings.csv"
    write_table(path, pd.DataFrame(rows))
    return path


# ------------------------------------------------------------------- display


def display_metrics(title: str, rows: dict[str, dict[str, Any]]) -> None:
    """Mean ± std (in %) of the headline rates, one row per label."""
    table = Table(title=title)
    table.add_column("", style="cyan")
    for rate in DISPLAY_RATES:
        table.add_column(rate, justify="right")
    for label, metrics in rows.items():
        table.add_row(
            label,
            *(Summary(**metrics[rate]).format() if rate in metrics else "—" for rate in DISPLAY_RATES),
        )
    console.print(table)


def display_experiment(result: ExperimentResult) -> None:
    summary = result.summary
    if result.name == "e1":
        display_metrics("E1 screening", {"governed": summary["metrics"]})
        blocked = pd.DataFrame(summary["blocked_per_seed"]).drop(columns="seed").mean()
        console.print(f"Blocked per dimension (mean per seed): {blocked.to_dict()}")
    elif result.name == "e2":
        display_metrics("E2 upgrade strategies", summary["metrics"])
        for metric, test in summary["tests"].items():
            console.print(
                f"Wilcoxon governed vs naive [{metric}]: W={test['W']:.1f} "
                f"n={test['n_effective']} p={test['p_value']:.4g}"
            )
    elif result.name == "e3":
        table = Table(title=f"E3 detections ({summary['family']}, mean per seed)")
        table.add_column("Category", style="cyan")
        for column in ("sandbox", "shadow", "missed"):
            table.add_column(column, justify="right")
        for category, counts in summary["by_category"].items():
            table.add_row(category, *(f"{counts[c]:.1f}" for c in ("sandbox", "shadow", "missed")))
        console.print(table)
        console.print(f"Shadow-only share: {Summary(**summary['shadow_only_share']).format()}%")
    elif result.name == "e4":
        table = Table(title=f"E4 rollback under {summary['severity']} drift")
        table.add_column("Drift", style="cyan")
        table.add_column("Attempts/seed", justify="right")
        table.add_column("Trigger rate", justify="right")
        table.add_column("RSR (%)", justify="right")
        table.add_column("Time to rollback", justify="right")
        for kind, row in summary["per_kind"].items():
            table.add_row(
                kind,
                f"{row['attempts_per_seed']:.0f}",
                f"{row['trigger_rate']:.2f}",
                Summary(**row["rsr"]).format(),
                Summary(**row["time_to_rollback"]).format(scale=1.0),
            )
        console.print(table)
        console.print(
            f"Overall RSR: {Summary(**summary['overall_rsr']).format()}%, "
            f"control triggers: {summary['control_triggers']}"
        )
    elif result.name == "e5":
        display_metrics("E5 deployment profiles", summary["profiles"])
    elif result.name == "ablation":
        display_metrics("Ablation", summary["rows"])
        console.print(f"Replay identity: {summary['replay_identity']}")
    elif result.name == "sensitivity":
        display_metrics("Threshold sensitivity", summary["rows"])
        flag = summary.get("relaxed_discrepancy")
        if flag and flag["flagged"]:
            console.print(
                f"[yellow]Relaxed screening BADR {flag['observed']:.3f} differs from "
                f"the reference {flag['reference']:.3f}[/yellow]"
            )


def display_checks(checks: list[AcceptanceCheck]) -> None:
    table = Table(title="Acceptance checks")
    table.add_column("Experiment", style="cyan")
    table.add_column("Check")
    table.add_column("Observed", justify="right")
    table.add_column("Expected")
    table.add_column("Result")
    for check in checks:
        observed = (
            f"{check.observed:.4f}" if isinstance(check.observed, float) else str(check.observed)
        )
        result = "[green]pass[/green]" if check.passed else "[red]FAIL[/red]"
        table.add_row(check.experiment, check.name, observed, check.expected, result)
    console.print(table)


def display_timings(timer: StageTimer) -> None:
    table = Table(title="Stage timings")
    table.add_column("Stage", style="cyan")
    table.add_column("Calls", justify="right")
    table.add_column("Total (ms)", justify="right")
    table.add_column("Mean (ms)", justify="right")
    for stage, values in timer.summary().items():
        table.add_row(
            stage,
            f"{values['calls']:.0f}",
            f"{values['total_ms']:.1f}",
            f"{values['mean_ms']:.3f}",
        )
    console.print(table)
