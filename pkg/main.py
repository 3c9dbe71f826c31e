#!/usr/bin/env python3
import os
from collections.abc import Callable
from pathlib import Path

import typer
from dotenv import load_dotenv
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from core.enums import ProfileId
from harness.ablation import run_ablation
from harness.acceptance import run_checks
from harness.config import RESULTS_ENV, ConfigError, HarnessConfig, load_config
from harness.experiments import (
    ExperimentResult,
    run_e1,
    run_e2,
    run_e3,
    run_e4,
    run_e5,
    run_sensitivity,
    scorecard,
)
from harness.results import (
    display_checks,
    display_experiment,
    display_timings,
    write_config_echo,
    write_experiment,
    write_summary,
    write_table,
    write_timings,
)
from pipeline.upgrade_manager import StageTimer

load_dotenv()

console = Console()
app = typer.Typer(help="Capability governance - governed upgrade experiments")

Runner = Callable[[HarnessConfig, int], ExperimentResult]

EXPERIMENTS: dict[str, tuple[str, Runner]] = {
    "e1": ("Compatibility screening", run_e1),
    "e2": ("Upgrade strategies across rounds", run_e2),
    "e3": ("Sandbox versus shadow detection", run_e3),
    "e4": ("Rollback under runtime drift", run_e4),
    "e5": ("Governance across deployment profiles", run_e5),
    "ablation": ("Pipeline ablation", run_ablation),
    "sensitivity": ("Threshold sensitivity", run_sensitivity),
}


def parse_seeds(seeds: str | None) -> list[int] | None:
    if not seeds:
        return None
    try:
        return [int(s) for s in seeds.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"Seeds must be a comma-separated list of integers: {seeds}")


def resolve_config(
    config_path: Path | None, seeds: str | None, profile: ProfileId | None
) -> HarnessConfig:
    seed_list = parse_seeds(seeds)
    return load_config(
        config_path,
        seeds=seed_list,
        e2_seeds=seed_list,
        profile=profile.value if profile else None,
    )


def resolve_out(out: Path | None, config: HarnessConfig) -> Path:
    if out is not None:
        return out
    return Path(os.getenv(RESULTS_ENV) or config.output_dir)


def run_experiments(
    names: list[str],
    config_path: Path | None,
    seeds: str | None,
    out: Path | None,
    profile: ProfileId | None,
    check: bool,
    workers: int,
    timings: bool,
) -> None:
    """Run experiments, write the results directory and optionally gate on acceptance."""
    try:
        config = resolve_config(config_path, seeds, profile)
    except ConfigError as e:
        console.print(f"[red]{e}[/red]")
        raise typer.Exit(code=1)

    out_dir = resolve_out(out, config)
    write_config_echo(out_dir, config)

    results = []
    timer = StageTimer()
    for name in names:
        title, runner = EXPERIMENTS[name]
        console.print(Panel(f"[bold blue]{name.upper()}: {title}[/bold blue]"))
        try:
            result = runner(config, workers)
        except ConfigError as e:
            console.print(f"[red]{e}[/red]")
            raise typer.Exit(code=1)
        write_experiment(result, out_dir)
        display_experiment(result)
        timer.merge(result.timer)
        results.append(result)

    checks = run_checks({r.name: r.summary for r in results})
    write_summary(out_dir, results, checks)
    display_checks(checks)
    if timings:
        display_timings(timer)
        write_timings(out_dir, timer)
    console.print(f"[green]Results saved to {out_dir}[/green]")

    failed = [c for c in checks if not c.passed]
    if check and failed:
        console.print(f"[red]{len(failed)} acceptance check(s) failed[/red]")
        raise typer.Exit(code=2)


def _command(name: str) -> Callable[..., None]:
    def command(
        config: Path | None = typer.Option(None, help="Harness config (JSON or YAML)"),
        seeds: str | None = typer.Option(None, help="Comma-separated seeds"),
        out: Path | None = typer.Option(None, help="Results directory"),
        profile: ProfileId | None = typer.Option(None, help="Deployment profile"),
        check: bool = typer.Option(False, help="Exit with code 2 if an acceptance check fails"),
        workers: int = typer.Option(1, help="Worker processes for seeds"),
        timings: bool = typer.Option(False, help="Write per-stage timings"),
    ) -> None:
        names = list(EXPERIMENTS) if name == "all" else [name]
        run_experiments(names, config, seeds, out, profile, check, workers, timings)

    command.__doc__ = "Run every experiment." if name == "all" else f"Run {EXPERIMENTS[name][0].lower()}."
    return command


for _name in ("e1", "e2", "e3", "e4", "e5"):
    app.command(name=_name)(_command(_name))
app.command(name="ablate")(_command("ablation"))
app.command(name="sensitivity")(_command("sensitivity"))
app.command(name="all")(_command("all"))


@app.command(name="scorecard")
def scorecard_command(
    seed: int = typer.Option(42, help="Pool seed"),
    family: str = typer.Option("grasp", help="Capability family"),
    config: Path | None = typer.Option(None, help="Harness config (JSON or YAML)"),
    out: Path | None = typer.Option(None, help="Results directory"),
) -> None:
    """Print the per-candidate compatibility score table of one pool."""
    try:
        harness_config = load_config(config)
        df = scorecard(harness_config, seed, family)
    except ConfigError as e:
        console.print(f"[red]{e}[/red]")
        raise typer.Exit(code=1)

    table = Table(title=f"Per-candidate compatibility scores (seed={seed}, {family})")
    table.add_column("#", style="cyan")
    table.add_column("Type")
    for column in ("κI", "κP", "κB", "κR", "Composite"):
        table.add_column(column, justify="right")
    table.add_column("Decision")

    def fmt(value: float | None, digits: int = 2) -> str:
        return "—" if value is None else f"{value:.{digits}f}"

    for row in df.to_dict("records"):
        table.add_row(
            row["label"],
            row["kind"],
            fmt(row["kappa_interface"]),
            fmt(row["kappa_policy"]),
            fmt(row["kappa_behavioral"]),
            fmt(row["kappa_recovery"]),
            fmt(row["composite"], 3),
            row["decision"],
        )
    console.print(table)

    out_dir = resolve_out(out, harness_config)
    path = out_dir / f"scorecard_{family}_seed{seed}.csv"
    write_table(path, df)
    console.print(f"[green]Score table saved to {path}[/green]")


if __name__ == "__main__":
    app()
