"""
Pipeline ablation: the full governed run, naive upgrading, and six variants
obtained by replaying the governed run's evidence with one stage bypassed.

Monitoring and rollback act after activation, so their variants differ from
the full run only in how rollback trials recover.
"""

from typing import Any

from envsim.drift import make_scenario
from envsim.generator import generate_rollback_trials
from harness.config import HarnessConfig
from harness.experiments import (
    ExperimentResult,
    SeedResult,
    collect_tables,
    map_seeds,
    metric_row,
    policy_sets_for,
    run_metrics,
    strategy_run,
    summary_dict,
)
from metrics.formulas import MetricSet, RecoveryOutcome, replay_metrics, rsr_counts
from pipeline.evidence import DisabledStage, replay_counterfactual
from pipeline.reports import RollbackEvent
from pipeline.strategies import Strategy, TrialOutcome, run_rollback_trial

FULL = "full"
NAIVE = "naive"

# variant -> (stage bypassed in replay, recovery outcome, include degraded trials)
VARIANTS: dict[str, tuple[DisabledStage, RecoveryOutcome, bool]] = {
    "-shadow": (DisabledStage.SHADOW, RecoveryOutcome.MONITORED, False),
    "-recovery_compat": (DisabledStage.RECOVERY_COMPAT, RecoveryOutcome.MONITORED, True),
    "-online_mon": (DisabledStage.ONLINE_MON, RecoveryOutcome.LATE, False),
    "-rollback": (DisabledStage.ROLLBACK, RecoveryOutcome.FALLBACK_ONLY, False),
    "-sandbox": (DisabledStage.SANDBOX, RecoveryOutcome.MONITORED, False),
    "compat_only": (DisabledStage.COMPAT_ONLY, RecoveryOutcome.LATE, True),
}

ROW_ORDER = (
    FULL,
    "-shadow",
    "-recovery_compat",
    "-online_mon",
    "-rollback",
    "-sandbox",
    "compat_only",
    NAIVE,
)


def trial_events(outcomes: list[TrialOutcome], include_degraded: bool) -> list[RollbackEvent]:
    """
    Rollback events of the trials a variant is judged on.

    Degraded candidates only reach activation when recovery readiness is
    not checked.
    """
    return [
        o.event
        for o in outcomes
        if o.event is not None and (include_degraded or not o.degraded)
    ]


def ablation_seed(config: HarnessConfig, seed: int) -> SeedResult:
    result = SeedResult(seed)
    cal = config.generator
    profile = config.active_profile
    policy_sets = policy_sets_for(config)

    governed = strategy_run(
        config,
        Strategy.GOVERNED,
        profile,
        config.full_pool_rounds,
        seed,
        policy_sets,
        result.timer,
        record_evidence=True,
    )
    naive = strategy_run(
        config, Strategy.NAIVE, profile, config.full_pool_rounds, seed, policy_sets, result.timer
    )
    result.keep_run(f"ablation_governed_seed{seed}", governed.manager)
    result.keep_run(f"ablation_naive_seed{seed}", naive.manager)
    result.evidence[f"ablation_seed{seed}"] = governed.evidence

    trials = [
        run_rollback_trial(
            trial,
            make_scenario(trial.drift_kind, cal.drift_severity),
            profile,
            seed,
            policy_sets,
            max_windows=cal.max_trial_windows,
            monitor_policy=config.monitor,
            timer=result.timer,
        )
        for trial in generate_rollback_trials(
            config.families, seed, cal.trials_per_kind, cal.recovery_trial_share, cal
        )
    ]

    # the table reports screening-level BADR for every row
    rows: dict[str, MetricSet] = {
        FULL: run_metrics(governed).with_counts(rsr=rsr_counts(trial_events(trials, False))),
        NAIVE: run_metrics(naive),
    }
    for variant, (stage, outcome, include_degraded) in VARIANTS.items():
        decisions = replay_counterfactual(governed.evidence, profile, stage)
        rows[variant] = replay_metrics(
            governed.evidence,
            decisions,
            rsr=rsr_counts(trial_events(trials, include_degraded), outcome),
        )

    identity = replay_counterfactual(governed.evidence, profile, DisabledStage.NONE)
    mismatched = sum(identity[e.key].activated != e.activated for e in governed.evidence)
    result.add_rows(
        "ablation_replay",
        {"seed": seed, "candidates": len(governed.evidence), "mismatched": mismatched},
    )

    for variant in ROW_ORDER:
        result.metrics[variant] = rows[variant]
        result.add_rows(
            "ablation",
            metric_row(seed, variant, rows[variant], measured=variant in (FULL, NAIVE)),
        )
    return result


def run_ablation(config: HarnessConfig, workers: int = 1) -> ExperimentResult:
    results = map_seeds(ablation_seed, config, config.seeds, workers)
    rows: dict[str, Any] = {
        variant: summary_dict([r.metrics[variant] for r in results]) for variant in ROW_ORDER
    }
    summary = {
        "seeds": list(config.seeds),
        "recovery_trial_share": config.generator.recovery_trial_share,
        "rows": rows,
        "replay_identity": all(
            row["mismatched"] == 0 for r in results for row in r.rows["ablation_replay"]
        ),
    }
    return ExperimentResult("ablation", collect_tables(results), summary, results)
