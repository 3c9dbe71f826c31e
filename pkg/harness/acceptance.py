"""
Acceptance checks.

Every check is a pure function of an experiment summary, so a persisted
summary.json can be re-checked without re-running anything.
"""

from collections.abc import Callable
from dataclasses import asdict, dataclass
from typing import Any

EXACT = 1e-9


@dataclass(frozen=True)
class AcceptanceCheck:
    experiment: str
    name: str
    passed: bool
    observed: Any
    expected: str

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _mean(summary: dict[str, Any]) -> float | None:
    return summary["mean"]


def _exact(summary: dict[str, Any], value: float) -> bool:
    """Mean equals value and every seed agrees."""
    mean = summary["mean"]
    return mean is not None and abs(mean - value) <= EXACT and (summary["std"] or 0.0) <= EXACT


def check_e1(summary: dict[str, Any]) -> list[AcceptanceCheck]:
    metrics = summary["metrics"]
    expected_blocked = 2 * summary["n_families"]
    blocked = [
        (row["interface"], row["policy"], row["behavioral"], row["recovery"])
        for row in summary["blocked_per_seed"]
    ]
    target = (expected_blocked, expected_blocked, expected_blocked, 0)
    return [
        AcceptanceCheck("e1", "badr_screen", _exact(metrics["badr_screen"], 0.75), _mean(metrics["badr_screen"]), "0.75 on every seed"),
        AcceptanceCheck("e1", "far", _exact(metrics["far"], 0.0), _mean(metrics["far"]), "0.0 on every seed"),
        AcceptanceCheck("e1", "blocked_counts", all(b == target for b in blocked), sorted(set(blocked)), f"{target} on every seed"),
    ]


def check_e2(summary: dict[str, Any]) -> list[AcceptanceCheck]:
    curves = summary["curves"]
    checks = [
        AcceptanceCheck(
            "e2",
            "governed_uar",
            summary["governed_uar_max"] is not None and summary["governed_uar_max"] <= EXACT,
            summary["governed_uar_max"],
            "0.0 for every seed and round",
        ),
    ]
    naive_round4 = [c["uar_mean"] for c in curves if c["strategy"] == "naive" and c["round"] == 4]
    if naive_round4:
        checks.append(
            AcceptanceCheck("e2", "naive_uar_round4", naive_round4[0] >= 0.40, naive_round4[0], ">= 0.40")
        )
    sr = [c["sr_mean"] for c in curves]
    checks.append(
        AcceptanceCheck(
            "e2",
            "sr_band",
            bool(sr) and all(0.60 <= v <= 0.80 for v in sr),
            [min(sr), max(sr)] if sr else None,
            "within [0.60, 0.80] for every strategy and round",
        )
    )
    test = summary["tests"].get("uar")
    if test is not None and len(summary["seeds"]) >= 15:
        checks.append(
            AcceptanceCheck("e2", "wilcoxon_uar", test["p_value"] < 0.01, test["p_value"], "< 0.01")
        )
    return checks


def check_e3(summary: dict[str, Any]) -> list[AcceptanceCheck]:
    share = summary["shadow_only_share"]["mean"]
    retry = [row["retry_instability_sandbox"] for row in summary["per_seed"]]
    return [
        AcceptanceCheck("e3", "shadow_only_share", share is not None and abs(share - 0.40) <= 0.05, share, "0.40 +/- 0.05"),
        AcceptanceCheck("e3", "retry_instability_sandbox", all(r == 0 for r in retry), max(retry), "0 on every seed"),
    ]


def check_e4(summary: dict[str, Any]) -> list[AcceptanceCheck]:
    rsr = summary["overall_rsr"]["mean"]
    return [
        AcceptanceCheck("e4", "overall_rsr", rsr is not None and abs(rsr - 0.796) <= 0.10, rsr, "0.796 +/- 0.10"),
        AcceptanceCheck("e4", "control_triggers", summary["control_triggers"] == 0, summary["control_triggers"], "0"),
    ]


def check_e5(summary: dict[str, Any]) -> list[AcceptanceCheck]:
    profiles = summary["profiles"]
    checks = []
    for profile in summary["order"]:
        metrics = profiles[profile]
        checks.append(AcceptanceCheck("e5", f"badr_pipeline[{profile}]", _exact(metrics["badr_pipeline"], 1.0), _mean(metrics["badr_pipeline"]), "1.0"))
        checks.append(AcceptanceCheck("e5", f"uar[{profile}]", _exact(metrics["uar"], 0.0), _mean(metrics["uar"]), "0.0"))
    rejects = [profiles[p]["benign_reject_rate"]["mean"] or 0.0 for p in summary["order"]]
    checks.append(
        AcceptanceCheck(
            "e5",
            "benign_reject_monotone",
            all(a <= b + EXACT for a, b in zip(rejects, rejects[1:], strict=False)),
            rejects,
            "nondecreasing sim -> real -> human",
        )
    )
    return checks


def check_ablation(summary: dict[str, Any]) -> list[AcceptanceCheck]:
    rows = summary["rows"]

    def mean(variant: str, metric: str) -> float:
        value = rows[variant][metric]["mean"]
        return 0.0 if value is None else value

    uar = [mean(v, "uar") for v in ("full", "-shadow", "-sandbox", "compat_only", "naive")]
    ordered = uar[0] <= EXACT and all(a <= b + EXACT for a, b in zip(uar[:-2], uar[1:-1], strict=True)) and uar[-2] < uar[-1]
    return [
        AcceptanceCheck("ablation", "uar_order", ordered, uar, "full = 0 <= -shadow <= -sandbox <= compat_only < naive"),
        AcceptanceCheck("ablation", "badr_compat_only", _exact(rows["compat_only"]["badr_screen"], 0.50), mean("compat_only", "badr_screen"), "0.50"),
        AcceptanceCheck(
            "ablation",
            "badr_rollback",
            _exact(rows["-rollback"]["badr_screen"], 0.75) and _exact(rows["full"]["badr_screen"], 0.75),
            [mean("-rollback", "badr_screen"), mean("full", "badr_screen")],
            "-rollback = full = 0.75",
        ),
        AcceptanceCheck("ablation", "rsr_rollback", mean("-rollback", "rsr") < 0.10, mean("-rollback", "rsr"), "< 0.10"),
        AcceptanceCheck(
            "ablation",
            "rsr_recovery_compat",
            mean("-recovery_compat", "rsr") < mean("full", "rsr"),
            [mean("-recovery_compat", "rsr"), mean("full", "rsr")],
            "-recovery_compat < full",
        ),
        AcceptanceCheck("ablation", "replay_identity", bool(summary["replay_identity"]), summary["replay_identity"], "true"),
    ]


def check_sensitivity(summary: dict[str, Any]) -> list[AcceptanceCheck]:
    rows = summary["rows"]
    checks = []
    if "strict" in rows:
        checks.append(AcceptanceCheck("sensitivity", "strict_badr", _exact(rows["strict"]["badr_screen"], 1.0), _mean(rows["strict"]["badr_screen"]), "1.0"))
    if "base" in rows:
        checks.append(AcceptanceCheck("sensitivity", "base_badr", _exact(rows["base"]["badr_screen"], 0.75), _mean(rows["base"]["badr_screen"]), "0.75"))
    if "relaxed" in rows and "base" in rows:
        relaxed, base = _mean(rows["relaxed"]["badr_screen"]), _mean(rows["base"]["badr_screen"])
        checks.append(
            AcceptanceCheck(
                "sensitivity",
                "relaxed_badr",
                relaxed is not None and base is not None and relaxed <= base + EXACT,
                relaxed,
                "<= base",
            )
        )
    for label, row in rows.items():
        checks.append(AcceptanceCheck("sensitivity", f"far[{label}]", _exact(row["far"], 0.0), _mean(row["far"]), "0.0"))
        checks.append(AcceptanceCheck("sensitivity", f"uar[{label}]", _exact(row["uar"], 0.0), _mean(row["uar"]), "0.0"))
    return checks


CHECKS: dict[str, Callable[[dict[str, Any]], list[AcceptanceCheck]]] = {
    "e1": check_e1,
    "e2": check_e2,
    "e3": check_e3,
    "e4": check_e4,
    "e5": check_e5,
    "ablation": check_ablation,
    "sensitivity": check_sensitivity,
}


def run_checks(summaries: dict[str, dict[str, Any]]) -> list[AcceptanceCheck]:
    """Checks of every experiment present in the summaries."""
    return [check for name, summary in summaries.items() if name in CHECKS for check in CHECKS[name](summary)]
