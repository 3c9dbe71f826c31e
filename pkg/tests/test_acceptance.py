"""Tests for the acceptance checks on synthetic experiment summaries."""

import pytest

from harness.acceptance import (
    check_ablation,
    check_e1,
    check_e2,
    check_e3,
    check_e4,
    check_e5,
    check_sensitivity,
    run_checks,
)


def stat(mean, std=0.0):
    return {"mean": mean, "std": std, "n": 5}


def by_name(checks):
    return {c.name: c for c in checks}


@pytest.fixture
def e1_summary():
    return {
        "n_families": 3,
        "metrics": {"badr_screen": stat(0.75), "far": stat(0.0)},
        "blocked_per_seed": [
            {"seed": s, "interface": 6, "policy": 6, "behavioral": 6, "recovery": 0}
            for s in (42, 43)
        ],
    }


def test_e1_passes(e1_summary):
    checks = check_e1(e1_summary)
    assert all(c.passed for c in checks)
    assert by_name(checks)["blocked_counts"].observed == [(6, 6, 6, 0)]


def test_e1_badr_must_hold_on_every_seed(e1_summary):
    e1_summary["metrics"]["badr_screen"] = stat(0.75, std=0.05)
    assert not by_name(check_e1(e1_summary))["badr_screen"].passed


def test_e1_blocked_counts_per_seed(e1_summary):
    e1_summary["blocked_per_seed"][1]["recovery"] = 1
    checks = by_name(check_e1(e1_summary))
    assert not checks["blocked_counts"].passed
    assert checks["badr_screen"].passed


@pytest.fixture
def e2_summary():
    curves = [
        {"strategy": strategy, "round": r, "uar_mean": uar, "sr_mean": 0.72}
        for strategy, uar in (("static", 0.0), ("naive", 0.45), ("governed", 0.0))
        for r in range(1, 7)
    ]
    return {
        "seeds": list(range(42, 57)),
        "curves": curves,
        "governed_uar_max": 0.0,
        "tests": {"uar": {"W": 0.0, "n_effective": 15, "p_value": 6.1e-5}},
    }


def test_e2_passes(e2_summary):
    checks = by_name(check_e2(e2_summary))
    assert set(checks) == {"governed_uar", "naive_uar_round4", "sr_band", "wilcoxon_uar"}
    assert all(c.passed for c in checks.values())


def test_e2_failures(e2_summary):
    e2_summary["governed_uar_max"] = 0.04
    for curve in e2_summary["curves"]:
        if curve["strategy"] == "naive":
            curve["uar_mean"] = 0.30
    e2_summary["curves"][0]["sr_mean"] = 0.85
    e2_summary["tests"]["uar"]["p_value"] = 0.02
    checks = by_name(check_e2(e2_summary))
    assert not any(c.passed for c in checks.values())
    assert checks["sr_band"].observed == [0.72, 0.85]


def test_e2_wilcoxon_needs_fifteen_seeds(e2_summary):
    e2_summary["seeds"] = [42, 43, 44]
    assert "wilcoxon_uar" not in by_name(check_e2(e2_summary))


def test_e3_share_band():
    summary = {
        "shadow_only_share": stat(0.43),
        "per_seed": [{"retry_instability_sandbox": 0}, {"retry_instability_sandbox": 0}],
    }
    assert all(c.passed for c in check_e3(summary))
    summary["shadow_only_share"] = stat(0.30)
    summary["per_seed"][0]["retry_instability_sandbox"] = 1
    assert not any(c.passed for c in check_e3(summary))


def test_e4_rsr_and_control():
    summary = {"overall_rsr": stat(0.80), "control_triggers": 0}
    assert all(c.passed for c in check_e4(summary))
    checks = by_name(check_e4({"overall_rsr": stat(None), "control_triggers": 1}))
    assert not checks["overall_rsr"].passed
    assert not checks["control_triggers"].passed


def test_e5_benign_rejects_monotone():
    profiles = {
        p: {"badr_pipeline": stat(1.0), "uar": stat(0.0), "benign_reject_rate": stat(r)}
        for p, r in (("sim", 0.0), ("real", 0.1), ("human", 0.3))
    }
    summary = {"order": ["sim", "real", "human"], "profiles": profiles}
    assert all(c.passed for c in check_e5(summary))

    profiles["human"]["benign_reject_rate"] = stat(0.05)
    assert not by_name(check_e5(summary))["benign_reject_monotone"].passed


@pytest.fixture
def ablation_summary():
    def row(uar, badr=0.75, rsr=0.8):
        return {"uar": stat(uar), "badr_screen": stat(badr), "rsr": stat(rsr)}

    return {
        "rows": {
            "full": row(0.0),
            "-shadow": row(0.05),
            "-sandbox": row(0.10),
            "compat_only": row(0.15, badr=0.50),
            "naive": row(0.60, badr=0.0),
            "-rollback": row(0.0, rsr=0.0),
            "-recovery_compat": row(0.0, rsr=0.5),
        },
        "replay_identity": True,
    }


def test_ablation_passes(ablation_summary):
    assert all(c.passed for c in check_ablation(ablation_summary))


def test_ablation_uar_order(ablation_summary):
    ablation_summary["rows"]["-sandbox"]["uar"] = stat(0.01)
    checks = by_name(check_ablation(ablation_summary))
    assert not checks["uar_order"].passed
    assert checks["uar_order"].observed == [0.0, 0.05, 0.01, 0.15, 0.60]


def test_ablation_replay_identity(ablation_summary):
    ablation_summary["replay_identity"] = False
    assert not by_name(check_ablation(ablation_summary))["replay_identity"].passed


def test_sensitivity():
    def row(badr):
        return {"badr_screen": stat(badr), "far": stat(0.0), "uar": stat(0.0)}

    summary = {"rows": {"strict": row(1.0), "base": row(0.75), "relaxed": row(0.75)}}
    checks = by_name(check_sensitivity(summary))
    assert all(c.passed for c in checks.values())
    assert {"far[strict]", "uar[relaxed]"} <= set(checks)

    summary["rows"]["relaxed"] = row(0.875)
    assert not by_name(check_sensitivity(summary))["relaxed_badr"].passed


def test_run_checks_skips_unknown_experiments(e1_summary):
    checks = run_checks({"e1": e1_summary, "scratch": {}})
    assert {c.experiment for c in checks} == {"e1"}
    assert checks[0].to_dict()["experiment"] == "e1"
