"""
Metric formulas and across-seed summaries.
"""

import pytest

from core.enums import TaskFamily, TraceContext
from core.telemetry import TraceRecord
from metrics.formulas import MetricSet, compute_metrics, recovery_latency
from metrics.summary import bootstrap_ci, paired_differences, summarize, summarize_values
from registry.audit import AuditEvent, AuditKind

FAULTY_BLOCKED = ("grasp", "1.7.0")
FAULTY_ADMITTED = ("grasp", "1.13.0")
BENIGN = ("grasp", "1.1.0")


def compat_event(seq: int, key: tuple[str, str], recommendation: str) -> AuditEvent:
    return AuditEvent(
        sequence=seq,
        event_kind=AuditKind.COMPAT_EVALUATED,
        family_id=key[0],
        version_id=key[1],
        round=seq,
        payload={"report": {"recommendation": recommendation}},
    )


def activation_event(seq: int, key: tuple[str, str]) -> AuditEvent:
    return AuditEvent(
        sequence=seq,
        event_kind=AuditKind.ACTIVATION_DECIDED,
        family_id=key[0],
        version_id=key[1],
        round=seq,
        transition="activate",
        to_state="active",
    )


def live(version: str, success: bool = True, unsafe: bool = False, violation: bool = False):
    return (
        1,
        "grasp",
        TraceRecord(
            capability_version=version,
            context=TraceContext.LIVE,
            task_family=TaskFamily.GRASP,
            success=success,
            duration=10.0,
            retry_count=0,
            policy_hits=int(violation),
            anomaly_flags=int(unsafe),
            recovery_triggered=True,
            unsafe_continuation=unsafe,
            timestamp=0,
        ),
    )


@pytest.fixture
def metrics() -> MetricSet:
    events = [
        compat_event(1, FAULTY_BLOCKED, "reject"),
        compat_event(2, BENIGN, "activate"),
        activation_event(3, BENIGN),
        compat_event(4, FAULTY_ADMITTED, "shadow"),
        activation_event(5, FAULTY_ADMITTED),
    ]
    traces = [
        live("1.1.0"),
        live("1.1.0", violation=True),
        live("1.13.0", success=False, unsafe=True),
        live("1.13.0"),
    ]
    truth = {FAULTY_BLOCKED: True, FAULTY_ADMITTED: True, BENIGN: False}
    return compute_metrics(events, traces, truth)


def test_counts(metrics: MetricSet):
    assert metrics.counts["badr_screen"] == (1, 2)
    assert metrics.counts["badr_pipeline"] == (1, 2)
    assert metrics.counts["far"] == (1, 2)
    assert metrics.counts["uar"] == (1, 2)
    assert metrics.counts["sr"] == (3, 4)
    assert metrics.counts["pvr"] == (2, 4)
    assert metrics.counts["benign_reject_rate"] == (0, 1)


def test_undefined_rates_stay_undefined(metrics: MetricSet):
    assert metrics.counts["rsr"] == (0, 0)
    assert metrics.rsr is None
    assert metrics.srdr is None
    assert metrics.badr_screen == 0.5


def test_metric_set_validation():
    with pytest.raises(ValueError, match="Unknown metric"):
        MetricSet({"latency": (1, 2)})
    with pytest.raises(ValueError):
        MetricSet({"far": (3, 2)})


def test_metric_set_dict_round_trip(metrics: MetricSet):
    assert MetricSet.from_dict(metrics.to_dict()) == metrics


def test_summarize_values():
    summary = summarize_values([0.5, None, 1.0])
    assert summary.mean == pytest.approx(0.75)
    assert summary.std == pytest.approx(0.353553, abs=1e-6)
    assert summary.n == 2
    assert summarize_values([0.4]).std is None
    assert summarize_values([None]).mean is None
    assert summarize_values([]).format() == "—"


def test_summarize_across_seeds():
    per_seed = [MetricSet({"far": (0, 8)}), MetricSet({"far": (1, 8)})]
    summary = summarize(per_seed)
    assert summary["far"].mean == pytest.approx(1 / 16)
    assert summary["uar"].mean is None


def test_bootstrap_ci():
    assert bootstrap_ci([0.3], seed=1) is None
    assert bootstrap_ci([0.2] * 5, seed=1) == pytest.approx((0.2, 0.2))
    low, high = bootstrap_ci([0.1, 0.2, 0.3, 0.4], seed=7)
    assert 0.1 <= low <= high <= 0.4
    assert bootstrap_ci([0.1, 0.2, 0.3, 0.4], seed=7) == (low, high)


def test_paired_differences_skip_undefined():
    a = {1: 0.5, 2: None, 3: 0.2}
    b = {1: 0.1, 2: 0.3, 4: 0.0}
    assert paired_differences(a, b) == [pytest.approx(0.4)]


def test_recovery_latency_without_rollbacks():
    assert recovery_latency([]) is None
