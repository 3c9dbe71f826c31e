"""
Across-seed summaries: mean, sample standard deviation and bootstrap intervals.
"""

from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from metrics.formulas import RATE_NAMES, MetricSet

BOOTSTRAP_RESAMPLES = 2000


@dataclass(frozen=True)
class Summary:
    mean: float | None
    # None for fewer than two values
    std: float | None
    n: int

    def format(self, scale: float = 100.0, digits: int = 1) -> str:
        if self.mean is None:
            return "—"
        if self.std is None:
            return f"{self.mean * scale:.{digits}f}"
        return f"{self.mean * scale:.{digits}f} ± {self.std * scale:.{digits}f}"

    def to_dict(self) -> dict[str, float | int | None]:
        return {"mean": self.mean, "std": self.std, "n": self.n}


def summarize_values(values: Sequence[float | None]) -> Summary:
    """Mean and sample std (n - 1) over the defined values."""
    present = np.array([v for v in values if v is not None], dtype=float)
    if present.size == 0:
        return Summary(mean=None, std=None, n=0)
    std = float(np.std(present, ddof=1)) if present.size >= 2 else None
    return Summary(mean=float(np.mean(present)), std=std, n=int(present.size))


def summarize(per_seed: Sequence[MetricSet]) -> dict[str, Summary]:
    """Summary of every rate across seeds."""
    return {name: summarize_values([m.rate(name) for m in per_seed]) for name in RATE_NAMES}


def bootstrap_ci(
    differences: Sequence[float],
    seed: int,
    resamples: int = BOOTSTRAP_RESAMPLES,
    level: float = 0.95,
) -> tuple[float, float] | None:
    """Percentile bootstrap interval for the mean of paired differences."""
    d = np.asarray(differences, dtype=float)
    if d.size < 2:
        return None
    rng = np.random.default_rng(seed)
    means = d[rng.integers(0, d.size, size=(resamples, d.size))].mean(axis=1)
    alpha = (1.0 - level) / 2
    low, high = np.quantile(means, [alpha, 1.0 - alpha])
    return float(low), float(high)


def paired_differences(
    a: Mapping[int, float | None], b: Mapping[int, float | None]
) -> list[float]:
    """a - b for every seed where both values are defined, in seed order."""
    differences = []
    for s in sorted(set(a) & set(b)):
        x, y = a[s], b[s]
        if x is not None and y is not None:
            differences.append(x - y)
    return differences
