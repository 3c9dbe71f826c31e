"""
Two-sided Wilcoxon signed-rank test for paired per-seed metrics.

Zero differences are discarded before ranking and tied absolute differences
share their average rank. Up to EXACT_LIMIT nonzero pairs the null
distribution is enumerated exactly; above it a normal approximation with
continuity correction is used.
"""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm, rankdata

EXACT_LIMIT = 20


@dataclass(frozen=True)
class WilcoxonResult:
    # smaller of the positive and negative rank sums
    statistic: float
    n_effective: int
    p_value: float
    exact: bool

    @property
    def degenerate(self) -> bool:
        """No nonzero difference was left to rank."""
        return self.n_effective == 0

    def to_dict(self) -> dict[str, float | int | bool]:
        return {
            "W": self.statistic,
            "n_effective": self.n_effective,
            "p_value": self.p_value,
            "exact": self.exact,
            "degenerate": self.degenerate,
        }


def signed_ranks(differences: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Average ranks of the nonzero absolute differences and their signs."""
    d = np.asarray(differences, dtype=float)
    d = d[d != 0]
    return rankdata(np.abs(d), method="average"), np.sign(d)


def exact_tail_count(doubled_ranks: Sequence[int], threshold: int) -> int:
    """
    Number of sign patterns whose doubled positive rank sum is at most threshold.

    Doubling keeps half-integer average ranks integral, so the enumeration is
    a subset-sum count over integers.
    """
    total = int(sum(doubled_ranks))
    counts = np.zeros(total + 1, dtype=object)
    counts[0] = 1
    for rank in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[rank:] = counts[: total + 1 - rank]
        counts = counts + shifted
    return int(sum(counts[: threshold + 1]))


def wilcoxon_signed_rank(
    x: Sequence[float], y: Sequence[float] | None = None
) -> WilcoxonResult:
    """
    Test paired samples x and y, or the differences x when y is omitted.

    Returns:
        W (the smaller rank sum), the number of nonzero pairs and the
        two-sided p-value; all-zero differences give p = 1 with n = 0
    """
    if y is not None:
        if len(x) != len(y):
            raise ValueError(f"Paired samples differ in length: {len(x)} vs {len(y)}")
        differences = [a - b for a, b in zip(x, y, strict=True)]
    else:
        differences = list(x)

    ranks, signs = signed_ranks(differences)
    n = len(ranks)
    if n == 0:
        return WilcoxonResult(statistic=0.0, n_effective=0, p_value=1.0, exact=True)

    w_plus = float(ranks[signs > 0].sum())
    w_minus = float(ranks[signs < 0].sum())
    statistic = min(w_plus, w_minus)

    if n <= EXACT_LIMIT:
        doubled = [int(round(2 * r)) for r in ranks]
        tail = exact_tail_count(doubled, int(round(2 * statistic)))
        p_value = min(1.0, 2 * tail / 2**n)
        return WilcoxonResult(statistic=statistic, n_effective=n, p_value=p_value, exact=True)

    mean = n * (n + 1) / 4
    _, tie_sizes = np.unique(ranks, return_counts=True)
    variance = n * (n + 1) * (2 * n + 1) / 24 - float((tie_sizes**3 - tie_sizes).sum()) / 48
    z = (abs(statistic - mean) - 0.5) / np.sqrt(variance)
    p_value = min(1.0, float(2 * norm.sf(max(z, 0.0))))
    return WilcoxonResult(statistic=statistic, n_effective=n, p_value=p_value, exact=False)
