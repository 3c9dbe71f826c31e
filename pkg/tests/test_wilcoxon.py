"""
Wilcoxon signed-rank tests against a brute-force sign-flip enumeration.
"""

import itertools

import numpy as np
import pytest
from scipy.stats import rankdata

from metrics.wilcoxon import exact_tail_count, wilcoxon_signed_rank


def brute_force_p(differences: list[float]) -> float:
    d = [x for x in differences if x != 0]
    if not d:
        return 1.0
    ranks = rankdata(np.abs(d))
    w_plus = sum(r for r, x in zip(ranks, d, strict=True) if x > 0)
    w_minus = sum(r for r, x in zip(ranks, d, strict=True) if x < 0)
    observed = min(w_plus, w_minus)
    count = sum(
        1
        for signs in itertools.product((False, True), repeat=len(d))
        if sum(r for r, s in zip(ranks, signs, strict=True) if s) <= observed + 1e-9
    )
    return min(1.0, 2 * count / 2 ** len(d))


def test_exact_path_matches_enumeration():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        n = int(rng.integers(1, 13))
        differences = rng.integers(-3, 4, size=n).astype(float).tolist()
        result = wilcoxon_signed_rank(differences)
        assert result.exact
        assert result.p_value == brute_force_p(differences), differences


def test_ties_share_average_rank():
    result = wilcoxon_signed_rank([1.0, 1.0, -2.0, 3.0])
    assert result.statistic == pytest.approx(3.0)
    assert result.n_effective == 4
    assert result.p_value == pytest.approx(brute_force_p([1.0, 1.0, -2.0, 3.0]))


def test_zero_differences_are_dropped():
    x = [0.5] * 15
    y = [0.5] * 6 + [0.5 - 0.01 * i for i in range(1, 10)]
    result = wilcoxon_signed_rank(x, y)
    assert result.n_effective == 9
    assert result.statistic == 0.0
    assert result.p_value == pytest.approx(2 / 512)


def test_all_zero_differences():
    result = wilcoxon_signed_rank([0.2, 0.4], [0.2, 0.4])
    assert result.degenerate
    assert result.p_value == 1.0
    assert result.to_dict()["n_effective"] == 0


def test_normal_approximation_above_exact_limit():
    result = wilcoxon_signed_rank([float(i) for i in range(1, 26)])
    assert not result.exact
    assert result.n_effective == 25
    assert result.statistic == 0.0
    assert result.p_value < 1e-4


def test_paired_lengths_must_match():
    with pytest.raises(ValueError):
        wilcoxon_signed_rank([1.0, 2.0], [1.0])


def test_tail_count_of_distinct_ranks():
    # doubled ranks 2, 4, 6: subsets with doubled sum <= 4 are {}, {2}, {4}
    assert exact_tail_count([2, 4, 6], 4) == 3
    assert exact_tail_count([2, 4, 6], 12) == 8
