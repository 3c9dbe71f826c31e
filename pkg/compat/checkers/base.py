"""
Base classes for compatibility checkers.
"""

from abc import ABC, abstractmethod
from enum import StrEnum

from core.profiles import DeploymentProfile


class BaseChecker(ABC):
    """Base class for the four compatibility dimensions."""

    def __init__(self, weight: float):
        self.weight = weight
        # number of times the checker ran; fail-fast ordering is asserted on it
        self.calls = 0

    @property
    @abstractmethod
    def name(self) -> str:
        """Return the dimension name."""
        pass

    @property
    @abstractmethod
    def description(self) -> str:
        """Return a description of what this checker measures."""
        pass

    @abstractmethod
    def categorize(self, score: float, profile: DeploymentProfile) -> StrEnum:
        """
        Map a score onto this dimension's categories.

        Args:
            score: Compatibility score in [0, 1]
            profile: Deployment profile supplying thresholds and margin

        Returns:
            The dimension category
        """
        pass


class StaticChecker(BaseChecker):
    """Checker over manifests alone; an incompatible outcome stops evaluation."""

    @abstractmethod
    def is_critical_failure(self, category: StrEnum) -> bool:
        """
        Check if this outcome ends the evaluation.

        Returns:
            True if no further dimension should be evaluated
        """
        pass


class DynamicChecker(BaseChecker):
    """Checker that needs behavioral or recovery evidence."""

    pass


def banded(score: float, threshold: float, margin: float) -> int:
    """0 below threshold, 1 within [threshold, threshold + margin), 2 above."""
    if score < threshold:
        return 0
    if score < threshold + margin:
        return 1
    return 2
