"""
Health checks on the distribution field between time steps.

Issues are tagged with a severity prefix:
- [CRITICAL] the field is unusable (non-finite values); the run must stop
- [WARNING] reconstruction produced negativity beyond the tolerated level
"""

import logging
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .constants import NEGATIVITY_THRESHOLD

logger = logging.getLogger(__name__)


class FieldMonitor:
    """Validates distribution fields and keeps running counters for the end-of-run report."""

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        """
        Args:
            config: optional overrides; ``negativity_threshold`` is the tolerated
                |min f| relative to max f
        """
        self.config = config or {}
        self.negativity_threshold = float(self.config.get("negativity_threshold", NEGATIVITY_THRESHOLD))
        self.validation_stats = {
            "total_checked": 0,
            "passed": 0,
            "failed": 0,
            "negative_steps": 0,
            "worst_negativity": 0.0,
            "issues_by_type": {},
        }

    def check(self, f: np.ndarray, step_index: int, t: float) -> Tuple[bool, List[str]]:
        """
        Check one field.

        Returns:
            (is_usable, list_of_issues); only CRITICAL issues make the field unusable.
        """
        self.validation_stats["total_checked"] += 1
        issues = []

        finite = np.isfinite(f)
        if not finite.all():
            bad = np.argwhere(~finite)[0]
            issues.append(f"[CRITICAL] non-finite value at point {bad[0]}, velocity node {tuple(bad[1:])} "
                          f"(step {step_index}, t={t:.6g})")
        else:
            f_min, f_max = float(f.min()), float(f.max())
            if f_min < 0:
                self.validation_stats["negative_steps"] += 1
                relative = -f_min / f_max if f_max > 0 else np.inf
                self.validation_stats["worst_negativity"] = max(self.validation_stats["worst_negativity"], relative)
                if relative > self.negativity_threshold:
                    issues.append(f"[WARNING] min f = {f_min:.3e} is {relative:.2e} of max f "
                                  f"(step {step_index}, t={t:.6g})")

        is_usable = not any(issue.startswith("[CRITICAL]") for issue in issues)
        if is_usable:
            self.validation_stats["passed"] += 1
        else:
            self.validation_stats["failed"] += 1

        for issue in issues:
            issue_type = issue.split("]")[0] + "]"
            self.validation_stats["issues_by_type"][issue_type] = \
                self.validation_stats["issues_by_type"].get(issue_type, 0) + 1
            if issue_type == "[WARNING]":
                logger.debug(issue)

        return is_usable, issues

    def get_report(self) -> str:
        """Generate a human-readable report of all checks so far."""
        stats = self.validation_stats
        report = []
        report.append("=== Field Monitor Report ===")
        report.append(f"Steps checked: {stats['total_checked']}")
        report.append(f"Usable: {stats['passed']}  Unusable: {stats['failed']}")
        report.append(f"Steps with negative values: {stats['negative_steps']}")
        report.append(f"Worst negativity (|min f| / max f): {stats['worst_negativity']:.3e}")

        if stats["issues_by_type"]:
            report.append("\nIssues by type:")
            for issue_type in ("[CRITICAL]", "[WARNING]"):
                count = stats["issues_by_type"].get(issue_type, 0)
                if count > 0:
                    report.append(f"  {issue_type}: {count}")

        return "\n".join(report)
