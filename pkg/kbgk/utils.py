"""Utility functions for the experiment harness."""

import logging
import os
from typing import Any, Dict, List, Optional

logger = logging.getLogger(__name__)

THREADS_ENV = "KBGK_THREADS"


def worker_count(requested: Optional[int] = None, n_tasks: Optional[int] = None) -> int:
    """
    Number of worker processes: ``requested``, else the CPU count, capped by
    KBGK_THREADS when set and by the number of tasks.
    """
    workers = requested if requested and requested > 0 else (os.cpu_count() or 1)

    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            workers = min(workers, max(1, int(cap)))
        except ValueError:
            logger.warning(f"Ignoring non-integer {THREADS_ENV}={cap!r}")

    if n_tasks is not None:
        workers = min(workers, max(1, n_tasks))
    return workers


def format_summary(run_stats: List[Dict[str, Any]], failures: Dict[str, str]) -> str:
    """Text table of finished runs and failures, printed at the end of a batch."""
    lines = ["=" * 80, "RUN SUMMARY", "=" * 80]
    for stats in run_stats:
        lines.append(f"  {stats['name']}: {stats['steps']} steps, {stats['wall_clock']:.1f} s, "
                     f"mass drift {stats['mass_drift']:.2e}")
        if stats.get("dmax_solves"):
            lines.append(f"      discrete Maxwellian: {stats['dmax_solves']:,} solves, "
                         f"{stats['dmax_fallbacks']} fallbacks, max {stats['dmax_max_iterations']} iterations")
        for field_name, value in stats.get("l1_rel", {}).items():
            lines.append(f"      L1 rel error vs Euler ({field_name}): {value:.3e}")
    for name, error in failures.items():
        lines.append(f"  {name}: FAILED ({error})")
    lines.append("=" * 80)
    return "\n".join(lines)
