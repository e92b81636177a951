"""Evaluation measures: SPL, success rate, goal-distance statistics.

SPL for N episodes is mean(S_i * l_i / max(l_i, p_i)) where S_i is the
success indicator, l_i the shortest geodesic start-to-goal length and p_i
the executed path length: 1 for a shortest-path success, 0 for any
failure.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

# First edge equals the default success radius; the explicit interior
# edges are a documented choice, the trailing bin collects the overflow.
DEFAULT_HISTOGRAM_EDGES = (0.2, 0.5, 1.0, 2.0, 5.0, 10.0)


@dataclass(frozen=True)
class EpisodeResult:
    success: bool
    shortest_geodesic: float  # l_i, > 0
    path_length: float  # p_i, >= 0
    final_distance: float

    def __post_init__(self):
        if not (self.path_length >= 0.0):
            raise ValueError("path_length must be >= 0")
        if not (self.final_distance >= 0.0):
            raise ValueError("final_distance must be >= 0")


@dataclass(frozen=True)
class MetricsReport:
    spl: float
    success_rate: float
    avg_dist_from_goal: float
    n: int
    histogram: tuple  # ((low, high, count), ...), high may be inf

    def to_json(self) -> str:
        return json.dumps(
            {
                "spl": self.spl,
                "success_rate": self.success_rate,
                "avg_dist_from_goal": self.avg_dist_from_goal,
                "n": self.n,
                "histogram": [
                    {"low": low, "high": None if math.isinf(high) else high,
                     "count": count}
                    for (low, high, count) in self.histogram
                ],
            }
        )


def _check_results(results):
    results = list(results)
    for r in results:
        if not (r.shortest_geodesic > 0.0):
            raise ValueError("shortest_geodesic must be > 0 for evaluated episodes")
    return results


def spl(results) -> float:
    results = _check_results(results)
    if not results:
        raise ValueError("spl of an empty result set is undefined")
    total = 0.0
    for r in results:
        if r.success:
            total += r.shortest_geodesic / max(r.shortest_geodesic, r.path_length)
    return total / len(results)


def success_rate(results) -> float:
    results = list(results)
    if not results:
        raise ValueError("success_rate of an empty result set is undefined")
    return sum(1 for r in results if r.success) / len(results)


def avg_distance_from_goal(results) -> float:
    """Mean final distance over all episodes, successes included."""
    results = list(results)
    if not results:
        raise ValueError("avg_distance_from_goal of an empty result set is undefined")
    return sum(r.final_distance for r in results) / len(results)


def failure_histogram(results, bin_edges=DEFAULT_HISTOGRAM_EDGES):
    """Counts of unsuccessful episodes per final-distance bin.

    Bins are half-open [e_i, e_{i+1}); a leading [0, e_0) bin catches
    step-limit failures that ended inside the success radius without
    calling STOP, and a trailing [e_last, inf) bin the overflow, so counts
    always sum to the number of failures.
    """
    edges = list(bin_edges)
    if len(edges) < 1:
        raise ValueError("need at least one bin edge")
    if any(e2 <= e1 for e1, e2 in zip(edges, edges[1:])):
        raise ValueError("bin_edges must be strictly increasing")
    if edges[0] <= 0:
        raise ValueError("bin edges must be positive")
    bounds = [0.0] + edges + [math.inf]
    counts = [0] * (len(bounds) - 1)
    for r in results:
        if r.success:
            continue
        d = r.final_distance
        for i in range(len(counts)):
            if bounds[i] <= d < bounds[i + 1]:
                counts[i] += 1
                break
    return tuple(
        (bounds[i], bounds[i + 1], counts[i]) for i in range(len(counts))
    )


def compute_report(results, bin_edges=DEFAULT_HISTOGRAM_EDGES) -> MetricsReport:
    results = list(results)
    return MetricsReport(
        spl=spl(results),
        success_rate=success_rate(results),
        avg_dist_from_goal=avg_distance_from_goal(results),
        n=len(results),
        histogram=failure_histogram(results, bin_edges),
    )


def format_table(report: MetricsReport) -> str:
    """Aligned-column text table of the headline measures."""
    headers = ["SPL", "Success rate", "Avg. dist. from goal", "Episodes"]
    values = [
        f"{report.spl:.4f}",
        f"{report.success_rate:.4f}",
        f"{report.avg_dist_from_goal:.4f}",
        str(report.n),
    ]
    widths = [max(len(h), len(v)) for h, v in zip(headers, values)]
    line1 = "  ".join(h.ljust(w) for h, w in zip(headers, widths))
    line2 = "  ".join(v.ljust(w) for v, w in zip(values, widths))
    return line1 + "\n" + line2


def histogram_csv(report: MetricsReport) -> str:
    """CSV of the failure histogram: bin_low, bin_high, count."""
    lines = ["bin_low,bin_high,count"]
    for low, high, count in report.histogram:
        high_s = "inf" if math.isinf(high) else repr(high)
        lines.append(f"{low!r},{high_s},{count}")
    return "\n".join(lines) + "\n"
