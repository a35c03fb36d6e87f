"""Executable checks of the greedy selection guarantees on small graphs.

All checks run against the exact live-edge oracle, never against Monte-Carlo
estimates: the guarantees hold for the expected influence, and a finite
sample can violate them without any bug being present.  Each check reports
the number of instances tested, the violation count, and the worst margin
(minimum slack; negative slack beyond the tolerance is a violation).

Graphs come from a seeded generator whose descriptor is embedded in the
report, so any violation can be replayed from the report alone.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .diffusion import ExactOracle
from .graph import DiffusionGraph
from .selection import brute_force_optimal, greedy_select

TOLERANCE = 1e-9

PROBABILITY_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)

CHECK_MONOTONE = "monotonicity"
CHECK_SUBMODULAR = "submodularity"
CHECK_STEP_BOUND = "step-upper-bound"
CHECK_RATIO = "greedy-ratio"


@dataclass
class CheckResult:
    name: str
    instances: int
    violations: int
    worst_margin: float

    def merge(self, other: "CheckResult") -> "CheckResult":
        return CheckResult(
            name=self.name,
            instances=self.instances + other.instances,
            violations=self.violations + other.violations,
            worst_margin=min(self.worst_margin, other.worst_margin),
        )


@dataclass
class TheoryReport:
    checks: list
    graphs: dict = field(default_factory=dict)  # check name -> descriptors

    @property
    def passed(self) -> bool:
        return all(c.violations == 0 for c in self.checks)

    def to_payload(self) -> dict:
        return {
            "checks": [
                {
                    "name": c.name,
                    "instances": c.instances,
                    "violations": c.violations,
                    "worst_margin": c.worst_margin,
                }
                for c in self.checks
            ],
            "graphs": self.graphs,
            "pass": self.passed,
        }

    def render_table(self) -> str:
        lines = [
            f"{'check':<18} {'instances':>10} {'violations':>10} {'worst margin':>14}"
        ]
        for c in self.checks:
            lines.append(
                f"{c.name:<18} {c.instances:>10} {c.violations:>10} "
                f"{c.worst_margin:>14.3e}"
            )
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines)


def greedy_ratio_bound(m: int) -> float:
    """The guaranteed greedy-to-optimal influence ratio, 1 - (1 - 1/m)^m."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return 1.0 - (1.0 - 1.0 / m) ** m


def random_admissible_graph(
    seed: int,
    n_range=(3, 8),
    max_out: int = 3,
    max_uncertain: int = 12,
    p_grid=PROBABILITY_GRID,
):
    """A seeded random graph admissible to the exact oracle, plus its
    replayable descriptor."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    edges = []
    for v in range(n):
        degree = int(rng.integers(0, min(max_out, n - 1) + 1))
        others = [u for u in range(n) if u != v]
        picks = rng.choice(len(others), size=degree, replace=False)
        for i in picks:
            edges.append([v, others[int(i)], float(rng.choice(p_grid))])
    uncertain = [i for i, (_, _, p) in enumerate(edges) if 0.0 < p < 1.0]
    while len(uncertain) > max_uncertain:
        j = uncertain.pop(int(rng.integers(len(uncertain))))
        edges[j][2] = float(rng.choice([0.0, 1.0]))
    descriptor = {"seed": seed, "n": n, "edges": [list(e) for e in edges]}
    return DiffusionGraph.from_edges(n, [tuple(e) for e in edges]), descriptor


def check_monotone(g: DiffusionGraph, tol: float = TOLERANCE) -> CheckResult:
    """Influence never decreases when a vertex is added.

    Re-adding a member changes nothing; adding a new vertex gains >= 0 and
    lifts the value to at least the new seed count |S| + 1.  (The gain itself
    is not bounded below by 1 in expectation: when S can already reach v with
    probability q, the gain can shrink to 1 - q.)
    """
    if g.n > 8:
        raise ValueError("monotonicity check limited to n <= 8")
    f = ExactOracle(g).all_subset_influences()
    instances = violations = 0
    worst = np.inf
    for mask in range(1 << g.n):
        size = mask.bit_count()
        for v in range(g.n):
            gain = f[mask | (1 << v)] - f[mask]
            if mask >> v & 1:
                slack = -abs(gain)
            else:
                slack = min(gain, f[mask | (1 << v)] - (size + 1))
            instances += 1
            worst = min(worst, slack)
            if slack < -tol:
                violations += 1
    return CheckResult(CHECK_MONOTONE, instances, violations, worst)


def check_submodular(g: DiffusionGraph, tol: float = TOLERANCE) -> CheckResult:
    """Diminishing returns: the gain of v on a subset dominates its gain on
    any superset."""
    if g.n > 6:
        raise ValueError("submodularity check limited to n <= 6")
    f = ExactOracle(g).all_subset_influences()
    instances = violations = 0
    worst = np.inf
    for big in range(1 << g.n):
        small = (big - 1) & big
        while True:
            for v in range(g.n):
                bit = 1 << v
                gain_small = f[small | bit] - f[small]
                gain_big = f[big | bit] - f[big]
                slack = gain_small - gain_big
                instances += 1
                worst = min(worst, slack)
                if slack < -tol:
                    violations += 1
            if small == 0:
                break
            small = (small - 1) & big
    return CheckResult(CHECK_SUBMODULAR, instances, violations, worst)


def _exact_trajectory(g: DiffusionGraph, m: int):
    """Greedy-step values f(S_0..S_m), per-step gains, and the optimum value."""
    result = greedy_select(g, m, mode="exact")
    values = [0.0]
    for gain in result.marginal_gains:
        values.append(values[-1] + gain)
    optimum = brute_force_optimal(g, m)
    best_value = ExactOracle(g).influence(optimum.selected)
    return values, result.marginal_gains, best_value


def check_step_upper_bound(
    g: DiffusionGraph, m: int, tol: float = TOLERANCE
) -> CheckResult:
    """At every greedy step, the optimum is capped by the current value plus
    m times the next marginal gain."""
    values, gains, best_value = _exact_trajectory(g, m)
    instances = violations = 0
    worst = np.inf
    for t in range(0, m - 1):
        slack = values[t] + m * gains[t] - best_value
        instances += 1
        worst = min(worst, slack)
        if slack < -tol:
            violations += 1
    if instances == 0:
        worst = 0.0
    return CheckResult(CHECK_STEP_BOUND, instances, violations, worst)


def check_greedy_ratio(
    g: DiffusionGraph, m: int, tol: float = TOLERANCE
) -> CheckResult:
    """Exact-oracle greedy achieves at least 1 - (1 - 1/m)^m of the optimum."""
    values, _, best_value = _exact_trajectory(g, m)
    ratio = values[m] / best_value
    slack = ratio - greedy_ratio_bound(m)
    return CheckResult(CHECK_RATIO, 1, int(slack < -tol), slack)


def run_verification(
    trials: int = 25, seed: int = 0, budgets=(2, 3), tol: float = TOLERANCE
) -> TheoryReport:
    """Sweep every check over seeded random graphs and merge the results."""
    checks = {}
    graphs = {}

    def record(result: CheckResult, name: str, descriptor: dict):
        checks[name] = result if name not in checks else checks[name].merge(result)
        graphs.setdefault(name, []).append(descriptor)

    for i in range(trials):
        g, d = random_admissible_graph(seed * 1_000_003 + i, n_range=(2, 7))
        record(check_monotone(g, tol), CHECK_MONOTONE, d)

        g, d = random_admissible_graph(
            (seed + 1) * 1_000_003 + i, n_range=(2, 5), max_uncertain=10
        )
        record(check_submodular(g, tol), CHECK_SUBMODULAR, d)

        g, d = random_admissible_graph((seed + 2) * 1_000_003 + i, n_range=(3, 7))
        for m in budgets:
            record(check_step_upper_bound(g, m, tol), CHECK_STEP_BOUND, d)

        g, d = random_admissible_graph((seed + 3) * 1_000_003 + i, n_range=(3, 8))
        for m in budgets:
            record(check_greedy_ratio(g, m, tol), CHECK_RATIO, d)

    ordered = [
        checks[name]
        for name in (CHECK_MONOTONE, CHECK_SUBMODULAR, CHECK_STEP_BOUND, CHECK_RATIO)
    ]
    # one descriptor per generated graph, deduplicated per check
    graphs = {
        name: [d for i, d in enumerate(ds) if d not in ds[:i]]
        for name, ds in graphs.items()
    }
    return TheoryReport(checks=ordered, graphs=graphs)


def save_report(report: TheoryReport, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_payload(), fh, indent=2)
        fh.write("\n")
