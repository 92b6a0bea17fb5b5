"""Exhaustive interleavings for log-based rounds.

Every reachable state of two and three processes running one round is
visited and checked for unidirectionality.

    python demos/enumerate_rounds.py
"""

from unilab.explore import enumerate_schedules
from unilab.scenario import parse_scenario

for n in (2, 3):
    config = parse_scenario(f"protocol = uni-swmr\nn = {n}\nt = 0\n"
                            "properties = unidirectional, no-phantom\n")
    r = enumerate_schedules(config, 100_000)
    print(f"n={n}: {r.states} states, {r.terminals} terminal, {r.schedules} schedules, "
          f"verdict {r.report.status}")
