"""A Byzantine sender signs two values for index 1 and splits them between peers.

Each seed picks a different split and delivery timing. Correct processes
either all deliver the same value or deliver nothing. They never split.

    python demos/equivocation.py
"""

from collections import Counter

from unilab.scenario import parse_scenario, run_scenario

config = parse_scenario("protocol = srb\nn = 4\nt = 1\njitter = 3\n"
                        "[process 0]\nbehavior = equivocate\nvalues = a, b\n")
outcomes = Counter()
for seed in range(200):
    trace, report = run_scenario(config, seed=seed)
    assert report.status == "pass", report.lines()
    delivered = {o.pid: o.value[2].decode() for o in trace.observations("deliver")}
    outcomes[tuple(sorted(delivered.items()))] += 1

print("what the correct processes 1..3 delivered for index 1, over 200 seeds:")
for pattern, count in outcomes.most_common():
    shown = ", ".join(f"p{p}={m}" for p, m in pattern) or "nothing (conflict detected)"
    print(f"  {count:4d}  {shown}")
