"""Very weak agreement in one unidirectional round.

Processes 0 and 1 both hold input 1. Byzantine process 2 posts a 0 at
some point during the round. A process that reads it first commits
bottom; one that reads p2's log too early commits 1. No two correct
processes ever commit different values.

    python demos/vwba.py
"""

from collections import Counter

from unilab.scenario import parse_scenario, run_scenario

config = parse_scenario("protocol = vwba\nn = 3\nt = 1\njitter = 3\n"
                        "[process 0]\ninput = 1\n[process 1]\ninput = 1\n"
                        "[process 2]\nbehavior = append-script\nappends = 2:1:0\n")
outcomes = Counter()
for seed in range(100):
    trace, report = run_scenario(config, seed=seed, properties=["vwba-agreement"])
    assert report.status == "pass"
    decided = sorted((o.pid, o.value[1]) for o in trace.observations("decide"))
    outcomes[" ".join(f"p{p}={'bot' if d is None else d.decode()}" for p, d in decided)] += 1
for pattern, count in outcomes.most_common():
    print(f"{count:4d}  {pattern}")
