"""The same partition schedule against two round implementations.

Rounds that finish after ``n - t`` reliable-broadcast messages let two
groups finish round 1 without hearing each other. Rounds built on
single-writer logs cannot.

    python demos/separation.py
"""

from unilab.rounds import check_unidirectional
from unilab.scenario import load_bundled, run_scenario

config = load_bundled("separation_scenario3")
for protocol in ("naive-rb-rounds", "uni-swmr"):
    trace, _ = run_scenario(config, protocol=protocol)
    heard = {o.pid: sorted(q for q, _ in o.value[3]) for o in trace.observations("round")}
    print(f"{protocol}:")
    for pid in (4, 5, 6):
        print(f"  p{pid} finished round 1 having heard {heard.get(pid)}")
    print(f"  pairs that never heard each other: {check_unidirectional(trace, 1) or 'none'}")
