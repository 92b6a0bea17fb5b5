"""Trusted counters built on sequenced broadcast.

Process 0 attests counter 1 twice (the second is refused) and then jumps
to 5. Every correct process ends up able to verify exactly what was issued.

    python demos/trinc_counters.py
"""

from unilab.scenario import load_bundled, run_scenario

trace, report = run_scenario(load_bundled("trinc_basic"))
for obs in trace.observations():
    if obs.action == "attest":
        k, c, m = obs.value
        print(f"p{obs.pid} attests c={c} m={m.decode()!r} as broadcast #{k}")
    elif obs.action == "attest-null":
        c, m = obs.value
        print(f"p{obs.pid} refused c={c} m={m.decode()!r}: counter must grow")
stores = trace.observations("store")
print(f"{len(stores)} attestations stored across verifiers")
print("\n".join(report.lines()))
