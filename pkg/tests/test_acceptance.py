"""Acceptance criteria, one test each. Every test records a single PASS/FAIL line."""

import random
import time
from pathlib import Path

from unilab.checkers import PASS
from unilab.explore import enumerate_schedules
from unilab.kernel import Context, DeliveryPolicy, SystemParams, new_sim
from unilab.rounds import RbRoundAdversary, check_unidirectional
from unilab.scenario import bundled_names, load_bundled, parse_scenario, run_scenario
from unilab.srb import SrbSenderAdversary
from unilab.trinc import Attestation, TrincProcess, attest_payload

GOLDEN = Path(__file__).parent / "golden"
CANONICAL = ("srb_correct_sender", "srb_equivocating_sender", "separation_scenario3",
             "uni_swmr_rounds", "vwba_basic")
SRB_PROPS = ("srb-validity", "srb-totality", "srb-sequencing", "srb-integrity",
             "srb-agreement", "srb-l1-agreement")
SRB_PROP_LINE = "properties = " + ", ".join(SRB_PROPS) + "\n"


def srb_text(n: int, case: str) -> str:
    t = (n - 1) // 2
    text = f"protocol = srb\nn = {n}\nt = {t}\njitter = 3\nsender = 0\n"
    if case == "correct":
        text += "[process 0]\ninput = a, b\n"
    elif case == "crash":
        text += "[process 0]\nbehavior = crash-sender\nvalues = a\n"
    elif case == "equivocate":
        text += "[process 0]\nbehavior = equivocate\nvalues = a, b\n"
    else:
        text += "[process 0]\ninput = a, b\n"
        for q in range(n - t, n):
            text += f"[process {q}]\nbehavior = mangle\n"
    return text


def test_c1_srb_property_suite(verdict):
    start = time.perf_counter()
    bad = []
    runs = 0
    for n in (3, 5, 7):
        for case in ("correct", "crash", "equivocate", "mangle"):
            config = parse_scenario(srb_text(n, case))
            for seed in range(1000):
                _, report = run_scenario(config, seed=seed, properties=SRB_PROPS)
                runs += 1
                if report.status != PASS:
                    bad.append((n, case, seed, report.violated() or report.status))
    elapsed = time.perf_counter() - start
    verdict("C1 SRB property suite", not bad and elapsed < 60,
            f"{runs} runs, {len(bad)} not passing {bad[:3]}, {elapsed:.1f}s (budget 60s)")


def test_c2_exhaustive_srb(verdict):
    alpha = parse_scenario("protocol = srb\nn = 3\nt = 1\nsender = 0\n" + SRB_PROP_LINE
                           + "[process 0]\nbehavior = alphabet\nvalues = a\n")
    byz_sender = enumerate_schedules(alpha, 400_000)
    honest = parse_scenario("protocol = srb\nn = 3\nt = 1\nsender = 0\n" + SRB_PROP_LINE
                            + "[process 0]\ninput = a\n[process 2]\nbehavior = silent\n")
    correct = enumerate_schedules(honest, 100_000)
    equiv = enumerate_schedules(load_bundled("srb_equivocating_sender"), 100_000)
    got = [(r.variants, r.states, r.terminals, r.schedules) for r in (byz_sender, correct, equiv)]
    want = [(27, 191_992, 95, 954_189_396_352_600),
            (1, 1988, 3, 50_087_535_418),
            (1, 2060, 1, 10_635_866)]
    clean = all(r.report.status == PASS for r in (byz_sender, correct, equiv))
    verdict("C2 exhaustive SRB n=3", clean and got == want,
            f"(variants, states, terminals, schedules) = {got}; all pass: {clean}")


def test_c3_swmr_unidirectional(verdict):
    two = "protocol = uni-swmr\nn = 2\nt = 0\nproperties = unidirectional, no-phantom\n"
    cases = {
        "n=2": two,
        "n=2 two rounds": two + "[process 0]\ninput = a, b\n[process 1]\ninput = c, d\n",
        "n=3": two.replace("n = 2", "n = 3"),
    }
    want = {"n=2": (29, 3, 18), "n=2 two rounds": (81, 7, 104), "n=3": (5654, 25, 7_523_328)}
    got = {}
    clean = True
    for name, text in cases.items():
        r = enumerate_schedules(parse_scenario(text), 100_000)
        got[name] = (r.states, r.terminals, r.schedules)
        clean &= r.report.status == PASS
    random_bad = 0
    config = parse_scenario("protocol = uni-swmr\nn = 7\nt = 0\njitter = 5\n"
                            + "".join(f"[process {p}]\ninput = a{p}, b{p}\n" for p in range(7)))
    for seed in range(1000):
        trace, _ = run_scenario(config, seed=seed, properties=())
        random_bad += any(check_unidirectional(trace, r) for r in (1, 2))
    ok = clean and got == want and random_bad == 0
    verdict("C3 SWMR unidirectionality", ok,
            f"exhaustive (states, terminals, schedules) {got}; n=7 x 1000 seeds: "
            f"{random_bad} runs with a violating pair")


def test_c4_rb_f1_cross_product(verdict):
    runs = violations = finishes = 0
    behaviors = ("silent",) + RbRoundAdversary.MODES
    for n in (3, 4, 5):
        for byz in range(n):
            correct = [p for p in range(n) if p != byz]
            links = [(a, b) for a in correct for b in correct if a < b]
            for a, b in links:
                for behavior in behaviors:
                    for seed in range(3):
                        text = (f"protocol = uni-rb-f1\nn = {n}\nt = 1\njitter = 2\n"
                                f"horizon = 5000\nproperties = unidirectional, no-phantom\n"
                                f"[process {byz}]\nbehavior = {behavior}\n"
                                f"[link {a} {b}]\naction = hold\nboth = yes\n")
                        trace, report = run_scenario(parse_scenario(text), seed=seed)
                        runs += 1
                        violations += report.status == "violated"
                        finishes += len(trace.observations("round"))
    verdict("C4 RB-f1 single fault", violations == 0 and finishes > 0,
            f"{runs} runs over n, faulty process, held link, behavior and seed; "
            f"{violations} violations; {finishes} phase-2 finishes checked")


def test_c5_separation(verdict):
    config = load_bundled("separation_scenario3")
    naive, _ = run_scenario(config)
    pairs = check_unidirectional(naive, 1)
    c1, c2 = {4}, {5, 6}
    swmr, _ = run_scenario(config, protocol="uni-swmr")
    ok = sorted(pairs) == sorted((p, q) for p in c1 for q in c2) and not check_unidirectional(swmr, 1)
    verdict("C5 separation", ok,
            f"naive-rb-rounds pairs {pairs} (C1xC2 = {sorted((p, q) for p in c1 for q in c2)}); "
            f"uni-swmr pairs {check_unidirectional(swmr, 1)}")


def _trinc_sim(n, t, scripts, seed=0, jitter=0, behaviors=None):
    return new_sim(SystemParams(n, t), DeliveryPolicy(seed=seed, jitter=jitter), behaviors,
                   lambda p: TrincProcess(p, n, t, scripts.get(p, ())))


def test_c6_trinc(verdict):
    rng = random.Random(6)
    mono_bad = 0
    for _ in range(1000):
        sim = _trinc_sim(3, 1, {})
        proc, last = sim.procs[0], 0
        for _ in range(rng.randint(1, 10)):
            c = rng.randint(-3, 12)
            got = proc.attest(Context(sim, 0), c, bytes([rng.randrange(256)]))
            mono_bad += (got is None) != (c <= last)
            last = max(last, c)

    live_bad = 0
    issued = {}
    sims = []
    for seed in range(100):
        scripts = {p: [(rng.randint(0, 6), b"m%d" % rng.randrange(4))
                       for _ in range(rng.randint(1, 3))] for p in range(3)}
        values = [attest_payload(1, b"x"), attest_payload(1, b"y")]
        byz = {3: SrbSenderAdversary(3, 4, "equivocate", seed, values)} if seed % 2 else None
        sim = _trinc_sim(4, 1, scripts, seed, 3, byz)
        trace = sim.run_until_quiescent()
        live_bad += trace.held > 0 or trace.horizon_exceeded
        correct = [p for p in range(4) if p not in sim.byzantine]
        for p in correct:
            for a in sim.procs[p].issued:
                issued.setdefault(seed, set()).add((p, a))
                live_bad += not all(sim.procs[v].check_attestation(a, p) for v in correct)
        sims.append((sim, correct))

    forged_bad = 0
    for i in range(1000):
        seed = i % len(sims)
        sim, correct = sims[seed]
        q = rng.choice(correct)
        a = Attestation(rng.randint(0, 5), rng.randint(-2, 8), b"m%d" % rng.randrange(8))
        if (q, a) in issued.get(seed, ()):
            a = Attestation(a.k, a.c, a.m + b"-forged")
        forged_bad += any(sim.procs[v].check_attestation(a, q) for v in correct)

    attested = sum(len(v) for v in issued.values())
    verdict("C6 TrInc", mono_bad == 0 and live_bad == 0 and forged_bad == 0 and attested > 0,
            f"monotonicity mismatches {mono_bad}/1000 sequences; liveness failures {live_bad} "
            f"over {attested} attestations; fabricated accepted {forged_bad}/1000")


def test_c7_vwba(verdict):
    invalid = 0
    for n in range(1, 8):
        config = parse_scenario(f"protocol = vwba\nn = {n}\nt = 0\njitter = 4\n"
                                "properties = vwba-validity, vwba-liveness\n")
        for seed in range(100):
            _, report = run_scenario(config, seed=seed)
            invalid += report.status != PASS
    unanimous = enumerate_schedules(parse_scenario(
        "protocol = vwba\nn = 3\nt = 0\nproperties = vwba-validity, vwba-liveness\n"), 100_000)
    alpha = enumerate_schedules(parse_scenario(
        "protocol = vwba\nn = 3\nt = 1\nproperties = vwba-agreement, unidirectional, no-phantom\n"
        "[process 0]\ninput = 0\n[process 1]\ninput = 1\n[process 2]\nbehavior = alphabet\n"),
        200_000)
    got = (alpha.variants, alpha.states, alpha.terminals, alpha.schedules)
    ok = (invalid == 0 and unanimous.report.status == PASS and alpha.report.status == PASS
          and got == (13, 61_731, 185, 374_114_161))
    verdict("C7 VWBA", ok,
            f"validity failures {invalid}/700 random + exhaustive unanimous "
            f"{unanimous.report.status} ({unanimous.states} states); alphabet agreement "
            f"{alpha.report.status} (variants, states, terminals, schedules) = {got}")


def test_c8_determinism(verdict):
    unstable = []
    for name in bundled_names():
        config = load_bundled(name)
        first, _ = run_scenario(config)
        second, _ = run_scenario(config)
        if first.dumps() != second.dumps():
            unstable.append(name)
    golden_bad = []
    for name in CANONICAL:
        trace, _ = run_scenario(load_bundled(name))
        if trace.dumps() != (GOLDEN / f"{name}.trace").read_text(encoding="utf-8"):
            golden_bad.append(name)
    verdict("C8 determinism", not unstable and not golden_bad,
            f"{len(bundled_names())} bundled scenarios, unstable {unstable}; "
            f"{len(CANONICAL)} goldens, mismatched {golden_bad}")
