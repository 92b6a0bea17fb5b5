import pytest

from unilab.errors import ParseError, SemanticError
from unilab.kernel import DelayUntil, HoldPastHorizon
from unilab.scenario import (alphabet, bundled_names, concretize, expand_behaviors, load,
                             load_bundled, parse_scenario, run_scenario)

BASE = "protocol = srb\nn = 4\nt = 1\n"


def test_bundled_srb_correct_sender():
    config = load_bundled("srb_correct_sender")
    assert (config.params.n, config.params.t) == (4, 1)
    assert config.protocol == "srb"


def test_separation_partitions():
    config = load_bundled("separation_scenario3")
    assert config.protocol == "naive-rb-rounds"
    assert (config.params.n, config.params.t) == (7, 3)
    holds = [(l.src, l.dst) for l in config.links if isinstance(l.action, HoldPastHorizon)]
    assert (frozenset({4}), frozenset({0, 1, 2, 3, 5, 6})) in holds
    assert (frozenset({5, 6}), frozenset({0, 1, 2, 3, 4})) in holds


def test_full_syntax():
    text = BASE + """
seed = 7
horizon = 900
jitter = 2
properties = srb-validity, srb-agreement

[process 0]
input = hello, hex:00ff

[process 3]
behavior = equivocate
values = a, b
targets = 1, 2

[link 1,2 *]
action = delay 40
both = yes
kinds = message
from = 3
until = 90
"""
    config = parse_scenario(text)
    assert config.seed == 7 and config.horizon == 900 and config.jitter == 2
    assert config.processes[0].inputs == [b"hello", b"\x00\xff"]
    assert config.byzantine == {3: "equivocate"}
    link = config.links[0]
    assert link.src == frozenset({1, 2}) and link.dst is None
    assert link.action == DelayUntil(40) and link.both
    assert (link.start, link.stop) == (3, 90)
    assert len(config.policy().rules) == 2


@pytest.mark.parametrize("text,line,column", [
    (BASE + "oops\n", 4, 1),
    (BASE + "n = 5\n", 4, 1),
    (BASE + "seed = x\n", 4, 8),
    (BASE + "[process x]\n", 4, 2),
    (BASE + "[proc 1]\n", 4, 1),
    (BASE + "[link 1 2]\naction = fly\n", 5, 10),
    (BASE + "color = red\n", 4, 1),
    (BASE + "[process 1]\nflavor = x\n", 5, 1),
    (BASE + "[link 1]\naction = hold\n", 4, 2),
    ("protocol = srb\nn = -2\nt = 0\n", 2, 5),
])
def test_parse_errors_carry_position(text, line, column):
    with pytest.raises(ParseError) as info:
        parse_scenario(text)
    assert (info.value.line, info.value.column) == (line, column)
    assert f"line {line}, column {column}" in str(info.value)


@pytest.mark.parametrize("text", [
    "protocol = srb\nn = 3\nt = 2\n",
    "protocol = srb\nn = 3\n",
    BASE + "[process 1]\nbehavior = mangle\n[process 2]\nbehavior = mangle\n",
    BASE + "[process 9]\ninput = a\n",
    BASE + "[process 1]\nbehavior = fly\n",
    BASE + "properties = nonsense\n",
    BASE + "[link 1 8]\naction = hold\n",
    BASE + "[process 1]\nbehavior = alphabet\n",
    "protocol = uni-rb-f1\nn = 4\nt = 2\n",
])
def test_semantic_errors(text):
    with pytest.raises(SemanticError):
        parse_scenario(text)


def test_unknown_protocol_is_a_parse_error():
    with pytest.raises(ParseError):
        parse_scenario("protocol = paxos\nn = 3\nt = 1\n")


def test_every_bundled_scenario_parses():
    names = bundled_names()
    assert "separation_scenario3" in names and len(names) >= 5
    for name in names:
        assert load(name).name == name


def test_load_missing_path():
    with pytest.raises(SemanticError):
        load("no/such/file.scn")
    with pytest.raises(SemanticError):
        load("no_such_bundled")


def test_alphabet_is_declared_plus_fresh():
    config = parse_scenario(BASE + "[process 0]\ninput = z, y\n[process 3]\nvalues = q\n")
    assert alphabet(config) == [b"q", b"y", b"z", b"zz"]


def test_srb_alphabet_expansion():
    config = parse_scenario("protocol = srb\nn = 3\nt = 1\n[process 0]\nbehavior = alphabet\n"
                            "values = a\n")
    variants = expand_behaviors(config)
    # slots: p1, p2, log; each empty or one of {a, z}
    assert len(variants) == 27
    assert sum(v.byzantine[0] == "silent" for v in variants) == 1
    plans = {tuple(v.processes[0].plan) for v in variants}
    assert ((1, b"a"), (2, b"z"), (None, b"a")) in plans
    assert concretize(config, 4).text == concretize(config, 4).text


def test_vwba_alphabet_expansion():
    config = parse_scenario("protocol = vwba\nn = 3\nt = 1\n[process 2]\nbehavior = alphabet\n")
    variants = expand_behaviors(config)
    # silent, then 1 or 2 appends over {v, z}
    assert len(variants) == 1 + 2 + 4


def test_run_is_deterministic():
    config = load_bundled("srb_equivocating_sender")
    a, _ = run_scenario(config, seed=5)
    b, _ = run_scenario(config, seed=5)
    assert a.dumps() == b.dumps()


def test_run_with_schedule_replays():
    text = "protocol = uni-swmr\nn = 2\nt = 0\nschedule = 1, 0, 0\n"
    trace, report = run_scenario(parse_scenario(text))
    assert report.status == "pass"
    assert [e.target for e in trace.events()][:1] == [1]


def test_run_seed_reaches_byzantine_behaviors():
    config = parse_scenario("protocol = srb\nn = 3\nt = 1\njitter = 3\n"
                            "[process 0]\nbehavior = equivocate\nvalues = a, b\n")
    delivered = set()
    for seed in range(40):
        trace, _ = run_scenario(config, seed=seed)
        delivered.update(o.value[2] for o in trace.observations("deliver"))
    assert delivered == {b"a", b"b"}
