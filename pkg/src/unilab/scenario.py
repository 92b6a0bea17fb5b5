"""Scenario files: parsing, validation and running.

A scenario is flat ``key = value`` text with optional sections::

    protocol = srb
    n = 4
    t = 1
    seed = 7
    properties = srb-validity, srb-agreement

    [process 0]
    input = hello, world

    [process 3]
    behavior = equivocate
    values = a, b

    [link 4 *]
    action = hold

Payload values are UTF-8 text unless written as ``hex:...``. Link sections
take comma lists or ``*`` for either endpoint and accept ``action`` (``hold``,
``now`` or ``delay N``), ``both``, ``kinds``, ``from`` and ``until``.

A Byzantine process with ``behavior = alphabet`` stands for every concrete
script over a finite alphabet: the payloads declared in the file plus one
fresh symbol. Exhaustive enumeration explores each script in turn; a
random run picks one by seed. For SRB the alphabet process must be the
designated sender and its scripts are ``plan`` lists (``dest:value`` or
``log:value``, at most one per destination); for VWBA they are ``appends``
lists of at most two round-1 entries.
"""

from __future__ import annotations

import itertools
import os
import random
import re
from dataclasses import dataclass, field
from importlib import resources

from .agreement import VwbaProcess
from .checkers import CHECKERS, PropertyReport, evaluate, unknown_properties
from .errors import InvalidParams, ParseError, SemanticError
from .kernel import (DelayUntil, DeliverNow, DeliveryPolicy, EventKind, HoldPastHorizon,
                     Process, Rule, Simulator, SystemParams, new_sim)
from .rounds import (NaiveRbRoundProcess, RbF1RoundProcess, RbRoundAdversary, RegisterScript,
                     SwmrRoundProcess)
from .srb import ProofMangler, SrbProcess, SrbSenderAdversary, SrbSenderScript
from .trace import Trace
from .trinc import TrincProcess, attest_payload

PROTOCOLS = ("srb", "trinc", "vwba", "uni-swmr", "uni-rb-f1", "naive-rb-rounds")

DEFAULT_PROPERTIES = {
    "srb": ("srb-validity", "srb-totality", "srb-sequencing", "srb-integrity",
            "srb-agreement", "srb-l1-agreement", "linearizable"),
    "trinc": ("trinc-nonequivocation", "trinc-liveness", "trinc-soundness",
              "srb-sequencing", "srb-agreement"),
    "vwba": ("vwba-agreement", "vwba-validity", "vwba-liveness", "unidirectional",
             "no-phantom"),
    "uni-swmr": ("unidirectional", "no-phantom", "rounds-finish", "linearizable"),
    "uni-rb-f1": ("unidirectional", "no-phantom", "eventual-delivery"),
    "naive-rb-rounds": ("unidirectional", "no-phantom", "eventual-delivery"),
}

BEHAVIORS = {
    "srb": ("silent", "crash-sender", "equivocate", "mangle", "script", "alphabet"),
    "trinc": ("silent", "equivocate", "mangle"),
    "vwba": ("silent", "append-script", "alphabet"),
    "uni-swmr": ("silent", "append-script"),
    "uni-rb-f1": ("silent",) + RbRoundAdversary.MODES,
    "naive-rb-rounds": ("silent",) + RbRoundAdversary.MODES,
}

GLOBAL_KEYS = {"protocol", "n", "t", "seed", "horizon", "jitter", "properties", "sender",
               "interval", "transport", "schedule", "name", "description"}
PROCESS_KEYS = {"input", "attest", "behavior", "values", "targets", "appends", "plan", "seed"}
LINK_KEYS = {"action", "both", "kinds", "from", "until"}


@dataclass
class ProcessSpec:
    inputs: list[bytes] | None = None
    attest: list[tuple[int, bytes]] = field(default_factory=list)
    behavior: str | None = None
    values: list[bytes] | None = None
    targets: list[int] | None = None
    appends: list[tuple[int, int, bytes]] = field(default_factory=list)
    plan: list[tuple[int | None, bytes]] = field(default_factory=list)
    seed: int | None = None


@dataclass
class LinkSpec:
    src: frozenset | None
    dst: frozenset | None
    action: object
    both: bool = False
    kinds: frozenset = frozenset({EventKind.MESSAGE, EventKind.OBJECT_OP})
    start: int = 0
    stop: int | None = None
    line: int = 0


@dataclass
class ScenarioConfig:
    protocol: str
    params: SystemParams
    seed: int = 0
    horizon: int = 100_000
    jitter: int = 0
    properties: tuple[str, ...] = ()
    sender: int = 0
    interval: int = 0
    transport: str = "rb"
    schedule: tuple[int, ...] | None = None
    processes: dict[int, ProcessSpec] = field(default_factory=dict)
    links: list[LinkSpec] = field(default_factory=list)
    name: str = ""
    description: str = ""
    text: str = ""

    @property
    def byzantine(self) -> dict[int, str]:
        return {p: s.behavior for p, s in sorted(self.processes.items()) if s.behavior}

    def policy(self, seed: int | None = None) -> DeliveryPolicy:
        rules = []
        for link in self.links:
            rules.append(Rule(link.action, link.src, link.dst, link.kinds, link.start, link.stop))
            if link.both:
                rules.append(Rule(link.action, link.dst, link.src, link.kinds,
                                  link.start, link.stop))
        return DeliveryPolicy(tuple(rules), self.seed if seed is None else seed,
                              self.horizon, self.jitter)


# parsing

_SECTION = re.compile(r"^\[\s*(process|link)\s+([^\]]*?)\s*\]\s*$")


def _payload(text: str) -> bytes:
    if text.startswith("hex:"):
        return bytes.fromhex(text[4:])
    return text.encode("utf-8")


class _Value:
    """A raw value with its position, for error reporting."""

    def __init__(self, text: str, line: int, column: int):
        self.text = text
        self.line = line
        self.column = column

    def fail(self, message: str):
        raise ParseError(message, self.line, self.column)

    def int(self, minimum: int | None = None) -> int:
        try:
            value = int(self.text)
        except ValueError:
            self.fail(f"expected an integer, got {self.text!r}")
        if minimum is not None and value < minimum:
            self.fail(f"expected an integer >= {minimum}, got {value}")
        return value

    def items(self) -> list[str]:
        return [part.strip() for part in self.text.split(",") if part.strip()]

    def ints(self) -> list[int]:
        out = []
        for part in self.items():
            try:
                out.append(int(part))
            except ValueError:
                self.fail(f"expected integers, got {part!r}")
        return out

    def payloads(self) -> list[bytes]:
        try:
            return [_payload(p) for p in self.items()]
        except ValueError:
            self.fail("bad hex payload")

    def pairs(self, arity: int) -> list[tuple]:
        out = []
        for part in self.items():
            pieces = part.split(":", arity - 1)
            if len(pieces) != arity:
                self.fail(f"expected {arity} ':'-separated fields in {part!r}")
            try:
                nums = [int(x) for x in pieces[:-1]]
                out.append(tuple(nums) + (_payload(pieces[-1]),))
            except ValueError:
                self.fail(f"malformed entry {part!r}")
        return out

    def plan(self) -> list[tuple]:
        out = []
        for part in self.items():
            dest, sep, value = part.partition(":")
            if not sep:
                self.fail(f"expected dest:value in {part!r}")
            if dest.strip() == "log":
                out.append((None, _payload(value.strip())))
                continue
            try:
                out.append((int(dest), _payload(value.strip())))
            except ValueError:
                self.fail(f"malformed plan entry {part!r}")
        return out

    def flag(self) -> bool:
        low = self.text.lower()
        if low in ("yes", "true", "1", "on"):
            return True
        if low in ("no", "false", "0", "off"):
            return False
        self.fail(f"expected yes/no, got {self.text!r}")


def _endpoints(text: str, line: int, column: int) -> frozenset | None:
    if text == "*":
        return None
    try:
        return frozenset(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ParseError(f"bad process list {text!r}", line, column) from None


def _sections(text: str):
    """Yield ``(header, header_line, {key: _Value})`` blocks; header None for globals."""
    header, header_line, values = None, 0, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("["):
            match = _SECTION.match(stripped)
            if match is None:
                raise ParseError(f"bad section header {stripped!r}", lineno,
                                 raw.index("[") + 1)
            yield header, header_line, values
            header, header_line, values = (match.group(1), match.group(2)), lineno, {}
            continue
        if "=" not in raw:
            raise ParseError("expected 'key = value'", lineno, len(raw) - len(raw.lstrip()) + 1)
        key_part, value_part = raw.split("=", 1)
        key = key_part.strip()
        if not key:
            raise ParseError("missing key", lineno, 1)
        if key in values:
            raise ParseError(f"duplicate key {key!r}", lineno, raw.index(key) + 1)
        column = len(key_part) + 2 + (len(value_part) - len(value_part.lstrip()))
        values[key] = _Value(value_part.strip(), lineno, column)
    yield header, header_line, values


def _check_keys(values: dict, allowed: set, where: str) -> None:
    for key, value in values.items():
        if key not in allowed:
            raise ParseError(f"unknown key {key!r} in {where}", value.line, 1)


def _action(value: _Value):
    parts = value.text.split()
    if parts == ["hold"]:
        return HoldPastHorizon()
    if parts == ["now"]:
        return DeliverNow()
    if len(parts) == 2 and parts[0] == "delay":
        try:
            return DelayUntil(int(parts[1]))
        except ValueError:
            pass
    value.fail(f"action must be 'hold', 'now' or 'delay N', got {value.text!r}")


def parse_scenario(text: str, name: str = "") -> ScenarioConfig:
    """Parse and validate scenario text."""
    glob: dict = {}
    processes: dict[int, ProcessSpec] = {}
    links: list[LinkSpec] = []
    for header, line, values in _sections(text):
        if header is None:
            _check_keys(values, GLOBAL_KEYS, "global section")
            glob = values
        elif header[0] == "process":
            _check_keys(values, PROCESS_KEYS, "[process]")
            try:
                pid = int(header[1])
            except ValueError:
                raise ParseError(f"bad process id {header[1]!r}", line, 2) from None
            if pid in processes:
                raise ParseError(f"duplicate section for process {pid}", line, 1)
            spec = ProcessSpec()
            if "input" in values:
                spec.inputs = values["input"].payloads()
            if "attest" in values:
                spec.attest = values["attest"].pairs(2)
            if "behavior" in values:
                spec.behavior = values["behavior"].text
            if "values" in values:
                spec.values = values["values"].payloads()
            if "targets" in values:
                spec.targets = values["targets"].ints()
            if "appends" in values:
                spec.appends = values["appends"].pairs(3)
            if "plan" in values:
                spec.plan = values["plan"].plan()
            if "seed" in values:
                spec.seed = values["seed"].int()
            processes[pid] = spec
        else:
            _check_keys(values, LINK_KEYS, "[link]")
            ends = header[1].split()
            if len(ends) != 2:
                raise ParseError("link section needs two endpoints", line, 2)
            action = values.get("action")
            if action is None:
                raise ParseError("link section needs an action", line, 1)
            spec = LinkSpec(_endpoints(ends[0], line, 7), _endpoints(ends[1], line, 7),
                            _action(action), line=line)
            if "both" in values:
                spec.both = values["both"].flag()
            if "kinds" in values:
                kinds = set()
                for kind in values["kinds"].items():
                    if kind == "message":
                        kinds.add(EventKind.MESSAGE)
                    elif kind == "object":
                        kinds.add(EventKind.OBJECT_OP)
                    else:
                        values["kinds"].fail(f"unknown kind {kind!r}")
                spec.kinds = frozenset(kinds)
            if "from" in values:
                spec.start = values["from"].int(0)
            if "until" in values:
                spec.stop = values["until"].int(0)
            links.append(spec)

    def need(key):
        if key not in glob:
            raise SemanticError(f"missing required key {key!r}")
        return glob[key]

    protocol = need("protocol").text
    if protocol not in PROTOCOLS:
        glob["protocol"].fail(f"unknown protocol {protocol!r}; expected one of {', '.join(PROTOCOLS)}")
    n = need("n").int(1)
    t = need("t").int(0)
    try:
        params = SystemParams(n, t)
    except InvalidParams as exc:
        raise SemanticError(str(exc)) from None
    config = ScenarioConfig(protocol, params, processes=processes, links=links, text=text,
                            name=name)
    if "seed" in glob:
        config.seed = glob["seed"].int()
    if "horizon" in glob:
        config.horizon = glob["horizon"].int(1)
    if "jitter" in glob:
        config.jitter = glob["jitter"].int(0)
    if "sender" in glob:
        config.sender = glob["sender"].int(0)
    if "interval" in glob:
        config.interval = glob["interval"].int(0)
    if "transport" in glob:
        config.transport = glob["transport"].text
    if "schedule" in glob:
        config.schedule = tuple(glob["schedule"].ints())
    if "name" in glob:
        config.name = glob["name"].text
    if "description" in glob:
        config.description = glob["description"].text
    if "properties" in glob:
        config.properties = tuple(glob["properties"].items())
    else:
        config.properties = DEFAULT_PROPERTIES[protocol]
    validate(config)
    return config


def validate(config: ScenarioConfig) -> None:
    """Semantic checks that do not depend on the text layout."""
    n, t = config.params.n, config.params.t
    protocol = config.protocol
    if protocol in ("srb", "trinc") and n < 2 * t + 1:
        raise SemanticError(f"{protocol} needs n >= 2t+1, got n={n} t={t}")
    if protocol == "uni-rb-f1" and (t != 1 or n < 3):
        raise SemanticError(f"uni-rb-f1 needs t=1 and n>=3, got n={n} t={t}")
    if config.transport not in ("rb", "plain"):
        raise SemanticError(f"transport must be 'rb' or 'plain', got {config.transport!r}")
    if not 0 <= config.sender < n:
        raise SemanticError(f"sender {config.sender} out of range for n={n}")
    for pid, spec in config.processes.items():
        if not 0 <= pid < n:
            raise SemanticError(f"process {pid} out of range for n={n}")
        if spec.behavior and spec.behavior not in BEHAVIORS[protocol]:
            raise SemanticError(f"behavior {spec.behavior!r} not available for {protocol}; "
                                f"expected one of {', '.join(BEHAVIORS[protocol])}")
        for q in spec.targets or ():
            if not 0 <= q < n:
                raise SemanticError(f"target {q} out of range for n={n}")
        for q, _ in spec.plan:
            if q is not None and not 0 <= q < n:
                raise SemanticError(f"plan destination {q} out of range for n={n}")
        if spec.behavior == "alphabet" and protocol == "srb" and pid != config.sender:
            raise SemanticError("the SRB alphabet behavior is only defined for the sender")
    byz = config.byzantine
    if len(byz) > t:
        raise SemanticError(f"{len(byz)} Byzantine processes exceed budget t={t}")
    for link in config.links:
        for ends in (link.src, link.dst):
            for q in ends or ():
                if not 0 <= q < n:
                    raise SemanticError(f"link endpoint {q} out of range (line {link.line})")
    bad = unknown_properties(config.properties)
    if bad:
        raise SemanticError(f"unknown properties: {', '.join(bad)}; "
                            f"known: {', '.join(sorted(CHECKERS))}")


# building simulations

def _inputs(config: ScenarioConfig, pid: int) -> list[bytes]:
    spec = config.processes.get(pid)
    if spec is not None and spec.inputs is not None:
        return spec.inputs
    if config.protocol == "srb":
        return [b"m1"] if pid == config.sender else []
    if config.protocol == "vwba":
        return [b"v"]
    if config.protocol == "trinc":
        return []
    return [b"m%d" % pid]


def correct_factory(config: ScenarioConfig, protocol: str | None = None):
    protocol = protocol or config.protocol
    n, t = config.params.n, config.params.t

    def build(pid: int) -> Process:
        inputs = _inputs(config, pid)
        if protocol == "srb":
            return SrbProcess(pid, n, t, config.sender, inputs, config.interval)
        if protocol == "trinc":
            spec = config.processes.get(pid)
            return TrincProcess(pid, n, t, spec.attest if spec else (), config.interval)
        if protocol == "vwba":
            return VwbaProcess(pid, n, inputs[0] if inputs else b"v")
        if protocol == "uni-swmr":
            return SwmrRoundProcess(pid, n, inputs)
        if protocol == "uni-rb-f1":
            return RbF1RoundProcess(pid, n, t, inputs, config.transport)
        if protocol == "naive-rb-rounds":
            return NaiveRbRoundProcess(pid, n, t, inputs, config.transport)
        raise SemanticError(f"unknown protocol {protocol!r}")

    return build


def build_behavior(config: ScenarioConfig, pid: int, protocol: str | None = None,
                   run_seed: int | None = None) -> Process:
    protocol = protocol or config.protocol
    spec = config.processes[pid]
    n, t = config.params.n, config.params.t
    run_seed = config.seed if run_seed is None else run_seed
    seed = spec.seed if spec.seed is not None else run_seed * 1009 + pid
    name = spec.behavior
    if name not in BEHAVIORS[protocol]:
        raise SemanticError(f"behavior {name!r} not available for {protocol}")
    if name == "silent":
        return Process(pid)
    if name == "alphabet":
        raise SemanticError("alphabet behaviors must be expanded before building")
    if name == "script":
        return SrbSenderScript(pid, spec.plan)
    if protocol in ("srb", "trinc"):
        if name == "mangle":
            allies = [p for p, s in config.processes.items() if s.behavior]
            return ProofMangler(pid, n, t, seed, allies)
        values = spec.values or [b"a", b"b"]
        if protocol == "trinc":
            values = [attest_payload(1, v) for v in values]
        mode = "crash" if name == "crash-sender" else "equivocate"
        return SrbSenderAdversary(pid, n, mode, seed, values, spec.targets)
    if name == "append-script":
        return RegisterScript(pid, spec.appends)
    return RbRoundAdversary(pid, n, name, max(1, len(_inputs(config, pid))), seed,
                            config.transport)


# finite Byzantine alphabets

def alphabet(config: ScenarioConfig) -> list[bytes]:
    """Payloads declared in the scenario plus one fresh symbol."""
    declared = set()
    for pid in range(config.params.n):
        spec = config.processes.get(pid)
        if spec is None or not spec.behavior:
            declared.update(_inputs(config, pid))
        if spec is not None:
            declared.update(spec.values or ())
            declared.update(m for _, m in spec.attest)
            declared.update(m for *_, m in spec.appends)
            declared.update(m for _, m in spec.plan)
    fresh = b"z"
    while fresh in declared:
        fresh += b"z"
    return sorted(declared) + [fresh]


def _text(m: bytes) -> str:
    try:
        text = m.decode("utf-8")
    except UnicodeDecodeError:
        return "hex:" + m.hex()
    if not text or any(c in text for c in ",:#\n") or text != text.strip() or text.startswith("hex:"):
        return "hex:" + m.hex()
    return text


def _scripts(config: ScenarioConfig, pid: int) -> list[str]:
    """Concrete replacement lines for one alphabet process."""
    symbols = alphabet(config)
    if config.protocol == "srb":
        slots = [str(q) for q in range(config.params.n) if q != pid] + ["log"]
        out = []
        for choice in itertools.product([None] + symbols, repeat=len(slots)):
            plan = [f"{slot}:{_text(m)}" for slot, m in zip(slots, choice) if m is not None]
            out.append(f"behavior = script\nplan = {', '.join(plan)}" if plan
                       else "behavior = silent")
        return out
    out = ["behavior = silent"]
    for size in (1, 2):
        for seq in itertools.product(symbols, repeat=size):
            entries = ", ".join(f"0:1:{_text(m)}" for m in seq)
            out.append(f"behavior = append-script\nappends = {entries}")
    return out


_BEHAVIOR_LINE = re.compile(r"^(\s*)behavior\s*=\s*alphabet\s*(#.*)?$")


def expand_behaviors(config: ScenarioConfig) -> list[ScenarioConfig]:
    """Concrete scenarios for every alphabet script (``[config]`` when there are none)."""
    pids = [p for p, b in config.byzantine.items() if b == "alphabet"]
    if not pids:
        return [config]
    choices = [_scripts(config, p) for p in pids]
    lines = config.text.splitlines()
    where = {}
    current = None
    for i, line in enumerate(lines):
        match = _SECTION.match(line.strip())
        if match:
            current = int(match.group(2)) if match.group(1) == "process" else None
        elif current in pids and _BEHAVIOR_LINE.match(line):
            where[current] = i
    variants = []
    for combo in itertools.product(*choices):
        out = list(lines)
        for pid, replacement in zip(pids, combo):
            out[where[pid]] = replacement
        variants.append(parse_scenario("\n".join(out) + "\n", config.name))
    return variants


def concretize(config: ScenarioConfig, seed: int | None = None) -> ScenarioConfig:
    """Pick one alphabet script by seed; other configs pass through."""
    variants = expand_behaviors(config)
    if len(variants) == 1:
        return variants[0]
    seed = config.seed if seed is None else seed
    return random.Random(seed).choice(variants)


def build_sim(config: ScenarioConfig, seed: int | None = None, protocol: str | None = None,
              exhaustive: bool = False) -> Simulator:
    protocol = protocol or config.protocol
    seed = config.seed if seed is None else seed
    config = concretize(config, seed)
    behaviors = {pid: build_behavior(config, pid, protocol, seed) for pid in config.byzantine}
    meta = {"protocol": protocol, "seed": str(seed)}
    if config.name:
        meta["scenario"] = config.name
    try:
        return new_sim(config.params, config.policy(seed), behaviors,
                       correct_factory(config, protocol), meta, exhaustive)
    except InvalidParams as exc:
        raise SemanticError(str(exc)) from None


def replay(sim: Simulator, schedule) -> Trace:
    """Drive an exhaustive-mode simulator through a list of choices, then to quiescence."""
    for choice in schedule:
        if sim.step(choice) is None:
            break
    return sim.run_until_quiescent()


def run_scenario(config: ScenarioConfig, seed: int | None = None, protocol: str | None = None,
                 properties=None) -> tuple[Trace, PropertyReport]:
    """Run once and check the configured properties."""
    seed = config.seed if seed is None else seed
    config = concretize(config, seed)
    if config.schedule is not None:
        sim = build_sim(config, seed, protocol, exhaustive=True)
        trace = replay(sim, config.schedule)
    else:
        trace = build_sim(config, seed, protocol).run_until_quiescent()
    names = config.properties if properties is None else tuple(properties)
    bad = unknown_properties(names)
    if bad:
        raise SemanticError(f"unknown properties: {', '.join(bad)}")
    report = evaluate(trace, names, config.text, seed, config.schedule)
    return trace, report


# bundled library

def bundled_names() -> list[str]:
    root = resources.files("unilab") / "scenarios"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".scn"))


def bundled_text(name: str) -> str:
    if name.endswith(".scn"):
        name = name[:-4]
    path = resources.files("unilab") / "scenarios" / f"{name}.scn"
    if not path.is_file():
        raise SemanticError(f"no bundled scenario named {name!r}")
    return path.read_text(encoding="utf-8")


def load_bundled(name: str) -> ScenarioConfig:
    name = name[:-4] if name.endswith(".scn") else name
    return parse_scenario(bundled_text(name), name)


def load(path_or_name: str) -> ScenarioConfig:
    """Load a scenario from a file path, falling back to the bundled library."""
    if os.path.exists(path_or_name):
        with open(path_or_name, encoding="utf-8") as fh:
            base = os.path.basename(path_or_name)
            return parse_scenario(fh.read(), base[:-4] if base.endswith(".scn") else base)
    if os.sep in path_or_name:
        raise SemanticError(f"no such scenario file: {path_or_name}")
    return load_bundled(path_or_name)
