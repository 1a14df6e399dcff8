"""Plain-text game documents and strategy files.

A document is a sequence of ``key [args]: value`` lines; ``#`` starts a
comment.  Example::

    format: 1
    class: ibg
    agents: 1 2
    atoms: p q
    control 1: p
    control 2: p q
    protocol: full
    transition: threshold
    threshold p: 1
    goal 1: G p
    init: p

Other line kinds: ``allow <agent> <state>: <action> ...`` (explicit
protocols), ``row: <state> , <action> ... -> <state>`` (table transitions),
``issues:``, ``edge: <k> -> <i>``, ``opinion <i>:``, ``visible <i>:``
(influence games), ``rule: majority | quota <k> | table`` and
``rule-row: <bits> -> <bit>`` (aggregation games).  State and action
literals are written ``{p,q}``; ``{}`` is the empty set.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from importlib import resources

from cgspc.errors import FormulaSyntaxError, InputError
from cgspc.formulas import parse, render
from cgspc.games import (
    OP_PREFIX,
    VIS_PREFIX,
    AggregationGameSpec,
    Custom,
    EncodedGame,
    InfluenceGameSpec,
    Majority,
    _check_goals,
    build_aggregation,
    build_influence,
)
from cgspc.reduction import TURN
from cgspc.structures import (
    DEFAULT_ATOM_CAP,
    STAR_AGENT,
    Diagnostic,
    ExclusiveUnion,
    ExplicitProtocol,
    FullProtocol,
    GameStructure,
    Hosted,
    StrategyProfile,
    TableTransition,
    Threshold,
    _structural_diagnostics,
    agent_label,
    enabled,
    format_set,
    validate,
)

FORMAT_VERSION = "1"
CLASSES = ("raw", "ibg", "influence", "aggregation", "reduced")
COPY_PREFIX = "c_"
RESERVED = (COPY_PREFIX, TURN, OP_PREFIX, VIS_PREFIX)
USER_ATOM = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")
_SET = re.compile(r"\{[^{}]*\}")
_ROW = re.compile(r"(\{[^{}]*\})\s*,(.*)->\s*(\{[^{}]*\})\Z")


@dataclass
class GameDocument:
    kind: str
    structure: GameStructure
    goals: dict = field(default_factory=dict)
    initial: frozenset | None = None
    spec: InfluenceGameSpec | AggregationGameSpec | None = None

    def as_game(self) -> EncodedGame:
        return EncodedGame(self.kind, self.structure, self.goals, self.initial)


def reserved_prefixes(kind: str) -> tuple:
    """Prefixes user atoms of a document class may not use."""
    if kind == "reduced":
        return ()
    if kind == "influence":
        return (COPY_PREFIX, TURN)
    return RESERVED


# -- literals --------------------------------------------------------------


def parse_set_literal(text: str) -> frozenset:
    """``{p,q}`` (or ``p q``/``p,q``) to a frozenset of names."""
    text = text.strip()
    if text.startswith("{"):
        if not text.endswith("}"):
            raise InputError(f"unterminated set literal {text!r}")
        text = text[1:-1]
    names = [t for t in re.split(r"[\s,]+", text) if t]
    return frozenset(names)


def parse_agent(text: str) -> int:
    text = text.strip()
    if text == "*":
        return STAR_AGENT
    if not text.isdigit():
        raise InputError(f"bad agent id {text!r}")
    return int(text)


def _sets(text: str) -> list[frozenset]:
    rest = _SET.sub("", text)
    if rest.strip(" ,"):
        raise InputError(f"expected set literals, found {rest.strip()!r}")
    return [parse_set_literal(m) for m in _SET.findall(text)]


# -- parsing ---------------------------------------------------------------


class _Lines:
    def __init__(self, text: str):
        self.items = []
        for n, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if ":" not in line:
                raise InputError(f"line {n}: expected 'key: value', got {line!r}")
            head, value = line.split(":", 1)
            words = head.split()
            if not words:
                raise InputError(f"line {n}: missing key")
            self.items.append((n, words[0], words[1:], value.strip()))


def parse_document(text: str, atom_cap: int = DEFAULT_ATOM_CAP) -> GameDocument:
    """Parse a document; raises InputError with a line number on malformed input."""
    lines = _Lines(text).items
    if not lines or lines[0][1] != "format":
        raise InputError("line 1: documents must start with 'format: 1'")
    if lines[0][3] != FORMAT_VERSION:
        raise InputError(f"line {lines[0][0]}: unsupported format version {lines[0][3]!r}")
    kind = "raw"
    single: dict = {}
    agents = None
    control: dict = {}
    allow: dict = {}
    thresholds: dict = {}
    rows: dict = {}
    goal_text: dict = {}
    edges = []
    opinions: dict = {}
    visible: dict = {}
    rule_rows: dict = {}
    for n, key, args, value in lines[1:]:
        try:
            if key in ("class", "atoms", "issues", "protocol", "transition", "init", "rule"):
                if args:
                    raise InputError(f"'{key}' takes no arguments")
                if key in single:
                    raise InputError(f"duplicate '{key}' line")
                single[key] = value
                if key == "class":
                    if value not in CLASSES:
                        raise InputError(f"unknown class {value!r}")
                    kind = value
            elif key == "agents":
                if agents is not None:
                    raise InputError("duplicate 'agents' line")
                agents = [parse_agent(a) for a in value.split()]
            elif key == "control":
                i = _one_agent(args)
                if i in control:
                    raise InputError(f"duplicate control line for agent {agent_label(i)}")
                control[i] = parse_set_literal(value)
            elif key == "allow":
                if len(args) < 2:
                    raise InputError("expected 'allow <agent> <state>: <action> ...'")
                i = parse_agent(args[0])
                s = parse_set_literal(" ".join(args[1:]))
                if (i, s) in allow:
                    raise InputError(f"duplicate allow line for agent {agent_label(i)} at {format_set(s)}")
                acts = _sets(value)
                allow[(i, s)] = frozenset(acts)
            elif key == "threshold":
                if len(args) != 1:
                    raise InputError("expected 'threshold <atom>: <count>'")
                try:
                    thresholds[args[0]] = int(value)
                except ValueError:
                    raise InputError(f"threshold must be an integer, got {value!r}") from None
            elif key == "row":
                m = _ROW.match(value)
                if args or m is None:
                    raise InputError("expected 'row: <state> , <action> ... -> <state>'")
                s = parse_set_literal(m.group(1))
                rows[(s, tuple(_sets(m.group(2))))] = parse_set_literal(m.group(3))
            elif key == "goal":
                i = _one_agent(args)
                goal_text[i] = (n, value)
            elif key == "edge":
                if args or "->" not in value:
                    raise InputError("expected 'edge: <agent> -> <agent>'")
                k, i = value.split("->", 1)
                edges.append((parse_agent(k), parse_agent(i)))
            elif key == "opinion":
                opinions[_one_agent(args)] = parse_set_literal(value)
            elif key == "visible":
                visible[_one_agent(args)] = parse_set_literal(value)
            elif key == "rule-row":
                if args or "->" not in value:
                    raise InputError("expected 'rule-row: <bits> -> <bit>'")
                lhs, rhs = value.split("->", 1)
                column = tuple(_bit(b) for b in lhs.split())
                rule_rows[column] = bool(_bit(rhs.strip()))
            else:
                raise InputError(f"unknown key {key!r}")
        except InputError as exc:
            if isinstance(exc, FormulaSyntaxError):
                raise
            raise InputError(f"line {n}: {exc}") from None

    if agents is None:
        raise InputError("missing 'agents' line")
    if STAR_AGENT in agents and kind != "reduced":
        raise InputError("agent '*' is only allowed in reduced documents")
    goals = {}
    for i, (n, text) in sorted(goal_text.items()):
        try:
            goals[i] = parse(text, agents)
        except FormulaSyntaxError as exc:
            raise InputError(f"line {n}: goal of agent {i}: {exc}") from None

    if kind == "influence":
        issues = parse_set_literal(single.get("issues", ""))
        spec = InfluenceGameSpec(tuple(agents), tuple(sorted(issues)), frozenset(edges),
                                 opinions, visible, goals)
        _check_user_atoms(issues, kind)
        game = build_influence(spec)
        return GameDocument(kind, _recap(game.structure, atom_cap), game.goals, game.initial, spec)
    if kind == "aggregation":
        issues = parse_set_literal(single.get("issues", ""))
        _check_user_atoms(issues, kind)
        rule = _parse_rule(single.get("rule", "majority"), rule_rows)
        init = parse_set_literal(single["init"]) if "init" in single else None
        spec = AggregationGameSpec(tuple(agents), tuple(sorted(issues)), rule, goals, init)
        game = build_aggregation(spec)
        return GameDocument(kind, _recap(game.structure, atom_cap), game.goals, game.initial, spec)

    atoms = parse_set_literal(single.get("atoms", ""))
    protocol_kind = single.get("protocol", "full")
    if protocol_kind == "full":
        if allow:
            raise InputError("'allow' lines need 'protocol: explicit'")
        protocol = FullProtocol()
    elif protocol_kind == "explicit":
        if kind == "ibg":
            raise InputError("iterated boolean games use 'protocol: full'")
        protocol = ExplicitProtocol(allow)
    else:
        raise InputError(f"unknown protocol {protocol_kind!r}")
    transition_kind = single.get("transition", "epc")
    if transition_kind == "epc":
        transition = ExclusiveUnion()
    elif transition_kind == "threshold":
        transition = Threshold(thresholds)
    elif transition_kind == "table":
        transition = TableTransition(rows)
    else:
        raise InputError(f"unknown transition {transition_kind!r}")
    if thresholds and transition_kind != "threshold":
        raise InputError("'threshold' lines need 'transition: threshold'")
    if rows and transition_kind != "table":
        raise InputError("'row' lines need 'transition: table'")
    G = GameStructure(tuple(agents), tuple(atoms), control, protocol, transition, atom_cap)
    goals = _check_goals(G, goals)
    initial = G.check_state(parse_set_literal(single["init"])) if "init" in single else None
    return GameDocument(kind, G, goals, initial)


def _one_agent(args: list) -> int:
    if len(args) != 1:
        raise InputError("expected exactly one agent id before ':'")
    return parse_agent(args[0])


def _bit(text: str) -> int:
    if text not in ("0", "1"):
        raise InputError(f"expected 0 or 1, got {text!r}")
    return int(text)


def _parse_rule(text: str, rows: dict):
    words = text.split()
    if words == ["majority"]:
        return Majority()
    if len(words) == 2 and words[0] == "quota" and words[1].isdigit():
        return Majority(int(words[1]))
    if words == ["table"]:
        return Custom(rows)
    raise InputError(f"unknown aggregation rule {text!r}")


def _check_user_atoms(names, kind: str) -> None:
    for d in user_atom_diagnostics(names, kind):
        raise InputError(str(d))


def _recap(G: GameStructure, atom_cap: int) -> GameStructure:
    return GameStructure(G.agents, G.atoms, G.control, G.protocol, G.transition, atom_cap)


def user_atom_diagnostics(names, kind: str) -> list[Diagnostic]:
    """Naming rules for atoms written by hand in a document of class ``kind``."""
    out = []
    reserved = reserved_prefixes(kind)
    for a in sorted(names):
        if any(a.startswith(pre) for pre in reserved):
            out.append(Diagnostic("ReservedName", f"atom {a!r} uses a reserved prefix"))
        elif kind != "reduced" and not USER_ATOM.match(a):
            out.append(Diagnostic("BadAtomName", f"{a!r} is not a valid atom name"))
    return out


def document_diagnostics(doc: GameDocument, behavioural: bool = True) -> list[Diagnostic]:
    """Naming rules of the document class plus the structural (and behavioural) checks."""
    G = doc.structure
    out = []
    user_names = doc.kind in ("raw", "ibg")
    if user_names:
        out.extend(user_atom_diagnostics(G.atoms, doc.kind))
    checks = validate(G, doc.initial) if behavioural else _structural_diagnostics(G, ())
    # hand-written names were already judged by the stricter user rule
    out.extend(d for d in checks if not (user_names and d.code == "BadAtomName"))
    return out


def load_document(source: str, atom_cap: int = DEFAULT_ATOM_CAP) -> GameDocument:
    """Read a document from a path, or a bundled one named ``bundled:<name>``."""
    return parse_document(read_source(source), atom_cap)


def read_source(source: str) -> str:
    if source.startswith("bundled:"):
        name = source.split(":", 1)[1]
        try:
            return resources.files("cgspc").joinpath("data", f"{name}.cgs").read_text()
        except (FileNotFoundError, OSError):
            raise InputError(f"no bundled document named {name!r}") from None
    try:
        with open(source, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {source}: {exc.strerror}") from None


def bundled_names() -> list[str]:
    folder = resources.files("cgspc").joinpath("data")
    return sorted(p.name[:-4] for p in folder.iterdir() if p.name.endswith(".cgs"))


# -- printing --------------------------------------------------------------


def _agents_line(agents) -> str:
    return " ".join(agent_label(i) for i in agents)


def print_document(doc: GameDocument) -> str:
    """Canonical text of ``doc``; ``parse_document`` reads it back to the same game."""
    G = doc.structure
    out = [f"format: {FORMAT_VERSION}", f"class: {doc.kind}", f"agents: {_agents_line(G.agents)}"]
    if doc.kind == "influence":
        spec = doc.spec
        out.append("issues: " + " ".join(spec.issues))
        for k, i in sorted(spec.network):
            out.append(f"edge: {k} -> {i}")
        for i in spec.agents:
            if spec.opinions.get(i):
                out.append(f"opinion {i}: " + " ".join(sorted(spec.opinions[i])))
        for i in spec.agents:
            if spec.visible.get(i):
                out.append(f"visible {i}: " + " ".join(sorted(spec.visible[i])))
    elif doc.kind == "aggregation":
        spec = doc.spec
        out.append("issues: " + " ".join(spec.issues))
        rule = spec.rule
        if isinstance(rule, Custom):
            out.append("rule: table")
            for column in itertools.product((0, 1), repeat=len(spec.agents)):
                out.append("rule-row: " + " ".join(map(str, column)) + f" -> {int(rule(column))}")
        elif rule.quota is None:
            out.append("rule: majority")
        else:
            out.append(f"rule: quota {rule.quota}")
    else:
        out.extend(_structure_lines(G))
    for i, goal in sorted(doc.goals.items()):
        out.append(f"goal {i}: {render(goal)}")
    if doc.initial is not None and doc.kind != "influence":
        out.append("init: " + " ".join(sorted(doc.initial)))
    return "\n".join(out) + "\n"


def _structure_lines(G: GameStructure) -> list[str]:
    out = ["atoms: " + " ".join(G.atoms)]
    for i in G.agents:
        out.append(f"control {agent_label(i)}: " + " ".join(sorted(G.control[i])))
    if isinstance(G.protocol, ExplicitProtocol):
        out.append("protocol: explicit")
        for i in G.agents:
            if i not in G.protocol.constrained_agents():
                continue
            for s in G.states():
                acts = " ".join(format_set(a) for a in enabled(G, i, s))
                out.append(f"allow {agent_label(i)} {format_set(s)}: {acts}")
    else:
        out.append("protocol: full")
    tr = G.transition
    if isinstance(tr, ExclusiveUnion):
        out.append("transition: epc")
    elif isinstance(tr, Threshold):
        out.append("transition: threshold")
        for p in G.atoms:
            if p in tr.thresholds:
                out.append(f"threshold {p}: {tr.thresholds[p]}")
    elif isinstance(tr, TableTransition):
        out.append("transition: table")
        for (s, alpha), t in sorted(tr.table.items(),
                                    key=lambda kv: (G.index(kv[0][0]), [G.index(a) for a in kv[0][1]])):
            acts = " ".join(format_set(a) for a in alpha)
            out.append(f"row: {format_set(s)} , {acts} -> {format_set(t)}")
    elif isinstance(tr, Hosted):
        raise InputError(f"hosted transition {tr.name!r} has no document form outside its game class")
    return out


# -- strategies ------------------------------------------------------------


def parse_strategy(text: str, G: GameStructure) -> StrategyProfile:
    """Blocks ``agent <i>`` followed by ``<state> : <action>`` lines."""
    assignments: dict = {}
    current = None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            if line.startswith("agent"):
                current = parse_agent(line[len("agent"):])
                G.position(current)
                if current in assignments:
                    raise InputError(f"duplicate block for agent {agent_label(current)}")
                assignments[current] = {}
                continue
            if current is None:
                raise InputError("strategy entry before any 'agent' line")
            if ":" not in line:
                raise InputError(f"expected '<state> : <action>', got {line!r}")
            s_text, a_text = line.split(":", 1)
            s = G.check_state(parse_set_literal(s_text))
            act = parse_set_literal(a_text)
            if s in assignments[current]:
                raise InputError(f"duplicate entry for {format_set(s)}")
            assignments[current][s] = act
        except InputError as exc:
            raise InputError(f"strategy line {n}: {exc}") from None
    return StrategyProfile(assignments)


def print_strategy(profile: StrategyProfile, G: GameStructure) -> str:
    out = []
    for i in sorted(profile.assignments, key=G.position):
        out.append(f"agent {agent_label(i)}")
        table = profile.assignments[i]
        for s in sorted(table, key=G.index):
            out.append(f"{format_set(s)} : {format_set(table[s])}")
    return "\n".join(out) + "\n"
