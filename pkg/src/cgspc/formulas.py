"""ATL*/ATL/LTL formulas: AST, parser, printer, fragment classifier, and ``tr``.

The AST holds only the core connectives (atom, true, negation, disjunction,
next, until, coalition).  Conjunction, implication, ``F``, ``G`` and ``false``
are desugared while parsing::

    a & b  ->  ~(~a | ~b)        F a  ->  true U a
    a -> b ->  ~a | b            G a  ->  ~(true U ~a)
    false  ->  ~true

Concrete syntax, loosest to tightest: ``->`` (right), ``U`` (right), ``|``,
``&``, then the prefix operators ``~ X F G <<i,j>>``.
"""

from __future__ import annotations

import enum
import re
from collections import Counter
from collections.abc import Iterable, Iterator
from dataclasses import dataclass

from cgspc.errors import FormulaSyntaxError, InputError


class Formula:
    __slots__ = ()

    def children(self) -> tuple:
        return ()

    def __str__(self):
        return render(self)


@dataclass(frozen=True, repr=False)
class Atom(Formula):
    name: str

    def __repr__(self):
        return f"Atom({self.name!r})"


@dataclass(frozen=True, repr=False)
class Top(Formula):
    def __repr__(self):
        return "Top()"


@dataclass(frozen=True, repr=False)
class Not(Formula):
    arg: Formula

    def children(self):
        return (self.arg,)

    def __repr__(self):
        return f"Not({self.arg!r})"


@dataclass(frozen=True, repr=False)
class Or(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)

    def __repr__(self):
        return f"Or({self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class Next(Formula):
    arg: Formula

    def children(self):
        return (self.arg,)

    def __repr__(self):
        return f"Next({self.arg!r})"


@dataclass(frozen=True, repr=False)
class Until(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)

    def __repr__(self):
        return f"Until({self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class Coalition(Formula):
    agents: frozenset
    arg: Formula

    def __post_init__(self):
        object.__setattr__(self, "agents", frozenset(self.agents))

    def children(self):
        return (self.arg,)

    def __repr__(self):
        return f"Coalition({sorted(self.agents)}, {self.arg!r})"


TRUE = Top()


def And(a: Formula, b: Formula) -> Formula:
    return Not(Or(Not(a), Not(b)))


def Implies(a: Formula, b: Formula) -> Formula:
    return Or(Not(a), b)


def Eventually(a: Formula) -> Formula:
    return Until(TRUE, a)


def Always(a: Formula) -> Formula:
    return Not(Until(TRUE, Not(a)))


class Fragment(str, enum.Enum):
    LTL = "LTL"
    ATL = "ATL"
    ATLSTAR = "ATL*"


# -- traversal helpers -----------------------------------------------------


def subformulas(f: Formula) -> Iterator[Formula]:
    """Pre-order walk over every node."""
    stack = [f]
    while stack:
        g = stack.pop()
        yield g
        stack.extend(reversed(g.children()))


def size(f: Formula) -> int:
    return sum(1 for _ in subformulas(f))


def node_counts(f: Formula) -> Counter:
    return Counter(type(g).__name__ for g in subformulas(f))


def depth(f: Formula) -> int:
    kids = f.children()
    return 1 + max((depth(k) for k in kids), default=0)


def atoms_of(f: Formula) -> frozenset:
    return frozenset(g.name for g in subformulas(f) if isinstance(g, Atom))


def agents_of(f: Formula) -> frozenset:
    out: set = set()
    for g in subformulas(f):
        if isinstance(g, Coalition):
            out |= g.agents
    return frozenset(out)


def is_state_formula(f: Formula) -> bool:
    if isinstance(f, (Atom, Top, Coalition)):
        return True
    if isinstance(f, (Not, Or)):
        return all(is_state_formula(k) for k in f.children())
    return False


def has_coalition(f: Formula) -> bool:
    return any(isinstance(g, Coalition) for g in subformulas(f))


def _atl_shaped(f: Formula) -> bool:
    if isinstance(f, (Atom, Top)):
        return True
    if isinstance(f, (Not, Or)):
        return all(_atl_shaped(k) for k in f.children())
    if isinstance(f, Coalition):
        body = f.arg
        if isinstance(body, Next):
            return is_state_formula(body.arg) and _atl_shaped(body.arg)
        if isinstance(body, Until):
            return all(is_state_formula(k) and _atl_shaped(k) for k in body.children())
    return False


def is_atl_coalition(f: Formula) -> bool:
    """True for ``<<C>> X a`` and ``<<C>> (a U b)`` with ATL state arguments."""
    return isinstance(f, Coalition) and _atl_shaped(f)


def classify(f: Formula) -> Fragment:
    if not has_coalition(f):
        return Fragment.LTL
    if _atl_shaped(f):
        return Fragment.ATL
    return Fragment.ATLSTAR


def translate_tr(f: Formula) -> Formula:
    """Replace every next operator by two, leaving all other structure intact."""
    if isinstance(f, (Atom, Top)):
        return f
    if isinstance(f, Not):
        return Not(translate_tr(f.arg))
    if isinstance(f, Or):
        return Or(translate_tr(f.left), translate_tr(f.right))
    if isinstance(f, Next):
        return Next(Next(translate_tr(f.arg)))
    if isinstance(f, Until):
        return Until(translate_tr(f.left), translate_tr(f.right))
    if isinstance(f, Coalition):
        return Coalition(f.agents, translate_tr(f.arg))
    raise TypeError(f"not a formula: {f!r}")


# -- printing --------------------------------------------------------------


def _agent_text(i: int) -> str:
    # agent 0 is the aggregator of reduced structures
    return "*" if i == 0 else str(i)


def _render(f: Formula) -> str:
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Not):
        return "~" + _render(f.arg)
    if isinstance(f, Next):
        return "X " + _render(f.arg)
    if isinstance(f, Coalition):
        return "<<" + ",".join(_agent_text(i) for i in sorted(f.agents)) + ">> " + _render(f.arg)
    if isinstance(f, Or):
        return f"({_render(f.left)} | {_render(f.right)})"
    if isinstance(f, Until):
        return f"({_render(f.left)} U {_render(f.right)})"
    raise TypeError(f"not a formula: {f!r}")


def render(f: Formula) -> str:
    """Canonical text of ``f``; ``parse(render(f)) == f``."""
    text = _render(f)
    if isinstance(f, (Or, Until)):
        text = text[1:-1]
    return text


# -- parsing ---------------------------------------------------------------

_TOKEN = re.compile(
    r"(?P<ws>\s+)|(?P<coal><<\s*(?:(?:\d+|\*)\s*(?:,\s*(?:\d+|\*)\s*)*)?>>)|(?P<arrow>->)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[~|&()])|(?P<bad>.)"
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    out = []
    line, line_start = 1, 0
    for m in _TOKEN.finditer(text):
        kind, value = m.lastgroup, m.group()
        col = m.start() - line_start + 1
        if kind == "ws":
            for k, ch in enumerate(value):
                if ch == "\n":
                    line += 1
                    line_start = m.start() + k + 1
            continue
        if kind == "bad":
            raise FormulaSyntaxError(f"unexpected character {value!r}", line, col)
        if kind == "ident" and value in ("X", "U", "F", "G", "true", "false"):
            kind = value
        elif kind in ("op", "arrow"):
            kind = value
        out.append(_Tok(kind, value, line, col))
    out.append(_Tok("eof", "", line, len(text) - line_start + 1))
    return out


class _Parser:
    def __init__(self, text: str, agents: Iterable[int] | None):
        self.toks = _tokenize(text)
        self.k = 0
        self.agents = None if agents is None else frozenset(agents)

    def peek(self) -> _Tok:
        return self.toks[self.k]

    def take(self, kind: str | None = None) -> _Tok:
        tok = self.toks[self.k]
        if kind is not None and tok.kind != kind:
            want = "end of input" if kind == "eof" else repr(kind)
            got = "end of input" if tok.kind == "eof" else repr(tok.text)
            raise FormulaSyntaxError(f"expected {want}, found {got}", tok.line, tok.col)
        self.k += 1
        return tok

    def implication(self) -> Formula:
        left = self.until()
        if self.peek().kind == "->":
            self.take()
            return Implies(left, self.implication())
        return left

    def until(self) -> Formula:
        left = self.disjunction()
        if self.peek().kind == "U":
            self.take()
            return Until(left, self.until())
        return left

    def disjunction(self) -> Formula:
        left = self.conjunction()
        while self.peek().kind == "|":
            self.take()
            left = Or(left, self.conjunction())
        return left

    def conjunction(self) -> Formula:
        left = self.unary()
        while self.peek().kind == "&":
            self.take()
            left = And(left, self.unary())
        return left

    def unary(self) -> Formula:
        tok = self.peek()
        if tok.kind == "~":
            self.take()
            return Not(self.unary())
        if tok.kind == "X":
            self.take()
            return Next(self.unary())
        if tok.kind == "F":
            self.take()
            return Eventually(self.unary())
        if tok.kind == "G":
            self.take()
            return Always(self.unary())
        if tok.kind == "coal":
            self.take()
            ids = [0 if x == "*" else int(x) for x in re.findall(r"\d+|\*", tok.text)]
            if self.agents is not None:
                for i in ids:
                    if i not in self.agents:
                        raise FormulaSyntaxError(
                            f"unknown agent {_agent_text(i)} in coalition", tok.line, tok.col)
            return Coalition(frozenset(ids), self.unary())
        return self.primary()

    def primary(self) -> Formula:
        tok = self.take()
        if tok.kind == "ident":
            return Atom(tok.text)
        if tok.kind == "true":
            return TRUE
        if tok.kind == "false":
            return Not(TRUE)
        if tok.kind == "(":
            inner = self.implication()
            self.take(")")
            return inner
        what = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise FormulaSyntaxError(f"unexpected {what}", tok.line, tok.col)


def parse(text: str, agents: Iterable[int] | None = None) -> Formula:
    """Parse ``text``; when ``agents`` is given, coalitions must draw from it."""
    p = _Parser(text, agents)
    f = p.implication()
    p.take("eof")
    return f


def check_vocabulary(f: Formula, atoms: Iterable[str], agents: Iterable[int]) -> None:
    """Raise InputError if ``f`` mentions unknown atoms or agents."""
    extra = atoms_of(f) - frozenset(atoms)
    if extra:
        raise InputError(f"formula mentions unknown atoms {sorted(extra)}")
    extra_agents = agents_of(f) - frozenset(agents)
    if extra_agents:
        raise InputError(f"formula mentions unknown agents {sorted(extra_agents)}")
