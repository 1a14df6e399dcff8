"""LTL over finite structures: a lasso evaluator and a tableau-based universal checker.

Both take a ``holds(state, name)`` callback deciding atomic propositions, so
the checker can feed in labels computed for nested strategic subformulas.
"""

from __future__ import annotations

import functools
import itertools
from collections.abc import Callable, Hashable, Iterable

from cgspc.errors import InputError, PreconditionError
from cgspc.formulas import Atom, Coalition, Formula, Next, Not, Or, Top, Until, subformulas
from cgspc.structures import LassoPath


def _default_holds(state, name: str) -> bool:
    return name in state


def _require_ltl(psi: Formula) -> None:
    if any(isinstance(g, Coalition) for g in subformulas(psi)):
        raise PreconditionError("expected an LTL formula (no coalition operators)")


def eval_ltl_on_lasso(lasso: LassoPath, psi: Formula,
                      holds: Callable[[object, str], bool] = _default_holds) -> bool:
    """Truth of ``psi`` on the infinite word ``prefix . cycle^omega``.

    Works directly from the semantics over the ``len(lasso)`` distinct
    positions; an until at position i scans forward until it either finds its
    right argument or has visited every position reachable from i.
    """
    if not lasso.cycle:
        raise InputError("lasso cycle must be nonempty")
    _require_ltl(psi)
    n = len(lasso)
    memo: dict = {}

    def ev(f: Formula, k: int) -> bool:
        key = (f, k)
        if key in memo:
            return memo[key]
        if isinstance(f, Atom):
            v = holds(lasso[k], f.name)
        elif isinstance(f, Top):
            v = True
        elif isinstance(f, Not):
            v = not ev(f.arg, k)
        elif isinstance(f, Or):
            v = ev(f.left, k) or ev(f.right, k)
        elif isinstance(f, Next):
            v = ev(f.arg, lasso.next_position(k))
        elif isinstance(f, Until):
            v = False
            j = k
            for _ in range(n):
                if ev(f.right, j):
                    v = True
                    break
                if not ev(f.left, j):
                    break
                j = lasso.next_position(j)
        else:
            raise TypeError(f"unexpected node {f!r}")
        memo[key] = v
        return v

    return ev(psi, 0)


class Tableau:
    """Generalised Buchi automaton accepting exactly the words violating ``psi``.

    States are the elementary (maximal propositionally and temporally
    consistent) subsets of the closure of ``psi``, stored as bitmasks over
    ``self.nodes``.  A run reads a word of proposition sets; the automaton
    state at each position must agree with the propositions read there.
    Acceptance: for every until ``a U b``, infinitely many states either
    lack ``a U b`` or contain ``b``.
    """

    def __init__(self, psi: Formula):
        _require_ltl(psi)
        self.psi = psi
        nodes = []
        seen = set()
        for g in subformulas(psi):
            if g not in seen:
                seen.add(g)
                nodes.append(g)
        nodes.sort(key=lambda g: (len(str(g)), str(g)))
        self.nodes = nodes
        bit = {g: 1 << k for k, g in enumerate(nodes)}
        self.bit = bit
        self.props = tuple(sorted({g.name for g in nodes if isinstance(g, Atom)}))
        base = [g for g in nodes if isinstance(g, (Atom, Next, Until))]
        untils = [g for g in nodes if isinstance(g, Until)]
        nexts = [g for g in nodes if isinstance(g, Next)]
        derived = sorted((g for g in nodes if isinstance(g, (Top, Not, Or))), key=_height)

        elementary = []
        for values in itertools.product((False, True), repeat=len(base)):
            mask = sum(bit[g] for g, v in zip(base, values) if v)
            for g in derived:
                if isinstance(g, Top):
                    v = True
                elif isinstance(g, Not):
                    v = not mask & bit[g.arg]
                else:
                    v = bool(mask & (bit[g.left] | bit[g.right]))
                if v:
                    mask |= bit[g]
            ok = True
            for u in untils:
                has_u, has_a, has_b = mask & bit[u], mask & bit[u.left], mask & bit[u.right]
                if (has_b and not has_u) or (has_u and not (has_a or has_b)):
                    ok = False
                    break
            if ok:
                elementary.append(mask)
        self.states = elementary

        prop_bits = [(g.name, bit[g]) for g in nodes if isinstance(g, Atom)]
        self.label = {m: frozenset(name for name, b in prop_bits if m & b) for m in elementary}
        by_label: dict = {}
        for m in elementary:
            by_label.setdefault(self.label[m], []).append(m)
        self.by_label = by_label

        # successor constraints: (mask of bits that must be decided, their values)
        self.succ: dict = {}
        for m in elementary:
            care = val = 0
            for x in nexts:
                care |= bit[x.arg]
                if m & bit[x]:
                    val |= bit[x.arg]
            feasible = True
            for u in untils:
                b_u = bit[u]
                if m & b_u:
                    if not m & bit[u.right]:
                        need = (b_u, b_u)
                    else:
                        continue
                else:
                    if m & bit[u.left]:
                        need = (b_u, 0)
                    else:
                        continue
                c, v = need
                if care & c and (val & c) != v:
                    feasible = False
                    break
                care |= c
                val |= v
            grouped: dict = {}
            if feasible:
                for m2 in elementary:
                    if m2 & care == val:
                        grouped.setdefault(self.label[m2], []).append(m2)
            self.succ[m] = grouped
        self.accepting = [
            frozenset(m for m in elementary if not m & bit[u] or m & bit[u.right]) for u in untils
        ]
        self.psi_bit = bit[psi]

    def initial(self, label: frozenset) -> list[int]:
        """Automaton states compatible with ``label`` that violate ``psi``."""
        return [m for m in self.by_label.get(label, ()) if not m & self.psi_bit]


@functools.lru_cache(maxsize=65536)
def _height(g: Formula) -> int:
    kids = g.children()
    return 1 + max((_height(k) for k in kids), default=0)


@functools.lru_cache(maxsize=4096)
def tableau_for(psi: Formula) -> Tableau:
    return Tableau(psi)


_FALSE = Not(Top())


def _neg(f: Formula) -> Formula:
    if isinstance(f, Top):
        return _FALSE
    if isinstance(f, Not):
        return f.arg
    return Not(f)


def _or(a: Formula, b: Formula) -> Formula:
    if isinstance(a, Top) or isinstance(b, Top):
        return Top()
    if a == _FALSE:
        return b
    if b == _FALSE or a == b:
        return a
    return Or(a, b)


def _and(a: Formula, b: Formula) -> Formula:
    return _neg(_or(_neg(a), _neg(b)))


def _progress(f: Formula, state, holds) -> Formula:
    """What ``f`` demands of the suffix after ``state``."""
    if isinstance(f, Top):
        return f
    if isinstance(f, Atom):
        return Top() if holds(state, f.name) else _FALSE
    if isinstance(f, Not):
        return _neg(_progress(f.arg, state, holds))
    if isinstance(f, Or):
        left = _progress(f.left, state, holds)
        if isinstance(left, Top):
            return left
        return _or(left, _progress(f.right, state, holds))
    if isinstance(f, Next):
        return f.arg
    if isinstance(f, Until):
        now = _progress(f.right, state, holds)
        if isinstance(now, Top):
            return now
        return _or(now, _and(_progress(f.left, state, holds), f))
    raise TypeError(f"unexpected node {f!r}")


@functools.lru_cache(maxsize=4096)
def has_until(psi: Formula) -> bool:
    return any(isinstance(g, Until) for g in subformulas(psi))


@functools.lru_cache(maxsize=4096)
def next_depth(psi: Formula) -> int:
    """Maximal nesting of X operators."""
    below = max((next_depth(k) for k in psi.children()), default=0)
    return below + 1 if isinstance(psi, Next) else below


def _infinite_from(steps):
    """Memoised test: does some infinite path start at a state?"""
    memo: dict = {}

    def live(t) -> bool:
        if t in memo:
            return memo[t]
        on_path = {t}
        work = [(t, iter(steps(t)))]
        while work:
            node, it = work[-1]
            pushed = False
            for u in it:
                if u in on_path or memo.get(u):
                    for n, _ in work:
                        memo[n] = True
                    return True
                if u not in memo:
                    on_path.add(u)
                    work.append((u, iter(steps(u))))
                    pushed = True
                    break
            if not pushed:
                memo[node] = False
                on_path.discard(node)
                work.pop()
        return False

    return live


def _bounded_violation(start, steps, psi, holds, total: bool) -> bool:
    live = (lambda t: True) if total else _infinite_from(steps)
    memo: dict = {}

    def viol(t, f) -> bool:
        key = (t, f)
        hit = memo.get(key)
        if hit is None:
            r = _progress(f, t, holds)
            if isinstance(r, Top):
                hit = False
            elif r == _FALSE:
                hit = live(t)
            else:
                hit = any(viol(u, r) for u in steps(t))
            memo[key] = hit
        return hit

    return viol(start, psi)


def doomed_prefix(start: Hashable, steps: Callable[[Hashable], Iterable], psi: Formula,
                  holds: Callable[[object, str], bool] = _default_holds,
                  budget: int = 4096, max_height: int = 64) -> bool:
    """Is there a finite path along ``steps`` after which ``psi`` is already lost?

    Progresses ``psi`` along every path from ``start``; a residual of
    ``false`` means every continuation violates ``psi``.  Incomplete by
    design: gives up (answering False) after ``budget`` (state, residual)
    pairs, and does not follow residuals nested deeper than ``max_height``.
    """
    seen = set()
    stack = [(start, psi)]
    while stack:
        node = stack.pop()
        if node in seen:
            continue
        if len(seen) >= budget:
            return False
        seen.add(node)
        t, f = node
        r = _progress(f, t, holds)
        if r == _FALSE:
            return True
        if isinstance(r, Top) or _height(r) > max_height:
            continue
        stack.extend((u, r) for u in steps(t))
    return False


def exists_violation(start: Hashable, steps: Callable[[Hashable], Iterable], psi: Formula,
                     holds: Callable[[object, str], bool] = _default_holds,
                     total: bool = False, method: str = "auto") -> bool:
    """True iff some infinite path from ``start`` following ``steps`` violates ``psi``.

    States for which ``steps`` yields nothing are dead ends; finite paths
    through them are ignored.  ``total=True`` promises there are none.
    Until-free formulas only constrain a bounded prefix and are decided by
    progression along that prefix; the rest go through the tableau product.
    ``method="tableau"`` forces the product route for every formula.
    """
    if method not in ("auto", "tableau"):
        raise PreconditionError(f"unknown method {method!r}")
    if method == "auto" and not has_until(psi):
        return _bounded_violation(start, steps, psi, holds, total)
    tab = tableau_for(psi)
    props = tab.props
    labels: dict = {}

    def label(k):
        lab = labels.get(k)
        if lab is None:
            lab = frozenset(p for p in props if holds(k, p))
            labels[k] = lab
        return lab

    roots = [(start, m) for m in tab.initial(label(start))]
    if not roots:
        return False
    succ_cache: dict = {}

    def successors_of(node):
        out = succ_cache.get(node)
        if out is None:
            k, m = node
            grouped = tab.succ[m]
            out = []
            if grouped:
                for k2 in steps(k):
                    for m2 in grouped.get(label(k2), ()):
                        out.append((k2, m2))
            succ_cache[node] = out
        return out

    accepting = tab.accepting
    for comp in _sccs(roots, successors_of):
        if len(comp) == 1:
            (node,) = comp
            if node not in successors_of(node):
                continue
        members = {m for _, m in comp}
        if all(members & acc for acc in accepting):
            return True
    return False


def _sccs(roots, successors_of):
    """Strongly connected components reachable from ``roots`` (iterative Tarjan)."""
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    counter = 0
    for root in roots:
        if root in index:
            continue
        work = [(root, iter(successors_of(root)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for nxt in it:
                if nxt not in index:
                    index[nxt] = low[nxt] = counter
                    counter += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(successors_of(nxt))))
                    advanced = True
                    break
                if nxt in on_stack and index[nxt] < low[node]:
                    low[node] = index[nxt]
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                if low[node] < low[parent]:
                    low[parent] = low[node]
            if low[node] == index[node]:
                comp = []
                while True:
                    x = stack.pop()
                    on_stack.discard(x)
                    comp.append(x)
                    if x == node:
                        break
                yield comp


def holds_universally(start: Hashable, steps: Callable[[Hashable], Iterable], psi: Formula,
                      holds: Callable[[object, str], bool] = _default_holds,
                      method: str = "auto") -> bool:
    """True iff every infinite path from ``start`` satisfies ``psi``."""
    return not exists_violation(start, steps, psi, holds, method=method)
