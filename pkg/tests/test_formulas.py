import pytest
from hypothesis import given, strategies as st

from cgspc.errors import FormulaSyntaxError, InputError
from cgspc.formulas import (
    TRUE,
    Atom,
    Coalition,
    Fragment,
    Next,
    Not,
    Or,
    Until,
    classify,
    check_vocabulary,
    is_state_formula,
    node_counts,
    parse,
    render,
    size,
    translate_tr,
)

p, q, r = Atom("p"), Atom("q"), Atom("r")

coalitions = st.frozensets(st.integers(1, 3), max_size=3)

formulas = st.recursive(
    st.sampled_from([p, q, r, TRUE]),
    lambda sub: st.one_of(
        st.builds(Not, sub),
        st.builds(Or, sub, sub),
        st.builds(Next, sub),
        st.builds(Until, sub, sub),
        st.builds(Coalition, coalitions, sub),
    ),
    max_leaves=12,
)


class TestParse:
    def test_coalition_next(self):
        assert parse("<<1,2>> X p") == Coalition(frozenset({1, 2}), Next(p))

    def test_negated_coalition(self):
        assert parse("~<<1>> X q") == Not(Coalition(frozenset({1}), Next(q)))

    def test_until_binds_looser_than_or(self):
        assert parse("p U (q | r)") == Until(p, Or(q, r))
        assert parse("p U q | r") == Until(p, Or(q, r))

    def test_until_is_right_associative(self):
        assert parse("p U q U r") == Until(p, Until(q, r))

    def test_and_binds_tighter_than_or(self):
        assert parse("p | q & r") == Or(p, Not(Or(Not(q), Not(r))))

    def test_implication_is_loosest(self):
        assert parse("p -> q U r") == Or(Not(p), Until(q, r))

    def test_derived_operators(self):
        assert parse("F p") == Until(TRUE, p)
        assert parse("G p") == Not(Until(TRUE, Not(p)))
        assert parse("false") == Not(TRUE)

    def test_empty_coalition(self):
        assert parse("<<>> F p") == Coalition(frozenset(), Until(TRUE, p))

    def test_star_agent(self):
        assert parse("<<1,*>> X p") == Coalition(frozenset({0, 1}), Next(p))
        assert render(parse("<<*>> X p")) == "<<*>> X p"

    def test_syntax_error_position(self):
        with pytest.raises(FormulaSyntaxError) as info:
            parse("p |\n  & q")
        assert (info.value.line, info.value.column) == (2, 3)

    def test_unbalanced(self):
        with pytest.raises(FormulaSyntaxError):
            parse("(p U q")

    def test_unknown_agent(self):
        with pytest.raises(InputError):
            parse("<<3>> X p", agents=[1, 2])

    def test_vocabulary(self):
        with pytest.raises(InputError):
            check_vocabulary(parse("<<1>> X z"), ["p"], [1])
        with pytest.raises(InputError):
            check_vocabulary(parse("<<2>> X p"), ["p"], [1])


class TestClassify:
    def test_ltl(self):
        assert classify(parse("X (p U q)")) is Fragment.LTL

    def test_atl(self):
        assert classify(parse("<<1>> (p U q)")) is Fragment.ATL
        assert classify(parse("~<<1>> X <<2>> (p U q)")) is Fragment.ATL

    def test_atl_star(self):
        assert classify(parse("<<1>> X X p")) is Fragment.ATLSTAR
        assert classify(parse("<<1>> F G p")) is Fragment.ATLSTAR

    def test_state_formula(self):
        assert is_state_formula(parse("p | <<1>> X q"))
        assert not is_state_formula(parse("X p"))


class TestTranslate:
    def test_atom_fixed(self):
        assert translate_tr(p) == p

    def test_next_doubled(self):
        assert translate_tr(parse("<<1>> X q")) == parse("<<1>> X X q")

    def test_until_homomorphic(self):
        f = parse("<<1>> (p U q)")
        assert translate_tr(f) == f


def test_render_of_eventually_contains_until():
    assert "U" in render(parse("F p"))


@given(formulas)
def test_parse_render_roundtrip(f):
    assert parse(render(f)) == f


@given(formulas)
def test_render_is_canonical(f):
    text = render(f)
    assert render(parse(text)) == text


@given(formulas)
def test_tr_doubles_next_and_keeps_the_rest(f):
    before, after = node_counts(f), node_counts(translate_tr(f))
    assert after["Next"] == 2 * before["Next"]
    for kind in set(before) | set(after):
        if kind != "Next":
            assert after[kind] == before[kind]
    assert size(translate_tr(f)) <= 2 * size(f)


@given(formulas)
def test_tr_leaves_no_atl_shape_with_next(f):
    if classify(f) is not Fragment.LTL and any(isinstance(g, Next) for g in _walk(f)):
        assert classify(translate_tr(f)) is Fragment.ATLSTAR


def _walk(f):
    yield f
    for k in f.children():
        yield from _walk(k)
