import pytest
from hypothesis import given, settings, strategies as st

from pge.grammar import (
    NT, PCFG, T, GrammarError, Symbol, builtin_grammar, parse_bnf, serialize, to_pcfg, validate,
)


def test_minimal_grammar():
    g = parse_bnf("<s> ::= a")
    assert g.axiom == "s"
    assert g.nonterminals == ("s",)
    assert g.terminals == {"a"}
    assert len(g.productions["s"]) == 1


def test_pagie_grammar_shape():
    g = builtin_grammar("pagie")
    assert g.nonterminals == ("start", "expr", "op", "pre_op", "var")
    assert [g.arity(n) for n in g.nonterminals] == [1, 4, 4, 5, 3]
    assert [str(r) for r in g.productions["var"]] == ["x", "y", "1.0"]
    assert str(g.productions["expr"][2]) == "<pre_op> ( <expr> )"


def test_boston_grammar_has_fourteen_vars():
    g = builtin_grammar("boston")
    assert g.arity("var") == 14
    assert str(g.productions["var"][-1]) == "1.0"


def test_arith_grammar(arith_grammar):
    assert arith_grammar.arity("op") == 4
    assert [str(r) for r in arith_grammar.productions["var"]] == ["x", "y", "1.0"]
    # no whitespace between adjacent nonterminals
    assert arith_grammar.productions["expr"][0].symbols == (NT("expr"), NT("op"), NT("expr"))


@pytest.mark.parametrize("text, line, fragment", [
    ("<s> ::= a\n<t> b", 2, "::="),
    ("<s> ::= <a", 1, "unterminated"),
    ("<s> ::= <t>", 1, "undefined"),
    ("<s> ::= a\n\n<s> ::= b", 3, "duplicate"),
    ("<s> ::= a | | b", 1, "empty alternative"),
    ("s ::= a", 1, "left-hand side"),
])
def test_parse_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(GrammarError) as exc:
        parse_bnf(text)
    assert exc.value.line == line
    assert fragment in str(exc.value)


def test_empty_text_rejected():
    with pytest.raises(GrammarError):
        parse_bnf("   \n")


def test_symbol_invariants():
    with pytest.raises(ValueError):
        Symbol("terminal", "")
    with pytest.raises(ValueError):
        NT("a<b")


def test_to_pcfg_small_grammar(small_grammar):
    pcfg = to_pcfg(small_grammar)
    assert pcfg.probs["start"] == (1.0,)
    assert pcfg.probs["expr"] == (0.5, 0.5)
    assert pcfg.probs["var"] == (0.5, 0.5)


def test_to_pcfg_pagie_op_uniform():
    assert to_pcfg(builtin_grammar("pagie")).probs["op"] == (0.25,) * 4


def test_validate(small_grammar):
    pcfg = to_pcfg(small_grammar)
    assert validate(pcfg) == []

    pcfg.probs["expr"] = (0.7, 0.7)
    violations = validate(pcfg)
    assert len(violations) == 1 and "<expr>" in violations[0] and "sum" in violations[0]

    pcfg = to_pcfg(small_grammar)
    pcfg.probs["var"] = (-0.1, 1.1)
    violations = validate(pcfg)
    assert len(violations) == 1 and "outside" in violations[0]

    pcfg = to_pcfg(small_grammar)
    pcfg.probs["op"] = (0.5, 0.5)
    assert "productions" in validate(pcfg)[0]


# -- random grammars --------------------------------------------------------

names = st.text("abcdefgh_", min_size=1, max_size=5)
terminals = st.text("xyz+-*/()01.", min_size=1, max_size=3).filter(lambda t: "|" not in t)


@st.composite
def grammars(draw):
    nts = draw(st.lists(names, min_size=1, max_size=4, unique=True))
    lines = []
    for nt in nts:
        alts = []
        for _ in range(draw(st.integers(1, 4))):
            syms = draw(st.lists(
                st.one_of(terminals, st.sampled_from(nts).map(lambda n: f"<{n}>")),
                min_size=1, max_size=4))
            alts.append(" ".join(syms))
        lines.append(f"<{nt}> ::= " + " | ".join(alts))
    return parse_bnf("\n".join(lines))


@settings(max_examples=200, deadline=None)
@given(grammars())
def test_round_trip(g):
    again = parse_bnf(serialize(g))
    assert again.nonterminals == g.nonterminals
    assert again.axiom == g.axiom
    assert again.productions == g.productions


@settings(max_examples=200, deadline=None)
@given(grammars())
def test_to_pcfg_always_valid(g):
    pcfg = to_pcfg(g)
    assert validate(pcfg) == []
    for n in g.nonterminals:
        assert len(pcfg.probs[n]) == len(g.productions[n])
