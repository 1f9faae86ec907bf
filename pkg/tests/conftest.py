import pytest

from pge.grammar import parse_bnf, to_pcfg

ARITH_BNF = """\
<start> ::= <expr>
<expr> ::= <expr><op><expr>
         | <var>
<op> ::= +
       | -
       | *
       | /
<var> ::= x
        | y
        | 1.0
"""

SMALL_BNF = """\
<start> ::= <expr>
<expr> ::= <expr><op><expr> | <var>
<op> ::= + | * | -
<var> ::= x | 1.0
"""

TWO_NT_BNF = """\
<e> ::= <e> + <t> | <t> | ( <e> )
<t> ::= a | b
"""


@pytest.fixture
def arith_grammar():
    return parse_bnf(ARITH_BNF)


@pytest.fixture
def small_grammar():
    return parse_bnf(SMALL_BNF)


@pytest.fixture
def small_pcfg(small_grammar):
    return to_pcfg(small_grammar)


ACCEPTANCE_RESULTS = {}


@pytest.fixture
def criterion():
    """Record a pass/fail line for an acceptance criterion."""

    def record(number, title, ok, detail=""):
        ACCEPTANCE_RESULTS[number] = (title, bool(ok), detail)
        assert ok, f"criterion {number} ({title}) failed: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        title, ok, detail = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number}. {title}: {detail}")
