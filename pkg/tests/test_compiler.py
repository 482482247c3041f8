import itertools
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sheetkit.cells import CellAddr
from sheetkit.compiler import (
    compile_files,
    compile_module,
    expand_equation,
    expand_macros,
    parse_layout,
)
from sheetkit.dsl import ModuleAst, parse_module
from sheetkit.errors import CompileError
from sheetkit.formula import parse_formula, serialize_formula
from sheetkit.randgen import random_module_text
from sheetkit.workbook import parse_workbook, serialize_workbook


def compile_text(text, layout=""):
    return compile_module(parse_module(text), parse_layout(layout))


def test_element_equations_compile_to_a1():
    w = compile_text(
        "table Builds[2000:2001]\ntable Demolitions[2000:2001]\ntable Net[2000:2001]\n"
        "Builds[all y] = 5\nDemolitions[all y] = 1\n"
        "Net[ 2000 ] = Builds[ 2000 ] - Demolitions[ 2000 ]\n"
        "Net[ 2001 ] = Builds[ 2001 ] - Demolitions[ 2001 ]\n",
        "place Builds at 'House Stocks'!F4\nplace Demolitions at 'House Stocks'!G4\n"
        "place Net at 'House Stocks'!H4\n",
    )
    assert serialize_formula(w[CellAddr("House Stocks", 8, 4)]) == "'House Stocks'!F4 - 'House Stocks'!G4"
    assert serialize_formula(w[CellAddr("House Stocks", 8, 5)]) == "'House Stocks'!F5 - 'House Stocks'!G5"
    assert len(w) == 6


def test_housing_fixture_matches_hand_listing(fixtures):
    w = compile_files([fixtures / "housing.sheet"], fixtures / "housing.layout")
    # built independently, row by row
    expected = [
        "'House Stocks'!F1 = \"Newly built houses\"",
        "'House Stocks'!G1 = \"Demolished houses\"",
        "'House Stocks'!H1 = \"Net new houses\"",
    ]
    for r in range(4, 14):
        y = r + 1996
        expected += [
            f"'House Stocks'!F{r} = 1000 + 10 * ({y} - 2000)",
            f"'House Stocks'!G{r} = 150",
            f"'House Stocks'!H{r} = 'House Stocks'!F{r} - 'House Stocks'!G{r}",
        ]
    assert serialize_workbook(w) == serialize_workbook(parse_workbook("\n".join(expected)))


def test_two_dimensional_layout():
    w = compile_text(
        "table T[1:2, 1:3]\nT[all i, all j] = 10 * i + j\n", "place T at 'S'!B2\n"
    )
    assert serialize_formula(w[CellAddr("S", 4, 3)]) == "10 * 2 + 3"
    assert {(a.col, a.row) for a in w} == {(c, r) for c in range(2, 5) for r in range(2, 4)}


def test_across_layout():
    w = compile_text("table T[0:2]\nT[all i] = i\n", "place T at 'S'!C1 across\n")
    assert sorted(a.a1 for a in w) == ["C1", "D1", "E1"]


def test_guard_macro_duplicates_argument(fixtures):
    w = compile_files([fixtures / "guard.sheet"])
    text = serialize_formula(w[CellAddr("Rates", 3, 3)])
    assert text == "IF(NOT(ISNA('Rates'!B3 / (2 - 1))), 'Rates'!B3 / (2 - 1), 0)"


def test_nested_macros_and_case():
    m = parse_module("def twice(x) = x + x\ndef quad(x) = Twice(TWICE(x))\n")
    out = expand_macros(parse_formula("quad(A1)", "S"), m.macros)
    assert serialize_formula(out) == "'S'!A1 + 'S'!A1 + ('S'!A1 + 'S'!A1)"


@pytest.mark.parametrize(
    "module,layout,message",
    [
        ("table T[1:2]\nT[1] = 1", "place T at 'S'!A1", r"T\[2\] is placed but no equation"),
        ("table T[1:2]\nT[all i] = 1\nT[2] = 3", "place T at 'S'!A1", r"T\[2\] defined twice"),
        ("table T[1:2]\nT[all i] = T[i + 1]", "place T at 'S'!A1", r"T\[3\] is outside declared range.*i=2"),
        ("table T[1:2]\nT[all i] = 1", "", "no layout"),
        ("table T[1:2]\ntable U[1:2]\nT[all i] = 1\nU[all i] = 2", "place T at 'S'!A1\nplace U at 'S'!A2", "overlap"),
        ("table T[1:2, 1:2]\nT[all i, all j] = 1", "place T at 'S'!A1 down", "drop 'down'"),
        ("table T[1:2, 1:2, 1:2]\nT[all i, all j, all k] = 1", "place T at 'S'!A1", "3-D table"),
        ("table T[1:2]\nT[all i] = 1\n'S'!A2 = 5", "place T at 'S'!A1", "'S'!A2"),
        ("def f(x) = g(x)\ndef g(x) = f(x)\ntable T[1:1]\nT[all i] = f(1)", "place T at 'S'!A1", "F -> G -> F"),
        ("def f(x) = x\ntable T[1:1]\nT[all i] = f(1, 2)", "place T at 'S'!A1", "argument"),
        ("table T[1:1]\nT[all i] = U[1]", "place T at 'S'!A1", "U"),
        ("table T[1:1]\nT[all i] = 1", "place U at 'S'!A1", "U"),
    ],
)
def test_compile_errors(module, layout, message):
    with pytest.raises(CompileError, match=message):
        compile_text(module + "\n", layout + "\n")


def test_macro_blowup_is_capped():
    defs = "".join(f"def m{i}(x) = m{i + 1}(x) + m{i + 1}(x)\n" for i in range(20))
    defs += "def m20(x) = x\ntable T[1:1]\nT[all i] = m0(1)\nplace T at 'S'!A1\n"
    with pytest.raises(CompileError, match="expansion"):
        compile_text(defs)


def _modules():
    return st.integers(0, 10**6).map(lambda s: parse_module(random_module_text(random.Random(s))))


@given(_modules(), st.randoms(use_true_random=False))
def test_item_order_does_not_matter(m, rnd):
    shuffled = ModuleAst(
        tables=tuple(rnd.sample(m.tables, len(m.tables))),
        equations=tuple(rnd.sample(m.equations, len(m.equations))),
        macros=tuple(reversed(m.macros)),
        layout=tuple(rnd.sample(m.layout, len(m.layout))),
    )
    assert compile_module(shuffled) == compile_module(m)


@given(_modules())
def test_macro_expansion_commutes_with_equation_expansion(m):
    tables = {t.name: t for t in m.tables}
    for eq in m.equations:
        first = expand_equation(
            type(eq)(eq.table, eq.lhs, expand_macros(eq.rhs, m.macros)), tables
        )
        second = expand_equation(eq, tables)
        assert [e.rhs for e in first] == [expand_macros(e.rhs, m.macros) for e in second]


@given(_modules())
def test_cell_count_is_sum_of_table_sizes(m):
    w = compile_module(m)
    assert len(w) == sum(t.size() for t in m.tables)


def test_expand_equation_enumerates_in_lhs_order():
    m = parse_module("table T[1:2, 5:6]\nT[all a, all b] = a * b\n")
    elems = expand_equation(m.equations[0], {t.name: t for t in m.tables})
    assert [e.subs for e in elems] == list(itertools.product((1, 2), (5, 6)))
    assert serialize_formula(elems[-1].rhs) == "2 * 6"
