import itertools
import random
import string
from decimal import Decimal

import pytest
from hypothesis import given
from hypothesis import strategies as st
from strategies import addrs, formulas

from sheetkit.cells import CellAddr, col_to_index, index_to_col
from sheetkit.errors import ParseError
from sheetkit.formula import (
    Binary,
    Call,
    CellRef,
    Number,
    RangeRef,
    String,
    Unary,
    parse_formula,
    serialize_formula,
)


def enumerate_columns(max_len=3):
    """Column names in spreadsheet order, by brute-force enumeration."""
    for n in range(1, max_len + 1):
        for letters in itertools.product(string.ascii_uppercase, repeat=n):
            yield "".join(letters)


def test_column_letters_match_enumeration():
    for i, name in enumerate(enumerate_columns(), start=1):
        assert col_to_index(name) == i
        assert index_to_col(i) == name
    assert i == 26 + 26**2 + 26**3


@pytest.mark.parametrize("name,index", [("A", 1), ("Z", 26), ("AA", 27), ("AB", 28), ("AZ", 52), ("BA", 53)])
def test_column_examples(name, index):
    assert col_to_index(name) == index


@given(st.integers(1, 10**7))
def test_index_to_col_inverse(i):
    assert col_to_index(index_to_col(i)) == i


@pytest.mark.parametrize("bad", ["", "a1", "A1", "Ä", " A"])
def test_bad_column_letters(bad):
    with pytest.raises(ParseError):
        col_to_index(bad)


def test_index_to_col_rejects_zero():
    with pytest.raises(ValueError):
        index_to_col(0)


def test_cell_addr_validation():
    with pytest.raises(ValueError):
        CellAddr("S", 0, 1)
    with pytest.raises(ValueError):
        CellAddr("S", 1, 0)
    with pytest.raises(ValueError):
        CellAddr("", 1, 1)


def test_cell_addr_text_and_order():
    a = CellAddr("House Stocks", 8, 4)
    assert str(a) == "'House Stocks'!H4"
    assert str(CellAddr("Flat's", 1, 1)) == "'Flat''s'!A1"
    cells = [CellAddr("S", 2, 1), CellAddr("S", 1, 2), CellAddr("R", 9, 9)]
    assert sorted(cells, key=lambda c: c.sort_key) == [cells[2], cells[0], cells[1]]


@given(addrs)
def test_address_parses_back(a):
    node = parse_formula(str(a))
    assert node == CellRef(a)


# -- formulas ------------------------------------------------------------------

def P(text):
    return parse_formula(text, "S")


def ref(a1):
    return P(a1)


def test_cross_sheet_formula():
    f = parse_formula("'House Stocks'!F4 - 'House Stocks'!G4")
    assert f == Binary("-", CellRef(CellAddr("House Stocks", 6, 4)), CellRef(CellAddr("House Stocks", 7, 4)))
    assert serialize_formula(f) == "'House Stocks'!F4 - 'House Stocks'!G4"


def test_precedence():
    assert P("1 + 2 * 3") == Binary("+", Number(Decimal(1)), Binary("*", Number(Decimal(2)), Number(Decimal(3))))
    assert P("2 ^ 3 ^ 2") == Binary("^", Number(Decimal(2)), Binary("^", Number(Decimal(3)), Number(Decimal(2))))
    assert P("1 - 2 - 3") == Binary("-", Binary("-", Number(Decimal(1)), Number(Decimal(2))), Number(Decimal(3)))
    assert P('"a" & 1 + 2') == Binary("&", String("a"), Binary("+", Number(Decimal(1)), Number(Decimal(2))))
    assert P("A1 = B1 & C1").op == "="
    assert P("-A1 ^ 2") == Unary("-", Binary("^", ref("A1"), Number(Decimal(2))))


def test_negative_literal_folds():
    assert P("-5") == Number(Decimal(-5))
    assert P("2 ^ -3") == Binary("^", Number(Decimal(2)), Number(Decimal(-3)))
    assert serialize_formula(Unary("-", Number(Decimal(5)))) == "-(5)"


def test_comparison_chain_rejected():
    with pytest.raises(ParseError):
        P("A1 = B1 = C1")


def test_ranges_and_calls():
    f = P("sum(A1:B3, 'T'!C2:A1)")
    assert isinstance(f, Call) and f.name == "SUM"
    assert f.args[0] == RangeRef(CellAddr("S", 1, 1), CellAddr("S", 2, 3))
    assert f.args[1] == RangeRef(CellAddr("T", 1, 1), CellAddr("T", 3, 2))
    assert serialize_formula(f) == "SUM('S'!A1:B3, 'T'!A1:C2)"
    assert serialize_formula(f, context_sheet="S") == "SUM(A1:B3, 'T'!A1:C2)"


def test_strings_with_quotes():
    f = P('"say ""hi"""')
    assert f == String('say "hi"')
    assert serialize_formula(f) == '"say ""hi"""'


def test_number_formatting():
    assert serialize_formula(P("1.50")) == "1.5"
    assert serialize_formula(P("1e3")) == "1000"
    assert serialize_formula(P("0.000")) == "0"


@pytest.mark.parametrize(
    "bad", ["", "1 +", "(1", "A1:", "SUM(1,", '"open', "1e5000", "A0", "'S'!", "1 2", "@"]
)
def test_parse_errors_are_located(bad):
    with pytest.raises(ParseError) as info:
        P(bad)
    assert info.value.line == 1 and info.value.col is not None


@given(formulas)
def test_print_parse_round_trip(f):
    text = serialize_formula(f)
    assert parse_formula(text) == f
    assert serialize_formula(parse_formula(text)) == text


@given(formulas, st.sampled_from(["S", "House Stocks"]))
def test_context_sheet_round_trip(f, sheet):
    assert parse_formula(serialize_formula(f, context_sheet=sheet), sheet) == f


def test_fuzz_never_crashes():
    rng = random.Random(7)
    alphabet = "AB1:()+-*/^&=<>,\"'!$. SUM"
    for _ in range(3000):
        text = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 14)))
        try:
            parse_formula(text, "S")
        except ParseError:
            pass
