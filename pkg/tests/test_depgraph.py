import random
import re

import pydot
from hypothesis import given
from hypothesis import strategies as st

from sheetkit.depgraph import emit_dot, referenced_sheets, sheet_deps
from sheetkit.dsl import parse_run_listing
from sheetkit.randgen import random_workbook
from sheetkit.runs import expand_runs
from sheetkit.workbook import Workbook, parse_workbook


def home_sales(fixtures):
    return expand_runs(parse_run_listing((fixtures / "home_sales.runs").read_text()))


def parse_dot(text):
    graphs = pydot.graph_from_dot_data(text)
    assert graphs is not None and len(graphs) == 1
    return graphs[0]


def unquote(s):
    return re.sub(r'\\(.)', r"\1", s[1:-1]) if s.startswith('"') else s


def test_home_sales_edges(fixtures):
    g = sheet_deps(home_sales(fixtures))
    # 20 cells, each with one reference to each source sheet
    assert g.sorted_edges() == [("Home Sales", "Flat Sales", 20), ("Home Sales", "House Sales", 20)]
    assert g.nodes == {"Home Sales", "House Sales", "Flat Sales"}


def test_home_sales_dot(fixtures):
    text = emit_dot(sheet_deps(home_sales(fixtures)))
    assert text.startswith("digraph sheets {\n")
    assert '  "Home Sales" -> "House Sales" [label="20"];\n' in text
    dot = parse_dot(text)
    edges = sorted((unquote(e.get_source()), unquote(e.get_destination()), e.get("label")) for e in dot.get_edges())
    assert edges == [("Home Sales", "Flat Sales", '"20"'), ("Home Sales", "House Sales", '"20"')]


def test_no_counts():
    w = parse_workbook("'A'!A1 = 'B'!A1\n")
    assert emit_dot(sheet_deps(w), counts=False) == 'digraph sheets {\n  "A";\n  "B";\n  "A" -> "B";\n}\n'


def test_self_references():
    w = parse_workbook("'S'!A1 = 'S'!B1 + SUM('S'!C1:C9)\n")
    assert not sheet_deps(w).edges
    assert sheet_deps(w, include_self=True).sorted_edges() == [("S", "S", 2)]


def test_empty_graph():
    assert emit_dot(sheet_deps(Workbook())) == "digraph sheets { }\n"
    parse_dot(emit_dot(sheet_deps(Workbook())))


def test_awkward_sheet_names_survive_dot():
    w = parse_workbook("'say \"hi\"'!A1 = 'back\\slash'!A1 + 'it''s'!B2\n")
    dot = parse_dot(emit_dot(sheet_deps(w)))
    targets = sorted(unquote(e.get_destination()) for e in dot.get_edges())
    assert targets == ["back\\slash", "it's"]


def test_range_counts_once():
    w = parse_workbook("'A'!A1 = SUM('B'!A1:Z99)\n")
    assert sheet_deps(w).sorted_edges() == [("A", "B", 1)]


@given(st.integers(0, 10**9))
def test_edges_sound_and_complete(seed):
    w = random_workbook(random.Random(seed))
    g = sheet_deps(w)
    # brute-force rescan
    expected = {}
    for addr, f in w.items():
        for target in referenced_sheets(f):
            if target != addr.sheet:
                expected[addr.sheet, target] = expected.get((addr.sheet, target), 0) + 1
    assert dict(g.edges) == expected
    for (a, b), cell in g.witness.items():
        assert cell.sheet == a and b in referenced_sheets(w[cell])
    parse_dot(emit_dot(g))
