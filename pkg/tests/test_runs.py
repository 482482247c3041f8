import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sheetkit.cells import CellAddr
from sheetkit.dsl import parse_run_listing
from sheetkit.errors import RunError
from sheetkit.formula import Binary, Call, CellRef, Number, RangeRef, String, Unary
from sheetkit.randgen import WorkbookGenConfig, random_workbook
from sheetkit.runs import detect_runs, expand_runs, mergeable_pairs, serialize_run_listing
from sheetkit.workbook import Workbook, parse_workbook, serialize_workbook


def runs_text(cells_text):
    return serialize_run_listing(detect_runs(parse_workbook(cells_text)))


# -- an independent definition of "these cells form one run" --------------------

def flatten(node):
    """(shape, slots) with slots as (kind, value) pairs."""
    if isinstance(node, Number):
        return ("N",), [("n", node.value)]
    if isinstance(node, String):
        return ("S", node.value), []
    if isinstance(node, CellRef):
        a = node.addr
        return ("R", a.sheet), [("c", a.col), ("r", a.row)]
    if isinstance(node, RangeRef):
        s, e = node.start, node.end
        return ("G", s.sheet), [("c", s.col), ("r", s.row), ("c", e.col), ("r", e.row)]
    if isinstance(node, Unary):
        shape, slots = flatten(node.operand)
        return ("U", node.op, shape), slots
    if isinstance(node, Binary):
        ls, lv = flatten(node.left)
        rs, rv = flatten(node.right)
        return ("B", node.op, ls, rs), lv + rv
    if isinstance(node, Call):
        parts = [flatten(a) for a in node.args]
        return ("F", node.name, tuple(p[0] for p in parts)), [v for p in parts for v in p[1]]
    raise TypeError(node)


def oracle_is_run(cells, sheet, top, left, h, w):
    grid = {}
    for i in range(h):
        for k in range(w):
            f = cells.get(CellAddr(sheet, left + k, top + i))
            if f is None:
                return False
            grid[i, k] = flatten(f)
    shapes = {g[0] for g in grid.values()}
    if len(shapes) != 1:
        return False
    base = grid[0, 0][1]
    for j, (kind, v0) in enumerate(base):
        vals = {ik: g[1][j][1] for ik, g in grid.items()}
        if kind == "c":
            ok = all(v == v0 for v in vals.values()) or all(v == v0 + k for (i, k), v in vals.items())
        elif kind == "r":
            ok = all(v == v0 for v in vals.values()) or all(v == v0 + i for (i, k), v in vals.items())
        else:
            a = vals[1, 0] - v0 if h > 1 else 0
            b = vals[0, 1] - v0 if w > 1 else 0
            ok = a == int(a) and b == int(b) and all(
                v == v0 + i * a + k * b for (i, k), v in vals.items()
            )
        if not ok:
            return False
    return True


def rects(listing):
    for run in listing.items:
        (c1, c2), (r1, r2) = run.extent("col"), run.extent("row")
        yield run.sheet, r1, c1, r2 - r1 + 1, c2 - c1 + 1


# -- worked examples ---------------------------------------------------------------

NET_COLUMN = "".join(
    f"'House Stocks'!H{r} = 'House Stocks'!F{r} - 'House Stocks'!G{r}\n" for r in range(4, 14)
)


def test_net_column_run():
    assert runs_text(NET_COLUMN) == (
        "'House Stocks'!H[V0 in 4:13] = 'House Stocks'!F[V0] - 'House Stocks'!G[V0]\n"
    )


def test_year_header_run():
    text = "'House Stocks'!C1 = \"Year\"\n'House Stocks'!D1 = \"Year\"\n"
    assert runs_text(text) == "'House Stocks'![C:D]1 = \"Year\"\n"


HOME_SALES = (
    "'Home Sales'![V0 in C:D] [V1 in 4:13] =\n"
    "  'House Sales'![V0+2] [V1-1] - 'Flat Sales'![V0+3] [V1+1]\n"
)


def test_two_binder_run_expands_and_recovers():
    w = expand_runs(parse_run_listing(HOME_SALES))
    lines = serialize_workbook(w).splitlines()
    assert len(lines) == 20
    assert lines[0] == "'Home Sales'!C4 = 'House Sales'!E3 - 'Flat Sales'!F5"
    assert lines[-1] == "'Home Sales'!D13 = 'House Sales'!F12 - 'Flat Sales'!G14"
    listing = detect_runs(w)
    assert len(listing.items) == 1
    assert serialize_run_listing(listing) == (
        "'Home Sales'![V0 in C:D][V1 in 4:13] = 'House Sales'![V0+2][V1-1] - 'Flat Sales'![V0+3][V1+1]\n"
    )


def test_stepped_constants_and_fixed_coordinates():
    text = "".join(f"'S'!A{r} = {10 * r}\n'S'!B{r} = SUM('S'!A1:A{r})\n" for r in range(1, 11))
    assert runs_text(text) == (
        "'S'!A[V0 in 1:10] = {10*V0}\n'S'!B[V0 in 1:10] = SUM('S'!A1:A[V0])\n"
    )


def test_single_cells_print_plainly():
    assert runs_text("'S'!A1 = 1\n'S'!B2 = \"x\"\n") == "'S'!A1 = 1\n'S'!B2 = \"x\"\n"
    assert runs_text("") == ""


def test_fractional_steps_break_runs():
    text = "'S'!A1 = 0.5\n'S'!A2 = 1\n'S'!A3 = 1.5\n"
    assert len(detect_runs(parse_workbook(text)).items) == 3


def test_mismatched_sheets_do_not_merge():
    text = "'S'!A1 = 'T'!B1\n'S'!A2 = 'U'!B2\n"
    assert len(detect_runs(parse_workbook(text)).items) == 2


def test_overlapping_runs_rejected():
    with pytest.raises(RunError, match="'S'!A2"):
        expand_runs(parse_run_listing("'S'!A[V0 in 1:3] = 1\n'S'!A2 = 5\n"))


def test_expanded_refs_must_stay_on_sheet():
    with pytest.raises(RunError):
        expand_runs(parse_run_listing("'S'!A[V0 in 1:3] = 'S'!B[V0-2]\n"))


# -- properties -----------------------------------------------------------------------

SMALL = WorkbookGenConfig(max_cells=120, max_blocks=4, max_block_side=6, max_row=15, max_col=6)


@given(st.integers(0, 10**9))
def test_round_trip_random_workbooks(seed):
    w = random_workbook(random.Random(seed), SMALL)
    listing = detect_runs(w)
    assert expand_runs(listing) == w
    text = serialize_run_listing(listing)
    assert expand_runs(parse_run_listing(text)) == w
    assert serialize_run_listing(parse_run_listing(text)) == text


@given(st.integers(0, 10**9))
def test_every_run_is_a_run_by_the_oracle(seed):
    w = random_workbook(random.Random(seed), SMALL)
    cells = dict(w.items())
    listing = detect_runs(w)
    for sheet, top, left, h, wd in rects(listing):
        assert oracle_is_run(cells, sheet, top, left, h, wd)


@given(st.integers(0, 10**9))
def test_no_two_runs_merge(seed):
    """Maximality: no pair of runs sharing a full edge is itself a run."""
    w = random_workbook(random.Random(seed), SMALL)
    cells = dict(w.items())
    listing = detect_runs(w)
    boxes = list(rects(listing))
    for a in boxes:
        for b in boxes:
            if a is b or a[0] != b[0]:
                continue
            s, t1, l1, h1, w1 = a
            _, t2, l2, h2, w2 = b
            if l1 == l2 and w1 == w2 and t1 + h1 == t2:
                assert not oracle_is_run(cells, s, t1, l1, h1 + h2, w1)
            if t1 == t2 and h1 == h2 and l1 + w1 == l2:
                assert not oracle_is_run(cells, s, t1, l1, h1, w1 + w2)
    assert mergeable_pairs(listing) == []


@given(st.integers(0, 10**9))
def test_runs_partition_the_cells(seed):
    w = random_workbook(random.Random(seed), SMALL)
    listing = detect_runs(w)
    assert sum(r.cell_count() for r in listing.items) == len(w)


def test_detection_is_deterministic():
    w = random_workbook(random.Random(11))
    shuffled = Workbook(reversed(list(w.items())))
    assert serialize_run_listing(detect_runs(shuffled)) == serialize_run_listing(detect_runs(w))
