"""Listing, run detection and run expansion.

A *run* is a rectangle of cells whose formulas are the same up to constant
increments. Two cells are comparable when their formulas have the same
skeleton (operators, functions, strings and the sheets of references); the
varying parts are numeric literals and the coordinates of references. Across
a run, every numeric literal must change by a fixed integer per row and per
column, and every reference coordinate must either stay put or move with
the host cell along its own axis.

Detection is greedy: repeatedly take the largest valid rectangle (ties go
to the topmost, then leftmost, then taller one) among cells not yet covered.
"""

from __future__ import annotations

import heapq
import itertools
from collections import defaultdict
from dataclasses import dataclass
from decimal import Decimal
from typing import Iterable

from sheetkit.cells import CellAddr
from sheetkit.dsl import Binder, Fixed, RunEquation, RunListing, Span, format_run_lhs
from sheetkit.errors import RunError
from sheetkit.formula import (
    Affine,
    Binary,
    Call,
    CellRef,
    Node,
    Number,
    PatternRange,
    PatternRef,
    RangeRef,
    String,
    Sub,
    Unary,
    make_range,
    make_ref,
    serialize_formula,
    transform,
    variables,
)
from sheetkit.workbook import Workbook, serialize_workbook

def list_workbook(w: Workbook) -> str:
    return serialize_workbook(w)


# -- shape abstraction ---------------------------------------------------------

def abstract(node: Node, kinds: list[str], values: list) -> tuple:
    """Skeleton of ``node``; varying slots are appended to kinds/values.

    Slot kinds: ``n`` numeric literal, ``c`` a reference column, ``r`` a
    reference row.
    """
    if isinstance(node, Number):
        kinds.append("n")
        values.append(node.value)
        return ("#",)
    if isinstance(node, String):
        return ("s", node.value)
    if isinstance(node, CellRef):
        a = node.addr
        kinds += ("c", "r")
        values += (a.col, a.row)
        return ("@", a.sheet)
    if isinstance(node, RangeRef):
        kinds += ("c", "r", "c", "r")
        values += (node.start.col, node.start.row, node.end.col, node.end.row)
        return (":", node.sheet)
    if isinstance(node, Unary):
        return ("u", node.op, abstract(node.operand, kinds, values))
    if isinstance(node, Binary):
        return ("b", node.op, abstract(node.left, kinds, values), abstract(node.right, kinds, values))
    if isinstance(node, Call):
        return ("f", node.name) + tuple(abstract(a, kinds, values) for a in node.args)
    raise TypeError(f"workbooks cannot hold {type(node).__name__} nodes")


def _integral(d) -> bool:
    return d == int(d)


def _ok_h(kind: str, d) -> bool:
    if kind == "n":
        return _integral(d)
    if kind == "c":
        return d == 0 or d == 1
    return d == 0


def _ok_v(kind: str, d) -> bool:
    if kind == "n":
        return _integral(d)
    if kind == "r":
        return d == 0 or d == 1
    return d == 0


def _step(kinds, a, b, ok) -> tuple | None:
    d = tuple(y - x for x, y in zip(a, b))
    for k, dj in zip(kinds, d):
        if not ok(k, dj):
            return None
    return d


def _predict(v0, i, k, dv, dh):
    if i == 0 and k == 0:
        return v0
    if dh is None or k == 0:
        return tuple(x + i * y for x, y in zip(v0, dv))
    if dv is None or i == 0:
        return tuple(x + k * z for x, z in zip(v0, dh))
    return tuple(x + i * y + k * z for x, y, z in zip(v0, dv, dh))


class _Group:
    """Cells of one sheet sharing one skeleton."""

    def __init__(self, kinds: tuple[str, ...]) -> None:
        self.kinds = kinds
        self.vals: dict[tuple[int, int], tuple] = {}

    def best_at(self, r: int, c: int):
        """Largest valid rectangle with top-left (r, c): (area, h, w, dv, dh)."""
        vals, kinds = self.vals, self.kinds
        v0 = vals[(r, c)]
        right, down = vals.get((r, c + 1)), vals.get((r + 1, c))
        dh = _step(kinds, v0, right, _ok_h) if right is not None else None
        dv = _step(kinds, v0, down, _ok_v) if down is not None else None
        w = 1
        if dh is not None:
            while vals.get((r, c + w)) == _predict(v0, 0, w, dv, dh):
                w += 1
        best = (w, 1, w)
        if dv is not None:
            i = 1
            while True:
                k = 0
                while k < w and vals.get((r + i, c + k)) == _predict(v0, i, k, dv, dh):
                    k += 1
                if k == 0:
                    break
                w = k
                cand = (w * (i + 1), i + 1, w)
                if cand[:2] > best[:2]:
                    best = cand
                i += 1
        area, h, w = best
        return area, h, w, (dv if h > 1 else None), (dh if w > 1 else None)

    def rect_free(self, r: int, c: int, h: int, w: int) -> bool:
        vals = self.vals
        return all((r + i, c + k) in vals for i in range(h) for k in range(w))

    def take(self, r: int, c: int, h: int, w: int) -> None:
        for i in range(h):
            for k in range(w):
                del self.vals[(r + i, c + k)]

    def greedy(self):
        heap = []
        for (r, c) in self.vals:
            area, h, w, dv, dh = self.best_at(r, c)
            heap.append((-area, r, c, -h, w, dv, dh))
        heapq.heapify(heap)
        while heap:
            # one live entry per top-left, so ties never reach dv/dh
            neg_area, r, c, neg_h, w, dv, dh = heapq.heappop(heap)
            if (r, c) not in self.vals:
                continue
            h = -neg_h
            if self.rect_free(r, c, h, w):
                # areas only shrink as cells get covered, so a cached
                # rectangle that is still intact is the global best
                self.take(r, c, h, w)
                yield r, c, h, w, dv, dh
            else:
                area, h, w, dv, dh = self.best_at(r, c)
                heapq.heappush(heap, (-area, r, c, -h, w, dv, dh))


# -- templates -----------------------------------------------------------------

def _template(node: Node, host: CellAddr, slots, dv, dh, colvar, rowvar) -> Node:
    """Rebuild ``node`` with varying slots expressed over the run variables."""

    def coord(axis_kind, value, j):
        if axis_kind == "c" and dh is not None and dh[j] == 1:
            return Sub(colvar, value - host.col)
        if axis_kind == "r" and dv is not None and dv[j] == 1:
            return Sub(rowvar, value - host.row)
        return value

    def go(n: Node) -> Node:
        if isinstance(n, Number):
            j = next(slots)
            a = dv[j] if dv is not None else 0
            b = dh[j] if dh is not None else 0
            if a == 0 and b == 0:
                return n
            terms = []
            if b:
                terms.append((colvar, int(b)))
            if a:
                terms.append((rowvar, int(a)))
            terms.sort()
            const = n.value - a * host.row - b * host.col
            return Affine(Decimal(const), tuple(terms))
        if isinstance(n, CellRef):
            jc, jr = next(slots), next(slots)
            return make_ref(n.addr.sheet, coord("c", n.addr.col, jc), coord("r", n.addr.row, jr))
        if isinstance(n, RangeRef):
            j1, j2, j3, j4 = next(slots), next(slots), next(slots), next(slots)
            return make_range(
                n.sheet,
                coord("c", n.start.col, j1), coord("r", n.start.row, j2),
                coord("c", n.end.col, j3), coord("r", n.end.row, j4),
            )
        if isinstance(n, Unary):
            return Unary(n.op, go(n.operand))
        if isinstance(n, Binary):
            left = go(n.left)
            return Binary(n.op, left, go(n.right))
        if isinstance(n, Call):
            return Call(n.name, tuple(go(a) for a in n.args))
        return n

    return go(node)


def _make_run(w: Workbook, sheet: str, r: int, c: int, h: int, wd: int, dv, dh) -> RunEquation:
    host = CellAddr(sheet, c, r)
    formula = w[host]
    if h == 1 and wd == 1:
        return RunEquation(sheet, Fixed(c), Fixed(r), formula)
    colvar = "V0" if wd > 1 else None
    rowvar = ("V1" if wd > 1 else "V0") if h > 1 else None
    rhs = _template(formula, host, itertools.count(), dv, dh, colvar, rowvar)
    anonymous = not variables(rhs)

    def part(lo, hi, var):
        if lo == hi:
            return Fixed(lo)
        return Span(lo, hi) if anonymous else Binder(var, lo, hi)

    return RunEquation(sheet, part(c, c + wd - 1, colvar), part(r, r + h - 1, rowvar), rhs)


def detect_runs(w: Workbook) -> RunListing:
    """Partition the workbook into maximal runs."""
    groups: dict[tuple, _Group] = {}
    for addr, formula in w.items():
        kinds: list[str] = []
        values: list = []
        skel = abstract(formula, kinds, values)
        key = (addr.sheet, skel, tuple(kinds))
        g = groups.get(key)
        if g is None:
            g = groups[key] = _Group(tuple(kinds))
        g.vals[(addr.row, addr.col)] = tuple(values)
    found = []
    for (sheet, _, _), g in groups.items():
        for r, c, h, wd, dv, dh in g.greedy():
            found.append(((sheet, r, c), _make_run(w, sheet, r, c, h, wd, dv, dh)))
    found.sort(key=lambda item: item[0])
    return RunListing(tuple(run for _, run in found))


# -- printing and expansion ------------------------------------------------------

def format_run(run: RunEquation) -> str:
    return f"{format_run_lhs(run)} = {serialize_formula(run.rhs)}"


def serialize_run_listing(listing: RunListing) -> str:
    return "".join(format_run(r) + "\n" for r in listing.items)


def instantiate(template: Node, env: dict[str, int]) -> Node:
    def visit(n: Node):
        if isinstance(n, PatternRef):
            c = n.col if isinstance(n.col, int) else n.col.evaluate(env)
            r = n.row if isinstance(n.row, int) else n.row.evaluate(env)
            if c < 1 or r < 1:
                raise RunError(f"reference falls off the sheet (col {c}, row {r}) at {env}")
            return CellRef(CellAddr(n.sheet, c, r))
        if isinstance(n, PatternRange):
            coords = [s if isinstance(s, int) else s.evaluate(env) for s in (n.col1, n.row1, n.col2, n.row2)]
            if min(coords) < 1:
                raise RunError(f"range falls off the sheet at {env}")
            return make_range(n.sheet, *coords)
        if isinstance(n, Affine):
            return Number(n.evaluate(env))
        return None

    return transform(template, visit)


def _axis(part) -> tuple[range, str | None]:
    if isinstance(part, Fixed):
        return range(part.value, part.value + 1), None
    if isinstance(part, Binder):
        return range(part.low, part.high + 1), part.var
    return range(part.low, part.high + 1), None


def expand_run(run: RunEquation) -> Iterable[tuple[CellAddr, Node]]:
    cols, cvar = _axis(run.col)
    rows, rvar = _axis(run.row)
    for r in rows:
        for c in cols:
            env = {}
            if cvar:
                env[cvar] = c
            if rvar:
                env[rvar] = r
            yield CellAddr(run.sheet, c, r), instantiate(run.rhs, env) if env else run.rhs


def expand_runs(listing: RunListing) -> Workbook:
    cells: dict[CellAddr, Node] = {}
    for run in listing.items:
        line, col = run.pos if run.pos else (None, None)
        for addr, formula in expand_run(run):
            if addr in cells:
                raise RunError(f"cell {addr} is covered by more than one run", line, col)
            cells[addr] = formula
    return Workbook(cells)


# -- maximality check ----------------------------------------------------------

def rectangle_is_run(cells: dict[CellAddr, Node], sheet: str, r: int, c: int, h: int, w: int) -> bool:
    """Whether the h-by-w block at (r, c) could be listed as one run."""
    rows = []
    kinds0 = skel0 = None
    for i in range(h):
        row = []
        for k in range(w):
            f = cells.get(CellAddr(sheet, c + k, r + i))
            if f is None:
                return False
            kinds: list[str] = []
            values: list = []
            skel = abstract(f, kinds, values)
            if skel0 is None:
                skel0, kinds0 = skel, kinds
            elif skel != skel0 or kinds != kinds0:
                return False
            row.append(tuple(values))
        rows.append(row)
    v0 = rows[0][0]
    dh = _step(kinds0, v0, rows[0][1], _ok_h) if w > 1 else None
    dv = _step(kinds0, v0, rows[1][0], _ok_v) if h > 1 else None
    if (w > 1 and dh is None) or (h > 1 and dv is None):
        return False
    return all(rows[i][k] == _predict(v0, i, k, dv, dh) for i in range(h) for k in range(w))


@dataclass(frozen=True)
class _Rect:
    sheet: str
    r1: int
    c1: int
    r2: int
    c2: int


def _rect(run: RunEquation) -> _Rect:
    c1, c2 = run.extent("col")
    r1, r2 = run.extent("row")
    return _Rect(run.sheet, r1, c1, r2, c2)


def mergeable_pairs(listing: RunListing) -> list[tuple[RunEquation, RunEquation]]:
    """Pairs of runs that share a full edge and together form a valid run.

    Empty for maximal output.
    """
    cells = dict(expand_runs(listing).items())
    by_sheet = defaultdict(list)
    for run in listing.items:
        by_sheet[run.sheet].append(run)
    out = []
    for sheet, runs in by_sheet.items():
        rects = [(_rect(x), x) for x in runs]
        for i, (a, ra) in enumerate(rects):
            for b, rb in rects[i + 1:]:
                union = None
                if a.c1 == b.c1 and a.c2 == b.c2 and (a.r2 + 1 == b.r1 or b.r2 + 1 == a.r1):
                    union = (min(a.r1, b.r1), a.c1, max(a.r2, b.r2), a.c2)
                elif a.r1 == b.r1 and a.r2 == b.r2 and (a.c2 + 1 == b.c1 or b.c2 + 1 == a.c1):
                    union = (a.r1, min(a.c1, b.c1), a.r2, max(a.c2, b.c2))
                if union is None:
                    continue
                r1, c1, r2, c2 = union
                if rectangle_is_run(cells, sheet, r1, c1, r2 - r1 + 1, c2 - c1 + 1):
                    out.append((ra, rb))
    return out
