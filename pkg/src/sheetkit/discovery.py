"""Relist a workbook as named table equations.

The user names cell rectangles and says which row (and column) corresponds
to which subscript. Every cell inside a named rectangle becomes a table
element; references to such cells become table references; and the element
equations of each table are merged into one ``all`` equation when a single
template reproduces all of them.

Naming map syntax, one entry per line::

    name Net = 'House Stocks'!H4:H13 rows 4->2000
    name Sales = 'S'!F4:G13 rows 4->2000 cols F->1
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field

from sheetkit.cells import CellAddr, col_to_index, index_to_col
from sheetkit.compiler import ElementEquation
from sheetkit.dsl import (
    KEYWORDS,
    CellEquation,
    LayoutItem,
    LhsSub,
    ModuleAst,
    TableDecl,
    TableEquation,
    serialize_module,
)
from sheetkit.errors import NamingError
from sheetkit.formula import (
    Binary,
    Call,
    CellRef,
    Node,
    Number,
    Parser,
    RangeRef,
    String,
    Sub,
    TableRef,
    Unary,
    make_range,
    make_ref,
    tokenize,
    transform,
)
from sheetkit.workbook import Workbook, logical_lines


@dataclass(frozen=True)
class NamingEntry:
    name: str
    sheet: str
    top: int
    left: int
    bottom: int
    right: int
    row_base: tuple[int, int] | None = None  # (row number, subscript)
    col_base: tuple[int, int] | None = None  # (column index, subscript)
    pos: tuple[int, int] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.row_base is None and self.col_base is None:
            raise ValueError("an entry needs a rows base, a cols base, or both")
        if self.row_base is None and self.top != self.bottom:
            raise ValueError(f"{self.name}: a multi-row rectangle needs a 'rows' base")
        if self.col_base is None and self.left != self.right:
            raise ValueError(f"{self.name}: a multi-column rectangle needs a 'cols' base")
        if self.row_base and not self.top <= self.row_base[0] <= self.bottom:
            raise ValueError(f"{self.name}: row {self.row_base[0]} is outside the rectangle")
        if self.col_base and not self.left <= self.col_base[0] <= self.right:
            raise ValueError(
                f"{self.name}: column {index_to_col(self.col_base[0])} is outside the rectangle"
            )

    @property
    def axes(self) -> tuple[str, ...]:
        """Which sheet axis each subscript runs along."""
        if self.row_base and self.col_base:
            return ("row", "col")
        return ("row",) if self.row_base else ("col",)

    def row_sub(self, row: int) -> int:
        anchor, base = self.row_base
        return base + row - anchor

    def col_sub(self, col: int) -> int:
        anchor, base = self.col_base
        return base + col - anchor

    def contains(self, addr: CellAddr) -> bool:
        return (
            addr.sheet == self.sheet
            and self.top <= addr.row <= self.bottom
            and self.left <= addr.col <= self.right
        )

    def subscripts(self, addr: CellAddr) -> tuple[int, ...]:
        return tuple(
            self.row_sub(addr.row) if axis == "row" else self.col_sub(addr.col) for axis in self.axes
        )

    def decl(self) -> TableDecl:
        dims = []
        for axis in self.axes:
            if axis == "row":
                dims.append((self.row_sub(self.top), self.row_sub(self.bottom)))
            else:
                dims.append((self.col_sub(self.left), self.col_sub(self.right)))
        return TableDecl(self.name, tuple(dims))

    def layout_item(self) -> LayoutItem:
        anchor = CellAddr(self.sheet, self.left, self.top)
        if self.axes == ("row",):
            return LayoutItem(self.name, anchor, "down")
        if self.axes == ("col",):
            return LayoutItem(self.name, anchor, "across")
        return LayoutItem(self.name, anchor)

    def range_text(self) -> str:
        a, b = CellAddr(self.sheet, self.left, self.top), CellAddr(self.sheet, self.right, self.bottom)
        return f"{a}:{b.a1}"


@dataclass(frozen=True)
class NamingMap:
    entries: tuple[NamingEntry, ...] = ()

    def __post_init__(self) -> None:
        seen: dict[str, NamingEntry] = {}
        for e in self.entries:
            if e.name in seen:
                raise NamingError(f"duplicate table name {e.name!r}", *(e.pos or (None, None)))
            seen[e.name] = e
        by_sheet = defaultdict(list)
        for e in self.entries:
            for other in by_sheet[e.sheet]:
                if not (
                    e.right < other.left or other.right < e.left
                    or e.bottom < other.top or other.bottom < e.top
                ):
                    raise NamingError(
                        f"{e.name} ({e.range_text()}) overlaps {other.name} ({other.range_text()})",
                        *(e.pos or (None, None)),
                    )
            by_sheet[e.sheet].append(e)
        object.__setattr__(self, "_by_sheet", dict(by_sheet))

    def lookup(self, addr: CellAddr) -> NamingEntry | None:
        for e in self._by_sheet.get(addr.sheet, ()):
            if e.contains(addr):
                return e
        return None


def parse_naming_map(text: str, origin: str | None = None) -> NamingMap:
    entries = []
    for line, item in logical_lines(text):
        p = Parser(tokenize(item, line, 1, origin), "cells", None, origin)
        t = p.tok
        if not p.at_word("name"):
            raise p.error(f"expected 'name', found {p.describe(t)}")
        p.advance()
        nt = p.expect_word("a table name")
        if nt.value in KEYWORDS:
            raise p.error(f"{nt.value!r} is a reserved word", nt)
        name = nt.value
        p.expect_op("=")
        st = p.tok
        if st.kind != "sheet":
            raise p.error("expected a sheet-qualified range such as 'Sheet'!A1:B9")
        p.advance()
        ref = p.sheet_ref(st.value, (st.line, st.col))
        if isinstance(ref, CellRef):
            ref = RangeRef(ref.addr, ref.addr)
        row_base = col_base = None
        while p.tok.kind == "word":
            kw = p.tok
            if kw.value == "rows" and row_base is None:
                p.advance()
                anchor = p.int_literal(allow_sign=False)
                _arrow(p)
                row_base = (anchor, p.int_literal())
            elif kw.value == "cols" and col_base is None:
                p.advance()
                letters = p.expect_word("column letters")
                anchor = col_to_index(letters.value.upper())
                _arrow(p)
                col_base = (anchor, p.int_literal())
            else:
                raise p.error(f"unexpected {p.describe(kw)}")
        p.expect_end()
        try:
            entries.append(
                NamingEntry(
                    name, ref.sheet, ref.start.row, ref.start.col, ref.end.row, ref.end.col,
                    row_base, col_base, pos=(t.line, t.col),
                )
            )
        except ValueError as exc:
            raise NamingError(str(exc), t.line, t.col, origin)
    try:
        return NamingMap(tuple(entries))
    except NamingError as exc:
        exc.origin = origin
        raise


def _arrow(p: Parser) -> None:
    p.expect_op("-")
    p.expect_op(">")


def cell_to_element(addr: CellAddr, m: NamingMap) -> tuple[str, tuple[int, ...]] | None:
    e = m.lookup(addr)
    if e is None:
        return None
    return e.name, e.subscripts(addr)


# -- generalization ----------------------------------------------------------

def _gabstract(node: Node, kinds: list, values: list) -> tuple:
    """Skeleton for generalization; slots are table subscripts and cell coords."""
    if isinstance(node, Number):
        kinds.append(("n",))
        values.append(node.value)
        return ("#",)
    if isinstance(node, String):
        return ("s", node.value)
    if isinstance(node, TableRef):
        for p, s in enumerate(node.subs):
            kinds.append(("t", p))
            values.append(s.offset)
        return ("t", node.table, len(node.subs))
    if isinstance(node, CellRef):
        kinds += (("c",), ("r",))
        values += (node.addr.col, node.addr.row)
        return ("@", node.addr.sheet)
    if isinstance(node, RangeRef):
        kinds += (("c",), ("r",), ("c",), ("r",))
        values += (node.start.col, node.start.row, node.end.col, node.end.row)
        return (":", node.sheet)
    if isinstance(node, Unary):
        return ("u", node.op, _gabstract(node.operand, kinds, values))
    if isinstance(node, Binary):
        return ("b", node.op, _gabstract(node.left, kinds, values), _gabstract(node.right, kinds, values))
    if isinstance(node, Call):
        return ("f", node.name) + tuple(_gabstract(a, kinds, values) for a in node.args)
    raise TypeError(f"cannot generalize {type(node).__name__}")


def _fit(kind, column: list[int], subs: list[tuple[int, ...]], ndims: int):
    """Pick a subscript expression reproducing ``column`` for every element.

    Returns ``Sub`` (``var`` is a dimension index) or ``None``.
    """
    const = all(v == column[0] for v in column)
    if kind[0] == "n":
        return Sub(None, 0) if const else None

    def offset_from(i):
        k = column[0] - subs[0][i]
        if all(v - s[i] == k for v, s in zip(column, subs)):
            return Sub(str(i), k)
        return None

    if kind[0] == "t":
        order = [kind[1]] if kind[1] < ndims else []
        for i in order:
            hit = offset_from(i)
            if hit:
                return hit
        if const:
            return Sub(None, column[0])
        for i in range(ndims):
            if i not in order:
                hit = offset_from(i)
                if hit:
                    return hit
        return None
    if const:
        return Sub(None, column[0])
    for i in range(ndims):
        hit = offset_from(i)
        if hit:
            return hit
    return None


def _var(i: int) -> str:
    return f"V{i}"


def generalize(
    elems: list[ElementEquation], decl: TableDecl | None = None
) -> tuple[list[TableEquation], list[ElementEquation]]:
    """Merge element equations of one table into a single ``all`` equation.

    Succeeds only if the elements cover the whole declared rectangle (the
    bounding box when ``decl`` is omitted) and one template fits all of
    them. Otherwise every element equation is returned unchanged.
    """
    if len(elems) < 2 or len({e.table for e in elems}) != 1:
        return [], list(elems)
    table = elems[0].table
    ndims = len(elems[0].subs)
    if decl is None:
        dims = tuple(
            (min(e.subs[i] for e in elems), max(e.subs[i] for e in elems)) for i in range(ndims)
        )
    else:
        dims = decl.dims
    full = set(itertools.product(*(range(lo, hi + 1) for lo, hi in dims)))
    subs = [e.subs for e in elems]
    if len(set(subs)) != len(subs) or set(subs) != full:
        return [], list(elems)

    skel0 = kinds0 = None
    rows = []
    for e in elems:
        kinds: list = []
        values: list = []
        skel = _gabstract(e.rhs, kinds, values)
        if skel0 is None:
            skel0, kinds0 = skel, kinds
        elif skel != skel0:
            return [], list(elems)
        rows.append(values)
    fits = []
    for j, kind in enumerate(kinds0):
        hit = _fit(kind, [r[j] for r in rows], subs, ndims)
        if hit is None:
            return [], list(elems)
        fits.append(hit)

    slots = iter(fits)

    def coord(sub: Sub):
        # cell coordinates: ints when fixed, Sub over a quantified variable otherwise
        return sub.offset if sub.var is None else Sub(_var(int(sub.var)), sub.offset)

    def tsub(sub: Sub) -> Sub:
        return sub if sub.var is None else Sub(_var(int(sub.var)), sub.offset)

    def build(n: Node) -> Node:
        if isinstance(n, Number):
            next(slots)
            return n
        if isinstance(n, TableRef):
            return TableRef(n.table, tuple(tsub(next(slots)) for _ in n.subs))
        if isinstance(n, CellRef):
            c, r = next(slots), next(slots)
            return make_ref(n.addr.sheet, coord(c), coord(r))
        if isinstance(n, RangeRef):
            c1, r1, c2, r2 = (next(slots) for _ in range(4))
            return make_range(n.sheet, coord(c1), coord(r1), coord(c2), coord(r2))
        if isinstance(n, Unary):
            return Unary(n.op, build(n.operand))
        if isinstance(n, Binary):
            left = build(n.left)
            return Binary(n.op, left, build(n.right))
        if isinstance(n, Call):
            return Call(n.name, tuple(build(a) for a in n.args))
        return n

    rhs = build(elems[0].rhs)
    lhs = tuple(LhsSub(True, Sub(_var(i))) for i in range(ndims))
    return [TableEquation(table, lhs, rhs)], []


def element_equation_item(e: ElementEquation) -> TableEquation:
    return TableEquation(e.table, tuple(LhsSub(False, Sub(None, s)) for s in e.subs), e.rhs)


# -- rename ------------------------------------------------------------------

@dataclass(frozen=True)
class NamedEquationSet:
    decls: tuple[TableDecl, ...]
    equations: tuple[TableEquation, ...]
    residue: tuple[CellEquation, ...]
    layout: tuple[LayoutItem, ...]

    def to_module(self) -> ModuleAst:
        return ModuleAst(
            tables=self.decls, equations=self.equations, layout=self.layout, cells=self.residue
        )

    def to_text(self) -> str:
        return serialize_module(self.to_module())


def rename(w: Workbook, m: NamingMap) -> NamedEquationSet:
    """Relist ``w`` using the table names and subscript bases in ``m``.

    Every named rectangle should be fully populated; a rectangle with empty
    cells still gets a declaration, and compiling the result then reports
    the undefined elements.
    """

    def to_table(n: Node):
        if isinstance(n, CellRef):
            hit = cell_to_element(n.addr, m)
            if hit is not None:
                return TableRef(hit[0], tuple(Sub(None, s) for s in hit[1]))
        return None

    per_table: dict[str, list[ElementEquation]] = defaultdict(list)
    residue: list[CellEquation] = []
    for addr, f in w.sorted_items():
        rhs = transform(f, to_table)
        hit = cell_to_element(addr, m)
        if hit is None:
            residue.append(CellEquation(addr, rhs))
        else:
            per_table[hit[0]].append(ElementEquation(hit[0], hit[1], rhs))

    equations: list[TableEquation] = []
    for entry in m.entries:
        elems = sorted(per_table.get(entry.name, []), key=lambda e: e.subs)
        quantified, leftovers = generalize(elems, entry.decl())
        equations += quantified
        equations += [element_equation_item(e) for e in leftovers]
    return NamedEquationSet(
        decls=tuple(e.decl() for e in m.entries),
        equations=tuple(equations),
        residue=tuple(residue),
        layout=tuple(e.layout_item() for e in m.entries),
    )


def equation_cell_count(named: NamedEquationSet) -> int:
    """Cells the set stands for: table elements defined plus residue cells."""
    decls = {d.name: d for d in named.decls}
    total = len(named.residue)
    for eq in named.equations:
        d = decls[eq.table]
        n = 1
        for s, (lo, hi) in zip(eq.lhs, d.dims):
            n *= (hi - lo + 1) if s.quantified else 1
        total += n
    return total

