"""The ``.cells`` workbook format: one ``address = formula`` line per cell."""

from __future__ import annotations

from collections.abc import Iterator, Mapping
from typing import Iterable

from sheetkit.cells import CellAddr
from sheetkit.errors import ParseError
from sheetkit.formula import CellRef, Node, Parser, serialize_formula, tokenize


class Workbook(Mapping):
    """Immutable map from :class:`CellAddr` to formula tree."""

    __slots__ = ("_cells",)

    def __init__(self, cells: Mapping[CellAddr, Node] | Iterable[tuple[CellAddr, Node]] = ()) -> None:
        self._cells = dict(cells)

    def __getitem__(self, addr: CellAddr) -> Node:
        return self._cells[addr]

    def __iter__(self) -> Iterator[CellAddr]:
        return iter(self._cells)

    def __len__(self) -> int:
        return len(self._cells)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Workbook):
            return self._cells == other._cells
        return NotImplemented

    def __hash__(self) -> int:
        return hash(frozenset(self._cells.items()))

    def __repr__(self) -> str:
        return f"Workbook({len(self._cells)} cells)"

    def sorted_items(self) -> list[tuple[CellAddr, Node]]:
        return sorted(self._cells.items(), key=lambda kv: kv[0].sort_key)

    def sheets(self) -> list[str]:
        return sorted({a.sheet for a in self._cells})


def logical_lines(text: str) -> Iterator[tuple[int, str]]:
    """Yield ``(first_line_number, text)`` items.

    Blank lines and ``#`` comment lines are skipped. A line that starts with
    whitespace continues the previous item, so long equations can wrap.
    """
    pending: list[str] = []
    start = 0
    for n, raw in enumerate(text.split("\n"), start=1):
        raw = raw.rstrip("\r")
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if raw[0] in " \t" and pending:
            pending.append(raw)
            continue
        if pending:
            yield start, "\n".join(pending)
        pending, start = [raw], n
    if pending:
        yield start, "\n".join(pending)


def parse_cell_equation(item: str, line: int, origin: str | None = None, mode: str = "cells"):
    """Parse ``'Sheet'!A1 = formula``; returns ``(addr, formula)``."""
    p = Parser(tokenize(item, line, 1, origin), mode, None, origin)
    t = p.tok
    if t.kind != "sheet":
        raise p.error("expected a sheet-qualified cell address such as 'Sheet'!A1")
    p.advance()
    lhs = p.sheet_ref(t.value, (t.line, t.col))
    if not isinstance(lhs, CellRef):
        raise p.error("left-hand side must be a single cell", t)
    p.expect_op("=")
    p.default_sheet = lhs.addr.sheet
    if p.tok.kind == "eof":
        raise p.error("missing formula after '='")
    rhs = p.parse_expression()
    p.expect_end()
    return lhs.addr, rhs


def parse_workbook(text: str, origin: str | None = None) -> Workbook:
    cells: dict[CellAddr, Node] = {}
    lines: dict[CellAddr, int] = {}
    for line, item in logical_lines(text):
        addr, rhs = parse_cell_equation(item, line, origin)
        if addr in cells:
            raise ParseError(
                f"duplicate cell {addr} (first defined on line {lines[addr]})", line, 1, origin
            )
        cells[addr] = rhs
        lines[addr] = line
    return Workbook(cells)


def format_cell_line(addr: CellAddr, formula: Node) -> str:
    return f"{addr} = {serialize_formula(formula)}"


def serialize_workbook(w: Workbook) -> str:
    """Canonical text: sorted by sheet, then row, then column."""
    return "".join(format_cell_line(a, f) + "\n" for a, f in w.sorted_items())
