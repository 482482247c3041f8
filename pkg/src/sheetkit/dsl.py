"""Source language front end: table modules and run listings.

Module grammar, one item per logical line (``#`` starts a comment, a line
beginning with whitespace continues the previous item)::

    table Net[2000:2009, 1:3]
    def guard(e, alt) = IF(NOT(ISNA(e)), e, alt)
    use "shared/inputs.xl"
    Net[all y, all ht] = Builds[y, ht] - Demolitions[y, ht]
    'Notes'!A1 = "Housing model"
    layout
    place Net at 'House Stocks'!H4

Run listings are the notation printed by run detection::

    'House Stocks'!H[V0 in 4:13] = 'House Stocks'!F[V0] - 'House Stocks'!G[V0]
    'House Stocks'![C:D]1 = "Year"
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

from sheetkit.cells import CellAddr, quote_sheet, index_to_col
from sheetkit.errors import ParseError
from sheetkit.formula import (
    CellRef,
    Name,
    Node,
    Parser,
    PatternRange,
    PatternRef,
    Sub,
    TableRef,
    serialize_formula,
    tokenize,
    variables,
    walk,
)
from sheetkit.workbook import logical_lines, parse_cell_equation

KEYWORDS = {"table", "def", "use", "place", "layout", "all", "at", "in"}
ORIENTATIONS = ("down", "across")


def _where() -> object:
    return field(default=None, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class TableDecl:
    name: str
    dims: tuple[tuple[int, int], ...]
    pos: tuple[int, int] | None = _where()
    origin: str | None = _where()

    def size(self) -> int:
        n = 1
        for lo, hi in self.dims:
            n *= hi - lo + 1
        return n


@dataclass(frozen=True)
class LhsSub:
    quantified: bool
    sub: Sub

    def __str__(self) -> str:
        return f"all {self.sub.var}" if self.quantified else str(self.sub)


@dataclass(frozen=True)
class TableEquation:
    table: str
    lhs: tuple[LhsSub, ...]
    rhs: Node
    pos: tuple[int, int] | None = _where()
    origin: str | None = _where()

    @property
    def quantified_vars(self) -> list[str]:
        return [s.sub.var for s in self.lhs if s.quantified]


@dataclass(frozen=True)
class CellEquation:
    """A plain ``'Sheet'!A1 = formula`` item, outside any table."""

    addr: CellAddr
    rhs: Node
    pos: tuple[int, int] | None = _where()
    origin: str | None = _where()


@dataclass(frozen=True)
class MacroDef:
    name: str
    params: tuple[str, ...]
    body: Node
    pos: tuple[int, int] | None = _where()
    origin: str | None = _where()


@dataclass(frozen=True)
class LayoutItem:
    table: str
    anchor: CellAddr
    orientation: str | None = None
    pos: tuple[int, int] | None = _where()
    origin: str | None = _where()


@dataclass(frozen=True)
class Use:
    path: str
    pos: tuple[int, int] | None = _where()
    origin: str | None = _where()


@dataclass(frozen=True)
class ModuleAst:
    tables: tuple[TableDecl, ...] = ()
    equations: tuple[TableEquation, ...] = ()
    macros: tuple[MacroDef, ...] = ()
    uses: tuple[Use, ...] = ()
    layout: tuple[LayoutItem, ...] = ()
    cells: tuple[CellEquation, ...] = ()


def where(item) -> str:
    line = item.pos[0] if item.pos else "?"
    return f"{item.origin or '<input>'}:{line}"


def _check_unique(items, key, what: str) -> None:
    seen: dict = {}
    for it in items:
        k = key(it)
        if k in seen:
            first = seen[k]
            raise ParseError(
                f"duplicate {what} {k!r} (first defined at {where(first)})",
                it.pos[0] if it.pos else None,
                it.pos[1] if it.pos else None,
                it.origin,
            )
        seen[k] = it


def validate_module(m: ModuleAst) -> ModuleAst:
    _check_unique(m.tables, lambda t: t.name, "table")
    _check_unique(m.macros, lambda d: d.name, "macro")
    _check_unique(m.layout, lambda li: li.table, "layout for table")
    return m


def merge_modules(mods) -> ModuleAst:
    mods = list(mods)
    merged = ModuleAst(
        tables=tuple(t for m in mods for t in m.tables),
        equations=tuple(e for m in mods for e in m.equations),
        macros=tuple(d for m in mods for d in m.macros),
        uses=tuple(u for m in mods for u in m.uses),
        layout=tuple(li for m in mods for li in m.layout),
        cells=tuple(c for m in mods for c in m.cells),
    )
    return validate_module(merged)


# -- module parser -------------------------------------------------------------

def parse_module(text: str, origin: str | None = None) -> ModuleAst:
    tables, equations, macros, uses, layout, cells = [], [], [], [], [], []
    for line, item in logical_lines(text):
        p = Parser(tokenize(item, line, 1, origin), "dsl", None, origin)
        t = p.tok
        pos = (t.line, t.col)
        if t.kind == "word" and t.value == "table" and p.peek().kind == "word":
            tables.append(_table_decl(p, pos))
        elif t.kind == "word" and t.value == "def":
            macros.append(_macro_def(p, pos))
        elif t.kind == "word" and t.value == "use":
            p.advance()
            if p.tok.kind != "str":
                raise p.error("expected a quoted file name after 'use'")
            uses.append(Use(p.advance().value, pos=pos, origin=origin))
            p.expect_end()
        elif t.kind == "word" and t.value == "place":
            layout.append(_place(p, pos))
        elif t.kind == "word" and t.value == "layout" and p.peek().kind == "eof":
            continue
        elif t.kind == "sheet":
            addr, rhs = parse_cell_equation(item, line, origin, mode="dsl")
            free = variables(rhs)
            if free:
                raise ParseError(f"unbound variable {sorted(free)[0]!r} in cell equation", line, 1, origin)
            cells.append(CellEquation(addr, rhs, pos=pos, origin=origin))
        elif t.kind == "word" and p.peek().kind == "op" and p.peek().value == "[":
            equations.append(_equation(p, pos))
        else:
            raise p.error(f"expected a table, def, use, place or equation item, found {p.describe(t)}")
    return validate_module(
        ModuleAst(tuple(tables), tuple(equations), tuple(macros), tuple(uses), tuple(layout), tuple(cells))
    )


def _ident(p: Parser, what: str) -> str:
    t = p.expect_word(what)
    if t.value in KEYWORDS:
        raise p.error(f"{t.value!r} is a reserved word", t)
    return t.value


def _table_decl(p: Parser, pos) -> TableDecl:
    p.advance()
    name = _ident(p, "a table name")
    p.expect_op("[")
    dims = []
    while True:
        lo_tok = p.tok
        lo = p.int_literal()
        p.expect_op(":")
        hi = p.int_literal()
        if lo > hi:
            raise p.error(f"empty subscript range {lo}:{hi}", lo_tok)
        dims.append((lo, hi))
        if p.at_op(","):
            p.advance()
            continue
        break
    p.expect_op("]")
    p.expect_end()
    return TableDecl(name, tuple(dims), pos=pos, origin=p.origin)


def _macro_def(p: Parser, pos) -> MacroDef:
    p.advance()
    name = _ident(p, "a macro name").upper()
    p.expect_op("(")
    params: list[str] = []
    if not p.at_op(")"):
        while True:
            t = p.tok
            param = _ident(p, "a parameter name")
            if param in params:
                raise p.error(f"parameter {param!r} repeated", t)
            params.append(param)
            if p.at_op(","):
                p.advance()
                continue
            break
    p.expect_op(")")
    p.expect_op("=")
    body = p.parse_expression()
    p.expect_end()
    for n in walk(body):
        if isinstance(n, Name) and n.name not in params:
            raise ParseError(f"macro {name} uses {n.name!r}, which is not a parameter", *_at(n, p))
        if isinstance(n, (TableRef, PatternRef, PatternRange)) and variables(n):
            raise ParseError(f"macro {name} cannot use subscript variables", *_at(n, p))
    return MacroDef(name, tuple(params), body, pos=pos, origin=p.origin)


def _at(node, p: Parser):
    line, col = node.pos if node.pos else (None, None)
    return line, col, p.origin


def _place(p: Parser, pos) -> LayoutItem:
    p.advance()
    table = _ident(p, "a table name")
    if not p.at_word("at"):
        raise p.error(f"expected 'at', found {p.describe(p.tok)}")
    p.advance()
    t = p.tok
    if t.kind != "sheet":
        raise p.error("expected a sheet-qualified anchor such as 'Sheet'!A1")
    p.advance()
    anchor = p.sheet_ref(t.value, (t.line, t.col))
    if not isinstance(anchor, CellRef):
        raise p.error("layout anchor must be a single cell", t)
    orientation = None
    if p.tok.kind == "word":
        if p.tok.value not in ORIENTATIONS:
            raise p.error(f"expected 'down' or 'across', found {p.describe(p.tok)}")
        orientation = p.advance().value
    p.expect_end()
    return LayoutItem(table, anchor.addr, orientation, pos=pos, origin=p.origin)


def _equation(p: Parser, pos) -> TableEquation:
    table = _ident(p, "a table name")
    p.expect_op("[")
    lhs: list[LhsSub] = []
    bound: list[str] = []
    while True:
        t = p.tok
        if p.at_word("all"):
            p.advance()
            var = _ident(p, "a variable after 'all'")
            if var in bound:
                raise p.error(f"variable {var!r} quantified twice", t)
            bound.append(var)
            lhs.append(LhsSub(True, Sub(var)))
        else:
            s = p.subscript()
            if s.var is not None:
                raise p.error(f"variable {s.var!r} on the left-hand side needs 'all'", t)
            lhs.append(LhsSub(False, s))
        if p.at_op(","):
            p.advance()
            continue
        break
    p.expect_op("]")
    p.expect_op("=")
    if p.tok.kind == "eof":
        raise p.error("missing right-hand side")
    rhs = p.parse_expression()
    p.expect_end()
    free = variables(rhs) - set(bound)
    if free:
        var = sorted(free)[0]
        # innermost node mentioning the variable
        hits = [n for n in walk(rhs) if var in variables(n) and n.pos is not None]
        node = hits[-1] if hits else None
        line, col = node.pos if node is not None else pos
        raise ParseError(f"unbound variable {var!r}", line, col, p.origin)
    return TableEquation(table, tuple(lhs), rhs, pos=pos, origin=p.origin)


def load_module(
    path: str | Path, _seen: set[Path] | None = None, text: str | None = None
) -> ModuleAst:
    """Parse a module file and everything it ``use``-s, merged into one AST.

    Each file is read at most once, so diamond-shaped includes are fine.
    When ``text`` is given it stands in for the file contents (``use``
    paths still resolve relative to ``path``).
    """
    seen = _seen if _seen is not None else set()
    path = Path(path)
    key = path.resolve()
    if key in seen:
        return ModuleAst()
    seen.add(key)
    if text is None:
        text = path.read_text(encoding="utf-8")
    mod = parse_module(text, str(path))
    parts = [mod]
    for u in mod.uses:
        target = path.parent / u.path
        if not target.exists():
            raise ParseError(f"used file {u.path!r} not found", u.pos[0], u.pos[1], u.origin)
        parts.append(load_module(target, seen))
    return merge_modules(parts)


# -- module printer ----------------------------------------------------------

def format_decl(t: TableDecl) -> str:
    return f"table {t.name}[" + ", ".join(f"{lo}:{hi}" for lo, hi in t.dims) + "]"


def format_equation(e: TableEquation) -> str:
    lhs = ", ".join(str(s) for s in e.lhs)
    return f"{e.table}[{lhs}] = {serialize_formula(e.rhs)}"


def format_layout_item(li: LayoutItem) -> str:
    text = f"place {li.table} at {li.anchor}"
    return text + (f" {li.orientation}" if li.orientation else "")


def serialize_module(m: ModuleAst) -> str:
    lines: list[str] = []
    lines += [f'use "{u.path}"' for u in m.uses]
    lines += [format_decl(t) for t in m.tables]
    lines += [
        f"def {d.name}(" + ", ".join(d.params) + f") = {serialize_formula(d.body)}" for d in m.macros
    ]
    lines += [format_equation(e) for e in m.equations]
    lines += [f"{c.addr} = {serialize_formula(c.rhs)}" for c in m.cells]
    if m.layout:
        lines.append("layout")
        lines += [format_layout_item(li) for li in m.layout]
    return "".join(line + "\n" for line in lines)


# -- run listings ----------------------------------------------------------------

@dataclass(frozen=True)
class Fixed:
    value: int


@dataclass(frozen=True)
class Binder:
    var: str
    low: int
    high: int


@dataclass(frozen=True)
class Span:
    """Anonymous range, used when the template mentions no variable."""

    low: int
    high: int


Part = Union[Fixed, Binder, Span]


@dataclass(frozen=True)
class RunEquation:
    sheet: str
    col: Part
    row: Part
    rhs: Node
    pos: tuple[int, int] | None = _where()

    def extent(self, axis: str) -> tuple[int, int]:
        part = self.col if axis == "col" else self.row
        if isinstance(part, Fixed):
            return part.value, part.value
        return part.low, part.high

    def cell_count(self) -> int:
        (c1, c2), (r1, r2) = self.extent("col"), self.extent("row")
        return (c2 - c1 + 1) * (r2 - r1 + 1)


@dataclass(frozen=True)
class RunListing:
    items: tuple[RunEquation, ...] = ()


def _part(raw) -> Part:
    if isinstance(raw, int):
        return Fixed(raw)
    kind, var, lo, hi = raw
    return Binder(var, lo, hi) if kind == "binder" else Span(lo, hi)


def parse_run_listing(text: str, origin: str | None = None) -> RunListing:
    items: list[RunEquation] = []
    for line, item in logical_lines(text):
        p = Parser(tokenize(item, line, 1, origin), "runs", None, origin)
        t = p.tok
        if t.kind != "sheet":
            raise p.error("expected a sheet-qualified cell address such as 'Sheet'!A1")
        p.advance()
        raw_col, raw_row = p.ref_parts(lhs=True)
        col, row = _part(raw_col), _part(raw_row)
        p.expect_op("=")
        p.default_sheet = t.value
        if p.tok.kind == "eof":
            raise p.error("missing formula after '='")
        rhs = p.parse_expression()
        p.expect_end()
        binders = [b.var for b in (col, row) if isinstance(b, Binder)]
        if len(binders) == 2 and binders[0] == binders[1]:
            raise ParseError(f"variable {binders[0]!r} bound twice", t.line, t.col, origin)
        used = variables(rhs)
        unbound = used - set(binders)
        if unbound:
            raise ParseError(f"unbound variable {sorted(unbound)[0]!r}", t.line, t.col, origin)
        if used and any(isinstance(x, Span) for x in (col, row)):
            raise ParseError(
                "anonymous range used with a template that mentions variables; bind it with 'V in lo:hi'",
                t.line, t.col, origin,
            )
        items.append(RunEquation(t.value, col, row, rhs, pos=(t.line, t.col)))
    return RunListing(tuple(items))


def format_run_lhs(r: RunEquation) -> str:
    def part(p: Part, axis: str) -> str:
        fmt = index_to_col if axis == "col" else str
        if isinstance(p, Fixed):
            return fmt(p.value)
        rng = f"{fmt(p.low)}:{fmt(p.high)}"
        return f"[{p.var} in {rng}]" if isinstance(p, Binder) else f"[{rng}]"

    return f"{quote_sheet(r.sheet)}!{part(r.col, 'col')}{part(r.row, 'row')}"
