"""Compile table modules to a workbook.

The pipeline is macro expansion, ``all`` expansion into element equations,
layout resolution, then replacement of every table element reference by the
cell it was placed on.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from decimal import Decimal
from pathlib import Path
from typing import Iterable, Mapping

from sheetkit.cells import CellAddr
from sheetkit.dsl import (
    LayoutItem,
    MacroDef,
    ModuleAst,
    TableDecl,
    TableEquation,
    load_module,
    merge_modules,
    parse_module,
    where,
)
from sheetkit.errors import CompileError, SheetkitError
from sheetkit.formula import (
    Call,
    CellRef,
    Name,
    Node,
    Number,
    PatternRange,
    PatternRef,
    Sub,
    TableRef,
    make_range,
    transform,
    walk,
)
from sheetkit.workbook import Workbook

MACRO_EXPANSION_LIMIT = 10_000

Element = tuple[str, tuple[int, ...]]


@dataclass(frozen=True)
class ElementEquation:
    table: str
    subs: tuple[int, ...]
    rhs: Node
    pos: tuple[int, int] | None = field(default=None, compare=False, repr=False)
    origin: str | None = field(default=None, compare=False, repr=False)

    @property
    def element(self) -> Element:
        return (self.table, self.subs)


def element_text(table: str, subs: Iterable[int]) -> str:
    return f"{table}[" + ", ".join(str(s) for s in subs) + "]"


def _located(exc: SheetkitError, item) -> SheetkitError:
    if exc.line is None and item.pos is not None:
        exc.line, exc.col = item.pos
    if exc.origin is None:
        exc.origin = item.origin
    return exc


# -- macros ------------------------------------------------------------------

def expand_macros(node: Node, macros: Mapping[str, MacroDef] | Iterable[MacroDef]) -> Node:
    """Replace every call to a macro by its body, recursively.

    Arguments are substituted as trees, so an argument used twice in the body
    appears twice in the result. Recursion is reported as a cycle.
    """
    env = dict(macros) if isinstance(macros, Mapping) else {d.name: d for d in macros}
    if not env:
        return node
    budget = [MACRO_EXPANSION_LIMIT]
    return _expand(node, env, (), budget)


def _expand(node: Node, env: dict[str, MacroDef], stack: tuple[str, ...], budget: list[int]) -> Node:
    def visit(n: Node):
        if not (isinstance(n, Call) and n.name in env):
            return None
        d = env[n.name]
        line, col = n.pos if n.pos else (None, None)
        if n.name in stack:
            cycle = " -> ".join(stack[stack.index(n.name):] + (n.name,))
            raise CompileError(f"macro recursion: {cycle}", line, col)
        if len(n.args) != len(d.params):
            raise CompileError(
                f"macro {d.name} takes {len(d.params)} argument(s), got {len(n.args)}", line, col
            )
        budget[0] -= 1
        if budget[0] < 0:
            raise CompileError(f"more than {MACRO_EXPANSION_LIMIT} macro expansions in one formula", line, col)
        body = _expand(d.body, env, stack + (n.name,), budget)
        return substitute(body, dict(zip(d.params, n.args)))

    return transform(node, visit)


def substitute(node: Node, bindings: Mapping[str, Node]) -> Node:
    return transform(node, lambda n: bindings.get(n.name) if isinstance(n, Name) else None)


# -- quantifiers ---------------------------------------------------------------

def _binding_text(env: Mapping[str, int]) -> str:
    return ", ".join(f"{k}={v}" for k, v in env.items()) or "no variables"


def bind_subscripts(node: Node, env: Mapping[str, int], tables: Mapping[str, TableDecl]) -> Node:
    """Evaluate every subscript and bare variable under ``env``.

    Table references are checked against their declared ranges.
    """

    def ev(s, n):
        if isinstance(s, int):
            return s
        if s.var is not None and s.var not in env:
            raise CompileError(f"unbound variable {s.var!r}", *(n.pos or (None, None)))
        return s.evaluate(dict(env))

    def visit(n: Node):
        if isinstance(n, Name):
            if n.name not in env:
                raise CompileError(f"unbound variable {n.name!r}", *(n.pos or (None, None)))
            return Number(Decimal(env[n.name]), pos=n.pos)
        if isinstance(n, TableRef):
            decl = tables.get(n.table)
            line, col = n.pos or (None, None)
            if decl is None:
                raise CompileError(f"undeclared table {n.table!r}", line, col)
            if len(n.subs) != len(decl.dims):
                raise CompileError(
                    f"table {n.table} has {len(decl.dims)} dimension(s), got {len(n.subs)} subscript(s)",
                    line, col,
                )
            values = tuple(ev(s, n) for s in n.subs)
            for v, (lo, hi) in zip(values, decl.dims):
                if not lo <= v <= hi:
                    raise CompileError(
                        f"{element_text(n.table, values)} is outside declared range "
                        f"{n.table}[" + ", ".join(f"{a}:{b}" for a, b in decl.dims) + "]"
                        f" (with {_binding_text(env)})",
                        line, col,
                    )
            return TableRef(n.table, tuple(Sub(None, v) for v in values), pos=n.pos)
        if isinstance(n, PatternRef):
            c, r = ev(n.col, n), ev(n.row, n)
            if c < 1 or r < 1:
                raise CompileError(
                    f"cell reference evaluates off the sheet (col {c}, row {r}) with {_binding_text(env)}",
                    *(n.pos or (None, None)),
                )
            return CellRef(CellAddr(n.sheet, c, r), pos=n.pos)
        if isinstance(n, PatternRange):
            coords = [ev(s, n) for s in (n.col1, n.row1, n.col2, n.row2)]
            if min(coords) < 1:
                raise CompileError(
                    f"range evaluates off the sheet with {_binding_text(env)}", *(n.pos or (None, None))
                )
            return make_range(n.sheet, *coords, pos=n.pos)
        return None

    return transform(node, visit)


def expand_equation(eq: TableEquation, tables: Mapping[str, TableDecl]) -> list[ElementEquation]:
    """One element equation per assignment of the quantified variables."""
    try:
        decl = tables.get(eq.table)
        if decl is None:
            raise CompileError(f"undeclared table {eq.table!r}")
        if len(eq.lhs) != len(decl.dims):
            raise CompileError(
                f"table {eq.table} has {len(decl.dims)} dimension(s), got {len(eq.lhs)} subscript(s)"
            )
        axes: list[range | tuple[int]] = []
        for s, (lo, hi) in zip(eq.lhs, decl.dims):
            if s.quantified:
                axes.append(range(lo, hi + 1))
            else:
                v = s.sub.offset
                if not lo <= v <= hi:
                    raise CompileError(f"subscript {v} of {eq.table} is outside {lo}:{hi}")
                axes.append((v,))
        qpos = [i for i, s in enumerate(eq.lhs) if s.quantified]
        names = [eq.lhs[i].sub.var for i in qpos]
        out = []
        for combo in itertools.product(*axes):
            env = {name: combo[i] for name, i in zip(names, qpos)}
            rhs = bind_subscripts(eq.rhs, env, tables)
            out.append(ElementEquation(eq.table, tuple(combo), rhs, eq.pos, eq.origin))
        return out
    except SheetkitError as exc:
        raise _located(exc, eq)


# -- layout --------------------------------------------------------------------

def _table_env(tables) -> dict[str, TableDecl]:
    return dict(tables) if isinstance(tables, Mapping) else {t.name: t for t in tables}


def place_element(decl: TableDecl, item: LayoutItem, subs: tuple[int, ...]) -> CellAddr:
    a = item.anchor
    if len(decl.dims) == 1:
        step = subs[0] - decl.dims[0][0]
        if (item.orientation or "down") == "down":
            return CellAddr(a.sheet, a.col, a.row + step)
        return CellAddr(a.sheet, a.col + step, a.row)
    (lo1, _), (lo2, _) = decl.dims
    return CellAddr(a.sheet, a.col + subs[1] - lo2, a.row + subs[0] - lo1)


def resolve_layout(
    tables: Mapping[str, TableDecl] | Iterable[TableDecl],
    layout: Iterable[LayoutItem],
    used: Iterable[str] = (),
) -> dict[Element, CellAddr]:
    """Map every element of every placed table to its cell.

    One-dimensional tables run ``down`` (default) or ``across`` from the
    anchor; two-dimensional tables put the first subscript on rows and the
    second on columns.
    """
    decls = _table_env(tables)
    items: dict[str, LayoutItem] = {}
    for li in layout:
        if li.table in items:
            raise _located(
                CompileError(f"table {li.table} placed twice (also at {where(items[li.table])})"), li
            )
        if li.table not in decls:
            raise _located(CompileError(f"layout for undeclared table {li.table!r}"), li)
        items[li.table] = li
    missing = sorted(set(used) - set(items))
    if missing:
        decl = decls.get(missing[0])
        err = CompileError(f"no layout for table {missing[0]!r}")
        raise _located(err, decl) if decl is not None else err

    placed: dict[Element, CellAddr] = {}
    owner: dict[CellAddr, Element] = {}
    for name in sorted(items):
        li, decl = items[name], decls[name]
        if len(decl.dims) == 2 and li.orientation is not None:
            raise _located(
                CompileError(f"2-D table {name} is always rows-by-columns; drop {li.orientation!r}"), li
            )
        if len(decl.dims) > 2:
            raise _located(CompileError(f"cannot lay out {len(decl.dims)}-D table {name}"), li)
        for subs in itertools.product(*(range(lo, hi + 1) for lo, hi in decl.dims)):
            addr = place_element(decl, li, subs)
            if addr in owner:
                other = owner[addr]
                raise _located(
                    CompileError(
                        f"tables {other[0]} and {name} overlap at {addr} "
                        f"({element_text(*other)} and {element_text(name, subs)})"
                    ),
                    li,
                )
            owner[addr] = (name, subs)
            placed[(name, subs)] = addr
    return placed


# -- whole modules -----------------------------------------------------------

def _resolve_refs(node: Node, placement: Mapping[Element, CellAddr]) -> Node:
    def visit(n: Node):
        if isinstance(n, TableRef):
            key = (n.table, tuple(s.offset for s in n.subs))
            return CellRef(placement[key], pos=n.pos)
        return None

    return transform(node, visit)


def _tables_referenced(node: Node) -> set[str]:
    return {n.table for n in walk(node) if isinstance(n, TableRef)}


def compile_module(module: ModuleAst, layout: Iterable[LayoutItem] = ()) -> Workbook:
    """Compile a merged module (plus optional extra layout items)."""
    tables = {t.name: t for t in module.tables}
    macros = {d.name: d for d in module.macros}
    layout_items = list(module.layout) + list(layout)

    elements: list[ElementEquation] = []
    for eq in module.equations:
        try:
            rhs = expand_macros(eq.rhs, macros)
        except SheetkitError as exc:
            raise _located(exc, eq)
        elements.extend(expand_equation(replace(eq, rhs=rhs), tables))

    plain = []
    for ce in module.cells:
        try:
            rhs = bind_subscripts(expand_macros(ce.rhs, macros), {}, tables)
        except SheetkitError as exc:
            raise _located(exc, ce)
        plain.append((ce, rhs))

    used = {e.table for e in elements}
    for e in elements:
        used |= _tables_referenced(e.rhs)
    for _, rhs in plain:
        used |= _tables_referenced(rhs)
    placement = resolve_layout(tables, layout_items, used)

    defined: dict[Element, ElementEquation] = {}
    for e in elements:
        first = defined.get(e.element)
        if first is not None:
            raise _located(
                CompileError(
                    f"{element_text(*e.element)} defined twice (also at {where(first)})"
                ),
                e,
            )
        defined[e.element] = e
    for key in sorted(placement, key=lambda k: (k[0], k[1])):
        if key not in defined:
            decl = tables[key[0]]
            raise _located(
                CompileError(f"{element_text(*key)} is placed but no equation defines it"), decl
            )

    cells: dict[CellAddr, Node] = {}
    sources: dict[CellAddr, object] = {}
    for e in elements:
        addr = placement[e.element]
        cells[addr] = _resolve_refs(e.rhs, placement)
        sources[addr] = e
    for ce, rhs in plain:
        if ce.addr in cells:
            other = sources[ce.addr]
            what = element_text(*other.element) if isinstance(other, ElementEquation) else "another equation"
            raise _located(
                CompileError(f"cell {ce.addr} already holds {what} (defined at {where(other)})"), ce
            )
        cells[ce.addr] = _resolve_refs(rhs, placement)
        sources[ce.addr] = ce
    return Workbook(cells)


def compile(module: ModuleAst, layout: Iterable[LayoutItem] = ()) -> Workbook:  # noqa: A001
    return compile_module(module, layout)


def parse_layout(text: str, origin: str | None = None) -> list[LayoutItem]:
    mod = parse_module(text, origin)
    if mod.tables or mod.equations or mod.macros or mod.uses or mod.cells:
        raise CompileError("layout files may only contain 'place' items", origin=origin)
    return list(mod.layout)


def compile_files(paths: Iterable[str | Path], layout_path: str | Path | None = None) -> Workbook:
    seen: set[Path] = set()
    module = merge_modules([load_module(p, seen) for p in paths])
    layout: list[LayoutItem] = []
    if layout_path is not None:
        layout = parse_layout(Path(layout_path).read_text(encoding="utf-8"), str(layout_path))
    merged = merge_modules([module, ModuleAst(layout=tuple(layout))])
    return compile_module(merged)
