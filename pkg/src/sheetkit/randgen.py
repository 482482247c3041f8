"""Seeded generators for workbooks, named fixtures, DSL modules and page sets.

Used by the property tests and the round-trip benchmark script. Every
generator takes a ``random.Random`` so runs are reproducible from a seed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from decimal import Decimal

from sheetkit.cells import CellAddr, index_to_col
from sheetkit.discovery import NamingEntry, NamingMap
from sheetkit.docset import Page
from sheetkit.formula import Binary, Call, CellRef, Node, Number, RangeRef, String, Unary
from sheetkit.workbook import Workbook

SHEETS = ("S", "Data", "House Stocks", "Flat's")
FUNCS = ("SUM", "MAX", "MIN")


@dataclass(frozen=True)
class WorkbookGenConfig:
    max_cells: int = 500
    max_blocks: int = 6
    max_block_side: int = 12
    noise_cells: int = 15
    max_row: int = 40
    max_col: int = 12
    sheets: tuple[str, ...] = SHEETS


@dataclass(frozen=True)
class NamedGenConfig:
    max_tables: int = 4
    max_rows: int = 8
    max_cols: int = 3
    residue_cells: int = 6
    irregular_prob: float = 0.3  # chance a table gets per-element formulas
    sheets: tuple[str, ...] = ("S", "Model")


@dataclass(frozen=True)
class ModuleGenConfig:
    max_tables: int = 4
    max_len: int = 6
    macro_prob: float = 0.5


@dataclass(frozen=True)
class PageGenConfig:
    max_pages: int = 10
    max_links: int = 6
    properties: tuple[str, ...] = ("has module", "uses", "defines")
    categories: tuple[str, ...] = ("Model", "Module", "Concept")


def _num(rng: random.Random) -> Number:
    if rng.random() < 0.7:
        return Number(Decimal(rng.randint(0, 99)))
    return Number(Decimal(rng.randint(1, 999)) / Decimal(rng.choice((10, 100))))


# -- random workbooks --------------------------------------------------------

class _RefSpec:
    """A reference whose coordinates move with the host cell, or not."""

    def __init__(self, rng: random.Random, cfg: WorkbookGenConfig, host_sheet: str):
        self.sheet = host_sheet if rng.random() < 0.5 else rng.choice(cfg.sheets)
        self.col = rng.randint(1, cfg.max_col)
        self.row = rng.randint(1, cfg.max_row)
        self.col_rel = rng.random() < 0.6
        self.row_rel = rng.random() < 0.6
        self.range = rng.random() < 0.15
        self.w, self.h = rng.randint(0, 2), rng.randint(0, 3)

    def at(self, i: int, j: int) -> Node:
        c = self.col + (j if self.col_rel else 0)
        r = self.row + (i if self.row_rel else 0)
        if self.range:
            return RangeRef(CellAddr(self.sheet, c, r), CellAddr(self.sheet, c + self.w, r + self.h))
        return CellRef(CellAddr(self.sheet, c, r))


def _template(rng: random.Random, cfg: WorkbookGenConfig, sheet: str, depth: int = 0):
    """Returns ``f(i, j) -> Node`` for cell offset (i rows, j cols)."""
    roll = rng.random()
    if depth >= 2 or roll < 0.35:
        leaf = rng.random()
        if leaf < 0.55:
            spec = _RefSpec(rng, cfg, sheet)
            return spec.at
        if leaf < 0.85:
            base = _num(rng)
            di = rng.choice((0, 0, 1, 2, -1))
            dj = rng.choice((0, 0, 1, 5))
            return lambda i, j: Number(base.value + di * i + dj * j)
        text = rng.choice(("Year", "Total", "it's", ""))
        return lambda i, j: String(text)
    if roll < 0.8:
        op = rng.choice(("+", "-", "*", "/", "^", "&", "=", "<>"))
        a = _template(rng, cfg, sheet, depth + 1)
        b = _template(rng, cfg, sheet, depth + 1)
        return lambda i, j: Binary(op, a(i, j), b(i, j))
    if roll < 0.88:
        a = _template(rng, cfg, sheet, depth + 1)
        return lambda i, j: Unary("-", a(i, j))
    name = rng.choice(FUNCS)
    args = [_template(rng, cfg, sheet, depth + 1) for _ in range(rng.randint(1, 3))]
    return lambda i, j: Call(name, tuple(f(i, j) for f in args))


def random_workbook(rng: random.Random, cfg: WorkbookGenConfig = WorkbookGenConfig()) -> Workbook:
    """Rectangles stamped with one template each, plus scattered noise cells."""
    cells: dict[CellAddr, Node] = {}
    for _ in range(rng.randint(0, cfg.max_blocks)):
        sheet = rng.choice(cfg.sheets)
        h = rng.randint(1, cfg.max_block_side)
        w = rng.randint(1, min(cfg.max_block_side, 4))
        r0, c0 = rng.randint(1, cfg.max_row), rng.randint(1, cfg.max_col)
        f = _template(rng, cfg, sheet)
        for i in range(h):
            for j in range(w):
                if len(cells) >= cfg.max_cells:
                    break
                cells[CellAddr(sheet, c0 + j, r0 + i)] = f(i, j)
    for _ in range(rng.randint(0, cfg.noise_cells)):
        if len(cells) >= cfg.max_cells:
            break
        sheet = rng.choice(cfg.sheets)
        addr = CellAddr(sheet, rng.randint(1, cfg.max_col + 4), rng.randint(1, cfg.max_row + 8))
        cells[addr] = _template(rng, cfg, sheet)(0, 0)
    return Workbook(cells)


# -- random named fixtures -----------------------------------------------------

def random_named_fixture(
    rng: random.Random, cfg: NamedGenConfig = NamedGenConfig()
) -> tuple[Workbook, NamingMap]:
    """Tables side by side with every rectangle cell filled, plus residue.

    Regular tables use one formula template over their elements; irregular
    ones get independent formulas so generalization must leave them alone.
    """
    entries: list[NamingEntry] = []
    col = 2
    for t in range(rng.randint(1, cfg.max_tables)):
        sheet = rng.choice(cfg.sheets)
        shape = rng.choice(("down", "across", "grid"))
        h = rng.randint(1, cfg.max_rows) if shape != "across" else 1
        w = rng.randint(1, cfg.max_cols) if shape != "down" else 1
        top = rng.randint(2, 6)
        left = col
        col += w + 1
        row_base = (top + rng.randint(0, h - 1), rng.randint(-5, 2010)) if shape != "across" else None
        col_base = (left + rng.randint(0, w - 1), rng.randint(0, 5)) if shape != "down" else None
        entries.append(
            NamingEntry(f"T{t}", sheet, top, left, top + h - 1, left + w - 1, row_base, col_base)
        )

    wcfg = WorkbookGenConfig(sheets=cfg.sheets, max_row=12, max_col=col + 2)
    cells: dict[CellAddr, Node] = {}
    for e in entries:
        regular = rng.random() >= cfg.irregular_prob
        f = _template(rng, wcfg, e.sheet)
        for r in range(e.top, e.bottom + 1):
            for c in range(e.left, e.right + 1):
                if not regular:
                    f = _template(rng, wcfg, e.sheet)
                cells[CellAddr(e.sheet, c, r)] = f(r - e.top, c - e.left)
    m = NamingMap(tuple(entries))
    for _ in range(rng.randint(0, cfg.residue_cells)):
        sheet = rng.choice(cfg.sheets)
        addr = CellAddr(sheet, rng.randint(1, col + 2), rng.randint(1, 16))
        if m.lookup(addr) is None:
            cells[addr] = _template(rng, wcfg, sheet)(0, 0)
    return Workbook(cells), m


# -- random DSL modules --------------------------------------------------------

def random_module_text(rng: random.Random, cfg: ModuleGenConfig = ModuleGenConfig()) -> str:
    """A compilable DSL module, with its own layout, as source text."""
    n = rng.randint(1, cfg.max_tables)
    lo = rng.randint(0, 2000)
    hi = lo + rng.randint(0, cfg.max_len - 1)
    lines = []
    macro = rng.random() < cfg.macro_prob
    if macro:
        lines.append("def scale(a, k) = a * k + 1")
    names = [f"T{i}" for i in range(n)]
    lines += [f"table {t}[{lo}:{hi}]" for t in names]
    lines.append("")
    for i, t in enumerate(names):
        if i == 0 or rng.random() < 0.3:
            rhs = f"{rng.randint(0, 9)} + y"
        else:
            src = rng.choice(names[:i])
            rhs = f"{src}[y] - {rng.randint(1, 9)}"
            if macro and rng.random() < 0.5:
                rhs = f"scale({src}[y], {rng.randint(2, 5)})"
            elif rng.random() < 0.3:
                rhs = f"SUM({src}[{lo}], {src}[y])"
        lines.append(f"{t}[all y] = {rhs}")
    lines.append("")
    for i, t in enumerate(names):
        lines.append(f"place {t} at 'Gen'!{index_to_col(i + 2)}3")
    return "\n".join(lines) + "\n"


# -- random page graphs ------------------------------------------------------

def random_pages(rng: random.Random, cfg: PageGenConfig = PageGenConfig()) -> list[Page]:
    n = rng.randint(0, cfg.max_pages)
    names = [f"Page {i}" for i in range(n)]
    pages = []
    for name in names:
        parts = [f"Text about ''{name}''."]
        for _ in range(rng.randint(0, cfg.max_links)):
            # allow links to pages that do not exist
            target = rng.choice(names + ["Ghost"]) if names else "Ghost"
            if rng.random() < 0.5:
                parts.append(f"[[{rng.choice(cfg.properties)}::{target}]]")
            else:
                parts.append(f"[[{target}]]")
        if rng.random() < 0.6:
            parts.append(f"[[Category:{rng.choice(cfg.categories)}]]")
        if rng.random() < 0.3:
            parts.append(f"<ask> [[{rng.choice(cfg.properties)}::{{{{PAGENAME}}}}]] </ask>")
        pages.append(Page(name, "\n".join(parts) + "\n"))
    return pages
