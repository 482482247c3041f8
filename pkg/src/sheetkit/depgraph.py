"""Sheet-level dependency network and its DOT rendering."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from sheetkit.cells import CellAddr
from sheetkit.formula import CellRef, Node, RangeRef, walk
from sheetkit.workbook import Workbook


@dataclass
class DepGraph:
    nodes: set[str] = field(default_factory=set)
    edges: Counter = field(default_factory=Counter)  # (from, to) -> reference count
    witness: dict[tuple[str, str], CellAddr] = field(default_factory=dict)

    def sorted_edges(self) -> list[tuple[str, str, int]]:
        return [(a, b, n) for (a, b), n in sorted(self.edges.items())]


def referenced_sheets(formula: Node) -> list[str]:
    """One entry per reference; a range counts once."""
    out = []
    for n in walk(formula):
        if isinstance(n, CellRef):
            out.append(n.addr.sheet)
        elif isinstance(n, RangeRef):
            out.append(n.sheet)
    return out


def sheet_deps(w: Workbook, include_self: bool = False) -> DepGraph:
    g = DepGraph()
    for addr, f in w.sorted_items():
        g.nodes.add(addr.sheet)
        for target in referenced_sheets(f):
            g.nodes.add(target)
            if target == addr.sheet and not include_self:
                continue
            key = (addr.sheet, target)
            g.edges[key] += 1
            g.witness.setdefault(key, addr)
    return g


def dot_id(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def emit_dot(g: DepGraph, counts: bool = True) -> str:
    if not g.nodes:
        return "digraph sheets { }\n"
    lines = ["digraph sheets {"]
    lines += [f"  {dot_id(n)};" for n in sorted(g.nodes)]
    for a, b, n in g.sorted_edges():
        label = f' [label="{n}"]' if counts else ""
        lines.append(f"  {dot_id(a)} -> {dot_id(b)}{label};")
    lines.append("}")
    return "\n".join(lines) + "\n"
