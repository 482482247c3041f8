"""``sheetkit`` command line.

Every subcommand reads files (``-`` is standard input) and writes its
result to ``-o`` (default standard output). Files are written to a
temporary name and renamed into place, so a failed run leaves no partial
output. Exit status: 0 ok, 1 bad input, 2 bad usage.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from pathlib import Path

from sheetkit.compiler import compile_module, parse_layout
from sheetkit.depgraph import emit_dot, sheet_deps
from sheetkit.discovery import parse_naming_map, rename
from sheetkit.docset import build_docset
from sheetkit.dsl import LayoutItem, ModuleAst, load_module, merge_modules, parse_run_listing
from sheetkit.errors import ParseError, SheetkitError
from sheetkit.literate import parse_literate, tangle, weave
from sheetkit.runs import detect_runs, expand_runs, serialize_run_listing
from sheetkit.workbook import Workbook, parse_workbook, serialize_workbook

STDIO = "-"


def read_input(path: str) -> tuple[str, str]:
    """Returns ``(text, origin)``."""
    if path == STDIO:
        return sys.stdin.read(), "<stdin>"
    return Path(path).read_text(encoding="utf-8"), path


def write_output(path: str | None, text: str) -> None:
    if path is None or path == STDIO:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    target = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_cells_or_runs(path: str) -> Workbook:
    """Accept either format: a plain workbook is also a valid run listing."""
    text, origin = read_input(path)
    if path.endswith(".runs"):
        return expand_runs(parse_run_listing(text, origin))
    try:
        return parse_workbook(text, origin)
    except ParseError as first:
        try:
            return expand_runs(parse_run_listing(text, origin))
        except SheetkitError:
            raise first from None


# -- subcommands ---------------------------------------------------------------

def cmd_compile(args) -> str:
    seen: set[Path] = set()
    parts = []
    for p in args.modules:
        if p == STDIO:
            parts.append(load_module(Path("<stdin>"), seen, sys.stdin.read()))
        else:
            parts.append(load_module(p, seen))
    layout: list[LayoutItem] = []
    if args.layout:
        text, origin = read_input(args.layout)
        layout = parse_layout(text, origin)
    module = merge_modules(parts + [ModuleAst(layout=tuple(layout))])
    return serialize_workbook(compile_module(module))


def cmd_list(args) -> str:
    return serialize_workbook(load_cells_or_runs(args.input))


def cmd_runs(args) -> str:
    return serialize_run_listing(detect_runs(load_cells_or_runs(args.input)))


def cmd_expand(args) -> str:
    text, origin = read_input(args.input)
    return serialize_workbook(expand_runs(parse_run_listing(text, origin)))


def cmd_rename(args) -> str:
    w = load_cells_or_runs(args.input)
    text, origin = read_input(args.names)
    return rename(w, parse_naming_map(text, origin)).to_text()


def cmd_graph(args) -> str:
    g = sheet_deps(load_cells_or_runs(args.input), include_self=args.include_self)
    return emit_dot(g, counts=not args.no_counts)


def cmd_tangle(args) -> str:
    return tangle(read_input(args.input)[0])


def cmd_weave(args) -> str:
    text, origin = read_input(args.input)
    title = args.title if args.title is not None else Path(origin).stem.replace("_", " ")
    return weave(parse_literate(text), title)


def cmd_docset(args) -> None:
    files = build_docset(args.srcdir, args.output)
    print(f"wrote {len(files)} files to {args.output}", file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sheetkit", description="Spreadsheet equation tools: compile, list, analyse, document."
    )
    sub = ap.add_subparsers(dest="command", metavar="COMMAND")

    def add(name, fn, help_text, output=True):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.set_defaults(func=fn)
        if output:
            p.add_argument("-o", "--output", default=STDIO, help="output file ('-' for stdout)")
        return p

    p = add("compile", cmd_compile, "compile DSL modules into a .cells workbook")
    p.add_argument("modules", nargs="+", help="DSL module files")
    p.add_argument("--layout", help="file of 'place' items (optional when modules place their tables)")
    p = add("list", cmd_list, "list a workbook one cell per line in canonical order")
    p.add_argument("input")
    p = add("runs", cmd_runs, "group a workbook's formulas into runs")
    p.add_argument("input")
    p = add("expand", cmd_expand, "expand a run listing back into cells")
    p.add_argument("input")
    p = add("rename", cmd_rename, "relist a workbook as named table equations")
    p.add_argument("input", help=".cells or .runs file")
    p.add_argument("--names", required=True, help="naming map file")
    p = add("graph", cmd_graph, "sheet dependency graph as DOT")
    p.add_argument("input")
    p.add_argument("--no-counts", action="store_true", help="omit reference-count edge labels")
    p.add_argument("--include-self", action="store_true", help="keep references within a sheet")
    p = add("tangle", cmd_tangle, "extract the code lines of a literate file")
    p.add_argument("input")
    p = add("weave", cmd_weave, "render a literate file as HTML")
    p.add_argument("input")
    p.add_argument("--title", help="page title (default: file name)")
    p = add("docset", cmd_docset, "build a static documentation site", output=False)
    p.add_argument("srcdir")
    p.add_argument("-o", "--output", required=True, help="site directory (replaced atomically)")
    return ap


def _color() -> bool:
    return sys.stderr.isatty() and "NO_COLOR" not in os.environ


def report(location: str, message: str) -> None:
    tag = "\033[1;31merror:\033[0m" if _color() else "error:"
    print(f"{location}: {tag} {message}" if location else f"{tag} {message}", file=sys.stderr)


def error_location(exc: SheetkitError) -> str:
    parts = [exc.origin or "<input>"]
    if exc.line is not None:
        parts.append(str(exc.line))
        if exc.col is not None:
            parts.append(str(exc.col))
    return ":".join(parts)


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command is None:
        ap.print_usage(sys.stderr)
        return 2
    try:
        out = args.func(args)
        if out is not None:
            write_output(args.output, out)
    except SheetkitError as exc:
        report(error_location(exc), exc.message)
        return 1
    except OSError as exc:
        report(exc.filename or "", exc.strerror or str(exc))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
