"""Run the housing examples end to end and print each stage.

    python3 scripts/worked_examples.py
"""

from pathlib import Path

from sheetkit.compiler import compile_files
from sheetkit.depgraph import emit_dot, sheet_deps
from sheetkit.discovery import parse_naming_map, rename
from sheetkit.dsl import parse_run_listing
from sheetkit.runs import detect_runs, expand_runs, serialize_run_listing
from sheetkit.workbook import parse_workbook, serialize_workbook

FIX = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def banner(title):
    print(f"\n== {title}")


def main():
    banner("compile housing.sheet with housing.layout")
    w = compile_files([FIX / "housing.sheet"], FIX / "housing.layout")
    print(serialize_workbook(w), end="")

    banner("runs of the compiled workbook")
    print(serialize_run_listing(detect_runs(w)), end="")

    banner("column headers")
    print(serialize_run_listing(detect_runs(parse_workbook((FIX / "year_headers.cells").read_text()))), end="")

    banner("two-binder run, expanded (first and last cells)")
    home = expand_runs(parse_run_listing((FIX / "home_sales.runs").read_text()))
    lines = serialize_workbook(home).splitlines()
    print(lines[0], "...", lines[-1], f"({len(lines)} cells)", sep="\n")

    banner("renamed two-column stock tables")
    named = rename(
        parse_workbook((FIX / "stocks2d.cells").read_text()),
        parse_naming_map((FIX / "stocks2d.names").read_text()),
    )
    print("\n".join(line for line in named.to_text().splitlines() if "all" in line or line.startswith("table")))

    banner("guard macro")
    print(serialize_workbook(compile_files([FIX / "guard.sheet"])), end="")

    banner("sheet dependencies")
    print(emit_dot(sheet_deps(home)), end="")


if __name__ == "__main__":
    main()
