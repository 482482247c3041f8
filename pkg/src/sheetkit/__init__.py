"""Bidirectional spreadsheet toolchain.

Compile table equations into cell-level workbooks, and take workbooks apart
again: listing, run detection, renaming into named tables, sheet dependency
graphs, and a literate documentation pipeline.
"""

from sheetkit.cells import CellAddr, col_to_index, index_to_col
from sheetkit.errors import SheetkitError, ParseError, CompileError
from sheetkit.formula import parse_formula, serialize_formula
from sheetkit.workbook import Workbook, parse_workbook, serialize_workbook

__all__ = [
    "CellAddr",
    "CompileError",
    "ParseError",
    "SheetkitError",
    "Workbook",
    "col_to_index",
    "index_to_col",
    "parse_formula",
    "parse_workbook",
    "serialize_formula",
    "serialize_workbook",
]

__version__ = "0.1.0"
