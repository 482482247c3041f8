"""Column lettering and cell addresses."""

from __future__ import annotations

import re
from dataclasses import dataclass

from sheetkit.errors import ParseError

_PLAIN_SHEET = re.compile(r"[A-Za-z0-9_]+")


def col_to_index(letters: str) -> int:
    """Bijective base-26: ``A`` is 1, ``Z`` is 26, ``AA`` is 27."""
    if not letters:
        raise ParseError("empty column letters")
    n = 0
    for ch in letters:
        if not ("A" <= ch <= "Z"):
            raise ParseError(f"invalid column letter {ch!r} in {letters!r}")
        n = n * 26 + (ord(ch) - 64)
    return n


def index_to_col(i: int) -> str:
    if i < 1:
        raise ValueError(f"column index must be >= 1, got {i}")
    out = []
    while i:
        i, rem = divmod(i - 1, 26)
        out.append(chr(65 + rem))
    return "".join(reversed(out))


def quote_sheet(name: str) -> str:
    """Canonical sheet prefix: always single-quoted, inner quotes doubled."""
    return "'" + name.replace("'", "''") + "'"


def is_plain_sheet(name: str) -> bool:
    return _PLAIN_SHEET.fullmatch(name) is not None


@dataclass(frozen=True)
class CellAddr:
    sheet: str
    col: int
    row: int

    def __post_init__(self) -> None:
        if not self.sheet or self.sheet != self.sheet.strip():
            raise ValueError(f"bad sheet name {self.sheet!r}")
        if self.col < 1 or self.row < 1:
            raise ValueError(f"cell coordinates must be >= 1: col={self.col} row={self.row}")

    @property
    def sort_key(self) -> tuple[str, int, int]:
        return (self.sheet, self.row, self.col)

    @property
    def a1(self) -> str:
        return f"{index_to_col(self.col)}{self.row}"

    def __str__(self) -> str:
        return f"{quote_sheet(self.sheet)}!{self.a1}"

    def moved(self, dcol: int = 0, drow: int = 0) -> "CellAddr":
        return CellAddr(self.sheet, self.col + dcol, self.row + drow)
