"""Formula trees, the tokenizer and parser, and the canonical printer.

One expression grammar serves three dialects:

``cells``
    plain spreadsheet formulas (``'S'!A1 + SUM(B1:B9)``);
``runs``
    run-listing templates, where a reference may carry bracketed
    subscripts (``'S'!F[V0]``, ``'S'![V0+2][V1-1]``) and a varying numeric
    constant is written ``{10*V0 + 5}``;
``dsl``
    table equations: ``Builds[y, 1]`` is a table element, bare names are
    quantified variables or macro parameters, and sheet-qualified
    references may use subscripts the same way as in run listings.

Precedence, loosest first: comparisons (non-associative), ``&``, ``+ -``,
``* /``, unary minus, ``^`` (right-associative), atoms.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Iterator, Union

from sheetkit.cells import CellAddr, col_to_index, index_to_col, quote_sheet
from sheetkit.errors import ParseError

Pos = tuple[int, int]


def _pos() -> Pos | None:
    return field(default=None, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class Number:
    value: Decimal
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class String:
    value: str
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class CellRef:
    addr: CellAddr
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class RangeRef:
    start: CellAddr
    end: CellAddr
    pos: Pos | None = _pos()

    def __post_init__(self) -> None:
        if self.start.sheet != self.end.sheet:
            raise ValueError("range corners on different sheets")
        if self.start.col > self.end.col or self.start.row > self.end.row:
            raise ValueError("range corners out of order")

    @property
    def sheet(self) -> str:
        return self.start.sheet


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Node"
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple["Node", ...]
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Sub:
    """A subscript: a constant (``var is None``) or ``var + offset``."""

    var: str | None
    offset: int = 0

    def evaluate(self, env: dict[str, int]) -> int:
        if self.var is None:
            return self.offset
        return env[self.var] + self.offset

    def __str__(self) -> str:
        if self.var is None:
            return str(self.offset)
        if self.offset == 0:
            return self.var
        return f"{self.var}{self.offset:+d}"


@dataclass(frozen=True)
class TableRef:
    table: str
    subs: tuple[Sub, ...]
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Name:
    name: str
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class PatternRef:
    """Cell reference whose column and/or row is a subscript expression."""

    sheet: str
    col: Union[int, Sub]
    row: Union[int, Sub]
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class PatternRange:
    sheet: str
    col1: Union[int, Sub]
    row1: Union[int, Sub]
    col2: Union[int, Sub]
    row2: Union[int, Sub]
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Affine:
    """Numeric constant ``const + sum(coef * var)`` in a run template."""

    const: Decimal
    terms: tuple[tuple[str, int], ...]
    pos: Pos | None = _pos()

    def evaluate(self, env: dict[str, int]) -> Decimal:
        return self.const + sum((Decimal(k) * env[v] for v, k in self.terms), Decimal(0))


Node = Union[
    Number, String, CellRef, RangeRef, Unary, Binary, Call,
    TableRef, Name, PatternRef, PatternRange, Affine,
]

COMPARISONS = ("=", "<>", "<", "<=", ">", ">=")
BINARY_OPS = ("+", "-", "*", "/", "^", "&") + COMPARISONS

_MAX_EXPONENT = 1000


def make_ref(sheet: str, col: Union[int, Sub], row: Union[int, Sub], pos: Pos | None = None):
    if isinstance(col, int) and isinstance(row, int):
        return CellRef(CellAddr(sheet, col, row), pos=pos)
    return PatternRef(sheet, col, row, pos=pos)


def make_range(sheet, c1, r1, c2, r2, pos: Pos | None = None):
    if all(isinstance(v, int) for v in (c1, r1, c2, r2)):
        return RangeRef(
            CellAddr(sheet, min(c1, c2), min(r1, r2)),
            CellAddr(sheet, max(c1, c2), max(r1, r2)),
            pos=pos,
        )
    return PatternRange(sheet, c1, r1, c2, r2, pos=pos)


def children(node: Node) -> tuple[Node, ...]:
    if isinstance(node, Unary):
        return (node.operand,)
    if isinstance(node, Binary):
        return (node.left, node.right)
    if isinstance(node, Call):
        return node.args
    return ()


def walk(node: Node) -> Iterator[Node]:
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(children(n)))


def rebuild(node: Node, new_children: tuple[Node, ...]) -> Node:
    if isinstance(node, Unary):
        return Unary(node.op, new_children[0], pos=node.pos)
    if isinstance(node, Binary):
        return Binary(node.op, new_children[0], new_children[1], pos=node.pos)
    if isinstance(node, Call):
        return Call(node.name, tuple(new_children), pos=node.pos)
    return node


def transform(node: Node, fn) -> Node:
    """Bottom-up rewrite; ``fn`` returns a replacement or ``None`` to keep."""
    kids = children(node)
    if kids:
        new = tuple(transform(k, fn) for k in kids)
        if any(a is not b for a, b in zip(new, kids)):
            node = rebuild(node, new)
    out = fn(node)
    return node if out is None else out


def variables(node: Node) -> set[str]:
    """Every variable name a tree mentions, in subscripts or as a value."""
    found: set[str] = set()

    def add(s):
        if isinstance(s, Sub) and s.var is not None:
            found.add(s.var)

    for n in walk(node):
        if isinstance(n, Name):
            found.add(n.name)
        elif isinstance(n, TableRef):
            for s in n.subs:
                add(s)
        elif isinstance(n, PatternRef):
            add(n.col)
            add(n.row)
        elif isinstance(n, PatternRange):
            for s in (n.col1, n.row1, n.col2, n.row2):
                add(s)
        elif isinstance(n, Affine):
            found.update(v for v, _ in n.terms)
    return found


# -- tokenizer ---------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
     (?P<ws>[ \t\r\n]+)
    |(?P<comment>\#[^\n]*)
    |(?P<str>"(?:[^"\n]|"")*")
    |(?P<qsheet>'(?:[^'\n]|'')*'!)
    |(?P<wsheet>[A-Za-z_][A-Za-z0-9_]*!)
    |(?P<num>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)
    |(?P<word>[A-Za-z_][A-Za-z0-9_]*)
    |(?P<op><>|<=|>=|[-+*/^&=<>(),:\[\]{}])
    """,
    re.VERBOSE,
)
_CELL_WORD = re.compile(r"([A-Za-z]+)([0-9]+)")
_LETTERS = re.compile(r"[A-Za-z]+")
_DIGITS = re.compile(r"[0-9]+")


@dataclass(frozen=True)
class Token:
    kind: str  # num, str, sheet, word, op, eof
    value: str
    line: int
    col: int


def tokenize(text: str, line: int = 1, col: int = 1, origin: str | None = None) -> list[Token]:
    """Split ``text`` into tokens; positions start at (``line``, ``col``)."""
    tokens: list[Token] = []
    i = 0
    cur_line, line_start = line, -(col - 1)
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        here_col = i - line_start + 1
        if m is None:
            ch = text[i]
            if ch == '"':
                msg = "unterminated string literal"
            elif ch == "'":
                rest = re.match(r"'(?:[^'\n]|'')*'", text[i:])
                msg = "expected '!' after quoted sheet name" if rest else "unterminated quoted sheet name"
            else:
                msg = f"unexpected character {ch!r}"
            raise ParseError(msg, cur_line, here_col, origin)
        kind = m.lastgroup
        val = m.group()
        if kind == "qsheet":
            name = val[1:-2].replace("''", "'")
            if not name or name != name.strip():
                raise ParseError(f"bad sheet name {name!r}", cur_line, here_col, origin)
            tokens.append(Token("sheet", name, cur_line, here_col))
        elif kind == "wsheet":
            tokens.append(Token("sheet", val[:-1], cur_line, here_col))
        elif kind == "str":
            tokens.append(Token("str", val[1:-1].replace('""', '"'), cur_line, here_col))
        elif kind in ("num", "word", "op"):
            tokens.append(Token(kind, val, cur_line, here_col))
        nl = val.count("\n")
        if nl:
            cur_line += nl
            line_start = i + val.rindex("\n") + 1
        i = m.end()
    tokens.append(Token("eof", "", cur_line, len(text) - line_start + 1))
    return tokens


# -- parser ------------------------------------------------------------------

class Parser:
    """Recursive-descent parser over a token list.

    ``mode`` selects the dialect; see the module docstring.
    """

    def __init__(
        self,
        tokens: list[Token],
        mode: str = "cells",
        default_sheet: str | None = None,
        origin: str | None = None,
    ) -> None:
        if mode not in ("cells", "runs", "dsl"):
            raise ValueError(mode)
        self.toks = tokens
        self.i = 0
        self.mode = mode
        self.default_sheet = default_sheet
        self.origin = origin

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def advance(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def at_op(self, *ops: str) -> bool:
        return self.tok.kind == "op" and self.tok.value in ops

    def at_word(self, *words: str) -> bool:
        return self.tok.kind == "word" and self.tok.value in words

    def error(self, msg: str, tok: Token | None = None) -> ParseError:
        t = tok or self.tok
        return ParseError(msg, t.line, t.col, self.origin)

    def expect_op(self, op: str) -> Token:
        if not self.at_op(op):
            raise self.error(f"expected {op!r}, found {self.describe(self.tok)}")
        return self.advance()

    def expect_word(self, what: str = "a name") -> Token:
        if self.tok.kind != "word":
            raise self.error(f"expected {what}, found {self.describe(self.tok)}")
        return self.advance()

    def expect_end(self) -> None:
        if self.tok.kind != "eof":
            if self.at_op(")"):
                raise self.error("unbalanced ')'")
            raise self.error(f"unexpected {self.describe(self.tok)}")

    @staticmethod
    def describe(t: Token) -> str:
        if t.kind == "eof":
            return "end of input"
        if t.kind == "str":
            return "string literal"
        if t.kind == "sheet":
            return f"sheet prefix {t.value!r}"
        return repr(t.value)

    def int_literal(self, allow_sign: bool = True) -> int:
        neg = False
        if allow_sign and self.at_op("-"):
            self.advance()
            neg = True
        t = self.tok
        if t.kind != "num" or not _DIGITS.fullmatch(t.value):
            raise self.error(f"expected an integer, found {self.describe(t)}")
        self.advance()
        return -int(t.value) if neg else int(t.value)

    # expressions
    def parse_expression(self) -> Node:
        left = self.concat()
        if self.at_op(*COMPARISONS):
            t = self.advance()
            right = self.concat()
            left = Binary(t.value, left, right, pos=(t.line, t.col))
            if self.at_op(*COMPARISONS):
                raise self.error("comparison operators cannot be chained; add parentheses")
        return left

    def _left_assoc(self, ops, sub):
        left = sub()
        while self.at_op(*ops):
            t = self.advance()
            right = sub()
            left = Binary(t.value, left, right, pos=(t.line, t.col))
        return left

    def concat(self) -> Node:
        return self._left_assoc(("&",), self.additive)

    def additive(self) -> Node:
        return self._left_assoc(("+", "-"), self.term)

    def term(self) -> Node:
        return self._left_assoc(("*", "/"), self.unary)

    def unary(self) -> Node:
        if self.at_op("-"):
            t = self.advance()
            nxt = self.peek(1)
            if self.tok.kind == "num" and not (nxt.kind == "op" and nxt.value == "^"):
                num = self.number()
                return Number(-num.value, pos=(t.line, t.col))
            return Unary("-", self.unary(), pos=(t.line, t.col))
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.at_op("^"):
            t = self.advance()
            return Binary("^", base, self.unary(), pos=(t.line, t.col))
        return base

    def number(self) -> Number:
        t = self.advance()
        try:
            value = Decimal(t.value)
        except InvalidOperation:  # pragma: no cover - regex guarantees syntax
            raise self.error(f"bad number {t.value!r}", t)
        if abs(value.adjusted()) > _MAX_EXPONENT:
            raise self.error(f"number {t.value!r} out of range", t)
        return Number(value, pos=(t.line, t.col))

    def atom(self) -> Node:
        t = self.tok
        pos = (t.line, t.col)
        if t.kind == "num":
            return self.number()
        if t.kind == "str":
            self.advance()
            return String(t.value, pos=pos)
        if t.kind == "sheet":
            self.advance()
            return self.sheet_ref(t.value, pos)
        if self.at_op("("):
            self.advance()
            inner = self.parse_expression()
            if not self.at_op(")"):
                raise self.error(f"unbalanced '(': expected ')', found {self.describe(self.tok)}")
            self.advance()
            return inner
        if self.at_op("{") and self.mode == "runs":
            return self.affine()
        if self.at_op("[") and self.mode == "runs":
            return self.sheet_ref(self.need_default_sheet(t), pos)
        if t.kind == "word":
            return self.word_atom()
        raise self.error(f"expected an expression, found {self.describe(t)}")

    def need_default_sheet(self, t: Token) -> str:
        if self.default_sheet is None:
            raise self.error("reference needs a sheet name", t)
        return self.default_sheet

    def word_atom(self) -> Node:
        t = self.advance()
        pos = (t.line, t.col)
        if self.at_op("("):
            return self.call(t.value.upper(), pos)
        if self.mode == "dsl":
            if self.at_op("["):
                return TableRef(t.value, self.subscript_list(), pos=pos)
            return Name(t.value, pos=pos)
        # cells / runs: a bare word must be a cell reference
        self.i -= 1
        return self.sheet_ref(self.need_default_sheet(t), pos)

    def call(self, name: str, pos: Pos) -> Call:
        self.expect_op("(")
        args: list[Node] = []
        if not self.at_op(")"):
            args.append(self.parse_expression())
            while self.at_op(","):
                self.advance()
                args.append(self.parse_expression())
        if not self.at_op(")"):
            raise self.error(f"unbalanced '(': expected ')' or ',', found {self.describe(self.tok)}")
        self.advance()
        return Call(name, tuple(args), pos=pos)

    def subscript_list(self) -> tuple[Sub, ...]:
        self.expect_op("[")
        subs = [self.subscript()]
        while self.at_op(","):
            self.advance()
            subs.append(self.subscript())
        self.expect_op("]")
        return tuple(subs)

    def subscript(self, require_var: bool = False) -> Sub:
        if self.tok.kind == "word":
            var = self.advance().value
            offset = 0
            if self.at_op("+", "-"):
                sign = 1 if self.advance().value == "+" else -1
                offset = sign * self.int_literal(allow_sign=False)
            if self.at_op("*", "/"):
                raise self.error("only var+k and var-k subscripts are supported (no strides)")
            return Sub(var, offset)
        if require_var:
            raise self.error(f"expected a variable subscript, found {self.describe(self.tok)}")
        return Sub(None, self.int_literal())

    # references
    def ref_parts(self, *, lhs: bool = False):
        """Column part then row part, for the text after ``Sheet!``.

        Returns ``(col, row)`` where each is an int, a ``Sub``, or (only when
        ``lhs``) a bracket descriptor tuple from :meth:`lhs_group`.
        """
        patterns = self.mode in ("runs", "dsl") or lhs
        t = self.tok
        if t.kind == "word":
            m = _CELL_WORD.fullmatch(t.value)
            if m:
                self.advance()
                return col_to_index(m.group(1).upper()), self._row_number(m.group(2), t)
            if patterns and _LETTERS.fullmatch(t.value) and self.peek().kind == "op" and self.peek().value == "[":
                self.advance()
                col = col_to_index(t.value.upper())
                return col, self.row_part(lhs)
            raise self.error(f"expected a cell address, found {self.describe(t)}")
        if patterns and self.at_op("["):
            col = self.lhs_group("col") if lhs else self.bracket_sub()
            return col, self.row_part(lhs)
        raise self.error(f"expected a cell address, found {self.describe(t)}")

    def _row_number(self, digits: str, t: Token) -> int:
        row = int(digits)
        if row < 1:
            raise self.error("row numbers start at 1", t)
        return row

    def row_part(self, lhs: bool):
        t = self.tok
        if self.at_op("["):
            return self.lhs_group("row") if lhs else self.bracket_sub()
        if t.kind == "num" and _DIGITS.fullmatch(t.value):
            self.advance()
            return self._row_number(t.value, t)
        raise self.error(f"expected a row number or '[', found {self.describe(t)}")

    def bracket_sub(self) -> Sub:
        self.expect_op("[")
        s = self.subscript(require_var=True)
        if not self.at_op("]"):
            raise self.error(f"expected ']', found {self.describe(self.tok)}")
        self.advance()
        return s

    def lhs_group(self, axis: str):
        """``[V in lo:hi]`` or ``[lo:hi]`` on a run-listing left-hand side."""
        self.expect_op("[")
        var = None
        if self.tok.kind == "word" and self.peek().kind == "word" and self.peek().value == "in":
            var = self.advance().value
            self.advance()
        lo = self._axis_value(axis)
        self.expect_op(":")
        hi = self._axis_value(axis)
        if self.at_op(":"):
            raise self.error("stride in run binders is not supported")
        if not self.at_op("]"):
            raise self.error(f"expected ']', found {self.describe(self.tok)}")
        self.advance()
        if lo > hi:
            raise self.error(f"empty range {lo}:{hi} in run binder")
        return ("binder", var, lo, hi) if var is not None else ("span", None, lo, hi)

    def _axis_value(self, axis: str) -> int:
        t = self.tok
        if axis == "col":
            if t.kind == "word" and _LETTERS.fullmatch(t.value):
                self.advance()
                return col_to_index(t.value.upper())
            raise self.error(f"expected column letters, found {self.describe(t)}")
        value = self.int_literal(allow_sign=False)
        if value < 1:
            raise self.error("row numbers start at 1", t)
        return value

    def sheet_ref(self, sheet: str, pos: Pos) -> Node:
        col, row = self.ref_parts()
        if self.at_op(":"):
            self.advance()
            if self.tok.kind == "sheet":
                other = self.advance()
                if other.value != sheet:
                    raise self.error("range corners must be on the same sheet", other)
            col2, row2 = self.ref_parts()
            try:
                return make_range(sheet, col, row, col2, row2, pos=pos)
            except ValueError as exc:
                raise self.error(str(exc))
        return make_ref(sheet, col, row, pos=pos)

    def affine(self) -> Affine:
        start = self.expect_op("{")
        const = Decimal(0)
        terms: dict[str, int] = {}
        sign = 1
        if self.at_op("-"):
            self.advance()
            sign = -1
        while True:
            t = self.tok
            if t.kind == "num":
                num = self.number().value
                if self.at_op("*"):
                    self.advance()
                    var = self.expect_word("a variable").value
                    if num != num.to_integral_value():
                        raise self.error("coefficients must be integers", t)
                    terms[var] = terms.get(var, 0) + sign * int(num)
                else:
                    const += sign * num
            elif t.kind == "word":
                var = self.advance().value
                terms[var] = terms.get(var, 0) + sign
            else:
                raise self.error(f"expected a number or variable, found {self.describe(t)}")
            if self.at_op("+", "-"):
                sign = 1 if self.advance().value == "+" else -1
                continue
            break
        if not self.at_op("}"):
            raise self.error(f"expected '}}', found {self.describe(self.tok)}")
        self.advance()
        return Affine(const, tuple((v, k) for v, k in terms.items() if k), pos=(start.line, start.col))


def parse_formula(
    text: str,
    default_sheet: str | None = None,
    *,
    mode: str = "cells",
    origin: str | None = None,
    line: int = 1,
    col: int = 1,
) -> Node:
    """Parse one formula. Unqualified references land on ``default_sheet``.

    A leading ``=`` (as typed into a spreadsheet) is not accepted; the
    workbook format puts it between address and formula.
    """
    p = Parser(tokenize(text, line, col, origin), mode, default_sheet, origin)
    if p.tok.kind == "eof":
        raise p.error("empty formula")
    node = p.parse_expression()
    p.expect_end()
    return node


# -- printer -----------------------------------------------------------------

_CMP, _CONCAT, _ADD, _MUL, _UNARY, _POW, _ATOM = range(1, 8)
_LEVEL = {"&": _CONCAT, "+": _ADD, "-": _ADD, "*": _MUL, "/": _MUL, "^": _POW}
_LEVEL.update({op: _CMP for op in COMPARISONS})


def format_number(value: Decimal) -> str:
    if value == 0:
        return "0"
    return format(value.normalize(), "f")


def _level(node: Node) -> int:
    if isinstance(node, Binary):
        return _LEVEL[node.op]
    if isinstance(node, Unary):
        return _UNARY
    if isinstance(node, Number) and node.value < 0:
        return _UNARY
    return _ATOM


def _ref_text(sheet, col, row, context_sheet) -> str:
    prefix = "" if sheet == context_sheet else quote_sheet(sheet) + "!"
    return prefix + _corner(col, row)


def _corner(col, row) -> str:
    c = index_to_col(col) if isinstance(col, int) else f"[{col}]"
    r = str(row) if isinstance(row, int) else f"[{row}]"
    return c + r


def format_affine(a: Affine) -> str:
    parts: list[str] = []
    for var, k in a.terms:
        mag = abs(k)
        body = var if mag == 1 else f"{mag}*{var}"
        if not parts:
            parts.append(("-" if k < 0 else "") + body)
        else:
            parts.append(("- " if k < 0 else "+ ") + body)
    if a.const != 0 or not parts:
        if not parts:
            parts.append(format_number(a.const))
        else:
            parts.append(("- " if a.const < 0 else "+ ") + format_number(abs(a.const)))
    return "{" + " ".join(parts) + "}"


def serialize_formula(node: Node, context_sheet: str | None = None) -> str:
    """Canonical text for a tree.

    References are fully qualified unless ``context_sheet`` is given, in
    which case references on that sheet drop their prefix.
    """
    return _fmt(node, context_sheet)


def _wrap(node: Node, ctx, min_level: int) -> str:
    text = _fmt(node, ctx)
    if _level(node) < min_level:
        return "(" + text + ")"
    return text


def _fmt(node: Node, ctx: str | None) -> str:
    if isinstance(node, Number):
        return format_number(node.value)
    if isinstance(node, String):
        return '"' + node.value.replace('"', '""') + '"'
    if isinstance(node, CellRef):
        a = node.addr
        return _ref_text(a.sheet, a.col, a.row, ctx)
    if isinstance(node, RangeRef):
        return _ref_text(node.sheet, node.start.col, node.start.row, ctx) + ":" + node.end.a1
    if isinstance(node, PatternRef):
        return _ref_text(node.sheet, node.col, node.row, ctx)
    if isinstance(node, PatternRange):
        return _ref_text(node.sheet, node.col1, node.row1, ctx) + ":" + _corner(node.col2, node.row2)
    if isinstance(node, Affine):
        return format_affine(node)
    if isinstance(node, Name):
        return node.name
    if isinstance(node, TableRef):
        return node.table + "[" + ", ".join(str(s) for s in node.subs) + "]"
    if isinstance(node, Call):
        return node.name + "(" + ", ".join(_fmt(a, ctx) for a in node.args) + ")"
    if isinstance(node, Unary):
        operand = node.operand
        if isinstance(operand, Number) and operand.value >= 0:
            return "-(" + _fmt(operand, ctx) + ")"
        return "-" + _wrap(operand, ctx, _UNARY)
    if isinstance(node, Binary):
        lvl = _LEVEL[node.op]
        if node.op == "^":
            left = _wrap(node.left, ctx, _ATOM)
            right = _wrap(node.right, ctx, _UNARY)
        elif lvl == _CMP:
            left = _wrap(node.left, ctx, lvl + 1)
            right = _wrap(node.right, ctx, lvl + 1)
        else:
            left = _wrap(node.left, ctx, lvl)
            right = _wrap(node.right, ctx, lvl + 1)
        return f"{left} {node.op} {right}"
    raise TypeError(f"not a formula node: {node!r}")
