"""Literate files: prose with code lines indented by at least two spaces.

``tangle`` pulls the code out (dropping the two-space indent), ``weave``
renders the whole file as HTML with code set off in shaded boxes.
Prose uses a small wiki markup, see :func:`render_markup`.
"""

from __future__ import annotations

import html
import re
from dataclasses import dataclass
from typing import Callable, Optional, Union
from urllib.parse import quote

INDENT = "  "


@dataclass(frozen=True)
class Prose:
    text: str
    first_line: int = 1


@dataclass(frozen=True)
class Code:
    text: str  # indent removed, one "\n" per line
    first_line: int = 1


Segment = Union[Prose, Code]


@dataclass(frozen=True)
class LiterateFile:
    segments: tuple[Segment, ...]

    @property
    def code(self) -> tuple[Code, ...]:
        return tuple(s for s in self.segments if isinstance(s, Code))

    @property
    def prose_text(self) -> str:
        return "".join(s.text for s in self.segments if isinstance(s, Prose))


def _lines(text: str) -> list[str]:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return [ln.rstrip("\r") for ln in lines]


def classify(lines: list[str]) -> list[bool]:
    """True for code lines.

    Indented lines are code. A blank line is code only when the nearest
    non-blank lines on both sides are code, so blocks stay contiguous.
    """
    kind: list[Optional[bool]] = [
        True if ln.startswith(INDENT) else (None if not ln.strip() else False) for ln in lines
    ]
    out = []
    for i, k in enumerate(kind):
        if k is not None:
            out.append(k)
            continue
        before = next((kind[j] for j in range(i - 1, -1, -1) if kind[j] is not None), False)
        after = next((kind[j] for j in range(i + 1, len(kind)) if kind[j] is not None), False)
        out.append(bool(before and after))
    return out


def parse_literate(text: str) -> LiterateFile:
    lines = _lines(text)
    flags = classify(lines)
    segments: list[Segment] = []
    i = 0
    while i < len(lines):
        j = i
        while j < len(lines) and flags[j] == flags[i]:
            j += 1
        chunk = lines[i:j]
        if flags[i]:
            segments.append(Code("".join(ln[len(INDENT):] + "\n" for ln in chunk), i + 1))
        else:
            segments.append(Prose("".join(ln + "\n" for ln in chunk), i + 1))
        i = j
    return LiterateFile(tuple(segments))


def tangle(text: str) -> str:
    return "".join(c.text for c in parse_literate(text).code)


def indent_code(code: str) -> str:
    """Inverse of tangle for a pure code file."""
    return "".join(INDENT + ln + "\n" for ln in _lines(code))


# -- markup ------------------------------------------------------------------

def page_key(name: str) -> str:
    """Canonical page name: single spaces, first letter upper case."""
    name = " ".join(name.replace("_", " ").split())
    return name[:1].upper() + name[1:]


def page_file(name: str) -> str:
    return quote(page_key(name).replace(" ", "_"), safe="") + ".html"


Resolver = Callable[[str], tuple[str, bool]]  # name -> (href, exists)


def default_resolver(name: str) -> tuple[str, bool]:
    return page_file(name), True


LINK = re.compile(r"\[\[(.+?)\]\]", re.S)
INLINE = re.compile(r"'''(.+?)'''|''(.+?)''|\[\[(.+?)\]\]", re.S)
HEADING = re.compile(r"^(={1,6})(?!=)\s*(.*?)\s*(?<!=)\1\s*$")
ASK = re.compile(r"<ask>(.*?)</ask>", re.S | re.I)
CATEGORY = "category:"
PLACEHOLDER = re.compile("^\x00(\\d+)\x00$")


@dataclass(frozen=True)
class Link:
    target: str
    prop: Optional[str] = None  # typed link property, casefolded
    label: Optional[str] = None
    category: bool = False


def parse_link(inner: str) -> Link:
    inner = " ".join(inner.split())
    if inner.lower().startswith(CATEGORY):
        return Link(page_key(inner[len(CATEGORY):]), category=True)
    label = None
    if "|" in inner:
        inner, label = (s.strip() for s in inner.split("|", 1))
    if "::" in inner:
        prop, target = inner.split("::", 1)
        return Link(page_key(target), " ".join(prop.split()).casefold(), label or target.strip())
    return Link(page_key(inner), None, label or inner)


def render_inline(text: str, resolve: Resolver = default_resolver) -> str:
    out = []
    pos = 0
    for m in INLINE.finditer(text):
        out.append(html.escape(text[pos:m.start()], quote=False))
        pos = m.end()
        if m.group(1) is not None:
            out.append(f"<b>{render_inline(m.group(1), resolve)}</b>")
        elif m.group(2) is not None:
            out.append(f"<i>{render_inline(m.group(2), resolve)}</i>")
        else:
            link = parse_link(m.group(3))
            if link.category or not link.target:
                if not link.target:
                    out.append(html.escape(m.group(0), quote=False))
                continue
            href, exists = resolve(link.target)
            cls = "" if exists else ' class="missing"'
            out.append(
                f'<a href="{html.escape(href)}"{cls}>{html.escape(link.label, quote=False)}</a>'
            )
    out.append(html.escape(text[pos:], quote=False))
    return "".join(out)


AskHandler = Callable[[str], str]  # query text -> html block


def render_markup(
    text: str, resolve: Resolver = default_resolver, ask: Optional[AskHandler] = None
) -> str:
    """Wiki markup to an HTML fragment.

    Handles ``'''bold'''``, ``''italic''``, ``[[Page]]``, ``[[prop::Page]]``,
    ``= headings =``, ``*`` bullets and blank-line paragraphs. Category
    markers are dropped from the output. With an ``ask`` handler, each
    ``<ask>...</ask>`` block is replaced by the handler's HTML.
    """
    blocks: list[str] = []
    if ask is not None:
        def stash(m):
            blocks.append(ask(m.group(1)))
            return f"\n\x00{len(blocks) - 1}\x00\n"

        text = ASK.sub(stash, text)

    out: list[str] = []
    para: list[str] = []
    items: list[str] = []

    def flush():
        if para:
            body = render_inline("\n".join(para), resolve).strip()
            if body:
                out.append(f"<p>{body}</p>")
            para.clear()
        if items:
            out.append("<ul>\n" + "".join(f"<li>{i}</li>\n" for i in items) + "</ul>")
            items.clear()

    for line in text.split("\n"):
        stripped = line.strip()
        h = HEADING.match(stripped)
        slot = PLACEHOLDER.match(stripped) if blocks else None
        if slot and int(slot.group(1)) < len(blocks):
            flush()
            out.append(blocks[int(slot.group(1))])
        elif h and h.group(2):
            flush()
            n = len(h.group(1))
            out.append(f"<h{n}>{render_inline(h.group(2), resolve)}</h{n}>")
        elif stripped.startswith("*"):
            if para:
                flush()
            items.append(render_inline(stripped[1:].strip(), resolve))
        elif not stripped:
            flush()
        else:
            if items:
                flush()
            para.append(line)
    flush()
    return "\n".join(out) + ("\n" if out else "")


STYLE = """\
body { font-family: sans-serif; max-width: 50em; margin: 2em auto; }
pre.code { background: #e8f0fc; border: 1px solid #b8c8e8; margin-left: 2em; padding: 0.5em 1em; }
a.missing { color: #b00; }
div.error { background: #fdd; border: 1px solid #c66; padding: 0.3em 0.6em; }
"""


def html_page(title: str, body: str) -> str:
    return (
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n"
        f"<title>{html.escape(title)}</title>\n<style>\n{STYLE}</style>\n</head>\n<body>\n"
        f"<h1>{html.escape(title, quote=False)}</h1>\n{body}</body>\n</html>\n"
    )


def code_box(code: str) -> str:
    return f'<pre class="code">{html.escape(code, quote=False)}</pre>\n'


def weave_body(
    f: LiterateFile, resolve: Resolver = default_resolver, ask: Optional[AskHandler] = None
) -> str:
    parts = []
    for seg in f.segments:
        if isinstance(seg, Code):
            parts.append(code_box(seg.text))
        else:
            parts.append(render_markup(seg.text, resolve, ask))
    return "".join(parts)


def weave(f: LiterateFile | str, title: str = "") -> str:
    if isinstance(f, str):
        f = parse_literate(f)
    return html_page(title, weave_body(f))
