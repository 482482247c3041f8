"""Static documentation site from ``.wiki`` and ``.lit`` pages.

Links between pages double as facts: ``[[has module::Core]]`` on page
``ModelA`` records the triple (ModelA, has module, Core), and a plain
``[[Core]]`` records an untyped link. The build runs in two passes: harvest
facts from every page, then render each page with backlinks and inline
``<ask>`` query results.
"""

from __future__ import annotations

import html
import os
import shutil
import tempfile
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from urllib.parse import quote

from sheetkit.errors import DocsetError
from sheetkit.literate import (
    ASK,
    LINK,
    LiterateFile,
    html_page,
    page_file,
    page_key,
    parse_link,
    parse_literate,
    render_markup,
    weave_body,
)

PAGE_SUFFIXES = (".wiki", ".lit")


@dataclass(frozen=True)
class Page:
    name: str
    body: str  # markup text; for literate pages, the prose only
    literate: LiterateFile | None = None
    source: str | None = None

    @property
    def key(self) -> str:
        return page_key(self.name)

    @property
    def categories(self) -> frozenset[str]:
        return frozenset(
            link.target
            for link in map(parse_link, LINK.findall(strip_queries(self.body)))
            if link.category
        )


def make_page(name: str, text: str, literate: bool = False, source: str | None = None) -> Page:
    if literate:
        lf = parse_literate(text)
        return Page(name, lf.prose_text, lf, source)
    return Page(name, text, None, source)


def strip_queries(text: str) -> str:
    return ASK.sub("", text)


@dataclass
class FactBase:
    pages: set[str] = field(default_factory=set)
    triples: set[tuple[str, str, str]] = field(default_factory=set)
    links: set[tuple[str, str]] = field(default_factory=set)
    categories: dict[str, set[str]] = field(default_factory=lambda: defaultdict(set))

    def linked_from(self, target: str) -> list[str]:
        """Pages whose body links to ``target``, typed or untyped."""
        sources = {a for a, b in self.links if b == target}
        sources |= {s for s, _, o in self.triples if o == target}
        return sorted(sources)

    def members(self, category: str) -> list[str]:
        return sorted(p for p, cats in self.categories.items() if category in cats)


def harvest_facts(pages: list[Page]) -> FactBase:
    fb = FactBase()
    seen: dict[str, Page] = {}
    for p in pages:
        if p.key in seen:
            other = seen[p.key]
            raise DocsetError(
                f"duplicate page name {p.key!r} ({other.source or other.name} and {p.source or p.name})"
            )
        seen[p.key] = p
        fb.pages.add(p.key)
        for inner in LINK.findall(strip_queries(p.body)):
            link = parse_link(inner)
            if not link.target:
                continue
            if link.category:
                fb.categories[p.key].add(link.target)
            elif link.prop is not None:
                fb.triples.add((p.key, link.prop, link.target))
            else:
                fb.links.add((p.key, link.target))
    return fb


# -- queries -----------------------------------------------------------------

class QueryError(DocsetError):
    pass


@dataclass(frozen=True)
class Query:
    properties: tuple[tuple[str, str], ...] = ()
    categories: tuple[str, ...] = ()


def parse_query(text: str, pagename: str) -> Query:
    """Conjunction of ``[[prop::value]]`` and ``[[Category:X]]`` patterns."""
    text = text.replace("{{PAGENAME}}", pagename)
    leftover = LINK.sub("", text).strip()
    if leftover:
        raise QueryError(f"unsupported query text {leftover!r}")
    props, cats = [], []
    for inner in LINK.findall(text):
        link = parse_link(inner)
        if link.category and link.target:
            cats.append(link.target)
        elif link.prop and link.target and "|" not in inner:
            props.append((link.prop, link.target))
        else:
            raise QueryError(f"unsupported query pattern [[{inner}]]")
    if not props and not cats:
        raise QueryError("empty query")
    return Query(tuple(props), tuple(cats))


def answer_query(q: Query, fb: FactBase) -> list[str]:
    return sorted(
        p for p in fb.pages
        if all((p, prop, v) in fb.triples for prop, v in q.properties)
        and all(c in fb.categories.get(p, ()) for c in q.categories)
    )


# -- rendering ---------------------------------------------------------------

def _link(href: str, text: str, exists: bool = True) -> str:
    cls = "" if exists else ' class="missing"'
    return f'<a href="{html.escape(href)}"{cls}>{html.escape(text, quote=False)}</a>'


def category_file(name: str) -> str:
    return "categories/" + quote(page_key(name).replace(" ", "_"), safe="") + ".html"


def _link_list(names: list[str], fb: FactBase, prefix: str = "", css: str = "") -> str:
    if not names:
        return "<p>(none)</p>\n"
    cls = f' class="{css}"' if css else ""
    items = "".join(
        f"<li>{_link(prefix + page_file(n), n, n in fb.pages)}</li>\n" for n in names
    )
    return f"<ul{cls}>\n{items}</ul>\n"


def render_page(page: Page, fb: FactBase) -> str:
    def resolve(name: str):
        key = page_key(name)
        return page_file(key), key in fb.pages

    def ask(query_text: str) -> str:
        try:
            q = parse_query(query_text, page.key)
        except QueryError as exc:
            return f'<div class="error">query error: {html.escape(exc.message, quote=False)}</div>'
        return _link_list(answer_query(q, fb), fb, css="ask").rstrip("\n")

    if page.literate is not None:
        body = weave_body(page.literate, resolve, ask)
    else:
        body = render_markup(page.body, resolve, ask)
    cats = sorted(fb.categories.get(page.key, ()))
    if cats:
        body += "<p class=\"categories\">Categories: " + ", ".join(
            _link(category_file(c), c) for c in cats
        ) + "</p>\n"
    body += '<h2 class="backlinks">Pages that link here</h2>\n'
    body += _link_list(fb.linked_from(page.key), fb, css="backlinks")
    return html_page(page.key, body)


def render_category(name: str, fb: FactBase) -> str:
    return html_page(f"Category: {name}", _link_list(fb.members(name), fb, prefix="../"))


def render_index(fb: FactBase) -> str:
    cats = sorted({c for cs in fb.categories.values() for c in cs})
    body = "<h2>Pages</h2>\n" + _link_list(sorted(fb.pages), fb)
    body += "<h2>Categories</h2>\n"
    if cats:
        body += "<ul>\n" + "".join(
            f"<li>{_link(category_file(c), c)} ({len(fb.members(c))})</li>\n" for c in cats
        ) + "</ul>\n"
    else:
        body += "<p>(none)</p>\n"
    return html_page("Index", body)


def load_pages(src: str | Path) -> list[Page]:
    src = Path(src)
    if not src.is_dir():
        raise DocsetError(f"{src}: not a directory")
    pages = []
    for path in sorted(src.iterdir()):
        if path.suffix not in PAGE_SUFFIXES or not path.is_file():
            continue
        name = path.stem.replace("_", " ")
        pages.append(make_page(name, path.read_text(encoding="utf-8"), path.suffix == ".lit", str(path)))
    return pages


def render_site(pages: list[Page]) -> dict[str, str]:
    """Relative path -> HTML for every output file."""
    fb = harvest_facts(pages)
    for p in pages:
        if p.key.lower() == "index":
            raise DocsetError(f"page name {p.key!r} clashes with the generated index")
    files = {page_file(p.key): render_page(p, fb) for p in pages}
    for c in sorted({c for cs in fb.categories.values() for c in cs}):
        files[category_file(c)] = render_category(c, fb)
    files["index.html"] = render_index(fb)
    return files


def build_docset(src: str | Path, out: str | Path) -> dict[str, str]:
    """Render every page under ``src`` into ``out``, replacing it atomically."""
    files = render_site(load_pages(src))
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}.", dir=out.parent))
    try:
        for rel, text in sorted(files.items()):
            target = tmp / rel
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(text, encoding="utf-8")
        if out.exists():
            old = out.with_name(f".{out.name}.old")
            if old.exists():
                shutil.rmtree(old)
            os.replace(out, old)
            os.replace(tmp, out)
            shutil.rmtree(old)
        else:
            os.replace(tmp, out)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return files

