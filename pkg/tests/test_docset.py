import random
import re
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sheetkit.docset import (
    Page,
    answer_query,
    build_docset,
    harvest_facts,
    load_pages,
    make_page,
    parse_query,
    render_site,
)
from sheetkit.errors import DocsetError
from sheetkit.literate import LINK, page_file, parse_link
from sheetkit.randgen import random_pages


def list_items(html, css):
    m = re.search(rf'<ul class="{css}">\n(.*?)</ul>', html, re.S)
    return re.findall(r">([^<]+)</a></li>", m.group(1)) if m else []


def test_typed_link_gives_triple():
    fb = harvest_facts([Page("ModelA", "[[has module::Core]] and [[has module::Core]] again")])
    assert fb.triples == {("ModelA", "has module", "Core")}
    assert harvest_facts([Page("Quiet", "no links")]).triples == set()


def test_links_and_categories():
    fb = harvest_facts([Page("A", "[[B]] [[Category:Model]] [[Has Module::c]]")])
    assert fb.links == {("A", "B")}
    assert fb.triples == {("A", "has module", "C")}
    assert dict(fb.categories) == {"A": {"Model"}}


def test_ask_blocks_are_not_facts():
    fb = harvest_facts([Page("Core", "<ask> [[has module::{{PAGENAME}}]] </ask>")])
    assert fb.triples == set()


def test_duplicate_pages_rejected():
    with pytest.raises(DocsetError, match="duplicate"):
        harvest_facts([Page("core", ""), Page("Core", "")])


def _three_pages():
    return [
        Page("ModelA", "[[Category:Model]] [[has module::Core]]"),
        Page("ModelB", "[[has module::Core]]"),
        Page("Core", "[[Category:Module]]"),
    ]


def test_query_examples():
    fb = harvest_facts(_three_pages())
    assert answer_query(parse_query("[[has module::Core]]", "X"), fb) == ["ModelA", "ModelB"]
    assert answer_query(parse_query("[[has module::{{PAGENAME}}]]", "Core"), fb) == ["ModelA", "ModelB"]
    both = parse_query("[[Category:Model]] [[has module::Core]]", "X")
    assert answer_query(both, fb) == ["ModelA"]
    assert answer_query(parse_query("[[has module::Nothing]]", "X"), fb) == []


@pytest.mark.parametrize("bad", ["", "junk", "[[Core]]", "[[a::b|c]]", "[[has module::A]] or [[x::y]]"])
def test_unsupported_queries(bad):
    with pytest.raises(DocsetError):
        parse_query(bad, "P")


def test_query_results_render_and_errors_stay_inline():
    pages = _three_pages() + [Page("Q", "<ask>[[uses::Nope]]</ask>\n<ask>bad</ask>")]
    site = render_site(pages)
    q = site["Q.html"]
    assert "<p>(none)</p>" in q and '<div class="error">query error' in q


def test_model_and_module_pages(fixtures):
    site = render_site(load_pages(fixtures / "docs"))
    for module in ("Stocks", "Sales"):
        assert list_items(site[f"{module}.html"], "ask") == ["Housing model"]
    model = site["Housing_model.html"]
    assert '<a href="Stocks.html">Stocks</a>' in model and '<a href="Sales.html">Sales</a>' in model
    # a concept linked from both modules lists both as backlinks
    assert list_items(site["Net_additions.html"], "backlinks") == ["Sales", "Stocks"]
    assert list_items(site["categories/Module.html"].replace("<ul>", '<ul class="m">'), "m") == ["Sales", "Stocks"]
    assert 'class="code"' in site["Stocks.html"]


def test_missing_pages_are_styled():
    site = render_site([Page("A", "[[Nowhere]]")])
    assert '<a href="Nowhere.html" class="missing">Nowhere</a>' in site["A.html"]


def test_empty_directory(tmp_path):
    (tmp_path / "src").mkdir()
    files = build_docset(tmp_path / "src", tmp_path / "site")
    assert sorted(files) == ["index.html"]
    assert (tmp_path / "site" / "index.html").read_text().count("(none)") == 2


def test_duplicate_lit_and_wiki(tmp_path):
    (tmp_path / "Core.lit").write_text("x\n")
    (tmp_path / "Core.wiki").write_text("y\n")
    with pytest.raises(DocsetError, match="duplicate"):
        build_docset(tmp_path, tmp_path / "out")
    assert not (tmp_path / "out").exists()


def test_rebuild_is_byte_identical_and_replaces(tmp_path, fixtures):
    out = tmp_path / "site"
    first = build_docset(fixtures / "docs", out)
    (out / "stale.html").write_text("old")
    snapshot = {p.relative_to(out): p.read_bytes() for p in out.rglob("*.html")}
    second = build_docset(fixtures / "docs", out)
    assert first == second
    after = {p.relative_to(out): p.read_bytes() for p in out.rglob("*.html")}
    del snapshot[Path("stale.html")]
    assert after == snapshot


def test_literate_pages_take_facts_from_prose():
    p = make_page("Lit", "[[Category:Module]]\n  [[code::Ignored]]\n", literate=True)
    fb = harvest_facts([p])
    assert fb.triples == set() and dict(fb.categories) == {"Lit": {"Module"}}


# -- properties -----------------------------------------------------------------

@given(st.integers(0, 10**9))
def test_backlink_symmetry(seed):
    pages = random_pages(random.Random(seed))
    site = render_site(pages)
    links = {
        (p.key, parse_link(inner).target)
        for p in pages
        for inner in LINK.findall(re.sub(r"<ask>.*?</ask>", "", p.body, flags=re.S))
        if not parse_link(inner).category
    }
    for b in pages:
        shown = set(list_items(site[page_file(b.key)], "backlinks"))
        assert shown == {a for a, t in links if t == b.key}


@given(st.integers(0, 10**9), st.sampled_from(["has module", "uses", "defines"]))
def test_ask_matches_brute_force(seed, prop):
    pages = random_pages(random.Random(seed))
    fb = harvest_facts(pages)
    for target in [p.key for p in pages] + ["Ghost"]:
        got = answer_query(parse_query(f"[[{prop}::{target}]]", target), fb)
        want = sorted({s for s, pr, o in fb.triples if pr == prop and o == target})
        assert got == want
