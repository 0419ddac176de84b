"""Streaming HTML rewriter: prefixing rules, containment, idempotence, and
byte equality between the pure-Python and compiled kernels."""

import random
import re
from html.parser import HTMLParser

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from portalgate.rewrite import (HtmlRewriter, RewriteContext, available_kernels,
                                charset_is_ascii_compatible, kernel_name,
                                rewrite_html, rewrite_location_header, should_rewrite)

PREFIX = "/fw2/node-1:8888"
CTX = RewriteContext(prefix=PREFIX, content_type="text/html")

KERNELS = list(available_kernels().items())


@pytest.fixture(params=[name for name, _ in KERNELS])
def kernel(request):
    return dict(KERNELS)[request.param]


# -- rewriting rules -----------------------------------------------------------


def test_root_relative_href_gets_prefix(kernel):
    out = rewrite_html(b'<a href="/tree">', CTX, kernel=kernel)
    assert out == b'<a href="/fw2/node-1:8888/tree">'


def test_relative_url_untouched(kernel):
    html = b'<a href="tree/x">'
    assert rewrite_html(html, CTX, kernel=kernel) == html


def test_already_prefixed_untouched(kernel):
    html = b'<img src="/fw2/node-1:8888/logo.png">'
    assert rewrite_html(html, CTX, kernel=kernel) == html


def test_protocol_relative_untouched(kernel):
    html = b'<script src="//cdn.example/x.js">'
    assert rewrite_html(html, CTX, kernel=kernel) == html


@pytest.mark.parametrize("html,expected", [
    (b'<form action="/post">', b'<form action="/fw2/node-1:8888/post">'),
    (b'<meta content="/m">', b'<meta content="/fw2/node-1:8888/m">'),
    (b'<a href=/unquoted>', b'<a href=/fw2/node-1:8888/unquoted>'),
    (b"<a href='/single'>", b"<a href='/fw2/node-1:8888/single'>"),
    (b'<a HREF="/caps">', b'<a HREF="/fw2/node-1:8888/caps">'),
    (b'<div style="background:url(/bg.png)">',
     b'<div style="background:url(/fw2/node-1:8888/bg.png)">'),
    (b'<div style="x:url( \'/q.png\' )">',
     b'<div style="x:url( \'/fw2/node-1:8888/q.png\' )">'),
    (b'<a href="#frag">', b'<a href="#frag">'),
    (b'<a href="https://example.org/x">', b'<a href="https://example.org/x">'),
    (b'<a data-href="/not-an-url-attr">', b'<a data-href="/not-an-url-attr">'),
    (b'<input value="/plain-value">', b'<input value="/plain-value">'),
])
def test_attribute_rules(kernel, html, expected):
    assert rewrite_html(html, CTX, kernel=kernel) == expected


def test_script_content_not_rewritten(kernel):
    html = b'<script>fetch("/api/x"); var s = \'<a href="/y">\';</script><a href="/real">'
    out = rewrite_html(html, CTX, kernel=kernel)
    assert b'fetch("/api/x")' in out
    assert b'<a href="/y">' in out
    assert out.endswith(b'<a href="/fw2/node-1:8888/real">')


def test_style_element_content_not_rewritten(kernel):
    html = b'<style>.a{background:url(/elem.css.png)}</style><img src="/after.png">'
    out = rewrite_html(html, CTX, kernel=kernel)
    assert b"url(/elem.css.png)" in out
    assert b'src="/fw2/node-1:8888/after.png"' in out


def test_malformed_html_passes_through(kernel):
    for junk in (b"<", b"<a", b"text < other > text", b"\x00\xff<>\xfe", b"<a href="):
        out = rewrite_html(junk, CTX, kernel=kernel)
        assert junk.replace(b"", b"") is not None  # no exception is the contract
    assert rewrite_html(b"< no tag", CTX, kernel=kernel) == b"< no tag"


def test_streaming_matches_whole_buffer(kernel):
    html = (b'<a href="/one">' + b"x" * 1000 + b'<div style="a:url(/two)">'
            + b'<script>"/three"</script>' * 50 + b'<a href="/four">')
    rng = random.Random(7)
    for _ in range(25):
        rewriter = HtmlRewriter(PREFIX, kernel=kernel)
        out = b""
        i = 0
        while i < len(html):
            step = rng.randint(1, 37)
            out += rewriter.feed(html[i:i + step])
            i += step
        out += rewriter.flush()
        assert out == rewrite_html(html, CTX, kernel=kernel)


def test_oversized_tag_passes_through_unrewritten(kernel):
    blob = b"<fake " + b"y" * (70 * 1024)  # never closes; longer than the carry cap
    rewriter = HtmlRewriter(PREFIX, kernel=kernel)
    out = rewriter.feed(blob) + rewriter.flush()
    assert out == blob


# -- content-type gate ------------------------------------------------------------


def test_should_rewrite_html_with_params():
    assert should_rewrite("text/html; charset=utf-8")
    assert should_rewrite("TEXT/HTML")
    assert not should_rewrite("application/octet-stream")
    assert not should_rewrite("text/plain")
    assert not should_rewrite("application/xhtml+xml")


def test_charset_gate():
    assert charset_is_ascii_compatible("text/html")
    assert charset_is_ascii_compatible("text/html; charset=utf-8")
    assert charset_is_ascii_compatible("text/html; charset=ISO-8859-1")
    assert not charset_is_ascii_compatible("text/html; charset=utf-16")
    assert not charset_is_ascii_compatible("text/html; charset=UTF-16LE")


# -- location header ------------------------------------------------------------


def test_location_root_relative():
    assert rewrite_location_header("/login", PREFIX, "node-1:8888") == \
        "/fw2/node-1:8888/login"


def test_location_backend_absolute():
    assert rewrite_location_header("http://node-1:8888/lab", PREFIX, "node-1:8888") == \
        "/fw2/node-1:8888/lab"
    assert rewrite_location_header("http://node-1:8888/a?b=c", PREFIX, "node-1:8888") == \
        "/fw2/node-1:8888/a?b=c"


def test_location_foreign_untouched():
    assert rewrite_location_header("https://example.org/", PREFIX, "node-1:8888") == \
        "https://example.org/"
    assert rewrite_location_header("http://other:1/x", PREFIX, "node-1:8888") == \
        "http://other:1/x"


def test_location_already_prefixed_untouched():
    value = "/fw2/node-1:8888/lab"
    assert rewrite_location_header(value, PREFIX, "node-1:8888") == value


# -- corpus generation + independent containment oracle ------------------------------


_URL_POOL = [
    "/plain", "/a/b/c.png", "/x?q=1&r=2", "relative/path", "../up", "#fragment",
    "https://example.org/abs", "http://example.org:8080/abs", "//cdn.example/lib.js",
    PREFIX + "/already", "/", "mailto:x@example.org", "/trailing/", "/with%20escape",
]
_TAGS = ["a", "img", "form", "link", "script", "div", "meta", "area", "input"]
_ATTRS = ["href", "src", "action", "content", "id", "class", "data-x", "value"]


def generate_document(rng: random.Random) -> bytes:
    parts = ["<!DOCTYPE html><html><body>"]
    for _ in range(rng.randint(1, 40)):
        kind = rng.random()
        if kind < 0.15:
            parts.append(rng.choice(["plain text ", "spaced > gt ", "5 < 7 ", "\n\t"]))
            continue
        if kind < 0.25:
            inner = rng.choice(_URL_POOL)
            parts.append(f'<script>var u = "{inner}";</script>')
            continue
        if kind < 0.3:
            parts.append(f"<style>.x {{ background: url({rng.choice(_URL_POOL)}) }}</style>")
            continue
        tag = rng.choice(_TAGS)
        attrs = []
        for _ in range(rng.randint(0, 4)):
            name = rng.choice(_ATTRS)
            value = rng.choice(_URL_POOL)
            quote = rng.choice(['"', '"', "'", ""])
            if quote:
                attrs.append(f"{name}={quote}{value}{quote}")
            else:
                attrs.append(f"{name}={value}")
        if rng.random() < 0.2:
            attrs.append(f'style="border:0; background:url({rng.choice(_URL_POOL)})"')
        spacer = rng.choice([" ", "  ", "\n"])
        parts.append(f"<{tag}{spacer}{' '.join(attrs)}>")
        if tag in ("script", "style"):
            parts.append(f"</{tag}>")
    parts.append("</body></html>")
    return "".join(parts).encode()


_CSS_URL_RE = re.compile(r"url\(\s*(['\"]?)(.*?)\1\s*\)", re.IGNORECASE)


class _UrlCollector(HTMLParser):
    """Independent extraction of rewritable URL positions from a document."""

    def __init__(self):
        super().__init__(convert_charrefs=False)
        self.urls: list[str] = []

    def handle_starttag(self, tag, attrs):
        for name, value in attrs:
            if value is None:
                continue
            if name in ("href", "src", "action", "content"):
                self.urls.append(value)
            elif name == "style":
                for match in _CSS_URL_RE.finditer(value):
                    self.urls.append(match.group(2))


def collect_rewritable_urls(html: bytes) -> list[str]:
    parser = _UrlCollector()
    parser.feed(html.decode("utf-8", "replace"))
    return parser.urls


def _is_root_relative(url: str) -> bool:
    return url.startswith("/") and not url.startswith("//")


@pytest.mark.parametrize("seed", range(200))
def test_corpus_containment_and_idempotence(seed):
    """Generated corpus: every root-relative URL in the output carries the
    prefix, and a second rewrite is a no-op. Both kernels, byte-equal."""
    rng = random.Random(seed)
    document = generate_document(rng)
    outputs = {}
    for name, kern in KERNELS:
        out = rewrite_html(document, CTX, kernel=kern)
        outputs[name] = out
        for url in collect_rewritable_urls(out):
            if _is_root_relative(url):
                assert url == PREFIX or url.startswith(PREFIX + "/"), (url, seed)
        assert rewrite_html(out, CTX, kernel=kern) == out, f"not idempotent (seed {seed})"
    assert len(set(outputs.values())) == 1, f"kernel divergence (seed {seed})"


@settings(max_examples=300, deadline=None)
@given(st.binary(max_size=600))
def test_kernels_agree_on_arbitrary_bytes(data):
    results = set()
    for _, kern in KERNELS:
        results.add(rewrite_html(data, CTX, kernel=kern))
    assert len(results) == 1


@settings(max_examples=150, deadline=None)
@given(st.binary(max_size=400))
def test_idempotence_on_arbitrary_bytes(data):
    for _, kern in KERNELS:
        once = rewrite_html(data, CTX, kernel=kern)
        assert rewrite_html(once, CTX, kernel=kern) == once


def test_compiled_kernel_is_present_and_selected():
    names = dict(KERNELS)
    assert "python" in names
    assert "compiled" in names, "compiled kernel should build in this environment"
    assert kernel_name() in names
