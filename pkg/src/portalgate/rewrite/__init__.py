"""Streaming HTML rewriting so proxied pages link back through the gateway.

Root-relative URLs in href/src/action/content attributes (and url(...)
inside style attributes) get the forwarding prefix inserted; everything
else passes through byte-identical. The transform is streaming with bounded
lookahead: at most one tag (capped) is held back waiting for more input.

The byte scan is the hot loop of the data plane, so it exists twice: a
Cython extension (_kernel_c) and a pure-Python fallback (_kernel_py) with
identical semantics. The compiled kernel is picked at import when present;
set PORTALGATE_PURE=1 to force the fallback. `portalgate bench rewrite`
compares the two.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from urllib.parse import urlsplit

from . import _kernel_py

try:
    from . import _kernel_c  # type: ignore[attr-defined]
except ImportError:
    _kernel_c = None  # type: ignore[assignment]

if os.environ.get("PORTALGATE_PURE"):
    _kernel = _kernel_py
else:
    _kernel = _kernel_c if _kernel_c is not None else _kernel_py

log = logging.getLogger(__name__)

MAX_CARRY = 64 * 1024  # bounded lookahead: longest tag held back

REWRITABLE_TYPES = frozenset({"text/html"})

# charsets whose encoded documents are not ASCII supersets; those bodies
# pass through unrewritten
_NON_ASCII_COMPATIBLE_PREFIXES = ("utf-16", "utf-32", "ucs-2", "ucs-4")


def kernel_name() -> str:
    return _kernel.kernel_name()


def available_kernels() -> dict[str, object]:
    kernels: dict[str, object] = {"python": _kernel_py}
    if _kernel_c is not None:
        kernels["compiled"] = _kernel_c
    return kernels


def content_type_essence(content_type: str) -> str:
    return content_type.partition(";")[0].strip().lower()


def content_type_charset(content_type: str) -> str | None:
    for param in content_type.split(";")[1:]:
        key, _, value = param.strip().partition("=")
        if key.strip().lower() == "charset":
            return value.strip().strip('"').lower()
    return None


def should_rewrite(content_type: str) -> bool:
    """True iff the media type's essence is in the rewritable set."""
    return content_type_essence(content_type) in REWRITABLE_TYPES


def charset_is_ascii_compatible(content_type: str) -> bool:
    charset = content_type_charset(content_type)
    if charset is None:
        return True
    if charset.startswith(_NON_ASCII_COMPATIBLE_PREFIXES):
        log.warning("not rewriting body with non-ASCII-compatible charset %r", charset)
        return False
    return True


@dataclass(frozen=True)
class RewriteContext:
    prefix: str  # "/fw/<name>" or "/fw2/<node>:<port>", no trailing slash
    content_type: str

    def __post_init__(self):
        if not (self.prefix.startswith("/fw/") or self.prefix.startswith("/fw2/")):
            raise ValueError(f"prefix {self.prefix!r} is not a forwarding prefix")
        if self.prefix.endswith("/"):
            raise ValueError(f"prefix {self.prefix!r} must not end with a slash")


class HtmlRewriter:
    """Incremental rewriter; feed() chunks, then flush() once at the end."""

    def __init__(self, prefix: str, kernel=None, max_carry: int = MAX_CARRY):
        self._prefix = prefix.encode("ascii")
        self._kernel = kernel or _kernel
        self._max_carry = max_carry
        self._carry = b""
        self._state = _kernel_py.TEXT

    def feed(self, chunk: bytes) -> bytes:
        data = self._carry + chunk
        out, consumed, self._state = self._kernel.rewrite_chunk(
            data, self._prefix, self._state, False)
        self._carry = data[consumed:]
        if len(self._carry) > self._max_carry:
            # oversized pseudo-tag: give up on it, pass through verbatim
            out += self._carry
            self._carry = b""
        return out

    def flush(self) -> bytes:
        out, _, self._state = self._kernel.rewrite_chunk(
            self._carry, self._prefix, self._state, True)
        self._carry = b""
        return out


def rewrite_html(body: bytes, ctx: RewriteContext, kernel=None) -> bytes:
    """Whole-buffer convenience over HtmlRewriter."""
    rewriter = HtmlRewriter(ctx.prefix, kernel=kernel)
    return rewriter.feed(body) + rewriter.flush()


def rewrite_location_header(value: str, prefix: str, backend_authority: str) -> str:
    """Keep redirects inside the prefix space.

    Root-relative targets get the prefix like body URLs; absolute URLs whose
    authority is the backend itself are folded back under the prefix; all
    other targets are left alone.
    """
    if value.startswith("/") and not value.startswith("//"):
        if value.startswith(prefix + "/"):
            return value
        return prefix + value
    try:
        parts = urlsplit(value)
    except ValueError:
        return value
    if parts.scheme in ("http", "https") and parts.netloc == backend_authority:
        rebuilt = parts.path or "/"
        if parts.query:
            rebuilt += "?" + parts.query
        if parts.fragment:
            rebuilt += "#" + parts.fragment
        return prefix + rebuilt
    return value
