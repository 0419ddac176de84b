"""Pure-Python rewrite kernel.

Canonical scan semantics (the compiled kernel in _kernel_c.pyx implements
exactly the same rules; the differential tests hold them to byte equality):

* TEXT mode copies bytes to the output until "<". A "<" followed by
  anything other than an ASCII letter or "/", "!", "?" is literal text
  (as HTML tokenizers treat it). Otherwise the tag runs to the first ">"
  (quote-blind; a ">" inside a quoted attribute value ends the tag — best
  effort, matching the streaming design). With no ">" in the buffer the tag
  start is left unconsumed for the caller to retry with more input.
* Only start tags ("<" + ASCII letter) are inspected. End tags, comments,
  doctypes and processing instructions pass through verbatim.
* Inside a start tag, attributes named href/src/action/content (any case)
  whose value starts with "/" but not "//" and not already with prefix+"/"
  get the prefix inserted. A style attribute gets the same treatment for
  every url(...) token in its value. Quoting style (double/single/none) is
  preserved; attribute names and unrelated bytes are copied untouched.
* A start tag named script or style (not self-closing) switches to RAWTEXT,
  which copies verbatim until the case-insensitive terminator "</script" or
  "</style"; element content is never rewritten.
* state persists across calls: 0 TEXT, 1 RAWTEXT(script), 2 RAWTEXT(style).
  The function returns (output, bytes_consumed, new_state); with final=True
  any pending partial construct is flushed verbatim.
"""

from __future__ import annotations

TEXT = 0
RAW_SCRIPT = 1
RAW_STYLE = 2

_WS = b" \t\r\n\f"
_REWRITE_ATTRS = (b"href", b"src", b"action", b"content")
_TERMINATORS = {RAW_SCRIPT: b"</script", RAW_STYLE: b"</style"}


def kernel_name() -> str:
    return "python"


def rewrite_chunk(data: bytes, prefix: bytes, state: int, final: bool) -> tuple[bytes, int, int]:
    out = bytearray()
    i = 0
    n = len(data)
    lowered = None  # lazily computed for case-insensitive rawtext search
    while i < n:
        if state == TEXT:
            lt = data.find(b"<", i)
            if lt < 0:
                out += data[i:]
                i = n
                break
            out += data[i:lt]
            if lt + 1 >= n:
                if final:
                    out += data[lt:]
                    i = n
                else:
                    i = lt
                break
            nxt = data[lt + 1]
            if not (_is_alpha(nxt) or nxt in (0x2F, 0x21, 0x3F)):  # '/' '!' '?'
                out.append(0x3C)  # lone '<' is text
                i = lt + 1
                continue
            gt = data.find(b">", lt + 1)
            if gt < 0:
                if final:
                    out += data[lt:]
                    i = n
                else:
                    i = lt
                break
            new_tag, state = _process_tag(data[lt:gt + 1], prefix)
            out += new_tag
            i = gt + 1
        else:
            term = _TERMINATORS[state]
            if lowered is None:
                lowered = data.lower()
            hit = lowered.find(term, i)
            if hit < 0:
                if final:
                    out += data[i:]
                    i = n
                else:
                    # keep a possible terminator head for the next call
                    j = max(i, n - (len(term) - 1))
                    out += data[i:j]
                    i = j
                break
            out += data[i:hit]
            state = TEXT
            i = hit
    return bytes(out), i, state


def _is_alpha(byte: int) -> bool:
    return 0x41 <= byte <= 0x5A or 0x61 <= byte <= 0x7A


def _process_tag(tag: bytes, prefix: bytes) -> tuple[bytes, int]:
    """tag includes the angle brackets; returns (replacement, next state)."""
    if len(tag) < 3 or not _is_alpha(tag[1]):
        return tag, TEXT
    body = tag[1:-1]
    name_end = 1
    while name_end < len(body) and body[name_end] not in _WS and body[name_end] != 0x2F:  # '/'
        name_end += 1
    name = body[:name_end].lower()
    new_body = _rewrite_attrs(body, name_end, prefix)
    state = TEXT
    if not body.rstrip(_WS).endswith(b"/"):
        if name == b"script":
            state = RAW_SCRIPT
        elif name == b"style":
            state = RAW_STYLE
    return b"<" + new_body + b">", state


def _rewrite_attrs(body: bytes, start: int, prefix: bytes) -> bytes:
    out = bytearray(body[:start])
    i = start
    n = len(body)
    while i < n:
        c = body[i]
        if c in _WS or c == 0x2F:  # whitespace or '/'
            out.append(c)
            i += 1
            continue
        # attribute name: up to whitespace, '=', or '/'
        j = i
        while j < n and body[j] not in _WS and body[j] != 0x3D and body[j] != 0x2F:  # '=' '/'
            j += 1
        name = body[i:j].lower()
        out += body[i:j]
        i = j
        while i < n and body[i] in _WS:
            out.append(body[i])
            i += 1
        if i >= n or body[i] != 0x3D:  # no '=': boolean attribute
            continue
        out.append(0x3D)
        i += 1
        while i < n and body[i] in _WS:
            out.append(body[i])
            i += 1
        if i >= n:
            break
        quote = body[i] if body[i] in (0x22, 0x27) else 0  # '"' or "'"
        if quote:
            vstart = i + 1
            vend = body.find(bytes((quote,)), vstart)
            terminated = vend >= 0
            if not terminated:
                vend = n
        else:
            vstart = i
            vend = vstart
            while vend < n and body[vend] not in _WS:
                vend += 1
            terminated = False
        value = body[vstart:vend]
        new_value = _rewrite_value(name, value, prefix)
        if quote:
            out.append(quote)
            out += new_value
            if terminated:
                out.append(quote)
                i = vend + 1
            else:
                i = vend
        else:
            out += new_value
            i = vend
    return bytes(out)


def _rewrite_value(name: bytes, value: bytes, prefix: bytes) -> bytes:
    if name in _REWRITE_ATTRS:
        return _prefix_url(value, prefix)
    if name == b"style":
        return _rewrite_css_urls(value, prefix)
    return value


def _prefix_url(value: bytes, prefix: bytes) -> bytes:
    if value.startswith(b"/") and not value.startswith(b"//") \
            and not value.startswith(prefix + b"/"):
        return prefix + value
    return value


def _rewrite_css_urls(value: bytes, prefix: bytes) -> bytes:
    out = bytearray()
    lowered = value.lower()
    i = 0
    while True:
        k = lowered.find(b"url(", i)
        if k < 0:
            out += value[i:]
            return bytes(out)
        out += value[i:k + 4]
        close = value.find(b")", k + 4)
        if close < 0:
            out += value[k + 4:]
            return bytes(out)
        out += _rewrite_css_inner(value[k + 4:close], prefix)
        out.append(0x29)  # ')'
        i = close + 1


def _rewrite_css_inner(inner: bytes, prefix: bytes) -> bytes:
    stripped = inner.strip(_WS)
    lead = inner[: len(inner) - len(inner.lstrip(_WS))]
    trail = inner[len(inner.rstrip(_WS)):]
    if len(stripped) >= 2 and stripped[0] in (0x22, 0x27) and stripped[-1] == stripped[0]:
        quote = stripped[:1]
        url = stripped[1:-1]
        return lead + quote + _prefix_url(url, prefix) + quote + trail
    return lead + _prefix_url(stripped, prefix) + trail
