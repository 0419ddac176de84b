# cython: language_level=3
# cython: boundscheck=False, wraparound=False
"""Compiled rewrite kernel.

Byte-for-byte equivalent to _kernel_py (see that module for the canonical
scan semantics); the differential test suite holds the two to equality.
"""

from cpython.bytes cimport PyBytes_AS_STRING, PyBytes_GET_SIZE, PyBytes_FromStringAndSize
from cpython.mem cimport PyMem_Malloc, PyMem_Realloc, PyMem_Free
from libc.string cimport memcpy, memchr, memcmp

cdef enum:
    TEXT = 0
    RAW_SCRIPT = 1
    RAW_STYLE = 2


def kernel_name():
    return "compiled"


# -- growing output buffer ----------------------------------------------------

cdef struct Buf:
    char* data
    Py_ssize_t size
    Py_ssize_t cap

cdef int buf_init(Buf* b, Py_ssize_t cap) except -1:
    if cap < 64:
        cap = 64
    b.data = <char*>PyMem_Malloc(cap)
    if b.data == NULL:
        raise MemoryError()
    b.size = 0
    b.cap = cap
    return 0

cdef int buf_append(Buf* b, const unsigned char* src, Py_ssize_t n) except -1:
    cdef Py_ssize_t need = b.size + n
    cdef Py_ssize_t cap = b.cap
    cdef char* p
    if need > cap:
        while cap < need:
            cap += cap // 2 + 64
        p = <char*>PyMem_Realloc(b.data, cap)
        if p == NULL:
            raise MemoryError()
        b.data = p
        b.cap = cap
    memcpy(b.data + b.size, src, n)
    b.size += n
    return 0

cdef inline int buf_append_byte(Buf* b, unsigned char c) except -1:
    return buf_append(b, &c, 1)


# -- byte helpers -------------------------------------------------------------

cdef inline unsigned char _lower(unsigned char c):
    if 65 <= c <= 90:
        return c + 32
    return c

cdef inline bint _is_ws(unsigned char c):
    return c == 32 or c == 9 or c == 13 or c == 10 or c == 12

cdef inline bint _is_alpha(unsigned char c):
    return (65 <= c <= 90) or (97 <= c <= 122)

cdef inline Py_ssize_t _find_byte(const unsigned char* buf, Py_ssize_t n,
                                  Py_ssize_t start, unsigned char c):
    if start >= n:
        return -1
    cdef const void* hit = memchr(buf + start, c, n - start)
    if hit == NULL:
        return -1
    return (<const unsigned char*>hit) - buf

cdef bint _name_is(const unsigned char* s, Py_ssize_t n, const char* lit, Py_ssize_t litlen):
    cdef Py_ssize_t k
    if n != litlen:
        return False
    for k in range(n):
        if _lower(s[k]) != <unsigned char>lit[k]:
            return False
    return True


# -- value rewriting ----------------------------------------------------------

cdef int _append_prefixed(Buf* out, const unsigned char* v, Py_ssize_t vlen,
                          const unsigned char* pfx, Py_ssize_t plen) except -1:
    cdef bint already
    if vlen >= 1 and v[0] == 47 and not (vlen >= 2 and v[1] == 47):  # '/': root-relative
        already = vlen >= plen + 1 and memcmp(v, pfx, plen) == 0 and v[plen] == 47
        if not already:
            buf_append(out, pfx, plen)
    buf_append(out, v, vlen)
    return 0

cdef Py_ssize_t _find_url_open(const unsigned char* v, Py_ssize_t n, Py_ssize_t start):
    cdef Py_ssize_t i = start
    while i + 4 <= n:
        if _lower(v[i]) == 117 and _lower(v[i + 1]) == 114 and _lower(v[i + 2]) == 108 \
                and v[i + 3] == 40:  # "url("
            return i
        i += 1
    return -1

cdef int _append_css_inner(Buf* out, const unsigned char* inner, Py_ssize_t ilen,
                           const unsigned char* pfx, Py_ssize_t plen) except -1:
    cdef Py_ssize_t a = 0, b = ilen
    while a < b and _is_ws(inner[a]):
        a += 1
    while b > a and _is_ws(inner[b - 1]):
        b -= 1
    buf_append(out, inner, a)
    if b - a >= 2 and (inner[a] == 34 or inner[a] == 39) and inner[b - 1] == inner[a]:
        buf_append_byte(out, inner[a])
        _append_prefixed(out, inner + a + 1, b - a - 2, pfx, plen)
        buf_append_byte(out, inner[b - 1])
    else:
        _append_prefixed(out, inner + a, b - a, pfx, plen)
    buf_append(out, inner + b, ilen - b)
    return 0

cdef int _append_css(Buf* out, const unsigned char* v, Py_ssize_t vlen,
                     const unsigned char* pfx, Py_ssize_t plen) except -1:
    cdef Py_ssize_t i = 0, k, close
    while True:
        k = _find_url_open(v, vlen, i)
        if k < 0:
            buf_append(out, v + i, vlen - i)
            return 0
        buf_append(out, v + i, (k + 4) - i)
        close = _find_byte(v, vlen, k + 4, 41)  # ')'
        if close < 0:
            buf_append(out, v + k + 4, vlen - (k + 4))
            return 0
        _append_css_inner(out, v + k + 4, close - (k + 4), pfx, plen)
        buf_append_byte(out, 41)
        i = close + 1


# -- tag scanning -------------------------------------------------------------

cdef inline int _attr_kind(const unsigned char* s, Py_ssize_t n):
    # 1: href/src/action/content, 2: style, 0: anything else
    if _name_is(s, n, "href", 4) or _name_is(s, n, "src", 3) \
            or _name_is(s, n, "action", 6) or _name_is(s, n, "content", 7):
        return 1
    if _name_is(s, n, "style", 5):
        return 2
    return 0

cdef int _rewrite_attrs(Buf* out, const unsigned char* body, Py_ssize_t m,
                        Py_ssize_t start, const unsigned char* pfx, Py_ssize_t plen) except -1:
    buf_append(out, body, start)
    cdef Py_ssize_t i = start, j, vstart, vend
    cdef unsigned char c, quote
    cdef bint terminated
    cdef int kind
    while i < m:
        c = body[i]
        if _is_ws(c) or c == 47:  # '/'
            buf_append_byte(out, c)
            i += 1
            continue
        j = i
        while j < m and not _is_ws(body[j]) and body[j] != 61 and body[j] != 47:  # '=' '/'
            j += 1
        kind = _attr_kind(body + i, j - i)
        buf_append(out, body + i, j - i)
        i = j
        while i < m and _is_ws(body[i]):
            buf_append_byte(out, body[i])
            i += 1
        if i >= m or body[i] != 61:  # no '=': boolean attribute
            continue
        buf_append_byte(out, 61)
        i += 1
        while i < m and _is_ws(body[i]):
            buf_append_byte(out, body[i])
            i += 1
        if i >= m:
            break
        if body[i] == 34 or body[i] == 39:  # '"' or "'"
            quote = body[i]
            vstart = i + 1
            vend = _find_byte(body, m, vstart, quote)
            terminated = vend >= 0
            if not terminated:
                vend = m
        else:
            quote = 0
            vstart = i
            vend = vstart
            while vend < m and not _is_ws(body[vend]):
                vend += 1
            terminated = False
        if quote != 0:
            buf_append_byte(out, quote)
        if kind == 1:
            _append_prefixed(out, body + vstart, vend - vstart, pfx, plen)
        elif kind == 2:
            _append_css(out, body + vstart, vend - vstart, pfx, plen)
        else:
            buf_append(out, body + vstart, vend - vstart)
        if quote != 0 and terminated:
            buf_append_byte(out, quote)
            i = vend + 1
        else:
            i = vend
    return 0

cdef int _process_tag(Buf* out, const unsigned char* buf, Py_ssize_t lt, Py_ssize_t gt,
                      const unsigned char* pfx, Py_ssize_t plen) except -1:
    cdef Py_ssize_t taglen = gt - lt + 1
    if taglen < 3 or not _is_alpha(buf[lt + 1]):
        buf_append(out, buf + lt, taglen)
        return TEXT
    cdef const unsigned char* body = buf + lt + 1
    cdef Py_ssize_t m = taglen - 2
    cdef Py_ssize_t name_end = 1
    while name_end < m and not _is_ws(body[name_end]) and body[name_end] != 47:
        name_end += 1
    buf_append_byte(out, 60)  # '<'
    _rewrite_attrs(out, body, m, name_end, pfx, plen)
    buf_append_byte(out, 62)  # '>'
    cdef Py_ssize_t last = m - 1
    while last >= 0 and _is_ws(body[last]):
        last -= 1
    if last >= 0 and body[last] == 47:  # self-closing: no rawtext
        return TEXT
    if _name_is(body, name_end, "script", 6):
        return RAW_SCRIPT
    if _name_is(body, name_end, "style", 5):
        return RAW_STYLE
    return TEXT

cdef Py_ssize_t _find_terminator(const unsigned char* buf, Py_ssize_t n,
                                 Py_ssize_t start, int state):
    cdef const char* term
    cdef Py_ssize_t tlen, i = start, k
    cdef const void* hit
    if state == RAW_SCRIPT:
        term = "</script"
        tlen = 8
    else:
        term = "</style"
        tlen = 7
    while True:
        if i + tlen > n:
            return -1
        hit = memchr(buf + i, 60, n - i)  # '<'
        if hit == NULL:
            return -1
        i = (<const unsigned char*>hit) - buf
        if i + tlen > n:
            return -1
        k = 0
        while k < tlen and _lower(buf[i + k]) == <unsigned char>term[k]:
            k += 1
        if k == tlen:
            return i
        i += 1


def rewrite_chunk(bytes data, bytes prefix, int state, bint final):
    cdef const unsigned char* buf = <const unsigned char*>PyBytes_AS_STRING(data)
    cdef Py_ssize_t n = PyBytes_GET_SIZE(data)
    cdef const unsigned char* pfx = <const unsigned char*>PyBytes_AS_STRING(prefix)
    cdef Py_ssize_t plen = PyBytes_GET_SIZE(prefix)
    cdef Buf out
    cdef Py_ssize_t i = 0, lt, gt, hit, keep, j
    cdef unsigned char nxt
    buf_init(&out, n + 256)
    try:
        while i < n:
            if state == TEXT:
                lt = _find_byte(buf, n, i, 60)  # '<'
                if lt < 0:
                    buf_append(&out, buf + i, n - i)
                    i = n
                    break
                buf_append(&out, buf + i, lt - i)
                if lt + 1 >= n:
                    if final:
                        buf_append(&out, buf + lt, n - lt)
                        i = n
                    else:
                        i = lt
                    break
                nxt = buf[lt + 1]
                if not (_is_alpha(nxt) or nxt == 47 or nxt == 33 or nxt == 63):  # '/' '!' '?'
                    buf_append_byte(&out, 60)  # lone '<' is text
                    i = lt + 1
                    continue
                gt = _find_byte(buf, n, lt + 1, 62)  # '>'
                if gt < 0:
                    if final:
                        buf_append(&out, buf + lt, n - lt)
                        i = n
                    else:
                        i = lt
                    break
                state = _process_tag(&out, buf, lt, gt, pfx, plen)
                i = gt + 1
            else:
                hit = _find_terminator(buf, n, i, state)
                if hit < 0:
                    if final:
                        buf_append(&out, buf + i, n - i)
                        i = n
                    else:
                        keep = 7 if state == RAW_SCRIPT else 6
                        j = n - keep
                        if j < i:
                            j = i
                        buf_append(&out, buf + i, j - i)
                        i = j
                    break
                buf_append(&out, buf + i, hit - i)
                state = TEXT
                i = hit
        result = PyBytes_FromStringAndSize(out.data, out.size)
    finally:
        PyMem_Free(out.data)
    return result, i, state
