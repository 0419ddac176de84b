"""Latency benchmark: the same request manifest against a direct base URL
and a portal base URL, reporting per-request deltas and page-load totals.

Requests inside one dependency group run concurrently (up to the manifest's
concurrency); groups run in ascending order. Direct and portal pages are
interleaved within each repetition to reduce drift, and per-request times
are medians over the repetitions. Page load time is the wall clock from the
first request's start to the last response's end.

The interesting aggregate relationship: when requests overlap, the sum of
per-request deltas exceeds the wall-clock overhead, because each in-flight
request pays the portal's toll but the page absorbs them in parallel.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from http.client import HTTPConnection, HTTPException
from importlib import resources
from pathlib import Path
from urllib.parse import urlsplit

log = logging.getLogger(__name__)

FETCH_TIMEOUT = 30.0


class BenchError(Exception):
    pass


class TargetUnreachable(BenchError):
    pass


class StatusMismatch(BenchError):
    pass


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    expected_content_type: str
    dependency_group: int


@dataclass(frozen=True)
class RequestManifest:
    entries: tuple[ManifestEntry, ...]
    concurrency: int

    def __post_init__(self):
        if not self.entries:
            raise ValueError("manifest has no entries")
        if self.concurrency < 1:
            raise ValueError("concurrency must be >= 1")

    def groups(self) -> list[list[ManifestEntry]]:
        ordered: dict[int, list[ManifestEntry]] = {}
        for entry in self.entries:
            ordered.setdefault(entry.dependency_group, []).append(entry)
        return [ordered[g] for g in sorted(ordered)]


def manifest_from_dict(raw: dict) -> RequestManifest:
    entries = tuple(
        ManifestEntry(
            path=str(e["path"]),
            expected_content_type=str(e.get("expected_content_type", "")),
            dependency_group=int(e.get("dependency_group", 0)),
        )
        for e in raw["entries"]
    )
    return RequestManifest(entries=entries, concurrency=int(raw.get("concurrency", 8)))


def load_manifest(path: str | Path) -> RequestManifest:
    return manifest_from_dict(json.loads(Path(path).read_text()))


def builtin_manifest(name: str = "notebook31") -> RequestManifest:
    data = resources.files("portalgate.data").joinpath(f"{name}.json").read_text()
    return manifest_from_dict(json.loads(data))


@dataclass(frozen=True)
class PerRequest:
    path: str
    direct_ms: float
    portal_ms: float
    delta_ms: float


@dataclass(frozen=True)
class LatencyReport:
    per_request: tuple[PerRequest, ...]
    direct_total_ms: float
    portal_total_ms: float
    sum_of_deltas_ms: float
    wall_clock_overhead_ms: float
    repetitions: int
    concurrency: int

    def to_dict(self) -> dict:
        return {
            "per_request": [vars(r) for r in self.per_request],
            "direct_total_ms": self.direct_total_ms,
            "portal_total_ms": self.portal_total_ms,
            "sum_of_deltas_ms": self.sum_of_deltas_ms,
            "wall_clock_overhead_ms": self.wall_clock_overhead_ms,
            "repetitions": self.repetitions,
            "concurrency": self.concurrency,
        }


def report_from_dict(raw: dict) -> LatencyReport:
    return LatencyReport(
        per_request=tuple(PerRequest(**r) for r in raw["per_request"]),
        direct_total_ms=raw["direct_total_ms"],
        portal_total_ms=raw["portal_total_ms"],
        sum_of_deltas_ms=raw["sum_of_deltas_ms"],
        wall_clock_overhead_ms=raw["wall_clock_overhead_ms"],
        repetitions=raw["repetitions"],
        concurrency=raw["concurrency"],
    )


class _Base:
    def __init__(self, url: str):
        parts = urlsplit(url)
        if parts.scheme != "http" or not parts.hostname:
            raise BenchError(f"base url must be http://host:port[/prefix], got {url!r}")
        self.host = parts.hostname
        self.port = parts.port or 80
        self.path_prefix = parts.path.rstrip("/")
        self.url = url

    def fetch(self, path: str, headers: dict[str, str]) -> tuple[int, str, float]:
        """One GET; returns (status, content type, elapsed ms)."""
        conn = HTTPConnection(self.host, self.port, timeout=FETCH_TIMEOUT)
        start = time.perf_counter()
        try:
            conn.request("GET", self.path_prefix + path, headers=headers)
            resp = conn.getresponse()
            resp.read()
        except (OSError, HTTPException) as exc:
            raise TargetUnreachable(f"{self.url}{path}: {exc}") from exc
        finally:
            conn.close()
        elapsed_ms = (time.perf_counter() - start) * 1000.0
        return resp.status, resp.headers.get("Content-Type", ""), elapsed_ms


def _run_page(base: _Base, manifest: RequestManifest,
              headers: dict[str, str]) -> tuple[float, dict[str, tuple[int, float]]]:
    results: dict[str, tuple[int, float]] = {}
    start = time.perf_counter()
    with ThreadPoolExecutor(max_workers=manifest.concurrency) as pool:
        for group in manifest.groups():
            futures = {entry.path: pool.submit(base.fetch, entry.path, headers)
                       for entry in group}
            for path, future in futures.items():
                status, ctype, elapsed = future.result()
                results[path] = (status, elapsed)
                expected = next(e.expected_content_type for e in group if e.path == path)
                if expected and not ctype.lower().startswith(expected.lower()):
                    log.warning("%s%s: content type %r, expected %r",
                                base.url, path, ctype, expected)
    wall_ms = (time.perf_counter() - start) * 1000.0
    return wall_ms, results


def run_benchmark(manifest: RequestManifest, direct_base: str, portal_base: str,
                  repetitions: int = 5,
                  headers: dict[str, str] | None = None) -> LatencyReport:
    if repetitions < 1:
        raise BenchError("repetitions must be >= 1")
    headers = headers or {}
    direct = _Base(direct_base)
    portal = _Base(portal_base)
    samples: dict[str, dict[str, list[float]]] = {
        e.path: {"direct": [], "portal": []} for e in manifest.entries}
    walls: dict[str, list[float]] = {"direct": [], "portal": []}

    for _ in range(repetitions):
        rep_status: dict[str, dict[str, int]] = {}
        for side, base in (("direct", direct), ("portal", portal)):
            wall_ms, results = _run_page(base, manifest, headers)
            walls[side].append(wall_ms)
            for path, (status, elapsed) in results.items():
                samples[path][side].append(elapsed)
                rep_status.setdefault(path, {})[side] = status
        for path, statuses in rep_status.items():
            if statuses["direct"] != statuses["portal"]:
                raise StatusMismatch(
                    f"{path}: direct={statuses['direct']} portal={statuses['portal']};"
                    " comparison is invalid")

    per_request = []
    for entry in manifest.entries:
        direct_ms = statistics.median(samples[entry.path]["direct"])
        portal_ms = statistics.median(samples[entry.path]["portal"])
        per_request.append(PerRequest(
            path=entry.path, direct_ms=direct_ms, portal_ms=portal_ms,
            delta_ms=portal_ms - direct_ms))
    direct_total = statistics.median(walls["direct"])
    portal_total = statistics.median(walls["portal"])
    return LatencyReport(
        per_request=tuple(per_request),
        direct_total_ms=direct_total,
        portal_total_ms=portal_total,
        sum_of_deltas_ms=sum(r.delta_ms for r in per_request),
        wall_clock_overhead_ms=portal_total - direct_total,
        repetitions=repetitions,
        concurrency=manifest.concurrency,
    )


# -- report emission -------------------------------------------------------------


def emit_report(report: LatencyReport, fmt: str = "text", histogram: bool = False) -> bytes:
    if fmt == "json":
        return (json.dumps(report.to_dict(), indent=2) + "\n").encode()
    if fmt == "csv":
        out = io.StringIO()
        writer = csv.writer(out)
        writer.writerow(["path", "direct_ms", "portal_ms", "delta_ms"])
        for row in report.per_request:
            writer.writerow([row.path, f"{row.direct_ms:.3f}", f"{row.portal_ms:.3f}",
                             f"{row.delta_ms:.3f}"])
        return out.getvalue().encode()
    if fmt != "text":
        raise BenchError(f"unknown report format {fmt!r}")
    width = max(len(r.path) for r in report.per_request)
    lines = [f"{'path':<{width}}  {'direct_ms':>10}  {'portal_ms':>10}  {'delta_ms':>10}"]
    for row in report.per_request:
        lines.append(f"{row.path:<{width}}  {row.direct_ms:>10.3f}  {row.portal_ms:>10.3f}"
                     f"  {row.delta_ms:>10.3f}")
    lines.append("")
    lines.append(f"direct_total_ms={report.direct_total_ms:.3f}")
    lines.append(f"portal_total_ms={report.portal_total_ms:.3f}")
    lines.append(f"sum_of_deltas_ms={report.sum_of_deltas_ms:.3f}")
    lines.append(f"wall_clock_overhead_ms={report.wall_clock_overhead_ms:.3f}")
    lines.append(f"(repetitions={report.repetitions}, concurrency={report.concurrency})")
    text = "\n".join(lines) + "\n"
    if histogram:
        text += "\n" + delta_histogram(report)
    return text.encode()


def delta_histogram(report: LatencyReport, buckets: int = 10, bar_width: int = 40) -> str:
    deltas = [r.delta_ms for r in report.per_request]
    low, high = min(deltas), max(deltas)
    if high == low:
        high = low + 1e-9
    step = (high - low) / buckets
    counts = [0] * buckets
    for d in deltas:
        idx = min(int((d - low) / step), buckets - 1)
        counts[idx] += 1
    peak = max(counts)
    lines = ["delta_ms histogram:"]
    for i, count in enumerate(counts):
        left = low + i * step
        right = left + step
        bar = "#" * (count * bar_width // peak if peak else 0)
        lines.append(f"  [{left:>8.2f}, {right:>8.2f})  {count:>3}  {bar}")
    return "\n".join(lines) + "\n"


# -- rewrite kernel benchmark -------------------------------------------------------


def synthetic_html(size: int) -> bytes:
    """Tag-dense document for exercising the rewrite scan."""
    row = (b'<tr><td><a href="/files/item">item</a></td>'
           b'<td><img src="/static/icon.png" style="background:url(/static/bg.png)"></td>'
           b'<td>plain text cell with some length to it, no markup</td></tr>\n')
    head = b'<!DOCTYPE html><html><head><script src="/static/app.js"></script></head><body><table>\n'
    tail = b"</table></body></html>\n"
    body = head + row * max(1, (size - len(head) - len(tail)) // len(row)) + tail
    return body


def benchmark_kernels(size_mb: float = 8.0, reps: int = 5, prefix: str = "/fw2/node-1:8888") -> dict:
    """Times every available rewrite kernel over the same synthetic document."""
    from .rewrite import HtmlRewriter, available_kernels

    doc = synthetic_html(int(size_mb * 1024 * 1024))
    chunks = [doc[i:i + 64 * 1024] for i in range(0, len(doc), 64 * 1024)]
    results: dict[str, dict] = {}
    outputs: dict[str, bytes] = {}
    for name, kernel in available_kernels().items():
        times = []
        for _ in range(reps):
            rewriter = HtmlRewriter(prefix, kernel=kernel)
            start = time.perf_counter()
            parts = [rewriter.feed(c) for c in chunks]
            parts.append(rewriter.flush())
            times.append(time.perf_counter() - start)
        best = min(times)
        outputs[name] = b"".join(parts)
        results[name] = {
            "seconds": best,
            "mb_per_s": (len(doc) / (1024 * 1024)) / best,
        }
    identical = len(set(outputs.values())) == 1
    return {"input_mb": len(doc) / (1024 * 1024), "kernels": results,
            "outputs_identical": identical}
