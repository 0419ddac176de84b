"""Benchmark harness: aggregates, formats, status-mismatch abort, and the
parallelism relationship between sum-of-deltas and wall-clock overhead."""

import csv
import io
import json
import math

import pytest

from portalgate import bench
from portalgate.bench import (LatencyReport, PerRequest, RequestManifest, ManifestEntry,
                              StatusMismatch, TargetUnreachable, builtin_manifest, emit_report,
                              manifest_from_dict, report_from_dict, run_benchmark)

from conftest import ALICE, TOKENS, launch

A = TOKENS["alice"]


def _small_manifest(paths, concurrency=4):
    return RequestManifest(
        entries=tuple(ManifestEntry(path=p, expected_content_type="", dependency_group=g)
                      for g, p in enumerate(paths)),
        concurrency=concurrency)


def _report():
    rows = (PerRequest("/a", 1.0, 2.5, 1.5), PerRequest("/b", 2.0, 2.25, 0.25))
    return LatencyReport(per_request=rows, direct_total_ms=3.0, portal_total_ms=4.5,
                         sum_of_deltas_ms=1.75, wall_clock_overhead_ms=1.5,
                         repetitions=5, concurrency=8)


def test_builtin_manifest_shape():
    manifest = builtin_manifest()
    assert len(manifest.entries) == 31
    assert manifest.concurrency == 8
    groups = [e.dependency_group for e in manifest.entries]
    assert sorted(set(groups)) == [0, 1, 2, 3]
    assert manifest.entries[0].path == "/"


def test_manifest_validation():
    with pytest.raises(ValueError):
        RequestManifest(entries=(), concurrency=8)
    with pytest.raises(ValueError):
        _small_manifest(["/x"], concurrency=0)


def test_text_format_contract():
    text = emit_report(_report(), "text").decode()
    assert "direct_total_ms=3.000" in text
    assert "portal_total_ms=4.500" in text
    assert "sum_of_deltas_ms=1.750" in text
    assert "wall_clock_overhead_ms=1.500" in text


def test_csv_row_count():
    out = emit_report(_report(), "csv").decode()
    rows = list(csv.reader(io.StringIO(out)))
    assert len(rows) == 2 + 1  # entries + header
    assert rows[0] == ["path", "direct_ms", "portal_ms", "delta_ms"]


def test_json_roundtrip():
    report = _report()
    parsed = report_from_dict(json.loads(emit_report(report, "json")))
    assert parsed == report


def test_histogram_renders():
    text = emit_report(_report(), "text", histogram=True).decode()
    assert "delta_ms histogram:" in text
    assert "#" in text


def test_sum_of_deltas_consistency():
    report = _report()
    assert math.isclose(report.sum_of_deltas_ms,
                        sum(r.delta_ms for r in report.per_request))


def test_unreachable_target():
    manifest = _small_manifest(["/"])
    with pytest.raises(TargetUnreachable):
        run_benchmark(manifest, "http://127.0.0.1:1", "http://127.0.0.1:1", repetitions=1)


def test_self_comparison_deltas_below_noise_floor(stack, client):
    """The same base on both sides: deltas sit under the 5 ms noise floor."""
    job = launch(stack, ALICE, "static-site")
    host = stack.config.nodes["node-1"]
    base = f"http://{host}:{job.ports[0]}"
    manifest = _small_manifest(["/", "/static/main.css", "/api/config"])
    report = run_benchmark(manifest, base, base, repetitions=5)
    for row in report.per_request:
        assert abs(row.delta_ms) < 5.0


def test_status_mismatch_aborts(stack, client):
    """Token app: direct without token 401 vs portal with token 200 is not
    comparable; the run aborts rather than reporting garbage."""
    job = launch(stack, ALICE, "token-notebook")
    host = stack.config.nodes["node-1"]
    gw_host, gw_port = stack.gateway_address
    direct = f"http://{host}:{job.ports[0]}"
    portal = f"http://{gw_host}:{gw_port}/fw2/node-1:{job.ports[0]}"
    manifest = RequestManifest(
        entries=(ManifestEntry(path=f"/?token={job.token}", expected_content_type="",
                               dependency_group=0),
                 ManifestEntry(path="/tree", expected_content_type="", dependency_group=1)),
        concurrency=2)
    # /tree without a token 401s on both sides identically -> no mismatch yet;
    # now break symmetry: portal-only auth failure on the gateway side
    bad_portal = f"http://{gw_host}:{gw_port}/fw2/node-1:{job.ports[0]}"
    report_headers = {"Authorization": f"Bearer {A}"}
    ok = run_benchmark(manifest, direct, portal, repetitions=1, headers=report_headers)
    assert len(ok.per_request) == 2
    with pytest.raises(StatusMismatch):
        run_benchmark(manifest, direct, bad_portal, repetitions=1, headers={})


def test_portal_run_against_gateway(stack, client):
    """Real direct-vs-portal run: every delta is finite and the aggregates
    keep their defining relationships."""
    job = launch(stack, ALICE, "static-site")
    host = stack.config.nodes["node-1"]
    gw_host, gw_port = stack.gateway_address
    manifest = _small_manifest(["/", "/static/main.css", "/static/vendor.js",
                                "/api/config"], concurrency=2)
    report = run_benchmark(
        manifest,
        f"http://{host}:{job.ports[0]}",
        f"http://{gw_host}:{gw_port}/fw2/node-1:{job.ports[0]}",
        repetitions=3,
        headers={"Authorization": f"Bearer {A}"})
    assert math.isclose(report.sum_of_deltas_ms,
                        sum(r.delta_ms for r in report.per_request), abs_tol=1e-9)
    assert math.isclose(report.wall_clock_overhead_ms,
                        report.portal_total_ms - report.direct_total_ms, abs_tol=1e-9)
    assert all(r.portal_ms > 0 and r.direct_ms > 0 for r in report.per_request)


def test_kernel_benchmark_outputs_identical():
    result = bench.benchmark_kernels(size_mb=0.5, reps=2)
    assert result["outputs_identical"]
    assert "python" in result["kernels"]
