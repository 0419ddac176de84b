"""Command-line interface.

    portalgate serve -c config.yaml
    portalgate forward claim|set|mode|release|list ...
    portalgate job launch|stop|list ...
    portalgate bench run|rewrite ...

Management commands talk to a running gateway's REST API; the token comes
from --token or the PORTAL_TOKEN environment variable. Exit codes: 0 ok,
1 API or runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import signal
import sys
import threading
import urllib.error
import urllib.request

from . import bench as bench_mod
from .config import load_config
from .service import ServiceStack

DEFAULT_API = "http://127.0.0.1:8080"


class CliError(Exception):
    pass


def _api_call(api_base: str, token: str | None, method: str, path: str,
              payload: dict | None = None):
    url = api_base.rstrip("/") + path
    data = json.dumps(payload).encode() if payload is not None else None
    request = urllib.request.Request(url, data=data, method=method)
    if token:
        request.add_header("Authorization", f"Bearer {token}")
    if data is not None:
        request.add_header("Content-Type", "application/json")
    try:
        with urllib.request.urlopen(request, timeout=30) as resp:
            body = resp.read()
            return resp.status, json.loads(body) if body else None
    except urllib.error.HTTPError as exc:
        body = exc.read()
        try:
            parsed = json.loads(body)
            message = f"{parsed.get('error', exc.code)}: {parsed.get('message', '')}".strip(": ")
        except ValueError:
            message = body.decode("utf-8", "replace").strip() or str(exc)
        raise CliError(message) from exc
    except urllib.error.URLError as exc:
        raise CliError(f"cannot reach {api_base}: {exc.reason}") from exc


def _require_token(args) -> str:
    token = args.token or os.environ.get("PORTAL_TOKEN")
    if not token:
        raise CliError("no token: pass --token or set PORTAL_TOKEN")
    return token


# -- commands ---------------------------------------------------------------------


def cmd_serve(args) -> int:
    stack = ServiceStack(load_config(args.config))
    stack.start()
    host, port = stack.gateway_address
    print(f"gateway listening on http://{host}:{port}", flush=True)
    for node, agent in sorted(stack.agents.items()):
        ahost, aport = agent.address
        print(f"agent for {node} on {ahost}:{aport}", flush=True)
    done = threading.Event()
    for sig in (signal.SIGINT, signal.SIGTERM):
        signal.signal(sig, lambda *_: done.set())
    done.wait()
    stack.stop()
    return 0


def cmd_forward(args) -> int:
    token = _require_token(args)
    if args.action == "claim":
        _, data = _api_call(args.api, token, "POST", "/api/forwards", {"name": args.name})
        print(f"claimed {data['name']}")
    elif args.action == "set":
        if args.disable:
            payload: dict = {"disabled": True}
        else:
            if not args.target:
                raise CliError("forward set needs NODE:PORT or --disable")
            node, _, port = args.target.rpartition(":")
            if not node or not port.isdigit():
                raise CliError(f"target must be node:port, got {args.target!r}")
            payload = {"node": node, "port": int(port)}
        _, data = _api_call(args.api, token, "PUT", f"/api/forwards/{args.name}", payload)
        state = data["destination"] if data["enabled"] else "disabled"
        print(f"{data['name']} -> {state}")
    elif args.action == "mode":
        _, data = _api_call(args.api, token, "PUT", f"/api/forwards/{args.name}/mode",
                            {"mode": args.mode})
        print(f"{data['name']} mode {data['mode']}")
    elif args.action == "release":
        _api_call(args.api, token, "DELETE", f"/api/forwards/{args.name}")
        print(f"released {args.name}")
    elif args.action == "list":
        _, data = _api_call(args.api, token, "GET", "/api/forwards")
        if args.json:
            print(json.dumps(data, indent=2))
        else:
            for fwd in data:
                state = fwd["destination"] if fwd["enabled"] else "(disabled)"
                owned = "owner" if fwd["owned"] else "shared"
                print(f"{fwd['name']:<24} {state:<22} mode={fwd['mode']} {owned}")
    return 0


def cmd_job(args) -> int:
    token = _require_token(args)
    if args.action == "launch":
        _, data = _api_call(args.api, token, "POST", "/api/jobs",
                            {"node": args.node, "app_kind": args.kind,
                             "port_count": args.ports})
        print(f"job {data['job_id']} {data['state']} on {data['node']} "
              f"ports={','.join(map(str, data['ports']))}")
        if data.get("connect_link"):
            print(f"connect: {data['connect_link']}")
    elif args.action == "stop":
        _api_call(args.api, token, "DELETE", f"/api/jobs/{args.job_id}")
        print(f"stopped {args.job_id}")
    elif args.action == "list":
        _, data = _api_call(args.api, token, "GET", "/api/jobs")
        if args.json:
            print(json.dumps(data, indent=2))
        else:
            for job in data:
                link = job.get("connect_link") or "-"
                print(f"{job['job_id']:<6} {job['app_kind']:<16} {job['node']:<10} "
                      f"{job['state']:<8} {link}")
    return 0


def cmd_bench_run(args) -> int:
    if args.manifest and os.path.exists(args.manifest):
        manifest = bench_mod.load_manifest(args.manifest)
    else:
        manifest = bench_mod.builtin_manifest(args.manifest or "notebook31")
    if args.concurrency:
        manifest = bench_mod.RequestManifest(entries=manifest.entries,
                                             concurrency=args.concurrency)
    headers = {}
    token = args.token or os.environ.get("PORTAL_TOKEN")
    if token:
        headers["Authorization"] = f"Bearer {token}"
    report = bench_mod.run_benchmark(manifest, args.direct, args.portal,
                                     repetitions=args.reps, headers=headers)
    sys.stdout.buffer.write(bench_mod.emit_report(report, args.format,
                                                  histogram=args.histogram))
    return 0


def cmd_bench_rewrite(args) -> int:
    result = bench_mod.benchmark_kernels(size_mb=args.size_mb, reps=args.reps)
    print(f"input: {result['input_mb']:.1f} MiB synthetic HTML")
    for name, stats in result["kernels"].items():
        print(f"{name:<10} {stats['seconds']*1000:>9.1f} ms   {stats['mb_per_s']:>8.1f} MiB/s")
    print(f"outputs identical: {result['outputs_identical']}")
    return 0 if result["outputs_identical"] else 1


# -- parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="portalgate", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--api", default=DEFAULT_API,
                        help=f"gateway base URL (default {DEFAULT_API})")
    parser.add_argument("--token", default=None,
                        help="bearer token (default: PORTAL_TOKEN env var)")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run gateway, agents, and scheduler")
    serve.add_argument("-c", "--config", required=True)
    serve.set_defaults(func=cmd_serve)

    forward = sub.add_parser("forward", help="manage named forwards")
    fsub = forward.add_subparsers(dest="action", required=True)
    f_claim = fsub.add_parser("claim")
    f_claim.add_argument("name")
    f_set = fsub.add_parser("set")
    f_set.add_argument("name")
    f_set.add_argument("target", nargs="?", help="node:port")
    f_set.add_argument("--disable", action="store_true")
    f_mode = fsub.add_parser("mode")
    f_mode.add_argument("name")
    f_mode.add_argument("mode", help='octal permission bits, e.g. "750"')
    f_release = fsub.add_parser("release")
    f_release.add_argument("name")
    f_list = fsub.add_parser("list")
    f_list.add_argument("--json", action="store_true")
    forward.set_defaults(func=cmd_forward)

    job = sub.add_parser("job", help="manage demo application jobs")
    jsub = job.add_subparsers(dest="action", required=True)
    j_launch = jsub.add_parser("launch")
    j_launch.add_argument("--node", required=True)
    j_launch.add_argument("--kind", required=True,
                          choices=["echo-http", "echo-ws", "token-notebook", "static-site"])
    j_launch.add_argument("--ports", type=int, default=1)
    j_stop = jsub.add_parser("stop")
    j_stop.add_argument("job_id", type=int)
    j_list = jsub.add_parser("list")
    j_list.add_argument("--json", action="store_true")
    job.set_defaults(func=cmd_job)

    bench = sub.add_parser("bench", help="latency and kernel benchmarks")
    bsub = bench.add_subparsers(dest="action", required=True)
    b_run = bsub.add_parser("run", help="direct-vs-portal latency comparison")
    b_run.add_argument("--manifest", default="notebook31",
                       help="manifest file path or builtin name (default notebook31)")
    b_run.add_argument("--direct", required=True, help="direct base URL")
    b_run.add_argument("--portal", required=True,
                       help="portal base URL including the forwarding prefix")
    b_run.add_argument("--reps", type=int, default=5)
    b_run.add_argument("--concurrency", type=int, default=None,
                       help="override the manifest's concurrency")
    b_run.add_argument("--format", choices=["text", "json", "csv"], default="text")
    b_run.add_argument("--histogram", action="store_true")
    b_run.set_defaults(func=cmd_bench_run)
    b_rw = bsub.add_parser("rewrite", help="compare rewrite kernels")
    b_rw.add_argument("--size-mb", type=float, default=8.0)
    b_rw.add_argument("--reps", type=int, default=5)
    b_rw.set_defaults(func=cmd_bench_rewrite)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, bench_mod.BenchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 1


if __name__ == "__main__":
    sys.exit(main())
