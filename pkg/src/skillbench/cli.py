"""Command-line entry point.

Default mode serves the HTTP/WebSocket API (and the browser console when a
built frontend directory is present). ``--repl`` runs an embedded session on
stdin/stdout with no server; ``--connect`` turns the CLI into a thin client
of a running server, sharing the exact same command syntax.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx
import uvicorn

from .scene import load_scene
from .server import create_app
from .session import Workbench


def _print_response(payload: dict) -> int:
    if "error" in payload:
        err = payload["error"]
        print(f"error: {err.get('message')}", file=sys.stderr)
        if "offset" in err:
            print(" " * err["offset"] + "^", file=sys.stderr)
        if err.get("suggestions"):
            print(f"did you mean: {', '.join(err['suggestions'])}?", file=sys.stderr)
        return 1
    if "event_id" in payload:
        print(f"task {payload['event_id']} queued")
    else:
        print(json.dumps(payload.get("result"), indent=2))
    return 0


def run_repl(workbench: Workbench, snapshot_path: str | None) -> int:
    """Line-oriented loop: one command per line, errors to stderr. Action
    commands run to their outcome before the next prompt."""
    interactive = sys.stdin.isatty()
    if interactive:
        print("skillbench repl; one command per line, Ctrl-D to exit")
    status = 0
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        response = workbench.submit(line)
        status = _print_response(response)
        if "event_id" in response:
            for outcome in workbench.run_until_idle():
                detail = f": {outcome.detail}" if outcome.detail else ""
                print(f"task {outcome.task_id} {outcome.status}{detail}")
    if snapshot_path:
        workbench.snapshot(snapshot_path)
        print(f"graph snapshot written to {snapshot_path}", file=sys.stderr)
    return status


def run_client(url: str) -> int:
    """Thin-client REPL posting each line to a running server."""
    endpoint = url.rstrip("/") + "/api/command"
    if sys.stdin.isatty():
        print(f"connected to {endpoint}; one command per line, Ctrl-D to exit")
    status = 0
    with httpx.Client(timeout=30.0) as client:
        for line in sys.stdin:
            line = line.strip()
            if not line:
                continue
            try:
                reply = client.post(endpoint, json={"text": line})
                reply.raise_for_status()
            except httpx.HTTPError as exc:
                print(f"request failed: {exc}", file=sys.stderr)
                status = 1
                continue
            status = _print_response(reply.json())
    return status


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="skillbench",
        description="Instruction-driven pick-and-place workbench",
    )
    parser.add_argument("--scene", help="scene YAML file (default: built-in six-brick table)")
    parser.add_argument("--port", type=int, default=8000, help="HTTP port (serve mode)")
    parser.add_argument("--host", default="127.0.0.1", help="bind address (serve mode)")
    parser.add_argument(
        "--headless", action="store_true", help="serve the API only, without the browser console"
    )
    parser.add_argument("--snapshot", help="write a knowledge-graph snapshot here on exit")
    parser.add_argument("--load", help="restore the knowledge graph from a snapshot at startup")
    parser.add_argument("--repl", action="store_true", help="run an embedded REPL, no server")
    parser.add_argument("--connect", metavar="URL", help="REPL against a running server")
    parser.add_argument(
        "--pace",
        type=float,
        default=None,
        help="seconds of wall time per control cycle (0 = as fast as possible)",
    )
    args = parser.parse_args(argv)

    if args.connect:
        return run_client(args.connect)

    scene = load_scene(args.scene) if args.scene else None
    workbench = Workbench(scene=scene, load_path=args.load)

    if args.repl:
        return run_repl(workbench, args.snapshot)

    frontend = None
    if not args.headless:
        candidate = Path(__file__).resolve().parents[2] / "frontend"
        if (candidate / "index.html").is_file() and (candidate / "dist").is_dir():
            frontend = str(candidate)
    app = create_app(
        workbench=workbench,
        pace=args.pace,
        frontend_dir=frontend,
        snapshot_path=args.snapshot,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
