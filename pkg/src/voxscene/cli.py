"""Command-line entry points: serve, pipeline, assets list.

ASCRIBE_LOG controls log verbosity (debug/info/warning/error or a numeric
level); default is warning.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import os
import sys
from pathlib import Path

from .assets import AssetStore, RootNotFound, scan_assets
from .pipeline import PipelineError, config_from_dict, load_config, pipeline_run
from .session import Session

LOG_ENV = "ASCRIBE_LOG"


def _setup_logging():
    raw = os.environ.get(LOG_ENV, "warning").strip().lower()
    level = {"debug": logging.DEBUG, "info": logging.INFO, "warning": logging.WARNING,
             "error": logging.ERROR}.get(raw)
    if level is None:
        try:
            level = int(raw)
        except ValueError:
            level = logging.WARNING
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s %(message)s")


def _default_viewer_dir() -> Path | None:
    candidates = [
        Path.cwd() / "frontend" / "dist",
        Path(__file__).resolve().parent.parent.parent / "frontend" / "dist",
    ]
    for c in candidates:
        if (c / "index.html").is_file():
            return c
    return None


def cmd_serve(args) -> int:
    try:
        store = AssetStore(args.assets_dir)
    except RootNotFound as e:
        print(f"error: RootNotFound: {e}", file=sys.stderr)
        return 2
    session = Session(assets=store, recenter_imports=args.recenter_imports)
    viewer_dir = Path(args.viewer_dir) if args.viewer_dir else _default_viewer_dir()

    from .netserver import SceneServer

    server = SceneServer(session, token=args.session_token, viewer_dir=viewer_dir)
    tcp_port = args.tcp_port if args.tcp_port is not None else args.port + 1
    try:
        asyncio.run(server.serve_forever(args.bind, args.port, tcp_port))
    except KeyboardInterrupt:
        pass
    return 0


def cmd_pipeline(args) -> int:
    try:
        if args.config:
            config = load_config(args.config)
        else:
            print("error: PipelineError: --config is required", file=sys.stderr)
            return 2
        if args.stack_dir:
            config = config_from_dict({**config.to_json_dict(), "stack_dir": args.stack_dir})
        if args.format:
            d = config.to_json_dict()
            d["export"]["format"] = args.format
            config = config_from_dict(d)
        report = pipeline_run(config, args.out)
    except Exception as e:
        # single-line machine-readable failure
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    print(json.dumps({
        "component_count": report["component_count"],
        "out_dir": str(args.out),
        "meshes": [v["mesh_file"] for v in report["vois"]],
    }))
    return 0


def cmd_assets_list(args) -> int:
    try:
        entries = scan_assets(args.assets_dir)
    except RootNotFound as e:
        print(f"error: RootNotFound: {e}", file=sys.stderr)
        return 2
    for e in entries:
        extra = f" slices={e.slice_count}" if e.slice_count is not None else ""
        print(f"{e.kind.value:12s} {e.size_bytes:10d}  {e.name}{extra}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="voxscene",
                                description="scientific-scene engine and session server")
    sub = p.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="host a collaborative session")
    serve.add_argument("--assets-dir", required=True)
    serve.add_argument("--bind", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8765)
    serve.add_argument("--tcp-port", type=int, default=None,
                       help="raw TCP channel port (default: port+1)")
    serve.add_argument("--session-token", default="")
    serve.add_argument("--recenter-imports", action="store_true")
    serve.add_argument("--viewer-dir", default=None,
                       help="static viewer bundle (default: frontend/dist when present)")
    serve.set_defaults(func=cmd_serve)

    pipe = sub.add_parser("pipeline", help="run the batch stack->mesh pipeline")
    pipe.add_argument("--config", required=True)
    pipe.add_argument("--out", default="out")
    pipe.add_argument("--stack-dir", default=None, help="override config stack_dir")
    pipe.add_argument("--format", choices=("stl", "obj"), default=None,
                      help="override export format")
    pipe.set_defaults(func=cmd_pipeline)

    assets = sub.add_parser("assets", help="asset catalog tools")
    assets_sub = assets.add_subparsers(dest="assets_command", required=True)
    lst = assets_sub.add_parser("list", help="print the asset catalog")
    lst.add_argument("--assets-dir", required=True)
    lst.set_defaults(func=cmd_assets_list)

    return p


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
