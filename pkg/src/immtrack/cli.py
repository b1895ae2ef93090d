"""Command-line client for the tracking service.

Every subcommand is a thin HTTP call: file I/O and argument parsing happen
here, all tracking logic lives behind the service endpoints. By default the
app is served in-process (no socket, no separate process); pass --server to
target a running instance instead.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

import httpx
import yaml

from .errors import ConfigError, DataError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

_CATEGORY_EXIT = {"config": EXIT_CONFIG, "data": EXIT_DATA, "numerical": EXIT_NUMERICAL}


class CliError(Exception):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


class _InProcessClient:
    """httpx-compatible client that serves the ASGI app without a socket."""

    def __init__(self):
        from .service import create_app

        self._transport = httpx.ASGITransport(app=create_app())

    def request(self, method: str, url: str, **kwargs) -> httpx.Response:
        import asyncio

        async def _run():
            async with httpx.AsyncClient(
                transport=self._transport, base_url="http://immtrack.local"
            ) as client:
                return await client.request(method, url, **kwargs)

        return asyncio.run(_run())

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        return False


def _make_client(server: Optional[str]):
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    return _InProcessClient()


def _call(client, method: str, url: str, **kwargs) -> dict:
    try:
        response = client.request(method, url, **kwargs)
    except httpx.HTTPError as exc:
        raise CliError(f"cannot reach service: {exc}", EXIT_DATA)
    if response.status_code >= 400:
        try:
            body = response.json()
            category = body.get("category", "data")
            message = body.get("message", response.text)
        except (ValueError, AttributeError):
            category, message = "data", response.text
        raise CliError(f"{category} error: {message}", _CATEGORY_EXIT.get(category, 1))
    return response.json()


def _read_text(path: str, exit_code: int = EXIT_DATA) -> str:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", exit_code)


def _write_text(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    try:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_DATA)


def _load_yaml(path: str, exit_code: int = EXIT_CONFIG) -> dict:
    text = _read_text(path, exit_code)
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise CliError(f"{path} is not valid YAML: {exc}", exit_code)
    if not isinstance(data, dict):
        raise CliError(f"{path} must contain a mapping", exit_code)
    return data


# -- subcommands -------------------------------------------------------------


def _cmd_track(args, client) -> int:
    payload = {"scene_jsonl": _read_text(args.scene)}
    if args.config:
        payload["config_yaml"] = _read_text(args.config, EXIT_CONFIG)
    body = _call(client, "POST", "/track", json=payload)
    _write_text(args.out, body["trajectories_jsonl"])
    print(
        f"tracked {body['num_frames']} frames, {body['num_tracks']} trajectories",
        file=sys.stderr,
    )
    return EXIT_OK


def _cmd_eval(args, client) -> int:
    payload = {
        "predictions_jsonl": _read_text(args.pred),
        "scene_jsonl": _read_text(args.scene),
        "match_distance": args.metric_gate,
        "amota": args.amota,
    }
    body = _call(client, "POST", "/eval", json=payload)
    print(body["table"])
    if args.out:
        report = {k: body[k] for k in ("overall", "per_class", "amota", "amota_points")}
        _write_text(args.out, json.dumps(report, indent=2) + "\n")
    return EXIT_OK


def _cmd_synth(args, client) -> int:
    spec = _load_yaml(args.spec) if args.spec else {}
    body = _call(client, "POST", "/synth", json={"spec": spec, "seed": args.seed})
    _write_text(args.out, body["scene_jsonl"])
    print(f"generated {body['num_frames']} frames", file=sys.stderr)
    return EXIT_OK


def _cmd_sweep(args, client) -> int:
    grid = _load_yaml(args.sweep_grid)
    variants = grid.get("variants")
    if not isinstance(variants, list) or not variants:
        raise CliError(f"{args.sweep_grid} must define a non-empty 'variants' list", EXIT_CONFIG)
    payload = {
        "scenes": {path: _read_text(path) for path in args.scene},
        "variants": variants,
        "match_distance": args.metric_gate,
    }
    if args.config:
        payload["config_yaml"] = _read_text(args.config, EXIT_CONFIG)
    body = _call(client, "POST", "/sweep", json=payload)
    print(body["table"])
    if args.out:
        _write_text(args.out, json.dumps(body["rows"], indent=2) + "\n")
    return EXIT_OK


def _cmd_curves(args, client) -> int:
    body = _call(
        client,
        "POST",
        "/curves",
        json={"kind": args.kind, "lam": args.lam, "frames": args.frames},
    )
    parts = []
    if body.get("dw"):
        parts.append(body["dw"])
    if body.get("dbse"):
        parts.append(body["dbse"])
    _write_text(args.out, "\n\n".join(parts) + "\n")
    return EXIT_OK


def _cmd_serve(args, client) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="immtrack", description=__doc__)
    parser.add_argument("--server", default=None, help="base URL of a running service")
    sub = parser.add_subparsers(dest="command", required=True)

    p_track = sub.add_parser("track", help="run the tracker over a scene file")
    p_track.add_argument("--scene", required=True)
    p_track.add_argument("--config", default=None)
    p_track.add_argument("--out", default=None, help="trajectory output path (default stdout)")
    p_track.set_defaults(func=_cmd_track)

    p_eval = sub.add_parser("eval", help="score trajectories against ground truth")
    p_eval.add_argument("--pred", required=True, help="trajectory file from 'track'")
    p_eval.add_argument("--scene", required=True, help="scene file carrying ground truth")
    p_eval.add_argument("--metric-gate", type=float, default=2.0)
    p_eval.add_argument("--amota", action="store_true")
    p_eval.add_argument("--out", default=None, help="also write the report as JSON")
    p_eval.set_defaults(func=_cmd_eval)

    p_synth = sub.add_parser("synth", help="generate a synthetic scene")
    p_synth.add_argument("--spec", default=None, help="scenario spec YAML")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out", default=None)
    p_synth.set_defaults(func=_cmd_synth)

    p_sweep = sub.add_parser("sweep", help="run track+eval across a config grid")
    p_sweep.add_argument("--scene", required=True, action="append",
                         help="scene file with ground truth (repeatable)")
    p_sweep.add_argument("--sweep-grid", required=True, help="YAML with a 'variants' list")
    p_sweep.add_argument("--config", default=None)
    p_sweep.add_argument("--metric-gate", type=float, default=2.0)
    p_sweep.add_argument("--out", default=None)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_curves = sub.add_parser("curves", help="emit score/weight curves as columnar text")
    p_curves.add_argument("--kind", choices=("dw", "dbse", "all"), default="all")
    p_curves.add_argument("--lam", type=float, default=0.4)
    p_curves.add_argument("--frames", type=int, default=40)
    p_curves.add_argument("--out", default=None)
    p_curves.set_defaults(func=_cmd_curves)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "serve":
            return _cmd_serve(args, None)
        with _make_client(args.server) as client:
            return args.func(args, client)
    except CliError as exc:
        print(f"immtrack: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ConfigError, DataError) as exc:
        print(f"immtrack: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
