"""Command-line driver.

Runs the scenario handlers in-process by default, or posts the same requests
to a running service with ``--server URL``.  Results go to ``--out`` (CSV)
and ``--report`` (JSON), or to standard output when those are omitted.
Failures print a JSON object on standard error and exit with 2 (config) or
3 (numerical non-convergence).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from pydantic import ValidationError

from .scenario import PRESETS, ConfigError
from .service import handlers
from .service.schemas import ConditionsRequest, ScenarioRequest, SweepRequest, UwbRequest

EXIT_SERVICE = 1

ENDPOINTS = {
    "sweep": ("/sweep", SweepRequest),
    "reproduce": ("/sweep", SweepRequest),
    "check-conditions": ("/check-conditions", ConditionsRequest),
    "asymptotics": ("/asymptotics", ScenarioRequest),
    "uwb-gain": ("/uwb-gain", UwbRequest),
}


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


class _JsonErrorParser(argparse.ArgumentParser):
    """Usage errors are config errors: JSON on stderr, exit code 2."""

    def error(self, message):
        self.exit(handlers.EXIT_CONFIG, json.dumps({"error": "config_error", "message": message}) + "\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="scenario JSON file")
    common.add_argument("--preset", choices=PRESETS, help="use a built-in scenario instead of --config")
    common.add_argument("--seed", type=_u64, help="Monte Carlo seed (overrides the config)")
    common.add_argument("--units", choices=("nats", "bits"), help="rate units of the output")
    common.add_argument("--out", type=Path, help="CSV output path")
    common.add_argument("--report", type=Path, help="JSON report path")
    common.add_argument("--server", help="base URL of a running service; default is in-process")

    parser = _JsonErrorParser(prog="wssus-bounds", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_JsonErrorParser)
    p = sub.add_parser("sweep", parents=[common], help="bandwidth sweep of all bounds")
    p.add_argument("--workers", type=int, default=1, help="sweep points evaluated concurrently")
    p = sub.add_parser("check-conditions", parents=[common], help="sufficient and Taylor conditions")
    p.add_argument("--bandwidth", type=float, dest="B_hz", help="bandwidth in Hz (default: sweep B_min)")
    sub.add_parser("asymptotics", parents=[common], help="wideband slope and ratio analysis")
    p = sub.add_parser("uwb-gain", parents=[common], help="multi-eigenmode gain over one eigenmode")
    p.add_argument("--bandwidth", type=float, dest="B_hz", default=7e9, help="bandwidth in Hz")
    p = sub.add_parser("reproduce", parents=[common], help="sweep of a reference figure preset")
    p.add_argument("figure", choices=PRESETS)
    p.add_argument("--workers", type=int, default=1, help="sweep points evaluated concurrently")
    return parser


def _request(args) -> tuple[str, object, Path | None]:
    endpoint, model = ENDPOINTS[args.command]
    if args.command == "reproduce":
        if args.config is not None or args.preset is not None:
            raise ConfigError("reproduce takes the figure name only, not --config or --preset")
        source = {"preset": args.figure}
        base_dir = None
    elif args.config is not None and args.preset is not None:
        raise ConfigError("give either --config or --preset, not both")
    elif args.config is not None:
        try:
            source = {"config": json.loads(args.config.read_text())}
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        base_dir = args.config.resolve().parent
    elif args.preset is not None:
        source, base_dir = {"preset": args.preset}, None
    else:
        raise ConfigError("a scenario is required: --config PATH or --preset NAME")
    fields = {"seed": args.seed, "units": args.units}
    for extra in ("workers", "B_hz"):
        if getattr(args, extra, None) is not None:
            fields[extra] = getattr(args, extra)
    try:
        req = model.model_validate({**source, **fields})
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
    return endpoint, req, base_dir


def _absolute_csv(req, base_dir: Path | None):
    # a remote server cannot see paths relative to the caller's config file
    cfg = req.config
    if cfg is not None and getattr(cfg.scattering, "csv", None) and base_dir is not None:
        path = Path(cfg.scattering.csv)
        if not path.is_absolute():
            cfg.scattering.csv = str(base_dir / path)


def _run_local(command: str, req, base_dir):
    if command in ("sweep", "reproduce"):
        return handlers.handle_sweep(req, base_dir).model_dump()
    if command == "check-conditions":
        return handlers.handle_conditions(req, base_dir)
    if command == "asymptotics":
        return handlers.handle_asymptotics(req, base_dir)
    return handlers.handle_uwb(req, base_dir)


class _RemoteError(Exception):
    def __init__(self, code: int, body: dict):
        super().__init__(body.get("message", ""))
        self.code = code
        self.body = body


def _run_remote(server: str, endpoint: str, req) -> dict:
    import httpx

    try:
        resp = httpx.post(server.rstrip("/") + endpoint, json=req.model_dump(mode="json"), timeout=None)
    except httpx.HTTPError as exc:
        raise _RemoteError(EXIT_SERVICE, {"error": "service_error", "message": str(exc)}) from exc
    body = resp.json()
    if resp.status_code == 200:
        return body
    kind = body.get("error") if isinstance(body, dict) else None
    code = {"config_error": handlers.EXIT_CONFIG, "numerical_error": handlers.EXIT_NUMERICAL}.get(kind)
    if code is None:
        raise _RemoteError(EXIT_SERVICE, {"error": "service_error", "message": str(body)})
    raise _RemoteError(code, body)


def _json_default(obj):
    return None if isinstance(obj, float) and not math.isfinite(obj) else str(obj)


def _dump(obj) -> str:
    def clean(o):
        if isinstance(o, float) and not math.isfinite(o):
            return None
        if isinstance(o, dict):
            return {str(k): clean(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [clean(v) for v in o]
        return o

    return json.dumps(clean(obj), indent=2, sort_keys=True, default=_json_default) + "\n"


def _emit(args, result: dict) -> None:
    if args.command in ("sweep", "reproduce"):
        csv_text = result.pop("csv")
        report = {k: result[k] for k in ("scenario", "units", "summary")}
        if args.out is not None:
            args.out.write_text(csv_text)
        else:
            sys.stdout.write(csv_text)
        if args.report is not None:
            args.report.write_text(_dump(report))
        elif args.out is not None:
            sys.stdout.write(_dump(report))
        return
    text = _dump(result)
    if args.report is not None:
        args.report.write_text(text)
    else:
        sys.stdout.write(text)
    if args.out is not None:
        # flat key,value CSV of the scalar entries
        lines = ["key,value"] + [
            f"{k},{_dump(v).strip()}" for k, v in sorted(result.items()) if not isinstance(v, (dict, list))
        ]
        args.out.write_text("\n".join(lines) + "\n")


def _fail(code: int, body: dict) -> int:
    sys.stderr.write(json.dumps(body, sort_keys=True, default=_json_default) + "\n")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        endpoint, req, base_dir = _request(args)
        if args.server:
            _absolute_csv(req, base_dir)
            result = _run_remote(args.server, endpoint, req)
        else:
            result = _run_local(args.command, req, base_dir)
        _emit(args, result)
    except _RemoteError as exc:
        return _fail(exc.code, exc.body)
    except (ConfigError, handlers.NumericalError) as exc:
        return _fail(*handlers.error_payload(exc))
    return handlers.EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
