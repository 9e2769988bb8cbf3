"""Command line client for the experiment service.

    risjoint run --preset fig3 --trials 20 --out results/
    risjoint run --config my.cfg --methods proposed,genie_ls --workers 4
    risjoint presets list
    risjoint version

Requests go to the HTTP API. By default the app is served in-process; with
``--server URL`` they go to a running ``risjoint serve`` instead.

Exit codes: 0 success, 1 config error, 2 experiment aborted (more than half
the trials failed at some grid point; partial results are still written).
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import warnings

from .errors import ConfigError
from .harness.config import load_config
from .harness.experiment import TrialRecord
from .harness.outputs import emit_outputs, write_trials_csv
from .service.schemas import (ErrorBody, PresetInfo, RunRequest, RunResponse, VersionInfo,
                              decode_snr)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ABORTED = 2


def _client(server):
    if server:
        import httpx
        return httpx.Client(base_url=server, timeout=None)
    with warnings.catch_warnings():
        # starlette nags about httpx, which is what the test client runs on
        warnings.filterwarnings("ignore", message="Using `httpx` with")
        from fastapi.testclient import TestClient

    from .service.app import app
    return TestClient(app)


def _fail(message, code):
    print(f"error: {message}", file=sys.stderr)
    return code


def _write(resp: RunResponse, out_dir, per_trial):
    from .service.app import table_from_model

    tables = [table_from_model(t) for t in resp.tables]
    paths = emit_outputs(tables, out_dir, stem=resp.name, title=resp.name)
    if per_trial and resp.trials is not None:
        records = []
        for t in resp.trials:
            data = t.model_dump()
            data["snr_db"] = decode_snr(t.snr_db)
            records.append(TrialRecord(**data))
        paths.append(write_trials_csv(records, os.path.join(out_dir, f"{resp.name}_trials.csv")))
    with open(os.path.join(out_dir, f"{resp.name}.cfg"), "w", encoding="utf-8") as fh:
        fh.write(resp.config_text)
    for p in paths:
        print(p)


def cmd_run(args):
    if (args.config is None) == (args.preset is None):
        return _fail("give exactly one of --config or --preset", EXIT_CONFIG)
    req = {"workers": args.workers, "per_trial": args.per_trial}
    if args.config is not None:
        try:
            load_config(args.config)  # fail early with a local error message
            with open(args.config, encoding="utf-8") as fh:
                req["config_text"] = fh.read()
        except (ConfigError, OSError) as exc:
            return _fail(str(exc), EXIT_CONFIG)
    else:
        req["preset"] = args.preset
    if args.trials is not None:
        req["trials"] = args.trials
    if args.seed is not None:
        req["seed"] = args.seed
    if args.methods is not None:
        req["methods"] = [m.strip() for m in args.methods.split(",") if m.strip()]
    if args.timing:
        req["record_timing"] = True
    try:
        body = RunRequest(**req).model_dump(exclude_none=True)
    except ValueError as exc:
        return _fail(str(exc), EXIT_CONFIG)

    with _client(args.server) as client:
        r = client.post("/experiments", json=body)
    if r.status_code == 200:
        _write(RunResponse.model_validate(r.json()), args.out, args.per_trial)
        return EXIT_OK
    if r.status_code in (400, 422):
        detail = r.json().get("detail")
        msg = detail.get("message") if isinstance(detail, dict) else str(detail)
        return _fail(msg, EXIT_CONFIG)
    if r.status_code == 409:
        err = ErrorBody.model_validate(r.json()["detail"])
        if err.partial is not None:
            _write(err.partial, args.out, False)
        return _fail(f"experiment aborted: {err.message}", EXIT_ABORTED)
    return _fail(f"server answered {r.status_code}: {r.text}", EXIT_CONFIG)


def cmd_presets(args):
    with _client(args.server) as client:
        if args.action == "list":
            for info in client.get("/presets").json():
                info = PresetInfo.model_validate(info)
                print(f"{info.name}\t{info.description}")
            return EXIT_OK
        r = client.get(f"/presets/{args.name}")
    if r.status_code != 200:
        return _fail(r.json()["detail"]["message"], EXIT_CONFIG)
    sys.stdout.write(PresetInfo.model_validate(r.json()).config_text)
    return EXIT_OK


def cmd_version(args):
    with _client(args.server) as client:
        info = VersionInfo.model_validate(client.get("/version").json())
    print(f"risjoint {info.version}")
    return EXIT_OK


def cmd_serve(args):
    import uvicorn

    uvicorn.run("risjoint.service.app:app", host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="risjoint", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte Carlo experiment")
    run.add_argument("--config", metavar="PATH")
    run.add_argument("--preset", metavar="NAME")
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--out", metavar="DIR", default=".")
    run.add_argument("--methods", metavar="LIST", help="comma separated, e.g. proposed,genie_ls")
    run.add_argument("--workers", metavar="COUNT", type=int, default=1)
    run.add_argument("--per-trial", action="store_true", help="also write raw per-trial records")
    run.add_argument("--timing", action="store_true", help="fill the wall_time column")
    run.add_argument("--server", metavar="URL")
    run.set_defaults(func=cmd_run)

    presets = sub.add_parser("presets", help="list or show presets")
    presets.add_argument("action", choices=["list", "show"])
    presets.add_argument("name", nargs="?")
    presets.add_argument("--server", metavar="URL")
    presets.set_defaults(func=cmd_presets)

    version = sub.add_parser("version", help="print the package version")
    version.add_argument("--server", metavar="URL")
    version.set_defaults(func=cmd_version)

    serve = sub.add_parser("serve", help="serve the HTTP API")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(func=cmd_serve, server=None)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "presets" and args.action == "show" and not args.name:
        parser.error("presets show needs a NAME")
    if getattr(args, "workers", 1) < 1:
        return _fail("--workers must be at least 1", EXIT_CONFIG)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
