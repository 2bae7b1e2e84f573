"""Command-line client for the HTTP service.

Every subcommand builds one request and sends it to the service; by
default the app is mounted in-process (no server needed), while
--server targets a running instance.  Exit codes: 0 success, 2 input
error, 3 domain error (e.g. an unidentifiable calibration).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import httpx

_DEG2 = (180.0 / math.pi) ** 2

_EXIT_BY_STATUS = {400: 2, 404: 2, 409: 3, 422: 2}


class CommandError(Exception):
    """Carries the exit code a failed command should produce."""

    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


class Client:
    """Thin JSON-over-HTTP wrapper; in-process unless --server is given."""

    def __init__(self, server: str | None):
        if server is None:
            from .service import create_app

            transport = httpx.ASGITransport(app=create_app())
            self._client = httpx.Client(
                transport=transport, base_url="http://doa-lab.internal", timeout=None
            )
        else:
            self._client = httpx.Client(base_url=server, timeout=None)

    def request(self, method: str, path: str, payload: dict | None = None) -> dict:
        try:
            response = self._client.request(method, path, json=payload)
        except httpx.HTTPError as exc:
            raise CommandError(f"cannot reach service: {exc}", 2) from exc
        if response.status_code >= 400:
            try:
                detail = response.json().get("detail", response.text)
            except ValueError:
                detail = response.text
            exit_code = _EXIT_BY_STATUS.get(response.status_code, 1)
            raise CommandError(f"error: {detail}", exit_code)
        return response.json()

    def close(self) -> None:
        self._client.close()


def _print_json(doc: dict) -> None:
    print(json.dumps(doc, indent=2))


def _head_payload(args: argparse.Namespace) -> dict:
    return {
        "ear_distance_m": args.ear_distance,
        "speed_of_sound_mps": args.speed_of_sound,
    }


def _load_params_file(path: str) -> dict:
    """Accept a flat params dict or an optimizer best_params.json."""
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise CommandError(f"error: cannot read params file: {exc}", 2) from exc
    except ValueError as exc:
        raise CommandError(f"error: bad params JSON: {exc}", 2) from exc
    if isinstance(data, dict) and "params" in data and isinstance(data["params"], dict):
        data = data["params"]
    if not isinstance(data, dict):
        raise CommandError("error: params file must hold a JSON object", 2)
    return data


def _parse_frame_sizes(text: str) -> list[float]:
    try:
        sizes = [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise CommandError(f"error: bad --frame-sizes value: {exc}", 2) from exc
    if not sizes:
        raise CommandError("error: --frame-sizes needs at least one value", 2)
    return sizes


# ---------------------------------------------------------------------------
# Subcommands


def cmd_simulate(client: Client, args: argparse.Namespace) -> dict:
    payload = {
        "out_dir": args.out,
        "suite": args.suite,
        "seed": args.seed,
        "duration_s": args.duration,
        "head": _head_payload(args),
    }
    return client.request("POST", "/simulate", payload)


def cmd_estimate(client: Client, args: argparse.Namespace) -> dict:
    payload = {
        "wav": args.wav,
        "out_csv": args.out,
        "head": _head_payload(args),
    }
    if args.params is not None:
        payload["params"] = _load_params_file(args.params)
    return client.request("POST", "/estimate", payload)


def cmd_evaluate(client: Client, args: argparse.Namespace) -> dict:
    payload = {"estimates": args.estimates, "annotation": args.annotation}
    doc = client.request("POST", "/evaluate", payload)
    metrics = doc.get("metrics", {})
    if args.degrees and metrics.get("mse") is not None:
        metrics["mse_deg2"] = metrics["mse"] * _DEG2
    if metrics.get("no_speech"):
        doc["marker"] = "no speech windows"
    return doc


def cmd_optimize(client: Client, args: argparse.Namespace) -> dict:
    payload = {
        "manifest": args.manifest,
        "out_dir": args.out,
        "method": args.method,
        "objective": args.objective,
        "trials": args.trials,
        "seed": args.seed,
        "space": args.space,
        "dataset": args.dataset,
        "lam": args.lam,
        "head": _head_payload(args),
    }
    return client.request("POST", "/optimize", payload)


def cmd_latency(client: Client, args: argparse.Namespace) -> dict:
    payload = {
        "manifest": args.manifest,
        "frame_sizes_s": _parse_frame_sizes(args.frame_sizes),
        "repeats": args.repeats,
        "head": _head_payload(args),
    }
    if args.params is not None:
        payload["params"] = _load_params_file(args.params)
    doc = client.request("POST", "/latency", payload)
    if args.out is not None:
        Path(args.out).write_text(json.dumps(doc, indent=2) + "\n")
    return doc


def cmd_calibrate(client: Client, args: argparse.Namespace) -> dict:
    payload = {
        "observations": args.observations,
        "speed_of_sound_mps": args.speed_of_sound,
        "out": args.out,
    }
    return client.request("POST", "/calibrate", payload)


def cmd_contour(client: Client, args: argparse.Namespace) -> dict:
    payload = {
        "trials": args.trials,
        "out": args.out,
        "x": args.x,
        "y": args.y,
        "stat": args.stat,
        "bins": args.bins,
    }
    return client.request("POST", "/contour", payload)


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return 0


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="doa-lab",
        description=(
            "Binaural direction-of-arrival toolkit: synthesize scenes, run "
            "the estimation pipeline, score runs, search parameters, and "
            "benchmark latency."
        ),
    )
    parser.add_argument(
        "--server",
        default=None,
        help="base URL of a running service; default runs in-process",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_head_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--ear-distance", type=float, default=0.255,
                       help="microphone separation in meters")
        p.add_argument("--speed-of-sound", type=float, default=343.0,
                       help="speed of sound in m/s")

    p = sub.add_parser("simulate", help="render a scene suite to WAV + annotations")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--suite", default=None,
                   help="scene suite (or single scene) JSON; default: built-in suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--duration", type=float, default=8.0,
                   help="per-scene duration for the built-in suite (seconds)")
    add_head_flags(p)
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("estimate", help="run the pipeline on a stereo WAV")
    p.add_argument("--wav", required=True, help="two-channel input WAV")
    p.add_argument("--out", required=True, help="output estimates CSV")
    p.add_argument("--params", default=None,
                   help="params JSON (flat dict or optimizer best_params.json)")
    add_head_flags(p)
    p.set_defaults(handler=cmd_estimate)

    p = sub.add_parser("evaluate", help="score an estimates CSV against an annotation")
    p.add_argument("--estimates", required=True, help="estimates CSV")
    p.add_argument("--annotation", required=True, help="annotation JSON")
    p.add_argument("--degrees", action="store_true",
                   help="also report squared error in degrees^2")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("optimize", help="search pipeline parameters on a dataset")
    p.add_argument("--manifest", required=True, help="dataset manifest JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--method", choices=("grid", "tpe", "random"), default="tpe")
    p.add_argument("--objective",
                   choices=("classification", "doa", "joint", "jointreg"),
                   default="classification")
    p.add_argument("--trials", type=int, default=100,
                   help="trial budget (ignored by grid)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--space", default=None, help="search-space JSON; default built-in")
    p.add_argument("--dataset", choices=("train", "test", "all"), default="train")
    p.add_argument("--lam", type=float, default=0.5,
                   help="frame-size regularization weight (jointreg)")
    add_head_flags(p)
    p.set_defaults(handler=cmd_optimize)

    p = sub.add_parser("latency", help="measure detection latency per frame size")
    p.add_argument("--manifest", required=True, help="dataset manifest JSON")
    p.add_argument("--frame-sizes", required=True,
                   help="comma-separated frame sizes in seconds, e.g. 0.35,0.45,0.6")
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--params", default=None,
                   help="params JSON (frame size is overridden per group)")
    p.add_argument("--out", default=None, help="optional output JSON path")
    add_head_flags(p)
    p.set_defaults(handler=cmd_latency)

    p = sub.add_parser("calibrate", help="fit ear distance from (angle, delay) pairs")
    p.add_argument("--observations", required=True,
                   help="CSV with azimuth_rad,itd_s rows")
    p.add_argument("--speed-of-sound", type=float, default=343.0)
    p.add_argument("--out", default=None, help="optional output JSON path")
    p.set_defaults(handler=cmd_calibrate)

    p = sub.add_parser("contour", help="bin trials into a plot-ready objective grid")
    p.add_argument("--trials", required=True, help="trials JSONL from optimize")
    p.add_argument("--x", required=True,
                   help="x axis: frame_size_s, step_fraction, delta_low, delta_high")
    p.add_argument("--y", required=True, help="y axis: same choices as --x")
    p.add_argument("--stat", choices=("min", "mean"), default="min")
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--out", required=True, help="output grid CSV")
    p.set_defaults(handler=cmd_contour)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(handler=None)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "serve":
        return cmd_serve(args)
    client = Client(args.server)
    try:
        doc = args.handler(client, args)
    except CommandError as exc:
        print(str(exc), file=sys.stderr)
        return exc.exit_code
    finally:
        client.close()
    _print_json(doc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
