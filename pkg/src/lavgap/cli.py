"""Command-line client for the lavgap service.

By default requests are served in-process; ``--server URL`` sends them to a
running instance instead.  Final artifacts go to stdout (or ``--output``),
progress to stderr.  Exit status: 0 positive verdict, 1 negative verdict,
2 invalid configuration or request failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import httpx
import numpy as np

from . import __version__
from .runner import sweep_csv

MODEL_FLAGS = ("p", "q", "alpha", "beta", "kappa", "p0", "p_minus", "p_plus", "t_clamp")
RUN_COMMANDS = ("plan", "verify", "table", "gap", "sweep")


class RequestFailed(Exception):
    def __init__(self, payload: dict):
        super().__init__(payload.get("error", "request failed"))
        self.payload = payload


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="RunConfig JSON; flags override its fields")
    p.add_argument("--model", choices=("double-phase", "borderline", "variable-exponent"))
    for name in MODEL_FLAGS:
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=float)
    p.add_argument("--N", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--setup", help="auto or 1..5")
    p.add_argument("--gamma", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--pairing-tol", type=float)
    p.add_argument("--table-tol", type=float)
    p.add_argument("--stokes-tol", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lavgap", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"lavgap {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--server", help="base URL of a running lavgap service")
    common.add_argument("--output", type=Path, help="write the artifact here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--quiet", action="store_true", help="suppress progress messages")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, text in (("plan", "choose a setup and check admissibility"),
                       ("verify", "build the separating pair and check its conditions"),
                       ("table", "separating-functional table"),
                       ("gap", "gap scan and smooth-form residuals")):
        p = sub.add_parser(name, parents=[common], help=text)
        _add_run_flags(p)
        if name == "verify":
            p.add_argument("--extras", default="",
                           help="comma list from table,stokes,gap,assumption,continuity")
        if name in ("verify", "gap"):
            p.add_argument("--t-grid", help="geometric grid tmin:tmax:count for the gap scan")

    p = sub.add_parser("sweep", parents=[common], help="parameter grid of work-tool verdicts")
    _add_run_flags(p)
    p.add_argument("--param", help="model parameter to sweep (default q)")
    p.add_argument("--range", dest="sweep_range", help="start:stop:step")
    p.add_argument("--q-range", help="shorthand for --param q --range ...")

    p = sub.add_parser("cantor", parents=[common], help="Cantor set and measure diagnostics")
    p.add_argument("--family", choices=("generalized", "meager"), default="generalized")
    p.add_argument("--lam", type=float, default=0.25)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--power", type=int, default=1)
    p.add_argument("--depth", type=int, default=6)
    p.add_argument("--t-min", type=float, default=1e-6)
    p.add_argument("--t-max", type=float, default=1e-2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--generation", action="store_true", help="include the interval generation CSV")

    p = sub.add_parser("algebra-selftest", parents=[common], help="exterior algebra property suite")
    p.add_argument("--cases", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-N", type=int, default=6)
    return parser


def _geometric_grid(text: str) -> list[float]:
    try:
        lo, hi, count = text.split(":")
        return np.geomspace(float(lo), float(hi), int(count)).tolist()
    except ValueError as exc:
        raise RequestFailed({"error": "invalid configuration", "detail": f"bad --t-grid {text!r}"}) from exc


def run_config(args: argparse.Namespace) -> dict:
    """Merge the optional config file with command-line overrides."""
    cfg: dict = {}
    if args.config is not None:
        try:
            cfg = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise RequestFailed({"error": "invalid configuration", "detail": str(exc)}) from exc
    cfg["command"] = args.command
    model = dict(cfg.get("model") or {})
    if args.model is not None:
        if model.get("family") not in (None, args.model):
            model = {}
        model["family"] = args.model
    for name in MODEL_FLAGS:
        if getattr(args, name) is not None:
            model[name] = getattr(args, name)
    cfg["model"] = model
    for name in ("N", "k", "gamma", "seed"):
        if getattr(args, name) is not None:
            cfg[name] = getattr(args, name)
    if args.setup is not None:
        cfg["setup"] = args.setup if args.setup == "auto" else _int_or_text(args.setup)
    tolerances = dict(cfg.get("tolerances") or {})
    for flag, key in (("pairing_tol", "pairing"), ("table_tol", "table"), ("stokes_tol", "stokes")):
        if getattr(args, flag) is not None:
            tolerances[key] = getattr(args, flag)
    if tolerances:
        cfg["tolerances"] = tolerances
    if getattr(args, "extras", ""):
        cfg["extras"] = [e.strip() for e in args.extras.split(",") if e.strip()]
    if getattr(args, "t_grid", None):
        cfg["t_grid"] = _geometric_grid(args.t_grid)
    if args.command == "sweep":
        if args.q_range:
            cfg["sweep_param"], cfg["sweep_range"] = "q", args.q_range
        if args.param:
            cfg["sweep_param"] = args.param
        if args.sweep_range:
            cfg["sweep_range"] = args.sweep_range
        # the swept value replaces the base one, so the range start stands in when it is absent
        param, spread = cfg.get("sweep_param", "q"), cfg.get("sweep_range")
        if spread and model.get(param) is None:
            model[param] = spread.split(":")[0]  # validated as a float by the service
    if args.output is not None:
        cfg.setdefault("outputs", {})[args.command] = str(args.output)
    return cfg


def _int_or_text(text: str):
    try:
        return int(text)
    except ValueError:
        return text


def request_body(args: argparse.Namespace) -> dict:
    if args.command in RUN_COMMANDS:
        return run_config(args)
    if args.command == "cantor":
        return {"family": args.family, "lam": args.lam, "gamma": args.gamma, "power": args.power,
                "depth": args.depth, "t_min": args.t_min, "t_max": args.t_max, "seed": args.seed,
                "include_generation": args.generation}
    return {"cases": args.cases, "seed": args.seed, "max_N": args.max_N}


def post(path: str, body: dict, server: str | None) -> dict:
    if server:
        client = httpx.Client(base_url=server, timeout=None)
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            from fastapi.testclient import TestClient
        from .service import app
        client = TestClient(app)
    try:
        with client:
            response = client.post(path, json=body)
    except httpx.HTTPError as exc:
        raise RequestFailed({"error": "request failed", "detail": str(exc)}) from exc
    try:
        payload = response.json()
    except ValueError:
        payload = {"error": "non-JSON response", "detail": response.text}
    if response.status_code >= 400:
        if not isinstance(payload, dict) or "error" not in payload:
            payload = {"error": f"HTTP {response.status_code}", "detail": payload}
        raise RequestFailed(payload)
    return payload


def render(command: str, result: dict, fmt: str | None) -> str:
    fmt = fmt or ("csv" if command == "sweep" else "json")
    if fmt == "csv":
        if command == "sweep":
            return sweep_csv(result)
        if command == "cantor" and "generation_csv" in result:
            return result["generation_csv"]
        if command == "verify":
            lines = ["condition,passed"]
            lines += [f"{name},{int(bool(c.get('passed')))}" for name, c in result["conditions"].items()]
            return "\n".join(lines) + "\n"
        raise RequestFailed({"error": "invalid configuration",
                             "detail": f"no CSV form for {command}"})
    return json.dumps(result, indent=2, sort_keys=True) + "\n"


def _exit_code(command: str, result: dict) -> int:
    if command == "sweep":
        return 0 if result.get("I2_flips") else 1
    return 0 if result.get("ok") else 1


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    log = logging.getLogger("lavgap")
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("lavgap: %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.WARNING if args.quiet else logging.INFO)
    try:
        result = post("/" + args.command, request_body(args), args.server)
        text = render(args.command, result, args.format)
    except RequestFailed as exc:
        sys.stderr.write(json.dumps(exc.payload, sort_keys=True) + "\n")
        return 2
    finally:
        log.removeHandler(handler)
    if args.output is not None:
        args.output.write_text(text)
    else:
        sys.stdout.write(text)
    return _exit_code(args.command, result)


if __name__ == "__main__":
    sys.exit(main())
