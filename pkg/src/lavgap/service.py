"""HTTP service exposing the planner, verifier and diagnostics.

Run with ``uvicorn lavgap.service:app`` (requires the ``serve`` extra).
"""

from __future__ import annotations

import logging

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from . import __version__, runner
from .schemas import CantorRequest, RunConfig, SelftestRequest

log = logging.getLogger("lavgap")

app = FastAPI(title="lavgap", version=__version__)


@app.exception_handler(runner.ConfigError)
async def _config_error(request: Request, exc: runner.ConfigError):
    return JSONResponse(status_code=422, content={"error": "invalid configuration", "detail": str(exc)})


@app.exception_handler(RequestValidationError)
async def _validation_error(request: Request, exc: RequestValidationError):
    detail = [{"loc": list(e["loc"]), "msg": e["msg"]} for e in exc.errors()]
    return JSONResponse(status_code=422, content={"error": "invalid request", "detail": detail})


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/plan")
def plan(cfg: RunConfig) -> dict:
    return runner.run_plan(cfg)


@app.post("/verify")
def verify(cfg: RunConfig) -> dict:
    return runner.run_verify(cfg)


@app.post("/table")
def table(cfg: RunConfig) -> dict:
    return runner.run_table(cfg)


@app.post("/gap")
def gap(cfg: RunConfig) -> dict:
    return runner.run_gap(cfg)


@app.post("/sweep")
def sweep(cfg: RunConfig) -> dict:
    return runner.run_sweep(cfg)


@app.post("/cantor")
def cantor(req: CantorRequest) -> dict:
    return runner.run_cantor(req)


@app.post("/algebra-selftest")
def algebra_selftest(req: SelftestRequest) -> dict:
    return runner.run_selftest(req)
