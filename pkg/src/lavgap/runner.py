"""Command implementations shared by the service endpoints.

Every function takes a validated config and returns a JSON-ready dict that
embeds the resolved config.  Progress messages go to the ``lavgap`` logger.
"""

from __future__ import annotations

import csv
import io
import json
import logging

import numpy as np

from . import __version__
from .cantor import CantorSpec, ball_mass_constant, neighborhood_slope
from .exterior import selftest
from .planner import PlanError, plan_for_model
from .quadrature import integrate_reduced
from .schemas import CantorRequest, ModelConfig, RunConfig, SelftestRequest, parse_range
from .verify import (_jsonable, assumption_check, build_instance, coefficient_probe, functional_table,
                     gap_scan, stokes_null, verify_separating, work_tool_integrands)

log = logging.getLogger("lavgap")

SWEEP_COLUMNS = ("param", "value", "status", "admissible", "gamma", "I1_verdict", "I2_verdict",
                 "I1_exponent", "I1_log_exponent", "I2_exponent", "I2_log_exponent",
                 "I2_dyadic_slope")
SWEEP_CSV_VERSION = "1"


class ConfigError(ValueError):
    """The configuration cannot be turned into a valid instance."""


def _echo(cfg) -> dict:
    return {"lavgap_version": __version__, "config": cfg.model_dump(mode="json")}


def resolve(cfg: RunConfig):
    """Model, plan and admissibility for a config; raises ConfigError."""
    try:
        model = cfg.model.build()
        plan, check = plan_for_model(model, cfg.N, cfg.k, cfg.setup, cfg.gamma, cfg.model.planning_p0())
        plan.contact_set()
    except (PlanError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return model, plan, check


def run_plan(cfg: RunConfig) -> dict:
    _, plan, check = resolve(cfg)
    return _jsonable({**_echo(cfg), "plan": plan.to_dict(), "admissibility": check.to_dict(),
                      "ok": check.admissible})


def _instance(cfg: RunConfig):
    model, plan, check = resolve(cfg)
    return build_instance(model, plan, cfg.verify_config())


def run_verify(cfg: RunConfig) -> dict:
    inst = _instance(cfg)
    log.info("verifying setup %d (%s)", inst.plan.setup, inst.plan.name)
    report = verify_separating(inst, progress=log.info)
    if "table" in cfg.extras:
        log.info("functional table")
        report.functional_table = functional_table(inst)
    if "gap" in cfg.extras:
        log.info("gap scan")
        report.gap_witness = gap_scan(inst, cfg.t_grid)
    if "assumption" in cfg.extras:
        log.info("assumption search")
        report.assumption_witness = assumption_check(inst)
    if "continuity" in cfg.extras:
        log.info("continuity probe")
        report.continuity_constants = coefficient_probe(inst)
    out = report.to_dict()
    if "stokes" in cfg.extras:
        log.info("stokes-null residuals")
        out["stokes_null"] = stokes_null(inst)
    out["resolved_config"] = out.pop("config")
    out.update(_echo(cfg))
    out["ok"] = report.passed and inst.conditions.admissible
    return _jsonable(out)


def run_table(cfg: RunConfig) -> dict:
    inst = _instance(cfg)
    log.info("functional table")
    table = functional_table(inst)
    return _jsonable({**_echo(cfg), "resolved_config": inst.config.to_dict(), "functional_table": table,
                      "ok": table["passed"]})


def run_gap(cfg: RunConfig) -> dict:
    inst = _instance(cfg)
    log.info("gap scan")
    gap = gap_scan(inst, cfg.t_grid)
    log.info("stokes-null residuals")
    stokes = stokes_null(inst)
    return _jsonable({**_echo(cfg), "resolved_config": inst.config.to_dict(), "gap_witness": gap,
                      "stokes_null": stokes,
                      "ok": gap["found"] and stokes["passed"]})


def _sweep_row(cfg: RunConfig, value: float) -> dict:
    row = {"param": cfg.sweep_param, "value": value}
    data = cfg.model.model_dump()
    data[cfg.sweep_param] = value
    try:
        model = ModelConfig(**data).build()
        plan, check = plan_for_model(model, cfg.N, cfg.k, cfg.setup, cfg.gamma,
                                     data["p0"] if cfg.model.family == "double-phase" else None)
        contact = plan.contact_set()
    except (PlanError, ValueError) as exc:
        row.update(status=f"invalid: {exc}")
        return row
    I1, I2 = work_tool_integrands(model, plan, contact)
    fit = cfg.quadrature.reduced_fit_levels
    r1 = integrate_reduced(I1, log_t_min=-(2.0 ** fit), fit_levels=fit)
    r2 = integrate_reduced(I2, log_t_min=-(2.0 ** fit), fit_levels=fit)
    row.update(status="ok", admissible=check.admissible, gamma=plan.gamma,
               I1_verdict=r1.verdict, I2_verdict=r2.verdict,
               I1_exponent=I1.exponent, I1_log_exponent=I1.log_exponent,
               I2_exponent=I2.exponent, I2_log_exponent=I2.log_exponent,
               I2_dyadic_slope=r2.details["dyadic_slope"])
    return row


def _flips(rows: list[dict], key: str) -> list[dict]:
    ok = [r for r in rows if r["status"] == "ok"]
    return [{"from": a["value"], "to": b["value"], "before": a[key], "after": b[key]}
            for a, b in zip(ok, ok[1:]) if a[key] != b[key]]


def run_sweep(cfg: RunConfig) -> dict:
    if not cfg.sweep_range:
        raise ConfigError("sweep needs a range (start:stop:step)")
    if cfg.sweep_param not in cfg.model.parameters():
        raise ConfigError(f"cannot sweep {cfg.sweep_param!r} for a {cfg.model.family} model; "
                          f"choose from {', '.join(cfg.model.parameters())}")
    try:
        values = parse_range(cfg.sweep_range)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rows = []
    for v in values:
        log.info("sweep %s = %g", cfg.sweep_param, v)
        rows.append(_sweep_row(cfg, v))
    return _jsonable({**_echo(cfg), "rows": rows, "columns": list(SWEEP_COLUMNS),
                      "I2_flips": _flips(rows, "I2_verdict"),
                      "admissibility_flips": _flips(rows, "admissible"), "ok": True})


def sweep_csv(result: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    buf.write(f"# lavgap-sweep v{SWEEP_CSV_VERSION}\n")
    buf.write(f"# config: {json.dumps(result['config'], sort_keys=True)}\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in result["rows"]:
        writer.writerow(["" if row.get(c) is None else row.get(c) for c in SWEEP_COLUMNS])
    return buf.getvalue()


def run_cantor(req: CantorRequest) -> dict:
    try:
        spec = CantorSpec(req.family, gamma=req.gamma, lam=req.lam, power=req.power)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    depth = min(req.depth, spec.max_depth)
    out = {
        "lavgap_version": __version__,
        "config": req.model_dump(mode="json"),
        "set": spec.describe(),
        "lengths": [spec.length(j) for j in range(min(spec.max_depth, 12) + 1)],
        "distance_error_bound": spec.distance_error_bound(depth),
    }
    if req.family == "generalized":
        log.info("neighborhood slope")
        out["neighborhood_slope"] = neighborhood_slope(spec, (req.t_min, req.t_max))
        log.info("ball mass constant")
        out["ball_mass"] = ball_mass_constant(spec, (req.t_min, req.t_max), seed=req.seed)
    else:
        ts = np.geomspace(max(req.t_min, spec.length(depth) * 16), req.t_max, 9)
        out["neighborhood"] = [spec.neighborhood_volume(float(t), depth) for t in ts]
    if req.include_generation:
        out["generation_csv"] = spec.generation(depth).to_csv()
    out["ok"] = True
    return _jsonable(out)


def run_selftest(req: SelftestRequest) -> dict:
    result = selftest(req.cases, req.seed, req.max_N)
    return {"lavgap_version": __version__, "config": req.model_dump(mode="json"), **result,
            "ok": result["passed"]}
