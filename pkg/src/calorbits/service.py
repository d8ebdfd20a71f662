"""HTTP service exposing the calibration-orbit analyses.

The CLI talks to this app in-process by default; the same app can be
served standalone (uvicorn calorbits.service:app).  All endpoints are
pure functions of their request bodies plus the library version, so
identical requests produce identical reports.
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__, deform, hodge, serialize, verify
from .orbits import (check_elliptic, model_calibration, orbit_report)
from .scalars import FLOAT

app = FastAPI(title="calorbits", version=__version__)


class StructureConfig(BaseModel):
    structure: str
    dim: Optional[int] = None
    m: Optional[int] = None
    complex_dim: Optional[int] = None


class OrbitRequest(StructureConfig):
    trials: int = Field(64, ge=1)
    seed: int = 0
    scalar: str = Field(FLOAT, pattern="^(float|rational)$")


class VerifyRequest(BaseModel):
    trials: int = Field(100, ge=1)
    freq: int = Field(2, ge=1)
    seed: int = 0
    scalar: str = Field(FLOAT, pattern="^(float|rational)$")
    tol: float = 1e-10


class CohomologyRequest(StructureConfig):
    freq: int = Field(2, ge=1)


class DeformRequest(StructureConfig):
    freq: int = Field(2, ge=1)
    order: int = Field(4, ge=1, le=deform.ORDER_CAP)
    t: Optional[float] = None
    tol: float = 1e-9
    seed_field: dict


def _spec(cfg: StructureConfig):
    try:
        return model_calibration(cfg.structure, dim=cfg.dim, m=cfg.m,
                                 complex_dim=cfg.complex_dim)
    except (ValueError, TypeError) as exc:
        raise HTTPException(status_code=400, detail=str(exc))


def _echo(cfg: BaseModel):
    return {"version": __version__,
            "config": {k: v for k, v in cfg.model_dump().items()
                       if v is not None}}


@app.get("/version")
def version():
    return {"name": "calorbits", "version": __version__}


@app.post("/orbit/info")
def orbit_info(req: OrbitRequest):
    spec = _spec(req)
    rep = orbit_report(spec, trials=req.trials, seed=req.seed,
                       scalar=req.scalar)
    rep.update(_echo(req))
    return rep


@app.post("/orbit/elliptic")
def orbit_elliptic(req: OrbitRequest):
    spec = _spec(req)
    rep = check_elliptic(spec, trials=req.trials, seed=req.seed,
                         scalar=req.scalar)
    rep.update(_echo(req))
    return rep


@app.post("/verify")
def verify_identities(req: VerifyRequest):
    rep = verify.identity_suite(trials=req.trials, freq_bound=req.freq,
                                seed=req.seed, scalar=req.scalar,
                                tol=req.tol)
    rep.update(_echo(req))
    return rep


@app.post("/cohomology")
def cohomology(req: CohomologyRequest):
    spec = _spec(req)
    sys = hodge.build(spec, freq_bound=req.freq)
    rep = hodge.cohomology_report(sys)
    if spec.kind == "spin7":
        dc = dict(hodge.dirac_check(sys))
        rep["dirac"] = dc
    rep.update(_echo(req))
    return rep


@app.post("/deform")
def deform_run(req: DeformRequest):
    spec = _spec(req)
    try:
        seed = deform.DeformationSeed(
            serialize.endofield_from_json(req.seed_field))
        seed.validate(spec)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    sys = hodge.build(spec, freq_bound=req.freq)
    try:
        result = deform.run(spec, sys, seed, order=req.order, tol=req.tol)
    except deform.TwoPathDisagreement as exc:
        raise HTTPException(status_code=409, detail=str(exc))
    rep = result.report()
    rep["majorant"] = deform.majorant_report(result)
    rep["period_first_order"] = serialize.multiform_to_json(
        deform.first_order_period(result))
    if req.t is not None:
        rep["closure_at_t"] = {"t": req.t,
                               "residual": deform.closure_residual(result,
                                                                   req.t)}
    rep.update(_echo(req))
    return rep
