"""FastAPI application: ``uvicorn wssus_bounds.service.app:app``."""

from __future__ import annotations

import math

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from ..scenario import PRESETS, ConfigError, preset
from ..sweep import NumericalError
from . import handlers
from .schemas import ConditionsRequest, ErrorResponse, ScenarioRequest, SweepRequest, SweepResponse, UwbRequest

app = FastAPI(title="wssus-bounds", version="0.1.0")

STATUS = {handlers.EXIT_CONFIG: 422, handlers.EXIT_NUMERICAL: 500}


def _clean(obj):
    # JSON has no NaN/inf; they are sent as null
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_clean(v) for v in obj]
    return obj


@app.exception_handler(ConfigError)
@app.exception_handler(NumericalError)
async def _domain_error(request: Request, exc: Exception):
    code, body = handlers.error_payload(exc)
    return JSONResponse(status_code=STATUS[code], content=_clean(body))


@app.exception_handler(RequestValidationError)
async def _validation_error(request: Request, exc: RequestValidationError):
    body = ErrorResponse(error="config_error", message="invalid request",
                         detail={"errors": [str(e) for e in exc.errors()]})
    return JSONResponse(status_code=422, content=body.model_dump())


@app.get("/health")
def health():
    return {"status": "ok"}


@app.get("/presets")
def presets():
    return {"presets": list(PRESETS)}


@app.get("/presets/{name}")
def preset_config(name: str):
    if name not in PRESETS:
        raise HTTPException(status_code=404, detail=f"unknown preset {name!r}")
    return preset(name).model_dump()


@app.post("/sweep", response_model=SweepResponse)
def sweep(req: SweepRequest):
    return JSONResponse(_clean(handlers.handle_sweep(req).model_dump()))


@app.post("/check-conditions")
def check_conditions(req: ConditionsRequest):
    return _clean(handlers.handle_conditions(req))


@app.post("/asymptotics")
def asymptotics(req: ScenarioRequest):
    return _clean(handlers.handle_asymptotics(req))


@app.post("/uwb-gain")
def uwb_gain(req: UwbRequest):
    return _clean(handlers.handle_uwb(req))
