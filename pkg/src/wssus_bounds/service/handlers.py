"""Framework-free request handlers shared by the HTTP app and the in-process CLI."""

from __future__ import annotations

from pathlib import Path

from ..scenario import ConfigError, Scenario, resolve
from ..sweep import (
    NumericalError,
    asymptotics_report,
    check_conditions,
    run_sweep,
    uwb_gain_report,
)
from .schemas import ConditionsRequest, ScenarioRequest, SweepRequest, SweepResponse, UwbRequest

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def scenario_of(req: ScenarioRequest, base_dir: Path | None = None) -> Scenario:
    return resolve(req.config, req.preset, req.seed, req.units, base_dir)


def handle_sweep(req: SweepRequest, base_dir: Path | None = None) -> SweepResponse:
    res = run_sweep(scenario_of(req, base_dir), workers=req.workers)
    return SweepResponse(
        scenario=res.scenario, units=res.units, columns=res.columns,
        rows=res.rows, summary=res.summary, csv=res.to_csv(),
    )


def handle_conditions(req: ConditionsRequest, base_dir: Path | None = None) -> dict:
    return check_conditions(scenario_of(req, base_dir), req.B_hz)


def handle_asymptotics(req: ScenarioRequest, base_dir: Path | None = None) -> dict:
    return asymptotics_report(scenario_of(req, base_dir))


def handle_uwb(req: UwbRequest, base_dir: Path | None = None) -> dict:
    try:
        return uwb_gain_report(scenario_of(req, base_dir), req.B_hz)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def error_payload(exc: Exception) -> tuple[int, dict] | None:
    """Exit code and machine-readable body for a handler failure; ``None`` if not a domain error."""
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG, {"error": "config_error", "message": str(exc), "detail": {}}
    if isinstance(exc, NumericalError):
        return EXIT_NUMERICAL, {"error": "numerical_error", "message": str(exc), "detail": exc.detail}
    return None
