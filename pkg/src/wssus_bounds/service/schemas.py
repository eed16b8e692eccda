"""Request and response models of the HTTP service."""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field

from ..scenario import PRESETS, ScenarioConfig


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ScenarioRequest(_Model):
    """A scenario given inline or by preset name, with optional overrides."""

    config: ScenarioConfig | None = None
    preset: Literal[PRESETS] | None = None  # type: ignore[valid-type]
    seed: int | None = Field(None, ge=0, lt=2**64)
    units: Literal["nats", "bits"] | None = None


class SweepRequest(ScenarioRequest):
    workers: int = Field(1, ge=1, le=64)


class ConditionsRequest(ScenarioRequest):
    B_hz: float | None = Field(None, gt=0)


class UwbRequest(ScenarioRequest):
    B_hz: float = Field(7e9, gt=0)


class SweepResponse(_Model):
    scenario: str
    units: str
    columns: list[str]
    rows: list[dict[str, Any]]
    summary: dict[str, Any]
    csv: str


class ErrorResponse(_Model):
    error: Literal["config_error", "numerical_error"]
    message: str
    detail: dict[str, Any] = {}
