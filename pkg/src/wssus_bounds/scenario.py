"""Scenario configuration: pydantic models shared by the CLI and the HTTP service."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .channel_model import DEFAULT_TF, BrickScattering, GridParams, SampledScattering, ScatteringFunction
from .mi import CONTINUOUS, McSpec
from .quadrature import QuadratureSpec
from .spatial import SpatialSpectrum, spectrum_from_matrices
from .upper_bound import LinkBudget

PRESETS = ("fig1", "fig2", "fig3")


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class BrickConfig(_Model):
    kind: Literal["brick"] = "brick"
    nu0_hz: float = Field(gt=0)
    tau0_s: float = Field(gt=0)


class GridConfig(_Model):
    """Sampled scattering function, inline or from a ``nu_hz,tau_s,value`` CSV file."""

    kind: Literal["grid"] = "grid"
    csv: str | None = None
    nu_hz: list[float] | None = None
    tau_s: list[float] | None = None
    values: list[list[float]] | None = None

    @model_validator(mode="after")
    def _one_source(self):
        inline = [self.nu_hz, self.tau_s, self.values]
        if self.csv is None and any(v is None for v in inline):
            raise ValueError("grid needs either 'csv' or all of 'nu_hz', 'tau_s', 'values'")
        if self.csv is not None and any(v is not None for v in inline):
            raise ValueError("grid takes either 'csv' or inline samples, not both")
        return self


ScatteringConfig = Annotated[Union[BrickConfig, GridConfig], Field(discriminator="kind")]


class TimeFrequencyGrid(_Model):
    """Either explicit spacings ``T_s``/``F_hz`` or a matched grid with product ``tf``."""

    kind: Literal["matched", "explicit"] = "matched"
    tf: float = Field(DEFAULT_TF, ge=1)
    T_s: float | None = Field(None, gt=0)
    F_hz: float | None = Field(None, gt=0)

    @model_validator(mode="after")
    def _explicit_needs_spacings(self):
        if self.kind == "explicit" and (self.T_s is None or self.F_hz is None):
            raise ValueError("explicit grid needs T_s and F_hz")
        return self


class ComplexMatrix(_Model):
    re: list[list[float]]
    im: list[list[float]] | None = None

    def to_array(self) -> np.ndarray:
        re = np.asarray(self.re, dtype=float)
        im = np.zeros_like(re) if self.im is None else np.asarray(self.im, dtype=float)
        if re.shape != im.shape:
            raise ValueError("real and imaginary parts differ in shape")
        return re + 1j * im


class SpatialConfig(_Model):
    tx_eigs: list[float] | None = None
    rx_eigs: list[float] | None = None
    tx_matrix: ComplexMatrix | None = None
    rx_matrix: ComplexMatrix | None = None

    @model_validator(mode="after")
    def _one_form(self):
        eig = self.tx_eigs is not None and self.rx_eigs is not None
        mat = self.tx_matrix is not None and self.rx_matrix is not None
        if eig == mat:
            raise ValueError("spatial needs either tx_eigs/rx_eigs or tx_matrix/rx_matrix")
        return self


class LinkConfig(_Model):
    P: float = Field(gt=0, description="receive power over noise spectral density, 1/s")
    beta: float = Field(1.0, ge=1, description="peak-to-average power ratio")


class SweepConfig(_Model):
    B_min: float = Field(1e6, gt=0)
    B_max: float = Field(1e13, gt=0)
    points: int = Field(40, ge=2)
    spacing: Literal["log", "linear"] = "log"

    @model_validator(mode="after")
    def _ordered(self):
        if not self.B_max > self.B_min:
            raise ValueError("sweep needs B_max > B_min")
        return self

    def bandwidths(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.B_min, self.B_max, self.points)
        return np.linspace(self.B_min, self.B_max, self.points)


class McConfig(_Model):
    outer: int = Field(10_000, ge=2)
    inner: int = Field(512, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    confidence: float | None = Field(None, gt=0)
    block_size: int = Field(250, ge=2)
    phase_model: Literal["continuous", "psk"] = CONTINUOUS
    psk_order: int = Field(8, ge=2)

    def to_spec(self, workers: int = 1) -> McSpec:
        return McSpec(self.outer, self.inner, self.seed, self.confidence, self.block_size, workers)


class QuadratureConfig(_Model):
    nodes_per_axis: int = Field(8, ge=8)
    rule: Literal["gauss-legendre", "midpoint"] = "gauss-legendre"
    tolerance: float = Field(1e-10, gt=0)
    max_refinements: int = Field(16, ge=1, le=40)


class ScenarioConfig(_Model):
    name: str = "custom"
    scattering: ScatteringConfig
    grid: TimeFrequencyGrid = TimeFrequencyGrid()
    spatial: SpatialConfig
    link: LinkConfig
    sweep: SweepConfig = SweepConfig()
    q_range: list[int] | None = None
    mc: McConfig = McConfig()
    quadrature: QuadratureConfig = QuadratureConfig()
    exact_k_max: int = Field(512, ge=1, le=4096)
    units: Literal["nats", "bits"] = "nats"


@dataclass(eq=False)
class Scenario:
    """A validated, fully built scenario ready for evaluation."""

    config: ScenarioConfig
    sf: ScatteringFunction
    grid: GridParams
    spectrum: SpatialSpectrum
    link: LinkBudget
    q_range: list[int]
    quadrature: QuadratureSpec

    @property
    def name(self) -> str:
        return self.config.name

    def mc_spec(self, workers: int = 1) -> McSpec:
        return self.config.mc.to_spec(workers)


def _build_scattering(cfg, base_dir: Path | None) -> ScatteringFunction:
    if isinstance(cfg, BrickConfig):
        return BrickScattering(cfg.nu0_hz, cfg.tau0_s)
    if cfg.csv is not None:
        path = Path(cfg.csv)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return SampledScattering.from_csv(path)
    return SampledScattering(np.array(cfg.nu_hz), np.array(cfg.tau_s), np.array(cfg.values))


def build_scenario(config: ScenarioConfig, base_dir: Path | None = None) -> Scenario:
    """Construct model objects; raises ``ValueError`` on any invariant violation."""
    sf = _build_scattering(config.scattering, base_dir)
    gcfg = config.grid
    if gcfg.kind == "matched":
        grid = GridParams.matched(sf, gcfg.tf)
    else:
        grid = GridParams(gcfg.T_s, gcfg.F_hz).check_no_aliasing(sf)
    sc = config.spatial
    if sc.tx_eigs is not None:
        spectrum = SpatialSpectrum.from_eigenvalues(sc.tx_eigs, sc.rx_eigs)
    else:
        spectrum = spectrum_from_matrices(sc.tx_matrix.to_array(), sc.rx_matrix.to_array())
    link = LinkBudget(config.link.P, config.link.beta)
    q_range = config.q_range or list(range(1, spectrum.m_t + 1))
    if any(not 1 <= q <= spectrum.m_t for q in q_range) or len(set(q_range)) != len(q_range):
        raise ValueError(f"q_range entries must be distinct and within [1, {spectrum.m_t}]")
    if config.sweep.B_min < grid.F * (1 - 1e-12):
        raise ValueError(f"sweep B_min={config.sweep.B_min:g} Hz is below one slot F={grid.F:g} Hz")
    qc = config.quadrature
    quad = QuadratureSpec(qc.nodes_per_axis, qc.rule, qc.tolerance, qc.max_refinements)
    return Scenario(config, sf, grid, spectrum, link, sorted(q_range), quad)


def load_config(path) -> ScenarioConfig:
    return ScenarioConfig.model_validate_json(Path(path).read_text())


def preset(name: str) -> ScenarioConfig:
    """Parameter sets of the three reference figures (3x3, brick, beta = 1)."""
    tx, rx = [1.0, 1.0, 1.0], [1.0, 1.0, 1.0]
    if name == "fig2":
        rx = [2.6, 0.3, 0.1]
    elif name == "fig3":
        tx = [1.7, 1.0, 0.3]
    elif name != "fig1":
        raise KeyError(f"unknown preset {name!r}; expected one of {PRESETS}")
    return ScenarioConfig(
        name=name,
        scattering=BrickConfig(nu0_hz=50.0, tau0_s=5e-6),
        spatial=SpatialConfig(tx_eigs=tx, rx_eigs=rx),
        link=LinkConfig(P=1.26e8, beta=1.0),
    )


class ConfigError(ValueError):
    """Invalid scenario configuration (maps to exit code 2)."""


def resolve(config: ScenarioConfig | dict | None = None, preset_name: str | None = None,
            seed: int | None = None, units: str | None = None, base_dir: Path | None = None) -> Scenario:
    """Build a scenario from a config or a preset name, applying seed and unit overrides."""
    from pydantic import ValidationError

    try:
        if (config is None) == (preset_name is None):
            raise ConfigError("give exactly one of a config or a preset name")
        cfg = preset(preset_name) if config is None else ScenarioConfig.model_validate(
            config.model_dump() if isinstance(config, ScenarioConfig) else config
        )
        updates = {}
        if seed is not None:
            updates["mc"] = cfg.mc.model_copy(update={"seed": seed})
        if units is not None:
            updates["units"] = units
        if updates:
            cfg = ScenarioConfig.model_validate({**cfg.model_dump(), **{
                k: (v.model_dump() if isinstance(v, BaseModel) else v) for k, v in updates.items()
            }})
        return build_scenario(cfg, base_dir)
    except ConfigError:
        raise
    except (ValidationError, ValueError, KeyError, OSError) as exc:
        raise ConfigError(str(exc)) from exc
