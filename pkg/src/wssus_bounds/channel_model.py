"""Scattering functions, time-frequency grids and their integral functionals."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .quadrature import DEFAULT_QUADRATURE, QuadratureSpec, integrate_bilinear, integrate_cells

DEFAULT_TF = 1.25


class ScatteringFunction:
    """Base class of the two supported scattering-function variants.

    Subclasses are supported on ``[-nu0, nu0] x [-tau0, tau0]`` (or a
    sub-rectangle of it) and have unit volume.
    """

    nu0: float
    tau0: float

    @property
    def spread(self) -> float:
        return 4.0 * self.nu0 * self.tau0

    def evaluate(self, nu, tau) -> np.ndarray:
        raise NotImplementedError

    def evaluate_tensor(self, nu, tau) -> np.ndarray:
        """Values on the tensor grid ``nu x tau``, shape ``(len(nu), len(tau))``."""
        nu = np.asarray(nu, dtype=float)
        tau = np.asarray(tau, dtype=float)
        return self.evaluate(nu[:, None], tau[None, :])

    def cell_edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Partition of the support on which the function is smooth per cell."""
        raise NotImplementedError


@dataclass(frozen=True)
class BrickScattering(ScatteringFunction):
    """Flat scattering function ``1/spread`` on the full support rectangle."""

    nu0: float
    tau0: float

    def __post_init__(self):
        if not (self.nu0 > 0 and self.tau0 > 0):
            raise ValueError("nu0 and tau0 must be positive")
        if not self.spread < 1:
            raise ValueError(f"channel is not underspread (spread={self.spread:g})")

    @property
    def height(self) -> float:
        return 1.0 / self.spread

    def evaluate(self, nu, tau):
        nu = np.asarray(nu, dtype=float)
        tau = np.asarray(tau, dtype=float)
        inside = (np.abs(nu) <= self.nu0) & (np.abs(tau) <= self.tau0)
        return np.where(inside, self.height, 0.0)

    def cell_edges(self):
        return np.array([-self.nu0, self.nu0]), np.array([-self.tau0, self.tau0])

    def to_grid(self, n_nu: int = 5, n_tau: int = 5) -> SampledScattering:
        """The same function as a constant-valued lattice (quadrature path)."""
        nu = np.linspace(-self.nu0, self.nu0, n_nu)
        tau = np.linspace(-self.tau0, self.tau0, n_tau)
        return SampledScattering(nu, tau, np.full((n_nu, n_tau), self.height))


@dataclass(frozen=True, eq=False)
class SampledScattering(ScatteringFunction):
    """Scattering function sampled on a rectangular lattice.

    Values between lattice points are bilinearly interpolated; the function
    is zero outside the lattice rectangle.  On construction the samples are
    rescaled to unit volume and the applied factor is kept in ``scale``.
    """

    nu_axis: np.ndarray
    tau_axis: np.ndarray
    values: np.ndarray
    scale: float = field(init=False)

    def __post_init__(self):
        nu = np.asarray(self.nu_axis, dtype=float)
        tau = np.asarray(self.tau_axis, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if nu.ndim != 1 or tau.ndim != 1 or len(nu) < 2 or len(tau) < 2:
            raise ValueError("axes must be 1-D with at least two points each")
        if np.any(np.diff(nu) <= 0) or np.any(np.diff(tau) <= 0):
            raise ValueError("axes must be strictly increasing")
        if vals.shape != (len(nu), len(tau)):
            raise ValueError(f"values shape {vals.shape} != ({len(nu)}, {len(tau)})")
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise ValueError("scattering function values must be finite and nonnegative")
        volume = float(np.trapezoid(np.trapezoid(vals, tau, axis=1), nu))
        if not volume > 0:
            raise ValueError("scattering function has zero volume")
        object.__setattr__(self, "nu_axis", nu)
        object.__setattr__(self, "tau_axis", tau)
        object.__setattr__(self, "values", vals / volume)
        object.__setattr__(self, "scale", 1.0 / volume)
        if not self.spread < 1:
            raise ValueError(f"channel is not underspread (spread={self.spread:g})")

    @property
    def nu0(self) -> float:
        return float(max(abs(self.nu_axis[0]), abs(self.nu_axis[-1])))

    @property
    def tau0(self) -> float:
        return float(max(abs(self.tau_axis[0]), abs(self.tau_axis[-1])))

    def cell_edges(self):
        return self.nu_axis, self.tau_axis

    def _weights(self, axis: np.ndarray, x: np.ndarray) -> np.ndarray:
        # linear-interpolation weight matrix, shape (len(x), len(axis))
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(axis, x, side="right") - 1, 0, len(axis) - 2)
        left, right = axis[idx], axis[idx + 1]
        u = (x - left) / (right - left)
        inside = (x >= axis[0]) & (x <= axis[-1])
        wmat = np.zeros((len(x), len(axis)))
        rows = np.arange(len(x))
        wmat[rows, idx] = np.where(inside, 1.0 - u, 0.0)
        wmat[rows, idx + 1] = np.where(inside, u, 0.0)
        return wmat

    def evaluate_tensor(self, nu, tau):
        wn = self._weights(self.nu_axis, np.atleast_1d(nu))
        wt = self._weights(self.tau_axis, np.atleast_1d(tau))
        return wn @ self.values @ wt.T

    def evaluate(self, nu, tau):
        nu, tau = np.broadcast_arrays(np.asarray(nu, float), np.asarray(tau, float))
        flat_nu, flat_tau = nu.ravel(), tau.ravel()
        wn = self._weights(self.nu_axis, flat_nu)
        wt = self._weights(self.tau_axis, flat_tau)
        out = np.einsum("pi,ij,pj->p", wn, self.values, wt)
        return out.reshape(nu.shape)

    @classmethod
    def from_csv(cls, path) -> SampledScattering:
        """Read a lattice from a CSV file with header ``nu_hz,tau_s,value``."""
        rows = []
        with open(Path(path), newline="") as fh:
            reader = csv.DictReader(fh)
            expected = {"nu_hz", "tau_s", "value"}
            if reader.fieldnames is None or set(reader.fieldnames) != expected:
                raise ValueError(f"{path}: expected header nu_hz,tau_s,value")
            for row in reader:
                rows.append((float(row["nu_hz"]), float(row["tau_s"]), float(row["value"])))
        if not rows:
            raise ValueError(f"{path}: no samples")
        data = np.array(rows)
        nu = np.unique(data[:, 0])
        tau = np.unique(data[:, 1])
        if len(data) != len(nu) * len(tau):
            raise ValueError(f"{path}: samples do not form a rectangular lattice")
        vals = np.full((len(nu), len(tau)), np.nan)
        vals[np.searchsorted(nu, data[:, 0]), np.searchsorted(tau, data[:, 1])] = data[:, 2]
        if np.isnan(vals).any():
            raise ValueError(f"{path}: duplicate or missing lattice points")
        return cls(nu, tau, vals)

    def to_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["nu_hz", "tau_s", "value"])
            for i, nu in enumerate(self.nu_axis):
                for j, tau in enumerate(self.tau_axis):
                    writer.writerow([repr(float(nu)), repr(float(tau)), repr(float(self.values[i, j]))])


@dataclass(frozen=True)
class GridParams:
    """Weyl-Heisenberg grid spacings: time ``T`` (s) and frequency ``F`` (Hz)."""

    T: float
    F: float

    def __post_init__(self):
        if not (self.T > 0 and self.F > 0):
            raise ValueError("T and F must be positive")
        if self.TF < 1 - 1e-12:
            raise ValueError(f"grid product TF={self.TF:g} must be >= 1")

    @property
    def TF(self) -> float:
        return self.T * self.F

    def check_no_aliasing(self, sf: ScatteringFunction) -> GridParams:
        rel = 1 + 1e-12
        if self.T > rel / (2 * sf.nu0):
            raise ValueError(f"T={self.T:g} s exceeds 1/(2 nu0)={1 / (2 * sf.nu0):g} s")
        if self.F > rel / (2 * sf.tau0):
            raise ValueError(f"F={self.F:g} Hz exceeds 1/(2 tau0)={1 / (2 * sf.tau0):g} Hz")
        return self

    @classmethod
    def matched(cls, sf: ScatteringFunction, tf: float = DEFAULT_TF) -> GridParams:
        """Grid with ``T/F = tau0/nu0`` and the requested product ``TF``."""
        T = math.sqrt(tf * sf.tau0 / sf.nu0)
        return cls(T, tf / T).check_no_aliasing(sf)


def spectral_density(sf: ScatteringFunction, g: GridParams, theta, phi):
    """Spectral density of the discretized channel at normalized (Doppler, delay).

    Only the zero-shift aliasing term contributes on a valid grid, so this is
    ``C_H(theta/T, phi/F) / (TF)``.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if np.any(np.abs(theta) > 0.5) or np.any(np.abs(phi) > 0.5):
        raise ValueError("normalized arguments must lie in [-1/2, 1/2]")
    return sf.evaluate(theta / g.T, phi / g.F) / g.TF


def _integrate(sf: ScatteringFunction, g, q: QuadratureSpec) -> float:
    """Integral of ``g(C_H)`` over the support."""
    nu_e, tau_e = sf.cell_edges()
    if isinstance(sf, SampledScattering):
        return integrate_bilinear(g, nu_e, tau_e, sf.values, q).value
    return integrate_cells(lambda x, y: g(sf.evaluate_tensor(x, y)), nu_e, tau_e, q).value


def kappa(sf: ScatteringFunction, q: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """Peakiness: the integral of the squared scattering function."""
    if isinstance(sf, BrickScattering):
        return 1.0 / sf.spread
    return _integrate(sf, np.square, q)


def log_penalty_integral(
    sf: ScatteringFunction, c: float, q: QuadratureSpec = DEFAULT_QUADRATURE
) -> float:
    """Integral of ``log(1 + c * C_H(nu, tau))`` over the Doppler-delay plane."""
    if c < 0:
        raise ValueError("scale c must be nonnegative")
    if c == 0:
        return 0.0
    if isinstance(sf, BrickScattering):
        return sf.spread * math.log1p(c / sf.spread)
    return _integrate(sf, lambda f: np.log1p(c * f), q)


def volume(sf: ScatteringFunction, q: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    if isinstance(sf, BrickScattering):
        return 1.0
    return _integrate(sf, lambda f: f, q)
