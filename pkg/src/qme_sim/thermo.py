"""Thermal states of the working-substance qubit."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .constants import H_PEV_PER_KHZ, NU_KHZ
from .errors import NotThermal, QmeError, ZeroTemperature
from .qcore import SZ, as_matrix


@dataclass(frozen=True)
class SpinHamiltonianParams:
    """Working-substance Hamiltonian ``H = -(h nu / 2) sigma_z``, nu in kHz."""

    nu: float = NU_KHZ

    def __post_init__(self):
        if not self.nu > 0:
            raise QmeError(f"nu must be positive, got {self.nu}")

    @property
    def h_nu(self) -> float:
        """Level splitting in peV."""
        return H_PEV_PER_KHZ * self.nu

    def hamiltonian(self) -> np.ndarray:
        return -0.5 * self.h_nu * SZ


@dataclass(frozen=True)
class ThermalParams:
    """Spin temperature as an energy ``k_B T`` in peV (``inf`` allowed)."""

    kBT: float

    def __post_init__(self):
        if not self.kBT > 0:
            raise QmeError(f"kBT must be positive, got {self.kBT}")

    def beta_h_nu(self, h: SpinHamiltonianParams) -> float:
        return h.h_nu / self.kBT


def _as_thermal(t) -> ThermalParams:
    return t if isinstance(t, ThermalParams) else ThermalParams(float(t))


def excited_population(h: SpinHamiltonianParams, t) -> float:
    """Population of ``|1>`` in the Gibbs state: ``1 / (1 + e^{beta h nu})``."""
    return float(expit(-_as_thermal(t).beta_h_nu(h)))


def gibbs_state(h: SpinHamiltonianParams, t) -> np.ndarray:
    p1 = excited_population(h, t)
    return np.diag([1.0 - p1, p1]).astype(complex)


def polarization(h: SpinHamiltonianParams, t) -> float:
    """``<sigma_z>`` of the Gibbs state, ``tanh(beta h nu / 2)``."""
    return math.tanh(0.5 * _as_thermal(t).beta_h_nu(h))


def omega_factor(h: SpinHamiltonianParams, t) -> float:
    """``1 - exp(-beta h nu)``, the ratio-based strength scale of the heating channel."""
    return -math.expm1(-_as_thermal(t).beta_h_nu(h))


def spin_temperature_of(rho, h: SpinHamiltonianParams) -> float:
    """Invert :func:`gibbs_state` on the populations of ``rho``.

    A pure ground state returns ``0.0`` together with a
    :class:`ZeroTemperature` warning. Equal or inverted populations raise
    :class:`NotThermal`.
    """
    m = as_matrix(rho)
    if m.shape != (2, 2):
        raise NotThermal(f"expected a single-qubit state, got shape {m.shape}")
    p0, p1 = float(m[0, 0].real), float(m[1, 1].real)
    if p1 <= 0.0 and p0 > 0.0:
        warnings.warn("ground-state populations map to the kBT -> 0+ limit", ZeroTemperature, stacklevel=2)
        return 0.0
    if p0 <= p1:
        raise NotThermal(f"populations ({p0:.6g}, {p1:.6g}) are not a positive-temperature state")
    return h.h_nu / math.log(p0 / p1)
