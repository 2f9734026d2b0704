"""Three-stroke engine: Gibbs reset, heating measurement, isentropic work measurement."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from . import constants
from .channels import apply, kraus_a, kraus_b, q_star, theta_of
from .errors import DegenerateCycle, InvalidStrength, OutsideEngineRegime, QmeError
from .pulsesim import NoiseModel, compile_channel_a, compile_composed, simulate
from .qcore import PROJ0, expectation, partial_trace, tensor_product, von_neumann_entropy
from .thermo import SpinHamiltonianParams, gibbs_state, omega_factor, polarization

IDEAL = "ideal-kraus"
PULSE = "pulse-sim"
_BACKEND_ALIASES = {"ideal": IDEAL, IDEAL: IDEAL, "pulse": PULSE, PULSE: PULSE}

NON_ENGINE = "non_engine"
Q_CLIPPED = "q_clipped"
HEAT_UNCLASSIFIED = "heat_unclassified"
# entropy changes this small count as zero when classifying heat
ENTROPY_TOL = 1e-12


def normalize_backend(name: str) -> str:
    try:
        return _BACKEND_ALIASES[name]
    except KeyError:
        raise QmeError(f"unknown backend {name!r}; expected one of ideal, pulse") from None


@dataclass(frozen=True)
class CycleConfig:
    p: float
    kBT: float
    nu: float = constants.NU_KHZ
    tau_cycle: float = constants.TAU_CYCLE_S
    backend: str = IDEAL
    noise: Optional[NoiseModel] = None
    max_step: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "backend", normalize_backend(self.backend))
        if not 0.0 <= self.p <= 1.0:
            raise InvalidStrength(f"p must lie in [0, 1], got {self.p}")
        if not self.tau_cycle > 0:
            raise QmeError(f"tau_cycle must be positive, got {self.tau_cycle}")
        if not self.kBT > 0:
            raise QmeError(f"kBT must be positive, got {self.kBT}")

    @property
    def is_engine(self) -> bool:
        return 0.5 < self.p <= 1.0


@dataclass(frozen=True)
class CycleReport:
    p: float
    kBT: float
    backend: str
    rho1: Optional[np.ndarray]
    rho2: Optional[np.ndarray]
    rho3: Optional[np.ndarray]
    heat_p: float
    work_ext: float
    heat_cold: float
    dS_a: float
    dS_b: float
    efficiency: float
    power_ext: float
    q_used: float
    flags: tuple = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not any(f.startswith("error") for f in self.flags)


def heat_absorbed(p: float, nu: float, kBT: float) -> float:
    """Heat drawn from the heating measurement: ``h nu p tanh(beta h nu / 2)``."""
    h = SpinHamiltonianParams(nu)
    return h.h_nu * p * polarization(h, kBT)


def work_extracted(p: float, nu: float, kBT: float) -> float:
    """Work delivered in the isentropic stroke: ``h nu (2p - 1) tanh(beta h nu / 2)``."""
    h = SpinHamiltonianParams(nu)
    return h.h_nu * (2.0 * p - 1.0) * polarization(h, kBT)


def efficiency(p: float) -> float:
    """``2 - 1/p``; zero at the engine threshold ``p = 1/2``."""
    if p < 0.5:
        raise OutsideEngineRegime(f"p = {p} is below the engine threshold 1/2")
    if p > 1.0:
        raise InvalidStrength(f"p must not exceed 1, got {p}")
    return 2.0 - 1.0 / p


def extracted_power(work_ext: float, tau_cycle: float) -> float:
    if not tau_cycle > 0:
        raise QmeError(f"tau_cycle must be positive, got {tau_cycle}")
    return work_ext / tau_cycle


def _pulse_states(cfg: CycleConfig, rho1: np.ndarray, omega: float):
    noise = cfg.noise
    joint = tensor_product(rho1, PROJ0)
    theta = theta_of(cfg.p, omega)
    seq_a = compile_channel_a(theta)
    rho2 = partial_trace(simulate(seq_a, joint, noise, max_step=cfg.max_step), keep=0)
    if cfg.p >= 0.5:
        seq = compile_composed(cfg.p, omega, total_duration=cfg.tau_cycle)
    else:
        # no work stroke below threshold; relaxation still runs for the full cycle
        seq = compile_channel_a(theta, total_duration=cfg.tau_cycle)
    rho3 = partial_trace(simulate(seq, joint, noise, max_step=cfg.max_step), keep=0)
    return rho2, rho3


def run_cycle(cfg: CycleConfig) -> CycleReport:
    """Run one engine cycle and fill the energy/entropy ledger from the three states."""
    h = SpinHamiltonianParams(cfg.nu)
    if polarization(h, cfg.kBT) == 0.0:
        raise DegenerateCycle("infinite spin temperature: no polarization, efficiency undefined")
    omega = omega_factor(h, cfg.kBT)
    flags = []
    if not cfg.is_engine:
        flags.append(NON_ENGINE)
    if cfg.p >= 0.5:
        q = q_star(cfg.p, omega)
    else:
        q = 0.0
        flags.append(Q_CLIPPED)

    rho1 = gibbs_state(h, cfg.kBT)
    if cfg.backend == IDEAL:
        rho2 = apply(kraus_a(cfg.p, omega), rho1)
        rho3 = apply(kraus_b(q), rho2)
    else:
        rho2, rho3 = _pulse_states(cfg, rho1, omega)

    ham = h.hamiltonian()
    e1, e2, e3 = (expectation(ham, r) for r in (rho1, rho2, rho3))
    s1, s2, s3 = (von_neumann_entropy(r) for r in (rho1, rho2, rho3))
    heat_p = e2 - e1
    work_ext = -(e3 - e2)
    dS_a = s2 - s1
    if dS_a < -ENTROPY_TOL:
        flags.append(HEAT_UNCLASSIFIED)
    eta = work_ext / heat_p if heat_p > 0 else math.nan
    return CycleReport(
        p=cfg.p,
        kBT=cfg.kBT,
        backend=cfg.backend,
        rho1=rho1,
        rho2=rho2,
        rho3=rho3,
        heat_p=heat_p,
        work_ext=work_ext,
        heat_cold=work_ext - heat_p,
        dS_a=dS_a,
        dS_b=s3 - s2,
        efficiency=eta,
        power_ext=extracted_power(work_ext, cfg.tau_cycle),
        q_used=q,
        flags=tuple(flags),
    )


def _failed(cfg_kwargs: dict, backend: str, exc: Exception) -> CycleReport:
    nan = math.nan
    return CycleReport(
        p=cfg_kwargs.get("p", nan),
        kBT=cfg_kwargs.get("kBT", nan),
        backend=backend,
        rho1=None,
        rho2=None,
        rho3=None,
        heat_p=nan,
        work_ext=nan,
        heat_cold=nan,
        dS_a=nan,
        dS_b=nan,
        efficiency=nan,
        power_ext=nan,
        q_used=nan,
        flags=(f"error:{type(exc).__name__}",),
    )


def _run_point(kwargs: dict) -> CycleReport:
    try:
        return run_cycle(CycleConfig(**kwargs))
    except QmeError as exc:
        return _failed(kwargs, normalize_backend(kwargs.get("backend", IDEAL)), exc)


def sweep(
    p_grid: Iterable[float],
    temps: Iterable[float],
    backend: str = IDEAL,
    nu: float = constants.NU_KHZ,
    tau_cycle: float = constants.TAU_CYCLE_S,
    noise: Optional[NoiseModel] = None,
    max_step: Optional[float] = None,
    n_jobs: Optional[int] = None,
) -> list:
    """One report per ``(kBT, p)`` pair, ordered by temperature then ``p``.

    Points that fail are returned as rows flagged ``error:<type>`` instead
    of aborting the sweep. ``n_jobs`` evaluates points in parallel through
    joblib; the output order does not depend on it.
    """
    p_grid = [float(p) for p in p_grid]
    temps = [float(t) for t in temps]
    if not p_grid or not temps:
        raise QmeError("sweep needs non-empty p and temperature grids")
    backend = normalize_backend(backend)
    points = [
        dict(p=p, kBT=t, nu=nu, tau_cycle=tau_cycle, backend=backend, noise=noise, max_step=max_step)
        for t in temps
        for p in p_grid
    ]
    if n_jobs is None or n_jobs == 1:
        return [_run_point(pt) for pt in points]
    from joblib import Parallel, delayed

    return list(Parallel(n_jobs=n_jobs)(delayed(_run_point)(pt) for pt in points))


def p_range(start: float, stop: float, step: float) -> list:
    """Inclusive grid ``start, start + step, ..., stop`` without float drift."""
    if step <= 0:
        raise QmeError(f"step must be positive, got {step}")
    n = int(math.floor((stop - start) / step + 1e-9))
    return [round(start + k * step, 12) for k in range(n + 1)]
