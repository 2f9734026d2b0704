"""Monte Carlo error bars from Gaussian-perturbed readout data.

Energies come from the carbon magnetization ``<sigma_z>`` and entropies
from tomographic reconstructions of the state, so the two are perturbed
independently: magnetizations by ``sigma_mag`` and every reconstructed
matrix element by ``sigma_qst``. Each draw uses its own random substream
spawned from ``seed``, so results do not depend on evaluation order or on
parallelism.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence

import numpy as np

from .cycle import CycleConfig, CycleReport, run_cycle
from .errors import QmeError, UnstableEstimate
from .qcore import expectation, von_neumann_entropy
from .thermo import SpinHamiltonianParams

MAX_DISCARD_FRACTION = 0.2


@dataclass(frozen=True)
class NoiseSpec:
    """Readout noise widths (1 sigma) and sampling controls.

    The default widths are free parameters, not measured values.
    """

    sigma_mag: float = 0.01
    sigma_qst: float = 0.01
    n_samples: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.sigma_mag < 0 or self.sigma_qst < 0:
            raise QmeError("noise widths must be non-negative")
        if self.n_samples < 2:
            raise QmeError("n_samples must be at least 2")


@dataclass(frozen=True)
class EstimateWithError:
    mean: float
    std: float
    n: int
    n_discarded: int = 0

    @property
    def sem(self) -> float:
        """Standard error of the mean."""
        return self.std / math.sqrt(self.n)


def substreams(spec: NoiseSpec) -> list:
    """One independent generator per draw."""
    children = np.random.SeedSequence(spec.seed).spawn(spec.n_samples)
    return [np.random.default_rng(c) for c in children]


def perturb_magnetization(z: float, spec: NoiseSpec, rng: np.random.Generator) -> float:
    if spec.sigma_mag == 0:
        return z
    return z + spec.sigma_mag * rng.standard_normal()


def perturb_state(rho, spec: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    """Add Hermitian Gaussian noise to ``rho`` and project back onto valid states.

    The diagonal and the real and imaginary parts of the lower triangle get
    independent ``N(0, sigma_qst)`` draws; the upper triangle mirrors them.
    Negative eigenvalues are clipped and the trace renormalized.
    """
    m = np.array(rho, dtype=complex)
    if spec.sigma_qst == 0:
        return m
    d = m.shape[0]
    s = spec.sigma_qst
    noise = np.zeros((d, d), dtype=complex)
    il = np.tril_indices(d, -1)
    noise[np.diag_indices(d)] = s * rng.standard_normal(d)
    noise[il] = s * (rng.standard_normal(len(il[0])) + 1j * rng.standard_normal(len(il[0])))
    noise[il[::-1]] = np.conj(noise[il])
    w, v = np.linalg.eigh(m + noise)
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0:
        raise QmeError("perturbed state has no positive spectrum")
    w = w / w.sum()
    return (v * w) @ v.conj().T


def summarize(values: Sequence[float], n_discarded: int = 0) -> EstimateWithError:
    total = len(values) + n_discarded
    if total == 0 or n_discarded > MAX_DISCARD_FRACTION * total:
        raise UnstableEstimate(f"{n_discarded} of {total} samples discarded")
    x = np.asarray(values, dtype=float)
    # work with shifts from the first sample so identical samples give
    # their common value and a std of exactly zero
    d = x - x[0]
    mean = x[0] + math.fsum(d) / len(x)
    std = float(np.std(d, ddof=1)) if len(x) > 1 else 0.0
    return EstimateWithError(mean=float(mean), std=std, n=len(x), n_discarded=n_discarded)


def _draw(quantity: Callable[[np.random.Generator], float], rng: np.random.Generator) -> Optional[float]:
    try:
        with np.errstate(divide="raise", invalid="raise"):
            value = float(quantity(rng))
    except (QmeError, FloatingPointError, ZeroDivisionError):
        return None
    return value if math.isfinite(value) else None


def estimate(
    quantity: Callable[[np.random.Generator], float],
    spec: NoiseSpec,
    n_jobs: Optional[int] = None,
) -> EstimateWithError:
    """Mean and sample standard deviation of ``quantity(rng)`` over ``spec.n_samples`` draws.

    Draws that raise a domain error or return a non-finite value are
    discarded; more than 20 % discarded raises :class:`UnstableEstimate`.
    """
    rngs = substreams(spec)
    if n_jobs is None or n_jobs == 1:
        draws = [_draw(quantity, r) for r in rngs]
    else:
        from joblib import Parallel, delayed

        draws = Parallel(n_jobs=n_jobs)(delayed(_draw)(quantity, r) for r in rngs)
    kept = [v for v in draws if v is not None]
    return summarize(kept, len(draws) - len(kept))


CYCLE_QUANTITIES = ("heat_p", "work_ext", "heat_cold", "efficiency", "power_ext", "dS_a", "dS_b")


def _cycle_draw(report: CycleReport, nu: float, tau: float, spec: NoiseSpec, rng) -> dict:
    h = SpinHamiltonianParams(nu)
    ham = h.hamiltonian()
    states = (report.rho1, report.rho2, report.rho3)
    # E = -(h nu / 2) <sigma_z>: a magnetization error dz shifts E by -(h nu / 2) dz
    e = [expectation(ham, r) - 0.5 * h.h_nu * perturb_magnetization(0.0, spec, rng) for r in states]
    s = [von_neumann_entropy(perturb_state(r, spec, rng)) for r in states]
    heat = e[1] - e[0]
    work = -(e[2] - e[1])
    return {
        "heat_p": heat,
        "work_ext": work,
        "heat_cold": work - heat,
        "efficiency": work / heat if heat > 0 else math.nan,
        "power_ext": work / tau,
        "dS_a": s[1] - s[0],
        "dS_b": s[2] - s[1],
    }


def cycle_estimates(cfg: CycleConfig, spec: NoiseSpec, report: Optional[CycleReport] = None) -> Dict[str, EstimateWithError]:
    """Error bars for every ledger quantity of one cycle.

    Each draw perturbs the three magnetizations and the three tomographic
    states once and derives all quantities from that shared draw.
    """
    report = run_cycle(cfg) if report is None else report
    values = {k: [] for k in CYCLE_QUANTITIES}
    for rng in substreams(spec):
        draw = _cycle_draw(report, cfg.nu, cfg.tau_cycle, spec, rng)
        for k, v in draw.items():
            values[k].append(v)
    out = {}
    for k, vals in values.items():
        kept = [v for v in vals if math.isfinite(v)]
        out[k] = summarize(kept, len(vals) - len(kept))
    return out
