"""The two non-selective generalized measurement channels of the engine.

The heating channel (``kraus_a``) pumps ``|0> -> |1>`` with probability
``p * omega``; the work channel (``kraus_b``) is amplitude damping toward
``|0>`` with strength ``q``. Both are also available as system-ancilla
unitaries acting on ``rho (x) |0><0|``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateCycle, DimMismatch, InvalidStrength, NotTracePreserving, OutsideEngineRegime, QmeError
from .qcore import PROJ0, as_matrix, partial_trace, state_fidelity, tensor_product

COMPLETENESS_ATOL = 1e-12
CHOI_TP_ATOL = 1e-8
ROUNDTRIP_ATOL = 1e-12


@dataclass(frozen=True)
class KrausChannel:
    ops: tuple
    label: str = ""

    def __post_init__(self):
        ops = tuple(np.array(as_matrix(k), copy=True) for k in self.ops)
        if not ops:
            raise QmeError("a channel needs at least one Kraus operator")
        dim = ops[0].shape[0]
        if any(k.shape != (dim, dim) for k in ops):
            raise DimMismatch("Kraus operators differ in shape")
        for k in ops:
            k.setflags(write=False)
        object.__setattr__(self, "ops", ops)

    @property
    def dim(self) -> int:
        return self.ops[0].shape[0]

    def completeness_defect(self) -> float:
        s = sum(k.conj().T @ k for k in self.ops)
        return float(np.abs(s - np.eye(self.dim)).max())

    def is_complete(self, atol: float = COMPLETENESS_ATOL) -> bool:
        return self.completeness_defect() <= atol

    def povm(self) -> list:
        return [k.conj().T @ k for k in self.ops]

    def __call__(self, rho) -> np.ndarray:
        return apply(self, rho)


@dataclass(frozen=True)
class StrengthParams:
    p: float
    q: float
    omega: float

    def __post_init__(self):
        if not 0.0 <= self.omega < 1.0:
            raise InvalidStrength(f"omega must lie in [0, 1), got {self.omega}")
        if not 0.0 <= self.p * self.omega <= 1.0 or not 0.0 <= self.p <= 1.0:
            raise InvalidStrength(f"p={self.p} with omega={self.omega} is not a valid strength")
        if not 0.0 <= self.q <= 1.0:
            raise InvalidStrength(f"q must lie in [0, 1], got {self.q}")

    @property
    def theta(self) -> float:
        return theta_of(self.p, self.omega)

    @property
    def phi(self) -> float:
        return phi_of(self.q)


def identity_channel(dim: int = 2) -> KrausChannel:
    return KrausChannel((np.eye(dim),), label="identity")


def kraus_a(p: float, omega: float) -> KrausChannel:
    """Heating measurement: ``M1 = sqrt(1 - p omega)|0><0| + |1><1|``, ``M2 = sqrt(p omega)|1><0|``."""
    if not (0.0 <= p <= 1.0 and 0.0 <= omega <= 1.0):
        raise InvalidStrength(f"p={p}, omega={omega} outside [0, 1]")
    s = p * omega
    if s > 1.0:
        raise InvalidStrength(f"p * omega = {s} exceeds 1")
    m1 = np.array([[math.sqrt(1.0 - s), 0.0], [0.0, 1.0]], dtype=complex)
    m2 = np.array([[0.0, 0.0], [math.sqrt(s), 0.0]], dtype=complex)
    return KrausChannel((m1, m2), label=f"M_a(p={p:g}, omega={omega:g})")


def kraus_b(q: float) -> KrausChannel:
    """Work measurement: ``M1 = |0><0| + sqrt(1 - q)|1><1|``, ``M2 = sqrt(q)|0><1|``."""
    if not 0.0 <= q <= 1.0:
        raise InvalidStrength(f"q must lie in [0, 1], got {q}")
    m1 = np.array([[1.0, 0.0], [0.0, math.sqrt(1.0 - q)]], dtype=complex)
    m2 = np.array([[0.0, math.sqrt(q)], [0.0, 0.0]], dtype=complex)
    return KrausChannel((m1, m2), label=f"M_b(q={q:g})")


def q_star(p: float, omega: float) -> float:
    """Work-channel strength that leaves the entropy unchanged after ``kraus_a(p, omega)``."""
    if omega <= 0.0:
        raise DegenerateCycle("omega = 0: the heating channel does nothing")
    if not omega < 1.0:
        raise InvalidStrength(f"omega must be below 1, got {omega}")
    if p < 0.5:
        raise OutsideEngineRegime(f"p = {p} < 1/2 gives a negative work-channel strength")
    if p > 1.0:
        raise InvalidStrength(f"p must not exceed 1, got {p}")
    return (2.0 * p - 1.0) * omega / ((p - 1.0) * omega + 1.0)


def apply(ch: KrausChannel, rho) -> np.ndarray:
    m = as_matrix(rho)
    if m.shape[0] != ch.dim:
        raise DimMismatch(f"channel dim {ch.dim} vs state dim {m.shape[0]}")
    return sum(k @ m @ k.conj().T for k in ch.ops)


def _angle(x: float) -> float:
    arg = 1.0 - 2.0 * x
    if not -1.0 - ROUNDTRIP_ATOL <= arg <= 1.0 + ROUNDTRIP_ATOL:
        raise InvalidStrength(f"strength {x} gives arccos argument {arg}")
    return math.acos(min(1.0, max(-1.0, arg)))


def theta_of(p: float, omega: float) -> float:
    return _angle(p * omega)


def phi_of(q: float) -> float:
    return _angle(q)


def strength_of_angle(angle: float) -> float:
    """Inverse of the angle maps: ``sin^2(angle / 2)``."""
    return math.sin(0.5 * angle) ** 2


def _check_angle(angle: float) -> None:
    if not 0.0 <= angle <= math.pi:
        raise InvalidStrength(f"angle {angle} outside [0, pi]")


def dilation_unitary_a(theta: float) -> np.ndarray:
    """Rotation by ``theta / 2`` inside span{|00>, |11>}; other basis states fixed."""
    _check_angle(theta)
    c, s = math.cos(0.5 * theta), math.sin(0.5 * theta)
    u = np.eye(4, dtype=complex)
    u[0, 0], u[3, 0] = c, s
    u[0, 3], u[3, 3] = -s, c
    return u


def dilation_unitary_b(phi: float) -> np.ndarray:
    """Rotation by ``phi / 2`` inside span{|10>, |01>}; other basis states fixed."""
    _check_angle(phi)
    c, s = math.cos(0.5 * phi), math.sin(0.5 * phi)
    u = np.eye(4, dtype=complex)
    u[2, 2], u[1, 2] = c, s
    u[2, 1], u[1, 1] = -s, c
    return u


def dilated_map(u: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """System map ``rho -> tr_anc[U (rho (x) |0><0|) U^dag]``."""

    def _map(rho):
        joint = tensor_product(rho, PROJ0)
        return partial_trace(u @ joint @ u.conj().T, keep=0)

    return _map


def kraus_from_dilation(u: np.ndarray) -> KrausChannel:
    """Kraus operators ``<k|_anc U |0>_anc`` of a system-ancilla unitary."""
    t = as_matrix(u).reshape(2, 2, 2, 2)
    return KrausChannel(tuple(t[:, k, :, 0] for k in range(2)), label="dilation")


def choi_matrix(channel_map: Callable[[np.ndarray], np.ndarray], dim: int = 2, check_tp: bool = True) -> np.ndarray:
    """Unit-trace Choi matrix ``sum_ij |i><j| (x) map(|i><j|) / dim``.

    The input factor comes first. Raises :class:`NotTracePreserving` if the
    output-reduced Choi matrix deviates from ``I / dim`` by more than 1e-8.
    """
    choi = np.zeros((dim * dim, dim * dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[i, j] = 1.0
            choi += np.kron(e, np.asarray(channel_map(e), dtype=complex))
    choi /= dim
    if check_tp:
        reduced = np.einsum("ijkj->ik", choi.reshape(dim, dim, dim, dim))
        if np.abs(reduced - np.eye(dim) / dim).max() > CHOI_TP_ATOL:
            raise NotTracePreserving("map does not preserve the trace on the probe basis")
    return choi


def process_fidelity(choi1, choi2) -> float:
    """Uhlmann fidelity between two unit-trace Choi matrices."""
    return state_fidelity(choi1, choi2)


def choi_eigenvalues(choi) -> np.ndarray:
    m = as_matrix(choi)
    return np.linalg.eigvalsh(0.5 * (m + m.conj().T))


def kraus_from_choi(choi, dim: int = 2, cutoff: float = 1e-12) -> KrausChannel:
    """Recover a Kraus list from a unit-trace Choi matrix (input factor first)."""
    w, v = np.linalg.eigh(dim * as_matrix(choi))
    ops = []
    for lam, vec in zip(w, v.T):
        if lam > cutoff:
            # vec indexed (in, out) -> K[out, in]
            ops.append(math.sqrt(lam) * vec.reshape(dim, dim).T)
    return KrausChannel(tuple(ops), label="from-choi")


def compose(*channels: Sequence[KrausChannel]) -> KrausChannel:
    """Channel applying ``channels[0]`` first, then ``channels[1]``, and so on."""
    ops = [np.eye(channels[0].dim, dtype=complex)]
    for ch in channels:
        ops = [k @ o for o in ops for k in ch.ops]
    return KrausChannel(tuple(ops), label=" then ".join(c.label for c in channels))


__all__ = [
    "KrausChannel",
    "StrengthParams",
    "apply",
    "choi_matrix",
    "compose",
    "dilated_map",
    "dilation_unitary_a",
    "dilation_unitary_b",
    "identity_channel",
    "kraus_a",
    "kraus_b",
    "kraus_from_dilation",
    "phi_of",
    "process_fidelity",
    "q_star",
    "theta_of",
]
