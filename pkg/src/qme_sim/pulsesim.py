"""Two-spin pulse-level backend for the measurement channels.

Sequences are built from three primitives: instantaneous (or finite
nutation-rate) local rotations, free evolution under the scalar coupling
``H_J = (h/4) J sigma_z (x) sigma_z`` and z-gradient dephasing. Each
dilation unitary is synthesised from ``exp(-i a P (x) Q)`` blocks, every
block being a J-coupling interval conjugated by local rotations.

Relaxation is applied after each primitive over its duration (first-order
splitting), per spin, as generalized amplitude damping at rate ``1/T1``
plus pure dephasing at rate ``1/T2 - 1/(2 T1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

import numpy as np

from . import constants
from .channels import choi_matrix, kraus_a, kraus_b, process_fidelity, q_star, theta_of
from .errors import InvalidNoise, NotTracePreserving, QmeError
from .qcore import I2, PROJ0, SZ, check_state, partial_trace, rotation, tensor_product

ROTATION = "rotation"
J_EVOLUTION = "j_evolution"
GRADIENT = "gradient"
SPINS = ("C", "H", "both")
AXES = ("x", "y", "z")

# local rotation L with L Z L^dag = (sign) P, as (axis, angle)
_FRAME = {
    ("x", 1): ("y", math.pi / 2),
    ("x", -1): ("y", -math.pi / 2),
    ("y", 1): ("x", -math.pi / 2),
    ("y", -1): ("x", math.pi / 2),
}


@dataclass(frozen=True)
class PulseOp:
    kind: str
    spin: str = "both"
    axis: Optional[str] = None
    angle: float = 0.0
    duration: float = 0.0

    def __post_init__(self):
        if self.kind not in (ROTATION, J_EVOLUTION, GRADIENT):
            raise QmeError(f"unknown pulse kind {self.kind!r}")
        if self.spin not in SPINS:
            raise QmeError(f"unknown spin {self.spin!r}")
        if self.kind == ROTATION:
            if self.axis not in AXES:
                raise QmeError(f"unknown rotation axis {self.axis!r}")
            if not -2 * math.pi < self.angle <= 2 * math.pi:
                raise QmeError(f"rotation angle {self.angle} outside (-2pi, 2pi]")
        if not self.duration >= 0:
            raise QmeError(f"negative duration {self.duration}")


def rot(spin: str, axis: str, angle: float, nutation_hz: Optional[float] = None) -> PulseOp:
    duration = 0.0 if not nutation_hz else abs(angle) / (2 * math.pi * nutation_hz)
    return PulseOp(ROTATION, spin, axis, float(angle), duration)


def jev(seconds: float) -> PulseOp:
    return PulseOp(J_EVOLUTION, "both", None, 0.0, float(seconds))


def grad() -> PulseOp:
    return PulseOp(GRADIENT)


@dataclass(frozen=True)
class PulseSequence:
    ops: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))

    @property
    def total_duration(self) -> float:
        return math.fsum(op.duration for op in self.ops)

    def __len__(self) -> int:
        return len(self.ops)

    def __iter__(self) -> Iterator[PulseOp]:
        return iter(self.ops)

    def __add__(self, other: "PulseSequence") -> "PulseSequence":
        return PulseSequence(self.ops + tuple(other.ops))

    def to_text(self) -> str:
        lines = [f"# {len(self.ops)} ops, {self.total_duration:.12g} s"]
        for op in self.ops:
            if op.kind == ROTATION:
                lines.append(f"ROT {op.spin} {op.axis} {op.angle:.17g}")
            elif op.kind == J_EVOLUTION:
                lines.append(f"JEV {op.duration:.17g}")
            else:
                lines.append("GRAD")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, nutation_hz: Optional[float] = None) -> "PulseSequence":
        ops = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            head = parts[0].upper()
            try:
                if head == "ROT" and len(parts) == 4:
                    ops.append(rot(parts[1], parts[2], float(parts[3]), nutation_hz))
                elif head == "JEV" and len(parts) == 2:
                    ops.append(jev(float(parts[1])))
                elif head == "GRAD" and len(parts) == 1:
                    ops.append(grad())
                else:
                    raise QmeError(f"cannot parse {raw!r}")
            except (ValueError, QmeError) as exc:
                raise QmeError(f"line {lineno}: {exc}") from exc
        return cls(tuple(ops))


@dataclass(frozen=True)
class NoiseModel:
    """T1/T2 relaxation per spin.

    ``p1_eq_*`` is the stationary population of ``|1>`` that each spin
    relaxes toward; 0.5 is the high-temperature limit appropriate for
    room-temperature NMR.
    """

    t1_h: float = constants.T1_H_S
    t1_c: float = constants.T1_C_S
    t2_h: float = constants.T2_H_S
    t2_c: float = constants.T2_C_S
    enabled: bool = True
    p1_eq_h: float = 0.5
    p1_eq_c: float = 0.5

    def __post_init__(self):
        for name in ("t1_h", "t1_c", "t2_h", "t2_c"):
            if not getattr(self, name) > 0:
                raise InvalidNoise(f"{name} must be positive")
        for spin in ("h", "c"):
            if getattr(self, f"t2_{spin}") > 2 * getattr(self, f"t1_{spin}"):
                raise InvalidNoise(f"T2 exceeds 2 T1 for spin {spin.upper()}")
            if not 0.0 <= getattr(self, f"p1_eq_{spin}") <= 1.0:
                raise InvalidNoise(f"p1_eq_{spin} must lie in [0, 1]")

    @classmethod
    def off(cls) -> "NoiseModel":
        return cls(enabled=False)


def _embed(single: np.ndarray, spin: str) -> np.ndarray:
    if spin == "C":
        return np.kron(single, I2)
    if spin == "H":
        return np.kron(I2, single)
    return np.kron(single, single)


def j_unitary(seconds: float, j_hz: float = constants.J_COUPLING_HZ) -> np.ndarray:
    """``exp(-i pi J t sigma_z sigma_z / 2)``."""
    phase = 0.5 * math.pi * j_hz * seconds
    zz = np.array([1.0, -1.0, -1.0, 1.0])
    return np.diag(np.exp(-1j * phase * zz))


def op_unitary(op: PulseOp, j_hz: float = constants.J_COUPLING_HZ) -> np.ndarray:
    if op.kind == ROTATION:
        return _embed(rotation(op.axis, op.angle), op.spin)
    if op.kind == J_EVOLUTION:
        return j_unitary(op.duration, j_hz)
    raise QmeError("gradient dephasing is not unitary")


def sequence_unitary(seq: PulseSequence, j_hz: float = constants.J_COUPLING_HZ) -> np.ndarray:
    u = np.eye(4, dtype=complex)
    for op in seq:
        u = op_unitary(op, j_hz) @ u
    return u


# number of excitations of |q_C q_H>
_EXCITATIONS = np.array([0, 1, 1, 2])
_SAME_ORDER = _EXCITATIONS[:, None] == _EXCITATIONS[None, :]


def gradient_dephase(rho) -> np.ndarray:
    """Erase coherences between states of different total magnetic quantum number."""
    return np.where(_SAME_ORDER, np.asarray(rho, dtype=complex), 0.0)


def _spin_kraus(dt: float, t1: float, t2: float, p1_eq: float) -> list:
    if math.isinf(dt):
        gamma, lam = 1.0, 0.0
    else:
        gamma = -math.expm1(-dt / t1)
        lam = math.exp(-dt * (1.0 / t2 - 0.5 / t1))
    a = math.sqrt(1.0 - gamma)
    b = math.sqrt(gamma)
    n0, n1 = math.sqrt(1.0 - p1_eq), math.sqrt(p1_eq)
    gad = [
        n0 * np.array([[1.0, 0.0], [0.0, a]]),
        n0 * np.array([[0.0, b], [0.0, 0.0]]),
        n1 * np.array([[a, 0.0], [0.0, 1.0]]),
        n1 * np.array([[0.0, 0.0], [b, 0.0]]),
    ]
    dephase = [math.sqrt(0.5 * (1.0 + lam)) * I2, math.sqrt(0.5 * (1.0 - lam)) * SZ]
    return [d @ g for g in gad for d in dephase]


def relaxation_kraus(dt: float, noise: NoiseModel) -> list:
    """Two-spin Kraus list for relaxation over ``dt`` seconds."""
    kc = _spin_kraus(dt, noise.t1_c, noise.t2_c, noise.p1_eq_c)
    kh = _spin_kraus(dt, noise.t1_h, noise.t2_h, noise.p1_eq_h)
    return [np.kron(a, b) for a in kc for b in kh]


def relaxation_step(rho, dt: float, noise: NoiseModel) -> np.ndarray:
    if dt < 0:
        raise QmeError(f"negative time step {dt}")
    if not noise.enabled or dt == 0:
        return np.asarray(rho, dtype=complex)
    m = np.asarray(rho, dtype=complex)
    return sum(k @ m @ k.conj().T for k in relaxation_kraus(dt, noise))


def _propagate(
    seq: PulseSequence,
    rho: np.ndarray,
    noise: Optional[NoiseModel],
    j_hz: float,
    max_step: Optional[float],
    callback: Optional[Callable[[int, np.ndarray], None]] = None,
) -> np.ndarray:
    noisy = noise is not None and noise.enabled
    for index, op in enumerate(seq):
        if op.kind == GRADIENT:
            rho = gradient_dephase(rho)
            if noisy and op.duration > 0:
                rho = relaxation_step(rho, op.duration, noise)
        else:
            n_sub = 1
            if noisy and max_step and op.duration > max_step:
                n_sub = math.ceil(op.duration / max_step)
            dt = op.duration / n_sub
            if op.kind == ROTATION:
                u = _embed(rotation(op.axis, op.angle / n_sub), op.spin)
            else:
                u = j_unitary(dt, j_hz)
            for _ in range(n_sub):
                rho = u @ rho @ u.conj().T
                if noisy and dt > 0:
                    rho = relaxation_step(rho, dt, noise)
        if callback is not None:
            callback(index, rho)
    return rho


def simulate(
    seq: PulseSequence,
    rho,
    noise: Optional[NoiseModel] = None,
    j_hz: float = constants.J_COUPLING_HZ,
    max_step: Optional[float] = None,
    callback: Optional[Callable[[int, np.ndarray], None]] = None,
) -> np.ndarray:
    """Propagate a two-spin state through ``seq``.

    ``max_step`` subdivides long primitives so relaxation is interleaved
    more finely; by default every primitive is followed by one relaxation
    step. ``callback(index, rho)`` sees the state after each primitive.
    """
    m = check_state(rho)
    if m.shape != (4, 4):
        raise QmeError("simulate needs a two-spin state")
    return _propagate(seq, m.copy(), noise, j_hz, max_step, callback)


# --- compiler -----------------------------------------------------------------


def _pauli_block(alpha: float, p_c: str, p_h: str, j_hz: float, nutation_hz) -> list:
    """Ops realising ``exp(-i alpha P_C (x) P_H)`` for P in {x, y}."""
    sign = 1
    if alpha < 0:
        alpha, sign = -alpha, -1
    c_axis, c_angle = _FRAME[(p_c, sign)]
    h_axis, h_angle = _FRAME[(p_h, 1)]
    t = 2.0 * alpha / (math.pi * j_hz)
    return [
        rot("C", c_axis, -c_angle, nutation_hz),
        rot("H", h_axis, -h_angle, nutation_hz),
        jev(t),
        rot("C", c_axis, c_angle, nutation_hz),
        rot("H", h_axis, h_angle, nutation_hz),
    ]


def _wrap(angle: float) -> float:
    a = math.fmod(angle, 4 * math.pi)
    if a <= -2 * math.pi:
        a += 4 * math.pi
    elif a > 2 * math.pi:
        a -= 4 * math.pi
    return a


def _is_trivial(angle: float, tol: float = 1e-15) -> bool:
    # rotations by 0 or +-2 pi only change the global phase
    return abs(angle) < tol or abs(abs(angle) - 2 * math.pi) < tol


def simplify(seq: PulseSequence, nutation_hz: Optional[float] = None) -> PulseSequence:
    """Cancel redundant primitives without changing the induced two-spin map.

    Rotations on one spin commute with rotations on the other, so each new
    rotation is merged with the latest same-spin rotation about the same
    axis when only other-spin rotations lie between them. Adjacent J
    intervals are merged and zero-length ones dropped; repeated gradients
    collapse to one.
    """
    out: list = []
    for op in seq:
        if op.kind == J_EVOLUTION:
            if op.duration == 0:
                continue
            if out and out[-1].kind == J_EVOLUTION:
                out[-1] = jev(out[-1].duration + op.duration)
                continue
            out.append(op)
        elif op.kind == GRADIENT:
            if out and out[-1].kind == GRADIENT:
                continue
            out.append(op)
        else:
            merged = False
            for k in range(len(out) - 1, -1, -1):
                prev = out[k]
                if prev.kind != ROTATION:
                    break
                if prev.spin == op.spin:
                    if prev.axis == op.axis:
                        angle = _wrap(prev.angle + op.angle)
                        if _is_trivial(angle):
                            del out[k]
                        else:
                            out[k] = rot(op.spin, op.axis, angle, nutation_hz)
                        merged = True
                    break
                if "both" in (prev.spin, op.spin):
                    break
            if not merged and not _is_trivial(op.angle):
                out.append(op)
    return PulseSequence(tuple(out))


def _refocused_delay(seconds: float, nutation_hz) -> list:
    # J(t/4) X J(t/2) X^-1 J(t/4) = identity on the spins
    if seconds <= 0:
        return []
    return [
        jev(0.25 * seconds),
        rot("C", "x", math.pi, nutation_hz),
        jev(0.5 * seconds),
        rot("C", "x", -math.pi, nutation_hz),
        jev(0.25 * seconds),
    ]


def _pad(ops: list, total: Optional[float], nutation_hz) -> list:
    if total is None:
        return ops
    used = math.fsum(op.duration for op in ops)
    if used > total + 1e-15:
        raise QmeError(f"sequence needs {used:.6g} s, longer than the {total:.6g} s budget")
    return ops + _refocused_delay(total - used, nutation_hz)


def raw_channel_a(theta: float, j_hz: float = constants.J_COUPLING_HZ, nutation_hz=None) -> PulseSequence:
    """Unsimplified ops for ``exp(-i theta/4 (X(x)Y + Y(x)X))``."""
    a = 0.25 * theta
    return PulseSequence(
        tuple(_pauli_block(a, "x", "y", j_hz, nutation_hz) + _pauli_block(a, "y", "x", j_hz, nutation_hz))
    )


def raw_channel_b(phi: float, j_hz: float = constants.J_COUPLING_HZ, nutation_hz=None) -> PulseSequence:
    """Unsimplified ops for ``exp(-i phi/4 (X(x)Y - Y(x)X))``."""
    a = 0.25 * phi
    return PulseSequence(
        tuple(_pauli_block(a, "x", "y", j_hz, nutation_hz) + _pauli_block(-a, "y", "x", j_hz, nutation_hz))
    )


def _check_compile_angle(angle: float) -> None:
    if not 0.0 <= angle <= math.pi:
        raise QmeError(f"angle {angle} outside [0, pi]")


def compile_channel_a(
    theta: float,
    j_hz: float = constants.J_COUPLING_HZ,
    nutation_hz: Optional[float] = None,
    total_duration: Optional[float] = None,
) -> PulseSequence:
    """Heating channel at angle ``theta = arccos(1 - 2 p omega)``.

    With ``total_duration`` the sequence is padded by a refocused J delay.
    """
    _check_compile_angle(theta)
    ops = list(simplify(raw_channel_a(theta, j_hz, nutation_hz), nutation_hz))
    return PulseSequence(tuple(_pad(ops, total_duration, nutation_hz)))


def compile_channel_b(
    phi: float,
    j_hz: float = constants.J_COUPLING_HZ,
    nutation_hz: Optional[float] = None,
    total_duration: Optional[float] = None,
) -> PulseSequence:
    """Work channel at angle ``phi = arccos(1 - 2 q)``."""
    _check_compile_angle(phi)
    ops = list(simplify(raw_channel_b(phi, j_hz, nutation_hz), nutation_hz))
    return PulseSequence(tuple(_pad(ops, total_duration, nutation_hz)))


def raw_composed(
    p: float,
    omega: float,
    j_hz: float = constants.J_COUPLING_HZ,
    nutation_hz: Optional[float] = None,
    total_duration: float = constants.TAU_CYCLE_S,
) -> PulseSequence:
    q_star(p, omega)  # validates the engine regime
    ops = list(raw_channel_a(theta_of(p, omega), j_hz, nutation_hz))
    used = math.fsum(op.duration for op in ops)
    rest = total_duration - used
    if rest < 0:
        raise QmeError(f"heating block needs {used:.6g} s, longer than the {total_duration:.6g} s budget")
    # with q = q_star the work channel acts on the heated thermal state as a
    # population inversion; the flip sits mid-delay so it also refocuses J
    ops += [jev(0.5 * rest), rot("C", "x", math.pi, nutation_hz), jev(0.5 * rest)]
    return PulseSequence(tuple(ops))


def compile_composed(
    p: float,
    omega: float,
    j_hz: float = constants.J_COUPLING_HZ,
    nutation_hz: Optional[float] = None,
    total_duration: float = constants.TAU_CYCLE_S,
) -> PulseSequence:
    """Heating then isentropic work stroke, tuned for the thermal input at ``omega``.

    Only valid in the engine regime ``p >= 1/2``. The program reproduces
    ``M_b(q_star) o M_a`` on the Gibbs state whose ``omega`` it was tuned
    for; it is not a channel-level implementation of the composition for
    arbitrary inputs.
    """
    return simplify(raw_composed(p, omega, j_hz, nutation_hz, total_duration), nutation_hz)


def effective_channel(
    seq: PulseSequence,
    noise: Optional[NoiseModel] = None,
    j_hz: float = constants.J_COUPLING_HZ,
    max_step: Optional[float] = None,
) -> np.ndarray:
    """Choi matrix of ``rho_C -> tr_H simulate(seq, rho_C (x) |0><0|)``."""

    def _map(rho_c):
        joint = tensor_product(rho_c, PROJ0)
        return partial_trace(_propagate(seq, joint, noise, j_hz, max_step), keep=0)

    try:
        return choi_matrix(_map, 2)
    except NotTracePreserving as exc:
        raise NotTracePreserving(f"compiled sequence is not trace preserving: {exc}") from exc


def verify_channel(kind: str, angle: float, noise: Optional[NoiseModel] = None, **kwargs) -> float:
    """Process fidelity between a compiled channel and its ideal Kraus form."""
    if kind == "a":
        seq = compile_channel_a(angle, **kwargs)
        ideal = kraus_a(1.0, math.sin(0.5 * angle) ** 2)
    elif kind == "b":
        seq = compile_channel_b(angle, **kwargs)
        ideal = kraus_b(math.sin(0.5 * angle) ** 2)
    else:
        raise QmeError(f"unknown channel {kind!r}")
    return process_fidelity(effective_channel(seq, noise), choi_matrix(ideal))


def angle_grid(n: int = 20, stop: float = math.pi) -> np.ndarray:
    """``n`` equally spaced angles in ``[0, stop)``."""
    return np.linspace(0.0, stop, n, endpoint=False)


__all__ = [
    "NoiseModel",
    "PulseOp",
    "PulseSequence",
    "angle_grid",
    "compile_channel_a",
    "compile_channel_b",
    "compile_composed",
    "effective_channel",
    "gradient_dephase",
    "grad",
    "jev",
    "relaxation_step",
    "rot",
    "simplify",
    "simulate",
    "verify_channel",
]
