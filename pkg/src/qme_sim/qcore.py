"""Dense linear algebra for one- and two-qubit density matrices.

States and operators are plain ``numpy`` complex arrays. Two-qubit objects
are ordered system (13C) first, ancilla (1H) second, so ``|q_C q_H>`` maps
to the computational index ``2 * q_C + q_H``.
"""
from __future__ import annotations

import numpy as np
from scipy.stats import unitary_group

from .errors import BadSubsystem, DimMismatch, InvalidState, NotUnitary, UnsupportedDimension

HERMITIAN_ATOL = 1e-12
TRACE_ATOL = 1e-12
PSD_ATOL = 1e-10
UNITARY_ATOL = 1e-12
ENTROPY_CUTOFF = 1e-14
MAX_DIM = 4

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"x": SX, "y": SY, "z": SZ}

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
PROJ0 = np.outer(KET0, KET0.conj())
PROJ1 = np.outer(KET1, KET1.conj())


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimMismatch(f"expected a square matrix, got shape {m.shape}")
    return m


def dag(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def is_hermitian(a, atol: float = HERMITIAN_ATOL) -> bool:
    m = as_matrix(a)
    return bool(np.allclose(m, m.conj().T, rtol=0.0, atol=atol))


def check_state(rho, atol_psd: float = PSD_ATOL) -> np.ndarray:
    """Return ``rho`` as a complex array after checking it is a density matrix.

    Raises :class:`InvalidState` when ``rho`` is not Hermitian, not unit
    trace or has an eigenvalue below ``-atol_psd``.
    """
    m = as_matrix(rho)
    if m.shape[0] not in (2, MAX_DIM):
        raise UnsupportedDimension(f"only 1- and 2-qubit states are supported, got dim {m.shape[0]}")
    if not is_hermitian(m):
        raise InvalidState("matrix is not Hermitian")
    tr = np.trace(m)
    if abs(tr - 1.0) > TRACE_ATOL:
        raise InvalidState(f"trace is {tr.real:.3e}, expected 1")
    if np.linalg.eigvalsh(m).min() < -atol_psd:
        raise InvalidState("matrix is not positive semidefinite")
    return m


def is_state(rho, atol_psd: float = PSD_ATOL) -> bool:
    try:
        check_state(rho, atol_psd)
    except (InvalidState, UnsupportedDimension, DimMismatch):
        return False
    return True


def ket_to_dm(psi) -> np.ndarray:
    v = np.asarray(psi, dtype=complex).ravel()
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product ``a (x) b`` with ``a`` as the leading (system) factor."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[0] * b.shape[0] > MAX_DIM:
        raise UnsupportedDimension(
            f"product dimension {a.shape[0] * b.shape[0]} exceeds the two-qubit limit"
        )
    return np.kron(a, b)


def partial_trace(rho, keep: int) -> np.ndarray:
    """Reduce a two-qubit matrix to subsystem ``keep`` (0 = system, 1 = ancilla)."""
    m = as_matrix(rho)
    if m.shape != (4, 4):
        raise DimMismatch(f"partial_trace needs a 4x4 matrix, got {m.shape}")
    if keep not in (0, 1):
        raise BadSubsystem(f"subsystem index must be 0 or 1, got {keep!r}")
    t = m.reshape(2, 2, 2, 2)
    if keep == 0:
        return np.einsum("ijkj->ik", t)
    return np.einsum("jijk->ik", t)


def spectrum(rho) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix in ascending order."""
    m = as_matrix(rho)
    return np.linalg.eigvalsh(0.5 * (m + m.conj().T))


def von_neumann_entropy(rho) -> float:
    """``-tr(rho ln rho)`` in nats; eigenvalues below 1e-14 contribute zero."""
    w = spectrum(rho)
    w = w[w > ENTROPY_CUTOFF]
    return float(-np.sum(w * np.log(w))) + 0.0


def expectation(op, rho) -> float:
    a = as_matrix(op)
    m = as_matrix(rho)
    if a.shape != m.shape:
        raise DimMismatch(f"operator {a.shape} and state {m.shape} differ in dimension")
    # tr(A rho) without forming the product
    return float(np.real(np.sum(a * m.T)))


def check_unitary(u, atol: float = UNITARY_ATOL) -> np.ndarray:
    u = as_matrix(u)
    if not np.allclose(u.conj().T @ u, np.eye(u.shape[0]), rtol=0.0, atol=atol):
        raise NotUnitary("U^dagger U differs from the identity")
    return u


def evolve_unitary(rho, u) -> np.ndarray:
    m = as_matrix(rho)
    u = check_unitary(u)
    if u.shape != m.shape:
        raise DimMismatch(f"unitary {u.shape} and state {m.shape} differ in dimension")
    return u @ m @ u.conj().T


def psd_sqrt(m) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    w = np.sqrt(np.clip(w, 0.0, None))
    return (v * w) @ v.conj().T


def state_fidelity(rho, sigma) -> float:
    """Uhlmann fidelity ``tr|sqrt(rho) sqrt(sigma)|`` (not squared).

    Computed as the nuclear norm of ``sqrt(rho) sqrt(sigma)``, which stays
    accurate for rank-deficient arguments.
    """
    a = as_matrix(rho)
    b = as_matrix(sigma)
    if a.shape != b.shape:
        raise DimMismatch(f"states {a.shape} and {b.shape} differ in dimension")
    f = np.linalg.svd(psd_sqrt(a) @ psd_sqrt(b), compute_uv=False).sum()
    return float(min(max(f, 0.0), 1.0))


def rotation(axis: str, angle: float) -> np.ndarray:
    """Single-qubit rotation ``exp(-i angle sigma_axis / 2)``."""
    s = PAULI[axis]
    return np.cos(angle / 2) * I2 - 1j * np.sin(angle / 2) * s


def random_state(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density matrix from a Ginibre ensemble."""
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    return unitary_group.rvs(dim, random_state=rng)
