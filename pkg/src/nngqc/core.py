"""Small dense linear algebra for a single qubit.

Basis ordering is ``(|e>, |g>)``: index 0 is the excited (upper) level.  In
this ordering the drive term ``e^{i phi}|e><g|`` is the textbook raising
operator, ``sigma_z = |e><e| - |g><g|`` and the Stokes components
``S_k = Tr[sigma_k rho]`` coincide with the population differences that
a projective readout actually records (``S3 = P_e - P_g``).
"""

from __future__ import annotations

from dataclasses import dataclass
import warnings

import numpy as np

UNITARY_TOL = 1e-12
PHYSICAL_TOL = 1e-10

EXCITED = 0
GROUND = 1

KET_E = np.array([1.0, 0.0], dtype=complex)
KET_G = np.array([0.0, 1.0], dtype=complex)

_PAULIS = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

SIGMA_PLUS = np.outer(KET_E, KET_G.conj())  # |e><g|
SIGMA_MINUS = SIGMA_PLUS.T.copy()

# Target gates written in the (|e>, |g>) basis.
U1 = np.array([[1 + 1j, -1 - 1j], [1 - 1j, 1 - 1j]], dtype=complex) / 2
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


class NumericalFailure(RuntimeError):
    """Raised when an integration or fit produces an unusable result."""


def pauli(index: int) -> np.ndarray:
    """Return ``I, sigma_x, sigma_y, sigma_z`` for ``index`` 0..3."""
    if index not in (0, 1, 2, 3):
        raise ValueError(f"pauli index must be 0..3, got {index!r}")
    return _PAULIS[index].copy()


def ket(label: str) -> np.ndarray:
    """Named single-qubit states used throughout the package.

    ``"+"`` is ``(|g>+|e>)/sqrt2`` and ``"-"`` is ``(|g>-i|e>)/sqrt2``, the
    two superposition inputs of the process-tomography protocol.
    """
    states = {
        "g": KET_G,
        "e": KET_E,
        "+": (KET_G + KET_E) / np.sqrt(2),
        "-": (KET_G - 1j * KET_E) / np.sqrt(2),
    }
    try:
        return states[label].copy()
    except KeyError:
        raise ValueError(f"unknown state label {label!r}") from None


def projector(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def rotation(axis: str, angle: float) -> np.ndarray:
    """``exp(-i angle sigma_axis / 2)`` for ``axis`` in ``{"x", "y", "z"}``."""
    if not np.isfinite(angle):
        raise ValueError("rotation angle must be finite")
    try:
        sigma = _PAULIS[{"x": 1, "y": 2, "z": 3}[axis]]
    except KeyError:
        raise ValueError(f"axis must be 'x', 'y' or 'z', got {axis!r}") from None
    return np.cos(angle / 2) * _PAULIS[0] - 1j * np.sin(angle / 2) * sigma


def compose_zxz(theta: float, alpha: float, beta: float) -> np.ndarray:
    """``Z_beta X_theta Z_alpha``."""
    return rotation("z", beta) @ rotation("x", theta) @ rotation("z", alpha)


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol)


def gate_equivalence(u: np.ndarray, v: np.ndarray, tol: float = 1e-8) -> float:
    """Global-phase-insensitive overlap ``|Tr(U^dag V)| / d``.

    Equal to one exactly when ``U = e^{i phi} V``.
    """
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if u.shape != v.shape or u.shape[0] != u.shape[1]:
        raise ValueError(f"shape mismatch: {u.shape} vs {v.shape}")
    if not (is_unitary(u, tol) and is_unitary(v, tol)):
        raise ValueError("gate_equivalence requires unitary inputs")
    return float(min(1.0, abs(np.trace(u.conj().T @ v)) / u.shape[0]))


def check_density(rho: np.ndarray, tol: float = PHYSICAL_TOL) -> np.ndarray:
    """Validate a density matrix and return it as a complex array.

    Small negative eigenvalues inside ``(-tol, 0)`` are tolerated but the
    matrix itself is never modified.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    herm_err = np.max(np.abs(rho - rho.conj().T))
    if herm_err > tol:
        raise ValueError(f"density matrix not Hermitian (error {herm_err:.3e})")
    if abs(np.trace(rho).real - 1.0) > tol:
        raise ValueError(f"density matrix trace {np.trace(rho).real:.12f} != 1")
    lowest = np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0]
    if lowest < -tol:
        raise ValueError(f"density matrix has negative eigenvalue {lowest:.3e}")
    return rho


def is_pure(rho: np.ndarray, tol: float = 1e-8) -> bool:
    return abs(np.trace(rho @ rho).real - 1.0) <= tol


def state_fidelity(rho_exp: np.ndarray, rho_id: np.ndarray) -> float:
    """``Tr[rho_exp rho_id]``; a true fidelity only for a pure reference."""
    rho_exp = np.asarray(rho_exp, dtype=complex)
    rho_id = np.asarray(rho_id, dtype=complex)
    if rho_exp.shape != rho_id.shape:
        raise ValueError(f"dimension mismatch: {rho_exp.shape} vs {rho_id.shape}")
    if not is_pure(rho_id):
        warnings.warn("reference state is mixed; Tr[rho sigma] is not a fidelity",
                      stacklevel=2)
    return float(np.real(np.trace(rho_exp @ rho_id)))


@dataclass(frozen=True)
class StokesVector:
    s0: float
    s1: float
    s2: float
    s3: float

    @classmethod
    def from_array(cls, values) -> "StokesVector":
        s = np.asarray(values, dtype=float)
        return cls(*(float(x) for x in s))

    def as_array(self) -> np.ndarray:
        return np.array([self.s0, self.s1, self.s2, self.s3])

    @property
    def bloch(self) -> np.ndarray:
        return np.array([self.s1, self.s2, self.s3])

    def dot(self, other: "StokesVector") -> float:
        return float(self.as_array() @ other.as_array())


def stokes(rho: np.ndarray) -> StokesVector:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError(f"Stokes parameters need a qubit state, got shape {rho.shape}")
    return StokesVector(*(float(np.real(np.trace(p @ rho))) for p in _PAULIS))


def density_from_stokes(s: StokesVector) -> np.ndarray:
    """Inverse of :func:`stokes`: ``rho = 1/2 sum_k S_k sigma_k``."""
    return 0.5 * sum(c * p for c, p in zip(s.as_array(), _PAULIS))


def bloch_vectors(rhos: np.ndarray) -> np.ndarray:
    """Vectorised ``(S1, S2, S3)`` for a stack of qubit density matrices."""
    rhos = np.asarray(rhos, dtype=complex)
    return np.stack([np.real(np.einsum("ij,...ji->...", p, rhos)) for p in _PAULIS[1:]],
                    axis=-1)
