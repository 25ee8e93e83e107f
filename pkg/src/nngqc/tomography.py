"""Simulated state and process tomography with shot noise and imperfect preparation.

State tomography follows the three-setting Stokes protocol: population
measurements of ``|e>`` before and after a swapping pi pulse, preceded by
nothing (S3), a ``theta = phi = pi/2`` pulse (S1) or a ``theta = pi/2,
phi = 0`` pulse (S2).  Each measurement is a binomial draw of ``n_shots``.

Process tomography is linear inversion over the operator basis
``{I, sigma_x, -i sigma_y, sigma_z}`` from the four inputs
``|g>, |e>, (|g>+|e>)/sqrt2, (|g>-i|e>)/sqrt2``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .core import (KET_E, StokesVector, density_from_stokes, ket, pauli, projector,
                   stokes)
from .schemes import pulse_unitary

CHI_BASIS = ("I", "X", "-iY", "Z")
OPERATOR_BASIS = (pauli(0), pauli(1), -1j * pauli(2), pauli(3))

_LAMBDA = 0.5 * np.block([[pauli(0), pauli(1)], [pauli(1), -pauli(0)]])

# analysis pulses, applied before reading out the |e> population
_SETTINGS = {
    1: pulse_unitary(np.pi / 2, np.pi / 2),  # U_x
    2: pulse_unitary(np.pi / 2, 0.0),        # U_y
    3: np.eye(2, dtype=complex),
}
_SWAP = pulse_unitary(np.pi, 0.0)


@dataclass(frozen=True)
class ShotConfig:
    n_shots: int
    seed: int = 0

    def __post_init__(self):
        if int(self.n_shots) < 1:
            raise ValueError("n_shots must be >= 1")

    def rng(self, *key: int) -> np.random.Generator:
        """Independent stream for a measurement identified by ``key``."""
        ss = np.random.SeedSequence(self.seed, spawn_key=tuple(int(k) for k in key))
        return np.random.default_rng(ss)


@dataclass(frozen=True)
class SpamModel:
    """Ground-state preparation with population ``p``; the rest sits in ``|e>``."""

    p: float

    def __post_init__(self):
        if not 0 < self.p <= 1:
            raise ValueError(f"preparation fidelity must be in (0, 1], got {self.p}")


def spam_apply(rho_intended: np.ndarray, spam: SpamModel | None) -> np.ndarray:
    """``p rho + (1-p)|e><e|``: incoherent residual population, no residual coherence."""
    rho_intended = np.asarray(rho_intended, dtype=complex)
    if spam is None or spam.p == 1:
        return rho_intended
    return spam.p * rho_intended + (1 - spam.p) * projector(KET_E)


def spam_calibrate(data, p: float, residual):
    """Undo the preparation mixture on any linear datum.

    ``data`` was produced as ``p * clean + (1-p) * residual``; ``residual`` is
    the same datum for the residual input (e.g. the measured output of the
    ``|e>`` input, or its fidelity).  Works on numbers and arrays alike.
    """
    if not 0 < p <= 1:
        raise ValueError(f"preparation fidelity must be in (0, 1], got {p}")
    return (np.asarray(data) - (1 - p) * np.asarray(residual)) / p


def readout_probabilities(rho: np.ndarray) -> dict[int, tuple[float, float]]:
    """``(P_e, P_g)`` per Stokes setting, both read as the ``|e>`` population."""
    rho = np.asarray(rho, dtype=complex)
    out = {}
    for k, u in _SETTINGS.items():
        r = u @ rho @ u.conj().T
        r_swapped = _SWAP @ r @ _SWAP.conj().T
        out[k] = (float(np.clip(r[0, 0].real, 0, 1)), float(np.clip(r_swapped[0, 0].real, 0, 1)))
    return out


def projection_error(p, n_shots: int):
    """Binomial standard error ``sqrt(p(1-p)/N)`` of one population estimate."""
    p = np.asarray(p, dtype=float)
    return np.sqrt(p * (1 - p) / n_shots)


def qst(rho: np.ndarray, shots: ShotConfig | None = None, key: tuple = ()) -> StokesVector:
    """Stokes vector from the readout protocol; exact when ``shots`` is None.

    ``key`` distinguishes independent tomography runs under one seed.
    """
    probs = readout_probabilities(rho)
    s = [1.0, 0.0, 0.0, 0.0]
    for k, (pe, pg) in probs.items():
        if shots is not None:
            n = int(shots.n_shots)
            pe = shots.rng(*key, k, 0).binomial(n, pe) / n
            pg = shots.rng(*key, k, 1).binomial(n, pg) / n
        s[k] = pe - pg
    return StokesVector(*s)


def stokes_errors(rho: np.ndarray, n_shots: int) -> np.ndarray:
    """Expected ``dS_k`` (k = 0..3) for the two independent readouts per setting."""
    probs = readout_probabilities(rho)
    ds = np.zeros(4)
    for k, (pe, pg) in probs.items():
        ds[k] = np.hypot(projection_error(pe, n_shots), projection_error(pg, n_shots))
    return ds


def state_fidelity_error(ds, s_id) -> float:
    """``sqrt(1/4 sum_k (dS_k S_id,k)^2)``."""
    ds = np.asarray(ds, dtype=float)
    if np.any(ds < 0):
        raise ValueError("error vector must be non-negative")
    s_id = s_id.as_array() if isinstance(s_id, StokesVector) else np.asarray(s_id, dtype=float)
    return float(np.sqrt(0.25 * np.sum((ds * s_id) ** 2)))


@dataclass(frozen=True)
class ProcessMatrix:
    chi: np.ndarray

    def __post_init__(self):
        if np.shape(self.chi) != (4, 4):
            raise ValueError(f"chi must be 4x4, got {np.shape(self.chi)}")

    def physicality(self) -> dict:
        chi = self.chi
        return {
            "hermiticity_error": float(np.max(np.abs(chi - chi.conj().T))),
            "trace": float(np.trace(chi).real),
            "min_eigenvalue": float(np.linalg.eigvalsh(0.5 * (chi + chi.conj().T))[0]),
        }

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """``sum_mn chi_mn A_m rho A_n^dag``."""
        rho = np.asarray(rho, dtype=complex)
        return sum(self.chi[m, n] * OPERATOR_BASIS[m] @ rho @ OPERATOR_BASIS[n].conj().T
                   for m in range(4) for n in range(4))

    def to_dict(self) -> dict:
        return {"basis": list(CHI_BASIS),
                "re": np.real(self.chi).tolist(),
                "im": np.imag(self.chi).tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ProcessMatrix":
        if list(d["basis"]) != list(CHI_BASIS):
            raise ValueError(f"unexpected chi basis {d['basis']!r}")
        return cls(np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float))

    def to_json(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")
        return path

    @classmethod
    def from_json(cls, path) -> "ProcessMatrix":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


PROCESS_INPUTS = ("g", "e", "+", "-")


def process_outputs(channel: Callable[[np.ndarray], np.ndarray],
                    shots: ShotConfig | None = None, spam: SpamModel | None = None,
                    key: tuple = ()) -> dict[str, np.ndarray]:
    """Reconstructed output state for each tomography input."""
    out = {}
    for i, label in enumerate(PROCESS_INPUTS):
        rho_out = channel(spam_apply(projector(ket(label)), spam))
        if shots is None:
            out[label] = np.asarray(rho_out, dtype=complex)
        else:
            out[label] = density_from_stokes(qst(rho_out, shots, key=(*key, i)))
    return out


def chi_from_outputs(outputs: dict[str, np.ndarray]) -> ProcessMatrix:
    """Linear-inversion chi from the four measured output states."""
    r_g, r_e, r_p, r_m = (np.asarray(outputs[k], dtype=complex) for k in PROCESS_INPUTS)
    pops = r_g + r_e
    r_ge = r_p - 1j * r_m - 0.5 * (1 - 1j) * pops  # image of |g><e|
    r_eg = r_p + 1j * r_m - 0.5 * (1 + 1j) * pops  # image of |e><g|
    # block rows/columns follow the basis order (|e>, |g>)
    block = np.block([[r_e, r_eg], [r_ge, r_g]])
    return ProcessMatrix(_LAMBDA @ block @ _LAMBDA)


def qpt(channel: Callable[[np.ndarray], np.ndarray], shots: ShotConfig | None = None,
        spam: SpamModel | None = None, calibrate: bool = False,
        key: tuple = ()) -> ProcessMatrix:
    """Process matrix of ``channel`` by linear inversion.

    With ``calibrate`` the known preparation residual is removed from every
    output using the measured output of the ``|e>`` input, which is exactly
    the residual's image.
    """
    outputs = process_outputs(channel, shots, spam, key)
    if calibrate and spam is not None:
        residual = outputs["e"]
        outputs = {k: spam_calibrate(v, spam.p, residual) for k, v in outputs.items()}
    return chi_from_outputs(outputs)


def unitary_channel(u: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    u = np.asarray(u, dtype=complex)
    return lambda rho: u @ rho @ u.conj().T


def chi_ideal(u: np.ndarray) -> ProcessMatrix:
    return qpt(unitary_channel(u))


def process_fidelity(chi_a, chi_b) -> float:
    """``Re Tr[chi_a chi_b]``."""
    a = chi_a.chi if isinstance(chi_a, ProcessMatrix) else np.asarray(chi_a)
    b = chi_b.chi if isinstance(chi_b, ProcessMatrix) else np.asarray(chi_b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.real(np.trace(a @ b)))


def measured_state(rho: np.ndarray, shots: ShotConfig | None = None,
                   key: tuple = ()) -> np.ndarray:
    """Density matrix as reconstructed from (possibly shot-limited) tomography."""
    if shots is None:
        return density_from_stokes(stokes(rho))
    return density_from_stokes(qst(rho, shots, key))
