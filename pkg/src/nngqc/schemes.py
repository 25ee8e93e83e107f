"""Pulse recipes for the NNGQC, NGQC and DQC single-qubit gate schemes.

Every scheme is realised with piecewise-constant resonant pulses of the drive

    H = (Omega/2) (e^{i phi} |e><g| + e^{-i phi} |g><e|),

so a gate is an ordered list of ``(duration, Omega, phi)`` segments.  The
noncyclic geometric (NNGQC) recipe follows from the auxiliary states

    |Psi_1> = (cos(xi/2) e^{-i eta/2}, sin(xi/2) e^{i eta/2})
    |Psi_2> = (sin(xi/2) e^{-i eta/2}, -cos(xi/2) e^{i eta/2})

with ``xi = Omega0 t - xi0`` and ``eta = phi0 + phi1 * step(t - xi0/Omega0)``.
Choosing ``phi = -eta - pi/2`` keeps ``Omega = Omega0`` and removes the
dynamical phase, leaving the geometric phase ``phi1/2``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import (HADAMARD, SIGMA_MINUS, SIGMA_PLUS, U1, bloch_vectors, compose_zxz,
                   pauli)

SCHEMES = ("NNGQC", "NGQC", "DQC")
GATES = ("U1", "H")


@dataclass(frozen=True)
class PulseSegment:
    duration: float
    rabi: float
    phase: float
    detuning_offset: float = 0.0

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError(f"segment duration must be positive, got {self.duration}")
        if not np.isfinite(self.rabi) or self.rabi < 0:
            raise ValueError(f"Rabi frequency must be finite and >= 0, got {self.rabi}")
        if not np.isfinite(self.phase):
            raise ValueError("segment phase must be finite")

    @property
    def area(self) -> float:
        return self.rabi * self.duration


@dataclass(frozen=True)
class PulseSequence:
    segments: tuple[PulseSegment, ...]
    scheme: str
    target: np.ndarray = field(compare=False, repr=False)

    @property
    def duration(self) -> float:
        return float(sum(s.duration for s in self.segments))

    @property
    def boundaries(self) -> np.ndarray:
        """Segment start times followed by the total duration."""
        return np.concatenate([[0.0], np.cumsum([s.duration for s in self.segments])])

    def nominal_unitary(self) -> np.ndarray:
        u = np.eye(2, dtype=complex)
        for seg in self.segments:
            u = pulse_unitary(seg.area, seg.phase) @ u
        return u

    def table(self) -> list[dict]:
        return [{"index": i, "duration_s": s.duration, "rabi_rad_s": s.rabi,
                 "phase_rad": s.phase, "area_rad": s.area}
                for i, s in enumerate(self.segments)]


def drive_hamiltonian(rabi, phase) -> np.ndarray:
    """Resonant drive ``(Omega/2)(e^{i phi}|e><g| + h.c.)``; broadcasts over arrays."""
    rabi = np.asarray(rabi, dtype=float)[..., None, None]
    phase = np.asarray(phase, dtype=float)[..., None, None]
    return 0.5 * rabi * (np.exp(1j * phase) * SIGMA_PLUS + np.exp(-1j * phase) * SIGMA_MINUS)


def pulse_unitary(area, phase) -> np.ndarray:
    """``cos(area/2) - i sin(area/2)(sigma_+ e^{i phi} + sigma_- e^{-i phi})``."""
    area = np.asarray(area, dtype=float)[..., None, None]
    phase = np.asarray(phase, dtype=float)[..., None, None]
    gen = np.exp(1j * phase) * SIGMA_PLUS + np.exp(-1j * phase) * SIGMA_MINUS
    return np.cos(area / 2) * np.eye(2) - 1j * np.sin(area / 2) * gen


# -- NNGQC -----------------------------------------------------------------

@dataclass(frozen=True)
class NNGQCParams:
    omega0: float
    phi0: float
    phi1: float
    xi0: float
    tau: float

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ValueError("omega0 must be positive")
        t_switch = self.xi0 / self.omega0
        if not 0 < t_switch < self.tau:
            raise ValueError(
                f"step must switch strictly inside (0, tau): xi0/omega0={t_switch}, tau={self.tau}")

    @property
    def t_switch(self) -> float:
        return self.xi0 / self.omega0

    @classmethod
    def u1(cls, omega0: float) -> "NNGQCParams":
        return cls(omega0, -np.pi / 2, np.pi / 2, np.pi / 2, np.pi / omega0)

    @classmethod
    def hadamard(cls, omega0: float) -> "NNGQCParams":
        return cls(omega0, 0.0, np.pi / 2, np.pi / 2, 1.5 * np.pi / omega0)


@dataclass(frozen=True)
class SchemeAngles:
    theta: float
    alpha: float
    beta: float
    gamma: float
    xi_plus: float
    xi_minus: float
    eta_plus: float
    eta_minus: float

    def unitary(self) -> np.ndarray:
        return compose_zxz(self.theta, self.alpha, self.beta)


def nngqc_controls(p: NNGQCParams, t) -> tuple[np.ndarray, np.ndarray]:
    """``(xi(t), eta(t))``; the step is 0 on ``[0, xi0/Omega0]`` and 1 after."""
    t = np.asarray(t, dtype=float)
    step = (t > p.t_switch).astype(float)
    return p.omega0 * t - p.xi0, p.phi0 + p.phi1 * step


def nngqc_sequence(p: NNGQCParams, target: np.ndarray | None = None) -> PulseSequence:
    """Two constant-amplitude segments split at ``xi0/Omega0``."""
    d1 = p.t_switch
    d2 = p.tau - d1
    if d1 <= 0 or d2 <= 0:
        raise ValueError("degenerate NNGQC segment durations")
    segs = (
        PulseSegment(d1, p.omega0, -p.phi0 - np.pi / 2),
        PulseSegment(d2, p.omega0, -(p.phi0 + p.phi1) - np.pi / 2),
    )
    if target is None:
        target = nngqc_angles(p).unitary()
    return PulseSequence(segs, "NNGQC", np.asarray(target, dtype=complex))


def _mu(k, j):
    return np.cos(k / 2) * np.cos(j / 2)


def _nu(k, j):
    return np.sin(k / 2) * np.cos(j / 2)


def _lam(k, j):
    return np.sin(k / 2) * np.sin(j / 2)


def nngqc_angles(p: NNGQCParams) -> SchemeAngles:
    """Rotation angles of ``U = Z_beta X_theta Z_alpha`` for an NNGQC pulse pair.

    ``xi_pm = xi(tau) +- xi(0)`` and ``eta_pm = eta(tau) +- eta(0)``.  Both
    arctangents are taken as ``atan2(numerator, denominator)`` so that the
    ``cos(xi_-/2) = 0`` and ``sin(xi_-/2) = 0`` limits land on the right branch.
    """
    (xi_0, xi_t), (eta_0, eta_t) = nngqc_controls(p, [0.0, p.tau])
    xp, xm = xi_t + xi_0, xi_t - xi_0
    ep, em = eta_t + eta_0, eta_t - eta_0
    gamma = p.phi1 / 2
    g2 = 2 * gamma
    s = np.sqrt(_lam(g2, xp) ** 2 + _nu(xm, g2) ** 2)
    theta = 2 * np.arcsin(min(1.0, s))
    a1 = np.arctan2(_nu(g2, xp), _mu(g2, xm))
    a2 = np.arctan2(_lam(g2, xp), _nu(xm, g2))
    alpha = -a1 - a2 + (em - ep - np.pi) / 2
    beta = -a1 + a2 + (em + ep + np.pi) / 2
    return SchemeAngles(float(theta), float(alpha), float(beta), float(gamma),
                        float(xp), float(xm), float(ep), float(em))


@dataclass(frozen=True)
class AuxiliaryPath:
    times: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    psi1: np.ndarray
    psi2: np.ndarray


def auxiliary_states(xi, eta) -> tuple[np.ndarray, np.ndarray]:
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    c, s = np.cos(xi / 2), np.sin(xi / 2)
    em, ep = np.exp(-0.5j * eta), np.exp(0.5j * eta)
    psi1 = np.stack([c * em, s * ep], axis=-1)
    psi2 = np.stack([s * em, -c * ep], axis=-1)
    return psi1, psi2


def auxiliary_path(p: NNGQCParams, n_samples: int = 4001) -> AuxiliaryPath:
    """Sample ``|Psi_1,2(t)>`` on ``[0, tau]``.

    The switching instant appears twice (left and right limits) so the
    phase jump of ``eta`` is captured exactly rather than smeared over a step.
    """
    if n_samples < 2:
        raise ValueError("need at least two samples")
    t = np.linspace(0.0, p.tau, n_samples)
    t = np.sort(np.concatenate([t[(t != p.t_switch)], [p.t_switch, p.t_switch]]))
    xi, eta = nngqc_controls(p, t)
    # second copy of the switch time takes the post-switch value
    k = np.searchsorted(t, p.t_switch, side="right") - 1
    eta[k] = p.phi0 + p.phi1
    psi1, psi2 = auxiliary_states(xi, eta)
    return AuxiliaryPath(t, xi, eta, psi1, psi2)


def _check_path(path: AuxiliaryPath):
    if len(path.times) < 2:
        raise ValueError("path needs at least two samples")


def geometric_phase(path: AuxiliaryPath) -> float:
    """``gamma = int i <Psi_1|d/dt|Psi_1> dt`` as a discrete connection sum."""
    _check_path(path)
    overlaps = np.einsum("ki,ki->k", path.psi1[:-1].conj(), path.psi1[1:])
    return float(-np.sum(np.angle(overlaps)))


def noncyclic_phase(path: AuxiliaryPath) -> float:
    """Gauge-invariant noncyclic phase ``gamma + arg<Psi_1(0)|Psi_1(tau)>``."""
    total = geometric_phase(path) + np.angle(np.vdot(path.psi1[0], path.psi1[-1]))
    return float(np.angle(np.exp(1j * total)))


def _segment_index(seq: PulseSequence, t) -> np.ndarray:
    idx = np.searchsorted(seq.boundaries, t, side="right") - 1
    return np.clip(idx, 0, len(seq.segments) - 1)


def dynamical_phase(seq: PulseSequence, path: AuxiliaryPath) -> float:
    """``int <Psi_1|H(t)|Psi_1> dt`` with the segment Hamiltonian held per interval."""
    _check_path(path)
    dt = np.diff(path.times)
    mid = 0.5 * (path.times[:-1] + path.times[1:])
    seg = _segment_index(seq, mid)
    rabi = np.array([s.rabi for s in seq.segments])[seg]
    phase = np.array([s.phase for s in seq.segments])[seg]
    h = drive_hamiltonian(rabi, phase)
    left = np.einsum("ki,kij,kj->k", path.psi1[:-1].conj(), h, path.psi1[:-1]).real
    right = np.einsum("ki,kij,kj->k", path.psi1[1:].conj(), h, path.psi1[1:]).real
    return float(np.sum(0.5 * (left + right) * dt))


# -- NGQC ------------------------------------------------------------------

@dataclass(frozen=True)
class NGQCParams:
    theta: float
    gamma: float
    phi: float
    omega_m: float

    def __post_init__(self):
        if not 0 <= self.theta <= np.pi:
            raise ValueError(f"theta must lie in [0, pi], got {self.theta}")
        if not self.omega_m > 0:
            raise ValueError("omega_m must be positive")

    @classmethod
    def u1(cls, omega_m: float) -> "NGQCParams":
        return cls(float(np.arccos(np.sqrt(3) / 3)), np.pi / 3, 5 * np.pi / 4, omega_m)

    @classmethod
    def hadamard(cls, omega_m: float) -> "NGQCParams":
        return cls(np.pi / 4, np.pi / 2, 0.0, omega_m)


def ngqc_unitary(theta: float, gamma: float, phi: float) -> np.ndarray:
    """``U_c = exp(i gamma n.sigma)`` with ``n = (sin t cos p, sin t sin p, cos t)``."""
    n = (np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta))
    ns = sum(c * pauli(k + 1) for k, c in enumerate(n))
    return np.cos(gamma) * pauli(0) + 1j * np.sin(gamma) * ns


def ngqc_sequence(p: NGQCParams, target: np.ndarray | None = None) -> PulseSequence:
    """Orange-slice loop: areas ``(theta, pi, pi - theta)`` at constant ``Omega_m``.

    Zero-area end segments (``theta`` of 0 or pi) are dropped.
    """
    areas = (p.theta, np.pi, np.pi - p.theta)
    phases = (-p.phi + np.pi / 2, -p.phi - p.gamma - np.pi / 2, -p.phi + np.pi / 2)
    segs = tuple(PulseSegment(a / p.omega_m, p.omega_m, ph)
                 for a, ph in zip(areas, phases) if a > 0)
    if target is None:
        target = ngqc_unitary(p.theta, p.gamma, p.phi)
    return PulseSequence(segs, "NGQC", np.asarray(target, dtype=complex))


# -- DQC -------------------------------------------------------------------

DQC_U1 = ((np.pi / 2, 0.0), (np.pi, -np.pi / 4), (np.pi, np.pi / 2))
DQC_HADAMARD = ((np.pi, 0.0), (np.pi / 2, -np.pi / 2))


def dqc_unitary(theta: float, phi: float) -> np.ndarray:
    return pulse_unitary(theta, phi)


def dqc_sequence(rotations: Sequence[tuple[float, float]], omega0: float,
                 target: np.ndarray | None = None) -> PulseSequence:
    """Resonant pulses for the operator product ``U_d(r[0]) U_d(r[1]) ...``.

    The rightmost factor acts first, so it becomes the first segment.
    """
    if not omega0 > 0:
        raise ValueError("omega0 must be positive")
    for theta, _ in rotations:
        if theta < 0:
            raise ValueError("DQC rotation angles must be non-negative")
    segs = tuple(PulseSegment(theta / omega0, omega0, phi)
                 for theta, phi in reversed(list(rotations)) if theta > 0)
    if target is None:
        target = np.eye(2, dtype=complex)
        for theta, phi in rotations:
            target = target @ dqc_unitary(theta, phi)
    return PulseSequence(segs, "DQC", np.asarray(target, dtype=complex))


# -- named gates -----------------------------------------------------------

def gate_sequence(scheme: str, gate: str, omega0: float) -> PulseSequence:
    """Pulse sequence for ``gate`` in {"U1", "H"} under ``scheme``.

    All schemes use the same peak Rabi frequency ``omega0``.
    """
    scheme = scheme.upper()
    gate = {"U1": "U1", "H": "H", "HADAMARD": "H"}.get(gate.upper())
    if scheme not in SCHEMES or gate is None:
        raise ValueError(f"unknown scheme/gate combination {scheme!r}/{gate!r}")
    target = U1 if gate == "U1" else HADAMARD
    if scheme == "NNGQC":
        p = NNGQCParams.u1(omega0) if gate == "U1" else NNGQCParams.hadamard(omega0)
        return nngqc_sequence(p, target)
    if scheme == "NGQC":
        p = NGQCParams.u1(omega0) if gate == "U1" else NGQCParams.hadamard(omega0)
        return ngqc_sequence(p, target)
    return dqc_sequence(DQC_U1 if gate == "U1" else DQC_HADAMARD, omega0, target)


# -- trajectories ----------------------------------------------------------

@dataclass(frozen=True)
class BlochTrajectory:
    times: np.ndarray
    bloch: np.ndarray  # (n, 3): S1, S2, S3

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t_s", "S1", "S2", "S3"])
            for t, (s1, s2, s3) in zip(self.times, self.bloch):
                w.writerow([repr(float(t)), repr(float(s1)), repr(float(s2)), repr(float(s3))])
        return path


def nominal_unitaries(seq: PulseSequence, times) -> np.ndarray:
    """Nominal propagators ``U(t, 0)`` at each requested time."""
    times = np.asarray(times, dtype=float)
    bounds = seq.boundaries
    # propagator at the start of every segment
    starts = [np.eye(2, dtype=complex)]
    for seg in seq.segments:
        starts.append(pulse_unitary(seg.area, seg.phase) @ starts[-1])
    if not seq.segments:
        return np.broadcast_to(np.eye(2, dtype=complex), times.shape + (2, 2)).copy()
    idx = _segment_index(seq, times)
    rabi = np.array([s.rabi for s in seq.segments])[idx]
    phase = np.array([s.phase for s in seq.segments])[idx]
    elapsed = np.clip(times - bounds[idx], 0.0, None)
    partial = pulse_unitary(rabi * elapsed, phase)
    return partial.reshape(times.shape + (2, 2)) @ np.stack(starts[:-1])[idx]


def bloch_trajectory(seq: PulseSequence, initial: np.ndarray,
                     n_samples: int = 201) -> BlochTrajectory:
    """Bloch vector of ``initial`` along the nominal evolution of ``seq``."""
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    psi = np.asarray(initial, dtype=complex)
    times = np.linspace(0.0, seq.duration, n_samples)
    states = nominal_unitaries(seq, times) @ psi
    rhos = np.einsum("ki,kj->kij", states, states.conj())
    return BlochTrajectory(times, bloch_vectors(rhos))
