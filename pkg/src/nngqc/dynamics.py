"""Noisy evolution of pulse sequences.

Systematic errors enter every segment Hamiltonian as

    H = ((1+delta) Omega / 2)(e^{i phi}|e><g| + h.c.) + (Delta/2)(|e><e| - |g><g|)

and pure dephasing through ``(Gamma/2)(sigma_z rho sigma_z - rho)``.
Closed-system runs use exact 2x2 exponentials; open-system runs use a
fixed-step fourth-order Runge-Kutta integrator that never steps across a
segment boundary.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .core import NumericalFailure, pauli, projector
from .schemes import PulseSegment, PulseSequence, drive_hamiltonian, nominal_unitaries

_SX, _SY, _SZ = pauli(1), pauli(2), pauli(3)
_PHYS_TOL = 1e-8


@dataclass(frozen=True)
class NoiseParams:
    gamma: float = 0.0
    delta_rabi: float = 0.0
    detuning: float = 0.0

    def __post_init__(self):
        if not all(np.isfinite([self.gamma, self.delta_rabi, self.detuning])):
            raise ValueError("noise parameters must be finite")
        if self.gamma < 0:
            raise ValueError("dephasing rate must be non-negative")


@dataclass(frozen=True)
class SimConfig:
    """Integrator settings; ``dt=None`` picks 1/1000 of the shortest segment."""

    dt: float | None = None
    method: str = "rk4-lindblad"

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.method not in ("rk4-lindblad", "piecewise-exact-unitary"):
            raise ValueError(f"unknown method {self.method!r}")

    def step_for(self, seq: PulseSequence) -> float:
        shortest = min(s.duration for s in seq.segments)
        if self.dt is None:
            return shortest / 1000
        if self.dt > shortest / 100:
            raise ValueError(
                f"dt={self.dt:.3e} exceeds 1/100 of the shortest segment ({shortest:.3e})")
        return self.dt


def segment_hamiltonian(seg: PulseSegment, noise: NoiseParams = NoiseParams()) -> np.ndarray:
    drive = drive_hamiltonian((1 + noise.delta_rabi) * seg.rabi, seg.phase)
    return drive + 0.5 * (noise.detuning + seg.detuning_offset) * _SZ


def _su2_exp(field: np.ndarray, t) -> np.ndarray:
    """``exp(-i t (field . sigma)/2)`` for field vectors of shape (..., 3)."""
    field = np.asarray(field, dtype=float)
    norm = np.linalg.norm(field, axis=-1)
    angle = 0.5 * norm * np.asarray(t, dtype=float)
    safe = np.where(norm > 0, norm, 1.0)
    n = field / safe[..., None]
    gen = (n[..., 0, None, None] * _SX + n[..., 1, None, None] * _SY
           + n[..., 2, None, None] * _SZ)
    return np.cos(angle)[..., None, None] * np.eye(2) - 1j * np.sin(angle)[..., None, None] * gen


def segment_unitary(seg: PulseSegment, delta_rabi=0.0, detuning=0.0) -> np.ndarray:
    """Exact propagator of one segment; broadcasts over error arrays."""
    a = (1 + np.asarray(delta_rabi, dtype=float)) * seg.rabi
    dz = np.asarray(detuning, dtype=float) + seg.detuning_offset
    a, dz = np.broadcast_arrays(a, dz)
    field = np.stack([a * np.cos(seg.phase), -a * np.sin(seg.phase), dz], axis=-1)
    return _su2_exp(field, seg.duration)


def propagate_batch(seq: PulseSequence, delta_rabi=0.0, detuning=0.0) -> np.ndarray:
    """Propagators for arrays of Rabi and detuning errors, shape ``(..., 2, 2)``."""
    shape = np.broadcast_shapes(np.shape(delta_rabi), np.shape(detuning))
    u = np.broadcast_to(np.eye(2, dtype=complex), shape + (2, 2)).copy()
    for seg in seq.segments:
        u = segment_unitary(seg, delta_rabi, detuning) @ u
    return u


def propagate_unitary(seq: PulseSequence, noise: NoiseParams = NoiseParams()) -> np.ndarray:
    if noise.gamma != 0:
        raise ValueError("propagate_unitary is closed-system only; use evolve_lindblad")
    return propagate_batch(seq, noise.delta_rabi, noise.detuning)


def _tree_product(steps: np.ndarray) -> np.ndarray:
    """Time-ordered product ``U_{n-1} ... U_1 U_0`` by pairwise reduction."""
    while len(steps) > 1:
        if len(steps) % 2:
            tail = steps[-1:]
            steps = np.concatenate([steps[1:-1:2] @ steps[0:-1:2], tail])
        else:
            steps = steps[1::2] @ steps[0::2]
    return steps[0]


def brute_force_propagator(hamiltonian: Callable[[np.ndarray], np.ndarray], duration: float,
                           n_steps: int = 100_000, breakpoints=None) -> np.ndarray:
    """Midpoint time-ordered product of short-time exponentials.

    ``hamiltonian`` maps an array of times to a stack of Hermitian matrices.
    Without ``breakpoints`` the step grid is uniform and blind to any
    discontinuity in ``H(t)``, which makes the result first-order accurate
    there.  Passing the discontinuity times aligns the grid with them.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be positive")
    if duration == 0:
        return np.eye(hamiltonian(np.zeros(1)).shape[-1], dtype=complex)
    dt = duration / n_steps
    edges = np.unique(np.clip(np.concatenate([[0.0, duration], breakpoints or []]), 0, duration))
    grids = [np.linspace(a, b, max(1, int(np.ceil((b - a) / dt - 1e-9))) + 1)
             for a, b in zip(edges[:-1], edges[1:]) if b > a]
    t_mid = np.concatenate([0.5 * (g[1:] + g[:-1]) for g in grids])
    widths = np.concatenate([np.diff(g) for g in grids])
    h = np.asarray(hamiltonian(t_mid), dtype=complex)
    if h.shape[-1] == 2:
        h0 = 0.5 * np.real(h[:, 0, 0] + h[:, 1, 1])
        field = 2 * np.stack([h[:, 0, 1].real, -h[:, 0, 1].imag,
                              0.5 * np.real(h[:, 0, 0] - h[:, 1, 1])], axis=-1)
        steps = np.exp(-1j * h0 * widths)[:, None, None] * _su2_exp(field, widths)
    else:
        w, v = np.linalg.eigh(h)
        steps = (v * np.exp(-1j * w * widths[:, None])[:, None, :]) @ v.conj().transpose(0, 2, 1)
    return _tree_product(steps)


def sequence_hamiltonian(seq: PulseSequence, noise: NoiseParams = NoiseParams()):
    """``H(t)`` of a pulse sequence as a vectorised callable (zero outside it)."""
    bounds = seq.boundaries
    hs = np.stack([segment_hamiltonian(s, noise) for s in seq.segments])

    def h(t):
        t = np.asarray(t, dtype=float)
        idx = np.clip(np.searchsorted(bounds, t, side="right") - 1, 0, len(hs) - 1)
        return hs[idx]

    return h


def liouvillian(h: np.ndarray, gamma: float) -> np.ndarray:
    """Superoperator for row-major ``vec(rho)``."""
    d = h.shape[0]
    eye = np.eye(d)
    out = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    if gamma:
        out += 0.5 * gamma * (np.kron(_SZ, _SZ.T) - np.kron(eye, eye))
    return out


def _rk4_step_operator(lv: np.ndarray, h: float) -> np.ndarray:
    # one classical RK4 step of a linear autonomous ODE equals the 4th-order Taylor polynomial
    a = h * lv
    a2 = a @ a
    return np.eye(len(lv)) + a + a2 / 2 + a2 @ a / 6 + a2 @ a2 / 24


def _check_physical(rho: np.ndarray, where: str) -> None:
    tr = np.trace(rho).real
    herm = np.max(np.abs(rho - rho.conj().T))
    low = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if abs(tr - 1) > _PHYS_TOL or herm > _PHYS_TOL or low < -_PHYS_TOL:
        raise NumericalFailure(
            f"unphysical state {where}: trace={tr:.12f}, hermiticity={herm:.2e}, min_eig={low:.2e}")


@dataclass(frozen=True)
class LindbladTrajectory:
    times: np.ndarray
    rhos: np.ndarray
    reference: np.ndarray | None = None  # noiseless pure-state trajectory

    def fidelities(self) -> np.ndarray:
        if self.reference is None:
            raise ValueError("trajectory has no reference states")
        return np.einsum("ki,kij,kj->k", self.reference.conj(), self.rhos, self.reference).real

    def to_csv(self, path) -> Path:
        path = Path(path)
        f = self.fidelities() if self.reference is not None else np.full(len(self.times), np.nan)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t_s", "Pe", "Re_rho_ge", "Im_rho_ge", "F"])
            for t, rho, fid in zip(self.times, self.rhos, f):
                ge = rho[1, 0]  # <g|rho|e>
                w.writerow([repr(float(t)), repr(float(rho[0, 0].real)), repr(float(ge.real)),
                            repr(float(ge.imag)), repr(float(fid))])
        return path


def _lindblad_run(rho0, seq, noise, cfg, keep):
    rho0 = np.asarray(rho0, dtype=complex)
    _check_physical(rho0, "at t=0")
    v = rho0.reshape(-1)
    times, states = [0.0], [rho0]
    if not seq.segments:
        return v.reshape(2, 2), times, states
    dt = cfg.step_for(seq)
    t0 = 0.0
    for seg in seq.segments:
        n = int(np.ceil(seg.duration / dt - 1e-9))
        h = seg.duration / n
        m = _rk4_step_operator(liouvillian(segment_hamiltonian(seg, noise), noise.gamma), h)
        if keep:
            for k in range(1, n + 1):
                v = m @ v
                times.append(t0 + k * h)
                states.append(v.reshape(2, 2))
        else:
            v = np.linalg.matrix_power(m, n) @ v
        t0 += seg.duration
    return v.reshape(2, 2), times, states


def evolve_lindblad(rho0: np.ndarray, seq: PulseSequence, noise: NoiseParams = NoiseParams(),
                    cfg: SimConfig = SimConfig()) -> np.ndarray:
    """Final state of the dephasing master equation driven by ``seq``."""
    rho, _, _ = _lindblad_run(rho0, seq, noise, cfg, keep=False)
    _check_physical(rho, "after integration")
    return rho


def lindblad_trajectory(psi0: np.ndarray, seq: PulseSequence, noise: NoiseParams = NoiseParams(),
                        cfg: SimConfig = SimConfig()) -> LindbladTrajectory:
    """Every integrator step, plus the noiseless pure-state reference."""
    psi0 = np.asarray(psi0, dtype=complex)
    _, times, states = _lindblad_run(projector(psi0), seq, noise, cfg, keep=True)
    times = np.asarray(times)
    rhos = np.stack(states)
    for k, rho in enumerate(rhos):
        _check_physical(rho, f"at step {k}")
    ref = nominal_unitaries(seq, times) @ psi0 if seq.segments else psi0[None, :]
    return LindbladTrajectory(times, rhos, ref)


def evolve_state(rho0: np.ndarray, seq: PulseSequence, noise: NoiseParams = NoiseParams(),
                 cfg: SimConfig = SimConfig()) -> np.ndarray:
    """Unitary conjugation when ``gamma == 0``, master equation otherwise."""
    rho0 = np.asarray(rho0, dtype=complex)
    if noise.gamma == 0:
        u = propagate_unitary(seq, noise)
        return u @ rho0 @ u.conj().T
    return evolve_lindblad(rho0, seq, noise, cfg)


def output_state_fidelity(seq: PulseSequence, psi_in: np.ndarray,
                          noise: NoiseParams = NoiseParams(),
                          cfg: SimConfig = SimConfig()) -> float:
    """``Tr[rho_out U|psi><psi|U^dag]`` with ``U`` the sequence's target gate."""
    psi_in = np.asarray(psi_in, dtype=complex)
    ideal = seq.target @ psi_in
    rho = evolve_state(projector(psi_in), seq, noise, cfg)
    return float(np.real(np.vdot(ideal, rho @ ideal)))


def output_fidelities(seq: PulseSequence, psi_in: np.ndarray, delta_rabi=0.0,
                      detuning=0.0) -> np.ndarray:
    """Closed-system output-state fidelities over arrays of systematic errors."""
    psi_in = np.asarray(psi_in, dtype=complex)
    ideal = seq.target @ psi_in
    out = propagate_batch(seq, delta_rabi, detuning) @ psi_in
    return np.abs(out @ ideal.conj()) ** 2
