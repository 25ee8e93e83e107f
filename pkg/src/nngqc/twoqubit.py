"""Two ions with levels {g, e, s} sharing one phonon mode.

Each ion's auxiliary level ``|s>`` is detuned by ``Delta``, driven from
``|e>`` by ``Omega_bar_k = Omega e^{-i phi_bar_k}`` and coupled to ``|g>``
by a blue sideband of strength ``g``:

    H = sum_k [ Delta |s><s|_k + (Omega_bar_k |e><s|_k + g a^dag |g><s|_k + h.c.) ]

When ``g >> Omega`` the sideband freezes ``|ee0>`` (Zeno trapping), and
when ``Delta >> Omega`` the single-excitation states ``|eg0>``, ``|ge0>``
exchange population through a two-level effective coupling of strength
``Omega^2 / (2 Delta)``.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import eigh
from scipy.optimize import minimize_scalar

from .core import NumericalFailure, compose_zxz

LEVELS = ("g", "e", "s")
_G, _E, _S = 0, 1, 2


@dataclass(frozen=True)
class TwoIonParams:
    omega_eff: float = 1.0
    g: float = 50.0
    delta: float = 10.0
    phi1_bar: float = 0.0
    phi2_bar: float = 0.0
    n_max: int = 3

    def __post_init__(self):
        if not all(np.isfinite([self.omega_eff, self.g, self.delta, self.phi1_bar, self.phi2_bar])):
            raise ValueError("parameters must be finite")
        if not (self.omega_eff > 0 and self.g > 0 and self.delta > 0):
            raise ValueError("omega_eff, g and delta must be positive")
        if int(self.n_max) != self.n_max or self.n_max < 2:
            raise ValueError("phonon cutoff n_max must be an integer >= 2")

    @property
    def dim(self) -> int:
        return 9 * (self.n_max + 1)

    @property
    def transfer_period(self) -> float:
        """Period of the |eg0> -> |ge0> -> |eg0> exchange, ``2 pi Delta / Omega^2``."""
        return 2 * np.pi * self.delta / self.omega_eff ** 2

    def hierarchy(self) -> dict:
        return {"g_over_omega": self.g / self.omega_eff,
                "delta_over_omega": self.delta / self.omega_eff,
                "g_over_delta": self.g / self.delta}


def basis_labels(n_max: int) -> list[tuple[int, int, int]]:
    """``(a, b, n)`` for every basis state, in matrix order."""
    return list(itertools.product(range(3), range(3), range(n_max + 1)))


def state_index(label: str, n_max: int) -> int:
    """Index of e.g. ``"eg0"`` (ion 1, ion 2, phonon number)."""
    a, b, n = LEVELS.index(label[0]), LEVELS.index(label[1]), int(label[2:])
    if n > n_max:
        raise ValueError(f"phonon number {n} beyond cutoff {n_max}")
    return (a * 3 + b) * (n_max + 1) + n


def basis_state(label: str, n_max: int) -> np.ndarray:
    psi = np.zeros(9 * (n_max + 1), dtype=complex)
    psi[state_index(label, n_max)] = 1
    return psi


def full_hamiltonian(p: TwoIonParams) -> np.ndarray:
    labels = basis_labels(p.n_max)
    index = {lab: i for i, lab in enumerate(labels)}
    h = np.zeros((p.dim, p.dim), dtype=complex)
    omega_bar = (p.omega_eff * np.exp(-1j * p.phi1_bar), p.omega_eff * np.exp(-1j * p.phi2_bar))
    for (a, b, n), i in index.items():
        levels = [a, b]
        for k in range(2):
            if levels[k] != _S:
                continue
            h[i, i] += p.delta
            to_e = levels.copy()
            to_e[k] = _E
            j = index[(to_e[0], to_e[1], n)]
            h[j, i] += omega_bar[k]
            h[i, j] += np.conj(omega_bar[k])
            if n < p.n_max:
                to_g = levels.copy()
                to_g[k] = _G
                j = index[(to_g[0], to_g[1], n + 1)]
                h[j, i] += p.g * np.sqrt(n + 1)
                h[i, j] += p.g * np.sqrt(n + 1)
    return h


def effective_coupling(p: TwoIonParams) -> complex:
    """``<psi3|H_eff|psi2> = (Omega^2 / 2 Delta) e^{i phi}``, ``phi = pi + phi1 - phi2``."""
    phase = np.pi + p.phi1_bar - p.phi2_bar
    return p.omega_eff ** 2 / (2 * p.delta) * np.exp(1j * phase)


def effective_hamiltonian(p: TwoIonParams) -> np.ndarray:
    """2x2 on ``(|psi2>, |psi3>) = (|eg0>, |ge0>)``."""
    c = effective_coupling(p)
    return np.array([[0, np.conj(c)], [c, 0]], dtype=complex)


def _evolver(h: np.ndarray):
    w, v = eigh(h)

    def at(times, psi0):
        c = v.conj().T @ psi0
        return (v @ (np.exp(-1j * np.outer(w, times)) * c[:, None])).T

    return at


@dataclass(frozen=True)
class FullEffectiveComparison:
    times: np.ndarray
    p_full_eg0: np.ndarray
    p_full_ge0: np.ndarray
    p_eff_psi2: np.ndarray
    p_eff_psi3: np.ndarray
    leakage: np.ndarray
    max_deviation: float
    norm_error: float
    hierarchy: dict

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t_s", "P_full_eg0", "P_full_ge0", "P_eff_psi2", "P_eff_psi3", "leakage"])
            for row in zip(self.times, self.p_full_eg0, self.p_full_ge0, self.p_eff_psi2,
                           self.p_eff_psi3, self.leakage):
                w.writerow([repr(float(x)) for x in row])
        return path


def compare_full_effective(p: TwoIonParams, duration: float | None = None,
                           n_times: int = 4001) -> FullEffectiveComparison:
    """Evolve ``|eg0>`` under both models; default duration is one transfer period."""
    if duration is None:
        duration = p.transfer_period
    if not duration >= 0 or n_times < 2:
        raise ValueError("need a non-negative duration and at least two time points")
    times = np.linspace(0.0, duration, n_times)
    full = _evolver(full_hamiltonian(p))(times, basis_state("eg0", p.n_max))
    eff = _evolver(effective_hamiltonian(p))(times, np.array([1, 0], dtype=complex))
    norms = np.linalg.norm(full, axis=1)
    norm_error = float(np.max(np.abs(norms - 1)))
    if not np.all(np.isfinite(full)) or norm_error > 1e-8:
        raise NumericalFailure(f"full-model evolution lost normalisation ({norm_error:.2e})")
    pf2 = np.abs(full[:, state_index("eg0", p.n_max)]) ** 2
    pf3 = np.abs(full[:, state_index("ge0", p.n_max)]) ** 2
    pe2, pe3 = np.abs(eff[:, 0]) ** 2, np.abs(eff[:, 1]) ** 2
    return FullEffectiveComparison(times, pf2, pf3, pe2, pe3, 1 - pf2 - pf3,
                                   _max_deviation(p, times, np.abs(pf3 - pe3)),
                                   norm_error, p.hierarchy())


def _max_deviation(p: TwoIonParams, times: np.ndarray, dev: np.ndarray, n_candidates: int = 10) -> float:
    """Supremum over continuous time: sampled maximum refined around the largest local peaks."""
    full = _evolver(full_hamiltonian(p))
    eff = _evolver(effective_hamiltonian(p))
    psi_full = basis_state("eg0", p.n_max)
    i3 = state_index("ge0", p.n_max)

    def neg_dev(t):
        a = full(np.array([t]), psi_full)[0, i3]
        b = eff(np.array([t]), np.array([1, 0], dtype=complex))[0, 1]
        return -abs(abs(a) ** 2 - abs(b) ** 2)

    best = float(dev.max())
    interior = np.nonzero((dev[1:-1] >= dev[:-2]) & (dev[1:-1] >= dev[2:]))[0] + 1
    for k in interior[np.argsort(dev[interior])[::-1][:n_candidates]]:
        res = minimize_scalar(neg_dev, bounds=(times[k - 1], times[k + 1]), method="bounded",
                              options={"xatol": 1e-10 * max(times[-1], 1.0)})
        best = max(best, -float(res.fun))
    return best


@dataclass(frozen=True)
class TrappingResult:
    final: float
    minimum: float
    hierarchy: dict


def zeno_trapping(p: TwoIonParams, duration: float | None = None,
                  n_times: int = 4001) -> TrappingResult:
    """Survival probability of ``|ee0>`` in the full model."""
    if duration is None:
        duration = p.transfer_period
    times = np.linspace(0.0, duration, n_times)
    i = state_index("ee0", p.n_max)
    psi = _evolver(full_hamiltonian(p))(times, basis_state("ee0", p.n_max))
    surv = np.abs(psi[:, i]) ** 2
    return TrappingResult(float(surv[-1]), float(surv.min()), p.hierarchy())


def controlled_gate_matrix(theta: float, alpha: float, beta: float) -> np.ndarray:
    """Gate on ``(|ee0>, |eg0>, |ge0>, |gg0>)``: identity except on the middle block."""
    if not np.all(np.isfinite([theta, alpha, beta])):
        raise ValueError("angles must be finite")
    u = np.eye(4, dtype=complex)
    u[1:3, 1:3] = compose_zxz(theta, alpha, beta)
    return u


def schmidt_rank(psi: np.ndarray, tol: float = 1e-10) -> int:
    """Schmidt rank of a two-qubit pure state in the product basis."""
    s = np.linalg.svd(np.asarray(psi, dtype=complex).reshape(2, 2), compute_uv=False)
    return int(np.sum(s > tol))
