"""Numerical studies comparing the three gate constructions.

* systematic-error sweeps of output-state fidelity (Rabi-amplitude and
  detuning errors),
* infidelity versus dephasing rate with an exponential fit,
* Gaussian-averaged infidelities for random systematic errors,
* process-tomography comparison under dephasing and imperfect preparation.

Frequencies are angular (rad/s) everywhere in this module; Rabi errors are
fractional.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from . import __version__
from .core import NumericalFailure, ket
from .dynamics import NoiseParams, SimConfig, evolve_state, output_fidelities, output_state_fidelity
from .schemes import SCHEMES, gate_sequence
from .tomography import ShotConfig, SpamModel, chi_ideal, process_fidelity, qpt

TWO_PI = 2 * np.pi
OMEGA0 = TWO_PI * 67.9e3        # average Rabi frequency of the single-qubit experiments
OMEGA0_DEPHASING = TWO_PI * 100e3
GAMMA_COMPARISON = 810.0        # dephasing rate (1/s) used for the tomography comparison
SPAM_P = 0.9628
ERROR_KINDS = ("rabi", "detuning", "dephasing")

# integration windows of the Gaussian averages: the range over which the
# systematic-error sweeps are tabulated
RABI_WINDOW = 0.3
DETUNING_WINDOW = TWO_PI * 25e3

CONVENTIONS = {
    "basis": "(|e>, |g>), index 0 = |e>",
    "stokes": "S_k = Tr[sigma_k rho], S3 = P_e - P_g",
    "drive": "H = (Omega/2)(e^{i phi}|e><g| + h.c.) + (Delta/2) sigma_z",
    "dephasing": "L[rho] = (Gamma/2)(sigma_z rho sigma_z - rho); coherences decay at Gamma",
    "spam": "prepared = p*rho + (1-p)|e><e|",
    "shots": "n_shots per population measurement; two measurements per Stokes setting",
    "units": "angular frequencies in rad/s, times in s",
}


def khz(f_khz):
    """Ordinary frequency in kHz -> angular frequency in rad/s."""
    w = TWO_PI * 1e3 * np.asarray(f_khz, dtype=float)
    return float(w) if w.ndim == 0 else w


# -- sweeps ----------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    scheme: str
    gate: str
    error_kind: str
    grid: tuple
    input_state: str = "g"
    omega0: float = OMEGA0
    gamma: float = 0.0

    def __post_init__(self):
        if self.scheme.upper() not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.error_kind not in ERROR_KINDS:
            raise ValueError(f"error_kind must be one of {ERROR_KINDS}, got {self.error_kind!r}")
        grid = np.asarray(self.grid, dtype=float)
        if grid.ndim != 1 or grid.size == 0 or not np.all(np.isfinite(grid)):
            raise ValueError("grid must be a non-empty list of finite numbers")
        if self.error_kind == "dephasing" and np.any(grid < 0):
            raise ValueError("dephasing rates must be non-negative")
        if not self.omega0 > 0:
            raise ValueError("omega0 must be positive")
        object.__setattr__(self, "grid", tuple(float(x) for x in grid))


def run_sweep(spec: SweepSpec, cfg: SimConfig = SimConfig()) -> np.ndarray:
    """Output-state fidelity at every grid point, shape ``(len(grid),)``."""
    seq = gate_sequence(spec.scheme, spec.gate, spec.omega0)
    psi = ket(spec.input_state)
    grid = np.asarray(spec.grid)
    if spec.error_kind == "dephasing":
        return np.array([output_state_fidelity(seq, psi, NoiseParams(gamma=g), cfg) for g in grid])
    if spec.gamma == 0:
        if spec.error_kind == "rabi":
            return output_fidelities(seq, psi, delta_rabi=grid)
        return output_fidelities(seq, psi, detuning=grid)
    key = "delta_rabi" if spec.error_kind == "rabi" else "detuning"
    return np.array([output_state_fidelity(seq, psi, NoiseParams(gamma=spec.gamma, **{key: x}), cfg)
                     for x in grid])


def compare_sweep(gate: str, error_kind: str, grid, input_state: str = "g",
                  omega0: float = OMEGA0, gamma: float = 0.0) -> dict[str, np.ndarray]:
    """Run the same sweep for every scheme."""
    return {s: run_sweep(SweepSpec(s, gate, error_kind, tuple(grid), input_state, omega0, gamma))
            for s in SCHEMES}


# -- dephasing -------------------------------------------------------------

@dataclass(frozen=True)
class FitResult:
    a: float
    b: float
    residual: float
    iterations: int

    def __call__(self, x):
        return exp_model(x, self.a, self.b)

    def crossing(self, level: float) -> float:
        """``x`` at which the fitted curve reaches ``level``."""
        arg = 1 + level / self.a
        if not arg > 0 or self.b == 0:
            raise ValueError(f"fitted curve never reaches {level}")
        return float(-np.log(arg) / self.b)


def exp_model(x, a, b):
    """``a (exp(-b x) - 1)``."""
    return a * (np.exp(-b * np.asarray(x, dtype=float)) - 1)


def fit_exponential(x, y, a0: float = -0.5, b0: float = 2.5, max_iter: int = 200,
                    tol: float = 1e-13) -> FitResult:
    """Gauss-Newton least squares for ``y = a (exp(-b x) - 1)``, with step halving."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("need at least two (x, y) pairs of equal length")
    p = np.array([a0, b0], dtype=float)

    def resid(q):
        return exp_model(x, *q) - y

    r = resid(p)
    cost = r @ r
    for it in range(1, max_iter + 1):
        e = np.exp(-p[1] * x)
        jac = np.stack([e - 1, -p[0] * x * e], axis=1)
        step, *_ = np.linalg.lstsq(jac, -r, rcond=None)
        lam = 1.0
        while lam > 1e-10:
            trial = p + lam * step
            r_trial = resid(trial)
            c_trial = r_trial @ r_trial
            if np.isfinite(c_trial) and c_trial <= cost:
                break
            lam *= 0.5
        else:
            raise NumericalFailure(f"fit stalled at a={p[0]:.6g}, b={p[1]:.6g}, "
                                   f"residual={np.sqrt(cost):.3e}")
        converged = np.max(np.abs(lam * step) / np.maximum(np.abs(p), 1e-300)) < tol
        p, r, cost = trial, r_trial, c_trial
        if converged or cost == 0:
            return FitResult(float(p[0]), float(p[1]), float(np.sqrt(cost)), it)
    raise NumericalFailure(f"fit did not converge in {max_iter} iterations "
                           f"(a={p[0]:.6g}, b={p[1]:.6g}, residual={np.sqrt(cost):.3e})")


@dataclass(frozen=True)
class DephasingCurve:
    ratios: np.ndarray       # Gamma / Omega0
    infidelity: np.ndarray

    def crossing(self, level: float = 1e-2) -> float:
        """Dephasing ratio where the simulated infidelity equals ``level`` (root-bracketed)."""
        above = np.nonzero(self.infidelity >= level)[0]
        if above.size == 0 or above[0] == 0:
            raise ValueError(f"curve does not cross {level} inside the grid")
        return float(np.interp(level, self.infidelity[above[0] - 1:above[0] + 1],
                               self.ratios[above[0] - 1:above[0] + 1]))


def dephasing_curve(ratios, scheme: str = "NNGQC", gate: str = "U1", input_state: str = "g",
                    omega0: float = OMEGA0_DEPHASING, cfg: SimConfig = SimConfig()) -> DephasingCurve:
    ratios = np.asarray(ratios, dtype=float)
    if ratios.ndim != 1 or ratios.size == 0:
        raise ValueError("ratio grid must be a non-empty 1-D array")
    if np.any(ratios < 0) or np.any(ratios > 0.1 + 1e-12):
        raise ValueError("Gamma/Omega0 grid must lie within [0, 0.1]")
    spec = SweepSpec(scheme, gate, "dephasing", tuple(ratios * omega0), input_state, omega0)
    return DephasingCurve(ratios, 1 - run_sweep(spec, cfg))


def infidelity_at(ratio: float, scheme: str = "NNGQC", gate: str = "U1", input_state: str = "g",
                  omega0: float = OMEGA0_DEPHASING, cfg: SimConfig = SimConfig()) -> float:
    seq = gate_sequence(scheme, gate, omega0)
    return 1 - output_state_fidelity(seq, ket(input_state), NoiseParams(gamma=ratio * omega0), cfg)


def threshold_ratio(level: float = 1e-2, bracket=(1e-4, 0.05), **kwargs) -> float:
    """Dephasing ratio where the simulated infidelity equals ``level`` (Brent root)."""
    return float(brentq(lambda r: infidelity_at(r, **kwargs) - level, *bracket, xtol=1e-12))


def dephasing_curve_and_fit(ratios=None, scheme: str = "NNGQC", gate: str = "U1",
                            input_state: str = "g", omega0: float = OMEGA0_DEPHASING,
                            cfg: SimConfig = SimConfig()) -> tuple[DephasingCurve, FitResult]:
    if ratios is None:
        ratios = np.linspace(0, 0.05, 51)
    curve = dephasing_curve(ratios, scheme, gate, input_state, omega0, cfg)
    return curve, fit_exponential(curve.ratios, curve.infidelity)


# -- Gaussian-averaged systematic errors -----------------------------------

@dataclass(frozen=True)
class GaussianSpec:
    """Zero-mean Gaussian error of width ``sigma``.

    The average is ``int_{-L}^{L} p(e) (1 - F(e)) de`` with
    ``L = truncation * sigma`` (further capped at ``window`` when given).
    The density is not renormalised to the interval.
    """

    sigma: float
    order: int = 21
    truncation: float = 4.0
    window: float | None = None

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.order < 5:
            raise ValueError("quadrature order must be >= 5")
        if not self.truncation > 0:
            raise ValueError("truncation must be positive")
        if self.window is not None and not self.window > 0:
            raise ValueError("window must be positive")

    @property
    def limit(self) -> float:
        lim = self.truncation * self.sigma
        return lim if self.window is None else min(lim, self.window)

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Quadrature nodes (error values) and weights (probability mass)."""
        if self.window is None or self.window >= self.truncation * self.sigma:
            x, w = np.polynomial.hermite_e.hermegauss(self.order)
            keep = np.abs(x) <= self.truncation
            return self.sigma * x[keep], w[keep] / np.sqrt(TWO_PI)
        lim = self.limit
        x, w = np.polynomial.legendre.leggauss(self.order)
        e = lim * x
        dens = np.exp(-0.5 * (e / self.sigma) ** 2) / (np.sqrt(TWO_PI) * self.sigma)
        return e, lim * w * dens


def _infidelity_fn(scheme, gate, error_kind, input_state, omega0, gamma, cfg):
    seq = gate_sequence(scheme, gate, omega0)
    psi = ket(input_state)
    if error_kind not in ("rabi", "detuning"):
        raise ValueError("Gaussian averages apply to 'rabi' or 'detuning' errors")
    key = "delta_rabi" if error_kind == "rabi" else "detuning"
    if gamma == 0:
        return lambda e: 1 - output_fidelities(seq, psi, **{key: np.asarray(e, dtype=float)})
    return lambda e: 1 - np.array([output_state_fidelity(seq, psi, NoiseParams(gamma=gamma, **{key: x}), cfg)
                                   for x in np.atleast_1d(e)])


def gaussian_average(scheme: str, gate: str, error_kind: str, spec: GaussianSpec,
                     input_state: str = "g", omega0: float = OMEGA0, gamma: float = 0.0,
                     cfg: SimConfig = SimConfig()) -> float:
    """Gaussian-averaged infidelity in percent."""
    f = _infidelity_fn(scheme, gate, error_kind, input_state, omega0, gamma, cfg)
    e, w = spec.nodes()
    return float(100 * np.sum(w * f(e)))


def gaussian_average_mc(scheme: str, gate: str, error_kind: str, spec: GaussianSpec,
                        n_samples: int = 100_000, seed: int = 0, input_state: str = "g",
                        omega0: float = OMEGA0) -> tuple[float, float]:
    """Monte Carlo estimate (percent) and its standard error."""
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    f = _infidelity_fn(scheme, gate, error_kind, input_state, omega0, 0.0, None)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    e = spec.sigma * rng.standard_normal(n_samples)
    vals = np.where(np.abs(e) <= spec.limit, f(e), 0.0)
    return float(100 * vals.mean()), float(100 * vals.std(ddof=1) / np.sqrt(n_samples))


def gaussian_average_checked(scheme: str, gate: str, error_kind: str, spec: GaussianSpec,
                             n_samples: int = 100_000, seed: int = 0, **kwargs) -> float:
    """Quadrature value, verified against Monte Carlo to within 3 standard errors."""
    quad = gaussian_average(scheme, gate, error_kind, spec, **kwargs)
    mc, se = gaussian_average_mc(scheme, gate, error_kind, spec, n_samples, seed, **kwargs)
    if abs(quad - mc) > 3 * se:
        raise NumericalFailure(f"quadrature {quad:.6f}% and Monte Carlo {mc:.6f}% "
                               f"(+/- {se:.6f}%) disagree")
    return quad


@dataclass(frozen=True)
class Table1Row:
    error_kind: str
    sigma: float             # fractional (rabi) or rad/s (detuning)
    label: str
    infidelity_pct: dict = field(default_factory=dict)


def table1(gate: str = "U1", omega0: float = OMEGA0, rabi_sigmas=(0.1, 0.2),
           detuning_sigmas_khz=(5.0, 10.0), rabi_window: float | None = RABI_WINDOW,
           detuning_window: float | None = DETUNING_WINDOW, order: int = 21,
           input_state: str = "g", gamma: float = 0.0) -> list[Table1Row]:
    rows = []
    for s in rabi_sigmas:
        spec = GaussianSpec(s, order, window=rabi_window)
        rows.append(Table1Row("rabi", s, f"sigma_Omega/Omega0={s:g}",
                              {k: gaussian_average(k, gate, "rabi", spec, input_state, omega0, gamma)
                               for k in SCHEMES}))
    for s_khz in detuning_sigmas_khz:
        spec = GaussianSpec(khz(s_khz), order, window=detuning_window)
        rows.append(Table1Row("detuning", khz(s_khz), f"sigma_Delta/2pi={s_khz:g}kHz",
                              {k: gaussian_average(k, gate, "detuning", spec, input_state, omega0, gamma)
                               for k in SCHEMES}))
    return rows


# -- process-tomography comparison ------------------------------------------

@dataclass(frozen=True)
class ComparisonResult:
    scheme: str
    raw: float
    calibrated: float


def scheme_comparison(spam: SpamModel | None = SpamModel(SPAM_P), gamma: float = GAMMA_COMPARISON,
                      shots: ShotConfig | None = None, gate: str = "U1", omega0: float = OMEGA0,
                      cfg: SimConfig = SimConfig()) -> list[ComparisonResult]:
    """Process fidelity of ``gate`` for every scheme, before and after calibration."""
    out = []
    for i, scheme in enumerate(SCHEMES):
        seq = gate_sequence(scheme, gate, omega0)
        noise = NoiseParams(gamma=gamma)

        def channel(rho, seq=seq):
            return evolve_state(rho, seq, noise, cfg)

        ideal = chi_ideal(seq.target)
        raw = qpt(channel, shots, spam, calibrate=False, key=(i,))
        cal = qpt(channel, shots, spam, calibrate=True, key=(i,))
        out.append(ComparisonResult(scheme, process_fidelity(raw, ideal),
                                    process_fidelity(cal, ideal)))
    return out


# -- output ----------------------------------------------------------------

def fmt(x) -> str:
    """Shortest round-trip text of a float (deterministic)."""
    return repr(float(x))


def write_csv(path, header: Sequence[str], rows) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if hasattr(obj, "__dataclass_fields__"):
        return _jsonable(asdict(obj))
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(obj), indent=2) + "\n", encoding="utf-8")
    return path


def metadata(command: str, parameters: dict, seed: int | None = None) -> dict:
    """Record sufficient to re-run a dataset."""
    return {"command": command, "parameters": _jsonable(parameters), "seed": seed,
            "conventions": CONVENTIONS, "version": __version__}
