import csv
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad
from scipy.linalg import expm
from scipy.optimize import curve_fit

from nngqc.core import NumericalFailure, ket, pauli
from nngqc.dynamics import NoiseParams, segment_hamiltonian
from nngqc.experiments import (DETUNING_WINDOW, GAMMA_COMPARISON, OMEGA0, OMEGA0_DEPHASING,
                               RABI_WINDOW, SPAM_P, DephasingCurve, FitResult, GaussianSpec,
                               SweepSpec, compare_sweep, dephasing_curve, dephasing_curve_and_fit,
                               exp_model, fit_exponential, gaussian_average, gaussian_average_mc,
                               gaussian_average_checked, khz, metadata, run_sweep, scheme_comparison,
                               table1, threshold_ratio, write_csv, write_json)
from nngqc.schemes import SCHEMES, gate_sequence

# Values frozen from the independent oracles below (scipy quad over an expm
# propagator; superoperator trace formula for process fidelity).
TABLE1_FROZEN = {
    "rabi 0.1": {"NNGQC": 0.5954038018370006, "NGQC": 0.7521188515092928, "DQC": 1.1141418065705444},
    "rabi 0.2": {"NNGQC": 1.1677111336621717, "NGQC": 1.4651158223168101, "DQC": 1.9628723686925018},
    "det 5": {"NNGQC": 0.6702653130734452, "NGQC": 1.2882405045909198, "DQC": 1.0303764925459817},
    "det 10": {"NNGQC": 2.3656798431254624, "NGQC": 4.418392230492596, "DQC": 3.494119897913751},
}
COMPARISON_FROZEN = {
    "NNGQC": (0.9692349269284961, 0.9970242282182162),
    "NGQC": (0.9663813248024675, 0.9940603705883513),
    "DQC": (0.964960141643172, 0.9925842767378252),
}


def expm_infidelity(scheme, gate, delta_rabi=0.0, detuning=0.0, omega0=OMEGA0):
    seq = gate_sequence(scheme, gate, omega0)
    noise = NoiseParams(delta_rabi=delta_rabi, detuning=detuning)
    u = np.eye(2, dtype=complex)
    for seg in seq.segments:
        u = expm(-1j * segment_hamiltonian(seg, noise) * seg.duration) @ u
    out, want = u @ ket("g"), seq.target @ ket("g")
    return 1 - abs(np.vdot(want, out)) ** 2


def quad_average(scheme, error_kind, sigma, window):
    lim = min(4 * sigma, window)
    key = "delta_rabi" if error_kind == "rabi" else "detuning"

    def integrand(e):
        dens = np.exp(-0.5 * (e / sigma) ** 2) / (np.sqrt(2 * np.pi) * sigma)
        return dens * expm_infidelity(scheme, "U1", **{key: e})

    val, _ = quad(integrand, -lim, lim, epsabs=1e-13, epsrel=1e-11, limit=200)
    return 100 * val


def superop(seq, gamma):
    """Column-stacked superoperator of the noisy sequence (exact expm)."""
    eye, sz = np.eye(2), pauli(3)
    s = np.eye(4, dtype=complex)
    for seg in seq.segments:
        h = segment_hamiltonian(seg)
        lv = -1j * (np.kron(eye, h) - np.kron(h.T, eye)) + 0.5 * gamma * (np.kron(sz.T, sz) - np.eye(4))
        s = expm(lv * seg.duration) @ s
    return s


# -- sweeps ----------------------------------------------------------------

def test_sweep_validation():
    with pytest.raises(ValueError):
        SweepSpec("XYZ", "U1", "rabi", (0.0,))
    with pytest.raises(ValueError):
        SweepSpec("NNGQC", "U1", "amplitude", (0.0,))
    with pytest.raises(ValueError):
        SweepSpec("NNGQC", "U1", "rabi", ())
    with pytest.raises(ValueError):
        SweepSpec("NNGQC", "U1", "rabi", (np.nan,))
    with pytest.raises(ValueError):
        SweepSpec("NNGQC", "U1", "dephasing", (-1.0,))
    with pytest.raises(ValueError):
        SweepSpec("NNGQC", "U1", "rabi", (0.0,), omega0=0)


@pytest.mark.parametrize("scheme", SCHEMES)
@pytest.mark.parametrize("kind", ["rabi", "detuning", "dephasing"])
def test_zero_error_sweep_is_perfect(scheme, kind):
    f = run_sweep(SweepSpec(scheme, "U1", kind, (0.0,)))
    assert f[0] == pytest.approx(1, abs=1e-9)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_sweep_matches_expm_oracle(scheme):
    grid = np.linspace(-0.2, 0.2, 9)
    f = run_sweep(SweepSpec(scheme, "U1", "rabi", tuple(grid)))
    assert np.allclose(1 - f, [expm_infidelity(scheme, "U1", delta_rabi=x) for x in grid], atol=1e-13)
    det = khz(np.linspace(-20, 20, 9))
    f = run_sweep(SweepSpec(scheme, "U1", "detuning", tuple(det)))
    assert np.allclose(1 - f, [expm_infidelity(scheme, "U1", detuning=x) for x in det], atol=1e-13)


@given(st.floats(-khz(0.05), khz(0.05)).filter(lambda d: abs(d) > 10), st.floats(-1e-3, 1e-3))
def test_small_errors_give_quadratic_infidelity(d, r):
    # the fidelity is stationary at zero error: doubling a small error quadruples the loss
    for scheme in SCHEMES:
        assert expm_infidelity(scheme, "U1", detuning=2 * d) == pytest.approx(
            4 * expm_infidelity(scheme, "U1", detuning=d), rel=0.02)
        if abs(r) > 1e-6:
            assert expm_infidelity(scheme, "U1", delta_rabi=2 * r) == pytest.approx(
                4 * expm_infidelity(scheme, "U1", delta_rabi=r), rel=0.02)


def test_nngqc_dominates_on_grid():
    for kind, grid in (("rabi", np.linspace(-0.2, 0.2, 81)), ("detuning", khz(np.linspace(-20, 20, 81)))):
        f = compare_sweep("U1", kind, grid)
        assert np.all(f["NNGQC"] >= f["NGQC"] - 1e-12)
        assert np.all(f["NNGQC"] >= f["DQC"] - 1e-12)


def test_sweep_with_dephasing_uses_lindblad():
    clean = run_sweep(SweepSpec("NNGQC", "U1", "rabi", (0.05,)))
    noisy = run_sweep(SweepSpec("NNGQC", "U1", "rabi", (0.05,), gamma=0.01 * OMEGA0))
    assert noisy[0] < clean[0]


# -- dephasing -------------------------------------------------------------

def test_exp_model_and_crossing():
    fit = FitResult(-0.5, 2.0, 0.0, 1)
    assert exp_model(0, -0.5, 2.0) == 0
    x = fit.crossing(0.01)
    assert fit(x) == pytest.approx(0.01)
    with pytest.raises(ValueError):
        fit.crossing(0.6)


def test_fit_recovers_synthetic_parameters():
    x = np.linspace(0, 0.05, 30)
    fit = fit_exponential(x, exp_model(x, -0.3, 4.0))
    assert (fit.a, fit.b) == pytest.approx((-0.3, 4.0), rel=1e-9)
    with pytest.raises(ValueError):
        fit_exponential([0.0], [0.0])


def test_fit_reports_failure():
    with pytest.raises(NumericalFailure):
        fit_exponential(np.linspace(0, 1, 10), np.linspace(0, 1, 10), max_iter=1)


def test_dephasing_fit_frozen_and_against_curve_fit():
    curve, fit = dephasing_curve_and_fit()
    assert fit.a == pytest.approx(-0.4794690281165837, rel=1e-6)
    assert fit.b == pytest.approx(2.4569903479993878, rel=1e-6)
    (a, b), _ = curve_fit(exp_model, curve.ratios, curve.infidelity, p0=(-0.5, 2.5))
    assert (fit.a, fit.b) == pytest.approx((a, b), rel=1e-6)
    assert fit.residual < 1e-5


def test_dephasing_curve_monotone_and_crossing():
    curve = dephasing_curve(np.linspace(0, 0.05, 26))
    assert curve.infidelity[0] == pytest.approx(0, abs=1e-9)
    assert np.all(np.diff(curve.infidelity) > 0)
    assert curve.crossing() == pytest.approx(threshold_ratio(), rel=1e-3)
    assert threshold_ratio() == pytest.approx(8.578199e-3, rel=1e-5)
    with pytest.raises(ValueError):
        DephasingCurve(np.array([0.0, 0.001]), np.array([0.0, 0.001])).crossing()


def test_dephasing_curve_is_ratio_based():
    # the curve depends only on Gamma / Omega0
    a = dephasing_curve([0.01], omega0=OMEGA0_DEPHASING).infidelity
    b = dephasing_curve([0.01], omega0=1.0).infidelity
    assert a == pytest.approx(b, rel=1e-8)


def test_dephasing_grid_validation():
    with pytest.raises(ValueError):
        dephasing_curve([0.2])
    with pytest.raises(ValueError):
        dephasing_curve([-0.01])
    with pytest.raises(ValueError):
        dephasing_curve([])


# -- Gaussian averages ------------------------------------------------------

def test_gaussian_spec_validation_and_nodes():
    with pytest.raises(ValueError):
        GaussianSpec(0.0)
    with pytest.raises(ValueError):
        GaussianSpec(0.1, order=3)
    with pytest.raises(ValueError):
        GaussianSpec(0.1, window=-1)
    e, w = GaussianSpec(0.1, order=41).nodes()
    assert np.all(np.abs(e) <= 0.4)
    assert np.sum(w) == pytest.approx(0.99994, abs=1e-4)
    # quadrature is exact for the second moment
    assert np.sum(w * e ** 2) == pytest.approx(0.01, rel=1e-3)
    spec = GaussianSpec(0.1, window=0.3)
    assert spec.limit == pytest.approx(0.3)
    e, w = spec.nodes()
    assert np.max(np.abs(e)) < 0.3


@pytest.mark.parametrize("scheme", SCHEMES)
def test_gaussian_average_against_quad(scheme):
    for sigma in (0.1, 0.2):
        q = gaussian_average(scheme, "U1", "rabi", GaussianSpec(sigma, window=RABI_WINDOW))
        assert q == pytest.approx(quad_average(scheme, "rabi", sigma, RABI_WINDOW), abs=2e-3)
    for s_khz in (5, 10):
        q = gaussian_average(scheme, "U1", "detuning", GaussianSpec(khz(s_khz), window=DETUNING_WINDOW))
        assert q == pytest.approx(quad_average(scheme, "detuning", khz(s_khz), DETUNING_WINDOW), abs=2e-3)


def test_gaussian_average_mc_within_three_se():
    spec = GaussianSpec(0.1, window=RABI_WINDOW)
    mc, se = gaussian_average_mc("NGQC", "U1", "rabi", spec, n_samples=100_000, seed=3)
    assert abs(mc - gaussian_average("NGQC", "U1", "rabi", spec)) <= 3 * se
    assert gaussian_average_checked("DQC", "U1", "detuning", GaussianSpec(khz(5), window=DETUNING_WINDOW),
                                    seed=4) > 0
    with pytest.raises(ValueError):
        gaussian_average_mc("DQC", "U1", "rabi", spec, n_samples=1)
    with pytest.raises(ValueError):
        gaussian_average("DQC", "U1", "dephasing", spec)


def test_table1_frozen_and_orderings():
    rows = table1()
    keys = ["rabi 0.1", "rabi 0.2", "det 5", "det 10"]
    for key, row in zip(keys, rows):
        for scheme in SCHEMES:
            assert row.infidelity_pct[scheme] == pytest.approx(TABLE1_FROZEN[key][scheme], abs=1e-9)
        v = row.infidelity_pct
        assert v["NNGQC"] < min(v["NGQC"], v["DQC"])
        worst = "DQC" if row.error_kind == "rabi" else "NGQC"
        assert max(v, key=v.get) == worst


def test_table1_monotone_in_sigma():
    rows = table1()
    for scheme in SCHEMES:
        assert rows[1].infidelity_pct[scheme] > rows[0].infidelity_pct[scheme]
        assert rows[3].infidelity_pct[scheme] > rows[2].infidelity_pct[scheme]


# -- tomography comparison --------------------------------------------------

def test_scheme_comparison_against_superoperator_oracle():
    res = {r.scheme: r for r in scheme_comparison()}
    for scheme in SCHEMES:
        seq = gate_sequence(scheme, "U1", OMEGA0)
        u = seq.target
        s_ideal = np.kron(u.conj(), u)
        f_clean = np.trace(s_ideal.conj().T @ superop(seq, GAMMA_COMPARISON)).real / 4
        assert res[scheme].calibrated == pytest.approx(f_clean, abs=1e-8)
        assert res[scheme].raw == pytest.approx(SPAM_P * f_clean + (1 - SPAM_P) / 4, abs=1e-8)
        assert (res[scheme].raw, res[scheme].calibrated) == pytest.approx(COMPARISON_FROZEN[scheme], abs=1e-9)
    for key in ("raw", "calibrated"):
        vals = [getattr(res[s], key) for s in SCHEMES]
        assert vals[0] > vals[1] > vals[2]


def test_scheme_comparison_without_noise():
    for r in scheme_comparison(spam=None, gamma=0.0):
        assert r.raw == pytest.approx(1, abs=1e-9) and r.calibrated == pytest.approx(1, abs=1e-9)


# -- output ----------------------------------------------------------------

def test_writers_roundtrip(tmp_path):
    path = write_csv(tmp_path / "a.csv", ["x", "y"], [(0.1, np.float64(1 / 3)), (2, "s")])
    rows = list(csv.reader(path.open()))
    assert rows == [["x", "y"], ["0.1", repr(1 / 3)], ["2", "s"]]
    path = write_json(tmp_path / "a.json", {"arr": np.arange(3.0), "f": np.float64(0.5),
                                           "fit": FitResult(1.0, 2.0, 0.0, 3)})
    data = json.loads(path.read_text())
    assert data == {"arr": [0.0, 1.0, 2.0], "f": 0.5,
                    "fit": {"a": 1.0, "b": 2.0, "residual": 0.0, "iterations": 3}}


def test_metadata_contents():
    meta = metadata("sweep", {"grid": np.array([0.0, 1.0])}, seed=5)
    assert meta["seed"] == 5 and meta["parameters"]["grid"] == [0.0, 1.0]
    assert "basis" in meta["conventions"] and "version" in meta
    json.dumps(meta)
