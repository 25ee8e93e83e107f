import csv

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from nngqc.core import U1, NumericalFailure, gate_equivalence, ket, pauli, projector
from nngqc.dynamics import (LindbladTrajectory, NoiseParams, SimConfig, _check_physical,
                            brute_force_propagator, evolve_lindblad, evolve_state,
                            lindblad_trajectory, liouvillian, output_fidelities,
                            output_state_fidelity, propagate_batch, propagate_unitary,
                            segment_hamiltonian, sequence_hamiltonian)
from nngqc.schemes import PulseSegment, PulseSequence, dqc_sequence, gate_sequence

from conftest import random_density

OMEGA0 = 2 * np.pi * 67.9e3
SCHEMES = ("NNGQC", "NGQC", "DQC")


def free(duration):
    return PulseSequence((PulseSegment(duration, 0.0, 0.0),), "DQC", np.eye(2, dtype=complex))


def liouvillian_oracle(seq, rho0, noise):
    """Exact matrix exponential of each segment's Liouvillian (column-stacked vec)."""
    v = rho0.reshape(-1, order="F")
    for seg in seq.segments:
        h = segment_hamiltonian(seg, noise)
        eye = np.eye(2)
        lv = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
        sz = pauli(3)
        lv += 0.5 * noise.gamma * (np.kron(sz.T, sz) - np.kron(eye, eye))
        v = expm(lv * seg.duration) @ v
    return v.reshape(2, 2, order="F")


def test_noise_validation():
    with pytest.raises(ValueError):
        NoiseParams(gamma=-1)
    with pytest.raises(ValueError):
        NoiseParams(detuning=np.nan)
    with pytest.raises(ValueError):
        SimConfig(dt=0)
    with pytest.raises(ValueError):
        SimConfig(method="euler")


def test_segment_hamiltonian_examples():
    seg = PulseSegment(1.0, 2.0, 0.0)
    assert np.allclose(segment_hamiltonian(seg), pauli(1))
    h = segment_hamiltonian(seg, NoiseParams(delta_rabi=-1, detuning=0.4))
    assert np.allclose(h, 0.2 * pauli(3))


@given(st.floats(0, 5), st.floats(-np.pi, np.pi), st.floats(-0.5, 0.5), st.floats(-3, 3))
def test_segment_hamiltonian_eigenvalues(rabi, phase, delta, det):
    h = segment_hamiltonian(PulseSegment(1.0, rabi, phase), NoiseParams(delta_rabi=delta, detuning=det))
    assert np.allclose(h, h.conj().T)
    e = 0.5 * np.hypot((1 + delta) * rabi, det)
    assert np.allclose(np.linalg.eigvalsh(h), [-e, e], atol=1e-12)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_nominal_propagators(scheme):
    seq = gate_sequence(scheme, "U1", OMEGA0)
    assert gate_equivalence(propagate_unitary(seq), U1) >= 1 - 1e-14


@pytest.mark.parametrize("scheme", SCHEMES)
@pytest.mark.parametrize("gate", ["U1", "H"])
def test_propagator_against_dt_halving_oracle(scheme, gate):
    seq = gate_sequence(scheme, gate, 1.0)
    noise = NoiseParams(delta_rabi=0.07, detuning=0.13)
    h = sequence_hamiltonian(seq, noise)
    bps = list(seq.boundaries[1:-1])
    coarse = brute_force_propagator(h, seq.duration, 2000, bps)
    fine = brute_force_propagator(h, seq.duration, 4000, bps)
    exact = propagate_unitary(seq, noise)
    assert np.max(np.abs(fine - coarse)) <= 1e-12
    assert np.max(np.abs(fine - exact)) <= 1e-12


@given(st.floats(-0.3, 0.3), st.floats(-0.5, 0.5))
def test_segment_exponential_matches_expm(delta, det):
    seq = gate_sequence("NGQC", "U1", 1.0)
    noise = NoiseParams(delta_rabi=delta, detuning=det)
    u = np.eye(2)
    for seg in seq.segments:
        u = expm(-1j * segment_hamiltonian(seg, noise) * seg.duration) @ u
    assert np.allclose(propagate_unitary(seq, noise), u, atol=1e-12)


def test_propagate_batch_broadcasts():
    seq = gate_sequence("DQC", "H", 1.0)
    d = np.linspace(-0.2, 0.2, 5)
    batch = propagate_batch(seq, d[:, None], d[None, :])
    assert batch.shape == (5, 5, 2, 2)
    assert np.allclose(batch[1, 3], propagate_unitary(seq, NoiseParams(delta_rabi=d[1], detuning=d[3])))


def test_propagate_unitary_rejects_dephasing():
    with pytest.raises(ValueError):
        propagate_unitary(gate_sequence("DQC", "U1", 1.0), NoiseParams(gamma=0.1))


def test_zero_duration_is_identity():
    assert np.allclose(propagate_unitary(dqc_sequence([], 1.0)), np.eye(2))


@pytest.mark.parametrize("scheme", SCHEMES)
def test_lindblad_closed_limit(scheme, rng):
    seq = gate_sequence(scheme, "H", OMEGA0)
    noise = NoiseParams(delta_rabi=0.05, detuning=2e4)
    rho0 = random_density(rng)
    u = propagate_unitary(seq, noise)
    rho = evolve_lindblad(rho0, seq, noise)
    assert np.max(np.abs(rho - u @ rho0 @ u.conj().T)) <= 1e-9


@pytest.mark.parametrize("scheme", SCHEMES)
def test_lindblad_against_exact_liouvillian(scheme, rng):
    seq = gate_sequence(scheme, "U1", 1.0)
    noise = NoiseParams(gamma=0.05, delta_rabi=-0.03, detuning=0.1)
    rho0 = random_density(rng)
    assert np.max(np.abs(evolve_lindblad(rho0, seq, noise) - liouvillian_oracle(seq, rho0, noise))) <= 1e-10


def test_liouvillian_row_major():
    h = segment_hamiltonian(PulseSegment(1.0, 1.3, 0.4), NoiseParams(detuning=0.2))
    rho = random_density(np.random.default_rng(1))
    lhs = (liouvillian(h, 0.3) @ rho.reshape(-1)).reshape(2, 2)
    rhs = -1j * (h @ rho - rho @ h) + 0.15 * (pauli(3) @ rho @ pauli(3) - rho)
    assert np.allclose(lhs, rhs)


def test_maximally_mixed_is_fixed_point():
    for scheme in SCHEMES:
        seq = gate_sequence(scheme, "U1", 1.0)
        rho = evolve_lindblad(np.eye(2) / 2, seq, NoiseParams(gamma=0.3, detuning=0.2))
        assert np.allclose(rho, np.eye(2) / 2, atol=1e-12)


def test_free_dephasing_decay():
    gamma, t = 0.7, 2.0
    traj = lindblad_trajectory(ket("+"), free(t), NoiseParams(gamma=gamma))
    coh = np.abs(traj.rhos[:, 0, 1])
    assert np.allclose(coh, 0.5 * np.exp(-gamma * traj.times), atol=1e-12)
    assert np.all(np.diff(coh) <= 0)


def test_rk4_convergence_order():
    seq = gate_sequence("NGQC", "U1", 1.0)
    noise = NoiseParams(gamma=0.2, delta_rabi=0.1, detuning=0.3)
    rho0 = projector(ket("+"))
    exact = liouvillian_oracle(seq, rho0, noise)
    shortest = min(s.duration for s in seq.segments)
    err = [np.max(np.abs(evolve_lindblad(rho0, seq, noise, SimConfig(dt=shortest / n)) - exact))
           for n in (100, 200)]
    assert err[0] / err[1] >= 8


def test_step_size_limit():
    seq = gate_sequence("NNGQC", "U1", 1.0)
    with pytest.raises(ValueError):
        evolve_lindblad(np.eye(2) / 2, seq, NoiseParams(gamma=0.1), SimConfig(dt=seq.duration / 50))


def test_physicality_checks():
    with pytest.raises(NumericalFailure):
        _check_physical(np.diag([1.1, -0.1]), "test")
    with pytest.raises(NumericalFailure):
        evolve_lindblad(np.diag([1.0, 1.0]), free(1.0), NoiseParams(gamma=0.1))


def test_trajectory_invariants_and_csv(tmp_path):
    seq = gate_sequence("NNGQC", "U1", 1.0)
    traj = lindblad_trajectory(ket("g"), seq, NoiseParams(gamma=0.05))
    tr = np.trace(traj.rhos, axis1=1, axis2=2).real
    assert np.max(np.abs(tr - 1)) <= 1e-8
    assert np.max(np.abs(traj.rhos - traj.rhos.conj().transpose(0, 2, 1))) <= 1e-10
    f = traj.fidelities()
    assert f[0] == pytest.approx(1) and f[-1] < 1
    path = traj.to_csv(tmp_path / "t.csv")
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["t_s", "Pe", "Re_rho_ge", "Im_rho_ge", "F"]
    assert len(rows) == len(traj.times) + 1
    assert float(rows[1][1]) == 0.0  # starts in |g>
    with pytest.raises(ValueError):
        LindbladTrajectory(traj.times, traj.rhos).fidelities()


def test_evolve_state_dispatch(rng):
    seq = gate_sequence("DQC", "U1", 1.0)
    rho0 = random_density(rng)
    u = propagate_unitary(seq)
    assert np.allclose(evolve_state(rho0, seq), u @ rho0 @ u.conj().T, atol=1e-14)


@pytest.mark.parametrize("scheme", SCHEMES)
@pytest.mark.parametrize("label", ["g", "e", "+", "-"])
def test_noiseless_output_fidelity(scheme, label):
    seq = gate_sequence(scheme, "H", OMEGA0)
    assert output_state_fidelity(seq, ket(label)) >= 1 - 1e-9


def test_nngqc_detuning_10khz_above_097():
    seq = gate_sequence("NNGQC", "U1", OMEGA0)
    for sign in (1, -1):
        f = output_state_fidelity(seq, ket("g"), NoiseParams(detuning=sign * 2 * np.pi * 10e3))
        assert f > 0.97


def test_dephasing_threshold_infidelity():
    seq = gate_sequence("NNGQC", "U1", 1.0)
    eps = 1 - output_state_fidelity(seq, ket("g"), NoiseParams(gamma=8.6e-3))
    assert eps == pytest.approx(1e-2, rel=0.05)


def test_fidelity_insensitive_to_target_global_phase():
    seq = gate_sequence("NGQC", "U1", 1.0)
    other = PulseSequence(seq.segments, seq.scheme, np.exp(0.9j) * seq.target)
    noise = NoiseParams(delta_rabi=0.1, detuning=0.05)
    assert output_state_fidelity(seq, ket("+"), noise) == pytest.approx(
        output_state_fidelity(other, ket("+"), noise), abs=1e-15)


def test_vectorised_fidelities_match_scalar():
    seq = gate_sequence("DQC", "U1", OMEGA0)
    d = np.array([-0.1, 0.0, 0.15])
    vec = output_fidelities(seq, ket("g"), delta_rabi=d)
    scalar = [output_state_fidelity(seq, ket("g"), NoiseParams(delta_rabi=x)) for x in d]
    assert np.allclose(vec, scalar, atol=1e-14)
