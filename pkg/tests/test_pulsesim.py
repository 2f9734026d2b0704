import math
import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from qme_sim import channels as ch
from qme_sim import pulsesim as ps
from qme_sim import qcore, thermo
from qme_sim.cycle import CycleConfig, run_cycle
from qme_sim.errors import InvalidNoise, QmeError
from qme_sim.qcore import I2, PROJ0, SX, SZ

H = thermo.SpinHamiltonianParams(1.0)
PLUS = np.full((2, 2), 0.5, dtype=complex)
ANGLES = ps.angle_grid(20)


def ideal_choi(kind, angle):
    s = ch.strength_of_angle(angle)
    return ch.choi_matrix(ch.kraus_a(1.0, s) if kind == "a" else ch.kraus_b(s))


def test_pulse_op_validation():
    with pytest.raises(QmeError):
        ps.rot("C", "x", 7.0)
    with pytest.raises(QmeError):
        ps.rot("N", "x", 1.0)
    with pytest.raises(QmeError):
        ps.jev(-1e-3)
    assert ps.rot("C", "x", math.pi, nutation_hz=25e3).duration == pytest.approx(1 / 50e3)


def test_sequence_duration_is_sum():
    seq = ps.PulseSequence((ps.jev(1e-3), ps.rot("H", "y", 1.0, 1e4), ps.jev(2e-3), ps.grad()))
    assert seq.total_duration == pytest.approx(3e-3 + 1.0 / (2 * math.pi * 1e4), abs=1e-18)
    assert len(seq + seq) == 8


def test_empty_sequence_returns_input(rng):
    rho = qcore.random_state(4, rng)
    np.testing.assert_array_equal(ps.simulate(ps.PulseSequence(()), rho), rho)
    np.testing.assert_allclose(ps.effective_channel(ps.PulseSequence(())), ch.choi_matrix(ch.identity_channel()), atol=1e-15)


def test_j_evolution_phase():
    j = ps.constants.J_COUPLING_HZ
    rho = np.kron(PLUS, PLUS)
    out = ps.simulate(ps.PulseSequence((ps.jev(1 / (2 * j)),)), rho)
    u = expm(-1j * math.pi / 4 * np.kron(SZ, SZ))
    np.testing.assert_allclose(out, u @ rho @ u.conj().T, atol=1e-14)


def test_x_pi_flips_carbon():
    out = ps.simulate(ps.PulseSequence((ps.rot("C", "x", math.pi),)), np.kron(PROJ0, PROJ0))
    assert qcore.partial_trace(out, 0)[1, 1].real == pytest.approx(1.0, abs=1e-15)


def test_gradient():
    diag = np.diag([0.1, 0.2, 0.3, 0.4]).astype(complex)
    np.testing.assert_array_equal(ps.gradient_dephase(diag), diag)
    out = ps.gradient_dephase(np.kron(PLUS, PROJ0))
    np.testing.assert_allclose(out, np.kron(I2 / 2, PROJ0), atol=1e-15)
    # zero-quantum coherence |01><10| survives
    zq = np.zeros((4, 4), dtype=complex)
    zq[1, 1] = zq[2, 2] = zq[1, 2] = zq[2, 1] = 0.5
    np.testing.assert_array_equal(ps.gradient_dephase(zq), zq)


@given(st.integers(0, 2**32 - 1))
def test_gradient_idempotent(seed):
    rho = qcore.random_state(4, np.random.default_rng(seed))
    once = ps.gradient_dephase(rho)
    np.testing.assert_array_equal(ps.gradient_dephase(once), once)
    assert qcore.is_state(once)


def test_noise_model_validation():
    with pytest.raises(InvalidNoise):
        ps.NoiseModel(t1_h=1.0, t2_h=2.5)
    with pytest.raises(InvalidNoise):
        ps.NoiseModel(t1_c=-1.0)


def test_relaxation_identity_and_limit(rng):
    noise = ps.NoiseModel()
    rho = qcore.random_state(4, rng)
    np.testing.assert_array_equal(ps.relaxation_step(rho, 0.0, noise), rho)
    far = ps.relaxation_step(rho, 1e4, noise)
    np.testing.assert_allclose(far, np.eye(4) / 4, atol=1e-12)
    biased = ps.NoiseModel(p1_eq_h=0.2, p1_eq_c=0.4)
    far = ps.relaxation_step(rho, 1e4, biased)
    np.testing.assert_allclose(far, np.kron(np.diag([0.6, 0.4]), np.diag([0.8, 0.2])), atol=1e-12)


@given(st.floats(0.0, 5.0), st.floats(0.0, 5.0), st.integers(0, 2**32 - 1))
def test_relaxation_composition(dt1, dt2, seed):
    noise = ps.NoiseModel()
    rho = qcore.random_state(4, np.random.default_rng(seed))
    two = ps.relaxation_step(ps.relaxation_step(rho, dt1, noise), dt2, noise)
    np.testing.assert_allclose(two, ps.relaxation_step(rho, dt1 + dt2, noise), atol=1e-10)


def test_relaxation_carbon_coherence_decay():
    rho = np.kron(PLUS, PROJ0)
    out = ps.relaxation_step(rho, 7.7e-3, ps.NoiseModel())
    c = qcore.partial_trace(out, 0)
    assert abs(c[0, 1]) / 0.5 == pytest.approx(math.exp(-0.0077 / 2.57), abs=1e-12)
    assert abs(c[0, 1]) / 0.5 == pytest.approx(0.99701, abs=1e-5)


def test_disabled_noise_is_noop(rng):
    rho = qcore.random_state(4, rng)
    seq = ps.compile_channel_a(1.0, total_duration=7.7e-3)
    np.testing.assert_allclose(ps.simulate(seq, rho, ps.NoiseModel.off()), ps.simulate(seq, rho), atol=1e-15)


def test_compiler_soundness_grid():
    start = time.perf_counter()
    for kind in "ab":
        for angle in ANGLES:
            assert ps.verify_channel(kind, angle) >= 1 - 1e-9
    assert time.perf_counter() - start < 5.0


def test_reference_angle_channel():
    om = thermo.omega_factor(H, 2.98)
    theta = ch.theta_of(0.75, om)
    choi = ps.effective_channel(ps.compile_channel_a(theta))
    assert ch.process_fidelity(choi, ch.choi_matrix(ch.kraus_a(0.75, om))) >= 1 - 1e-9


def test_theta_zero_is_identity():
    assert len(ps.compile_channel_a(0.0)) == 0
    assert len(ps.compile_channel_b(0.0)) == 0


@pytest.mark.parametrize("angle", ANGLES[::4])
def test_simplify_preserves_channel(angle):
    for raw in (ps.raw_channel_a(angle), ps.raw_channel_b(angle)):
        simple = ps.simplify(raw)
        assert len(simple) <= len(raw)
        f = ch.process_fidelity(ps.effective_channel(raw), ps.effective_channel(simple))
        assert f >= 1 - 1e-10


def test_padding_keeps_channel_and_duration():
    seq = ps.compile_channel_b(1.2, total_duration=7.7e-3)
    assert seq.total_duration == pytest.approx(7.7e-3, abs=1e-15)
    assert ch.process_fidelity(ps.effective_channel(seq), ideal_choi("b", 1.2)) >= 1 - 1e-9
    with pytest.raises(QmeError):
        ps.compile_channel_a(2.0, total_duration=1e-4)


@pytest.mark.parametrize("kbt", [1.88, 2.98])
def test_composed_reproduces_rho3(kbt):
    om = thermo.omega_factor(H, kbt)
    seq = ps.compile_composed(0.75, om)
    assert seq.total_duration == pytest.approx(7.7e-3, abs=1e-15)
    rho1 = thermo.gibbs_state(H, kbt)
    out = qcore.partial_trace(ps.simulate(seq, np.kron(rho1, PROJ0)), 0)
    expect = I2 / 2 - (0.5 - 0.75) * thermo.polarization(H, kbt) * SZ
    assert qcore.state_fidelity(out, expect) >= 1 - 1e-9
    single = len(ps.compile_channel_a(ch.theta_of(0.75, om))) + len(ps.compile_channel_b(ch.phi_of(ch.q_star(0.75, om))))
    assert len(seq) < single


def test_composed_rejects_non_engine():
    with pytest.raises(QmeError):
        ps.compile_composed(0.3, 0.7)


def test_text_round_trip():
    seq = ps.compile_composed(0.8, 0.6) + ps.PulseSequence((ps.grad(),))
    text = seq.to_text()
    assert text.startswith("#")
    back = ps.PulseSequence.from_text(text)
    assert back == seq
    assert ps.PulseSequence.from_text("# c\nROT C x 1.5\n\nJEV 0.001\nGRAD\n") == ps.PulseSequence(
        (ps.rot("C", "x", 1.5), ps.jev(1e-3), ps.grad())
    )
    with pytest.raises(QmeError):
        ps.PulseSequence.from_text("FOO 1")


@pytest.mark.parametrize("kind,angle", [("a", 0.4), ("a", 2.9), ("b", 1.7)])
def test_noisy_channel_bounds(kind, angle):
    f = ps.verify_channel(kind, angle, noise=ps.NoiseModel(), total_duration=7.7e-3)
    assert 0.999 <= f < 1.0


def test_noisy_states_valid_at_every_step(rng):
    seen = []
    seq = ps.compile_composed(0.9, 0.75)
    rho = np.kron(qcore.random_state(2, rng), PROJ0)
    ps.simulate(seq, rho, ps.NoiseModel(), max_step=5e-4, callback=lambda i, r: seen.append(r))
    assert len(seen) == len(seq)
    assert all(qcore.is_state(r) for r in seen)


def test_noisy_work_stroke_near_isentropic():
    for kbt in (1.88, 2.98):
        for p in (0.6, 0.75, 0.9, 1.0):
            r = run_cycle(CycleConfig(p=p, kBT=kbt, backend="pulse", noise=ps.NoiseModel()))
            assert abs(r.dS_b) < 5e-3


def test_max_step_refines_consistently():
    seq = ps.compile_channel_a(1.3, total_duration=7.7e-3)
    rho = np.kron(thermo.gibbs_state(H, 2.98), PROJ0)
    coarse = ps.simulate(seq, rho, ps.NoiseModel())
    fine = ps.simulate(seq, rho, ps.NoiseModel(), max_step=1e-4)
    assert np.abs(coarse - fine).max() < 1e-4


def test_x_rotation_matrix():
    np.testing.assert_allclose(qcore.rotation("x", math.pi), -1j * SX, atol=1e-15)
    with pytest.raises(QmeError):
        ps.op_unitary(ps.grad())
