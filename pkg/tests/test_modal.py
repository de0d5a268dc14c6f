from dataclasses import replace
import math

import numpy as np
import pytest

import oracles
from delta_ilc import modal, shaper as sh
from delta_ilc.errors import IndefiniteMass
from delta_ilc.kinematics import inverse_kinematics, sample_workspace

CENTRE = np.array([0.0, 0.0, -0.8151])


def rot_z(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])


def random_poses(rng, n):
    r = 0.2 * np.sqrt(rng.uniform(size=n))
    a = rng.uniform(0, 2 * np.pi, n)
    return np.column_stack([r * np.cos(a), r * np.sin(a), rng.uniform(-1.0, -0.7, n)])


def test_element_matches_closed_form(params, rng):
    for _ in range(5):
        args = (rng.uniform(0.2, 2), rng.uniform(1e-5, 1e-3), rng.uniform(1e-10, 1e-8),
                rng.uniform(1e-10, 1e-8), rng.uniform(1e-10, 1e-8), 2770.0, 71e9, 27e9)
        m, k = modal.beam_element_matrices(*args)
        mo, ko = oracles.euler_bernoulli_local(*args)
        np.testing.assert_allclose(m, mo, rtol=1e-12, atol=1e-12 * np.abs(mo).max())
        np.testing.assert_allclose(k, ko, rtol=1e-12, atol=1e-12 * np.abs(ko).max())


def test_translational_corner_term():
    L, A, rho = 0.95, 8.8e-5, 2770.0
    m, _ = modal.beam_element_matrices(L, A, 1e-9, 1e-9, 2e-9, rho, 71e9, 27e9)
    assert m[1, 1] == pytest.approx(13 * rho * A * L / 35, rel=1e-14)


def test_free_element_has_six_rigid_modes(params, rng):
    axis = rng.normal(size=3)
    el = modal.BeamElement.lower_arm(params, np.zeros(3), params.l2 * axis / np.linalg.norm(axis))
    m, k = el.global_matrices()
    np.testing.assert_allclose(m, m.T, atol=1e-15)
    w = np.linalg.eigvalsh(k)
    assert np.sum(np.abs(w) < 1e-9 * w.max()) == 6
    assert w.min() > -1e-9 * w.max()


def test_element_spectrum_invariant_under_rotation(params, rng):
    a = modal.BeamElement.lower_arm(params, np.zeros(3), [0.3, 0.2, -0.9])
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    b = modal.BeamElement.lower_arm(params, np.zeros(3), q @ np.array([0.3, 0.2, -0.9]))
    ma, ka = a.global_matrices()
    mb, kb = b.global_matrices()
    np.testing.assert_allclose(np.linalg.eigvalsh(kb), np.linalg.eigvalsh(ka),
                               rtol=1e-9, atol=1e-9 * np.abs(ka).max())


def test_assembly_symmetry(params):
    M, K = modal.assemble_unconstrained(params, CENTRE)
    assert M.shape == K.shape == (48, 48)
    np.testing.assert_allclose(M, M.T, atol=1e-15)
    np.testing.assert_allclose(K, K.T, atol=1e-6)
    assert np.linalg.eigvalsh(M).min() > -1e-12
    assert K[0, 3] == -params.servo_stiffness


def test_stiffness_linear_in_modulus(params):
    _, K1 = modal.assemble_unconstrained(params, CENTRE)
    _, K2 = modal.assemble_unconstrained(replace(params, E_r=2 * params.E_r), CENTRE)
    servo = np.zeros_like(K1)
    servo[:6, :6] = K1[:6, :6]
    # shear modulus follows E, so every beam term doubles
    beams1 = K1 - servo
    beams2 = K2 - servo
    np.testing.assert_allclose(beams2[:, 6:], 2 * beams1[:, 6:], rtol=1e-12, atol=1e-3)


def test_compatibility_rank(params, rng):
    for pose in random_poses(rng, 100):
        T = modal.build_compatibility(params, pose)
        assert T.shape == (48, 30)
        assert np.linalg.matrix_rank(T) == 30


def test_pure_translation_moves_tips_equally(params):
    T = modal.build_compatibility(params, CENTRE)
    q = np.zeros(30)
    q[24:27] = [1e-3, -2e-3, 5e-4]
    qu = T @ q
    for j in range(6):
        np.testing.assert_allclose(qu[6 + 6 * j:9 + 6 * j], q[24:27])
    np.testing.assert_allclose(qu[42:45], q[24:27])


def test_small_z_rotation_gives_tangential_tip_motion(params):
    T = modal.build_compatibility(params, CENTRE)
    gamma = 1e-3
    q = np.zeros(30)
    q[27:30] = modal.I_DELTA.T @ np.array([0.0, 0.0, gamma])
    qu = T @ q
    for j, arm in enumerate(modal.arm_geometry(params, inverse_kinematics(CENTRE, params), CENTRE)):
        expect = np.cross([0.0, 0.0, gamma], arm.r_b)
        np.testing.assert_allclose(qu[6 + 6 * j:9 + 6 * j], expect, atol=1e-15)


@pytest.fixture(scope="module")
def centre_model(params):
    return modal.analyse_pose(params, CENTRE)


def test_modal_orthogonality(params, centre_model):
    theta = inverse_kinematics(CENTRE, params)
    M_u, K_u = modal.assemble_unconstrained(params, CENTRE, theta)
    T = centre_model.compatibility
    M = (T.T @ M_u @ T)[3:, 3:]
    K = (T.T @ K_u @ T)[3:, 3:]
    phi = centre_model.mode_shapes
    for mat in (phi.T @ M @ phi, phi.T @ K @ phi):
        off = mat - np.diag(np.diag(mat))
        assert np.abs(off).max() / np.abs(np.diag(mat)).max() < 1e-8
    assert np.all(np.diff(centre_model.frequencies) >= 0)
    assert centre_model.frequencies[0] > modal.RIGID_LEAK_HZ


def test_calibrated_centre_frequency(centre_model):
    assert centre_model.frequencies[0] == pytest.approx(20.0, abs=0.01)


def test_servo_stiffening_raises_first_mode(params):
    base = modal.first_frequency(params, CENTRE)
    assert modal.first_frequency(params, CENTRE, 10 * params.servo_stiffness) > base


def test_frequency_falls_down_the_axis(params):
    f = [modal.first_frequency(params, [0, 0, z]) for z in np.linspace(-0.65, -1.05, 9)]
    assert np.all(np.diff(f) < 0)


def test_map_symmetric_under_chain_rotation(params, rng):
    for pose in random_poses(rng, 10):
        turned = rot_z(2 * np.pi / 3) @ pose
        assert modal.first_frequency(params, turned) == pytest.approx(
            modal.first_frequency(params, pose), rel=1e-9)


def test_frequency_map_csv(params, tmp_path):
    samples = sample_workspace(params, spacing=0.2, z_planes=[-0.7, -1.0])
    fmap = modal.frequency_map(params, samples)
    assert fmap.f1.size == len(samples.poses) and not fmap.failures
    fmap.to_csv(tmp_path / "f.csv")
    rows = (tmp_path / "f.csv").read_text().splitlines()
    assert rows[0] == "x,y,z,f1_Hz" and len(rows) == fmap.f1.size + 1
    lo, hi = fmap.range
    assert lo == fmap.f1.min() and hi == fmap.f1.max()


def test_indefinite_mass(params):
    M_u, K_u = modal.assemble_unconstrained(params, CENTRE)
    T = modal.build_compatibility(params, CENTRE)
    with pytest.raises(IndefiniteMass):
        modal.modal_analysis(-M_u, K_u, T)


def single_mode(f, zeta):
    return modal.ModalModel(np.array([f]), np.zeros((27, 1)), np.array([zeta]),
                            np.array([[-1.0]]))


def test_zero_excitation_zero_residual(centre_model):
    r = modal.residual_oscillator_response(centre_model, np.zeros((500, 3)), 1e-3)
    np.testing.assert_array_equal(r.residual, 0)


def test_shaped_impulse_residual_matches_formula(rng):
    dt = 2e-5
    for _ in range(100):
        f = rng.uniform(5, 30)
        zeta = rng.uniform(0.05, 0.2)
        s = sh.make_shaper(f, zeta, rng.uniform(0.2, 1.0))
        # the bank is probed slightly off the design point as well
        f_probe = f * rng.uniform(0.8, 1.2)
        bank = single_mode(f_probe, zeta)
        # the signal must start at rest, so the pulse sits at sample 1
        pulse = np.zeros(5)
        pulse[1] = 1 / dt
        shaped = sh.shape_signal(s, pulse, dt)
        n2 = int(round(s.times[1] / dt))
        rounded = sh.ShaperSpec(s.amplitudes, (0.0, n2 * dt, 2 * n2 * dt), f, zeta, s.k_t)
        v = sh.residual_percentage(rounded, 2 * np.pi * f_probe, zeta)
        r0 = modal.residual_oscillator_response(bank, pulse[:2], dt, t_end=2 * dt).residual[0]
        r1 = modal.residual_oscillator_response(bank, shaped[:2 * n2 + 2], dt,
                                                t_end=(2 * n2 + 2) * dt).residual[0]
        assert r1 / r0 == pytest.approx(v, rel=0.02, abs=2e-3)


def test_envelope_of_free_vibration_is_constant_amplitude():
    w, z = 2 * np.pi * 10, 0.05
    t = np.linspace(0, 0.5, 1001)
    wd = w * math.sqrt(1 - z * z)
    x = np.exp(-z * w * t) * np.sin(wd * t + 0.3)
    xd = np.gradient(x, t, edge_order=2)
    env = modal.envelope(x, xd, w, z)
    np.testing.assert_allclose(env[5:-5], np.exp(-z * w * t[5:-5]), rtol=2e-3)
