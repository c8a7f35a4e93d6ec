import numpy as np
import pytest
from scipy.linalg import expm

from cavqudit.lindblad import (
    DrivenHamiltonian,
    Lindbladian,
    NoisyRotation,
    evolve,
    lindbladian_matrix,
    noisy_rotation,
    rotation_generator,
)
from cavqudit.noise import cavity_jumps, transmon_jumps
from cavqudit.spaces import (
    basis_dm,
    build_space,
    choi_min_eigenvalue,
    rotation_unitary,
    unitary_superoperator,
)

from conftest import random_density_matrix


@pytest.fixture(scope="module")
def sideband_case(params):
    """Fixed noisy sideband rotation used for the convergence checks."""
    space = build_space([3, 2], labels=["transmon", "alice"])
    jumps = [j.matrix for j in transmon_jumps(space, params) + cavity_jumps(space, params, "alice")]
    j = space.index((2, 0))
    k = space.index((0, 1))
    gate_time = 0.6e-6
    h_rot = rotation_generator(space, j, k, np.pi, gate_time)
    exact = expm(Lindbladian(h_rot, jumps).matrix() * gate_time)
    return space, jumps, j, k, gate_time, exact


class TestLindbladianMatrix:
    def test_zero_generator(self):
        lind = Lindbladian(np.zeros((3, 3)))
        assert np.max(np.abs(lind.matrix())) == 0.0

    def test_amplitude_damping_spectrum(self):
        gamma = 2.0
        a = np.zeros((2, 2), dtype=complex)
        a[0, 1] = np.sqrt(gamma)
        gen = Lindbladian(np.zeros((2, 2)), [a]).matrix()
        eigs = np.sort(np.linalg.eigvals(gen).real)
        np.testing.assert_allclose(eigs, [-gamma, -gamma / 2, -gamma / 2, 0.0], atol=1e-12)

    def test_trace_preservation_row(self, rng, params):
        space = build_space([3], labels=["transmon"])
        h = rng.standard_normal((3, 3))
        h = h + h.T
        gen = Lindbladian(h, [j.matrix for j in transmon_jumps(space, params)]).matrix()
        vid = np.eye(3).flatten(order="F")
        assert np.max(np.abs(vid @ gen)) < 1e-10

    def test_non_hermitian_rejected(self):
        with pytest.raises(ValueError):
            Lindbladian(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestNoisyRotation:
    def test_no_noise_equals_unitary_conjugation(self, sideband_case):
        space, _, j, k, gate_time, _ = sideband_case
        for m in (1, 3, 4):
            s = noisy_rotation(space, j, k, np.pi, [], gate_time, m=m)
            expected = unitary_superoperator(rotation_unitary(space, j, k, np.pi))
            assert np.max(np.abs(s.matrix - expected)) < 1e-12

    def test_second_order_convergence(self, sideband_case):
        space, jumps, j, k, gate_time, exact = sideband_case
        errors = {}
        for m in (2, 4, 8, 16, 32):
            s = noisy_rotation(space, j, k, np.pi, jumps, gate_time, m=m)
            errors[m] = np.linalg.norm(s.matrix - exact)
        for m in (2, 4, 8, 16):
            ratio = errors[m] / errors[2 * m]
            assert 3.5 <= ratio <= 4.5, f"m={m}: ratio {ratio}"

    def test_cptp_at_default_steps(self, sideband_case):
        space, jumps, j, k, gate_time, _ = sideband_case
        s = noisy_rotation(space, j, k, np.pi, jumps, gate_time, m=4)
        assert s.is_trace_preserving(1e-10)
        assert choi_min_eigenvalue(s.matrix) >= -1e-8

    def test_apply_matches_superoperator(self, sideband_case, rng):
        space, jumps, j, k, gate_time, _ = sideband_case
        channel = NoisyRotation.two_level(space, j, k, np.pi, jumps, gate_time, m=4)
        rho = random_density_matrix(rng, space.dim)
        via_matrix = channel.superoperator().apply(rho)
        np.testing.assert_allclose(channel.apply(rho), via_matrix, atol=1e-13)

    def test_output_state_is_physical(self, sideband_case, rng):
        space, jumps, j, k, gate_time, _ = sideband_case
        channel = NoisyRotation.two_level(space, j, k, np.pi, jumps, gate_time, m=4)
        rho = channel.apply(basis_dm(space, (2, 0)))
        assert abs(np.trace(rho).real - 1.0) < 1e-10
        np.testing.assert_allclose(rho, rho.conj().T, atol=1e-12)

    def test_subsystem_pulse_unselective(self, params):
        space = build_space([3, 3], labels=["transmon", "alice"])
        pulse = NoisyRotation.subsystem_pulse(space, "transmon", 0, 1, np.pi, [], 30e-9)
        for n in range(3):
            out = pulse.apply(basis_dm(space, (0, n)))
            assert abs(out[space.index((1, n)), space.index((1, n))].real - 1.0) < 1e-12

    def test_invalid_arguments(self, sideband_case):
        space, jumps, j, k, gate_time, _ = sideband_case
        with pytest.raises(ValueError):
            noisy_rotation(space, j, k, np.pi, jumps, -1.0)
        with pytest.raises(ValueError):
            noisy_rotation(space, j, k, np.pi, jumps, gate_time, m=0)
        with pytest.raises(ValueError):
            noisy_rotation(space, j, j, np.pi, jumps, gate_time)


class TestEvolve:
    def test_static_matches_generator_exponential(self, params, rng):
        space = build_space([3], labels=["transmon"])
        jumps = [j.matrix for j in transmon_jumps(space, params)]
        h = 2 * np.pi * 1e5 * np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex)
        rho0 = random_density_matrix(rng, 3)
        t = 20e-6
        res = evolve(h, jumps, rho0, t, dt=t / 4000)
        gen = Lindbladian(h, jumps).matrix()
        expected = (expm(gen * t) @ rho0.flatten(order="F")).reshape(3, 3, order="F")
        assert np.linalg.norm(res.final - expected) < 1e-8

    def test_amplitude_damping_analytic(self, params):
        space = build_space([2], labels=["alice"])
        t1 = params.T1_A
        a = np.sqrt(1 / t1) * space.annihilation(0)
        t_eval = np.linspace(0, 2 * t1, 9)
        res = evolve(np.zeros((2, 2)), [a], basis_dm(space, 1), t_eval[-1], t_eval=t_eval, dt=t1 / 400)
        p1 = np.array([s[1, 1].real for s in res.states])
        np.testing.assert_allclose(p1, np.exp(-t_eval / t1), atol=1e-6)

    def test_resonant_rabi(self):
        omega = 2 * np.pi * 1e6
        sx = np.array([[0, 1], [1, 0]], dtype=complex)
        driven = DrivenHamiltonian(np.zeros((2, 2)), [(sx, omega / 2, 0.0, 0.0)])
        t_eval = np.linspace(0, 2 * np.pi / omega, 21)
        res = evolve(driven, [], basis_dm(build_space([2]), 0), t_eval[-1], t_eval=t_eval, dt=t_eval[-1] / 2000)
        pe = np.array([s[1, 1].real for s in res.states])
        assert np.max(np.abs(pe - np.sin(omega * t_eval / 2) ** 2)) < 1e-6

    def test_cosine_drive_rk4_matches_adaptive(self):
        omega0 = 2 * np.pi * 50e6
        omega_r = 2 * np.pi * 1e6
        sx = np.array([[0, 1], [1, 0]], dtype=complex)
        h0 = np.diag([0.0, omega0]).astype(complex)
        driven = DrivenHamiltonian(h0, [(sx, omega_r, omega0, 0.0)])
        t = 0.5e-6
        rho0 = basis_dm(build_space([2]), 0)
        adaptive = evolve(driven, [], rho0, t, rtol=1e-10).final
        # default step rule: a fiftieth of the fastest drive period
        fixed = evolve(driven, [], rho0, t).final
        assert np.max(np.abs(fixed - adaptive)) < 3e-4
        # convergence with a finer explicit step
        period = 2 * np.pi / omega0
        fine = evolve(driven, [], rho0, t, dt=period / 400).final
        assert np.max(np.abs(fine - adaptive)) < 1e-7

    def test_hermiticity_along_trajectory(self, params, rng):
        space = build_space([3], labels=["transmon"])
        jumps = [j.matrix for j in transmon_jumps(space, params)]
        rho0 = random_density_matrix(rng, 3)
        t_eval = np.linspace(0, params.T1_ge, 7)
        res = evolve(np.zeros((3, 3)), jumps, rho0, t_eval[-1], t_eval=t_eval, dt=params.T1_ge / 2000)
        for state in res.states:
            assert np.max(np.abs(state - state.conj().T)) < 1e-10
            assert abs(np.trace(state).real - 1.0) < 1e-8

    def test_time_reversibility_unitary(self, rng):
        h = rng.standard_normal((4, 4))
        h = (h + h.T) * 1e6
        rho0 = random_density_matrix(rng, 4)
        t = 1e-6
        forward = evolve(h, [], rho0, t, dt=t / 3000).final
        back = evolve(-h, [], forward, t, dt=t / 3000).final
        assert np.max(np.abs(back - rho0)) < 1e-8

    def test_expm_requires_static(self):
        driven = DrivenHamiltonian(np.zeros((2, 2)), [(np.eye(2), 1.0, 1.0, 0.0)])
        with pytest.raises(ValueError):
            evolve(driven, [], np.eye(2) / 2, 1.0, method="expm")

    def test_lindbladian_matrix_wrapper(self, params):
        space = build_space([3], labels=["transmon"])
        lind = Lindbladian(np.zeros((3, 3)), [j.matrix for j in transmon_jumps(space, params)])
        s = lindbladian_matrix(lind)
        assert s.matrix.shape == (9, 9)
        vid = np.eye(3).flatten(order="F")
        assert np.max(np.abs(vid @ s.matrix)) < 1e-10
