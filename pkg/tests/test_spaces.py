import numpy as np
import pytest

from cavqudit.spaces import (
    DensityMatrix,
    Superoperator,
    apply_dissipator,
    basis_dm,
    build_space,
    choi_matrix,
    dissipator,
    is_trace_preserving,
    partial_trace,
    rotation_unitary,
    unitary_superoperator,
    unvec,
    vec,
)

from conftest import random_density_matrix, random_unitary


class TestBuildSpace:
    def test_lexicographic_ordering(self):
        space = build_space([3, 2, 2])
        assert space.dim == 12
        assert space.index((2, 1, 1)) == 11
        assert space.index((0, 0, 0)) == 0
        assert space.levels(11) == (2, 1, 1)

    def test_degenerate_space(self):
        assert build_space([1]).dim == 1

    def test_large_product(self):
        assert build_space([3, 21, 21]).dim == 1323

    def test_index_roundtrip(self, rng):
        space = build_space([3, 4, 2])
        for idx in range(space.dim):
            assert space.index(space.levels(idx)) == idx

    @pytest.mark.parametrize("dims", [[0], [2, -1], []])
    def test_invalid_dims(self, dims):
        with pytest.raises(ValueError):
            build_space(dims)

    def test_embed_matches_kron(self):
        space = build_space([2, 3], labels=["q", "c"])
        a_local = np.diag(np.sqrt(np.arange(1, 3)), k=1)
        expected = np.kron(np.eye(2), a_local)
        np.testing.assert_allclose(space.annihilation("c"), expected)


class TestRotationUnitary:
    def test_zero_angle_is_identity(self):
        np.testing.assert_allclose(rotation_unitary(5, 1, 3, 0.0), np.eye(5))

    def test_pi_swaps_levels(self):
        u = rotation_unitary(4, 0, 2, np.pi)
        v = np.zeros(4)
        v[0] = 1.0
        out = u @ v
        assert abs(out[2] - 1.0) < 1e-12
        v2 = np.zeros(4)
        v2[2] = 1.0
        assert abs((u @ v2)[0] + 1.0) < 1e-12

    def test_half_pi_matrix(self):
        u = rotation_unitary(2, 0, 1, np.pi / 2)
        s = 1 / np.sqrt(2)
        np.testing.assert_allclose(u, [[s, -s], [s, s]], atol=1e-15)

    def test_identity_outside_pair(self):
        u = rotation_unitary(5, 1, 3, 0.7)
        for lvl in (0, 2, 4):
            e = np.zeros(5)
            e[lvl] = 1
            np.testing.assert_allclose(u @ e, e, atol=1e-15)

    def test_equal_indices_rejected(self):
        with pytest.raises(ValueError):
            rotation_unitary(3, 1, 1, 0.3)

    def test_inverse_and_unitarity(self, rng):
        space = build_space([12])
        for _ in range(100):
            j, k = rng.choice(12, size=2, replace=False)
            theta = rng.uniform(-2 * np.pi, 2 * np.pi)
            u = rotation_unitary(space, int(j), int(k), theta)
            ui = rotation_unitary(space, int(j), int(k), -theta)
            np.testing.assert_allclose(u @ ui, np.eye(12), atol=1e-12)
            np.testing.assert_allclose(u.conj().T @ u, np.eye(12), atol=1e-12)


class TestDissipator:
    def test_decay_on_excited_state(self):
        space = build_space([2])
        a = space.transition(0, 0, 1)
        out = apply_dissipator(a, basis_dm(space, 1))
        np.testing.assert_allclose(out, np.diag([1.0, -1.0]), atol=1e-15)

    def test_traceless_hermitian(self, rng):
        d = 6
        for _ in range(10):
            a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            rho = random_density_matrix(rng, d)
            out = apply_dissipator(a, rho)
            assert abs(np.trace(out)) < 1e-12 * np.abs(a).max() ** 2
            np.testing.assert_allclose(out, out.conj().T, atol=1e-12 * np.abs(out).max())

    def test_fock_decay_rate(self):
        space = build_space([5])
        gamma = 3.7
        a = np.sqrt(gamma) * space.annihilation(0)
        out = apply_dissipator(a, basis_dm(space, 3))
        assert abs(out[3, 3] + 3 * gamma) < 1e-12

    def test_matrix_matches_direct(self, rng):
        d = 4
        a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        rho = random_density_matrix(rng, d)
        s = dissipator(a)
        np.testing.assert_allclose(s.apply(rho), apply_dissipator(a, rho), atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            apply_dissipator(np.eye(3), np.eye(4) / 4)


class TestPartialTrace:
    def test_product_state(self, rng):
        rho1 = random_density_matrix(rng, 3)
        rho2 = random_density_matrix(rng, 4)
        joint = np.kron(rho1, rho2)
        np.testing.assert_allclose(partial_trace(joint, [3, 4], [0]), rho1, atol=1e-12)
        np.testing.assert_allclose(partial_trace(joint, [3, 4], [1]), rho2, atol=1e-12)

    def test_bell_state(self):
        bell = np.zeros(4, dtype=complex)
        bell[0] = bell[3] = 1 / np.sqrt(2)
        rho = np.outer(bell, bell.conj())
        red = partial_trace(rho, [2, 2], [0])
        np.testing.assert_allclose(red, np.eye(2) / 2, atol=1e-12)
        assert abs(np.trace(red @ red).real - 0.5) < 1e-12

    def test_trace_preserved_random(self, rng):
        for _ in range(5):
            psi = rng.standard_normal(9) + 1j * rng.standard_normal(9)
            psi /= np.linalg.norm(psi)
            rho = np.outer(psi, psi.conj())
            red = partial_trace(rho, [3, 3], [1])
            assert abs(np.trace(red) - 1.0) < 1e-12

    def test_empty_keep_rejected(self):
        with pytest.raises(ValueError):
            partial_trace(np.eye(4) / 4, [2, 2], [])


class TestSuperoperators:
    def test_vec_convention(self):
        m = np.array([[1, 2], [3, 4]], dtype=complex)
        np.testing.assert_allclose(vec(m), [1, 3, 2, 4])
        np.testing.assert_allclose(unvec(vec(m)), m)

    def test_unitary_superoperator_action(self, rng):
        u = random_unitary(rng, 3)
        rho = random_density_matrix(rng, 3)
        s = Superoperator(unitary_superoperator(u))
        np.testing.assert_allclose(s.apply(rho), u @ rho @ u.conj().T, atol=1e-12)
        assert s.is_trace_preserving()
        np.testing.assert_allclose(s.apply(np.eye(3) / 3), np.eye(3) / 3, atol=1e-12)

    def test_choi_of_identity(self):
        s = unitary_superoperator(np.eye(2))
        omega = np.array([1, 0, 0, 1.0])
        np.testing.assert_allclose(choi_matrix(s), np.outer(omega, omega), atol=1e-15)

    def test_choi_against_column_construction(self, rng):
        u = random_unitary(rng, 3)
        s = unitary_superoperator(u)
        d = 3
        expected = np.zeros((9, 9), dtype=complex)
        for i in range(d):
            for j in range(d):
                e = np.zeros((d, d), dtype=complex)
                e[i, j] = 1.0
                expected += np.kron(e, unvec(s @ vec(e)))
        np.testing.assert_allclose(choi_matrix(s), expected, atol=1e-12)

    def test_composition_associative(self, rng):
        a = Superoperator(unitary_superoperator(random_unitary(rng, 2)))
        b = Superoperator(unitary_superoperator(random_unitary(rng, 2)))
        c = Superoperator(unitary_superoperator(random_unitary(rng, 2)))
        lhs = (a @ b) @ c
        rhs = a @ (b @ c)
        np.testing.assert_allclose(lhs.matrix, rhs.matrix, atol=1e-12)
        ident = Superoperator.identity(2)
        np.testing.assert_allclose((a @ ident).matrix, a.matrix, atol=1e-15)

    def test_trace_preservation_check(self):
        assert is_trace_preserving(unitary_superoperator(np.eye(4)))
        assert not is_trace_preserving(0.5 * unitary_superoperator(np.eye(4)))


class TestDensityMatrix:
    def test_valid_state(self, rng):
        dm = DensityMatrix(random_density_matrix(rng, 4))
        assert dm.dim == 4
        assert 0 < dm.purity() <= 1 + 1e-12

    def test_from_state_normalizes(self):
        dm = DensityMatrix.from_state(np.array([2.0, 0.0]))
        assert abs(dm.purity() - 1.0) < 1e-12

    def test_invalid_states_rejected(self):
        with pytest.raises(ValueError):
            DensityMatrix(np.array([[1.0, 0.5], [0.2, 0.0]]))
        with pytest.raises(ValueError):
            DensityMatrix(np.diag([0.9, 0.4]))
        with pytest.raises(ValueError):
            DensityMatrix(np.diag([1.5, -0.5]))
