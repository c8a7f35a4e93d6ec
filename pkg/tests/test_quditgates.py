import numpy as np
import pytest

from cavqudit.params import TWO_PI
from cavqudit.quditgates import (
    SynthesisConfig,
    TwoQuditUnitary,
    csum_gate,
    decompose_single_qudit,
    entangling_power,
    extract_vrbs_unitary,
    gate_fidelity,
    single_qudit_rotation,
    synthesize,
    synthesize_ladder,
)
from cavqudit.vrbs import VrbsConfig

from conftest import random_unitary

ENTANGLER_CFG = VrbsConfig(detuning=-TWO_PI * 5.5e6)


@pytest.fixture(scope="module")
def vrbs_gate(params):
    return extract_vrbs_unitary(ENTANGLER_CFG, params, d=3)


class TestCsumGate:
    def test_permutation_action(self):
        u = csum_gate(3)
        for m in range(3):
            for n in range(3):
                src = np.zeros(9)
                src[m * 3 + n] = 1.0
                out = u @ src
                assert abs(out[m * 3 + (m + n) % 3] - 1.0) < 1e-15

    def test_unitary(self):
        u = csum_gate(3)
        np.testing.assert_allclose(u.conj().T @ u, np.eye(9), atol=1e-15)


class TestSingleQuditRotation:
    def test_zero_angles_identity(self):
        for d in (2, 3, 4):
            np.testing.assert_allclose(
                single_qudit_rotation(d, np.zeros(d * d - 1)), np.eye(d), atol=1e-15
            )

    def test_special_unitary(self, rng):
        for d in (2, 3):
            angles = rng.uniform(-np.pi, np.pi, d * d - 1)
            u = single_qudit_rotation(d, angles)
            np.testing.assert_allclose(u.conj().T @ u, np.eye(d), atol=1e-12)
            assert abs(np.linalg.det(u) - 1.0) < 1e-12

    def test_wrong_angle_count(self):
        with pytest.raises(ValueError):
            single_qudit_rotation(3, np.zeros(7))

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_decomposition_roundtrip(self, d, rng):
        for _ in range(3):
            target = random_unitary(rng, d)
            angles = decompose_single_qudit(target)
            rebuilt = single_qudit_rotation(d, angles)
            assert gate_fidelity(rebuilt, target) > 1 - 1e-10

    def test_closure_under_composition(self, rng):
        a = single_qudit_rotation(3, rng.uniform(-np.pi, np.pi, 8))
        b = single_qudit_rotation(3, rng.uniform(-np.pi, np.pi, 8))
        angles = decompose_single_qudit(a @ b)
        assert gate_fidelity(single_qudit_rotation(3, angles), a @ b) > 1 - 1e-8


class TestGateFidelity:
    def test_identity_cases(self):
        assert gate_fidelity(np.eye(9), np.eye(9)) == 1.0
        assert abs(gate_fidelity(np.eye(9), np.exp(1.3j) * np.eye(9)) - 1.0) < 1e-12

    def test_diagonal_sign_example(self):
        v = np.diag([1.0] * 8 + [-1.0]).astype(complex)
        assert abs(gate_fidelity(np.eye(9), v) - (7 / 9) ** 2) < 1e-12

    def test_symmetry(self, rng):
        u, v = random_unitary(rng, 9), random_unitary(rng, 9)
        assert abs(gate_fidelity(u, v) - gate_fidelity(v, u)) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            gate_fidelity(np.eye(4), np.eye(9))


class TestEntanglingPower:
    def test_identity_zero(self):
        ep, _ = entangling_power(np.eye(9), 5000, seed=0)
        assert abs(ep) < 1e-12

    def test_product_unitary_zero(self, rng):
        u = np.kron(random_unitary(rng, 3), random_unitary(rng, 3))
        ep, stderr = entangling_power(u, 20000, seed=1)
        assert abs(ep) < 3 * max(stderr, 1e-12)

    def test_csum_reference_value(self):
        ep, stderr = entangling_power(csum_gate(3), 100_000, seed=2)
        assert abs(ep - 0.375) < 0.003
        assert stderr < 0.002

    def test_local_unitary_invariance(self, rng):
        u = csum_gate(3)
        locals_pre = np.kron(random_unitary(rng, 3), random_unitary(rng, 3))
        locals_post = np.kron(random_unitary(rng, 3), random_unitary(rng, 3))
        ep0, se0 = entangling_power(u, 40000, seed=5)
        ep1, se1 = entangling_power(locals_post @ u @ locals_pre, 40000, seed=5)
        assert abs(ep0 - ep1) < 3 * (se0 + se1)

    def test_range(self, rng):
        ep, _ = entangling_power(random_unitary(rng, 9), 10000, seed=3)
        assert 0.0 <= ep < 1.0


class TestVrbsExtraction:
    def test_block_diagonal_structure(self, vrbs_gate):
        sector = np.array([na + nb for na in range(3) for nb in range(3)])
        off = sector[:, None] != sector[None, :]
        assert np.max(np.abs(vrbs_gate.matrix[off])) < 1e-6
        assert vrbs_gate.leakage < 1e-6

    def test_unitary_after_polar(self, vrbs_gate):
        np.testing.assert_allclose(
            vrbs_gate.matrix.conj().T @ vrbs_gate.matrix, np.eye(9), atol=1e-10
        )

    def test_zero_time_identity(self, params):
        u = extract_vrbs_unitary(ENTANGLER_CFG, params, gate_time=0.0, d=3)
        np.testing.assert_allclose(u.matrix, np.eye(9), atol=1e-12)
        assert u.spread < 1e-12

    def test_fifty_fifty_on_single_photon_block(self, vrbs_gate):
        m = vrbs_gate.matrix
        # |10> and |01> global indices in the d=3 two-qudit layout
        i10, i01 = 3, 1
        assert abs(abs(m[i10, i10]) ** 2 - 0.5) < 0.05
        assert abs(abs(m[i01, i10]) ** 2 - 0.5) < 0.05

    def test_entangling_power_reference(self, vrbs_gate):
        ep, _ = entangling_power(vrbs_gate, 100_000, seed=3)
        assert abs(ep - 0.379) < 0.01

    def test_wrapper_validates(self):
        with pytest.raises(ValueError):
            TwoQuditUnitary(d=3, matrix=np.ones((9, 9)))


class TestSynthesis:
    def test_target_equals_entangler(self, vrbs_gate):
        res = synthesize(vrbs_gate.matrix, vrbs_gate, 1, SynthesisConfig(restarts=2, seed=0))
        assert res.fidelity > 1 - 1e-6

    def test_ladder_monotone_and_high_fidelity(self, vrbs_gate):
        ladder = synthesize_ladder(
            csum_gate(3), vrbs_gate, [2, 3], SynthesisConfig(restarts=6, seed=1, maxiter=400)
        )
        fids = [r.fidelity for r in ladder]
        assert fids[1] >= fids[0] - 1e-12
        assert fids[0] >= 0.45

    def test_deterministic_given_seed(self, vrbs_gate):
        cfg = SynthesisConfig(restarts=2, seed=7, maxiter=150)
        a = synthesize(csum_gate(3), vrbs_gate, 1, cfg)
        b = synthesize(csum_gate(3), vrbs_gate, 1, cfg)
        assert a.fidelity == b.fidelity
        np.testing.assert_array_equal(a.angles, b.angles)

    def test_invalid_blocks(self, vrbs_gate):
        with pytest.raises(ValueError):
            synthesize(csum_gate(3), vrbs_gate, 0, SynthesisConfig(restarts=1))
