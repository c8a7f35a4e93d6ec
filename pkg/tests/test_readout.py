import numpy as np
import pytest

from cavqudit.noise import cavity_jumps
from cavqudit.readout import (
    DUAL_RAIL_MAP_REFERENCE,
    ConfusionMatrix,
    ReadoutModel,
    correct_populations,
    dual_rail_map_channel,
    fit_readout_model,
    measured_gef_confusion,
    readout_channel,
    symmetric_classifier,
)
from cavqudit.spaces import basis_dm, build_space, partial_trace

CANONICAL = ReadoutModel(0.0055, 0.0110, symmetric_classifier(0.0024, 0.0010, 0.0))


class TestConfusionMatrix:
    def test_column_stochastic_enforced(self):
        with pytest.raises(ValueError):
            ConfusionMatrix(np.array([[0.9, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]))

    def test_stored_matrix_assignment_fidelity(self):
        cm = measured_gef_confusion()
        assert abs(cm.assignment_fidelity() - 0.9876) < 5e-4

    def test_csv_roundtrip(self, tmp_path):
        cm = measured_gef_confusion()
        path = tmp_path / "matrix.csv"
        cm.save_csv(path)
        loaded = ConfusionMatrix.load_csv(path)
        np.testing.assert_allclose(loaded.matrix, cm.matrix, atol=1e-9)

    def test_model_confusion_is_column_stochastic(self, rng):
        for _ in range(20):
            model = ReadoutModel(
                rng.uniform(0, 0.3),
                rng.uniform(0, 0.3),
                symmetric_classifier(rng.uniform(0, 0.1), rng.uniform(0, 0.1), rng.uniform(0, 0.05)),
            )
            m = model.predicted_confusion().matrix
            np.testing.assert_allclose(m.sum(axis=0), np.ones(3), atol=1e-12)
            assert np.all(m >= -1e-15)


@pytest.fixture(scope="module")
def space():
    return build_space([3, 3], labels=["transmon", "alice"])


@pytest.fixture(scope="module")
def rail_space():
    return build_space([3, 2, 2], labels=["transmon", "alice", "bob"])


class TestReadoutChannel:

    def test_ideal_projective_limit(self, space, params):
        cav = [j.matrix for j in cavity_jumps(space, params, "alice")]
        rho = basis_dm(space, (1, 1))
        branches = readout_channel(ReadoutModel.ideal(), rho, space, idle_jumps=cav)
        probs = {label: p for label, p, _ in branches}
        assert abs(probs["e"] - 1.0) < 1e-12
        # cavity factor idles during the readout
        state = dict((l, s) for l, _, s in branches)["e"]
        cavity = partial_trace(state, [3, 3], [1])
        assert abs(cavity[1, 1].real - np.exp(-1.7e-6 / params.T1_A)) < 1e-6

    def test_relaxation_leaks_e_to_g(self, space, params):
        rho = basis_dm(space, (1, 0))
        branches = readout_channel(CANONICAL, rho, space)
        probs = {label: p for label, p, _ in branches}
        assert probs["g"] >= 0.0055
        assert abs(sum(probs.values()) - 1.0) < 1e-9

    def test_uniform_mixture_is_symmetric(self, space):
        rho = sum(basis_dm(space, (q, 0)) for q in range(3)) / 3.0
        branches = readout_channel(ReadoutModel.ideal(), rho, space)
        for _, p, state in branches:
            assert abs(p - 1 / 3) < 1e-12
            assert abs(np.trace(state).real - 1.0) < 1e-12

    def test_probabilities_and_states_normalized(self, space, params, rng):
        cav = [j.matrix for j in cavity_jumps(space, params, "alice")]
        psi = rng.standard_normal(9) + 1j * rng.standard_normal(9)
        psi /= np.linalg.norm(psi)
        rho = np.outer(psi, psi.conj())
        branches = readout_channel(CANONICAL, rho, space, idle_jumps=cav)
        assert abs(sum(p for _, p, _ in branches) - 1.0) < 1e-9
        for _, p, state in branches:
            if p > 0:
                assert abs(np.trace(state).real - 1.0) < 1e-9


class TestFitReadoutModel:
    def test_identity_matrix(self):
        model, residual = fit_readout_model(np.eye(3))
        assert model.p_eg < 1e-6 and model.p_fe < 1e-6
        assert residual < 1e-6

    def test_roundtrip_recovers_parameters(self):
        target = CANONICAL.predicted_confusion()
        model, residual = fit_readout_model(target)
        assert abs(model.p_eg - 0.0055) < 2e-4
        assert abs(model.p_fe - 0.0110) < 2e-4
        assert residual < 1e-6

    def test_roundtrip_other_generator(self):
        gen = ReadoutModel(0.006, 0.012, symmetric_classifier(0.0024, 0.0010, 0.0))
        model, _ = fit_readout_model(gen.predicted_confusion())
        assert abs(model.p_eg - 0.006) < 2e-4
        assert abs(model.p_fe - 0.012) < 2e-4

    def test_stored_matrix_fits_near_canonical(self):
        model, residual = fit_readout_model(measured_gef_confusion())
        # drifted relative to the canonical decomposition, but same scale
        assert abs(model.p_eg - 0.0055) < 0.3 * 0.0055 + 2e-3
        assert abs(model.p_fe - 0.0110) < 0.3 * 0.0110 + 4e-3
        assert residual < 5e-3


class TestCorrectPopulations:
    def test_identity_unchanged(self):
        out = correct_populations([0.2, 0.5, 0.3], np.eye(3))
        np.testing.assert_allclose(out.values, [0.2, 0.5, 0.3], atol=1e-12)
        assert not out.clipped

    def test_reference_column_recovery(self):
        out = correct_populations(DUAL_RAIL_MAP_REFERENCE[:, 0], DUAL_RAIL_MAP_REFERENCE)
        np.testing.assert_allclose(out.values, [1.0, 0.0, 0.0], atol=1e-12)

    def test_synthetic_roundtrip(self):
        true = np.array([0.5, 0.3, 0.2])
        measured = DUAL_RAIL_MAP_REFERENCE @ true
        out = correct_populations(measured, DUAL_RAIL_MAP_REFERENCE)
        assert np.max(np.abs(out.values - true)) < 1e-9

    def test_clipping_flagged(self):
        # slightly unphysical measurement drives one component negative
        measured = DUAL_RAIL_MAP_REFERENCE @ np.array([1.0, 0.0, 0.0])
        measured[1] -= 0.01
        measured[0] += 0.01
        out = correct_populations(measured, DUAL_RAIL_MAP_REFERENCE)
        assert out.clipped
        assert abs(out.values.sum() - 1.0) < 1e-12

    def test_singular_rejected(self):
        with pytest.raises(ValueError):
            correct_populations([0.5, 0.3, 0.2], np.full((3, 3), 1 / 3))


class TestDualRailMap:
    def test_ideal_mapping(self, rail_space, params):
        space = rail_space
        channel, decoder = dual_rail_map_channel(space, params)
        assert decoder == {"g": "00", "e": "10", "f": "01"}
        targets = {(0, 0, 0): 0, (0, 1, 0): 1, (0, 0, 1): 2}
        for prep, level in targets.items():
            out = channel(basis_dm(space, prep))
            transmon = partial_trace(out, [3, 2, 2], [0])
            assert abs(transmon[level, level].real - 1.0) < 1e-9

    def test_noisy_mapping_matches_reference_scale(self, rail_space, params):
        space = rail_space
        from cavqudit.noise import NoiseModel

        noise = NoiseModel.from_params(space, params, modes=("alice", "bob"))
        channel, _ = dual_rail_map_channel(space, params, noise.operators())
        rho = channel(basis_dm(space, (0, 0, 1)))
        # include the three-state readout of the mapped transmon
        branches = readout_channel(CANONICAL, rho, space)
        p_f = {label: p for label, p, _ in branches}["f"]
        assert abs(p_f - 0.9728) < 0.02
