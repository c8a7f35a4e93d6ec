"""Acceptance suite: one test per release criterion, at the pinned tolerances.

Run with ``pytest tests/test_acceptance.py -v -s`` to see a PASS line per
criterion.  Every tolerance is fixed here; nothing is deferred to later
calibration.
"""

import json
import math

import numpy as np
import pytest
from scipy.linalg import expm

from cavqudit import fits, fockprep, quditgates, readout, vrbs
from cavqudit.cli import main as cli_main
from cavqudit.lindblad import Lindbladian, noisy_rotation, rotation_generator
from cavqudit.noise import cavity_jumps, pure_dephasing_rate, transmon_jumps
from cavqudit.params import DEVICE_PARAMS, DRIVEN_NOISE, TWO_PI
from cavqudit.spaces import build_space, choi_min_eigenvalue

PARAMS = DEVICE_PARAMS


def _report(number: int, name: str) -> None:
    print(f"\nACCEPTANCE {number:02d} {name}: PASS")


def test_01_fock_decay_law():
    scan = fockprep.fock_lifetime_scan([1, 2, 5, 10, 20], PARAMS, mode="alice")
    t1 = PARAMS.T1_A
    assert abs(t1 - 20.6e-3) < 1e-9
    for n, tau in scan:
        assert abs(tau / (t1 / n) - 1.0) < 0.01, (n, tau)
    # the twenty-photon state stays above a millisecond
    assert dict(scan)[20] > 1e-3
    _report(1, "linear Fock-decay law T1(n) = T1/n within 1%")


def test_02_coherence_limit_arithmetic():
    purcell_a = fits.purcell_limit(PARAMS.delta_a, PARAMS.g_a, PARAMS.T2E_ge)
    purcell_b = fits.purcell_limit(PARAMS.delta_b, PARAMS.g_b, PARAMS.T2E_ge)
    assert abs(purcell_a - 1.17) <= 0.01
    assert abs(purcell_b - 0.34) <= 0.01
    for chi in (PARAMS.chi_e_a, PARAMS.chi_e_b):
        thermal = fits.thermal_dephasing_limit(chi, PARAMS.T1_ge, PARAMS.n_th_q)
        assert abs(thermal - 0.059) <= 0.001
    _report(2, "inverse-Purcell 1.17 s / 0.34 s and thermal dephasing 59 ms")


def test_03_trotter_convergence_and_cptp():
    space = build_space([3, 2], labels=["transmon", "alice"])
    jumps = [
        j.matrix for j in transmon_jumps(space, PARAMS) + cavity_jumps(space, PARAMS, "alice")
    ]
    j_idx = space.index((2, 0))
    k_idx = space.index((0, 1))
    gate_time = 0.6e-6
    h_rot = rotation_generator(space, j_idx, k_idx, np.pi, gate_time)
    exact = expm(Lindbladian(h_rot, jumps).matrix() * gate_time)
    errors = {
        m: np.linalg.norm(noisy_rotation(space, j_idx, k_idx, np.pi, jumps, gate_time, m=m).matrix - exact)
        for m in (2, 4, 8, 16, 32)
    }
    for m in (2, 4, 8, 16):
        ratio = errors[m] / errors[2 * m]
        assert 3.5 <= ratio <= 4.5, f"m={m}: {ratio}"
    channel = noisy_rotation(space, j_idx, k_idx, np.pi, jumps, gate_time, m=4)
    assert choi_min_eigenvalue(channel.matrix) >= -1e-8
    assert channel.is_trace_preserving(1e-10)
    _report(3, "second-order splitting converges x4 per doubling; m=4 channel CPTP")


@pytest.fixture(scope="module")
def protocol_results():
    out = {}
    for n in (5, 10, 15, 20):
        cfg = fockprep.ProtocolConfig(target_n=n)
        out[n] = {
            "SB": fockprep.simulate(cfg.replace(protocol="SB"), PARAMS),
            "SFP": fockprep.simulate(cfg.replace(protocol="SFP"), PARAMS),
            "SFP+PF": fockprep.simulate(cfg.replace(protocol="SFP+PF"), PARAMS),
        }
    return out


def test_04_protocol_ordering_and_error_concentration(protocol_results):
    def concentration(result, n):
        population = result.population
        below = population[: n - 1].sum()
        return population[n - 1] / below if below > 1e-12 else math.inf

    for n, results in protocol_results.items():
        assert results["SB"].fidelity < results["SFP"].fidelity, n
        assert results["SFP"].fidelity < results["SFP+PF"].fidelity, n
        assert concentration(results["SFP"], n) > concentration(results["SB"], n), n
    # simulation excludes control errors, so it upper-bounds the measured 50%
    assert protocol_results[20]["SB"].fidelity >= 0.50
    _report(4, "fidelity(SB) < fidelity(SFP) < fidelity(SFP+PF); residual errors pile at n-1")


def test_05_ceiling_analysis_structure():
    sb = fockprep.ceiling_analysis(fockprep.ProtocolConfig(target_n=10, protocol="SB"), PARAMS)
    sfp = fockprep.ceiling_analysis(fockprep.ProtocolConfig(target_n=10, protocol="SFP"), PARAMS)
    for contributions in (sb, sfp):
        for channel, value in contributions.items():
            assert value >= -1e-6, channel
    assert sfp["transmon_decay"] < sb["transmon_decay"]
    assert sfp["transmon_dephasing"] < sb["transmon_dephasing"]
    infidelity_sfp = 1.0 - fockprep.simulate(
        fockprep.ProtocolConfig(target_n=10, protocol="SFP"), PARAMS
    ).fidelity
    assert sfp["readout_error"] + sfp["cavity_decay"] > 0.5 * infidelity_sfp
    _report(5, "feedforward shifts the error budget to readout + photon loss")


def test_06_vrbs_scaling_maximum_and_fit():
    config = vrbs.VrbsConfig(detuning=-TWO_PI * 5e6)
    detunings = -TWO_PI * np.array([5e6, 6.5e6, 8.5e6, 11e6, 14.5e6, 20e6])
    rows = vrbs.detuning_sweep(config, PARAMS, detunings, DRIVEN_NOISE)
    g_values = np.array([row["g_bs"] for row in rows])
    slope = np.polyfit(np.log(np.abs(detunings)), np.log(g_values), 1)[0]
    assert abs(slope + 1.0) <= 0.1, slope
    fidelities = [row["fidelity_bs"] for row in rows]
    best = int(np.argmax(fidelities))
    assert 0 < best < len(fidelities) - 1, fidelities

    g_true, k1_true, kphi_true = TWO_PI * 1e3, 10.0, 20.0
    t = np.linspace(0, 6 * math.pi / g_true, 2500)
    for seed in range(3):
        rng = np.random.default_rng(seed)
        trace = vrbs.bs_oscillation_model(t, g_true, k1_true, kphi_true)
        fit = vrbs.fit_bs_oscillation(t, trace + 0.001 * rng.standard_normal(t.size))
        assert abs(fit.g_bs / g_true - 1) < 0.01
        assert abs(fit.kappa_1 / k1_true - 1) < 0.01
        assert abs(fit.kappa_phi / kphi_true - 1) < 0.01
    _report(6, "g_bs ~ 1/detuning (slope -1.0 +- 0.1), interior fidelity maximum, 1% fit round-trip")


def test_07_fidelity_formulas_and_swap_checks():
    f_bs, f_swap, valid = vrbs.bs_fidelity((1.0, (4.0 / math.pi) * 0.003, 0.0))
    assert abs(f_bs - 0.997) < 1e-12 and abs(f_swap - 0.994) < 1e-12 and valid

    # keep fraction under a tuned heating-only channel follows (1-P)^n
    cfg = vrbs.VrbsConfig(detuning=-TWO_PI * 12e6, xi1=0.035, xi2=0.035)
    swap_time = 2.0 * vrbs.calibrate_bs_time(cfg, PARAMS)
    baseline = vrbs.swap_detection_baseline(cfg, PARAMS, swap_time)
    tuned = vrbs.tuned_heating_noise(0.01167, swap_time, baseline)
    heating_only = ("transmon_decay", "transmon_dephasing", "cavity_decay", "cavity_dephasing")
    res = vrbs.swap_sequence(
        cfg, PARAMS, 100, checks="heating_each", noise=tuned,
        channels_off=heating_only, swap_time=swap_time,
    )
    expected = (1.0 - 0.01167) ** res.swaps
    assert np.max(np.abs(res.keep_probability - expected)) < 1e-3

    # per-swap infidelity roughly halves with mid-circuit heating checks
    op_cfg = vrbs.VrbsConfig(detuning=-TWO_PI * 16e6, xi1=0.030, xi2=0.030)
    noise = DRIVEN_NOISE.replace(
        t_phi_A=1.0 / pure_dephasing_rate(PARAMS.T1_A, PARAMS.T2_A),
        t_phi_B=1.0 / pure_dephasing_rate(PARAMS.T1_B, PARAMS.T2_B),
    )
    erasure = vrbs.swap_sequence(op_cfg, PARAMS, 100, checks="erasure_final", noise=noise)
    checked = vrbs.swap_sequence(op_cfg, PARAMS, 100, checks="heating_each", noise=noise)
    ratio = vrbs.swap_infidelity_per_gate(erasure) / vrbs.swap_infidelity_per_gate(checked)
    assert 1.0 <= ratio <= 3.0, ratio
    _report(7, "F = 0.997/0.994 arithmetic; Bernoulli keep fraction; ~2x error-detection gain")


def test_08_heating_fit():
    rng = np.random.default_rng(3)
    n = np.arange(1, 101)
    rates = 1.0 - (1.0 - 0.01167) ** n + 0.005 * rng.standard_normal(n.size)
    fit = vrbs.heating_fit(n, np.clip(rates, 0.0, 1.0))
    assert abs(fit.p_up - 0.01167) <= 5e-4
    _report(8, "per-swap heating probability recovered to 0.01167 +- 0.0005")


@pytest.fixture(scope="module")
def vrbs_entangler():
    return quditgates.extract_vrbs_unitary(
        vrbs.VrbsConfig(detuning=-TWO_PI * 5.5e6), PARAMS, d=3
    )


def test_09_entangling_power(vrbs_entangler):
    ep_csum, se_csum = quditgates.entangling_power(quditgates.csum_gate(3), 100_000, seed=2)
    assert abs(ep_csum - 0.375) <= 0.003
    ep_id, _ = quditgates.entangling_power(np.eye(9), 100_000, seed=4)
    assert abs(ep_id) < 1e-12
    ep_vrbs, se_vrbs = quditgates.entangling_power(vrbs_entangler, 100_000, seed=3)
    assert abs(ep_vrbs - 0.379) <= 0.01, (ep_vrbs, se_vrbs)
    _report(9, "e_p(CSUM3) = 3/8, e_p(identity) = 0, e_p(exchange gate) = 0.379 +- 0.01")


def test_10_gate_synthesis_ladder(vrbs_entangler):
    ladder = quditgates.synthesize_ladder(
        quditgates.csum_gate(3),
        vrbs_entangler,
        [2, 3, 4, 5, 6],
        quditgates.SynthesisConfig(restarts=32, seed=1),
    )
    fidelities = [r.fidelity for r in ladder]
    for low, high in zip(fidelities, fidelities[1:]):
        assert high >= low - 1e-12, fidelities
    assert fidelities[3] >= 0.985, fidelities  # five blocks
    assert fidelities[4] >= 0.999, fidelities  # six blocks
    _report(10, f"CSUM3 ladder non-decreasing, F(5) = {fidelities[3]:.4f}, F(6) = {fidelities[4]:.6f}")


def test_11_fit_round_trips():
    rng = np.random.default_rng(42)
    # saturable-TLS loss model
    for gen in (
        dict(f_delta0=8.0e-10, r_res=73.4e-9, g=295.0, f0=5.779e9),
        dict(f_delta0=7.9e-10, r_res=121.9e-9, g=298.0, f0=6.872e9),
    ):
        temps = np.geomspace(0.010, 1.4, 25)
        q0 = 1.0 / fits.tls_model(temps, gen["f_delta0"], gen["r_res"], 1.0, gen["f0"], gen["g"])
        fit = fits.tls_fit(temps, q0 * (1 + 0.01 * rng.standard_normal(temps.size)), gen["f0"], gen["g"])
        assert abs(fit.f_delta0 / gen["f_delta0"] - 1) < 0.05
        assert abs(fit.r_res / gen["r_res"] - 1) < 0.05
        assert abs(fit.beta - 1.0) < 0.05
    # ringdown
    for tau in (25.545e-3, 19.299e-3):
        t = np.linspace(0, 6 * tau, 10_000)
        trace = np.exp(-t / tau) + 0.002 * rng.standard_normal(t.size)
        fit = fits.exp_decay_fit(t, trace)
        assert abs(fit.tau / tau - 1) < 1e-3
    # readout decomposition
    generator = readout.ReadoutModel(
        0.0055, 0.0110, readout.symmetric_classifier(0.0024, 0.0010, 0.0)
    )
    model, residual = readout.fit_readout_model(generator.predicted_confusion())
    assert abs(model.p_eg - 0.0055) < 2e-4
    assert abs(model.p_fe - 0.0110) < 2e-4
    assert residual < 1e-6
    _report(11, "TLS (5%), ringdown (0.1%), readout-model (2e-4) round trips")


def test_12_determinism(tmp_path):
    config = {
        "experiment": "fock-lifetime",
        "seed": 9,
        "fock_lifetime": {"n_list": [1, 2, 5], "t_points": 12},
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    payloads = []
    for label, workers in (("a", "1"), ("b", "2"), ("c", "1")):
        out = tmp_path / label
        code = cli_main(["run", str(path), "--out", str(out), "--workers", workers, "--no-figures"])
        assert code == 0
        payloads.append((out / "fock-lifetime" / "fock_lifetimes.csv").read_bytes())
    assert payloads[0] == payloads[1] == payloads[2]

    sampled = {
        "experiment": "entangling-power",
        "seed": 13,
        "entangling_power": {"gates": ["csum3"], "n_samples": 4000},
    }
    path2 = tmp_path / "sampled.json"
    path2.write_text(json.dumps(sampled))
    outputs = []
    for label in ("s1", "s2"):
        out = tmp_path / label
        assert cli_main(["run", str(path2), "--out", str(out), "--no-figures"]) == 0
        outputs.append((out / "entangling-power" / "entangling_power.csv").read_bytes())
    assert outputs[0] == outputs[1]
    _report(12, "byte-identical tables across reruns and worker counts")
