"""Experiment registry: named, configuration-driven simulation runs.

Every experiment consumes a validated JSON configuration, writes CSV tables
plus a ``results.json`` summary into its output directory, and returns the
list of artifacts for the manifest.  All randomness flows from the config
seed through per-point ``SeedSequence`` spawns, so results are identical
for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from . import fits, fockprep, quditgates, readout, vrbs
from .noise import NOISE_CHANNELS, pure_dephasing_rate
from .params import DEVICE_PARAMS, DRIVEN_NOISE, DrivenNoiseParams, SystemParams, TWO_PI

__all__ = ["REGISTRY", "ExperimentSpec", "ConfigError", "run_experiment", "validate_config"]


class ConfigError(ValueError):
    """Configuration failed schema validation."""


def _fmt(x: float) -> str:
    return f"{float(x):.12g}"


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[float]]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_json(path: Path, payload: Mapping[str, Any]) -> None:
    import json

    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _check_keys(section: Mapping[str, Any], allowed: set[str], required: set[str], path: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)} (allowed: {sorted(allowed)})")
    missing = required - set(section)
    if missing:
        raise ConfigError(f"{path}: missing required keys {sorted(missing)}")


def resolve_params(config: Mapping[str, Any]) -> SystemParams:
    section = config.get("params", {"set": "device"})
    if not isinstance(section, Mapping):
        raise ConfigError("params: must be an object")
    if "set" in section:
        _check_keys(section, {"set", "override"}, {"set"}, "params")
        if section["set"] != "device":
            raise ConfigError("params.set: only 'device' is available")
        params = DEVICE_PARAMS
        override = section.get("override", {})
        if override:
            merged = params.to_hz_dict()
            unknown = set(override) - set(merged)
            if unknown:
                raise ConfigError(f"params.override: unknown keys {sorted(unknown)}")
            merged.update({k: float(v) for k, v in override.items()})
            params = SystemParams.from_hz(**merged)
        return params
    try:
        return SystemParams.from_dict(section)
    except ValueError as exc:
        raise ConfigError(f"params: {exc}") from exc


def resolve_driven_noise(section: Mapping[str, Any] | None, params: SystemParams) -> DrivenNoiseParams:
    if not section:
        return DRIVEN_NOISE
    allowed = {
        "T1_ge",
        "n_th_q",
        "t_phi_ge",
        "T1_A",
        "T1_B",
        "include_measured_cavity_dephasing",
    }
    _check_keys(section, allowed, set(), "noise")
    fields = {k: float(v) for k, v in section.items() if k != "include_measured_cavity_dephasing"}
    noise = DRIVEN_NOISE.replace(**fields)
    if section.get("include_measured_cavity_dephasing"):
        noise = noise.replace(
            t_phi_A=1.0 / pure_dephasing_rate(params.T1_A, params.T2_A),
            t_phi_B=1.0 / pure_dephasing_rate(params.T1_B, params.T2_B),
        )
    return noise


def _spawn_seeds(seed: int, n: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


def _map_points(fn: Callable, points: list, workers: int) -> list:
    if workers <= 1 or len(points) <= 1:
        return [fn(pt) for pt in points]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, points))


# ---------------------------------------------------------------------------
# fock-prep


_PROTOCOL_COLUMNS = {"SB": "f_sb", "SFP": "f_sfp", "SB+PF": "f_sb_pf", "SFP+PF": "f_sfp_pf"}


def _validate_fock_prep(config: Mapping[str, Any]) -> dict:
    section = config.get("fock_prep", {})
    _check_keys(
        section,
        {"mode", "n_list", "protocols", "retries", "channels_off", "timings", "cutoff"},
        set(),
        "fock_prep",
    )
    mode = section.get("mode", "alice")
    if mode not in ("alice", "bob"):
        raise ConfigError("fock_prep.mode: must be 'alice' or 'bob'")
    n_list = [int(n) for n in section.get("n_list", [1, 5, 10, 15, 20])]
    if not n_list or any(n < 1 for n in n_list):
        raise ConfigError("fock_prep.n_list: need positive Fock indices")
    protocols = section.get("protocols", ["SB", "SFP", "SFP+PF"])
    bad = [p for p in protocols if p not in _PROTOCOL_COLUMNS]
    if bad:
        raise ConfigError(f"fock_prep.protocols: unknown {bad}")
    channels_off = section.get("channels_off", [])
    bad = set(channels_off) - set(NOISE_CHANNELS)
    if bad:
        raise ConfigError(f"fock_prep.channels_off: unknown {sorted(bad)}")
    timings = section.get("timings", {})
    _check_keys(timings, {"t_pi_ge", "t_pi_ef", "t_sideband_base"}, set(), "fock_prep.timings")
    return {
        "mode": mode,
        "n_list": n_list,
        "protocols": list(protocols),
        "retries": int(section.get("retries", 2)),
        "channels_off": list(channels_off),
        "timings": {k: float(v) for k, v in timings.items()},
        "cutoff": section.get("cutoff"),
    }


def _fock_prep_point(args: tuple) -> dict:
    params_hz, opts, protocol, n = args
    params = SystemParams.from_hz(**params_hz)
    cfg = fockprep.ProtocolConfig(
        target_n=n,
        protocol=protocol,
        mode=opts["mode"],
        timings=fockprep.PulseTimings(**opts["timings"]),
        channels_off=frozenset(opts["channels_off"]),
        max_feedforward_retries=opts["retries"],
        cavity_cutoff=opts["cutoff"],
    )
    result = fockprep.simulate(cfg, params)
    return {
        "protocol": protocol,
        "n": n,
        "fidelity": result.fidelity,
        "keep_probability": result.keep_probability,
        "branch_count": result.branch_count,
        "population": [float(x) for x in result.population],
        "flags": list(result.flags),
    }


def run_fock_prep(config: Mapping[str, Any], out: Path, workers: int) -> list[Path]:
    opts = _validate_fock_prep(config)
    params = resolve_params(config)
    points = [
        (params.to_hz_dict(), opts, protocol, n)
        for n in opts["n_list"]
        for protocol in opts["protocols"]
    ]
    results = _map_points(_fock_prep_point, points, workers)
    by_key = {(r["protocol"], r["n"]): r for r in results}

    header = ["n"] + [_PROTOCOL_COLUMNS[p] for p in opts["protocols"]] + ["keep_probability"]
    rows = []
    for n in opts["n_list"]:
        row = [n] + [by_key[(p, n)]["fidelity"] for p in opts["protocols"]]
        keeps = [by_key[(p, n)]["keep_probability"] for p in opts["protocols"] if p.endswith("+PF")]
        row.append(keeps[0] if keeps else 1.0)
        rows.append(row)
    csv_path = out / "fidelity_vs_n.csv"
    write_csv(csv_path, header, rows)

    pop_path = out / "populations.json"
    write_json(
        pop_path,
        {
            f"{r['protocol']}_n{r['n']}": {
                "population": r["population"],
                "fidelity": r["fidelity"],
                "keep_probability": r["keep_probability"],
                "branch_count": r["branch_count"],
                "flags": r["flags"],
            }
            for r in results
        },
    )
    summary = out / "results.json"
    write_json(
        summary,
        {
            "mode": opts["mode"],
            "protocols": opts["protocols"],
            "n_list": opts["n_list"],
            "fidelities": {
                p: {str(n): by_key[(p, n)]["fidelity"] for n in opts["n_list"]}
                for p in opts["protocols"]
            },
        },
    )
    return [csv_path, pop_path, summary]


# ---------------------------------------------------------------------------
# fock-lifetime


def _validate_fock_lifetime(config: Mapping[str, Any]) -> dict:
    section = config.get("fock_lifetime", {})
    _check_keys(section, {"mode", "n_list", "t_points"}, set(), "fock_lifetime")
    mode = section.get("mode", "alice")
    if mode not in ("alice", "bob"):
        raise ConfigError("fock_lifetime.mode: must be 'alice' or 'bob'")
    n_list = [int(n) for n in section.get("n_list", [1, 2, 5, 10, 20])]
    if any(n < 1 for n in n_list):
        raise ConfigError("fock_lifetime.n_list: need positive Fock indices")
    return {"mode": mode, "n_list": n_list, "t_points": int(section.get("t_points", 20))}


def _fock_lifetime_point(args: tuple) -> tuple[int, float]:
    params_hz, mode, n, t_points = args
    params = SystemParams.from_hz(**params_hz)
    return fockprep.fock_lifetime_scan([n], params, mode, t_points=t_points)[0]


def run_fock_lifetime(config: Mapping[str, Any], out: Path, workers: int) -> list[Path]:
    opts = _validate_fock_lifetime(config)
    params = resolve_params(config)
    t1 = params.mode_times(opts["mode"])[0]
    points = [(params.to_hz_dict(), opts["mode"], n, opts["t_points"]) for n in opts["n_list"]]
    scan = _map_points(_fock_lifetime_point, points, workers)
    rows = [[n, fit_t1, t1 / n, fit_t1 * n / t1 - 1.0] for n, fit_t1 in scan]
    csv_path = out / "fock_lifetimes.csv"
    write_csv(csv_path, ["n", "t1_fit_s", "t1_expected_s", "relative_error"], rows)
    summary = out / "results.json"
    write_json(
        summary,
        {
            "mode": opts["mode"],
            "t1_single_photon_s": t1,
            "max_relative_error": max(abs(r[3]) for r in rows),
        },
    )
    return [csv_path, summary]


# ---------------------------------------------------------------------------
# vrbs-sweep


def _vrbs_config(section: Mapping[str, Any], detuning_hz: float) -> vrbs.VrbsConfig:
    return vrbs.VrbsConfig(
        detuning=TWO_PI * detuning_hz,
        xi1=section.get("xi1", 0.08),
        xi2=section.get("xi2", 0.08),
        transmon_levels=int(section.get("transmon_levels", 4)),
        cutoff_a=int(section.get("cutoff_a", 2)),
        cutoff_b=int(section.get("cutoff_b", 2)),
        chi_mode=section.get("chi_mode", "per_mode"),
    )


_VRBS_KEYS = {"xi1", "xi2", "transmon_levels", "cutoff_a", "cutoff_b", "chi_mode"}


def _validate_vrbs_sweep(config: Mapping[str, Any]) -> dict:
    section = config.get("vrbs_sweep", {})
    _check_keys(
        section,
        _VRBS_KEYS | {"detunings_hz", "n_periods", "n_samples", "noise", "emit_trace"},
        set(),
        "vrbs_sweep",
    )
    detunings = [float(d) for d in section.get("detunings_hz", [-5e6, -6.5e6, -8.5e6, -11e6, -14.5e6, -20e6])]
    if any(d == 0 for d in detunings):
        raise ConfigError("vrbs_sweep.detunings_hz: zero detuning not allowed")
    return {
        "section": dict(section),
        "detunings_hz": detunings,
        "n_periods": float(section.get("n_periods", 3.5)),
        "n_samples": int(section.get("n_samples", 700)),
        "emit_trace": bool(section.get("emit_trace", True)),
    }


def _vrbs_sweep_point(args: tuple) -> dict:
    params_hz, section, det_hz, n_periods, n_samples, noise_fields = args
    params = SystemParams.from_hz(**params_hz)
    noise = DrivenNoiseParams(**noise_fields)
    cfg = _vrbs_config(section, det_hz)
    return vrbs.detuning_sweep(
        cfg, params, [TWO_PI * det_hz], noise, n_periods=n_periods, n_samples=n_samples
    )[0]


def run_vrbs_sweep(config: Mapping[str, Any], out: Path, workers: int) -> list[Path]:
    opts = _validate_vrbs_sweep(config)
    params = resolve_params(config)
    noise = resolve_driven_noise(opts["section"].get("noise"), params)
    noise_fields = {
        "T1_ge": noise.T1_ge,
        "n_th_q": noise.n_th_q,
        "t_phi_ge": noise.t_phi_ge,
        "T1_A": noise.T1_A,
        "T1_B": noise.T1_B,
        "t_phi_A": noise.t_phi_A,
        "t_phi_B": noise.t_phi_B,
    }
    points = [
        (params.to_hz_dict(), opts["section"], d, opts["n_periods"], opts["n_samples"], noise_fields)
        for d in opts["detunings_hz"]
    ]
    rows_raw = _map_points(_vrbs_sweep_point, points, workers)
    header = [
        "detuning_hz",
        "g_bs_rad_s",
        "kappa_1_s",
        "kappa_phi_s",
        "t1_fit_s",
        "t_phi_fit_s",
        "fidelity_bs",
        "fidelity_swap",
    ]
    rows = [
        [
            r["detuning"] / TWO_PI,
            r["g_bs"],
            r["kappa_1"],
            r["kappa_phi"],
            r["t1_fit"],
            r["t_phi_fit"],
            r["fidelity_bs"],
            r["fidelity_swap"],
        ]
        for r in rows_raw
    ]
    csv_path = out / "vrbs_sweep.csv"
    write_csv(csv_path, header, rows)
    gs = np.array([r["g_bs"] for r in rows_raw])
    dets = np.abs(np.array(opts["detunings_hz"]))
    slope = float(np.polyfit(np.log(dets), np.log(gs), 1)[0]) if len(gs) > 2 else math.nan
    fids = [r["fidelity_bs"] for r in rows_raw]
    best = int(np.argmax(fids))
    artifacts = [csv_path]
    if opts["emit_trace"]:
        # exchange trace at the best-fidelity detuning
        cfg = _vrbs_config(opts["section"], opts["detunings_hz"][best])
        noise_obj = DrivenNoiseParams(**noise_fields)
        g_est = abs(vrbs.effective_bs_rate(cfg, params).rate)
        traces = vrbs.simulate_vrbs(
            cfg,
            params,
            noise_obj,
            opts["n_periods"] * math.pi / g_est,
            n_samples=opts["n_samples"],
        )
        trace_path = out / "vrbs_trace.csv"
        write_csv(
            trace_path,
            ["time_s", "p_alice", "p_bob", "p_excited"],
            np.column_stack([traces.times, traces.p_alice, traces.p_bob, traces.p_excited]),
        )
        artifacts.append(trace_path)
    summary = out / "results.json"
    write_json(
        summary,
        {
            "g_bs_loglog_slope": slope,
            "best_detuning_hz": opts["detunings_hz"][best],
            "best_fidelity_bs": fids[best],
            "interior_maximum": bool(0 < best < len(fids) - 1),
        },
    )
    return artifacts + [summary]


# ---------------------------------------------------------------------------
# vrbs-swap


def _validate_vrbs_swap(config: Mapping[str, Any]) -> dict:
    section = config.get("vrbs_swap", {})
    _check_keys(
        section,
        _VRBS_KEYS
        | {"detuning_hz", "n_swaps", "checks", "noise", "scenario", "heating_probability"},
        set(),
        "vrbs_swap",
    )
    scenario = section.get("scenario", "driven")
    if scenario not in ("driven", "heating_tuned"):
        raise ConfigError("vrbs_swap.scenario: must be 'driven' or 'heating_tuned'")
    checks = section.get("checks", ["erasure_final", "heating_each"])
    bad = [c for c in checks if c not in ("none", "erasure_final", "heating_each")]
    if bad:
        raise ConfigError(f"vrbs_swap.checks: unknown {bad}")
    return {
        "section": dict(section),
        "scenario": scenario,
        "checks": list(checks),
        "detuning_hz": float(section.get("detuning_hz", -16e6)),
        "n_swaps": int(section.get("n_swaps", 100)),
        "heating_probability": float(section.get("heating_probability", 0.01167)),
    }


def run_vrbs_swap(config: Mapping[str, Any], out: Path, workers: int) -> list[Path]:
    opts = _validate_vrbs_swap(config)
    params = resolve_params(config)
    section = dict(opts["section"])
    section.setdefault("xi1", 0.030)
    section.setdefault("xi2", 0.030)
    cfg = _vrbs_config(section, opts["detuning_hz"])
    swap_time = 2.0 * vrbs.calibrate_bs_time(cfg, params)

    if opts["scenario"] == "heating_tuned":
        baseline = vrbs.swap_detection_baseline(cfg, params, swap_time)
        noise = vrbs.tuned_heating_noise(opts["heating_probability"], swap_time, baseline)
        channels_off = (
            "transmon_decay",
            "transmon_dephasing",
            "cavity_decay",
            "cavity_dephasing",
        )
    else:
        noise_section = section.get("noise") or {"include_measured_cavity_dephasing": True}
        noise = resolve_driven_noise(noise_section, params)
        channels_off = ()

    artifacts = []
    summary: dict[str, Any] = {
        "scenario": opts["scenario"],
        "swap_time_s": swap_time,
        "detuning_hz": opts["detuning_hz"],
    }
    infidelities = {}
    for checks in opts["checks"]:
        res = vrbs.swap_sequence(
            cfg,
            params,
            opts["n_swaps"],
            checks=checks,
            noise=noise,
            channels_off=channels_off,
            swap_time=swap_time,
        )
        rows = [
            [n, res.p10[i], res.p01[i], res.p00[i], res.keep_probability[i], res.p10_cond[i], res.p01_cond[i]]
            for i, n in enumerate(res.swaps)
        ]
        path = out / f"swap_{checks}.csv"
        write_csv(
            path,
            ["swap", "p10", "p01", "p00", "keep_probability", "p10_conditioned", "p01_conditioned"],
            rows,
        )
        artifacts.append(path)
        summary[f"final_keep_{checks}"] = res.final_keep()
        try:
            infidelities[checks] = vrbs.swap_infidelity_per_gate(res)
        except Exception:
            infidelities[checks] = None
    summary["infidelity_per_swap"] = infidelities
    if infidelities.get("erasure_final") and infidelities.get("heating_each"):
        summary["infidelity_ratio"] = infidelities["erasure_final"] / infidelities["heating_each"]
    if opts["scenario"] == "heating_tuned":
        p = opts["heating_probability"]
        expected = (1.0 - p) ** opts["n_swaps"]
        summary["expected_final_keep"] = expected
        summary["tuned_heating_probability"] = p
    summary_path = out / "results.json"
    write_json(summary_path, summary)
    return artifacts + [summary_path]


# ---------------------------------------------------------------------------
# heating-fit


def _validate_heating_fit(config: Mapping[str, Any]) -> dict:
    section = config.get("heating_fit", {})
    _check_keys(section, {"p_true", "n_max", "noise_sigma", "data_csv"}, set(), "heating_fit")
    return {
        "p_true": float(section.get("p_true", 0.01167)),
        "n_max": int(section.get("n_max", 100)),
        "noise_sigma": float(section.get("noise_sigma", 0.005)),
        "data_csv": section.get("data_csv"),
    }


def run_heating_fit(config: Mapping[str, Any], out: Path, workers: int) -> list[Path]:
    opts = _validate_heating_fit(config)
    if opts["data_csv"]:
        data = np.loadtxt(opts["data_csv"], delimiter=",", skiprows=1)
        n = data[:, 0]
        rates = data[:, 1]
        generator = {"source": str(opts["data_csv"])}
    else:
        rng = np.random.default_rng(_spawn_seeds(int(config["seed"]), 1)[0])
        n = np.arange(1, opts["n_max"] + 1)
        rates = 1.0 - (1.0 - opts["p_true"]) ** n
        rates = np.clip(rates + opts["noise_sigma"] * rng.standard_normal(n.size), 0.0, 1.0)
        generator = {"p_true": opts["p_true"], "noise_sigma": opts["noise_sigma"]}
    fit = vrbs.heating_fit(n, rates)
    csv_path = out / "heating_detection.csv"
    model = 1.0 - (1.0 - fit.p_up) ** n
    write_csv(csv_path, ["n", "detection_rate", "model"], np.column_stack([n, rates, model]))
    summary = out / "results.json"
    write_json(
        summary,
        {"p_up": fit.p_up, "stderr": fit.stderr, "degenerate": fit.degenerate, "generator": generator},
    )
    return [csv_path, summary]


# ---------------------------------------------------------------------------
# entangling-power


def _validate_entangling_power(config: Mapping[str, Any]) -> dict:
    section = config.get("entangling_power", {})
    _check_keys(
        section, _VRBS_KEYS | {"gates", "n_samples", "detuning_hz", "d"}, set(), "entangling_power"
    )
    gates = section.get("gates", ["csum3", "vrbs", "identity"])
    bad = [g for g in gates if g not in ("csum3", "identity", "vrbs")]
    if bad:
        raise ConfigError(f"entangling_power.gates: unknown {bad}")
    return {
        "section": dict(section),
        "gates": list(gates),
        "n_samples": int(section.get("n_samples", 100_000)),
        "detuning_hz": float(section.get("detuning_hz", -5.5e6)),
        "d": int(section.get("d", 3)),
    }


def run_entangling_power(config: Mapping[str, Any], out: Path, workers: int) -> list[Path]:
    opts = _validate_entangling_power(config)
    params = resolve_params(config)
    d = opts["d"]
    seeds = _spawn_seeds(int(config["seed"]), len(opts["gates"]))
    rows = []
    extras: dict[str, Any] = {}
    for gate_name, seed in zip(opts["gates"], seeds):
        if gate_name == "csum3":
            gate = quditgates.csum_gate(3)
        elif gate_name == "identity":
            gate = np.eye(d * d, dtype=complex)
        else:
            cfg = _vrbs_config(opts["section"], opts["detuning_hz"])
            extracted = quditgates.extract_vrbs_unitary(cfg, params, d=d)
            gate = extracted.matrix
            extras["vrbs_gate_time_s"] = extracted.gate_time
            extras["vrbs_leakage"] = extracted.leakage
            extras["vrbs_spread"] = extracted.spread
        ep, stderr = quditgates.entangling_power(gate, opts["n_samples"], seed=seed)
        rows.append([gate_name, ep, stderr])
    csv_path = out / "entangling_power.csv"
    lines = ["gate,e_p,stderr"]
    for name, ep, se in rows:
        lines.append(f"{name},{_fmt(ep)},{_fmt(se)}")
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    summary = out / "results.json"
    write_json(
        summary,
        {
            "n_samples": opts["n_samples"],
            "values": {name: {"e_p": ep, "stderr": se} for name, ep, se in rows},
            **extras,
        },
    )
    return [csv_path, summary]


# ---------------------------------------------------------------------------
# gate-synthesis


def _validate_gate_synthesis(config: Mapping[str, Any]) -> dict:
    section = config.get("gate_synthesis", {})
    _check_keys(
        section,
        _VRBS_KEYS | {"blocks", "restarts", "maxiter", "detuning_hz", "target"},
        set(),
        "gate_synthesis",
    )
    target = section.get("target", "csum3")
    if target != "csum3":
        raise ConfigError("gate_synthesis.target: only 'csum3' is available")
    blocks = [int(b) for b in section.get("blocks", [2, 3, 4, 5, 6])]
    if any(b < 1 for b in blocks):
        raise ConfigError("gate_synthesis.blocks: block counts must be >= 1")
    return {
        "section": dict(section),
        "blocks": blocks,
        "restarts": int(section.get("restarts", 32)),
        "maxiter": int(section.get("maxiter", 600)),
        "detuning_hz": float(section.get("detuning_hz", -5.5e6)),
    }


def run_gate_synthesis(config: Mapping[str, Any], out: Path, workers: int) -> list[Path]:
    opts = _validate_gate_synthesis(config)
    params = resolve_params(config)
    cfg = _vrbs_config(opts["section"], opts["detuning_hz"])
    entangler = quditgates.extract_vrbs_unitary(cfg, params, d=3)
    target = quditgates.csum_gate(3)
    syn_cfg = quditgates.SynthesisConfig(
        restarts=opts["restarts"], seed=int(config["seed"]), maxiter=opts["maxiter"]
    )
    ladder = quditgates.synthesize_ladder(target, entangler, opts["blocks"], syn_cfg)
    csv_path = out / "synthesis_ladder.csv"
    write_csv(
        csv_path,
        ["n_blocks", "fidelity", "n_evaluations"],
        [[r.n_blocks, r.fidelity, r.n_evaluations] for r in ladder],
    )
    angles_path = out / "angles.json"
    write_json(
        angles_path,
        {str(r.n_blocks): [float(a) for a in r.angles] for r in ladder},
    )
    summary = out / "results.json"
    write_json(
        summary,
        {
            "entangler_gate_time_s": entangler.gate_time,
            "entangler_leakage": entangler.leakage,
            "entangler_spread": entangler.spread,
            "fidelities": {str(r.n_blocks): r.fidelity for r in ladder},
            "monotone": bool(
                all(
                    ladder[i + 1].fidelity >= ladder[i].fidelity - 1e-12
                    for i in range(len(ladder) - 1)
                )
            ),
        },
    )
    return [csv_path, angles_path, summary]


# ---------------------------------------------------------------------------
# tls-fit / ringdown-fit / readout-fit / limits


def _validate_tls_fit(config: Mapping[str, Any]) -> dict:
    section = config.get("tls_fit", {})
    _check_keys(
        section,
        {"data_csv", "f0_hz", "g_factor_ohm", "generator", "t_min_k", "t_max_k", "n_points", "noise"},
        set(),
        "tls_fit",
    )
    generator = section.get("generator", {})
    _check_keys(generator, {"f_delta0", "r_res_ohm", "beta"}, set(), "tls_fit.generator")
    return {
        "data_csv": section.get("data_csv"),
        "f0_hz": float(section.get("f0_hz", 5.779e9)),
        "g_factor_ohm": float(section.get("g_factor_ohm", 295.0)),
        "generator": {
            "f_delta0": float(generator.get("f_delta0", 8.0e-10)),
            "r_res_ohm": float(generator.get("r_res_ohm", 73.4e-9)),
            "beta": float(generator.get("beta", 1.0)),
        },
        "t_min_k": float(section.get("t_min_k", 0.010)),
        "t_max_k": float(section.get("t_max_k", 1.4)),
        "n_points": int(section.get("n_points", 25)),
        "noise": float(section.get("noise", 0.01)),
    }


def run_tls_fit(config: Mapping[str, Any], out: Path, workers: int) -> list[Path]:
    opts = _validate_tls_fit(config)
    if opts["data_csv"]:
        data = np.loadtxt(opts["data_csv"], delimiter=",", skiprows=1)
        temps, q0 = data[:, 0], data[:, 1]
        generator = {"source": str(opts["data_csv"])}
    else:
        rng = np.random.default_rng(_spawn_seeds(int(config["seed"]), 1)[0])
        gen = opts["generator"]
        temps = np.geomspace(opts["t_min_k"], opts["t_max_k"], opts["n_points"])
        q0 = 1.0 / fits.tls_model(
            temps, gen["f_delta0"], gen["r_res_ohm"], gen["beta"], opts["f0_hz"], opts["g_factor_ohm"]
        )
        q0 = q0 * (1.0 + opts["noise"] * rng.standard_normal(temps.size))
        generator = dict(gen)
    fit = fits.tls_fit(temps, q0, opts["f0_hz"], opts["g_factor_ohm"])
    csv_path = out / "tls_q0.csv"
    write_csv(
        csv_path,
        ["temperature_k", "q0", "q0_model"],
        np.column_stack([temps, q0, fit.q0(temps)]),
    )
    summary = out / "results.json"
    write_json(
        summary,
        {
            "f_delta0": fit.f_delta0,
            "r_res_ohm": fit.r_res,
            "beta": fit.beta,
            "residual": fit.residual,
            "generator": generator,
        },
    )
    return [csv_path, summary]


def _validate_ringdown(config: Mapping[str, Any]) -> dict:
    section = config.get("ringdown", {})
    _check_keys(section, {"data_csv", "tau_s", "noise", "n_points", "t_max_s"}, set(), "ringdown")
    return {
        "data_csv": section.get("data_csv"),
        "tau_s": float(section.get("tau_s", 25.545e-3)),
        "noise": float(section.get("noise", 0.005)),
        "n_points": int(section.get("n_points", 200)),
        "t_max_s": section.get("t_max_s"),
    }


def run_ringdown_fit(config: Mapping[str, Any], out: Path, workers: int) -> list[Path]:
    opts = _validate_ringdown(config)
    if opts["data_csv"]:
        data = np.loadtxt(opts["data_csv"], delimiter=",", skiprows=1)
        t, y = data[:, 0], data[:, 1]
        generator: dict[str, Any] = {"source": str(opts["data_csv"])}
    else:
        rng = np.random.default_rng(_spawn_seeds(int(config["seed"]), 1)[0])
        t_max = opts["t_max_s"] or 4.0 * opts["tau_s"]
        t = np.linspace(0.0, t_max, opts["n_points"])
        y = np.exp(-t / opts["tau_s"]) + opts["noise"] * rng.standard_normal(t.size)
        generator = {"tau_s": opts["tau_s"], "noise": opts["noise"]}
    fit = fits.exp_decay_fit(t, y)
    csv_path = out / "ringdown.csv"
    model = fit.amplitude * np.exp(-t / fit.tau) + fit.offset
    write_csv(csv_path, ["time_s", "signal", "model"], np.column_stack([t, y, model]))
    summary = out / "results.json"
    write_json(
        summary,
        {
            "amplitude": fit.amplitude,
            "tau_s": fit.tau,
            "offset": fit.offset,
            "residual": fit.residual,
            "generator": generator,
        },
    )
    return [csv_path, summary]


def _validate_readout_fit(config: Mapping[str, Any]) -> dict:
    section = config.get("readout_fit", {})
    _check_keys(section, {"matrix_csv"}, set(), "readout_fit")
    return {"matrix_csv": section.get("matrix_csv")}


def run_readout_fit(config: Mapping[str, Any], out: Path, workers: int) -> list[Path]:
    opts = _validate_readout_fit(config)
    if opts["matrix_csv"]:
        measured = readout.ConfusionMatrix.load_csv(opts["matrix_csv"])
    else:
        measured = readout.measured_gef_confusion()
    model, residual = readout.fit_readout_model(measured)
    predicted = model.predicted_confusion()
    csv_path = out / "confusion_measured.csv"
    measured.save_csv(csv_path)
    pred_path = out / "confusion_model.csv"
    predicted.save_csv(pred_path)
    summary = out / "results.json"
    write_json(
        summary,
        {
            "p_eg": model.p_eg,
            "p_fe": model.p_fe,
            "classifier": [[float(x) for x in row] for row in model.classifier],
            "residual": residual,
            "assignment_fidelity_measured": measured.assignment_fidelity(),
            "assignment_fidelity_model": predicted.assignment_fidelity(),
        },
    )
    return [csv_path, pred_path, summary]


def run_limits(config: Mapping[str, Any], out: Path, workers: int) -> list[Path]:
    section = config.get("limits", {})
    _check_keys(section, set(), set(), "limits")
    params = resolve_params(config)
    purcell_a = fits.purcell_limit(params.delta_a, params.g_a, params.T2E_ge)
    purcell_b = fits.purcell_limit(params.delta_b, params.g_b, params.T2E_ge)
    thermal_a = fits.thermal_dephasing_limit(params.chi_e_a, params.T1_ge, params.n_th_q)
    thermal_b = fits.thermal_dephasing_limit(params.chi_e_b, params.T1_ge, params.n_th_q)
    rows = [
        ["purcell_t1_alice_s", purcell_a],
        ["purcell_t1_bob_s", purcell_b],
        ["thermal_dephasing_alice_s", thermal_a],
        ["thermal_dephasing_bob_s", thermal_b],
        ["pure_dephasing_transmon_s", 1.0 / pure_dephasing_rate(params.T1_ge, params.T2_ge)],
        ["pure_dephasing_alice_s", 1.0 / pure_dephasing_rate(params.T1_A, params.T2_A)],
        ["pure_dephasing_bob_s", 1.0 / pure_dephasing_rate(params.T1_B, params.T2_B)],
    ]
    csv_path = out / "limits.csv"
    lines = ["quantity,value"]
    for name, value in rows:
        lines.append(f"{name},{_fmt(value)}")
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    summary = out / "results.json"
    write_json(summary, {name: value for name, value in rows})
    return [csv_path, summary]


# ---------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    description: str
    sections: tuple[str, ...]
    runner: Callable[[Mapping[str, Any], Path, int], list[Path]]


REGISTRY: dict[str, ExperimentSpec] = {
    spec.name: spec
    for spec in [
        ExperimentSpec(
            "fock-prep",
            "Fock-state preparation fidelities for the ladder protocols (SB/SFP/PF)",
            ("params", "fock_prep"),
            run_fock_prep,
        ),
        ExperimentSpec(
            "fock-lifetime",
            "Relaxation time of Fock state |n| versus n (linear decay law)",
            ("params", "fock_lifetime"),
            run_fock_lifetime,
        ),
        ExperimentSpec(
            "vrbs-sweep",
            "Beamsplitter rate, decoherence and fidelity versus sideband detuning",
            ("params", "vrbs_sweep"),
            run_vrbs_sweep,
        ),
        ExperimentSpec(
            "vrbs-swap",
            "Repeated dual-rail swaps with erasure and heating checks",
            ("params", "vrbs_swap"),
            run_vrbs_swap,
        ),
        ExperimentSpec(
            "heating-fit",
            "Per-operation transmon heating probability from detection rates",
            ("params", "heating_fit"),
            run_heating_fit,
        ),
        ExperimentSpec(
            "entangling-power",
            "Mean linear entropy of two-qudit gates over random product states",
            ("params", "entangling_power"),
            run_entangling_power,
        ),
        ExperimentSpec(
            "gate-synthesis",
            "Variational synthesis of the qutrit CSUM gate from exchange blocks",
            ("params", "gate_synthesis"),
            run_gate_synthesis,
        ),
        ExperimentSpec(
            "tls-fit",
            "Saturable-TLS loss model fit to internal quality factor vs temperature",
            ("params", "tls_fit"),
            run_tls_fit,
        ),
        ExperimentSpec(
            "ringdown-fit",
            "Single-exponential ringdown fit",
            ("params", "ringdown"),
            run_ringdown_fit,
        ),
        ExperimentSpec(
            "readout-fit",
            "Decompose a measured three-state confusion matrix into relaxation + classifier",
            ("params", "readout_fit"),
            run_readout_fit,
        ),
        ExperimentSpec(
            "limits",
            "Closed-form coherence limits from the calibrated parameters",
            ("params",),
            run_limits,
        ),
    ]
}

_SECTION_FOR = {
    "fock-prep": "fock_prep",
    "fock-lifetime": "fock_lifetime",
    "vrbs-sweep": "vrbs_sweep",
    "vrbs-swap": "vrbs_swap",
    "heating-fit": "heating_fit",
    "entangling-power": "entangling_power",
    "gate-synthesis": "gate_synthesis",
    "tls-fit": "tls_fit",
    "ringdown-fit": "ringdown",
    "readout-fit": "readout_fit",
    "limits": "limits",
}

_VALIDATORS = {
    "fock-prep": _validate_fock_prep,
    "fock-lifetime": _validate_fock_lifetime,
    "vrbs-sweep": _validate_vrbs_sweep,
    "vrbs-swap": _validate_vrbs_swap,
    "heating-fit": _validate_heating_fit,
    "entangling-power": _validate_entangling_power,
    "gate-synthesis": _validate_gate_synthesis,
    "tls-fit": _validate_tls_fit,
    "ringdown-fit": _validate_ringdown,
    "readout-fit": _validate_readout_fit,
}


def validate_config(config: Mapping[str, Any]) -> str:
    """Validate a parsed configuration; returns the experiment name."""
    if not isinstance(config, Mapping):
        raise ConfigError("configuration must be a JSON object")
    name = config.get("experiment")
    if not name:
        raise ConfigError("experiment: field is required")
    if name not in REGISTRY:
        raise ConfigError(f"experiment: unknown {name!r}; see `sim list-experiments`")
    if "seed" not in config:
        raise ConfigError("seed: field is required (reproducibility contract)")
    try:
        int(config["seed"])
    except (TypeError, ValueError):
        raise ConfigError("seed: must be an integer") from None
    allowed = {"experiment", "seed", "workers", "params"}
    section = _SECTION_FOR.get(name)
    if section:
        allowed.add(section)
    unknown = set(config) - allowed
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)} (allowed: {sorted(allowed)})")
    if "workers" in config:
        workers = int(config["workers"])
        if workers < 1:
            raise ConfigError("workers: must be >= 1")
    resolve_params(config)
    validator = _VALIDATORS.get(name)
    if validator:
        validator(config)
    return name


def run_experiment(config: Mapping[str, Any], out: Path, workers: int | None = None) -> list[Path]:
    name = validate_config(config)
    if workers is None:
        workers = int(config.get("workers", 1))
    out.mkdir(parents=True, exist_ok=True)
    return REGISTRY[name].runner(config, out, workers)
