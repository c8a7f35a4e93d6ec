"""Figure rendering for experiment outputs.

Each experiment's delimited tables are turned into one or more PNG figures
written next to them.  Rendering reads only the written CSV/JSON artifacts,
so figures can be regenerated from disk without re-running simulations.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render", "available"]

_FIG_KW = dict(dpi=150, bbox_inches="tight")


def _read_csv(path: Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader if row]
    columns: dict[str, np.ndarray] = {}
    for i, name in enumerate(header):
        values = []
        numeric = True
        for row in rows:
            try:
                values.append(float(row[i]))
            except ValueError:
                numeric = False
                break
        columns[name] = np.array(values) if numeric else np.array([row[i] for row in rows])
    return columns


def _save(fig, out: Path) -> Path:
    fig.savefig(out, **_FIG_KW)
    plt.close(fig)
    return out


def _render_fock_prep(out: Path) -> list[Path]:
    data = _read_csv(out / "fidelity_vs_n.csv")
    fig, ax = plt.subplots(figsize=(5, 3.4))
    n = data["n"]
    styles = {"f_sb": "o-", "f_sfp": "s-", "f_sb_pf": "^-", "f_sfp_pf": "d-"}
    labels = {"f_sb": "SB", "f_sfp": "SFP", "f_sb_pf": "SB+PF", "f_sfp_pf": "SFP+PF"}
    for key, style in styles.items():
        if key in data:
            ax.plot(n, data[key], style, label=labels[key], ms=4)
    ax.set_xlabel("target Fock state $n$")
    ax.set_ylabel("preparation fidelity")
    ax.set_ylim(top=1.002)
    ax.legend(frameon=False, fontsize=8)
    ax.grid(alpha=0.3)
    figs = [_save(fig, out / "fidelity_vs_n.png")]

    pops = json.loads((out / "populations.json").read_text())
    largest = max(pops, key=lambda k: int(k.rsplit("n", 1)[-1]))
    n_max = int(largest.rsplit("n", 1)[-1])
    keys = [k for k in pops if k.endswith(f"_n{n_max}")]
    fig, axes = plt.subplots(1, len(keys), figsize=(3.0 * len(keys), 2.8), sharey=True)
    axes = np.atleast_1d(axes)
    for ax, key in zip(axes, sorted(keys)):
        pop = np.asarray(pops[key]["population"])
        ax.bar(np.arange(pop.size), pop, width=0.85)
        ax.set_title(key.rsplit("_n", 1)[0], fontsize=9)
        ax.set_xlabel("photon number")
    axes[0].set_ylabel("population")
    figs.append(_save(fig, out / f"populations_n{n_max}.png"))
    return figs


def _render_fock_lifetime(out: Path) -> list[Path]:
    data = _read_csv(out / "fock_lifetimes.csv")
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    ax.loglog(data["n"], 1e3 * data["t1_fit_s"], "o", label="simulated fit")
    ax.loglog(data["n"], 1e3 * data["t1_expected_s"], "-", label=r"$T_1 / n$")
    ax.set_xlabel("Fock state $n$")
    ax.set_ylabel(r"$T_1^{(n)}$ (ms)")
    ax.legend(frameon=False, fontsize=8)
    ax.grid(alpha=0.3, which="both")
    return [_save(fig, out / "fock_lifetimes.png")]


def _render_vrbs_sweep(out: Path) -> list[Path]:
    data = _read_csv(out / "vrbs_sweep.csv")
    det = np.abs(data["detuning_hz"]) / 1e6
    fig, axes = plt.subplots(1, 3, figsize=(10, 3.0))
    axes[0].loglog(det, data["g_bs_rad_s"] / (2 * np.pi) / 1e3, "o-")
    axes[0].set_xlabel(r"$|\Delta| / 2\pi$ (MHz)")
    axes[0].set_ylabel(r"$g_\mathrm{bs} / 2\pi$ (kHz)")
    axes[1].semilogy(det, 1e3 * data["t1_fit_s"], "o-", label=r"$1/\kappa_1$")
    axes[1].semilogy(det, 1e3 * data["t_phi_fit_s"], "s-", label=r"$1/\kappa_\phi$")
    axes[1].set_xlabel(r"$|\Delta| / 2\pi$ (MHz)")
    axes[1].set_ylabel("time (ms)")
    axes[1].legend(frameon=False, fontsize=8)
    axes[2].plot(det, data["fidelity_bs"], "o-")
    axes[2].set_xlabel(r"$|\Delta| / 2\pi$ (MHz)")
    axes[2].set_ylabel("beamsplitter fidelity")
    for ax in axes:
        ax.grid(alpha=0.3)
    fig.tight_layout()
    return [_save(fig, out / "vrbs_sweep.png")]


def _render_vrbs_swap(out: Path) -> list[Path]:
    figs = []
    for path in sorted(out.glob("swap_*.csv")):
        data = _read_csv(path)
        fig, ax = plt.subplots(figsize=(5, 3.2))
        ax.plot(data["swap"], data["p10_conditioned"], "-", label=r"$P_{10}$ (cond.)")
        ax.plot(data["swap"], data["p01_conditioned"], "-", label=r"$P_{01}$ (cond.)")
        ax.plot(data["swap"], data["p00"], "--", color="gray", label=r"$P_{00}$")
        ax.plot(data["swap"], data["keep_probability"], ":", color="k", label="keep")
        ax.set_xlabel("swap number")
        ax.set_ylabel("population")
        ax.set_title(path.stem.replace("swap_", "checks: "), fontsize=9)
        ax.legend(frameon=False, fontsize=8)
        ax.grid(alpha=0.3)
        figs.append(_save(fig, out / (path.stem + ".png")))
    return figs


def _render_heating_fit(out: Path) -> list[Path]:
    data = _read_csv(out / "heating_detection.csv")
    results = json.loads((out / "results.json").read_text())
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    ax.plot(data["n"], data["detection_rate"], "o", ms=3, label="data")
    ax.plot(data["n"], data["model"], "-", label=f"fit: $P$ = {results['p_up']:.4%}")
    ax.set_xlabel("operation count $n$")
    ax.set_ylabel("excitation detection rate")
    ax.legend(frameon=False, fontsize=8)
    ax.grid(alpha=0.3)
    return [_save(fig, out / "heating_fit.png")]


def _render_entangling_power(out: Path) -> list[Path]:
    data = _read_csv(out / "entangling_power.csv")
    fig, ax = plt.subplots(figsize=(4.0, 3.0))
    x = np.arange(len(data["gate"]))
    ax.bar(x, data["e_p"], yerr=3 * data["stderr"], width=0.6, capsize=4)
    ax.axhline(3 / 8, color="gray", ls="--", lw=1, label=r"$e_p = 3/8$")
    ax.set_xticks(x, data["gate"])
    ax.set_ylabel("entangling power $e_p$")
    ax.legend(frameon=False, fontsize=8)
    return [_save(fig, out / "entangling_power.png")]


def _render_gate_synthesis(out: Path) -> list[Path]:
    data = _read_csv(out / "synthesis_ladder.csv")
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    ax.semilogy(data["n_blocks"], 1 - data["fidelity"] + 1e-12, "o-")
    ax.set_xlabel("exchange blocks")
    ax.set_ylabel("best-found infidelity")
    ax.grid(alpha=0.3, which="both")
    return [_save(fig, out / "synthesis_ladder.png")]


def _render_tls_fit(out: Path) -> list[Path]:
    data = _read_csv(out / "tls_q0.csv")
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    ax.loglog(1e3 * data["temperature_k"], data["q0"], "o", ms=4, label="data")
    ax.loglog(1e3 * data["temperature_k"], data["q0_model"], "-", label="TLS model")
    ax.set_xlabel("temperature (mK)")
    ax.set_ylabel("internal quality factor $Q_0$")
    ax.legend(frameon=False, fontsize=8)
    ax.grid(alpha=0.3, which="both")
    return [_save(fig, out / "tls_fit.png")]


def _render_ringdown(out: Path) -> list[Path]:
    data = _read_csv(out / "ringdown.csv")
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    ax.semilogy(1e3 * data["time_s"], np.clip(data["signal"], 1e-4, None), ".", ms=3, label="data")
    ax.semilogy(1e3 * data["time_s"], np.clip(data["model"], 1e-4, None), "-", label="fit")
    ax.set_xlabel("time (ms)")
    ax.set_ylabel("signal")
    ax.legend(frameon=False, fontsize=8)
    ax.grid(alpha=0.3)
    return [_save(fig, out / "ringdown.png")]


def _render_readout_fit(out: Path) -> list[Path]:
    figs = []
    for stem in ("confusion_measured", "confusion_model"):
        data = _read_csv(out / f"{stem}.csv")
        m = np.column_stack([data[k] for k in data])
        fig, ax = plt.subplots(figsize=(3.4, 3.0))
        im = ax.imshow(m, vmin=0, vmax=1, cmap="viridis")
        for i in range(3):
            for j in range(3):
                ax.text(j, i, f"{m[i, j]:.4f}", ha="center", va="center",
                        color="w" if m[i, j] < 0.5 else "k", fontsize=8)
        labels = ["g", "e", "f"]
        ax.set_xticks(range(3), [f"prep {l}" for l in labels])
        ax.set_yticks(range(3), [f"assign {l}" for l in labels])
        ax.set_title(stem.replace("confusion_", ""), fontsize=9)
        fig.colorbar(im, shrink=0.8)
        figs.append(_save(fig, out / f"{stem}.png"))
    return figs


def _render_limits(out: Path) -> list[Path]:
    data = _read_csv(out / "limits.csv")
    fig, ax = plt.subplots(figsize=(5.5, 3.0))
    x = np.arange(len(data["quantity"]))
    ax.bar(x, np.asarray(data["value"], dtype=float) * 1e3, width=0.6)
    ax.set_yscale("log")
    ax.set_xticks(x, [q.replace("_", "\n") for q in data["quantity"]], fontsize=6)
    ax.set_ylabel("time (ms)")
    fig.tight_layout()
    return [_save(fig, out / "limits.png")]


_RENDERERS = {
    "fock-prep": _render_fock_prep,
    "fock-lifetime": _render_fock_lifetime,
    "vrbs-sweep": _render_vrbs_sweep,
    "vrbs-swap": _render_vrbs_swap,
    "heating-fit": _render_heating_fit,
    "entangling-power": _render_entangling_power,
    "gate-synthesis": _render_gate_synthesis,
    "tls-fit": _render_tls_fit,
    "ringdown-fit": _render_ringdown,
    "readout-fit": _render_readout_fit,
    "limits": _render_limits,
}


def available() -> list[str]:
    return sorted(_RENDERERS)


def render(experiment: str, out: Path) -> list[Path]:
    """Render the figures for one experiment's output directory."""
    renderer = _RENDERERS.get(experiment)
    if renderer is None:
        return []
    return renderer(Path(out))
