"""Fock-state preparation protocols with measurement feedforward.

Three preparation strategies for a target Fock state |N> of one cavity mode:

* ``SB``: climb the ladder with pi_ge, pi_ef, then a sideband pi pulse on
  |f,n> <-> |g,n+1> for n = 0 .. N-1.
* ``SFP``: after each sideband pulse the transmon is read out.  A label of
  f heralds a dephasing event and the sideband pulse is repeated; e heralds
  a decay event and is corrected with pi_ef before repeating; g proceeds.
  Feedforward is simulated as an exact probability-weighted tree over
  measurement outcomes (no sampling), with a bounded retry count per rung.
* ``PF``: a Ramsey-style parity filter appended to either protocol.  An
  unselective pi/2 pulse, a wait of pi/|chi| during which the transmon
  acquires one pi of phase per photon, and a -pi/2 pulse map correct-parity
  states to g; post-selecting on g removes the dominant |N-1> error.

Branches are merged after every resolved rung: future pulses do not depend
on the classical record, so the weighted sum of branch states evolves
identically to the full tree while keeping the cost linear in N.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import NumericalFailure, ResourceLimitError, TruncationWarning
from .fits import exp_decay_fit
from .lindblad import DissipatorBank, NoisyRotation, evolve
from .noise import NOISE_CHANNELS, NoiseModel, cavity_jumps
from .params import SystemParams
from .readout import ReadoutModel, fit_readout_model, measured_gef_confusion, readout_channel
from .spaces import basis_dm, build_space, partial_trace

__all__ = [
    "PulseTimings",
    "ProtocolConfig",
    "ProtocolResult",
    "simulate",
    "simulate_sb",
    "simulate_sfp",
    "apply_parity_filter",
    "ceiling_analysis",
    "fock_lifetime_scan",
]

PROTOCOLS = ("SB", "SFP", "SB+PF", "SFP+PF")

_MAX_BRANCHES = 200_000


@dataclass(frozen=True)
class PulseTimings:
    """Durations of the elementary pulses (seconds).

    Transmon pi pulses run about twenty times faster than sideband pulses;
    the sideband pi duration shrinks with the ladder rung as 1/sqrt(n+1)
    following the sideband matrix element.
    """

    t_pi_ge: float = 30e-9
    t_pi_ef: float = 30e-9
    t_sideband_base: float = 0.6e-6

    def sideband_duration(self, n: int) -> float:
        return self.t_sideband_base / math.sqrt(n + 1.0)


@dataclass(frozen=True)
class ProtocolConfig:
    target_n: int
    protocol: str = "SFP+PF"
    mode: str = "alice"
    timings: PulseTimings = field(default_factory=PulseTimings)
    channels_off: frozenset[str] = frozenset()
    max_feedforward_retries: int = 2
    seed: int = 0
    cavity_cutoff: int | None = None  # number of photon levels; default N+1
    trotter_steps: int = 4
    pf_substeps: int = 16

    def __post_init__(self):
        if self.target_n < 1:
            raise ValueError("target_n must be >= 1")
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"protocol must be one of {PROTOCOLS}")
        if self.max_feedforward_retries < 0:
            raise ValueError("retry bound must be >= 0")
        unknown = set(self.channels_off) - set(NOISE_CHANNELS)
        if unknown:
            raise ValueError(f"unknown noise channels: {sorted(unknown)}")
        cutoff = self.cutoff
        if cutoff < self.target_n + 1:
            raise ValueError("cavity cutoff must cover the target Fock level")
        object.__setattr__(self, "channels_off", frozenset(self.channels_off))

    @property
    def cutoff(self) -> int:
        return self.cavity_cutoff if self.cavity_cutoff is not None else self.target_n + 1

    def replace(self, **changes) -> "ProtocolConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class ProtocolResult:
    population: np.ndarray
    fidelity: float
    keep_probability: float
    branch_count: int
    leakage: float
    infidelity_breakdown: dict | None = None
    flags: tuple[str, ...] = ()


class _ProtocolEngine:
    """Precomputed channels for one (config, params) pair."""

    def __init__(self, config: ProtocolConfig, params: SystemParams):
        self.config = config
        self.params = params
        n_levels = config.cutoff
        self.space = build_space([3, n_levels], labels=["transmon", config.mode])
        self.noise = NoiseModel.from_params(
            self.space, params, modes=(config.mode,), channels_off=config.channels_off
        )
        self.jumps = self.noise.operators()
        cav = [
            j.matrix
            for j in cavity_jumps(self.space, params, config.mode)
            if j.channel not in config.channels_off
        ]
        self._idle_jumps = cav
        self._idle_bank = DissipatorBank(cav)

        m = config.trotter_steps
        t = config.timings
        self.pulse_ge = NoisyRotation.subsystem_pulse(
            self.space, "transmon", 0, 1, math.pi, self.jumps, t.t_pi_ge, m
        )
        self.pulse_ef = NoisyRotation.subsystem_pulse(
            self.space, "transmon", 1, 2, math.pi, self.jumps, t.t_pi_ef, m
        )
        self.sidebands = []
        for n in range(config.target_n):
            j = self.space.index((2, n))
            k = self.space.index((0, n + 1))
            self.sidebands.append(
                NoisyRotation.two_level(
                    self.space, j, k, math.pi, self.jumps, t.sideband_duration(n), m
                )
            )
        if "readout_error" in config.channels_off:
            self.readout_model = ReadoutModel.ideal(params.readout_time)
        else:
            self.readout_model = fit_readout_model(measured_gef_confusion())[0]
            self.readout_model = replace(self.readout_model, duration=params.readout_time)

    # -- elementary steps ---------------------------------------------------

    def measure(self, rho: np.ndarray):
        return readout_channel(
            self.readout_model, rho, self.space, idle_jumps=self._idle_jumps
        )

    def reset_transmon(self, rho: np.ndarray) -> np.ndarray:
        out = np.zeros_like(rho)
        for level in range(3):
            k = self.space.transition("transmon", 0, level)
            out += k @ rho @ k.conj().T
        return out

    def initial_state(self) -> np.ndarray:
        return basis_dm(self.space, (0, 0))

    def cavity_population(self, rho: np.ndarray) -> np.ndarray:
        reduced = partial_trace(rho, list(self.space.dims), [1])
        return np.diag(reduced).real.copy()

    # -- protocols ----------------------------------------------------------

    def run_sb(self) -> tuple[np.ndarray, int, list[str]]:
        rho = self.initial_state()
        for n in range(self.config.target_n):
            rho = self.pulse_ge(rho)
            rho = self.pulse_ef(rho)
            rho = self.sidebands[n](rho)
        return rho, 1, []

    def run_sfp(self) -> tuple[np.ndarray, int, list[str]]:
        cfg = self.config
        rho = self.initial_state()
        branch_count = 1
        flags: list[str] = []
        for n in range(cfg.target_n):
            rho = self.pulse_ge(rho)
            rho = self.pulse_ef(rho)
            resolved = np.zeros_like(rho)
            active: list[tuple[float, np.ndarray]] = [(1.0, rho)]
            for attempt in range(cfg.max_feedforward_retries + 1):
                last = attempt == cfg.max_feedforward_retries
                next_active: list[tuple[float, np.ndarray]] = []
                for weight, state in active:
                    state = self.sidebands[n](state)
                    for label, prob, post in self.measure(state):
                        w = weight * prob
                        if w < 1e-15:
                            continue
                        branch_count += 1
                        if label == "g":
                            resolved += w * post
                        elif last:
                            resolved += w * post
                            if "retry-bound-exceeded" not in flags:
                                flags.append("retry-bound-exceeded")
                        else:
                            if label == "e":
                                post = self.pulse_ef(post)
                            next_active.append((w, post))
                if branch_count > _MAX_BRANCHES:
                    raise ResourceLimitError(
                        f"feedforward tree exceeded {_MAX_BRANCHES} branches; "
                        "reduce max_feedforward_retries"
                    )
                active = next_active
                if not active:
                    break
            rho = resolved
        return rho, branch_count, flags

    def parity_filter(self, rho: np.ndarray) -> tuple[np.ndarray, float, int]:
        """Ideal pi/2 pulses around an exact dispersive wait, then readout.

        Returns (kept state, keep probability, branch count).
        """
        cfg = self.config
        n_target = cfg.target_n
        space = self.space
        rho = self.reset_transmon(rho)

        u_half = space.embed(
            np.array(
                [
                    [math.cos(math.pi / 4), -math.sin(math.pi / 4), 0.0],
                    [math.sin(math.pi / 4), math.cos(math.pi / 4), 0.0],
                    [0.0, 0.0, 1.0],
                ],
                dtype=complex,
            ),
            "transmon",
        )
        rho = u_half @ rho @ u_half.conj().T

        # dispersive wait pi/|chi|: one pi of phase per photon relative to the
        # target, interleaved with idle decoherence
        chi = abs(self.params.chi_e(cfg.mode))
        wait = math.pi / chi
        n_levels = cfg.cutoff
        phases = np.ones(space.dim, dtype=complex)
        for n in range(n_levels):
            idx = space.index((1, n))
            phases[idx] = np.exp(-1j * math.pi * (n - n_target) / cfg.pf_substeps)
        step_u = np.diag(phases)
        dt = wait / cfg.pf_substeps
        for _ in range(cfg.pf_substeps):
            rho = step_u @ rho @ step_u.conj().T
            rho = self._idle_bank.exp_apply(rho, dt)

        rho = u_half.conj().T @ rho @ u_half
        outcomes = self.measure(rho)
        for label, prob, post in outcomes:
            if label == "g":
                return post, prob, len(outcomes)
        raise NumericalFailure("parity filter produced no g branch")


def _result_from_state(
    engine: _ProtocolEngine,
    rho: np.ndarray,
    branch_count: int,
    keep_probability: float,
    flags: list[str],
) -> ProtocolResult:
    population = engine.cavity_population(rho)
    total = population.sum()
    leakage = max(0.0, 1.0 - total)
    if leakage > 1e-4:
        warnings.warn(
            f"population leakage {leakage:.2e} past the cavity cutoff",
            TruncationWarning,
            stacklevel=3,
        )
        flags = flags + ["truncation-leakage"]
    return ProtocolResult(
        population=population,
        fidelity=float(population[engine.config.target_n]),
        keep_probability=keep_probability,
        branch_count=branch_count,
        leakage=leakage,
        flags=tuple(flags),
    )


def simulate(config: ProtocolConfig, params: SystemParams) -> ProtocolResult:
    """Run the configured preparation protocol and return populations."""
    engine = _ProtocolEngine(config, params)
    if config.protocol.startswith("SFP"):
        rho, branches, flags = engine.run_sfp()
    else:
        rho, branches, flags = engine.run_sb()
    keep = 1.0
    if config.protocol.endswith("+PF"):
        rho, keep, extra = engine.parity_filter(rho)
        branches += extra
    return _result_from_state(engine, rho, branches, keep, flags)


def simulate_sb(config: ProtocolConfig, params: SystemParams) -> ProtocolResult:
    return simulate(config.replace(protocol="SB"), params)


def simulate_sfp(config: ProtocolConfig, params: SystemParams) -> ProtocolResult:
    return simulate(config.replace(protocol="SFP"), params)


def apply_parity_filter(
    rho: np.ndarray,
    target_n: int,
    params: SystemParams,
    *,
    mode: str = "alice",
    config: ProtocolConfig | None = None,
) -> tuple[np.ndarray, float]:
    """Parity-filter an existing state (transmon reset to g internally)."""
    if config is None:
        config = ProtocolConfig(target_n=target_n, mode=mode, cavity_cutoff=rho.shape[0] // 3)
    engine = _ProtocolEngine(config, params)
    kept, prob, _ = engine.parity_filter(np.asarray(rho, dtype=complex))
    return kept, prob


def ceiling_analysis(
    config: ProtocolConfig,
    params: SystemParams,
    channels: Sequence[str] | None = None,
) -> dict[str, float]:
    """Infidelity attribution: fidelity gain from disabling each channel."""
    if channels is None:
        channels = [c for c in NOISE_CHANNELS]
    unknown = set(channels) - set(NOISE_CHANNELS)
    if unknown:
        raise ValueError(f"unknown noise channels: {sorted(unknown)}")
    base = simulate(config, params).fidelity
    contributions = {}
    for channel in channels:
        off = config.replace(channels_off=frozenset(config.channels_off | {channel}))
        contributions[channel] = simulate(off, params).fidelity - base
    return contributions


def fock_lifetime_scan(
    n_list: Sequence[int],
    params: SystemParams,
    mode: str = "alice",
    *,
    t_points: int = 20,
) -> list[tuple[int, float]]:
    """Simulated relaxation time of each Fock state |n> under cavity noise."""
    t1, _ = params.mode_times(mode)
    results = []
    for n in n_list:
        if n < 1:
            raise ValueError("Fock index must be >= 1")
        space = build_space([n + 1], labels=[mode])
        jumps = [j.matrix for j in cavity_jumps(space, params, mode)]
        h = np.zeros((n + 1, n + 1))
        t_grid = np.linspace(0.0, 1.5 * t1 / n, t_points)
        traj = evolve(h, jumps, basis_dm(space, n), t_grid[-1], t_eval=t_grid, method="expm")
        pn = np.array([s[n, n].real for s in traj.states])
        fit = exp_decay_fit(t_grid, pn)
        results.append((int(n), float(fit.tau)))
    return results
