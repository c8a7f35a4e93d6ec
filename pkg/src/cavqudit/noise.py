"""Jump operators and derived rates for the transmon + cavity noise model.

The transmon is modeled as a three-level system (g, e, f).  Depolarization
and thermal heating carry the sqrt(2) ladder enhancement on the e-f leg;
pure dephasing uses two diagonal jumps with the sqrt(2) weight on |f>
reflecting the roughly doubled frequency-noise sensitivity of the f level.
Cavity modes get single-photon decay and number-operator dephasing; their
sub-0.1% thermal populations are neglected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import InconsistentParameters
from .params import SystemParams
from .spaces import HilbertSpace

__all__ = [
    "TRANSMON_LEVELS",
    "NOISE_CHANNELS",
    "pure_dephasing_rate",
    "JumpOperator",
    "transmon_jumps",
    "cavity_jumps",
    "NoiseModel",
]

TRANSMON_LEVELS = ("g", "e", "f", "h")

#: Channel names understood by the protocol-level toggles.  ``readout_error``
#: is handled by the measurement model rather than by a jump operator.
NOISE_CHANNELS = (
    "transmon_decay",
    "transmon_heating",
    "transmon_dephasing",
    "cavity_decay",
    "cavity_dephasing",
    "readout_error",
)


def pure_dephasing_rate(t1: float, t2: float, *, clip_tol: float = 1e-6) -> float:
    """Pure dephasing rate 1/T2 - 1/(2 T1), clipped to zero within tolerance.

    Raises :class:`InconsistentParameters` when the result is negative
    beyond ``clip_tol / t2`` (i.e. T2 meaningfully exceeds 2 T1).
    """
    if t1 <= 0 or t2 <= 0:
        raise ValueError("T1 and T2 must be positive")
    rate = 1.0 / t2 - 1.0 / (2.0 * t1)
    if rate < 0.0:
        if rate < -clip_tol / t2:
            raise InconsistentParameters(
                f"T2 = {t2} exceeds 2*T1 = {2 * t1}; negative dephasing rate {rate:.3e}"
            )
        return 0.0
    return rate


@dataclass(frozen=True)
class JumpOperator:
    """A Lindblad jump operator embedded in the full space."""

    label: str
    channel: str
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


def transmon_jumps(
    space: HilbertSpace,
    params: SystemParams,
    subsystem: str = "transmon",
) -> list[JumpOperator]:
    """Decay, heating and dephasing jumps for the three-level transmon."""
    dim = space.dims[space.subsystem_index(subsystem)]
    if dim < 3:
        raise ValueError("transmon subsystem needs at least 3 levels")
    gamma = 1.0 / params.T1_ge
    nbar = params.n_th_q
    gamma_phi = pure_dephasing_rate(params.T1_ge, params.T2_ge)

    ef = space.transition(subsystem, 1, 2)  # |e><f|
    ge = space.transition(subsystem, 0, 1)
    fe = space.transition(subsystem, 2, 1)
    eg = space.transition(subsystem, 1, 0)
    pf = space.projector(subsystem, 2)
    pe = space.projector(subsystem, 1)

    decay = math.sqrt(gamma * (1.0 + nbar)) * (math.sqrt(2.0) * ef + ge)
    heating = math.sqrt(gamma * nbar) * (math.sqrt(2.0) * fe + eg)
    # Projector jumps sqrt(c)|j><j| dephase the g-j coherence at c/2, so the
    # base amplitude is sqrt(2 gamma_phi) to reproduce the measured Ramsey
    # rate; the f jump keeps its sqrt(2) amplitude enhancement on top.
    dephasing_f = math.sqrt(2.0) * math.sqrt(2.0 * gamma_phi) * pf
    dephasing_e = math.sqrt(2.0 * gamma_phi) * pe
    return [
        JumpOperator("transmon decay", "transmon_decay", decay),
        JumpOperator("transmon heating", "transmon_heating", heating),
        JumpOperator("transmon dephasing f", "transmon_dephasing", dephasing_f),
        JumpOperator("transmon dephasing e", "transmon_dephasing", dephasing_e),
    ]


def cavity_jumps(
    space: HilbertSpace,
    params: SystemParams,
    mode: str,
    subsystem: str | None = None,
) -> list[JumpOperator]:
    """Single-photon decay and number-operator dephasing for one cavity mode."""
    mode = mode.lower()
    t1, t2 = params.mode_times(mode)
    if subsystem is None:
        subsystem = mode
    a = space.annihilation(subsystem)
    n = space.number(subsystem)
    gamma_phi = pure_dephasing_rate(t1, t2)
    decay = math.sqrt(1.0 / t1) * a
    # sqrt(2 gamma_phi) n so that the 0-1 coherence dephases at gamma_phi
    dephasing = math.sqrt(2.0 * gamma_phi) * n
    return [
        JumpOperator(f"{mode} decay", "cavity_decay", decay),
        JumpOperator(f"{mode} dephasing", "cavity_dephasing", dephasing),
    ]


@dataclass(frozen=True)
class NoiseModel:
    """A set of jump operators grouped by channel, with toggles."""

    jumps: tuple[JumpOperator, ...]
    dephasing_rates: dict[str, float]

    @classmethod
    def from_params(
        cls,
        space: HilbertSpace,
        params: SystemParams,
        modes: Sequence[str] = ("alice",),
        channels_off: Iterable[str] = (),
    ) -> "NoiseModel":
        off = set(channels_off)
        unknown = off - set(NOISE_CHANNELS)
        if unknown:
            raise ValueError(f"unknown noise channels: {sorted(unknown)}")
        jumps: list[JumpOperator] = list(transmon_jumps(space, params))
        for mode in modes:
            jumps.extend(cavity_jumps(space, params, mode))
        kept = tuple(j for j in jumps if j.channel not in off)
        rates = {
            "transmon": pure_dephasing_rate(params.T1_ge, params.T2_ge),
        }
        for mode in modes:
            t1, t2 = params.mode_times(mode)
            rates[mode] = pure_dephasing_rate(t1, t2)
        return cls(jumps=kept, dephasing_rates=rates)

    def operators(self) -> list[np.ndarray]:
        return [j.matrix for j in self.jumps]

    def without(self, channels: Iterable[str]) -> "NoiseModel":
        off = set(channels)
        return replace(
            self, jumps=tuple(j for j in self.jumps if j.channel not in off)
        )

    def channels(self) -> set[str]:
        return {j.channel for j in self.jumps}
