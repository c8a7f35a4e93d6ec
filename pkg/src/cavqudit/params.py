"""Calibrated device parameters and unit conventions.

All frequencies are stored internally as *angular* frequencies (rad/s);
every configuration boundary takes ordinary (linear) frequencies in Hz and
converts on entry.  Times are seconds, thermal populations dimensionless.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Any, Mapping

TWO_PI = 6.283185307179586

# CODATA / exact SI constants
HBAR = 1.054571817e-34  # J s
K_B = 1.380649e-23  # J / K

_FREQUENCY_FIELDS = (
    "omega_a",
    "omega_b",
    "omega_q",
    "omega_r",
    "alpha",
    "g_a",
    "g_b",
    "chi_e_a",
    "chi_e_b",
)

_TIME_FIELDS = (
    "T1_A",
    "T2_A",
    "T1_B",
    "T2_B",
    "T1_ge",
    "T2_ge",
    "T2E_ge",
    "T1_f",
    "T2_gf",
    "readout_time",
)

_POPULATION_FIELDS = ("n_th_q", "n_th_a", "n_th_b")


@dataclass(frozen=True)
class SystemParams:
    """Calibrated parameters of the two-mode cavity + transmon device.

    Frequency fields are angular (rad/s); use :meth:`from_hz` to construct
    from linear frequencies.
    """

    # mode and transmon frequencies (rad/s)
    omega_a: float
    omega_b: float
    omega_q: float
    omega_r: float
    alpha: float  # transmon anharmonicity, negative
    g_a: float
    g_b: float
    chi_e_a: float  # dispersive shift of Alice per transmon e-excitation, negative
    chi_e_b: float
    # coherence times (s)
    T1_A: float
    T2_A: float
    T1_B: float
    T2_B: float
    T1_ge: float
    T2_ge: float
    T2E_ge: float
    T1_f: float
    T2_gf: float
    # thermal populations
    n_th_q: float
    n_th_a: float
    n_th_b: float
    # three-state readout duration (s)
    readout_time: float = 1.7e-6

    def __post_init__(self):
        for name in _TIME_FIELDS:
            value = getattr(self, name)
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        for name in _POPULATION_FIELDS:
            value = getattr(self, name)
            if not 0.0 <= value < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {value}")
        for t2, t1 in (("T2_ge", "T1_ge"), ("T2_A", "T1_A"), ("T2_B", "T1_B")):
            if getattr(self, t2) > 2.0 * getattr(self, t1) * (1.0 + 1e-12):
                raise ValueError(
                    f"{t2} = {getattr(self, t2)} exceeds 2 * {t1}; inconsistent coherences"
                )

    @classmethod
    def from_hz(cls, **kwargs: float) -> "SystemParams":
        """Build from linear frequencies in Hz (times/populations unchanged)."""
        converted = dict(kwargs)
        for name in _FREQUENCY_FIELDS:
            if name in converted:
                converted[name] = TWO_PI * converted[name]
        return cls(**converted)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SystemParams":
        """Config boundary: strict keys, frequencies in Hz."""
        allowed = {f.name for f in fields(cls)}
        unknown = set(data) - allowed
        if unknown:
            raise ValueError(f"unknown parameter keys: {sorted(unknown)}")
        required = {f.name for f in fields(cls) if f.name != "readout_time"}
        missing = required - set(data)
        if missing:
            raise ValueError(f"missing parameter keys: {sorted(missing)}")
        return cls.from_hz(**{k: float(v) for k, v in data.items()})

    def to_hz_dict(self) -> dict[str, float]:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name in _FREQUENCY_FIELDS:
                value = value / TWO_PI
            out[f.name] = value
        return out

    def replace(self, **changes: float) -> "SystemParams":
        return replace(self, **changes)

    # derived quantities -----------------------------------------------------

    @property
    def delta_a(self) -> float:
        """Transmon-Alice detuning omega_q - omega_a (rad/s)."""
        return self.omega_q - self.omega_a

    @property
    def delta_b(self) -> float:
        """Transmon-Bob detuning omega_q - omega_b (rad/s)."""
        return self.omega_q - self.omega_b

    def chi_e(self, mode: str) -> float:
        mode = mode.lower()
        if mode == "alice":
            return self.chi_e_a
        if mode == "bob":
            return self.chi_e_b
        raise ValueError(f"unknown mode {mode!r}")

    def mode_times(self, mode: str) -> tuple[float, float]:
        """(T1, T2) of the named cavity mode."""
        mode = mode.lower()
        if mode == "alice":
            return self.T1_A, self.T2_A
        if mode == "bob":
            return self.T1_B, self.T2_B
        raise ValueError(f"unknown mode {mode!r}")


#: Measured device parameter set (linear-frequency inputs in Hz).
DEVICE_PARAMS = SystemParams.from_hz(
    omega_a=5.779e9,
    omega_b=6.872e9,
    omega_q=6.402e9,
    omega_r=8.379e9,
    alpha=-245e6,
    g_a=5.841e6,
    g_b=8.114e6,
    chi_e_a=-71e3,
    chi_e_b=-96e3,
    T1_A=20.6e-3,
    T2_A=21.1e-3,
    T1_B=15.6e-3,
    T2_B=21.7e-3,
    T1_ge=147.4e-6,
    T2_ge=47.3e-6,
    T2E_ge=205.8e-6,
    T1_f=80.1e-6,
    T2_gf=45e-6,
    n_th_q=0.0025,
    n_th_a=0.001,  # upper bound; neglected in the jump-operator model
    n_th_b=0.001,
    readout_time=1.7e-6,
)


@dataclass(frozen=True)
class DrivenNoiseParams:
    """Effective white-noise rates refit for the strongly driven regime.

    The driven transmon sees a larger effective thermal population and a
    weaker pure-dephasing rate than at idle, because the relevant noise is
    sampled at very different frequencies.  ``t_phi_ge`` is the pure
    dephasing constant entering the number-operator jump directly (the
    driven-regime refit would otherwise violate T2 <= 2 T1).  Cavity pure
    dephasing is optional and off by default.
    """

    T1_ge: float = 168e-6
    n_th_q: float = 0.04
    t_phi_ge: float = 700e-6
    T1_A: float = 26e-3
    T1_B: float = 20e-3
    t_phi_A: float | None = None
    t_phi_B: float | None = None

    def __post_init__(self):
        for name in ("T1_ge", "t_phi_ge", "T1_A", "T1_B"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.n_th_q < 1.0:
            raise ValueError("n_th_q must lie in [0, 1)")

    def replace(self, **changes) -> "DrivenNoiseParams":
        return replace(self, **changes)


#: Driven-regime noise set used by the two-mode beamsplitter simulations.
DRIVEN_NOISE = DrivenNoiseParams()
