"""Coherence-limit calculators, loss arithmetic, and generic curve fits.

Closed-form limits:

* ``purcell_limit``: cavity lifetime inherited from ancilla decoherence
  through hybridization, (Delta/g)^2 * T2E / 2.
* ``thermal_dephasing_limit``: cavity dephasing from ancilla thermal shot
  noise, (chi^2 + 1/T1^2) / (n_th * chi^2 / T1).
* ``loss_rate_from_participation``: kappa = omega * p * tan(delta), summed
  over surface regions when several participations are given.

Fits use ``scipy.optimize`` nonlinear least squares throughout.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from .errors import NumericalFailure
from .params import HBAR, K_B

__all__ = [
    "purcell_limit",
    "thermal_dephasing_limit",
    "loss_rate_from_participation",
    "surface_loss_rate",
    "internal_quality_factor",
    "TlsFitParams",
    "tls_model",
    "tls_fit",
    "ExpFitResult",
    "exp_decay_fit",
]


def purcell_limit(delta: float, g: float, t2e: float) -> float:
    """Inverse-Purcell bound on the cavity lifetime, (delta/g)^2 * T2E / 2.

    ``delta`` and ``g`` may be in any common frequency unit; only their
    ratio enters.
    """
    if g == 0:
        raise ValueError("coupling g must be non-zero")
    return (delta / g) ** 2 * t2e / 2.0


def thermal_dephasing_limit(chi: float, t1q: float, n_th: float) -> float:
    """Cavity dephasing time from ancilla thermal shot noise.

    Returns ``inf`` when the thermal population vanishes.  ``chi`` in rad/s,
    ``t1q`` in seconds.
    """
    if chi == 0:
        raise ValueError("dispersive shift chi must be non-zero")
    if n_th < 0:
        raise ValueError("thermal population must be non-negative")
    if n_th == 0:
        return math.inf
    gamma = 1.0 / t1q
    return (chi**2 + gamma**2) / (n_th * gamma * chi**2)


def loss_rate_from_participation(omega: float, p: float, tan_delta: float) -> float:
    """Loss rate kappa = omega * p * tan(delta) for one dielectric region."""
    if p < 0 or tan_delta < 0:
        raise ValueError("participation and loss tangent must be non-negative")
    return omega * p * tan_delta


def surface_loss_rate(omega: float, participations: Sequence[float], tan_deltas: Sequence[float]) -> float:
    """Summed surface loss over (metal-air, metal-substrate, substrate-air)."""
    if len(participations) != len(tan_deltas):
        raise ValueError("one loss tangent per participation required")
    return sum(loss_rate_from_participation(omega, p, t) for p, t in zip(participations, tan_deltas))


def internal_quality_factor(q_loaded: float, q_external: float) -> float:
    """Internal Q from loaded and coupling quality factors."""
    inv = 1.0 / q_loaded - 1.0 / q_external
    if inv <= 0:
        raise ValueError("loaded Q must be below the external Q")
    return 1.0 / inv


@dataclass(frozen=True)
class TlsFitParams:
    """Two-level-system loss fit: 1/Q0(T) = F*delta0*tanh(beta*hw/2kT) + R/G."""

    f_delta0: float
    r_res: float  # residual surface resistance, ohm
    beta: float
    g_factor: float  # geometry factor, ohm (input)
    f0: float  # resonance frequency, Hz (input)
    covariance: np.ndarray | None = None
    residual: float = 0.0

    def q0(self, temperature: np.ndarray) -> np.ndarray:
        return 1.0 / tls_model(
            np.asarray(temperature, float), self.f_delta0, self.r_res, self.beta, self.f0, self.g_factor
        )


def tls_model(
    temperature: np.ndarray,
    f_delta0: float,
    r_res: float,
    beta: float,
    f0: float,
    g_factor: float,
) -> np.ndarray:
    """Inverse internal quality factor of the saturable-TLS loss model."""
    x = beta * HBAR * (2.0 * math.pi * f0) / (2.0 * K_B * np.asarray(temperature, float))
    return f_delta0 * np.tanh(x) + r_res / g_factor


def tls_fit(
    temperatures: Sequence[float],
    q0_values: Sequence[float],
    f0: float,
    g_factor: float,
) -> TlsFitParams:
    """Fit (F*delta0, R_res, beta) to internal-Q versus temperature data."""
    t = np.asarray(temperatures, dtype=float)
    q = np.asarray(q0_values, dtype=float)
    if t.size < 4:
        raise ValueError("need at least 4 temperature points")
    if np.any(t <= 0) or np.any(q <= 0):
        raise ValueError("temperatures and quality factors must be positive")
    y = 1.0 / q
    floor = max(y.min(), 1e-18)
    p0 = np.array([max(y.max() - floor, 1e-12), 0.8 * floor * g_factor, 1.0])

    def f(temp, fd0, rres, beta):
        return tls_model(temp, fd0, rres, beta, f0, g_factor)

    try:
        # relative weighting: Q data noise is multiplicative across decades
        popt, pcov = curve_fit(
            f,
            t,
            y,
            p0=p0,
            sigma=y,
            bounds=(np.zeros(3), np.array([np.inf, np.inf, 100.0])),
            maxfev=20000,
        )
    except RuntimeError as exc:
        raise NumericalFailure(f"TLS fit failed: {exc}") from exc
    residual = float(np.linalg.norm(f(t, *popt) - y))
    if not np.all(np.isfinite(popt)):
        raise NumericalFailure("TLS fit produced non-finite parameters")
    return TlsFitParams(
        f_delta0=float(popt[0]),
        r_res=float(popt[1]),
        beta=float(popt[2]),
        g_factor=g_factor,
        f0=f0,
        covariance=pcov,
        residual=residual,
    )


@dataclass(frozen=True)
class ExpFitResult:
    amplitude: float
    tau: float
    offset: float
    covariance: np.ndarray
    residual: float

    def __iter__(self):
        yield from (self.amplitude, self.tau, self.offset, self.covariance)


def exp_decay_fit(t_values: Sequence[float], y_values: Sequence[float]) -> ExpFitResult:
    """Single-exponential fit y = A exp(-t/tau) + C.

    Initial guesses come from the endpoint levels and a log-linear slope
    estimate.  Raises :class:`NumericalFailure` for non-decaying input.
    """
    t = np.asarray(t_values, dtype=float)
    y = np.asarray(y_values, dtype=float)
    if t.size < 5:
        raise ValueError("need at least 5 samples for a ringdown fit")
    if t.size != y.size:
        raise ValueError("time and signal arrays differ in length")

    c0 = float(y[-3:].mean())
    a0 = float(y[0] - c0)
    if abs(a0) < 1e-300:
        raise NumericalFailure("signal has no decaying component")
    shifted = (y - c0) / a0
    positive = shifted > 1e-6
    if positive.sum() >= 2:
        slope = np.polyfit(t[positive], np.log(shifted[positive]), 1)[0]
        tau0 = -1.0 / slope if slope < 0 else (t[-1] - t[0])
    else:
        tau0 = (t[-1] - t[0]) / 3.0
    tau0 = abs(tau0) or (t[-1] - t[0])

    def f(tt, a, tau, c):
        return a * np.exp(-tt / tau) + c

    try:
        with warnings.catch_warnings():
            # exact traces leave the covariance singular; it is reported as-is
            warnings.simplefilter("ignore", OptimizeWarning)
            popt, pcov = curve_fit(f, t, y, p0=(a0, tau0, c0), maxfev=20000)
    except RuntimeError as exc:
        raise NumericalFailure(f"exponential fit failed: {exc}") from exc
    if popt[0] <= 0 or popt[1] <= 0 or not np.all(np.isfinite(popt)):
        raise NumericalFailure(
            "signal does not decay (no positive amplitude and time constant)",
            diagnostics={"params": popt},
        )
    residual = float(np.linalg.norm(f(t, *popt) - y))
    return ExpFitResult(
        amplitude=float(popt[0]),
        tau=float(popt[1]),
        offset=float(popt[2]),
        covariance=pcov,
        residual=residual,
    )
