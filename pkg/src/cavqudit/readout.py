"""Three-state transmon readout: error model, fitting, and correction.

The measured assignment (confusion) matrix is decomposed into two physical
pieces: transmon relaxation during the readout pulse (e -> g and f -> e,
one Bernoulli event per level, no double decay) followed by a symmetric
classification error between adjacent label pairs.  The split matters for
feedforward protocols because relaxation errors change the post-measurement
state while classification errors only corrupt the label.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import least_squares

from .errors import NumericalFailure
from .lindblad import DissipatorBank, NoisyRotation
from .params import SystemParams
from .spaces import HilbertSpace

__all__ = [
    "GEF_LABELS",
    "ConfusionMatrix",
    "ReadoutModel",
    "symmetric_classifier",
    "relaxation_matrix",
    "readout_channel",
    "fit_readout_model",
    "CorrectedPopulations",
    "correct_populations",
    "dual_rail_map_channel",
    "DUAL_RAIL_DECODER",
    "DUAL_RAIL_MAP_REFERENCE",
    "measured_gef_confusion",
]

GEF_LABELS = ("g", "e", "f")

#: Reference single-shot confusion matrix of the cavity-to-transmon dual-rail
#: mapping (columns: prepared |00>, |10>, |01>).
DUAL_RAIL_MAP_REFERENCE = np.array(
    [
        [0.9959, 0.0491, 0.0100],
        [0.0018, 0.9467, 0.0172],
        [0.0022, 0.0042, 0.9728],
    ]
)

DUAL_RAIL_DECODER = {"g": "00", "e": "10", "f": "01"}


@dataclass(frozen=True)
class ConfusionMatrix:
    """Column-stochastic assignment matrix (columns = prepared state)."""

    matrix: np.ndarray
    labels: tuple[str, ...] = GEF_LABELS

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("confusion matrix must be square")
        if m.shape[0] != len(self.labels):
            raise ValueError("label count must match matrix dimension")
        if np.any(m < -1e-12) or np.any(m > 1 + 1e-12):
            raise ValueError("confusion matrix entries must lie in [0, 1]")
        colsums = m.sum(axis=0)
        if np.max(np.abs(colsums - 1.0)) > 1e-9:
            raise ValueError(f"columns must sum to 1, got {colsums}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def assignment_fidelity(self) -> float:
        """Mean of the diagonal (overall readout fidelity)."""
        return float(np.mean(np.diag(self.matrix)))

    def save_csv(self, path: str | Path, header: bool = True) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            if header:
                writer.writerow([f"prepared_{l}" for l in self.labels])
            for row in self.matrix:
                writer.writerow([f"{x:.10f}" for x in row])

    @classmethod
    def load_csv(cls, path: str | Path, labels: Sequence[str] | None = None) -> "ConfusionMatrix":
        rows = []
        with open(path, newline="") as fh:
            for record in csv.reader(fh):
                if not record:
                    continue
                try:
                    rows.append([float(x) for x in record])
                except ValueError:
                    continue  # header line
        m = np.array(rows, dtype=float)
        if labels is None:
            labels = GEF_LABELS if m.shape[0] == 3 else tuple(str(i) for i in range(m.shape[0]))
        return cls(m, tuple(labels))


def symmetric_classifier(c_ge: float, c_ef: float, c_gf: float = 0.0) -> np.ndarray:
    """Symmetric misassignment matrix between adjacent label pairs.

    Off-diagonal entry (i, j) is the probability of assigning label i to a
    transmon found in level j; diagonal absorbs the remainder.
    """
    for name, v in (("c_ge", c_ge), ("c_ef", c_ef), ("c_gf", c_gf)):
        if not 0.0 <= v <= 0.5:
            raise ValueError(f"{name} must lie in [0, 0.5], got {v}")
    return np.array(
        [
            [1.0 - c_ge - c_gf, c_ge, c_gf],
            [c_ge, 1.0 - c_ge - c_ef, c_ef],
            [c_gf, c_ef, 1.0 - c_ef - c_gf],
        ]
    )


def relaxation_matrix(p_eg: float, p_fe: float) -> np.ndarray:
    """Level-occupation transfer from relaxation during the readout pulse."""
    return np.array(
        [
            [1.0, p_eg, 0.0],
            [0.0, 1.0 - p_eg, p_fe],
            [0.0, 0.0, 1.0 - p_fe],
        ]
    )


@dataclass(frozen=True)
class ReadoutModel:
    """Relaxation-then-classification model of the three-state readout."""

    p_eg: float
    p_fe: float
    classifier: np.ndarray
    duration: float = 1.7e-6

    def __post_init__(self):
        if not 0.0 <= self.p_eg <= 1.0 or not 0.0 <= self.p_fe <= 1.0:
            raise ValueError("relaxation probabilities must lie in [0, 1]")
        c = np.array(self.classifier, dtype=float)
        if c.shape != (3, 3) or np.max(np.abs(c.sum(axis=0) - 1.0)) > 1e-9:
            raise ValueError("classifier must be a 3x3 column-stochastic matrix")
        c.setflags(write=False)
        object.__setattr__(self, "classifier", c)

    @classmethod
    def ideal(cls, duration: float = 1.7e-6) -> "ReadoutModel":
        return cls(0.0, 0.0, np.eye(3), duration)

    def predicted_confusion(self) -> ConfusionMatrix:
        return ConfusionMatrix(self.classifier @ relaxation_matrix(self.p_eg, self.p_fe))

    def relaxation_kraus(self) -> list[np.ndarray]:
        """Kraus operators of the relaxation step on the transmon factor."""
        k0 = np.diag([1.0, math.sqrt(1.0 - self.p_eg), math.sqrt(1.0 - self.p_fe)]).astype(complex)
        k1 = np.zeros((3, 3), dtype=complex)
        k1[0, 1] = math.sqrt(self.p_eg)
        k2 = np.zeros((3, 3), dtype=complex)
        k2[1, 2] = math.sqrt(self.p_fe)
        return [k0, k1, k2]


def readout_channel(
    model: ReadoutModel,
    rho: np.ndarray,
    space: HilbertSpace,
    *,
    transmon: str | int = "transmon",
    idle_jumps: Iterable | None = None,
) -> list[tuple[str, float, np.ndarray]]:
    """Measure the transmon, returning ``(label, probability, post-state)``.

    The physical sequence is relaxation during the pulse, projection onto
    the transmon levels, then label assignment with classification errors;
    the post-state for a label is the corresponding mixture over true
    levels.  ``idle_jumps`` (typically the cavity decay and dephasing
    operators) act for ``model.duration`` on every branch.
    """
    t_idx = space.subsystem_index(transmon) if isinstance(transmon, str) else transmon
    if space.dims[t_idx] != 3:
        raise ValueError("three-state readout requires a 3-level transmon factor")

    out = np.asarray(rho, dtype=complex)
    kraus = [space.embed(k, t_idx) for k in model.relaxation_kraus()]
    out = sum(k @ out @ k.conj().T for k in kraus)

    projections = []
    for level in range(3):
        p_op = space.projector(t_idx, level)
        branch = p_op @ out @ p_op
        prob = float(np.trace(branch).real)
        projections.append((prob, branch))

    bank = DissipatorBank(idle_jumps or [])
    results = []
    for li, label in enumerate(GEF_LABELS):
        prob = 0.0
        state = np.zeros_like(out)
        for level in range(3):
            q, branch = projections[level]
            weight = model.classifier[li, level]
            if weight == 0.0 or q <= 0.0:
                continue
            prob += weight * q
            state = state + weight * branch
        if prob > 0.0:
            state = state / prob
            if bank.n_jumps and model.duration > 0:
                state = bank.exp_apply(state, model.duration)
        results.append((label, prob, state))
    return results


def _model_from_vector(x: np.ndarray, duration: float) -> ReadoutModel:
    p_eg, p_fe, c_ge, c_ef, c_gf = x
    return ReadoutModel(p_eg, p_fe, symmetric_classifier(c_ge, c_ef, c_gf), duration)


def fit_readout_model(
    measured: ConfusionMatrix | np.ndarray,
    duration: float = 1.7e-6,
) -> tuple[ReadoutModel, float]:
    """Fit relaxation + symmetric-classification parameters to a measured matrix.

    Returns the model and the Frobenius-norm residual.  Raises
    :class:`NumericalFailure` carrying the best-found model if the optimizer
    does not converge.
    """
    if not isinstance(measured, ConfusionMatrix):
        measured = ConfusionMatrix(np.asarray(measured, dtype=float))
    target = measured.matrix

    def residuals(x):
        m = _model_from_vector(x, duration).predicted_confusion().matrix
        return (m - target).ravel()

    x0 = np.array([0.005, 0.01, 0.002, 0.001, 0.0005])
    bounds = (np.zeros(5), np.array([0.5, 0.5, 0.4, 0.4, 0.4]))
    result = least_squares(
        residuals,
        x0,
        bounds=bounds,
        x_scale=np.full(5, 1e-2),
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
    )
    # polish: restart once from the found optimum (trf can stall early)
    result = least_squares(
        residuals,
        result.x,
        bounds=bounds,
        x_scale=np.full(5, 1e-2),
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
    )
    model = _model_from_vector(result.x, duration)
    residual = float(np.linalg.norm(residuals(result.x)))
    if not result.success:
        raise NumericalFailure(
            "readout-model fit did not converge",
            diagnostics={"model": model, "residual": residual, "message": result.message},
        )
    return model, residual


@dataclass(frozen=True)
class CorrectedPopulations:
    values: np.ndarray
    clipped: bool
    raw: np.ndarray


def correct_populations(
    measured_probs: Sequence[float],
    confusion: ConfusionMatrix | np.ndarray,
) -> CorrectedPopulations:
    """Invert the assignment matrix on a measured probability vector.

    Negative components of the raw solution are clipped to zero and the
    result renormalized; ``clipped`` flags when that happened.
    """
    m = confusion.matrix if isinstance(confusion, ConfusionMatrix) else np.asarray(confusion, float)
    probs = np.asarray(measured_probs, dtype=float)
    if probs.shape != (m.shape[0],):
        raise ValueError("probability vector length must match matrix dimension")
    if abs(np.linalg.det(m)) < 1e-12:
        raise ValueError("confusion matrix is singular; cannot correct")
    raw = np.linalg.solve(m, probs)
    clipped = bool(np.any(raw < -1e-12))
    values = np.clip(raw, 0.0, None)
    total = values.sum()
    if total <= 0:
        raise ValueError("corrected populations vanished after clipping")
    return CorrectedPopulations(values=values / total, clipped=clipped, raw=raw)


def dual_rail_map_channel(
    space: HilbertSpace,
    params: SystemParams,
    jumps: Iterable = (),
    *,
    sideband_time: float = 0.6e-6,
    transmon_pulse_time: float = 30e-9,
    m: int = 4,
):
    """Channel mapping dual-rail cavity states onto transmon levels.

    Sequence (transmon assumed reset to g): sideband pi on |g,1,0> <-> |f,0,0>,
    unselective pi on e <-> f, sideband pi on |g,0,1> <-> |f,0,0>.  Ideal
    pulses map |00> -> g, |10> -> e, |01> -> f; with jump operators supplied
    each pulse becomes a noisy rotation.  Returns ``(channel, decoder)``
    where ``channel(rho) -> rho`` and decoder maps transmon labels to
    dual-rail outcomes.
    """
    if space.dims[space.subsystem_index("transmon")] < 3:
        raise ValueError("dual-rail mapping needs a 3-level transmon")
    g10 = space.index((0, 1, 0))
    f00 = space.index((2, 0, 0))
    g01 = space.index((0, 0, 1))
    sb_a = NoisyRotation.two_level(space, g10, f00, math.pi, jumps, sideband_time, m)
    pi_ef = NoisyRotation.subsystem_pulse(space, "transmon", 1, 2, math.pi, jumps, transmon_pulse_time, m)
    sb_b = NoisyRotation.two_level(space, g01, f00, math.pi, jumps, sideband_time, m)

    def channel(rho: np.ndarray) -> np.ndarray:
        return sb_b(pi_ef(sb_a(rho)))

    return channel, dict(DUAL_RAIL_DECODER)


def measured_gef_confusion() -> ConfusionMatrix:
    """The stored measured three-state assignment matrix."""
    data = resources.files("cavqudit.data").joinpath("confusion_gef.csv").read_text()
    rows = []
    for record in csv.reader(io.StringIO(data)):
        if not record:
            continue
        try:
            rows.append([float(x) for x in record])
        except ValueError:
            continue
    return ConfusionMatrix(np.array(rows))
