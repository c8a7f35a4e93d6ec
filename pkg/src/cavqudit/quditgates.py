"""Two-qudit gate analysis: entangling power and variational synthesis.

The photon-exchange interaction conserves total photon number, so its
propagator restricted to the transmon ground state is block diagonal over
n_a + n_b sectors and acts as a nonlinear beamsplitter on two qudits.  This
module extracts that unitary, scores entangling power by the mean linear
entropy over Haar-random product states, and synthesizes target gates from
alternating layers of local SU(d) rotations and the entangler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import expm, polar
from scipy.optimize import minimize

from .errors import LeakageError
from .params import SystemParams
from .vrbs import VrbsConfig, build_vrbs_hamiltonian, calibrate_bs_time

__all__ = [
    "csum_gate",
    "TwoQuditUnitary",
    "extract_vrbs_unitary",
    "single_qudit_rotation",
    "decompose_single_qudit",
    "entangling_power",
    "gate_fidelity",
    "SynthesisConfig",
    "SynthesisResult",
    "synthesize",
    "synthesize_ladder",
]


def csum_gate(d: int = 3) -> np.ndarray:
    """Controlled-sum gate |m, n> -> |m, m + n mod d>."""
    u = np.zeros((d * d, d * d), dtype=complex)
    for m in range(d):
        for n in range(d):
            u[m * d + (m + n) % d, m * d + n] = 1.0
    return u


@dataclass(frozen=True)
class TwoQuditUnitary:
    """Unitary on a d x d two-qudit space with bookkeeping of its origin.

    ``leakage`` measures violations of the photon-number block structure
    (off-block matrix elements), which only appear when the underlying
    model or truncation is broken.  ``spread`` is the norm deficit of the
    projected block: virtual-level dressing plus, for beamsplitter-like
    gates, the physical spreading of upper sectors past (d-1) photons per
    mode, all of which the polar re-unitarization folds back in.
    """

    d: int
    matrix: np.ndarray
    leakage: float = 0.0  # photon-conservation violation (off-block magnitude)
    spread: float = 0.0  # norm deficit of the projected block before re-unitarization
    gate_time: float | None = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (self.d**2, self.d**2):
            raise ValueError("matrix must be d^2 x d^2")
        defect = np.max(np.abs(m.conj().T @ m - np.eye(self.d**2)))
        if defect > 1e-10:
            raise ValueError(f"matrix is not unitary (defect {defect:.2e})")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


def extract_vrbs_unitary(
    config: VrbsConfig,
    params: SystemParams,
    gate_time: float | None = None,
    d: int = 3,
    *,
    leakage_limit: float = 1e-2,
) -> TwoQuditUnitary:
    """Noiseless photon-exchange propagator projected onto two qudits.

    The full propagator is computed at cavity cutoffs d + 1 (so d-photon
    sectors keep their leakage channel), projected onto the transmon-ground,
    at most (d-1)-photons-per-mode block, and re-unitarized by polar
    decomposition.  ``gate_time`` defaults to the 50:50 beamsplitter time.
    """
    cfg = config.replace(cutoff_a=max(config.cutoff_a, d + 1), cutoff_b=max(config.cutoff_b, d + 1))
    if gate_time is None:
        gate_time = calibrate_bs_time(cfg, params)
    space, h = build_vrbs_hamiltonian(cfg, params)
    u_full = expm(-1j * h * gate_time)

    rows = [space.index((0, na, nb)) for na in range(d) for nb in range(d)]
    block = u_full[np.ix_(rows, rows)]
    spread = float(np.linalg.norm(block.conj().T @ block - np.eye(d * d), 2))
    unitary, _ = polar(block)
    sector = np.array([na + nb for na in range(d) for nb in range(d)])
    off_mask = sector[:, None] != sector[None, :]
    leakage = float(
        max(np.max(np.abs(block[off_mask])), np.max(np.abs(unitary[off_mask])))
    )
    if leakage > leakage_limit:
        raise LeakageError(
            f"photon-number block structure violated at {leakage:.3e}; "
            "raise the cutoffs or adjust the gate time"
        )
    return TwoQuditUnitary(
        d=d, matrix=unitary, leakage=leakage, spread=spread, gate_time=float(gate_time)
    )


# ---------------------------------------------------------------------------
# SU(d) parameterization


def _givens(d: int, j: int, k: int, theta: float, phi: float) -> np.ndarray:
    g = np.eye(d, dtype=complex)
    c, s = math.cos(theta), math.sin(theta)
    g[j, j] = c
    g[k, k] = c
    g[k, j] = s * np.exp(1j * phi)
    g[j, k] = -s * np.exp(-1j * phi)
    return g


def _pairs(d: int) -> list[tuple[int, int]]:
    return [(j, k) for j in range(d - 1) for k in range(j + 1, d)]


def single_qudit_rotation(d: int, angles: Sequence[float]) -> np.ndarray:
    """SU(d) element from d^2 - 1 angles (Givens factors plus phases).

    Layout: 2 angles (theta, phi) per index pair in lexicographic order,
    then d - 1 diagonal phases (last level balances the determinant).  All
    zeros gives the identity; the factorization reaches every SU(d) element
    up to global phase.
    """
    angles = np.asarray(angles, dtype=float)
    expected = d * d - 1
    if angles.shape != (expected,):
        raise ValueError(f"need {expected} angles for SU({d}), got {angles.shape}")
    pairs = _pairs(d)
    u = np.eye(d, dtype=complex)
    for idx, (j, k) in enumerate(pairs):
        u = u @ _givens(d, j, k, angles[2 * idx], angles[2 * idx + 1])
    lambdas = angles[2 * len(pairs):]
    phases = np.concatenate([lambdas, [-float(np.sum(lambdas))]])
    return u @ np.diag(np.exp(1j * phases))


def decompose_single_qudit(u: np.ndarray) -> np.ndarray:
    """Angles reproducing ``u`` up to global phase (inverse of the above).

    Works by Givens triangularization: right-multiplying by inverse factors
    reduces ``u`` to a diagonal of phases.
    """
    u = np.asarray(u, dtype=complex)
    d = u.shape[0]
    if u.shape != (d, d) or np.max(np.abs(u.conj().T @ u - np.eye(d))) > 1e-9:
        raise ValueError("input must be unitary")
    # normalize determinant into SU(d)
    det = np.linalg.det(u)
    u = u * np.exp(-1j * np.angle(det) / d)
    # Left-eliminating the (k, j) entries in lexicographic pair order peels
    # the Givens factors off in exactly the layout single_qudit_rotation
    # rebuilds: u = G_{01} G_{02} ... G_{(d-2)(d-1)} D.
    residual = u.copy()
    out: list[float] = []
    for j, k in _pairs(d):
        a = residual[j, j]
        b = residual[k, j]
        if abs(b) < 1e-15:
            theta, phi = 0.0, 0.0
        else:
            theta = math.atan2(abs(b), abs(a))
            phi = float(np.angle(b) - np.angle(a))
            g = _givens(d, j, k, theta, phi)
            residual = g.conj().T @ residual
        out.extend((theta, phi))
    diag = np.angle(np.diag(residual))
    out.extend(diag[:-1])
    return np.array(out, dtype=float)


# ---------------------------------------------------------------------------
# entangling power


def entangling_power(
    u: np.ndarray | TwoQuditUnitary,
    n_samples: int = 100_000,
    seed: int = 0,
    *,
    batch: int = 20_000,
) -> tuple[float, float]:
    """Mean linear entropy of ``u`` acting on Haar-random product states.

    E = 1 - Tr(rho_1^2) averaged over |psi_1> (x) |psi_2| with each factor
    drawn from normalized complex Gaussians.  Returns (mean, standard
    error of the mean).
    """
    if isinstance(u, TwoQuditUnitary):
        u = u.matrix
    u = np.asarray(u, dtype=complex)
    dsq = u.shape[0]
    d = int(round(math.isqrt(dsq)))
    if d * d != dsq:
        raise ValueError("unitary must act on a d x d product space")
    if n_samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n_samples:
        nb = min(batch, n_samples - done)
        psi1 = rng.standard_normal((nb, d)) + 1j * rng.standard_normal((nb, d))
        psi2 = rng.standard_normal((nb, d)) + 1j * rng.standard_normal((nb, d))
        psi1 /= np.linalg.norm(psi1, axis=1, keepdims=True)
        psi2 /= np.linalg.norm(psi2, axis=1, keepdims=True)
        product = np.einsum("bi,bj->bij", psi1, psi2).reshape(nb, dsq)
        out = product @ u.T
        m = out.reshape(nb, d, d)
        rho1 = m @ m.conj().transpose(0, 2, 1)
        purity = np.einsum("bij,bji->b", rho1, rho1).real
        e = 1.0 - purity
        total += float(e.sum())
        total_sq += float((e**2).sum())
        done += nb
    mean = total / n_samples
    var = max(total_sq / n_samples - mean**2, 0.0)
    stderr = math.sqrt(var / n_samples)
    return mean, stderr


def gate_fidelity(u: np.ndarray, v: np.ndarray) -> float:
    """Global-phase-invariant overlap |Tr(v^dag u)|^2 / D^2."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if u.shape != v.shape or u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError("unitaries must share a square shape")
    dim = u.shape[0]
    return float(abs(np.trace(v.conj().T @ u)) ** 2 / dim**2)


# ---------------------------------------------------------------------------
# synthesis


@dataclass(frozen=True)
class SynthesisConfig:
    restarts: int = 32
    seed: int = 0
    maxiter: int = 600
    refine_rounds: int = 3
    refine_scale: float = 0.15
    target_infidelity: float = 1e-9


@dataclass(frozen=True)
class SynthesisResult:
    n_blocks: int
    angles: np.ndarray
    fidelity: float
    restart_fidelities: tuple[float, ...]
    n_evaluations: int


def _rotation_factors(d: int, angles: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    pairs = _pairs(d)
    factors = [
        _givens(d, j, k, angles[2 * i], angles[2 * i + 1]) for i, (j, k) in enumerate(pairs)
    ]
    lambdas = angles[2 * len(pairs):]
    phases = np.concatenate([lambdas, [-float(np.sum(lambdas))]])
    return factors, np.exp(1j * phases)


def _rotation_and_derivatives(d: int, angles: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Local rotation and its derivative w.r.t. each of the d^2 - 1 angles."""
    pairs = _pairs(d)
    m = len(pairs)
    factors, diag = _rotation_factors(d, angles)
    prefixes = [np.eye(d, dtype=complex)]
    for g in factors:
        prefixes.append(prefixes[-1] @ g)
    suffixes = [np.eye(d, dtype=complex)]
    for g in reversed(factors):
        suffixes.append(g @ suffixes[-1])
    suffixes.reverse()  # suffixes[i] = G_i ... G_{m-1}
    u = prefixes[m] * diag[np.newaxis, :]

    derivs: list[np.ndarray] = []
    for i, (j, k) in enumerate(pairs):
        theta, phi = angles[2 * i], angles[2 * i + 1]
        c, s = math.cos(theta), math.sin(theta)
        ep, em = np.exp(1j * phi), np.exp(-1j * phi)
        dg_t = np.zeros((d, d), dtype=complex)
        dg_t[j, j] = -s
        dg_t[k, k] = -s
        dg_t[k, j] = c * ep
        dg_t[j, k] = -c * em
        dg_p = np.zeros((d, d), dtype=complex)
        dg_p[k, j] = 1j * s * ep
        dg_p[j, k] = 1j * s * em
        tail = suffixes[i + 1] * diag[np.newaxis, :]
        derivs.append(prefixes[i] @ dg_t @ tail)
        derivs.append(prefixes[i] @ dg_p @ tail)
    for lam in range(d - 1):
        gen = np.zeros(d, dtype=complex)
        gen[lam] = 1j
        gen[d - 1] = -1j
        derivs.append(prefixes[m] * (gen * diag)[np.newaxis, :])
    return u, derivs


def _circuit(entangler: np.ndarray, d: int, n_blocks: int, angles: np.ndarray) -> np.ndarray:
    per = d * d - 1
    u = np.kron(
        single_qudit_rotation(d, angles[0:per]),
        single_qudit_rotation(d, angles[per:2 * per]),
    )
    for i in range(1, n_blocks + 1):
        a = angles[2 * per * i: 2 * per * i + per]
        b = angles[2 * per * i + per: 2 * per * (i + 1)]
        local = np.kron(single_qudit_rotation(d, a), single_qudit_rotation(d, b))
        u = u @ entangler @ local
    return u


def _infidelity_and_gradient(
    entangler: np.ndarray,
    target_dag: np.ndarray,
    d: int,
    n_blocks: int,
    angles: np.ndarray,
) -> tuple[float, np.ndarray]:
    """1 - F and its analytic gradient via prefix/suffix circuit products."""
    per = d * d - 1
    n_layers = n_blocks + 1
    dsq = d * d
    rots = []
    for layer in range(n_layers):
        a = angles[2 * per * layer: 2 * per * layer + per]
        b = angles[2 * per * layer + per: 2 * per * (layer + 1)]
        ua, da = _rotation_and_derivatives(d, a)
        ub, db = _rotation_and_derivatives(d, b)
        rots.append((ua, da, ub, db))

    locals_ = [np.kron(r[0], r[2]) for r in rots]
    # prefix up to (excluding) layer i's local, suffix after it
    prefixes = [np.eye(dsq, dtype=complex)]
    for i in range(n_layers):
        step = locals_[i] if i == 0 else entangler @ locals_[i]
        prefixes.append(prefixes[-1] @ step)
    u = prefixes[-1]
    suffixes = [np.eye(dsq, dtype=complex)]
    for i in range(n_layers - 1, 0, -1):
        suffixes.append(entangler @ locals_[i] @ suffixes[-1])
    suffixes.append(None)  # unused slot to align indexing
    suffixes = suffixes[::-1]

    trace = np.trace(target_dag @ u)
    dim = dsq
    fid = abs(trace) ** 2 / dim**2

    grad = np.empty(angles.size)
    for layer in range(n_layers):
        ua, da, ub, db = rots[layer]
        pre = prefixes[layer] @ entangler if layer > 0 else prefixes[layer]
        suf = suffixes[layer + 1] if layer + 1 < len(suffixes) else np.eye(dsq, dtype=complex)
        # M such that dT = Tr(M @ (dA (x) B)) for this layer
        m_mat = (suf @ target_dag @ pre).reshape(d, d, d, d)
        base = 2.0 / dim**2
        for p_idx, dua in enumerate(da):
            dtrace = np.einsum("ikjl,ji,lk->", m_mat, dua, ub)
            grad[2 * per * layer + p_idx] = -base * (np.conj(trace) * dtrace).real
        for p_idx, dub in enumerate(db):
            dtrace = np.einsum("ikjl,ji,lk->", m_mat, ua, dub)
            grad[2 * per * layer + per + p_idx] = -base * (np.conj(trace) * dtrace).real
    return 1.0 - fid, grad


def synthesize(
    target: np.ndarray,
    entangler: np.ndarray | TwoQuditUnitary,
    n_blocks: int,
    config: SynthesisConfig = SynthesisConfig(),
    *,
    warm_start: np.ndarray | None = None,
) -> SynthesisResult:
    """Fit alternating local-rotation / entangler layers to a target gate.

    Gradient-based local search from ``restarts`` seeded random starts (plus
    the zero vector and any warm start), followed by perturbation-refinement
    rounds around the best solution.  Deterministic for a given seed.
    """
    if isinstance(entangler, TwoQuditUnitary):
        entangler = entangler.matrix
    entangler = np.asarray(entangler, dtype=complex)
    target = np.asarray(target, dtype=complex)
    if n_blocks < 1:
        raise ValueError("n_blocks must be >= 1")
    dsq = target.shape[0]
    d = int(round(math.isqrt(dsq)))
    per = d * d - 1
    n_params = 2 * per * (n_blocks + 1)
    rng = np.random.default_rng(config.seed)
    evaluations = 0
    target_dag = target.conj().T

    def objective(x: np.ndarray) -> tuple[float, np.ndarray]:
        nonlocal evaluations
        evaluations += 1
        return _infidelity_and_gradient(entangler, target_dag, d, n_blocks, x)

    starts = [np.zeros(n_params)]
    if warm_start is not None:
        if warm_start.size > n_params:
            raise ValueError("warm start has more parameters than the ansatz")
        padded = np.zeros(n_params)
        padded[: warm_start.size] = warm_start
        starts.append(padded)
    for _ in range(config.restarts):
        starts.append(rng.uniform(-math.pi, math.pi, size=n_params))

    opts = {"maxiter": config.maxiter, "ftol": 1e-16, "gtol": 1e-12}
    best_x = None
    best_f = math.inf
    restart_fids = []
    for x0 in starts:
        res = minimize(objective, x0, method="L-BFGS-B", jac=True, options=opts)
        restart_fids.append(1.0 - res.fun)
        if res.fun < best_f:
            best_f = res.fun
            best_x = res.x
        if best_f < config.target_infidelity:
            break

    for round_idx in range(config.refine_rounds):
        if best_f < config.target_infidelity:
            break
        scale = config.refine_scale / (2.0**round_idx)
        for _ in range(4):
            x0 = best_x + rng.normal(scale=scale, size=n_params)
            res = minimize(objective, x0, method="L-BFGS-B", jac=True, options=opts)
            if res.fun < best_f:
                best_f = res.fun
                best_x = res.x

    return SynthesisResult(
        n_blocks=n_blocks,
        angles=best_x,
        fidelity=1.0 - best_f,
        restart_fidelities=tuple(restart_fids),
        n_evaluations=evaluations,
    )


def synthesize_ladder(
    target: np.ndarray,
    entangler: np.ndarray | TwoQuditUnitary,
    blocks: Sequence[int],
    config: SynthesisConfig = SynthesisConfig(),
) -> list[SynthesisResult]:
    """Synthesis over increasing block counts, warm-starting each from the last."""
    results: list[SynthesisResult] = []
    warm = None
    for n in blocks:
        res = synthesize(target, entangler, n, config, warm_start=warm)
        results.append(res)
        warm = res.angles
    return results
