"""Master-equation engine: generators, noisy rotation channels, integrators.

Three evolution paths are provided:

* :func:`lindbladian_matrix` builds the dense d^2 x d^2 generator whose
  exponential is the exact-propagator oracle for everything else.
* :class:`NoisyRotation` implements a two-level rotation interleaved with
  dissipation by second-order symmetric splitting: each of the ``m`` slices
  applies half the rotation, the exact dissipative step for one slice
  duration, then the other half rotation.  Every factor is completely
  positive, so the composed channel is CPTP to machine precision while
  retaining the O(1/m^2) splitting error of the underlying scheme.
* :func:`evolve` integrates the (optionally driven) master equation with a
  fixed-step RK4 rule by default, an adaptive method on request, or exact
  exponentiation for static generators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.linalg import expm
from scipy.integrate import solve_ivp

from .errors import NumericalFailure
from .noise import JumpOperator
from .spaces import (
    HilbertSpace,
    Superoperator,
    dissipator_matrix,
    rotation_unitary,
    unitary_superoperator,
    unvec,
    vec,
)

__all__ = [
    "Lindbladian",
    "lindbladian_matrix",
    "DissipatorBank",
    "NoisyRotation",
    "noisy_rotation",
    "rotation_generator",
    "DrivenHamiltonian",
    "EvolveResult",
    "evolve",
]

_MAX_EXPM_DIM = 80  # d^2 x d^2 dense exponentials beyond this are impractical


def _as_matrices(jumps: Iterable) -> list[np.ndarray]:
    out = []
    for j in jumps:
        if isinstance(j, JumpOperator):
            out.append(j.matrix)
        else:
            out.append(np.asarray(j, dtype=complex))
    return out


@dataclass(frozen=True)
class Lindbladian:
    """Static Hamiltonian (rad/s) plus jump operators."""

    hamiltonian: np.ndarray
    jumps: tuple

    def __init__(self, hamiltonian, jumps=()):
        h = np.array(hamiltonian, dtype=complex)
        herm = np.max(np.abs(h - h.conj().T)) if h.size else 0.0
        if herm > 1e-12 * max(1.0, float(np.max(np.abs(h)))):
            raise ValueError(f"Hamiltonian is not Hermitian (deviation {herm:.3e})")
        h.setflags(write=False)
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "jumps", tuple(_as_matrices(jumps)))

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def matrix(self) -> np.ndarray:
        return _generator_matrix(self.hamiltonian, self.jumps)


def _generator_matrix(h: np.ndarray, jumps: Sequence[np.ndarray]) -> np.ndarray:
    d = h.shape[0]
    eye = np.eye(d, dtype=complex)
    gen = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for a in jumps:
        if a.shape != (d, d):
            raise ValueError("jump operator dimension mismatch")
        gen += dissipator_matrix(a)
    return gen


def lindbladian_matrix(lind: Lindbladian) -> Superoperator:
    """Dense generator; ``expm(L t)`` applied to vec(rho) solves the dynamics."""
    if lind.dim > _MAX_EXPM_DIM:
        raise ValueError(
            f"dense superoperator for dim {lind.dim} would be "
            f"{lind.dim ** 2} x {lind.dim ** 2}; refusing"
        )
    return Superoperator(lind.matrix())


class DissipatorBank:
    """Batched application of a fixed set of jump operators.

    ``exp_apply`` evaluates ``expm(dt * sum_k D[A_k])`` acting on a state by
    a norm-controlled Taylor series with substepping, which is exact to
    machine precision for the step sizes used here and never materializes
    the d^2 x d^2 matrix.
    """

    def __init__(self, jumps: Iterable):
        mats = _as_matrices(jumps)
        self.n_jumps = len(mats)
        if mats:
            self._a = np.stack(mats)
            self._adag = self._a.conj().transpose(0, 2, 1)
            self._ada_sum = np.einsum("kij,kjl->il", self._adag, self._a)
            self.rate_scale = float(np.linalg.norm(self._ada_sum, 2))
        else:
            self._a = None
            self._ada_sum = None
            self.rate_scale = 0.0

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """sum_k D[A_k] rho."""
        if self._a is None:
            return np.zeros_like(rho)
        sandwich = (self._a @ rho @ self._adag).sum(axis=0)
        return sandwich - 0.5 * (self._ada_sum @ rho + rho @ self._ada_sum)

    def exp_apply(self, rho: np.ndarray, dt: float) -> np.ndarray:
        if self._a is None or dt == 0.0:
            return rho
        substeps = max(1, int(math.ceil(abs(dt) * self.rate_scale / 0.25)))
        h = dt / substeps
        out = rho
        for _ in range(substeps):
            term = out
            acc = out
            scale = float(np.max(np.abs(acc))) or 1.0
            for order in range(1, 60):
                term = (h / order) * self.apply(term)
                acc = acc + term
                if float(np.max(np.abs(term))) <= 1e-17 * scale:
                    break
            else:  # pragma: no cover
                raise NumericalFailure("dissipative Taylor step did not converge")
            out = acc
        return out

    def matrix(self, dim: int) -> np.ndarray:
        gen = np.zeros((dim * dim, dim * dim), dtype=complex)
        if self._a is not None:
            for a in self._a:
                gen += dissipator_matrix(a)
        return gen


class NoisyRotation:
    """Two-level rotation interleaved with dissipation (symmetric splitting).

    The unitary part may act on a global index pair or, via
    :meth:`subsystem_pulse`, on one subsystem unselectively (broadband
    transmon pulses).  ``apply`` propagates a density matrix directly;
    ``superoperator`` materializes the channel matrix for small spaces.
    """

    def __init__(
        self,
        space: HilbertSpace,
        half_unitary: np.ndarray,
        jumps: Iterable,
        gate_time: float,
        m: int = 4,
        label: str = "",
    ):
        if m < 1:
            raise ValueError("trotter step count m must be >= 1")
        if gate_time < 0:
            raise ValueError("gate_time must be non-negative")
        self.space = space
        self.m = int(m)
        self.gate_time = float(gate_time)
        self.label = label
        self._half_u = np.asarray(half_unitary, dtype=complex)
        self._half_u_dag = self._half_u.conj().T
        self._bank = DissipatorBank(jumps)

    @classmethod
    def two_level(
        cls,
        space: HilbertSpace,
        j: int,
        k: int,
        theta: float,
        jumps: Iterable,
        gate_time: float,
        m: int = 4,
    ) -> "NoisyRotation":
        if m < 1:
            raise ValueError("trotter step count m must be >= 1")
        half = rotation_unitary(space, j, k, theta / (2.0 * m))
        return cls(space, half, jumps, gate_time, m, label=f"R[{j},{k}]({theta:.3f})")

    @classmethod
    def subsystem_pulse(
        cls,
        space: HilbertSpace,
        subsystem: str | int,
        j: int,
        k: int,
        theta: float,
        jumps: Iterable,
        gate_time: float,
        m: int = 4,
    ) -> "NoisyRotation":
        """Unselective rotation between two levels of one subsystem."""
        if m < 1:
            raise ValueError("trotter step count m must be >= 1")
        d = space.dims[space.subsystem_index(subsystem) if isinstance(subsystem, str) else subsystem]
        local = rotation_unitary(d, j, k, theta / (2.0 * m))
        half = space.embed(local, subsystem)
        return cls(space, half, jumps, gate_time, m, label=f"pulse[{subsystem}:{j},{k}]")

    def apply(self, rho: np.ndarray) -> np.ndarray:
        dt = self.gate_time / self.m
        out = np.asarray(rho, dtype=complex)
        for _ in range(self.m):
            out = self._half_u @ out @ self._half_u_dag
            out = self._bank.exp_apply(out, dt)
            out = self._half_u @ out @ self._half_u_dag
        return out

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return self.apply(rho)

    def superoperator(self) -> Superoperator:
        dim = self.space.dim
        if dim > _MAX_EXPM_DIM:
            raise ValueError(f"refusing to materialize superoperator at dim {dim}")
        half = unitary_superoperator(self._half_u)
        if self._bank.n_jumps:
            diss = expm(self._bank.matrix(dim) * (self.gate_time / self.m))
        else:
            diss = np.eye(dim * dim, dtype=complex)
        step = half @ diss @ half
        return Superoperator(np.linalg.matrix_power(step, self.m))


def noisy_rotation(
    space: HilbertSpace,
    j: int,
    k: int,
    theta: float,
    noise: Iterable,
    gate_time: float,
    m: int = 4,
) -> Superoperator:
    """Channel of a noisy two-level rotation between global indices j, k."""
    return NoisyRotation.two_level(space, j, k, theta, noise, gate_time, m).superoperator()


def rotation_generator(space: HilbertSpace | int, j: int, k: int, theta: float, gate_time: float) -> np.ndarray:
    """Hermitian H with ``expm(-i H t) = R_jk(theta)`` at ``t = gate_time``.

    Used as the constant-amplitude Hamiltonian in exact-propagator oracles.
    """
    dim = space.dim if isinstance(space, HilbertSpace) else int(space)
    if gate_time <= 0:
        raise ValueError("gate_time must be positive")
    g = np.zeros((dim, dim), dtype=complex)
    g[k, j] = 1.0
    g[j, k] = -1.0
    return 1j * (theta / (2.0 * gate_time)) * g


@dataclass(frozen=True)
class DrivenHamiltonian:
    """Static Hamiltonian plus cosine drive terms.

    Each drive is ``(operator, amplitude, frequency, phase)`` contributing
    ``amplitude * cos(frequency * t + phase) * operator`` with the operator
    Hermitian, so H(t) is Hermitian at all times.
    """

    static: np.ndarray
    drives: tuple

    def __init__(self, static, drives=()):
        h = np.array(static, dtype=complex)
        if np.max(np.abs(h - h.conj().T)) > 1e-12 * max(1.0, float(np.max(np.abs(h))) or 1.0):
            raise ValueError("static Hamiltonian must be Hermitian")
        checked = []
        for op, amp, freq, phase in drives:
            op = np.array(op, dtype=complex)
            if np.max(np.abs(op - op.conj().T)) > 1e-12 * max(1.0, float(np.max(np.abs(op)))):
                raise ValueError("drive operators must be Hermitian")
            op.setflags(write=False)
            checked.append((op, float(amp), float(freq), float(phase)))
        h.setflags(write=False)
        object.__setattr__(self, "static", h)
        object.__setattr__(self, "drives", tuple(checked))

    @property
    def dim(self) -> int:
        return self.static.shape[0]

    def max_drive_frequency(self) -> float:
        return max((abs(f) for _, _, f, _ in self.drives), default=0.0)

    def __call__(self, t: float) -> np.ndarray:
        h = self.static.copy()
        for op, amp, freq, phase in self.drives:
            h = h + amp * math.cos(freq * t + phase) * op
        return h


@dataclass(frozen=True)
class EvolveResult:
    times: np.ndarray
    states: list

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def _resolve_hamiltonian(hamiltonian) -> tuple[Callable[[float], np.ndarray], bool, float]:
    """Return (H(t) callable, is_static, max drive frequency in rad/s)."""
    if isinstance(hamiltonian, DrivenHamiltonian):
        if not hamiltonian.drives:
            h0 = hamiltonian.static
            return (lambda t: h0), True, 0.0
        return hamiltonian, False, hamiltonian.max_drive_frequency()
    if callable(hamiltonian):
        return hamiltonian, False, 0.0
    h0 = np.asarray(hamiltonian, dtype=complex)
    return (lambda t: h0), True, 0.0


def evolve(
    hamiltonian,
    jumps: Iterable,
    rho0: np.ndarray,
    t_span: float,
    *,
    t_eval: Sequence[float] | None = None,
    dt: float | None = None,
    rtol: float | None = None,
    method: str | None = None,
) -> EvolveResult:
    """Integrate ``drho/dt = -i[H(t), rho] + sum_k D[A_k] rho``.

    Parameters
    ----------
    hamiltonian : ndarray, DrivenHamiltonian or callable t -> ndarray
    jumps : iterable of jump operators (ndarray or JumpOperator)
    rho0 : initial density matrix
    t_span : total evolution time (s); may be zero
    t_eval : sample times (defaults to ``[0, t_span]``)
    dt : fixed RK4 step; defaults to a fiftieth of the fastest drive period,
        or ``t_span / 1000`` for undriven problems
    rtol : switch to an adaptive integrator at this relative tolerance
    method : "rk4" (default), "adaptive", or "expm" (static generators only)
    """
    if t_span < 0:
        raise ValueError("t_span must be non-negative")
    rho0 = np.asarray(rho0, dtype=complex)
    dim = rho0.shape[0]
    h_of_t, static, max_freq = _resolve_hamiltonian(hamiltonian)
    bank = DissipatorBank(jumps)

    if method is None:
        method = "adaptive" if rtol is not None else "rk4"
    if t_eval is None:
        t_eval = np.array([0.0, t_span]) if t_span > 0 else np.array([0.0])
    t_eval = np.asarray(t_eval, dtype=float)
    if t_eval.size == 0 or t_eval[0] < 0 or (t_eval.size > 1 and np.any(np.diff(t_eval) <= 0)):
        raise ValueError("t_eval must be non-empty and strictly increasing from >= 0")

    if method == "expm":
        if not static:
            raise ValueError("expm path requires a static Hamiltonian")
        if dim > _MAX_EXPM_DIM:
            raise ValueError(f"expm path impractical at dim {dim}")
        gen = _generator_matrix(h_of_t(0.0), _as_matrices(jumps))
        states = []
        v = vec(rho0)
        prev_t = 0.0
        steps = {}
        for t in t_eval:
            delta = t - prev_t
            if delta > 0:
                key = round(delta, 18)
                if key not in steps:
                    steps[key] = expm(gen * delta)
                v = steps[key] @ v
            states.append(unvec(v))
            prev_t = t
        return EvolveResult(times=t_eval, states=states)

    def rhs(t: float, rho: np.ndarray) -> np.ndarray:
        h = h_of_t(t)
        out = -1j * (h @ rho - rho @ h)
        if bank.n_jumps:
            out = out + bank.apply(rho)
        return out

    if method == "adaptive":
        tol = rtol if rtol is not None else 1e-8
        t0, t1 = 0.0, float(t_eval[-1]) if t_eval[-1] > 0 else t_span
        if t1 == 0.0:
            return EvolveResult(times=t_eval, states=[rho0.copy() for _ in t_eval])
        sol = solve_ivp(
            lambda t, y: rhs(t, y.reshape(dim, dim)).ravel(),
            (t0, max(t1, t_eval[-1])),
            rho0.ravel(),
            t_eval=t_eval,
            method="DOP853",
            rtol=tol,
            atol=tol * 1e-2,
        )
        if not sol.success:
            raise NumericalFailure(
                f"adaptive integrator failed: {sol.message}",
                diagnostics={"rtol": tol, "t_span": t_span},
            )
        states = [sol.y[:, i].reshape(dim, dim) for i in range(sol.y.shape[1])]
        return EvolveResult(times=t_eval, states=states)

    if method != "rk4":
        raise ValueError(f"unknown method {method!r}")

    if dt is None:
        if max_freq > 0:
            dt = (2.0 * math.pi / max_freq) / 50.0
        elif t_span > 0:
            dt = t_span / 1000.0
        else:
            dt = 1.0
    states = []
    rho = rho0.copy()
    prev_t = 0.0
    for t in t_eval:
        delta = t - prev_t
        if delta > 0:
            n_steps = max(1, int(math.ceil(delta / dt - 1e-12)))
            h_step = delta / n_steps
            for i in range(n_steps):
                ts = prev_t + i * h_step
                k1 = rhs(ts, rho)
                k2 = rhs(ts + h_step / 2.0, rho + (h_step / 2.0) * k1)
                k3 = rhs(ts + h_step / 2.0, rho + (h_step / 2.0) * k2)
                k4 = rhs(ts + h_step, rho + h_step * k3)
                rho = rho + (h_step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        states.append(rho.copy())
        prev_t = t
    return EvolveResult(times=t_eval, states=states)
