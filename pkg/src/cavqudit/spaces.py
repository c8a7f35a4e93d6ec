"""Dense operator algebra on truncated tensor-product Hilbert spaces.

Conventions used throughout the package:

* Multi-indices are lexicographic with the *first* subsystem slowest, so a
  space with dims ``(3, 21)`` places the level pair ``(q, n)`` at flat index
  ``q * 21 + n``.
* Density matrices are vectorized by column stacking,
  ``vec(rho) = rho.flatten(order="F")``, which gives
  ``vec(A @ X @ B) = kron(B.T, A) @ vec(X)``.  Superoperator matrices are
  therefore bit-comparable across runs.
* All operators are dense complex ``numpy`` arrays.  Functions never mutate
  their inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "HilbertSpace",
    "build_space",
    "OperatorLabel",
    "DensityMatrix",
    "Superoperator",
    "rotation_unitary",
    "vec",
    "unvec",
    "sandwich_superoperator",
    "unitary_superoperator",
    "dissipator",
    "dissipator_matrix",
    "apply_dissipator",
    "partial_trace",
    "choi_matrix",
    "choi_min_eigenvalue",
    "is_trace_preserving",
    "basis_dm",
    "check_density_matrix",
]


class HilbertSpace:
    """A truncated tensor-product Hilbert space with named subsystems.

    Parameters
    ----------
    dims : sequence of int
        Local dimensions, first subsystem slowest in the flat index.
    labels : sequence of str, optional
        Subsystem names (defaults to ``"sub0"``, ``"sub1"``, ...).
    """

    def __init__(self, dims: Sequence[int], labels: Sequence[str] | None = None):
        dims = tuple(int(d) for d in dims)
        if not dims or any(d < 1 for d in dims):
            raise ValueError(f"subsystem dimensions must be positive, got {dims}")
        if labels is None:
            labels = tuple(f"sub{i}" for i in range(len(dims)))
        else:
            labels = tuple(labels)
            if len(labels) != len(dims):
                raise ValueError("one label per subsystem required")
            if len(set(labels)) != len(labels):
                raise ValueError("subsystem labels must be unique")
        self.dims = dims
        self.labels = labels
        self.dim = int(np.prod(dims))
        # strides for lexicographic flat indexing, first subsystem slowest
        self._strides = tuple(int(np.prod(dims[i + 1:])) for i in range(len(dims)))

    def __repr__(self) -> str:
        pairs = ", ".join(f"{l}={d}" for l, d in zip(self.labels, self.dims))
        return f"HilbertSpace({pairs})"

    def subsystem_index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"no subsystem {label!r} in {self.labels}") from None

    def index(self, levels: Sequence[int]) -> int:
        """Flat index of a multi-level tuple (first subsystem slowest)."""
        if len(levels) != len(self.dims):
            raise ValueError("one level per subsystem required")
        for lev, d in zip(levels, self.dims):
            if not 0 <= lev < d:
                raise ValueError(f"level {lev} out of range for dim {d}")
        return sum(l * s for l, s in zip(levels, self._strides))

    def levels(self, index: int) -> tuple[int, ...]:
        """Inverse of :meth:`index`."""
        if not 0 <= index < self.dim:
            raise ValueError(f"index {index} out of range for dim {self.dim}")
        out = []
        for s in self._strides:
            out.append(index // s)
            index %= s
        return tuple(out)

    def basis_vector(self, levels: Sequence[int] | int) -> np.ndarray:
        idx = levels if isinstance(levels, (int, np.integer)) else self.index(levels)
        v = np.zeros(self.dim, dtype=complex)
        v[idx] = 1.0
        return v

    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex)

    def embed(self, op: np.ndarray, subsystem: int | str) -> np.ndarray:
        """Embed a local operator into the full space by Kronecker products."""
        if isinstance(subsystem, str):
            subsystem = self.subsystem_index(subsystem)
        op = np.asarray(op, dtype=complex)
        d = self.dims[subsystem]
        if op.shape != (d, d):
            raise ValueError(f"operator shape {op.shape} does not match dim {d}")
        full = np.eye(1, dtype=complex)
        for i, di in enumerate(self.dims):
            factor = op if i == subsystem else np.eye(di, dtype=complex)
            full = np.kron(full, factor)
        return full

    # local operators, embedded in the full space ---------------------------

    def annihilation(self, subsystem: int | str) -> np.ndarray:
        d = self._local_dim(subsystem)
        a = np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1).astype(complex)
        return self.embed(a, subsystem)

    def creation(self, subsystem: int | str) -> np.ndarray:
        return self.annihilation(subsystem).conj().T

    def number(self, subsystem: int | str) -> np.ndarray:
        d = self._local_dim(subsystem)
        return self.embed(np.diag(np.arange(d, dtype=complex)), subsystem)

    def projector(self, subsystem: int | str, level: int) -> np.ndarray:
        d = self._local_dim(subsystem)
        if not 0 <= level < d:
            raise ValueError(f"level {level} out of range for dim {d}")
        p = np.zeros((d, d), dtype=complex)
        p[level, level] = 1.0
        return self.embed(p, subsystem)

    def transition(self, subsystem: int | str, j: int, k: int) -> np.ndarray:
        """Embedded |j><k| on one subsystem."""
        d = self._local_dim(subsystem)
        if not (0 <= j < d and 0 <= k < d):
            raise ValueError(f"levels ({j}, {k}) out of range for dim {d}")
        t = np.zeros((d, d), dtype=complex)
        t[j, k] = 1.0
        return self.embed(t, subsystem)

    def _local_dim(self, subsystem: int | str) -> int:
        if isinstance(subsystem, str):
            subsystem = self.subsystem_index(subsystem)
        return self.dims[subsystem]


def build_space(subsystem_dims: Sequence[int], labels: Sequence[str] | None = None) -> HilbertSpace:
    """Construct a :class:`HilbertSpace` with lexicographic index ordering."""
    return HilbertSpace(subsystem_dims, labels)


@dataclass(frozen=True)
class OperatorLabel:
    """Symbolic reference to a standard local operator on a named subsystem.

    ``kind`` is one of ``annihilation``, ``creation``, ``number``,
    ``projector`` (with ``j``) or ``transition`` (with ``j``, ``k``).
    """

    subsystem: str
    kind: str
    j: int | None = None
    k: int | None = None

    def build(self, space: HilbertSpace) -> np.ndarray:
        if self.kind == "annihilation":
            return space.annihilation(self.subsystem)
        if self.kind == "creation":
            return space.creation(self.subsystem)
        if self.kind == "number":
            return space.number(self.subsystem)
        if self.kind == "projector":
            if self.j is None:
                raise ValueError("projector label needs level j")
            return space.projector(self.subsystem, self.j)
        if self.kind == "transition":
            if self.j is None or self.k is None:
                raise ValueError("transition label needs levels j, k")
            return space.transition(self.subsystem, self.j, self.k)
        raise ValueError(f"unknown operator kind {self.kind!r}")


# ---------------------------------------------------------------------------
# rotations and channels


def rotation_unitary(space: "HilbertSpace | int", j: int, k: int, theta: float) -> np.ndarray:
    """Two-level rotation acting on global indices ``j`` and ``k``.

    R = (|j><j| + |k><k|) cos(theta/2) + (|k><j| - |j><k|) sin(theta/2)
    plus the identity on every other level.  ``theta = pi`` transfers all
    population from ``j`` to ``k`` (with a sign on the reverse amplitude).
    """
    dim = space.dim if isinstance(space, HilbertSpace) else int(space)
    if j == k:
        raise ValueError("rotation requires two distinct levels")
    if not (0 <= j < dim and 0 <= k < dim):
        raise ValueError(f"indices ({j}, {k}) out of range for dim {dim}")
    c = math.cos(theta / 2.0)
    s = math.sin(theta / 2.0)
    u = np.eye(dim, dtype=complex)
    u[j, j] = c
    u[k, k] = c
    u[k, j] = s
    u[j, k] = -s
    return u


def vec(rho: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(rho, dtype=complex).flatten(order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    d = int(round(math.isqrt(v.size)))
    if d * d != v.size:
        raise ValueError("vector length is not a perfect square")
    return np.asarray(v, dtype=complex).reshape((d, d), order="F")


def sandwich_superoperator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix of ``rho -> a @ rho @ b`` in the column-stacking convention."""
    return np.kron(np.asarray(b, dtype=complex).T, np.asarray(a, dtype=complex))


def unitary_superoperator(u: np.ndarray) -> np.ndarray:
    """Matrix of unitary conjugation ``rho -> u rho u^dag``."""
    u = np.asarray(u, dtype=complex)
    return np.kron(u.conj(), u)


def dissipator_matrix(a: np.ndarray) -> np.ndarray:
    """Superoperator matrix of ``D[a] rho = a rho a^dag - {a^dag a, rho}/2``."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("jump operator must be a square matrix")
    d = a.shape[0]
    ada = a.conj().T @ a
    eye = np.eye(d, dtype=complex)
    return (
        np.kron(a.conj(), a)
        - 0.5 * np.kron(eye, ada)
        - 0.5 * np.kron(ada.T, eye)
    )


def apply_dissipator(a: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Direct action of ``D[a]`` on a density matrix."""
    a = np.asarray(a, dtype=complex)
    rho = np.asarray(rho, dtype=complex)
    if a.shape != rho.shape:
        raise ValueError("jump operator and state dimensions differ")
    ada = a.conj().T @ a
    return a @ rho @ a.conj().T - 0.5 * (ada @ rho + rho @ ada)


def partial_trace(rho: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Reduced density matrix over the subsystems listed in ``keep``.

    Kept subsystems stay in ascending order of their original position.
    """
    dims = [int(d) for d in dims]
    keep = sorted(set(int(i) for i in keep))
    if not keep:
        raise ValueError("keep set must be non-empty")
    n = len(dims)
    if any(i < 0 or i >= n for i in keep):
        raise ValueError("keep indices out of range")
    total = int(np.prod(dims))
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (total, total):
        raise ValueError(f"state shape {rho.shape} does not match dims {dims}")
    traced = [i for i in range(n) if i not in keep]
    out = rho.reshape(dims + dims)
    removed = 0
    for ax in traced:
        a = ax - removed
        out = np.trace(out, axis1=a, axis2=a + (n - removed))
        removed += 1
    d_keep = int(np.prod([dims[i] for i in keep]))
    return out.reshape(d_keep, d_keep)


def choi_matrix(s: np.ndarray) -> np.ndarray:
    """Choi matrix ``sum_ij |i><j| (x) Lambda(|i><j|)`` of a superoperator."""
    s = np.asarray(s, dtype=complex)
    d = int(round(math.isqrt(s.shape[0])))
    if d * d != s.shape[0] or s.shape[0] != s.shape[1]:
        raise ValueError("superoperator must be d^2 x d^2")
    # S[(r + d c), (i + d j)] = <r| Lambda(|i><j|) |c>; the column-stacking
    # flat index puts the column label on the slow axis.
    st = s.reshape(d, d, d, d)  # [c, r, j, i]
    choi = st.transpose(3, 1, 2, 0).reshape(d * d, d * d)  # [(i, r), (j, c)]
    return choi


def choi_min_eigenvalue(s: np.ndarray) -> float:
    c = choi_matrix(s)
    return float(np.linalg.eigvalsh((c + c.conj().T) / 2.0)[0])


def is_trace_preserving(s: np.ndarray, atol: float = 1e-10) -> bool:
    s = np.asarray(s, dtype=complex)
    d = int(round(math.isqrt(s.shape[0])))
    vid = vec(np.eye(d))
    return bool(np.max(np.abs(vid @ s - vid)) <= atol)


def basis_dm(space: HilbertSpace, levels: Sequence[int] | int) -> np.ndarray:
    """Density matrix of a computational basis state."""
    v = space.basis_vector(levels)
    return np.outer(v, v.conj())


def check_density_matrix(
    rho: np.ndarray,
    *,
    herm_tol: float = 1e-12,
    trace_tol: float = 1e-10,
    pos_tol: float = 1e-9,
) -> None:
    """Raise ``ValueError`` if ``rho`` violates the density-matrix invariants."""
    rho = np.asarray(rho)
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > herm_tol:
        raise ValueError(f"state is not Hermitian (deviation {herm:.3e})")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"state trace {tr} deviates from 1")
    evals = np.linalg.eigvalsh((rho + rho.conj().T) / 2.0)
    if evals[0] < -pos_tol:
        raise ValueError(f"state has negative eigenvalue {evals[0]:.3e}")


@dataclass(frozen=True)
class DensityMatrix:
    """Validated immutable density-matrix container."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        check_density_matrix(m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_state(cls, psi: np.ndarray) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)


@dataclass(frozen=True)
class Superoperator:
    """Dense superoperator in the column-stacking convention."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        d = int(round(math.isqrt(m.shape[0])))
        if m.ndim != 2 or m.shape[0] != m.shape[1] or d * d != m.shape[0]:
            raise ValueError("superoperator matrix must be square of size d^2")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return int(round(math.isqrt(self.matrix.shape[0])))

    @classmethod
    def identity(cls, dim: int) -> "Superoperator":
        return cls(np.eye(dim * dim, dtype=complex))

    def __matmul__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.matrix @ other.matrix)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(rho))

    def is_trace_preserving(self, atol: float = 1e-10) -> bool:
        return is_trace_preserving(self.matrix, atol=atol)

    def choi(self) -> np.ndarray:
        return choi_matrix(self.matrix)


def dissipator(a: np.ndarray) -> Superoperator:
    """Spec-level wrapper returning ``D[a]`` as a :class:`Superoperator`."""
    return Superoperator(dissipator_matrix(a))
