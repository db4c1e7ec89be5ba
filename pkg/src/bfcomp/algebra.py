"""Dense complex linear algebra used by the interference code.

Permanents (Ryser with Gray-code updates), determinants, Khatri-Rao
products, Haar-random unitaries and Gram matrices built from internal
states all live here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import DimensionError, ResourceLimitError, ValidationError

__all__ = [
    "UnitaryMatrix",
    "GramMatrix",
    "InternalStateBank",
    "as_square",
    "determinant",
    "permanent",
    "permanent_batch",
    "khatri_rao_column",
    "khatri_rao_row",
    "haar_unitary",
    "haar_unitaries",
    "gram_from_states",
    "states_from_gram",
    "equal_overlap_gram",
    "random_gram",
    "UNITARY_TOL",
    "GRAM_HERMITIAN_TOL",
    "GRAM_PSD_TOL",
    "MAX_PERMANENT_SIZE",
]

UNITARY_TOL = 1e-10
GRAM_HERMITIAN_TOL = 1e-12
GRAM_PSD_TOL = -1e-10
STATE_NORM_TOL = 1e-12
MAX_PERMANENT_SIZE = 24
MAX_DETERMINANT_SIZE = 64


def _finite_complex(a, name="matrix"):
    arr = np.array(a, dtype=np.complex128)
    if arr.ndim != 2 or min(arr.shape) < 0:
        raise DimensionError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains NaN or Inf entries")
    return arr


@dataclass(frozen=True)
class UnitaryMatrix:
    """An m x m unitary, checked at construction.

    ``unitarity_residual`` is the operator infinity norm of ``U^dagger U - I``.
    Instances behave like arrays through ``__array__``.
    """

    matrix: np.ndarray
    unitarity_residual: float = field(default=0.0)

    def __post_init__(self):
        u = _finite_complex(self.matrix, "unitary")
        if u.shape[0] != u.shape[1] or u.shape[0] < 1:
            raise DimensionError(f"unitary must be square and non-empty, got {u.shape}")
        dev = u.conj().T @ u - np.eye(u.shape[0])
        res = float(np.abs(dev).sum(axis=1).max())
        if res > UNITARY_TOL:
            raise ValidationError(f"matrix is not unitary (residual {res:.3e})")
        u.setflags(write=False)
        object.__setattr__(self, "matrix", u)
        object.__setattr__(self, "unitarity_residual", res)

    @property
    def modes(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


@dataclass(frozen=True)
class GramMatrix:
    """Hermitian PSD matrix of internal-state overlaps ``S[i, j] = <phi_i|phi_j>``."""

    matrix: np.ndarray
    eigen_floor: float = field(default=0.0)

    def __post_init__(self):
        s = _finite_complex(self.matrix, "Gram matrix")
        if s.shape[0] != s.shape[1]:
            raise DimensionError(f"Gram matrix must be square, got {s.shape}")
        if s.size and np.abs(s - s.conj().T).max() > GRAM_HERMITIAN_TOL:
            raise ValidationError("Gram matrix is not Hermitian")
        if s.size and np.abs(np.diag(s) - 1.0).max() > GRAM_HERMITIAN_TOL:
            raise ValidationError("Gram matrix must have unit diagonal")
        floor = float(np.linalg.eigvalsh(0.5 * (s + s.conj().T)).min()) if s.size else 0.0
        if floor < GRAM_PSD_TOL:
            raise ValidationError(f"Gram matrix is not PSD (smallest eigenvalue {floor:.3e})")
        s.setflags(write=False)
        object.__setattr__(self, "matrix", s)
        object.__setattr__(self, "eigen_floor", floor)

    @property
    def modes(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


@dataclass(frozen=True)
class InternalStateBank:
    """Internal states of the particles, one per mode.

    Row ``i`` of ``states`` holds the coefficients ``c[i, u]`` of
    ``|phi_i> = sum_u c[i, u] |u>`` in a d-dimensional orthonormal basis.
    """

    states: np.ndarray

    def __post_init__(self):
        c = _finite_complex(self.states, "state bank")
        norms = np.linalg.norm(c, axis=1)
        if c.shape[0] and np.abs(norms - 1.0).max() > STATE_NORM_TOL:
            raise ValidationError("internal states must have unit norm")
        c.setflags(write=False)
        object.__setattr__(self, "states", c)


def as_square(a, name="matrix") -> np.ndarray:
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    return arr


def determinant(a) -> complex:
    """Determinant through LAPACK's partially pivoted LU factorisation."""
    arr = as_square(a)
    n = arr.shape[0]
    if n > MAX_DETERMINANT_SIZE:
        raise ResourceLimitError(f"determinant limited to n <= {MAX_DETERMINANT_SIZE}")
    if n == 0:
        return 1.0 + 0.0j
    return complex(np.linalg.det(arr))


@numba.njit(cache=True)
def _ryser_gray(a):
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    rowsum = np.zeros(n, dtype=np.complex128)
    total = 0.0 + 0.0j
    prev = 0
    for k in range(1, 1 << n):
        gray = k ^ (k >> 1)
        diff = gray ^ prev
        j = 0
        while (diff >> j) & 1 == 0:
            j += 1
        if gray & diff:
            for i in range(n):
                rowsum[i] += a[i, j]
        else:
            for i in range(n):
                rowsum[i] -= a[i, j]
        prod = 1.0 + 0.0j
        for i in range(n):
            prod *= rowsum[i]
        # parity of |subset|: the Gray code flips exactly one bit per step
        if k & 1:
            total -= prod
        else:
            total += prod
        prev = gray
    return -total if n % 2 else total


@numba.njit(cache=True)
def _ryser_gray_batch(stack):
    out = np.empty(stack.shape[0], dtype=np.complex128)
    for b in range(stack.shape[0]):
        out[b] = _ryser_gray(stack[b])
    return out


def permanent(a) -> complex:
    """Permanent of a square complex matrix.

    Uses Ryser's inclusion-exclusion formula with Gray-code subset
    ordering, so consecutive subsets differ by one column and each step
    costs O(n). Overall O(2**n * n).

    Parameters
    ----------
    a : array_like
        Square matrix, at most 24 x 24. The 0 x 0 permanent is 1.

    Returns
    -------
    complex
    """
    arr = as_square(a)
    n = arr.shape[0]
    if n > MAX_PERMANENT_SIZE:
        raise ResourceLimitError(f"permanent limited to n <= {MAX_PERMANENT_SIZE}, got {n}")
    return complex(_ryser_gray(np.ascontiguousarray(arr)))


def permanent_batch(stack) -> np.ndarray:
    """Permanents of a stack of square matrices with shape ``(..., n, n)``."""
    arr = np.asarray(stack, dtype=np.complex128)
    if arr.ndim < 2 or arr.shape[-1] != arr.shape[-2]:
        raise DimensionError(f"expected a stack of square matrices, got shape {arr.shape}")
    n = arr.shape[-1]
    if n > MAX_PERMANENT_SIZE:
        raise ResourceLimitError(f"permanent limited to n <= {MAX_PERMANENT_SIZE}, got {n}")
    lead = arr.shape[:-2]
    if n == 0:
        return np.ones(lead, dtype=np.complex128)
    flat = np.ascontiguousarray(arr.reshape((-1, n, n)))
    return _ryser_gray_batch(flat).reshape(lead)


def khatri_rao_column(a, b) -> np.ndarray:
    """Column-wise Kronecker product: column j is ``kron(a[:, j], b[:, j])``."""
    a = np.atleast_2d(np.asarray(a))
    b = np.atleast_2d(np.asarray(b))
    if a.shape[1] != b.shape[1]:
        raise DimensionError(f"column counts differ: {a.shape[1]} vs {b.shape[1]}")
    return np.einsum("ik,jk->ijk", a, b).reshape(a.shape[0] * b.shape[0], a.shape[1])


def khatri_rao_row(a, b) -> np.ndarray:
    """Row-wise Kronecker product (face-splitting): row i is ``kron(a[i], b[i])``."""
    a = np.atleast_2d(np.asarray(a))
    b = np.atleast_2d(np.asarray(b))
    if a.shape[0] != b.shape[0]:
        raise DimensionError(f"row counts differ: {a.shape[0]} vs {b.shape[0]}")
    return np.einsum("ki,kj->kij", a, b).reshape(a.shape[0], a.shape[1] * b.shape[1])


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def haar_unitaries(m: int, count: int, seed=None) -> np.ndarray:
    """Stack of ``count`` Haar-random m x m unitaries, shape ``(count, m, m)``.

    QR of complex Ginibre matrices, with each column of Q rescaled by the
    phase of the matching diagonal entry of R so the result is exactly
    Haar distributed (Mezzadri's correction).
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = _rng(seed)
    z = (rng.standard_normal((count, m, m)) + 1j * rng.standard_normal((count, m, m))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[..., None, :]


def haar_unitary(m: int, seed=None) -> UnitaryMatrix:
    """One Haar-random unitary; deterministic for a fixed integer seed."""
    return UnitaryMatrix(haar_unitaries(m, 1, seed)[0])


def gram_from_states(bank) -> GramMatrix:
    """Gram matrix ``S[i, j] = <phi_i|phi_j> = sum_u conj(c[i, u]) c[j, u]``."""
    if not isinstance(bank, InternalStateBank):
        bank = InternalStateBank(np.asarray(bank))
    c = bank.states
    s = c.conj() @ c.T
    # exact symmetrisation and unit diagonal remove O(eps) drift
    s = 0.5 * (s + s.conj().T)
    np.fill_diagonal(s, np.real(np.diag(s)))
    return GramMatrix(s)


def states_from_gram(gram) -> InternalStateBank:
    """An internal-state bank whose Gram matrix is ``gram``.

    Inverse of :func:`gram_from_states` up to a unitary change of the
    internal basis; the basis dimension equals the number of modes.
    """
    s = np.asarray(gram, dtype=np.complex128)
    w, v = np.linalg.eigh(s.T)
    c = v * np.sqrt(np.clip(w, 0.0, None))
    c /= np.linalg.norm(c, axis=1, keepdims=True)
    return InternalStateBank(c)


def equal_overlap_gram(m: int, x: float) -> GramMatrix:
    """``(1 - x) I + x J``: every pair of internal states overlaps by ``x``."""
    return GramMatrix((1.0 - x) * np.eye(m) + x * np.ones((m, m)))


def random_gram(m: int, seed=None, d: int | None = None) -> GramMatrix:
    """Gram matrix of ``m`` random normalised complex Gaussian states in ``d`` dimensions."""
    rng = _rng(seed)
    d = m if d is None else d
    c = rng.standard_normal((m, d)) + 1j * rng.standard_normal((m, d))
    c /= np.linalg.norm(c, axis=1, keepdims=True)
    return gram_from_states(InternalStateBank(c))
