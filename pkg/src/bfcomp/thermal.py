"""Thermal sampling probabilities and generating functions.

Everything here uses the input-row convention of :mod:`bfcomp.interference`.
In that convention the single-particle generating matrix is
``A(y) = conj(U) @ diag(y) @ U.T`` (its entry ``[a, a]`` is
``sum_b y_b |U[a, b]|**2``) and the thermal output matrix is
``M = U^dagger diag(x) U``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .algebra import as_square, determinant, permanent
from .errors import DivergenceError, PauliViolationError, ResourceLimitError, ValidationError
from .interference import (
    Species,
    compositions,
    dominated,
    factorial_weight,
    full_distribution,
    occupation,
    total,
    transition_probability,
)

__all__ = [
    "ThermalParams",
    "GFPoint",
    "CoefficientTable",
    "MixtureValue",
    "MuirReport",
    "generating_matrix",
    "thermal_matrix",
    "thermal_prob",
    "thermal_prob_mixture_oracle",
    "gf_eval",
    "gf_series_from_mixture",
    "extract_coefficients",
    "verify_muir",
    "fixed_input_gf",
    "moment_gf",
    "moments_by_finite_differences",
    "principal_minor_sum",
    "verify_macmahon",
    "verify_principal_minors",
]

MAX_MIXTURE_N = 6


@dataclass(frozen=True)
class ThermalParams:
    """Per-mode thermal parameters ``x`` in ``[0, 1)``.

    Bosonic mean occupation is ``x / (1 - x)``, fermionic ``x / (1 + x)``.
    """

    x: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float).ravel()
        if np.any(x < 0.0) or np.any(x >= 1.0):
            raise ValidationError(f"thermal parameters must lie in [0, 1), got {x}")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @classmethod
    def coerce(cls, x) -> "ThermalParams":
        return x if isinstance(x, cls) else cls(x)

    def boson_weight(self, k: Sequence[int]) -> float:
        return math.prod((1.0 - xi) * xi**ki for xi, ki in zip(self.x, k))

    def fermion_weight(self, k: Sequence[int]) -> float:
        return math.prod((xi if ki else 1.0) / (1.0 + xi) for xi, ki in zip(self.x, k))


@dataclass(frozen=True)
class GFPoint:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=np.complex128).ravel())
        object.__setattr__(self, "y", np.asarray(self.y, dtype=np.complex128).ravel())
        if self.x.shape != self.y.shape:
            raise ValueError("x and y must have the same length")


@dataclass(frozen=True)
class CoefficientTable:
    degree_caps: tuple[int, ...]
    coefficients: dict
    extraction_radius: float

    def __getitem__(self, j) -> complex:
        return self.coefficients[tuple(j)]


@dataclass(frozen=True)
class MixtureValue:
    """Oracle value with a certified bound on everything left out of the sum."""

    value: float
    tail_bound: float
    terms: int


@dataclass(frozen=True)
class MuirReport:
    j: tuple[int, ...]
    lhs: float
    rhs: float
    residual: float
    raw_residual: float
    terms: list = field(default_factory=list)


def generating_matrix(U, y) -> np.ndarray:
    u = as_square(U, "unitary")
    return u.conj() @ np.diag(np.asarray(y, dtype=np.complex128)) @ u.T


def thermal_matrix(U, x) -> np.ndarray:
    u = as_square(U, "unitary")
    return u.conj().T @ np.diag(np.asarray(x, dtype=float)) @ u


def thermal_prob(U, x, j: Sequence[int], species) -> float:
    """Thermal boson or fermion sampling probability for indistinguishable particles.

    Boson: ``prod(1 - x) perm(M[j, j]) / j!``; fermion:
    ``prod(1 / (1 + x)) det(M[j, j])``, with ``M = U^dagger diag(x) U``.
    """
    species = Species.parse(species)
    x = ThermalParams.coerce(x).x
    j = occupation(j)
    if len(j) != len(x):
        raise ValueError("j and x must have the same number of modes")
    rows = [a for a, c in enumerate(j) for _ in range(c)]
    mj = thermal_matrix(U, x)[np.ix_(rows, rows)]
    if species is Species.BOSON:
        val = math.prod(1.0 - x) * permanent(mj) / factorial_weight(j)
    elif species is Species.FERMION:
        if any(c >= 2 for c in j):
            raise PauliViolationError(f"fermionic thermal output {j} repeats a mode")
        val = math.prod(1.0 / (1.0 + x)) * determinant(mj)
    else:
        raise ValueError("thermal sampling is defined for bosons and fermions only")
    return float(np.real(val))


def thermal_prob_mixture_oracle(U, S, x, j: Sequence[int], species, epsilon: float = 1e-10) -> MixtureValue:
    """Thermal probability as an explicit mixture over Fock inputs.

    Particle number is conserved, so only inputs with ``|k| = |j|``
    contribute and the mixture is a finite sum: the tail bound is exactly
    zero and ``epsilon`` is always met. Works for any Gram matrix.
    """
    species = Species.parse(species)
    tp = ThermalParams.coerce(x)
    j = occupation(j)
    n, m = total(j), len(j)
    if n > MAX_MIXTURE_N:
        raise ResourceLimitError(f"mixture oracle limited to {MAX_MIXTURE_N} particles", )
    terms = []
    for k in compositions(n, m):
        if species is Species.FERMION:
            if any(c >= 2 for c in k):
                continue
            w = tp.fermion_weight(k)
        elif species is Species.BOSON:
            w = tp.boson_weight(k)
        else:
            raise ValueError("thermal sampling is defined for bosons and fermions only")
        if w == 0.0:
            continue
        terms.append(w * transition_probability(U, S, k, j, species))
    return MixtureValue(math.fsum(terms), 0.0, len(terms))


def _reduced(U, S, y) -> np.ndarray:
    s = np.asarray(S, dtype=np.complex128)
    return generating_matrix(U, y) * s


def gf_eval(U, S, point: GFPoint, species) -> complex:
    """Thermal generating function ``sum_j p(x, j) y**j`` in closed determinant form.

    Fermion: ``det(I + (A(y) o S) X) / det(I + X)``; boson:
    ``det(I - X) / det(I - (A(y) o S) X)``, where ``o`` is the entrywise
    product and ``X = diag(x)``.

    Raises
    ------
    DivergenceError
        Bosonic series evaluated where the spectral radius of
        ``(A(y) o S) X`` is not below one.
    """
    species = Species.parse(species)
    x, y = point.x, point.y
    m = len(x)
    X = np.diag(x)
    G = _reduced(U, S, y) @ X
    eye = np.eye(m)
    if species is Species.FERMION:
        return complex(np.linalg.det(eye + G) / np.linalg.det(eye + X))
    if species is Species.BOSON:
        rho = float(np.abs(np.linalg.eigvals(G)).max()) if m else 0.0
        if rho >= 1.0:
            raise DivergenceError(f"bosonic generating function diverges (spectral radius {rho:.4f})")
        return complex(np.linalg.det(eye - X) / np.linalg.det(eye - G))
    raise ValueError("thermal generating functions exist for bosons and fermions only")


def gf_series_from_mixture(U, S, x, y, species, max_total: int | None = None) -> MixtureValue:
    """``sum_j p(x, j) y**j`` built from enumerated Fock-input mixtures.

    Each input ``k`` contributes ``w(k) * sum_i P(k -> i) y**i`` with the
    output distribution enumerated term by term. Fermionic inputs are binary,
    so the fermionic series is finite. The bosonic series is cut at
    ``|k| <= max_total``. Because ``|sum_i P(k -> i) y**i| <= r**|k|`` with
    ``r = max|y|``, the dropped part is bounded by
    ``prod (1 - x) / (1 - r x) - sum_{|k| <= N} w(k) r**|k|``.
    """
    species = Species.parse(species)
    tp = ThermalParams.coerce(x)
    y = np.asarray(y, dtype=np.complex128)
    m = len(tp.x)
    if species is Species.FERMION:
        nmax = m
    else:
        nmax = MAX_MIXTURE_N if max_total is None else max_total
    terms = []
    kept_weight = []
    r = float(np.abs(y).max()) if m else 0.0
    count = 0
    for n in range(nmax + 1):
        for k in compositions(n, m):
            if species is Species.FERMION:
                if any(c >= 2 for c in k):
                    continue
                w = tp.fermion_weight(k)
            else:
                w = tp.boson_weight(k)
            kept_weight.append(w * r**n)
            if w == 0.0:
                continue
            dist = full_distribution(U, S, k, species)
            for out, p in dist.probabilities.items():
                terms.append(w * p * np.prod(y ** np.asarray(out)))
            count += 1
    value = complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms))
    if species is Species.FERMION:
        tail = 0.0
    else:
        if r >= 1.0:
            raise DivergenceError("tail bound needs max|y| < 1")
        full = math.prod((1.0 - xi) / (1.0 - r * xi) for xi in tp.x)
        tail = max(full - math.fsum(kept_weight), 0.0)
    return MixtureValue(value, tail, count)


def extract_coefficients(
    f: Callable, degree_caps: Sequence[int], radius: float = 0.5, vectorized: bool = False
) -> CoefficientTable:
    """Taylor coefficients of ``f`` by discrete Fourier inversion on a polydisc.

    ``f`` is sampled at ``radius * omega**t`` where ``t`` runs over the
    product grid of ``(D_i + 1)``-th roots of unity, and each coefficient is
    recovered as ``r**-|j| * mean_t f(r omega**t) omega**(-t j)``. The
    result is exact up to roundoff for polynomials whose degree in variable
    ``i`` is at most ``D_i``. Otherwise coefficients ``c_{j + (D+1) l}``
    alias onto ``c_j`` with weight ``r**((D+1)|l|)``.

    Parameters
    ----------
    f : callable
        Maps a complex vector ``y`` of length ``len(degree_caps)`` to a scalar.
    degree_caps : sequence of int
        Highest degree ``D_i`` kept per variable.
    radius : float
        Polydisc radius; must lie inside the domain of analyticity.
    vectorized : bool
        If true, ``f`` is called once with every grid point stacked as rows
        of an ``(N, len(degree_caps))`` array and must return ``N`` values.
    """
    caps = tuple(int(c) for c in degree_caps)
    if not 0.0 < radius:
        raise ValueError("radius must be positive")
    shape = tuple(c + 1 for c in caps)
    grids = [radius * np.exp(2j * np.pi * np.arange(s) / s) for s in shape]
    mesh = np.stack([g.ravel() for g in np.meshgrid(*grids, indexing="ij")], axis=-1)
    try:
        if vectorized:
            values = np.asarray(f(mesh), dtype=np.complex128).reshape(shape)
        else:
            values = np.array([f(yv) for yv in mesh], dtype=np.complex128).reshape(shape)
    except DivergenceError as exc:
        raise DivergenceError(f"function diverges inside the extraction polydisc: {exc}") from exc
    if not np.all(np.isfinite(values)):
        raise DivergenceError("function is not finite on the extraction polydisc")
    # forward FFT computes sum_t v_t exp(-2 pi i t j / s), which is the inversion kernel
    spectrum = np.fft.fftn(values) / np.prod(shape)
    coeffs = {}
    for j in itertools.product(*(range(s) for s in shape)):
        coeffs[j] = complex(spectrum[j] / radius ** sum(j))
    return CoefficientTable(caps, coeffs, float(radius))


def verify_muir(U, x, j: Sequence[int]) -> MuirReport:
    """Check the alternating thermal boson/fermion convolution at output ``j``.

    ``sum_{i <= j} (-1)**|i| b(x, j - i) f(x, i)`` must equal
    ``prod (1 - x) / (1 + x)`` when ``j = 0`` and vanish otherwise. Only
    binary ``i`` enter because ``f`` vanishes on repeated modes. The same
    sum is also evaluated in bare permanent/determinant form,
    ``sum_i (-1)**|i| perm(M[j-i]) det(M[i]) / (j - i)! = delta_{j,0}``.
    """
    tp = ThermalParams.coerce(x)
    xv = tp.x
    j = occupation(j)
    M = thermal_matrix(U, xv)
    terms = []
    raw_terms = []
    for i in dominated(j):
        if any(c >= 2 for c in i):
            continue
        rest = tuple(a - b for a, b in zip(j, i))
        sign = -1.0 if sum(i) % 2 else 1.0
        terms.append(sign * thermal_prob(U, tp, rest, Species.BOSON) * thermal_prob(U, tp, i, Species.FERMION))
        rows_i = [a for a, c in enumerate(i) for _ in range(c)]
        rows_r = [a for a, c in enumerate(rest) for _ in range(c)]
        raw = permanent(M[np.ix_(rows_r, rows_r)]) * determinant(M[np.ix_(rows_i, rows_i)])
        raw_terms.append(sign * np.real(raw) / factorial_weight(rest))
    lhs = math.fsum(terms)
    is_vacuum = not any(j)
    rhs = math.prod((1.0 - xi) / (1.0 + xi) for xi in xv) if is_vacuum else 0.0
    raw = math.fsum(raw_terms) - (1.0 if is_vacuum else 0.0)
    return MuirReport(j, lhs, rhs, abs(lhs - rhs), abs(raw), terms)


def _binary_input(k) -> tuple[int, ...]:
    k = occupation(k)
    if any(c >= 2 for c in k):
        raise ValueError(f"fixed-input generating functions need a binary input, got {k}")
    return k


def _minor(mat: np.ndarray, k, species: Species) -> complex:
    rows = [a for a, c in enumerate(k) if c]
    sub = mat[np.ix_(rows, rows)]
    if species is Species.FERMION:
        return determinant(sub)
    if species is Species.BOSON:
        return permanent(sub)
    # fully distinguishable particles: the Gram matrix collapses to the identity
    return permanent(np.diag(np.diag(sub)))


def fixed_input_gf(U, S, k: Sequence[int], y, species) -> complex:
    """``sum_i P(k -> i) y**i`` as a principal minor of ``A(y) o S``.

    Fermions take the determinant, bosons the permanent. For the classical
    species only the diagonal survives.
    """
    species = Species.parse(species)
    k = _binary_input(k)
    return complex(_minor(_reduced(U, S, y), k, species))


def moment_gf(U, S, k: Sequence[int], t, species) -> complex:
    """Moment generating function ``E[exp(t . n)]`` for a fixed binary input.

    Evaluated as the principal minor of ``I + (conj(U) (e**T - I) U.T) o S``
    so that small ``t`` perturbs the identity rather than a near-singular matrix.
    """
    species = Species.parse(species)
    k = _binary_input(k)
    t = np.asarray(t, dtype=np.complex128)
    m = len(k)
    mat = np.eye(m) + _reduced(U, S, np.expm1(t))
    return complex(_minor(mat, k, species))


def moments_by_finite_differences(U, S, k, species, h: float = 1e-4):
    """Means and second moments ``E[n_a]``, ``E[n_a n_b]`` from the moment GF.

    Central differences with one Richardson extrapolation step (``h`` and
    ``h / 2``), so first derivatives carry O(h**4) truncation error.
    """
    m = len(k)

    def mgf(t):
        return moment_gf(U, S, k, t, species).real

    def first(a, step):
        e = np.zeros(m)
        e[a] = step
        return (mgf(e) - mgf(-e)) / (2 * step)

    def second(a, b, step):
        ea = np.zeros(m)
        eb = np.zeros(m)
        ea[a] = step
        eb[b] = step
        return (mgf(ea + eb) - mgf(ea - eb) - mgf(-ea + eb) + mgf(-ea - eb)) / (4 * step * step)

    mean = np.array([(4 * first(a, h / 2) - first(a, h)) / 3 for a in range(m)])
    sec = np.empty((m, m))
    for a in range(m):
        for b in range(a, m):
            sec[a, b] = sec[b, a] = (4 * second(a, b, h / 2) - second(a, b, h)) / 3
    return mean, sec


def principal_minor_sum(G, kind: str) -> complex:
    """``sum_{j in {0,1}^m} det`` (or ``perm``) of the principal submatrix ``G[j, j]``."""
    g = as_square(G)
    fn = determinant if kind == "det" else permanent
    out = []
    for j in itertools.product((0, 1), repeat=g.shape[0]):
        rows = [a for a, c in enumerate(j) if c]
        out.append(fn(g[np.ix_(rows, rows)]))
    return complex(math.fsum(v.real for v in out), math.fsum(v.imag for v in out))


def verify_macmahon(A, perm_caps: Sequence[int], radius: float, check_max: int = 2, det_radius: float = 0.5) -> dict:
    """Compare DFT-extracted coefficients with principal permanents and determinants.

    Permanent branch: ``perm(A[j, j]) / j!`` equals the coefficient of
    ``x**j`` in ``1 / det(I - X A)``. The division by ``j!`` accounts for
    repeated rows, because the expansion generates each multiset once.
    Determinant branch: ``det(A[j, j])`` is the coefficient of ``x**j`` in
    ``det(I + X A)`` for binary ``j``. The polynomial is multilinear, so
    caps of one are exact. Only permanent coefficients with every
    ``j_i <= check_max`` are compared; the higher ones are extraction slack.
    """
    a = as_square(A)
    m = a.shape[0]
    eye = np.eye(m)

    def inv_det(xs):
        return 1.0 / np.linalg.det(eye - xs[:, :, None] * a[None])

    def fwd_det(xs):
        return np.linalg.det(eye + xs[:, :, None] * a[None])

    perm_table = extract_coefficients(inv_det, perm_caps, radius, vectorized=True)
    det_table = extract_coefficients(fwd_det, [1] * m, det_radius, vectorized=True)
    perm_res = {}
    for j, c in perm_table.coefficients.items():
        if max(j, default=0) > check_max:
            continue
        rows = [r for r, cnt in enumerate(j) for _ in range(cnt)]
        ref = permanent(a[np.ix_(rows, rows)]) / factorial_weight(j)
        perm_res[j] = abs(c - ref)
    det_res = {}
    for j, c in det_table.coefficients.items():
        rows = [r for r, cnt in enumerate(j) if cnt]
        det_res[j] = abs(c - determinant(a[np.ix_(rows, rows)]))
    return {"perm": perm_res, "det": det_res}


def verify_principal_minors(G) -> dict:
    g = as_square(G)
    m = g.shape[0]
    eye = np.eye(m)
    return {
        "det": abs(determinant(eye + g) - principal_minor_sum(g, "det")),
        "perm": abs(permanent(eye + g) - principal_minor_sum(g, "perm")),
    }
