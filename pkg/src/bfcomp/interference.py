"""Multiparticle transition probabilities through a linear interferometer.

Conventions
-----------
``U[a, b]`` is the single-particle amplitude for a particle entering mode
``a`` to leave in mode ``b``, so effective scattering matrices take rows
from the input occupation and columns from the output occupation.
``S[i, j] = <phi_i|phi_j>`` is the overlap of the internal states carried
by input modes ``i`` and ``j``.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .algebra import as_square, permanent, permanent_batch
from .errors import (
    DimensionError,
    ParticleNumberMismatch,
    PauliViolationError,
    ResourceLimitError,
    ValidationError,
)

__all__ = [
    "Species",
    "WTensor",
    "OutcomeDistribution",
    "occupation",
    "total",
    "expand",
    "factorial_weight",
    "compositions",
    "dominated",
    "effective_scattering_matrix",
    "gram_submatrix",
    "build_w_tensor",
    "tensor_permanent_def",
    "tensor_determinant_def",
    "tensor_permanent_compact",
    "tensor_determinant_compact",
    "transition_probability",
    "transition_probability_batch",
    "full_distribution",
    "conserves_particle_number",
]

IMAG_TOL = 1e-12
CLAMP_TOL = 1e-12
MAX_DEF_N = 6
MAX_COMPACT_N = 10
MAX_DISTRIBUTION_N = 6
MAX_OUTCOMES = 200_000


class Species(enum.Enum):
    BOSON = "boson"
    FERMION = "fermion"
    CLASSICAL = "classical"

    @classmethod
    def parse(cls, value) -> "Species":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


def occupation(v) -> tuple[int, ...]:
    """Validate an occupation vector and return it as a tuple of ints."""
    out = tuple(int(x) for x in v)
    if any(x < 0 for x in out):
        raise ValueError(f"occupations must be non-negative, got {out}")
    if any(int(x) != x for x in v):
        raise ValueError(f"occupations must be integers, got {tuple(v)}")
    return out


def total(v: Sequence[int]) -> int:
    return int(sum(v))


def expand(v: Sequence[int]) -> list[int]:
    """Mode list where mode ``i`` appears ``v[i]`` times, ascending."""
    return [i for i, c in enumerate(v) for _ in range(int(c))]


def factorial_weight(v: Sequence[int]) -> int:
    """``v! = prod_i v_i!``."""
    return math.prod(math.factorial(int(c)) for c in v)


def compositions(n: int, m: int) -> Iterator[tuple[int, ...]]:
    """Weak compositions of ``n`` into ``m`` parts, lexicographically ascending."""
    if m == 0:
        if n == 0:
            yield ()
        return
    if m == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in compositions(n - first, m - 1):
            yield (first,) + rest


def dominated(v: Sequence[int]) -> Iterator[tuple[int, ...]]:
    """All ``w`` with ``0 <= w <= v`` elementwise, lexicographically ascending."""
    return itertools.product(*(range(int(c) + 1) for c in v))


def conserves_particle_number(k: Sequence[int], i: Sequence[int]) -> bool:
    return total(k) == total(i)


def _check_modes(u: np.ndarray, *vectors) -> None:
    m = u.shape[0]
    for v in vectors:
        if len(v) != m:
            raise DimensionError(f"occupation {tuple(v)} has {len(v)} modes, interferometer has {m}")


def effective_scattering_matrix(U, m: Sequence[int], j: Sequence[int]) -> np.ndarray:
    """``U[expand(m)][:, expand(j)]``: rows repeated by input, columns by output occupation."""
    u = as_square(U, "unitary")
    m, j = occupation(m), occupation(j)
    _check_modes(u, m, j)
    if total(m) != total(j):
        raise ParticleNumberMismatch(f"input carries {total(m)} particles, output {total(j)}")
    return u[np.ix_(expand(m), expand(j))]


def gram_submatrix(S, m: Sequence[int]) -> np.ndarray:
    rows = expand(m)
    return np.asarray(S, dtype=np.complex128)[np.ix_(rows, rows)]


@dataclass(frozen=True)
class WTensor:
    """``entries[k, l, t] = Usub[k, t] * conj(Usub[l, t]) * Ssub[l, k]``."""

    n: int
    entries: np.ndarray
    source_inputs: tuple[int, ...] = ()
    source_outputs: tuple[int, ...] = ()

    @classmethod
    def from_array(cls, w) -> "WTensor":
        w = np.asarray(w, dtype=np.complex128)
        if w.ndim != 3 or len(set(w.shape)) != 1:
            raise DimensionError(f"W must be an n x n x n tensor, got shape {w.shape}")
        return cls(w.shape[0], w)


def build_w_tensor(U, S, m: Sequence[int], j: Sequence[int]) -> WTensor:
    u = as_square(U, "unitary")
    s = as_square(S, "Gram matrix")
    if s.shape != u.shape:
        raise DimensionError(f"Gram matrix shape {s.shape} does not match unitary {u.shape}")
    usub = effective_scattering_matrix(u, m, j)
    ssub = gram_submatrix(s, m)
    w = _w_from_parts(usub, ssub)
    return WTensor(usub.shape[0], w, tuple(expand(m)), tuple(expand(j)))


def _w_from_parts(usub: np.ndarray, ssub: np.ndarray) -> np.ndarray:
    # works on stacks: usub (..., n, n), ssub (n, n)
    return usub[..., :, None, :] * usub.conj()[..., None, :, :] * np.swapaxes(ssub, -1, -2)[..., :, :, None]


@lru_cache(maxsize=None)
def _perm_table(n: int) -> tuple[np.ndarray, np.ndarray]:
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.intp).reshape(-1, n)
    signs = np.array([_parity_sign(p) for p in perms], dtype=np.float64)
    return perms, signs


def _parity_sign(p) -> int:
    p = list(p)
    sign = 1
    seen = [False] * len(p)
    for i in range(len(p)):
        if seen[i]:
            continue
        length = 0
        j = i
        while not seen[j]:
            seen[j] = True
            j = p[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def _as_w(W) -> np.ndarray:
    return W.entries if isinstance(W, WTensor) else WTensor.from_array(W).entries


def _tensor_def(w: np.ndarray, signed: bool) -> complex:
    n = w.shape[-1]
    if n > MAX_DEF_N:
        raise ResourceLimitError(f"definition sum limited to n <= {MAX_DEF_N}, got {n}")
    if n == 0:
        return 1.0 + 0.0j
    perms, signs = _perm_table(n)
    t = np.arange(n)
    total_ = 0.0 + 0.0j
    # loop over sigma_1, vectorise over sigma_2
    for p1, s1 in zip(perms, signs):
        terms = np.prod(w[p1[None, :], perms, t[None, :]], axis=-1)
        total_ += s1 * np.dot(signs, terms) if signed else terms.sum()
    return complex(total_)


def tensor_permanent_def(W) -> complex:
    """Tensor permanent by the double sum over permutation pairs, O((n!)**2 n)."""
    return _tensor_def(_as_w(W), signed=False)


def tensor_determinant_def(W) -> complex:
    """Tensor determinant by the signed double sum over permutation pairs."""
    return _tensor_def(_as_w(W), signed=True)


def _tensor_compact(w: np.ndarray, signed: bool):
    # w may be a stack (..., n, n, n)
    n = w.shape[-1]
    if n > MAX_COMPACT_N:
        raise ResourceLimitError(f"compact form limited to n <= {MAX_COMPACT_N}, got {n}")
    lead = w.shape[:-3]
    if n == 0:
        return np.ones(lead, dtype=np.complex128)
    perms, signs = _perm_table(n)
    k = np.arange(n)
    # M_pi[k, t] = W[k, pi(k), t]
    mats = w[..., k[None, :], perms, :]
    perms_val = permanent_batch(mats)
    return (perms_val * signs).sum(axis=-1) if signed else perms_val.sum(axis=-1)


def tensor_permanent_compact(W) -> complex:
    """Tensor permanent as a single sum over permutations of matrix permanents.

    Substituting ``sigma_2 = pi o sigma_1`` collapses the double sum to
    ``sum_pi perm(M_pi)`` with ``M_pi[k, t] = W[k, pi(k), t]``. For W built
    from a unitary this is ``perm(Usub * conj(Usub)[pi]) * prod_k Ssub[pi(k), k]``.
    """
    return complex(_tensor_compact(_as_w(W), signed=False))


def tensor_determinant_compact(W) -> complex:
    return complex(_tensor_compact(_as_w(W), signed=True))


def _real_probability(value: complex, scale: float) -> float:
    p = value / scale
    if abs(p.imag) > IMAG_TOL:
        raise ValidationError(f"transition probability has imaginary part {p.imag:.3e}")
    return float(p.real)


def transition_probability(U, S, k: Sequence[int], i: Sequence[int], species) -> float:
    """Probability of detecting occupation ``i`` given input occupation ``k``.

    Boson: ``Perm(W) / (k! i!)``; fermion: ``Det(W) / (k! i!)``; classical
    (fully distinguishable): ``perm(|Usub|**2) / (k! i!)``.

    Returns 0.0 when ``k`` and ``i`` carry different particle numbers (see
    :func:`conserves_particle_number`). The value is not clamped, so
    roundoff can leave it slightly negative.

    Raises
    ------
    PauliViolationError
        Fermionic input with two or more particles in one mode.
    """
    species = Species.parse(species)
    u = as_square(U, "unitary")
    k, i = occupation(k), occupation(i)
    _check_modes(u, k, i)
    if species is Species.FERMION and any(c >= 2 for c in k):
        raise PauliViolationError(f"fermionic input {k} places several particles in one mode")
    if total(k) != total(i):
        return 0.0
    scale = float(factorial_weight(k) * factorial_weight(i))
    if species is Species.CLASSICAL:
        usub = effective_scattering_matrix(u, k, i)
        return float(permanent(np.abs(usub) ** 2).real) / scale
    w = build_w_tensor(u, S, k, i).entries
    n = w.shape[0]
    signed = species is Species.FERMION
    value = _tensor_def(w, signed) if n <= 4 else complex(_tensor_compact(w, signed))
    return _real_probability(value, scale)


def transition_probability_batch(Us, S, k: Sequence[int], i: Sequence[int], species) -> np.ndarray:
    """:func:`transition_probability` over a stack of unitaries ``(B, m, m)``."""
    species = Species.parse(species)
    us = np.asarray(Us, dtype=np.complex128)
    if us.ndim != 3 or us.shape[1] != us.shape[2]:
        raise DimensionError(f"expected a stack of square matrices, got {us.shape}")
    k, i = occupation(k), occupation(i)
    if len(k) != us.shape[1] or len(i) != us.shape[1]:
        raise DimensionError("occupation length does not match the unitaries")
    if species is Species.FERMION and any(c >= 2 for c in k):
        raise PauliViolationError(f"fermionic input {k} places several particles in one mode")
    if total(k) != total(i):
        return np.zeros(us.shape[0])
    scale = float(factorial_weight(k) * factorial_weight(i))
    usub = us[:, expand(k)][:, :, expand(i)]
    if species is Species.CLASSICAL:
        return permanent_batch(np.abs(usub) ** 2).real / scale
    w = _w_from_parts(usub, gram_submatrix(S, k))
    vals = _tensor_compact(w, signed=species is Species.FERMION) / scale
    if vals.size and np.abs(vals.imag).max() > IMAG_TOL:
        raise ValidationError("transition probabilities have non-negligible imaginary parts")
    return vals.real


@dataclass(frozen=True)
class OutcomeDistribution:
    species: Species
    input: tuple[int, ...]
    probabilities: dict
    normalization_defect: float

    def __getitem__(self, outcome) -> float:
        return self.probabilities[tuple(outcome)]

    def total(self) -> float:
        return math.fsum(self.probabilities.values())


def full_distribution(U, S, k: Sequence[int], species) -> OutcomeDistribution:
    """Probabilities of every output with the same particle number as ``k``.

    Outputs are enumerated as weak compositions in ascending lexicographic
    order. Roundoff negatives down to ``-1e-12`` are clamped to zero.
    """
    species = Species.parse(species)
    u = as_square(U, "unitary")
    k = occupation(k)
    _check_modes(u, k)
    n, m = total(k), len(k)
    if n > MAX_DISTRIBUTION_N:
        raise ResourceLimitError(f"full distribution limited to {MAX_DISTRIBUTION_N} particles")
    if math.comb(n + m - 1, n) > MAX_OUTCOMES:
        raise ResourceLimitError("too many output configurations")
    probs = {}
    for out in compositions(n, m):
        p = transition_probability(u, S, k, out, species)
        if p < 0.0:
            if p < -CLAMP_TOL:
                raise ValidationError(f"probability {p:.3e} for {out} is negative beyond roundoff")
            p = 0.0
        probs[out] = p
    defect = abs(math.fsum(probs.values()) - 1.0)
    return OutcomeDistribution(species, k, probs, defect)
