"""Executable checks of the boson/fermion complementarity relations.

Every verifier returns a small report with both sides of the identity and
their absolute difference. Sums are accumulated with :func:`math.fsum`, so
residuals do not depend on summation order.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .algebra import GramMatrix, as_square
from .errors import ValidationError
from .interference import (
    Species,
    dominated,
    factorial_weight,
    occupation,
    total,
    transition_probability,
)

__all__ = [
    "ConvolutionReport",
    "ResidualReport",
    "ThreeParticleReport",
    "ProbabilityCache",
    "verify_bf_complementarity",
    "verify_classical_convolution",
    "verify_classical_complementarity",
    "three_particle_difference_scan",
    "distinguishable_probability",
]


@dataclass(frozen=True)
class ConvolutionReport:
    k: tuple[int, ...]
    i: tuple[int, ...]
    lhs: float
    rhs: float
    residual: float
    term_count: int
    species_pair: str
    # coefficient of F_{k->i} in the sum, (-1)**|i|: B + F for even, B - F for odd totals
    fermion_top_sign: int = 1
    top_terms: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ResidualReport:
    lhs: float
    rhs: float
    residual: float
    term_count: int


class ProbabilityCache:
    """Memoises transition probabilities for one fixed ``(U, S)`` pair.

    Sweeps over many ``(k, i)`` revisit the same sub-configurations; the
    cache is keyed on ``(k, i, species)`` only, so never share one across
    different interferometers.
    """

    def __init__(self, U, S=None):
        self.U = as_square(U, "unitary")
        m = self.U.shape[0]
        self.S = np.eye(m) if S is None else np.asarray(S, dtype=np.complex128)
        self._store: dict = {}

    def __call__(self, k, i, species: Species) -> float:
        key = (k, i, species)
        if key not in self._store:
            self._store[key] = transition_probability(self.U, self.S, k, i, species)
        return self._store[key]


def _sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def _pair_count(k, i) -> int:
    return math.prod(c + 1 for c in k) * math.prod(c + 1 for c in i)


def _signed_convolution(prob_first, prob_second, k, i):
    terms = []
    for m in dominated(k):
        rest_in = _sub(k, m)
        for j in dominated(i):
            if total(m) != total(j):
                continue
            rest_out = _sub(i, j)
            first = prob_first(m, j)
            if first == 0.0:
                continue
            second = prob_second(rest_in, rest_out)
            sign = -1.0 if total(j) % 2 else 1.0
            terms.append(sign * first * second)
    return math.fsum(terms)


def verify_bf_complementarity(U, S, k: Sequence[int], i: Sequence[int], cache: ProbabilityCache | None = None) -> ConvolutionReport:
    """Double convolution ``sum (-1)**|j| F(m -> j) B(k - m -> i - j)`` over ``(m, j) <= (k, i)``.

    The sum equals one for the vacuum pair and zero for every other pair.
    Terms whose fermionic input repeats a mode carry ``F = 0`` and are
    skipped. Pairs with unequal particle numbers vanish by conservation.
    """
    k, i = occupation(k), occupation(i)
    cache = cache or ProbabilityCache(U, S)

    def fermion(m, j):
        if any(c >= 2 for c in m):
            return 0.0
        return cache(m, j, Species.FERMION)

    lhs = _signed_convolution(fermion, lambda a, b: cache(a, b, Species.BOSON), k, i)
    rhs = 1.0 if not any(k) and not any(i) else 0.0
    top = {}
    if total(k) == total(i):
        top["boson"] = cache(k, i, Species.BOSON)
        if not any(c >= 2 for c in k):
            top["fermion"] = cache(k, i, Species.FERMION)
    return ConvolutionReport(
        k, i, lhs, rhs, abs(lhs - rhs), _pair_count(k, i), "fermion*boson",
        -1 if total(i) % 2 else 1, top,
    )


def distinguishable_probability(U, k: Sequence[int], i: Sequence[int]) -> float:
    """Statistics of independent, fully distinguishable particles: ``perm(|Usub|**2) / i!``.

    Differs from the classical transition probability by the factor ``k!``,
    which only matters when an input mode holds several particles.
    """
    k = occupation(k)
    m = len(k)
    return factorial_weight(k) * transition_probability(U, np.eye(m), k, i, Species.CLASSICAL)


def verify_classical_convolution(U, k: Sequence[int], i: Sequence[int], j_split: Sequence[int]) -> ResidualReport:
    """``P(k -> i) = sum_kappa P(j -> kappa) P(k - j -> i - kappa)`` for a fixed input split.

    Independent particles factorise, so splitting the input into two groups
    convolves their output distributions. Uses
    :func:`distinguishable_probability`, which is the normalised law; the
    ``1 / k!`` weighted classical probability obeys it only when the split
    keeps each input mode whole.
    """
    k, i, j_split = occupation(k), occupation(i), occupation(j_split)
    if any(a > b for a, b in zip(j_split, k)):
        raise ValueError(f"split {j_split} is not dominated by input {k}")
    rest = _sub(k, j_split)
    terms = []
    count = 0
    for kappa in dominated(i):
        count += 1
        if total(kappa) != total(j_split):
            continue
        terms.append(distinguishable_probability(U, j_split, kappa) * distinguishable_probability(U, rest, _sub(i, kappa)))
    rhs = math.fsum(terms)
    lhs = distinguishable_probability(U, k, i)
    return ResidualReport(lhs, rhs, abs(lhs - rhs), count)


def verify_classical_complementarity(U, k: Sequence[int], i: Sequence[int], cache: ProbabilityCache | None = None) -> ConvolutionReport:
    """``sum (-1)**|j| P(m -> j) P(k - m -> i - j) = delta_{k,0} delta_{i,0}`` with classical ``P``."""
    k, i = occupation(k), occupation(i)
    cache = cache or ProbabilityCache(U)

    def classical(a, b):
        return cache(a, b, Species.CLASSICAL)

    lhs = _signed_convolution(classical, classical, k, i)
    rhs = 1.0 if not any(k) and not any(i) else 0.0
    return ConvolutionReport(k, i, lhs, rhs, abs(lhs - rhs), _pair_count(k, i), "classical*classical",
                             -1 if total(i) % 2 else 1)


@dataclass(frozen=True)
class ThreeParticleReport:
    gram: np.ndarray
    twisted_gram: np.ndarray
    triple_phase: float
    twisted_triple_phase: float
    difference: float
    twisted_difference: float
    delta: float
    boson_shift: float
    fermion_shift: float


def _triple_phase(s: np.ndarray) -> float:
    return cmath.phase(s[0, 1] * s[1, 2] * s[2, 0])


def _twist_candidates(s: np.ndarray):
    # rotate the phase of S_12 alone, in growing steps, so only the loop phase moves
    for theta in (np.pi / 2, -np.pi / 2, np.pi / 4, -np.pi / 4, np.pi / 8, -np.pi / 8, np.pi / 16, -np.pi / 16):
        t = s.copy()
        t[0, 1] *= cmath.exp(1j * theta)
        t[1, 0] = np.conj(t[0, 1])
        yield t
    yield s.conj()


def three_particle_difference_scan(U, S) -> ThreeParticleReport:
    """Compare ``B - F`` for ``(1,1,1) -> (1,1,1)`` at two Gram matrices.

    The second Gram matrix keeps every ``|S_ab|`` but changes the phase of
    ``S_12 S_23 S_31``. Three-body interference terms cancel in ``B - F``,
    so ``delta`` stays at roundoff while ``B`` and ``F`` separately move.
    """
    u = as_square(U, "unitary")
    if u.shape[0] != 3:
        raise ValueError("three-particle scan needs a 3-mode interferometer")
    s = np.asarray(S, dtype=np.complex128)
    phase = _triple_phase(s)
    has_loop = abs(s[0, 1] * s[1, 2] * s[2, 0]) > 1e-12
    twisted = s
    if has_loop:
        for cand in _twist_candidates(s):
            if abs(cmath.phase(cmath.exp(1j * (_triple_phase(cand) - phase)))) < 1e-3:
                continue
            try:
                GramMatrix(cand)
            except ValidationError:
                continue
            twisted = cand
            break
    k = (1, 1, 1)

    def pair(gram):
        return (transition_probability(u, gram, k, k, Species.BOSON),
                transition_probability(u, gram, k, k, Species.FERMION))

    b0, f0 = pair(s)
    b1, f1 = pair(twisted)
    return ThreeParticleReport(
        s, twisted, phase, _triple_phase(twisted), b0 - f0, b1 - f1,
        abs((b0 - f0) - (b1 - f1)), abs(b0 - b1), abs(f0 - f1),
    )
