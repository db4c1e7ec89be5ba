"""Haar averages of two-particle transition probabilities.

Exact values come from integrating each monomial of the tensor permanent
or determinant with the Weingarten formula; Monte Carlo estimates sample
Haar unitaries and evaluate the probabilities directly.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .algebra import _rng, haar_unitaries
from .interference import Species, expand, factorial_weight, transition_probability_batch

__all__ = [
    "HaarEstimate",
    "QUANTITIES",
    "weingarten",
    "haar_moment",
    "weingarten_reference",
    "haar_monte_carlo",
]

MIN_SAMPLES = 100
BATCH = 20_000
# a standard error this small means every draw gave the same value up to
# roundoff (e.g. Pauli-suppressed bunching), so a z-score would measure noise
DEGENERATE_SE = 1e-14

# (species whose probabilities are summed, output occupation) for two
# particles entering modes 0 and 1 of a two-mode interferometer
QUANTITIES = {
    "boson-coincidence": ((Species.BOSON,), (1, 1)),
    "fermion-coincidence": ((Species.FERMION,), (1, 1)),
    "boson-bunch": ((Species.BOSON,), (2, 0)),
    "fermion-bunch": ((Species.FERMION,), (2, 0)),
    "coincidence-sum": ((Species.BOSON, Species.FERMION), (1, 1)),
    "bunch-sum": ((Species.BOSON, Species.FERMION), (2, 0)),
}
_ALIASES = {"boson-antibunch": "boson-coincidence", "fermion-antibunch": "fermion-coincidence"}
INPUT = (1, 1)


@dataclass(frozen=True)
class HaarEstimate:
    quantity: str
    samples: int
    mean: float
    std_error: float
    exact: float
    z_score: float
    # max over draws of |B + F - 2P| for the sampled output
    complementarity_residual: float = 0.0
    # max over draws of |closed two-mode formula - tensor value| (coincidence quantities)
    formula_residual: float = 0.0


def _quantity(name: str):
    name = _ALIASES.get(name, name)
    if name not in QUANTITIES:
        raise ValueError(f"unknown quantity {name!r}; choose from {sorted(QUANTITIES)}")
    return name, QUANTITIES[name]


def _cycle_type(p) -> tuple[int, ...]:
    seen, lengths = set(), []
    for start in range(len(p)):
        if start in seen:
            continue
        n, j = 0, start
        while j not in seen:
            seen.add(j)
            j = p[j]
            n += 1
        lengths.append(n)
    return tuple(sorted(lengths, reverse=True))


def weingarten(p, m: int) -> float:
    """Unitary Weingarten function for permutations of one or two elements."""
    ctype = _cycle_type(p)
    table = {
        (1,): 1.0 / m,
        (1, 1): 1.0 / (m * m - 1.0),
        (2,): -1.0 / (m * (m * m - 1.0)),
    }
    if ctype not in table:
        raise NotImplementedError("Weingarten values are tabulated for degree <= 2")
    return table[ctype]


def haar_moment(rows, cols, rows_bar, cols_bar, m: int) -> float:
    """``E[prod_t U[rows[t], cols[t]] conj(U[rows_bar[t], cols_bar[t]])]`` over Haar U(m).

    Sum over permutation pairs of Kronecker-delta patterns times
    ``Wg(sigma tau^-1)``.
    """
    n = len(rows)
    value = 0.0
    for sigma in itertools.permutations(range(n)):
        if any(rows[t] != rows_bar[sigma[t]] for t in range(n)):
            continue
        for tau in itertools.permutations(range(n)):
            if any(cols[t] != cols_bar[tau[t]] for t in range(n)):
                continue
            tau_inv = [0] * n
            for t in range(n):
                tau_inv[tau[t]] = t
            value += weingarten([sigma[tau_inv[t]] for t in range(n)], m)
    return value


def _monomials(k, i, signed: bool):
    """Expand ``Perm(W)`` or ``Det(W)`` into (U-index tuple, conj-U index tuple, S factor key) terms.

    ``W[a, b, t] = U[in_a, out_t] conj(U[in_b, out_t]) S[in_b, in_a]``. The S
    factor is kept as a tuple of index pairs so overlaps can be substituted
    afterwards.
    """
    ins, outs = expand(k), expand(i)
    n = len(ins)
    terms = defaultdict(float)
    for s1 in itertools.permutations(range(n)):
        for s2 in itertools.permutations(range(n)):
            sign = 1
            if signed:
                sign = _perm_sign(s1) * _perm_sign(s2)
            key = (
                tuple(ins[s1[t]] for t in range(n)),
                tuple(ins[s2[t]] for t in range(n)),
                tuple(sorted((ins[s2[t]], ins[s1[t]]) for t in range(n))),
            )
            terms[key] += sign
    return terms, outs


def _perm_sign(p) -> int:
    return -1 if (len(p) - len(_cycle_type(p))) % 2 else 1


def weingarten_reference(quantity: str, x: float, m: int = 2) -> float:
    """Exact Haar average of a two-particle probability with overlap ``x``.

    Every monomial of the tensor permanent (determinant) is integrated with
    :func:`haar_moment`; the overlap enters through ``S[a, b] = x`` for
    ``a != b``. For ``m = 2`` this gives ``(2 - x**2)/3`` and ``(2 + x**2)/3``
    for coincidences and ``(1 + x**2)/6`` and ``(1 - x**2)/6`` for bunching.
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError("overlap x must lie in [0, 1]")
    _, (species_list, out) = _quantity(quantity)
    out = tuple(out) + (0,) * (m - 2)
    k = INPUT + (0,) * (m - 2)
    scale = factorial_weight(k) * factorial_weight(out)
    total_value = 0.0
    for species in species_list:
        terms, outs = _monomials(k, out, signed=species is Species.FERMION)
        for (rows, rows_bar, s_pairs), coeff in terms.items():
            if coeff == 0:
                continue
            s_factor = math.prod(1.0 if a == b else x for a, b in s_pairs)
            total_value += coeff * s_factor * haar_moment(rows, outs, rows_bar, outs, m)
    return total_value / scale


def _two_mode_coincidence(us: np.ndarray, x: float, sign: float) -> np.ndarray:
    direct = us[:, 0, 0] * us[:, 1, 1]
    exchange = us[:, 0, 1] * us[:, 1, 0]
    return np.abs(direct) ** 2 + np.abs(exchange) ** 2 + sign * 2.0 * x * x * np.real(direct * exchange.conj())


def haar_monte_carlo(quantity: str, x: float, samples: int, seed=None) -> HaarEstimate:
    """Monte Carlo estimate of a Haar-averaged two-mode probability.

    Draws ``samples`` Haar unitaries in U(2) (in batches, from one seeded
    generator), evaluates the probability with ``S = [[1, x], [x, 1]]`` and
    compares the mean with :func:`weingarten_reference`.
    """
    if samples < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples")
    name, (species_list, out) = _quantity(quantity)
    gram = np.array([[1.0, x], [x, 1.0]], dtype=np.complex128)
    rng = _rng(seed)
    values = []
    comp_res = 0.0
    formula_res = 0.0
    done = 0
    while done < samples:
        count = min(BATCH, samples - done)
        us = haar_unitaries(2, count, rng)
        b = transition_probability_batch(us, gram, INPUT, out, Species.BOSON)
        f = transition_probability_batch(us, gram, INPUT, out, Species.FERMION)
        p = transition_probability_batch(us, gram, INPUT, out, Species.CLASSICAL)
        comp_res = max(comp_res, float(np.abs(b + f - 2.0 * p).max()))
        if out == (1, 1):
            formula_res = max(
                formula_res,
                float(np.abs(_two_mode_coincidence(us, x, 1.0) - b).max()),
                float(np.abs(_two_mode_coincidence(us, x, -1.0) - f).max()),
            )
        picked = {Species.BOSON: b, Species.FERMION: f}
        values.append(sum(picked[s] for s in species_list))
        done += count
    data = np.concatenate(values)
    mean = float(data.mean())
    se = float(data.std(ddof=1) / math.sqrt(samples))
    exact = weingarten_reference(name, x)
    diff = mean - exact
    if se > DEGENERATE_SE:
        z = diff / se
    else:
        z = 0.0 if abs(diff) <= 1e-12 else math.copysign(math.inf, diff)
    return HaarEstimate(name, samples, mean, se, exact, z, comp_res, formula_res)
