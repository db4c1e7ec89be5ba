"""Output particle-number covariances and the per-mode quantum Fisher information.

For a binary input ``k`` and a phase ``phi_i`` imprinted on output mode
``i``, the quantum Fisher information equals ``4 C_ii`` where ``C`` is the
covariance of the output occupation numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .algebra import as_square
from .errors import PauliViolationError, ValidationError
from .interference import Species, full_distribution, occupation

__all__ = [
    "CovarianceMatrix",
    "QfiReport",
    "SumRuleReport",
    "covariance_brute_force",
    "covariance_closed_form",
    "verify_covariance_sum_rule",
    "qfi_report",
]

IMAG_TOL = 1e-12
# below this the QFI is treated as zero and the Cramer-Rao floor as unbounded
QFI_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class CovarianceMatrix:
    species: Species
    input: tuple[int, ...]
    entries: np.ndarray
    method: str  # "closed-form" or "brute-force"


@dataclass(frozen=True)
class SumRuleReport:
    """Max-norm residuals of ``C_B + C_F - 2 C_cl`` along both computation paths."""

    brute_force_residual: float
    closed_form_residual: float

    @property
    def residual(self) -> float:
        return max(self.brute_force_residual, self.closed_form_residual)


@dataclass(frozen=True)
class QfiReport:
    per_mode_qfi: np.ndarray
    species: Species
    cramer_rao_floor: np.ndarray
    measurements: int
    covariance: CovarianceMatrix


def _binary(k) -> tuple[int, ...]:
    k = occupation(k)
    if any(c > 1 for c in k):
        raise PauliViolationError(f"covariances are defined here for binary inputs only, got {k}")
    return k


def _gram(S, m):
    return np.eye(m) if S is None else np.asarray(S, dtype=np.complex128)


def covariance_brute_force(U, S, k: Sequence[int], species) -> CovarianceMatrix:
    """Covariance of output occupations from the full output distribution.

    ``C_ab = sum_i i_a i_b P(i) - (sum_i i_a P(i)) (sum_i i_b P(i))``. The
    classical case uses the distinguishable-particle distribution and
    ignores ``S``.
    """
    species = Species.parse(species)
    u = as_square(U, "unitary")
    k = _binary(k)
    m = len(k)
    dist = full_distribution(u, _gram(S, m), k, species)
    outs = np.array(list(dist.probabilities.keys()), dtype=float).reshape(-1, m)
    probs = np.array(list(dist.probabilities.values()))
    mean = probs @ outs
    second = (outs * probs[:, None]).T @ outs
    cov = second - np.outer(mean, mean)
    return CovarianceMatrix(species, k, 0.5 * (cov + cov.T), "brute-force")


def covariance_closed_form(U, S, k: Sequence[int], species) -> CovarianceMatrix:
    """Covariance from single-particle hopping probabilities and pairwise overlaps.

    With ``V`` the rows of ``U`` at occupied inputs and ``P = |V|**2``::

        C_ij = delta_ij sum_l P_li - sum_l P_li P_lj
               +/- sum_{l != l'} |S_ll'|**2 V_li conj(V_lj) V_l'j conj(V_l'i)

    with ``+`` for bosons and ``-`` for fermions. The classical species is
    the same expression without the overlap term.
    """
    species = Species.parse(species)
    u = as_square(U, "unitary")
    k = _binary(k)
    m = len(k)
    rows = [a for a in range(m) if k[a]]
    v = u[rows]
    p = np.abs(v) ** 2
    cov = np.diag(p.sum(axis=0)) - p.T @ p
    if species is not Species.CLASSICAL and rows:
        s = _gram(S, m)[np.ix_(rows, rows)]
        t = np.abs(s) ** 2
        np.fill_diagonal(t, 0.0)
        x = v[:, :, None] * v.conj()[:, None, :]  # x[l, i, j] = V_li conj(V_lj)
        cross = np.einsum("lij,lq,qij->ij", x, t, x.conj())
        if np.abs(cross.imag).max() > IMAG_TOL:
            raise ValidationError("overlap term of the covariance is not real")
        cov = cov + (1.0 if species is Species.BOSON else -1.0) * cross.real
    return CovarianceMatrix(species, k, 0.5 * (cov + cov.T), "closed-form")


def verify_covariance_sum_rule(U, S, k: Sequence[int]) -> SumRuleReport:
    """Check ``C_B + C_F = 2 C_cl`` with brute-force and with closed-form matrices.

    The classical reference is brute force on both paths, so the closed-form
    check is independent of the classical closed form.
    """
    classical = covariance_brute_force(U, S, k, Species.CLASSICAL).entries

    def residual(method):
        cb = method(U, S, k, Species.BOSON).entries
        cf = method(U, S, k, Species.FERMION).entries
        return float(np.abs(cb + cf - 2.0 * classical).max()) if classical.size else 0.0

    return SumRuleReport(residual(covariance_brute_force), residual(covariance_closed_form))


def qfi_report(U, S, k: Sequence[int], species, N: int = 1) -> QfiReport:
    """Per-mode QFI ``4 C_ii`` and Cramer-Rao floors ``1 / (N F_Q)``.

    Modes whose QFI is below ``QFI_ZERO_TOL`` get an infinite floor: the
    phase on that mode cannot be estimated with this input.
    """
    if N < 1:
        raise ValueError("measurement count N must be >= 1")
    cov = covariance_brute_force(U, S, k, species)
    qfi = 4.0 * np.diag(cov.entries).copy()
    with np.errstate(divide="ignore"):
        floor = np.where(qfi > QFI_ZERO_TOL, 1.0 / (N * np.where(qfi > QFI_ZERO_TOL, qfi, 1.0)), math.inf)
    return QfiReport(qfi, cov.species, floor, int(N), cov)
