"""Quantum and classical Fisher information, SLD checks and Cramer-Rao bounds."""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .errors import DimensionError, SingularFisherError
from .fock import (
    ProbeState,
    SparseVector,
    apply_phases,
    as_phases,
    derivative_state,
    inner_product,
    phase_factors,
)
from .povm import PovmSet, probe_vectors


#: Outcomes with probability below this use the analytic zero-probability limit.
PROB_EPS = 1e-12
#: Relative eigenvalue cutoff below which a Fisher matrix counts as singular.
SINGULAR_RTOL = 1e-10
FD_STEP = 1e-5


@dataclass(frozen=True)
class BoundReport:
    """Outcome of a Cramer-Rao evaluation.

    ``saturable`` is ``None`` when no probe was supplied to test the SLD
    commutation condition.
    """

    total_variance: float
    saturable: bool | None = None
    M: int = 1


def symmetrize(F: np.ndarray) -> np.ndarray:
    return 0.5 * (F + F.T)


def qfi_matrix(psi: ProbeState) -> np.ndarray:
    """QFI matrix from the moduli of the amplitudes.

    ``4 sum_i p_i n_i n_i^T - 4 (sum_i p_i n_i)(sum_j p_j n_j)^T`` with ``n_i`` the
    phase-mode occupations of term i: four times the covariance of the number
    operators. Independent of the phases.
    """
    p = np.abs(psi.amplitudes) ** 2
    n = psi.phase_occupations.astype(float)
    mean = p @ n
    second = n.T @ (p[:, None] * n)
    return symmetrize(4.0 * (second - np.outer(mean, mean)))


def qfi_via_derivatives(psi: ProbeState, theta) -> np.ndarray:
    """QFI from overlaps of the derivative states.

    ``4 Re[<d_l psi|d_m psi> - <d_l psi|psi><psi|d_m psi>]`` evaluated at ``theta``.
    """
    theta = as_phases(theta, psi.d)
    evolved = apply_phases(psi, theta)
    derivs = [derivative_state(psi, theta, l) for l in range(1, psi.d + 1)]
    return _pure_state_qfi(evolved, derivs)


def qfi_finite_difference(psi: ProbeState, theta, step: float = FD_STEP) -> np.ndarray:
    """Same overlap formula with central-difference derivative states (error O(h^2))."""
    theta = as_phases(theta, psi.d)
    evolved = apply_phases(psi, theta)
    derivs = []
    for l in range(psi.d):
        shift = np.zeros(psi.d)
        shift[l] = step
        plus = apply_phases(psi, theta + shift).amplitudes
        minus = apply_phases(psi, theta - shift).amplitudes
        derivs.append(SparseVector(psi.configs, (plus - minus) / (2 * step)))
    return _pure_state_qfi(evolved, derivs)


def _pure_state_qfi(evolved: SparseVector, derivs: list[SparseVector]) -> np.ndarray:
    d = len(derivs)
    F = np.empty((d, d))
    overlaps = [inner_product(dl, evolved) for dl in derivs]
    for l in range(d):
        for m in range(l, d):
            val = inner_product(derivs[l], derivs[m]) - overlaps[l] * np.conj(overlaps[m])
            F[l, m] = F[m, l] = 4.0 * val.real
    return F


def sld_operator(psi: ProbeState, theta, l: int) -> np.ndarray:
    """Pure-state SLD ``2(|d_l psi><psi| + |psi><d_l psi|)`` on the support of ``psi``.

    The operator is returned as a ``K x K`` matrix over ``psi.configs``; both
    vectors it is built from live in that span, so nothing is lost by
    truncating the sector.
    """
    evolved = psi.amplitudes * phase_factors(psi, theta)
    deriv = derivative_state(psi, theta, l).amplitudes
    return 2.0 * (np.outer(deriv, evolved.conj()) + np.outer(evolved, deriv.conj()))


def sld_product_expectation(psi: ProbeState, theta, l: int, m: int) -> complex:
    """``<psi_theta| L_l L_m |psi_theta>`` by explicit matrix products."""
    evolved = psi.amplitudes * phase_factors(psi, theta)
    L_l = sld_operator(psi, theta, l)
    L_m = sld_operator(psi, theta, m)
    return complex(evolved.conj() @ (L_l @ (L_m @ evolved)))


def sld_commutator_expectation(psi: ProbeState, theta, l: int, m: int) -> complex:
    """``<psi_theta| [L_l, L_m] |psi_theta>``; vanishes for every probe of this model."""
    return sld_product_expectation(psi, theta, l, m) - sld_product_expectation(psi, theta, m, l)


def sld_commutation_holds(psi: ProbeState, theta, atol: float = 1e-10) -> bool:
    d = psi.d
    for l in range(1, d + 1):
        for m in range(l + 1, d + 1):
            if abs(sld_commutator_expectation(psi, theta, l, m)) > atol:
                return False
    return True


def inverse_fisher(F: np.ndarray, rtol: float = SINGULAR_RTOL) -> np.ndarray:
    """Inverse through the eigendecomposition; singular directions raise.

    Raises:
        SingularFisherError: if the smallest eigenvalue is below ``rtol`` times
            the largest, carrying the corresponding eigenvector.
    """
    F = np.atleast_2d(np.asarray(F, dtype=float))
    if F.shape[0] != F.shape[1]:
        raise DimensionError("Fisher matrix must be square")
    evals, evecs = np.linalg.eigh(symmetrize(F))
    top = evals[-1]
    if top <= 0 or evals[0] <= rtol * top:
        raise SingularFisherError(
            f"Fisher matrix is singular (eigenvalues {evals[0]:.3g} .. {top:.3g}); "
            "some phase direction carries no information",
            null_direction=evecs[:, 0],
        )
    return (evecs / evals) @ evecs.T


def trace_inverse(F: np.ndarray) -> float:
    return float(np.trace(inverse_fisher(F)))


def qcrb_total_variance(F: np.ndarray, psi: ProbeState | None = None, theta=None) -> BoundReport:
    """Total-variance bound ``tr(F^-1)`` for a single repetition.

    When ``psi`` is given, ``saturable`` reports whether every SLD commutator
    expectation vanishes at ``theta`` (default all zeros).
    """
    total = trace_inverse(F)
    saturable = None
    if psi is not None:
        if theta is None:
            theta = np.zeros(psi.d)
        saturable = sld_commutation_holds(psi, theta)
    return BoundReport(total_variance=total, saturable=saturable)


def optimal_family_qfi(d: int, n_photons: int, alpha: float) -> np.ndarray:
    """Closed-form QFI ``4 N^2 (delta_lm alpha^2 - alpha^4)`` of the single-mode superposition family."""
    a2 = alpha * alpha
    return 4.0 * n_photons**2 * (a2 * np.eye(d) - a2 * a2 * np.ones((d, d)))


def optimal_family_variance(d: int, n_photons: int, alpha: float) -> float:
    """``tr`` of the inverse of :func:`optimal_family_qfi` by Sherman-Morrison.

    ``I = 4 N^2 alpha^2 (1 - alpha^2 u u^T)`` with ``u`` all ones, giving
    ``d (1 - (d-1) alpha^2) / (4 N^2 alpha^2 (1 - d alpha^2))``.
    """
    a2 = alpha * alpha
    denom = 4.0 * n_photons**2 * a2 * (1.0 - d * a2)
    if denom <= 0:
        raise SingularFisherError("alpha leaves a phase direction without information")
    return d * (1.0 - (d - 1) * a2) / denom


def psi_s_bound(d: int, n_photons: float) -> float:
    """Minimum total variance ``(1 + sqrt d)^2 d / (4 N^2)`` of the optimized superposition."""
    return (1.0 + sqrt(d)) ** 2 * d / (4.0 * n_photons**2)


def psi_w_bound(d: int, n_photons: float) -> float:
    """Total variance ``d (d + 1) / (2 N^2)`` of the balanced superposition."""
    return d * (d + 1) / (2.0 * n_photons**2)


def noon_individual_bound(n_photons: int, d: int, exact: bool = True) -> float:
    """Total variance of estimating each phase with its own N00N state.

    The exact value splits photons as evenly as possible: with ``n = N // d``
    and ``r = N % d``, ``r`` phases get ``n + 1`` photons and the rest ``n``.
    The approximate value is ``d^3 / N^2``.
    """
    if d < 1 or n_photons < d:
        raise ValueError(f"need N >= d >= 1 to give every phase a photon, got N={n_photons}, d={d}")
    if not exact:
        return d**3 / n_photons**2
    n, r = divmod(n_photons, d)
    return (d - r) / n**2 + r / (n + 1) ** 2


def classical_bound(n_photons: float, d: int) -> float:
    """Total variance ``d^2 / N`` for independent coherent states with N mean photons in total."""
    if n_photons <= 0:
        raise ValueError("need a positive mean photon number")
    return d * d / n_photons


def cfi_matrix(psi: ProbeState, theta, povm: PovmSet, eps: float = PROB_EPS) -> np.ndarray:
    """Classical Fisher information of ``povm`` on ``psi`` at ``theta``.

    Outcomes with probability below ``eps`` contribute their limiting value
    ``4 Re <d_l psi|Pi_k|d_m psi>``: the ratio ``d_l p d_m p / p`` is 0/0 there
    and this is its limit whenever the element annihilates the state.
    """
    povm.check_complete()
    evolved, derivs = probe_vectors(psi, theta, povm)
    d = psi.d
    F = np.zeros((d, d))
    if povm.rows.shape[0]:
        c = povm.rows @ evolved
        g = derivs @ povm.rows.T  # (d, K)
        F += _rank_one_contributions(c, g, eps)
    if povm.residual:
        c_res = evolved - povm.rows.conj().T @ (povm.rows @ evolved)
        g_res = derivs - (derivs @ povm.rows.T) @ povm.rows.conj()
        p = float(np.real(np.vdot(c_res, c_res)))
        if p >= eps and p > 0:
            dp = 2.0 * np.real(g_res.conj() @ c_res)
            F += np.outer(dp, dp) / p
        else:
            F += 4.0 * np.real(g_res.conj() @ g_res.T)
    return symmetrize(F)


def _rank_one_contributions(c: np.ndarray, g: np.ndarray, eps: float) -> np.ndarray:
    p = np.abs(c) ** 2
    regular = (p >= eps) & (p > 0)
    F = np.zeros((g.shape[0], g.shape[0]))
    if np.any(regular):
        dp = 2.0 * np.real(np.conj(c[regular]) * g[:, regular])
        F += (dp / p[regular]) @ dp.T
    if not np.all(regular):
        gz = g[:, ~regular]
        F += 4.0 * np.real(gz.conj() @ gz.T)
    return F


def cfi_limit_extrapolated(
    psi: ProbeState,
    theta_s,
    povm: PovmSet,
    direction=None,
    deltas: tuple[float, float] = (1e-3, 1e-4),
) -> np.ndarray:
    """CFI at ``theta_s`` approached along ``direction`` with Richardson extrapolation.

    Evaluates the plain ratio formula at ``theta_s + delta * direction`` for two
    steps and removes the linear error term. The default direction has
    distinct, non-zero components so no element is approached along a line
    where its probability stays identically zero.
    """
    theta_s = as_phases(theta_s, psi.d)
    if direction is None:
        direction = np.arange(1, psi.d + 1, dtype=float)
    direction = as_phases(direction, psi.d)
    direction = direction / np.linalg.norm(direction)
    big, small = deltas
    F_big = cfi_matrix(psi, theta_s + big * direction, povm, eps=0.0)
    F_small = cfi_matrix(psi, theta_s + small * direction, povm, eps=0.0)
    return (big * F_small - small * F_big) / (big - small)
