"""Numerical searches: amplitude optimum, unrestricted probe search, and phase optimization of the CFI."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.optimize import brentq, minimize

from .errors import CapacityError, SingularFisherError
from .fisher import cfi_matrix, optimal_family_variance, psi_s_bound, trace_inverse
from .fock import ProbeState, config_array, sector_dim
from .povm import PovmSet
from .probes import optimal_alpha

#: Largest sector searched over all configurations.
MAX_SEARCH_DIM = 10_000
FORM_TOL = 1e-4
BOUND_SLACK = 1e-9


def optimize_alpha(d: int, n_photons: int) -> tuple[float, float]:
    """Minimize the closed-form total variance over the phase-mode amplitude.

    With ``x = alpha^2`` the stationarity condition of the total variance is
    ``d (d - 1) x^2 - 2 d x + 1 = 0``; its root in ``(0, 1/d)`` is bracketed and
    refined numerically.

    Returns:
        ``(alpha, total_variance)``.
    """
    if d < 1 or n_photons < 1:
        raise ValueError("need d >= 1 and N >= 1")

    def stationarity(x):
        return d * (d - 1) * x * x - 2 * d * x + 1

    lo, hi = 1e-300, 1.0 / d
    x = brentq(stationarity, lo, hi * (1 - 1e-15), xtol=1e-16, rtol=4 * np.finfo(float).eps)
    alpha = float(np.sqrt(x))
    return alpha, optimal_family_variance(d, n_photons, alpha)


def alpha_variance_derivative(d: int, n_photons: int, alpha: float) -> float:
    """``d/d alpha`` of the closed-form total variance."""
    a2 = alpha * alpha
    num = d * (1 - (d - 1) * a2)
    den = 4.0 * n_photons**2 * a2 * (1 - d * a2)
    dnum = -2.0 * d * (d - 1) * alpha
    dden = 4.0 * n_photons**2 * (2 * alpha - 4 * d * alpha**3)
    return (dnum * den - num * dden) / den**2


@dataclass
class ProbeSearchResult:
    state: ProbeState
    total_variance: float
    converged: bool
    matches_optimal_form: bool
    max_form_deviation: float
    restarts: int


def _variance_and_gradient(x: np.ndarray, occ: np.ndarray) -> tuple[float, np.ndarray]:
    s = float(x @ x)
    p = x * x / s
    mean = p @ occ
    I = 4.0 * (occ.T @ (p[:, None] * occ) - np.outer(mean, mean))
    evals, evecs = np.linalg.eigh(0.5 * (I + I.T))
    if evals[0] <= 1e-12 * max(evals[-1], 1e-300):
        return np.inf, np.zeros_like(x)
    inv = (evecs / evals) @ evecs.T
    value = float(np.trace(inv))
    G = inv @ inv
    # d tr(I^-1)/d p_k = -4 (n_k^T G n_k - 2 n_k^T G mean)
    grad_p = -4.0 * (np.einsum("ki,ij,kj->k", occ, G, occ) - 2.0 * occ @ (G @ mean))
    grad_x = (2.0 * x / s) * (grad_p - p @ grad_p)
    return value, grad_x


def _local_search(x0: np.ndarray, occ: np.ndarray):
    res = minimize(
        _variance_and_gradient,
        x0,
        args=(occ,),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": 5000, "ftol": 1e-16, "gtol": 1e-13},
    )
    x = res.x / np.linalg.norm(res.x)
    return x, _variance_and_gradient(x, occ)[0], bool(res.success)


def _polish(x: np.ndarray, occ: np.ndarray, cutoff: float = 1e-3):
    """Re-optimize on the terms carrying weight; tiny amplitudes linger in the sqrt parameterization."""
    keep = np.abs(x) > cutoff
    if keep.all() or not keep.any():
        return x
    y, value, _ = _local_search(x[keep], occ[keep])
    if not np.isfinite(value):
        return x
    full = np.zeros_like(x)
    full[keep] = y
    return full


def optimal_form_deviation(amplitudes: np.ndarray, configs: np.ndarray) -> float:
    """Largest amplitude mismatch against the optimized single-mode superposition.

    Phase-mode amplitudes are sorted before comparison, since the family is
    symmetric under permutations of the phase modes.
    """
    d = configs.shape[1] - 1
    n = int(configs[0].sum())
    alpha = optimal_alpha(d)
    beta = np.sqrt(1 - d * alpha**2)
    amps = np.abs(amplitudes)
    single = np.count_nonzero(configs, axis=1) == 1
    other = float(np.max(amps[~single], initial=0.0))
    on_mode = np.zeros(d + 1)
    for cfg, a in zip(configs[single], amps[single]):
        on_mode[int(np.argmax(cfg))] = a
    if n == 0:
        return np.inf
    phase_modes = np.sort(on_mode[1:])
    return max(other, abs(on_mode[0] - beta), float(np.max(np.abs(phase_modes - alpha))))


def search_optimal_probe(
    d: int, n_photons: int, restarts: int = 16, seed: int = 0
) -> ProbeSearchResult:
    """Minimize ``tr(QFI^-1)`` over all real non-negative amplitude vectors.

    Amplitudes are parameterized as ``x / |x|`` so their squares live on the
    probability simplex; each restart runs L-BFGS from a random point, then
    re-optimizes on the surviving support.
    """
    if sector_dim(n_photons, d) > MAX_SEARCH_DIM:
        raise CapacityError(f"search space of {sector_dim(n_photons, d)} configurations is too large")
    configs = np.asarray(config_array(n_photons, d))
    occ = configs[:, 1:].astype(float)
    rng = np.random.default_rng(seed)
    best = (np.inf, None, False)
    values = []
    for _ in range(max(1, restarts)):
        x0 = np.sqrt(rng.dirichlet(np.ones(configs.shape[0])))
        x, value, ok = _local_search(x0, occ)
        x = _polish(x, occ)
        value = _variance_and_gradient(x, occ)[0]
        values.append(value)
        if value < best[0]:
            best = (value, x, ok)
    value, x, ok = best
    # converged: the optimizer reported success, or independent restarts agree on the minimum
    ok = ok or sum(abs(v - value) < 1e-10 * max(1.0, value) for v in values) >= 2
    if x is None or not np.isfinite(value):
        raise SingularFisherError(f"no restart found an informative probe for d={d}, N={n_photons}")
    floor = psi_s_bound(d, n_photons)
    if value < floor - BOUND_SLACK:
        warnings.warn(
            f"search beat the single-mode superposition bound: {value!r} < {floor!r}",
            RuntimeWarning,
            stacklevel=2,
        )
    keep = x > 0
    state = ProbeState(configs[keep], x[keep])
    deviation = optimal_form_deviation(x, configs)
    return ProbeSearchResult(
        state=state,
        total_variance=value,
        converged=ok,
        matches_optimal_form=deviation < FORM_TOL,
        max_form_deviation=deviation,
        restarts=restarts,
    )


def cfi_total_variance(psi: ProbeState, theta, povm: PovmSet) -> float:
    """``tr(CFI(theta)^-1)``, or ``inf`` where the CFI is singular."""
    try:
        return trace_inverse(cfi_matrix(psi, theta, povm))
    except SingularFisherError:
        return np.inf


def optimize_cfi_phase(
    psi: ProbeState,
    povm: PovmSet,
    starts: int = 4,
    grid: int = 8,
    seed: int = 0,
) -> tuple[np.ndarray, float]:
    """Phase point minimizing the CFI total variance.

    A ``grid**d`` lattice over ``[0, 2 pi)^d`` seeds the search; the ``starts``
    best lattice points plus ``starts`` random points are refined with
    Nelder-Mead. Ties are resolved by start order.

    Raises:
        SingularFisherError: if the CFI is singular at every start.
    """
    d = psi.d
    rng = np.random.default_rng(seed)
    axis = 2 * np.pi * np.arange(grid) / grid
    lattice = np.array(list(product(axis, repeat=d))) if grid > 0 else np.empty((0, d))
    scores = np.array([cfi_total_variance(psi, t, povm) for t in lattice])
    seeds = []
    if lattice.shape[0]:
        order = np.argsort(scores, kind="stable")
        seeds.extend(lattice[i] for i in order[:starts] if np.isfinite(scores[i]))
    seeds.extend(rng.uniform(0, 2 * np.pi, size=(starts, d)))

    best_theta, best_value = None, np.inf
    for theta0 in seeds:
        f0 = cfi_total_variance(psi, theta0, povm)
        if not np.isfinite(f0):
            continue
        res = minimize(
            lambda t: cfi_total_variance(psi, t, povm),
            theta0,
            method="Nelder-Mead",
            options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 4000 * d},
        )
        theta, value = res.x, float(res.fun)
        if f0 <= value:
            theta, value = np.asarray(theta0, dtype=float), f0
        if value < best_value:
            best_theta, best_value = theta, value
    if best_theta is None:
        raise SingularFisherError(
            f"classical Fisher information of POVM '{povm.name}' is singular at every start "
            f"for probe {psi!r}"
        )
    return np.mod(best_theta, 2 * np.pi), best_value
