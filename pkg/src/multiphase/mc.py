"""Monte-Carlo detection records and local maximum-likelihood phase estimation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import FlatLikelihoodError, SingularFisherError
from .fisher import cfi_matrix, inverse_fisher
from .fock import ProbeState, as_phases
from .povm import PovmSet, outcome_distribution, outcome_probability_gradients

#: Half-width of the box around the initial guess searched by the estimator.
LOCAL_BOX = np.pi / 4


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_outcomes(psi: ProbeState, theta_true, povm: PovmSet, trials: int, seed=0) -> np.ndarray:
    """Multinomial outcome counts for ``trials`` repetitions.

    Counts follow ``povm.outcome_labels``. ``seed`` may be an int, a
    ``SeedSequence`` or a ``Generator``.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    p = outcome_distribution(psi, theta_true, povm)
    return _rng(seed).multinomial(trials, p / p.sum())


def negative_log_likelihood(theta, counts, psi: ProbeState, povm: PovmSet):
    """``-sum_k n_k log p(k|theta)`` and its gradient."""
    p, dp = outcome_probability_gradients(psi, theta, povm)
    seen = counts > 0
    if np.any(p[seen] <= 0):
        return np.inf, np.zeros(psi.d)
    value = -float(counts[seen] @ np.log(p[seen]))
    grad = -(counts[seen] / p[seen]) @ dp[seen]
    return value, grad


def mle_estimate(counts, psi: ProbeState, povm: PovmSet, theta_init, box: float = LOCAL_BOX) -> np.ndarray:
    """Local maximum-likelihood estimate of the phases.

    The likelihood is maximized inside ``theta_init +/- box``; periodicity and
    the reflection symmetry of the outcome probabilities make it multimodal
    beyond that.

    Raises:
        FlatLikelihoodError: if the classical Fisher information is singular at
            the estimate, i.e. the data only pin the phases to a hypersurface.
    """
    counts = np.asarray(counts)
    if counts.shape[0] != len(povm):
        raise ValueError(f"expected {len(povm)} outcome counts, got {counts.shape[0]}")
    theta_init = as_phases(theta_init, psi.d)
    bounds = [(t - box, t + box) for t in theta_init]
    res = minimize(
        negative_log_likelihood,
        theta_init,
        args=(counts, psi, povm),
        jac=True,
        method="L-BFGS-B",
        bounds=bounds,
        options={"ftol": 1e-15, "gtol": 1e-10, "maxiter": 2000},
    )
    theta_hat = res.x
    try:
        inverse_fisher(cfi_matrix(psi, theta_hat, povm))
    except SingularFisherError as exc:
        raise FlatLikelihoodError(
            f"POVM '{povm.name}' leaves the likelihood flat along {exc.null_direction}: "
            "the outcomes only locate a hypersurface in phase space"
        ) from exc
    return theta_hat


@dataclass(frozen=True)
class Replication:
    trials: int
    replication: int
    theta_hat: np.ndarray
    sq_error: float


def crb_experiment(
    psi: ProbeState,
    povm: PovmSet,
    theta_true,
    trials_ladder=(1_000, 10_000, 100_000),
    replications: int = 200,
    seed: int = 0,
) -> list[Replication]:
    """Repeated sample-and-estimate runs for each trial count.

    Replication ``r`` at ladder position ``i`` draws from child
    ``i * replications + r`` of ``SeedSequence(seed)``, so any single run can be
    reproduced on its own.
    """
    theta_true = as_phases(theta_true, psi.d)
    children = np.random.SeedSequence(seed).spawn(len(trials_ladder) * replications)
    out = []
    for i, trials in enumerate(trials_ladder):
        for r in range(replications):
            counts = sample_outcomes(psi, theta_true, povm, trials, children[i * replications + r])
            theta_hat = mle_estimate(counts, psi, povm, theta_true)
            out.append(Replication(trials, r, theta_hat, float(np.sum((theta_hat - theta_true) ** 2))))
    return out


def scaled_total_variance(runs: list[Replication], trials: int) -> float:
    """``M`` times the trace of the sample covariance of the estimates at ``M = trials``."""
    est = np.array([run.theta_hat for run in runs if run.trials == trials])
    if est.shape[0] < 2:
        raise ValueError(f"need at least two replications at M={trials}")
    cov = np.atleast_2d(np.cov(est, rowvar=False))
    return trials * float(np.trace(cov))
