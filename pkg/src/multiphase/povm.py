"""Measurement models on the N-photon sector.

Every :class:`PovmSet` is a list of rank-one projectors plus an optional
residual element ``1 - sum_k |b_k><b_k|`` that makes completeness literal on
the full sector. Projectors are stored as a bra matrix: the amplitude for
outcome ``k`` is ``rows[k] @ psi`` with ``psi`` densified in the
lexicographic basis of :mod:`multiphase.fock`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt

import numpy as np

from .errors import CapacityError, DimensionError, IncompletePovmError, UnsupportedProbeError
from .fock import (
    ProbeState,
    apply_phases,
    as_phases,
    config_array,
    config_index,
    phase_factors,
    sector_dim,
    single_mode_configs,
)
from .probes import MultiportUnitary, transform_dense

COMPLETENESS_TOL = 1e-10
#: Largest sector for which a full PNRD transfer matrix is built.
MAX_PNRD_DIM = 3000


@dataclass(frozen=True)
class PnrdOutcome:
    """Photon counts registered at each detector."""

    counts: tuple[int, ...]

    def __str__(self) -> str:
        return "pnrd(" + ",".join(str(c) for c in self.counts) + ")"


@dataclass(frozen=True, eq=False)
class PovmSet:
    """Projective measurement on the sector of ``n_photons`` photons in ``d + 1`` modes.

    Attributes:
        d: number of phase modes
        n_photons: photon number of the sector
        rows: ``(K, D)`` bra matrix of the rank-one elements
        labels: one label per rank-one element
        residual: whether the completing element ``1 - sum_k P_k`` is an outcome
        name: short descriptor used in reports and errors
    """

    d: int
    n_photons: int
    rows: np.ndarray = field(repr=False)
    labels: tuple = field(repr=False)
    residual: bool = True
    name: str = "povm"

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.complex128).reshape(-1, self.sector_dim)
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        if len(self.labels) != rows.shape[0]:
            raise DimensionError("need one label per projector")

    @property
    def sector_dim(self) -> int:
        return sector_dim(self.n_photons, self.d)

    @property
    def outcome_labels(self) -> list:
        labels = list(self.labels)
        if self.residual:
            labels.append("residual")
        return labels

    def __len__(self) -> int:
        return self.rows.shape[0] + int(self.residual)

    def completeness_error(self) -> float:
        """Largest deviation of the projectors from an orthonormal (and, without residual, complete) set."""
        k = self.rows.shape[0]
        err = 0.0
        if k:
            gram = self.rows @ self.rows.conj().T
            err = float(np.max(np.abs(gram - np.eye(k))))
        if not self.residual and k < self.sector_dim:
            # the projectors alone leave part of the sector uncovered
            err = max(err, 1.0)
        return err

    def check_complete(self, tol: float = COMPLETENESS_TOL) -> None:
        err = self.completeness_error()
        if err > tol:
            raise IncompletePovmError(
                f"POVM '{self.name}' does not resolve the identity (error {err:.3g})"
            )

    def element_operator(self, k: int) -> np.ndarray:
        """Dense operator of outcome ``k``; small sectors only."""
        if self.sector_dim > MAX_PNRD_DIM:
            raise CapacityError("sector too large for dense POVM operators")
        if k < self.rows.shape[0]:
            bra = self.rows[k]
            return np.outer(bra.conj(), bra)
        if self.residual and k == self.rows.shape[0]:
            return np.eye(self.sector_dim) - self.rows.conj().T @ self.rows
        raise IndexError(k)

    def support_index(self, psi: ProbeState) -> np.ndarray:
        index = config_index(self.n_photons, self.d)
        return np.array([index[tuple(int(x) for x in c)] for c in psi.configs])


def _embed_single_mode_rows(coeffs: np.ndarray, d: int, n_photons: int) -> np.ndarray:
    """Place kets over the d+1 single-mode configs into the full sector, as bras."""
    index = config_index(n_photons, d)
    cols = [index[tuple(int(x) for x in row)] for row in single_mode_configs(n_photons, d)]
    rows = np.zeros((coeffs.shape[0], sector_dim(n_photons, d)), dtype=np.complex128)
    rows[:, cols] = coeffs.conj()
    return rows


def upsilon_coefficients(d: int) -> np.ndarray:
    """Ket coefficients of the measurement states over the single-mode configs.

    Row ``l - 1`` (l = 1..d) spreads ``-1 / sqrt(l (l + 1))`` over modes
    ``0..l-1`` and puts ``sqrt(l / (l + 1))`` on mode ``l``; the last row is the
    uniform superposition. Each row's overall sign is free; it is chosen so the
    highest occupied mode carries a positive coefficient.
    """
    if d < 1:
        raise DimensionError("need d >= 1")
    out = np.zeros((d + 1, d + 1))
    for l in range(1, d + 1):
        out[l - 1, :l] = -1.0 / sqrt(l * (l + 1))
        out[l - 1, l] = sqrt(l / (l + 1))
    out[d, :] = 1.0 / sqrt(d + 1)
    return out


def _finish(rows: np.ndarray, labels, d: int, n_photons: int, name: str) -> PovmSet:
    residual = rows.shape[0] < sector_dim(n_photons, d)
    return PovmSet(d, n_photons, rows, tuple(labels), residual=residual, name=name)


def upsilon_projectors(d: int, n_photons: int) -> PovmSet:
    """Projectors saturating the QCRB for the balanced probe at zero phase.

    Outcomes are ``upsilon_1 .. upsilon_d`` followed by ``upsilon_0`` (the
    balanced probe itself), then the residual when the sector is larger than
    the d + 1 single-mode configurations.
    """
    if n_photons < 1:
        raise DimensionError("need N >= 1")
    coeffs = upsilon_coefficients(d)
    labels = [f"upsilon_{l}" for l in range(1, d + 1)] + ["upsilon_0"]
    return _finish(_embed_single_mode_rows(coeffs, d, n_photons), labels, d, n_photons, f"upsilon:d={d}")


def _single_mode_amplitudes(psi: ProbeState) -> np.ndarray:
    """Amplitudes of ``psi`` on ``N e_0 .. N e_d``; raises if it has other terms."""
    n, d = psi.n_photons, psi.d
    coeffs = np.zeros(d + 1, dtype=np.complex128)
    for cfg, amp in zip(psi.configs, psi.amplitudes):
        occupied = np.flatnonzero(cfg)
        if occupied.size != 1:
            if abs(amp) > 0:
                raise UnsupportedProbeError(
                    "optimal projectors are only built for probes supported on "
                    "single-mode configurations"
                )
            continue
        coeffs[occupied[0]] = amp
    return coeffs


def gram_schmidt_complement(state: np.ndarray) -> np.ndarray:
    """Orthonormal completion of ``state`` using as few basis states as possible.

    Element ``k`` (k = 1..n-1) is supported on basis states ``0..k`` only and is
    orthogonal to ``state`` and to the elements before it; that fixes it up to
    a phase, chosen so its coefficient on basis state ``k`` is real positive.

    Raises:
        UnsupportedProbeError: if the construction degenerates (for example,
            when ``state`` has no weight on basis states ``0..k``).
    """
    state = np.asarray(state, dtype=np.complex128)
    n = state.shape[0]
    built: list[np.ndarray] = []
    for k in range(1, n):
        constraints = [state[: k + 1].conj()] + [b[: k + 1].conj() for b in built]
        A = np.array(constraints)
        _, s, vh = np.linalg.svd(A)
        rank = int(np.sum(s > 1e-12 * max(1.0, s[0])))
        if rank != k:
            raise UnsupportedProbeError(
                f"cannot build a unique element on basis states 0..{k}: "
                f"constraint rank {rank}, expected {k}"
            )
        vec = vh[-1].conj()
        lead = vec[k]
        if abs(lead) < 1e-12:
            raise UnsupportedProbeError(f"element {k} has no weight on basis state {k}")
        vec = vec * (abs(lead) / lead)
        full = np.zeros(n, dtype=np.complex128)
        full[: k + 1] = vec / np.linalg.norm(vec)
        built.append(full)
    return np.array(built).reshape(n - 1, n)


def optimal_projector_coefficients(psi: ProbeState, theta_s) -> np.ndarray:
    """Ket coefficients (over single-mode configs) of the saturating projector set.

    Row 0 is the evolved probe itself; rows ``1..d`` come from
    :func:`gram_schmidt_complement`.
    """
    target = _single_mode_amplitudes(apply_phases(psi, theta_s))
    return np.vstack([target[None, :], gram_schmidt_complement(target)])


def optimal_projectors_for(psi: ProbeState, theta_s) -> PovmSet:
    """Projector set that saturates the QCRB for ``psi`` at ``theta_s``."""
    coeffs = optimal_projector_coefficients(psi, theta_s)
    d, n = psi.d, psi.n_photons
    labels = ["probe"] + [f"beta_{k}" for k in range(1, d + 1)]
    return _finish(_embed_single_mode_rows(coeffs, d, n), labels, d, n, "optimal")


def transfer_matrix(U: MultiportUnitary, n_photons: int) -> np.ndarray:
    """``T[m, k] = <m|U|k>`` over the lexicographic basis of the sector."""
    d = U.dim - 1
    dim = sector_dim(n_photons, d)
    if dim > MAX_PNRD_DIM:
        raise CapacityError(f"PNRD sector of dimension {dim} exceeds {MAX_PNRD_DIM}")
    configs = config_array(n_photons, d)
    T = np.empty((dim, dim), dtype=np.complex128)
    for k, cfg in enumerate(configs):
        T[:, k] = transform_dense(U, cfg)
    return T


def pnrd_measurement(U: MultiportUnitary, n_photons: int) -> PovmSet:
    """Multiport ``U`` followed by photon-number-resolving detectors.

    One outcome per detection pattern, in lexicographic order. The probability
    of pattern ``m`` is ``|<m|U|psi_theta>|^2``.
    """
    if U.dim < 2:
        raise DimensionError("need at least two modes")
    T = transfer_matrix(U, n_photons)
    labels = [PnrdOutcome(tuple(int(x) for x in c)) for c in config_array(n_photons, U.dim - 1)]
    return PovmSet(U.dim - 1, n_photons, T, tuple(labels), residual=False, name=f"pnrd:{U.name}")


def identity_povm(d: int, n_photons: int) -> PovmSet:
    """Trivial measurement with a single outcome that always fires."""
    empty = np.zeros((0, sector_dim(n_photons, d)), dtype=np.complex128)
    return PovmSet(d, n_photons, empty, (), residual=True, name="identity")


def probe_vectors(psi: ProbeState, theta, povm: PovmSet):
    """Dense evolved state and derivative states in the POVM's sector basis."""
    if psi.d != povm.d or psi.n_photons != povm.n_photons:
        raise DimensionError(
            f"probe (d={psi.d}, N={psi.n_photons}) does not live in the POVM sector "
            f"(d={povm.d}, N={povm.n_photons})"
        )
    theta = as_phases(theta, psi.d)
    index = povm.support_index(psi)
    factors = phase_factors(psi, theta)
    evolved = np.zeros(povm.sector_dim, dtype=np.complex128)
    evolved[index] = psi.amplitudes * factors
    derivs = np.zeros((psi.d, povm.sector_dim), dtype=np.complex128)
    derivs[:, index] = 1j * psi.phase_occupations.T * evolved[index]
    return evolved, derivs


def outcome_probability_gradients(psi: ProbeState, theta, povm: PovmSet):
    """Probabilities and their phase gradients for every outcome.

    Returns:
        ``(p, dp)`` with ``p`` of shape ``(K,)`` and ``dp`` of shape ``(K, d)``,
        outcomes ordered as in :meth:`PovmSet.labels`.
    """
    evolved, derivs = probe_vectors(psi, theta, povm)
    c = povm.rows @ evolved
    g = derivs @ povm.rows.T
    p = np.abs(c) ** 2
    dp = 2.0 * np.real(np.conj(c)[None, :] * g).T
    if povm.residual:
        c_res = evolved - povm.rows.conj().T @ c
        g_res = derivs - g @ povm.rows.conj()
        p = np.append(p, np.real(np.vdot(c_res, c_res)))
        dp = np.vstack([dp, 2.0 * np.real(g_res.conj() @ c_res)])
    return np.clip(p, 0.0, None), dp


def outcome_distribution(psi: ProbeState, theta, povm: PovmSet) -> np.ndarray:
    """Outcome probabilities in the order of ``povm.outcome_labels``."""
    povm.check_complete()
    p, _ = outcome_probability_gradients(psi, theta, povm)
    return p
