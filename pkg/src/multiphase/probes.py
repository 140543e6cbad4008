"""Probe-state constructors and passive multiport transformations.

Multiport output amplitudes follow the convention
``U a_j^dag U^dag = sum_i U[i, j] a_i^dag``, so that
``<m|U|n> = perm(U[m|n]) / sqrt(prod m_i! prod n_j!)``.
The production path expands the creation-operator polynomial one photon at a
time; :func:`permanent` is kept as an independent small-case oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from math import factorial, sqrt

import numpy as np

from .errors import CapacityError, DimensionError
from .fock import (
    MAX_SECTOR_DIM,
    ProbeState,
    config_array,
    config_index,
    sector_dim,
    single_mode_configs,
)

UNITARY_TOL = 1e-12
PRUNE_TOL = 1e-14
MAX_PERMANENT_DIM = 16


@dataclass(frozen=True)
class MultiportUnitary:
    """Passive linear-optical transformation on ``dim`` modes."""

    matrix: np.ndarray = field(repr=False)
    name: str = "custom"

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError("multiport matrix must be square")
        err = np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])))
        if err > UNITARY_TOL:
            raise ValueError(f"matrix is not unitary (max |U^dag U - I| = {err:.3g})")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def qft(cls, dim: int) -> "MultiportUnitary":
        """Balanced Fourier multiport, entries ``w^(jk) / sqrt(dim)`` with ``w = exp(2 pi i / dim)``."""
        if dim < 1:
            raise DimensionError("need at least one mode")
        jk = np.outer(np.arange(dim), np.arange(dim)) % dim
        return cls(np.exp(2j * np.pi * jk / dim) / np.sqrt(dim), name=f"qft{dim}")

    @classmethod
    def identity(cls, dim: int) -> "MultiportUnitary":
        return cls(np.eye(dim, dtype=np.complex128), name=f"identity{dim}")

    def dagger(self) -> "MultiportUnitary":
        return MultiportUnitary(self.matrix.conj().T, name=f"{self.name}^dag")

    def __matmul__(self, other: "MultiportUnitary") -> "MultiportUnitary":
        return MultiportUnitary(self.matrix @ other.matrix, name=f"{self.name}*{other.name}")


def permanent(a) -> complex:
    """Permanent by Ryser's formula with Gray-code subset updates.

    Cost is ``O(2^n n)``; limited to ``n <= 16``.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError("permanent needs a square matrix")
    n = a.shape[0]
    if n > MAX_PERMANENT_DIM:
        raise CapacityError(f"permanent of a {n}x{n} matrix exceeds the {MAX_PERMANENT_DIM} limit")
    if n == 0:
        return 1.0 + 0j
    # perm(A) = (-1)^n sum_{S != {}} (-1)^|S| prod_i sum_{j in S} a_ij
    row_sums = np.zeros(n, dtype=np.complex128)
    total = 0j
    gray_prev = 0
    size = 0
    for k in range(1, 2**n):
        gray = k ^ (k >> 1)
        changed = gray ^ gray_prev
        j = changed.bit_length() - 1
        if gray & changed:
            row_sums += a[:, j]
            size += 1
        else:
            row_sums -= a[:, j]
            size -= 1
        gray_prev = gray
        term = np.prod(row_sums)
        total += -term if size % 2 else term
    return complex(total if n % 2 == 0 else -total)


@lru_cache(maxsize=128)
def _raise_table(n_photons: int, d: int) -> np.ndarray:
    """Index of ``config + e_i`` in the (n+1)-photon basis, per n-photon config and mode i."""
    lower = config_array(n_photons, d)
    upper_index = config_index(n_photons + 1, d)
    table = np.empty((lower.shape[0], d + 1), dtype=np.int64)
    bumped = lower.copy()
    for i in range(d + 1):
        bumped[:, i] += 1
        for k, row in enumerate(bumped):
            table[k, i] = upper_index[tuple(int(x) for x in row)]
        bumped[:, i] -= 1
    table.setflags(write=False)
    return table


@lru_cache(maxsize=64)
def _sqrt_factorials(n_photons: int, d: int) -> np.ndarray:
    configs = config_array(n_photons, d)
    return np.sqrt([float(np.prod([factorial(int(k)) for k in row])) for row in configs])


def _expand_creation_polynomial(matrix: np.ndarray, occupations) -> np.ndarray:
    """Coefficients of ``prod_j (sum_i U_ij a_i^dag)^{n_j}`` on the monomial basis.

    Returns the dense coefficient vector over ``config_array(N, M - 1)``; the
    Fock amplitudes follow after multiplying by ``sqrt(prod m_i!)``.
    """
    n_modes = matrix.shape[0]
    d = n_modes - 1
    coeffs = np.ones(1, dtype=np.complex128)
    level = 0
    for j, n_j in enumerate(occupations):
        column = matrix[:, j]
        for _ in range(int(n_j)):
            table = _raise_table(level, d)
            nxt = np.zeros(sector_dim(level + 1, d), dtype=np.complex128)
            for i in range(n_modes):
                np.add.at(nxt, table[:, i], coeffs * column[i])
            coeffs = nxt
            level += 1
    return coeffs


def transform_dense(U: MultiportUnitary, occupations) -> np.ndarray:
    """Dense output amplitudes of ``U|occupations>`` in lexicographic order.

    Linear, with no phase convention applied; use this when superposing
    transformed basis states.
    """
    occupations = tuple(int(x) for x in occupations)
    if len(occupations) != U.dim:
        raise DimensionError(f"input has {len(occupations)} modes, multiport has {U.dim}")
    if any(x < 0 for x in occupations):
        raise DimensionError("photon numbers must be non-negative")
    n_photons = sum(occupations)
    d = U.dim - 1
    if sector_dim(n_photons, d) > MAX_SECTOR_DIM:
        raise CapacityError(f"output sector of {n_photons} photons in {U.dim} modes is too large")
    coeffs = _expand_creation_polynomial(U.matrix, occupations)
    norm_in = sqrt(np.prod([factorial(x) for x in occupations]))
    return coeffs * _sqrt_factorials(n_photons, d) / norm_in


def fix_global_phase(amplitudes: np.ndarray) -> np.ndarray:
    """Rotate so the first nonzero amplitude is real and non-negative."""
    nz = np.flatnonzero(np.abs(amplitudes) > PRUNE_TOL)
    if nz.size == 0:
        return amplitudes
    a0 = amplitudes[nz[0]]
    return amplitudes * (abs(a0) / a0)


def multiport_output(U: MultiportUnitary, occupations) -> ProbeState:
    """State leaving the multiport ``U`` when fed with a Fock configuration.

    Amplitudes below ``1e-14`` are pruned and the global phase is fixed so the
    first surviving term (lexicographic order) is real and non-negative.
    """
    dense = transform_dense(U, occupations)
    keep = np.abs(dense) > PRUNE_TOL
    configs = config_array(int(sum(occupations)), U.dim - 1)[keep]
    return ProbeState(configs, fix_global_phase(dense[keep]))


def multiport_amplitude_permanent(U: MultiportUnitary, inp, out) -> complex:
    """``<out|U|inp>`` from the permanent of the row/column-repeated submatrix."""
    inp = [int(x) for x in inp]
    out = [int(x) for x in out]
    if sum(inp) != sum(out):
        return 0j
    rows = np.repeat(np.arange(U.dim), out)
    cols = np.repeat(np.arange(U.dim), inp)
    sub = U.matrix[np.ix_(rows, cols)]
    norm = sqrt(np.prod([factorial(x) for x in inp]) * np.prod([factorial(x) for x in out]))
    return permanent(sub) / norm


def optimal_alpha(d: int) -> float:
    """Phase-mode amplitude ``1 / sqrt(d + sqrt(d))`` minimizing the total variance."""
    if d < 1:
        raise DimensionError("need d >= 1")
    return 1.0 / sqrt(d + sqrt(d))


def make_optimal_state(d: int, n_photons: int, alpha: float | None = None) -> ProbeState:
    """Superposition of all N photons in a single mode.

    Amplitude ``alpha`` on each phase mode and ``beta = sqrt(1 - d alpha^2)`` on
    the reference mode. ``alpha`` defaults to :func:`optimal_alpha`.
    """
    if d < 1 or n_photons < 1:
        raise DimensionError("need d >= 1 and N >= 1")
    if alpha is None:
        alpha = optimal_alpha(d)
    alpha = float(alpha)
    weight = d * alpha**2
    if alpha < 0 or weight > 1.0 + 1e-12:
        raise ValueError(f"alpha={alpha} outside [0, 1/sqrt(d)]")
    beta = sqrt(max(0.0, 1.0 - weight))
    amps = np.array([beta] + [alpha] * d)
    keep = amps > 0
    return ProbeState(single_mode_configs(n_photons, d)[keep], amps[keep])


def make_balanced_state(d: int, n_photons: int) -> ProbeState:
    """Equal-weight variant with ``alpha = beta = 1 / sqrt(d + 1)``."""
    return make_optimal_state(d, n_photons, 1.0 / sqrt(d + 1))


def make_noon_state(n_photons: int, mode: int = 1, d: int = 1) -> ProbeState:
    """``(|N in reference> + |N in mode>) / sqrt(2)`` embedded in ``d + 1`` modes."""
    if not 1 <= mode <= d:
        raise DimensionError(f"mode {mode} outside 1..{d}")
    if n_photons < 1:
        raise DimensionError("need N >= 1")
    configs = single_mode_configs(n_photons, d)[[0, mode]]
    alpha = 1 / sqrt(2)
    # same arithmetic as make_optimal_state so the d = 1 cases coincide bit for bit
    return ProbeState(configs, np.array([sqrt(1.0 - alpha**2), alpha]))


def make_hb_state(n: int, d: int) -> ProbeState:
    """Multimode Holland-Burnett state: ``n`` photons into each port of a (d+1)-mode QFT."""
    if n < 1 or d < 1:
        raise DimensionError("need n >= 1 and d >= 1")
    return multiport_output(MultiportUnitary.qft(d + 1), [n] * (d + 1))


def all_occupations(n_photons: int, n_modes: int):
    """Brute-force iterator over occupations, independent of :mod:`multiphase.fock`."""
    for occ in product(range(n_photons + 1), repeat=n_modes):
        if sum(occ) == n_photons:
            yield occ
