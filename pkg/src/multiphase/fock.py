"""Fock configurations, sparse probe states and phase evolution.

A configuration is a tuple of photon numbers over ``d + 1`` modes, where mode 0
is the phase reference and modes ``1..d`` each pick up one unknown phase.
States are stored sparsely as a lexicographically sorted array of
configurations together with their complex amplitudes.
"""

from __future__ import annotations

import json
from functools import lru_cache
from math import comb
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import CapacityError, DimensionError, NormalizationError

#: Largest sector dimension the package will enumerate or densify.
MAX_SECTOR_DIM = 10**6

NORM_TOL = 1e-12
RENORMALIZE_TOL = 1e-6

FockConfig = tuple[int, ...]


def sector_dim(n_photons: int, d: int) -> int:
    """Number of ways to place ``n_photons`` bosons in ``d + 1`` modes."""
    if n_photons < 0 or d < 0:
        raise DimensionError(f"need N >= 0 and d >= 0, got N={n_photons}, d={d}")
    return comb(n_photons + d, d)


def _check_capacity(n_photons: int, d: int) -> int:
    dim = sector_dim(n_photons, d)
    if dim > MAX_SECTOR_DIM:
        raise CapacityError(
            f"sector with N={n_photons} photons in {d + 1} modes has {dim} configurations "
            f"(limit {MAX_SECTOR_DIM})"
        )
    return dim


@lru_cache(maxsize=64)
def _config_array(n_photons: int, d: int) -> np.ndarray:
    _check_capacity(n_photons, d)
    n_modes = d + 1
    rows = []
    occ = [0] * n_modes

    # lexicographic ascending order: first mode varies slowest
    def fill(mode: int, remaining: int) -> None:
        if mode == n_modes - 1:
            occ[mode] = remaining
            rows.append(tuple(occ))
            return
        for k in range(remaining + 1):
            occ[mode] = k
            fill(mode + 1, remaining - k)

    fill(0, n_photons)
    arr = np.array(rows, dtype=np.int64).reshape(len(rows), n_modes)
    arr.setflags(write=False)
    return arr


def enumerate_configs(n_photons: int, d: int) -> list[FockConfig]:
    """List every configuration of ``n_photons`` photons over ``d + 1`` modes.

    Args:
        n_photons: total photon number, N >= 0
        d: number of phase modes, d >= 1 (the reference mode is added)

    Returns:
        ``(N + d)! / (N! d!)`` configurations in lexicographic order.

    Raises:
        CapacityError: if the count exceeds ``MAX_SECTOR_DIM``.
    """
    if d < 1:
        raise DimensionError(f"need d >= 1, got {d}")
    return [tuple(int(x) for x in row) for row in _config_array(n_photons, d)]


def config_array(n_photons: int, d: int) -> np.ndarray:
    """Read-only ``(D, d + 1)`` integer array of :func:`enumerate_configs`."""
    if d < 1:
        raise DimensionError(f"need d >= 1, got {d}")
    return _config_array(n_photons, d)


@lru_cache(maxsize=64)
def config_index(n_photons: int, d: int) -> dict[FockConfig, int]:
    """Map from configuration to its position in the lexicographic basis."""
    return {cfg: i for i, cfg in enumerate(enumerate_configs(n_photons, d))}


def _lex_order(configs: np.ndarray) -> np.ndarray:
    return np.lexsort(configs.T[::-1])


class SparseVector:
    """Unnormalized vector in a fixed-photon-number sector.

    Configurations are kept unique and sorted lexicographically. Instances are
    immutable; the underlying arrays are flagged read-only.
    """

    __slots__ = ("_configs", "_amplitudes")

    def __init__(self, configs, amplitudes):
        configs = np.asarray(configs, dtype=np.int64)
        amplitudes = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        if configs.ndim != 2 or configs.shape[0] != amplitudes.shape[0]:
            raise DimensionError("configs must be a (K, d+1) array matching the amplitudes")
        if configs.shape[0] == 0:
            raise DimensionError("a state needs at least one configuration")
        if configs.shape[1] < 2:
            raise DimensionError("need at least one phase mode besides the reference")
        if np.any(configs < 0):
            raise DimensionError("photon numbers must be non-negative")
        totals = configs.sum(axis=1)
        if np.any(totals != totals[0]):
            raise DimensionError("all configurations must carry the same photon number")

        order = _lex_order(configs)
        configs = configs[order]
        amplitudes = amplitudes[order]
        if configs.shape[0] > 1:
            new = np.any(configs[1:] != configs[:-1], axis=1)
            if not np.all(new):
                starts = np.concatenate(([True], new))
                group = np.cumsum(starts) - 1
                merged = np.zeros(group[-1] + 1, dtype=np.complex128)
                np.add.at(merged, group, amplitudes)
                configs = configs[starts]
                amplitudes = merged

        configs = np.ascontiguousarray(configs)
        amplitudes = np.ascontiguousarray(amplitudes)
        configs.setflags(write=False)
        amplitudes.setflags(write=False)
        self._configs = configs
        self._amplitudes = amplitudes

    @classmethod
    def from_terms(cls, terms: Mapping[Sequence[int], complex] | Iterable, **kwargs):
        """Build from a ``{config: amplitude}`` mapping or ``(config, amplitude)`` pairs."""
        items = list(terms.items()) if isinstance(terms, Mapping) else list(terms)
        if not items:
            raise DimensionError("a state needs at least one configuration")
        configs = [tuple(c) for c, _ in items]
        widths = {len(c) for c in configs}
        if len(widths) != 1:
            raise DimensionError("all configurations must have the same number of modes")
        return cls(np.array(configs), np.array([a for _, a in items]), **kwargs)

    @property
    def configs(self) -> np.ndarray:
        return self._configs

    @property
    def amplitudes(self) -> np.ndarray:
        return self._amplitudes

    @property
    def d(self) -> int:
        return self._configs.shape[1] - 1

    @property
    def n_photons(self) -> int:
        return int(self._configs[0].sum())

    N = n_photons

    @property
    def terms(self) -> dict[FockConfig, complex]:
        return {
            tuple(int(x) for x in c): complex(a)
            for c, a in zip(self._configs, self._amplitudes)
        }

    @property
    def phase_occupations(self) -> np.ndarray:
        """Photon numbers in modes ``1..d`` for every term, shape ``(K, d)``."""
        return self._configs[:, 1:]

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self._amplitudes) ** 2)))

    def to_dense(self) -> np.ndarray:
        """Amplitudes over the full lexicographic basis of the sector."""
        _check_capacity(self.n_photons, self.d)
        index = config_index(self.n_photons, self.d)
        out = np.zeros(len(index), dtype=np.complex128)
        for c, a in zip(self._configs, self._amplitudes):
            out[index[tuple(int(x) for x in c)]] = a
        return out

    def _with_amplitudes(self, amplitudes) -> "SparseVector":
        return SparseVector(self._configs, amplitudes)

    def __len__(self) -> int:
        return self._configs.shape[0]

    def __repr__(self) -> str:
        return f"{type(self).__name__}(d={self.d}, N={self.n_photons}, terms={len(self)})"


class ProbeState(SparseVector):
    """Normalized pure state of N photons over ``d + 1`` modes.

    Inputs whose squared norm is within ``1e-6`` of one are renormalized;
    anything further off is treated as a caller bug.
    """

    __slots__ = ()

    def __init__(self, configs, amplitudes, *, renormalize: bool = True):
        super().__init__(configs, amplitudes)
        norm2 = float(np.sum(np.abs(self._amplitudes) ** 2))
        if abs(norm2 - 1.0) > NORM_TOL:
            if not renormalize or abs(norm2 - 1.0) > RENORMALIZE_TOL:
                raise NormalizationError(f"state has squared norm {norm2:.12g}, expected 1")
            amps = self._amplitudes / np.sqrt(norm2)
            amps.setflags(write=False)
            self._amplitudes = amps

    def _with_amplitudes(self, amplitudes) -> "ProbeState":
        return ProbeState(self._configs, amplitudes)

    def probabilities(self) -> np.ndarray:
        return np.abs(self._amplitudes) ** 2

    def to_json(self) -> str:
        return json.dumps(state_to_dict(self))

    @classmethod
    def from_json(cls, text: str) -> "ProbeState":
        return state_from_dict(json.loads(text))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseVector):
            return NotImplemented
        return np.array_equal(self._configs, other._configs) and np.array_equal(
            self._amplitudes, other._amplitudes
        )

    __hash__ = None


def state_to_dict(psi: SparseVector) -> dict:
    return {
        "d": psi.d,
        "N": psi.n_photons,
        "terms": [
            {"occ": [int(x) for x in c], "re": float(a.real), "im": float(a.imag)}
            for c, a in zip(psi.configs, psi.amplitudes)
        ],
    }


def state_from_dict(data: Mapping) -> ProbeState:
    pairs = [(tuple(t["occ"]), complex(t["re"], t.get("im", 0.0))) for t in data["terms"]]
    psi = ProbeState.from_terms(pairs)
    if psi.d != data["d"] or psi.n_photons != data["N"]:
        raise DimensionError("serialized d/N disagree with the listed terms")
    return psi


def as_phases(theta, d: int) -> np.ndarray:
    """Validate a phase vector of length ``d`` and return it as floats."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.ndim != 1 or theta.shape[0] != d:
        raise DimensionError(f"expected {d} phases, got shape {theta.shape}")
    if not np.all(np.isfinite(theta)):
        raise ValueError("phases must be finite")
    return theta


def phase_factors(psi: SparseVector, theta) -> np.ndarray:
    theta = as_phases(theta, psi.d)
    return np.exp(1j * (psi.phase_occupations @ theta))


def apply_phases(psi: ProbeState, theta) -> ProbeState:
    """Evolve ``psi`` under ``exp(i sum_m N_m theta_m)``, m = 1..d."""
    return psi._with_amplitudes(psi.amplitudes * phase_factors(psi, theta))


def derivative_state(psi: SparseVector, theta, l: int) -> SparseVector:
    """Partial derivative of the evolved state with respect to ``theta_l``.

    Args:
        psi: probe state before phase evolution
        theta: phases at which to evaluate
        l: phase mode, 1-based (``1 <= l <= d``)

    Returns:
        Unnormalized vector on the same support as ``psi``.
    """
    if not 1 <= l <= psi.d:
        raise DimensionError(f"mode index {l} outside 1..{psi.d}")
    evolved = psi.amplitudes * phase_factors(psi, theta)
    return SparseVector(psi.configs, 1j * psi.configs[:, l] * evolved)


def inner_product(a: SparseVector, b: SparseVector) -> complex:
    """``<a|b>``, conjugate-linear in ``a``."""
    if a.configs.shape[1] != b.configs.shape[1] or a.n_photons != b.n_photons:
        raise DimensionError(
            f"cannot overlap (d={a.d}, N={a.n_photons}) with (d={b.d}, N={b.n_photons})"
        )
    if a.configs.shape == b.configs.shape and np.array_equal(a.configs, b.configs):
        return complex(np.vdot(a.amplitudes, b.amplitudes))
    lookup = {c.tobytes(): amp for c, amp in zip(b.configs, b.amplitudes)}
    total = 0j
    for c, amp in zip(a.configs, a.amplitudes):
        other = lookup.get(c.tobytes())
        if other is not None:
            total += np.conj(amp) * other
    return complex(total)


def basis_state(config: Sequence[int]) -> ProbeState:
    """Single configuration with unit amplitude."""
    return ProbeState(np.array([config]), np.array([1.0]))


def single_mode_configs(n_photons: int, d: int) -> np.ndarray:
    """Rows ``N e_m`` for m = 0..d: all photons in one mode."""
    return n_photons * np.eye(d + 1, dtype=np.int64)
